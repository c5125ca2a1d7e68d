//! Generates a synthetic application model and summarizes it. Writes the
//! model as JSON when an output path is given.
//!
//! Usage: `cargo run --example usecase -- [processes] [messages] [seed] [out.json]`

use netgap::model::{save_application_model, SyntheticSpec};

fn main() -> netgap::Result<()> {
    let mut args = std::env::args().skip(1);
    let processes = args.next().map_or(99, |a| a.parse().expect("processes"));
    let messages = args.next().map_or(660, |a| a.parse().expect("messages"));
    let seed = args.next().map_or(1, |a| a.parse().expect("seed"));

    let spec = SyntheticSpec::avionics_case().resized(processes, messages)?;
    let model = spec.generate(processes, messages, seed)?;
    for part in model.parts() {
        let procs: Vec<_> = model.processes().iter().filter(|p| &p.part == part).collect();
        let demand: f64 = procs.iter().map(|p| p.compute_demand_mops).sum();
        let ids: std::collections::HashSet<&str> = procs.iter().map(|p| p.id.as_str()).collect();
        let msgs: Vec<_> = model.messages().iter().filter(|m| ids.contains(m.src.as_str())).collect();
        let mbps: f64 = msgs.iter().map(|m| m.bandwidth_mbps()).sum();
        println!(
            "{part}: {} processes, {:.2} Mops, {} messages, {:.3} Mbit/s",
            procs.len(),
            demand,
            msgs.len(),
            mbps
        );
    }
    if let Some(out) = args.next() {
        save_application_model(&model, &out)?;
        println!("wrote {out}");
    }
    Ok(())
}
