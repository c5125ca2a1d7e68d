//! Counts disjoint paths between two processing modules on a switch ring
//! and shows how each cut link lowers the count.

use netgap::evaluate::{disjoint_paths, shortest_path};
use netgap::model::ModuleCatalog;
use netgap::topology::TopologyGraph;

fn report(label: &str, g: &TopologyGraph, src: u32, dst: u32) -> netgap::Result<()> {
    let kinds = g.kinds(&ModuleCatalog::standard())?;
    let count = disjoint_paths(g, &kinds, src, dst).map_or("unbounded".to_string(), |n| n.to_string());
    let route = shortest_path(g, &kinds, src, dst).map(|p| format!("{p:?}")).unwrap_or("none".into());
    println!("{label:<28} disjoint {count:<9} route {route}");
    Ok(())
}

fn main() -> netgap::Result<()> {
    // Six switches in a ring; modules on opposite switches.
    let mut g = TopologyGraph::new();
    let ring: Vec<_> = (0..6).map(|_| g.add_vertex("S")).collect();
    for i in 0..6 {
        g.add_link(ring[i], ring[(i + 1) % 6])?;
    }
    let a = g.add_vertex("M");
    let b = g.add_vertex("M");
    g.add_link(a, ring[0])?;
    g.add_link(b, ring[3])?;
    report("plain ring", &g, a, b)?;

    // A chord between the two attachment switches is a third path.
    g.add_link(ring[0], ring[3])?;
    report("ring with chord", &g, a, b)?;
    g.remove_edge(ring[0], ring[3]);
    g.remove_edge(ring[3], ring[0]);

    g.remove_edge(ring[5], ring[0]);
    g.remove_edge(ring[0], ring[5]);
    report("ring cut once", &g, a, b)?;

    // A second attachment gives the module its own redundancy.
    g.add_link(a, ring[5])?;
    report("dual-homed source", &g, a, b)?;

    // Both modules on one switch: the shared attachment is never a bottleneck.
    let c = g.add_vertex("M");
    g.add_link(c, ring[3])?;
    report("shared attachment", &g, b, c)?;
    Ok(())
}
