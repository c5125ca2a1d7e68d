//! Parses a grammar, prints what each rule does and applies every rule once
//! to a small host graph.
//!
//! Usage: `cargo run --example rewrite -- [grammar file]`

use netgap::grammar::{load_grammar, parse_grammar};
use netgap::topology::{apply_action, find_matches, TopologyGraph};

fn main() -> netgap::Result<()> {
    let grammar = match std::env::args().nth(1) {
        Some(path) => load_grammar(path)?,
        None => parse_grammar(include_str!("../fixtures/grammars/rewrite_examples.grammar"))?,
    };

    for rule in &grammar.rules {
        let e = rule.classify();
        let keys = |v: &[netgap::grammar::NodeKey]| v.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" ");
        let pairs = |v: &[(netgap::grammar::NodeKey, netgap::grammar::NodeKey)]| {
            v.iter().map(|(a, b)| format!("{a}->{b}")).collect::<Vec<_>>().join(" ")
        };
        println!("{rule}");
        println!(
            "    +nodes [{}] -nodes [{}] +edges [{}] -edges [{}] relabel [{}]",
            keys(&e.added_nodes),
            keys(&e.deleted_nodes),
            pairs(&e.added_edges),
            pairs(&e.deleted_edges),
            e.relabeled.iter().map(|(a, b)| format!("{a}=>{b}")).collect::<Vec<_>>().join(" ")
        );
    }

    // Host graph A -> B, C -> B.
    let mut host = TopologyGraph::new();
    let a = host.add_vertex("A");
    let b = host.add_vertex("B");
    let c = host.add_vertex("C");
    host.add_edge(a, b)?;
    host.add_edge(c, b)?;
    println!("\nhost: {} vertices, {} edges", host.vertex_count(), host.edge_count());

    let matches = find_matches(&host, &grammar);
    for rule in 0..grammar.rules.len() {
        let Some(m) = matches.iter().find(|m| m.action.rule == rule) else {
            println!("{}: no match", grammar.rules[rule].name);
            continue;
        };
        let out = apply_action(&host, &grammar, &m.action)?;
        let vertices: Vec<String> = out.vertices().map(|(v, l)| format!("{l}{v}")).collect();
        let edges: Vec<String> = out.edges().map(|(s, d)| format!("{s}->{d}")).collect();
        println!(
            "{}: vertices [{}] edges [{}]",
            m.action.describe(&grammar),
            vertices.join(" "),
            edges.join(" ")
        );
    }
    Ok(())
}
