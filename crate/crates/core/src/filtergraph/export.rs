use std::io::Write;

use super::FilteredGraph;
use crate::error::{Error, Result};

fn io_err(e: std::io::Error) -> Error {
    Error::io("<graph output>", e)
}

/// Market tag encoded as a `tag:` ticker prefix by universe combination.
pub fn market_tag(ticker: &str) -> Option<&str> {
    ticker.split_once(':').map(|(tag, _)| tag)
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn write_graphml<W: Write>(g: &FilteredGraph, mut out: W) -> Result<()> {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    s.push_str("  <key id=\"ticker\" for=\"node\" attr.name=\"ticker\" attr.type=\"string\"/>\n");
    s.push_str("  <key id=\"market\" for=\"node\" attr.name=\"market\" attr.type=\"string\"/>\n");
    s.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n");
    s.push_str("  <key id=\"rank\" for=\"edge\" attr.name=\"rank\" attr.type=\"int\"/>\n");
    s.push_str(&format!("  <graph id=\"{}\" edgedefault=\"undirected\">\n", g.kind));
    for (k, t) in g.nodes.iter().enumerate() {
        s.push_str(&format!("    <node id=\"n{k}\">\n      <data key=\"ticker\">{}</data>\n", xml_escape(t)));
        if let Some(tag) = market_tag(t) {
            s.push_str(&format!("      <data key=\"market\">{}</data>\n", xml_escape(tag)));
        }
        s.push_str("    </node>\n");
    }
    for e in &g.edges {
        s.push_str(&format!(
            "    <edge source=\"n{}\" target=\"n{}\">\n      <data key=\"weight\">{:e}</data>\n      <data key=\"rank\">{}</data>\n    </edge>\n",
            e.i, e.j, e.weight, e.rank
        ));
    }
    s.push_str("  </graph>\n</graphml>\n");
    out.write_all(s.as_bytes()).map_err(io_err)
}

pub fn write_dot<W: Write>(g: &FilteredGraph, mut out: W) -> Result<()> {
    let mut s = format!("graph {} {{\n", g.kind);
    for (k, t) in g.nodes.iter().enumerate() {
        match market_tag(t) {
            Some(tag) => s.push_str(&format!("  n{k} [label=\"{}\", market=\"{}\"];\n", dot_escape(t), dot_escape(tag))),
            None => s.push_str(&format!("  n{k} [label=\"{}\"];\n", dot_escape(t))),
        }
    }
    for e in &g.edges {
        s.push_str(&format!("  n{} -- n{} [weight={:e}, rank={}];\n", e.i, e.j, e.weight, e.rank));
    }
    s.push_str("}\n");
    out.write_all(s.as_bytes()).map_err(io_err)
}

/// Plain edge list: `source,target,weight,rank` with tickers.
pub fn write_edge_csv<W: Write>(g: &FilteredGraph, mut out: W) -> Result<()> {
    let mut s = String::from("source,target,weight,rank\n");
    for e in &g.edges {
        s.push_str(&format!("{},{},{:e},{}\n", g.nodes[e.i], g.nodes[e.j], e.weight, e.rank));
    }
    out.write_all(s.as_bytes()).map_err(io_err)
}
