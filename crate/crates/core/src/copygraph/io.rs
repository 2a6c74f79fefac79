//! Edge-list TSV and GraphML serialization of copy graphs.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use quick_xml::events::{BytesDecl, BytesStart, BytesText, Event};
use quick_xml::{Reader, Writer, XmlVersion};

use super::{CopyGraph, NodeStats};
use crate::community::CommunityId;
use crate::corpus::{AccountId, Period};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphFormat {
    /// `source_id\ttarget_id\tweight`; edges only.
    Tsv,
    GraphMl,
}

impl FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" | "edgelist" => Ok(GraphFormat::Tsv),
            "graphml" => Ok(GraphFormat::GraphMl),
            _ => Err(Error::arg(format!(
                "unsupported graph format {s:?}, expected tsv or graphml"
            ))),
        }
    }
}

impl GraphFormat {
    pub fn extension(self) -> &'static str {
        match self {
            GraphFormat::Tsv => "tsv",
            GraphFormat::GraphMl => "graphml",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ImportedGraph {
    pub graph: CopyGraph,
    /// Present only for GraphML documents carrying a `community` attribute.
    pub communities: BTreeMap<AccountId, CommunityId>,
}

pub fn export_graph(
    g: &CopyGraph,
    format: GraphFormat,
    communities: Option<&BTreeMap<AccountId, CommunityId>>,
    out: &mut impl Write,
) -> std::io::Result<()> {
    match format {
        GraphFormat::Tsv => write_tsv(g, out),
        GraphFormat::GraphMl => write_graphml(g, communities, out),
    }
}

/// Reads a graph written by [`export_graph`]. TSV input carries no node
/// statistics, so its nodes come back with unknown tweet totals.
pub fn import_graph(path: &Path, format: GraphFormat) -> Result<ImportedGraph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let malformed = |reason: String| Error::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    match format {
        GraphFormat::Tsv => parse_tsv(&text).map_err(malformed),
        GraphFormat::GraphMl => parse_graphml(&text).map_err(malformed),
    }
}

fn write_tsv(g: &CopyGraph, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "source_id\ttarget_id\tweight")?;
    for (&(a, b), w) in &g.edges {
        writeln!(out, "{a}\t{b}\t{w}")?;
    }
    Ok(())
}

pub(crate) fn parse_tsv(text: &str) -> std::result::Result<ImportedGraph, String> {
    let mut graph = CopyGraph::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || (i == 0 && line.starts_with("source_id")) {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let [a, b, w] = f.as_slice() else {
            return Err(format!("line {}: expected 3 fields", i + 1));
        };
        let parse = |s: &str| s.trim().parse::<u64>().map_err(|e| format!("line {}: {e}", i + 1));
        let (a, b, w) = (AccountId(parse(a)?), AccountId(parse(b)?), parse(w)?);
        if a == b || w == 0 {
            return Err(format!("line {}: self-edge or zero weight", i + 1));
        }
        if graph.edges.insert((a, b), w).is_some() {
            return Err(format!("line {}: duplicate edge {a}->{b}", i + 1));
        }
        for id in [a, b] {
            graph.nodes.entry(id).or_insert(NodeStats {
                total_tweets: None,
                copied_count: 0,
            });
        }
    }
    Ok(ImportedGraph {
        graph,
        communities: BTreeMap::new(),
    })
}

const NS: &str = "http://graphml.graphdrawing.org/xmlns";

fn write_graphml(
    g: &CopyGraph,
    communities: Option<&BTreeMap<AccountId, CommunityId>>,
    out: &mut impl Write,
) -> std::io::Result<()> {
    let mut w = Writer::new_with_indent(out, b' ', 2);
    w.write_event(Event::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)))?;
    let mut keys = vec![
        ("periods", "graph", "string"),
        ("total_tweets", "node", "long"),
        ("copied_count", "node", "long"),
        ("weight", "edge", "long"),
    ];
    if communities.is_some() {
        keys.push(("community", "node", "long"));
    }
    let periods = serde_json::to_string(&g.periods).map_err(std::io::Error::other)?;

    w.create_element("graphml")
        .with_attribute(("xmlns", NS))
        .write_inner_content(|w| {
            for (id, domain, ty) in &keys {
                w.create_element("key")
                    .with_attributes([
                        ("id", *id),
                        ("for", *domain),
                        ("attr.name", *id),
                        ("attr.type", *ty),
                    ])
                    .write_empty()?;
            }
            w.create_element("graph")
                .with_attributes([("id", "copygraph"), ("edgedefault", "directed")])
                .write_inner_content(|w| {
                    data(w, "periods", &periods)?;
                    for (account, s) in &g.nodes {
                        let id = account.to_string();
                        w.create_element("node")
                            .with_attribute(("id", id.as_str()))
                            .write_inner_content(|w| {
                                if let Some(t) = s.total_tweets {
                                    data(w, "total_tweets", &t.to_string())?;
                                }
                                data(w, "copied_count", &s.copied_count.to_string())?;
                                if let Some(c) = communities.and_then(|m| m.get(account)) {
                                    data(w, "community", &c.to_string())?;
                                }
                                Ok(())
                            })?;
                    }
                    for (&(a, b), weight) in &g.edges {
                        let (a, b) = (a.to_string(), b.to_string());
                        w.create_element("edge")
                            .with_attributes([("source", a.as_str()), ("target", b.as_str())])
                            .write_inner_content(|w| data(w, "weight", &weight.to_string()))?;
                    }
                    Ok(())
                })?;
            Ok(())
        })?;
    w.get_mut().write_all(b"\n")
}

fn data<W: Write>(w: &mut Writer<W>, key: &str, value: &str) -> std::io::Result<()> {
    w.create_element("data")
        .with_attribute(("key", key))
        .write_text_content(BytesText::new(value))?;
    Ok(())
}

fn attr(e: &BytesStart, name: &str) -> std::result::Result<Option<String>, String> {
    for a in e.attributes() {
        let a = a.map_err(|e| e.to_string())?;
        if a.key.0 == name {
            let v = a
                .normalized_value(XmlVersion::Implicit1_0)
                .map_err(|e| e.to_string())?;
            return Ok(Some(v.into_owned()));
        }
    }
    Ok(None)
}

fn required(e: &BytesStart, name: &str) -> std::result::Result<String, String> {
    attr(e, name)?.ok_or_else(|| {
        format!("<{}> without {name:?} attribute", e.name().0)
    })
}

fn endpoints(e: &BytesStart) -> std::result::Result<(AccountId, AccountId), String> {
    let id = |name: &str| -> std::result::Result<AccountId, String> {
        let v = required(e, name)?;
        v.trim()
            .parse()
            .map(AccountId)
            .map_err(|err| format!("bad edge {name} {v:?}: {err}"))
    };
    Ok((id("source")?, id("target")?))
}

fn insert_node(g: &mut CopyGraph, id: AccountId, s: NodeStats) -> std::result::Result<(), String> {
    match g.nodes.insert(id, s) {
        Some(_) => Err(format!("duplicate node {id}")),
        None => Ok(()),
    }
}

fn insert_edge(g: &mut CopyGraph, a: AccountId, b: AccountId, w: u64) -> std::result::Result<(), String> {
    if w == 0 {
        return Err(format!("edge {a}->{b} has zero weight"));
    }
    match g.edges.insert((a, b), w) {
        Some(_) => Err(format!("duplicate edge {a}->{b}")),
        None => Ok(()),
    }
}

enum Owner {
    Graph,
    Node(AccountId),
    Edge(AccountId, AccountId),
}

pub(crate) fn parse_graphml(text: &str) -> std::result::Result<ImportedGraph, String> {
    let mut reader = Reader::from_str(text);
    let mut key_names: BTreeMap<String, String> = BTreeMap::new();
    let mut out = ImportedGraph::default();
    let mut owner: Option<Owner> = None;
    let mut node = NodeStats::default();
    let mut weight: Option<u64> = None;
    let mut data_key: Option<String> = None;
    let mut text_buf = String::new();

    let num = |s: &str, what: &str| {
        s.trim()
            .parse::<u64>()
            .map_err(|e| format!("bad {what} {s:?}: {e}"))
    };

    loop {
        let event = reader
            .read_event()
            .map_err(|e| format!("at byte {}: {e}", reader.error_position()))?;
        match event {
            Event::Eof => break,
            Event::Start(e) | Event::Empty(e) if e.name().0 == "key" => {
                let id = required(&e, "id")?;
                let name = attr(&e, "attr.name")?.unwrap_or_else(|| id.clone());
                key_names.insert(id, name);
            }
            Event::Start(e) | Event::Empty(e) if e.name().0 == "graph" => {
                if let Some(d) = attr(&e, "edgedefault")? {
                    if d != "directed" {
                        return Err(format!("edgedefault {d:?} is not directed"));
                    }
                }
                owner = Some(Owner::Graph);
            }
            Event::Start(e) if e.name().0 == "node" => {
                node = NodeStats::default();
                owner = Some(Owner::Node(AccountId(num(&required(&e, "id")?, "node id")?)));
            }
            Event::Empty(e) if e.name().0 == "node" => {
                let id = AccountId(num(&required(&e, "id")?, "node id")?);
                insert_node(&mut out.graph, id, NodeStats::default())?;
            }
            Event::Start(e) if e.name().0 == "edge" => {
                let (a, b) = endpoints(&e)?;
                owner = Some(Owner::Edge(a, b));
                weight = None;
            }
            Event::Empty(e) if e.name().0 == "edge" => {
                let (a, b) = endpoints(&e)?;
                insert_edge(&mut out.graph, a, b, 1)?;
            }
            Event::Start(e) if e.name().0 == "data" => {
                let key = required(&e, "key")?;
                data_key = Some(key_names.get(&key).cloned().unwrap_or(key));
                text_buf.clear();
            }
            Event::Text(t) if data_key.is_some() => text_buf.push_str(&t.xml10_content()),
            Event::GeneralRef(r) if data_key.is_some() => {
                if let Some(c) = r.resolve_char_ref().map_err(|e| e.to_string())? {
                    text_buf.push(c);
                } else {
                    let name = r.xml10_content();
                    let resolved = quick_xml::escape::resolve_predefined_entity(&name)
                        .ok_or_else(|| format!("unknown entity &{name};"))?;
                    text_buf.push_str(resolved);
                }
            }
            Event::End(e) => match e.name().0 {
                "data" => {
                    let key = data_key.take().unwrap_or_default();
                    let value = std::mem::take(&mut text_buf);
                    match (&owner, key.as_str()) {
                        (Some(Owner::Graph), "periods") => {
                            out.graph.periods = serde_json::from_str::<Vec<Period>>(&value)
                                .map_err(|e| format!("bad periods: {e}"))?;
                        }
                        (Some(Owner::Node(_)), "total_tweets") => {
                            node.total_tweets = Some(num(&value, "total_tweets")?)
                        }
                        (Some(Owner::Node(_)), "copied_count") => {
                            node.copied_count = num(&value, "copied_count")?
                        }
                        (Some(Owner::Node(id)), "community") => {
                            let c = num(&value, "community")?;
                            let c = CommunityId::try_from(c)
                                .map_err(|_| format!("community {c} out of range"))?;
                            out.communities.insert(*id, c);
                        }
                        (Some(Owner::Edge(..)), "weight") => weight = Some(num(&value, "weight")?),
                        _ => {}
                    }
                }
                "node" => {
                    if let Some(Owner::Node(id)) = owner.take() {
                        insert_node(&mut out.graph, id, node)?;
                    }
                    owner = Some(Owner::Graph);
                }
                "edge" => {
                    if let Some(Owner::Edge(a, b)) = owner.take() {
                        insert_edge(&mut out.graph, a, b, weight.take().unwrap_or(1))?;
                    }
                    owner = Some(Owner::Graph);
                }
                "graph" => owner = None,
                _ => {}
            },
            _ => {}
        }
    }

    for &(a, b) in out.graph.edges.keys() {
        if a == b {
            return Err(format!("self-edge on {a}"));
        }
        for id in [a, b] {
            if !out.graph.nodes.contains_key(&id) {
                return Err(format!("edge endpoint {id} is not a declared node"));
            }
        }
    }
    Ok(out)
}
