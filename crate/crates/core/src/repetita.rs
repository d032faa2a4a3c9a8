//! Reader and writer for Repetita `.graph` and `.demands` files.
//!
//! ```text
//! NODES 2
//! label x y
//! a 0 0
//! b 1 0
//!
//! EDGES 2
//! label src dest weight bw delay
//! edge_0 0 1 1 400 10
//! edge_1 1 0 1 400 10
//! ```
//!
//! Directed edge entries are paired with an opposite entry into one link;
//! an entry without a partner becomes a link with the same weight both ways.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::net::{LinecardSpec, Network, NodeId, PortRole};
use crate::traffic::TrafficMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RepetitaOptions {
    /// Accept opposite entries with different bandwidths, keeping the larger.
    pub accept_asymmetric: bool,
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            iter: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next non-blank line as `(line number, fields)`.
    fn next_fields(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, line) in self.iter.by_ref() {
            self.last = i + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !fields.is_empty() {
                return Some((i + 1, fields));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        self.next_fields().ok_or_else(|| Error::Parse {
            line: self.last + 1,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }

    fn section(&mut self, name: &str) -> Result<usize> {
        let (line, f) = self.expect(name)?;
        if f.len() != 2 || f[0] != name {
            return Err(Error::Parse {
                line,
                msg: format!("expected `{name} <count>`"),
            });
        }
        let count = f[1].parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad count `{}`", f[1]),
        })?;
        let (line, f) = self.expect("column header")?;
        if f[0] != "label" {
            return Err(Error::Parse {
                line,
                msg: "expected a column header starting with `label`".into(),
            });
        }
        Ok(count)
    }
}

fn num(line: usize, field: &str, what: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Parse {
            line,
            msg: format!("bad {what} `{field}`"),
        })
}

fn node(line: usize, field: &str, n: usize) -> Result<NodeId> {
    match field.parse::<usize>() {
        Ok(i) if i < n => Ok(NodeId(i)),
        Ok(i) => Err(Error::Parse {
            line,
            msg: format!("node {i} does not exist ({n} nodes)"),
        }),
        Err(_) => Err(Error::Parse {
            line,
            msg: format!("bad node index `{field}`"),
        }),
    }
}

struct Entry {
    line: usize,
    src: NodeId,
    dst: NodeId,
    weight: f64,
    bw: f64,
}

/// Parses a `.graph` file into a network with one port per link whose
/// capacity is the edge bandwidth.
pub fn parse_graph(text: &str, options: RepetitaOptions) -> Result<Network> {
    let mut lines = Lines::new(text);
    let n = lines.section("NODES")?;
    let mut b = Network::builder();
    for _ in 0..n {
        let (line, f) = lines.expect("a node row")?;
        if f.len() < 3 {
            return Err(Error::Parse {
                line,
                msg: "node rows need `label x y`".into(),
            });
        }
        num(line, f[1], "x coordinate")?;
        num(line, f[2], "y coordinate")?;
        b.add_node(f[0]);
    }
    let m = lines.section("EDGES")?;
    let mut entries = Vec::with_capacity(m);
    for _ in 0..m {
        let (line, f) = lines.expect("an edge row")?;
        if f.len() < 6 {
            return Err(Error::Parse {
                line,
                msg: "edge rows need `label src dest weight bw delay`".into(),
            });
        }
        let src = node(line, f[1], n)?;
        let dst = node(line, f[2], n)?;
        if src == dst {
            return Err(Error::Parse {
                line,
                msg: "edge is a self loop".into(),
            });
        }
        let weight = num(line, f[3], "weight")?;
        let bw = num(line, f[4], "bandwidth")?;
        num(line, f[5], "delay")?;
        if weight <= 0.0 {
            return Err(Error::Parse {
                line,
                msg: format!("weight {weight} must be positive"),
            });
        }
        if bw <= 0.0 {
            return Err(Error::Parse {
                line,
                msg: format!("bandwidth {bw} must be positive"),
            });
        }
        entries.push(Entry {
            line,
            src,
            dst,
            weight,
            bw,
        });
    }
    if let Some((line, _)) = lines.next_fields() {
        return Err(Error::Parse {
            line,
            msg: "unexpected content after the edge list".into(),
        });
    }

    let mut used = vec![false; entries.len()];
    for i in 0..entries.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let e = &entries[i];
        let partner = (i + 1..entries.len())
            .find(|&j| !used[j] && entries[j].src == e.dst && entries[j].dst == e.src);
        let (w_back, bw) = match partner {
            Some(j) => {
                used[j] = true;
                let r = &entries[j];
                if r.bw != e.bw && !options.accept_asymmetric {
                    return Err(Error::Parse {
                        line: r.line,
                        msg: format!(
                            "bandwidth {} differs from {} on line {}",
                            r.bw, e.bw, e.line
                        ),
                    });
                }
                (r.weight, e.bw.max(r.bw))
            }
            None => (e.weight, e.bw),
        };
        b.add_link(e.src, e.dst, e.weight, w_back, &[(bw, PortRole::Backbone)])?;
    }
    b.build(LinecardSpec::default())
}

/// Parses a `.demands` file for a network with `n` nodes. Repeated pairs
/// accumulate.
pub fn parse_demands(text: &str, n: usize) -> Result<TrafficMatrix> {
    let mut lines = Lines::new(text);
    let k = lines.section("DEMANDS")?;
    let mut m = TrafficMatrix::zeros(n);
    for _ in 0..k {
        let (line, f) = lines.expect("a demand row")?;
        if f.len() < 4 {
            return Err(Error::Parse {
                line,
                msg: "demand rows need `label src dest bw`".into(),
            });
        }
        let src = node(line, f[1], n)?;
        let dst = node(line, f[2], n)?;
        if src == dst {
            return Err(Error::Parse {
                line,
                msg: format!("self demand at node {}", src.0),
            });
        }
        let bw = num(line, f[3], "bandwidth")?;
        if bw < 0.0 {
            return Err(Error::Parse {
                line,
                msg: format!("negative demand {bw}"),
            });
        }
        m.add(src, dst, bw)?;
    }
    if let Some((line, _)) = lines.next_fields() {
        return Err(Error::Parse {
            line,
            msg: "unexpected content after the demand list".into(),
        });
    }
    Ok(m)
}

pub fn parse_repetita(
    graph: &str,
    demands: &str,
    options: RepetitaOptions,
) -> Result<(Network, TrafficMatrix)> {
    let net = parse_graph(graph, options)?;
    let m = parse_demands(demands, net.num_nodes())?;
    Ok((net, m))
}

pub fn read_repetita(
    graph: &Path,
    demands: &Path,
    options: RepetitaOptions,
) -> Result<(Network, TrafficMatrix)> {
    parse_repetita(
        &std::fs::read_to_string(graph)?,
        &std::fs::read_to_string(demands)?,
        options,
    )
}

/// Serialises `network` as a `.graph` file, one entry per arc with the
/// link's total capacity as bandwidth.
pub fn write_graph(network: &Network) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "NODES {}\nlabel x y", network.num_nodes());
    for v in network.nodes() {
        let _ = writeln!(s, "{} 0 0", network.node_name(v));
    }
    let _ = writeln!(s, "\nEDGES {}\nlabel src dest weight bw delay", network.arcs().len());
    for (i, a) in network.arcs().iter().enumerate() {
        let bw = network.link_capacity(a.link, None);
        let _ = writeln!(s, "edge_{i} {} {} {} {bw} 0", a.from.0, a.to.0, a.weight);
    }
    s
}

pub fn write_demands(matrix: &TrafficMatrix) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "DEMANDS {}\nlabel src dest bw", matrix.num_demands());
    for (i, (u, v, t)) in matrix.demands().enumerate() {
        let _ = writeln!(s, "demand_{i} {} {} {t}", u.0, v.0);
    }
    s
}

/// Rebuilds `network` with `ports_per_link` equal ports per link. Each port
/// gets `port_capacity`, or the link capacity divided evenly when `None`.
/// Linecards are reallocated at `ports_per_linecard` endpoints each.
pub fn expand_ports(
    network: &Network,
    ports_per_link: usize,
    port_capacity: Option<f64>,
    ports_per_linecard: usize,
) -> Result<Network> {
    if ports_per_link == 0 {
        return Err(Error::InvalidInput("ports per link must be positive".into()));
    }
    if let Some(c) = port_capacity {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidInput(format!("port capacity {c} must be positive")));
        }
    }
    let mut b = network.to_builder();
    b.map_ports(|l, ports| {
        let total: f64 = ports.iter().map(|p| p.0).sum();
        if total <= 0.0 {
            return Err(Error::InvalidInput(format!("link {l} has zero bandwidth")));
        }
        let role = if ports.iter().any(|p| p.1 == PortRole::Access) {
            PortRole::Access
        } else {
            PortRole::Backbone
        };
        let c = port_capacity.unwrap_or(total / ports_per_link as f64);
        Ok(vec![(c, role); ports_per_link])
    })?;
    b.build(LinecardSpec {
        slots: ports_per_linecard,
        ..network.linecard_spec()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = "NODES 3\nlabel x y\na 0 0\nb 1 0\nc 0 1\n\n\
        EDGES 3\nlabel src dest weight bw delay\n\
        e0 0 1 1 400 1\ne1 1 2 2 400 1\ne2 2 0 3 400 1\n";

    #[test]
    fn unpaired_entries_become_bidirectional() {
        let net = parse_graph(TRIANGLE, RepetitaOptions::default()).unwrap();
        assert_eq!(net.num_nodes(), 3);
        assert_eq!(net.arcs().len(), 6);
        assert_eq!(net.arcs()[3].weight, 2.0);
    }

    #[test]
    fn opposite_entries_pair_up() {
        let g = "NODES 2\nlabel x y\na 0 0\nb 1 1\nEDGES 2\nlabel src dest weight bw delay\n\
                 e0 0 1 1 100 0\ne1 1 0 5 100 0\n";
        let net = parse_graph(g, RepetitaOptions::default()).unwrap();
        assert_eq!(net.links().len(), 1);
        assert_eq!((net.arcs()[0].weight, net.arcs()[1].weight), (1.0, 5.0));
        let asym = g.replace("e1 1 0 5 100", "e1 1 0 5 90");
        assert!(matches!(
            parse_graph(&asym, RepetitaOptions::default()),
            Err(Error::Parse { line: 8, .. })
        ));
        let net = parse_graph(&asym, RepetitaOptions { accept_asymmetric: true }).unwrap();
        assert_eq!(net.link_capacity(crate::net::LinkId(0), None), 100.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = TRIANGLE.replace("e1 1 2 2 400 1", "e1 1 7 2 400 1");
        match parse_graph(&bad, RepetitaOptions::default()) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 10);
                assert!(msg.contains("does not exist"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let bad = TRIANGLE.replace("NODES 3", "NODE 3");
        assert!(matches!(
            parse_graph(&bad, RepetitaOptions::default()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse_graph(&TRIANGLE.replace("400 1\ne2", "0 1\ne2"), Default::default()).is_err());
    }

    #[test]
    fn self_demands_are_rejected() {
        let d = "DEMANDS 2\nlabel src dest bw\nd0 0 1 5\nd1 2 2 1\n";
        assert!(matches!(parse_demands(d, 3), Err(Error::Parse { line: 4, .. })));
        let m = parse_demands("DEMANDS 2\nlabel src dest bw\nd0 0 1 5\nd1 0 1 1\n", 3).unwrap();
        assert_eq!(m.get(NodeId(0), NodeId(1)), 6.0);
    }

    #[test]
    fn round_trip_keeps_counts_and_weights() {
        let net = parse_graph(TRIANGLE, RepetitaOptions::default()).unwrap();
        let again = parse_graph(&write_graph(&net), RepetitaOptions::default()).unwrap();
        assert_eq!(again.num_nodes(), net.num_nodes());
        assert_eq!(again.links().len(), net.links().len());
        let w = |n: &Network| n.arcs().iter().map(|a| a.weight).collect::<Vec<_>>();
        assert_eq!(w(&again), w(&net));
    }

    #[test]
    fn ports_split_link_bandwidth() {
        let net = parse_graph(TRIANGLE, RepetitaOptions::default()).unwrap();
        let x = expand_ports(&net, 4, None, 8).unwrap();
        assert_eq!(x.ports().len(), 12);
        assert!(x.ports().iter().all(|p| p.capacity == 100.0));
        // each router has two links of four ports: eight endpoints, one card
        assert_eq!(x.router_linecards(NodeId(0)).len(), 1);
        let one = expand_ports(&net, 1, Some(7.0), 8).unwrap();
        assert_eq!(one.ports().len(), 3);
        assert_eq!(one.ports()[0].capacity, 7.0);
        assert!(expand_ports(&net, 0, None, 8).is_err());
    }

    #[test]
    fn twelve_endpoints_need_two_linecards() {
        let g = "NODES 4\nlabel x y\nh 0 0\na 0 0\nb 0 0\nc 0 0\n\
                 EDGES 3\nlabel src dest weight bw delay\n\
                 e0 0 1 1 4 0\ne1 0 2 1 4 0\ne2 0 3 1 4 0\n";
        let net = parse_graph(g, RepetitaOptions::default()).unwrap();
        let x = expand_ports(&net, 4, None, 8).unwrap();
        assert_eq!(x.router_linecards(NodeId(0)).len(), 2);
    }
}
