//! Edge-list text format.
//!
//! ```text
//! n m
//! bipartite s0 s1 ... s{n-1}     (optional, si in {0,1})
//! u v                            (m lines)
//! ```

use super::{BipartiteGraph, Graph, GraphError, Side};
use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: GraphError,
    },
    #[error("expected {expected} edges, found {found}")]
    EdgeCount { expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A parsed file: plain or with a side labelling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadedGraph {
    Plain(Graph),
    Bipartite(BipartiteGraph),
}

impl LoadedGraph {
    pub fn graph(&self) -> &Graph {
        match self {
            LoadedGraph::Plain(g) => g,
            LoadedGraph::Bipartite(b) => b.graph(),
        }
    }

    pub fn bipartite(&self) -> Option<&BipartiteGraph> {
        match self {
            LoadedGraph::Plain(_) => None,
            LoadedGraph::Bipartite(b) => Some(b),
        }
    }
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<LoadedGraph, ParseError> {
    let text = std::fs::read_to_string(path)?;
    parse_graph(&text)
}

fn malformed(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Malformed {
        line,
        message: message.into(),
    }
}

fn parse_usize(tok: &str, line: usize) -> Result<usize, ParseError> {
    tok.parse()
        .map_err(|_| malformed(line, format!("expected a non-negative integer, got {tok:?}")))
}

pub fn parse_graph(text: &str) -> Result<LoadedGraph, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| malformed(1, "missing header"))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 2 {
        return Err(malformed(hline, "header must be \"n m\""));
    }
    let n = parse_usize(head[0], hline)?;
    let m = parse_usize(head[1], hline)?;

    let mut side: Option<Vec<Side>> = None;
    let mut edges = Vec::with_capacity(m);
    let mut seen = HashSet::with_capacity(m);
    for (line, content) in lines {
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks[0] == "bipartite" {
            if side.is_some() || !edges.is_empty() {
                return Err(malformed(line, "side labels must directly follow the header"));
            }
            if toks.len() - 1 != n {
                return Err(ParseError::Invalid {
                    line,
                    source: GraphError::SideCount {
                        got: toks.len() - 1,
                        expected: n,
                    },
                });
            }
            let labels = toks[1..]
                .iter()
                .map(|t| match *t {
                    "0" => Ok(Side::A),
                    "1" => Ok(Side::B),
                    other => Err(malformed(line, format!("side label must be 0 or 1, got {other:?}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            side = Some(labels);
            continue;
        }
        if toks.len() != 2 {
            return Err(malformed(line, "edge line must be \"u v\""));
        }
        let u = parse_usize(toks[0], line)?;
        let v = parse_usize(toks[1], line)?;
        let invalid = |source| ParseError::Invalid { line, source };
        if u >= n || v >= n {
            return Err(invalid(GraphError::OutOfRange {
                vertex: u.max(v),
                n,
            }));
        }
        if u == v {
            return Err(invalid(GraphError::SelfLoop(u)));
        }
        let e = super::edge(u, v);
        if !seen.insert(e) {
            return Err(invalid(GraphError::DuplicateEdge(e.0, e.1)));
        }
        if let Some(s) = &side {
            if s[u] == s[v] {
                return Err(invalid(GraphError::SameSide(e.0, e.1)));
            }
        }
        edges.push(e);
    }
    if edges.len() != m {
        return Err(ParseError::EdgeCount {
            expected: m,
            found: edges.len(),
        });
    }
    let g = Graph::from_edges(n, edges).expect("edges validated while parsing");
    Ok(match side {
        None => LoadedGraph::Plain(g),
        Some(s) => LoadedGraph::Bipartite(BipartiteGraph::new(g, s).expect("sides validated")),
    })
}

/// Canonical text form: edges in lexicographic order.
pub fn write_graph(g: &Graph, side: Option<&[Side]>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", g.n(), g.m());
    if let Some(side) = side {
        out.push_str("bipartite");
        for s in side {
            out.push_str(match s {
                Side::A => " 0",
                Side::B => " 1",
            });
        }
        out.push('\n');
    }
    for &(u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

pub fn save_graph(
    path: impl AsRef<Path>,
    g: &Graph,
    side: Option<&[Side]>,
) -> Result<(), std::io::Error> {
    std::fs::write(path, write_graph(g, side))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate;

    #[test]
    fn triangle() {
        let g = parse_graph("3 3\n0 1\n1 2\n0 2").unwrap();
        assert_eq!(g.graph().edges(), &[(0, 1), (0, 2), (1, 2)]);
        assert!(g.bipartite().is_none());
    }

    #[test]
    fn k44_with_sides() {
        let mut text = String::from("8 16\nbipartite 0 0 0 0 1 1 1 1\n");
        for a in 0..4 {
            for b in 4..8 {
                text.push_str(&format!("{a} {b}\n"));
            }
        }
        let g = parse_graph(&text).unwrap();
        let b = g.bipartite().unwrap();
        assert_eq!(b, &generate::complete_bipartite(4, 4));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_graph("2 1\n0 0").unwrap_err();
        assert!(matches!(
            err,
            ParseError::Invalid {
                line: 2,
                source: GraphError::SelfLoop(0)
            }
        ));
        let err = parse_graph("3 2\n0 1\n1 0").unwrap_err();
        assert!(matches!(err, ParseError::Invalid { line: 3, .. }));
        let err = parse_graph("3 1\n0 7").unwrap_err();
        assert!(matches!(err, ParseError::Invalid { line: 2, .. }));
        let err = parse_graph("2 1\nbipartite 0 0\n0 1").unwrap_err();
        assert!(matches!(
            err,
            ParseError::Invalid {
                line: 3,
                source: GraphError::SameSide(0, 1)
            }
        ));
        let err = parse_graph("2 1\n0 x").unwrap_err();
        assert!(matches!(err, ParseError::Malformed { line: 2, .. }));
        assert!(matches!(
            parse_graph("3 2\n0 1").unwrap_err(),
            ParseError::EdgeCount { expected: 2, found: 1 }
        ));
    }

    #[test]
    fn canonical_form_is_stable() {
        let g = parse_graph("4 3\n2 3\n1 0\n3 0").unwrap();
        let text = write_graph(g.graph(), None);
        assert_eq!(text, "4 3\n0 1\n0 3\n2 3\n");
        assert_eq!(parse_graph(&text).unwrap(), g);
    }
}
