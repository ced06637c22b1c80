use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Graph, VertexId};
use crate::error::{Error, Result};

/// Mapping between external integer ids and dense vertex ids.
///
/// Dense ids are assigned in order of first appearance in the input.
#[derive(Clone, Debug, Default)]
pub struct IdMap {
    external: Vec<u64>,
    dense: HashMap<u64, VertexId>,
}

impl IdMap {
    pub fn identity(n: usize) -> Self {
        let external: Vec<u64> = (0..n as u64).collect();
        let dense = external.iter().map(|&e| (e, e as VertexId)).collect();
        IdMap { external, dense }
    }

    fn intern(&mut self, id: u64) -> VertexId {
        let next = self.external.len() as VertexId;
        *self.dense.entry(id).or_insert_with(|| {
            self.external.push(id);
            next
        })
    }

    pub fn len(&self) -> usize {
        self.external.len()
    }

    pub fn is_empty(&self) -> bool {
        self.external.is_empty()
    }

    pub fn external(&self, v: VertexId) -> u64 {
        self.external[v as usize]
    }

    pub fn dense(&self, external: u64) -> Option<VertexId> {
        self.dense.get(&external).copied()
    }
}

/// A graph together with the dictionary that maps it back to input ids.
#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub ids: IdMap,
}

/// Reads a whitespace-separated edge list (`u v [w]`, `#` comments).
pub fn load_edge_list(path: &Path, directed: bool, weighted: bool) -> Result<LoadedGraph> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(BufReader::new(file), directed, weighted)
}

pub fn parse_edge_list(reader: impl BufRead, directed: bool, weighted: bool) -> Result<LoadedGraph> {
    let mut ids = IdMap::default();
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            // Files written by `write_edge_list` declare their vertex count so
            // that isolated vertices survive a round trip.
            if ids.is_empty() && edges.is_empty() {
                let mut words = comment.split_whitespace();
                if words.next() == Some("vertices") {
                    if let Some(n) = words.next().and_then(|s| s.parse::<u64>().ok()) {
                        for id in 0..n {
                            ids.intern(id);
                        }
                    }
                }
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected `u v [w]`, found {} fields", fields.len()),
            });
        }
        let parse_id = |s: &str| {
            s.parse::<u64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid vertex id `{s}`"),
            })
        };
        let u = parse_id(fields[0])?;
        let v = parse_id(fields[1])?;
        let w = match fields.get(2) {
            Some(s) => s.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid weight `{s}`"),
            })?,
            None => 1.0,
        };
        if weighted && !(w > 0.0 && w.is_finite()) {
            return Err(Error::Validation(format!(
                "line {line_no}: edge weight must be positive, found {w}"
            )));
        }
        let u = ids.intern(u);
        let v = ids.intern(v);
        edges.push((u, v, w));
    }
    let graph = Graph::from_edges(ids.len(), edges, directed, weighted)?;
    Ok(LoadedGraph { graph, ids })
}

/// Writes the graph as an edge list, one line per edge (undirected edges once).
pub fn write_edge_list(graph: &Graph, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(
            out,
            "# vertices {} edges {} {}",
            graph.vertex_count(),
            graph.edge_count(),
            if graph.is_directed() { "directed" } else { "undirected" }
        )?;
        for (u, v, w) in graph.edges_once() {
            if graph.is_weighted() {
                writeln!(out, "{u} {v} {w}")?;
            } else {
                writeln!(out, "{u} {v}")?;
            }
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}

/// Writes the `dense external` id dictionary sidecar.
pub fn write_id_dictionary(ids: &IdMap, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        for (dense, ext) in ids.external.iter().enumerate() {
            writeln!(out, "{dense} {ext}")?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::single_source_distances;

    fn parse(s: &str, directed: bool, weighted: bool) -> Result<LoadedGraph> {
        parse_edge_list(s.as_bytes(), directed, weighted)
    }

    #[test]
    fn triangle() {
        let g = parse("0 1\n1 2\n2 0\n", false, false).unwrap().graph;
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.arc_count(), 6);
    }

    #[test]
    fn negative_weight_is_validation_error() {
        let err = parse("0 1 -2.0\n", false, true).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse("# header\n0 1\n0 x\n", false, false).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
        assert!(matches!(parse("0\n", false, false), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn path_of_ten_reaches_nine() {
        let text: String = (0..9).map(|i| format!("{i} {}\n", i + 1)).collect();
        let g = parse(&text, false, false).unwrap().graph;
        let d = single_source_distances(&g, 0, None);
        let far = d.iter().find(|&&(v, _)| v == 9).unwrap();
        assert_eq!(far.1, 9.0);
    }

    #[test]
    fn external_ids_are_remapped_densely() {
        let loaded = parse("100 7\n7 42\n", false, false).unwrap();
        assert_eq!(loaded.graph.vertex_count(), 3);
        assert_eq!(loaded.ids.dense(100), Some(0));
        assert_eq!(loaded.ids.dense(42), Some(2));
        assert_eq!(loaded.ids.external(1), 7);
    }

    #[test]
    fn write_then_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        let g = parse("0 1 2.5\n1 2 1\n", false, true).unwrap().graph;
        write_edge_list(&g, &path).unwrap();
        let back = load_edge_list(&path, false, true).unwrap().graph;
        assert_eq!(back.fingerprint(), g.fingerprint());
        write_id_dictionary(&IdMap::identity(3), &dir.path().join("ids.txt")).unwrap();
    }
}
