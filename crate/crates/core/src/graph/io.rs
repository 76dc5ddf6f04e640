use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CausalGraph, CausalTensor, TopologyNetwork};
use crate::error::{Error, Result};

/// On-disk form of a causal graph, optionally with the full posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub type_count: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub posterior: Option<Vec<Vec<Vec<f64>>>>,
}

impl GraphFile {
    pub fn new(graph: &CausalGraph, posterior: Option<&CausalTensor>) -> Self {
        Self {
            type_count: graph.type_count(),
            edges: graph.edges().map(|(a, b)| [a, b]).collect(),
            posterior: posterior.map(CausalTensor::to_nested),
        }
    }

    pub fn graph(&self) -> Result<CausalGraph> {
        CausalGraph::new(self.type_count, self.edges.iter().map(|e| (e[0], e[1])))
    }

    pub fn posterior(&self) -> Result<Option<CausalTensor>> {
        let Some(nested) = &self.posterior else {
            return Ok(None);
        };
        let tensor = CausalTensor::from_nested(nested)?;
        if tensor.type_count() != self.type_count {
            return Err(Error::shape(format!(
                "posterior covers {} types but type_count is {}",
                tensor.type_count(),
                self.type_count
            )));
        }
        Ok(Some(tensor))
    }
}

pub fn write_graph_json(
    path: &Path,
    graph: &CausalGraph,
    posterior: Option<&CausalTensor>,
) -> Result<()> {
    let body = serde_json::to_string_pretty(&GraphFile::new(graph, posterior))?;
    std::fs::write(path, body + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_graph_json(path: &Path) -> Result<GraphFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: GraphFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    file.graph()?;
    file.posterior()?;
    Ok(file)
}

#[derive(Serialize, Deserialize)]
struct TopologyRow {
    node_a: usize,
    node_b: usize,
}

pub fn write_topology_csv(path: &Path, topology: &TopologyNetwork) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    // header must exist even for edgeless topologies
    w.write_record(["node_a", "node_b"])?;
    for (a, b) in topology.edges() {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads an undirected edge list. The node count is the larger of
/// `min_nodes` and one past the largest id seen.
pub fn read_topology_csv(path: &Path, min_nodes: usize) -> Result<TopologyNetwork> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["node_a", "node_b"] {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header `node_a,node_b`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut edges = Vec::new();
    for (idx, row) in reader.deserialize::<TopologyRow>().enumerate() {
        let row = row.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 2,
            message: e.to_string(),
        })?;
        if row.node_a == row.node_b {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: idx + 2,
                message: format!("self-loop on node {}", row.node_a),
            });
        }
        edges.push((row.node_a, row.node_b));
    }
    let node_count = edges
        .iter()
        .map(|&(a, b)| a.max(b) + 1)
        .max()
        .unwrap_or(0)
        .max(min_nodes)
        .max(1);
    TopologyNetwork::new(node_count, edges)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topology_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("topology.csv");
        let t = TopologyNetwork::new(5, [(0, 1), (3, 1), (2, 4)]).unwrap();
        write_topology_csv(&path, &t).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "node_a,node_b\n0,1\n1,3\n2,4\n"
        );
        assert_eq!(read_topology_csv(&path, 0).unwrap(), t);
    }

    #[test]
    fn topology_bad_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("topology.csv");
        std::fs::write(&path, "node_a,node_b\n0,1\n2,x\n").unwrap();
        match read_topology_csv(&path, 0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn graph_json_with_posterior() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.json");
        let g = CausalGraph::new(2, [(0, 1)]).unwrap();
        let mut p = CausalTensor::zeros(1, 2);
        p.set(1, 0, 1, 0.75);
        write_graph_json(&path, &g, Some(&p)).unwrap();
        let back = read_graph_json(&path).unwrap();
        assert_eq!(back.graph().unwrap(), g);
        assert_eq!(back.posterior().unwrap().unwrap(), p);
    }

    #[test]
    fn graph_json_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.json");
        std::fs::write(&path, r#"{"type_count": 2, "edges": [], "extra": 1}"#).unwrap();
        assert!(read_graph_json(&path).is_err());
        std::fs::write(&path, r#"{"type_count": 2, "edges": [[0, 5]]}"#).unwrap();
        assert!(read_graph_json(&path).is_err());
    }
}
