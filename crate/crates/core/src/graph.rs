//! Causal graph declaration, validation, and the mechanism candidate set.
//!
//! A graph is a list of nodes, each owning one or more dataset columns and
//! naming its parents. Every node contributes exactly one mechanism (its
//! conditional distribution given its parents) to the candidate set, in
//! declaration order. Those mechanisms are the players of the attribution game.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub columns: Vec<String>,
    #[serde(default)]
    pub parents: Vec<String>,
}

impl NodeSpec {
    pub fn new(name: &str, columns: &[&str], parents: &[&str]) -> Self {
        NodeSpec {
            name: name.to_string(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            parents: parents.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// A validated directed acyclic graph over named, possibly vector-valued nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CausalGraph {
    nodes: Vec<NodeSpec>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct GraphDoc {
    nodes: Vec<NodeSpec>,
}

impl CausalGraph {
    /// Builds a graph from node specs, checking names, parents, column
    /// ownership and acyclicity.
    pub fn new(nodes: Vec<NodeSpec>) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if node.name.is_empty() {
                return Err(Error::InvalidNode {
                    node: node.name.clone(),
                    reason: "empty name".into(),
                });
            }
            if index.insert(node.name.clone(), i).is_some() {
                return Err(Error::DuplicateNode(node.name.clone()));
            }
        }

        let mut owner: HashMap<&str, &str> = HashMap::new();
        for node in &nodes {
            if node.columns.is_empty() {
                return Err(Error::InvalidNode {
                    node: node.name.clone(),
                    reason: "no columns".into(),
                });
            }
            for col in &node.columns {
                if let Some(first) = owner.insert(col, &node.name) {
                    return Err(Error::DuplicateColumn {
                        column: col.clone(),
                        first: first.to_string(),
                        second: node.name.clone(),
                    });
                }
            }
            let mut seen = HashSet::new();
            for parent in &node.parents {
                if parent == &node.name {
                    return Err(Error::InvalidNode {
                        node: node.name.clone(),
                        reason: "node lists itself as a parent".into(),
                    });
                }
                if !seen.insert(parent) {
                    return Err(Error::InvalidNode {
                        node: node.name.clone(),
                        reason: format!("parent {parent:?} listed twice"),
                    });
                }
                if !index.contains_key(parent) {
                    return Err(Error::UnknownParent {
                        node: node.name.clone(),
                        parent: parent.clone(),
                    });
                }
            }
        }

        let graph = CausalGraph { nodes, index };
        graph.kahn_order()?;
        Ok(graph)
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, name: &str) -> Option<&NodeSpec> {
        self.index.get(name).map(|&i| &self.nodes[i])
    }

    /// All columns claimed by the graph, in node declaration order.
    pub fn columns(&self) -> Vec<&str> {
        self.nodes
            .iter()
            .flat_map(|n| n.columns.iter().map(String::as_str))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    /// The same nodes with every edge reversed.
    pub fn reversed(&self) -> CausalGraph {
        let mut nodes: Vec<NodeSpec> = self
            .nodes
            .iter()
            .map(|n| NodeSpec {
                parents: Vec::new(),
                ..n.clone()
            })
            .collect();
        for child in &self.nodes {
            for parent in &child.parents {
                let i = self.index[parent];
                nodes[i].parents.push(child.name.clone());
            }
        }
        CausalGraph::new(nodes).expect("reversing a DAG yields a DAG")
    }

    /// Kahn's algorithm; among ready nodes the earliest declared goes first.
    fn kahn_order(&self) -> Result<Vec<usize>> {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, node) in self.nodes.iter().enumerate() {
            indegree[i] = node.parents.len();
            for p in &node.parents {
                children[self.index[p]].push(i);
            }
        }
        let mut ready: std::collections::BTreeSet<usize> =
            (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &c in &children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() < n {
            let stuck = (0..n).find(|&i| indegree[i] > 0).unwrap();
            return Err(Error::Cycle(self.nodes[stuck].name.clone()));
        }
        Ok(order)
    }
}

/// Parses a graph document: `{"nodes": [{"name", "columns", "parents"}, ...]}`.
pub fn parse_graph(spec_text: &str) -> Result<CausalGraph> {
    let doc: GraphDoc =
        serde_json::from_str(spec_text).map_err(|e| Error::GraphSyntax(e.to_string()))?;
    CausalGraph::new(doc.nodes)
}

/// Checks that the graph's columns partition `columns` exactly.
pub fn validate_against_schema(graph: &CausalGraph, columns: &[String]) -> Result<()> {
    let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
    for node in graph.nodes() {
        for col in &node.columns {
            if let Some(first) = owner.insert(col, &node.name) {
                return Err(Error::DuplicateColumn {
                    column: col.clone(),
                    first: first.to_string(),
                    second: node.name.clone(),
                });
            }
        }
    }
    let mut schema = HashSet::new();
    for col in columns {
        if !schema.insert(col.as_str()) {
            return Err(Error::Csv(format!("column {col:?} appears twice in the header")));
        }
        if !owner.contains_key(col.as_str()) {
            return Err(Error::UnassignedColumn(col.clone()));
        }
    }
    for col in owner.keys() {
        if !schema.contains(col) {
            return Err(Error::MissingColumn(col.to_string()));
        }
    }
    Ok(())
}

/// One factor of the causal factorization: a node given its parents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mechanism {
    pub node: String,
    pub parent_columns: Vec<String>,
    pub own_columns: Vec<String>,
}

impl Mechanism {
    pub fn is_root(&self) -> bool {
        self.parent_columns.is_empty()
    }

    /// Own columns followed by parent columns.
    pub fn full_columns(&self) -> Vec<String> {
        self.own_columns
            .iter()
            .chain(self.parent_columns.iter())
            .cloned()
            .collect()
    }

    /// Display label such as `Y|X` or `G`.
    pub fn label(&self, graph: &CausalGraph) -> String {
        match graph.node(&self.node) {
            Some(spec) if !spec.parents.is_empty() => {
                format!("{}|{}", self.node, spec.parents.join(","))
            }
            _ => self.node.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateSet {
    pub mechanisms: Vec<Mechanism>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.mechanisms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mechanisms.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.mechanisms.iter().map(|m| m.node.clone()).collect()
    }
}

pub fn candidate_set(graph: &CausalGraph) -> CandidateSet {
    let mechanisms = graph
        .nodes()
        .iter()
        .map(|node| Mechanism {
            node: node.name.clone(),
            parent_columns: node
                .parents
                .iter()
                .flat_map(|p| graph.node(p).unwrap().columns.iter().cloned())
                .collect(),
            own_columns: node.columns.clone(),
        })
        .collect();
    CandidateSet { mechanisms }
}

/// Node names with every parent before its children; ties broken by
/// declaration order.
pub fn topological_order(graph: &CausalGraph) -> Vec<String> {
    graph
        .kahn_order()
        .expect("validated graphs are acyclic")
        .into_iter()
        .map(|i| graph.nodes[i].name.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHAIN: &str = r#"{"nodes":[{"name":"X","columns":["x"],"parents":[]},{"name":"Y","columns":["y"],"parents":["X"]}]}"#;

    fn fivevar() -> CausalGraph {
        CausalGraph::new(vec![
            NodeSpec::new("G", &["g"], &[]),
            NodeSpec::new("Y", &["y"], &["G"]),
            NodeSpec::new("X1", &["x1"], &["Y"]),
            NodeSpec::new("X2", &["x2"], &["G", "Y"]),
            NodeSpec::new("X3", &["x3"], &["G", "Y"]),
        ])
        .unwrap()
    }

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn parses_minimal_chain() {
        let g = parse_graph(CHAIN).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.nodes()[1].parents, vec!["X"]);
    }

    #[test]
    fn dangling_parent_is_named() {
        let doc = r#"{"nodes":[{"name":"Y","columns":["y"],"parents":["Z"]}]}"#;
        let err = parse_graph(doc).unwrap_err();
        assert!(matches!(&err, Error::UnknownParent { parent, .. } if parent == "Z"));
        assert!(err.to_string().contains("\"Z\""));
    }

    #[test]
    fn rejects_duplicates_and_cycles() {
        let dup = r#"{"nodes":[{"name":"A","columns":["a"]},{"name":"A","columns":["b"]}]}"#;
        assert!(matches!(parse_graph(dup), Err(Error::DuplicateNode(n)) if n == "A"));

        let cyc = r#"{"nodes":[{"name":"A","columns":["a"],"parents":["B"]},{"name":"B","columns":["b"],"parents":["A"]}]}"#;
        assert!(matches!(parse_graph(cyc), Err(Error::Cycle(_))));

        let selfloop = r#"{"nodes":[{"name":"A","columns":["a"],"parents":["A"]}]}"#;
        assert!(matches!(parse_graph(selfloop), Err(Error::InvalidNode { .. })));

        assert!(matches!(parse_graph("{nodes:"), Err(Error::GraphSyntax(_))));
        let empty_cols = r#"{"nodes":[{"name":"A","columns":[]}]}"#;
        assert!(matches!(parse_graph(empty_cols), Err(Error::InvalidNode { .. })));
    }

    #[test]
    fn schema_validation() {
        let g = parse_graph(CHAIN).unwrap();
        validate_against_schema(&g, &s(&["x", "y"])).unwrap();
        assert!(matches!(
            validate_against_schema(&g, &s(&["x", "y", "z"])),
            Err(Error::UnassignedColumn(c)) if c == "z"
        ));
        assert!(matches!(
            validate_against_schema(&g, &s(&["x"])),
            Err(Error::MissingColumn(c)) if c == "y"
        ));
        let doubled = r#"{"nodes":[{"name":"X","columns":["x","y"]},{"name":"Y","columns":["y"],"parents":["X"]}]}"#;
        assert!(matches!(parse_graph(doubled), Err(Error::DuplicateColumn { .. })));
    }

    #[test]
    fn candidate_sets() {
        let g = parse_graph(CHAIN).unwrap();
        let c = candidate_set(&g);
        assert_eq!(c.len(), 2);
        assert!(c.mechanisms[0].is_root());
        assert_eq!(c.mechanisms[1].parent_columns, vec!["x"]);

        let c = candidate_set(&fivevar());
        let labels: Vec<_> = c.mechanisms.iter().map(|m| m.label(&fivevar())).collect();
        assert_eq!(labels, vec!["G", "Y|G", "X1|Y", "X2|G,Y", "X3|G,Y"]);
        assert_eq!(c.mechanisms[3].parent_columns, vec!["g", "y"]);

        let single = CausalGraph::new(vec![NodeSpec::new("Z", &["z"], &[])]).unwrap();
        let c = candidate_set(&single);
        assert_eq!(c.len(), 1);
        assert!(c.mechanisms[0].parent_columns.is_empty());
    }

    #[test]
    fn topological_orders() {
        assert_eq!(topological_order(&parse_graph(CHAIN).unwrap()), vec!["X", "Y"]);

        let g = fivevar();
        let order = topological_order(&g);
        let pos = |n: &str| order.iter().position(|o| o == n).unwrap();
        for node in g.nodes() {
            for p in &node.parents {
                assert!(pos(p) < pos(&node.name));
            }
        }

        // declared out of order on purpose
        let diamond = CausalGraph::new(vec![
            NodeSpec::new("D", &["d"], &["B", "C"]),
            NodeSpec::new("B", &["b"], &["A"]),
            NodeSpec::new("C", &["c"], &["A"]),
            NodeSpec::new("A", &["a"], &[]),
        ])
        .unwrap();
        assert_eq!(topological_order(&diamond), vec!["A", "B", "C", "D"]);
    }

    #[test]
    fn reversal_flips_edges() {
        let g = parse_graph(CHAIN).unwrap().reversed();
        assert!(g.node("X").unwrap().parents == vec!["Y"]);
        assert!(g.node("Y").unwrap().parents.is_empty());
        let r = fivevar().reversed();
        assert_eq!(r.node("G").unwrap().parents, vec!["Y", "X2", "X3"]);
    }

    #[test]
    fn json_round_trip() {
        let g = fivevar();
        assert_eq!(parse_graph(&g.to_json()).unwrap(), g);
    }
}
