//! In-memory labeled knowledge graph.
//!
//! Triples are loaded once into a compressed adjacency layout (CSR) keyed by
//! dense node ids. Every edge `(u, v, l)` is paired with a reverse edge
//! `(v, u, l⁻¹)`, either synthesized at load time or supplied by the input.
//! After construction the graph is read-only and can be shared freely across
//! threads.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

/// Maximum number of nodes a query may contain.
pub const MAX_QUERY_SIZE: usize = 10;

/// Dense node identifier, assigned in first-seen order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Dense edge-label identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelId(pub u32);

impl LabelId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for LabelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

/// An outgoing edge stored in a node's adjacency list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub target: NodeId,
    pub label: LabelId,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

impl Triple {
    pub fn new(subject: impl Into<String>, predicate: impl Into<String>, object: impl Into<String>) -> Self {
        Self {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected 3 tab-separated columns, found {columns}")]
    Malformed { line: usize, columns: usize },
    #[error("input contains no triples")]
    Empty,
    #[error("unknown edge label {0}")]
    UnknownLabel(LabelId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("predicate `{label}` has no inverse `{expected}` in the input")]
    MissingInverse { label: String, expected: String },
    #[error("edge ({subject}, {predicate}, {object}) has no matching reverse edge")]
    MissingReverseEdge {
        subject: String,
        predicate: String,
        object: String,
    },
    #[error("query must contain between 1 and {MAX_QUERY_SIZE} nodes, got {0}")]
    QuerySize(usize),
    #[error("query contains node {0} more than once")]
    DuplicateQueryNode(NodeId),
}

/// How reverse edges come into existence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReverseEdges {
    /// Every triple `(s, p, o)` also yields `(o, p⁻¹, s)`.
    #[default]
    Synthesize,
    /// The input already lists both directions; closure is verified.
    Provided,
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub reverse: ReverseEdges,
    /// Suffix naming inverse predicates.
    pub inverse_suffix: String,
    /// Triples with this predicate set the subject's node label instead of
    /// becoming edges.
    pub type_predicate: Option<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            reverse: ReverseEdges::Synthesize,
            inverse_suffix: "⁻¹".to_string(),
            type_predicate: None,
        }
    }
}

impl LoadOptions {
    /// ASCII-only inverse naming (`p_inv`).
    pub fn ascii() -> Self {
        Self {
            inverse_suffix: "_inv".to_string(),
            ..Self::default()
        }
    }
}

/// Bidirectional string <-> dense id dictionary.
#[derive(Debug, Clone, Default)]
struct Dictionary {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Dictionary {
    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    fn len(&self) -> usize {
        self.names.len()
    }
}

/// Immutable directed labeled multigraph with reverse edges.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    nodes: Dictionary,
    node_labels: Dictionary,
    node_label_of: Vec<u32>,
    edge_labels: Dictionary,
    inverse: Vec<LabelId>,
    inverse_flag: Vec<bool>,
    offsets: Vec<usize>,
    edges: Vec<Edge>,
    label_counts: Vec<usize>,
}

impl KnowledgeGraph {
    /// Builds a graph from in-memory triples.
    pub fn from_triples<I>(triples: I, options: &LoadOptions) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = Triple>,
    {
        let mut builder = Builder::new(options);
        for t in triples {
            builder.push(&t.subject, &t.predicate, &t.object);
        }
        builder.finish()
    }

    /// Parses `subject<TAB>predicate<TAB>object` lines. Lines starting with
    /// `#` and blank lines are skipped.
    pub fn load_tsv<R: BufRead>(reader: R, options: &LoadOptions) -> Result<Self, GraphError> {
        let mut builder = Builder::new(options);
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(GraphError::Malformed {
                    line: i + 1,
                    columns: cols.len(),
                });
            }
            builder.push(cols[0], cols[1], cols[2]);
        }
        builder.finish()
    }

    pub fn load_tsv_path(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Self, GraphError> {
        let file = File::open(path)?;
        Self::load_tsv(BufReader::new(file), options)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// |E|, reverse edges included.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn label_count(&self) -> usize {
        self.edge_labels.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn labels(&self) -> impl Iterator<Item = LabelId> + '_ {
        (0..self.edge_labels.len() as u32).map(LabelId)
    }

    #[inline]
    pub fn out_edges(&self, node: NodeId) -> &[Edge] {
        let i = node.index();
        &self.edges[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn out_degree(&self, node: NodeId) -> usize {
        let i = node.index();
        self.offsets[i + 1] - self.offsets[i]
    }

    /// All edges as `(source, edge)` pairs, grouped by source.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, Edge)> + '_ {
        self.nodes()
            .flat_map(move |u| self.out_edges(u).iter().map(move |&e| (u, e)))
    }

    /// Offset of `node`'s first outgoing edge in the flat edge array.
    #[inline]
    pub(crate) fn edge_offset(&self, node: NodeId) -> usize {
        self.offsets[node.index()]
    }

    pub fn node_name(&self, node: NodeId) -> &str {
        &self.nodes.names[node.index()]
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.nodes.get(name).map(NodeId)
    }

    /// Node label φ(n). Defaults to the node's own name.
    pub fn node_label(&self, node: NodeId) -> &str {
        &self.node_labels.names[self.node_label_of[node.index()] as usize]
    }

    pub fn label_name(&self, label: LabelId) -> &str {
        &self.edge_labels.names[label.index()]
    }

    pub fn label_by_name(&self, name: &str) -> Option<LabelId> {
        self.edge_labels.get(name).map(LabelId)
    }

    pub fn contains_node(&self, node: NodeId) -> bool {
        node.index() < self.nodes.len()
    }

    pub fn contains_label(&self, label: LabelId) -> bool {
        label.index() < self.edge_labels.len()
    }

    /// l ↦ l⁻¹.
    pub fn inverse(&self, label: LabelId) -> LabelId {
        self.inverse[label.index()]
    }

    /// True for labels that name the reverse direction of an input predicate.
    pub fn is_inverse(&self, label: LabelId) -> bool {
        self.inverse_flag[label.index()]
    }

    /// |E_l|.
    pub fn label_edge_count(&self, label: LabelId) -> Result<usize, GraphError> {
        self.label_counts
            .get(label.index())
            .copied()
            .ok_or(GraphError::UnknownLabel(label))
    }

    /// |E_l| / |E|.
    pub fn label_frequency(&self, label: LabelId) -> Result<f64, GraphError> {
        let count = self.label_edge_count(label)?;
        Ok(count as f64 / self.edge_count() as f64)
    }

    /// Labels of edges leaving any node in `nodes`.
    pub fn restricted_labels(&self, nodes: &[NodeId]) -> BTreeSet<LabelId> {
        nodes
            .iter()
            .flat_map(|&n| self.out_edges(n).iter().map(|e| e.label))
            .collect()
    }
}

struct Builder<'a> {
    options: &'a LoadOptions,
    nodes: Dictionary,
    node_labels: Dictionary,
    node_label_of: Vec<u32>,
    edge_labels: Dictionary,
    raw: Vec<(u32, u32, u32)>,
}

impl<'a> Builder<'a> {
    fn new(options: &'a LoadOptions) -> Self {
        Self {
            options,
            nodes: Dictionary::default(),
            node_labels: Dictionary::default(),
            node_label_of: Vec::new(),
            edge_labels: Dictionary::default(),
            raw: Vec::new(),
        }
    }

    fn node(&mut self, name: &str) -> u32 {
        let before = self.nodes.len();
        let id = self.nodes.intern(name);
        if self.nodes.len() > before {
            let label = self.node_labels.intern(name);
            self.node_label_of.push(label);
        }
        id
    }

    fn inverse_name(&self, name: &str) -> String {
        match name.strip_suffix(self.options.inverse_suffix.as_str()) {
            Some(base) if !base.is_empty() => base.to_string(),
            _ => format!("{name}{}", self.options.inverse_suffix),
        }
    }

    fn push(&mut self, subject: &str, predicate: &str, object: &str) {
        let s = self.node(subject);
        if self.options.type_predicate.as_deref() == Some(predicate) {
            let label = self.node_labels.intern(object);
            self.node_label_of[s as usize] = label;
            return;
        }
        let o = self.node(object);
        let l = self.edge_labels.intern(predicate);
        self.raw.push((s, l, o));
        if self.options.reverse == ReverseEdges::Synthesize {
            let inv = self.inverse_name(predicate);
            let li = self.edge_labels.intern(&inv);
            self.raw.push((o, li, s));
        }
    }

    fn finish(self) -> Result<KnowledgeGraph, GraphError> {
        if self.raw.is_empty() {
            return Err(GraphError::Empty);
        }
        let label_total = self.edge_labels.len();
        let mut inverse = Vec::with_capacity(label_total);
        let mut inverse_flag = Vec::with_capacity(label_total);
        for name in &self.edge_labels.names {
            let inv_name = self.inverse_name(name);
            let inv = self
                .edge_labels
                .get(&inv_name)
                .ok_or_else(|| GraphError::MissingInverse {
                    label: name.clone(),
                    expected: inv_name.clone(),
                })?;
            inverse.push(LabelId(inv));
            let suffix = self.options.inverse_suffix.as_str();
            inverse_flag.push(!suffix.is_empty() && name.len() > suffix.len() && name.ends_with(suffix));
        }

        if self.options.reverse == ReverseEdges::Provided {
            self.check_closure(&inverse)?;
        }

        let n = self.nodes.len();
        let mut offsets = vec![0usize; n + 1];
        let mut label_counts = vec![0usize; label_total];
        for &(s, l, _) in &self.raw {
            offsets[s as usize + 1] += 1;
            label_counts[l as usize] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut edges = vec![
            Edge {
                target: NodeId(0),
                label: LabelId(0),
            };
            self.raw.len()
        ];
        for &(s, l, o) in &self.raw {
            let slot = &mut cursor[s as usize];
            edges[*slot] = Edge {
                target: NodeId(o),
                label: LabelId(l),
            };
            *slot += 1;
        }

        Ok(KnowledgeGraph {
            nodes: self.nodes,
            node_labels: self.node_labels,
            node_label_of: self.node_label_of,
            edge_labels: self.edge_labels,
            inverse,
            inverse_flag,
            offsets,
            edges,
            label_counts,
        })
    }

    fn check_closure(&self, inverse: &[LabelId]) -> Result<(), GraphError> {
        let mut forward: Vec<(u32, u32, u32)> = self.raw.clone();
        let mut mirrored: Vec<(u32, u32, u32)> = self
            .raw
            .iter()
            .map(|&(s, l, o)| (o, inverse[l as usize].0, s))
            .collect();
        forward.sort_unstable();
        mirrored.sort_unstable();
        if forward == mirrored {
            return Ok(());
        }
        // Report an edge whose mirror is absent.
        let (mut i, mut j) = (0, 0);
        while i < forward.len() {
            if j >= mirrored.len() || forward[i] < mirrored[j] {
                let (s, l, o) = forward[i];
                // forward[i] is an edge nobody mirrors; its own mirror is missing.
                let (s, l, o) = (o, inverse[l as usize].0, s);
                return Err(GraphError::MissingReverseEdge {
                    subject: self.nodes.names[s as usize].clone(),
                    predicate: self.edge_labels.names[l as usize].clone(),
                    object: self.nodes.names[o as usize].clone(),
                });
            } else if forward[i] == mirrored[j] {
                i += 1;
                j += 1;
            } else {
                j += 1;
            }
        }
        let (s, l, o) = mirrored[j];
        Err(GraphError::MissingReverseEdge {
            subject: self.nodes.names[s as usize].clone(),
            predicate: self.edge_labels.names[l as usize].clone(),
            object: self.nodes.names[o as usize].clone(),
        })
    }
}

/// A validated set of query nodes, kept in the order given.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    nodes: Vec<NodeId>,
}

impl Query {
    pub fn new(graph: &KnowledgeGraph, nodes: impl IntoIterator<Item = NodeId>) -> Result<Self, GraphError> {
        let nodes: Vec<NodeId> = nodes.into_iter().collect();
        if nodes.is_empty() || nodes.len() > MAX_QUERY_SIZE {
            return Err(GraphError::QuerySize(nodes.len()));
        }
        for (i, &n) in nodes.iter().enumerate() {
            if !graph.contains_node(n) {
                return Err(GraphError::UnknownNode(n));
            }
            if nodes[..i].contains(&n) {
                return Err(GraphError::DuplicateQueryNode(n));
            }
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.nodes.contains(&node)
    }

    /// Dense membership mask over all graph nodes.
    pub fn mask(&self, node_count: usize) -> Vec<bool> {
        let mut mask = vec![false; node_count];
        for n in &self.nodes {
            mask[n.index()] = true;
        }
        mask
    }
}
