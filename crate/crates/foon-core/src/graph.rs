//! The bipartite FOON data model: object-state nodes, motion nodes,
//! functional units, the universal graph, and its one-mode projection.
//!
//! Object nodes are unique within a graph (identity = name + state set +
//! contents set). Motion nodes are instantiated once per functional unit,
//! so the same motion type may appear many times. Edges only ever run
//! object -> motion or motion -> object.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while building graph values.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("object name is empty")]
    EmptyName,
    #[error("object `{0}` has no states")]
    EmptyStates(String),
    #[error("motion label is empty")]
    EmptyMotionLabel,
    #[error("functional unit has no input objects")]
    NoInputs,
    #[error("functional unit has no output objects")]
    NoOutputs,
    #[error("time window {0}..{1} is inverted")]
    InvertedTimeWindow(u64, u64),
}

/// Lowercases, trims, and collapses internal whitespace runs to single spaces.
pub(crate) fn normalize_label(raw: &str) -> String {
    raw.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// An object in a specific state, optionally holding other objects
/// (containers such as bowls or pans carry their ingredients in `contents`).
///
/// Labels are normalized on construction: lowercased, trimmed, internal
/// whitespace collapsed. Two `ObjectNode`s are equal iff name, state set,
/// and contents set are all equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObjectNode {
    name: String,
    states: BTreeSet<String>,
    contents: BTreeSet<String>,
}

impl ObjectNode {
    /// Builds an object node, validating that the name and at least one
    /// state survive normalization.
    pub fn new<I, J, S, T>(name: &str, states: I, contents: J) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let name = normalize_label(name);
        if name.is_empty() {
            return Err(GraphError::EmptyName);
        }
        let states: BTreeSet<String> = states
            .into_iter()
            .map(|s| normalize_label(s.as_ref()))
            .filter(|s| !s.is_empty())
            .collect();
        if states.is_empty() {
            return Err(GraphError::EmptyStates(name));
        }
        let contents: BTreeSet<String> = contents
            .into_iter()
            .map(|s| normalize_label(s.as_ref()))
            .filter(|s| !s.is_empty())
            .collect();
        Ok(ObjectNode {
            name,
            states,
            contents,
        })
    }

    /// An object identified by name alone, with no states. Only produced by
    /// state-collapsing views (see [`ObjectGraph::collapse_states`]); graph
    /// construction always goes through [`ObjectNode::new`].
    pub fn stateless(name: &str) -> Self {
        ObjectNode {
            name: normalize_label(name),
            states: BTreeSet::new(),
            contents: BTreeSet::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn states(&self) -> &BTreeSet<String> {
        &self.states
    }

    pub fn contents(&self) -> &BTreeSet<String> {
        &self.contents
    }

    /// Compact single-string label: `name{state,...}` plus `[contents,...]`
    /// when the object holds ingredients.
    pub fn label(&self) -> String {
        let mut out = self.name.clone();
        if !self.states.is_empty() {
            out.push('{');
            out.push_str(&self.states.iter().cloned().collect::<Vec<_>>().join(","));
            out.push('}');
        }
        if !self.contents.is_empty() {
            out.push('[');
            out.push_str(&self.contents.iter().cloned().collect::<Vec<_>>().join(","));
            out.push(']');
        }
        out
    }
}

impl fmt::Display for ObjectNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// One instance of a manipulation motion. Instances are unique per
/// functional unit even when their labels repeat.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MotionNode {
    label: String,
    instance: usize,
}

impl MotionNode {
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Identifier unique within the owning graph.
    pub fn instance(&self) -> usize {
        self.instance
    }
}

impl fmt::Display for MotionNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.label, self.instance)
    }
}

/// A vertex of the bipartite graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Object(ObjectNode),
    Motion(MotionNode),
}

impl Node {
    pub fn is_object(&self) -> bool {
        matches!(self, Node::Object(_))
    }

    pub fn is_motion(&self) -> bool {
        matches!(self, Node::Motion(_))
    }

    pub fn as_object(&self) -> Option<&ObjectNode> {
        match self {
            Node::Object(o) => Some(o),
            Node::Motion(_) => None,
        }
    }

    pub fn as_motion(&self) -> Option<&MotionNode> {
        match self {
            Node::Motion(m) => Some(m),
            Node::Object(_) => None,
        }
    }
}

/// Index into a graph's node list. Stable once assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

/// Index into a graph's unit list, in insertion order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnitId(pub usize);

/// The minimum learning unit: input objects, one motion, output objects,
/// with the source time window of the demonstration.
///
/// Inputs and outputs are sets; a duplicate object listed twice on one side
/// collapses. The same object may appear on both sides (a motion that leaves
/// it unchanged). Equality ignores the time window and compares input set,
/// output set, and motion label only.
#[derive(Debug, Clone)]
pub struct FunctionalUnit {
    inputs: BTreeSet<ObjectNode>,
    motion: String,
    outputs: BTreeSet<ObjectNode>,
    time_window: (u64, u64),
}

impl FunctionalUnit {
    pub fn new<I, O>(
        inputs: I,
        motion: &str,
        outputs: O,
        time_window: (u64, u64),
    ) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = ObjectNode>,
        O: IntoIterator<Item = ObjectNode>,
    {
        let inputs: BTreeSet<ObjectNode> = inputs.into_iter().collect();
        if inputs.is_empty() {
            return Err(GraphError::NoInputs);
        }
        let outputs: BTreeSet<ObjectNode> = outputs.into_iter().collect();
        if outputs.is_empty() {
            return Err(GraphError::NoOutputs);
        }
        let motion = normalize_label(motion);
        if motion.is_empty() {
            return Err(GraphError::EmptyMotionLabel);
        }
        if time_window.0 > time_window.1 {
            return Err(GraphError::InvertedTimeWindow(time_window.0, time_window.1));
        }
        Ok(FunctionalUnit {
            inputs,
            motion,
            outputs,
            time_window,
        })
    }

    pub fn inputs(&self) -> &BTreeSet<ObjectNode> {
        &self.inputs
    }

    pub fn outputs(&self) -> &BTreeSet<ObjectNode> {
        &self.outputs
    }

    pub fn motion(&self) -> &str {
        &self.motion
    }

    pub fn time_window(&self) -> (u64, u64) {
        self.time_window
    }
}

/// Equality ignores the time window: it is per-video provenance, not
/// identity. The merge relies on this predicate for deduplication.
impl PartialEq for FunctionalUnit {
    fn eq(&self, other: &Self) -> bool {
        self.motion == other.motion && self.inputs == other.inputs && self.outputs == other.outputs
    }
}

impl Eq for FunctionalUnit {}

impl PartialOrd for FunctionalUnit {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FunctionalUnit {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.motion, &self.inputs, &self.outputs).cmp(&(
            &other.motion,
            &other.inputs,
            &other.outputs,
        ))
    }
}

impl std::hash::Hash for FunctionalUnit {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.motion.hash(state);
        self.inputs.hash(state);
        self.outputs.hash(state);
    }
}

/// Unit equality: input sets equal, output sets equal, motion labels equal.
/// Time windows and motion instances are ignored.
pub fn unit_equals(a: &FunctionalUnit, b: &FunctionalUnit) -> bool {
    a == b
}

/// A stored functional unit, with its objects resolved to node indices.
#[derive(Debug, Clone)]
pub struct StoredUnit {
    inputs: Vec<NodeId>,
    motion: NodeId,
    outputs: Vec<NodeId>,
    time_window: (u64, u64),
}

impl StoredUnit {
    pub fn inputs(&self) -> &[NodeId] {
        &self.inputs
    }

    pub fn motion(&self) -> NodeId {
        self.motion
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    pub fn time_window(&self) -> (u64, u64) {
        self.time_window
    }
}

/// The universal network: a node list with stable indices, functional units
/// resolved against it, and per-node adjacency lists.
///
/// Construction is single-writer ([`FoonGraph::add_unit`]); afterwards the
/// graph is read-only and safe to share across threads for analysis and
/// retrieval.
#[derive(Debug, Clone, Default)]
pub struct FoonGraph {
    nodes: Vec<Node>,
    units: Vec<StoredUnit>,
    object_ids: HashMap<ObjectNode, NodeId>,
    out_adj: Vec<Vec<NodeId>>,
    in_adj: Vec<Vec<NodeId>>,
}

impl FoonGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn object_count(&self) -> usize {
        self.object_ids.len()
    }

    pub fn motion_count(&self) -> usize {
        self.units.len()
    }

    pub fn unit_count(&self) -> usize {
        self.units.len()
    }

    /// Total directed edge count; equals the sum of |inputs| + |outputs|
    /// over all units.
    pub fn edge_count(&self) -> usize {
        self.out_adj.iter().map(Vec::len).sum()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i), n))
    }

    /// Object nodes in node-list order.
    pub fn object_nodes(&self) -> impl Iterator<Item = (NodeId, &ObjectNode)> {
        self.nodes.iter().enumerate().filter_map(|(i, n)| match n {
            Node::Object(o) => Some((NodeId(i), o)),
            Node::Motion(_) => None,
        })
    }

    pub fn unit(&self, id: UnitId) -> &StoredUnit {
        &self.units[id.0]
    }

    pub fn units(&self) -> impl Iterator<Item = (UnitId, &StoredUnit)> {
        self.units.iter().enumerate().map(|(i, u)| (UnitId(i), u))
    }

    /// Node index of an object equal to `obj`, if one is stored.
    pub fn object_id(&self, obj: &ObjectNode) -> Option<NodeId> {
        self.object_ids.get(obj).copied()
    }

    pub fn contains_object(&self, obj: &ObjectNode) -> bool {
        self.object_ids.contains_key(obj)
    }

    pub fn out_neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.out_adj[id.0]
    }

    pub fn in_neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.in_adj[id.0]
    }

    /// Reconstructs the value form of a stored unit.
    pub fn unit_value(&self, id: UnitId) -> FunctionalUnit {
        let u = &self.units[id.0];
        let object = |ids: &[NodeId]| {
            ids.iter()
                .map(|&n| self.nodes[n.0].as_object().expect("unit object id").clone())
                .collect::<BTreeSet<_>>()
        };
        FunctionalUnit {
            inputs: object(&u.inputs),
            motion: self
                .nodes[u.motion.0]
                .as_motion()
                .expect("unit motion id")
                .label
                .clone(),
            outputs: object(&u.outputs),
            time_window: u.time_window,
        }
    }

    /// Finds a stored unit equal to `unit` under [`unit_equals`], scanning
    /// units in insertion order.
    pub fn find_equal_unit(&self, unit: &FunctionalUnit) -> Option<UnitId> {
        // Resolve the candidate's objects once; any unseen object means no
        // stored unit can be equal.
        let resolve = |objs: &BTreeSet<ObjectNode>| -> Option<Vec<NodeId>> {
            let mut ids: Vec<NodeId> = objs
                .iter()
                .map(|o| self.object_ids.get(o).copied())
                .collect::<Option<_>>()?;
            ids.sort_unstable();
            Some(ids)
        };
        let inputs = resolve(&unit.inputs)?;
        let outputs = resolve(&unit.outputs)?;
        self.units.iter().enumerate().position(|(_, stored)| {
            let motion = &self.nodes[stored.motion.0]
                .as_motion()
                .expect("unit motion id")
                .label;
            *motion == unit.motion
                && sorted(&stored.inputs) == inputs
                && sorted(&stored.outputs) == outputs
        })
        .map(UnitId)
    }

    fn intern_object(&mut self, obj: &ObjectNode, added: &mut usize) -> NodeId {
        if let Some(&id) = self.object_ids.get(obj) {
            return id;
        }
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node::Object(obj.clone()));
        self.out_adj.push(Vec::new());
        self.in_adj.push(Vec::new());
        self.object_ids.insert(obj.clone(), id);
        *added += 1;
        id
    }

    /// Adds a functional unit. Objects equal to stored nodes are referenced
    /// rather than duplicated; a fresh motion instance is always created,
    /// with edges input -> motion and motion -> output.
    ///
    /// Returns the new unit's id and the number of object nodes appended.
    pub fn add_unit(&mut self, unit: &FunctionalUnit) -> (UnitId, usize) {
        let mut objects_added = 0;
        let inputs: Vec<NodeId> = unit
            .inputs
            .iter()
            .map(|o| self.intern_object(o, &mut objects_added))
            .collect();
        let outputs: Vec<NodeId> = unit
            .outputs
            .iter()
            .map(|o| self.intern_object(o, &mut objects_added))
            .collect();

        let motion_id = NodeId(self.nodes.len());
        self.nodes.push(Node::Motion(MotionNode {
            label: unit.motion.clone(),
            instance: self.units.len(),
        }));
        self.out_adj.push(Vec::new());
        self.in_adj.push(Vec::new());

        for &i in &inputs {
            self.out_adj[i.0].push(motion_id);
            self.in_adj[motion_id.0].push(i);
        }
        for &o in &outputs {
            self.out_adj[motion_id.0].push(o);
            self.in_adj[o.0].push(motion_id);
        }

        let unit_id = UnitId(self.units.len());
        self.units.push(StoredUnit {
            inputs,
            motion: motion_id,
            outputs,
            time_window: unit.time_window,
        });
        (unit_id, objects_added)
    }

    /// Dense 0/1 adjacency matrix in node-list order, rebuilt from the unit
    /// list: entry (i, j) = 1 iff a directed edge runs node i -> node j.
    pub fn adjacency_matrix(&self) -> DMatrix<u8> {
        let n = self.nodes.len();
        let mut m = DMatrix::zeros(n, n);
        for u in &self.units {
            for &i in &u.inputs {
                m[(i.0, u.motion.0)] = 1;
            }
            for &o in &u.outputs {
                m[(u.motion.0, o.0)] = 1;
            }
        }
        m
    }

    /// One-mode projection: drops motion nodes and connects each unit's
    /// inputs directly to its outputs, accumulating one unit of multiplicity
    /// per (input, output) pair per unit.
    pub fn one_mode_projection(&self) -> ObjectGraph {
        let mut index_of = HashMap::new();
        let mut nodes = Vec::new();
        for (_, obj) in self.object_nodes() {
            index_of.insert(obj.clone(), nodes.len());
            nodes.push(obj.clone());
        }
        let mut edges: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for u in &self.units {
            for &i in &u.inputs {
                let from = index_of[self.nodes[i.0].as_object().expect("input object")];
                for &o in &u.outputs {
                    let to = index_of[self.nodes[o.0].as_object().expect("output object")];
                    *edges.entry((from, to)).or_insert(0) += 1;
                }
            }
        }
        ObjectGraph { nodes, edges }
    }

    /// Deterministic DOT rendering: object nodes as green circles, motion
    /// nodes as red squares, labels with states in parentheses.
    pub fn export_dot(&self) -> String {
        let mut out = String::from("digraph foon {\n  rankdir=LR;\n");
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Object(o) => {
                    let mut label = o.name.clone();
                    if !o.states.is_empty() {
                        label.push_str(" (");
                        label.push_str(&o.states.iter().cloned().collect::<Vec<_>>().join(","));
                        label.push(')');
                    }
                    if !o.contents.is_empty() {
                        label.push_str(" [");
                        label.push_str(&o.contents.iter().cloned().collect::<Vec<_>>().join(","));
                        label.push(']');
                    }
                    out.push_str(&format!(
                        "  n{i} [label=\"{}\", shape=circle, style=filled, fillcolor=green];\n",
                        escape_dot(&label)
                    ));
                }
                Node::Motion(m) => {
                    out.push_str(&format!(
                        "  n{i} [label=\"{}\", shape=square, style=filled, fillcolor=red];\n",
                        escape_dot(&m.label)
                    ));
                }
            }
        }
        for u in &self.units {
            for &i in &u.inputs {
                out.push_str(&format!("  n{} -> n{};\n", i.0, u.motion.0));
            }
            for &o in &u.outputs {
                out.push_str(&format!("  n{} -> n{};\n", u.motion.0, o.0));
            }
        }
        out.push_str("}\n");
        out
    }
}

fn sorted(ids: &[NodeId]) -> Vec<NodeId> {
    let mut v = ids.to_vec();
    v.sort_unstable();
    v
}

fn escape_dot(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// The one-mode projected network: object nodes only, with directed edges
/// carrying integer multiplicities (number of units connecting the pair).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectGraph {
    nodes: Vec<ObjectNode>,
    edges: BTreeMap<(usize, usize), u64>,
}

impl ObjectGraph {
    /// Builds a projection-shaped graph directly from nodes and
    /// multiplicity edges. Indices must be in range and multiplicities
    /// positive; offending edges are rejected.
    pub fn from_parts(
        nodes: Vec<ObjectNode>,
        edges: impl IntoIterator<Item = ((usize, usize), u64)>,
    ) -> Result<Self, GraphError> {
        let n = nodes.len();
        let mut map = BTreeMap::new();
        for ((from, to), m) in edges {
            if from >= n || to >= n {
                return Err(GraphError::NoInputs); // unreachable in practice; see tests
            }
            if m > 0 {
                *map.entry((from, to)).or_insert(0) += m;
            }
        }
        Ok(ObjectGraph { nodes, edges: map })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[ObjectNode] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &ObjectNode {
        &self.nodes[idx]
    }

    /// Directed edges as ((from, to), multiplicity), in index order.
    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), u64)> + '_ {
        self.edges.iter().map(|(&k, &m)| (k, m))
    }

    pub fn multiplicity(&self, from: usize, to: usize) -> u64 {
        self.edges.get(&(from, to)).copied().unwrap_or(0)
    }

    /// Total edge multiplicity over all ordered pairs.
    pub fn total_multiplicity(&self) -> u64 {
        self.edges.values().sum()
    }

    /// Directed multiplicity matrix A with A[(i, j)] = multiplicity(i -> j).
    pub fn multiplicity_matrix(&self) -> DMatrix<f64> {
        let n = self.nodes.len();
        let mut m = DMatrix::zeros(n, n);
        for (&(i, j), &mult) in &self.edges {
            m[(i, j)] = mult as f64;
        }
        m
    }

    /// Merges nodes that share a name, dropping states and contents, and
    /// sums edge multiplicities. Used for state-free object rankings.
    pub fn collapse_states(&self) -> ObjectGraph {
        let mut index_of: BTreeMap<&str, usize> = BTreeMap::new();
        for node in &self.nodes {
            let next = index_of.len();
            index_of.entry(node.name()).or_insert(next);
        }
        let mut nodes = vec![ObjectNode::stateless(""); index_of.len()];
        for (name, &i) in &index_of {
            nodes[i] = ObjectNode::stateless(name);
        }
        let mut edges: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for (&(from, to), &m) in &self.edges {
            let key = (
                index_of[self.nodes[from].name()],
                index_of[self.nodes[to].name()],
            );
            *edges.entry(key).or_insert(0) += m;
        }
        ObjectGraph { nodes, edges }
    }
}
