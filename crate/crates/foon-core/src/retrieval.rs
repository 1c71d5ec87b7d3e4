//! Task-tree retrieval: finding a dependency-ordered sequence of functional
//! units that turns the objects in a scene into a goal object.
//!
//! Retrieval searches producers of the goal recursively (candidates per
//! node tried in unit insertion order), committing a unit only once all of
//! its inputs are available. Scene objects are never consumed, so anything
//! produced stays available and units are shared between sub-goals. With a
//! motion cost table the search is branch-and-bound: partial trees whose
//! cost already reaches the best known complete tree are pruned, so the
//! returned tree minimizes summed motion cost (ties go to earlier-inserted
//! units). An all-zero cost table degenerates to first-found search.
//!
//! [`reachability_closure`] is the independent ground truth for plan
//! existence, and [`validate_task_tree`] replays a tree step by step.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{FoonGraph, NodeId, ObjectNode, UnitId};
use crate::ingest::{ParseError, ParseErrorKind, Subgraph};

/// The objects available in the environment. Availability is persistent:
/// planning never consumes an object.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SceneInventory {
    objects: BTreeSet<ObjectNode>,
}

impl SceneInventory {
    pub fn new(objects: impl IntoIterator<Item = ObjectNode>) -> Self {
        SceneInventory {
            objects: objects.into_iter().collect(),
        }
    }

    pub fn contains(&self, obj: &ObjectNode) -> bool {
        self.objects.contains(obj)
    }

    pub fn objects(&self) -> &BTreeSet<ObjectNode> {
        &self.objects
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn remove(&mut self, obj: &ObjectNode) -> bool {
        self.objects.remove(obj)
    }
}

/// Parses a scene file: one object per line,
/// `name<TAB>state1[,state2][<TAB>{contents}]`. `#` comments are skipped.
pub fn parse_scene(text: &str, source_name: &str) -> Result<SceneInventory, ParseError> {
    let mut objects = BTreeSet::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(scene_err(source_name, idx + 1, "expected name<TAB>states[<TAB>{contents}]"));
        }
        let states: Vec<&str> = fields[1].split(',').collect();
        let contents: Vec<String> = if fields.len() == 3 {
            let inner = fields[2]
                .trim()
                .strip_prefix('{')
                .and_then(|g| g.strip_suffix('}'))
                .ok_or_else(|| scene_err(source_name, idx + 1, "contents must be brace-wrapped"))?;
            inner
                .split(',')
                .map(str::to_string)
                .filter(|s| !s.trim().is_empty())
                .collect()
        } else {
            Vec::new()
        };
        let obj = ObjectNode::new(fields[0], states, contents)
            .map_err(|e| scene_err(source_name, idx + 1, &e.to_string()))?;
        objects.insert(obj);
    }
    Ok(SceneInventory { objects })
}

fn scene_err(source: &str, line: usize, msg: &str) -> ParseError {
    ParseError {
        source_name: source.to_string(),
        line,
        kind: ParseErrorKind::InvalidUnit(msg.to_string()),
    }
}

/// Parses a goal spec of the form `name:state1[,state2]`.
pub fn parse_goal(spec: &str) -> Result<ObjectNode, String> {
    let (name, states) = spec
        .split_once(':')
        .ok_or_else(|| format!("goal `{spec}` must be name:state1[,state2]"))?;
    ObjectNode::new(name, states.split(','), std::iter::empty::<&str>())
        .map_err(|e| format!("goal `{spec}`: {e}"))
}

/// Per-motion cost weights guiding the search; unlisted motions cost 1.
#[derive(Debug, Clone)]
pub struct MotionCostTable {
    costs: BTreeMap<String, f64>,
    default: f64,
}

impl Default for MotionCostTable {
    fn default() -> Self {
        MotionCostTable {
            costs: BTreeMap::new(),
            default: 1.0,
        }
    }
}

impl MotionCostTable {
    pub fn new(costs: impl IntoIterator<Item = (String, f64)>) -> Result<Self, String> {
        let costs: BTreeMap<String, f64> = costs.into_iter().collect();
        for (motion, cost) in &costs {
            if !cost.is_finite() || *cost < 0.0 {
                return Err(format!("cost for `{motion}` must be finite and non-negative"));
            }
        }
        Ok(MotionCostTable {
            costs,
            default: 1.0,
        })
    }

    /// All-zero costs: retrieval returns the first tree found.
    pub fn first_found() -> Self {
        MotionCostTable {
            costs: BTreeMap::new(),
            default: 0.0,
        }
    }

    /// Parses `motion,cost` CSV, with an optional `motion,cost` header.
    pub fn parse_csv(text: &str) -> Result<Self, String> {
        let mut costs = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (idx == 0 && line == "motion,cost") {
                continue;
            }
            let (motion, cost) = line
                .rsplit_once(',')
                .ok_or_else(|| format!("costs line {}: expected motion,cost", idx + 1))?;
            let cost: f64 = cost
                .trim()
                .parse()
                .map_err(|_| format!("costs line {}: bad cost `{cost}`", idx + 1))?;
            costs.push((crate::graph::normalize_label(motion), cost));
        }
        Self::new(costs)
    }

    pub fn cost(&self, motion: &str) -> f64 {
        self.costs.get(motion).copied().unwrap_or(self.default)
    }
}

/// A dependency-ordered plan: for every unit, each input is in the scene or
/// produced by an earlier unit, and the goal is produced by some unit (the
/// tree is empty when the goal is already in the scene).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskTree {
    units: Vec<UnitId>,
    goal: ObjectNode,
}

impl TaskTree {
    pub fn new(units: Vec<UnitId>, goal: ObjectNode) -> Self {
        TaskTree { units, goal }
    }

    pub fn units(&self) -> &[UnitId] {
        &self.units
    }

    pub fn goal(&self) -> &ObjectNode {
        &self.goal
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Total motion cost under a cost table.
    pub fn cost(&self, graph: &FoonGraph, costs: &MotionCostTable) -> f64 {
        self.units
            .iter()
            .map(|&id| costs.cost(graph.unit_value(id).motion()))
            .sum()
    }

    /// The tree as a subgraph value (unit blocks in dependency order),
    /// ready for text serialization.
    pub fn to_subgraph(&self, graph: &FoonGraph) -> Subgraph {
        // Time windows replayed as the dependency sequence to keep the
        // serialized block order equal to the execution order.
        let units = self
            .units
            .iter()
            .enumerate()
            .map(|(i, &id)| {
                let u = graph.unit_value(id);
                crate::graph::FunctionalUnit::new(
                    u.inputs().clone(),
                    u.motion(),
                    u.outputs().clone(),
                    (i as u64, i as u64),
                )
                .expect("stored units are well-formed")
            })
            .collect();
        Subgraph::new("task-tree", units)
    }
}

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("goal `{0}` is not an object node in the graph")]
    GoalNotInGraph(String),
    #[error("goal `{0}` is unreachable: no executable task tree exists with the given scene")]
    Unreachable(String),
}

/// A failed validation step.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeViolation {
    #[error("step {step} ({motion}): input `{missing}` is not available")]
    MissingInput {
        step: usize,
        motion: String,
        missing: String,
    },
    #[error("goal `{0}` is not produced by the tree")]
    GoalNotProduced(String),
}

/// Replays a tree against the scene: each unit in order must have all
/// inputs available, then its outputs become available; finally the goal
/// must be available. Independent of how the tree was found.
pub fn validate_task_tree(
    graph: &FoonGraph,
    tree: &TaskTree,
    scene: &SceneInventory,
    goal: &ObjectNode,
) -> Result<(), TreeViolation> {
    let mut available: BTreeSet<ObjectNode> = scene.objects().clone();
    for (step, &unit_id) in tree.units().iter().enumerate() {
        let unit = graph.unit_value(unit_id);
        for input in unit.inputs() {
            if !available.contains(input) {
                return Err(TreeViolation::MissingInput {
                    step,
                    motion: unit.motion().to_string(),
                    missing: input.label(),
                });
            }
        }
        available.extend(unit.outputs().iter().cloned());
    }
    if available.contains(goal) {
        Ok(())
    } else {
        Err(TreeViolation::GoalNotProduced(goal.label()))
    }
}

/// Least fixed point of scene objects under the graph's units: starting
/// from the scene, repeatedly applies any unit whose inputs are all
/// available and adds its outputs. Ground truth for plan existence.
pub fn reachability_closure(graph: &FoonGraph, scene: &SceneInventory) -> BTreeSet<ObjectNode> {
    let mut available: Vec<bool> = vec![false; graph.node_count()];
    for obj in scene.objects() {
        if let Some(id) = graph.object_id(obj) {
            available[id.0] = true;
        }
    }
    let mut applied: Vec<bool> = vec![false; graph.unit_count()];
    loop {
        let mut changed = false;
        for (unit_id, unit) in graph.units() {
            if applied[unit_id.0] {
                continue;
            }
            if unit.inputs().iter().all(|i| available[i.0]) {
                applied[unit_id.0] = true;
                for o in unit.outputs() {
                    if !available[o.0] {
                        available[o.0] = true;
                    }
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut closure: BTreeSet<ObjectNode> = scene.objects().clone();
    for (id, obj) in graph.object_nodes() {
        if available[id.0] {
            closure.insert(obj.clone());
        }
    }
    closure
}

/// One robot-executable step of a task sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskStep {
    pub motion: String,
    pub inputs: Vec<ObjectNode>,
    pub outputs: Vec<ObjectNode>,
}

/// Flattens a tree into the executable schedule: one step per unit, in
/// dependency order.
pub fn task_sequence(graph: &FoonGraph, tree: &TaskTree) -> Vec<TaskStep> {
    tree.units()
        .iter()
        .map(|&id| {
            let u = graph.unit_value(id);
            TaskStep {
                motion: u.motion().to_string(),
                inputs: u.inputs().iter().cloned().collect(),
                outputs: u.outputs().iter().cloned().collect(),
            }
        })
        .collect()
}

enum AgendaItem {
    Goal(NodeId),
    Commit { unit: UnitId, goal: NodeId },
}

struct Search<'g> {
    graph: &'g FoonGraph,
    in_scene: Vec<bool>,
    solved: Vec<bool>,
    on_path: Vec<bool>,
    committed_flag: Vec<bool>,
    committed: Vec<UnitId>,
    producers: Vec<Vec<UnitId>>,
    unit_cost: Vec<f64>,
    cost: f64,
    best: Option<(f64, Vec<UnitId>)>,
}

impl<'g> Search<'g> {
    fn available(&self, node: NodeId) -> bool {
        self.in_scene[node.0] || self.solved[node.0]
    }

    fn explore(&mut self, agenda: &[AgendaItem]) {
        if let Some((best_cost, _)) = &self.best {
            if self.cost >= *best_cost {
                return; // bound: cannot improve on the best complete tree
            }
        }
        let Some((head, rest)) = agenda.split_first() else {
            self.best = Some((self.cost, self.committed.clone()));
            return;
        };
        match *head {
            AgendaItem::Goal(node) => {
                if self.available(node) {
                    self.explore(rest);
                    return;
                }
                if self.on_path[node.0] {
                    return; // cyclic requirement on this branch
                }
                self.on_path[node.0] = true;
                let candidates = self.producers[node.0].clone();
                for unit_id in candidates {
                    if self.committed_flag[unit_id.0] {
                        continue;
                    }
                    let unit = self.graph.unit(unit_id);
                    let mut next: Vec<AgendaItem> = unit
                        .inputs()
                        .iter()
                        .map(|&input| AgendaItem::Goal(input))
                        .collect();
                    next.push(AgendaItem::Commit {
                        unit: unit_id,
                        goal: node,
                    });
                    next.extend(rest.iter().map(|item| match *item {
                        AgendaItem::Goal(n) => AgendaItem::Goal(n),
                        AgendaItem::Commit { unit, goal } => AgendaItem::Commit { unit, goal },
                    }));
                    self.explore(&next);
                }
                self.on_path[node.0] = false;
            }
            AgendaItem::Commit { unit, goal } => {
                if self.available(goal) {
                    // The goal was produced as a side effect of solving this
                    // unit's inputs; drop the now-redundant candidate.
                    self.explore(rest);
                    return;
                }
                let outputs: Vec<NodeId> = self.graph.unit(unit).outputs().to_vec();
                let mut newly_solved = Vec::new();
                for o in outputs {
                    if !self.solved[o.0] {
                        self.solved[o.0] = true;
                        newly_solved.push(o);
                    }
                }
                self.committed_flag[unit.0] = true;
                self.committed.push(unit);
                self.cost += self.unit_cost[unit.0];
                self.explore(rest);
                self.cost -= self.unit_cost[unit.0];
                self.committed.pop();
                self.committed_flag[unit.0] = false;
                for o in newly_solved {
                    self.solved[o.0] = false;
                }
            }
        }
    }
}

/// Retrieves a task tree producing `goal` from `scene`, minimizing summed
/// motion cost (under all-zero costs, the first tree found wins).
/// Deterministic: candidate units are tried in insertion order, and
/// cost ties keep the earlier-found tree.
pub fn retrieve_task_tree(
    graph: &FoonGraph,
    goal: &ObjectNode,
    scene: &SceneInventory,
    costs: &MotionCostTable,
) -> Result<TaskTree, RetrievalError> {
    let goal_id = graph
        .object_id(goal)
        .ok_or_else(|| RetrievalError::GoalNotInGraph(goal.label()))?;
    if scene.contains(goal) {
        return Ok(TaskTree::new(Vec::new(), goal.clone()));
    }

    let mut producers: Vec<Vec<UnitId>> = vec![Vec::new(); graph.node_count()];
    let mut unit_cost = vec![0.0; graph.unit_count()];
    for (unit_id, unit) in graph.units() {
        for &o in unit.outputs() {
            producers[o.0].push(unit_id);
        }
        unit_cost[unit_id.0] = costs.cost(graph.unit_value(unit_id).motion());
    }
    let mut in_scene = vec![false; graph.node_count()];
    for obj in scene.objects() {
        if let Some(id) = graph.object_id(obj) {
            in_scene[id.0] = true;
        }
    }

    let mut search = Search {
        graph,
        in_scene,
        solved: vec![false; graph.node_count()],
        on_path: vec![false; graph.node_count()],
        committed_flag: vec![false; graph.unit_count()],
        committed: Vec::new(),
        producers,
        unit_cost,
        cost: 0.0,
        best: None,
    };
    search.explore(&[AgendaItem::Goal(goal_id)]);

    match search.best {
        Some((_, units)) => Ok(TaskTree::new(units, goal.clone())),
        None => Err(RetrievalError::Unreachable(goal.label())),
    }
}
