//! Seeded random generators and independent oracles shared by the
//! integration suites.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use foon_core::graph::{FoonGraph, FunctionalUnit, ObjectGraph, ObjectNode};
use foon_core::ingest::Subgraph;
use foon_core::retrieval::SceneInventory;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const NAMES: [&str; 12] = [
    "tomato", "knife", "bowl", "egg", "pan", "milk", "bread", "salt", "onion", "cup", "board",
    "oil",
];
const STATES: [&str; 8] = [
    "whole", "chopped", "clean", "dirty", "empty", "filled", "raw", "cooked",
];
const MOTIONS: [&str; 6] = ["chop", "pour", "mix", "bake", "cut", "place"];

pub fn random_object(rng: &mut ChaCha8Rng) -> ObjectNode {
    let name = NAMES[rng.gen_range(0..NAMES.len())];
    let state_count = rng.gen_range(1..=2);
    let states: BTreeSet<&str> = (0..state_count)
        .map(|_| STATES[rng.gen_range(0..STATES.len())])
        .collect();
    let contents: Vec<&str> = if rng.gen_bool(0.1) {
        (0..rng.gen_range(1..=2))
            .map(|_| NAMES[rng.gen_range(0..NAMES.len())])
            .collect()
    } else {
        Vec::new()
    };
    ObjectNode::new(name, states, contents).expect("generator provides valid objects")
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> FunctionalUnit {
    let inputs: Vec<ObjectNode> = (0..rng.gen_range(1..=3)).map(|_| random_object(rng)).collect();
    let outputs: Vec<ObjectNode> = (0..rng.gen_range(1..=3)).map(|_| random_object(rng)).collect();
    let motion = MOTIONS[rng.gen_range(0..MOTIONS.len())];
    let start = rng.gen_range(0..100);
    let end = start + rng.gen_range(0..30);
    FunctionalUnit::new(inputs, motion, outputs, (start, end))
        .expect("generator provides valid units")
}

pub fn random_subgraph(rng: &mut ChaCha8Rng, max_units: usize, source: &str) -> Subgraph {
    let count = rng.gen_range(0..=max_units);
    Subgraph::new(source, (0..count).map(|_| random_unit(rng)).collect())
}

pub fn random_foon(rng: &mut ChaCha8Rng, max_units: usize) -> FoonGraph {
    let mut graph = FoonGraph::new();
    for _ in 0..rng.gen_range(1..=max_units) {
        foon_core::merge::merge_unit(&mut graph, &random_unit(rng));
    }
    graph
}

/// A random scene: each graph object independently included, plus the odd
/// object the graph does not know.
pub fn random_scene(rng: &mut ChaCha8Rng, graph: &FoonGraph, keep_probability: f64) -> SceneInventory {
    let mut objects: Vec<ObjectNode> = graph
        .object_nodes()
        .filter(|_| rng.gen_bool(keep_probability))
        .map(|(_, o)| o.clone())
        .collect();
    if rng.gen_bool(0.3) {
        objects.push(
            ObjectNode::new("offstage prop", ["unused"], std::iter::empty::<&str>()).unwrap(),
        );
    }
    SceneInventory::new(objects)
}

/// A random directed multigraph on object nodes whose symmetrization is
/// connected (spanning tree plus extra edges), for the centrality oracles.
pub fn random_connected_object_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> ObjectGraph {
    let n = rng.gen_range(2..=max_nodes);
    let nodes: Vec<ObjectNode> = (0..n)
        .map(|i| {
            ObjectNode::new(&format!("node{i}"), ["s"], std::iter::empty::<&str>()).unwrap()
        })
        .collect();
    let mut edges: Vec<((usize, usize), u64)> = Vec::new();
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        let mult = rng.gen_range(1..=3);
        if rng.gen_bool(0.5) {
            edges.push(((parent, i), mult));
        } else {
            edges.push(((i, parent), mult));
        }
    }
    for _ in 0..rng.gen_range(0..=n) {
        let from = rng.gen_range(0..n);
        let to = rng.gen_range(0..n);
        edges.push(((from, to), rng.gen_range(1..=3)));
    }
    ObjectGraph::from_parts(nodes, edges).expect("indices in range")
}

/// Exhaustive oracle for the minimal tree size: tries every unit subset,
/// keeping those that can be fully executed from the scene (greedy closure
/// restricted to the subset applies every unit) and produce the goal.
pub fn exhaustive_min_tree_size(
    graph: &FoonGraph,
    goal: &ObjectNode,
    scene: &SceneInventory,
) -> Option<usize> {
    if scene.contains(goal) {
        return Some(0);
    }
    let units: Vec<FunctionalUnit> = graph.units().map(|(id, _)| graph.unit_value(id)).collect();
    let n = units.len();
    assert!(n <= 16, "oracle is exponential in the unit count");
    let mut best: Option<usize> = None;
    for mask in 0u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if let Some(b) = best {
            if size >= b {
                continue;
            }
        }
        let chosen: Vec<&FunctionalUnit> =
            (0..n).filter(|i| mask & (1 << i) != 0).map(|i| &units[i]).collect();
        let mut available: BTreeSet<ObjectNode> = scene.objects().clone();
        let mut applied = vec![false; chosen.len()];
        loop {
            let mut progressed = false;
            for (i, unit) in chosen.iter().enumerate() {
                if applied[i] {
                    continue;
                }
                if unit.inputs().iter().all(|o| available.contains(o)) {
                    applied[i] = true;
                    available.extend(unit.outputs().iter().cloned());
                    progressed = true;
                }
            }
            if !progressed {
                break;
            }
        }
        if applied.iter().all(|&a| a) && available.contains(goal) {
            best = Some(size);
        }
    }
    best
}

/// Canonical text form of a graph's unit set with time windows erased, for
/// order-independence comparisons.
pub fn canonical_unit_text(graph: &FoonGraph) -> String {
    let mut blocks: Vec<String> = graph
        .units()
        .map(|(id, _)| {
            let u = graph.unit_value(id);
            let neutral = FunctionalUnit::new(
                u.inputs().clone(),
                u.motion(),
                u.outputs().clone(),
                (0, 0),
            )
            .unwrap();
            foon_core::ingest::serialize_subgraph(&Subgraph::new("c", vec![neutral]))
        })
        .collect();
    blocks.sort();
    blocks.join("")
}

pub fn unit_set(graph: &FoonGraph) -> BTreeSet<FunctionalUnit> {
    graph.units().map(|(id, _)| graph.unit_value(id)).collect()
}

pub fn object_set(graph: &FoonGraph) -> BTreeSet<ObjectNode> {
    graph.object_nodes().map(|(_, o)| o.clone()).collect()
}
