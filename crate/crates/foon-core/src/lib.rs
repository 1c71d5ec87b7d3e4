//! Functional object-oriented network (FOON) library.
//!
//! A FOON is a bipartite directed graph of object-state nodes and motion
//! nodes encoding manipulation knowledge. This crate covers the full
//! pipeline:
//!
//! - [`graph`]: the data model (object/motion nodes, functional units, the
//!   universal graph, adjacency, one-mode projection, DOT export);
//! - [`ingest`]: subgraph file parsing, lexicon normalization, and change
//!   records;
//! - [`merge`]: deduplicating union of subgraphs into a universal network;
//! - [`analysis`]: degree/eigenvector/Katz centrality on the object
//!   projection and motion-frequency statistics;
//! - [`retrieval`]: task-tree search for a goal object given a scene, with
//!   an independent validator and reachability oracle;
//! - [`motion`]: motion-harmonics learning from demonstrations (angle
//!   transform, batch DTW, functional PCA) and constrained trajectory
//!   generation.

pub mod analysis;
pub mod graph;
pub mod ingest;
pub mod merge;
pub mod motion;
pub mod retrieval;

pub use analysis::{
    degree_centrality, eigenvector_centrality, katz_centrality, katz_defaults, motion_frequency,
    AnalysisError, CentralityReport, Measure, MotionHistogram,
};
pub use graph::{
    unit_equals, FoonGraph, FunctionalUnit, GraphError, MotionNode, Node, NodeId, ObjectGraph,
    ObjectNode, UnitId,
};
pub use ingest::{
    normalize, parse_subgraph, records_to_csv, serialize_subgraph, subgraphs_identical,
    ChangeRecord, Lexicon, LexiconError, NormalizeReport, ParseError, ParseErrorKind, Subgraph,
};
pub use merge::{export_universal, merge_all, merge_unit, MergeStats};
pub use motion::{
    angle_transform, batch_dtw_align, generate_trajectory, learn_motion_model, AlignedTrials,
    Constraint, ConstraintSet, GeneratedTrajectory, HarmonicSelector, LearnedMotion, MotionError,
    MotionModel, TransformDirection, TrialSet,
};
pub use retrieval::{
    parse_goal, parse_scene, reachability_closure, retrieve_task_tree, task_sequence,
    validate_task_tree, MotionCostTable, RetrievalError, SceneInventory, TaskStep, TaskTree,
    TreeViolation,
};
