//! Union of subgraphs into a universal FOON with functional-unit
//! deduplication.
//!
//! The universal graph starts empty; each incoming unit is compared
//! against every stored unit under [`unit_equals`] and added only when no
//! equal unit exists. Object nodes of an added unit that already exist are
//! referenced, not duplicated. The first occurrence of a unit wins, so a
//! duplicate's time window is discarded.

use crate::graph::{FoonGraph, FunctionalUnit};
use crate::ingest::{serialize_subgraph, Subgraph};

/// Tallies from a merge run. `units_examined` always equals
/// `units_added + units_duplicated`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MergeStats {
    pub units_examined: usize,
    pub units_added: usize,
    pub units_duplicated: usize,
    pub object_nodes_added: usize,
}

impl MergeStats {
    pub fn absorb(&mut self, other: MergeStats) {
        self.units_examined += other.units_examined;
        self.units_added += other.units_added;
        self.units_duplicated += other.units_duplicated;
        self.object_nodes_added += other.object_nodes_added;
    }
}

/// Merges one functional unit into the graph, returning the stats delta.
/// The graph is unchanged when an equal unit is already present.
pub fn merge_unit(graph: &mut FoonGraph, unit: &FunctionalUnit) -> MergeStats {
    let mut stats = MergeStats {
        units_examined: 1,
        ..MergeStats::default()
    };
    if graph.find_equal_unit(unit).is_some() {
        stats.units_duplicated = 1;
        return stats;
    }
    let (_, objects_added) = graph.add_unit(unit);
    stats.units_added = 1;
    stats.object_nodes_added = objects_added;
    stats
}

/// Folds every unit of every subgraph, in order, into a fresh universal
/// graph. The resulting unit set is the deduplicated union, so it is
/// independent of subgraph order (node-list indices may differ).
pub fn merge_all<'a, I>(subgraphs: I) -> (FoonGraph, MergeStats)
where
    I: IntoIterator<Item = &'a Subgraph>,
{
    let mut graph = FoonGraph::new();
    let mut stats = MergeStats::default();
    for sub in subgraphs {
        for unit in sub.units() {
            stats.absorb(merge_unit(&mut graph, unit));
        }
    }
    (graph, stats)
}

/// Writes the universal graph in the subgraph text format, one unit block
/// per stored unit in insertion order. The output is loadable by
/// [`crate::ingest::parse_subgraph`].
pub fn export_universal(graph: &FoonGraph) -> String {
    let units: Vec<FunctionalUnit> = graph.units().map(|(id, _)| graph.unit_value(id)).collect();
    serialize_subgraph(&Subgraph::new("universal", units))
}
