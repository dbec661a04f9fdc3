//! Routes, route sets and the per-leg paths they travel along.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, Path, PathMap};
use crate::instance::{Instance, TaskIdx};

/// Depot-anchored sequence of real tasks.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Route {
    pub depot: NodeId,
    pub tasks: Vec<TaskIdx>,
}

impl Route {
    /// Locations visited in order, depot at both ends.
    pub fn stops(&self, inst: &Instance) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.tasks.len() + 2);
        out.push(self.depot);
        out.extend(self.tasks.iter().map(|&k| inst.tasks[k].location));
        out.push(self.depot);
        out
    }

    pub fn num_legs(&self) -> usize {
        self.tasks.len() + 1
    }

    /// Task pairs `(k1, k2)` travelled directly, including the depot dummies.
    pub fn arcs(&self, inst: &Instance) -> Vec<(TaskIdx, TaskIdx)> {
        let o = inst.depot_index(self.depot).expect("route depot is a depot");
        let mut seq = vec![inst.start_task(o)];
        seq.extend(&self.tasks);
        seq.push(inst.end_task(o));
        seq.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn jobs(&self, inst: &Instance) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for &k in &self.tasks {
            let j = inst.tasks[k].job.expect("real task");
            if out.last() != Some(&j) {
                out.push(j);
            }
        }
        out
    }

    /// `El_r`: vehicles eligible for every job on the route.
    pub fn eligible(&self, inst: &Instance) -> BTreeSet<usize> {
        let mut set: BTreeSet<usize> = (0..inst.vehicles.len()).collect();
        for j in self.jobs(inst) {
            set = set.intersection(&inst.jobs[j].eligible).copied().collect();
        }
        set
    }

    /// Eligible vehicles that are also based at the route's depot.
    pub fn assignable(&self, inst: &Instance) -> BTreeSet<usize> {
        let mut set = self.eligible(inst);
        set.retain(|&v| inst.vehicles[v].depot == self.depot);
        set
    }

    pub fn service_total(&self, inst: &Instance) -> f64 {
        self.tasks.iter().map(|&k| inst.tasks[k].service).sum()
    }
}

/// One routing solution (an element of CR/PR).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct RouteSet {
    pub routes: Vec<Route>,
}

impl RouteSet {
    pub fn new(mut routes: Vec<Route>) -> Self {
        routes.sort();
        RouteSet { routes }
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    /// The true routing arcs defining this solution.
    pub fn arcs(&self, inst: &Instance) -> BTreeSet<(TaskIdx, TaskIdx)> {
        self.routes.iter().flat_map(|r| r.arcs(inst)).collect()
    }
}

/// Path per leg, per route (CP, SP, NP).
pub type PathSet = Vec<Vec<Path>>;

pub fn legs_from_map(inst: &Instance, routes: &RouteSet, map: &PathMap) -> PathSet {
    routes
        .routes
        .iter()
        .map(|r| r.stops(inst).windows(2).map(|w| map[&(w[0], w[1])].clone()).collect())
        .collect()
}

pub fn shortest_legs(inst: &Instance, routes: &RouteSet) -> PathSet {
    let map = inst.graph.all_pairs_paths(&inst.locations());
    legs_from_map(inst, routes, &map)
}

pub fn route_length(legs: &[Path]) -> f64 {
    legs.iter().map(|p| p.length).sum()
}

pub fn total_length(paths: &PathSet) -> f64 {
    paths.iter().map(|l| route_length(l)).sum()
}
