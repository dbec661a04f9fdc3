//! Seeded random instances on thinned grid layouts.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{NodeId, RawGraph, RawNode, RawSegment};
use crate::instance::{FleetParams, Instance, InstanceError, InstanceFile, JobEntry, TaskEntry, VehicleEntry};

const MAX_RETRIES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub nodes: usize,
    pub vehicles: usize,
    pub jobs: usize,
    pub horizon: f64,
    /// Fraction of grid segments to delete, in `[0, 1)`.
    pub edge_reduction: f64,
    /// Number of vehicle types (1 to 3). Each job accepts one type.
    pub types: usize,
    /// Segment lengths are drawn from `1..=max_length`.
    pub max_length: u32,
    pub max_tasks_per_job: usize,
    pub capacity_two_prob: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            nodes: 15,
            vehicles: 2,
            jobs: 2,
            horizon: 20.0,
            edge_reduction: 0.0,
            types: 1,
            max_length: 3,
            max_tasks_per_job: 2,
            capacity_two_prob: 0.3,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GenerateError {
    #[error("bad generator parameters: {0}")]
    BadParams(String),
    #[error("could not thin the grid while keeping it connected")]
    GenerationFailed,
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// Segments of the full grid over nodes `1..=n`, laid out row by row.
pub fn grid_segments(n: usize) -> Vec<(NodeId, NodeId)> {
    let w = (n as f64).sqrt().ceil() as usize;
    let mut out = Vec::new();
    for i in 0..n {
        let (r, c) = (i / w, i % w);
        if c + 1 < w && i + 1 < n {
            out.push((i as NodeId + 1, i as NodeId + 2));
        }
        let below = (r + 1) * w + c;
        if below < n {
            out.push((i as NodeId + 1, below as NodeId + 1));
        }
    }
    out
}

fn connected(n: usize, segs: &[(NodeId, NodeId)]) -> bool {
    let mut adj = vec![Vec::new(); n + 1];
    for &(a, b) in segs {
        adj[a as usize].push(b as usize);
        adj[b as usize].push(a as usize);
    }
    let mut seen = vec![false; n + 1];
    let mut stack = vec![1];
    seen[1] = true;
    let mut count = 1;
    while let Some(x) = stack.pop() {
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                count += 1;
                stack.push(y);
            }
        }
    }
    count == n
}

fn thin(n: usize, rng: &mut ChaCha8Rng, reduction: f64) -> Option<Vec<(NodeId, NodeId)>> {
    let full = grid_segments(n);
    let target = (reduction * full.len() as f64).round() as usize;
    for _ in 0..MAX_RETRIES {
        let mut order = full.clone();
        order.shuffle(rng);
        let mut kept: BTreeSet<(NodeId, NodeId)> = full.iter().copied().collect();
        let mut removed = 0;
        for s in &order {
            if removed == target {
                break;
            }
            kept.remove(s);
            let v: Vec<_> = kept.iter().copied().collect();
            if connected(n, &v) {
                removed += 1;
            } else {
                kept.insert(*s);
            }
        }
        if removed == target {
            return Some(kept.into_iter().collect());
        }
    }
    None
}

fn round_window(center: f64, width: f64, t: f64) -> [f64; 2] {
    let lo = (center - width / 2.0).floor().max(0.0);
    let hi = (center + width / 2.0).ceil().min(t.floor());
    [lo.min(hi), hi]
}

/// Deterministic for a fixed `seed` and `params`.
pub fn generate(seed: u64, p: &GenParams) -> Result<Instance, GenerateError> {
    if p.nodes < 2 || p.vehicles == 0 {
        return Err(GenerateError::BadParams("need at least 2 nodes and 1 vehicle".into()));
    }
    if !(0.0..1.0).contains(&p.edge_reduction) {
        return Err(GenerateError::BadParams("edge reduction must lie in [0, 1)".into()));
    }
    if !(1..=3).contains(&p.types) || p.max_length == 0 || p.max_tasks_per_job == 0 || !(p.horizon > 0.0) {
        return Err(GenerateError::BadParams("types in 1..=3, positive lengths, tasks and horizon".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = p.nodes;
    let t = p.horizon;
    let segs = thin(n, &mut rng, p.edge_reduction).ok_or(GenerateError::GenerationFailed)?;

    let mut all: Vec<NodeId> = (1..=n as NodeId).collect();
    all.shuffle(&mut rng);
    let num_depots = p.vehicles.min(1 + p.vehicles / 4).min(n);
    let mut depots: Vec<NodeId> = all[..num_depots].to_vec();
    depots.sort_unstable();
    let others: Vec<NodeId> = if n > num_depots {
        all[num_depots..].to_vec()
    } else {
        all.clone()
    };

    let segments = segs
        .iter()
        .map(|&(a, b)| RawSegment {
            from: a,
            to: b,
            length: rng.gen_range(1..=p.max_length) as f64,
            capacity: if rng.gen_bool(p.capacity_two_prob) { 2 } else { 1 },
        })
        .collect();
    let graph = RawGraph {
        nodes: (1..=n as NodeId)
            .map(|id| RawNode {
                id,
                hub: depots.contains(&id),
            })
            .collect(),
        segments,
    };

    let types = p.types.min(p.vehicles);
    let vehicles: Vec<VehicleEntry> = (0..p.vehicles)
        .map(|i| VehicleEntry {
            id: format!("v{}", i + 1),
            depot: depots[i % depots.len()],
        })
        .collect();

    let mut jobs = Vec::new();
    for j in 0..p.jobs {
        let ty = rng.gen_range(0..types);
        let eligible = vehicles
            .iter()
            .enumerate()
            .filter(|(i, _)| i % types == ty)
            .map(|(_, v)| v.id.clone())
            .collect();
        let ntasks = rng.gen_range(1..=p.max_tasks_per_job);
        let mut centers: Vec<f64> = (0..ntasks).map(|_| rng.gen_range(0.2 * t..=0.9 * t)).collect();
        centers.sort_by(f64::total_cmp);
        let mut tasks: Vec<TaskEntry> = Vec::new();
        for (i, c) in centers.into_iter().enumerate() {
            let width = rng.gen_range(0.1 * t..=0.3 * t);
            let id = format!("j{}t{}", j + 1, i + 1);
            tasks.push(TaskEntry {
                location: *others.choose(&mut rng).unwrap(),
                window: round_window(c, width, t),
                service: rng.gen_range(1..=2) as f64,
                predecessors: tasks.last().map(|prev| vec![prev.id.clone()]).unwrap_or_default(),
                id,
            });
        }
        jobs.push(JobEntry {
            id: format!("j{}", j + 1),
            eligible,
            tasks,
        });
    }

    let file = InstanceFile {
        graph,
        depots,
        fleet: FleetParams {
            operating_range: t,
            charge_coeff: 1.0,
            discharge_coeff: 1.0,
            rho: 1.0,
            speed: 1.0,
            horizon: t,
        },
        vehicles,
        jobs,
    };
    Ok(Instance::from_file(&file)?)
}
