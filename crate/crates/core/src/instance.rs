//! Problem description: jobs, tasks, vehicles, depots and fleet constants,
//! plus the JSON instance format.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::graph::{GraphError, NodeId, PlantGraph, RawGraph};

pub type TaskIdx = usize;
pub type JobIdx = usize;
pub type VehicleIdx = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleetParams {
    /// Operating range of a fully charged vehicle (distance).
    #[serde(rename = "OR")]
    pub operating_range: f64,
    #[serde(rename = "C")]
    pub charge_coeff: f64,
    #[serde(rename = "D")]
    pub discharge_coeff: f64,
    #[serde(rename = "rho")]
    pub rho: f64,
    #[serde(rename = "v")]
    pub speed: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
}

impl FleetParams {
    /// Charge of a full battery, `OR / rho`.
    pub fn full_charge(&self) -> f64 {
        self.operating_range / self.rho
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Real,
    /// Start dummy of the depot with this index in `Instance::depots`.
    Start(usize),
    End(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: String,
    pub kind: TaskKind,
    /// Owning job; `None` for depot dummies.
    pub job: Option<JobIdx>,
    pub location: NodeId,
    pub window: TimeWindow,
    pub service: f64,
    pub predecessors: Vec<TaskIdx>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub id: String,
    pub tasks: Vec<TaskIdx>,
    pub eligible: BTreeSet<VehicleIdx>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: String,
    pub depot: NodeId,
}

/// Real tasks come first in `tasks`, followed by one start/end pair per depot.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub graph: PlantGraph,
    pub depots: Vec<NodeId>,
    pub fleet: FleetParams,
    pub vehicles: Vec<Vehicle>,
    pub jobs: Vec<Job>,
    pub tasks: Vec<Task>,
    num_real: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

// ---- file format ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub graph: RawGraph,
    pub depots: Vec<NodeId>,
    pub fleet: FleetParams,
    pub vehicles: Vec<VehicleEntry>,
    pub jobs: Vec<JobEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleEntry {
    pub id: String,
    pub depot: NodeId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobEntry {
    pub id: String,
    pub eligible: Vec<String>,
    pub tasks: Vec<TaskEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskEntry {
    pub id: String,
    pub location: NodeId,
    pub window: [f64; 2],
    pub service: f64,
    #[serde(default)]
    pub predecessors: Vec<String>,
}

fn violation(msg: impl Into<String>) -> InstanceError {
    InstanceError::InvariantViolation(msg.into())
}

impl Instance {
    pub fn parse(text: &str) -> Result<Self, InstanceError> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| InstanceError::Schema(e.to_string()))?;
        Self::from_file(&file)
    }

    pub fn from_file(file: &InstanceFile) -> Result<Self, InstanceError> {
        let graph = PlantGraph::from_raw(&file.graph)?;
        let f = file.fleet;
        for (name, x) in [
            ("OR", f.operating_range),
            ("C", f.charge_coeff),
            ("D", f.discharge_coeff),
            ("rho", f.rho),
            ("v", f.speed),
            ("T", f.horizon),
        ] {
            if !(x > 0.0) || !x.is_finite() {
                return Err(violation(format!("fleet parameter {name} must be positive, got {x}")));
            }
        }

        if file.depots.is_empty() {
            return Err(violation("depot set is empty"));
        }
        let mut depots = file.depots.clone();
        depots.sort_unstable();
        depots.dedup();
        if depots.len() != file.depots.len() {
            return Err(violation("depot listed twice"));
        }
        for &d in &depots {
            if !graph.contains(d) {
                return Err(violation(format!("depot {d} is not a node")));
            }
            if !graph.is_hub(d) {
                return Err(violation(format!("depot {d} is not a hub")));
            }
        }

        let mut vehicles = Vec::new();
        let mut vehicle_index = BTreeMap::new();
        for v in &file.vehicles {
            if vehicle_index.insert(v.id.clone(), vehicles.len()).is_some() {
                return Err(violation(format!("vehicle {} listed twice", v.id)));
            }
            if !depots.contains(&v.depot) {
                return Err(violation(format!("vehicle {} starts at {}, which is not a depot", v.id, v.depot)));
            }
            vehicles.push(Vehicle {
                id: v.id.clone(),
                depot: v.depot,
            });
        }

        let t = f.horizon;
        let mut jobs = Vec::new();
        let mut tasks = Vec::new();
        let mut task_index: BTreeMap<String, TaskIdx> = BTreeMap::new();
        let mut job_ids = BTreeSet::new();
        for (ji, je) in file.jobs.iter().enumerate() {
            if !job_ids.insert(je.id.clone()) {
                return Err(violation(format!("job {} listed twice", je.id)));
            }
            if je.tasks.is_empty() {
                return Err(violation(format!("job {} has no tasks", je.id)));
            }
            let mut eligible = BTreeSet::new();
            for vid in &je.eligible {
                let &vi = vehicle_index
                    .get(vid)
                    .ok_or_else(|| violation(format!("job {} names unknown vehicle {vid}", je.id)))?;
                eligible.insert(vi);
            }
            if eligible.is_empty() {
                return Err(violation(format!("job {} has an empty eligible set", je.id)));
            }
            let mut ids = Vec::new();
            for te in &je.tasks {
                if task_index.insert(te.id.clone(), tasks.len()).is_some() {
                    return Err(violation(format!("task {} listed twice", te.id)));
                }
                if !graph.contains(te.location) {
                    return Err(violation(format!("task {} is located at unknown node {}", te.id, te.location)));
                }
                let [l, u] = te.window;
                if !(0.0 <= l && l <= u && u <= t) {
                    return Err(violation(format!("task {} has window [{l}, {u}] outside [0, T]", te.id)));
                }
                if !(te.service >= 0.0) {
                    return Err(violation(format!("task {} has negative service time", te.id)));
                }
                ids.push(tasks.len());
                tasks.push(Task {
                    id: te.id.clone(),
                    kind: TaskKind::Real,
                    job: Some(ji),
                    location: te.location,
                    window: TimeWindow { lower: l, upper: u },
                    service: te.service,
                    predecessors: Vec::new(),
                });
            }
            jobs.push(Job {
                id: je.id.clone(),
                tasks: ids,
                eligible,
            });
        }
        for je in &file.jobs {
            for te in &je.tasks {
                let k = task_index[&te.id];
                for p in &te.predecessors {
                    let &pk = task_index
                        .get(p)
                        .ok_or_else(|| violation(format!("task {} has unknown predecessor {p}", te.id)))?;
                    if pk == k || tasks[pk].job != tasks[k].job {
                        return Err(violation(format!(
                            "predecessor {p} of task {} is not another task of the same job",
                            te.id
                        )));
                    }
                    tasks[k].predecessors.push(pk);
                }
            }
        }
        let num_real = tasks.len();
        if has_precedence_cycle(&tasks[..num_real]) {
            return Err(violation("precedence relation is cyclic"));
        }
        for (i, &d) in depots.iter().enumerate() {
            for (kind, prefix) in [(TaskKind::Start(i), "start"), (TaskKind::End(i), "end")] {
                tasks.push(Task {
                    id: format!("{prefix}@{d}"),
                    kind,
                    job: None,
                    location: d,
                    window: TimeWindow { lower: 0.0, upper: t },
                    service: 0.0,
                    predecessors: Vec::new(),
                });
            }
        }
        Ok(Instance {
            graph,
            depots,
            fleet: f,
            vehicles,
            jobs,
            tasks,
            num_real,
        })
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            graph: self.graph.to_raw(),
            depots: self.depots.clone(),
            fleet: self.fleet,
            vehicles: self
                .vehicles
                .iter()
                .map(|v| VehicleEntry {
                    id: v.id.clone(),
                    depot: v.depot,
                })
                .collect(),
            jobs: self
                .jobs
                .iter()
                .map(|j| JobEntry {
                    id: j.id.clone(),
                    eligible: j.eligible.iter().map(|&v| self.vehicles[v].id.clone()).collect(),
                    tasks: j
                        .tasks
                        .iter()
                        .map(|&k| {
                            let t = &self.tasks[k];
                            TaskEntry {
                                id: t.id.clone(),
                                location: t.location,
                                window: [t.window.lower, t.window.upper],
                                service: t.service,
                                predecessors: t.predecessors.iter().map(|&p| self.tasks[p].id.clone()).collect(),
                            }
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Pretty-printed JSON with a fixed key order.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn num_real_tasks(&self) -> usize {
        self.num_real
    }

    pub fn real_tasks(&self) -> std::ops::Range<TaskIdx> {
        0..self.num_real
    }

    pub fn start_task(&self, depot_idx: usize) -> TaskIdx {
        self.num_real + 2 * depot_idx
    }

    pub fn end_task(&self, depot_idx: usize) -> TaskIdx {
        self.num_real + 2 * depot_idx + 1
    }

    pub fn depot_index(&self, node: NodeId) -> Option<usize> {
        self.depots.iter().position(|&d| d == node)
    }

    pub fn task_by_id(&self, id: &str) -> Option<TaskIdx> {
        self.tasks.iter().position(|t| t.id == id)
    }

    pub fn vehicle_by_id(&self, id: &str) -> Option<VehicleIdx> {
        self.vehicles.iter().position(|v| v.id == id)
    }

    pub fn job_of(&self, k: TaskIdx) -> Option<JobIdx> {
        self.tasks[k].job
    }

    /// Nodes that need pairwise paths: task locations and depots.
    pub fn locations(&self) -> BTreeSet<NodeId> {
        self.tasks.iter().map(|t| t.location).collect()
    }

    /// `M_j`: jobs sharing no eligible vehicle with `j`.
    pub fn mutually_exclusive_jobs(&self) -> Vec<BTreeSet<JobIdx>> {
        (0..self.jobs.len())
            .map(|j| {
                (0..self.jobs.len())
                    .filter(|&i| i != j && self.jobs[i].eligible.is_disjoint(&self.jobs[j].eligible))
                    .collect()
            })
            .collect()
    }

    pub fn travel_time(&self, distance: f64) -> f64 {
        distance / self.fleet.speed
    }
}

fn has_precedence_cycle(tasks: &[Task]) -> bool {
    // 0 = unvisited, 1 = on stack, 2 = done
    fn visit(k: usize, tasks: &[Task], state: &mut [u8]) -> bool {
        match state[k] {
            1 => return true,
            2 => return false,
            _ => {}
        }
        state[k] = 1;
        for &p in &tasks[k].predecessors {
            if visit(p, tasks, state) {
                return true;
            }
        }
        state[k] = 2;
        false
    }
    let mut state = vec![0u8; tasks.len()];
    (0..tasks.len()).any(|k| visit(k, tasks, &mut state))
}
