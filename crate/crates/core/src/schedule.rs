//! Timed schedules (CVS) and the schedule file format.

use serde::{Deserialize, Serialize};

use crate::graph::NodeId;

/// A stop at a node. Consecutive visits at the same node mean the vehicle
/// stayed put between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEvent {
    pub node: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
    pub t_in: f64,
    pub t_out: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeEvent {
    pub from: NodeId,
    pub to: NodeId,
    pub t_enter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSchedule {
    pub vehicle: String,
    pub depot: NodeId,
    pub tasks: Vec<String>,
    pub nodes: Vec<NodeEvent>,
    pub edges: Vec<EdgeEvent>,
    pub length: f64,
}

impl RouteSchedule {
    pub fn start(&self) -> f64 {
        self.nodes.first().map_or(0.0, |n| n.t_in)
    }

    pub fn end(&self) -> f64 {
        self.nodes.last().map_or(0.0, |n| n.t_in)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Schedule {
    pub routes: Vec<RouteSchedule>,
}

impl Schedule {
    pub fn total_distance(&self) -> f64 {
        self.routes.iter().map(|r| r.length).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeTag {
    Feasible,
    Infeasible,
    Aborted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subproblem {
    Router,
    Assign,
    CapacityVerifier,
    PathsChanger,
    RoutesVerifier,
}

/// One sub-problem call in the driver log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub subproblem: Subproblem,
    pub feasible: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub outcome: OutcomeTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_distance: Option<f64>,
    #[serde(default)]
    pub routes: Vec<RouteSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default)]
    pub log: Vec<Event>,
}

impl ScheduleFile {
    pub fn schedule(&self) -> Schedule {
        Schedule {
            routes: self.routes.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("schedule serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
