//! Solver-free schedule checking against the problem requirements.
//!
//! Works on the schedule file alone: task coverage, job contiguity and
//! precedence, eligibility, windows and horizon, travel consistency,
//! operating range, charging gaps between routes of one vehicle, and node
//! and segment occupancy.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::graph::NodeId;
use crate::instance::{Instance, TaskIdx};
use crate::schedule::{RouteSchedule, Schedule};

pub const TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    NodeCapacity,
    EdgeCapacityDirect,
    EdgeCapacityOpposite,
    TimeWindow,
    Precedence,
    OperatingRange,
    Eligibility,
    ChargingGap,
    JobContiguity,
    /// A real task served zero or several times.
    TaskCoverage,
    /// Arrival times that do not follow from entry times and speed, or a
    /// departure before service ends.
    Travel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub route: Option<usize>,
    pub vehicle: Option<String>,
    pub time: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    pub fn kinds(&self) -> BTreeSet<ViolationKind> {
        self.violations.iter().map(|v| v.kind).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return writeln!(f, "ok");
        }
        for v in &self.violations {
            write!(f, "{:?}", v.kind)?;
            if let Some(r) = v.route {
                write!(f, " route={r}")?;
            }
            if let Some(veh) = &v.vehicle {
                write!(f, " vehicle={veh}")?;
            }
            if let Some(t) = v.time {
                write!(f, " t={t}")?;
            }
            writeln!(f, ": {}", v.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("malformed schedule: {0}")]
pub struct MalformedSchedule(pub String);

/// Occupancy of a node by one route: from arrival to the moment it leaves.
struct NodeStay {
    route: usize,
    node: NodeId,
    enter: f64,
    leave: f64,
    exit: Option<(NodeId, NodeId)>,
}

struct EdgeUse {
    route: usize,
    from: NodeId,
    to: NodeId,
    enter: f64,
    duration: f64,
}

/// `a >= b` up to tolerance.
fn ge(a: f64, b: f64) -> bool {
    a >= b - TOLERANCE
}

pub fn validate_schedule(sched: &Schedule, inst: &Instance) -> Result<ValidationReport, MalformedSchedule> {
    let mut out = Vec::new();
    let g = &inst.graph;
    let f = &inst.fleet;
    let mut push = |kind, route: Option<usize>, vehicle: Option<&str>, time: Option<f64>, detail: String| {
        out.push(Violation {
            kind,
            route,
            vehicle: vehicle.map(str::to_string),
            time,
            detail,
        })
    };

    let mut served: BTreeMap<TaskIdx, Vec<usize>> = BTreeMap::new();
    let mut stays = Vec::new();
    let mut uses = Vec::new();
    let mut by_vehicle: BTreeMap<usize, Vec<usize>> = BTreeMap::new();

    for (r, rs) in sched.routes.iter().enumerate() {
        let vid = rs.vehicle.as_str();
        let v = inst
            .vehicle_by_id(vid)
            .ok_or_else(|| MalformedSchedule(format!("route {r}: unknown vehicle {vid}")))?;
        by_vehicle.entry(v).or_default().push(r);
        check_shape(rs, r, inst)?;

        if inst.vehicles[v].depot != rs.depot {
            push(
                ViolationKind::Eligibility,
                Some(r),
                Some(vid),
                None,
                format!("vehicle is based at {} but the route runs from {}", inst.vehicles[v].depot, rs.depot),
            );
        }

        // task order as served
        let mut order: Vec<(TaskIdx, f64)> = Vec::new();
        for ev in &rs.nodes {
            if let Some(id) = &ev.task {
                let k = inst
                    .task_by_id(id)
                    .filter(|&k| k < inst.num_real_tasks())
                    .ok_or_else(|| MalformedSchedule(format!("route {r}: unknown task {id}")))?;
                if inst.tasks[k].location != ev.node {
                    return Err(MalformedSchedule(format!("route {r}: task {id} served away from its location")));
                }
                order.push((k, ev.t_in));
                served.entry(k).or_default().push(r);
            }
        }
        let listed: Vec<&str> = rs.tasks.iter().map(String::as_str).collect();
        let seen: Vec<&str> = order.iter().map(|&(k, _)| inst.tasks[k].id.as_str()).collect();
        if listed != seen {
            return Err(MalformedSchedule(format!("route {r}: task list does not match node events")));
        }

        // eligibility and contiguity
        let mut done_jobs: BTreeSet<usize> = BTreeSet::new();
        let mut prev_job = None;
        for &(k, _) in &order {
            let j = inst.tasks[k].job.expect("real task");
            let job = &inst.jobs[j];
            if prev_job != Some(j) {
                if !done_jobs.insert(j) {
                    push(
                        ViolationKind::JobContiguity,
                        Some(r),
                        Some(vid),
                        None,
                        format!("job {} is interrupted by another job", job.id),
                    );
                }
                if !job.eligible.contains(&v) {
                    push(
                        ViolationKind::Eligibility,
                        Some(r),
                        Some(vid),
                        None,
                        format!("vehicle is not eligible for job {}", job.id),
                    );
                }
            }
            prev_job = Some(j);
        }
        for &(k, t) in &order {
            for &p in &inst.tasks[k].predecessors {
                if let Some(&(_, tp)) = order.iter().find(|&&(q, _)| q == p) {
                    if !ge(t, tp) {
                        push(
                            ViolationKind::Precedence,
                            Some(r),
                            Some(vid),
                            Some(t),
                            format!("{} starts before its predecessor {}", inst.tasks[k].id, inst.tasks[p].id),
                        );
                    }
                }
            }
        }

        // windows and horizon
        for ev in &rs.nodes {
            if let Some(id) = &ev.task {
                let w = inst.tasks[inst.task_by_id(id).unwrap()].window;
                if !ge(ev.t_in, w.lower) || !ge(w.upper, ev.t_in) {
                    push(
                        ViolationKind::TimeWindow,
                        Some(r),
                        Some(vid),
                        Some(ev.t_in),
                        format!("{id} served outside [{}, {}]", w.lower, w.upper),
                    );
                }
            }
            if !ge(ev.t_in, 0.0) || !ge(f.horizon, ev.t_in) {
                push(
                    ViolationKind::TimeWindow,
                    Some(r),
                    Some(vid),
                    Some(ev.t_in),
                    format!("arrival at {} outside the horizon", ev.node),
                );
            }
        }
        for e in &rs.edges {
            if !ge(f.horizon, e.t_enter) {
                push(
                    ViolationKind::TimeWindow,
                    Some(r),
                    Some(vid),
                    Some(e.t_enter),
                    format!("edge {}->{} entered after the horizon", e.from, e.to),
                );
            }
        }

        // travel and service timing
        let service = |ev: &crate::schedule::NodeEvent| {
            ev.task.as_ref().map_or(0.0, |id| inst.tasks[inst.task_by_id(id).unwrap()].service)
        };
        let mut ei = 0;
        let mut length = 0.0;
        for (i, w) in rs.nodes.windows(2).enumerate() {
            let (a, b) = (&w[0], &w[1]);
            if a.node == b.node {
                if !ge(b.t_in, a.t_in + service(a)) {
                    push(
                        ViolationKind::Travel,
                        Some(r),
                        Some(vid),
                        Some(b.t_in),
                        format!("visit {} at {} starts before the previous service ends", i + 1, b.node),
                    );
                }
                continue;
            }
            let e = &rs.edges[ei];
            ei += 1;
            let len = g.edge(g.edge_between(e.from, e.to).unwrap()).length;
            length += len;
            let arrive = e.t_enter + len / f.speed;
            if !ge(e.t_enter, a.t_in + service(a)) || (b.t_in - arrive).abs() > TOLERANCE {
                push(
                    ViolationKind::Travel,
                    Some(r),
                    Some(vid),
                    Some(e.t_enter),
                    format!("edge {}->{} timing does not match speed and service", e.from, e.to),
                );
            }
        }
        if f.discharge_coeff * length / f.speed > f.full_charge() + TOLERANCE {
            push(
                ViolationKind::OperatingRange,
                Some(r),
                Some(vid),
                None,
                format!("route length {length} exceeds the operating range"),
            );
        }
        if (length - rs.length).abs() > TOLERANCE {
            return Err(MalformedSchedule(format!(
                "route {r}: declared length {} but edges add up to {length}",
                rs.length
            )));
        }

        // occupancy records
        let mut i = 0;
        let mut ei = 0;
        while i < rs.nodes.len() {
            let mut j = i;
            while j + 1 < rs.nodes.len() && rs.nodes[j + 1].node == rs.nodes[i].node {
                j += 1;
            }
            let exit = rs.edges.get(ei).filter(|_| j + 1 < rs.nodes.len());
            stays.push(NodeStay {
                route: r,
                node: rs.nodes[i].node,
                enter: rs.nodes[i].t_in,
                leave: exit.map_or(rs.nodes[j].t_in + service(&rs.nodes[j]), |e| e.t_enter),
                exit: exit.map(|e| (e.from, e.to)),
            });
            if let Some(e) = exit {
                let len = g.edge(g.edge_between(e.from, e.to).unwrap()).length;
                uses.push(EdgeUse {
                    route: r,
                    from: e.from,
                    to: e.to,
                    enter: e.t_enter,
                    duration: len / f.speed,
                });
                ei += 1;
            }
            i = j + 1;
        }
    }

    for k in inst.real_tasks() {
        let n = served.get(&k).map_or(0, Vec::len);
        if n != 1 {
            push(
                ViolationKind::TaskCoverage,
                None,
                None,
                None,
                format!("task {} served {n} times", inst.tasks[k].id),
            );
        }
    }
    // a job split over routes
    for job in &inst.jobs {
        let routes: BTreeSet<usize> = job.tasks.iter().filter_map(|k| served.get(k)).flatten().copied().collect();
        if routes.len() > 1 {
            push(
                ViolationKind::JobContiguity,
                None,
                None,
                None,
                format!("job {} spread over {} routes", job.id, routes.len()),
            );
        }
    }

    // routes of one vehicle run one after another with recharge time
    for (&v, rs) in &by_vehicle {
        for (a, &r1) in rs.iter().enumerate() {
            for &r2 in &rs[a + 1..] {
                let (s1, s2) = (&sched.routes[r1], &sched.routes[r2]);
                let c = f.charge_coeff;
                let fits = ge(s2.start(), s1.end() + c * s2.length) || ge(s1.start(), s2.end() + c * s1.length);
                if !fits {
                    push(
                        ViolationKind::ChargingGap,
                        Some(r2),
                        Some(&inst.vehicles[v].id),
                        Some(s2.start().min(s1.start())),
                        format!("routes {r1} and {r2} overlap or leave too little charging time"),
                    );
                }
            }
        }
    }

    for (a, s1) in stays.iter().enumerate() {
        for s2 in &stays[a + 1..] {
            if s1.route == s2.route || s1.node != s2.node || g.is_hub(s1.node) {
                continue;
            }
            let sep = if s1.exit.is_some() && s1.exit == s2.exit { 1.0 } else { 0.0 };
            if !ge(s2.enter, s1.leave + sep) && !ge(s1.enter, s2.leave + sep) {
                push(
                    ViolationKind::NodeCapacity,
                    Some(s2.route),
                    None,
                    Some(s1.enter.max(s2.enter)),
                    format!("routes {} and {} at node {} together", s1.route, s2.route, s1.node),
                );
            }
        }
    }

    let capacity = |u: &EdgeUse| g.edge(g.edge_between(u.from, u.to).unwrap()).capacity;
    let apart = |u1: &EdgeUse, u2: &EdgeUse, g1: f64, g2: f64| ge(u1.enter, u2.enter + g2) || ge(u2.enter, u1.enter + g1);
    for (a, u1) in uses.iter().enumerate() {
        for u2 in &uses[a + 1..] {
            if u1.route == u2.route || capacity(u1) != 1 {
                continue;
            }
            if (u1.from, u1.to) == (u2.from, u2.to) && !apart(u1, u2, 1.0, 1.0) {
                push(
                    ViolationKind::EdgeCapacityDirect,
                    Some(u2.route),
                    None,
                    Some(u1.enter.max(u2.enter)),
                    format!("routes {} and {} enter {}->{} within one time unit", u1.route, u2.route, u1.from, u1.to),
                );
            } else if (u1.from, u1.to) == (u2.to, u2.from) && !apart(u1, u2, u1.duration, u2.duration) {
                push(
                    ViolationKind::EdgeCapacityOpposite,
                    Some(u2.route),
                    None,
                    Some(u1.enter.max(u2.enter)),
                    format!("routes {} and {} meet head-on on {}-{}", u1.route, u2.route, u1.from, u1.to),
                );
            }
        }
    }
    let wide: Vec<&EdgeUse> = uses.iter().filter(|u| capacity(u) == 2).collect();
    for a in 0..wide.len() {
        for b in a + 1..wide.len() {
            for c in b + 1..wide.len() {
                let (u1, u2, u3) = (wide[a], wide[b], wide[c]);
                let seg = |u: &EdgeUse| (u.from.min(u.to), u.from.max(u.to));
                if seg(u1) != seg(u2) || seg(u1) != seg(u3) {
                    continue;
                }
                if u1.route == u2.route || u1.route == u3.route || u2.route == u3.route {
                    continue;
                }
                let d = |x: &EdgeUse, y: &EdgeUse| apart(x, y, x.duration, y.duration);
                if !d(u1, u2) && !d(u1, u3) && !d(u2, u3) {
                    push(
                        ViolationKind::EdgeCapacityDirect,
                        Some(u3.route),
                        None,
                        Some(u1.enter.max(u2.enter).max(u3.enter)),
                        format!("three routes on segment {}-{} at once", u1.from, u1.to),
                    );
                }
            }
        }
    }

    Ok(ValidationReport {
        ok: out.is_empty(),
        violations: out,
    })
}

/// Node and edge events must chain through the graph from depot to depot.
fn check_shape(rs: &RouteSchedule, r: usize, inst: &Instance) -> Result<(), MalformedSchedule> {
    let bad = |m: String| Err(MalformedSchedule(format!("route {r}: {m}")));
    let g = &inst.graph;
    let (Some(first), Some(last)) = (rs.nodes.first(), rs.nodes.last()) else {
        return bad("no node events".into());
    };
    if first.node != rs.depot || last.node != rs.depot {
        return bad("does not start and end at its depot".into());
    }
    if first.task.is_some() || last.task.is_some() {
        return bad("depot departure and return carry no task".into());
    }
    let times = rs
        .nodes
        .iter()
        .flat_map(|n| [n.t_in, n.t_out])
        .chain(rs.edges.iter().map(|e| e.t_enter));
    if times.into_iter().any(|t| !t.is_finite()) || !rs.length.is_finite() {
        return bad("non-finite time".into());
    }
    let mut ei = 0;
    for w in rs.nodes.windows(2) {
        if w[0].node == w[1].node {
            continue;
        }
        let Some(e) = rs.edges.get(ei) else {
            return bad("fewer edge events than moves".into());
        };
        if (e.from, e.to) != (w[0].node, w[1].node) || g.edge_between(e.from, e.to).is_none() {
            return bad(format!("edge event {}->{} does not connect its node events", e.from, e.to));
        }
        ei += 1;
    }
    if ei != rs.edges.len() {
        return bad("more edge events than moves".into());
    }
    Ok(())
}
