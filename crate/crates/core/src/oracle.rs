//! Brute-force feasibility for tiny instances. Shares no code with the
//! solver models: it enumerates job partitions, vehicle choices and simple
//! paths, times each candidate with a disjunctive difference-constraint
//! search, and accepts a candidate only if the validator does.

use std::collections::BTreeMap;

use crate::graph::{EdgeId, NodeId, Path};
use crate::instance::{Instance, TaskIdx, VehicleIdx};
use crate::schedule::{EdgeEvent, NodeEvent, RouteSchedule, Schedule};
use crate::validate::validate_schedule;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleBounds {
    pub max_tasks: usize,
    pub max_vehicles: usize,
    pub max_nodes: usize,
}

impl Default for OracleBounds {
    fn default() -> Self {
        OracleBounds {
            max_tasks: 4,
            max_vehicles: 3,
            max_nodes: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("instance too large for brute force: {0}")]
    TooLarge(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OracleStats {
    /// Route structures (job groups, orders, vehicles) looked at.
    pub structures: u64,
    /// Candidates whose timing was searched.
    pub timings: u64,
    /// Candidates the timing search accepted but the validator did not.
    pub rejected: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleVerdict {
    /// Minimum-distance witness.
    Feasible { witness: Schedule, distance: f64 },
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub verdict: OracleVerdict,
    pub stats: OracleStats,
}

impl OracleResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self.verdict, OracleVerdict::Feasible { .. })
    }

    pub fn distance(&self) -> Option<f64> {
        match self.verdict {
            OracleVerdict::Feasible { distance, .. } => Some(distance),
            OracleVerdict::Infeasible => None,
        }
    }
}

/// One route of a candidate: vehicle, task order and a path per leg.
#[derive(Debug, Clone)]
struct Leg {
    vehicle: VehicleIdx,
    tasks: Vec<TaskIdx>,
    paths: Vec<Path>,
    length: f64,
}

pub fn brute_force_feasible(inst: &Instance, bounds: &OracleBounds) -> Result<OracleResult, OracleError> {
    let (k, v, n) = (inst.num_real_tasks(), inst.vehicles.len(), inst.graph.nodes().len());
    if k > bounds.max_tasks || v > bounds.max_vehicles || n > bounds.max_nodes {
        return Err(OracleError::TooLarge(format!("{k} tasks, {v} vehicles, {n} nodes")));
    }
    let mut search = Search {
        inst,
        stats: OracleStats::default(),
        best: None,
        combos: BTreeMap::new(),
        paths: BTreeMap::new(),
    };
    if inst.jobs.is_empty() {
        return Ok(OracleResult {
            verdict: OracleVerdict::Feasible {
                witness: Schedule::default(),
                distance: 0.0,
            },
            stats: search.stats,
        });
    }
    let job_orders: Vec<Vec<Vec<TaskIdx>>> = inst.jobs.iter().map(|j| topological_orders(inst, &j.tasks)).collect();
    for groups in set_partitions(inst.jobs.len()) {
        search.groups(&groups, &job_orders);
    }
    let verdict = match search.best.take() {
        Some((distance, witness)) => OracleVerdict::Feasible { witness, distance },
        None => OracleVerdict::Infeasible,
    };
    Ok(OracleResult {
        verdict,
        stats: search.stats,
    })
}

struct Search<'a> {
    inst: &'a Instance,
    stats: OracleStats,
    best: Option<(f64, Schedule)>,
    /// Solo-feasible path combinations per (depot, task order), by length.
    combos: BTreeMap<(NodeId, Vec<TaskIdx>), Vec<(f64, Vec<Path>)>>,
    paths: BTreeMap<(NodeId, NodeId), Vec<Path>>,
}

impl Search<'_> {
    /// All ways to order the jobs of each group and pick vehicles.
    fn groups(&mut self, groups: &[Vec<usize>], job_orders: &[Vec<Vec<TaskIdx>>]) {
        let mut per_group: Vec<Vec<(VehicleIdx, Vec<TaskIdx>)>> = Vec::new();
        for grp in groups {
            let mut options = Vec::new();
            for perm in permutations(grp) {
                for tasks in sequences(&perm, job_orders) {
                    for v in 0..self.inst.vehicles.len() {
                        if perm.iter().all(|&j| self.inst.jobs[j].eligible.contains(&v)) {
                            options.push((v, tasks.clone()));
                        }
                    }
                }
            }
            if options.is_empty() {
                return;
            }
            per_group.push(options);
        }
        let mut pick = Vec::new();
        self.structures(&per_group, &mut pick);
    }

    fn structures(&mut self, per_group: &[Vec<(VehicleIdx, Vec<TaskIdx>)>], pick: &mut Vec<(VehicleIdx, Vec<TaskIdx>)>) {
        if pick.len() == per_group.len() {
            self.stats.structures += 1;
            let lists: Vec<Vec<(f64, Vec<Path>)>> = pick
                .iter()
                .map(|(v, tasks)| self.solo_combos(self.inst.vehicles[*v].depot, tasks).clone())
                .collect();
            if lists.iter().any(Vec::is_empty) {
                return;
            }
            let mut chosen = Vec::new();
            self.paths_product(pick, &lists, 0.0, &mut chosen);
            return;
        }
        for opt in per_group[pick.len()].clone() {
            pick.push(opt);
            self.structures(per_group, pick);
            pick.pop();
        }
    }

    fn paths_product(
        &mut self,
        pick: &[(VehicleIdx, Vec<TaskIdx>)],
        lists: &[Vec<(f64, Vec<Path>)>],
        acc: f64,
        chosen: &mut Vec<usize>,
    ) {
        let r = chosen.len();
        let rest: f64 = lists[r..].iter().map(|l| l[0].0).sum();
        if self.best.as_ref().is_some_and(|(b, _)| acc + rest >= *b - 1e-9) {
            return;
        }
        if r == lists.len() {
            let legs: Vec<Leg> = pick
                .iter()
                .zip(chosen.iter())
                .zip(lists)
                .map(|(((v, tasks), &i), l)| Leg {
                    vehicle: *v,
                    tasks: tasks.clone(),
                    paths: l[i].1.clone(),
                    length: l[i].0,
                })
                .collect();
            self.stats.timings += 1;
            if let Some(s) = time_candidate(self.inst, &legs) {
                if validate_schedule(&s, self.inst).is_ok_and(|rep| rep.ok) {
                    self.best = Some((acc, s));
                } else {
                    self.stats.rejected += 1;
                }
            }
            return;
        }
        for i in 0..lists[r].len() {
            chosen.push(i);
            self.paths_product(pick, lists, acc + lists[r][i].0, chosen);
            chosen.pop();
        }
    }

    fn simple_paths(&mut self, a: NodeId, b: NodeId) -> &Vec<Path> {
        let g = &self.inst.graph;
        self.paths.entry((a, b)).or_insert_with(|| {
            if a == b {
                vec![Path::empty(a)]
            } else {
                g.simple_paths(a, b)
            }
        })
    }

    fn solo_combos(&mut self, depot: NodeId, tasks: &[TaskIdx]) -> &Vec<(f64, Vec<Path>)> {
        let key = (depot, tasks.to_vec());
        if !self.combos.contains_key(&key) {
            let inst = self.inst;
            let mut stops = vec![depot];
            stops.extend(tasks.iter().map(|&k| inst.tasks[k].location));
            stops.push(depot);
            let options: Vec<Vec<Path>> = stops.windows(2).map(|w| self.simple_paths(w[0], w[1]).clone()).collect();
            let mut out = Vec::new();
            let mut cur = Vec::new();
            product(&options, &mut cur, &mut |legs| {
                if let Some(len) = solo_feasible(inst, tasks, legs) {
                    out.push((len, legs.to_vec()));
                }
            });
            out.sort_by(|a, b| a.0.total_cmp(&b.0));
            self.combos.insert(key.clone(), out);
        }
        &self.combos[&key]
    }
}

fn product(options: &[Vec<Path>], cur: &mut Vec<Path>, f: &mut impl FnMut(&[Path])) {
    if cur.len() == options.len() {
        f(cur);
        return;
    }
    for p in &options[cur.len()] {
        cur.push(p.clone());
        product(options, cur, f);
        cur.pop();
    }
}

/// Route length if the route alone meets windows, horizon and range.
fn solo_feasible(inst: &Instance, tasks: &[TaskIdx], legs: &[Path]) -> Option<f64> {
    let f = &inst.fleet;
    let len: f64 = legs.iter().map(|p| p.length).sum();
    if f.discharge_coeff * len / f.speed > f.full_charge() + 1e-9 {
        return None;
    }
    let mut t = 0.0;
    for (i, &k) in tasks.iter().enumerate() {
        let task = &inst.tasks[k];
        t = f64::max(t + legs[i].length / f.speed, task.window.lower);
        if t > task.window.upper + 1e-9 {
            return None;
        }
        t += task.service;
    }
    (t + legs[tasks.len()].length / f.speed <= f.horizon + 1e-9).then_some(len)
}

/// Restricted-growth enumeration of set partitions of `0..n`.
fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn go(i: usize, n: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(i);
            go(i + 1, n, cur, out);
            cur[b].pop();
        }
        cur.push(vec![i]);
        go(i + 1, n, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    go(0, n, &mut Vec::new(), &mut out);
    out
}

fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head.clone());
            out.push(p);
        }
    }
    out
}

/// Task orders of a job that respect its precedences.
fn topological_orders(inst: &Instance, tasks: &[TaskIdx]) -> Vec<Vec<TaskIdx>> {
    permutations(tasks)
        .into_iter()
        .filter(|p| {
            p.iter().enumerate().all(|(i, &k)| {
                inst.tasks[k]
                    .predecessors
                    .iter()
                    .all(|q| p[..i].contains(q) || !p.contains(q))
            })
        })
        .collect()
}

/// Concatenations of one task order per job, jobs in the given order.
fn sequences(jobs: &[usize], orders: &[Vec<Vec<TaskIdx>>]) -> Vec<Vec<TaskIdx>> {
    let mut out = vec![Vec::new()];
    for &j in jobs {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<TaskIdx>| {
                orders[j].iter().map(move |o| {
                    let mut p = prefix.clone();
                    p.extend(o);
                    p
                })
            })
            .collect();
    }
    out
}

/// `x[a] - x[b] >= c`.
#[derive(Debug, Clone, Copy)]
struct Diff {
    a: usize,
    b: usize,
    c: f64,
}

/// Least non-negative solution, or `None` on a positive cycle.
/// Variable 0 is the time origin.
fn least_solution(n: usize, cons: &[Diff]) -> Option<Vec<f64>> {
    let mut x = vec![0.0; n];
    for _ in 0..=n {
        let mut changed = false;
        for d in cons {
            if x[d.a] < x[d.b] + d.c - 1e-9 {
                x[d.a] = x[d.b] + d.c;
                changed = true;
            }
        }
        if x[0] > 1e-9 {
            return None;
        }
        if !changed {
            return Some(x);
        }
    }
    None
}

/// Per visit of one route: arrival variable, node, task, and the variable of
/// the edge entered afterwards.
struct Visit {
    x: usize,
    node: NodeId,
    task: Option<TaskIdx>,
    out: Option<(usize, EdgeId)>,
}

/// Times a candidate, or `None` if no conflict-free timing exists.
fn time_candidate(inst: &Instance, legs: &[Leg]) -> Option<Schedule> {
    let g = &inst.graph;
    let f = &inst.fleet;
    let mut nv = 1;
    let mut fresh = || {
        nv += 1;
        nv - 1
    };
    let mut hard = Vec::new();
    let upper = |v: usize, u: f64| Diff { a: 0, b: v, c: -u };
    let lower = |v: usize, l: f64| Diff { a: v, b: 0, c: l };
    let service = |k: Option<TaskIdx>| k.map_or(0.0, |k| inst.tasks[k].service);

    let mut routes: Vec<Vec<Visit>> = Vec::new();
    for leg in legs {
        let depot = inst.vehicles[leg.vehicle].depot;
        let mut visits = vec![Visit {
            x: fresh(),
            node: depot,
            task: None,
        out: None,
        }];
        for (i, p) in leg.paths.iter().enumerate() {
            let task = leg.tasks.get(i).copied();
            if p.is_empty() {
                visits.push(Visit {
                    x: fresh(),
                    node: p.start(),
                    task,
                    out: None,
                });
                continue;
            }
            for (j, w) in p.nodes.windows(2).enumerate() {
                let e = g.edge_between(w[0], w[1]).expect("path edge");
                let y = fresh();
                visits.last_mut().unwrap().out = Some((y, e));
                visits.push(Visit {
                    x: fresh(),
                    node: w[1],
                    task: if j + 2 == p.nodes.len() { task } else { None },
                    out: None,
                });
            }
        }
        for w in visits.windows(2) {
            let s = service(w[0].task);
            match w[0].out {
                Some((y, e)) => {
                    let d = g.edge(e).length / f.speed;
                    hard.push(Diff { a: y, b: w[0].x, c: s });
                    hard.push(Diff { a: w[1].x, b: y, c: d });
                    hard.push(Diff { a: y, b: w[1].x, c: -d });
                    hard.push(upper(y, f.horizon));
                }
                None => hard.push(Diff { a: w[1].x, b: w[0].x, c: s }),
            }
        }
        for vis in &visits {
            hard.push(upper(vis.x, f.horizon));
            if let Some(k) = vis.task {
                let win = inst.tasks[k].window;
                hard.push(lower(vis.x, win.lower));
                hard.push(upper(vis.x, win.upper));
                for &p in &inst.tasks[k].predecessors {
                    if let Some(pv) = visits.iter().find(|v| v.task == Some(p)) {
                        hard.push(Diff { a: vis.x, b: pv.x, c: 0.0 });
                    }
                }
            }
        }
        routes.push(visits);
    }

    let mut choices: Vec<Vec<Diff>> = Vec::new();
    // same vehicle: one route entirely before the other, plus recharge
    for a in 0..legs.len() {
        for b in a + 1..legs.len() {
            if legs[a].vehicle != legs[b].vehicle {
                continue;
            }
            let c = f.charge_coeff;
            let (fa, la) = (routes[a][0].x, routes[a].last().unwrap().x);
            let (fb, lb) = (routes[b][0].x, routes[b].last().unwrap().x);
            choices.push(vec![
                Diff { a: fb, b: la, c: c * legs[b].length },
                Diff { a: fa, b: lb, c: c * legs[a].length },
            ]);
        }
    }
    // node occupancy: (route, node, entry var, leave var, leave offset, exit edge)
    let mut stays = Vec::new();
    for (r, visits) in routes.iter().enumerate() {
        let mut i = 0;
        while i < visits.len() {
            let mut j = i;
            while j + 1 < visits.len() && visits[j].out.is_none() {
                j += 1;
            }
            let (leave, off, exit) = match visits[j].out {
                Some((y, e)) => (y, 0.0, Some(e)),
                None => (visits[j].x, service(visits[j].task), None),
            };
            stays.push((r, visits[i].node, visits[i].x, leave, off, exit));
            i = j + 1;
        }
    }
    for (i, s1) in stays.iter().enumerate() {
        for s2 in &stays[i + 1..] {
            if s1.0 == s2.0 || s1.1 != s2.1 || g.is_hub(s1.1) {
                continue;
            }
            let sep = if s1.5.is_some() && s1.5 == s2.5 { 1.0 } else { 0.0 };
            choices.push(vec![
                Diff { a: s2.2, b: s1.3, c: s1.4 + sep },
                Diff { a: s1.2, b: s2.3, c: s2.4 + sep },
            ]);
        }
    }
    let uses: Vec<(usize, usize, EdgeId)> = routes
        .iter()
        .enumerate()
        .flat_map(|(r, vs)| vs.iter().filter_map(move |v| v.out.map(|(y, e)| (r, y, e))))
        .collect();
    let dur = |e: EdgeId| g.edge(e).length / f.speed;
    let apart = |u1: (usize, usize, EdgeId), u2: (usize, usize, EdgeId), g1: f64, g2: f64| {
        [Diff { a: u1.1, b: u2.1, c: g2 }, Diff { a: u2.1, b: u1.1, c: g1 }]
    };
    for (i, &u1) in uses.iter().enumerate() {
        for &u2 in &uses[i + 1..] {
            if u1.0 == u2.0 || g.edge(u1.2).capacity != 1 {
                continue;
            }
            if u1.2 == u2.2 {
                choices.push(apart(u1, u2, 1.0, 1.0).to_vec());
            } else if g.reverse(u1.2) == u2.2 {
                choices.push(apart(u1, u2, dur(u1.2), dur(u2.2)).to_vec());
            }
        }
    }
    let wide: Vec<_> = uses.iter().filter(|u| g.edge(u.2).capacity == 2).copied().collect();
    for a in 0..wide.len() {
        for b in a + 1..wide.len() {
            for c in b + 1..wide.len() {
                let (u1, u2, u3) = (wide[a], wide[b], wide[c]);
                let seg = |e: EdgeId| e.min(g.reverse(e));
                if seg(u1.2) != seg(u2.2) || seg(u1.2) != seg(u3.2) || u1.0 == u2.0 || u1.0 == u3.0 || u2.0 == u3.0 {
                    continue;
                }
                let mut alt = Vec::new();
                for (p, q) in [(u1, u2), (u1, u3), (u2, u3)] {
                    alt.extend(apart(p, q, dur(p.2), dur(q.2)));
                }
                choices.push(alt);
            }
        }
    }

    let x = branch(nv, &mut hard, &choices)?;
    let routes = routes
        .iter()
        .zip(legs)
        .map(|(visits, leg)| {
            let mut nodes = Vec::new();
            let mut edges = Vec::new();
            for (i, vis) in visits.iter().enumerate() {
                let t_out = match (vis.out, visits.get(i + 1)) {
                    (Some((y, e)), _) => {
                        let ed = g.edge(e);
                        edges.push(EdgeEvent {
                            from: ed.from,
                            to: ed.to,
                            t_enter: x[y],
                        });
                        x[y]
                    }
                    (None, Some(next)) => x[next.x],
                    (None, None) => x[vis.x] + service(vis.task),
                };
                nodes.push(NodeEvent {
                    node: vis.node,
                    task: vis.task.map(|k| inst.tasks[k].id.clone()),
                    t_in: x[vis.x],
                    t_out,
                });
            }
            RouteSchedule {
                vehicle: inst.vehicles[leg.vehicle].id.clone(),
                depot: inst.vehicles[leg.vehicle].depot,
                tasks: leg.tasks.iter().map(|&k| inst.tasks[k].id.clone()).collect(),
                nodes,
                edges,
                length: leg.length,
            }
        })
        .collect();
    Some(Schedule { routes })
}

/// Branches on the first disjunction the current least solution violates.
fn branch(n: usize, hard: &mut Vec<Diff>, choices: &[Vec<Diff>]) -> Option<Vec<f64>> {
    let x = least_solution(n, hard)?;
    let holds = |d: &Diff| x[d.a] >= x[d.b] + d.c - 1e-9;
    let Some(open) = choices.iter().find(|alts| !alts.iter().any(holds)) else {
        return Some(x);
    };
    for d in open {
        hard.push(*d);
        let res = branch(n, hard, choices);
        hard.pop();
        if res.is_some() {
            return res;
        }
    }
    None
}
