//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use cfevrp::assign::{compute_route_attributes, AssignModel};
use cfevrp::driver::{c_comsat_solve, comsat_solve, comsat_solve_excluding, Limits, Verdict};
use cfevrp::graph::{RawGraph, RawNode, RawSegment};
use cfevrp::instance::TaskIdx;
use cfevrp::oracle::{brute_force_feasible, OracleBounds};
use cfevrp::paths::PathsModel;
use cfevrp::route::{route_length, shortest_legs};
use cfevrp::router::RoutingModel;
use cfevrp::schedule::{EdgeEvent, NodeEvent, RouteSchedule, ScheduleFile};
use cfevrp::validate::{validate_schedule, ViolationKind};
use cfevrp::{Instance, NodeId, PlantGraph, Route, RouteSet, Schedule};
use common::{fixture, fixture_path, tiny_instance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("counterexample", counterexample),
        ("suboptimality-witness", suboptimality_witness),
        ("oracle-agreement", oracle_agreement),
        ("enumeration-counts", enumeration_counts),
        ("shortest-paths", shortest_paths),
        ("relaxation-ordering", relaxation_ordering),
        ("conditional-optimality", conditional_optimality),
        ("validator-fault-injection", fault_injection),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match res {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn task(inst: &Instance, id: &str) -> TaskIdx {
    inst.task_by_id(id).unwrap()
}

fn counterexample() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_cfevrp");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("schedule.json");
    let t0 = Instant::now();
    let status = Command::new(bin)
        .args(["solve", &fixture_path("counterexample.json"), "--out"])
        .arg(&out)
        .status()
        .unwrap();
    let secs = t0.elapsed().as_secs_f64();
    check(status.code() == Some(0), format!("solve exit {:?}", status.code()))?;
    let file = ScheduleFile::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let d = file.total_distance.unwrap_or(f64::NAN);
    check(d == 10.0 || d == 12.0, format!("total distance {d}"))?;
    let status = Command::new(bin)
        .args(["validate", &fixture_path("counterexample.json")])
        .arg(&out)
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    check(status.code() == Some(0), format!("validate exit {:?}", status.code()))?;
    check(secs < 10.0, format!("took {secs:.2}s"))?;
    Ok(format!("total distance {d}, validated, {secs:.3}s"))
}

fn suboptimality_witness() -> Outcome {
    let inst = fixture("counterexample.json");
    let (j11, j21, j31) = (task(&inst, "j11"), task(&inst, "j21"), task(&inst, "j31"));
    // rule out the order that serves j31 first
    let j31_first = RouteSet::new(vec![
        Route {
            depot: 1,
            tasks: vec![j11],
        },
        Route {
            depot: 6,
            tasks: vec![j31, j21],
        },
    ]);
    let out = comsat_solve_excluding(&inst, &Limits::default(), &[j31_first]);
    let (cr, _, paths) = out.routes.clone().ok_or("no feasible schedule")?;
    let r = cr.routes.iter().position(|r| r.depot == 6).ok_or("no route from node 6")?;
    check(cr.routes[r].tasks == vec![j21, j31], "v2 does not serve j21 first")?;
    check(out.stats.paths_calls > 0, "no path change")?;
    let detour = paths[r]
        .iter()
        .find(|p| p.nodes == vec![6, 7, 4, 3, 2])
        .ok_or_else(|| format!("no 6-7-4-3-2 leg in {:?}", paths[r]))?;
    check(detour.length == 4.0, format!("detour length {}", detour.length))?;
    let v2_len = route_length(&paths[r]);
    check(v2_len == 8.0, format!("v2 route length {v2_len}"))?;
    let total = out.total_distance().unwrap();
    let lb = brute_force_feasible(&inst, &OracleBounds::default()).unwrap().distance().unwrap();
    check(total == 12.0 && lb == 10.0, format!("total {total}, lower bound {lb}"))?;
    let rep = validate_schedule(out.schedule().unwrap(), &inst).unwrap();
    check(rep.ok, format!("schedule rejected: {rep}"))?;
    Ok(format!(
        "{} path changes, detour 6-7-4-3-2 of length 4, v2 length 8, total 12 > 10",
        out.stats.paths_calls
    ))
}

fn oracle_agreement() -> Outcome {
    let t0 = Instant::now();
    let (mut feasible, mut infeasible) = (0, 0);
    for seed in 0..50 {
        let inst = tiny_instance(seed);
        let oracle = brute_force_feasible(&inst, &OracleBounds::default()).unwrap();
        let out = comsat_solve(&inst, &Limits::unbounded());
        check(
            oracle.stats.rejected == 0,
            format!("seed {seed}: oracle timing accepted {} invalid candidates", oracle.stats.rejected),
        )?;
        match (&out.verdict, oracle.is_feasible()) {
            (Verdict::Feasible(s), true) => {
                let rep = validate_schedule(s, &inst).unwrap();
                check(rep.ok, format!("seed {seed}: solver schedule rejected: {rep}"))?;
                feasible += 1;
            }
            (Verdict::ProvenInfeasible, false) => infeasible += 1,
            (v, o) => return Err(format!("seed {seed}: solver {v:?}, oracle feasible={o}")),
        }
        if let cfevrp::oracle::OracleVerdict::Feasible { witness, .. } = &oracle.verdict {
            check(validate_schedule(witness, &inst).unwrap().ok, format!("seed {seed}: witness rejected"))?;
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    check(secs < 600.0, format!("took {secs:.1}s"))?;
    Ok(format!("50/50 agree ({feasible} feasible, {infeasible} infeasible), {secs:.2}s"))
}

/// Forward pass with waiting from `start`; end time back at the depot.
fn forward(inst: &Instance, depot: NodeId, tasks: &[TaskIdx], start: f64) -> Option<f64> {
    let g = &inst.graph;
    let f = &inst.fleet;
    let mut at = depot;
    let mut t = start;
    let mut dist = 0.0;
    for &k in tasks {
        let tk = &inst.tasks[k];
        dist += g.distance(at, tk.location);
        t = f64::max(t + g.distance(at, tk.location) / f.speed, tk.window.lower);
        if t > tk.window.upper {
            return None;
        }
        t += tk.service;
        at = tk.location;
    }
    dist += g.distance(at, depot);
    t += g.distance(at, depot) / f.speed;
    (t <= f.horizon && f.discharge_coeff * dist / f.speed <= f.full_charge()).then_some(t)
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    (0..items.len())
        .flat_map(|i| {
            let mut rest = items.to_vec();
            let head = rest.remove(i);
            permutations(&rest).into_iter().map(move |mut p| {
                p.insert(0, head);
                p
            })
        })
        .collect()
}

/// Route sets the routing model admits, by exhaustive construction.
fn brute_route_sets(inst: &Instance) -> BTreeSet<Vec<Route>> {
    fn partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for mut p in partitions(n - 1) {
            for b in 0..p.len() {
                let mut q = p.clone();
                q[b].push(n - 1);
                out.push(q);
            }
            p.push(vec![n - 1]);
            out.push(p);
        }
        out
    }
    let excl = inst.mutually_exclusive_jobs();
    let mut out = BTreeSet::new();
    for part in partitions(inst.jobs.len()) {
        // per group: every admissible (depot, task sequence)
        let options: Vec<Vec<Route>> = part
            .iter()
            .map(|grp| {
                let mut opts = Vec::new();
                for order in permutations(grp) {
                    if order.windows(2).any(|w| excl[w[0]].contains(&w[1])) {
                        continue;
                    }
                    let mut seqs: Vec<Vec<TaskIdx>> = vec![vec![]];
                    for &j in &order {
                        let job_orders: Vec<Vec<TaskIdx>> = permutations(&inst.jobs[j].tasks)
                            .into_iter()
                            .filter(|p| {
                                p.iter()
                                    .enumerate()
                                    .all(|(i, k)| inst.tasks[*k].predecessors.iter().all(|q| p[..i].contains(q)))
                            })
                            .collect();
                        seqs = seqs
                            .into_iter()
                            .flat_map(|s| {
                                job_orders.iter().map(move |o| {
                                    let mut s = s.clone();
                                    s.extend(o);
                                    s
                                })
                            })
                            .collect();
                    }
                    for tasks in seqs {
                        for &d in &inst.depots {
                            if forward(inst, d, &tasks, 0.0).is_some() {
                                opts.push(Route {
                                    depot: d,
                                    tasks: tasks.clone(),
                                });
                            }
                        }
                    }
                }
                opts
            })
            .collect();
        let mut acc: Vec<Vec<Route>> = vec![vec![]];
        for opts in &options {
            acc = acc
                .into_iter()
                .flat_map(|a| {
                    opts.iter().map(move |r| {
                        let mut a = a.clone();
                        a.push(r.clone());
                        a
                    })
                })
                .collect();
        }
        for rs in acc {
            out.insert(RouteSet::new(rs).routes);
        }
    }
    out
}

fn simple_path_count(g: &PlantGraph, a: NodeId, b: NodeId) -> usize {
    fn dfs(g: &PlantGraph, at: NodeId, b: NodeId, seen: &mut Vec<NodeId>) -> usize {
        if at == b {
            return 1;
        }
        let mut n = 0;
        for &e in g.out_edges(at) {
            let next = g.edge(e).to;
            if !seen.contains(&next) {
                seen.push(next);
                n += dfs(g, next, b, seen);
                seen.pop();
            }
        }
        n
    }
    dfs(g, a, b, &mut vec![a])
}

fn enumeration_counts() -> Outcome {
    // routing, three tasks
    let inst = fixture("counterexample.json");
    let sp = inst.graph.all_pairs_paths(&inst.locations());
    let mut model = RoutingModel::build(&inst, &sp, &[]).unwrap();
    let mut found = BTreeSet::new();
    while let Some((rs, _)) = model.solve(&inst).unwrap() {
        check(found.insert(rs.routes.clone()), "routing repeated a route set")?;
        check(found.len() <= 10_000, "routing does not terminate")?;
        model.block(&inst, &rs).unwrap();
    }
    let expected = brute_route_sets(&inst);
    check(
        found == expected,
        format!("routing gave {} route sets, brute force {}", found.len(), expected.len()),
    )?;
    let routes = found.len();

    // assignment, two routes and three vehicles
    let inst = fixture("three_vehicles.json");
    let cr = RouteSet::new(vec![
        Route {
            depot: 1,
            tasks: vec![task(&inst, "a1")],
        },
        Route {
            depot: 1,
            tasks: vec![task(&inst, "b1")],
        },
    ]);
    let legs = shortest_legs(&inst, &cr);
    let attrs = compute_route_attributes(&cr, &inst, &legs).unwrap();
    let mut model = AssignModel::build(&cr, &attrs, &inst, &[]).unwrap();
    let mut maps = BTreeSet::new();
    while let Some(ca) = model.solve().unwrap() {
        check(maps.insert(ca.vehicle.clone()), "assignment repeated a vehicle map")?;
        check(maps.len() <= 100, "assignment does not terminate")?;
        model.block(&ca).unwrap();
    }
    let mut expected = BTreeSet::new();
    let f = &inst.fleet;
    let allowed = |r: &Route, v: usize| {
        inst.vehicles[v].depot == r.depot && r.tasks.iter().all(|&k| inst.jobs[inst.tasks[k].job.unwrap()].eligible.contains(&v))
    };
    for v0 in 0..inst.vehicles.len() {
        for v1 in 0..inst.vehicles.len() {
            let (r0, r1) = (&cr.routes[0], &cr.routes[1]);
            if !allowed(r0, v0) || !allowed(r1, v1) {
                continue;
            }
            let ok = if v0 != v1 {
                forward(&inst, r0.depot, &r0.tasks, 0.0).is_some() && forward(&inst, r1.depot, &r1.tasks, 0.0).is_some()
            } else {
                // one after the other, recharging for the second route's length
                [(r0, r1, &legs[1]), (r1, r0, &legs[0])].iter().any(|(a, b, bl)| {
                    forward(&inst, a.depot, &a.tasks, 0.0)
                        .and_then(|end| forward(&inst, b.depot, &b.tasks, end + f.charge_coeff * route_length(bl)))
                        .is_some()
                })
            };
            if ok {
                expected.insert(vec![v0, v1]);
            }
        }
    }
    check(maps == expected, format!("assignment gave {maps:?}, brute force {expected:?}"))?;
    let num_maps = maps.len();

    // paths, one task on the seven-node plant: two legs
    let inst = fixture("counterexample.json");
    let cr = RouteSet::new(vec![Route {
        depot: 6,
        tasks: vec![task(&inst, "j21")],
    }]);
    let mut model = PathsModel::build(&inst, &cr, &[]).unwrap();
    let mut combos = BTreeSet::new();
    while let Some((ps, _)) = model.solve(&inst.graph).unwrap() {
        check(ps[0].iter().all(|p| p.is_simple()), "non-simple path")?;
        let key: Vec<Vec<NodeId>> = ps[0].iter().map(|p| p.nodes.clone()).collect();
        check(combos.insert(key), "paths repeated a combination")?;
        check(combos.len() <= 10_000, "paths do not terminate")?;
        model.block(&inst.graph, &ps).unwrap();
    }
    let expected = simple_path_count(&inst.graph, 6, 2) * simple_path_count(&inst.graph, 2, 6);
    check(
        combos.len() == expected,
        format!("paths gave {} combinations, DFS {expected}", combos.len()),
    )?;
    Ok(format!(
        "route sets {routes}, vehicle maps {num_maps}, path combinations {} (all exact)",
        combos.len()
    ))
}

fn random_graph(rng: &mut ChaCha8Rng) -> RawGraph {
    let n: u32 = rng.gen_range(2..=30);
    let mut pairs = BTreeSet::new();
    for v in 2..=n {
        let u = rng.gen_range(1..v);
        pairs.insert((u, v));
    }
    let extra = rng.gen_range(0..=2 * n);
    for _ in 0..extra {
        let (a, b) = (rng.gen_range(1..=n), rng.gen_range(1..=n));
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    RawGraph {
        nodes: (1..=n).map(|id| RawNode { id, hub: false }).collect(),
        segments: pairs
            .into_iter()
            .map(|(from, to)| RawSegment {
                from,
                to,
                length: rng.gen_range(1..=9) as f64,
                capacity: 1,
            })
            .collect(),
    }
}

fn floyd_warshall(raw: &RawGraph) -> Vec<Vec<f64>> {
    let n = raw.nodes.len();
    let mut d = vec![vec![f64::INFINITY; n + 1]; n + 1];
    for i in 1..=n {
        d[i][i] = 0.0;
    }
    for s in &raw.segments {
        let (a, b) = (s.from as usize, s.to as usize);
        d[a][b] = d[a][b].min(s.length);
        d[b][a] = d[b][a].min(s.length);
    }
    for k in 1..=n {
        for i in 1..=n {
            for j in 1..=n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

fn shortest_paths() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pairs = 0;
    for i in 0..100 {
        let raw = random_graph(&mut rng);
        let g = PlantGraph::from_raw(&raw).unwrap();
        let fw = floyd_warshall(&raw);
        for &a in g.nodes() {
            for &b in g.nodes() {
                let p = g.shortest_path(a, b);
                let walked: f64 = p
                    .nodes
                    .windows(2)
                    .map(|w| g.edge(g.edge_between(w[0], w[1]).expect("path edge")).length)
                    .sum();
                let want = fw[a as usize][b as usize];
                check(
                    g.distance(a, b) == want && p.length == want && walked == want,
                    format!("graph {i}: {a}->{b} gives {} but Floyd-Warshall {want}", p.length),
                )?;
                check(p.start() == a && p.end() == b && p.is_simple(), format!("graph {i}: bad path {a}->{b}"))?;
                pairs += 1;
            }
        }
    }
    Ok(format!("100 graphs, {pairs} pairs exact"))
}

fn relaxation_ordering() -> Outcome {
    let mut binding = Vec::new();
    for seed in 0..100 {
        let inst = tiny_instance(seed);
        let full = comsat_solve(&inst, &Limits::unbounded());
        let relaxed = c_comsat_solve(&inst, &Limits::unbounded());
        if full.is_feasible() {
            check(relaxed.is_feasible(), format!("seed {seed}: feasible but relaxation is not"))?;
        }
        if relaxed.is_feasible() && full.verdict == Verdict::ProvenInfeasible {
            binding.push(seed);
        }
    }
    let inst = fixture("capacity_conflict.json");
    let full = comsat_solve(&inst, &Limits::unbounded());
    let relaxed = c_comsat_solve(&inst, &Limits::unbounded());
    check(
        relaxed.is_feasible() && full.verdict == Verdict::ProvenInfeasible,
        "capacity fixture is not relaxed-feasible and infeasible",
    )?;
    Ok(format!(
        "100 fuzzed instances ordered; capacity binds on the fixture and on seeds {binding:?}"
    ))
}

fn conditional_optimality() -> Outcome {
    let mut checked = 0;
    let mut misses = Vec::new();
    for seed in 0..50 {
        let inst = tiny_instance(seed);
        let out = comsat_solve(&inst, &Limits::unbounded());
        if !out.is_feasible() || out.stats.paths_calls > 0 {
            continue;
        }
        checked += 1;
        let best = brute_force_feasible(&inst, &OracleBounds::default()).unwrap().distance().unwrap();
        let got = out.total_distance().unwrap();
        if got != best {
            misses.push(format!("seed {seed}: {got} vs optimum {best}"));
        }
    }
    if misses.is_empty() {
        Ok(format!("{checked} instances without path changes, all optimal"))
    } else {
        Err(format!(
            "{} of {checked} instances without path changes are not optimal ({})",
            misses.len(),
            misses.join("; ")
        ))
    }
}

// ---- fault injection -------------------------------------------------------

fn plant(nodes: &[(u32, bool)], segs: &[(u32, u32, u8)], vehicles: &[(&str, u32)], jobs: serde_json::Value, or: f64, t: f64) -> Instance {
    let depots: BTreeSet<u32> = vehicles.iter().map(|v| v.1).collect();
    let file = json!({
        "graph": {
            "nodes": nodes.iter().map(|&(id, hub)| json!({"id": id, "hub": hub})).collect::<Vec<_>>(),
            "segments": segs.iter().map(|&(a, b, c)| json!({"from": a, "to": b, "length": 1.0, "capacity": c})).collect::<Vec<_>>(),
        },
        "depots": depots,
        "fleet": {"OR": or, "C": 1.0, "D": 1.0, "rho": 1.0, "v": 1.0, "T": t},
        "vehicles": vehicles.iter().map(|&(id, d)| json!({"id": id, "depot": d})).collect::<Vec<_>>(),
        "jobs": jobs,
    });
    Instance::parse(&file.to_string()).unwrap()
}

fn job(id: &str, eligible: &[&str], tasks: &[(&str, u32, f64, &[&str])]) -> serde_json::Value {
    json!({
        "id": id,
        "eligible": eligible,
        "tasks": tasks.iter().map(|&(tid, loc, s, pre)| json!({
            "id": tid, "location": loc, "window": [0.0, 40.0], "service": s, "predecessors": pre,
        })).collect::<Vec<_>>(),
    })
}

/// Drives `vehicle` through `stops` = (node, task, leave no earlier than).
fn drive(inst: &Instance, vehicle: &str, start: f64, stops: &[(NodeId, Option<&str>, f64)]) -> RouteSchedule {
    let g = &inst.graph;
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut t = start;
    let mut length = 0.0;
    for (i, &(node, tk, not_before)) in stops.iter().enumerate() {
        let service = tk.map_or(0.0, |id| inst.tasks[task(inst, id)].service);
        let t_out = if i + 1 == stops.len() {
            t + service
        } else {
            f64::max(t + service, not_before)
        };
        nodes.push(NodeEvent {
            node,
            task: tk.map(str::to_string),
            t_in: t,
            t_out,
        });
        if let Some(&(next, _, _)) = stops.get(i + 1) {
            if next != node {
                let len = g.edge(g.edge_between(node, next).unwrap()).length;
                edges.push(EdgeEvent {
                    from: node,
                    to: next,
                    t_enter: t_out,
                });
                length += len;
                t = t_out + len / inst.fleet.speed;
            } else {
                t = t_out;
            }
        }
    }
    RouteSchedule {
        vehicle: vehicle.into(),
        depot: stops[0].0,
        tasks: stops.iter().filter_map(|s| s.1.map(str::to_string)).collect(),
        nodes,
        edges,
        length,
    }
}

fn shifted(r: &RouteSchedule, d: f64) -> RouteSchedule {
    let mut r = r.clone();
    for n in &mut r.nodes {
        n.t_in += d;
        n.t_out += d;
    }
    for e in &mut r.edges {
        e.t_enter += d;
    }
    r
}

struct Fault {
    name: &'static str,
    inst: Instance,
    base: Schedule,
    bad: Schedule,
    kind: ViolationKind,
}

fn sched(routes: Vec<RouteSchedule>) -> Schedule {
    Schedule { routes }
}

fn faults() -> Vec<Fault> {
    let mut out = Vec::new();

    // counterexample, solver output
    let inst = fixture("counterexample.json");
    let base = comsat_solve(&inst, &Limits::default()).schedule().unwrap().clone();
    let v1 = base.routes.iter().position(|r| r.vehicle == "v1").unwrap();
    let v2 = 1 - v1;
    let with = |i: usize, r: RouteSchedule| {
        let mut s = base.clone();
        s.routes[i] = r;
        s
    };
    out.push(Fault {
        name: "v1 starts one unit late",
        bad: with(v1, shifted(&base.routes[v1], 1.0)),
        kind: ViolationKind::TimeWindow,
        inst: inst.clone(),
        base: base.clone(),
    });
    out.push(Fault {
        name: "v1 starts half a unit early",
        bad: with(v1, shifted(&base.routes[v1], -0.5)),
        kind: ViolationKind::TimeWindow,
        inst: inst.clone(),
        base: base.clone(),
    });
    out.push(Fault {
        name: "v2 starts past the horizon",
        bad: with(v2, shifted(&base.routes[v2], 20.0)),
        kind: ViolationKind::TimeWindow,
        inst: inst.clone(),
        base: base.clone(),
    });
    let mut swapped = base.clone();
    swapped.routes[v1].vehicle = "v2".into();
    swapped.routes[v2].vehicle = "v1".into();
    out.push(Fault {
        name: "vehicles swapped between routes",
        bad: swapped,
        kind: ViolationKind::Eligibility,
        inst: inst.clone(),
        base: base.clone(),
    });
    let mut dropped = base.clone();
    dropped.routes.remove(v2);
    out.push(Fault {
        name: "v2 route dropped",
        bad: dropped,
        kind: ViolationKind::TaskCoverage,
        inst: inst.clone(),
        base: base.clone(),
    });
    // leave j11 one unit before its service ends, rest of the route earlier too
    let mut cut = base.routes[v1].clone();
    let at = cut.nodes.iter().position(|n| n.task.is_some()).unwrap();
    for n in &mut cut.nodes[at + 1..] {
        n.t_in -= 1.0;
        n.t_out -= 1.0;
    }
    cut.nodes[at].t_out -= 1.0;
    for e in &mut cut.edges[at..] {
        e.t_enter -= 1.0;
    }
    out.push(Fault {
        name: "service at j11 cut short",
        bad: with(v1, cut),
        kind: ViolationKind::Travel,
        inst: inst.clone(),
        base: base.clone(),
    });

    // precedence and job contiguity on a three-node line
    let line = [(1, true), (2, false), (3, false)];
    let segs = [(1, 2, 1), (2, 3, 1)];
    let inst = plant(
        &line,
        &segs,
        &[("v1", 1)],
        json!([job("c", &["v1"], &[("c1", 2, 1.0, &[]), ("c2", 3, 1.0, &["c1"])])]),
        20.0,
        40.0,
    );
    let base = sched(vec![drive(
        &inst,
        "v1",
        0.0,
        &[(1, None, 0.0), (2, Some("c1"), 0.0), (3, Some("c2"), 0.0), (2, None, 0.0), (1, None, 0.0)],
    )]);
    let bad = sched(vec![drive(
        &inst,
        "v1",
        0.0,
        &[(1, None, 0.0), (2, None, 0.0), (3, Some("c2"), 0.0), (2, Some("c1"), 0.0), (1, None, 0.0)],
    )]);
    out.push(Fault {
        name: "tasks of a job swapped against precedence",
        inst,
        base,
        bad,
        kind: ViolationKind::Precedence,
    });

    let inst = plant(
        &line,
        &segs,
        &[("v1", 1)],
        json!([
            job("c", &["v1"], &[("c1", 2, 1.0, &[]), ("c2", 2, 1.0, &[])]),
            job("a", &["v1"], &[("a1", 3, 1.0, &[])]),
        ]),
        20.0,
        40.0,
    );
    let base = sched(vec![drive(
        &inst,
        "v1",
        0.0,
        &[(1, None, 0.0), (2, Some("c1"), 0.0), (2, Some("c2"), 0.0), (3, Some("a1"), 0.0), (2, None, 0.0), (1, None, 0.0)],
    )]);
    let bad = sched(vec![drive(
        &inst,
        "v1",
        0.0,
        &[(1, None, 0.0), (2, Some("c1"), 0.0), (3, Some("a1"), 0.0), (2, Some("c2"), 0.0), (1, None, 0.0)],
    )]);
    out.push(Fault {
        name: "another job swapped into the middle of a job",
        inst,
        base,
        bad,
        kind: ViolationKind::JobContiguity,
    });

    let inst = plant(
        &line,
        &segs,
        &[("v1", 1), ("v2", 1)],
        json!([job("a", &["v2"], &[("a1", 2, 1.0, &[])])]),
        20.0,
        40.0,
    );
    let route = drive(&inst, "v2", 0.0, &[(1, None, 0.0), (2, Some("a1"), 0.0), (1, None, 0.0)]);
    let mut other = route.clone();
    other.vehicle = "v1".into();
    out.push(Fault {
        name: "route handed to an ineligible vehicle",
        inst,
        base: sched(vec![route]),
        bad: sched(vec![other]),
        kind: ViolationKind::Eligibility,
    });

    // two trips of one vehicle
    let inst = plant(
        &line,
        &segs,
        &[("v1", 1)],
        json!([
            job("a", &["v1"], &[("a1", 2, 1.0, &[])]),
            job("b", &["v1"], &[("b1", 3, 1.0, &[])]),
        ]),
        20.0,
        40.0,
    );
    let trip_a = |s: f64| drive(&inst, "v1", s, &[(1, None, 0.0), (2, Some("a1"), 0.0), (1, None, 0.0)]);
    let trip_b = |s: f64| {
        drive(
            &inst,
            "v1",
            s,
            &[(1, None, 0.0), (2, None, 0.0), (3, Some("b1"), 0.0), (2, None, 0.0), (1, None, 0.0)],
        )
    };
    // trip a ends at 3; trip b (length 4) may leave at 7
    let base = sched(vec![trip_a(0.0), trip_b(7.0)]);
    for (name, a, b) in [
        ("charging gap removed", 0.0, 3.0),
        ("charging gap shortened", 0.0, 6.5),
        ("second trip overlaps the first", 0.0, 1.0),
        ("trips swapped without recharge", 6.0, 0.0),
    ] {
        out.push(Fault {
            name,
            inst: inst.clone(),
            base: base.clone(),
            bad: sched(vec![trip_a(a), trip_b(b)]),
            kind: ViolationKind::ChargingGap,
        });
    }
    out.push(Fault {
        name: "second trip returns after the horizon",
        inst: inst.clone(),
        base: base.clone(),
        bad: sched(vec![trip_a(0.0), trip_b(36.0)]),
        kind: ViolationKind::TimeWindow,
    });

    // range: a detour makes the trip longer than the battery allows
    let inst = plant(
        &line,
        &segs,
        &[("v1", 1)],
        json!([job("a", &["v1"], &[("a1", 2, 1.0, &[])])]),
        3.0,
        40.0,
    );
    out.push(Fault {
        name: "detour beyond the operating range",
        base: sched(vec![drive(&inst, "v1", 0.0, &[(1, None, 0.0), (2, Some("a1"), 0.0), (1, None, 0.0)])]),
        bad: sched(vec![drive(
            &inst,
            "v1",
            0.0,
            &[(1, None, 0.0), (2, Some("a1"), 0.0), (3, None, 0.0), (2, None, 0.0), (1, None, 0.0)],
        )]),
        inst,
        kind: ViolationKind::OperatingRange,
    });

    // capacity breaches on a four-node line with hubs at both ends
    let line4 = [(1, true), (2, false), (3, false), (4, true)];
    let segs4 = [(1, 2, 1), (2, 3, 1), (3, 4, 1)];
    let inst = plant(
        &line4,
        &segs4,
        &[("v1", 1), ("v2", 4)],
        json!([
            job("a", &["v1"], &[("a1", 2, 1.0, &[])]),
            job("d", &["v2"], &[("d1", 2, 1.0, &[])]),
        ]),
        20.0,
        40.0,
    );
    let v2_route = drive(&inst, "v2", 0.0, &[(4, None, 0.0), (3, None, 0.0), (2, Some("d1"), 0.0), (3, None, 0.0), (4, None, 0.0)]);
    out.push(Fault {
        name: "v1 lingers at node 2 while v2 arrives",
        base: sched(vec![
            drive(&inst, "v1", 0.0, &[(1, None, 0.0), (2, Some("a1"), 0.0), (1, None, 0.0)]),
            v2_route.clone(),
        ]),
        bad: sched(vec![
            drive(&inst, "v1", 0.0, &[(1, None, 0.0), (2, Some("a1"), 2.5), (1, None, 0.0)]),
            v2_route,
        ]),
        inst,
        kind: ViolationKind::NodeCapacity,
    });

    let inst = plant(
        &line4,
        &segs4,
        &[("v1", 1), ("v3", 1)],
        json!([
            job("x", &["v1"], &[("x1", 4, 0.0, &[])]),
            job("y", &["v3"], &[("y1", 4, 0.0, &[])]),
        ]),
        20.0,
        40.0,
    );
    let through = |v: &str, s: f64, id: &'static str, back: f64| {
        drive(
            &inst,
            v,
            s,
            &[(1, None, 0.0), (2, None, 0.0), (3, None, 0.0), (4, Some(id), back), (3, None, 0.0), (2, None, 0.0), (1, None, 0.0)],
        )
    };
    out.push(Fault {
        name: "follower enters node 2 less than one unit behind",
        base: sched(vec![through("v1", 0.0, "x1", 10.0), through("v3", 1.0, "y1", 20.0)]),
        bad: sched(vec![through("v1", 0.0, "x1", 10.0), through("v3", 0.5, "y1", 20.0)]),
        inst: inst.clone(),
        kind: ViolationKind::NodeCapacity,
    });

    // two hubs joined by one segment
    let hubs = [(1, true), (2, true)];
    let inst = plant(
        &hubs,
        &[(1, 2, 1)],
        &[("v1", 1), ("v2", 2)],
        json!([
            job("p", &["v1"], &[("p1", 2, 0.0, &[])]),
            job("q", &["v2"], &[("q1", 1, 0.0, &[])]),
        ]),
        20.0,
        40.0,
    );
    let v1r = drive(&inst, "v1", 0.0, &[(1, None, 0.0), (2, Some("p1"), 0.0), (1, None, 0.0)]);
    let v2r = |s: f64| drive(&inst, "v2", s, &[(2, None, 0.0), (1, Some("q1"), 0.0), (2, None, 0.0)]);
    out.push(Fault {
        name: "head-on on a single-lane segment",
        base: sched(vec![v1r.clone(), v2r(2.0)]),
        bad: sched(vec![v1r, v2r(0.5)]),
        inst,
        kind: ViolationKind::EdgeCapacityOpposite,
    });

    let inst = plant(
        &hubs,
        &[(1, 2, 1)],
        &[("v1", 1), ("v2", 1)],
        json!([
            job("p", &["v1"], &[("p1", 2, 0.0, &[])]),
            job("q", &["v2"], &[("q1", 2, 0.0, &[])]),
        ]),
        20.0,
        40.0,
    );
    let go = |v: &str, id: &'static str, s: f64, back: f64| drive(&inst, v, s, &[(1, None, 0.0), (2, Some(id), back), (1, None, 0.0)]);
    out.push(Fault {
        name: "two vehicles enter a single-lane segment together",
        base: sched(vec![go("v1", "p1", 0.0, 5.0), go("v2", "q1", 1.0, 7.0)]),
        bad: sched(vec![go("v1", "p1", 0.0, 5.0), go("v2", "q1", 0.5, 7.0)]),
        inst,
        kind: ViolationKind::EdgeCapacityDirect,
    });

    let inst = plant(
        &hubs,
        &[(1, 2, 2)],
        &[("v1", 1), ("v2", 1), ("v3", 1)],
        json!([
            job("p", &["v1"], &[("p1", 2, 0.0, &[])]),
            job("q", &["v2"], &[("q1", 2, 0.0, &[])]),
            job("r", &["v3"], &[("r1", 2, 0.0, &[])]),
        ]),
        20.0,
        40.0,
    );
    let go = |v: &str, id: &'static str, s: f64, back: f64| drive(&inst, v, s, &[(1, None, 0.0), (2, Some(id), back), (1, None, 0.0)]);
    out.push(Fault {
        name: "three vehicles on a two-lane segment",
        base: sched(vec![go("v1", "p1", 0.0, 10.0), go("v2", "q1", 0.2, 12.0), go("v3", "r1", 1.0, 14.0)]),
        bad: sched(vec![go("v1", "p1", 0.0, 10.0), go("v2", "q1", 0.2, 12.0), go("v3", "r1", 0.4, 14.0)]),
        inst,
        kind: ViolationKind::EdgeCapacityDirect,
    });
    out
}

fn fault_injection() -> Outcome {
    let faults = faults();
    check(faults.len() == 20, format!("{} faults defined", faults.len()))?;
    for f in &faults {
        let base = validate_schedule(&f.base, &f.inst).unwrap();
        check(base.ok, format!("{}: unmutated schedule rejected: {base}", f.name))?;
        let bad = validate_schedule(&f.bad, &f.inst).map_err(|e| format!("{}: {e}", f.name))?;
        check(
            bad.has(f.kind),
            format!("{}: expected {:?}, got {:?}", f.name, f.kind, bad.kinds()),
        )?;
    }
    Ok("20/20 mutations rejected with the expected kind".into())
}

