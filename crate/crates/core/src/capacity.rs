//! Capacity verification: time every node and edge visit of the assigned
//! routes so that no node or road segment is over capacity.

use std::collections::BTreeMap;

use cfevrp_smt::{Context, Formula, LinExpr, Model, SolveResult, VarRef};

use crate::assign::Assignment;
use crate::graph::{EdgeId, NodeId};
use crate::instance::{Instance, TaskIdx};
use crate::route::{route_length, PathSet, RouteSet};
use crate::schedule::{EdgeEvent, NodeEvent, RouteSchedule, Schedule};
use crate::{smt_err, SolveError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Visit {
    pub node: NodeId,
    pub task: Option<TaskIdx>,
}

/// How a route moves from one visit to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    /// Next visit is at the same node (co-located tasks).
    Stay,
    Edge(EdgeId),
}

/// The node list `NL_r` and edge list `EL_r` of one route, with the task
/// served at each visit.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitList {
    pub visits: Vec<Visit>,
    /// `steps[i]` leads from `visits[i]` to `visits[i + 1]`.
    pub steps: Vec<Step>,
}

impl VisitList {
    /// Node sequence with stays collapsed.
    pub fn nodes(&self) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = Vec::new();
        for v in &self.visits {
            if out.last() != Some(&v.node) {
                out.push(v.node);
            }
        }
        out
    }

    pub fn edges(&self) -> Vec<EdgeId> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                Step::Edge(e) => Some(*e),
                Step::Stay => None,
            })
            .collect()
    }
}

pub fn build_visit_lists(inst: &Instance, cr: &RouteSet, paths: &PathSet) -> Result<Vec<VisitList>, SolveError> {
    let g = &inst.graph;
    let mut out = Vec::new();
    for (r, route) in cr.routes.iter().enumerate() {
        let stops = route.stops(inst);
        let legs = paths
            .get(r)
            .filter(|l| l.len() == stops.len() - 1)
            .ok_or_else(|| SolveError::BrokenChain(format!("route {r} has the wrong number of legs")))?;
        let mut visits = vec![Visit {
            node: route.depot,
            task: None,
        }];
        let mut steps = Vec::new();
        for (i, leg) in legs.iter().enumerate() {
            if leg.start() != stops[i] || leg.end() != stops[i + 1] {
                return Err(SolveError::BrokenChain(format!(
                    "leg {i} of route {r} runs {}->{} instead of {}->{}",
                    leg.start(),
                    leg.end(),
                    stops[i],
                    stops[i + 1]
                )));
            }
            let task = route.tasks.get(i).copied();
            if leg.is_empty() {
                steps.push(Step::Stay);
                visits.push(Visit { node: stops[i + 1], task });
                continue;
            }
            for (j, w) in leg.nodes.windows(2).enumerate() {
                let e = g
                    .edge_between(w[0], w[1])
                    .ok_or_else(|| SolveError::BrokenChain(format!("no edge {}->{}", w[0], w[1])))?;
                steps.push(Step::Edge(e));
                let last = j + 2 == leg.nodes.len();
                visits.push(Visit {
                    node: w[1],
                    task: if last { task } else { None },
                });
            }
        }
        out.push(VisitList { visits, steps });
    }
    Ok(out)
}

/// Number of pairwise conflict constraints emitted, by kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConstraintCounts {
    pub node: usize,
    pub edge_direct: usize,
    pub edge_opposite: usize,
    /// Triples of uses of a capacity-2 segment.
    pub edge_shared: usize,
    pub same_vehicle: usize,
}

/// Maximal run of visits of one route at one node.
struct Block {
    route: usize,
    node: NodeId,
    first: usize,
    last: usize,
    exit: Option<(usize, EdgeId)>,
}

pub struct CapacityModel {
    ctx: Context,
    x: Vec<Vec<VarRef>>,
    y: Vec<Vec<Option<VarRef>>>,
    pub counts: ConstraintCounts,
}

impl CapacityModel {
    /// With `relaxed` set, node and edge capacities are ignored and only the
    /// timing of each route (and the spacing of routes on one vehicle) is kept.
    pub fn build(
        inst: &Instance,
        ca: &Assignment,
        paths: &PathSet,
        lists: &[VisitList],
        relaxed: bool,
    ) -> Result<Self, SolveError> {
        let g = &inst.graph;
        let f = &inst.fleet;
        let mut ctx = Context::new();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (r, vl) in lists.iter().enumerate() {
            x.push(
                (0..vl.visits.len())
                    .map(|i| ctx.real_var(format!("x_{r}_{i}_{}", vl.visits[i].node)))
                    .collect::<Vec<_>>(),
            );
            y.push(
                vl.steps
                    .iter()
                    .enumerate()
                    .map(|(i, s)| match s {
                        Step::Edge(e) => {
                            let ed = g.edge(*e);
                            Some(ctx.real_var(format!("y_{r}_{i}_{}_{}", ed.from, ed.to)))
                        }
                        Step::Stay => None,
                    })
                    .collect::<Vec<_>>(),
            );
        }
        let mut counts = ConstraintCounts::default();
        let service = |v: &Visit| v.task.map_or(0.0, |k| inst.tasks[k].service);

        for (r, vl) in lists.iter().enumerate() {
            let xr = &x[r];
            for (i, step) in vl.steps.iter().enumerate() {
                let s_i = service(&vl.visits[i]);
                match step {
                    Step::Stay => ctx.assert(Formula::diff_ge(xr[i + 1], xr[i], s_i)).map_err(smt_err)?,
                    Step::Edge(e) => {
                        let yv = y[r][i].unwrap();
                        ctx.assert(Formula::diff_ge(yv, xr[i], s_i)).map_err(smt_err)?;
                        let travel = g.edge(*e).length / f.speed;
                        ctx.assert(LinExpr::var(xr[i + 1]).minus(yv).eq(travel)).map_err(smt_err)?;
                        ctx.assert(LinExpr::var(yv).le(f.horizon)).map_err(smt_err)?;
                    }
                }
            }
            let mut at: BTreeMap<TaskIdx, usize> = BTreeMap::new();
            for (i, v) in vl.visits.iter().enumerate() {
                ctx.assert(LinExpr::var(xr[i]).le(f.horizon)).map_err(smt_err)?;
                if let Some(k) = v.task {
                    let w = inst.tasks[k].window;
                    ctx.assert(LinExpr::var(xr[i]).ge(w.lower)).map_err(smt_err)?;
                    ctx.assert(LinExpr::var(xr[i]).le(w.upper)).map_err(smt_err)?;
                    at.insert(k, i);
                }
            }
            for (&k, &i) in &at {
                for p in &inst.tasks[k].predecessors {
                    if let Some(&ip) = at.get(p) {
                        ctx.assert(Formula::diff_ge(xr[i], xr[ip], 0.0)).map_err(smt_err)?;
                    }
                }
            }
        }

        // Routes sharing a vehicle: one after the other, with a recharge gap.
        for v in 0..inst.vehicles.len() {
            let mine = ca.routes_of(v);
            if let [r] = mine[..] {
                ctx.assert(LinExpr::var(x[r][0]).ge(ca.start[r])).map_err(smt_err)?;
            }
            for (a, &r1) in mine.iter().enumerate() {
                for &r2 in &mine[a + 1..] {
                    let (f1, l1) = (x[r1][0], *x[r1].last().unwrap());
                    let (f2, l2) = (x[r2][0], *x[r2].last().unwrap());
                    let c = f.charge_coeff;
                    ctx.assert(Formula::or([
                        Formula::diff_ge(f2, l1, c * route_length(&paths[r2])),
                        Formula::diff_ge(f1, l2, c * route_length(&paths[r1])),
                    ]))
                    .map_err(smt_err)?;
                    counts.same_vehicle += 1;
                }
            }
        }

        if !relaxed {
            let blocks = node_blocks(lists);
            for (a, b1) in blocks.iter().enumerate() {
                for b2 in &blocks[a + 1..] {
                    if b1.route == b2.route || b1.node != b2.node || g.is_hub(b1.node) {
                        continue;
                    }
                    let sep = match (b1.exit, b2.exit) {
                        (Some((_, e1)), Some((_, e2))) if e1 == e2 => 1.0,
                        _ => 0.0,
                    };
                    let after = |later: &Block, earlier: &Block| -> Formula {
                        let xl = x[later.route][later.first];
                        match earlier.exit {
                            Some((step, _)) => Formula::diff_ge(xl, y[earlier.route][step].unwrap(), sep),
                            None => {
                                let last = x[earlier.route][earlier.last];
                                let s = service(&lists[earlier.route].visits[earlier.last]);
                                Formula::diff_ge(xl, last, s + sep)
                            }
                        }
                    };
                    ctx.assert(Formula::or([after(b1, b2), after(b2, b1)])).map_err(smt_err)?;
                    counts.node += 1;
                }
            }

            // (route, step, edge) for every edge traversal
            let uses: Vec<(usize, usize, EdgeId)> = lists
                .iter()
                .enumerate()
                .flat_map(|(r, vl)| {
                    vl.steps.iter().enumerate().filter_map(move |(i, s)| match s {
                        Step::Edge(e) => Some((r, i, *e)),
                        Step::Stay => None,
                    })
                })
                .collect();
            let yv = |u: &(usize, usize, EdgeId)| y[u.0][u.1].unwrap();
            let apart = |u1: &(usize, usize, EdgeId), u2: &(usize, usize, EdgeId), gap1: f64, gap2: f64| {
                Formula::or([Formula::diff_ge(yv(u1), yv(u2), gap2), Formula::diff_ge(yv(u2), yv(u1), gap1)])
            };
            for (a, u1) in uses.iter().enumerate() {
                for u2 in &uses[a + 1..] {
                    if u1.0 == u2.0 {
                        continue;
                    }
                    let (e1, e2) = (u1.2, u2.2);
                    if g.edge(e1).capacity != 1 {
                        continue;
                    }
                    if e1 == e2 {
                        ctx.assert(apart(u1, u2, 1.0, 1.0)).map_err(smt_err)?;
                        counts.edge_direct += 1;
                    } else if g.reverse(e1) == e2 {
                        let (d1, d2) = (g.edge(e1).length / f.speed, g.edge(e2).length / f.speed);
                        ctx.assert(apart(u1, u2, d1, d2)).map_err(smt_err)?;
                        counts.edge_opposite += 1;
                    }
                }
            }
            // A capacity-2 segment never carries three vehicles at once: among
            // any three traversals from distinct routes, two are disjoint in time.
            let mut by_segment: BTreeMap<EdgeId, Vec<(usize, usize, EdgeId)>> = BTreeMap::new();
            for u in &uses {
                if g.edge(u.2).capacity == 2 {
                    by_segment.entry(u.2.min(g.reverse(u.2))).or_default().push(*u);
                }
            }
            for list in by_segment.values() {
                for a in 0..list.len() {
                    for b in a + 1..list.len() {
                        for c in b + 1..list.len() {
                            let (u1, u2, u3) = (&list[a], &list[b], &list[c]);
                            if u1.0 == u2.0 || u1.0 == u3.0 || u2.0 == u3.0 {
                                continue;
                            }
                            let d = |u: &(usize, usize, EdgeId)| g.edge(u.2).length / f.speed;
                            ctx.assert(Formula::or([
                                apart(u1, u2, d(u1), d(u2)),
                                apart(u1, u3, d(u1), d(u3)),
                                apart(u2, u3, d(u2), d(u3)),
                            ]))
                            .map_err(smt_err)?;
                            counts.edge_shared += 1;
                        }
                    }
                }
            }
        }
        Ok(CapacityModel { ctx, x, y, counts })
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.ctx.set_seed(seed);
    }

    pub fn set_deadline(&mut self, deadline: Option<std::time::Instant>) {
        self.ctx.set_deadline(deadline);
    }

    pub fn context(&self) -> &Context {
        &self.ctx
    }

    pub fn solve(
        &mut self,
        inst: &Instance,
        cr: &RouteSet,
        ca: &Assignment,
        paths: &PathSet,
        lists: &[VisitList],
    ) -> Result<Option<Schedule>, SolveError> {
        match self.ctx.check() {
            SolveResult::Sat(m) => Ok(Some(self.decode(&m, inst, cr, ca, paths, lists))),
            SolveResult::Unsat => Ok(None),
            SolveResult::Interrupted => Err(SolveError::Interrupted),
        }
    }

    fn decode(
        &self,
        m: &Model,
        inst: &Instance,
        cr: &RouteSet,
        ca: &Assignment,
        paths: &PathSet,
        lists: &[VisitList],
    ) -> Schedule {
        let g = &inst.graph;
        let routes = lists
            .iter()
            .enumerate()
            .map(|(r, vl)| {
                let xs: Vec<f64> = self.x[r].iter().map(|&v| m.real(v)).collect();
                let mut nodes = Vec::new();
                let mut edges = Vec::new();
                for (i, v) in vl.visits.iter().enumerate() {
                    let t_out = match vl.steps.get(i) {
                        Some(Step::Edge(e)) => {
                            let t = m.real(self.y[r][i].unwrap());
                            let ed = g.edge(*e);
                            edges.push(EdgeEvent {
                                from: ed.from,
                                to: ed.to,
                                t_enter: t,
                            });
                            t
                        }
                        Some(Step::Stay) => xs[i + 1],
                        None => xs[i] + v.task.map_or(0.0, |k| inst.tasks[k].service),
                    };
                    nodes.push(NodeEvent {
                        node: v.node,
                        task: v.task.map(|k| inst.tasks[k].id.clone()),
                        t_in: xs[i],
                        t_out,
                    });
                }
                let route = &cr.routes[r];
                RouteSchedule {
                    vehicle: inst.vehicles[ca.vehicle[r]].id.clone(),
                    depot: route.depot,
                    tasks: route.tasks.iter().map(|&k| inst.tasks[k].id.clone()).collect(),
                    nodes,
                    edges,
                    length: route_length(&paths[r]),
                }
            })
            .collect();
        Schedule { routes }
    }
}

fn node_blocks(lists: &[VisitList]) -> Vec<Block> {
    let mut out = Vec::new();
    for (r, vl) in lists.iter().enumerate() {
        let mut i = 0;
        while i < vl.visits.len() {
            let mut j = i;
            while j < vl.steps.len() && vl.steps[j] == Step::Stay {
                j += 1;
            }
            let exit = match vl.steps.get(j) {
                Some(Step::Edge(e)) => Some((j, *e)),
                _ => None,
            };
            out.push(Block {
                route: r,
                node: vl.visits[i].node,
                first: i,
                last: j,
                exit,
            });
            i = j + 1;
        }
    }
    out
}

/// Builds the visit lists and solves the capacity model in one go.
pub fn verify_capacity(
    inst: &Instance,
    cr: &RouteSet,
    ca: &Assignment,
    paths: &PathSet,
    relaxed: bool,
) -> Result<Option<Schedule>, SolveError> {
    let lists = build_visit_lists(inst, cr, paths)?;
    let mut model = CapacityModel::build(inst, ca, paths, &lists, relaxed)?;
    model.solve(inst, cr, ca, paths, &lists)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::route::{shortest_legs, Route};
    use crate::testutil::*;

    #[test]
    fn visit_list_of_round_trip() {
        let inst = counterexample();
        let cr = RouteSet::new(vec![Route {
            depot: 1,
            tasks: vec![inst.task_by_id("j11").unwrap()],
        }]);
        let lists = build_visit_lists(&inst, &cr, &shortest_legs(&inst, &cr)).unwrap();
        assert_eq!(lists[0].nodes(), vec![1, 2, 5, 2, 1]);
        assert_eq!(lists[0].edges().len(), 4);
    }

    #[test]
    fn task_at_depot_gives_single_node() {
        let inst = load_fixture("task_at_depot.json");
        let cr = RouteSet::new(vec![Route { depot: 1, tasks: vec![0] }]);
        let lists = build_visit_lists(&inst, &cr, &shortest_legs(&inst, &cr)).unwrap();
        assert_eq!(lists[0].nodes(), vec![1]);
        assert!(lists[0].edges().is_empty());
        assert!(build_visit_lists(&inst, &RouteSet::default(), &vec![]).unwrap().is_empty());
    }

    #[test]
    fn mismatched_leg_is_a_broken_chain() {
        let inst = counterexample();
        let cr = RouteSet::new(vec![Route {
            depot: 1,
            tasks: vec![inst.task_by_id("j11").unwrap()],
        }]);
        let mut legs = shortest_legs(&inst, &cr);
        legs[0].swap(0, 1);
        assert!(matches!(build_visit_lists(&inst, &cr, &legs), Err(SolveError::BrokenChain(_))));
    }
}
