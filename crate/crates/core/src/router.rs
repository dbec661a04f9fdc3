//! Routing problem: partition the tasks into depot-anchored routes that meet
//! windows and operating range, using as few routes as possible.

use std::collections::BTreeMap;

use cfevrp_smt::{Context, Formula, LinExpr, Model, Objective, SolveResult, VarRef};

use crate::graph::PathMap;
use crate::instance::{Instance, TaskIdx, TaskKind};
use crate::route::{Route, RouteSet};
use crate::{smt_err as smt, SolveError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExtractError {
    #[error("routing model yields a malformed chain: {0}")]
    MalformedChain(String),
}

pub struct RoutingModel {
    ctx: Context,
    theta: BTreeMap<(TaskIdx, TaskIdx), VarRef>,
    gamma: Vec<VarRef>,
    objective: Objective,
}

impl RoutingModel {
    /// Builds the routing model over distances taken from `cp`.
    pub fn build(inst: &Instance, cp: &PathMap, pr: &[RouteSet]) -> Result<Self, SolveError> {
        let mut ctx = Context::new();
        let n = inst.tasks.len();
        let f = &inst.fleet;
        let full = f.full_charge();
        let dist = |a: TaskIdx, b: TaskIdx| cp[&(inst.tasks[a].location, inst.tasks[b].location)].length;

        let gamma: Vec<VarRef> = (0..n).map(|k| ctx.real_var(format!("gamma_{}", inst.tasks[k].id))).collect();
        let eps: Vec<VarRef> = (0..n).map(|k| ctx.real_var(format!("eps_{}", inst.tasks[k].id))).collect();
        let label: Vec<VarRef> = (0..n).map(|k| ctx.real_var(format!("depot_{}", inst.tasks[k].id))).collect();
        let ord: Vec<VarRef> = (0..n).map(|k| ctx.real_var(format!("ord_{}", inst.tasks[k].id))).collect();

        // Travel into a start dummy or out of an end dummy has no variable,
        // and neither does start-to-end.
        let is_start = |k: TaskIdx| matches!(inst.tasks[k].kind, TaskKind::Start(_));
        let is_end = |k: TaskIdx| matches!(inst.tasks[k].kind, TaskKind::End(_));
        let mut theta = BTreeMap::new();
        for a in 0..n {
            for b in 0..n {
                if a == b || is_end(a) || is_start(b) || (is_start(a) && is_end(b)) {
                    continue;
                }
                let name = format!("theta_{}_{}", inst.tasks[a].id, inst.tasks[b].id);
                theta.insert((a, b), ctx.bool_var(name));
            }
        }
        let th = |a, b| theta.get(&(a, b)).map(|&v| Formula::var(v));

        for k in 0..n {
            let t = &inst.tasks[k];
            ctx.assert(LinExpr::var(eps[k]).le(full)).map_err(smt)?;
            ctx.assert(LinExpr::var(gamma[k]).ge(t.window.lower)).map_err(smt)?;
            ctx.assert(LinExpr::var(gamma[k]).le(t.window.upper)).map_err(smt)?;
            match t.kind {
                TaskKind::Start(o) => {
                    ctx.assert(LinExpr::var(eps[k]).eq(full)).map_err(smt)?;
                    ctx.assert(LinExpr::var(label[k]).eq(o as f64)).map_err(smt)?;
                }
                TaskKind::End(o) => {
                    ctx.assert(LinExpr::var(label[k]).eq(o as f64)).map_err(smt)?;
                }
                TaskKind::Real => {}
            }
        }

        for (&(a, b), &v) in &theta {
            let d = dist(a, b);
            let on = Formula::var(v);
            let travel = inst.tasks[a].service + d / f.speed;
            ctx.assert(Formula::implies(on.clone(), Formula::diff_ge(gamma[b], gamma[a], travel)))
                .map_err(smt)?;
            let drain = f.discharge_coeff * d / f.speed;
            ctx.assert(Formula::implies(on.clone(), Formula::diff_le(eps[b], eps[a], -drain)))
                .map_err(smt)?;
            ctx.assert(Formula::implies(on.clone(), LinExpr::var(label[b]).minus(label[a]).eq(0.0)))
                .map_err(smt)?;
            if inst.tasks[a].kind == TaskKind::Real && inst.tasks[b].kind == TaskKind::Real {
                ctx.assert(Formula::implies(on, Formula::diff_ge(ord[b], ord[a], 1.0)))
                    .map_err(smt)?;
            }
        }

        let outgoing = |a: TaskIdx| (0..n).filter_map(|b| th(a, b)).collect::<Vec<_>>();
        let incoming = |b: TaskIdx| (0..n).filter_map(|a| th(a, b)).collect::<Vec<_>>();
        let num_jobs = inst.jobs.len();
        for k in inst.real_tasks() {
            ctx.assert(Formula::exactly(outgoing(k), 1)).map_err(smt)?;
            for m in 1..=num_jobs {
                ctx.assert(Formula::implies(
                    Formula::exactly(outgoing(k), m),
                    Formula::exactly(incoming(k), m),
                ))
                .map_err(smt)?;
            }
        }
        for o in 0..inst.depots.len() {
            let (s, e) = (inst.start_task(o), inst.end_task(o));
            for m in 0..=inst.num_real_tasks() {
                ctx.assert(Formula::iff(
                    Formula::exactly(outgoing(s), m),
                    Formula::exactly(incoming(e), m),
                ))
                .map_err(smt)?;
            }
        }

        let excl = inst.mutually_exclusive_jobs();
        for (j, others) in excl.iter().enumerate() {
            for &j2 in others {
                for &a in &inst.jobs[j].tasks {
                    for &b in &inst.jobs[j2].tasks {
                        ctx.assert(Formula::not(th(a, b).unwrap())).map_err(smt)?;
                    }
                }
            }
        }

        for job in &inst.jobs {
            if job.tasks.len() >= 2 {
                let orders = permutations(&job.tasks)
                    .into_iter()
                    .map(|p| Formula::and(p.windows(2).map(|w| th(w[0], w[1]).unwrap())));
                ctx.assert(Formula::or(orders)).map_err(smt)?;
            }
            for &k in &job.tasks {
                for &p in &inst.tasks[k].predecessors {
                    ctx.assert(Formula::diff_ge(gamma[k], gamma[p], 0.0)).map_err(smt)?;
                }
            }
        }

        let objective: Objective = (0..inst.depots.len())
            .flat_map(|o| inst.real_tasks().map(move |k| (o, k)))
            .map(|(o, k)| th(inst.start_task(o), k).unwrap())
            .collect();

        let mut model = RoutingModel {
            ctx,
            theta,
            gamma,
            objective,
        };
        for rs in pr {
            model.block(inst, rs)?;
        }
        Ok(model)
    }

    /// Excludes `rs` from future solutions.
    pub fn block(&mut self, inst: &Instance, rs: &RouteSet) -> Result<(), SolveError> {
        let clause = rs
            .arcs(inst)
            .into_iter()
            .map(|arc| Formula::not(Formula::var(self.theta[&arc])));
        self.ctx.assert(Formula::or(clause)).map_err(smt)
    }

    pub fn context(&self) -> &Context {
        &self.ctx
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.ctx.set_seed(seed);
    }

    pub fn set_deadline(&mut self, deadline: Option<std::time::Instant>) {
        self.ctx.set_deadline(deadline);
    }

    pub fn theta(&self, a: TaskIdx, b: TaskIdx) -> Option<VarRef> {
        self.theta.get(&(a, b)).copied()
    }

    /// Optimal route set, or `None` when the model is unsatisfiable.
    pub fn solve(&mut self, inst: &Instance) -> Result<Option<(RouteSet, Model)>, SolveError> {
        match self.ctx.minimize(&self.objective).map_err(smt)? {
            SolveResult::Sat(m) => {
                let rs = self.extract(inst, &m)?;
                Ok(Some((rs, m)))
            }
            SolveResult::Unsat => Ok(None),
            SolveResult::Interrupted => Err(SolveError::Interrupted),
        }
    }

    pub fn objective_value(&self, m: &Model) -> u64 {
        self.objective.eval(m)
    }

    pub fn arrival(&self, m: &Model, k: TaskIdx) -> f64 {
        m.real(self.gamma[k])
    }

    pub fn extract(&self, inst: &Instance, m: &Model) -> Result<RouteSet, ExtractError> {
        extract_routes(inst, m, &self.theta)
    }
}

/// Follows the true successor links from every start dummy.
pub fn extract_routes(
    inst: &Instance,
    m: &Model,
    theta: &BTreeMap<(TaskIdx, TaskIdx), VarRef>,
) -> Result<RouteSet, ExtractError> {
    let mut succ: BTreeMap<TaskIdx, Vec<TaskIdx>> = BTreeMap::new();
    for (&(a, b), &v) in theta {
        if m.bool(v) {
            succ.entry(a).or_default().push(b);
        }
    }
    let mut seen = vec![false; inst.tasks.len()];
    let mut routes = Vec::new();
    for (o, &depot) in inst.depots.iter().enumerate() {
        let s = inst.start_task(o);
        for &first in succ.get(&s).map(Vec::as_slice).unwrap_or(&[]) {
            let mut tasks = Vec::new();
            let mut cur = first;
            loop {
                match inst.tasks[cur].kind {
                    TaskKind::End(o2) if o2 == o => break,
                    TaskKind::Real => {}
                    _ => {
                        return Err(ExtractError::MalformedChain(format!(
                            "route from depot {depot} ends at {}",
                            inst.tasks[cur].id
                        )))
                    }
                }
                if std::mem::replace(&mut seen[cur], true) {
                    return Err(ExtractError::MalformedChain(format!("task {} visited twice", inst.tasks[cur].id)));
                }
                tasks.push(cur);
                cur = match succ.get(&cur).map(Vec::as_slice) {
                    Some([next]) => *next,
                    _ => {
                        return Err(ExtractError::MalformedChain(format!(
                            "task {} lacks a unique successor",
                            inst.tasks[cur].id
                        )))
                    }
                };
            }
            routes.push(Route { depot, tasks });
        }
    }
    if let Some(k) = inst.real_tasks().find(|&k| !seen[k]) {
        return Err(ExtractError::MalformedChain(format!("task {} is not on any route", inst.tasks[k].id)));
    }
    Ok(RouteSet::new(routes))
}

fn permutations(items: &[TaskIdx]) -> Vec<Vec<TaskIdx>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let first = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, first);
            out.push(p);
        }
    }
    out
}

/// One-shot routing solve: builds a fresh model and returns the optimum.
pub fn solve_routing(inst: &Instance, cp: &PathMap, pr: &[RouteSet]) -> Result<Option<RouteSet>, SolveError> {
    let mut model = RoutingModel::build(inst, cp, pr)?;
    Ok(model.solve(inst)?.map(|(rs, _)| rs))
}
