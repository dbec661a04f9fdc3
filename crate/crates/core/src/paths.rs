//! Paths changing: choose a fresh simple path for every leg of the current
//! routes, using as few nodes as possible and avoiding earlier choices.

use cfevrp_smt::{Context, Formula, Model, Objective, SolveResult, VarRef};

use crate::graph::{NodeId, Path, PlantGraph};
use crate::instance::Instance;
use crate::route::{PathSet, RouteSet};
use crate::{smt_err, SolveError};

struct LegVars {
    route: usize,
    leg: usize,
    from: NodeId,
    to: NodeId,
    /// One per edge of the graph, same indexing.
    z: Vec<VarRef>,
}

pub struct PathsModel {
    ctx: Context,
    legs: Vec<LegVars>,
    /// Legs per route, for assembling results (degenerate legs included).
    shape: Vec<Vec<NodeId>>,
    objective: Objective,
}

impl PathsModel {
    pub fn build(inst: &Instance, cr: &RouteSet, pp: &[PathSet]) -> Result<Self, SolveError> {
        let g = &inst.graph;
        let mut ctx = Context::new();
        let mut legs = Vec::new();
        let mut objective = Objective::new();
        let shape: Vec<Vec<NodeId>> = cr.routes.iter().map(|r| r.stops(inst)).collect();
        for (r, stops) in shape.iter().enumerate() {
            for (i, w) in stops.windows(2).enumerate() {
                let (xi, pi) = (w[0], w[1]);
                // co-located consecutive stops: the empty path, no variables
                if xi == pi {
                    continue;
                }
                let z: Vec<VarRef> = g
                    .edges()
                    .iter()
                    .map(|e| ctx.bool_var(format!("z_{r}_{i}_{}_{}", e.from, e.to)))
                    .collect();
                let zf = |e: usize| Formula::var(z[e]);
                let out = |n: NodeId| g.out_edges(n).iter().map(|&e| zf(e)).collect::<Vec<_>>();
                let inc = |n: NodeId| g.in_edges(n).iter().map(|&e| zf(e)).collect::<Vec<_>>();
                for &n in g.nodes() {
                    let wv = ctx.bool_var(format!("w_{r}_{i}_{n}"));
                    objective = objective.indicator(Formula::var(wv));
                    let w = Formula::var(wv);
                    if n == xi {
                        ctx.assert(w).map_err(smt_err)?;
                        ctx.assert(Formula::exactly(out(n), 1)).map_err(smt_err)?;
                        ctx.assert(Formula::exactly(inc(n), 0)).map_err(smt_err)?;
                    } else if n == pi {
                        ctx.assert(w).map_err(smt_err)?;
                        ctx.assert(Formula::exactly(inc(n), 1)).map_err(smt_err)?;
                        ctx.assert(Formula::exactly(out(n), 0)).map_err(smt_err)?;
                    } else {
                        ctx.assert(Formula::ite(
                            w,
                            Formula::and([Formula::exactly(out(n), 1), Formula::exactly(inc(n), 1)]),
                            Formula::and([Formula::exactly(out(n), 0), Formula::exactly(inc(n), 0)]),
                        ))
                        .map_err(smt_err)?;
                    }
                }
                for e in 0..g.edges().len() {
                    let rev = g.reverse(e);
                    if e < rev {
                        ctx.assert(Formula::implies(zf(e), Formula::not(zf(rev)))).map_err(smt_err)?;
                    }
                }
                legs.push(LegVars {
                    route: r,
                    leg: i,
                    from: xi,
                    to: pi,
                    z,
                });
            }
        }
        let mut model = PathsModel {
            ctx,
            legs,
            shape,
            objective,
        };
        for prev in pp {
            model.block(g, prev)?;
        }
        Ok(model)
    }

    /// Excludes the whole combination `prev`.
    pub fn block(&mut self, g: &PlantGraph, prev: &PathSet) -> Result<(), SolveError> {
        let mut clause = Vec::new();
        for lv in &self.legs {
            for e in g.path_edges(&prev[lv.route][lv.leg]) {
                clause.push(Formula::not(Formula::var(lv.z[e])));
            }
        }
        self.ctx.assert(Formula::or(clause)).map_err(smt_err)
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

    pub fn solve(&mut self, g: &PlantGraph) -> Result<Option<(PathSet, u64)>, SolveError> {
        match self.ctx.minimize(&self.objective).map_err(smt_err)? {
            SolveResult::Sat(m) => {
                let cost = self.objective.eval(&m);
                Ok(Some((self.decode(g, &m)?, cost)))
            }
            SolveResult::Unsat => Ok(None),
            SolveResult::Interrupted => Err(SolveError::Interrupted),
        }
    }

    fn decode(&self, g: &PlantGraph, m: &Model) -> Result<PathSet, SolveError> {
        let mut out: PathSet = self
            .shape
            .iter()
            .map(|stops| stops.windows(2).map(|w| Path::empty(w[0])).collect())
            .collect();
        for lv in &self.legs {
            let used = lv.z.iter().filter(|&&v| m.bool(v)).count();
            let mut nodes = vec![lv.from];
            let mut cur = lv.from;
            while cur != lv.to {
                let next = g.out_edges(cur).iter().find(|&&e| m.bool(lv.z[e]));
                match next {
                    Some(&e) if nodes.len() <= g.nodes().len() => {
                        cur = g.edge(e).to;
                        nodes.push(cur);
                    }
                    _ => {
                        return Err(SolveError::DecodingCycle(format!(
                            "leg {} of route {} does not reach {}",
                            lv.leg, lv.route, lv.to
                        )))
                    }
                }
            }
            if used != nodes.len() - 1 {
                return Err(SolveError::DecodingCycle(format!(
                    "leg {} of route {} selects {} edges but its path has {}",
                    lv.leg,
                    lv.route,
                    used,
                    nodes.len() - 1
                )));
            }
            out[lv.route][lv.leg] = g.path_from_nodes(nodes).expect("decoded path uses graph edges");
        }
        Ok(out)
    }
}

/// One-shot solve: the cheapest combination not in `pp`.
pub fn solve_paths_changing(inst: &Instance, cr: &RouteSet, pp: &[PathSet]) -> Result<Option<PathSet>, SolveError> {
    let mut model = PathsModel::build(inst, cr, pp)?;
    Ok(model.solve(&inst.graph)?.map(|(p, _)| p))
}
