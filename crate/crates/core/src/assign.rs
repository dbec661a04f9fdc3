//! Assignment problem: match vehicles to routes and pick start times so that
//! routes on one vehicle do not overlap and leave time to recharge.

use std::collections::BTreeSet;

use cfevrp_smt::{Context, Formula, LinExpr, Model, SolveResult, VarRef};
use serde::{Deserialize, Serialize};

use crate::instance::{Instance, VehicleIdx};
use crate::route::{route_length, PathSet, RouteSet};
use crate::{smt_err, SolveError};

#[derive(Debug, Clone, PartialEq)]
pub struct RouteAttributes {
    pub length: f64,
    /// `length / v + S_r`: time on the road plus service, without waiting.
    pub duration: f64,
    pub service: f64,
    /// Latest start that still meets every upper window bound and returns by `T`.
    pub late: f64,
    /// Earliest end allowed by the lower window bounds, whatever the start.
    pub earliest_end: f64,
    pub eligible: BTreeSet<VehicleIdx>,
    /// Eligible vehicles based at the route's depot.
    pub assignable: BTreeSet<VehicleIdx>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AttributeError {
    #[error("route {0} combines jobs with no common eligible vehicle")]
    EmptyEligibleSet(usize),
}

/// Per-route length, latest start and eligibility, from the legs in `cp`.
pub fn compute_route_attributes(
    cr: &RouteSet,
    inst: &Instance,
    cp: &PathSet,
) -> Result<Vec<RouteAttributes>, AttributeError> {
    let v = inst.fleet.speed;
    let t = inst.fleet.horizon;
    let mut out = Vec::new();
    for (i, r) in cr.routes.iter().enumerate() {
        let legs = &cp[i];
        let length = route_length(legs);
        let service = r.service_total(inst);
        let duration = length / v + service;
        // offset[k]: time from route start to arrival at the k-th task with no waiting
        let mut offset = 0.0;
        let mut late = t - duration;
        let mut offsets = Vec::new();
        for (pos, &k) in r.tasks.iter().enumerate() {
            offset += legs[pos].length / v;
            offsets.push(offset);
            late = late.min(inst.tasks[k].window.upper - offset);
            offset += inst.tasks[k].service;
        }
        let earliest_end = r
            .tasks
            .iter()
            .zip(&offsets)
            .map(|(&k, &off)| inst.tasks[k].window.lower + (duration - off))
            .fold(0.0, f64::max);
        let eligible = r.eligible(inst);
        if eligible.is_empty() {
            return Err(AttributeError::EmptyEligibleSet(i));
        }
        out.push(RouteAttributes {
            length,
            duration,
            service,
            late,
            earliest_end,
            assignable: r.assignable(inst),
            eligible,
        });
    }
    Ok(out)
}

/// Vehicle and time window of every route (an element of CA/PA).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub vehicle: Vec<VehicleIdx>,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

impl Assignment {
    /// Routes served by vehicle `v`, in route-set order.
    pub fn routes_of(&self, v: VehicleIdx) -> Vec<usize> {
        (0..self.vehicle.len()).filter(|&r| self.vehicle[r] == v).collect()
    }
}

pub struct AssignModel {
    ctx: Context,
    alpha: Vec<Vec<VarRef>>,
    s: Vec<VarRef>,
    e: Vec<VarRef>,
}

impl AssignModel {
    pub fn build(
        cr: &RouteSet,
        attrs: &[RouteAttributes],
        inst: &Instance,
        pa: &[Assignment],
    ) -> Result<Self, SolveError> {
        let mut ctx = Context::new();
        let nv = inst.vehicles.len();
        let nr = cr.len();
        let fleet = &inst.fleet;
        let alpha: Vec<Vec<VarRef>> = (0..nr)
            .map(|r| (0..nv).map(|i| ctx.bool_var(format!("alpha_{}_{r}", inst.vehicles[i].id))).collect())
            .collect();
        let s: Vec<VarRef> = (0..nr).map(|r| ctx.real_var(format!("s_{r}"))).collect();
        let e: Vec<VarRef> = (0..nr).map(|r| ctx.real_var(format!("e_{r}"))).collect();
        let max_duration = attrs.iter().map(|a| a.duration).fold(0.0, f64::max);
        let cap = fleet.horizon + max_duration;

        for r in 0..nr {
            let a = &attrs[r];
            let vars = || alpha[r].iter().map(|&v| Formula::var(v));
            ctx.assert(Formula::exactly(vars(), 1)).map_err(smt_err)?;
            ctx.assert(Formula::diff_ge(e[r], s[r], a.duration)).map_err(smt_err)?;
            ctx.assert(LinExpr::var(e[r]).ge(a.earliest_end)).map_err(smt_err)?;
            ctx.assert(LinExpr::var(s[r]).le(a.late)).map_err(smt_err)?;
            ctx.assert(LinExpr::var(s[r]).le(cap)).map_err(smt_err)?;
            ctx.assert(LinExpr::var(e[r]).le(cap)).map_err(smt_err)?;
            ctx.assert(Formula::or(a.eligible.iter().map(|&i| Formula::var(alpha[r][i]))))
                .map_err(smt_err)?;
            for i in 0..nv {
                if !a.assignable.contains(&i) {
                    ctx.assert(Formula::not(Formula::var(alpha[r][i]))).map_err(smt_err)?;
                }
            }
        }
        let c = fleet.charge_coeff;
        for i in 0..nv {
            for r in 0..nr {
                for r2 in r + 1..nr {
                    let both = Formula::and([Formula::var(alpha[r][i]), Formula::var(alpha[r2][i])]);
                    let apart = Formula::or([
                        Formula::diff_ge(s[r], e[r2], c * attrs[r].length),
                        Formula::diff_ge(s[r2], e[r], c * attrs[r2].length),
                    ]);
                    ctx.assert(Formula::implies(both, apart)).map_err(smt_err)?;
                }
            }
        }
        let mut model = AssignModel { ctx, alpha, s, e };
        for prev in pa {
            model.block(prev)?;
        }
        Ok(model)
    }

    pub fn block(&mut self, prev: &Assignment) -> Result<(), SolveError> {
        let clause = prev
            .vehicle
            .iter()
            .enumerate()
            .map(|(r, &i)| Formula::not(Formula::var(self.alpha[r][i])));
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

    pub fn solve(&mut self) -> Result<Option<Assignment>, SolveError> {
        match self.ctx.check() {
            SolveResult::Sat(m) => Ok(Some(self.decode(&m))),
            SolveResult::Unsat => Ok(None),
            SolveResult::Interrupted => Err(SolveError::Interrupted),
        }
    }

    fn decode(&self, m: &Model) -> Assignment {
        Assignment {
            vehicle: self
                .alpha
                .iter()
                .map(|row| row.iter().position(|&v| m.bool(v)).expect("one vehicle per route"))
                .collect(),
            start: self.s.iter().map(|&v| m.real(v)).collect(),
            end: self.e.iter().map(|&v| m.real(v)).collect(),
        }
    }
}

/// One-shot assignment solve.
pub fn solve_assignment(
    cr: &RouteSet,
    attrs: &[RouteAttributes],
    inst: &Instance,
    pa: &[Assignment],
) -> Result<Option<Assignment>, SolveError> {
    AssignModel::build(cr, attrs, inst, pa)?.solve()
}
