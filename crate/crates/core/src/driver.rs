//! The outer loop: routes, then vehicles, then a conflict-free timing, with
//! path changes and backtracking whenever a stage comes up empty.

use std::time::{Duration, Instant};

use crate::assign::{compute_route_attributes, AssignModel, Assignment};
use crate::capacity::{build_visit_lists, CapacityModel};
use crate::instance::Instance;
use crate::paths::PathsModel;
use crate::route::{legs_from_map, total_length, PathSet, RouteSet};
use crate::router::RoutingModel;
use crate::schedule::{Event, OutcomeTag, Schedule, ScheduleFile, Subproblem};
use crate::verify::verify_routes;
use crate::SolveError;

/// Iteration caps. `None` means unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct Limits {
    pub max_route_sets: Option<usize>,
    /// Per route set.
    pub max_assignments: Option<usize>,
    /// Path sets tried per assignment.
    pub max_path_sets: Option<usize>,
    pub time_limit: Option<Duration>,
    /// Backend seed; 0 keeps every decision deterministic and unrandomized.
    pub seed: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_route_sets: None,
            max_assignments: None,
            max_path_sets: Some(50),
            time_limit: None,
            seed: 0,
        }
    }
}

impl Limits {
    pub fn unbounded() -> Self {
        Limits {
            max_path_sets: None,
            ..Limits::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Feasible(Schedule),
    ProvenInfeasible,
    Aborted(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stats {
    pub router_calls: usize,
    pub assign_calls: usize,
    pub capacity_calls: usize,
    pub paths_calls: usize,
    pub routes_verifier_calls: usize,
    /// Size of PR at each router call.
    pub pr_sizes: Vec<usize>,
    /// Size of PP at each assignment call.
    pub pp_sizes_at_assign: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub verdict: Verdict,
    pub log: Vec<Event>,
    pub stats: Stats,
    /// Route set and paths of the returned schedule.
    pub routes: Option<(RouteSet, Assignment, PathSet)>,
}

impl Outcome {
    pub fn schedule(&self) -> Option<&Schedule> {
        match &self.verdict {
            Verdict::Feasible(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self.verdict, Verdict::Feasible(_))
    }

    pub fn total_distance(&self) -> Option<f64> {
        self.schedule().map(Schedule::total_distance)
    }

    pub fn tag(&self) -> OutcomeTag {
        match self.verdict {
            Verdict::Feasible(_) => OutcomeTag::Feasible,
            Verdict::ProvenInfeasible => OutcomeTag::Infeasible,
            Verdict::Aborted(_) => OutcomeTag::Aborted,
        }
    }

    pub fn to_file(&self) -> ScheduleFile {
        ScheduleFile {
            outcome: self.tag(),
            total_distance: self.total_distance(),
            routes: self.schedule().map(|s| s.routes.clone()).unwrap_or_default(),
            reason: match &self.verdict {
                Verdict::Aborted(r) => Some(r.clone()),
                _ => None,
            },
            log: self.log.clone(),
        }
    }
}

/// Sum of leg lengths of a feasible outcome.
pub fn total_distance(outcome: &Outcome) -> f64 {
    outcome.total_distance().unwrap_or(0.0)
}

pub fn comsat_solve(inst: &Instance, limits: &Limits) -> Outcome {
    Driver::new(inst, limits, false).run(&[])
}

/// Capacity-relaxed variant: routing and assignment only.
pub fn c_comsat_solve(inst: &Instance, limits: &Limits) -> Outcome {
    Driver::new(inst, limits, true).run(&[])
}

/// Like [`comsat_solve`], but with route sets already excluded up front.
pub fn comsat_solve_excluding(inst: &Instance, limits: &Limits, excluded: &[RouteSet]) -> Outcome {
    Driver::new(inst, limits, false).run(excluded)
}

enum Stop {
    Done(Verdict),
    Error(SolveError),
}

impl From<SolveError> for Stop {
    fn from(e: SolveError) -> Self {
        Stop::Error(e)
    }
}

struct Driver<'a> {
    inst: &'a Instance,
    limits: &'a Limits,
    relaxed: bool,
    deadline: Option<Instant>,
    log: Vec<Event>,
    stats: Stats,
    found: Option<(RouteSet, Assignment, PathSet)>,
}

impl<'a> Driver<'a> {
    fn new(inst: &'a Instance, limits: &'a Limits, relaxed: bool) -> Self {
        Driver {
            inst,
            limits,
            relaxed,
            deadline: limits.time_limit.map(|d| Instant::now() + d),
            log: Vec::new(),
            stats: Stats::default(),
            found: None,
        }
    }

    fn run(mut self, excluded: &[RouteSet]) -> Outcome {
        let verdict = match self.outer(excluded) {
            Ok(v) | Err(Stop::Done(v)) => v,
            Err(Stop::Error(SolveError::Interrupted)) => Verdict::Aborted("time limit reached".into()),
            Err(Stop::Error(e)) => Verdict::Aborted(format!("internal error: {e}")),
        };
        Outcome {
            verdict,
            log: self.log,
            stats: self.stats,
            routes: self.found,
        }
    }

    fn record(&mut self, sub: Subproblem, feasible: bool, since: Instant) {
        self.log.push(Event {
            subproblem: sub,
            feasible,
            seconds: since.elapsed().as_secs_f64(),
        });
    }

    fn out_of_time(&self) -> Result<(), Stop> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(Stop::Done(Verdict::Aborted("time limit reached".into()))),
            _ => Ok(()),
        }
    }

    fn outer(&mut self, excluded: &[RouteSet]) -> Result<Verdict, Stop> {
        let inst = self.inst;
        self.out_of_time()?;
        let sp_map = inst.graph.all_pairs_paths(&inst.locations());
        let mut pr: Vec<RouteSet> = excluded.to_vec();
        let mut router = RoutingModel::build(inst, &sp_map, &pr)?;
        router.set_deadline(self.deadline);
        router.set_seed(self.limits.seed);
        let mut tried = 0;
        loop {
            self.out_of_time()?;
            if self.limits.max_route_sets.is_some_and(|m| tried >= m) {
                return Ok(Verdict::Aborted(format!("route set limit {tried} reached")));
            }
            tried += 1;
            self.stats.router_calls += 1;
            self.stats.pr_sizes.push(pr.len());
            let t0 = Instant::now();
            let cr = match router.solve(inst)? {
                Some((cr, _)) => cr,
                None => {
                    self.record(Subproblem::Router, false, t0);
                    return Ok(Verdict::ProvenInfeasible);
                }
            };
            self.record(Subproblem::Router, true, t0);
            let sp = legs_from_map(inst, &cr, &sp_map);
            if let Some(schedule) = self.assign_loop(&cr, &sp)? {
                return Ok(Verdict::Feasible(schedule));
            }
            router.block(inst, &cr)?;
            pr.push(cr);
        }
    }

    /// Tries every assignment of `cr`; `None` once they are exhausted.
    fn assign_loop(&mut self, cr: &RouteSet, sp: &PathSet) -> Result<Option<Schedule>, Stop> {
        let inst = self.inst;
        let t0 = Instant::now();
        let attrs = match compute_route_attributes(cr, inst, sp) {
            Ok(a) => a,
            Err(_) => {
                self.stats.assign_calls += 1;
                self.stats.pp_sizes_at_assign.push(0);
                self.record(Subproblem::Assign, false, t0);
                return Ok(None);
            }
        };
        let mut model = AssignModel::build(cr, &attrs, inst, &[])?;
        model.set_deadline(self.deadline);
        model.set_seed(self.limits.seed);
        let mut tried = 0;
        loop {
            self.out_of_time()?;
            if self.limits.max_assignments.is_some_and(|m| tried >= m) {
                return Err(Stop::Done(Verdict::Aborted(format!("assignment limit {tried} reached"))));
            }
            tried += 1;
            self.stats.assign_calls += 1;
            // PP starts empty for every assignment
            self.stats.pp_sizes_at_assign.push(0);
            let t0 = Instant::now();
            let Some(ca) = model.solve()? else {
                self.record(Subproblem::Assign, false, t0);
                return Ok(None);
            };
            self.record(Subproblem::Assign, true, t0);
            if let Some(s) = self.capacity_loop(cr, &ca, sp)? {
                return Ok(Some(s));
            }
            model.block(&ca)?;
        }
    }

    fn capacity_check(&mut self, cr: &RouteSet, ca: &Assignment, cp: &PathSet) -> Result<Option<Schedule>, Stop> {
        let t0 = Instant::now();
        self.stats.capacity_calls += 1;
        let lists = build_visit_lists(self.inst, cr, cp)?;
        let mut model = CapacityModel::build(self.inst, ca, cp, &lists, self.relaxed)?;
        model.set_deadline(self.deadline);
        model.set_seed(self.limits.seed);
        let res = model.solve(self.inst, cr, ca, cp, &lists)?;
        self.record(Subproblem::CapacityVerifier, res.is_some(), t0);
        if res.is_some() {
            self.found = Some((cr.clone(), ca.clone(), cp.clone()));
        }
        Ok(res)
    }

    /// Capacity verification with path changes; `None` once every path
    /// combination of `cr` has been tried for this assignment.
    fn capacity_loop(&mut self, cr: &RouteSet, ca: &Assignment, sp: &PathSet) -> Result<Option<Schedule>, Stop> {
        let inst = self.inst;
        let mut cp = sp.clone();
        if let Some(s) = self.capacity_check(cr, ca, &cp)? {
            return Ok(Some(s));
        }
        if self.relaxed {
            return Ok(None);
        }
        let mut pp: Vec<PathSet> = vec![cp.clone()];
        let mut changer = PathsModel::build(inst, cr, &pp)?;
        changer.set_deadline(self.deadline);
        changer.set_seed(self.limits.seed);
        let mut tried = 0;
        loop {
            self.out_of_time()?;
            if self.limits.max_path_sets.is_some_and(|m| tried >= m) {
                return Err(Stop::Done(Verdict::Aborted(format!(
                    "path set limit {tried} reached for one assignment"
                ))));
            }
            tried += 1;
            self.stats.paths_calls += 1;
            let t0 = Instant::now();
            let Some((np, _)) = changer.solve(&inst.graph)? else {
                self.record(Subproblem::PathsChanger, false, t0);
                return Ok(None);
            };
            self.record(Subproblem::PathsChanger, true, t0);
            let t0 = Instant::now();
            self.stats.routes_verifier_calls += 1;
            let ok = verify_routes(cr, &np, inst);
            self.record(Subproblem::RoutesVerifier, ok, t0);
            if ok {
                cp = np;
                if let Some(s) = self.capacity_check(cr, ca, &cp)? {
                    return Ok(Some(s));
                }
                changer.block(&inst.graph, &cp)?;
                pp.push(cp.clone());
            } else {
                changer.block(&inst.graph, &np)?;
                pp.push(np);
            }
        }
    }
}

/// Total distance of the paths a schedule was built on.
pub fn paths_distance(paths: &PathSet) -> f64 {
    total_length(paths)
}
