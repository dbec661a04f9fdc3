//! Routes verification: do the current routes still meet their windows and
//! the operating range once their legs follow new paths?

use crate::instance::Instance;
use crate::route::{route_length, PathSet, RouteSet};

/// Earliest service times along each route under `np`, or `None` if some
/// route misses a window, returns after `T` or runs out of charge.
///
/// The constraints form a chain per route, so a forward pass with waiting
/// decides them exactly.
pub fn service_times(cr: &RouteSet, np: &PathSet, inst: &Instance) -> Option<Vec<Vec<f64>>> {
    let f = &inst.fleet;
    let mut all = Vec::new();
    for (r, route) in cr.routes.iter().enumerate() {
        let legs = &np[r];
        if f.discharge_coeff * route_length(legs) / f.speed > f.full_charge() + 1e-9 {
            return None;
        }
        let mut t = 0.0;
        let mut times = Vec::new();
        for (i, &k) in route.tasks.iter().enumerate() {
            let task = &inst.tasks[k];
            let sigma = (t + legs[i].length / f.speed).max(task.window.lower);
            if sigma > task.window.upper + 1e-9 {
                return None;
            }
            times.push(sigma);
            t = sigma + task.service;
        }
        let back = t + legs[route.tasks.len()].length / f.speed;
        if back > f.horizon + 1e-9 {
            return None;
        }
        all.push(times);
    }
    Some(all)
}

pub fn verify_routes(cr: &RouteSet, np: &PathSet, inst: &Instance) -> bool {
    service_times(cr, np, inst).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::route::{shortest_legs, Route};
    use crate::testutil::*;

    fn v2_route(inst: &Instance) -> RouteSet {
        RouteSet::new(vec![Route {
            depot: 6,
            tasks: vec![inst.task_by_id("j21").unwrap(), inst.task_by_id("j31").unwrap()],
        }])
    }

    #[test]
    fn shortest_paths_pass() {
        let inst = counterexample();
        let cr = v2_route(&inst);
        assert!(verify_routes(&cr, &shortest_legs(&inst, &cr), &inst));
    }

    #[test]
    fn detour_to_first_task_still_meets_window() {
        let inst = counterexample();
        let cr = v2_route(&inst);
        let mut np = shortest_legs(&inst, &cr);
        np[0][0] = inst.graph.path_from_nodes(vec![6, 7, 4, 3, 2]).unwrap();
        let times = service_times(&cr, &np, &inst).unwrap();
        assert_eq!(times[0][0], 4.0);
        assert_eq!(route_length(&np[0]), 8.0);
    }

    #[test]
    fn inflated_leg_exceeds_range() {
        let mut inst = counterexample();
        inst.fleet.horizon = 100.0;
        for t in &mut inst.tasks {
            t.window.upper = 100.0;
        }
        let cr = v2_route(&inst);
        let mut np = shortest_legs(&inst, &cr);
        np[0][1].length = 7.0;
        assert!(!verify_routes(&cr, &np, &inst));
        np[0][1].length = 6.0;
        assert!(verify_routes(&cr, &np, &inst));
    }
}
