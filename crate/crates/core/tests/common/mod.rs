#![allow(dead_code)]

use cfevrp::generate::{generate, GenParams};
use cfevrp::Instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture(name: &str) -> Instance {
    Instance::parse(&std::fs::read_to_string(fixture_path(name)).unwrap()).unwrap()
}

/// At most 7 nodes, 3 single-task jobs and 2 vehicles, unit lengths.
/// Half of the two-vehicle instances get a second depot.
pub fn tiny_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    // odd seeds: small, crowded plants where capacity tends to bind
    let busy = seed % 2 == 1;
    let p = GenParams {
        nodes: if busy { rng.gen_range(4..=5) } else { rng.gen_range(4..=7) },
        vehicles: if busy { 2 } else { rng.gen_range(1..=2) },
        jobs: if busy { rng.gen_range(2..=3) } else { rng.gen_range(1..=3) },
        horizon: if busy { rng.gen_range(6..=9) } else { rng.gen_range(8..=14) } as f64,
        edge_reduction: if rng.gen_bool(0.5) { 0.2 } else { 0.0 },
        types: rng.gen_range(1..=2),
        max_length: 1,
        max_tasks_per_job: 1,
        capacity_two_prob: 0.2,
    };
    let inst = generate(seed, &p).unwrap();
    let mut file = inst.to_file();
    if file.vehicles.len() == 2 && (busy || rng.gen_bool(0.5)) {
        let used: Vec<u32> = file.jobs.iter().flat_map(|j| j.tasks.iter().map(|t| t.location)).collect();
        let spare = file
            .graph
            .nodes
            .iter()
            .map(|n| n.id)
            .find(|id| !file.depots.contains(id) && !used.contains(id));
        if let Some(d) = spare {
            file.graph.nodes.iter_mut().find(|n| n.id == d).unwrap().hub = true;
            file.depots.push(d);
            file.depots.sort_unstable();
            file.vehicles[1].depot = d;
        }
    }
    Instance::from_file(&file).unwrap()
}
