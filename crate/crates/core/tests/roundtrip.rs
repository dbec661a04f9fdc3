mod common;

use cfevrp::driver::{comsat_solve, Limits};
use cfevrp::schedule::ScheduleFile;
use cfevrp::validate::validate_schedule;
use cfevrp::Instance;
use common::{fixture, fixture_path, tiny_instance};

#[test]
fn fixtures_round_trip_byte_stable() {
    for name in [
        "counterexample.json",
        "capacity_conflict.json",
        "three_vehicles.json",
        "zero_jobs.json",
        "task_at_depot.json",
    ] {
        let inst = fixture(name);
        let text = inst.to_json();
        let back = Instance::parse(&text).unwrap();
        assert_eq!(back, inst, "{name}");
        assert_eq!(back.to_json(), text, "{name}");
    }
}

#[test]
fn fixture_path_points_at_files() {
    assert!(std::path::Path::new(&fixture_path("counterexample.json")).exists());
}

#[test]
fn generated_instances_round_trip() {
    for seed in 0..30 {
        let inst = tiny_instance(seed);
        let text = inst.to_json();
        assert_eq!(Instance::parse(&text).unwrap().to_json(), text);
    }
}

#[test]
fn schedules_revalidate_after_serialization() {
    for seed in 0..30 {
        let inst = tiny_instance(seed);
        let out = comsat_solve(&inst, &Limits::default());
        let text = out.to_file().to_json();
        let file = ScheduleFile::parse(&text).unwrap();
        assert_eq!(file.to_json(), text);
        if let Some(s) = out.schedule() {
            assert_eq!(&file.schedule(), s);
            assert!(validate_schedule(&file.schedule(), &inst).unwrap().ok, "seed {seed}");
        }
    }
}
