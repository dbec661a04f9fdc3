use crate::Instance;

pub fn load_fixture(name: &str) -> Instance {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    Instance::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn counterexample() -> Instance {
    load_fixture("counterexample.json")
}
