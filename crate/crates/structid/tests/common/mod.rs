#![allow(dead_code)]

use std::path::PathBuf;

use structid::parse_model;
use structid_core::Model;

pub const CORPUS: [&str; 13] = [
    "affine",
    "linear_drift",
    "exponential",
    "input_driven",
    "squared_rate",
    "predator_prey",
    "daisy",
    "daisy_variant",
    "genssi",
    "crn",
    "cholera",
    "nfkb",
    "pharmacokinetics",
];

pub fn model_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("models")
        .join(format!("{name}.ode"))
}

pub fn source(name: &str) -> String {
    std::fs::read_to_string(model_path(name)).expect("corpus file is readable")
}

pub fn model(name: &str) -> Model {
    parse_model(&source(name)).expect("corpus file parses")
}

pub fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}
