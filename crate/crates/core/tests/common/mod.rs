#![allow(dead_code)]

use std::path::PathBuf;

use gcs_walks::io::load_instance;
use gcs_walks::Gcs;

pub fn instance_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../instances").join(format!("{name}.json"))
}

pub fn instance(name: &str) -> Gcs {
    load_instance(&instance_path(name)).unwrap()
}

/// Shipped instances with the largest `K` the oracle needs to reach their optimum.
pub const SHIPPED: [(&str, usize); 7] = [
    ("planar", 8),
    ("planar_quadratic", 10),
    ("planar_source_box", 8),
    ("pendulum", 10),
    ("pendulum_source_box", 10),
    ("corridor", 7),
    ("gripper", 7),
];
