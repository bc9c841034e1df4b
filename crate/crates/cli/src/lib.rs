//! Scenario runner and benchmark harness for the narrow-band collision
//! model.

pub mod bench;
pub mod config;
pub mod run;

pub use config::{ConfigError, ScenarioConfig};
pub use run::{run_scenario, RunError, RunOptions, RunSummary};

/// Directory holding the bundled scenario files.
pub fn scenarios_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

/// Names of the bundled scenarios.
pub const BUNDLED: &[&str] = &[
    "falling_disk_2d",
    "falling_disk_3d",
    "ellipse_channel",
    "ellipsoid_box",
    "two_disks",
    "hundred_disks",
    "stenosis",
    "swimmer",
];
