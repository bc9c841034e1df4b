//! Scenario runs and their output files.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use nbcollide_core::bodies::Shape;
use nbcollide_core::collision::{body_marker, component_marker, Mode};
use nbcollide_core::dynamics::{trajectory_header, trajectory_rows, DynamicsError, ScenarioState, StepRecord};
use nbcollide_core::fmm::{field_to_vtk, march, MarchOptions};

use crate::config::{ConfigError, ScenarioConfig};

/// Environment variable overriding the output directory.
pub const OUTPUT_ENV: &str = "NBCOLLIDE_OUTPUT";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Simulation(#[from] DynamicsError),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 3,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Takes precedence over the configured directory.
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
    pub vtk: bool,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub directory: PathBuf,
    pub steps: u64,
    pub final_time: f64,
    pub bodies: usize,
    /// Overlapping pairs over the whole run.
    pub overlap_events: usize,
    /// Smallest pair distance seen, if any pair was ever detected.
    pub min_distance: Option<f64>,
    /// Steps that had at least one pair.
    pub steps_with_pairs: u64,
    pub wall_seconds: f64,
}

impl RunSummary {
    fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "final_time = {:.12e}", self.final_time);
        let _ = writeln!(s, "bodies = {}", self.bodies);
        let _ = writeln!(s, "overlap_events = {}", self.overlap_events);
        match self.min_distance {
            Some(d) => {
                let _ = writeln!(s, "min_distance = {d:.12e}");
            }
            None => s.push_str("min_distance = none\n"),
        }
        let _ = writeln!(s, "steps_with_pairs = {}", self.steps_with_pairs);
        let _ = writeln!(s, "wall_seconds = {:.3}", self.wall_seconds);
        s
    }
}

/// Output directory: `--output`, then the environment override, then the
/// config.
pub fn resolve_output(cfg: &ScenarioConfig, opts: &RunOptions) -> PathBuf {
    if let Some(d) = &opts.output {
        return d.clone();
    }
    match std::env::var_os(OUTPUT_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d).join(&cfg.name),
        _ => cfg.output_directory(),
    }
}

/// Runs a scenario to its final time, writing `trajectory.csv`,
/// `collisions/step_NNNNNN.csv`, `summary.txt` and, with `vtk`, legacy VTK
/// files under `vtk/`.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunSummary, RunError> {
    let state = cfg.build(opts.seed)?;
    let workers = opts.workers.unwrap_or(cfg.output.workers).max(1);
    let dir = resolve_output(cfg, opts);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    pool.install(|| simulate(cfg, state, &dir, opts.vtk))
}

fn simulate(cfg: &ScenarioConfig, mut state: ScenarioState, dir: &Path, vtk: bool) -> Result<RunSummary, RunError> {
    fs::create_dir_all(dir.join("collisions"))?;
    if vtk {
        fs::create_dir_all(dir.join("vtk"))?;
    }
    let started = Instant::now();
    let ids: Vec<usize> = state.bodies.iter().map(|b| b.id).collect();
    let mut trajectory = BufWriter::new(File::create(dir.join("trajectory.csv"))?);
    writeln!(trajectory, "{}", trajectory_header(state.dim))?;
    trajectory.write_all(trajectory_rows(&state, &StepRecord::default()).as_bytes())?;
    if vtk {
        write_vtk(&state, dir)?;
    }

    let total = (cfg.time.final_time / state.dt - 1e-9).ceil().max(0.0) as u64;
    let every = cfg.output.snapshot_every;
    let log_every = (total / 20).max(1);
    let mut min_distance: Option<f64> = None;
    let mut steps_with_pairs = 0;
    while state.step < total {
        let record = state.step()?;
        trajectory.write_all(trajectory_rows(&state, &record).as_bytes())?;
        if let Some(d) = record.map.min_distance() {
            min_distance = Some(min_distance.map_or(d, |m| m.min(d)));
            steps_with_pairs += 1;
        }
        let last = state.step == total;
        if last || (every > 0 && state.step % every == 0) {
            let path = dir.join("collisions").join(format!("step_{:06}.csv", state.step));
            fs::write(path, record.map.to_csv(state.dim, &ids))?;
            if vtk {
                write_vtk(&state, dir)?;
            }
        }
        if state.step % log_every == 0 {
            log::info!(
                "{}: step {}/{} t = {:.4} pairs {} overlaps {}",
                cfg.name,
                state.step,
                total,
                state.t,
                record.map.len(),
                state.overlap_events
            );
        }
    }
    trajectory.flush()?;
    let summary = RunSummary {
        directory: dir.to_path_buf(),
        steps: state.step,
        final_time: state.t,
        bodies: state.bodies.len(),
        overlap_events: state.overlap_events,
        min_distance,
        steps_with_pairs,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    fs::write(dir.join("summary.txt"), summary.to_text())?;
    Ok(summary)
}

/// Body centers as VTK points; in general mode also the narrow-band
/// distance from all body surfaces on the detection mesh.
fn write_vtk(state: &ScenarioState, dir: &Path) -> Result<(), RunError> {
    let vtk = dir.join("vtk");
    let mut s = String::new();
    let n = state.bodies.len();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\nbodies at t = {}\nASCII\nDATASET POLYDATA", state.t);
    let _ = writeln!(s, "POINTS {n} double");
    for b in &state.bodies {
        let _ = writeln!(s, "{} {} {}", b.position.x, b.position.y, b.position.z);
    }
    let _ = writeln!(s, "VERTICES {n} {}", 2 * n);
    for i in 0..n {
        let _ = writeln!(s, "1 {i}");
    }
    let _ = writeln!(s, "POINT_DATA {n}\nSCALARS id int 1\nLOOKUP_TABLE default");
    for b in &state.bodies {
        let _ = writeln!(s, "{}", b.id);
    }
    let _ = writeln!(s, "SCALARS radius double 1\nLOOKUP_TABLE default");
    for b in &state.bodies {
        let _ = writeln!(s, "{}", b.effective_radius());
    }
    fs::write(vtk.join(format!("bodies_{:06}.vtk", state.step)), s)?;

    if state.collision.mode == Mode::General {
        let mesh = state.detection_mesh()?;
        let mut markers = Vec::new();
        for b in &state.bodies {
            match b.shape {
                Shape::Swimmer(_) => markers.extend((0..3).map(|k| component_marker(b.id, k))),
                Shape::Meshed { ref marker, .. } => markers.push(marker.clone()),
                Shape::Sphere { .. } => markers.push(body_marker(b.id)),
            }
        }
        let refs: Vec<&str> = markers.iter().map(String::as_str).collect();
        let seeds = mesh.boundary_vertices_any(&refs).map_err(DynamicsError::from)?;
        let opts = MarchOptions {
            d_max: Some(state.collision.band_factor * state.collision.rho),
            delta: None,
            record_order: false,
        };
        let (field, _) = march(&mesh, &seeds, "bodies", opts)
            .map_err(|e| DynamicsError::Invalid(format!("distance field for output: {e}")))?;
        fs::write(vtk.join(format!("field_{:06}.vtk", state.step)), field_to_vtk(&field, &mesh))?;
    }
    Ok(())
}
