//! Narrow-band and collision-detection benchmarks.

use std::fmt::Write as _;
use std::time::Instant;

use nbcollide_core::bodies::{RigidBody, Shape};
use nbcollide_core::collision::{
    body_marker, detect_general, forces_general, preprocess, BoxDomain, CollisionMap, Domain, Mode,
};
use nbcollide_core::fmm::{band_statistics, narrow_band_fast_march};
use nbcollide_core::mesh::{generate_annulus, generate_perforated_box, HoleShape, MeshError, PerforatedBox, SimplicialMesh};
use nbcollide_core::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid benchmark input: {0}")]
    Invalid(String),
    #[error("mesh generation failed: {0}")]
    Mesh(#[from] MeshError),
    #[error("fast marching failed: {0}")]
    Fmm(#[from] nbcollide_core::fmm::FmmError),
    #[error("collision pipeline failed: {0}")]
    Collision(#[from] nbcollide_core::collision::CollisionError),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Invalid(_) | BenchError::Mesh(_) => 2,
            _ => 3,
        }
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Times `f` once to warm up, then `reps` more times; returns the median.
fn median_time(reps: usize, mut f: impl FnMut() -> Result<(), BenchError>) -> Result<f64, BenchError> {
    f()?;
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t = Instant::now();
        f()?;
        times.push(t.elapsed().as_secs_f64());
    }
    Ok(median(times))
}

#[derive(Clone, Debug, PartialEq)]
pub struct NarrowbandBench {
    pub r_inner: f64,
    pub r_outer: f64,
    pub h: f64,
    /// Band widths, strictly decreasing; the first must cover the annulus.
    pub d_max: Vec<f64>,
    pub repetitions: usize,
}

impl Default for NarrowbandBench {
    fn default() -> Self {
        Self { r_inner: 0.1, r_outer: 2.0, h: 0.01, d_max: vec![1.9, 1.0, 0.5, 0.25, 0.125, 0.0625], repetitions: 5 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NarrowbandRow {
    pub d_max: f64,
    pub band_elements: usize,
    pub total_elements: usize,
    pub ratio: f64,
    pub median_seconds: f64,
    /// Median time of the first (full-coverage) row over this row's.
    pub speedup: f64,
}

/// Narrow-band fast marching from the inner circle of an annulus for each
/// band width.
pub fn run_narrowband_bench(bench: &NarrowbandBench) -> Result<Vec<NarrowbandRow>, BenchError> {
    if bench.d_max.is_empty() {
        return Err(BenchError::Invalid("at least one d_max is required".into()));
    }
    if bench.d_max.iter().any(|d| !(*d > 0.0)) {
        return Err(BenchError::Invalid("d_max values must be positive".into()));
    }
    if bench.d_max.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(BenchError::Invalid("d_max values must be sorted in decreasing order".into()));
    }
    if bench.repetitions < 5 {
        return Err(BenchError::Invalid(format!("need at least 5 repetitions, got {}", bench.repetitions)));
    }
    let mesh = generate_annulus(bench.r_inner, bench.r_outer, bench.h)?;
    let mut rows: Vec<NarrowbandRow> = Vec::with_capacity(bench.d_max.len());
    for &d in &bench.d_max {
        let field = narrow_band_fast_march(&mesh, "inner", d, None)?;
        let stats = band_statistics(&field, &mesh);
        if rows.is_empty() && stats.band_elements != stats.total_elements {
            return Err(BenchError::Invalid(format!(
                "first d_max = {d} covers {} of {} elements; it must cover the whole annulus",
                stats.band_elements, stats.total_elements
            )));
        }
        let t = median_time(bench.repetitions, || {
            narrow_band_fast_march(&mesh, "inner", d, None)?;
            Ok(())
        })?;
        let reference = rows.first().map_or(t, |r| r.median_seconds);
        rows.push(NarrowbandRow {
            d_max: d,
            band_elements: stats.band_elements,
            total_elements: stats.total_elements,
            ratio: stats.ratio,
            median_seconds: t,
            speedup: reference / t,
        });
    }
    Ok(rows)
}

pub fn narrowband_csv(rows: &[NarrowbandRow]) -> String {
    let mut s = String::from("d_max,band_elements,total_elements,ratio,median_seconds,speedup\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{:.4},{:.6e},{:.4}",
            r.d_max, r.band_elements, r.total_elements, r.ratio, r.median_seconds, r.speedup
        );
    }
    s
}

pub fn narrowband_table(rows: &[NarrowbandRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>8} {:>10} {:>10} {:>12} {:>9}", "d_max", "E_b", "E/E_b", "time [s]", "speedup");
    for r in rows {
        let _ = writeln!(
            s,
            "{:>8} {:>10} {:>10.2} {:>12.5} {:>9.2}",
            r.d_max, r.band_elements, r.ratio, r.median_seconds, r.speedup
        );
    }
    s
}

/// Lattice of identical disks (spheres) whose gaps are either clearly
/// inside or clearly outside the collision zone, so the expected pair
/// counts are known exactly.
///
/// Bodies sit on lines along x. Line `l` has its first `line_close[l]` gaps
/// close and the rest stretched so every line spans the same width; the
/// first `layer_close` gaps between y-layers are close, all others far.
/// Bodies on the outer ring sit `wall_gap` from the walls.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpec {
    pub dim: usize,
    /// Bodies per axis.
    pub n: usize,
    pub radius: f64,
    pub rho: f64,
    pub h: f64,
    pub close_gap: f64,
    /// Smallest far gap.
    pub far_gap: f64,
    pub wall_gap: f64,
    /// Close gaps per x-line, y fastest then z; `n^(dim−1)` entries.
    pub line_close: Vec<usize>,
    pub layer_close: usize,
}

impl LatticeSpec {
    /// Geometry defaults per dimension with no close gaps.
    pub fn uniform(dim: usize, n: usize) -> Self {
        let lines = n.pow(dim as u32 - 1);
        // 3D carved meshes resolve gaps of about 2h or more
        let (radius, rho, h, close_gap, far_gap) =
            if dim == 2 { (0.05, 0.03, 0.01, 0.01, 0.08) } else { (0.25, 0.25, 0.05, 0.12, 0.6) };
        Self {
            dim,
            n,
            radius,
            rho,
            h,
            close_gap,
            far_gap,
            wall_gap: close_gap,
            line_close: vec![0; lines],
            layer_close: 0,
        }
    }

    /// Layouts whose pair counts match the published tables: 2D rows 1,
    /// 25, 49, 81, 100 and 3D rows 1, 27, 64, 125. Other perfect powers
    /// get a uniform far-spaced lattice.
    pub fn for_count(count: usize, dim: usize) -> Result<Self, BenchError> {
        if dim != 2 && dim != 3 {
            return Err(BenchError::Invalid(format!("dimension must be 2 or 3, got {dim}")));
        }
        let n = (count as f64).powf(1.0 / dim as f64).round() as usize;
        if count == 0 || n.pow(dim as u32) != count {
            return Err(BenchError::Invalid(format!("body count {count} is not a perfect {}-th power", dim)));
        }
        let mut spec = Self::uniform(dim, n);
        match (dim, count) {
            (2, 49) => spec.line_close = vec![4; 7],
            (2, 81) => spec.line_close = vec![8; 9],
            (2, 100) => {
                spec.line_close = vec![9; 10];
                spec.layer_close = 1;
            }
            (3, 125) => spec.line_close = (0..25).map(|l| if l < 5 { 2 } else { 3 }).collect(),
            _ => {}
        }
        Ok(spec)
    }

    /// A single body far from every wall.
    pub fn isolated(dim: usize) -> Self {
        let mut spec = Self::uniform(dim, 1);
        spec.wall_gap = spec.far_gap;
        spec
    }

    fn validate(&self) -> Result<(), BenchError> {
        let lines = self.n.pow(self.dim as u32 - 1);
        if self.n == 0 || self.line_close.len() != lines {
            return Err(BenchError::Invalid(format!("expected {lines} line entries, got {}", self.line_close.len())));
        }
        let full = self.n - 1;
        if self.line_close.iter().any(|&k| k > full) || self.layer_close > full {
            return Err(BenchError::Invalid("more close gaps than gaps".into()));
        }
        let equal = self.line_close.windows(2).all(|w| w[0] == w[1]);
        if !equal && self.line_close.contains(&full) {
            return Err(BenchError::Invalid("fully close lines need every line fully close".into()));
        }
        if self.layer_close > 0 && !equal {
            return Err(BenchError::Invalid("close layers need identical lines".into()));
        }
        if self.dim == 3 && self.layer_close > 0 {
            return Err(BenchError::Invalid("close layers are 2D only".into()));
        }
        Ok(())
    }

    /// Domain box `(lo, hi)`; `lo` is the origin.
    pub fn domain(&self) -> (Vec3, Vec3) {
        let (n, d) = (self.n, 2.0 * self.radius);
        let gaps = n.saturating_sub(1) as f64;
        let min_close = self.line_close.iter().copied().min().unwrap_or(0) as f64;
        let width = |close: f64| 2.0 * self.wall_gap + n as f64 * d + close * self.close_gap + (gaps - close) * self.far_gap;
        let mut hi = Vec3::zeros();
        hi.x = width(min_close);
        hi.y = width(self.layer_close as f64);
        if self.dim == 3 {
            hi.z = width(0.0);
        }
        (Vec3::zeros(), hi)
    }

    pub fn centers(&self) -> Vec<Vec3> {
        let (n, d) = (self.n, 2.0 * self.radius);
        let (_, hi) = self.domain();
        let start = self.wall_gap + self.radius;
        let axis = |close: usize, far: f64| -> Vec<f64> {
            let mut out = vec![start];
            for g in 0..n.saturating_sub(1) {
                let gap = if g < close { self.close_gap } else { far };
                out.push(out[g] + d + gap);
            }
            out
        };
        let ys = axis(self.layer_close, self.far_gap);
        let zs = if self.dim == 3 { axis(0, self.far_gap) } else { vec![0.0] };
        let mut out = Vec::with_capacity(n.pow(self.dim as u32));
        for (iz, z) in zs.iter().enumerate() {
            for (iy, y) in ys.iter().enumerate() {
                let k = self.line_close[iz * n + iy];
                let far = if n > 1 && k < n - 1 {
                    (hi.x - 2.0 * self.wall_gap - n as f64 * d - k as f64 * self.close_gap) / (n - 1 - k) as f64
                } else {
                    self.far_gap
                };
                for x in axis(k, far) {
                    out.push(Vec3::new(x, *y, *z));
                }
            }
        }
        out
    }

    /// `(body-body, body-wall)` pairs implied by the layout.
    pub fn expected_pairs(&self) -> (usize, usize) {
        let n = self.n;
        let per_layer = n.pow(self.dim as u32 - 1);
        let body = self.line_close.iter().sum::<usize>() + self.layer_close * per_layer;
        let near = self.wall_gap <= self.rho;
        let wall = match (n, near) {
            (_, false) => 0,
            (1, true) => 1,
            _ => n.pow(self.dim as u32) - (n - 2).pow(self.dim as u32),
        };
        (body, wall)
    }

    pub fn bodies(&self) -> Vec<RigidBody> {
        self.centers()
            .into_iter()
            .enumerate()
            .map(|(id, c)| {
                RigidBody::new(id, self.dim, Shape::Sphere { radius: self.radius }, 1.0, c).expect("valid lattice body")
            })
            .collect()
    }

    pub fn mesh(&self) -> Result<SimplicialMesh, BenchError> {
        let (lo, hi) = self.domain();
        let mut spec = PerforatedBox::new(self.dim, lo, hi, self.h);
        for (id, c) in self.centers().into_iter().enumerate() {
            spec = spec.with_hole(body_marker(id), HoleShape::disk(c, self.radius));
        }
        Ok(generate_perforated_box(&spec)?)
    }
}

/// One detection-pipeline pass: preprocess, detect, forces.
pub fn collision_pipeline(
    bodies: &[RigidBody],
    domain: &Domain,
    mesh: &SimplicialMesh,
    rho: f64,
) -> Result<CollisionMap, BenchError> {
    let pre = preprocess(bodies, domain, Mode::General)?;
    let map = detect_general(&pre, mesh, bodies, rho, 1.5)?;
    // negligible stiffness: the bodies are not moved
    let forces = forces_general(&map, bodies, 1e30, 1e30);
    debug_assert_eq!(forces.len(), bodies.len());
    Ok(map)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectionRow {
    pub bodies: usize,
    pub mesh_nodes: usize,
    pub body_body: usize,
    pub body_wall: usize,
    pub expected: (usize, usize),
    /// `(workers, median seconds per pipeline pass)`.
    pub times: Vec<(usize, f64)>,
}

impl DetectionRow {
    /// `T_1 / T_N` per worker count; needs a 1-worker timing.
    pub fn speedups(&self) -> Vec<(usize, f64)> {
        let Some(&(_, t1)) = self.times.iter().find(|(w, _)| *w == 1) else {
            return Vec::new();
        };
        self.times.iter().map(|&(w, t)| (w, t1 / t)).collect()
    }

    pub fn counts_match(&self) -> bool {
        (self.body_body, self.body_wall) == self.expected
    }
}

/// Times the collision pipeline on `spec` for each worker count. The mesh
/// is built once, outside the timings.
pub fn run_detection_case(spec: &LatticeSpec, workers: &[usize], repetitions: usize) -> Result<DetectionRow, BenchError> {
    spec.validate()?;
    if workers.is_empty() || workers.contains(&0) {
        return Err(BenchError::Invalid("worker counts must be positive".into()));
    }
    if repetitions == 0 {
        return Err(BenchError::Invalid("need at least one repetition".into()));
    }
    let bodies = spec.bodies();
    let mesh = spec.mesh()?;
    let (lo, hi) = spec.domain();
    let domain = Domain::Box(BoxDomain::new(spec.dim, lo, hi));
    let map = collision_pipeline(&bodies, &domain, &mesh, spec.rho)?;
    let mut times = Vec::with_capacity(workers.len());
    for &w in workers {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(w).build()?;
        let t = pool.install(|| {
            median_time(repetitions, || {
                collision_pipeline(&bodies, &domain, &mesh, spec.rho)?;
                Ok(())
            })
        })?;
        times.push((w, t));
    }
    Ok(DetectionRow {
        bodies: bodies.len(),
        mesh_nodes: mesh.vertex_count(),
        body_body: map.body_pair_count(),
        body_wall: map.wall_pair_count(),
        expected: spec.expected_pairs(),
        times,
    })
}

pub fn run_detection_bench(
    counts: &[usize],
    dim: usize,
    workers: &[usize],
    repetitions: usize,
) -> Result<Vec<DetectionRow>, BenchError> {
    if counts.is_empty() || counts.contains(&0) {
        return Err(BenchError::Invalid("body counts must be positive".into()));
    }
    counts.iter().map(|&c| run_detection_case(&LatticeSpec::for_count(c, dim)?, workers, repetitions)).collect()
}

pub fn detection_csv(rows: &[DetectionRow]) -> String {
    let mut s = String::from("bodies,mesh_nodes,body_body,body_wall,expected_body_body,expected_body_wall,workers,median_seconds,speedup\n");
    for r in rows {
        let speedups = r.speedups();
        for (k, &(w, t)) in r.times.iter().enumerate() {
            let sp = speedups.get(k).map_or(String::new(), |(_, x)| format!("{x:.4}"));
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{:.6e},{}",
                r.bodies, r.mesh_nodes, r.body_body, r.body_wall, r.expected.0, r.expected.1, w, t, sp
            );
        }
    }
    s
}

pub fn detection_table(rows: &[DetectionRow]) -> String {
    let mut s = String::new();
    let workers: Vec<usize> = rows.first().map(|r| r.times.iter().map(|t| t.0).collect()).unwrap_or_default();
    let _ = write!(s, "{:>7} {:>10} {:>9} {:>9}", "bodies", "mesh nodes", "body-body", "body-wall");
    for w in &workers {
        let _ = write!(s, " {:>10}", format!("t{w} [ms]"));
    }
    for w in workers.iter().filter(|w| **w != 1) {
        let _ = write!(s, " {:>7}", format!("T1/T{w}"));
    }
    s.push('\n');
    for r in rows {
        let _ = write!(s, "{:>7} {:>10} {:>9} {:>9}", r.bodies, r.mesh_nodes, r.body_body, r.body_wall);
        for (_, t) in &r.times {
            let _ = write!(s, " {:>10.3}", t * 1e3);
        }
        for (w, x) in r.speedups() {
            if w != 1 {
                let _ = write!(s, " {x:>7.2}");
            }
        }
        if !r.counts_match() {
            let _ = write!(s, "  (expected {}/{})", r.expected.0, r.expected.1);
        }
        s.push('\n');
    }
    let _ = writeln!(
        s,
        "timings cover preprocess, detection and forces only; the share of a coupled fluid solve is out of scope (available cores: {})",
        std::thread::available_parallelism().map_or(1, |n| n.get())
    );
    s
}
