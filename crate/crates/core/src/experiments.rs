//! Conditioning sweeps, scattering runs and the Mie check, emitted as CSV.
//!
//! All studies share one schema:
//! `experiment,geometry,N,freq_hz,formulation,cond,cond_method,iterations,residual,walltime_s,notes`.
//! Floats are written in shortest round-trip form, and wall time is only
//! recorded on request, so repeated runs give identical bytes.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use log::{info, warn};
use num_complex::Complex64;

use crate::dense::{self, write_matrix, write_vector};
use crate::em::{
    assemble_operators, far_field, rcs, OperatorSet, PhysicsParams, PlaneWave, QuadratureConfig, RwgSpace,
    SPEED_OF_LIGHT,
};
use crate::error::{Error, Result};
use crate::filters::{precondition_system, FilterOptions};
use crate::geom::Vec3;
use crate::krylov::{cgnr, gmres, norm, DenseOperator, LinearOperator, Solution, SolveReport, SolverOptions};
use crate::mesh::{generate_icosphere, load_mesh, MeshFormat, TriangleMesh};
use crate::mie::MieOracle;
use crate::qh::{build_maps, condition_number, make_scaled_system, CondMethod, QuasiHelmholtzMaps};

pub const CSV_HEADER: [&str; 11] = [
    "experiment",
    "geometry",
    "N",
    "freq_hz",
    "formulation",
    "cond",
    "cond_method",
    "iterations",
    "residual",
    "walltime_s",
    "notes",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Icosphere { subdivisions: u32, radius: f64 },
    File(PathBuf),
}

impl Geometry {
    pub fn icosphere(subdivisions: u32) -> Self {
        Geometry::Icosphere {
            subdivisions,
            radius: 1.0,
        }
    }

    pub fn load(&self) -> Result<TriangleMesh> {
        match self {
            Geometry::Icosphere { subdivisions, radius } => generate_icosphere(*subdivisions, *radius),
            Geometry::File(path) => {
                let format = MeshFormat::from_path(path)
                    .ok_or_else(|| Error::Config(format!("unknown mesh extension: {}", path.display())))?;
                load_mesh(path, format)
            }
        }
    }

    /// Sphere radius for icospheres; the mean vertex distance from the
    /// origin otherwise.
    pub fn radius(&self, mesh: &TriangleMesh) -> f64 {
        match self {
            Geometry::Icosphere { radius, .. } => *radius,
            Geometry::File(_) => {
                mesh.vertices().iter().map(|v| v.norm()).sum::<f64>() / mesh.num_vertices() as f64
            }
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::Icosphere { subdivisions, radius } => write!(f, "icosphere:{subdivisions}:{radius}"),
            Geometry::File(p) => write!(f, "{}", p.display()),
        }
    }
}

impl FromStr for Geometry {
    type Err = Error;

    /// `icosphere:<subdivisions>[:<radius>]` or a mesh file path.
    fn from_str(s: &str) -> Result<Self> {
        let Some(rest) = s.strip_prefix("icosphere:") else {
            return Ok(Geometry::File(PathBuf::from(s)));
        };
        let mut parts = rest.split(':');
        let bad = || Error::Config(format!("invalid icosphere geometry '{s}'"));
        let subdivisions = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        let radius = match parts.next() {
            Some(r) => r.parse().map_err(|_| bad())?,
            None => 1.0,
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(Geometry::Icosphere { subdivisions, radius })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// `T j = e` in RWG coefficients.
    Raw,
    /// Frequency-scaled loop-star system.
    LoopStar,
    /// Loop-star system with spectral filters.
    Spectral,
}

impl Formulation {
    pub fn as_str(self) -> &'static str {
        match self {
            Formulation::Raw => "raw",
            Formulation::LoopStar => "loop-star",
            Formulation::Spectral => "spectral",
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Formulation::Raw),
            "loop-star" => Ok(Formulation::LoopStar),
            "spectral" => Ok(Formulation::Spectral),
            _ => Err(Error::Config(format!(
                "unknown formulation '{s}' (expected raw, loop-star or spectral)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMethod {
    #[default]
    Gmres,
    /// Conjugate gradient on the normal equations.
    Cgnr,
}

impl FromStr for SolverMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gmres" => Ok(SolverMethod::Gmres),
            "cgnr" => Ok(SolverMethod::Cgnr),
            _ => Err(Error::Config(format!("unknown solver '{s}' (expected gmres or cgnr)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub geometry: Geometry,
    pub frequencies: Vec<f64>,
    pub formulations: Vec<Formulation>,
    pub solver: SolverOptions,
    pub method: SolverMethod,
    pub quadrature: QuadratureConfig,
    pub filter: FilterOptions,
    pub wave: PlaneWave,
    /// Use Lanczos estimates instead of dense SVD.
    pub estimate: bool,
    /// Fill the `walltime_s` column.
    pub record_walltime: bool,
    /// Directory for dense operator dumps.
    pub dump_operators: Option<PathBuf>,
    /// Directory for sparse map dumps.
    pub dump_sparse: Option<PathBuf>,
    /// Directory for solved currents.
    pub currents_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(geometry: Geometry, frequencies: Vec<f64>, formulations: Vec<Formulation>) -> Self {
        Self {
            geometry,
            frequencies,
            formulations,
            solver: SolverOptions::default(),
            method: SolverMethod::Gmres,
            quadrature: QuadratureConfig::default(),
            filter: FilterOptions::default(),
            wave: PlaneWave::default_incidence(1.0),
            estimate: false,
            record_walltime: false,
            dump_operators: None,
            dump_sparse: None,
            currents_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frequencies.is_empty() {
            return Err(Error::Config("frequency list is empty".into()));
        }
        if let Some(f) = self.frequencies.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
            return Err(Error::Config(format!("frequency must be positive, got {f}")));
        }
        if self.formulations.is_empty() {
            return Err(Error::Config("formulation list is empty".into()));
        }
        if !(self.solver.tol > 0.0 && self.solver.tol < 1.0) {
            return Err(Error::Config(format!("solver tolerance must lie in (0, 1), got {}", self.solver.tol)));
        }
        if self.solver.max_iterations == 0 {
            return Err(Error::Config("max iterations must be positive".into()));
        }
        if self.formulations.contains(&Formulation::Spectral) {
            self.filter.validate()?;
        }
        Ok(())
    }
}

/// One CSV row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Record {
    pub experiment: String,
    pub geometry: String,
    pub n: Option<usize>,
    pub freq_hz: Option<f64>,
    pub formulation: Option<Formulation>,
    pub cond: Option<f64>,
    pub cond_method: Option<String>,
    pub iterations: Option<usize>,
    pub residual: Option<f64>,
    pub walltime_s: Option<f64>,
    pub notes: String,
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

impl Record {
    fn fields(&self) -> [String; 11] {
        [
            self.experiment.clone(),
            self.geometry.clone(),
            opt(&self.n),
            opt(&self.freq_hz),
            opt(&self.formulation),
            opt(&self.cond),
            opt(&self.cond_method),
            opt(&self.iterations),
            opt(&self.residual),
            opt(&self.walltime_s),
            self.notes.clone(),
        ]
    }
}

pub fn write_csv(records: &[Record], w: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CSV_HEADER)?;
    for r in records {
        wtr.write_record(r.fields())?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn to_csv_string(records: &[Record]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// Frequency at which a sphere of radius `radius` has electrical size `ka`.
pub fn frequency_for_ka(ka: f64, radius: f64) -> f64 {
    ka * SPEED_OF_LIGHT / (2.0 * PI * radius)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondResult {
    pub value: f64,
    pub method: CondMethod,
    /// The smallest singular value is at rounding level; `value` is then
    /// `σ_max/σ_min` as computed and understates the exact condition number.
    pub singular: bool,
}

/// Condition number of one formulation.
pub fn formulation_condition(
    formulation: Formulation,
    ops: &OperatorSet,
    maps: &QuasiHelmholtzMaps,
    filter: &FilterOptions,
    estimate: bool,
) -> Result<CondResult> {
    let result = match formulation {
        Formulation::Raw => {
            let t = ops.system_matrix();
            condition_number(&DenseOperator(&t), estimate)
        }
        Formulation::LoopStar => condition_number(&make_scaled_system(ops, maps)?, estimate),
        Formulation::Spectral => condition_number(&precondition_system(ops, maps, filter)?, estimate),
    };
    let method = if estimate || ops.size() > crate::qh::DENSE_LIMIT {
        CondMethod::LanczosEstimate
    } else {
        CondMethod::DenseSvd
    };
    match result {
        Ok(c) => Ok(CondResult {
            value: c.value,
            method: c.method,
            singular: false,
        }),
        Err(Error::SingularMatrix { ratio }) if ratio > 0.0 => Ok(CondResult {
            value: 1.0 / ratio,
            method,
            singular: true,
        }),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub formulation: Formulation,
    /// RWG coefficients.
    pub currents: Vec<Complex64>,
    /// Report of the solve in the formulation's own coordinates.
    pub report: SolveReport,
    /// `‖T j − e‖/‖e‖` of the recovered currents.
    pub rwg_residual: f64,
}

fn run_solver(op: &(impl LinearOperator + ?Sized), b: &[Complex64], method: SolverMethod, opts: &SolverOptions) -> Result<Solution> {
    let r = match method {
        SolverMethod::Gmres => gmres(op, b, opts),
        SolverMethod::Cgnr => cgnr(op, b, opts),
    };
    match r {
        Err(Error::MaxIterationsExceeded(sol)) => Ok(*sol),
        other => other,
    }
}

/// `‖T j − e‖/‖e‖`.
pub fn rwg_residual(ops: &OperatorSet, j: &[Complex64]) -> f64 {
    let en = norm(&ops.e);
    if en == 0.0 {
        return norm(j);
    }
    let jk = Complex64::new(0.0, ops.params.wavenumber);
    let ta = dense::matvec(&ops.ta, j);
    let tp = ops.apply_tphi(j);
    let r: Vec<Complex64> = ta
        .iter()
        .zip(&tp)
        .zip(&ops.e)
        .map(|((a, p), e)| jk * a + p / jk - e)
        .collect();
    norm(&r) / en
}

/// Solve the scattering problem in one formulation. A solve that reaches
/// the iteration limit is returned with `converged = false`.
pub fn solve_formulation(
    formulation: Formulation,
    ops: &OperatorSet,
    maps: &QuasiHelmholtzMaps,
    filter: &FilterOptions,
    method: SolverMethod,
    opts: &SolverOptions,
) -> Result<SolveOutcome> {
    let (currents, report) = match formulation {
        Formulation::Raw => {
            let t = ops.system_matrix();
            let s = run_solver(&DenseOperator(&t), &ops.e, method, opts)?;
            (s.x, s.report)
        }
        Formulation::LoopStar => {
            let sys = make_scaled_system(ops, maps)?;
            let s = run_solver(&sys, &sys.rhs(&ops.e), method, opts)?;
            (sys.recover_currents(&s.x), s.report)
        }
        Formulation::Spectral => {
            let sys = precondition_system(ops, maps, filter)?;
            let s = run_solver(&sys, &sys.rhs(&ops.e), method, opts)?;
            (sys.recover_currents(&s.x), s.report)
        }
    };
    let rwg_residual = rwg_residual(ops, &currents);
    Ok(SolveOutcome {
        formulation,
        currents,
        report,
        rwg_residual,
    })
}

fn dump_sparse_maps(dir: &Path, maps: &QuasiHelmholtzMaps) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, m) in [
        ("lambda", maps.lambda()),
        ("sigma", maps.sigma()),
        ("lap_lambda", maps.lap_lambda()),
        ("lap_sigma", maps.lap_sigma()),
    ] {
        std::fs::write(dir.join(format!("{name}.mtx")), m.to_matrix_market())?;
    }
    Ok(())
}

fn dump_operator_set(dir: &Path, tag: &str, ops: &OperatorSet) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_matrix(&dir.join(format!("ta_{tag}.bin")), &ops.ta)?;
    write_matrix(&dir.join(format!("tphi_{tag}.bin")), &ops.tphi)?;
    write_vector(&dir.join(format!("e_{tag}.bin")), &ops.e)?;
    Ok(())
}

struct Prepared {
    mesh: TriangleMesh,
    maps: QuasiHelmholtzMaps,
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    let mesh = config.geometry.load()?;
    let maps = build_maps(&mesh)?;
    if let Some(dir) = &config.dump_sparse {
        dump_sparse_maps(dir, &maps)?;
    }
    Ok(Prepared { mesh, maps })
}

fn assemble(config: &ExperimentConfig, space: &RwgSpace, params: &PhysicsParams, tag: &str) -> Result<OperatorSet> {
    let ops = assemble_operators(space, params, &config.quadrature, &config.wave)?;
    if let Some(dir) = &config.dump_operators {
        dump_operator_set(dir, tag, &ops)?;
    }
    Ok(ops)
}

fn cond_record(
    experiment: &str,
    config: &ExperimentConfig,
    geometry: &Geometry,
    ops: &OperatorSet,
    maps: &QuasiHelmholtzMaps,
    formulation: Formulation,
) -> Result<(Record, CondResult)> {
    let start = Instant::now();
    let c = formulation_condition(formulation, ops, maps, &config.filter, config.estimate)?;
    let record = Record {
        experiment: experiment.into(),
        geometry: geometry.to_string(),
        n: Some(ops.size()),
        freq_hz: Some(ops.params.frequency),
        formulation: Some(formulation),
        cond: Some(c.value),
        cond_method: Some(c.method.as_str().into()),
        walltime_s: config.record_walltime.then(|| start.elapsed().as_secs_f64()),
        notes: if c.singular {
            "singular at working precision".into()
        } else {
            String::new()
        },
        ..Default::default()
    };
    info!(
        "{experiment} {geometry} N={} f={} {formulation}: cond {:e}",
        ops.size(),
        ops.params.frequency,
        c.value
    );
    Ok((record, c))
}

/// Condition number of every formulation at every frequency.
pub fn cond_vs_frequency(config: &ExperimentConfig) -> Result<Vec<Record>> {
    config.validate()?;
    let prep = prepare(config)?;
    let space = RwgSpace::new(&prep.mesh);
    let mut records = Vec::new();
    for (fi, &f) in config.frequencies.iter().enumerate() {
        let params = PhysicsParams::free_space(f)?;
        let ops = assemble(config, &space, &params, &format!("f{fi}"))?;
        for &form in &config.formulations {
            records.push(cond_record("cond-freq", config, &config.geometry, &ops, &prep.maps, form)?.0);
        }
    }
    Ok(records)
}

/// Least-squares slope of `log cond` against `log(1/h)` and the ratio of the
/// last to the first condition number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub formulation: Formulation,
    pub slope: f64,
    pub growth: f64,
}

/// Least-squares slope of `y` against `x`; NaN for fewer than two points.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 || y.len() != n {
        return f64::NAN;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone)]
pub struct RefinementResult {
    pub records: Vec<Record>,
    pub fits: Vec<SlopeFit>,
}

/// Condition numbers over a sequence of meshes at the first configured
/// frequency, with one fit row per formulation.
pub fn cond_vs_refinement(config: &ExperimentConfig, geometries: &[Geometry]) -> Result<RefinementResult> {
    config.validate()?;
    if geometries.is_empty() {
        return Err(Error::Config("geometry list is empty".into()));
    }
    let f = config.frequencies[0];
    let params = PhysicsParams::free_space(f)?;
    let mut records = Vec::new();
    let mut inv_h = Vec::new();
    let mut conds: Vec<Vec<f64>> = vec![Vec::new(); config.formulations.len()];
    for (gi, geometry) in geometries.iter().enumerate() {
        let sub = ExperimentConfig {
            geometry: geometry.clone(),
            ..config.clone()
        };
        let prep = prepare(&sub)?;
        let space = RwgSpace::new(&prep.mesh);
        let ops = assemble(&sub, &space, &params, &format!("g{gi}"))?;
        inv_h.push(1.0 / prep.mesh.h());
        for (fi, &form) in config.formulations.iter().enumerate() {
            let (mut record, c) = cond_record("cond-h", config, geometry, &ops, &prep.maps, form)?;
            record.notes = join_notes(&format!("h={}", prep.mesh.h()), &record.notes);
            conds[fi].push(c.value);
            records.push(record);
        }
    }
    if geometries.len() < 2 {
        warn!("a single mesh gives no refinement slope; reporting NaN");
    }
    let mut fits = Vec::new();
    for (fi, &form) in config.formulations.iter().enumerate() {
        let slope = loglog_slope(&inv_h, &conds[fi]);
        let growth = conds[fi].last().unwrap() / conds[fi][0];
        fits.push(SlopeFit {
            formulation: form,
            slope,
            growth,
        });
        records.push(Record {
            experiment: "cond-h-fit".into(),
            geometry: geometries.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "),
            freq_hz: Some(f),
            formulation: Some(form),
            notes: format!("slope={slope};growth={growth}"),
            ..Default::default()
        });
    }
    Ok(RefinementResult { records, fits })
}

fn join_notes(a: &str, b: &str) -> String {
    match (a.is_empty(), b.is_empty()) {
        (_, true) => a.into(),
        (true, _) => b.into(),
        _ => format!("{a};{b}"),
    }
}

fn solve_record(
    experiment: &str,
    config: &ExperimentConfig,
    ops: &OperatorSet,
    outcome: &SolveOutcome,
    start: Instant,
) -> Record {
    let mut notes = format!("rwg_residual={}", outcome.rwg_residual);
    if !outcome.report.converged {
        notes.push_str(";not converged");
    }
    Record {
        experiment: experiment.into(),
        geometry: config.geometry.to_string(),
        n: Some(ops.size()),
        freq_hz: Some(ops.params.frequency),
        formulation: Some(outcome.formulation),
        iterations: Some(outcome.report.iterations),
        residual: Some(outcome.report.residual),
        walltime_s: config.record_walltime.then(|| start.elapsed().as_secs_f64()),
        notes,
        ..Default::default()
    }
}

/// `|J|` at every triangle centroid.
pub fn triangle_current_magnitudes(space: &RwgSpace, currents: &[Complex64]) -> Vec<f64> {
    let mesh = space.mesh();
    let mut acc = vec![[Complex64::default(); 3]; mesh.num_triangles()];
    for (n, d) in space.dofs().iter().enumerate() {
        for t in [d.plus, d.minus] {
            let f = space.eval(n, t, mesh.centroid(t));
            for i in 0..3 {
                acc[t][i] += currents[n] * f[i];
            }
        }
    }
    acc.iter().map(|v| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()).collect()
}

fn write_currents(dir: &Path, space: &RwgSpace, outcome: &SolveOutcome) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let name = outcome.formulation.as_str();
    write_vector(&dir.join(format!("currents_{name}.bin")), &outcome.currents)?;
    let mut wtr = csv::Writer::from_path(dir.join(format!("triangle_current_{name}.csv")))?;
    wtr.write_record(["triangle", "magnitude"])?;
    for (t, m) in triangle_current_magnitudes(space, &outcome.currents).iter().enumerate() {
        wtr.write_record([t.to_string(), m.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ScatterResult {
    pub records: Vec<Record>,
    pub outcomes: Vec<SolveOutcome>,
}

/// Solve at the single configured frequency in every formulation.
pub fn scattering_run(config: &ExperimentConfig) -> Result<ScatterResult> {
    config.validate()?;
    if config.frequencies.len() != 1 {
        return Err(Error::Config(format!(
            "a scattering run takes one frequency, got {}",
            config.frequencies.len()
        )));
    }
    let prep = prepare(config)?;
    let space = RwgSpace::new(&prep.mesh);
    let params = PhysicsParams::free_space(config.frequencies[0])?;
    let ops = assemble(config, &space, &params, "f0")?;
    let mut records = Vec::new();
    let mut outcomes = Vec::new();
    for &form in &config.formulations {
        let start = Instant::now();
        let outcome = solve_formulation(form, &ops, &prep.maps, &config.filter, config.method, &config.solver)?;
        info!(
            "scatter {} {form}: {} iterations, residual {:e}",
            config.geometry, outcome.report.iterations, outcome.report.residual
        );
        records.push(solve_record("scatter", config, &ops, &outcome, start));
        if let Some(dir) = &config.currents_dir {
            write_currents(dir, &space, &outcome)?;
        }
        outcomes.push(outcome);
    }
    Ok(ScatterResult { records, outcomes })
}

/// Observation directions on the E-plane and H-plane cuts, `samples`
/// scattering angles each from forward to back.
pub fn cut_directions(wave: &PlaneWave, samples: usize) -> Vec<Vec3> {
    let d = wave.direction.normalized();
    let e = wave.polarization.normalized();
    let h = d.cross(e);
    let mut out = Vec::with_capacity(2 * samples);
    for plane in [e, h] {
        for s in 0..samples {
            let theta = PI * s as f64 / (samples - 1).max(1) as f64;
            out.push(d * theta.cos() + plane * theta.sin());
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct RcsResult {
    pub records: Vec<Record>,
    pub directions: Vec<Vec3>,
    pub solver_rcs: Vec<f64>,
    pub mie_rcs: Vec<f64>,
    /// `‖σ_solver − σ_Mie‖₂ / ‖σ_Mie‖₂` over the cut directions.
    pub relative_l2: f64,
    pub outcome: SolveOutcome,
}

/// Bistatic RCS of the first configured formulation against the Mie series
/// at electrical size `ka`; the configured frequencies are ignored.
pub fn rcs_check(config: &ExperimentConfig, ka: f64, samples: usize) -> Result<RcsResult> {
    if !(ka > 0.0 && ka.is_finite()) {
        return Err(Error::Config(format!("ka must be positive, got {ka}")));
    }
    if samples < 2 {
        return Err(Error::Config("at least two angles per cut are needed".into()));
    }
    let prep = prepare(config)?;
    let radius = config.geometry.radius(&prep.mesh);
    let cfg = ExperimentConfig {
        frequencies: vec![frequency_for_ka(ka, radius)],
        ..config.clone()
    };
    cfg.validate()?;
    let form = cfg.formulations[0];
    let space = RwgSpace::new(&prep.mesh);
    let params = PhysicsParams::from_wavenumber(ka / radius)?;
    let ops = assemble(&cfg, &space, &params, "ka")?;
    let start = Instant::now();
    let outcome = solve_formulation(form, &ops, &prep.maps, &cfg.filter, cfg.method, &cfg.solver)?;
    let directions = cut_directions(&cfg.wave, samples);
    let pattern = far_field(&space, &outcome.currents, &params, &directions)?;
    let solver_rcs = rcs(&pattern, cfg.wave.amplitude);
    let mie_rcs = MieOracle::new(radius, params.wavenumber)?.rcs(&cfg.wave, &directions);
    let diff: f64 = solver_rcs.iter().zip(&mie_rcs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let relative_l2 = diff / mie_rcs.iter().map(|b| b * b).sum::<f64>().sqrt();
    let mut record = solve_record("rcs-check", &cfg, &ops, &outcome, start);
    record.notes = format!("ka={ka};rcs_rel_l2={relative_l2};{}", record.notes);
    if let Some(dir) = &cfg.currents_dir {
        write_currents(dir, &space, &outcome)?;
    }
    Ok(RcsResult {
        records: vec![record],
        directions,
        solver_rcs,
        mie_rcs,
        relative_l2,
        outcome,
    })
}
