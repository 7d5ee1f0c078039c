//! Experiment runner: configuration, the stage pipeline and artifact files.
//!
//! Artifacts under the output directory:
//!
//! ```text
//! trajectory/          index.txt plus one mesh per snapshot
//! diagnostics.csv      one row per snapshot
//! norms.csv            spacetime norms over S and the cylinders
//! certification.json   constants tables and check records
//! blowup.csv           rescaled blow-up sequence
//! report.txt           summary
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{
    diagnostics_rows, extinction_estimate, hat_fields, max_h_series, pinching_constant, DiagnosticsError,
};
use crate::flow::{evolve, FlowError, StopCriteria, Termination};
use crate::geometry::io::MeshIoError;
use crate::geometry::{Hypersurface, Vec3};
use crate::ineqlab::{
    bump_field, constants_for, constants_table, critical_exponent, critical_smallness_check, interpolation_check,
    lambda_of, lemma31_check, mean_curvature_bound_check, michael_simon_check, moser_ladder, prop32_check,
    reverse_holder_check, BumpField, CertificationReport, IneqError, Record, Subsolution, C_N_EMP,
    DEFAULT_SOBOLEV_Q,
};
use crate::rescale::{
    contradiction_witness, select_blowup_sequence, vanishing_local_norms, RescaleError, VanishingSeries,
    WitnessReport,
};
use crate::shapes::{ShapeError, ShapeSpec};
use crate::spacetime::{
    read_trajectory, spacetime_norm, write_trajectory, FlowTrajectory, NormReport, ParabolicCylinder,
    SpacetimeError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CERTIFICATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::ConfigInvalid(_) => EXIT_CONFIG,
            ExperimentError::Io { .. } => EXIT_IO,
            ExperimentError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

macro_rules! numerical {
    ($($t:ty),*) => {$(
        impl From<$t> for ExperimentError {
            fn from(e: $t) -> Self {
                ExperimentError::Numerical(e.to_string())
            }
        }
    )*};
}
numerical!(FlowError, DiagnosticsError, IneqError, RescaleError, crate::geometry::GeometryError);

impl From<SpacetimeError> for ExperimentError {
    fn from(e: SpacetimeError) -> Self {
        match e {
            SpacetimeError::MeshIo(MeshIoError::Io { path, source }) => ExperimentError::Io { path, source },
            e => ExperimentError::Numerical(e.to_string()),
        }
    }
}

impl From<ShapeError> for ExperimentError {
    fn from(e: ShapeError) -> Self {
        match e {
            ShapeError::Geometry(g) => ExperimentError::Numerical(g.to_string()),
            e => ExperimentError::ConfigInvalid(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Where the Moser cylinders are centered.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenterPolicy {
    /// Vertex of largest `H` on the snapshot nearest `t = 1`.
    #[default]
    ArgmaxH,
    Point([f64; 3]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    #[serde(default = "one_usize")]
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsConfig {
    #[serde(default = "default_exponents")]
    pub exponents: Vec<f64>,
    /// Cylinder levels `D_0 ..= D_levels` reported when the trajectory covers
    /// `[0, 1]`.
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default)]
    pub center: CenterPolicy,
}

impl Default for NormsConfig {
    fn default() -> Self {
        Self {
            exponents: default_exponents(),
            levels: default_levels(),
            center: CenterPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupConfig {
    #[serde(default)]
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    #[serde(default = "default_c_n")]
    pub c_n: f64,
    /// Integrability exponent of `f`; defaults to `λ (n+2)/2`.
    pub q: Option<f64>,
    /// Base exponent of the ladder; defaults to `n + 2`.
    pub beta: Option<f64>,
    #[serde(default = "default_ladder")]
    pub ladder_levels: usize,
    /// Random bump fields for the static inequalities.
    #[serde(default = "default_fields")]
    pub fields: usize,
    #[serde(default = "yes")]
    pub moser: bool,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self {
            c_n: default_c_n(),
            q: None,
            beta: None,
            ladder_levels: default_ladder(),
            fields: default_fields(),
            moser: true,
        }
    }
}

fn one_usize() -> usize {
    1
}
fn default_exponents() -> Vec<f64> {
    vec![2.0]
}
fn default_levels() -> usize {
    3
}
fn default_c_n() -> f64 {
    C_N_EMP
}
fn default_ladder() -> usize {
    5
}
fn default_fields() -> usize {
    10
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Vertex count for curves, segments for tori and dumbbells; ignored by
    /// spheres.
    #[serde(default)]
    pub resolution: usize,
    pub shape: ShapeSpec,
    pub stop: StopCriteria,
    pub output: OutputConfig,
    #[serde(default)]
    pub norms: NormsConfig,
    #[serde(default)]
    pub blowup: BlowupConfig,
    #[serde(default)]
    pub constants: ConstantsConfig,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ExperimentError::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::ConfigInvalid(m));
        self.shape.check()?;
        self.stop.check().map_err(|e| ExperimentError::ConfigInvalid(e.to_string()))?;
        if self.name.is_empty() || self.name.contains(',') {
            return bad(format!("name must be nonempty and comma-free, got {:?}", self.name));
        }
        if self.output.stride == 0 {
            return bad("stride must be at least 1".into());
        }
        if let Some(p) = self.norms.exponents.iter().find(|p| !(**p >= 1.0 && p.is_finite())) {
            return bad(format!("norm exponent must be at least 1, got {p}"));
        }
        let t = &self.blowup.thresholds;
        if t.iter().any(|x| !(*x > 0.0 && x.is_finite())) || t.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!("thresholds must be positive and increasing, got {t:?}"));
        }
        let c = &self.constants;
        if !(c.c_n > 0.0 && c.c_n.is_finite()) {
            return bad(format!("c_n must be positive, got {}", c.c_n));
        }
        let n = self.shape.dim();
        if self.q() < critical_exponent(n) {
            return bad(format!("q = {} is below the critical exponent {}", self.q(), critical_exponent(n)));
        }
        if !(self.beta() >= 2.0 && self.beta().is_finite()) {
            return bad(format!("beta must be at least 2, got {}", self.beta()));
        }
        Ok(())
    }

    pub fn q(&self) -> f64 {
        let n = self.shape.dim();
        self.constants.q.unwrap_or(lambda_of(n) * critical_exponent(n))
    }

    pub fn beta(&self) -> f64 {
        self.constants.beta.unwrap_or(self.shape.dim() as f64 + 2.0)
    }
}

/// Pipeline stage, one per subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Simulate,
    Diagnose,
    Norms,
    Inequalities,
    Rescale,
    Report,
    All,
}

/// Outcome of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub artifacts: Vec<PathBuf>,
    /// `None` when no certification ran.
    pub certified: Option<bool>,
    pub log: Vec<String>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        match self.certified {
            Some(false) => EXIT_CERTIFICATION,
            _ => EXIT_OK,
        }
    }
}

/// Blow-up analysis of one trajectory.
#[derive(Debug, Clone)]
pub struct BlowupAnalysis {
    pub witness: Option<WitnessReport>,
    pub vanishing: Option<VanishingSeries>,
    /// Why no sequence was built.
    pub skipped: Option<String>,
    /// Largest-scale window, for the Moser checks.
    pub largest_window: Option<FlowTrajectory>,
}

pub struct Experiment {
    pub config: ExperimentConfig,
    pub out: PathBuf,
    traj: Option<FlowTrajectory>,
    blowup: Option<BlowupAnalysis>,
    log: Vec<String>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Self {
        let out = config.output.dir.clone();
        Self {
            config,
            out,
            traj: None,
            blowup: None,
            log: Vec::new(),
        }
    }

    pub fn with_out(mut self, out: PathBuf) -> Self {
        self.out = out;
        self
    }

    pub fn trajectory_dir(&self) -> PathBuf {
        self.out.join("trajectory")
    }

    pub fn initial_mesh(&self) -> Result<Hypersurface, ExperimentError> {
        Ok(self.config.shape.generate(self.config.resolution)?)
    }

    /// Evolves the initial mesh and writes the trajectory directory.
    pub fn simulate(&mut self) -> Result<PathBuf, ExperimentError> {
        let mesh = self.initial_mesh()?;
        let traj = evolve(&mesh, &self.config.stop, self.config.output.stride)?;
        let dir = self.trajectory_dir();
        write_trajectory(&dir, &traj)?;
        self.log.push(format!(
            "simulated {} snapshots to t = {} ({})",
            traj.len(),
            traj.final_time(),
            traj.termination().as_str()
        ));
        self.traj = Some(traj);
        Ok(dir)
    }

    /// Trajectory from memory, from disk, or from a fresh simulation.
    pub fn trajectory(&mut self) -> Result<&FlowTrajectory, ExperimentError> {
        if self.traj.is_none() {
            let dir = self.trajectory_dir();
            if dir.join("index.txt").exists() {
                self.traj = Some(read_trajectory(&dir)?);
                self.log.push(format!("loaded trajectory from {}", dir.display()));
            } else {
                self.simulate()?;
            }
        }
        Ok(self.traj.as_ref().expect("trajectory loaded"))
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, ExperimentError> {
        fs::create_dir_all(&self.out).map_err(io_err(&self.out))?;
        let path = self.out.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        Ok(path)
    }

    pub fn diagnose(&mut self) -> Result<PathBuf, ExperimentError> {
        let name = self.config.name.clone();
        let traj = self.trajectory()?;
        let rows = diagnostics_rows(&name, traj)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &rows {
            w.serialize(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| csv_err(e.into_error().into()))?;
        self.write("diagnostics.csv", &bytes)
    }

    /// Norm rows over `S` and, when the trajectory covers `[0, 1]`, over
    /// `D_0 ..= D_levels` and `D′`.
    pub fn norm_reports(&mut self) -> Result<Vec<NormReport>, ExperimentError> {
        let exponents = self.config.norms.exponents.clone();
        let levels = self.config.norms.levels;
        let policy = self.config.norms.center;
        let traj = self.trajectory()?;
        let h = traj.mean_curvature_field();
        let mut rows = Vec::new();
        for &p in &exponents {
            rows.push(spacetime_norm(traj, &h, p, None)?);
        }
        if let Some(window) = unit_window(traj) {
            let center = cylinder_center(&window, policy);
            let h = window.mean_curvature_field();
            let mut regions: Vec<_> = (0..=levels).map(|k| ParabolicCylinder::level(center, k)).collect();
            regions.push(ParabolicCylinder::inner(center));
            for c in &regions {
                for &p in &exponents {
                    rows.push(spacetime_norm(&window, &h, p, Some(c))?);
                }
            }
        }
        Ok(rows)
    }

    pub fn norms(&mut self) -> Result<PathBuf, ExperimentError> {
        let rows = self.norm_reports()?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["experiment", "region", "k", "p", "value", "samples"]).map_err(csv_err)?;
        for r in &rows {
            w.write_record([
                self.config.name.clone(),
                r.region.clone(),
                r.k.map_or_else(String::new, |k| k.to_string()),
                r.p.to_string(),
                r.value.to_string(),
                r.samples.to_string(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| csv_err(e.into_error().into()))?;
        self.write("norms.csv", &bytes)
    }

    pub fn blowup_analysis(&mut self) -> Result<&BlowupAnalysis, ExperimentError> {
        if self.blowup.is_none() {
            let thresholds = self.config.blowup.thresholds.clone();
            let c_n = self.config.constants.c_n;
            let traj = self.trajectory()?;
            let analysis = if thresholds.is_empty() {
                BlowupAnalysis::skipped("no thresholds configured")
            } else {
                match select_blowup_sequence(traj, &thresholds) {
                    Ok(seq) if seq.is_empty() => BlowupAnalysis::skipped("every window leaves the trajectory"),
                    Ok(seq) => {
                        let b = pinching_constant(traj).b;
                        let vanishing = vanishing_local_norms(&seq, b)?;
                        let witness = contradiction_witness(&seq, b, c_n)?;
                        let largest = seq.entries.last().map(|e| e.window.trajectory.clone());
                        BlowupAnalysis {
                            witness: Some(witness),
                            vanishing: Some(vanishing),
                            skipped: None,
                            largest_window: largest,
                        }
                    }
                    Err(e @ (RescaleError::NoBlowup { .. } | RescaleError::NotBlowingUp(_))) => {
                        BlowupAnalysis::skipped(&e.to_string())
                    }
                    Err(e) => return Err(e.into()),
                }
            };
            self.blowup = Some(analysis);
        }
        Ok(self.blowup.as_ref().expect("analysis computed"))
    }

    pub fn rescale(&mut self) -> Result<PathBuf, ExperimentError> {
        let analysis = self.blowup_analysis()?;
        let report = analysis.witness.clone().unwrap_or(WitnessReport {
            rows: Vec::new(),
            bound_decreasing: None,
        });
        let mut bytes = Vec::new();
        report.write_csv(&mut bytes)?;
        self.write("blowup.csv", &bytes)
    }

    /// Builds every certification record.
    pub fn certification(&mut self) -> Result<CertificationReport, ExperimentError> {
        let mut report = CertificationReport::default();
        self.static_checks(&mut report)?;
        self.flow_checks(&mut report)?;
        if self.config.constants.moser {
            let window = match unit_window(self.trajectory()?) {
                Some(w) => Some(("trajectory", w)),
                None => self.blowup_analysis()?.largest_window.clone().map(|w| ("blowup", w)),
            };
            match window {
                Some((source, w)) => self.moser_checks(&mut report, source, &w)?,
                None => report.push(Record::new("moser").text("status", "no window covering [0, 1]")),
            }
        }
        Ok(report)
    }

    /// Michael–Simon, the slice Sobolev bound and interpolation on the
    /// initial surface with seeded bump fields.
    fn static_checks(&mut self, report: &mut CertificationReport) -> Result<(), ExperimentError> {
        let mesh = self.initial_mesh()?;
        if mesh.dim() != 2 {
            return Ok(());
        }
        let c_n = self.config.constants.c_n;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let centroid = mesh.positions().iter().fold(Vec3::zeros(), |a, x| a + x) / mesh.len() as f64;
        let scale =
            mesh.positions().iter().map(|x| (x - centroid).norm()).sum::<f64>() / mesh.len() as f64;
        let unit: Vec<Vec3> = mesh.positions().iter().map(|x| (x - centroid) / scale).collect();
        for i in 0..self.config.constants.fields {
            let f = bump_field(&BumpField::random(&mut rng), &unit);
            let ms = michael_simon_check(&mesh, &f)?;
            report.push(
                Record::new("michael_simon")
                    .int("field", i)
                    .num("lhs", ms.lhs)
                    .num("rhs", ms.rhs)
                    .num("ratio", ms.ratio)
                    .num("c_n", c_n)
                    .flag("certified", ms.ratio <= c_n),
            );
            let l31 = lemma31_check(&mesh, &f, DEFAULT_SOBOLEV_Q)?;
            report.push(
                Record::new("slice_sobolev")
                    .int("field", i)
                    .num("Q", DEFAULT_SOBOLEV_Q)
                    .num("lhs", l31.lhs)
                    .num("rhs", l31.rhs)
                    .num("ratio", l31.ratio)
                    .num("c_n", c_n)
                    .flag("certified", l31.ratio <= c_n),
            );
            let (t, r, s) = (2.0, 3.0, 6.0);
            for eps in [0.1, 1.0, 10.0] {
                let ip = interpolation_check(&mesh, &f, t, r, s, eps)?;
                report.push(
                    Record::new("interpolation")
                        .int("field", i)
                        .num("t", t)
                        .num("r", r)
                        .num("s", s)
                        .num("eps", eps)
                        .num("mu", ip.mu)
                        .num("lhs", ip.lhs)
                        .num("rhs", ip.rhs)
                        .flag("certified", ip.holds),
                );
            }
        }
        Ok(())
    }

    /// Spacetime Sobolev bound with `v = Ĥ` on the whole trajectory.
    fn flow_checks(&mut self, report: &mut CertificationReport) -> Result<(), ExperimentError> {
        let c_n = self.config.constants.c_n;
        let traj = self.trajectory()?;
        if traj.dim() != 2 || traj.len() < 2 {
            return Ok(());
        }
        let b = pinching_constant(traj).b;
        let hat = hat_fields(traj, b)?;
        let sides = prop32_check(traj, &hat.hat_h)?;
        report.push(
            Record::new("spacetime_sobolev")
                .text("v", "H + nB")
                .num("B", b)
                .num("lhs", sides.lhs)
                .num("rhs", sides.rhs)
                .num("ratio", sides.ratio)
                .num("c_n", c_n)
                .flag("certified", sides.ratio <= c_n),
        );
        Ok(())
    }

    fn moser_checks(
        &mut self,
        report: &mut CertificationReport,
        source: &str,
        window: &FlowTrajectory,
    ) -> Result<(), ExperimentError> {
        let n = window.dim();
        let c_n = self.config.constants.c_n;
        let (q, beta, k_max) = (self.config.q(), self.config.beta(), self.config.constants.ladder_levels);
        let center = cylinder_center(window, self.config.norms.center);
        let b = pinching_constant(window).b;
        let hat = hat_fields(window, b)?;
        let place = |r: Record| {
            r.text("window", source)
                .text("center", &format!("{} {} {}", center.x, center.y, center.z))
        };

        let sub = match Subsolution::check_default(window, &hat.hat_h, &hat.f) {
            Ok(sub) => {
                report.push(
                    place(Record::new("subsolution"))
                        .num("B", b)
                        .num("worst_residual", sub.worst_residual())
                        .num("tol", sub.tolerance())
                        .flag("certified", true),
                );
                sub
            }
            Err(IneqError::NotSubsolution {
                snapshot,
                vertex,
                residual,
                tol,
            }) => {
                report.push(
                    place(Record::new("subsolution"))
                        .num("B", b)
                        .int("snapshot", snapshot)
                        .int("vertex", vertex)
                        .num("worst_residual", residual)
                        .num("tol", tol)
                        .flag("certified", false),
                );
                return Ok(());
            }
            Err(e) => return Err(e.into()),
        };

        let moser = constants_for(window, &hat.f, q, beta, c_n)?;
        report.add_constants("moser", moser);
        for k in 1..=k_max {
            let rh = reverse_holder_check(&sub, center, beta, k, &moser)?;
            report.push(
                place(Record::new("reverse_holder"))
                    .constants("moser")
                    .int("k", k)
                    .num("beta", rh.beta)
                    .num("lhs", rh.lhs)
                    .num("rhs", rh.rhs)
                    .num("ratio", rh.ratio)
                    .int("samples", rh.samples)
                    .int("outside_d", rh.outside_d)
                    .flag("certified", rh.certified && rh.outside_d == 0),
            );
        }
        match moser_ladder(&sub, center, beta, k_max, &moser) {
            Ok(ladder) => {
                for r in &ladder.rungs {
                    report.push(
                        place(Record::new("ladder_rung"))
                            .constants("moser")
                            .int("k", r.k)
                            .num("exponent", r.exponent)
                            .num("value", r.value)
                            .opt("bound", r.bound)
                            .int("samples", r.samples)
                            .flag("certified", r.certified),
                    );
                }
                report.push(
                    place(Record::new("ladder_sup"))
                        .constants("moser")
                        .num("sup_inner", ladder.sup_inner)
                        .num("C_b", ladder.c_b)
                        .num("bound", ladder.final_bound)
                        .flag("certified", ladder.final_certified),
                );
            }
            Err(IneqError::LadderUnderresolved { k, samples }) => report.push(
                place(Record::new("ladder_rung"))
                    .constants("moser")
                    .int("k", k)
                    .int("samples", samples)
                    .text("status", "underresolved"),
            ),
            Err(e) => return Err(e.into()),
        }

        let critical = constants_for(window, &hat.f, critical_exponent(n), beta, c_n)?;
        report.add_constants("critical", critical);
        let cr = critical_smallness_check(&sub, center, beta, &critical)?;
        report.push(
            place(Record::new("critical_smallness"))
                .constants("critical")
                .num("f_norm", cr.f_norm)
                .num("delta1", cr.delta1)
                .flag("small", cr.small)
                .opt("lhs", cr.lhs)
                .opt("rhs", cr.rhs)
                .opt_flag("certified", cr.certified),
        );

        let np2 = n as f64 + 2.0;
        let table = constants_table(n, lambda_of(n) * critical_exponent(n), np2, 0.0, moser.c1, c_n)?;
        let m = mean_curvature_bound_check(window, center, b, &table)?;
        report.add_constants("mean_curvature", table.with_c3(m.c3));
        report.push(
            place(Record::new("mean_curvature_bound"))
                .constants("mean_curvature")
                .num("B", m.b)
                .num("sum", m.sum)
                .num("delta2", m.delta2)
                .flag("hypothesis", m.hypothesis)
                .num("sup_h_plus", m.sup_h_plus)
                .num("bound", m.bound)
                .int("samples", m.samples)
                .opt_flag("certified", m.bound_holds),
        );
        Ok(())
    }

    pub fn inequalities(&mut self) -> Result<(PathBuf, bool), ExperimentError> {
        let report = self.certification()?;
        let passed = report.all_passed();
        let path = self.write("certification.json", report.to_json().as_bytes())?;
        Ok((path, passed))
    }

    pub fn report_text(&mut self) -> Result<String, ExperimentError> {
        let cfg = self.config.clone();
        let traj = self.trajectory()?.clone();
        let series = max_h_series(&traj);
        let b = pinching_constant(&traj).b;
        let norms = self.norm_reports()?;
        let cert = self.certification()?;
        let analysis = self.blowup_analysis()?.clone();

        let mut s = String::new();
        let _ = writeln!(s, "experiment {}", cfg.name);
        let _ = writeln!(s, "shape {:?}", cfg.shape);
        let _ = writeln!(s, "vertices {}", traj.num_vertices());
        let _ = writeln!(s, "snapshots {}", traj.len());
        let _ = writeln!(s, "final_time {}", traj.final_time());
        let _ = writeln!(s, "termination {}", traj.termination().as_str());
        let _ = writeln!(s, "max_h {}", series.running_max.last().copied().unwrap_or(0.0));
        let _ = writeln!(s, "pinching_b {b}");
        if traj.termination() != Termination::CurvatureCeiling {
            let _ = writeln!(s, "extinction_estimate {}", extinction_estimate(&traj));
        }
        let _ = writeln!(s);
        for r in &norms {
            let _ = writeln!(s, "norm {} p={} value={} samples={}", r.region, r.p, r.value, r.samples);
        }
        let _ = writeln!(s);
        let passed = cert.records.iter().filter(|r| r.passed()).count();
        let _ = writeln!(s, "certification {passed}/{} records pass", cert.records.len());
        for r in cert.records.iter().filter(|r| !r.passed()) {
            let _ = writeln!(s, "failed {}", serde_json::to_string(r).expect("record serializes"));
        }
        let _ = writeln!(s);
        match (&analysis.witness, &analysis.vanishing) {
            (Some(w), Some(v)) => {
                let _ = writeln!(s, "blowup_entries {}", w.rows.len());
                for (row, norm) in w.rows.iter().zip(&v.norms) {
                    let _ = writeln!(
                        s,
                        "entry {} Q={} t_i={} local_norm={} sup_h_plus={} bound={} hypothesis={}",
                        row.entry, row.q, row.t_i, norm.value, row.sup_h_plus, row.bound, row.hypothesis_met
                    );
                }
                let _ = writeln!(s, "local_norm_slope {}", v.slope);
                let _ = writeln!(s, "local_norm_strictly_decreasing {}", v.strictly_decreasing());
            }
            _ => {
                let reason = analysis.skipped.as_deref().unwrap_or("none");
                let _ = writeln!(s, "blowup skipped: {reason}");
            }
        }
        Ok(s)
    }

    pub fn report(&mut self) -> Result<PathBuf, ExperimentError> {
        let text = self.report_text()?;
        self.write("report.txt", text.as_bytes())
    }

    /// Runs `stage` and collects what was written.
    pub fn run(&mut self, stage: Stage) -> Result<RunOutcome, ExperimentError> {
        let mut artifacts = Vec::new();
        let mut certified = None;
        let all = stage == Stage::All;
        if all || stage == Stage::Simulate {
            artifacts.push(self.simulate()?);
        }
        if all || stage == Stage::Diagnose {
            artifacts.push(self.diagnose()?);
        }
        if all || stage == Stage::Norms {
            artifacts.push(self.norms()?);
        }
        if all || stage == Stage::Rescale {
            artifacts.push(self.rescale()?);
        }
        if all || stage == Stage::Inequalities {
            let (path, passed) = self.inequalities()?;
            artifacts.push(path);
            certified = Some(passed);
        }
        if all || stage == Stage::Report {
            artifacts.push(self.report()?);
        }
        Ok(RunOutcome {
            artifacts,
            certified,
            log: std::mem::take(&mut self.log),
        })
    }
}

impl BlowupAnalysis {
    fn skipped(reason: &str) -> Self {
        Self {
            witness: None,
            vanishing: None,
            skipped: Some(reason.to_string()),
            largest_window: None,
        }
    }
}

fn csv_err(e: csv::Error) -> ExperimentError {
    ExperimentError::Io {
        path: "csv".into(),
        source: e.into(),
    }
}

/// The part of `traj` on `[0, t*]` with `t*` the snapshot nearest 1, when the
/// trajectory starts at 0 and reaches 1.
pub fn unit_window(traj: &FlowTrajectory) -> Option<FlowTrajectory> {
    if traj.start_time() > 0.0 || traj.final_time() < 1.0 {
        return None;
    }
    let hi = traj.nearest_index(1.0);
    Some(traj.slice(0, hi))
}

pub fn cylinder_center(traj: &FlowTrajectory, policy: CenterPolicy) -> Vec3 {
    match policy {
        CenterPolicy::Point(p) => Vec3::new(p[0], p[1], p[2]),
        CenterPolicy::ArgmaxH => {
            let s = traj.snapshot(traj.nearest_index(1.0));
            let v = max_h_series(traj).argmax[traj.nearest_index(1.0)];
            s.position(v)
        }
    }
}
