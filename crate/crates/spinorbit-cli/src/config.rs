//! Experiment configuration: a JSON file with an explicit `schema_version`,
//! an experiment `kind`, and kind-specific parameters.
//!
//! Parsing is two-staged so the error messages stay useful: the generic JSON
//! tree is checked for `schema_version` and `kind` first (unknown kinds get
//! a suggestion list), then the kind payload is deserialized strictly with
//! field-path reporting on type or typo errors.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use spinorbit::field::{CouplingField, OrbitalHamiltonian};
use spinorbit::hamiltonian::HamiltonianTerm;

pub const SCHEMA_VERSION: u64 = 1;

pub const KNOWN_KINDS: [&str; 6] = [
    "spin-check",
    "classical",
    "convergence",
    "residual",
    "dicke-purity",
    "perturbation",
];

/// Failure classes map onto the process exit codes: configuration and schema
/// problems exit 2, numerical guard or contract failures exit 3.
#[derive(Debug)]
pub enum CliFailure {
    Schema(String),
    Numerical(String),
    Io(String),
}

impl CliFailure {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliFailure::Schema(_) => 2,
            CliFailure::Numerical(_) => 3,
            CliFailure::Io(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliFailure::Schema(m) | CliFailure::Numerical(m) | CliFailure::Io(m) => m,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CliFailure::Schema(_) => "schema error",
            CliFailure::Numerical(_) => "numerical error",
            CliFailure::Io(_) => "io error",
        }
    }
}

/// Numerical guards tripped while running map to exit 3; pure validation
/// errors raised before any computation map to exit 2.
pub fn numerical(err: spinorbit::Error) -> CliFailure {
    CliFailure::Numerical(err.to_string())
}

#[derive(Debug, Clone)]
pub enum Experiment {
    SpinCheck(SpinCheckCfg),
    Classical(ClassicalCfg),
    Convergence(ConvergenceCfg),
    Residual(ResidualCfg),
    DickePurity(DickePurityCfg),
    Perturbation(PerturbationCfg),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::SpinCheck(_) => "spin-check",
            Experiment::Classical(_) => "classical",
            Experiment::Convergence(_) => "convergence",
            Experiment::Residual(_) => "residual",
            Experiment::DickePurity(_) => "dicke-purity",
            Experiment::Perturbation(_) => "perturbation",
        }
    }

    pub fn output_stem(&self) -> String {
        let explicit = match self {
            Experiment::SpinCheck(c) => &c.output_stem,
            Experiment::Classical(c) => &c.output_stem,
            Experiment::Convergence(c) => &c.output_stem,
            Experiment::Residual(c) => &c.output_stem,
            Experiment::DickePurity(c) => &c.output_stem,
            Experiment::Perturbation(c) => &c.output_stem,
        };
        explicit
            .clone()
            .unwrap_or_else(|| self.kind().replace('-', "_"))
    }
}

/// Uniform time grid; `nodes` counts grid points including both endpoints.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    #[serde(default)]
    pub t_min: f64,
    pub t_max: f64,
    pub nodes: usize,
}

impl GridCfg {
    pub fn build(&self) -> Result<Vec<f64>, CliFailure> {
        if self.nodes < 2 {
            return Err(CliFailure::Schema(format!(
                "grid needs at least 2 nodes, got {}",
                self.nodes
            )));
        }
        if !(self.t_max.is_finite() && self.t_min.is_finite() && self.t_max > self.t_min) {
            return Err(CliFailure::Schema(format!(
                "grid needs t_max > t_min, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        let n = self.nodes - 1;
        Ok((0..=n)
            .map(|k| self.t_min + (self.t_max - self.t_min) * k as f64 / n as f64)
            .collect())
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionCfg {
    pub theta: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PhasePointCfg {
    pub q: f64,
    pub p: f64,
}

/// Coupling field menu mirrored from the library constructors; the orbital
/// part is a harmonic oscillator at `oscillator_omega` (the dicke variant
/// carries its own cavity frequency).
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldCfg {
    Constant { g: [f64; 3] },
    Rotating { g_perp: f64, nu: f64, g3: f64 },
    LinearInQ { slope: [f64; 3], offset: [f64; 3] },
    Dicke { g: f64, omega3: f64, omega_c: f64 },
}

impl FieldCfg {
    pub fn build(&self, oscillator_omega: f64) -> CouplingField {
        match *self {
            FieldCfg::Constant { g } => {
                CouplingField::constant(g).with_h0(OrbitalHamiltonian::harmonic(1, oscillator_omega))
            }
            FieldCfg::Rotating { g_perp, nu, g3 } => CouplingField::rotating(g_perp, nu, g3)
                .with_h0(OrbitalHamiltonian::harmonic(1, oscillator_omega)),
            FieldCfg::LinearInQ { slope, offset } => CouplingField::linear_in_q(slope, offset)
                .with_h0(OrbitalHamiltonian::harmonic(1, oscillator_omega)),
            FieldCfg::Dicke { g, omega3, omega_c } => CouplingField::dicke(g, omega3, omega_c),
        }
    }

    /// Quantized counterpart of `build` for the exact propagation routes.
    pub fn terms(&self, oscillator_omega: f64) -> Vec<HamiltonianTerm> {
        match *self {
            FieldCfg::Constant { g } => vec![
                HamiltonianTerm::Oscillator {
                    omega: oscillator_omega,
                },
                HamiltonianTerm::SpinConstant { weight: g },
            ],
            FieldCfg::Rotating { g_perp, nu, g3 } => vec![
                HamiltonianTerm::Oscillator {
                    omega: oscillator_omega,
                },
                HamiltonianTerm::SpinDriven {
                    weight: [g_perp, 0.0, 0.0],
                    envelope: Box::new(move |t: f64| (nu * t).cos()),
                },
                HamiltonianTerm::SpinDriven {
                    weight: [0.0, g_perp, 0.0],
                    envelope: Box::new(move |t: f64| (nu * t).sin()),
                },
                HamiltonianTerm::SpinConstant {
                    weight: [0.0, 0.0, g3],
                },
            ],
            FieldCfg::LinearInQ { slope, offset } => vec![
                HamiltonianTerm::Oscillator {
                    omega: oscillator_omega,
                },
                HamiltonianTerm::PositionSpin { weight: slope },
                HamiltonianTerm::SpinConstant { weight: offset },
            ],
            FieldCfg::Dicke { g, omega3, omega_c } => vec![
                HamiltonianTerm::Oscillator { omega: omega_c },
                HamiltonianTerm::PositionSpin {
                    weight: [g, 0.0, 0.0],
                },
                HamiltonianTerm::SpinConstant {
                    weight: [0.0, 0.0, omega3],
                },
            ],
        }
    }

    /// The classical field is autonomous unless it carries an explicit drive.
    pub fn is_autonomous(&self) -> bool {
        !matches!(self, FieldCfg::Rotating { .. })
    }

    pub fn describe(&self) -> Value {
        serde_json::to_value(self).expect("field config serializes")
    }
}

fn default_tolerance_scale() -> f64 {
    1e-10
}

fn default_directions() -> Vec<[f64; 2]> {
    vec![[0.7, 0.3], [1.9, -1.2], [2.6, 2.8]]
}

fn default_probe_field() -> [f64; 3] {
    [0.4, -0.9, 1.1]
}

fn default_omega() -> f64 {
    1.0
}

fn default_substeps() -> usize {
    200
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SpinCheckCfg {
    pub twice_s: u32,
    /// Per-check bound is `tolerance_scale * (2s + 1)`.
    #[serde(default = "default_tolerance_scale")]
    pub tolerance_scale: f64,
    /// (theta, phi) probe axes; overlaps are checked on consecutive pairs.
    #[serde(default = "default_directions")]
    pub directions: Vec<[f64; 2]>,
    #[serde(default = "default_probe_field")]
    pub probe_field: [f64; 3],
    #[serde(default)]
    pub output_stem: Option<String>,
    #[serde(default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalCfg {
    pub hbar: f64,
    pub twice_s: u32,
    pub field: FieldCfg,
    #[serde(default = "default_omega")]
    pub oscillator_omega: f64,
    pub z0: PhasePointCfg,
    pub n0: DirectionCfg,
    pub grid: GridCfg,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    /// Conserved-energy drift bound; applies to autonomous fields only.
    #[serde(default = "ClassicalCfg::default_energy_drift")]
    pub max_energy_drift: f64,
    #[serde(default = "ClassicalCfg::default_sphere_defect")]
    pub max_sphere_defect: f64,
    #[serde(default)]
    pub output_stem: Option<String>,
    #[serde(default)]
    pub note: Option<String>,
}

impl ClassicalCfg {
    fn default_energy_drift() -> f64 {
        1e-8
    }
    fn default_sphere_defect() -> f64 {
        1e-9
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScanCaseCfg {
    pub hbar: f64,
    pub twice_s: u32,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceCfg {
    /// The (hbar, 2s) ladder; the log-log fit runs over these cases.
    pub cases: Vec<ScanCaseCfg>,
    /// Position-spin coupling strength along e1.
    #[serde(default = "default_omega")]
    pub coupling: f64,
    /// Constant spin shift along e3.
    #[serde(default = "default_omega")]
    pub spin_shift: f64,
    #[serde(default = "ConvergenceCfg::default_z0")]
    pub z0: PhasePointCfg,
    #[serde(default = "ConvergenceCfg::default_n0")]
    pub n0: DirectionCfg,
    #[serde(default = "default_omega")]
    pub t_final: f64,
    #[serde(default = "ConvergenceCfg::default_substeps")]
    pub substeps: usize,
    pub fock_levels: usize,
    /// Fitted log-log slope must land inside this window.
    pub slope_window: [f64; 2],
    #[serde(default)]
    pub output_stem: Option<String>,
    #[serde(default)]
    pub note: Option<String>,
}

impl ConvergenceCfg {
    fn default_z0() -> PhasePointCfg {
        PhasePointCfg { q: 0.2, p: 0.0 }
    }
    fn default_n0() -> DirectionCfg {
        DirectionCfg {
            theta: 1.0,
            phi: 0.5,
        }
    }
    fn default_substeps() -> usize {
        1000
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualCfg {
    pub hbar: f64,
    pub twice_s: u32,
    pub field: FieldCfg,
    #[serde(default = "default_omega")]
    pub oscillator_omega: f64,
    pub z0: PhasePointCfg,
    pub n0: DirectionCfg,
    /// Probe times; keep t_min comfortably above the finite-difference step.
    pub grid: GridCfg,
    #[serde(default = "ResidualCfg::default_fd_step")]
    pub fd_step: f64,
    #[serde(default = "ResidualCfg::default_substeps")]
    pub substeps: usize,
    pub fock_levels: usize,
    /// Bound on || i hbar dPsi/dt - H Psi || over the probe times.
    pub max_residual: f64,
    #[serde(default)]
    pub output_stem: Option<String>,
    #[serde(default)]
    pub note: Option<String>,
}

impl ResidualCfg {
    fn default_fd_step() -> f64 {
        1e-3
    }
    fn default_substeps() -> usize {
        800
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DickePurityCfg {
    pub hbar: f64,
    pub twice_s: u32,
    /// Bare collective coupling; the per-spin rate follows the 1/sqrt(2s hbar) law.
    pub lambda: f64,
    #[serde(default = "default_omega")]
    pub omega_c: f64,
    #[serde(default = "DickePurityCfg::default_theta0")]
    pub theta0: f64,
    #[serde(default)]
    pub phi0: f64,
    pub grid: GridCfg,
    pub fock_levels: usize,
    #[serde(default = "DickePurityCfg::default_initial_purity_tol")]
    pub initial_purity_tol: f64,
    /// Partial-trace purity must fall below 1 for every node after this time.
    #[serde(default = "DickePurityCfg::default_decay_after")]
    pub decay_after: f64,
    #[serde(default = "DickePurityCfg::default_kernel_gap_tol")]
    pub kernel_gap_tol: f64,
    #[serde(default = "DickePurityCfg::default_envelope_residual_tol")]
    pub envelope_residual_tol: f64,
    #[serde(default)]
    pub output_stem: Option<String>,
    #[serde(default)]
    pub note: Option<String>,
}

impl DickePurityCfg {
    fn default_theta0() -> f64 {
        std::f64::consts::FRAC_PI_4
    }
    fn default_initial_purity_tol() -> f64 {
        1e-9
    }
    fn default_decay_after() -> f64 {
        0.1
    }
    fn default_kernel_gap_tol() -> f64 {
        1e-3
    }
    fn default_envelope_residual_tol() -> f64 {
        0.10
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationCfg {
    pub hbar: f64,
    pub twice_s: u32,
    pub field: FieldCfg,
    #[serde(default = "default_omega")]
    pub oscillator_omega: f64,
    pub z0: PhasePointCfg,
    pub n0: DirectionCfg,
    pub grid: GridCfg,
    /// Fit window [0, fit_window] for the short-time linear law; defaults to
    /// the full grid.
    #[serde(default)]
    pub fit_window: Option<f64>,
    #[serde(default = "PerturbationCfg::default_ratio_window")]
    pub ratio_window: [f64; 2],
    #[serde(default)]
    pub output_stem: Option<String>,
    #[serde(default)]
    pub note: Option<String>,
}

impl PerturbationCfg {
    fn default_ratio_window() -> [f64; 2] {
        [0.9, 1.1]
    }
}

/// Edit distance for the unknown-kind suggestion list.
fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Known kinds ranked by edit distance, nearest first.
pub fn kind_suggestions(unknown: &str) -> Vec<&'static str> {
    let mut ranked: Vec<(usize, &'static str)> = KNOWN_KINDS
        .iter()
        .map(|&k| (levenshtein(unknown, k), k))
        .collect();
    ranked.sort();
    ranked.into_iter().map(|(_, k)| k).collect()
}

fn typed<T: serde::de::DeserializeOwned>(payload: Value) -> Result<T, CliFailure> {
    let deserializer = payload;
    serde_path_to_error::deserialize(deserializer).map_err(|e| {
        let path = e.path().to_string();
        let at = if path == "." {
            String::new()
        } else {
            format!(" at `{path}`")
        };
        CliFailure::Schema(format!("config field error{at}: {}", e.inner()))
    })
}

/// Parse a config document: check the schema version and kind, then strictly
/// deserialize the kind payload.
pub fn parse_config(text: &str) -> Result<Experiment, CliFailure> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| CliFailure::Schema(format!("config is not valid JSON: {e}")))?;
    let obj = root
        .as_object()
        .ok_or_else(|| CliFailure::Schema("config root must be a JSON object".into()))?;

    match obj.get("schema_version").and_then(Value::as_u64) {
        Some(SCHEMA_VERSION) => {}
        Some(v) => {
            return Err(CliFailure::Schema(format!(
                "unsupported schema_version {v}; this build reads version {SCHEMA_VERSION}"
            )))
        }
        None => {
            return Err(CliFailure::Schema(
                "missing or non-integer `schema_version` (expected 1)".into(),
            ))
        }
    }

    let kind = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| CliFailure::Schema("missing string field `kind`".into()))?
        .to_owned();

    if !KNOWN_KINDS.contains(&kind.as_str()) {
        let hints = kind_suggestions(&kind);
        return Err(CliFailure::Schema(format!(
            "unknown experiment kind `{kind}`; did you mean `{}`? (known kinds: {})",
            hints[0],
            KNOWN_KINDS.join(", ")
        )));
    }

    // The payload structs do not carry the envelope keys.
    let mut payload = obj.clone();
    payload.remove("schema_version");
    payload.remove("kind");
    let payload = Value::Object(payload);

    Ok(match kind.as_str() {
        "spin-check" => Experiment::SpinCheck(typed(payload)?),
        "classical" => Experiment::Classical(typed(payload)?),
        "convergence" => Experiment::Convergence(typed(payload)?),
        "residual" => Experiment::Residual(typed(payload)?),
        "dicke-purity" => Experiment::DickePurity(typed(payload)?),
        "perturbation" => Experiment::Perturbation(typed(payload)?),
        _ => unreachable!("kind was checked against KNOWN_KINDS"),
    })
}
