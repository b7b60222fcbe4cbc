//! Experiment configs. Each subcommand's flags mirror the fields of its
//! parameter struct; `run` reads the same structs from JSON.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use diskqm::potential::Potential;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: &str = "diskqm-config/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must equal `diskqm-config/1`.
    pub schema: String,
    /// Root of every random stream used by the run.
    #[serde(default)]
    pub seed: u64,
    /// Output directory; defaults to `out/<kind>`.
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Modes(ModesParams),
    Trace(TraceParams),
    Build(QuasimodeParams),
    Analyze(AnalyzeParams),
    Effective(EffectiveParams),
    Sweep(SweepParams),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Modes(_) => "modes",
            Experiment::Trace(_) => "trace",
            Experiment::Build(_) => "build",
            Experiment::Analyze(_) => "analyze",
            Experiment::Effective(_) => "effective",
            Experiment::Sweep(_) => "sweep",
        }
    }
}

fn one() -> f64 {
    1.0
}

fn one_u32() -> u32 {
    1
}

/// Zeros `j_{m,k}, …, j_{m,k+count−1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema, Args)]
#[serde(deny_unknown_fields)]
pub struct ModesParams {
    #[arg(long, allow_negative_numbers = true)]
    pub m: i32,
    #[arg(long, default_value_t = 1)]
    #[serde(default = "one_u32")]
    pub k: u32,
    #[arg(long, default_value_t = 1)]
    #[serde(default = "one_u32")]
    pub count: u32,
}

/// Billiard trajectory from `(x, y, ξ_x, ξ_y)` sampled on `[0, tau]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema, Args)]
#[serde(deny_unknown_fields)]
pub struct TraceParams {
    #[arg(long, allow_negative_numbers = true)]
    pub x: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub y: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub xix: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub xiy: f64,
    #[arg(long)]
    pub tau: f64,
    #[arg(long, default_value_t = 101)]
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    101
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum Family {
    /// `ψ_{m,1}` for each `m`.
    WhisperingGallery,
    /// `ψ_{m,k}` for each `m`.
    SingleMode,
    /// Packets on `{α = α₀}`, one per `h`.
    TorusPacket,
    /// Spectral clusters of the free disk, one per `λ`.
    Cluster,
}

/// A list of quasimodes from one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema, Args)]
#[serde(deny_unknown_fields)]
pub struct QuasimodeParams {
    #[arg(long, value_enum)]
    pub family: Family,
    #[arg(long = "m", allow_negative_numbers = true)]
    #[serde(default)]
    pub m: Vec<i32>,
    #[arg(long, default_value_t = 1)]
    #[serde(default = "one_u32")]
    pub k: u32,
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "one")]
    pub e0: f64,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(default)]
    pub alpha0: Option<f64>,
    /// Target semiclassical parameters of torus packets.
    #[arg(long = "h")]
    #[serde(default)]
    pub h: Vec<f64>,
    /// Torus-packet half-width in `J`, in units of `h`.
    #[arg(long, default_value_t = 3.0)]
    #[serde(default = "default_width")]
    pub width: f64,
    /// Cluster centres.
    #[arg(long = "lambda")]
    #[serde(default)]
    pub lambda: Vec<f64>,
    /// Cluster half-width `R`.
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "one")]
    pub window: f64,
    /// Random phases (seeded) instead of equal weights for clusters.
    #[arg(long)]
    #[serde(default)]
    pub random_phase: bool,
}

fn default_width() -> f64 {
    3.0
}

/// Mass diagnostics of each member, with optional pass/fail checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema, Args)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeParams {
    #[command(flatten)]
    pub quasimode: QuasimodeParams,
    #[arg(long, default_value_t = 0.9)]
    #[serde(default = "default_interior")]
    pub interior_radius: f64,
    /// Reflection angle of the two-scale split; none skips it.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(default)]
    pub split_alpha0: Option<f64>,
    /// Split radius `R` in units of `h`.
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "one")]
    pub split_r: f64,
    #[arg(long, default_value_t = 201)]
    #[serde(default = "default_samples")]
    pub radial_points: usize,
    /// Per-member bound on the mass in `{r < interior_radius}`.
    #[arg(long = "max-interior-mass")]
    #[serde(default)]
    pub max_interior_mass: Vec<f64>,
    /// Check the full boundary mass against `2E₀²` to 1e-8.
    #[arg(long)]
    #[serde(default)]
    pub check_boundary_mass: bool,
    /// Expected concentrated mass of every member (to 1e-12).
    #[arg(long)]
    #[serde(default)]
    pub expect_concentrated: Option<f64>,
    /// Check that `Σw(E − E₀)²` decreases along the list and ends below this.
    #[arg(long)]
    #[serde(default)]
    pub max_final_energy_spread: Option<f64>,
}

fn default_interior() -> f64 {
    0.9
}

/// Floquet bands on the torus `α₀ = pπ/q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema, Args)]
#[serde(deny_unknown_fields)]
pub struct EffectiveParams {
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    #[serde(default)]
    pub p: i64,
    #[arg(long, default_value_t = 1)]
    #[serde(default = "one_i64")]
    pub q: i64,
    /// Potential name, e.g. `zero`, `quadratic(1)`, `linear_x(2)`.
    #[arg(long, default_value = "zero")]
    #[serde(default = "zero_name")]
    pub potential: String,
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "one")]
    pub e0: f64,
    /// Floquet labels `|n| ≤ n_f`.
    #[arg(long, default_value_t = 16)]
    #[serde(default = "default_nf")]
    pub n_f: usize,
    /// Samples of the averaged potential; defaults to `8·n_f`.
    #[arg(long)]
    #[serde(default)]
    pub n_theta: Option<usize>,
    /// Points of the uniform `ω` grid on `[0, 2π)`.
    #[arg(long, default_value_t = 32)]
    #[serde(default = "default_omegas")]
    pub omegas: usize,
    #[arg(long, default_value_t = 6)]
    #[serde(default = "default_bands")]
    pub bands: usize,
    #[arg(long, default_value_t = 256)]
    #[serde(default = "default_profile_points")]
    pub profile_points: usize,
    /// Check `V = 0` bands against `½(n + ω/2π)²` to 1e-12.
    #[arg(long)]
    #[serde(default)]
    pub check_free_bands: bool,
    /// Expected constant value of the averaged potential (to 1e-10).
    #[arg(long)]
    #[serde(default)]
    pub expect_average: Option<f64>,
}

fn one_i64() -> i64 {
    1
}

fn zero_name() -> String {
    "zero".into()
}

fn default_nf() -> usize {
    16
}

fn default_omegas() -> usize {
    32
}

fn default_bands() -> usize {
    6
}

fn default_profile_points() -> usize {
    256
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum RegionKind {
    Sector,
    Arc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum GridKind {
    /// Eigenvalues, gap midpoints and seeded random points in `[lo, hi]`.
    Spectral,
    Uniform,
    Explicit,
    /// The single point `j_{zero_m, zero_k}²`.
    Zero,
}

/// Observability-constant sweep `κ(λ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema, Args)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    #[arg(long, value_enum, default_value_t = RegionKind::Sector)]
    #[serde(default = "default_region")]
    pub region: RegionKind,
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub r0: f64,
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "one")]
    pub r1: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    #[serde(default)]
    pub t0: f64,
    #[arg(long, default_value_t = 2.0 * PI, allow_negative_numbers = true)]
    #[serde(default = "two_pi")]
    pub t1: f64,
    #[arg(long, default_value = "zero")]
    #[serde(default = "zero_name")]
    pub potential: String,
    #[arg(long)]
    pub m_max: u32,
    #[arg(long)]
    pub j_max: f64,
    #[arg(long, value_enum, default_value_t = GridKind::Spectral)]
    #[serde(default = "default_grid")]
    pub grid: GridKind,
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub lo: f64,
    /// Top of the window; defaults to the guard.
    #[arg(long)]
    #[serde(default)]
    pub hi: Option<f64>,
    #[arg(long, default_value_t = 50)]
    #[serde(default = "default_points")]
    pub points: usize,
    #[arg(long, default_value_t = 10)]
    #[serde(default = "default_random")]
    pub random_per_gap: usize,
    #[arg(long = "lambda")]
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub zero_m: i32,
    #[arg(long, default_value_t = 1)]
    #[serde(default = "one_u32")]
    pub zero_k: u32,
    /// Allow λ beyond the guard; results are marked untrusted.
    #[arg(long)]
    #[serde(default)]
    pub override_guard: bool,
    /// Also sweep the half-step grid.
    #[arg(long)]
    #[serde(default)]
    pub refine: bool,
    /// Check `min κ > 0`.
    #[arg(long)]
    #[serde(default)]
    pub expect_positive: bool,
    /// Check `max κ` below this value.
    #[arg(long)]
    #[serde(default)]
    pub max_kappa: Option<f64>,
    /// Check the relative change of `min κ` under refinement.
    #[arg(long)]
    #[serde(default)]
    pub max_refine_change: Option<f64>,
}

fn default_region() -> RegionKind {
    RegionKind::Sector
}

fn two_pi() -> f64 {
    2.0 * PI
}

fn default_grid() -> GridKind {
    GridKind::Spectral
}

fn default_points() -> usize {
    50
}

fn default_random() -> usize {
    10
}

/// A semantic config error with the JSON path of the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at `{}`: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: format!("experiment.{field}"),
        message: message.into(),
    }
}

fn finite(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(err(field, format!("{v} is not finite")))
    }
}

pub fn parse_potential(field: &str, name: &str) -> Result<Potential, ConfigError> {
    Potential::from_str(name).map_err(|e| err(field, e.to_string()))
}

/// The tagged experiment enum buffers its body, which hides field paths;
/// re-reading the body as the named kind's parameters recovers them.
fn inner_error(text: &str) -> Option<ConfigError> {
    fn probe<T: serde::de::DeserializeOwned>(body: Value) -> Option<ConfigError> {
        serde_path_to_error::deserialize::<_, T>(body).err().map(|e| ConfigError {
            path: format!("experiment.{}", e.path()),
            message: e.inner().to_string(),
        })
    }
    let mut root: Value = serde_json::from_str(text).ok()?;
    let body = root.get_mut("experiment")?.as_object_mut()?;
    let kind = body.remove("kind")?;
    let body = Value::Object(body.clone());
    match kind.as_str()? {
        "modes" => probe::<ModesParams>(body),
        "trace" => probe::<TraceParams>(body),
        "build" => probe::<QuasimodeParams>(body),
        "analyze" => probe::<AnalyzeParams>(body),
        "effective" => probe::<EffectiveParams>(body),
        "sweep" => probe::<SweepParams>(body),
        _ => None,
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let outer = ConfigError {
                message: e.inner().to_string(),
                path,
            };
            if outer.path == "experiment" {
                inner_error(text).unwrap_or(outer)
            } else {
                outer
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != SCHEMA_VERSION {
            return Err(ConfigError {
                path: "schema".into(),
                message: format!("expected {SCHEMA_VERSION:?}, got {:?}", self.schema),
            });
        }
        match &self.experiment {
            Experiment::Modes(p) => {
                if p.k == 0 || p.count == 0 {
                    return Err(err(if p.k == 0 { "k" } else { "count" }, "must be at least 1"));
                }
            }
            Experiment::Trace(p) => {
                for (f, v) in [("x", p.x), ("y", p.y), ("xix", p.xix), ("xiy", p.xiy), ("tau", p.tau)] {
                    finite(f, v)?;
                }
                if p.x.hypot(p.y) > 1.0 {
                    return Err(err("x", "start point lies outside the unit disk"));
                }
                if p.xix == 0.0 && p.xiy == 0.0 {
                    return Err(err("xix", "momentum must be nonzero"));
                }
                if p.samples == 0 {
                    return Err(err("samples", "must be at least 1"));
                }
            }
            Experiment::Build(p) => p.validate("")?,
            Experiment::Analyze(p) => {
                p.quasimode.validate("quasimode.")?;
                if !(p.interior_radius > 0.0 && p.interior_radius <= 1.0) {
                    return Err(err("interior_radius", "must lie in (0, 1]"));
                }
                if !p.max_interior_mass.is_empty() && p.max_interior_mass.len() != p.quasimode.members() {
                    return Err(err("max_interior_mass", "needs one bound per member"));
                }
                if let Some(a) = p.split_alpha0 {
                    if !(a.abs() < PI / 2.0) {
                        return Err(err("split_alpha0", "must lie in (-π/2, π/2)"));
                    }
                }
                if !(p.split_r > 0.0) {
                    return Err(err("split_r", "must be positive"));
                }
                if p.expect_concentrated.is_some() && p.split_alpha0.is_none() {
                    return Err(err("expect_concentrated", "needs split_alpha0"));
                }
                if p.radial_points < 2 {
                    return Err(err("radial_points", "must be at least 2"));
                }
            }
            Experiment::Effective(p) => {
                if p.q <= 0 || 2 * p.p.abs() >= p.q {
                    return Err(err("p", "need q > 0 and |p/q| < 1/2"));
                }
                parse_potential("potential", &p.potential)?;
                if p.n_f == 0 || p.omegas == 0 {
                    return Err(err(if p.n_f == 0 { "n_f" } else { "omegas" }, "must be at least 1"));
                }
                if let Some(n) = p.n_theta {
                    if n < 4 * p.n_f {
                        return Err(err("n_theta", format!("must be at least 4·n_f = {}", 4 * p.n_f)));
                    }
                }
                if !(p.e0 > 0.0) {
                    return Err(err("e0", "must be positive"));
                }
            }
            Experiment::Sweep(p) => {
                for (f, v) in [("r0", p.r0), ("r1", p.r1), ("t0", p.t0), ("t1", p.t1), ("j_max", p.j_max), ("lo", p.lo)] {
                    finite(f, v)?;
                }
                if p.region == RegionKind::Sector && !(0.0 <= p.r0 && p.r0 < p.r1 && p.r1 <= 1.0) {
                    return Err(err("r0", format!("need 0 <= r0 < r1 <= 1, got r0 = {}, r1 = {}", p.r0, p.r1)));
                }
                if !(p.t0 < p.t1 && p.t1 - p.t0 <= 2.0 * PI + 1e-12) {
                    return Err(err("t1", "need t0 < t1 <= t0 + 2π"));
                }
                parse_potential("potential", &p.potential)?;
                if !(p.j_max > 0.0) {
                    return Err(err("j_max", "must be positive"));
                }
                match p.grid {
                    GridKind::Explicit if p.lambdas.is_empty() => return Err(err("lambdas", "explicit grid needs points")),
                    GridKind::Uniform if p.points < 2 => return Err(err("points", "must be at least 2")),
                    GridKind::Uniform if p.hi.is_none() => return Err(err("hi", "uniform grid needs hi")),
                    GridKind::Zero if p.zero_k == 0 => return Err(err("zero_k", "must be at least 1")),
                    _ => {}
                }
                if let Some(hi) = p.hi {
                    if !(hi > p.lo) {
                        return Err(err("hi", "must exceed lo"));
                    }
                }
            }
        }
        Ok(())
    }
}

impl QuasimodeParams {
    pub fn members(&self) -> usize {
        match self.family {
            Family::WhisperingGallery | Family::SingleMode => self.m.len(),
            Family::TorusPacket => self.h.len(),
            Family::Cluster => self.lambda.len(),
        }
    }

    fn validate(&self, prefix: &str) -> Result<(), ConfigError> {
        let field = |f: &str| format!("{prefix}{f}");
        if !(self.e0 > 0.0 && self.e0.is_finite()) {
            return Err(err(&field("e0"), "must be positive"));
        }
        if self.members() == 0 {
            let list = match self.family {
                Family::WhisperingGallery | Family::SingleMode => "m",
                Family::TorusPacket => "h",
                Family::Cluster => "lambda",
            };
            return Err(err(&field(list), "needs at least one member"));
        }
        match self.family {
            Family::WhisperingGallery => {
                if let Some(i) = self.m.iter().position(|m| *m <= 0) {
                    return Err(err(&field(&format!("m[{i}]")), "whispering-gallery orders must be positive"));
                }
            }
            Family::SingleMode => {
                if self.k == 0 {
                    return Err(err(&field("k"), "must be at least 1"));
                }
            }
            Family::TorusPacket => {
                match self.alpha0 {
                    Some(a) if a.abs() < PI / 2.0 => {}
                    _ => return Err(err(&field("alpha0"), "torus packets need alpha0 in (-π/2, π/2)")),
                }
                if let Some(i) = self.h.iter().position(|h| !(*h > 0.0)) {
                    return Err(err(&field(&format!("h[{i}]")), "must be positive"));
                }
                if !(self.width >= 0.0) {
                    return Err(err(&field("width"), "must be nonnegative"));
                }
            }
            Family::Cluster => {
                if let Some(i) = self.lambda.iter().position(|l| !(*l > 0.0)) {
                    return Err(err(&field(&format!("lambda[{i}]")), "must be positive"));
                }
                if !(self.window > 0.0) {
                    return Err(err(&field("window"), "must be positive"));
                }
            }
        }
        Ok(())
    }
}
