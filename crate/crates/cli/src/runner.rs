//! Executes a validated config, writes its artifacts and the manifest.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use diskqm::billiard::{trace, trace_csv, PhasePoint};
use diskqm::diskmodes::BasisCaps;
use diskqm::effective::{averaged_potential, bands_csv, floquet_spectrum, FloquetOperator};
use diskqm::io::{fmt17, CsvWriter};
use diskqm::observability::{LambdaGrid, RegionSpec, SweepOptions, SweepResult, Sweeper, GRID_STREAM};
use diskqm::phasespace::{boundary_mass, ej_spectrum, position_mass, radial_density, radial_density_csv, theta_profile, two_microlocal_split, Sector};
use diskqm::quasimode::{cluster_free, single_mode, torus_packet, whispering_gallery, CoefficientRule, Quasimode, TorusPacketSpec};
use diskqm::rng::{SeedTree, GENERATOR_NAME};
use diskqm::specfun::{bessel_zero, zero_table_csv};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::*;

/// First stream label for per-member cluster phases; member `i` uses `+ i`.
pub const CLUSTER_STREAM: u64 = 0x636c_7573_0000;

pub const MANIFEST: &str = "manifest.json";

/// Why a run did not succeed; each maps to a process exit code.
#[derive(Debug)]
pub enum Failure {
    /// A numerical guard or an acceptance check failed (exit 1).
    Numerical(String),
    /// The config or its environment is unusable (exit 2).
    Config(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Numerical(_) => 1,
            Failure::Config(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Numerical(m) | Failure::Config(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<diskqm::Error> for Failure {
    fn from(e: diskqm::Error) -> Self {
        use diskqm::Error as E;
        match e {
            E::GuardExceeded { .. } | E::NoConvergence { .. } | E::NotHermitian { .. } => Failure::Numerical(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("io: {e}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema: &'static str,
    pub tool: String,
    pub kind: &'static str,
    pub seed: u64,
    pub generator: &'static str,
    pub streams: BTreeMap<String, u64>,
    pub config: ExperimentConfig,
    pub outputs: Vec<OutputEntry>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub diagnostics: Value,
    pub status: &'static str,
    pub wall_time_s: f64,
}

struct Run {
    dir: PathBuf,
    seed: u64,
    outputs: Vec<OutputEntry>,
    checks: Vec<Check>,
    warnings: Vec<String>,
    streams: BTreeMap<String, u64>,
    diagnostics: serde_json::Map<String, Value>,
    echo: bool,
}

impl Run {
    fn write(&mut self, name: &str, text: &str) -> Result<(), Failure> {
        fs::write(self.dir.join(name), text)?;
        self.outputs.push(OutputEntry {
            path: name.to_string(),
            bytes: text.len(),
            sha256: format!("{:x}", Sha256::digest(text.as_bytes())),
        });
        Ok(())
    }

    fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        let c = Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        };
        if self.echo {
            println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        self.checks.push(c);
    }

    fn note(&mut self, key: &str, value: Value) {
        self.diagnostics.insert(key.to_string(), value);
    }
}

/// Runs `cfg`, writing every artifact plus `manifest.json` into the output
/// directory. Prints PASS/FAIL lines when `echo` is set. A failed check still
/// writes everything and then reports [`Failure::Numerical`].
pub fn run(cfg: &ExperimentConfig, echo: bool) -> Result<Manifest, Failure> {
    cfg.validate()?;
    let start = Instant::now();
    let dir = output_dir(cfg);
    fs::create_dir_all(&dir)?;
    let mut r = Run {
        dir: dir.clone(),
        seed: cfg.seed,
        outputs: Vec::new(),
        checks: Vec::new(),
        warnings: Vec::new(),
        streams: BTreeMap::new(),
        diagnostics: serde_json::Map::new(),
        echo,
    };
    match &cfg.experiment {
        Experiment::Modes(p) => modes(&mut r, p)?,
        Experiment::Trace(p) => run_trace(&mut r, p)?,
        Experiment::Build(p) => build(&mut r, p)?,
        Experiment::Analyze(p) => analyze(&mut r, p)?,
        Experiment::Effective(p) => effective(&mut r, p)?,
        Experiment::Sweep(p) => sweep(&mut r, p)?,
    }
    let failed = r.checks.iter().filter(|c| !c.pass).count();
    let status = match (r.checks.is_empty(), failed) {
        (true, _) => "ok",
        (false, 0) => "pass",
        _ => "fail",
    };
    if echo {
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
    }
    let manifest = Manifest {
        schema: SCHEMA_VERSION,
        tool: format!("diskqm {}", env!("CARGO_PKG_VERSION")),
        kind: cfg.experiment.kind(),
        seed: cfg.seed,
        generator: GENERATOR_NAME,
        streams: r.streams,
        config: cfg.clone(),
        outputs: r.outputs,
        checks: r.checks,
        warnings: r.warnings,
        diagnostics: Value::Object(r.diagnostics),
        status,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Config(e.to_string()))?;
    fs::write(dir.join(MANIFEST), text + "\n")?;
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} check(s) failed; see {}", dir.join(MANIFEST).display())));
    }
    Ok(manifest)
}

pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output
        .clone()
        .unwrap_or_else(|| Path::new("out").join(cfg.experiment.kind()))
}

fn modes(r: &mut Run, p: &ModesParams) -> Result<(), Failure> {
    let zeros = (p.k..p.k + p.count).map(|k| bessel_zero(p.m, k)).collect::<Result<Vec<_>, _>>()?;
    let csv = zero_table_csv(&zeros);
    if r.echo {
        print!("{csv}");
    }
    r.write("zeros.csv", &csv)
}

fn run_trace(r: &mut Run, p: &TraceParams) -> Result<(), Failure> {
    let start = PhasePoint::new(p.x, p.y, p.xix, p.xiy);
    let samples = trace(&start, p.tau, p.samples)?;
    let csv = trace_csv(&samples)?;
    if r.echo {
        if let Some(last) = csv.lines().last() {
            println!("{last}");
        }
    }
    r.write("trace.csv", &csv)
}

fn members(r: &mut Run, p: &QuasimodeParams) -> Result<Vec<Quasimode>, Failure> {
    let tree = SeedTree::new(r.seed);
    let mut out = Vec::new();
    for i in 0..p.members() {
        let q = match p.family {
            Family::WhisperingGallery => whispering_gallery(p.m[i] as u32, p.e0)?,
            Family::SingleMode => single_mode(p.m[i], p.k, p.e0)?,
            Family::TorusPacket => torus_packet(&TorusPacketSpec {
                alpha0: p.alpha0.expect("validated"),
                e0: p.e0,
                h_target: p.h[i],
                width: p.width * p.h[i],
                energy_width: None,
            })?,
            Family::Cluster => {
                let rule = if p.random_phase {
                    let stream = CLUSTER_STREAM + i as u64;
                    r.streams.insert(format!("cluster_phases[{i}]"), stream);
                    CoefficientRule::RandomPhase { seed: tree.derive(stream) }
                } else {
                    CoefficientRule::Equal
                };
                cluster_free(p.lambda[i], p.window, rule, p.e0)?.quasimode
            }
        };
        out.push(q);
    }
    Ok(out)
}

fn build(r: &mut Run, p: &QuasimodeParams) -> Result<(), Failure> {
    let qs = members(r, p)?;
    let mut table = CsvWriter::new(&["member", "h", "E0", "modes", "energy_spread"]);
    for (i, q) in qs.iter().enumerate() {
        r.write(&format!("member_{i:02}.json"), &q.to_json()?)?;
        let ej = ej_spectrum(q);
        r.write(&format!("member_{i:02}_ej.csv"), &ej.to_csv())?;
        table.row(&[i.to_string(), fmt17(q.h), fmt17(q.e0), q.coeffs.len().to_string(), fmt17(ej.energy_spread)]);
    }
    r.write("members.csv", &table.finish())
}

fn analyze(r: &mut Run, p: &AnalyzeParams) -> Result<(), Failure> {
    let qs = members(r, &p.quasimode)?;
    let mut table = CsvWriter::new(&[
        "member",
        "h",
        "interior_mass",
        "interior_self_check",
        "boundary_mass",
        "energy_spread",
        "flat_mass",
        "concentrated_mass",
    ]);
    let radii: Vec<f64> = (0..p.radial_points).map(|i| i as f64 / (p.radial_points - 1) as f64).collect();
    let mut spreads = Vec::new();
    for (i, q) in qs.iter().enumerate() {
        let inner = position_mass(q, &Sector::annulus(0.0, p.interior_radius), None)?;
        r.warnings.extend(inner.warnings.iter().map(|w| format!("member {i}: {w}")));
        let bm = boundary_mass(q, 0.0, 2.0 * PI)?;
        let ej = ej_spectrum(q);
        spreads.push(ej.energy_spread);
        r.write(&format!("member_{i:02}_ej.csv"), &ej.to_csv())?;
        r.write(&format!("member_{i:02}_radial.csv"), &radial_density_csv(&radii, &radial_density(q, &radii)?))?;
        let (flat, conc) = match p.split_alpha0 {
            Some(a) => {
                let split = two_microlocal_split(q, a, p.split_r)?;
                if split.concentrated_mass > 0.0 {
                    r.write(&format!("member_{i:02}_theta.csv"), &theta_profile(&split)?.to_csv(256))?;
                }
                (split.flat_mass, split.concentrated_mass)
            }
            None => (f64::NAN, f64::NAN),
        };
        table.row(&[
            i.to_string(),
            fmt17(q.h),
            fmt17(inner.value),
            fmt17(inner.self_check),
            fmt17(bm),
            fmt17(ej.energy_spread),
            fmt17(flat),
            fmt17(conc),
        ]);
        if let Some(bound) = p.max_interior_mass.get(i) {
            r.check(
                format!("interior_mass[{i}]"),
                inner.value < *bound,
                format!("mass in r < {} is {:.6e} (bound {bound}, {})", p.interior_radius, inner.value, q.tag),
            );
        }
        if p.check_boundary_mass {
            let want = 2.0 * q.e0 * q.e0;
            r.check(format!("boundary_mass[{i}]"), (bm - want).abs() <= 1e-8, format!("{bm:.12} vs 2E0^2 = {want}"));
        }
        if let Some(want) = p.expect_concentrated {
            r.check(
                format!("concentrated_mass[{i}]"),
                (conc - want).abs() <= 1e-12 && (flat + conc - 1.0).abs() <= 1e-12,
                format!("concentrated {conc}, flat {flat}, expected {want}"),
            );
        }
    }
    if let Some(bound) = p.max_final_energy_spread {
        let monotone = spreads.windows(2).all(|w| w[1] < w[0]);
        let last = *spreads.last().expect("members validated nonempty");
        r.check(
            "energy_concentration",
            monotone && last < bound,
            format!(
                "spreads [{}], strictly decreasing: {monotone}, final below {bound}: {}",
                spreads.iter().map(|s| format!("{s:.3e}")).collect::<Vec<_>>().join(", "),
                last < bound
            ),
        );
    }
    r.write("summary.csv", &table.finish())
}

fn effective(r: &mut Run, p: &EffectiveParams) -> Result<(), Failure> {
    let v = parse_potential("potential", &p.potential)?;
    let n_theta = p.n_theta.unwrap_or(8 * p.n_f);
    let alpha0 = p.p as f64 / p.q as f64 * PI;
    let averaged = averaged_potential(&v, p.p, p.q, p.e0, n_theta)?;
    let mut avg = CsvWriter::new(&["theta", "value"]);
    for (l, a) in averaged.iter().enumerate() {
        avg.row_f64(&[2.0 * PI * l as f64 / n_theta as f64, *a]);
    }
    r.write("averaged.csv", &avg.finish())?;
    let mut spectra = Vec::with_capacity(p.omegas);
    for l in 0..p.omegas {
        let omega = 2.0 * PI * l as f64 / p.omegas as f64;
        let op = FloquetOperator::from_averaged(alpha0, omega, averaged.clone(), p.n_f)?;
        r.warnings.extend(op.warnings.iter().cloned());
        spectra.push(floquet_spectrum(&op)?);
    }
    r.write("bands.csv", &bands_csv(&spectra, p.bands))?;
    r.write("ground_state.csv", &spectra[0].eigenfunction_csv(0, p.profile_points))?;
    r.note("lowest_band", json!(spectra.iter().map(|s| s.values[0]).collect::<Vec<_>>()));
    if p.check_free_bands {
        let mut worst: f64 = 0.0;
        for s in &spectra {
            let shift = s.omega / (2.0 * PI);
            let n_f = p.n_f as i64;
            let mut exact: Vec<f64> = (-n_f..=n_f).map(|n| 0.5 * (n as f64 + shift).powi(2)).collect();
            exact.sort_by(f64::total_cmp);
            for (a, b) in s.values.iter().zip(&exact) {
                worst = worst.max((a - b).abs());
            }
        }
        r.check("free_bands", worst <= 1e-12, format!("max |μ − ½(n + ω/2π)²| = {worst:.3e} over {} ω", p.omegas));
    }
    if let Some(want) = p.expect_average {
        let worst = averaged.iter().map(|a| (a - want).abs()).fold(0.0, f64::max);
        r.check("averaged_potential", worst <= 1e-10, format!("max |<V> − {want}| = {worst:.3e}"));
    }
    Ok(())
}

fn sweep(r: &mut Run, p: &SweepParams) -> Result<(), Failure> {
    let v = parse_potential("potential", &p.potential)?;
    let region = match p.region {
        RegionKind::Sector => RegionSpec::Sector {
            r0: p.r0,
            r1: p.r1,
            t0: p.t0,
            t1: p.t1,
        },
        RegionKind::Arc => RegionSpec::Arc { t0: p.t0, t1: p.t1 },
    };
    let caps = BasisCaps {
        m_max: p.m_max,
        j_max: p.j_max,
    };
    let options = SweepOptions {
        override_guard: p.override_guard,
        ..SweepOptions::default()
    };
    let sweeper = Sweeper::new(&v, &region, caps, options)?;
    let grid = match p.grid {
        GridKind::Spectral => {
            r.streams.insert("lambda_grid".into(), GRID_STREAM);
            LambdaGrid::Spectral {
                lo: p.lo,
                hi: p.hi,
                random_per_gap: p.random_per_gap,
                seed: r.seed,
            }
        }
        GridKind::Uniform => LambdaGrid::Uniform {
            lo: p.lo,
            hi: p.hi.expect("validated"),
            points: p.points,
        },
        GridKind::Explicit => LambdaGrid::Explicit { values: p.lambdas.clone() },
        GridKind::Zero => LambdaGrid::Explicit {
            values: vec![bessel_zero(p.zero_m, p.zero_k)?.value.powi(2)],
        },
    };
    let lambdas = sweeper.grid(&grid)?;
    let mut result = sweeper.sweep(lambdas, grid.seed())?;
    if p.region == RegionKind::Arc {
        result.warnings.push("boundary sweep is an L2 proxy; H1_0 norms not imposed".into());
    }
    r.write("kappa.csv", &result.to_csv())?;
    r.note("sweep", summary(&result));
    r.warnings.extend(result.warnings.iter().cloned());
    let refined = if p.refine || p.max_refine_change.is_some() {
        let fine = sweeper.refine_sweep(&result)?;
        r.write("kappa_refined.csv", &fine.to_csv())?;
        r.note("refined", summary(&fine));
        Some(fine)
    } else {
        None
    };
    let window = format!(
        "λ in [{}, {}], guard {}, basis {} modes (m_max {}, j_max {})",
        result.lambdas[0],
        result.lambdas.last().unwrap(),
        result.guard,
        result.basis_size,
        p.m_max,
        p.j_max
    );
    if p.expect_positive {
        r.check(
            "kappa_positive",
            result.min_kappa > 0.0 && result.trusted,
            format!("min κ = {:.6e} at λ = {:.6} over {} points; {window}", result.min_kappa, result.argmin_lambda, result.lambdas.len()),
        );
    }
    if let Some(bound) = p.max_kappa {
        let max = result.kappas.iter().copied().fold(0.0, f64::max);
        r.check("kappa_small", max < bound && result.trusted, format!("max κ = {max:.6e} (bound {bound}); {window}"));
    }
    if let (Some(bound), Some(fine)) = (p.max_refine_change, &refined) {
        let change = (result.min_kappa - fine.min_kappa).abs() / result.min_kappa;
        r.check(
            "grid_stability",
            change < bound,
            format!("min κ {:.6e} -> {:.6e} on {} points, relative change {change:.3e}", result.min_kappa, fine.min_kappa, fine.lambdas.len()),
        );
    }
    Ok(())
}

fn summary(s: &SweepResult) -> Value {
    json!({
        "region": s.region,
        "boundary_proxy": s.boundary_proxy,
        "potential": s.potential,
        "caps": s.caps,
        "basis_size": s.basis_size,
        "points": s.lambdas.len(),
        "window": [s.lambdas.first(), s.lambdas.last()],
        "min_kappa": s.min_kappa,
        "argmin_lambda": s.argmin_lambda,
        "constant_estimate": s.constant_estimate(),
        "guard": s.guard,
        "trusted": s.trusted,
        "rotated": s.rotated,
        "gram_self_check": s.gram_self_check,
    })
}
