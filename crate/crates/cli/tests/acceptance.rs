//! End-to-end acceptance suite. Every criterion runs at its stated tolerance
//! and prints one PASS/FAIL line; the process fails if any criterion does.
//!
//! Oracles here are written against the public evaluators only: trapezoid
//! sums of the Bessel integral, bisection, midpoint quadrature and a dense
//! finite-difference eigenproblem.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use diskqm::billiard::*;
use diskqm::diskmodes::{galerkin_matrix, Basis, BasisCaps};
use diskqm::effective::*;
use diskqm::observability::{kappa_sweep, LambdaGrid, RegionSpec, SweepOptions};
use diskqm::phasespace::*;
use diskqm::potential::Potential;
use diskqm::quasimode::*;
use diskqm::rng::SeedTree;
use diskqm::specfun::{bessel_j, bessel_j_prime, bessel_zero};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde_json::Value;

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, u64, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const COOKBOOK: &[&str] = &["whispering-gallery", "torus-packet", "floquet-bands", "kappa-sweep", "negative-control"];

fn cookbook_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("cookbook")
}

fn scratch() -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

/// Runs a cookbook config through the binary into `scratch()/<pass>/<name>`.
fn run_cookbook(name: &str, pass: &str) -> Result<(PathBuf, Value), String> {
    let dir = scratch().join(pass).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    let cfg = cookbook_dir().join(format!("{name}.json"));
    let out = Command::new(env!("CARGO_BIN_EXE_diskqm"))
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        out.status.success(),
        "{name}: exit {:?}: {}{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.join("manifest.json")).map_err(|e| e.to_string())?;
    let manifest: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    Ok((dir, manifest))
}

fn checks_pass(manifest: &Value) -> Result<(), String> {
    for c in manifest["checks"].as_array().into_iter().flatten() {
        ensure!(c["pass"] == true, "{}: {}", c["name"], c["detail"]);
    }
    Ok(())
}

// ---- oracles ----

/// `J_m(x)` from the trapezoid rule on `(1/2π)∫cos(mτ − x sin τ)dτ`.
fn j_trapezoid(m: u32, x: f64) -> f64 {
    let n = (2.0 * (x + m as f64) + 64.0) as usize;
    let h = 2.0 * PI / n as f64;
    (0..n).map(|i| (m as f64 * i as f64 * h - x * (i as f64 * h).sin()).cos()).sum::<f64>() / n as f64
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> Option<f64> {
    let fa = f(a);
    if fa * f(b) >= 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        if f(mid).signum() == fa.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

/// Sign changes of the trapezoid oracle below `x_max`, step 0.25.
fn zero_index(m: u32, x_max: f64) -> usize {
    let mut x = if m == 0 { 0.25 } else { m as f64 };
    let mut prev = j_trapezoid(m, x);
    let mut count = 0;
    while x + 0.25 < x_max {
        x += 0.25;
        let v = j_trapezoid(m, x);
        if v.signum() != prev.signum() {
            count += 1;
        }
        prev = v;
    }
    count
}

/// Midpoint mass of `ψ_{m,1}` in `{r < rho}`.
fn riemann_interior_mass(m: i32, rho: f64, n: usize) -> f64 {
    let j = bessel_zero(m, 1).unwrap().value;
    let norm2 = 1.0 / (PI * bessel_j_prime(m, j).unwrap().powi(2));
    let dr = rho / n as f64;
    (0..n)
        .map(|i| {
            let r = (i as f64 + 0.5) * dr;
            2.0 * PI * r * norm2 * bessel_j(m, j * r).unwrap().powi(2) * dr
        })
        .sum()
}

/// Midpoint mean of `|z|²` along a chord at reflection angle `α`.
fn chord_mean_of_r2(alpha: f64) -> f64 {
    let c = alpha.cos();
    let n = 200_000;
    let ds = 2.0 * c / n as f64;
    (0..n).map(|i| (-c + (i as f64 + 0.5) * ds).powi(2) + alpha.sin().powi(2)).sum::<f64>() * ds / (2.0 * c)
}

/// Eighth-order stencil for `−½v'' + c cos θ v` with `v(θ + 2π) = ±v(θ)`.
fn mathieu_fd(c: f64, antiperiodic: bool, n: usize) -> Vec<f64> {
    let wrap = if antiperiodic { -1.0 } else { 1.0 };
    let d = 2.0 * PI / n as f64;
    let stencil = [-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] += -0.5 * stencil[0] / (d * d) + c * (i as f64 * d).cos();
        for (k, s) in stencil.iter().enumerate().skip(1) {
            for sign in [-1i64, 1] {
                let raw = i as i64 + sign * k as i64;
                let (j, f) = match raw {
                    r if r < 0 => ((r + n as i64) as usize, wrap),
                    r if r >= n as i64 => ((r - n as i64) as usize, wrap),
                    r => (r as usize, 1.0),
                };
                a[(i, j)] += -0.5 * s / (d * d) * f;
            }
        }
    }
    let mut v: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

fn random_phase_point(rng: &mut impl Rng) -> PhasePoint {
    loop {
        let (x, y): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if x * x + y * y < 1.0 {
            let e: f64 = rng.gen_range(0.1..5.0);
            let phi: f64 = rng.gen_range(0.0..2.0 * PI);
            return PhasePoint::new(x, y, e * phi.cos(), e * phi.sin());
        }
    }
}

// ---- criteria ----

fn bessel_zeros() -> Outcome {
    let mut rng = SeedTree::new(1).stream(1);
    let (mut worst_j, mut worst_gap) = (0f64, 0f64);
    for _ in 0..200 {
        let m: u32 = rng.gen_range(0..=200);
        let k: u32 = rng.gen_range(1..=30);
        let z = bessel_zero(m as i32, k).map_err(|e| e.to_string())?.value;
        worst_j = worst_j.max(bessel_j(m as i32, z).unwrap().abs());
        let oracle = bisect(|x| j_trapezoid(m, x), z - 0.4, z + 0.4).ok_or(format!("no bracket at ({m},{k})"))?;
        worst_gap = worst_gap.max((z - oracle).abs());
        ensure!(zero_index(m, z + 0.5) == k as usize, "j_({m},{k}) is not the {k}-th zero");
    }
    ensure!(worst_j <= 1e-10 && worst_gap <= 1e-10, "max |J| {worst_j:e}, max oracle gap {worst_gap:e}");
    Ok(format!("200 zeros, max |J_m(j)| {worst_j:.1e}, max bisection gap {worst_gap:.1e}"))
}

fn billiard_suite() -> Outcome {
    let mut rng = SeedTree::new(2).stream(0);
    let mut round_trip = 0f64;
    for _ in 0..10_000 {
        let p = random_phase_point(&mut rng);
        let back = from_action_angle(&to_action_angle(&p).unwrap()).unwrap();
        round_trip = round_trip.max(back.distance(&p));
    }
    ensure!(round_trip <= 1e-12, "round trip {round_trip:e}");
    let (mut drift, mut chord_err) = (0f64, 0f64);
    for _ in 0..1000 {
        let p = random_phase_point(&mut rng);
        let a0 = to_action_angle(&p).unwrap();
        let hits = bounces(&p, 100).map_err(|e| e.to_string())?;
        for (i, (t, q)) in hits.iter().enumerate() {
            let a = to_action_angle(q).unwrap();
            let scale = a0.e.max(1.0);
            drift = drift
                .max((a.e - a0.e).abs() / scale)
                .max((a.j - a0.j).abs() / scale)
                .max((a.alpha() - a0.alpha()).abs());
            if i > 0 {
                let chord = (t - hits[i - 1].0) * a0.e;
                chord_err = chord_err.max((chord - 2.0 * a0.alpha().cos()).abs());
            }
        }
    }
    ensure!(drift <= 1e-9, "invariant drift {drift:e}");
    ensure!(chord_err <= 1e-12, "chord law {chord_err:e}");
    let mut orbit_err = 0f64;
    for (p, q) in [(0, 1), (1, 6), (1, 4)] {
        let alpha = p as f64 / q as f64 * PI;
        let (n, len) = orbit_period(p, q).map_err(|e| e.to_string())?;
        // inscribed regular polygon: n chords subtending π − 2α each
        let polygon = n as f64 * 2.0 * (PI / 2.0 - alpha).sin();
        let start = from_action_angle(&ActionAngle { s: -alpha.cos(), theta: 0.7, e: 1.0, j: -alpha.sin() }).unwrap();
        let (t, end) = bounces(&start, n as usize).unwrap()[n as usize - 1];
        let closure = (end.x - start.x).hypot(end.y - start.y);
        orbit_err = orbit_err.max((len - polygon).abs()).max((t - len).abs()).max(closure);
    }
    ensure!(orbit_err <= 1e-12, "periodic orbits {orbit_err:e}");
    Ok(format!(
        "round trip {round_trip:.1e}, drift {drift:.1e}, chord law {chord_err:.1e}, orbit lengths {orbit_err:.1e}"
    ))
}

fn exact_quasimodes() -> Outcome {
    let mut worst_zero = 0f64;
    let mut worst_const = 0f64;
    for (m, k) in [(0, 1), (1, 1), (4, 3), (-17, 2), (60, 1), (120, 5), (200, 30)] {
        let q = single_mode(m, k, 1.0).unwrap();
        worst_zero = worst_zero.max(residual_norm(&q, &Potential::Zero).unwrap());
        for c in [-2.5, 0.75, 3.0] {
            let r = residual_norm(&q, &Potential::Constant { value: c }).unwrap();
            worst_const = worst_const.max((r - q.h * q.h * c.abs()).abs());
        }
    }
    ensure!(worst_zero <= 1e-12, "V = 0 residual {worst_zero:e}");
    ensure!(worst_const <= 1e-12, "V = c residual error {worst_const:e}");
    let f = isolated_cluster_family(&[50.0, 200.0, 800.0, 3200.0, 12800.0], 1.0, CoefficientRule::Equal, 1.0)
        .map_err(|e| e.to_string())?;
    let rep = classify_family(&f, |q| residual_norm(q, &Potential::Zero)).map_err(|e| e.to_string())?;
    let slope = rep.slope.ok_or("no slope")?;
    ensure!((slope - 2.0).abs() <= 0.1, "cluster slope {slope}");
    Ok(format!("eigenmodes {worst_zero:.1e}, constant shift {worst_const:.1e}, cluster slope {slope:.4}"))
}

fn whispering_gallery_study() -> Outcome {
    let bounds = [(100, 0.08), (150, 0.06), (200, 0.05)];
    // oracle first, independent of the library's quadrature
    let oracle: Vec<f64> = bounds.iter().map(|&(m, _)| riemann_interior_mass(m, 0.9, 400_000)).collect();
    for (o, (m, b)) in oracle.iter().zip(bounds) {
        ensure!(*o < b, "oracle mass {o} for m = {m} is not below {b}");
    }
    let (dir, manifest) = run_cookbook("whispering-gallery", "first")?;
    checks_pass(&manifest)?;
    let summary = std::fs::read_to_string(dir.join("summary.csv")).map_err(|e| e.to_string())?;
    let mut report = Vec::new();
    for ((line, o), (m, b)) in summary.lines().skip(1).zip(&oracle).zip(bounds) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let (mass, boundary) = (f[2], f[4]);
        ensure!(mass < b, "m = {m}: interior mass {mass}");
        ensure!((mass - o).abs() <= 1e-8 * o, "m = {m}: {mass} vs oracle {o}");
        ensure!((boundary - 2.0).abs() <= 1e-8, "m = {m}: boundary mass {boundary}");
        report.push(format!("m={m}: {mass:.3e}"));
    }
    ensure!(report.len() == 3, "summary has {} rows", report.len());
    Ok(format!("interior masses {}; boundary mass 2E0^2", report.join(", ")))
}

fn energy_concentration() -> Outcome {
    let f = isolated_cluster_family(&[50.0, 200.0, 800.0, 3200.0, 12800.0], 1.0, CoefficientRule::Equal, 1.0)
        .map_err(|e| e.to_string())?;
    let rep = classify_family(&f, |q| residual_norm(q, &Potential::Zero)).map_err(|e| e.to_string())?;
    ensure!(rep.class == OrderClass::BigO, "family is {:?}, not O(h^2)", rep.class);
    let spreads: Vec<f64> = f.members.iter().map(|q| ej_spectrum(q).energy_spread).collect();
    ensure!(spreads.windows(2).all(|w| w[1] < w[0]), "not monotone: {spreads:?}");
    let last = *spreads.last().unwrap();
    ensure!(last < 1e-3, "final spread {last:e}");
    Ok(format!("{} members, spread {:.2e} -> {last:.2e}", spreads.len(), spreads[0]))
}

fn two_microlocal() -> Outcome {
    let mut rng = SeedTree::new(6).stream(0);
    for i in 0..1000 {
        let lambda: f64 = rng.gen_range(20.0..4000.0);
        let width: f64 = rng.gen_range(1.0..60.0);
        let q = match cluster_free(lambda, width, CoefficientRule::RandomPhase { seed: rng.gen() }, 1.0) {
            Ok(c) => c.quasimode,
            Err(_) => single_mode(rng.gen_range(-50..50), rng.gen_range(1..10), 1.0).unwrap(),
        };
        let alpha0: f64 = rng.gen_range(-1.5..1.5);
        let r: f64 = rng.gen_range(0.1..30.0);
        let s = two_microlocal_split(&q, alpha0, r).map_err(|e| e.to_string())?;
        ensure!(s.flat_mass + s.concentrated_mass == 1.0, "case {i}: {} + {}", s.flat_mass, s.concentrated_mass);
    }
    let (_, manifest) = run_cookbook("torus-packet", "first")?;
    checks_pass(&manifest)?;
    for alpha0 in [0.0, PI / 6.0, PI / 4.0] {
        let h = 0.01;
        let q = torus_packet(&TorusPacketSpec { alpha0, e0: 1.0, h_target: h, width: 3.0 * h, energy_width: None })
            .map_err(|e| e.to_string())?;
        let s = two_microlocal_split(&q, alpha0, 4.0).unwrap();
        ensure!(s.concentrated_mass == 1.0, "packet at α0 = {alpha0}: {}", s.concentrated_mass);
    }
    for m in [100, 150, 200] {
        let s = two_microlocal_split(&whispering_gallery(m, 1.0).unwrap(), 0.0, 1.0).unwrap();
        ensure!(s.concentrated_mass == 0.0, "gallery m = {m}: {}", s.concentrated_mass);
    }
    Ok("1000 random splits sum to 1 exactly; matched packets 1; gallery vs diameters 0".into())
}

fn effective_operator() -> Outcome {
    let mut worst = 0f64;
    for l in 0..32 {
        let omega = 2.0 * PI * l as f64 / 32.0;
        let op = build_floquet(0, 1, omega, &Potential::Zero, 1.0, 12, 96).map_err(|e| e.to_string())?;
        let spec = floquet_spectrum(&op).map_err(|e| e.to_string())?;
        let mut exact: Vec<f64> = (-12..=12).map(|n| 0.5 * (n as f64 + omega / (2.0 * PI)).powi(2)).collect();
        exact.sort_by(f64::total_cmp);
        for (a, b) in spec.values.iter().zip(&exact) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure!(worst <= 1e-12, "free bands {worst:e}");
    let mut avg_err = 0f64;
    for (p, q, expected) in [(0, 1, 1.0 / 3.0), (1, 4, 2.0 / 3.0)] {
        let oracle = chord_mean_of_r2(p as f64 / q as f64 * PI);
        ensure!((oracle - expected).abs() < 1e-9, "oracle {oracle} vs {expected}");
        for a in averaged_potential(&Potential::Quadratic { coef: 1.0 }, p, q, 1.0, 32).map_err(|e| e.to_string())? {
            avg_err = avg_err.max((a - oracle).abs());
        }
    }
    ensure!(avg_err <= 1e-10, "averaged |z|^2 {avg_err:e}");
    let mut fd_err = 0f64;
    let c = 1.3;
    for (omega, anti) in [(0.0, false), (PI, true)] {
        let nt = 192;
        let samples = (0..nt).map(|l| c * (2.0 * PI * l as f64 / nt as f64).cos()).collect();
        let op = FloquetOperator::from_averaged(0.0, omega, samples, 24).map_err(|e| e.to_string())?;
        let spec = floquet_spectrum(&op).map_err(|e| e.to_string())?;
        let fd = mathieu_fd(c, anti, 1200);
        for (a, b) in spec.values.iter().zip(&fd).take(6) {
            fd_err = fd_err.max((a - b).abs());
        }
    }
    ensure!(fd_err <= 1e-6, "Mathieu spectrum {fd_err:e}");
    let (_, manifest) = run_cookbook("floquet-bands", "first")?;
    checks_pass(&manifest)?;
    Ok(format!("free bands {worst:.1e}, averages {avg_err:.1e}, Mathieu vs FD {fd_err:.1e}"))
}

fn commutation_trend() -> Outcome {
    let mut worst = 0f64;
    for (p, q) in [(0, 1), (1, 6), (1, 4)] {
        let alpha0 = p as f64 / q as f64 * PI;
        for h in [0.02, 0.01, 0.005] {
            let spec = TorusPacketSpec { alpha0, e0: 1.0, h_target: h, width: 0.5 * h, energy_width: Some(0.05) };
            let packet = torus_packet(&spec).map_err(|e| e.to_string())?;
            let prof = theta_profile(&two_microlocal_split(&packet, alpha0, 1.0).unwrap()).map_err(|e| e.to_string())?;
            ensure!(prof.coeffs.len() == 1, "packet at α0 = {alpha0} has {} carriers", prof.coeffs.len());
            let op = build_floquet(p, q, prof.omega, &Potential::Zero, 1.0, 16, 128).map_err(|e| e.to_string())?;
            worst = worst.max(commutator_defect(&op, &prof).map_err(|e| e.to_string())?.defect);
        }
    }
    ensure!(worst <= 1e-10, "single-carrier defect {worst:e}");
    // V = |z|² Galerkin eigenfunctions in the m = 0 sector concentrate on
    // diameters (α0 = 0) and h = 1/√μ decreases along the index list
    let v = Potential::Quadratic { coef: 1.0 };
    let basis = Basis::truncated(BasisCaps { m_max: 0, j_max: 110.0 }).unwrap();
    let op = galerkin_matrix(&v, &basis, None).map_err(|e| e.to_string())?;
    let eig = op.eigen().map_err(|e| e.to_string())?;
    let floor = 1e-12;
    let mut seq = Vec::new();
    for i in [2, 5, 10, 20, 30] {
        let q = galerkin_eigenmode(&op, &eig, i, 1.0).map_err(|e| e.to_string())?;
        let prof = theta_profile(&two_microlocal_split(&q, 0.0, 1.0).unwrap()).map_err(|e| e.to_string())?;
        let fl = build_floquet(0, 1, prof.omega, &v, 1.0, 8, 64).map_err(|e| e.to_string())?;
        seq.push((q.h, commutator_defect(&fl, &prof).map_err(|e| e.to_string())?.defect));
    }
    for w in seq.windows(2) {
        ensure!(w[1].0 < w[0].0, "h not decreasing: {seq:?}");
        ensure!(w[1].1.max(floor) <= 1.1 * w[0].1.max(floor), "defects increase: {seq:?}");
    }
    let defects: Vec<String> = seq.iter().map(|(h, d)| format!("h={h:.3}:{d:.1e}")).collect();
    Ok(format!(
        "trend test, not a limit verification; packets {worst:.1e}; |z|^2 family {}",
        defects.join(" ")
    ))
}

fn observability() -> Outcome {
    let (_, sweep) = run_cookbook("kappa-sweep", "first")?;
    checks_pass(&sweep)?;
    let d = &sweep["diagnostics"]["sweep"];
    let r = &sweep["diagnostics"]["refined"];
    let (coarse, fine) = (d["min_kappa"].as_f64().unwrap(), r["min_kappa"].as_f64().unwrap());
    ensure!(coarse > 0.0 && fine > 0.0, "min κ {coarse} / {fine}");
    let change = (fine - coarse).abs() / coarse;
    ensure!(change < 0.1, "grid change {change}");
    ensure!(d["window"][1] == d["guard"], "window stops short of the guard");
    ensure!(d["caps"]["m_max"] == 60, "caps {}", d["caps"]);

    let (_, neg) = run_cookbook("negative-control", "first")?;
    checks_pass(&neg)?;
    let n = &neg["diagnostics"]["sweep"];
    let target = bessel_zero(60, 1).unwrap().value.powi(2);
    ensure!(n["argmin_lambda"].as_f64() == Some(target), "probe at {} not j_(60,1)^2", n["argmin_lambda"]);
    let kneg = n["min_kappa"].as_f64().unwrap();
    ensure!(kneg < 1e-3 && n["trusted"] == true, "κ(j_(60,1)^2) = {kneg}");

    let caps = BasisCaps { m_max: 60, j_max: 40.0 };
    let grid = LambdaGrid::Uniform { lo: 1.0, hi: 790.0, points: 50 };
    let inner = RegionSpec::Sector { r0: 0.8, r1: 1.0, t0: 0.0, t1: PI / 3.0 };
    let outer = RegionSpec::Sector { r0: 0.7, r1: 1.0, t0: -PI / 12.0, t1: 5.0 * PI / 12.0 };
    let a = kappa_sweep(&Potential::Zero, &inner, &grid, caps, SweepOptions::default()).map_err(|e| e.to_string())?;
    let b = kappa_sweep(&Potential::Zero, &outer, &grid, caps, SweepOptions::default()).map_err(|e| e.to_string())?;
    ensure!(a.kappas.len() == 50, "{} grid points", a.kappas.len());
    for ((l, x), y) in a.lambdas.iter().zip(&a.kappas).zip(&b.kappas) {
        ensure!(*x <= y + 1e-9 * y.max(1.0), "λ = {l}: κ_inner {x} > κ_outer {y}");
    }
    Ok(format!(
        "(a) min κ {coarse:.4e}, refined change {change:.1e}; (b) κ(j_60,1^2) {kneg:.2e}; (c) nested order on 50 points"
    ))
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .map(|it| it.filter_map(|e| e.ok()?.file_name().into_string().ok()).collect())
        .unwrap_or_default();
    v.sort();
    v
}

/// The manifest minus what legitimately differs between runs: wall time and
/// the output directory.
fn stable_manifest(dir: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(dir.join("manifest.json")).map_err(|e| e.to_string())?;
    let mut m: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    m.as_object_mut().unwrap().remove("wall_time_s");
    m["config"].as_object_mut().unwrap().remove("output");
    Ok(m)
}

fn determinism() -> Outcome {
    let mut compared = 0;
    for name in COOKBOOK {
        let first = scratch().join("first").join(name);
        if !first.join("manifest.json").exists() {
            run_cookbook(name, "first")?;
        }
        let (second, _) = run_cookbook(name, "second")?;
        let (fa, fb) = (files_in(&first), files_in(&second));
        ensure!(fa == fb, "{name}: file sets differ: {fa:?} vs {fb:?}");
        for f in fa.iter().filter(|f| *f != "manifest.json") {
            let a = std::fs::read(first.join(f)).map_err(|e| e.to_string())?;
            let b = std::fs::read(second.join(f)).map_err(|e| e.to_string())?;
            ensure!(a == b, "{name}/{f} differs between runs");
            compared += 1;
        }
        ensure!(stable_manifest(&first)? == stable_manifest(&second)?, "{name}: manifests differ");
    }
    Ok(format!("{} cookbook targets, {compared} files byte-identical", COOKBOOK.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1", "bessel zeros", 30, bessel_zeros),
        ("2", "billiard dynamics", 60, billiard_suite),
        ("3", "exact quasimodes", 0, exact_quasimodes),
        ("4", "whispering gallery", 120, whispering_gallery_study),
        ("5", "energy concentration", 0, energy_concentration),
        ("6", "two-microlocal split", 0, two_microlocal),
        ("7", "effective operator", 60, effective_operator),
        ("8", "commutation trend", 0, commutation_trend),
        ("9", "observability sweeps", 600, observability),
        ("10", "cookbook determinism", 0, determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, budget, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|x| x == id || name.contains(x.as_str())) {
            continue;
        }
        let t = Instant::now();
        let mut outcome = f();
        let secs = t.elapsed().as_secs_f64();
        if budget > 0 && secs > budget as f64 {
            outcome = outcome.and_then(|d| Err(format!("{d}; took {secs:.1} s, budget {budget} s")));
        }
        match outcome {
            Ok(detail) => println!("PASS [{id}] {name} ({secs:.1} s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{id}] {name} ({secs:.1} s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
