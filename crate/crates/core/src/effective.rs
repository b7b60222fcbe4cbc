//! The one-dimensional Floquet operator
//! `P_{α₀,ω} = −½∂_θ² + cos²α₀ ⟨V⟩_{α₀}(θ)` on `{v(θ + 2π) = e^{iω} v(θ)}`,
//! discretized in the shifted Fourier basis `e^{i(n + ω/2π)θ}/√(2π)`,
//! `|n| ≤ N_f`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::billiard::orbit_average;
use crate::error::{domain, Error, Result};
use crate::io::CsvWriter;
use crate::linalg::{dot, eigh, norm, CMatrix, C64};
use crate::phasespace::ThetaProfile;
use crate::potential::Potential;

/// Fourier tail of `⟨V⟩` above which aliasing is reported.
pub const ALIASING_TOL: f64 = 1e-10;
/// Relative tail mass of a profile outside `|n| ≤ N_f` above which it is reported.
pub const TAIL_TOL: f64 = 1e-8;

/// `⟨V⟩_{α₀}` at `θ_l = 2πl/N`, `l = 0..N`, for `α₀ = (p/q)π`.
pub fn averaged_potential(v: &Potential, p: i64, q: i64, e0: f64, n_theta: usize) -> Result<Vec<f64>> {
    (0..n_theta)
        .map(|l| {
            let th = 2.0 * PI * l as f64 / n_theta as f64;
            orbit_average(|z| v.eval(z.x, z.y), p, q, e0, th)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct FloquetOperator {
    pub alpha0: f64,
    pub omega: f64,
    pub n_f: usize,
    /// `⟨V⟩_{α₀}` samples on the uniform grid.
    pub averaged: Vec<f64>,
    pub matrix: CMatrix,
    /// `cos²α₀ · sup|⟨V⟩|`, for the form bound.
    pub potential_bound: f64,
    pub warnings: Vec<String>,
}

impl FloquetOperator {
    /// From averaged-potential samples. Index `i` of the matrix is `n = i − N_f`.
    pub fn from_averaged(alpha0: f64, omega: f64, averaged: Vec<f64>, n_f: usize) -> Result<Self> {
        let n_theta = averaged.len();
        if n_theta < 4 * n_f.max(1) {
            return Err(domain(
                "build_floquet",
                format!("N_theta = {n_theta} must be at least 4·N_f = {}", 4 * n_f),
            ));
        }
        let dft = |k: i64| -> C64 {
            averaged
                .iter()
                .enumerate()
                .map(|(l, v)| C64::from_polar(*v, -2.0 * PI * (k * l as i64) as f64 / n_theta as f64))
                .sum::<C64>()
                / n_theta as f64
        };
        let span = 2 * n_f as i64;
        let coeffs: Vec<C64> = (-span..=span).map(dft).collect();
        let mut warnings = Vec::new();
        let tail = ((span + 1)..=(n_theta as i64 / 2)).map(|k| dft(k).norm()).fold(0.0, f64::max);
        if tail > ALIASING_TOL {
            warnings.push(format!(
                "averaged potential has Fourier coefficients up to {tail:e} beyond |k| = {span}"
            ));
        }
        let c2 = alpha0.cos().powi(2);
        let shift = omega / (2.0 * PI);
        let dim = 2 * n_f + 1;
        let mut matrix = CMatrix::from_fn(dim, |a, b| {
            let k = a as i64 - b as i64;
            coeffs[(k + span) as usize] * c2
        });
        for a in 0..dim {
            let n = a as f64 - n_f as f64;
            matrix[(a, a)] = C64::new(0.5 * (n + shift).powi(2) + c2 * coeffs[span as usize].re, 0.0);
        }
        let sup = averaged.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(FloquetOperator {
            alpha0,
            omega,
            n_f,
            averaged,
            matrix,
            potential_bound: c2 * sup,
            warnings,
        })
    }

    pub fn dim(&self) -> usize {
        2 * self.n_f + 1
    }

    /// `n` for matrix index `i`.
    pub fn label(&self, i: usize) -> i32 {
        i as i32 - self.n_f as i32
    }
}

/// `P_{α₀,ω}` for `α₀ = (p/q)π`.
pub fn build_floquet(p: i64, q: i64, omega: f64, v: &Potential, e0: f64, n_f: usize, n_theta: usize) -> Result<FloquetOperator> {
    let alpha0 = p as f64 / q as f64 * PI;
    let averaged = averaged_potential(v, p, q, e0, n_theta)?;
    FloquetOperator::from_averaged(alpha0, omega, averaged, n_f)
}

#[derive(Debug, Clone)]
pub struct FloquetSpectrum {
    pub omega: f64,
    pub n_f: usize,
    pub values: Vec<f64>,
    /// Coefficients on `e^{i(n + ω/2π)θ}/√(2π)`, index `n + N_f`.
    pub vectors: Vec<Vec<C64>>,
}

impl FloquetSpectrum {
    /// `v(θ)` for eigenpair `i` at `n` equally spaced angles.
    pub fn eigenfunction(&self, i: usize, n: usize) -> Vec<(f64, C64)> {
        let a = 1.0 / (2.0 * PI).sqrt();
        let shift = self.omega / (2.0 * PI);
        (0..n)
            .map(|l| {
                let th = 2.0 * PI * l as f64 / n as f64;
                let v = self.vectors[i]
                    .iter()
                    .enumerate()
                    .map(|(idx, c)| c * C64::from_polar(a, (idx as f64 - self.n_f as f64 + shift) * th))
                    .sum();
                (th, v)
            })
            .collect()
    }

    /// CSV `theta,re,im`.
    pub fn eigenfunction_csv(&self, i: usize, n: usize) -> String {
        let mut w = CsvWriter::new(&["theta", "re", "im"]);
        for (th, v) in self.eigenfunction(i, n) {
            w.row_f64(&[th, v.re, v.im]);
        }
        w.finish()
    }

    /// The eigenfunction as a profile on the Floquet basis (`carrier` 0).
    pub fn as_profile(&self, i: usize, alpha0: f64) -> ThetaProfile {
        ThetaProfile {
            alpha0,
            e0: 1.0,
            h: 1.0,
            carrier: 0,
            omega: self.omega,
            shift: 0,
            coeffs: self.vectors[i]
                .iter()
                .enumerate()
                .map(|(idx, c)| (idx as i32 - self.n_f as i32, *c))
                .collect(),
            mass: norm(&self.vectors[i]).powi(2),
        }
    }
}

/// Eigenpairs, checking the form bound `spec ≥ −cos²α₀ sup|⟨V⟩|`.
pub fn floquet_spectrum(op: &FloquetOperator) -> Result<FloquetSpectrum> {
    let eig = eigh(&op.matrix)?;
    let floor = -op.potential_bound - 1e-10 * (1.0 + op.potential_bound);
    if let Some(low) = eig.values.first() {
        if *low < floor {
            return Err(domain(
                "floquet_spectrum",
                format!("eigenvalue {low} violates the form bound {}", -op.potential_bound),
            ));
        }
    }
    Ok(FloquetSpectrum {
        omega: op.omega,
        n_f: op.n_f,
        values: eig.values,
        vectors: eig.vectors,
    })
}

/// CSV `omega,n,eigenvalue` over a list of spectra; `n` is the band index.
pub fn bands_csv(spectra: &[FloquetSpectrum], bands: usize) -> String {
    let mut w = CsvWriter::new(&["omega", "n", "eigenvalue"]);
    for s in spectra {
        for (n, v) in s.values.iter().take(bands).enumerate() {
            w.row(&[crate::io::fmt17(s.omega), n.to_string(), crate::io::fmt17(*v)]);
        }
    }
    w.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    /// `‖[P, ρ]‖_HS / ‖ρ‖_HS`
    pub defect: f64,
    /// Relative mass of the profile outside `|n| ≤ N_f`.
    pub tail: f64,
    /// Distance on the circle between the profile's and the operator's `ω`.
    pub omega_mismatch: f64,
    pub warnings: Vec<String>,
}

fn embed(op: &FloquetOperator, profile: &ThetaProfile) -> (Vec<C64>, f64, f64, Vec<String>) {
    let dim = op.dim();
    let mut g = vec![C64::new(0.0, 0.0); dim];
    let mut outside = 0.0;
    let mut total = 0.0;
    for (n, c) in profile.floquet_coeffs() {
        total += c.norm_sqr();
        let idx = n as i64 + op.n_f as i64;
        if (0..dim as i64).contains(&idx) {
            g[idx as usize] = c;
        } else {
            outside += c.norm_sqr();
        }
    }
    let tail = if total > 0.0 { outside / total } else { 0.0 };
    let d = (profile.omega - op.omega).rem_euclid(2.0 * PI);
    let mismatch = d.min(2.0 * PI - d);
    let mut warnings = Vec::new();
    if tail > TAIL_TOL {
        warnings.push(format!("profile has relative mass {tail:e} outside |n| <= {}", op.n_f));
    }
    if mismatch > 1e-9 {
        warnings.push(format!(
            "profile omega {} differs from operator omega {}",
            profile.omega, op.omega
        ));
    }
    (g, tail, mismatch, warnings)
}

/// Commutator of `P` with the rank-one state `ρ = g g*`,
/// `‖[P, ρ]‖_HS/‖ρ‖_HS = √2 ‖(P − ⟨P⟩_g) g‖ / ‖g‖`.
pub fn commutator_defect(op: &FloquetOperator, profile: &ThetaProfile) -> Result<DefectReport> {
    let (g, tail, omega_mismatch, warnings) = embed(op, profile);
    let gg = norm(&g);
    if gg == 0.0 {
        return Err(Error::EmptySelection("profile vanishes on the truncated basis".into()));
    }
    let pg = op.matrix.mat_vec(&g);
    let mean = dot(&g, &pg) / (gg * gg);
    let dev: Vec<C64> = pg.iter().zip(&g).map(|(a, b)| a - b * mean).collect();
    Ok(DefectReport {
        defect: 2f64.sqrt() * norm(&dev) / gg,
        tail,
        omega_mismatch,
        warnings,
    })
}

/// Same quantity for `ρ = Σ w_i g_i g_i*`, assembled densely.
pub fn commutator_defect_mixed(op: &FloquetOperator, states: &[(f64, ThetaProfile)]) -> Result<DefectReport> {
    let dim = op.dim();
    let mut rho = CMatrix::zeros(dim);
    let mut warnings = Vec::new();
    let mut tail: f64 = 0.0;
    let mut mismatch: f64 = 0.0;
    for (w, prof) in states {
        if *w < 0.0 {
            return Err(domain("commutator_defect_mixed", "weights must be nonnegative"));
        }
        let (g, t, m, warn) = embed(op, prof);
        tail = tail.max(t);
        mismatch = mismatch.max(m);
        warnings.extend(warn);
        for a in 0..dim {
            for b in 0..dim {
                rho[(a, b)] += g[a] * g[b].conj() * *w;
            }
        }
    }
    let rn = rho.frobenius();
    if rn == 0.0 {
        return Err(Error::EmptySelection("mixed state vanishes on the truncated basis".into()));
    }
    let comm = op.matrix.mat_mul(&rho).sub(&rho.mat_mul(&op.matrix));
    Ok(DefectReport {
        defect: comm.frobenius() / rn,
        tail,
        omega_mismatch: mismatch,
        warnings,
    })
}
