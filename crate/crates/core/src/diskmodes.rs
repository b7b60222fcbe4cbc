//! Dirichlet eigenbasis of the unit disk and Galerkin matrices of `−Δ + V`.
//!
//! `ψ_{m,k}(r, θ) = N_{m,k} J_{|m|}(j r) e^{imθ}` with `j = j_{|m|,k}` and
//! `N_{m,k} = 1/(√π |J_{|m|}'(j)|)`, eigenvalue `j²`.
//!
//! Integrals over annular sectors factor into a radial part, computed with
//! Gauss–Legendre against the weight `r`, and an angular part
//! `∫ e^{i(m_p − m_q)θ} dθ`, which is closed-form.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::io::fmt17;
use crate::linalg::{eigh, CMatrix, Eigen, C64};
use crate::potential::Potential;
use crate::quadrature::GaussLegendre;
use crate::specfun::{bessel_zero, jn, jn_prime, zeros_below};

/// Relative disagreement between quadrature orders `n` and `2n` above which a
/// precision warning is issued for smooth integrands.
pub const SELF_CHECK_TOL: f64 = 1e-8;
/// Accuracy contract when the potential is discontinuous.
pub const RELAXED_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeIndex {
    pub m: i32,
    pub k: u32,
    pub j: f64,
    pub lambda: f64,
}

impl ModeIndex {
    pub fn new(m: i32, k: u32) -> Result<Self> {
        let j = bessel_zero(m.abs(), k)?.value;
        Ok(ModeIndex { m, k, j, lambda: j * j })
    }

    pub fn order(&self) -> u32 {
        self.m.unsigned_abs()
    }

    pub fn normalization(&self) -> f64 {
        1.0 / (PI.sqrt() * jn_prime(self.order(), self.j).abs())
    }

    /// `N J_{|m|}(j r)`.
    pub fn radial(&self, r: f64) -> f64 {
        self.normalization() * jn(self.order(), self.j * r)
    }

    /// `∂_r ψ(1, θ) e^{−imθ} = N j J_{|m|}'(j)`, signed.
    pub fn boundary_slope(&self) -> f64 {
        let d = jn_prime(self.order(), self.j);
        self.j * d / (PI.sqrt() * d.abs())
    }

    pub fn key(&self) -> (i32, u32) {
        (self.m, self.k)
    }
}

/// `N_{m,k}` such that `ψ_{m,k}` has unit `L²` norm on the disk.
pub fn normalization(m: i32, k: u32) -> Result<f64> {
    Ok(ModeIndex::new(m, k)?.normalization())
}

/// `ψ_{m,k}(r, θ)` for `0 ≤ r ≤ 1`.
pub fn eigenmode_eval(mode: &ModeIndex, r: f64, theta: f64) -> Result<C64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(domain("eigenmode_eval", format!("radius {r} outside [0, 1]")));
    }
    Ok(C64::from_polar(mode.radial(r), mode.m as f64 * theta))
}

/// `|∂_r ψ_{m,k}(1, θ)| = j/√π`, independent of `θ`.
pub fn normal_derivative_amplitude(mode: &ModeIndex) -> f64 {
    mode.boundary_slope().abs()
}

/// `∫_{t0}^{t1} e^{i·dm·θ} dθ`; exactly zero over a full period when `dm ≠ 0`.
pub fn angular_factor(dm: i32, t0: f64, t1: f64) -> C64 {
    let len = t1 - t0;
    if dm == 0 {
        return C64::new(len, 0.0);
    }
    if (len - 2.0 * PI).abs() < 1e-15 {
        return C64::new(0.0, 0.0);
    }
    let d = dm as f64;
    let a = C64::from_polar(1.0, d * t1) - C64::from_polar(1.0, d * t0);
    a / C64::new(0.0, d)
}

/// Truncation policy: every `(m, k)` with `|m| ≤ m_max` and `j_{|m|,k} ≤ j_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisCaps {
    pub m_max: u32,
    pub j_max: f64,
}

/// An ordered set of disk modes: ascending eigenvalue, then ascending `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    modes: Vec<ModeIndex>,
    caps: Option<BasisCaps>,
    lookup: HashMap<(i32, u32), usize>,
}

impl Basis {
    pub fn truncated(caps: BasisCaps) -> Result<Self> {
        let mut modes = Vec::new();
        for order in 0..=caps.m_max {
            let zs = zeros_below(order, caps.j_max)?;
            if zs.is_empty() {
                break;
            }
            for (i, j) in zs.into_iter().enumerate() {
                let k = i as u32 + 1;
                let signs: &[i32] = if order == 0 { &[1] } else { &[-1, 1] };
                for s in signs {
                    modes.push(ModeIndex {
                        m: s * order as i32,
                        k,
                        j,
                        lambda: j * j,
                    });
                }
            }
        }
        let mut basis = Self::from_modes(modes);
        basis.caps = Some(caps);
        Ok(basis)
    }

    pub fn from_modes(mut modes: Vec<ModeIndex>) -> Self {
        modes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.m.cmp(&b.m)).then(a.k.cmp(&b.k)));
        modes.dedup_by_key(|m| m.key());
        let lookup = modes.iter().enumerate().map(|(i, m)| (m.key(), i)).collect();
        Basis {
            modes,
            caps: None,
            lookup,
        }
    }

    pub fn from_keys(keys: &[(i32, u32)]) -> Result<Self> {
        let modes = keys.iter().map(|&(m, k)| ModeIndex::new(m, k)).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_modes(modes))
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    pub fn caps(&self) -> Option<BasisCaps> {
        self.caps
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn position(&self, m: i32, k: u32) -> Option<usize> {
        self.lookup.get(&(m, k)).copied()
    }

    pub fn max_order(&self) -> u32 {
        self.modes.iter().map(|m| m.order()).max().unwrap_or(0)
    }

    pub fn max_j(&self) -> f64 {
        self.modes.iter().map(|m| m.j).fold(0.0, f64::max)
    }

    pub fn max_lambda(&self) -> f64 {
        self.modes.iter().map(|m| m.lambda).fold(0.0, f64::max)
    }

    pub fn max_k(&self) -> u32 {
        self.modes.iter().map(|m| m.k).max().unwrap_or(0)
    }

    fn rebuild_lookup(&mut self) {
        self.lookup = self.modes.iter().enumerate().map(|(i, m)| (m.key(), i)).collect();
    }
}

/// Default radial Gauss–Legendre order for integrals of products of two basis
/// functions over a radial interval of length `len`.
pub fn default_radial_order(basis: &Basis, len: f64) -> usize {
    let by_frequency = (basis.max_j() * len).ceil() as usize + 24;
    by_frequency.max(2 * basis.max_k() as usize).max(16)
}

/// Radial values `N_p J(j_p r_i)` on a quadrature grid over `[r0, r1]`,
/// with the weights already multiplied by `r`.
pub struct RadialTable {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `values[p][i]`
    pub values: Vec<Vec<f64>>,
}

impl RadialTable {
    pub fn new(basis: &Basis, r0: f64, r1: f64, order: usize, breakpoints: &[f64]) -> Self {
        let mut cuts = vec![r0];
        cuts.extend(breakpoints.iter().copied().filter(|b| *b > r0 && *b < r1));
        cuts.push(r1);
        let rule = GaussLegendre::new(order);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for w in cuts.windows(2) {
            let (x, wt) = rule.on_interval(w[0], w[1]);
            for (x, wt) in x.into_iter().zip(wt) {
                nodes.push(x);
                weights.push(wt * x);
            }
        }
        let values = basis
            .modes()
            .par_iter()
            .map(|mode| {
                let n = mode.normalization();
                nodes.iter().map(|r| n * jn(mode.order(), mode.j * r)).collect()
            })
            .collect();
        RadialTable { nodes, weights, values }
    }

    /// `∫ R_p R_q r dr` for all pairs, row-major real symmetric.
    pub fn overlaps(&self) -> Vec<f64> {
        let p = self.values.len();
        let weighted: Vec<Vec<f64>> = self
            .values
            .iter()
            .map(|row| row.iter().zip(&self.weights).map(|(v, w)| v * w).collect())
            .collect();
        let rows: Vec<Vec<f64>> = (0..p)
            .into_par_iter()
            .map(|a| {
                (0..p)
                    .map(|b| weighted[a].iter().zip(&self.values[b]).map(|(x, y)| x * y).sum())
                    .collect()
            })
            .collect();
        rows.concat()
    }
}

/// `∫_{r0}^{r1} R_p R_q r dr` on the basis, with an order-`n` vs `2n`
/// self-check. Returns the overlaps and the largest absolute disagreement.
pub fn radial_overlaps(basis: &Basis, r0: f64, r1: f64, order: Option<usize>) -> (Vec<f64>, f64) {
    let n = order.unwrap_or_else(|| default_radial_order(basis, r1 - r0));
    let coarse = RadialTable::new(basis, r0, r1, n, &[]).overlaps();
    let fine = RadialTable::new(basis, r0, r1, 2 * n, &[]).overlaps();
    let delta = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    (fine, delta)
}

/// Gram matrix `∬_𝔻 ψ_p conj(ψ_q)` under the module's quadrature.
pub fn gram_matrix(basis: &Basis, order: Option<usize>) -> CMatrix {
    let n = order.unwrap_or_else(|| default_radial_order(basis, 1.0));
    let radial = RadialTable::new(basis, 0.0, 1.0, n, &[]).overlaps();
    let p = basis.len();
    CMatrix::from_fn(p, |a, b| {
        let ma = basis.modes()[a].m;
        let mb = basis.modes()[b].m;
        radial[a * p + b] * angular_factor(ma - mb, 0.0, 2.0 * PI)
    })
}

/// Matrix of `−Δ + V` in a basis of disk modes.
#[derive(Debug, Clone)]
pub struct GalerkinOperator {
    pub basis: Basis,
    pub matrix: CMatrix,
    pub potential: Potential,
    pub radial_order: usize,
    pub angular_nodes: usize,
    /// Precision warnings raised during assembly.
    pub warnings: Vec<String>,
}

/// Assembles `A_pq = λ_p δ_pq + ⟨ψ_p, V ψ_q⟩`.
///
/// `V ≡ c` is exact (`c·I`); radial potentials only fill `m_p = m_q` blocks;
/// otherwise the angular integral uses `N_θ ≥ 4·max|m| + 65` uniform nodes,
/// exact for the trigonometric factors. `radial_order` defaults to
/// [`default_radial_order`]; the assembly is repeated at twice that order and
/// a warning recorded if the two disagree by more than [`SELF_CHECK_TOL`]
/// (or [`RELAXED_TOL`] for discontinuous `V`).
pub fn galerkin_matrix(v: &Potential, basis: &Basis, radial_order: Option<usize>) -> Result<GalerkinOperator> {
    if basis.is_empty() {
        return Err(Error::EmptySelection("Galerkin basis is empty".into()));
    }
    let n = radial_order.unwrap_or_else(|| default_radial_order(basis, 1.0));
    let angular_nodes = 4 * basis.max_order() as usize + 65;
    let p = basis.len();
    if let Some(c) = v.constant_value() {
        let diag: Vec<f64> = basis.modes().iter().map(|m| m.lambda + c).collect();
        return Ok(GalerkinOperator {
            basis: basis.clone(),
            matrix: CMatrix::from_diagonal(&diag),
            potential: v.clone(),
            radial_order: n,
            angular_nodes,
            warnings: Vec::new(),
        });
    }
    let coarse = potential_block(v, basis, n, angular_nodes);
    let fine = potential_block(v, basis, 2 * n, angular_nodes);
    let mut warnings = Vec::new();
    let scale = fine.max_abs().max(1.0);
    let delta = coarse.sub(&fine).max_abs() / scale;
    let tol = if v.is_continuous() {
        SELF_CHECK_TOL
    } else {
        warnings.push(format!(
            "potential {} is discontinuous; accuracy contract relaxed to {RELAXED_TOL:e}",
            v.name()
        ));
        RELAXED_TOL
    };
    if delta > tol {
        warnings.push(format!(
            "radial quadrature order {n} vs {} disagree by {delta:e} (> {tol:e})",
            2 * n
        ));
    }
    let mut matrix = fine;
    for (i, mode) in basis.modes().iter().enumerate() {
        matrix[(i, i)] += mode.lambda;
    }
    // Symmetrize exactly; the two triangles were assembled independently.
    for a in 0..p {
        for b in a + 1..p {
            let avg = 0.5 * (matrix[(a, b)] + matrix[(b, a)].conj());
            matrix[(a, b)] = avg;
            matrix[(b, a)] = avg.conj();
        }
        matrix[(a, a)].im = 0.0;
    }
    Ok(GalerkinOperator {
        basis: basis.clone(),
        matrix,
        potential: v.clone(),
        radial_order: n,
        angular_nodes,
        warnings,
    })
}

/// `⟨ψ_p, V ψ_q⟩` at radial order `n`.
fn potential_block(v: &Potential, basis: &Basis, n: usize, angular_nodes: usize) -> CMatrix {
    let table = RadialTable::new(basis, 0.0, 1.0, n, &v.radial_breakpoints());
    let modes = basis.modes();
    let p = modes.len();
    let max_dm = 2 * basis.max_order() as i32;
    let radial = v.is_radial();
    // vhat[i][dm + max_dm] = (1/2π) ∫ V(r_i, θ) e^{−i dm θ} dθ
    let vhat: Vec<Vec<C64>> = table
        .nodes
        .par_iter()
        .map(|&r| {
            let samples: Vec<f64> = (0..angular_nodes)
                .map(|t| v.eval_polar(r, 2.0 * PI * t as f64 / angular_nodes as f64))
                .collect();
            (-max_dm..=max_dm)
                .map(|dm| {
                    if radial && dm != 0 {
                        return C64::new(0.0, 0.0);
                    }
                    let s: C64 = samples
                        .iter()
                        .enumerate()
                        .map(|(t, val)| C64::from_polar(*val, -(dm as f64) * 2.0 * PI * t as f64 / angular_nodes as f64))
                        .sum();
                    s / angular_nodes as f64
                })
                .collect()
        })
        .collect();
    let rows: Vec<Vec<C64>> = (0..p)
        .into_par_iter()
        .map(|a| {
            (0..p)
                .map(|b| {
                    let dm = modes[a].m - modes[b].m;
                    if radial && dm != 0 {
                        return C64::new(0.0, 0.0);
                    }
                    let slot = (dm + max_dm) as usize;
                    let mut acc = C64::new(0.0, 0.0);
                    for (i, (v, w)) in vhat.iter().zip(&table.weights).enumerate() {
                        acc += v[slot] * (w * table.values[a][i] * table.values[b][i]);
                    }
                    acc * (2.0 * PI)
                })
                .collect()
        })
        .collect();
    CMatrix::from_rows(p, rows.concat()).expect("square by construction")
}

/// Sidecar descriptor written next to the entry CSV.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GalerkinDescriptor {
    pub basis: Vec<ModeIndex>,
    pub caps: Option<BasisCaps>,
    pub potential: Potential,
    pub potential_name: String,
    pub radial_order: usize,
    pub angular_nodes: usize,
    pub warnings: Vec<String>,
}

impl GalerkinOperator {
    pub fn eigen(&self) -> Result<Eigen> {
        eigh(&self.matrix)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// CSV of all entries, header `p,q,re,im`.
    pub fn entries_csv(&self) -> String {
        let n = self.dim();
        let mut out = String::from("p,q,re,im\n");
        for p in 0..n {
            for q in 0..n {
                let z = self.matrix[(p, q)];
                let _ = writeln!(out, "{p},{q},{},{}", fmt17(z.re), fmt17(z.im));
            }
        }
        out
    }

    pub fn descriptor(&self) -> GalerkinDescriptor {
        GalerkinDescriptor {
            basis: self.basis.modes().to_vec(),
            caps: self.basis.caps(),
            potential: self.potential.clone(),
            potential_name: self.potential.name(),
            radial_order: self.radial_order,
            angular_nodes: self.angular_nodes,
            warnings: self.warnings.clone(),
        }
    }

    /// Reloads an operator written with [`entries_csv`](Self::entries_csv)
    /// and [`descriptor`](Self::descriptor).
    pub fn from_text(csv: &str, descriptor: &GalerkinDescriptor) -> Result<Self> {
        let n = descriptor.basis.len();
        let mut matrix = CMatrix::zeros(n);
        let mut lines = csv.lines();
        if lines.next() != Some("p,q,re,im") {
            return Err(Error::Parse("bad Galerkin CSV header".into()));
        }
        for line in lines.filter(|l| !l.is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::Parse(format!("bad Galerkin CSV row {line:?}"));
            if f.len() != 4 {
                return Err(bad());
            }
            let p: usize = f[0].parse().map_err(|_| bad())?;
            let q: usize = f[1].parse().map_err(|_| bad())?;
            if p >= n || q >= n {
                return Err(bad());
            }
            matrix[(p, q)] = C64::new(f[2].parse().map_err(|_| bad())?, f[3].parse().map_err(|_| bad())?);
        }
        let mut basis = Basis {
            modes: descriptor.basis.clone(),
            caps: descriptor.caps,
            lookup: HashMap::new(),
        };
        basis.rebuild_lookup();
        Ok(GalerkinOperator {
            basis,
            matrix,
            potential: descriptor.potential.clone(),
            radial_order: descriptor.radial_order,
            angular_nodes: descriptor.angular_nodes,
            warnings: descriptor.warnings.clone(),
        })
    }
}
