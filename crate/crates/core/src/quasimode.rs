//! Normalized finite combinations of disk modes and their residuals
//! `r_h = (−h²Δ + h²V − E₀²) u_h`.
//!
//! Every quasimode is stored as coefficients on the bare Bessel basis
//! `ψ_{m,k}`, so residuals are evaluated exactly in-basis. Mode `m` carries
//! angular momentum `J = h·m`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diskmodes::{Basis, GalerkinOperator, ModeIndex};
use crate::error::{domain, Error, Result};
use crate::linalg::{norm, Eigen, C64};
use crate::potential::Potential;
use crate::rng::SeedTree;
use crate::specfun::zeros_below;

/// Residuals at or below `ZERO_FLOOR·E₀²` count as exactly zero when
/// classifying families.
pub const ZERO_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCoeff {
    pub mode: ModeIndex,
    pub c: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quasimode {
    pub e0: f64,
    pub h: f64,
    pub potential: Potential,
    /// Sorted by ascending eigenvalue, then `m`, then `k`; no duplicates.
    pub coeffs: Vec<ModeCoeff>,
    pub tag: String,
}

impl Quasimode {
    /// Merges duplicate modes, drops exact zeros and normalizes.
    pub fn new(e0: f64, h: f64, potential: Potential, coeffs: Vec<ModeCoeff>, tag: impl Into<String>) -> Result<Self> {
        if !(h > 0.0) || !(e0 > 0.0) {
            return Err(domain("Quasimode::new", format!("need h > 0 and E0 > 0, got h={h}, E0={e0}")));
        }
        let mut merged: BTreeMap<(i32, u32), ModeCoeff> = BTreeMap::new();
        for mc in coeffs {
            merged
                .entry(mc.mode.key())
                .and_modify(|e| e.c += mc.c)
                .or_insert(mc);
        }
        let mut coeffs: Vec<ModeCoeff> = merged.into_values().filter(|mc| mc.c != C64::new(0.0, 0.0)).collect();
        let nrm = coeffs.iter().map(|mc| mc.c.norm_sqr()).sum::<f64>().sqrt();
        if nrm == 0.0 {
            return Err(Error::EmptySelection("quasimode has no nonzero coefficient".into()));
        }
        for mc in &mut coeffs {
            mc.c /= nrm;
        }
        coeffs.sort_by(|a, b| {
            a.mode
                .lambda
                .total_cmp(&b.mode.lambda)
                .then(a.mode.m.cmp(&b.mode.m))
                .then(a.mode.k.cmp(&b.mode.k))
        });
        Ok(Quasimode {
            e0,
            h,
            potential,
            coeffs,
            tag: tag.into(),
        })
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|mc| mc.c.norm_sqr()).sum()
    }

    /// The same state times `e^{iφ}`.
    pub fn with_phase(&self, phi: f64) -> Self {
        let mut q = self.clone();
        let z = C64::from_polar(1.0, phi);
        for mc in &mut q.coeffs {
            mc.c *= z;
        }
        q
    }

    /// The support as a basis.
    pub fn support(&self) -> Basis {
        Basis::from_modes(self.coeffs.iter().map(|mc| mc.mode).collect())
    }

    pub fn max_j(&self) -> f64 {
        self.coeffs.iter().map(|mc| mc.mode.j).fold(0.0, f64::max)
    }

    /// Coefficient vector on `basis`; fails if the support is not contained.
    pub fn vector_in(&self, basis: &Basis) -> Result<Vec<C64>> {
        let mut v = vec![C64::new(0.0, 0.0); basis.len()];
        for mc in &self.coeffs {
            let i = basis.position(mc.mode.m, mc.mode.k).ok_or(Error::SupportEscapesBasis {
                m: mc.mode.m,
                k: mc.mode.k,
            })?;
            v[i] = mc.c;
        }
        Ok(v)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = QuasimodeFile {
            e0: self.e0,
            h: self.h,
            potential: self.potential.name(),
            modes: self
                .coeffs
                .iter()
                .map(|mc| ModeEntry {
                    m: mc.mode.m,
                    k: mc.mode.k,
                    re: mc.c.re,
                    im: mc.c.im,
                })
                .collect(),
            tag: self.tag.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Reload without renormalizing, so a round trip is bit-exact.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: QuasimodeFile = serde_json::from_str(text)?;
        let potential: Potential = file.potential.parse()?;
        let coeffs = file
            .modes
            .iter()
            .map(|e| {
                Ok(ModeCoeff {
                    mode: ModeIndex::new(e.m, e.k)?,
                    c: C64::new(e.re, e.im),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Quasimode {
            e0: file.e0,
            h: file.h,
            potential,
            coeffs,
            tag: file.tag,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct QuasimodeFile {
    #[serde(rename = "E0")]
    e0: f64,
    h: f64,
    potential: String,
    modes: Vec<ModeEntry>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    tag: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModeEntry {
    m: i32,
    k: u32,
    re: f64,
    im: f64,
}

/// `ψ_{m,k}` at `h = E₀/j_{|m|,k}`.
pub fn single_mode(m: i32, k: u32, e0: f64) -> Result<Quasimode> {
    let mode = ModeIndex::new(m, k)?;
    Quasimode::new(
        e0,
        e0 / mode.j,
        Potential::Zero,
        vec![ModeCoeff {
            mode,
            c: C64::new(1.0, 0.0),
        }],
        format!("mode({m},{k})"),
    )
}

/// `ψ_{m,1}`, whose mass migrates to the boundary as `m` grows.
pub fn whispering_gallery(m: u32, e0: f64) -> Result<Quasimode> {
    if m == 0 {
        return Err(domain("whispering_gallery", "m must be at least 1"));
    }
    let mut q = single_mode(m as i32, 1, e0)?;
    q.tag = format!("whispering_gallery({m})");
    Ok(q)
}

/// How eigenfunctions in a spectral window are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum CoefficientRule {
    /// All members with equal weight.
    Equal,
    /// Equal moduli, uniformly random phases from the given seed.
    RandomPhase { seed: u64 },
}

impl CoefficientRule {
    fn weights(&self, n: usize) -> Vec<C64> {
        let a = 1.0 / (n as f64).sqrt();
        match *self {
            CoefficientRule::Equal => vec![C64::new(a, 0.0); n],
            CoefficientRule::RandomPhase { seed } => {
                let mut rng = SeedTree::new(seed).stream(0);
                (0..n).map(|_| C64::from_polar(a, rng.gen_range(0.0..2.0 * PI))).collect()
            }
        }
    }
}

/// A spectral cluster and the a priori residual bound `(R/λ)·E₀²`.
#[derive(Debug, Clone)]
pub struct Cluster {
    pub quasimode: Quasimode,
    pub lambda: f64,
    pub window: f64,
    pub eigenvalues: Vec<f64>,
    pub bound: f64,
}

/// Every `V = 0` mode with `|j² − λ| ≤ r`.
pub fn modes_in_window(lambda: f64, r: f64) -> Result<Vec<ModeIndex>> {
    let lo = (lambda - r).max(0.0);
    let hi = (lambda + r).sqrt();
    let mut out = Vec::new();
    for order in 0u32.. {
        let zs = zeros_below(order, hi)?;
        if zs.is_empty() {
            break;
        }
        for (i, j) in zs.into_iter().enumerate() {
            if j * j >= lo {
                for s in if order == 0 { vec![1] } else { vec![-1, 1] } {
                    out.push(ModeIndex {
                        m: s * order as i32,
                        k: i as u32 + 1,
                        j,
                        lambda: j * j,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// `V = 0` cluster `Σ v_j ψ_j` over the exact spectrum in `[λ − r, λ + r]`,
/// at `h = E₀/√λ`.
pub fn cluster_free(lambda: f64, r: f64, rule: CoefficientRule, e0: f64) -> Result<Cluster> {
    let modes = modes_in_window(lambda, r)?;
    if modes.is_empty() {
        return Err(Error::EmptySelection(format!("no eigenvalue in [{}, {}]", lambda - r, lambda + r)));
    }
    let w = rule.weights(modes.len());
    let eigenvalues = modes.iter().map(|m| m.lambda).collect();
    let coeffs = modes.into_iter().zip(w).map(|(mode, c)| ModeCoeff { mode, c }).collect();
    let q = Quasimode::new(e0, e0 / lambda.sqrt(), Potential::Zero, coeffs, format!("cluster({lambda},{r})"))?;
    Ok(Cluster {
        quasimode: q,
        lambda,
        window: r,
        eigenvalues,
        bound: r / lambda * e0 * e0,
    })
}

/// Cluster of Galerkin eigenfunctions of `op` (with spectrum `eig`) whose
/// eigenvalues lie in `[λ − r, λ + r]`.
pub fn cluster(
    lambda: f64,
    r: f64,
    rule: CoefficientRule,
    op: &GalerkinOperator,
    eig: &Eigen,
    e0: f64,
) -> Result<Cluster> {
    let members: Vec<usize> = (0..eig.len()).filter(|&i| (eig.values[i] - lambda).abs() <= r).collect();
    if members.is_empty() {
        return Err(Error::EmptySelection(format!("no Galerkin eigenvalue in [{}, {}]", lambda - r, lambda + r)));
    }
    let w = rule.weights(members.len());
    let mut v = vec![C64::new(0.0, 0.0); op.dim()];
    for (&i, wi) in members.iter().zip(&w) {
        for (acc, x) in v.iter_mut().zip(&eig.vectors[i]) {
            *acc += wi * x;
        }
    }
    let coeffs = op
        .basis
        .modes()
        .iter()
        .zip(v)
        .map(|(mode, c)| ModeCoeff { mode: *mode, c })
        .collect();
    let q = Quasimode::new(
        e0,
        e0 / lambda.sqrt(),
        op.potential.clone(),
        coeffs,
        format!("galerkin_cluster({lambda},{r})"),
    )?;
    Ok(Cluster {
        quasimode: q,
        lambda,
        window: r,
        eigenvalues: members.iter().map(|&i| eig.values[i]).collect(),
        bound: r / lambda * e0 * e0,
    })
}

/// The `i`-th Galerkin eigenfunction at `h = E₀/√μ_i`.
pub fn galerkin_eigenmode(op: &GalerkinOperator, eig: &Eigen, i: usize, e0: f64) -> Result<Quasimode> {
    let mu = *eig
        .values
        .get(i)
        .ok_or_else(|| domain("galerkin_eigenmode", format!("index {i} out of range")))?;
    if !(mu > 0.0) {
        return Err(domain("galerkin_eigenmode", format!("eigenvalue {mu} is not positive")));
    }
    let coeffs = op
        .basis
        .modes()
        .iter()
        .zip(&eig.vectors[i])
        .map(|(mode, c)| ModeCoeff { mode: *mode, c: *c })
        .collect();
    Quasimode::new(e0, e0 / mu.sqrt(), op.potential.clone(), coeffs, format!("galerkin_eigen({i})"))
}

/// Parameters of a `V = 0` wave packet on the torus `{E = E₀, α = α₀}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPacketSpec {
    pub alpha0: f64,
    pub e0: f64,
    pub h_target: f64,
    /// Window half-width in `J' = h m + E₀ sin α₀`.
    pub width: f64,
    /// Window half-width in `E − E₀`; defaults to `width`.
    #[serde(default)]
    pub energy_width: Option<f64>,
}

/// Gaussian superposition (standard deviations half the window widths) of the
/// modes with `|h m + E₀ sin α₀| ≤ w` and `|h j − E₀| ≤ w_E`. `h` is `E₀/j` of
/// a central mode near `(J, E) = (−E₀ sin α₀, E₀)` on the `h_target` scale.
pub fn torus_packet(spec: &TorusPacketSpec) -> Result<Quasimode> {
    let TorusPacketSpec {
        alpha0,
        e0,
        h_target,
        width,
        energy_width,
    } = *spec;
    if !(alpha0.abs() < PI / 2.0) {
        return Err(domain("torus_packet", format!("alpha0 {alpha0} outside (-π/2, π/2)")));
    }
    if !(h_target > 0.0 && e0 > 0.0 && width >= 0.0) {
        return Err(domain("torus_packet", "need h_target > 0, E0 > 0, width >= 0"));
    }
    let we = energy_width.unwrap_or(width);
    let j_target = -e0 * alpha0.sin();
    let (_, _, jc) = central_mode(j_target, e0, h_target)?;
    let h = e0 / jc;
    let m_lo = ((j_target - width) / h).ceil() as i32;
    let m_hi = ((j_target + width) / h).floor() as i32;
    let (sj, se) = (0.5 * width, 0.5 * we);
    let mut coeffs = Vec::new();
    for m in m_lo..=m_hi {
        let jp = h * m as f64 - j_target;
        if jp.abs() > width {
            continue;
        }
        for (i, j) in zeros_below(m.unsigned_abs(), (e0 + we) / h)?.into_iter().enumerate() {
            let de = h * j - e0;
            if de.abs() > we {
                continue;
            }
            let g = |x: f64, s: f64| if s > 0.0 { -(x * x) / (2.0 * s * s) } else { 0.0 };
            coeffs.push(ModeCoeff {
                mode: ModeIndex {
                    m,
                    k: i as u32 + 1,
                    j,
                    lambda: j * j,
                },
                c: C64::new((g(jp, sj) + g(de, se)).exp(), 0.0),
            });
        }
    }
    if coeffs.is_empty() {
        return Err(Error::EmptySelection(format!(
            "no mode within width {width} of (J, E) = ({j_target}, {e0}) at h = {h}"
        )));
    }
    Quasimode::new(e0, h, Potential::Zero, coeffs, format!("torus_packet({alpha0},{h_target},{width})"))
}

/// The `(m, k)` near `(J, E) = (j_target, e0)` on the `h_target` lattice that
/// lies closest to the torus at its own scale `h = E₀/j`, ties broken by
/// closeness of `j` to `E₀/h_target`.
fn central_mode(j_target: f64, e0: f64, h_target: f64) -> Result<(i32, u32, f64)> {
    let target = e0 / h_target;
    let m0 = (j_target / h_target).round() as i32;
    let mut best: Option<(f64, f64, i32, u32, f64)> = None;
    for m in m0 - 4..=m0 + 4 {
        for (i, j) in zeros_below(m.unsigned_abs(), target + 10.0)?.into_iter().enumerate() {
            if (j - target).abs() > 10.0 {
                continue;
            }
            let jp = (e0 * m as f64 / j - j_target).abs();
            let key = (jp, (j - target).abs(), m, i as u32 + 1, j);
            if best.is_none_or(|b| (key.0, key.1) < (b.0, b.1)) {
                best = Some(key);
            }
        }
    }
    best.map(|b| (b.2, b.3, b.4))
        .ok_or_else(|| Error::EmptySelection(format!("no mode near (J, E) = ({j_target}, {e0}) at h = {h_target}")))
}

/// Closed-form residual `√Σ|c|²(h²(λ + c₀) − E₀²)²` for `V ≡ c₀`.
pub fn residual_norm(q: &Quasimode, v: &Potential) -> Result<f64> {
    let c0 = v.constant_value().ok_or_else(|| {
        domain(
            "residual_norm",
            format!("{} is not constant; use residual_norm_in with a Galerkin operator", v.name()),
        )
    })?;
    let h2 = q.h * q.h;
    let e2 = q.e0 * q.e0;
    Ok(q
        .coeffs
        .iter()
        .map(|mc| mc.c.norm_sqr() * (h2 * (mc.mode.lambda + c0) - e2).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// `‖(h²A − E₀²)c‖` with `A` the Galerkin matrix of `op`.
pub fn residual_norm_in(q: &Quasimode, op: &GalerkinOperator) -> Result<f64> {
    let c = q.vector_in(&op.basis)?;
    let ac = op.matrix.mat_vec(&c);
    let h2 = q.h * q.h;
    let e2 = q.e0 * q.e0;
    let r: Vec<C64> = ac.iter().zip(&c).map(|(a, x)| a * h2 - x * e2).collect();
    Ok(norm(&r))
}

/// Members ordered by strictly decreasing `h`.
#[derive(Debug, Clone)]
pub struct QuasimodeFamily {
    pub name: String,
    pub members: Vec<Quasimode>,
    /// Declared residual exponent, `‖r_h‖ = O(h^order)`.
    pub order: f64,
}

impl QuasimodeFamily {
    pub fn new(name: impl Into<String>, mut members: Vec<Quasimode>, order: f64) -> Result<Self> {
        members.sort_by(|a, b| b.h.total_cmp(&a.h));
        if members.windows(2).any(|w| w[1].h >= w[0].h) {
            return Err(domain("QuasimodeFamily::new", "h values must be distinct"));
        }
        Ok(QuasimodeFamily {
            name: name.into(),
            members,
            order,
        })
    }

    pub fn hs(&self) -> Vec<f64> {
        self.members.iter().map(|q| q.h).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderClass {
    /// Identically zero or slope above `2 + 0.1`.
    LittleO,
    /// Slope at least `2 − 0.1`.
    BigO,
    Coarser,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub hs: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Least-squares slope of `log‖r_h‖` against `log h` over the nonzero
    /// residuals; `None` when fewer than two are nonzero.
    pub slope: Option<f64>,
    pub class: OrderClass,
}

/// Fits the residual decay exponent of a family.
pub fn classify_family(f: &QuasimodeFamily, residual: impl Fn(&Quasimode) -> Result<f64>) -> Result<OrderReport> {
    if f.members.len() < 3 {
        return Err(Error::FamilyTooShort {
            need: 3,
            have: f.members.len(),
        });
    }
    let hs = f.hs();
    let residuals = f.members.iter().map(&residual).collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = f
        .members
        .iter()
        .zip(&residuals)
        .filter(|(q, r)| **r > ZERO_FLOOR * q.e0 * q.e0)
        .map(|(q, r)| (q.h.ln(), r.ln()))
        .collect();
    let slope = fit_slope(&pts);
    let class = match slope {
        _ if pts.is_empty() => OrderClass::LittleO,
        Some(s) if s > 2.1 => OrderClass::LittleO,
        Some(s) if s >= 1.9 => OrderClass::BigO,
        _ => OrderClass::Coarser,
    };
    Ok(OrderReport {
        hs,
        residuals,
        slope,
        class,
    })
}

/// Ordinary least-squares slope.
pub fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Exact eigenmodes `ψ_{m,k}` as a family; `o(h²)` since every residual vanishes.
pub fn eigenmode_family(keys: &[(i32, u32)], e0: f64) -> Result<QuasimodeFamily> {
    let members = keys.iter().map(|&(m, k)| single_mode(m, k, e0)).collect::<Result<Vec<_>>>()?;
    QuasimodeFamily::new("eigenmodes", members, f64::INFINITY)
}

/// `V = 0` clusters with window `R(λ) = r`. For each target the center is
/// `λ_p + r/2`, where `λ_p` is the first eigenvalue at or above the target
/// whose window holds no other distinct eigenvalue; the residual is then
/// `(r/2)·E₀²/λ = (r/2)·h²`.
pub fn isolated_cluster_family(targets: &[f64], r: f64, rule: CoefficientRule, e0: f64) -> Result<QuasimodeFamily> {
    let mut members = Vec::new();
    for &t in targets {
        let mut probe = t;
        let found = loop {
            let near = modes_in_window(probe + r, r + 1e-9)?;
            let lp = near
                .iter()
                .map(|m| m.lambda)
                .filter(|l| *l >= probe)
                .fold(f64::INFINITY, f64::min);
            if !lp.is_finite() {
                probe += r;
                continue;
            }
            let c = cluster_free(lp + 0.5 * r, r, rule, e0)?;
            let distinct = c.eigenvalues.iter().all(|l| (l - lp).abs() <= 1e-9 * lp);
            if distinct {
                break c;
            }
            probe = lp * (1.0 + 1e-12) + 1e-9;
        };
        members.push(found.quasimode);
    }
    QuasimodeFamily::new(format!("isolated_clusters(R={r})"), members, 2.0)
}
