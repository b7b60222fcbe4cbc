//! Finite-h phase-space diagnostics of quasimodes: the `(E, J)` spectral
//! measure, position and boundary masses, Husimi densities, and the lattice
//! split around the torus family `{J = −E₀ sin α₀}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::billiard::{flow, PhasePoint};
use crate::diskmodes::angular_factor;
use crate::error::{domain, Error, Result};
use crate::io::CsvWriter;
use crate::linalg::C64;
use crate::quadrature::GaussLegendre;
use crate::quasimode::{ModeCoeff, Quasimode};
use crate::rng::halton;

/// Relative order-`n` vs `2n` disagreement that triggers a precision warning.
pub const MASS_SELF_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EJAtom {
    pub e: f64,
    pub j: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EJMeasure {
    pub e0: f64,
    pub atoms: Vec<EJAtom>,
    /// `Σ weight·(E − E₀)²`
    pub energy_spread: f64,
}

impl EJMeasure {
    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::new(&["E", "J", "weight"]);
        for a in &self.atoms {
            w.row_f64(&[a.e, a.j, a.weight]);
        }
        w.finish()
    }
}

/// Atoms `(h j_{m,k}, h m, |c_{m,k}|²)`.
pub fn ej_spectrum(q: &Quasimode) -> EJMeasure {
    let atoms: Vec<EJAtom> = q
        .coeffs
        .iter()
        .map(|mc| EJAtom {
            e: q.h * mc.mode.j,
            j: q.h * mc.mode.m as f64,
            weight: mc.c.norm_sqr(),
        })
        .collect();
    let energy_spread = atoms.iter().map(|a| a.weight * (a.e - q.e0).powi(2)).sum();
    EJMeasure {
        e0: q.e0,
        atoms,
        energy_spread,
    }
}

/// The quasimode grouped by angular index: `u = Σ_m f_m(r) e^{imθ}`.
struct Angular<'a> {
    groups: Vec<(i32, Vec<&'a ModeCoeff>)>,
}

impl<'a> Angular<'a> {
    fn new(q: &'a Quasimode) -> Self {
        let mut map: BTreeMap<i32, Vec<&ModeCoeff>> = BTreeMap::new();
        for mc in &q.coeffs {
            map.entry(mc.mode.m).or_default().push(mc);
        }
        Angular {
            groups: map.into_iter().collect(),
        }
    }

    fn radial(&self, r: f64) -> Vec<C64> {
        self.groups
            .iter()
            .map(|(_, mcs)| mcs.iter().map(|mc| mc.c * mc.mode.radial(r)).sum())
            .collect()
    }

    fn max_k(&self) -> u32 {
        self.groups
            .iter()
            .flat_map(|(_, g)| g.iter().map(|mc| mc.mode.k))
            .max()
            .unwrap_or(1)
    }
}

/// An annular sector `r ∈ (r0, r1)`, `θ ∈ (t0, t1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub r0: f64,
    pub r1: f64,
    pub t0: f64,
    pub t1: f64,
}

impl Sector {
    pub fn disk() -> Self {
        Sector {
            r0: 0.0,
            r1: 1.0,
            t0: 0.0,
            t1: 2.0 * PI,
        }
    }

    pub fn annulus(r0: f64, r1: f64) -> Self {
        Sector {
            r0,
            r1,
            t0: 0.0,
            t1: 2.0 * PI,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.r0 && self.r0 < self.r1 && self.r1 <= 1.0) {
            return Err(Error::InvalidRegion(format!("need 0 <= r0 < r1 <= 1, got ({}, {})", self.r0, self.r1)));
        }
        if !(self.t0 < self.t1 && self.t1 - self.t0 <= 2.0 * PI + 1e-12) {
            return Err(Error::InvalidRegion(format!(
                "need t0 < t1 <= t0 + 2π, got ({}, {})",
                self.t0, self.t1
            )));
        }
        Ok(())
    }
}

/// A quadrature value with its self-check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    pub value: f64,
    /// `|I_n − I_{2n}|`
    pub self_check: f64,
    pub order: usize,
    pub warnings: Vec<String>,
}

fn sector_integral(ang: &Angular, region: &Sector, n: usize) -> f64 {
    let rule = GaussLegendre::new(n);
    let (nodes, weights) = rule.on_interval(region.r0, region.r1);
    let g = ang.groups.len();
    let mut rad = vec![C64::new(0.0, 0.0); g * g];
    for (r, w) in nodes.iter().zip(&weights) {
        let f = ang.radial(*r);
        for a in 0..g {
            let fa = f[a] * (w * r);
            for b in 0..g {
                rad[a * g + b] += fa * f[b].conj();
            }
        }
    }
    let mut total = C64::new(0.0, 0.0);
    for a in 0..g {
        for b in 0..g {
            let dm = ang.groups[b].0 - ang.groups[a].0;
            total += rad[a * g + b] * angular_factor(dm, region.t0, region.t1);
        }
    }
    total.re
}

/// Default radial order for products of modes up to `j_max` over an interval
/// of length `len`.
fn mass_order(j_max: f64, max_k: u32, len: f64) -> usize {
    ((j_max * len).ceil() as usize + 24).max(2 * max_k as usize).max(16)
}

/// `∬_Ω |u_h|² dz` over an annular sector, with an order `n` vs `2n` check.
pub fn position_mass(q: &Quasimode, region: &Sector, order: Option<usize>) -> Result<MassReport> {
    region.validate()?;
    let ang = Angular::new(q);
    let n = order.unwrap_or_else(|| mass_order(q.max_j(), ang.max_k(), region.r1 - region.r0));
    let coarse = sector_integral(&ang, region, n);
    let fine = sector_integral(&ang, region, 2 * n);
    let delta = (coarse - fine).abs();
    let mut warnings = Vec::new();
    if delta > MASS_SELF_CHECK_TOL * fine.abs().max(1e-300) && delta > 1e-14 {
        warnings.push(format!("radial order {n} vs {} disagree by {delta:e}", 2 * n));
    }
    Ok(MassReport {
        value: fine,
        self_check: delta,
        order: 2 * n,
        warnings,
    })
}

/// `∫_{t0}^{t1} |h ∂_n u_h(1, θ)|² dθ`, exact in `θ`.
pub fn boundary_mass(q: &Quasimode, t0: f64, t1: f64) -> Result<f64> {
    if !(t0 < t1 && t1 - t0 <= 2.0 * PI + 1e-12) {
        return Err(Error::InvalidRegion(format!("bad arc ({t0}, {t1})")));
    }
    let ang = Angular::new(q);
    let b: Vec<C64> = ang
        .groups
        .iter()
        .map(|(_, mcs)| mcs.iter().map(|mc| mc.c * (q.h * mc.mode.boundary_slope())).sum())
        .collect();
    let mut total = C64::new(0.0, 0.0);
    for (a, (ma, _)) in ang.groups.iter().enumerate() {
        for (c, (mb, _)) in ang.groups.iter().enumerate() {
            total += b[a] * b[c].conj() * angular_factor(mb - ma, t0, t1);
        }
    }
    Ok(total.re)
}

/// `ρ(r) = ∫ |u_h(r, θ)|² r dθ = 2π r Σ_m |f_m(r)|²`.
pub fn radial_density(q: &Quasimode, radii: &[f64]) -> Result<Vec<f64>> {
    if radii.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(domain("radial_density", "radii must lie in [0, 1]"));
    }
    let ang = Angular::new(q);
    Ok(radii
        .iter()
        .map(|&r| 2.0 * PI * r * ang.radial(r).iter().map(|f| f.norm_sqr()).sum::<f64>())
        .collect())
}

pub fn radial_density_csv(radii: &[f64], density: &[f64]) -> String {
    let mut w = CsvWriter::new(&["r", "density"]);
    for (r, d) in radii.iter().zip(density) {
        w.row_f64(&[*r, *d]);
    }
    w.finish()
}

/// `u_h` tabulated on a polar product grid, for repeated coherent-state
/// projections.
pub struct HusimiGrid {
    h: f64,
    width2: f64,
    /// `(x, y, weight·u)` at every node inside the disk
    points: Vec<(f64, f64, C64)>,
}

impl HusimiGrid {
    /// `width2` is the position variance parameter `σ²` of the coherent state
    /// `exp(−|z − z₀|²/(2σ²) + iξ₀·(z − z₀)/h)`; `None` means `σ² = h`.
    /// `xi_max` bounds the momenta that will be probed.
    pub fn new(q: &Quasimode, width2: Option<f64>, xi_max: f64) -> Self {
        let h = q.h;
        let width2 = width2.unwrap_or(h);
        let ang = Angular::new(q);
        let m_max = ang.groups.iter().map(|(m, _)| m.abs()).max().unwrap_or(0) as f64;
        let freq = q.max_j() + xi_max / h + 3.0 / width2.sqrt();
        let nr = (0.6 * freq).ceil() as usize + 32;
        let nt = 2 * (m_max + xi_max / h + 3.0 / width2.sqrt()).ceil() as usize + 64;
        let (nodes, weights) = GaussLegendre::new(nr).on_interval(0.0, 1.0);
        let points = nodes
            .par_iter()
            .zip(&weights)
            .flat_map_iter(|(&r, &w)| {
                let f = ang.radial(r);
                let dth = 2.0 * PI / nt as f64;
                let ms: Vec<i32> = ang.groups.iter().map(|(m, _)| *m).collect();
                (0..nt).map(move |l| {
                    let th = l as f64 * dth;
                    let u: C64 = f
                        .iter()
                        .zip(&ms)
                        .map(|(fm, m)| fm * C64::from_polar(1.0, *m as f64 * th))
                        .sum();
                    (r * th.cos(), r * th.sin(), u * (w * r * dth))
                })
            })
            .collect();
        HusimiGrid { h, width2, points }
    }

    /// `|⟨u_h, φ_p⟩|² / (2πh)²` with `φ_p` L²-normalized.
    pub fn eval(&self, p: &PhasePoint) -> f64 {
        let s2 = self.width2;
        let cutoff = 40.0 * s2;
        let mut acc = C64::new(0.0, 0.0);
        for &(x, y, u) in &self.points {
            let (dx, dy) = (x - p.x, y - p.y);
            let d2 = dx * dx + dy * dy;
            if d2 > cutoff {
                continue;
            }
            // u · conj(φ)
            let phase = -(p.xi_x * dx + p.xi_y * dy) / self.h;
            acc += u * C64::from_polar((-d2 / (2.0 * s2)).exp(), phase);
        }
        let norm2 = 1.0 / (PI * s2);
        norm2 * acc.norm_sqr() / (2.0 * PI * self.h).powi(2)
    }
}

/// Husimi density of `q` at a single phase point.
pub fn husimi(q: &Quasimode, p: &PhasePoint, width2: Option<f64>) -> Result<f64> {
    if p.radius() > 1.0 + 1e-12 {
        return Err(domain("husimi", "position outside the disk"));
    }
    Ok(HusimiGrid::new(q, width2, p.energy()).eval(p))
}

/// Husimi values on a list of phase points, CSV `x,y,xi_x,xi_y,value`.
pub fn husimi_csv(points: &[PhasePoint], values: &[f64]) -> String {
    let mut w = CsvWriter::new(&["x", "y", "xi_x", "xi_y", "value"]);
    for (p, v) in points.iter().zip(values) {
        w.row_f64(&[p.x, p.y, p.xi_x, p.xi_y, *v]);
    }
    w.finish()
}

/// Quasi-Monte-Carlo estimate of the Husimi mass of `[−a, a]² × {e_lo ≤ |ξ| ≤ e_hi}`.
pub fn husimi_box_mass(q: &Quasimode, a: f64, e_lo: f64, e_hi: f64, samples: usize) -> f64 {
    let grid = HusimiGrid::new(q, None, e_hi);
    let vol = (2.0 * a).powi(2) * PI * (e_hi * e_hi - e_lo * e_lo);
    let sum: f64 = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let u = halton::<4>(i);
            let e = (e_lo * e_lo + u[2] * (e_hi * e_hi - e_lo * e_lo)).sqrt();
            let phi = 2.0 * PI * u[3];
            grid.eval(&PhasePoint::new(
                a * (2.0 * u[0] - 1.0),
                a * (2.0 * u[1] - 1.0),
                e * phi.cos(),
                e * phi.sin(),
            ))
        })
        .sum();
    vol * sum / samples as f64
}

/// Estimate of `|∫ a∘φ^τ dμ_h − ∫ a dμ_h|` with `μ_h` the Husimi measure
/// restricted to the disk and to `||ξ| − E₀| ≤ 6√h`, sampled on a Halton
/// sequence.
pub fn flow_invariance_defect(
    q: &Quasimode,
    a: impl Fn(&PhasePoint) -> f64 + Sync,
    tau: f64,
    samples: usize,
) -> Result<f64> {
    if tau == 0.0 {
        return Ok(0.0);
    }
    let band = 6.0 * q.h.sqrt();
    let (e_lo, e_hi) = ((q.e0 - band).max(0.0), q.e0 + band);
    let grid = HusimiGrid::new(q, None, e_hi);
    let vol = PI * PI * (e_hi * e_hi - e_lo * e_lo);
    let terms = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let u = halton::<4>(i);
            let r = u[0].sqrt();
            let th = 2.0 * PI * u[1];
            let e = (e_lo * e_lo + u[2] * (e_hi * e_hi - e_lo * e_lo)).sqrt();
            let phi = 2.0 * PI * u[3];
            let p = PhasePoint::new(r * th.cos(), r * th.sin(), e * phi.cos(), e * phi.sin());
            let w = grid.eval(&p);
            Ok(w * (a(&flow(&p, tau)?) - a(&p)))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((vol * terms.iter().sum::<f64>() / samples as f64).abs())
}

/// Lattice partition of a quasimode around `{J = −E₀ sin α₀}` at scale `R h`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoMicrolocalSplit {
    pub alpha0: f64,
    pub r: f64,
    pub e0: f64,
    pub h: f64,
    /// `|J'| > R h`
    pub flat: Vec<ModeCoeff>,
    /// `|J'| ≤ R h`
    pub concentrated: Vec<ModeCoeff>,
    /// Fractions of `‖u‖²`; `flat_mass + concentrated_mass == 1` exactly.
    pub flat_mass: f64,
    pub concentrated_mass: f64,
    /// `(m, J'/h)` for every distinct `m` in the support.
    pub eta: Vec<(i32, f64)>,
}

/// Concentrated iff `|h m + E₀ sin α₀| ≤ R h`.
pub fn two_microlocal_split(q: &Quasimode, alpha0: f64, r: f64) -> Result<TwoMicrolocalSplit> {
    if !(r > 0.0) {
        return Err(domain("two_microlocal_split", "R must be positive"));
    }
    let shift = q.e0 * alpha0.sin();
    let jp = |m: i32| q.h * m as f64 + shift;
    let (concentrated, flat): (Vec<ModeCoeff>, Vec<ModeCoeff>) =
        q.coeffs.iter().partition(|mc| jp(mc.mode.m).abs() <= r * q.h);
    let mass = |v: &[ModeCoeff]| v.iter().fold(0.0, |acc, mc| acc + mc.c.norm_sqr());
    let (c, f) = (mass(&concentrated), mass(&flat));
    // fractions of ‖u‖²; the smaller part is 1 minus the larger, which is
    // exact for the larger in [1/2, 1], so the two sum to exactly 1
    let (concentrated_mass, flat_mass) = if c >= f {
        let cm = c / (c + f);
        (cm, 1.0 - cm)
    } else {
        let fm = f / (c + f);
        (1.0 - fm, fm)
    };
    let mut eta: Vec<(i32, f64)> = q.coeffs.iter().map(|mc| (mc.mode.m, jp(mc.mode.m) / q.h)).collect();
    eta.sort_by_key(|e| e.0);
    eta.dedup_by_key(|e| e.0);
    Ok(TwoMicrolocalSplit {
        alpha0,
        r,
        e0: q.e0,
        h: q.h,
        flat_mass,
        concentrated_mass,
        flat,
        concentrated,
        eta,
    })
}

/// Demodulated angular profile of the concentrated part,
/// `g(θ) = (2π)^{−1/2} Σ_m ĉ_m e^{i(m − m*)θ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaProfile {
    pub alpha0: f64,
    pub e0: f64,
    pub h: f64,
    /// `m*`, the integer nearest `−E₀ sin α₀ / h`.
    pub carrier: i32,
    /// Floquet phase in `[0, 2π)`, chosen so that `g` read in the shifted
    /// basis `e^{i(n + ω/2π)θ}` has `n + ω/2π = m + E₀ sin α₀ / h = J'/h`.
    pub omega: f64,
    /// `n = (m − m*) + shift`.
    pub shift: i32,
    /// `(m − m*, ĉ_m)`, ascending.
    pub coeffs: Vec<(i32, C64)>,
    pub mass: f64,
}

impl ThetaProfile {
    /// Coefficients on the Floquet basis, `(n, ĉ)`.
    pub fn floquet_coeffs(&self) -> Vec<(i32, C64)> {
        self.coeffs.iter().map(|(d, c)| (d + self.shift, *c)).collect()
    }

    /// `g` at `n` equally spaced angles in `[0, 2π)`.
    pub fn samples(&self, n: usize) -> Vec<(f64, C64)> {
        let a = 1.0 / (2.0 * PI).sqrt();
        (0..n)
            .map(|l| {
                let th = 2.0 * PI * l as f64 / n as f64;
                let g: C64 = self.coeffs.iter().map(|(d, c)| c * C64::from_polar(a, *d as f64 * th)).sum();
                (th, g)
            })
            .collect()
    }

    /// CSV `theta,re_g,im_g,abs2`.
    pub fn to_csv(&self, n: usize) -> String {
        let mut w = CsvWriter::new(&["theta", "re_g", "im_g", "abs2"]);
        for (th, g) in self.samples(n) {
            w.row_f64(&[th, g.re, g.im, g.norm_sqr()]);
        }
        w.finish()
    }
}

/// Collapses the radial index of the concentrated modes: `|ĉ_m|` is the
/// `ℓ²` norm over `k`, and its phase that of `Σ_k sign(J_{|m|}'(j)) c_{m,k}`,
/// which aligns the boundary traces. Hence `‖g‖² = ` concentrated mass.
pub fn theta_profile(split: &TwoMicrolocalSplit) -> Result<ThetaProfile> {
    if split.concentrated.is_empty() || split.concentrated_mass == 0.0 {
        return Err(Error::EmptySelection("no concentrated mass".into()));
    }
    let x = -split.e0 * split.alpha0.sin() / split.h;
    let carrier = x.round() as i32;
    let nu = carrier as f64 - x;
    let mut shift = nu.floor() as i32;
    let mut frac = nu - shift as f64;
    if frac >= 1.0 {
        frac -= 1.0;
        shift += 1;
    }
    let mut by_m: BTreeMap<i32, (f64, C64)> = BTreeMap::new();
    for mc in &split.concentrated {
        let e = by_m.entry(mc.mode.m).or_insert((0.0, C64::new(0.0, 0.0)));
        e.0 += mc.c.norm_sqr();
        e.1 += mc.c * mc.mode.boundary_slope().signum();
    }
    let coeffs = by_m
        .into_iter()
        .map(|(m, (m2, coh))| {
            let phase = if coh.norm() > 0.0 { coh / coh.norm() } else { C64::new(1.0, 0.0) };
            (m - carrier, phase * m2.sqrt())
        })
        .collect();
    Ok(ThetaProfile {
        alpha0: split.alpha0,
        e0: split.e0,
        h: split.h,
        carrier,
        omega: 2.0 * PI * frac,
        shift,
        coeffs,
        mass: split.concentrated_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diskmodes::ModeIndex;
    use crate::quasimode::{single_mode, whispering_gallery};

    fn two_mode(m1: i32, m2: i32) -> Quasimode {
        let a = C64::new(0.5f64.sqrt(), 0.0);
        let coeffs = [m1, m2]
            .iter()
            .map(|&m| ModeCoeff {
                mode: ModeIndex::new(m, 1).unwrap(),
                c: a,
            })
            .collect();
        Quasimode::new(1.0, 0.05, Default::default(), coeffs, "pair").unwrap()
    }

    #[test]
    fn ej_atoms() {
        let q = single_mode(4, 2, 1.5).unwrap();
        let ej = ej_spectrum(&q);
        assert_eq!(ej.atoms.len(), 1);
        assert!((ej.atoms[0].e - 1.5).abs() < 1e-15);
        assert!((ej.atoms[0].j - 4.0 * q.h).abs() < 1e-15);
        assert!(ej.to_csv().starts_with("E,J,weight\n"));
    }

    #[test]
    fn full_disk_mass_is_one() {
        for q in [single_mode(0, 1, 1.0).unwrap(), single_mode(10, 3, 1.0).unwrap(), two_mode(3, 7)] {
            let m = position_mass(&q, &Sector::disk(), None).unwrap();
            assert!((m.value - 1.0).abs() < 1e-8, "{}", m.value);
            assert!(m.warnings.is_empty());
        }
    }

    #[test]
    fn sector_mass_factorizes_for_single_modes() {
        let q = single_mode(6, 2, 1.0).unwrap();
        let ring = position_mass(&q, &Sector::annulus(0.3, 0.8), None).unwrap().value;
        let wedge = position_mass(&q, &Sector { r0: 0.3, r1: 0.8, t0: 0.0, t1: 2.0 * PI / 5.0 }, None).unwrap().value;
        assert!((wedge - ring / 5.0).abs() < 1e-12);
        assert!(position_mass(&q, &Sector::annulus(0.5, 0.4), None).is_err());
    }

    #[test]
    fn boundary_mass_closed_form() {
        let q = single_mode(3, 2, 1.7).unwrap();
        assert!((boundary_mass(&q, 0.0, 2.0 * PI).unwrap() - 2.0 * 1.7 * 1.7).abs() < 1e-12);
        assert!((boundary_mass(&q, 0.0, 1.0).unwrap() - 2.0 * 1.7 * 1.7 / (2.0 * PI)).abs() < 1e-12);
        let pair = two_mode(2, 5);
        let expected: f64 = pair.coeffs.iter().map(|mc| mc.c.norm_sqr() * (pair.h * mc.mode.j).powi(2) / PI * 2.0 * PI).sum();
        assert!((boundary_mass(&pair, 0.0, 2.0 * PI).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn radial_density_integrates_to_one() {
        let q = two_mode(1, 4);
        let (x, w) = GaussLegendre::new(60).on_interval(0.0, 1.0);
        let d = radial_density(&q, &x).unwrap();
        let total: f64 = d.iter().zip(&w).map(|(a, b)| a * b).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn split_partitions_the_support() {
        let q = whispering_gallery(200, 1.0).unwrap();
        let s = two_microlocal_split(&q, 0.0, 1.0).unwrap();
        assert_eq!(s.concentrated_mass, 0.0);
        assert_eq!(s.flat_mass, 1.0);
        let q = single_mode(0, 7, 1.0).unwrap();
        let s = two_microlocal_split(&q, 0.0, 1e-6).unwrap();
        assert_eq!(s.concentrated_mass, 1.0);
    }

    #[test]
    fn profiles() {
        let q = single_mode(0, 7, 1.0).unwrap();
        let p = theta_profile(&two_microlocal_split(&q, 0.0, 1.0).unwrap()).unwrap();
        for (_, g) in p.samples(16) {
            assert!((g.norm_sqr() - 1.0 / (2.0 * PI)).abs() < 1e-14);
        }
        let q = two_mode(0, 1);
        let p = theta_profile(&two_microlocal_split(&q, 0.0, 2.0).unwrap()).unwrap();
        assert_eq!(p.carrier, 0);
        assert_eq!(p.omega, 0.0);
        let norm2: f64 = p.coeffs.iter().map(|(_, c)| c.norm_sqr()).sum();
        assert!((norm2 - p.mass).abs() < 1e-14);
        for (th, g) in p.samples(16) {
            assert!((g.norm_sqr() - (1.0 + th.cos()) / (2.0 * PI)).abs() < 1e-14);
        }
        assert!(p.to_csv(4).starts_with("theta,re_g,im_g,abs2\n"));
    }

    #[test]
    fn floquet_labels_track_j_prime() {
        let q = two_mode(-13, -12);
        let alpha0 = 0.61;
        let p = theta_profile(&two_microlocal_split(&q, alpha0, 3.0).unwrap()).unwrap();
        assert!((0.0..2.0 * PI).contains(&p.omega));
        let m_vals: Vec<i32> = p.coeffs.iter().map(|(d, _)| d + p.carrier).collect();
        for ((n, _), m) in p.floquet_coeffs().iter().zip(m_vals) {
            let jp = m as f64 + alpha0.sin() / q.h;
            assert!((*n as f64 + p.omega / (2.0 * PI) - jp).abs() < 1e-9);
        }
    }
}
