//! Region and boundary Gram matrices on a truncated disk basis, and sweeps of
//!
//! ```text
//! κ(λ) = λ_min((A − λ)ᴴ(A − λ) + G)
//! ```
//!
//! where `A` is the Galerkin matrix of `−Δ + V` and `G` the quadratic form of
//! `‖u‖²_Ω` (or of the boundary flux on an arc). `1/κ(λ)` estimates the
//! constant `C` in `‖u‖² ≤ C(‖(−Δ + V − λ)u‖² + ‖u‖²_Ω)` on the truncation.
//!
//! All matrices here follow the Galerkin convention `M_pq = ⟨ψ_p, M ψ_q⟩`, so
//! that `cᴴ G c` is the mass of `u = Σ c_q ψ_q`.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diskmodes::{angular_factor, default_radial_order, galerkin_matrix, Basis, BasisCaps, RadialTable, SELF_CHECK_TOL};
use crate::error::{Error, Result};
use crate::io::CsvWriter;
use crate::linalg::{eigvalsh, CMatrix};
use crate::potential::Potential;
use crate::rng::SeedTree;

/// Default ratio between the top of the λ window and the largest eigenvalue
/// of the truncated operator.
pub const GUARD_FRACTION: f64 = 0.5;

/// Default number of seeded random points inside each spectral gap.
pub const RANDOM_PER_GAP: usize = 10;

/// Seed stream used for the random grid points.
pub const GRID_STREAM: u64 = 0x006b_6170_7061;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionSpec {
    /// `r ∈ (r0, r1)`, `θ ∈ (t0, t1)`.
    Sector { r0: f64, r1: f64, t0: f64, t1: f64 },
    /// `θ ∈ (t0, t1)` on the unit circle.
    Arc { t0: f64, t1: f64 },
}

impl RegionSpec {
    pub fn validate(&self) -> Result<()> {
        let (t0, t1) = self.angles();
        if !(t0 < t1 && t1 - t0 <= 2.0 * PI + 1e-12) {
            return Err(Error::InvalidRegion(format!("need t0 < t1 <= t0 + 2π, got ({t0}, {t1})")));
        }
        if let RegionSpec::Sector { r0, r1, .. } = *self {
            if !(0.0 <= r0 && r0 < r1 && r1 <= 1.0) {
                return Err(Error::InvalidRegion(format!("need 0 <= r0 < r1 <= 1, got ({r0}, {r1})")));
            }
        }
        Ok(())
    }

    pub fn touches_boundary(&self) -> bool {
        match *self {
            RegionSpec::Sector { r1, .. } => r1 == 1.0,
            RegionSpec::Arc { .. } => true,
        }
    }

    pub fn angles(&self) -> (f64, f64) {
        match *self {
            RegionSpec::Sector { t0, t1, .. } | RegionSpec::Arc { t0, t1 } => (t0, t1),
        }
    }

    fn is_full_turn(&self) -> bool {
        let (t0, t1) = self.angles();
        (t1 - t0 - 2.0 * PI).abs() < 1e-15
    }

    /// The same region rotated so its angular interval is symmetric about 0.
    /// For rotation-invariant potentials this leaves κ unchanged and makes
    /// every Gram matrix real.
    pub fn centred(&self) -> Self {
        if self.is_full_turn() {
            return *self;
        }
        let (t0, t1) = self.angles();
        let half = 0.5 * (t1 - t0);
        match *self {
            RegionSpec::Sector { r0, r1, .. } => RegionSpec::Sector { r0, r1, t0: -half, t1: half },
            RegionSpec::Arc { .. } => RegionSpec::Arc { t0: -half, t1: half },
        }
    }
}

/// A Gram matrix with its quadrature self-check.
#[derive(Debug, Clone)]
pub struct Gram {
    pub matrix: CMatrix,
    /// Largest `|G_n − G_2n|` over the radial factors.
    pub self_check: f64,
    pub order: usize,
    pub warnings: Vec<String>,
}

fn radial_pairs(basis: &Basis, r0: f64, r1: f64, order: usize, pairs: &[(usize, usize)]) -> Vec<f64> {
    let table = RadialTable::new(basis, r0, r1, order, &[]);
    pairs
        .par_iter()
        .map(|&(a, b)| {
            let (va, vb) = (&table.values[a], &table.values[b]);
            (0..table.nodes.len()).map(|i| va[i] * vb[i] * table.weights[i]).sum()
        })
        .collect()
}

/// `G_pq = ∬_Ω conj(ψ_p) ψ_q`: closed-form angular factors times radial
/// Gauss–Legendre overlaps, checked at order `n` against `2n`.
pub fn region_gram(region: &RegionSpec, basis: &Basis, order: Option<usize>) -> Result<Gram> {
    region.validate()?;
    let RegionSpec::Sector { r0, r1, t0, t1 } = *region else {
        return Err(Error::InvalidRegion("region_gram needs an interior sector".into()));
    };
    let modes = basis.modes();
    let full = region.is_full_turn();
    let mut pairs = Vec::new();
    for a in 0..modes.len() {
        for b in a..modes.len() {
            if !full || modes[a].m == modes[b].m {
                pairs.push((a, b));
            }
        }
    }
    let n = order.unwrap_or_else(|| default_radial_order(basis, r1 - r0));
    let coarse = radial_pairs(basis, r0, r1, n, &pairs);
    let fine = radial_pairs(basis, r0, r1, 2 * n, &pairs);
    let self_check = coarse.iter().zip(&fine).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let mut warnings = Vec::new();
    if self_check > SELF_CHECK_TOL {
        warnings.push(format!("radial quadrature order {n} vs {} differs by {self_check:e}", 2 * n));
    }
    let mut matrix = CMatrix::zeros(modes.len());
    for (&(a, b), rad) in pairs.iter().zip(fine) {
        let g = rad * angular_factor(modes[b].m - modes[a].m, t0, t1);
        matrix[(a, b)] = g;
        matrix[(b, a)] = g.conj();
    }
    Ok(Gram {
        matrix,
        self_check,
        order: 2 * n,
        warnings,
    })
}

/// `B_pq = (1/2π) ∫_Γ conj(∂_n ψ_p) ∂_n ψ_q dθ`, optionally times `h²`.
/// The `1/2π` makes the full-circle diagonal `j²/π`.
pub fn boundary_gram(arc: &RegionSpec, basis: &Basis, h_scale: Option<f64>) -> Result<CMatrix> {
    arc.validate()?;
    let RegionSpec::Arc { t0, t1 } = *arc else {
        return Err(Error::InvalidRegion("boundary_gram needs a boundary arc".into()));
    };
    let scale = h_scale.map_or(1.0, |h| h * h) / (2.0 * PI);
    let modes = basis.modes();
    let slopes: Vec<f64> = modes.iter().map(|m| m.boundary_slope()).collect();
    let mut matrix = CMatrix::zeros(modes.len());
    for a in 0..modes.len() {
        for b in a..modes.len() {
            let g = scale * slopes[a] * slopes[b] * angular_factor(modes[b].m - modes[a].m, t0, t1);
            matrix[(a, b)] = g;
            matrix[(b, a)] = g.conj();
        }
    }
    Ok(matrix)
}

/// The pencil `λ ↦ (A − λ)² + G` for Hermitian `A`.
#[derive(Debug, Clone)]
pub struct KappaForm {
    a: CMatrix,
    a2: Option<CMatrix>,
    g: CMatrix,
}

impl KappaForm {
    pub fn new(a: CMatrix, g: CMatrix) -> Result<Self> {
        if a.dim() != g.dim() {
            return Err(Error::Dimension(format!("A is {0}x{0}, G is {1}x{1}", a.dim(), g.dim())));
        }
        a.check_hermitian()?;
        g.check_hermitian()?;
        let a2 = (!a.is_diagonal()).then(|| a.mat_mul(&a));
        Ok(KappaForm { a, a2, g })
    }

    pub fn matrix(&self, lambda: f64) -> CMatrix {
        let n = self.a.dim();
        match &self.a2 {
            // exact squares keep small κ accurate when A is diagonal
            None => CMatrix::from_fn(n, |p, q| {
                let g = self.g[(p, q)];
                if p == q {
                    g + (self.a[(p, p)].re - lambda).powi(2)
                } else {
                    g
                }
            }),
            Some(a2) => CMatrix::from_fn(n, |p, q| {
                let mut v = a2[(p, q)] - 2.0 * lambda * self.a[(p, q)] + self.g[(p, q)];
                if p == q {
                    v += lambda * lambda;
                }
                v
            })
            .hermitian_part(),
        }
    }

    /// Smallest eigenvalue, clamped at 0 against roundoff.
    pub fn kappa(&self, lambda: f64) -> Result<f64> {
        let values = eigvalsh(&self.matrix(lambda))?;
        Ok(values.first().copied().unwrap_or(0.0).max(0.0))
    }

    pub fn kappas(&self, grid: &[f64]) -> Result<Vec<f64>> {
        grid.par_iter().map(|&l| self.kappa(l)).collect()
    }
}

/// How to pick the λ points of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaGrid {
    Explicit { values: Vec<f64> },
    Uniform { lo: f64, hi: f64, points: usize },
    /// Eigenvalues of the truncated operator in `[lo, hi]`, midpoints of the
    /// gaps between them, and `random_per_gap` seeded points in every gap.
    /// `hi = None` runs up to the guard.
    Spectral {
        lo: f64,
        hi: Option<f64>,
        random_per_gap: usize,
        seed: u64,
    },
}

impl LambdaGrid {
    pub fn spectral_to_guard(seed: u64) -> Self {
        LambdaGrid::Spectral {
            lo: 0.0,
            hi: None,
            random_per_gap: RANDOM_PER_GAP,
            seed,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            LambdaGrid::Spectral { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    /// Sorted grid points; `spectrum` must be ascending.
    pub fn resolve(&self, spectrum: &[f64], guard: f64) -> Result<Vec<f64>> {
        let mut pts = match self {
            LambdaGrid::Explicit { values } => values.clone(),
            LambdaGrid::Uniform { lo, hi, points } => {
                if *points < 2 || !(lo < hi) {
                    return Err(Error::Parse(format!("uniform grid needs lo < hi and >= 2 points, got {lo}, {hi}, {points}")));
                }
                (0..*points).map(|i| lo + (hi - lo) * i as f64 / (*points - 1) as f64).collect()
            }
            LambdaGrid::Spectral {
                lo,
                hi,
                random_per_gap,
                seed,
            } => {
                let hi = hi.unwrap_or(guard);
                if !(lo < &hi) {
                    return Err(Error::Parse(format!("spectral grid needs lo < hi, got {lo}, {hi}")));
                }
                let mut nodes = vec![*lo];
                for &l in spectrum {
                    if l > *lo && l < hi && l - nodes.last().unwrap() > 1e-12 * l.abs().max(1.0) {
                        nodes.push(l);
                    }
                }
                nodes.push(hi);
                let mut rng = SeedTree::new(*seed).stream(GRID_STREAM);
                let mut pts = Vec::new();
                for w in nodes.windows(2) {
                    pts.push(w[0]);
                    pts.push(0.5 * (w[0] + w[1]));
                    for _ in 0..*random_per_gap {
                        pts.push(rng.gen_range(w[0]..w[1]));
                    }
                }
                pts.push(hi);
                pts
            }
        };
        if pts.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parse("non-finite λ grid point".into()));
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        Ok(pts)
    }
}

/// The grid with every gap halved.
pub fn refine(grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * grid.len());
    for w in grid.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    out.extend(grid.last());
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Run past the guard; the result is then marked untrusted.
    pub override_guard: bool,
    pub guard_fraction: f64,
    pub radial_order: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            override_guard: false,
            guard_fraction: GUARD_FRACTION,
            radial_order: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub region: RegionSpec,
    /// Set for [`boundary_kappa_sweep`]: an L² stand-in for the `H¹₀` statement.
    pub boundary_proxy: bool,
    pub potential: String,
    pub caps: BasisCaps,
    pub basis_size: usize,
    pub lambdas: Vec<f64>,
    pub kappas: Vec<f64>,
    pub min_kappa: f64,
    pub argmin_lambda: f64,
    /// Largest admissible λ, `guard_fraction` times the top of the spectrum.
    pub guard: f64,
    pub trusted: bool,
    pub seed: Option<u64>,
    /// The angular interval was rotated to be symmetric about 0.
    pub rotated: bool,
    pub gram_self_check: f64,
    pub warnings: Vec<String>,
}

impl SweepResult {
    /// `Ĉ = 1/min κ`; infinite when κ vanishes on the grid.
    pub fn constant_estimate(&self) -> f64 {
        1.0 / self.min_kappa
    }

    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::new(&["lambda", "kappa"]);
        for (l, k) in self.lambdas.iter().zip(&self.kappas) {
            w.row_f64(&[*l, *k]);
        }
        w.finish()
    }
}

/// A truncated operator with one region form, ready to sweep.
#[derive(Debug, Clone)]
pub struct Sweeper {
    pub region: RegionSpec,
    pub potential: Potential,
    pub caps: BasisCaps,
    pub basis_size: usize,
    pub spectrum: Vec<f64>,
    pub form: KappaForm,
    pub rotated: bool,
    pub gram_self_check: f64,
    pub warnings: Vec<String>,
    pub options: SweepOptions,
}

impl Sweeper {
    pub fn new(v: &Potential, region: &RegionSpec, caps: BasisCaps, options: SweepOptions) -> Result<Self> {
        region.validate()?;
        let basis = Basis::truncated(caps)?;
        if basis.is_empty() {
            return Err(Error::EmptySelection(format!("no modes under caps {caps:?}")));
        }
        let rotated = v.is_radial() && region.centred() != *region;
        let used = if rotated { region.centred() } else { *region };
        let op = galerkin_matrix(v, &basis, options.radial_order)?;
        let mut warnings = op.warnings.clone();
        let (g, self_check) = match used {
            RegionSpec::Sector { .. } => {
                let gram = region_gram(&used, &basis, options.radial_order)?;
                warnings.extend(gram.warnings);
                (gram.matrix, gram.self_check)
            }
            RegionSpec::Arc { .. } => (boundary_gram(&used, &basis, None)?, 0.0),
        };
        let spectrum = eigvalsh(&op.matrix)?;
        let form = KappaForm::new(op.matrix, g)?;
        Ok(Sweeper {
            region: *region,
            potential: v.clone(),
            caps,
            basis_size: basis.len(),
            spectrum,
            form,
            rotated,
            gram_self_check: self_check,
            warnings,
            options,
        })
    }

    pub fn guard(&self) -> f64 {
        self.options.guard_fraction * self.spectrum.last().copied().unwrap_or(0.0)
    }

    pub fn grid(&self, grid: &LambdaGrid) -> Result<Vec<f64>> {
        grid.resolve(&self.spectrum, self.guard())
    }

    pub fn sweep(&self, lambdas: Vec<f64>, seed: Option<u64>) -> Result<SweepResult> {
        if lambdas.is_empty() {
            return Err(Error::EmptySelection("empty λ grid".into()));
        }
        let guard = self.guard();
        let lambda_max = lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut warnings = self.warnings.clone();
        let trusted = lambda_max <= guard;
        if !trusted {
            if !self.options.override_guard {
                return Err(Error::GuardExceeded { lambda_max, guard });
            }
            warnings.push(format!("guard overridden: λ up to {lambda_max} > {guard}; results untrusted"));
        }
        let kappas = self.form.kappas(&lambdas)?;
        Ok(self.assemble(lambdas, kappas, seed, trusted, warnings))
    }

    /// `coarse` on the half-step grid, evaluating only the new midpoints.
    pub fn refine_sweep(&self, coarse: &SweepResult) -> Result<SweepResult> {
        let mids: Vec<f64> = coarse.lambdas.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let mid_kappas = self.form.kappas(&mids)?;
        let mut lambdas = Vec::with_capacity(coarse.lambdas.len() + mids.len());
        let mut kappas = Vec::with_capacity(lambdas.capacity());
        for i in 0..coarse.lambdas.len() {
            lambdas.push(coarse.lambdas[i]);
            kappas.push(coarse.kappas[i]);
            if i < mids.len() {
                lambdas.push(mids[i]);
                kappas.push(mid_kappas[i]);
            }
        }
        Ok(self.assemble(lambdas, kappas, coarse.seed, coarse.trusted, coarse.warnings.clone()))
    }

    fn assemble(&self, lambdas: Vec<f64>, kappas: Vec<f64>, seed: Option<u64>, trusted: bool, warnings: Vec<String>) -> SweepResult {
        let guard = self.guard();
        let imin = (0..kappas.len()).min_by(|&a, &b| kappas[a].total_cmp(&kappas[b])).unwrap();
        SweepResult {
            region: self.region,
            boundary_proxy: matches!(self.region, RegionSpec::Arc { .. }),
            potential: self.potential.name(),
            caps: self.caps,
            basis_size: self.basis_size,
            min_kappa: kappas[imin],
            argmin_lambda: lambdas[imin],
            lambdas,
            kappas,
            guard,
            trusted,
            seed,
            rotated: self.rotated,
            gram_self_check: self.gram_self_check,
            warnings,
        }
    }
}

/// `κ(λ) = λ_min((A − λ)ᴴ(A − λ) + G_Ω)` over a grid, for an interior sector.
pub fn kappa_sweep(v: &Potential, region: &RegionSpec, grid: &LambdaGrid, caps: BasisCaps, options: SweepOptions) -> Result<SweepResult> {
    if !matches!(region, RegionSpec::Sector { .. }) {
        return Err(Error::InvalidRegion("kappa_sweep needs an interior sector".into()));
    }
    let s = Sweeper::new(v, region, caps, options)?;
    s.sweep(s.grid(grid)?, grid.seed())
}

/// The boundary version with the flux form `B_Γ` in place of `G_Ω`.
///
/// This is an L² proxy: the statement it mirrors uses `H¹₀` norms and an
/// extra boundary condition on `Δu`, neither of which is imposed here. Only
/// positivity and trends are meaningful.
pub fn boundary_kappa_sweep(v: &Potential, arc: &RegionSpec, grid: &LambdaGrid, caps: BasisCaps, options: SweepOptions) -> Result<SweepResult> {
    if !matches!(arc, RegionSpec::Arc { .. }) {
        return Err(Error::InvalidRegion("boundary_kappa_sweep needs a boundary arc".into()));
    }
    let s = Sweeper::new(v, arc, caps, options)?;
    let mut out = s.sweep(s.grid(grid)?, grid.seed())?;
    out.warnings.push("boundary sweep is an L2 proxy; H1_0 norms not imposed".into());
    Ok(out)
}
