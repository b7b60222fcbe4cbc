use std::f64::consts::PI;

use diskqm::diskmodes::{Basis, BasisCaps};
use diskqm::observability::*;
use diskqm::potential::Potential;
use diskqm::specfun::{bessel_j, bessel_j_prime, bessel_zero};
use proptest::prelude::*;

fn sector(r0: f64, r1: f64, t0: f64, t1: f64) -> RegionSpec {
    RegionSpec::Sector { r0, r1, t0, t1 }
}

/// Midpoint-rule mass of `ψ_{m,1}` in `{r < rho}`.
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

#[test]
fn boundary_sector_sweep_is_positive_and_grid_stable() {
    let caps = BasisCaps { m_max: 60, j_max: 30.0 };
    let s = Sweeper::new(&Potential::Zero, &sector(0.8, 1.0, 0.0, PI / 3.0), caps, SweepOptions::default()).unwrap();
    let grid = s.grid(&LambdaGrid::spectral_to_guard(11)).unwrap();
    let coarse = s.sweep(grid.clone(), Some(11)).unwrap();
    assert!(coarse.trusted && coarse.min_kappa > 0.0);
    assert!(coarse.kappas.iter().all(|k| *k >= 0.0));
    let fine = s.sweep(refine(&grid), Some(11)).unwrap();
    let change = (coarse.min_kappa - fine.min_kappa).abs() / coarse.min_kappa;
    assert!(change < 0.1, "{} vs {}", coarse.min_kappa, fine.min_kappa);
}

#[test]
fn interior_region_negative_control() {
    let j = bessel_zero(60, 1).unwrap().value;
    let oracle = riemann_interior_mass(60, 0.7, 200_000);
    let caps = BasisCaps {
        m_max: 60,
        j_max: (2.0f64).sqrt() * j + 0.5,
    };
    let region = sector(0.0, 0.7, 0.0, 2.0 * PI);
    let r = kappa_sweep(&Potential::Zero, &region, &LambdaGrid::Explicit { values: vec![j * j] }, caps, SweepOptions::default()).unwrap();
    assert!(r.trusted);
    assert!(r.kappas[0] <= oracle + 1e-10, "{} > {oracle}", r.kappas[0]);
    assert!(r.kappas[0] < 1e-3);
    let g = region_gram(&region, &Basis::from_keys(&[(60, 1)]).unwrap(), None).unwrap();
    assert!((g.matrix[(0, 0)].re - oracle).abs() < 1e-8 * oracle.max(1e-30) + 1e-15);
}

#[test]
fn nested_regions_order_kappa() {
    let caps = BasisCaps { m_max: 60, j_max: 30.0 };
    let inner = sector(0.8, 1.0, 0.0, PI / 3.0);
    let outer = sector(0.7, 1.0, -PI / 12.0, 5.0 * PI / 12.0);
    let grid = LambdaGrid::Uniform { lo: 1.0, hi: 440.0, points: 50 };
    let a = kappa_sweep(&Potential::Zero, &inner, &grid, caps, SweepOptions::default()).unwrap();
    let b = kappa_sweep(&Potential::Zero, &outer, &grid, caps, SweepOptions::default()).unwrap();
    for (x, y) in a.kappas.iter().zip(&b.kappas) {
        assert!(x <= &(y + 1e-9 * y.max(1.0)), "{x} > {y}");
    }
}

#[test]
fn gallery_modes_see_boundary_sectors() {
    let (t0, t1) = (0.3, 1.3);
    let keys: Vec<(i32, u32)> = [100, 130, 160, 200].iter().map(|m| (*m, 1)).collect();
    let basis = Basis::from_keys(&keys).unwrap();
    let g = region_gram(&sector(0.8, 1.0, t0, t1), &basis, None).unwrap();
    for i in 0..basis.len() {
        assert!(g.matrix[(i, i)].re >= 0.9 * (t1 - t0) / (2.0 * PI), "{i}: {}", g.matrix[(i, i)].re);
    }
}

#[test]
fn boundary_sweeps() {
    // full circle: the flux form is diagonal in m with rank-one k-blocks, so
    // κ∂ at an eigenvalue sits near the diagonal value j²/π
    let caps = BasisCaps { m_max: 20, j_max: 25.0 };
    let s = Sweeper::new(&Potential::Zero, &RegionSpec::Arc { t0: 0.0, t1: 2.0 * PI }, caps, SweepOptions::default()).unwrap();
    for l in s.spectrum.iter().filter(|l| **l < s.guard()) {
        assert!(s.form.kappa(*l).unwrap() >= 0.9 * l / PI);
    }

    let lo = bessel_zero(0, 1).unwrap().value.powi(2);
    let hi = bessel_zero(0, 10).unwrap().value.powi(2);
    let grid = LambdaGrid::Spectral {
        lo,
        hi: Some(hi),
        random_per_gap: 0,
        seed: 1,
    };
    let caps = BasisCaps { m_max: 60, j_max: 45.0 };
    let r = boundary_kappa_sweep(&Potential::Zero, &RegionSpec::Arc { t0: 0.0, t1: PI / 2.0 }, &grid, caps, SweepOptions::default()).unwrap();
    assert!(r.boundary_proxy && r.trusted);
    assert!(r.min_kappa > 0.0);
}

#[test]
fn non_radial_potential_sweep() {
    let caps = BasisCaps { m_max: 8, j_max: 16.0 };
    let v = Potential::LinearX { coef: 4.0 };
    let region = sector(0.75, 1.0, 0.2, 1.5);
    let r = kappa_sweep(&v, &region, &LambdaGrid::spectral_to_guard(5), caps, SweepOptions::default()).unwrap();
    assert!(!r.rotated);
    assert!(r.min_kappa > 0.0);
    let csv = r.to_csv();
    assert!(csv.starts_with("lambda,kappa\n"));
    assert_eq!(csv.lines().count(), r.lambdas.len() + 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kappa_is_monotone_in_the_region(
        r0 in 0.0f64..0.9, dr in 0.05f64..0.5, t0 in -3.0f64..3.0, len in 0.2f64..3.0,
        grow_r in 0.0f64..0.3, grow_t in 0.0f64..1.0, lambda in 1.0f64..120.0,
    ) {
        let basis = Basis::truncated(BasisCaps { m_max: 6, j_max: 16.0 }).unwrap();
        let r1 = (r0 + dr).min(1.0);
        let inner = sector(r0, r1, t0, t0 + len);
        let outer = sector((r0 - grow_r).max(0.0), r1, t0 - grow_t, t0 + len + grow_t);
        let a = diskqm::linalg::CMatrix::from_diagonal(&basis.modes().iter().map(|m| m.lambda).collect::<Vec<_>>());
        let ki = KappaForm::new(a.clone(), region_gram(&inner, &basis, None).unwrap().matrix).unwrap().kappa(lambda).unwrap();
        let ko = KappaForm::new(a, region_gram(&outer, &basis, None).unwrap().matrix).unwrap().kappa(lambda).unwrap();
        prop_assert!(ki >= 0.0);
        prop_assert!(ki <= ko + 1e-9 * ko.max(1.0));
    }

    #[test]
    fn refinement_keeps_the_minimum(seed in 0u64..1000) {
        let caps = BasisCaps { m_max: 10, j_max: 18.0 };
        let s = Sweeper::new(&Potential::Zero, &sector(0.7, 1.0, 0.0, 1.0), caps, SweepOptions::default()).unwrap();
        let grid = s.grid(&LambdaGrid::spectral_to_guard(seed)).unwrap();
        let a = s.sweep(grid.clone(), Some(seed)).unwrap().min_kappa;
        let b = s.sweep(refine(&grid), Some(seed)).unwrap().min_kappa;
        prop_assert!(b <= a);
        prop_assert!((a - b) / a < 0.1);
    }
}
