use diskqm::diskmodes::*;
use diskqm::linalg::{dot, eigvalsh};
use diskqm::potential::Potential;
use proptest::prelude::*;

#[test]
fn truncated_basis_is_orthonormal() {
    let basis = Basis::truncated(BasisCaps { m_max: 12, j_max: 35.0 }).unwrap();
    let g = gram_matrix(&basis, None);
    let dev = g.sub(&diskqm::linalg::CMatrix::identity(basis.len())).max_abs();
    assert!(dev < 1e-8, "{dev}");
}

#[test]
fn rayleigh_quotients_reproduce_eigenvalues() {
    let basis = Basis::truncated(BasisCaps { m_max: 6, j_max: 20.0 }).unwrap();
    for v in [Potential::LinearX { coef: 3.0 }, Potential::Quadrupole { coef: -2.0 }, Potential::Quadratic { coef: 5.0 }] {
        let op = galerkin_matrix(&v, &basis, None).unwrap();
        assert!(op.warnings.is_empty(), "{:?}", op.warnings);
        let eig = op.eigen().unwrap();
        for (mu, vec) in eig.values.iter().zip(&eig.vectors) {
            let rq = dot(vec, &op.matrix.mat_vec(vec)).re / dot(vec, vec).re;
            assert!((rq - mu).abs() < 1e-10 * mu.abs().max(1.0), "{}: {rq} vs {mu}", v.name());
        }
    }
}

#[test]
fn lowest_eigenvalue_decreases_as_the_basis_grows() {
    let v = Potential::LinearX { coef: 8.0 };
    let mut prev = f64::INFINITY;
    for (m_max, j_max) in [(2, 8.0), (3, 12.0), (5, 16.0), (8, 22.0), (10, 28.0)] {
        let basis = Basis::truncated(BasisCaps { m_max, j_max }).unwrap();
        let low = eigvalsh(&galerkin_matrix(&v, &basis, None).unwrap().matrix).unwrap()[0];
        assert!(low <= prev + 1e-10, "({m_max}, {j_max}): {low} > {prev}");
        prev = low;
    }
}

#[test]
fn discontinuous_potential_relaxes_the_contract() {
    let basis = Basis::truncated(BasisCaps { m_max: 3, j_max: 14.0 }).unwrap();
    let step = galerkin_matrix(&Potential::Step { radius: 0.5, inside: 1.0, outside: 0.0 }, &basis, None).unwrap();
    assert!(step.warnings.iter().any(|w| w.contains("discontinuous")), "{:?}", step.warnings);
    let smooth = galerkin_matrix(&Potential::Quadratic { coef: 1.0 }, &basis, None).unwrap();
    assert!(smooth.warnings.is_empty(), "{:?}", smooth.warnings);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn spectrum_moves_by_at_most_sup_v(c in -10.0f64..10.0, which in 0usize..3) {
        let basis = Basis::truncated(BasisCaps { m_max: 4, j_max: 16.0 }).unwrap();
        let v = [Potential::LinearX { coef: c }, Potential::Quadrupole { coef: c }, Potential::Quadratic { coef: c }][which].clone();
        let op = galerkin_matrix(&v, &basis, None).unwrap();
        let free: Vec<f64> = basis.modes().iter().map(|m| m.lambda).collect();
        let ev = eigvalsh(&op.matrix).unwrap();
        let bound = v.sup_abs() + 1e-9;
        for (a, b) in ev.iter().zip(&free) {
            prop_assert!((a - b).abs() <= bound);
        }
    }
}
