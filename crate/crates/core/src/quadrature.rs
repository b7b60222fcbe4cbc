//! Gauss–Legendre rules.

use std::f64::consts::PI;

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`, exact for polynomials of
/// degree `2n − 1`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped affinely to `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let nodes = self.nodes.iter().map(|x| mid + half * x).collect();
        let weights = self.weights.iter().map(|w| half * w).collect();
        (nodes, weights)
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let (x, w) = self.on_interval(a, b);
        x.iter().zip(&w).map(|(x, w)| w * f(*x)).sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre over `pieces` equal panels of `[a, b]`.
pub fn composite(rule: &GaussLegendre, a: f64, b: f64, pieces: usize, f: impl Fn(f64) -> f64) -> f64 {
    let width = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + i as f64 * width;
            rule.integrate(lo, lo + width, &f)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_nodes_sorted() {
        for n in [1, 2, 5, 16, 101, 400] {
            let g = GaussLegendre::new(n);
            let s: f64 = g.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
            assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn exact_for_degree_2n_minus_1() {
        let g = GaussLegendre::new(6);
        for d in 0..=11 {
            let got = g.integrate(0.0, 1.0, |x| x.powi(d));
            assert!((got - 1.0 / (d as f64 + 1.0)).abs() < 1e-14, "degree {d}");
        }
    }

    #[test]
    fn oscillatory_integral() {
        let g = GaussLegendre::new(80);
        let got = g.integrate(0.0, 1.0, |x| (100.0 * x).cos());
        assert!((got - (100.0_f64).sin() / 100.0).abs() < 1e-13);
        let c = composite(&GaussLegendre::new(10), 0.0, 3.0, 7, |x| x.exp());
        assert!((c - (3.0_f64.exp() - 1.0)).abs() < 1e-12);
    }
}
