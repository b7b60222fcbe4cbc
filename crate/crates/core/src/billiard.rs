//! Classical billiard in the unit disk.
//!
//! Phase points are `(z, ξ)` with `|z| ≤ 1`. The action-angle chart is
//!
//! ```text
//! x  = (J/E) cos θ − s sin θ      ξx = −E sin θ
//! y  = (J/E) sin θ + s cos θ      ξy =  E cos θ
//! ```
//!
//! so a straight chord has fixed `(θ, E, J)` and `s` running over
//! `[−cos α, cos α]` with `α = −arcsin(J/E)`. Each reflection advances the
//! chart angle by `π + 2α`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::io::CsvWriter;
use crate::quadrature::GaussLegendre;

/// Tolerance on `| |z| − 1 |` for boundary points.
pub const BOUNDARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub y: f64,
    pub xi_x: f64,
    pub xi_y: f64,
}

impl PhasePoint {
    pub fn new(x: f64, y: f64, xi_x: f64, xi_y: f64) -> Self {
        PhasePoint { x, y, xi_x, xi_y }
    }

    pub fn energy(&self) -> f64 {
        self.xi_x.hypot(self.xi_y)
    }

    pub fn angular_momentum(&self) -> f64 {
        self.x * self.xi_y - self.y * self.xi_x
    }

    pub fn radius(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Largest coordinate difference.
    pub fn distance(&self, other: &PhasePoint) -> f64 {
        [
            self.x - other.x,
            self.y - other.y,
            self.xi_x - other.xi_x,
            self.xi_y - other.xi_y,
        ]
        .iter()
        .fold(0.0, |m, d| m.max(d.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionAngle {
    pub s: f64,
    pub theta: f64,
    pub e: f64,
    pub j: f64,
}

impl ActionAngle {
    /// `α = −arcsin(J/E)`, clamped to `[−π/2, π/2]`.
    pub fn alpha(&self) -> f64 {
        -(self.j / self.e).clamp(-1.0, 1.0).asin()
    }
}

/// An invariant torus `{E, J}` with `|J| < E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusSpec {
    pub e: f64,
    pub j: f64,
    pub c: f64,
}

impl TorusSpec {
    pub fn new(e: f64, j: f64) -> Result<Self> {
        Ok(TorusSpec {
            e,
            j,
            c: torus_measure_const(e, j)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        -(self.j / self.e).asin()
    }
}

/// `c(E, J) = 1 / (2π · 2 cos α)`, the reciprocal of `∫ ds dθ` over the torus.
pub fn torus_measure_const(e: f64, j: f64) -> Result<f64> {
    if !(e > 0.0) || j.abs() >= e {
        return Err(Error::DegenerateTorus { e, j });
    }
    let cos_alpha = (1.0 - (j / e).powi(2)).sqrt();
    Ok(1.0 / (4.0 * PI * cos_alpha))
}

/// Specular reflection `ξ − 2(z·ξ)z` at a boundary point `z`.
pub fn reflect(z: [f64; 2], xi: [f64; 2]) -> Result<[f64; 2]> {
    let r = z[0].hypot(z[1]);
    if (r - 1.0).abs() > BOUNDARY_TOL {
        return Err(Error::NotOnBoundary { x: z[0], y: z[1] });
    }
    let (nx, ny) = (z[0] / r, z[1] / r);
    let d = nx * xi[0] + ny * xi[1];
    Ok([xi[0] - 2.0 * d * nx, xi[1] - 2.0 * d * ny])
}

pub fn to_action_angle(p: &PhasePoint) -> Result<ActionAngle> {
    let e = p.energy();
    if !(e > 0.0) {
        return Err(domain("to_action_angle", "momentum must be nonzero"));
    }
    let theta = (-p.xi_x).atan2(p.xi_y);
    let (sin, cos) = theta.sin_cos();
    Ok(ActionAngle {
        s: -p.x * sin + p.y * cos,
        theta,
        e,
        j: p.angular_momentum(),
    })
}

pub fn from_action_angle(a: &ActionAngle) -> Result<PhasePoint> {
    if !(a.e > 0.0) {
        return Err(domain("from_action_angle", "E must be positive"));
    }
    let (sin, cos) = a.theta.sin_cos();
    let q = a.j / a.e;
    Ok(PhasePoint {
        x: q * cos - a.s * sin,
        y: q * sin + a.s * cos,
        xi_x: -a.e * sin,
        xi_y: a.e * cos,
    })
}

/// `R^τ(z, ξ) = (R(τ)z, R(τ)ξ)`.
pub fn rotation_flow(p: &PhasePoint, tau: f64) -> PhasePoint {
    let (s, c) = tau.sin_cos();
    PhasePoint {
        x: c * p.x - s * p.y,
        y: s * p.x + c * p.y,
        xi_x: c * p.xi_x - s * p.xi_y,
        xi_y: s * p.xi_x + c * p.xi_y,
    }
}

/// Time to the next boundary hit along `z + tξ` from a point with `|z| ≤ 1`.
fn exit_time(p: &PhasePoint) -> f64 {
    let a = p.xi_x * p.xi_x + p.xi_y * p.xi_y;
    let b = p.x * p.xi_x + p.y * p.xi_y;
    let c = (p.x * p.x + p.y * p.y - 1.0).min(0.0);
    let disc = (b * b - a * c).max(0.0).sqrt();
    // roots of a t² + 2b t + c, the larger one; stable forms for both signs of b
    if b > 0.0 {
        -c / (b + disc)
    } else {
        (disc - b) / a
    }
}

fn is_tangential(p: &PhasePoint) -> bool {
    let e = p.energy();
    p.angular_momentum().abs() >= e * (1.0 - 1e-13)
}

/// Billiard flow `φ^τ` by exact chord stepping. Tangential starts (`|J| = E`)
/// glide along the boundary at speed `E`.
pub fn flow(p: &PhasePoint, tau: f64) -> Result<PhasePoint> {
    let e = p.energy();
    if !(e > 0.0) {
        return Err(domain("flow", "momentum must be nonzero"));
    }
    if p.radius() > 1.0 + 1e-12 {
        return Err(domain("flow", "start point outside the disk"));
    }
    if tau < 0.0 {
        let back = PhasePoint::new(p.x, p.y, -p.xi_x, -p.xi_y);
        let q = flow(&back, -tau)?;
        return Ok(PhasePoint::new(q.x, q.y, -q.xi_x, -q.xi_y));
    }
    if is_tangential(p) {
        return Ok(rotation_flow(p, tau * e * p.angular_momentum().signum()));
    }
    let mut q = *p;
    let mut left = tau;
    loop {
        let t = exit_time(&q);
        if t > left {
            q.x += left * q.xi_x;
            q.y += left * q.xi_y;
            return Ok(q);
        }
        left -= t;
        q = hit(&q, t)?;
    }
}

/// Moves to the boundary after time `t`, snaps onto the circle and reflects.
fn hit(q: &PhasePoint, t: f64) -> Result<PhasePoint> {
    let (x, y) = (q.x + t * q.xi_x, q.y + t * q.xi_y);
    let r = x.hypot(y);
    let (x, y) = (x / r, y / r);
    let xi = reflect([x, y], [q.xi_x, q.xi_y])?;
    Ok(PhasePoint::new(x, y, xi[0], xi[1]))
}

/// The first `n` boundary hits: `(time, post-reflection point)`.
pub fn bounces(p: &PhasePoint, n: usize) -> Result<Vec<(f64, PhasePoint)>> {
    if !(p.energy() > 0.0) {
        return Err(domain("bounces", "momentum must be nonzero"));
    }
    if is_tangential(p) {
        return Err(Error::DegenerateTorus {
            e: p.energy(),
            j: p.angular_momentum(),
        });
    }
    let mut out = Vec::with_capacity(n);
    let mut q = *p;
    let mut time = 0.0;
    for _ in 0..n {
        let t = exit_time(&q);
        time += t;
        q = hit(&q, t)?;
        out.push((time, q));
    }
    Ok(out)
}

fn check_rational(p: i64, q: i64) -> Result<()> {
    if q <= 0 {
        return Err(Error::BadAngle {
            p,
            q,
            reason: "denominator must be positive",
        });
    }
    if 2 * p.abs() >= q {
        return Err(Error::BadAngle {
            p,
            q,
            reason: "|p/q| must be below 1/2",
        });
    }
    Ok(())
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Closed orbits at reflection angle `α₀ = (p/q)π`: the minimal `q'` with
/// `q'(π − 2α₀) ∈ 2πℤ` and the total length `q'·2cos α₀`.
pub fn orbit_period(p: i64, q: i64) -> Result<(u64, f64)> {
    check_rational(p, q)?;
    // (π − 2α₀)/2π = (q − 2p)/(2q)
    let num = q - 2 * p;
    let den = 2 * q;
    let bounces = den / gcd(num, den);
    let alpha = p as f64 / q as f64 * PI;
    Ok((bounces as u64, bounces as f64 * 2.0 * alpha.cos()))
}

/// Average of `a` along the closed orbit with reflection angle `(p/q)π`,
/// speed `e0`, whose first chord has chart angle `theta`. Each chord is
/// integrated with composite Gauss–Legendre in `s`.
pub fn orbit_average(a: impl Fn(&PhasePoint) -> f64, p: i64, q: i64, e0: f64, theta: f64) -> Result<f64> {
    let (chords, _) = orbit_period(p, q)?;
    if !(e0 > 0.0) {
        return Err(domain("orbit_average", "E0 must be positive"));
    }
    let alpha = p as f64 / q as f64 * PI;
    let j = -e0 * alpha.sin();
    let half = alpha.cos();
    let rule = GaussLegendre::new(24);
    let pieces = 4;
    let step = 2.0 * half / pieces as f64;
    let mut total = 0.0;
    for n in 0..chords {
        let th = theta + n as f64 * (PI + 2.0 * alpha);
        let mut chord = 0.0;
        for piece in 0..pieces {
            let lo = -half + piece as f64 * step;
            chord += rule.integrate(lo, lo + step, |s| {
                let point = from_action_angle(&ActionAngle { s, theta: th, e: e0, j }).expect("E0 > 0");
                a(&point)
            });
        }
        total += chord / (2.0 * half);
    }
    Ok(total / chords as f64)
}

/// Samples the flow at `n` equally spaced times in `[0, tau_max]`.
pub fn trace(p: &PhasePoint, tau_max: f64, n: usize) -> Result<Vec<(f64, PhasePoint)>> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let tau = if n > 1 {
            tau_max * i as f64 / (n - 1) as f64
        } else {
            0.0
        };
        out.push((tau, flow(p, tau)?));
    }
    Ok(out)
}

/// CSV with header `tau,x,y,xi_x,xi_y,s,theta,E,J,alpha`.
pub fn trace_csv(samples: &[(f64, PhasePoint)]) -> Result<String> {
    let mut w = CsvWriter::new(&["tau", "x", "y", "xi_x", "xi_y", "s", "theta", "E", "J", "alpha"]);
    for (tau, p) in samples {
        let aa = to_action_angle(p)?;
        w.row_f64(&[*tau, p.x, p.y, p.xi_x, p.xi_y, aa.s, aa.theta, aa.e, aa.j, aa.alpha()]);
    }
    Ok(w.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    const S2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn reflection_examples() {
        assert_eq!(reflect([1.0, 0.0], [1.0, 0.0]).unwrap(), [-1.0, 0.0]);
        assert_eq!(reflect([1.0, 0.0], [0.0, 1.0]).unwrap(), [0.0, 1.0]);
        let r = reflect([0.0, 1.0], [S2, S2]).unwrap();
        assert!((r[0] - S2).abs() < 1e-15 && (r[1] + S2).abs() < 1e-15);
        assert!(reflect([0.5, 0.0], [1.0, 0.0]).is_err());
    }

    #[test]
    fn chart_examples() {
        let a = to_action_angle(&PhasePoint::new(0.0, 0.0, 0.0, 1.0)).unwrap();
        assert_eq!((a.s, a.theta, a.e, a.j), (0.0, 0.0, 1.0, 0.0));
        let p = from_action_angle(&ActionAngle {
            s: 0.0,
            theta: PI / 2.0,
            e: 2.0,
            j: 0.0,
        })
        .unwrap();
        assert!(p.distance(&PhasePoint::new(0.0, 0.0, -2.0, 0.0)) < 1e-15);
        assert!(to_action_angle(&PhasePoint::new(0.1, 0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn flow_examples() {
        let p = PhasePoint::new(0.0, 0.0, 0.0, 1.0);
        assert!(flow(&p, 0.5).unwrap().distance(&PhasePoint::new(0.0, 0.5, 0.0, 1.0)) < 1e-15);
        assert!(flow(&p, 1.5).unwrap().distance(&PhasePoint::new(0.0, 0.5, 0.0, -1.0)) < 1e-14);
        assert!(flow(&flow(&p, 1.5).unwrap(), -1.5).unwrap().distance(&p) < 1e-14);
    }

    #[test]
    fn tangential_start_rotates() {
        let p = PhasePoint::new(1.0, 0.0, 0.0, 2.0);
        let q = flow(&p, PI / 4.0).unwrap();
        // speed 2 on the unit circle: angle π/2
        assert!(q.distance(&PhasePoint::new(0.0, 1.0, -2.0, 0.0)) < 1e-14);
    }

    #[test]
    fn rotation_examples() {
        let p = PhasePoint::new(1.0, 0.0, 0.0, 1.0);
        assert!(rotation_flow(&p, PI).distance(&PhasePoint::new(-1.0, 0.0, 0.0, -1.0)) < 1e-15);
        assert!(rotation_flow(&p, 2.0 * PI).distance(&p) < 1e-15);
    }

    #[test]
    fn periods() {
        assert_eq!(orbit_period(0, 1).unwrap(), (2, 4.0));
        let (n, l) = orbit_period(1, 4).unwrap();
        assert_eq!(n, 4);
        assert!((l - 4.0 * 2f64.sqrt()).abs() < 1e-12);
        let (n, l) = orbit_period(1, 6).unwrap();
        assert_eq!(n, 3);
        assert!((l - 3.0 * 3f64.sqrt()).abs() < 1e-12);
        assert!(orbit_period(1, 2).is_err());
        assert!(orbit_period(1, 0).is_err());
    }

    #[test]
    fn averages() {
        let r2 = |p: &PhasePoint| p.x * p.x + p.y * p.y;
        assert!((orbit_average(|_| 2.5, 1, 5, 1.0, 0.3).unwrap() - 2.5).abs() < 1e-14);
        assert!((orbit_average(r2, 0, 1, 1.0, 0.7).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        assert!((orbit_average(r2, 1, 4, 1.0, 0.7).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        assert!(orbit_average(|p| p.x, 0, 1, 1.0, 1.1).unwrap().abs() < 1e-14);
    }

    #[test]
    fn measure_constant() {
        assert!((torus_measure_const(1.0, 0.0).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-16);
        assert_eq!(torus_measure_const(2.0, 0.0).unwrap(), torus_measure_const(1.0, 0.0).unwrap());
        assert!(torus_measure_const(1.0, 1.0).is_err());
    }

    #[test]
    fn trace_header() {
        let s = trace(&PhasePoint::new(0.0, 0.0, 1.0, 0.0), 2.0, 3).unwrap();
        let csv = trace_csv(&s).unwrap();
        assert!(csv.starts_with("tau,x,y,xi_x,xi_y,s,theta,E,J,alpha\n"));
        assert_eq!(csv.lines().count(), 4);
    }
}
