//! Bessel functions of the first kind of integer order, their derivatives,
//! and their positive zeros.
//!
//! Evaluation strategy for `J_m(x)`, `x > 0`:
//!
//! * `x² ≤ 4(m + 1)`: the ascending power series. In this range the terms
//!   decrease from the start and the alternating sum loses at most a factor
//!   `e` to cancellation.
//! * otherwise: Miller's backward recurrence started at an even order
//!   `N ≈ max(m, x) + 30 + 10·max(m, x)^{1/3}` (well beyond the turning point,
//!   where `J_N(x)` is below `1e-18`), normalized with
//!   `J_0 + 2 Σ J_{2k} = 1`. The recurrence is rescaled whenever the running
//!   values exceed `1e200`.
//!
//! Zeros are found order by order: the first zero lies above `m`, consecutive
//! zeros are more than `3` apart for every order, so the k-th zero is
//! bracketed by scanning with step `1.5` from the previous one and then
//! polished by Newton's method safeguarded by bisection. The results are
//! kept in a process-wide write-once table so every caller sees bit-identical
//! values.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Largest argument accepted by [`bessel_j`].
pub const MAX_ARGUMENT: f64 = 1.0e6;

const RESCALE_ABOVE: f64 = 1.0e200;
const RESCALE_BY: f64 = 1.0e-200;

/// Minimum spacing between consecutive positive zeros of `J_m`, any `m ≥ 0`.
const MIN_ZERO_GAP: f64 = 3.0;
const SCAN_STEP: f64 = 1.5;
const MAX_NEWTON: usize = 200;

/// The k-th positive zero of `J_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselZero {
    pub m: u32,
    pub k: u32,
    pub value: f64,
}

fn check_args(func: &'static str, m: i32, x: f64) -> Result<u32> {
    if m < 0 {
        return Err(domain(func, format!("negative order {m}")));
    }
    if !(x >= 0.0) {
        return Err(domain(func, format!("argument {x} is not a nonnegative number")));
    }
    if x > MAX_ARGUMENT {
        return Err(domain(func, format!("argument {x} exceeds {MAX_ARGUMENT}")));
    }
    Ok(m as u32)
}

/// `J_m(x)` for integer `m ≥ 0` and `0 ≤ x ≤ 1e6`.
pub fn bessel_j(m: i32, x: f64) -> Result<f64> {
    let m = check_args("bessel_j", m, x)?;
    Ok(jn(m, x))
}

/// `J_m'(x)`, from `J_m' = (J_{m-1} − J_{m+1})/2` and `J_0' = −J_1`.
pub fn bessel_j_prime(m: i32, x: f64) -> Result<f64> {
    let m = check_args("bessel_j_prime", m, x)?;
    Ok(jn_prime(m, x))
}

pub(crate) fn jn(m: u32, x: f64) -> f64 {
    triple(m, x).1
}

pub(crate) fn jn_prime(m: u32, x: f64) -> f64 {
    let (lo, _, hi) = triple(m, x);
    0.5 * (lo - hi)
}

/// `(J_{m-1}(x), J_m(x), J_{m+1}(x))`, with `J_{-1} = −J_1`.
pub(crate) fn triple(m: u32, x: f64) -> (f64, f64, f64) {
    if x == 0.0 {
        let at = |n: i64| if n == 0 { 1.0 } else { 0.0 };
        let m = m as i64;
        return (at(m - 1), at(m), at(m + 1));
    }
    let mf = m as f64;
    if x * x <= 4.0 * (mf + 1.0) {
        let below = if m == 0 { -series(1, x) } else { series(m - 1, x) };
        (below, series(m, x), series(m + 1, x))
    } else {
        miller(m, x)
    }
}

fn series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut lead = 1.0;
    for i in 1..=n {
        lead *= half / i as f64;
        if lead == 0.0 {
            return 0.0;
        }
    }
    let q = -half * half;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200u32 {
        term *= q / (k as f64 * (n + k) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    lead * sum
}

fn miller(m: u32, x: f64) -> (f64, f64, f64) {
    let top = (m as f64 + 1.0).max(x);
    let mut start = (top + 30.0 + 10.0 * top.cbrt()).ceil() as u32;
    if start % 2 == 1 {
        start += 1;
    }
    let two_over_x = 2.0 / x;
    // f_{n+1}, f_n
    let mut above = 0.0_f64;
    let mut current = 1.0e-30_f64;
    let mut norm = 0.0_f64;
    let mut kept = [0.0_f64; 3];
    let keep = |n: u32, v: f64, kept: &mut [f64; 3]| {
        if n + 1 >= m && n <= m + 1 {
            kept[(n + 1 - m) as usize] = v;
        }
    };
    keep(start, current, &mut kept);
    let mut n = start;
    while n > 0 {
        let below = n as f64 * two_over_x * current - above;
        above = current;
        current = below;
        n -= 1;
        keep(n, current, &mut kept);
        if n.is_multiple_of(2) && n > 0 {
            norm += 2.0 * current;
        }
        if current.abs() > RESCALE_ABOVE {
            current *= RESCALE_BY;
            above *= RESCALE_BY;
            norm *= RESCALE_BY;
            for v in kept.iter_mut() {
                *v *= RESCALE_BY;
            }
        }
    }
    norm += current;
    let lo = if m == 0 { -kept[2] } else { kept[0] };
    (lo / norm, kept[1] / norm, kept[2] / norm)
}

fn zero_table() -> &'static RwLock<HashMap<u32, Vec<f64>>> {
    static TABLE: OnceLock<RwLock<HashMap<u32, Vec<f64>>>> = OnceLock::new();
    TABLE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// The k-th positive zero `j_{m,k}` of `J_m`, accurate to `1e-10` absolute.
pub fn bessel_zero(m: i32, k: u32) -> Result<BesselZero> {
    if m < 0 {
        return Err(domain("bessel_zero", format!("negative order {m}")));
    }
    if k == 0 {
        return Err(domain("bessel_zero", "zero index must be at least 1"));
    }
    let m = m as u32;
    let value = zeros_through(m, |zs| zs.len() >= k as usize)?[k as usize - 1];
    Ok(BesselZero { m, k, value })
}

/// All positive zeros of `J_m` not exceeding `x_max`, in increasing order.
pub fn zeros_below(m: u32, x_max: f64) -> Result<Vec<f64>> {
    let zs = zeros_through(m, |zs| zs.last().is_some_and(|&z| z > x_max))?;
    Ok(zs.into_iter().take_while(|&z| z <= x_max).collect())
}

/// Returns the cached zero list of order `m`, extended until `done` holds.
fn zeros_through(m: u32, done: impl Fn(&[f64]) -> bool) -> Result<Vec<f64>> {
    {
        let table = zero_table().read().expect("zero table poisoned");
        if let Some(zs) = table.get(&m) {
            if done(zs) {
                return Ok(zs.clone());
            }
        }
    }
    let mut table = zero_table().write().expect("zero table poisoned");
    let zs = table.entry(m).or_default();
    while !done(zs) {
        let k = zs.len() as u32 + 1;
        let next = find_zero(m, k, zs.last().copied())?;
        zs.push(next);
    }
    Ok(zs.clone())
}

fn find_zero(m: u32, k: u32, previous: Option<f64>) -> Result<f64> {
    let mf = m as f64;
    let mut a = match previous {
        Some(z) => z + MIN_ZERO_GAP,
        None if m == 0 => 0.5,
        None => mf,
    };
    let mut fa = jn(m, a);
    let mut b = a + SCAN_STEP;
    let mut fb = jn(m, b);
    let mut steps = 0usize;
    while fa.signum() == fb.signum() && fb != 0.0 {
        a = b;
        fa = fb;
        b += SCAN_STEP;
        fb = jn(m, b);
        steps += 1;
        if steps > 100_000 {
            return Err(Error::NoConvergence { m, k, iterations: steps });
        }
    }
    if fb == 0.0 {
        return Ok(b);
    }
    // McMahon's expansion is a good start for k ≫ m; otherwise the midpoint.
    let beta = (k as f64 + 0.5 * mf - 0.25) * PI;
    let mu = 4.0 * mf * mf;
    let mcmahon = beta - (mu - 1.0) / (8.0 * beta);
    let mut x = if mcmahon > a && mcmahon < b {
        mcmahon
    } else {
        0.5 * (a + b)
    };
    let (mut lo, mut hi, f_lo) = (a, b, fa);
    for _ in 0..MAX_NEWTON {
        let (below, fx, above) = triple(m, x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
        } else {
            hi = x;
        }
        let slope = 0.5 * (below - above);
        let newton = x - fx / slope;
        let next = if slope != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - x).abs();
        x = next;
        if step <= 4.0 * f64::EPSILON * x || hi - lo <= 4.0 * f64::EPSILON * x {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence {
        m,
        k,
        iterations: MAX_NEWTON,
    })
}

/// CSV dump of zeros with header `m,k,j`, shortest round-trip decimals.
pub fn zero_table_csv(zeros: &[BesselZero]) -> String {
    let mut out = String::from("m,k,j\n");
    for z in zeros {
        let _ = writeln!(out, "{},{},{}", z.m, z.k, z.value);
    }
    out
}

/// Parses the output of [`zero_table_csv`].
pub fn parse_zero_table_csv(text: &str) -> Result<Vec<BesselZero>> {
    let mut lines = text.lines();
    match lines.next() {
        Some("m,k,j") => {}
        other => return Err(Error::Parse(format!("bad zero table header {other:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!("bad zero table row {line:?}")));
            }
            let bad = |_| Error::Parse(format!("bad zero table row {line:?}"));
            Ok(BesselZero {
                m: fields[0].parse().map_err(|_| Error::Parse(line.to_string()))?,
                k: fields[1].parse().map_err(|_| Error::Parse(line.to_string()))?,
                value: fields[2].parse().map_err(bad)?,
            })
        })
        .collect()
}
