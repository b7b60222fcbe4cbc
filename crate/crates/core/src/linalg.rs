//! Dense Hermitian matrices and a deterministic eigensolver.
//!
//! The solver splits the matrix into irreducible diagonal blocks (connected
//! components of its sparsity graph), reduces each block to real symmetric
//! tridiagonal form with Householder reflections, and diagonalizes that with
//! the implicit QL algorithm. Blocks whose entries are all real run in real
//! arithmetic. Everything is single-threaded, so the output for a given input
//! is bit-for-bit reproducible.
//!
//! Eigenvalues come out ascending. Each eigenvector is scaled so that its
//! first component of modulus above [`SIGN_THRESHOLD`] is real and positive.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Components at or below this modulus are skipped when fixing the phase of
/// an eigenvector.
pub const SIGN_THRESHOLD: f64 = 1e-8;

const HERMITIAN_TOL: f64 = 1e-12;
const MAX_QL_SWEEPS: usize = 60;

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        CMatrix { n, data }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(*d, 0.0);
        }
        m
    }

    pub fn from_rows(n: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension(format!("{} entries for a {n}x{n} matrix", data.len())));
        }
        Ok(CMatrix { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self[(i, j)] == C64::new(0.0, 0.0)))
    }

    /// Largest `|A_ij − conj(A_ji)|` with its location.
    pub fn hermitian_defect(&self) -> (f64, usize, usize) {
        let mut worst = (0.0, 0, 0);
        for i in 0..self.n {
            for j in i..self.n {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                if d > worst.0 {
                    worst = (d, i, j);
                }
            }
        }
        worst
    }

    pub fn check_hermitian(&self) -> Result<()> {
        let (defect, row, col) = self.hermitian_defect();
        if defect > HERMITIAN_TOL * self.max_abs().max(1.0) {
            return Err(Error::NotHermitian { row, col, defect });
        }
        Ok(())
    }

    pub fn mat_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, x)| a * x).sum())
            .collect()
    }

    pub fn mat_mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for l in 0..n {
                let a = self[(i, l)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let src = other.row(l);
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn scaled(&self, s: f64) -> CMatrix {
        CMatrix {
            n: self.n,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n);
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n);
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// `A + s·I`.
    pub fn shifted(&self, s: f64) -> CMatrix {
        let mut out = self.clone();
        for i in 0..self.n {
            out[(i, i)] += s;
        }
        out
    }

    /// `(A + Aᴴ)/2`.
    pub fn hermitian_part(&self) -> CMatrix {
        CMatrix::from_fn(self.n, |i, j| 0.5 * (self[(i, j)] + self[(j, i)].conj()))
    }

    /// Principal submatrix on `idx`.
    pub fn submatrix(&self, idx: &[usize]) -> CMatrix {
        CMatrix::from_fn(idx.len(), |i, j| self[(idx[i], idx[j])])
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
}

impl Eigen {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Full eigendecomposition of a Hermitian matrix.
pub fn eigh(a: &CMatrix) -> Result<Eigen> {
    a.check_hermitian()?;
    let n = a.dim();
    let mut pairs: Vec<(f64, Vec<C64>)> = Vec::with_capacity(n);
    for block in irreducible_blocks(a) {
        let sub = a.submatrix(&block);
        let (values, vectors) = if sub.is_real() {
            let mut re: Vec<f64> = sub.as_slice().iter().map(|z| z.re).collect();
            let (vals, vecs) = block_eigen(&mut re, block.len(), true)?;
            let vecs = vecs
                .unwrap()
                .into_iter()
                .map(|v| v.into_iter().map(|x| C64::new(x, 0.0)).collect())
                .collect::<Vec<Vec<C64>>>();
            (vals, vecs)
        } else {
            let mut data = sub.as_slice().to_vec();
            let (vals, vecs) = block_eigen(&mut data, block.len(), true)?;
            (vals, vecs.unwrap())
        };
        for (val, local) in values.into_iter().zip(vectors) {
            let mut full = vec![C64::new(0.0, 0.0); n];
            for (slot, x) in block.iter().zip(local) {
                full[*slot] = x;
            }
            fix_phase(&mut full);
            pairs.push((val, full));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let (values, vectors) = pairs.into_iter().unzip();
    Ok(Eigen { values, vectors })
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(a: &CMatrix) -> Result<Vec<f64>> {
    a.check_hermitian()?;
    let mut values = Vec::with_capacity(a.dim());
    for block in irreducible_blocks(a) {
        let sub = a.submatrix(&block);
        let vals = if sub.is_real() {
            let mut re: Vec<f64> = sub.as_slice().iter().map(|z| z.re).collect();
            block_eigen(&mut re, block.len(), false)?.0
        } else {
            let mut data = sub.as_slice().to_vec();
            block_eigen(&mut data, block.len(), false)?.0
        };
        values.extend(vals);
    }
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Eigendecomposition of a real symmetric matrix given row-major.
pub fn eigh_real(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if a.len() != n * n {
        return Err(Error::Dimension(format!("{} entries for a {n}x{n} matrix", a.len())));
    }
    let m = CMatrix::from_fn(n, |i, j| C64::new(a[i * n + j], 0.0));
    let eig = eigh(&m)?;
    let vecs = eig
        .vectors
        .into_iter()
        .map(|v| v.into_iter().map(|z| z.re).collect())
        .collect();
    Ok((eig.values, vecs))
}

fn fix_phase(v: &mut [C64]) {
    if let Some(lead) = v.iter().find(|z| z.norm() > SIGN_THRESHOLD) {
        let phase = lead.conj() / lead.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
        // The leading component is real by construction; drop rounding noise.
        if let Some(lead) = v.iter_mut().find(|z| z.norm() > SIGN_THRESHOLD) {
            lead.im = 0.0;
        }
    }
}

/// Index sets of the connected components of the off-diagonal sparsity
/// graph, each sorted, ordered by smallest index.
pub fn irreducible_blocks(a: &CMatrix) -> Vec<Vec<usize>> {
    let n = a.dim();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let zero = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if a[(i, j)] != zero || a[(j, i)] != zero {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    let (lo, hi) = if ri < rj { (ri, rj) } else { (rj, ri) };
                    parent[hi] = lo;
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot_of_root = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot_of_root[r] == usize::MAX {
            slot_of_root[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot_of_root[r]].push(i);
    }
    blocks
}

/// Field operations needed by the Householder reduction.
trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + PartialEq
{
    fn zero() -> Self;
    fn from_re(x: f64) -> Self;
    fn conj(self) -> Self;
    fn re(self) -> f64;
    fn abs2(self) -> f64;
    fn scale(self, s: f64) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_re(x: f64) -> Self {
        x
    }
    fn conj(self) -> Self {
        self
    }
    fn re(self) -> f64 {
        self
    }
    fn abs2(self) -> f64 {
        self * self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl Scalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn from_re(x: f64) -> Self {
        C64::new(x, 0.0)
    }
    fn conj(self) -> Self {
        C64::conj(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

/// Eigen-decomposition of one dense Hermitian block (row-major, destroyed).
#[allow(clippy::type_complexity)]
fn block_eigen<S: Scalar + FromPhase>(a: &mut [S], n: usize, vectors: bool) -> Result<(Vec<f64>, Option<Vec<Vec<S>>>)> {
    if n == 1 {
        return Ok((vec![a[0].re()], vectors.then(|| vec![vec![S::from_re(1.0)]])));
    }
    let (mut d, e, q) = tridiagonalize(a, n, vectors);
    // Diagonal unitary making the off-diagonal real and nonnegative.
    let mut phases = vec![S::from_re(1.0); n];
    let mut off = vec![0.0; n];
    for i in 0..n - 1 {
        let mag = e[i].abs2().sqrt();
        off[i] = mag;
        phases[i + 1] = if mag > 0.0 {
            phases[i] * S::unit_from(e[i], mag)
        } else {
            phases[i]
        };
    }
    let mut z = vectors.then(|| identity_rows(n));
    tql(&mut d, &mut off, z.as_deref_mut())?;
    let Some(z) = z else {
        return Ok((d, None));
    };
    let q = q.expect("reflectors requested");
    // columns of Q·diag(phases)
    let mut qd = q;
    for r in 0..n {
        for c in 0..n {
            qd[r * n + c] = qd[r * n + c] * phases[c];
        }
    }
    let mut out = Vec::with_capacity(n);
    for zrow in z.chunks(n) {
        let mut v = vec![S::zero(); n];
        for (r, slot) in v.iter_mut().enumerate() {
            let row = &qd[r * n..(r + 1) * n];
            let mut acc = S::zero();
            for (x, w) in row.iter().zip(zrow) {
                acc += x.scale(*w);
            }
            *slot = acc;
        }
        out.push(v);
    }
    Ok((d, Some(out)))
}

trait FromPhase: Sized {
    fn unit_from(e: Self, mag: f64) -> Self;
}

impl FromPhase for f64 {
    fn unit_from(e: Self, _mag: f64) -> Self {
        e.signum()
    }
}

impl FromPhase for C64 {
    fn unit_from(e: Self, mag: f64) -> Self {
        e / mag
    }
}

fn identity_rows(n: usize) -> Vec<f64> {
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    z
}

/// Householder reduction `A = Q T Q*`. Returns the real diagonal of `T`, its
/// (possibly complex) subdiagonal, and `Q` row-major when requested.
#[allow(clippy::type_complexity)]
fn tridiagonalize<S: Scalar + FromPhase>(a: &mut [S], n: usize, want_q: bool) -> (Vec<f64>, Vec<S>, Option<Vec<S>>) {
    let mut q = if want_q {
        let mut q = vec![S::zero(); n * n];
        for i in 0..n {
            q[i * n + i] = S::from_re(1.0);
        }
        Some(q)
    } else {
        None
    };
    let mut v = vec![S::zero(); n];
    let mut p = vec![S::zero(); n];
    for k in 0..n.saturating_sub(2) {
        let start = k + 1;
        let len = n - start;
        let x0 = a[start * n + k];
        let tail: f64 = (start + 1..n).map(|i| a[i * n + k].abs2()).sum();
        if tail == 0.0 {
            continue;
        }
        let x0_abs = x0.abs2().sqrt();
        let norm_x = (x0.abs2() + tail).sqrt();
        let phase = if x0_abs > 0.0 {
            S::unit_from(x0, x0_abs)
        } else {
            S::from_re(1.0)
        };
        let alpha = -(phase.scale(norm_x));
        let v = &mut v[..len];
        v[0] = x0 - alpha;
        for i in 1..len {
            v[i] = a[(start + i) * n + k];
        }
        let vnorm = (v[0].abs2() + tail).sqrt();
        let inv = 1.0 / vnorm;
        for x in v.iter_mut() {
            *x = x.scale(inv);
        }
        // p = A_sub v, using the lower triangle and Hermitian symmetry
        let p = &mut p[..len];
        for x in p.iter_mut() {
            *x = S::zero();
        }
        for i in 0..len {
            let row = &a[(start + i) * n + start..(start + i) * n + start + i + 1];
            let vi = v[i];
            let mut acc = S::zero();
            for j in 0..i {
                let aij = row[j];
                acc += aij * v[j];
                p[j] += aij.conj() * vi;
            }
            acc += row[i] * vi;
            p[i] += acc;
        }
        let kk: f64 = v.iter().zip(p.iter()).map(|(vi, pi)| (vi.conj() * *pi).re()).sum();
        for i in 0..len {
            p[i] -= v[i].scale(kk);
        }
        // lower triangle: A_sub -= 2 (v w* + w v*)
        for i in 0..len {
            let vi2 = v[i].scale(2.0);
            let wi2 = p[i].scale(2.0);
            let row = &mut a[(start + i) * n + start..(start + i) * n + start + i + 1];
            for j in 0..=i {
                row[j] -= vi2 * p[j].conj() + wi2 * v[j].conj();
            }
        }
        a[start * n + k] = alpha;
        for i in start + 1..n {
            a[i * n + k] = S::zero();
        }
        if let Some(q) = q.as_mut() {
            for r in 0..n {
                let row = &mut q[r * n + start..r * n + n];
                let mut s = S::zero();
                for (x, vj) in row.iter().zip(v.iter()) {
                    s += *x * *vj;
                }
                let s2 = s.scale(2.0);
                for (x, vj) in row.iter_mut().zip(v.iter()) {
                    *x -= s2 * vj.conj();
                }
            }
        }
    }
    let d = (0..n).map(|i| a[i * n + i].re()).collect();
    let e = (0..n - 1).map(|i| a[(i + 1) * n + i]).collect();
    (d, e, q)
}

/// Implicit QL on a real symmetric tridiagonal matrix. `e[i]` couples `i` and
/// `i+1`; `z` holds eigenvectors as rows (row `i` = eigenvector `i`).
fn tql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(Error::NoConvergence {
                    m: l as u32,
                    k: 0,
                    iterations: sweeps,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    let (head, tail) = z.split_at_mut((i + 1) * n);
                    let zi = &mut head[i * n..];
                    let zi1 = &mut tail[..n];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let f = *b;
                        *b = s * *a + c * f;
                        *a = c * *a - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
