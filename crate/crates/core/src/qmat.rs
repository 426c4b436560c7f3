//! Dense complex matrices for small open systems.
//!
//! Everything here is sized for a handful of qubits (dimension 2 to 16):
//! matrices are row-major `Vec<Complex64>`, the Hermitian eigensolver is a
//! cyclic complex Jacobi iteration, and matrix functions are evaluated on
//! the spectrum. Subsystem 0 is always the leftmost tensor factor.

use std::fmt;
use std::ops::{Add, AddAssign, Deref, Index, IndexMut, Mul, Sub};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Max-abs tolerance on `M - M^dag` for a matrix to count as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues at or below this are treated as zero in logarithms.
pub const ZERO_EIG: f64 = 1e-12;
/// Tolerance on trace and eigenvalue sign when validating a density matrix.
pub const STATE_TOL: f64 = 1e-10;

const JACOBI_OFF_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Clone, PartialEq)]
pub struct CMat {
    dim: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        CMat {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        CMat { dim, data }
    }

    /// Build from row-major entries; `data.len()` must be a perfect square.
    pub fn from_vec(data: Vec<C64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() || dim == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} entries do not form a square matrix",
                data.len()
            )));
        }
        Ok(CMat { dim, data })
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// `|ket><bra|`
    pub fn outer(ket: &[C64], bra: &[C64]) -> Self {
        assert_eq!(ket.len(), bra.len());
        Self::from_fn(ket.len(), |r, c| ket[r] * bra[c].conj())
    }

    /// Matrix unit `|row><col|` in dimension `dim`.
    pub fn unit(dim: usize, row: usize, col: usize) -> Self {
        let mut m = Self::zeros(dim);
        m[(row, col)] = C64::new(1.0, 0.0);
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        CMat {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        CMat {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_c(&self, s: C64) -> Self {
        CMat {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, s: C64, other: &CMat) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for (k, &a) in row.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        CMat { dim: n, data: out }
    }

    /// `self * other^dag` without materialising the adjoint.
    pub fn matmul_adj(&self, other: &CMat) -> CMat {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let n = self.dim;
        CMat::from_fn(n, |i, j| {
            let a = &self.data[i * n..(i + 1) * n];
            let b = &other.data[j * n..(j + 1) * n];
            a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
        })
    }

    /// `Tr(self * other)` in O(n^2).
    pub fn trace_product(&self, other: &CMat) -> C64 {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-abs entry of `self - self^dag`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim;
        let mut err = 0.0f64;
        for r in 0..n {
            for c in r..n {
                err = err.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        err
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// `(M + M^dag) / 2`
    pub fn hermitian_part(&self) -> CMat {
        Self::from_fn(self.dim, |r, c| (self[(r, c)] + self[(c, r)].conj()) * 0.5)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat({}x{})[", self.dim, self.dim)?;
        for r in 0..self.dim {
            write!(f, "  ")?;
            for c in 0..self.dim {
                let z = self[(r, c)];
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim);
        CMat {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim);
        CMat {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        self.matmul(rhs)
    }
}

impl AddAssign<&CMat> for CMat {
    fn add_assign(&mut self, rhs: &CMat) {
        assert_eq!(self.dim, rhs.dim);
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

/// `[a, b] = ab - ba`
pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    &a.matmul(b) - &b.matmul(a)
}

/// Kronecker product with `a` as the left (more significant) factor.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (na, nb) = (a.dim, b.dim);
    CMat::from_fn(na * nb, |r, c| a[(r / nb, c / nb)] * b[(r % nb, c % nb)])
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all(factors: &[&CMat]) -> CMat {
    let mut it = factors.iter();
    let first = (*it.next().expect("kron_all of an empty list")).clone();
    it.fold(first, |acc, f| kron(&acc, f))
}

/// Tensor product of kets.
pub fn kron_ket(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

fn check_dims(dim: usize, dims: &[usize]) -> Result<()> {
    let prod: usize = dims.iter().product();
    if dims.is_empty() || prod != dim {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dims {dims:?} do not multiply to {dim}"
        )));
    }
    Ok(())
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Decompose `idx` over the (ordered) subsystems `subs`, returning the offset
/// it contributes to a full-space index.
fn offset(mut idx: usize, subs: &[usize], dims: &[usize], full_strides: &[usize]) -> usize {
    let mut off = 0;
    for &k in subs.iter().rev() {
        off += (idx % dims[k]) * full_strides[k];
        idx /= dims[k];
    }
    off
}

/// Partial trace of an arbitrary operator; `keep` lists the subsystems kept,
/// in the order they should appear in the output.
pub fn partial_trace_mat(m: &CMat, dims: &[usize], keep: &[usize]) -> Result<CMat> {
    check_dims(m.dim, dims)?;
    for (i, &k) in keep.iter().enumerate() {
        if k >= dims.len() || keep[..i].contains(&k) {
            return Err(Error::DimensionMismatch(format!(
                "invalid keep set {keep:?} for {} subsystems",
                dims.len()
            )));
        }
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let st = strides(dims);
    let out_dim: usize = keep.iter().map(|&k| dims[k]).product();
    let tr_dim: usize = traced.iter().map(|&k| dims[k]).product();
    let tr_offsets: Vec<usize> = (0..tr_dim).map(|t| offset(t, &traced, dims, &st)).collect();
    let keep_offsets: Vec<usize> = (0..out_dim).map(|t| offset(t, keep, dims, &st)).collect();
    Ok(CMat::from_fn(out_dim, |r, c| {
        let (ro, co) = (keep_offsets[r], keep_offsets[c]);
        tr_offsets.iter().map(|&t| m[(ro + t, co + t)]).sum()
    }))
}

/// Reduced state on the subsystems in `keep`.
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    Ok(DensityMatrix(partial_trace_mat(&rho.0, dims, keep)?.hermitian_part()))
}

/// Reorder tensor factors: output factor `k` is input factor `order[k]`.
pub fn permute_subsystems(m: &CMat, dims: &[usize], order: &[usize]) -> Result<CMat> {
    check_dims(m.dim, dims)?;
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..dims.len()).collect::<Vec<_>>() {
        return Err(Error::DimensionMismatch(format!("{order:?} is not a permutation")));
    }
    let new_dims: Vec<usize> = order.iter().map(|&k| dims[k]).collect();
    let st = strides(dims);
    // Index in the new ordering -> index in the old one.
    let map: Vec<usize> = (0..m.dim)
        .map(|i| {
            let mut rest = i;
            let mut old = 0;
            for (pos, &k) in order.iter().enumerate().rev() {
                old += (rest % new_dims[pos]) * st[k];
                rest /= new_dims[pos];
            }
            old
        })
        .collect();
    Ok(CMat::from_fn(m.dim, |r, c| m[(map[r], map[c])]))
}

/// Partial transpose on subsystem `which`.
pub fn partial_transpose(m: &CMat, dims: &[usize], which: usize) -> Result<CMat> {
    check_dims(m.dim, dims)?;
    if which >= dims.len() {
        return Err(Error::DimensionMismatch(format!("no subsystem {which}")));
    }
    let st = strides(dims);
    let (d, s) = (dims[which], st[which]);
    Ok(CMat::from_fn(m.dim, |r, c| {
        let (dr, dc) = ((r / s) % d, (c / s) % d);
        m[(r - dr * s + dc * s, c - dc * s + dr * s)]
    }))
}

/// Eigendecomposition `H = U diag(lambda) U^dag`, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns.
    pub eigenvectors: CMat,
}

impl Spectrum {
    /// `U diag(f(lambda)) U^dag`
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let vals: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.with_values(&vals)
    }

    pub fn with_values(&self, vals: &[f64]) -> CMat {
        let u = &self.eigenvectors;
        let n = u.dim();
        CMat::from_fn(n, |r, c| (0..n).map(|k| u[(r, k)] * vals[k] * u[(c, k)].conj()).sum())
    }

    pub fn reconstruct(&self) -> CMat {
        self.with_values(&self.eigenvalues)
    }

    /// Column `k` of U.
    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        let n = self.eigenvectors.dim();
        (0..n).map(|r| self.eigenvectors[(r, k)]).collect()
    }

    /// `<u_k| m |u_k>` for every eigenvector.
    pub fn diagonal_of(&self, m: &CMat) -> Vec<f64> {
        let u = &self.eigenvectors;
        let n = u.dim();
        (0..n)
            .map(|k| {
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..n {
                    let ur = u[(r, k)].conj();
                    if ur.re == 0.0 && ur.im == 0.0 {
                        continue;
                    }
                    let mut row = C64::new(0.0, 0.0);
                    for c in 0..n {
                        row += m[(r, c)] * u[(c, k)];
                    }
                    acc += ur * row;
                }
                acc.re
            })
            .collect()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Singular values in descending order, by one-sided Jacobi rotations on the
/// columns. Small singular values keep absolute accuracy of order
/// `eps * |m|` instead of the `sqrt(eps)` that eigenvalues of `m† m` would give.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let n = m.dim;
    // cols[k] is column k of m.
    let mut cols: Vec<Vec<C64>> = (0..n).map(|k| (0..n).map(|r| m[(r, k)]).collect()).collect();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = cols[p].iter().zip(&cols[q]).map(|(a, b)| a.conj() * b).sum();
                let g = gamma.norm();
                if g <= 1e-15 * (alpha * beta).sqrt() || g < 1e-300 {
                    continue;
                }
                rotated = true;
                // Rotate the phase out of the overlap, then a real Jacobi rotation.
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (zeta * zeta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (a, b) = (*x, *y * phase);
                    *x = a * c - b * s;
                    *y = a * s + b * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols
        .iter()
        .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
pub fn herm_eig(h: &CMat) -> Result<Spectrum> {
    let herr = h.hermiticity_error();
    if herr > HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(Error::NonHermitian(herr));
    }
    Ok(jacobi(h.hermitian_part()))
}

fn jacobi(mut a: CMat) -> Spectrum {
    let n = a.dim;
    let mut u = CMat::identity(n);
    let scale = a.frobenius_norm().max(1.0);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| a[(r, c)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off < JACOBI_OFF_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[(p, q)];
                let gabs = g.norm();
                if gabs < 1e-300 {
                    continue;
                }
                let alpha = a[(p, p)].re;
                let beta = a[(q, q)].re;
                let phase = g / gabs;
                let theta = (beta - alpha) / (2.0 * gabs);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let ph_c = phase.conj();
                // A <- A V with V = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] on (p, q).
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * ph_c * s;
                    a[(k, q)] = akp * s + akq * ph_c * c;
                }
                // A <- V^dag A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * phase * s;
                    a[(q, k)] = apk * s + aqk * phase * c;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let ukp = u[(k, p)];
                    let ukq = u[(k, q)];
                    u[(k, p)] = ukp * c - ukq * ph_c * s;
                    u[(k, q)] = ukp * s + ukq * ph_c * c;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = CMat::from_fn(n, |r, c| u[(r, order[c])]);
    Spectrum {
        eigenvalues,
        eigenvectors,
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMat);

impl DensityMatrix {
    /// Validate against the state tolerances.
    pub fn new(m: CMat) -> Result<Self> {
        let herr = m.hermiticity_error();
        if herr > HERMITIAN_TOL {
            return Err(Error::NonHermitian(herr));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let m = m.hermitian_part();
        let min = jacobi(m.clone()).min();
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(DensityMatrix(m))
    }

    /// Wrap without validation; for states produced by trusted code paths.
    pub(crate) fn new_unchecked(m: CMat) -> Self {
        DensityMatrix(m)
    }

    /// Pure state from an (unnormalised) ket.
    pub fn from_ket(ket: &[C64]) -> Result<Self> {
        let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite ket".into()));
        }
        let k: Vec<C64> = ket.iter().map(|z| z / norm).collect();
        Ok(DensityMatrix(CMat::outer(&k, &k)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(CMat::identity(dim).scale(1.0 / dim as f64))
    }

    /// Project a nearly valid state onto the PSD cone: negative eigenvalues are
    /// zeroed and the trace renormalised. Returns the state and the minimum
    /// eigenvalue before clamping.
    pub fn clamp_psd(m: &CMat) -> (Self, f64) {
        let spec = jacobi(m.hermitian_part());
        let min = spec.min();
        if min >= 0.0 {
            let tr = m.trace().re;
            return (DensityMatrix(m.hermitian_part().scale(1.0 / tr)), min);
        }
        let clipped: Vec<f64> = spec.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        let vals: Vec<f64> = clipped.iter().map(|l| l / total).collect();
        (DensityMatrix(spec.with_values(&vals).hermitian_part()), min)
    }

    pub fn as_mat(&self) -> &CMat {
        &self.0
    }

    pub fn into_mat(self) -> CMat {
        self.0
    }

    pub fn purity(&self) -> f64 {
        self.0.trace_product(&self.0).re
    }

    /// Spectrum with tiny negative eigenvalues clamped and the trace renormalised.
    pub fn clamped_spectrum(&self) -> Spectrum {
        let mut spec = jacobi(self.0.clone());
        let total: f64 = spec.eigenvalues.iter().map(|l| l.max(0.0)).sum();
        for l in spec.eigenvalues.iter_mut() {
            *l = l.max(0.0) / total;
        }
        spec
    }

    /// `ln(rho)` on the support; eigenvalues at or below `ZERO_EIG` map to 0.
    pub fn log_on_support(&self) -> CMat {
        self.clamped_spectrum().map(|l| if l > ZERO_EIG { l.ln() } else { 0.0 })
    }
}

impl Deref for DensityMatrix {
    type Target = CMat;
    fn deref(&self) -> &CMat {
        &self.0
    }
}

/// Von Neumann entropy in nats: `-sum lambda ln lambda` over eigenvalues above `ZERO_EIG`.
pub fn vn_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of(&rho.clamped_spectrum().eigenvalues)
}

pub(crate) fn entropy_of(eigs: &[f64]) -> f64 {
    let s: f64 = eigs.iter().filter(|&&l| l > ZERO_EIG).map(|&l| -l * l.ln()).sum();
    s.max(0.0)
}

/// `S(rho || sigma) = Tr(rho ln rho - rho ln sigma)` in nats.
pub fn rel_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "relative entropy of {}x{} and {}x{} states",
            rho.dim(),
            rho.dim(),
            sigma.dim(),
            sigma.dim()
        )));
    }
    let sspec = sigma.clamped_spectrum();
    let weights = sspec.diagonal_of(rho);
    let mut cross = 0.0;
    for (&l, &w) in sspec.eigenvalues.iter().zip(&weights) {
        if l > ZERO_EIG {
            cross += w * l.ln();
        } else if w > ZERO_EIG {
            return Err(Error::DivergentSupport);
        }
    }
    Ok(-vn_entropy(rho) - cross)
}

/// `D(rho, tau) = Tr|rho - tau| / 2`
pub fn trace_distance(rho: &CMat, tau: &CMat) -> f64 {
    let diff = (rho - tau).hermitian_part();
    0.5 * jacobi(diff).eigenvalues.iter().map(|l| l.abs()).sum::<f64>()
}
