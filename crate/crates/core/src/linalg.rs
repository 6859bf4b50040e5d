//! Dense complex matrices: ring operations, LU inversion and the spectral norm.
//!
//! Every value here is immutable once built and every operation is a pure
//! function of its inputs, so matrices can be shared freely across workers.

use std::fmt;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Pivots at or below this fraction of the largest entry are treated as zero.
pub const SINGULAR_PIVOT_RTOL: f64 = 1e-14;
pub const NORM_RTOL: f64 = 1e-12;
pub const NORM_MAX_ITER: usize = 5000;

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for row in self.data.chunks(self.dim) {
            let cells: Vec<String> = row.iter().map(|z| format!("{:.6}", z)).collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries; rejects empty or non-finite input.
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::BadParameter("matrix dimension must be at least 1".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::LengthMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::BadParameter("matrix entries must be finite".into()));
        }
        Ok(ComplexMatrix { dim, data })
    }

    /// Real row-major entries.
    pub fn from_real(dim: usize, data: &[f64]) -> Result<Self> {
        Self::new(dim, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(dim > 0, "matrix dimension must be at least 1");
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { dim, data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| C64::new(0.0, 0.0))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { C64::new(0.0, 0.0) })
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// Jordan block `J_dim(eigenvalue)`: eigenvalue on the diagonal, ones on the superdiagonal.
    pub fn jordan(dim: usize, eigenvalue: C64) -> Self {
        Self::from_fn(dim, |i, j| {
            if i == j {
                eigenvalue
            } else if j == i + 1 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    fn check_dims(&self, other: &ComplexMatrix) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_dims(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_dims(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn mul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_dims(other)?;
        let n = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let dst = &mut out[i * n..(i + 1) * n];
            for (k, &a) in row.iter().enumerate() {
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let other_row = &other.data[k * n..(k + 1) * n];
                for (d, &b) in dst.iter_mut().zip(other_row) {
                    *d += a * b;
                }
            }
        }
        Ok(ComplexMatrix { dim: n, data: out })
    }

    pub fn scale(&self, c: C64) -> ComplexMatrix {
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn scale_real(&self, c: f64) -> ComplexMatrix {
        self.scale(C64::new(c, 0.0))
    }

    /// `lambda * I - self`.
    pub fn shifted_from(&self, lambda: C64) -> ComplexMatrix {
        let n = self.dim;
        ComplexMatrix::from_fn(n, |i, j| {
            let d = if i == j { lambda } else { C64::new(0.0, 0.0) };
            d - self.get(i, j)
        })
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim, |i, j| self.get(j, i))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm; a cheap upper bound on the spectral norm.
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn zip_with(&self, other: &ComplexMatrix, f: impl Fn(C64, C64) -> C64) -> ComplexMatrix {
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    fn mat_vec(&self, v: &[C64]) -> Vec<C64> {
        self.data
            .chunks(self.dim)
            .map(|row| row.iter().zip(v).map(|(&a, &x)| a * x).sum())
            .collect()
    }

    fn adjoint_vec(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (i, row) in self.data.chunks(n).enumerate() {
            let vi = v[i];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.conj() * vi;
            }
        }
        out
    }

    /// JSON literal `{"dim": n, "re": [...], "im": [...]}`, row-major.
    pub fn to_json(&self) -> Value {
        let re: Vec<f64> = self.data.iter().map(|z| z.re).collect();
        let im: Vec<f64> = self.data.iter().map(|z| z.im).collect();
        json!({ "dim": self.dim, "re": re, "im": im })
    }

    /// Parses the JSON literal; `pointer` locates `value` inside its document for error reports.
    pub fn from_json(value: &Value, pointer: &str) -> Result<ComplexMatrix> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::schema(pointer, "expected a matrix object"))?;
        let dim = obj
            .get("dim")
            .and_then(Value::as_u64)
            .filter(|&d| d >= 1)
            .ok_or_else(|| Error::schema(format!("{pointer}/dim"), "expected a positive integer"))?
            as usize;
        let read = |key: &str| -> Result<Vec<f64>> {
            let path = format!("{pointer}/{key}");
            let arr = obj
                .get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::schema(&path, "expected an array of numbers"))?;
            if arr.len() != dim * dim {
                return Err(Error::schema(
                    &path,
                    format!("expected {} entries, found {}", dim * dim, arr.len()),
                ));
            }
            arr.iter()
                .enumerate()
                .map(|(i, x)| {
                    x.as_f64()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::schema(format!("{path}/{i}"), "expected a finite number"))
                })
                .collect()
        };
        let re = read("re")?;
        let im = match obj.get("im") {
            Some(_) => read("im")?,
            None => vec![0.0; dim * dim],
        };
        let data = re.into_iter().zip(im).map(|(r, i)| C64::new(r, i)).collect();
        ComplexMatrix::new(dim, data)
    }
}

/// Selector for [`ring_ops`].
#[derive(Clone, Copy, Debug)]
pub enum RingOp {
    Add,
    Sub,
    Mul,
    Scale(C64),
}

/// Dispatches one ring operation. `Scale` ignores `b`.
pub fn ring_ops(a: &ComplexMatrix, b: &ComplexMatrix, op: RingOp) -> Result<ComplexMatrix> {
    match op {
        RingOp::Add => a.add(b),
        RingOp::Sub => a.sub(b),
        RingOp::Mul => a.mul(b),
        RingOp::Scale(c) => Ok(a.scale(c)),
    }
}

/// `a^n` by binary exponentiation, `a^0 = I`.
pub fn matrix_power(a: &ComplexMatrix, n: u32) -> ComplexMatrix {
    let mut result = ComplexMatrix::identity(a.dim());
    let mut base = a.clone();
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            result = result.mul(&base).expect("same dimension");
        }
        e >>= 1;
        if e > 0 {
            base = base.mul(&base).expect("same dimension");
        }
    }
    result
}

#[derive(Clone, Debug)]
pub enum Inversion {
    Inverse {
        inverse: ComplexMatrix,
        /// `max |a * inverse - I|`.
        residual: f64,
    },
    Singular,
}

impl Inversion {
    pub fn inverse(&self) -> Option<&ComplexMatrix> {
        match self {
            Inversion::Inverse { inverse, .. } => Some(inverse),
            Inversion::Singular => None,
        }
    }

    pub fn into_inverse(self) -> Option<ComplexMatrix> {
        match self {
            Inversion::Inverse { inverse, .. } => Some(inverse),
            Inversion::Singular => None,
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, Inversion::Singular)
    }
}

/// Inverts `a` through LU factorization with partial pivoting.
///
/// Returns [`Inversion::Singular`] as soon as a pivot modulus falls to
/// `SINGULAR_PIVOT_RTOL` times the largest entry of `a` or below.
pub fn solve_inverse(a: &ComplexMatrix) -> Inversion {
    let n = a.dim();
    let scale = a.max_abs();
    let threshold = SINGULAR_PIVOT_RTOL * scale;
    let mut lu = a.data.clone();
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let (p, pivot_abs) =
            (k..n)
                .map(|i| (i, lu[i * n + k].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_abs <= threshold || pivot_abs == 0.0 {
            return Inversion::Singular;
        }
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        let pivot = lu[k * n + k];
        for i in k + 1..n {
            let factor = lu[i * n + k] / pivot;
            lu[i * n + k] = factor;
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            for j in k + 1..n {
                let u = lu[k * n + j];
                lu[i * n + j] -= factor * u;
            }
        }
    }

    // Solve L U x = P e_j column by column.
    let mut inv = vec![C64::new(0.0, 0.0); n * n];
    let mut col = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        for (i, c) in col.iter_mut().enumerate() {
            *c = if perm[i] == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
        }
        for i in 0..n {
            let mut acc = col[i];
            for k in 0..i {
                acc -= lu[i * n + k] * col[k];
            }
            col[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = col[i];
            for k in i + 1..n {
                acc -= lu[i * n + k] * col[k];
            }
            col[i] = acc / lu[i * n + i];
        }
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }

    let inverse = ComplexMatrix { dim: n, data: inv };
    if !inverse.is_finite() {
        return Inversion::Singular;
    }
    let residual = a
        .mul(&inverse)
        .expect("same dimension")
        .sub(&ComplexMatrix::identity(n))
        .expect("same dimension")
        .max_abs();
    Inversion::Inverse { inverse, residual }
}

/// Spectral norm estimate with its convergence diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Largest singular value by power iteration on `aᴴa`.
///
/// Starts from the normalized all-ones vector. If that start lands in an
/// invariant subspace below the largest column norm (a hard lower bound on the
/// norm), the iteration is rerun from the dominant column's unit vector and the
/// larger estimate is kept.
pub fn operator_norm(a: &ComplexMatrix) -> NormEstimate {
    let n = a.dim();
    if a.max_abs() == 0.0 {
        return NormEstimate {
            value: 0.0,
            converged: true,
            iterations: 0,
        };
    }
    let ones = vec![C64::new(1.0 / (n as f64).sqrt(), 0.0); n];
    let first = power_iterate(a, ones);

    let (best_col, col_norm) = (0..n)
        .map(|j| {
            let s: f64 = (0..n).map(|i| a.get(i, j).norm_sqr()).sum();
            (j, s.sqrt())
        })
        .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    if first.value >= col_norm * (1.0 - 1e-10) {
        return first;
    }
    let mut e = vec![C64::new(0.0, 0.0); n];
    e[best_col] = C64::new(1.0, 0.0);
    let second = power_iterate(a, e);
    NormEstimate {
        iterations: first.iterations + second.iterations,
        ..if second.value >= first.value { second } else { first }
    }
}

/// Convenience wrapper returning only the value.
pub fn norm2(a: &ComplexMatrix) -> f64 {
    operator_norm(a).value
}

fn power_iterate(a: &ComplexMatrix, start: Vec<C64>) -> NormEstimate {
    let mut v = start;
    let mut prev = 0.0;
    let mut rayleigh = 0.0;
    for it in 1..=NORM_MAX_ITER {
        let av = a.mat_vec(&v);
        // Rayleigh quotient of aᴴa at the unit vector v.
        rayleigh = av.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let w = a.adjoint_vec(&av);
        let wn = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if wn == 0.0 {
            return NormEstimate {
                value: rayleigh.sqrt(),
                converged: true,
                iterations: it,
            };
        }
        v = w.into_iter().map(|z| z / wn).collect();
        if it > 1 && (rayleigh - prev).abs() <= NORM_RTOL * rayleigh {
            return NormEstimate {
                value: rayleigh.sqrt(),
                converged: true,
                iterations: it,
            };
        }
        prev = rayleigh;
    }
    NormEstimate {
        value: rayleigh.sqrt(),
        converged: false,
        iterations: NORM_MAX_ITER,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn additive_inverse_is_zero() {
        let i2 = ComplexMatrix::identity(2);
        let sum = ring_ops(&i2, &i2.scale_real(-1.0), RingOp::Add).unwrap();
        assert_eq!(sum, ComplexMatrix::zeros(2));
    }

    #[test]
    fn jordan_two_squares_to_zero() {
        let j = ComplexMatrix::jordan(2, c(0.0));
        assert_eq!(ring_ops(&j, &j, RingOp::Mul).unwrap(), ComplexMatrix::zeros(2));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::identity(3);
        assert!(matches!(a.mul(&b), Err(Error::DimensionMismatch { left: 2, right: 3 })));
    }

    #[test]
    fn powers() {
        let a = ComplexMatrix::from_real(2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(matrix_power(&a, 0), ComplexMatrix::identity(2));
        assert_eq!(
            matrix_power(&ComplexMatrix::jordan(3, c(0.0)), 3),
            ComplexMatrix::zeros(3)
        );
        assert_eq!(
            matrix_power(&ComplexMatrix::from_real_diag(&[2.0, 3.0]), 5),
            ComplexMatrix::from_real_diag(&[32.0, 243.0])
        );
    }

    #[test]
    fn inverse_examples() {
        let inv = solve_inverse(&ComplexMatrix::identity(4));
        assert_eq!(inv.inverse().unwrap(), &ComplexMatrix::identity(4));
        assert!(solve_inverse(&ComplexMatrix::jordan(2, c(0.0))).is_singular());
        assert!(solve_inverse(&ComplexMatrix::zeros(3)).is_singular());
        let d = solve_inverse(&ComplexMatrix::from_real_diag(&[1.0, 2.0]));
        assert_eq!(d.inverse().unwrap(), &ComplexMatrix::from_real_diag(&[1.0, 0.5]));
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = ComplexMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        match solve_inverse(&a) {
            Inversion::Inverse { inverse, residual } => {
                assert_eq!(inverse, a);
                assert!(residual < 1e-15);
            }
            Inversion::Singular => panic!("permutation matrix is invertible"),
        }
    }

    #[test]
    fn norm_examples() {
        let d = ComplexMatrix::from_real_diag(&[1.0, -3.0]);
        assert!((norm2(&d) - 3.0).abs() < 1e-12);
        assert_eq!(norm2(&ComplexMatrix::zeros(3)), 0.0);
    }

    #[test]
    fn norm_escapes_null_start_vector() {
        // a * ones = 0 but ||a|| = 2.
        let a = ComplexMatrix::from_real(2, &[1.0, -1.0, 1.0, -1.0]).unwrap();
        let est = operator_norm(&a);
        assert!((est.value - 2.0).abs() < 1e-12, "{est:?}");
        assert!(est.converged);
    }

    #[test]
    fn json_literal_round_trip() {
        let a = ComplexMatrix::new(2, vec![C64::new(1.0, -1.0), c(2.0), c(0.5), C64::new(0.0, 3.0)]).unwrap();
        let back = ComplexMatrix::from_json(&a.to_json(), "").unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn json_literal_errors_carry_pointer() {
        let v = json!({"dim": 2, "re": [1.0, 2.0, 3.0]});
        match ComplexMatrix::from_json(&v, "/node/matrix") {
            Err(Error::Schema { pointer, .. }) => assert_eq!(pointer, "/node/matrix/re"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_finite_entries() {
        assert!(ComplexMatrix::new(1, vec![C64::new(f64::NAN, 0.0)]).is_err());
        assert!(ComplexMatrix::new(0, vec![]).is_err());
    }
}
