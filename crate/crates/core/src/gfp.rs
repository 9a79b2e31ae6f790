//! Arithmetic and dense linear algebra over a prime field F_p.
//!
//! Elements are stored as machine integers reduced after every operation.
//! The modulus is limited to primes below 2^16 so that every product fits
//! comfortably in a `u64` before reduction.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible modulus (exclusive).
pub const MAX_PRIME: u32 = 1 << 16;

/// A validated prime modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Prime(u32);

impl Prime {
    /// Validates primality by trial division.
    pub fn new(p: u32) -> Result<Self> {
        if p >= MAX_PRIME {
            return Err(Error::Domain(format!(
                "modulus {p} must be below {MAX_PRIME}"
            )));
        }
        if !is_prime(p) {
            return Err(Error::Domain(format!("modulus {p} is not prime")));
        }
        Ok(Prime(p))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn as_usize(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn reduce(self, v: u64) -> u32 {
        (v % self.0 as u64) as u32
    }

    /// Reduces a signed integer into `[0, p)`.
    #[inline]
    pub fn reduce_signed(self, v: i64) -> u32 {
        v.rem_euclid(self.0 as i64) as u32
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.0 {
            s - self.0
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.0 - b
        }
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.0 as u64) as u32
    }

    pub fn pow(self, mut base: u32, mut exp: u64) -> u32 {
        let mut acc = 1 % self.0;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(self, a: u32) -> Result<u32> {
        if a.is_multiple_of(self.0) {
            return Err(Error::Domain(format!("inverse of zero in F_{}", self.0)));
        }
        Ok(self.pow(a, self.0 as u64 - 2))
    }
}

impl TryFrom<u32> for Prime {
    type Error = Error;
    fn try_from(p: u32) -> Result<Self> {
        Prime::new(p)
    }
}

impl From<Prime> for u32 {
    fn from(p: Prime) -> u32 {
        p.0
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// An element of F_p carrying its modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fp {
    value: u32,
    prime: Prime,
}

impl Fp {
    pub fn new(value: u64, prime: Prime) -> Self {
        Fp {
            value: prime.reduce(value),
            prime,
        }
    }

    pub fn zero(prime: Prime) -> Self {
        Fp { value: 0, prime }
    }

    pub fn one(prime: Prime) -> Self {
        Fp::new(1, prime)
    }

    #[inline]
    pub fn value(self) -> u32 {
        self.value
    }

    #[inline]
    pub fn prime(self) -> Prime {
        self.prime
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    pub fn inv(self) -> Result<Fp> {
        Ok(Fp {
            value: self.prime.inv(self.value)?,
            prime: self.prime,
        })
    }

    pub fn pow(self, exp: u64) -> Fp {
        Fp {
            value: self.prime.pow(self.value, exp),
            prime: self.prime,
        }
    }

    fn same_field(self, other: Fp) -> Result<()> {
        if self.prime != other.prime {
            return Err(Error::Domain(format!(
                "modulus mismatch: F_{} vs F_{}",
                self.prime, other.prime
            )));
        }
        Ok(())
    }

    pub fn checked_add(self, rhs: Fp) -> Result<Fp> {
        self.same_field(rhs)?;
        Ok(Fp {
            value: self.prime.add(self.value, rhs.value),
            prime: self.prime,
        })
    }

    pub fn checked_sub(self, rhs: Fp) -> Result<Fp> {
        self.same_field(rhs)?;
        Ok(Fp {
            value: self.prime.sub(self.value, rhs.value),
            prime: self.prime,
        })
    }

    pub fn checked_mul(self, rhs: Fp) -> Result<Fp> {
        self.same_field(rhs)?;
        Ok(Fp {
            value: self.prime.mul(self.value, rhs.value),
            prime: self.prime,
        })
    }
}

// Operator impls panic on a modulus mismatch; use the `checked_*` forms
// when the operands come from different sources.
impl Add for Fp {
    type Output = Fp;
    fn add(self, rhs: Fp) -> Fp {
        self.checked_add(rhs).expect("field addition")
    }
}

impl Sub for Fp {
    type Output = Fp;
    fn sub(self, rhs: Fp) -> Fp {
        self.checked_sub(rhs).expect("field subtraction")
    }
}

impl Mul for Fp {
    type Output = Fp;
    fn mul(self, rhs: Fp) -> Fp {
        self.checked_mul(rhs).expect("field multiplication")
    }
}

impl Neg for Fp {
    type Output = Fp;
    fn neg(self) -> Fp {
        Fp {
            value: self.prime.neg(self.value),
            prime: self.prime,
        }
    }
}

impl fmt::Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Evaluates `c[0] + c[1] x + ... + c[k-1] x^(k-1)` by Horner's rule.
pub fn poly_eval(coeffs: &[Fp], x: Fp) -> Result<Fp> {
    if coeffs.is_empty() {
        return Err(Error::Domain("polynomial has no coefficients".into()));
    }
    let mut acc = Fp::zero(x.prime());
    for &c in coeffs.iter().rev() {
        acc = acc.checked_mul(x)?.checked_add(c)?;
    }
    Ok(acc)
}

/// Raw-value variant of [`poly_eval`] used on hot paths.
pub fn poly_eval_raw(prime: Prime, coeffs: &[u32], x: u32) -> u32 {
    coeffs
        .iter()
        .rev()
        .fold(0, |acc, &c| prime.add(prime.mul(acc, x), c))
}

/// Euclidean inner product of two raw vectors.
pub fn dot(prime: Prime, a: &[u32], b: &[u32]) -> u32 {
    debug_assert_eq!(a.len(), b.len());
    let s: u64 = a.iter().zip(b).map(|(&x, &y)| x as u64 * y as u64).sum();
    prime.reduce(s)
}

/// Dense row-major matrix over F_p.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    prime: Prime,
    data: Vec<u32>,
}

/// Output of [`Matrix::rref`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rref {
    pub matrix: Matrix,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

impl Matrix {
    pub fn zeros(prime: Prime, rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            prime,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(prime: Prime, n: usize) -> Self {
        let mut m = Matrix::zeros(prime, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % prime.get();
        }
        m
    }

    /// Builds a matrix from raw rows, reducing entries mod p.
    pub fn from_rows<R: AsRef<[u32]>>(prime: Prime, cols: usize, rows: &[R]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Domain(format!(
                    "row {i} has length {}, expected {cols}",
                    r.len()
                )));
            }
            data.extend(r.iter().map(|&v| v % prime.get()));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            prime,
            data,
        })
    }

    /// Builds a matrix from field elements; all entries must share one modulus.
    pub fn from_elements(rows: &[Vec<Fp>]) -> Result<Self> {
        let first = rows
            .iter()
            .flat_map(|r| r.iter())
            .next()
            .ok_or_else(|| Error::Domain("cannot infer modulus of an empty matrix".into()))?;
        let prime = first.prime();
        let cols = rows[0].len();
        let mut raw = Vec::with_capacity(rows.len());
        for r in rows {
            if r.iter().any(|e| e.prime() != prime) {
                return Err(Error::Domain(
                    "matrix entries do not share one modulus".into(),
                ));
            }
            raw.push(r.iter().map(|e| e.value()).collect::<Vec<_>>());
        }
        Matrix::from_rows(prime, cols, &raw)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn prime(&self) -> Prime {
        self.prime
    }

    pub fn get(&self, r: usize, c: usize) -> Fp {
        Fp {
            value: self.data[r * self.cols + c],
            prime: self.prime,
        }
    }

    #[inline]
    pub fn raw(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u32) {
        self.data[r * self.cols + c] = v % self.prime.get();
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[u32]> {
        (0..self.rows).map(move |r| self.row(r))
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        self.row_iter().map(<[u32]>::to_vec).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.prime, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows || self.prime != other.prime {
            return Err(Error::Domain(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let p = self.prime;
        let mut out = Matrix::zeros(p, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let s: u64 = (0..self.cols)
                    .map(|t| self.raw(i, t) as u64 * other.raw(t, j) as u64)
                    .sum();
                out.data[i * other.cols + j] = p.reduce(s);
            }
        }
        Ok(out)
    }

    /// `self · v` for a column vector `v`.
    pub fn mul_vec(&self, v: &[u32]) -> Result<Vec<u32>> {
        if v.len() != self.cols {
            return Err(Error::Domain(format!(
                "vector length {} does not match {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok(self.row_iter().map(|r| dot(self.prime, r, v)).collect())
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols || self.prime != other.prime {
            return Err(Error::Domain("vstack needs equal column counts".into()));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Matrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            prime: self.prime,
            data,
        })
    }

    /// Keeps the listed columns, in order.
    pub fn select_columns(&self, keep: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(self.prime, self.rows, keep.len());
        for r in 0..self.rows {
            for (j, &c) in keep.iter().enumerate() {
                m.data[r * keep.len() + j] = self.raw(r, c);
            }
        }
        m
    }

    pub fn select_rows(&self, keep: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(keep.len() * self.cols);
        for &r in keep {
            data.extend_from_slice(self.row(r));
        }
        Matrix {
            rows: keep.len(),
            cols: self.cols,
            prime: self.prime,
            data,
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Reduced row echelon form by Gauss-Jordan elimination.
    pub fn rref(&self) -> Rref {
        let p = self.prime;
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(pr) = (row..m.rows).find(|&r| m.raw(r, col) != 0) else {
                continue;
            };
            m.swap_rows(row, pr);
            let inv = p.inv(m.raw(row, col)).expect("pivot is nonzero");
            for c in col..m.cols {
                let v = m.raw(row, c);
                m.data[row * m.cols + c] = p.mul(v, inv);
            }
            for r in 0..m.rows {
                let f = m.raw(r, col);
                if r == row || f == 0 {
                    continue;
                }
                for c in col..m.cols {
                    let v = p.sub(m.raw(r, c), p.mul(f, m.raw(row, c)));
                    m.data[r * m.cols + c] = v;
                }
            }
            pivots.push(col);
            row += 1;
        }
        Rref {
            rank: pivots.len(),
            matrix: m,
            pivots,
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().rank
    }

    /// The nonzero rows of the reduced row echelon form.
    pub fn row_basis(&self) -> Matrix {
        let r = self.rref();
        r.matrix.select_rows(&(0..r.rank).collect::<Vec<_>>())
    }

    /// Basis (as rows) of the right kernel `{x : self · x = 0}`.
    pub fn nullspace(&self) -> Matrix {
        let p = self.prime;
        let Rref { matrix, pivots, .. } = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = Matrix::zeros(p, free.len(), self.cols);
        for (b, &f) in free.iter().enumerate() {
            basis.data[b * self.cols + f] = 1 % p.get();
            for (r, &pc) in pivots.iter().enumerate() {
                basis.data[b * self.cols + pc] = p.neg(matrix.raw(r, f));
            }
        }
        basis
    }

    /// Some solution `x` of `self · x = rhs`, or `None` if the system is inconsistent.
    pub fn solve(&self, rhs: &[u32]) -> Option<Vec<u32>> {
        if rhs.len() != self.rows {
            return None;
        }
        let p = self.prime;
        let mut aug = Matrix::zeros(p, self.rows, self.cols + 1);
        for (r, &b) in rhs.iter().enumerate() {
            for c in 0..self.cols {
                aug.data[r * (self.cols + 1) + c] = self.raw(r, c);
            }
            aug.data[r * (self.cols + 1) + self.cols] = b % p.get();
        }
        let Rref { matrix, pivots, .. } = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![0; self.cols];
        for (r, &pc) in pivots.iter().enumerate() {
            x[pc] = matrix.raw(r, self.cols);
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Matrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let p = self.prime;
        let mut aug = Matrix::zeros(p, n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug.data[r * 2 * n + c] = self.raw(r, c);
            }
            aug.data[r * 2 * n + n + r] = 1 % p.get();
        }
        let Rref {
            matrix,
            rank,
            pivots,
        } = aug.rref();
        if rank < n || pivots[n - 1] != n - 1 {
            return None;
        }
        Some(matrix.select_columns(&(n..2 * n).collect::<Vec<_>>()))
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix F_{} {}x{} [", self.prime, self.rows, self.cols)?;
        for r in self.row_iter() {
            writeln!(f, "  {r:?}")?;
        }
        write!(f, "]")
    }
}
