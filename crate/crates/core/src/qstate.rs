//! Dense simulation of qudit registers.
//!
//! Basis index `i` of an `m`-qudit register encodes the digits
//! `(i_1, ..., i_m)` in base `p` with qudit 1 most significant, matching
//! left-to-right tensor notation. Generalized Paulis use `omega = exp(2 pi i / p)`
//! and the single-qudit order `X^x Z^z` (Z acts first).

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gfp::{dot, Prime};
use crate::share_set::ShareSet;

pub type C64 = Complex64;

/// Tolerance for normalization and Hermiticity checks.
pub const STATE_TOL: f64 = 1e-10;

/// Reduced systems up to this dimension get an exact eigenvalue-based
/// trace distance in [`factorization_distance`].
pub const EXACT_DIM_LIMIT: usize = 1024;

const ZERO: C64 = C64::new(0.0, 0.0);

/// `omega^t` for `t = 0..p`.
pub fn omega_powers(p: Prime) -> Vec<C64> {
    let p = p.get() as f64;
    (0..p as usize)
        .map(|t| C64::from_polar(1.0, 2.0 * PI * t as f64 / p))
        .collect()
}

/// The exponent `t` with `omega^t` closest to `z`, for `z` near the unit circle.
pub fn nearest_root_exponent(p: Prime, z: C64) -> u32 {
    let turns = z.arg() / (2.0 * PI) * p.get() as f64;
    (turns.round() as i64).rem_euclid(p.get() as i64) as u32
}

fn pow_usize(p: Prime, e: usize) -> usize {
    p.as_usize().pow(e as u32)
}

/// Base-`p` digits of `index` over `m` qudits, most significant first.
pub fn digits_of(p: Prime, m: usize, mut index: usize) -> Vec<u32> {
    let mut d = vec![0u32; m];
    for q in (0..m).rev() {
        d[q] = (index % p.as_usize()) as u32;
        index /= p.as_usize();
    }
    d
}

/// Basis index of the ket with the given digits.
pub fn basis_index(p: Prime, digits: &[u32]) -> usize {
    digits
        .iter()
        .fold(0usize, |acc, &d| acc * p.as_usize() + d as usize)
}

/// Formats a basis index in base `p`, one character per digit when `p <= 36`.
pub fn format_index(p: Prime, m: usize, index: usize) -> String {
    let d = digits_of(p, m, index);
    if p.get() <= 36 {
        d.iter()
            .map(|&x| char::from_digit(x, 36).expect("digit below 36"))
            .collect()
    } else {
        d.iter().map(u32::to_string).collect::<Vec<_>>().join(".")
    }
}

/// A normalized pure state of `m` qudits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    p: Prime,
    num_qudits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(p: Prime, num_qudits: usize, amps: Vec<C64>) -> Result<Self> {
        let s = StateVector::unchecked(p, num_qudits, amps)?;
        let norm = s.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::Domain(format!("state norm {norm} is not 1")));
        }
        Ok(s)
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(p: Prime, num_qudits: usize, amps: Vec<C64>) -> Result<Self> {
        let mut s = StateVector::unchecked(p, num_qudits, amps)?;
        let norm = s.norm();
        if norm < 1e-300 {
            return Err(Error::Domain("cannot normalize the zero vector".into()));
        }
        s.amps.iter_mut().for_each(|a| *a /= norm);
        Ok(s)
    }

    fn unchecked(p: Prime, num_qudits: usize, amps: Vec<C64>) -> Result<Self> {
        let dim = pow_usize(p, num_qudits);
        if amps.len() != dim {
            return Err(Error::Domain(format!(
                "{} amplitudes given for {num_qudits} qudits of dimension {p}",
                amps.len()
            )));
        }
        Ok(StateVector {
            p,
            num_qudits,
            amps,
        })
    }

    /// The computational basis ket `|d_1, ..., d_m>`.
    pub fn basis(p: Prime, digits: &[u32]) -> Result<Self> {
        if let Some(&d) = digits.iter().find(|&&d| d >= p.get()) {
            return Err(Error::Domain(format!("digit {d} outside F_{p}")));
        }
        let mut amps = vec![ZERO; pow_usize(p, digits.len())];
        amps[basis_index(p, digits)] = C64::new(1.0, 0.0);
        Ok(StateVector {
            p,
            num_qudits: digits.len(),
            amps,
        })
    }

    pub fn p(&self) -> Prime {
        self.p
    }

    pub fn num_qudits(&self) -> usize {
        self.num_qudits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, digits: &[u32]) -> C64 {
        self.amps[basis_index(self.p, digits)]
    }

    pub fn digits(&self, index: usize) -> Vec<u32> {
        digits_of(self.p, self.num_qudits, index)
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Basis kets with amplitude magnitude above `tol`, as digit vectors.
    pub fn support(&self, tol: f64) -> Vec<Vec<u32>> {
        self.amps
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > tol)
            .map(|(i, _)| self.digits(i))
            .collect()
    }

    fn same_shape(&self, other: &StateVector) -> Result<()> {
        if self.p != other.p || self.num_qudits != other.num_qudits {
            return Err(Error::Domain(format!(
                "state shapes differ: {} qudits of dim {} vs {} of dim {}",
                self.num_qudits, self.p, other.num_qudits, other.p
            )));
        }
        Ok(())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.same_shape(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Largest amplitude-wise deviation; zero only when the states agree
    /// including global phase.
    pub fn max_abs_diff(&self, other: &StateVector) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `|self> (x) |other>`, with `self` on the leading qudits.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        if self.p != other.p {
            return Err(Error::Domain("tensor of different qudit dimensions".into()));
        }
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        Ok(StateVector {
            p: self.p,
            num_qudits: self.num_qudits + other.num_qudits,
            amps,
        })
    }

    pub fn to_density(&self) -> DensityMatrix {
        let v = nalgebra::DVector::from_column_slice(&self.amps);
        DensityMatrix {
            p: self.p,
            num_qudits: self.num_qudits,
            data: &v * v.adjoint(),
        }
    }

    /// Reshapes into a `dim(keep) x dim(rest)` matrix. `keep` holds
    /// zero-based qudit positions; their order fixes the row digit order,
    /// the remaining qudits keep their natural order.
    pub fn bipartition(&self, keep: &[usize]) -> DMatrix<C64> {
        let (rows_of, cols_of, rdim, cdim) = split_indices(self.p, self.num_qudits, keep);
        let mut m = DMatrix::zeros(rdim, cdim);
        for (i, a) in self.amps.iter().enumerate() {
            m[(rows_of[i], cols_of[i])] = *a;
        }
        m
    }

    /// Reduced state on the qudits at zero-based `keep`, in that order.
    pub fn reduced_ordered(&self, keep: &[usize]) -> DensityMatrix {
        let m = self.bipartition(keep);
        DensityMatrix {
            p: self.p,
            num_qudits: keep.len(),
            data: &m * m.adjoint(),
        }
    }

    /// Reduced state on the (1-based) qudits of `keep`.
    pub fn reduced(&self, keep: &ShareSet) -> Result<DensityMatrix> {
        self.check_subsystem(keep)?;
        Ok(self.reduced_ordered(&keep.positions()))
    }

    /// `Tr rho_keep^2`, computed on whichever side of the cut is smaller.
    pub fn purity(&self, keep: &[usize]) -> f64 {
        let m = self.bipartition(keep);
        let g = if m.nrows() <= m.ncols() {
            &m * m.adjoint()
        } else {
            m.adjoint() * &m
        };
        g.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `(rho_keep (x) I) |self>` in the original index layout.
    fn apply_own_reduced(&self, keep: &[usize]) -> Vec<C64> {
        let (rows_of, cols_of, _, _) = split_indices(self.p, self.num_qudits, keep);
        let m = self.bipartition(keep);
        let out = if m.nrows() <= m.ncols() {
            (&m * m.adjoint()) * &m
        } else {
            &m * (m.adjoint() * &m)
        };
        (0..self.dim())
            .map(|i| out[(rows_of[i], cols_of[i])])
            .collect()
    }

    fn check_subsystem(&self, keep: &ShareSet) -> Result<()> {
        if keep.universe() != self.num_qudits {
            return Err(Error::Domain(format!(
                "subsystem over {} qudits applied to a {}-qudit state",
                keep.universe(),
                self.num_qudits
            )));
        }
        Ok(())
    }

    /// Writes `index_base_p TAB re TAB im` lines, skipping amplitudes below 1e-12.
    pub fn write_dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (i, a) in self.amps.iter().enumerate() {
            if a.norm() < 1e-12 {
                continue;
            }
            writeln!(
                w,
                "{}\t{:.15e}\t{:.15e}",
                format_index(self.p, self.num_qudits, i),
                a.re,
                a.im
            )?;
        }
        Ok(())
    }
}

/// For every basis index: its row (kept digits) and column (other digits)
/// in the bipartition matrix.
fn split_indices(p: Prime, m: usize, keep: &[usize]) -> (Vec<usize>, Vec<usize>, usize, usize) {
    let rest: Vec<usize> = (0..m).filter(|q| !keep.contains(q)).collect();
    let dim = pow_usize(p, m);
    let mut rows_of = vec![0usize; dim];
    let mut cols_of = vec![0usize; dim];
    let pp = p.as_usize();
    let mut digits = vec![0usize; m];
    for i in 0..dim {
        rows_of[i] = keep.iter().fold(0, |acc, &q| acc * pp + digits[q]);
        cols_of[i] = rest.iter().fold(0, |acc, &q| acc * pp + digits[q]);
        for q in (0..m).rev() {
            digits[q] += 1;
            if digits[q] < pp {
                break;
            }
            digits[q] = 0;
        }
    }
    (
        rows_of,
        cols_of,
        pow_usize(p, keep.len()),
        pow_usize(p, rest.len()),
    )
}

/// `|<a|b>|^2`.
pub fn fidelity_pure(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// A density operator on `m` qudits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    p: Prime,
    num_qudits: usize,
    data: DMatrix<C64>,
}

impl DensityMatrix {
    /// Checks shape, Hermiticity and unit trace.
    pub fn new(p: Prime, num_qudits: usize, data: DMatrix<C64>) -> Result<Self> {
        let dim = pow_usize(p, num_qudits);
        if data.nrows() != dim || data.ncols() != dim {
            return Err(Error::Domain(format!(
                "{}x{} matrix for {num_qudits} qudits of dimension {p}",
                data.nrows(),
                data.ncols()
            )));
        }
        let rho = DensityMatrix {
            p,
            num_qudits,
            data,
        };
        let herm = (&rho.data - rho.data.adjoint()).camax();
        if herm > STATE_TOL {
            return Err(Error::Domain(format!("not Hermitian (deviation {herm})")));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::Domain(format!("trace {tr} is not 1")));
        }
        Ok(rho)
    }

    /// `I / p^m`.
    pub fn maximally_mixed(p: Prime, num_qudits: usize) -> Self {
        let dim = pow_usize(p, num_qudits);
        DensityMatrix {
            p,
            num_qudits,
            data: DMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0),
        }
    }

    pub fn p(&self) -> Prime {
        self.p
    }

    pub fn num_qudits(&self) -> usize {
        self.num_qudits
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        self.data.trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.data
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect()
    }

    /// `self (x) other`, with `self` on the leading qudits.
    pub fn kron(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        if self.p != other.p {
            return Err(Error::Domain("kron of different qudit dimensions".into()));
        }
        Ok(DensityMatrix {
            p: self.p,
            num_qudits: self.num_qudits + other.num_qudits,
            data: self.data.kronecker(&other.data),
        })
    }

    /// Traces out every qudit not in `keep` (1-based).
    pub fn partial_trace(&self, keep: &ShareSet) -> Result<DensityMatrix> {
        if keep.universe() != self.num_qudits {
            return Err(Error::Domain(format!(
                "subsystem over {} qudits applied to a {}-qudit operator",
                keep.universe(),
                self.num_qudits
            )));
        }
        let (rows_of, cols_of, kdim, rdim) =
            split_indices(self.p, self.num_qudits, &keep.positions());
        // full index for each (kept, traced) pair
        let mut full = vec![0usize; kdim * rdim];
        for i in 0..self.dim() {
            full[rows_of[i] * rdim + cols_of[i]] = i;
        }
        let mut out = DMatrix::zeros(kdim, kdim);
        for a in 0..kdim {
            for b in 0..kdim {
                out[(a, b)] = (0..rdim)
                    .map(|r| self.data[(full[a * rdim + r], full[b * rdim + r])])
                    .sum();
            }
        }
        Ok(DensityMatrix {
            p: self.p,
            num_qudits: keep.len(),
            data: out,
        })
    }

    /// Minimum eigenvalue must exceed `-1e-9`.
    pub fn is_positive_semidefinite(&self) -> bool {
        self.eigenvalues().iter().all(|&l| l >= -1e-9)
    }
}

/// `(1/2) sum |lambda_i(a - b)|`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.p != b.p || a.num_qudits != b.num_qudits {
        return Err(Error::Domain(
            "trace distance of differently shaped operators".into(),
        ));
    }
    let diff = &a.data - &b.data;
    let half_norm: f64 = diff
        .symmetric_eigenvalues()
        .iter()
        .map(|l| l.abs())
        .sum::<f64>()
        / 2.0;
    Ok(half_norm.min(1.0))
}

/// Bounds on `T(rho_AB, rho_A (x) rho_B)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorizationDistance {
    pub lower: f64,
    pub upper: f64,
    /// Both bounds equal the exact trace distance.
    pub exact: bool,
}

/// Distance between the joint reduced state of `a` and `b` (zero-based,
/// disjoint qudit positions of a pure state) and the product of their
/// marginals.
///
/// Small joint systems get the exact value. Larger ones use the
/// Hilbert-Schmidt norm `h = ||rho_AB - rho_A (x) rho_B||_2`, which gives
/// `h/2 <= T <= sqrt(d_AB) h / 2`; all of its terms are evaluated on the
/// smaller side of each cut so the joint operator is never formed.
pub fn factorization_distance(
    state: &StateVector,
    a: &[usize],
    b: &[usize],
) -> Result<FactorizationDistance> {
    if a.iter().any(|q| b.contains(q)) {
        return Err(Error::Domain("subsystems overlap".into()));
    }
    if a.iter().chain(b).any(|&q| q >= state.num_qudits) {
        return Err(Error::Domain("subsystem index out of range".into()));
    }
    let ab: Vec<usize> = a.iter().chain(b).copied().collect();
    let d_ab = pow_usize(state.p, ab.len());
    if d_ab <= EXACT_DIM_LIMIT {
        let joint = state.reduced_ordered(&ab);
        let product = state.reduced_ordered(a).kron(&state.reduced_ordered(b))?;
        let t = trace_distance(&joint, &product)?;
        return Ok(FactorizationDistance {
            lower: t,
            upper: t,
            exact: true,
        });
    }
    let purity_ab = state.purity(&ab);
    let purity_a = state.purity(a);
    let purity_b = state.purity(b);
    let ra = state.apply_own_reduced(a);
    let rb = state.apply_own_reduced(b);
    // <psi| rho_A (x) rho_B (x) I |psi> = <(rho_A (x) I) psi | (rho_B (x) I) psi>
    let cross: C64 = ra.iter().zip(&rb).map(|(x, y)| x.conj() * y).sum();
    let hs = (purity_ab - 2.0 * cross.re + purity_a * purity_b)
        .max(0.0)
        .sqrt();
    Ok(FactorizationDistance {
        lower: (hs / 2.0).min(1.0),
        upper: ((d_ab as f64).sqrt() * hs / 2.0).min(1.0),
        exact: false,
    })
}

/// A generalized Pauli `omega^phase X^x_1 Z^z_1 (x) ... (x) X^x_n Z^z_n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliWord {
    p: Prime,
    phase: u32,
    x: Vec<u32>,
    z: Vec<u32>,
}

impl PauliWord {
    pub fn new(p: Prime, phase: u32, x: Vec<u32>, z: Vec<u32>) -> Result<Self> {
        if x.len() != z.len() {
            return Err(Error::Domain(format!(
                "X part has {} qudits, Z part {}",
                x.len(),
                z.len()
            )));
        }
        let red = |v: Vec<u32>| v.into_iter().map(|e| e % p.get()).collect();
        Ok(PauliWord {
            p,
            phase: phase % p.get(),
            x: red(x),
            z: red(z),
        })
    }

    pub fn identity(p: Prime, n: usize) -> Self {
        PauliWord {
            p,
            phase: 0,
            x: vec![0; n],
            z: vec![0; n],
        }
    }

    pub fn x_type(p: Prime, x: Vec<u32>) -> Self {
        let n = x.len();
        PauliWord::new(p, 0, x, vec![0; n]).expect("lengths agree")
    }

    pub fn z_type(p: Prime, z: Vec<u32>) -> Self {
        let n = z.len();
        PauliWord::new(p, 0, vec![0; n], z).expect("lengths agree")
    }

    pub fn p(&self) -> Prime {
        self.p
    }

    pub fn num_qudits(&self) -> usize {
        self.x.len()
    }

    pub fn phase(&self) -> u32 {
        self.phase
    }

    pub fn x(&self) -> &[u32] {
        &self.x
    }

    pub fn z(&self) -> &[u32] {
        &self.z
    }

    pub fn with_phase(mut self, phase: u32) -> Self {
        self.phase = phase % self.p.get();
        self
    }

    /// 1-based qudits on which the word acts nontrivially.
    pub fn support(&self) -> Vec<usize> {
        (0..self.x.len())
            .filter(|&i| self.x[i] != 0 || self.z[i] != 0)
            .map(|i| i + 1)
            .collect()
    }

    fn same_shape(&self, other: &PauliWord) -> Result<()> {
        if self.p != other.p || self.x.len() != other.x.len() {
            return Err(Error::Domain(
                "Pauli words act on different registers".into(),
            ));
        }
        Ok(())
    }

    /// `z_a . x_b - z_b . x_a mod p`; zero exactly when the words commute.
    pub fn symplectic_product(&self, other: &PauliWord) -> Result<u32> {
        self.same_shape(other)?;
        let p = self.p;
        Ok(p.sub(dot(p, &self.z, &other.x), dot(p, &other.z, &self.x)))
    }

    pub fn commutes_with(&self, other: &PauliWord) -> Result<bool> {
        Ok(self.symplectic_product(other)? == 0)
    }

    /// Group product `self * other` with exact phase:
    /// `X^x Z^z X^x' Z^z' = omega^(z.x') X^(x+x') Z^(z+z')`.
    pub fn product(&self, other: &PauliWord) -> Result<PauliWord> {
        self.same_shape(other)?;
        let p = self.p;
        let commute_phase = dot(p, &self.z, &other.x);
        Ok(PauliWord {
            p,
            phase: p.add(p.add(self.phase, other.phase), commute_phase),
            x: self
                .x
                .iter()
                .zip(&other.x)
                .map(|(&a, &b)| p.add(a, b))
                .collect(),
            z: self
                .z
                .iter()
                .zip(&other.z)
                .map(|(&a, &b)| p.add(a, b))
                .collect(),
        })
    }

    pub fn pow(&self, t: u32) -> PauliWord {
        let mut acc = PauliWord::identity(self.p, self.num_qudits());
        for _ in 0..t % self.p.get() {
            acc = acc.product(self).expect("same shape");
        }
        acc
    }

    /// Applies the operator to a state.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.p != self.p || state.num_qudits != self.num_qudits() {
            return Err(Error::Domain(format!(
                "{}-qudit Pauli applied to a {}-qudit state",
                self.num_qudits(),
                state.num_qudits
            )));
        }
        let p = self.p;
        let pp = p.as_usize();
        let m = state.num_qudits;
        let omega = omega_powers(p);
        let mut out = vec![ZERO; state.dim()];
        let mut digits = vec![0u32; m];
        for a in state.amps.iter() {
            if *a != ZERO {
                let mut target = 0usize;
                let mut exp = self.phase as u64;
                for ((&d, &x), &z) in digits.iter().zip(&self.x).zip(&self.z) {
                    exp += z as u64 * d as u64;
                    target = target * pp + p.add(d, x) as usize;
                }
                out[target] = omega[p.reduce(exp) as usize] * a;
            }
            for q in (0..m).rev() {
                digits[q] += 1;
                if (digits[q] as usize) < pp {
                    break;
                }
                digits[q] = 0;
            }
        }
        Ok(StateVector {
            p,
            num_qudits: m,
            amps: out,
        })
    }
}

impl fmt::Display for PauliWord {
    /// `X^(..)`, `Z^(..)` or `w^t X^(..) Z^(..)`, omitting trivial factors.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
        let mut parts = Vec::new();
        if self.phase != 0 {
            parts.push(format!("w^{}", self.phase));
        }
        if self.x.iter().any(|&v| v != 0) {
            parts.push(format!("X^({})", join(&self.x)));
        }
        if self.z.iter().any(|&v| v != 0) {
            parts.push(format!("Z^({})", join(&self.z)));
        }
        if parts.is_empty() {
            return write!(f, "I");
        }
        write!(f, "{}", parts.join(" "))
    }
}

/// `w|s>`.
pub fn apply_pauli(w: &PauliWord, s: &StateVector) -> Result<StateVector> {
    w.apply(s)
}

/// `a * b` in the Pauli group.
pub fn pauli_product(a: &PauliWord, b: &PauliWord) -> Result<PauliWord> {
    a.product(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pr(p: u32) -> Prime {
        Prime::new(p).unwrap()
    }

    /// Dense matrix of a Pauli word built from the single-qudit definitions.
    fn dense(w: &PauliWord) -> DMatrix<C64> {
        let p = w.p();
        let d = p.as_usize();
        let omega = |t: u32| C64::from_polar(1.0, 2.0 * PI * t as f64 / d as f64);
        let mut acc = DMatrix::from_element(1, 1, omega(w.phase()));
        for q in 0..w.num_qudits() {
            let mut xm = DMatrix::<C64>::zeros(d, d);
            let mut zm = DMatrix::<C64>::zeros(d, d);
            for i in 0..d {
                xm[((i + 1) % d, i)] = C64::new(1.0, 0.0);
                zm[(i, i)] = omega(i as u32);
            }
            let xq = (0..w.x()[q]).fold(DMatrix::identity(d, d), |m, _| &xm * m);
            let zq = (0..w.z()[q]).fold(DMatrix::identity(d, d), |m, _| &zm * m);
            acc = acc.kronecker(&(xq * zq));
        }
        acc
    }

    fn close(a: &DMatrix<C64>, b: &DMatrix<C64>) -> bool {
        (a - b).camax() < 1e-12
    }

    #[test]
    fn x_and_z_definitions() {
        let p = pr(5);
        let x = PauliWord::x_type(p, vec![1]);
        let out = x.apply(&StateVector::basis(p, &[3]).unwrap()).unwrap();
        assert_eq!(out, StateVector::basis(p, &[4]).unwrap());
        let z = PauliWord::z_type(p, vec![1]);
        let out = z.apply(&StateVector::basis(p, &[2]).unwrap()).unwrap();
        let omega2 = C64::from_polar(1.0, 4.0 * PI / 5.0);
        assert!((out.amplitude(&[2]) - omega2).norm() < 1e-15);
    }

    #[test]
    fn z_type_codeword_phase_vanishes() {
        // f(x) = 2 + 3x + x^2 at 1..4 over F_5; (4,3,2,1) is orthogonal to all such words
        let p = pr(5);
        let ket: Vec<u32> = (1..=4u32).map(|a| (2 + 3 * a + a * a) % 5).collect();
        let s = StateVector::basis(p, &ket).unwrap();
        let out = PauliWord::z_type(p, vec![4, 3, 2, 1]).apply(&s).unwrap();
        assert!(out.max_abs_diff(&s).unwrap() < 1e-12);
    }

    #[test]
    fn z_times_x_picks_up_omega() {
        let p = pr(5);
        let z = PauliWord::z_type(p, vec![1]);
        let x = PauliWord::x_type(p, vec![1]);
        let zx = z.product(&x).unwrap();
        assert_eq!(zx, PauliWord::new(p, 1, vec![1], vec![1]).unwrap());
        assert!(close(&dense(&zx), &(dense(&z) * dense(&x))));
        let id = PauliWord::identity(p, 1);
        assert_eq!(zx.product(&id).unwrap(), zx);
    }

    #[test]
    fn product_matches_dense_for_all_single_qudit_pairs() {
        for p in [2, 3, 5] {
            let p = pr(p);
            let d = p.get();
            let words: Vec<PauliWord> = (0..d * d * d)
                .map(|t| PauliWord::new(p, t / (d * d), vec![t % d], vec![(t / d) % d]).unwrap())
                .collect();
            for a in &words {
                for b in &words {
                    let prod = a.product(b).unwrap();
                    assert!(close(&dense(&prod), &(dense(a) * dense(b))));
                }
            }
        }
    }

    #[test]
    fn apply_matches_dense() {
        let p = pr(3);
        let w = PauliWord::new(p, 2, vec![1, 2], vec![2, 1]).unwrap();
        let amps: Vec<C64> = (0..9).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
        let s = StateVector::normalized(p, 2, amps).unwrap();
        let expected = dense(&w) * nalgebra::DVector::from_column_slice(s.amplitudes());
        let got = w.apply(&s).unwrap();
        for (g, e) in got.amplitudes().iter().zip(expected.iter()) {
            assert!((g - e).norm() < 1e-12);
        }
    }

    #[test]
    fn generators_have_order_p() {
        for p in [2, 3, 5, 7] {
            let p = pr(p);
            let x = PauliWord::x_type(p, vec![1]);
            let z = PauliWord::z_type(p, vec![1]);
            for v in 0..p.get() {
                let s = StateVector::basis(p, &[v]).unwrap();
                let mut xs = s.clone();
                let mut zs = s.clone();
                for _ in 0..p.get() {
                    xs = x.apply(&xs).unwrap();
                    zs = z.apply(&zs).unwrap();
                }
                assert!(xs.max_abs_diff(&s).unwrap() < 1e-12);
                assert!(zs.max_abs_diff(&s).unwrap() < 1e-12);
            }
        }
    }

    fn arb_word(p: u32, n: usize) -> impl Strategy<Value = PauliWord> {
        (
            0..p,
            prop::collection::vec(0..p, n),
            prop::collection::vec(0..p, n),
        )
            .prop_map(move |(ph, x, z)| PauliWord::new(pr(p), ph, x, z).unwrap())
    }

    proptest! {
        #[test]
        fn commutation_matches_dense_commutator(
            (a, b) in (1usize..=2).prop_flat_map(|n| (arb_word(3, n), arb_word(3, n)))
        ) {
            let da = dense(&a);
            let db = dense(&b);
            let dense_commute = close(&(&da * &db), &(&db * &da));
            prop_assert_eq!(a.commutes_with(&b).unwrap(), dense_commute);
        }

        #[test]
        fn pauli_action_is_unitary(
            w in arb_word(5, 3),
            raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 125)
        ) {
            let amps: Vec<C64> = raw.into_iter().map(|(r, i)| C64::new(r, i)).collect();
            prop_assume!(amps.iter().any(|a| a.norm() > 1e-3));
            let s = StateVector::normalized(pr(5), 3, amps).unwrap();
            let out = w.apply(&s).unwrap();
            prop_assert!((out.norm() - 1.0).abs() < 1e-12);
        }
    }

    fn bell_pair(p: Prime) -> StateVector {
        let d = p.as_usize();
        let mut amps = vec![ZERO; d * d];
        for t in 0..d {
            amps[t * d + t] = C64::new(1.0, 0.0);
        }
        StateVector::normalized(p, 2, amps).unwrap()
    }

    #[test]
    fn partial_trace_examples() {
        let p = pr(5);
        let a = StateVector::basis(p, &[1]).unwrap();
        let b = StateVector::basis(p, &[3]).unwrap();
        let ab = a.tensor(&b).unwrap().to_density();
        let everything = ShareSet::full(2);
        assert_eq!(ab.partial_trace(&everything).unwrap(), ab);
        let first = ShareSet::new([1], 2).unwrap();
        assert_eq!(ab.partial_trace(&first).unwrap(), a.to_density());

        let bell = bell_pair(p).to_density();
        let half = bell.partial_trace(&first).unwrap();
        assert!((half.matrix() - DensityMatrix::maximally_mixed(p, 1).matrix()).camax() < 1e-15);
        let nothing = bell.partial_trace(&ShareSet::empty(2)).unwrap();
        assert!((nothing.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduced_from_state_agrees_with_partial_trace() {
        let p = pr(3);
        let amps: Vec<C64> = (0..27)
            .map(|i| C64::new((i % 5) as f64 - 2.0, (i % 7) as f64 * 0.3))
            .collect();
        let s = StateVector::normalized(p, 3, amps).unwrap();
        let rho = s.to_density();
        for keep in ShareSet::all_subsets(3) {
            let direct = s.reduced(&keep).unwrap();
            let traced = rho.partial_trace(&keep).unwrap();
            assert!((direct.matrix() - traced.matrix()).camax() < 1e-12);
            assert!((traced.trace() - 1.0).abs() < 1e-12);
            let purity_direct: f64 = direct.matrix().iter().map(|z| z.norm_sqr()).sum();
            assert!((s.purity(&keep.positions()) - purity_direct).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_distance_examples() {
        let p = pr(3);
        let a = StateVector::basis(p, &[0]).unwrap().to_density();
        let b = StateVector::basis(p, &[2]).unwrap().to_density();
        assert!(trace_distance(&a, &a).unwrap().abs() < 1e-12);
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        // pure vs maximally mixed in dimension d: spectrum {1 - 1/d, -1/d (d-1 times)}
        for d_qudits in 1..=2 {
            let pure = StateVector::basis(p, &vec![1; d_qudits])
                .unwrap()
                .to_density();
            let mixed = DensityMatrix::maximally_mixed(p, d_qudits);
            let d = 3f64.powi(d_qudits as i32);
            let oracle = 0.5 * ((1.0 - 1.0 / d) + (d - 1.0) / d);
            assert!((trace_distance(&pure, &mixed).unwrap() - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_distance_qubit_closed_form() {
        // rho = diag(0.7, 0.3), sigma = |+><+|; difference has eigenvalues
        // +-sqrt(0.2^2 + 0.5^2), so T = sqrt(0.29)
        let p = pr(2);
        let rho = DensityMatrix::new(
            p,
            1,
            DMatrix::from_row_slice(2, 2, &[C64::new(0.7, 0.0), ZERO, ZERO, C64::new(0.3, 0.0)]),
        )
        .unwrap();
        let plus = StateVector::normalized(p, 1, vec![C64::new(1.0, 0.0); 2])
            .unwrap()
            .to_density();
        assert!((trace_distance(&rho, &plus).unwrap() - 0.29f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let p = pr(3);
        let a = StateVector::basis(p, &[0, 1]).unwrap();
        let b = StateVector::basis(p, &[1, 1]).unwrap();
        assert!((fidelity_pure(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!(fidelity_pure(&a, &b).unwrap().abs() < 1e-15);
        let amps1: Vec<C64> = (0..9).map(|i| C64::new(i as f64, 0.5)).collect();
        let amps2: Vec<C64> = (0..9).map(|i| C64::new(1.0, -(i as f64))).collect();
        let s1 = StateVector::normalized(p, 2, amps1.clone()).unwrap();
        let s2 = StateVector::normalized(p, 2, amps2.clone()).unwrap();
        let n1: f64 = amps1.iter().map(|a| a.norm_sqr()).sum();
        let n2: f64 = amps2.iter().map(|a| a.norm_sqr()).sum();
        let raw: C64 = amps1.iter().zip(&amps2).map(|(x, y)| x.conj() * y).sum();
        let oracle = raw.norm_sqr() / (n1 * n2);
        assert!((fidelity_pure(&s1, &s2).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn density_validation() {
        let p = pr(2);
        let bad_trace = DMatrix::identity(2, 2);
        assert!(DensityMatrix::new(p, 1, bad_trace).is_err());
        let mixed = DensityMatrix::maximally_mixed(p, 2);
        assert!(mixed.is_positive_semidefinite());
        assert!(StateVector::new(p, 1, vec![C64::new(1.0, 0.0); 2]).is_err());
        assert!(StateVector::basis(p, &[2]).is_err());
    }

    #[test]
    fn factorization_distance_bell_pair() {
        let p = pr(5);
        let bell = bell_pair(p);
        let d = factorization_distance(&bell, &[0], &[1]).unwrap();
        // rho_AB pure, product I/25: T = 1 - 1/25
        assert!(d.exact);
        assert!((d.lower - 24.0 / 25.0).abs() < 1e-12);
        let prod = StateVector::basis(p, &[1]).unwrap().tensor(&bell).unwrap();
        let d = factorization_distance(&prod, &[0], &[1, 2]).unwrap();
        assert!(d.upper < 1e-12);
    }

    #[test]
    fn hilbert_schmidt_bounds_bracket_exact_value() {
        // three Bell pairs across (0,3), (1,4), (2,5) of a 6-qudit register
        // of dimension 5; A = {0,1}, B = {3,4,5} is too large for the exact path
        let p = pr(5);
        let bell = bell_pair(p);
        let six = bell.tensor(&bell).unwrap().tensor(&bell).unwrap();
        // reorder (0,1)(2,3)(4,5) pairs into (0,3)(1,4)(2,5)
        let perm = [0usize, 3, 1, 4, 2, 5];
        let mut amps = vec![ZERO; six.dim()];
        for i in 0..six.dim() {
            let d = six.digits(i);
            let mut nd = vec![0u32; 6];
            for (src, &dst) in perm.iter().enumerate() {
                nd[dst] = d[src];
            }
            amps[basis_index(p, &nd)] = six.amplitudes()[i];
        }
        let s = StateVector::new(p, 6, amps).unwrap();
        let est = factorization_distance(&s, &[0, 1], &[3, 4, 5]).unwrap();
        assert!(!est.exact);
        let small = factorization_distance(&s, &[0], &[3]).unwrap();
        assert!(small.exact);
        // monotonicity of trace distance under partial trace
        assert!(est.upper + 1e-12 >= small.lower);
        assert!(est.lower <= est.upper);
        assert!(est.lower > 0.1);
        let far = factorization_distance(&s, &[0, 1], &[5]).unwrap();
        assert!(far.upper < 1e-9);
    }

    #[test]
    fn dump_format() {
        let p = pr(5);
        let s = StateVector::basis(p, &[0, 4, 4, 0]).unwrap();
        let mut buf = Vec::new();
        s.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let fields: Vec<&str> = text.trim_end().split('\t').collect();
        assert_eq!(fields[0], "0440");
        assert_eq!(fields[1].parse::<f64>().unwrap(), 1.0);
        assert_eq!(text.lines().count(), 1);
        assert_eq!(format_index(pr(37), 2, 37 + 36), "1.36");
    }
}
