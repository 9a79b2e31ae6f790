//! Linear codes over F_p and the two evaluation codes that define the scheme.
//!
//! `C1` is the image of all polynomials of degree below `k` evaluated at the
//! share points; `C2` is the image of those whose `L` low-order coefficients
//! vanish. Codes are stored with a generator in reduced row echelon form, so
//! two codes are equal exactly when their generators are equal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gfp::{dot, Matrix, Prime};
use crate::share_set::ShareSet;

/// Codeword enumeration limit for [`LinearCode::min_distance`].
pub const DEFAULT_CODEWORD_BUDGET: u128 = 10_000_000;

/// Parameters `(p, k, L, n, alphas)` of one ramp scheme instance.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SchemeParams {
    pub p: Prime,
    /// Reconstruction threshold.
    pub k: usize,
    /// Number of secret qudits.
    #[serde(rename = "L")]
    pub l: usize,
    /// Number of shares, always `2k - L`.
    pub n: usize,
    /// Evaluation points, one per share.
    pub alphas: Vec<u32>,
}

impl SchemeParams {
    /// Validates the parameter tuple. `n` is derived as `2k - L`; when
    /// `alphas` is `None` the points default to `1..=n`.
    pub fn new(p: u32, k: usize, l: usize, alphas: Option<Vec<u32>>) -> Result<Self> {
        let prime = Prime::new(p).map_err(|e| match e {
            Error::Domain(m) => Error::InvalidParams(m),
            other => other,
        })?;
        if l == 0 || l > k {
            return Err(Error::InvalidParams(format!(
                "1 \u{2264} L \u{2264} k violated (k = {k}, L = {l})"
            )));
        }
        let n = 2 * k - l;
        if n >= p as usize {
            return Err(Error::InvalidParams(format!(
                "n = 2k\u{2212}L \u{2265} p (n = {n}, p = {p})"
            )));
        }
        let alphas = alphas.unwrap_or_else(|| (1..=n as u32).collect());
        if alphas.len() != n {
            return Err(Error::InvalidParams(format!(
                "expected n = {n} evaluation points, got {}",
                alphas.len()
            )));
        }
        for (i, &a) in alphas.iter().enumerate() {
            if a >= p {
                return Err(Error::InvalidParams(format!(
                    "alpha_{} = {a} is not reduced mod p = {p}",
                    i + 1
                )));
            }
            if a == 0 {
                return Err(Error::InvalidParams(format!(
                    "alpha_{} = 0; evaluation points must be nonzero",
                    i + 1
                )));
            }
            if alphas[..i].contains(&a) {
                return Err(Error::InvalidParams(format!(
                    "alpha_{} = {a} duplicates an earlier point; evaluation points must be distinct",
                    i + 1
                )));
            }
        }
        Ok(SchemeParams {
            p: prime,
            k,
            l,
            n,
            alphas,
        })
    }

    /// `k - L`, the largest forbidden set size.
    pub fn forbidden_max(&self) -> usize {
        self.k - self.l
    }

    /// The `k x n` evaluation matrix with rows `(alpha_i^j)_i` for `j = 0..k`.
    pub fn evaluation_matrix(&self) -> Matrix {
        self.power_rows(0..self.k)
    }

    /// Raw generator rows of `C2`: `(alpha_i^j)_i` for `j = L..k`.
    pub fn c2_rows(&self) -> Matrix {
        self.power_rows(self.l..self.k)
    }

    /// Raw generator rows of `C1^perp` as a generalized Reed-Solomon code:
    /// `(v_i alpha_i^j)_i` for `j = 0..n-k`, with column multipliers
    /// `v_i = 1 / prod_{m != i} (alpha_i - alpha_m)`.
    pub fn c1_dual_rows(&self) -> Matrix {
        let p = self.p;
        let v: Vec<u32> = (0..self.n)
            .map(|i| {
                let denom = (0..self.n).filter(|&m| m != i).fold(1, |acc, m| {
                    p.mul(acc, p.sub(self.alphas[i], self.alphas[m]))
                });
                p.inv(denom).expect("alphas are distinct")
            })
            .collect();
        let mut g = self.power_rows(0..self.n - self.k);
        for r in 0..g.rows() {
            for (i, &vi) in v.iter().enumerate() {
                g.set(r, i, p.mul(g.raw(r, i), vi));
            }
        }
        g
    }

    fn power_rows(&self, degrees: std::ops::Range<usize>) -> Matrix {
        let p = self.p;
        let rows: Vec<Vec<u32>> = degrees
            .map(|j| self.alphas.iter().map(|&a| p.pow(a, j as u64)).collect())
            .collect();
        Matrix::from_rows(p, self.n, &rows).expect("rows have length n")
    }
}

/// A subspace of F_p^length given by a canonical generator.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinearCode {
    length: usize,
    generator: Matrix,
}

impl LinearCode {
    /// Spans the rows of `generator`; dependent rows are dropped.
    pub fn from_generator(generator: &Matrix) -> Self {
        LinearCode {
            length: generator.cols(),
            generator: generator.row_basis(),
        }
    }

    pub fn zero(prime: Prime, length: usize) -> Self {
        LinearCode {
            length,
            generator: Matrix::zeros(prime, 0, length),
        }
    }

    pub fn full(prime: Prime, length: usize) -> Self {
        LinearCode {
            length,
            generator: Matrix::identity(prime, length),
        }
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn dim(&self) -> usize {
        self.generator.rows()
    }

    pub fn prime(&self) -> Prime {
        self.generator.prime()
    }

    /// Canonical (rref) generator.
    pub fn generator(&self) -> &Matrix {
        &self.generator
    }

    pub fn contains(&self, v: &[u32]) -> bool {
        if v.len() != self.length {
            return false;
        }
        let row = Matrix::from_rows(self.prime(), self.length, &[v]).expect("length checked");
        let stacked = self.generator.vstack(&row).expect("same width");
        stacked.rank() == self.dim()
    }

    pub fn is_subcode_of(&self, other: &LinearCode) -> bool {
        self.generator.row_iter().all(|r| other.contains(r))
    }

    /// Euclidean dual.
    pub fn dual(&self) -> LinearCode {
        LinearCode::from_generator(&self.generator.nullspace())
    }

    fn check_coordinates(&self, j: &ShareSet) -> Result<()> {
        match j.members().last() {
            Some(&m) if m > self.length => Err(Error::Domain(format!(
                "coordinate {m} outside a code of length {}",
                self.length
            ))),
            _ => Ok(()),
        }
    }

    /// Codewords vanishing on `j`, kept at full length.
    pub fn shorten(&self, j: &ShareSet) -> Result<LinearCode> {
        self.check_coordinates(j)?;
        if j.is_empty() || self.dim() == 0 {
            return Ok(self.clone());
        }
        // coefficient vectors lambda with (lambda G)_i = 0 for i in J
        let restricted = self.generator.select_columns(&j.positions()).transpose();
        let lambdas = restricted.nullspace();
        let words = lambdas.mul(&self.generator)?;
        Ok(LinearCode::from_generator(&words))
    }

    /// Deletes the coordinates in `j`.
    pub fn puncture(&self, j: &ShareSet) -> Result<LinearCode> {
        self.check_coordinates(j)?;
        let keep: Vec<usize> = (0..self.length).filter(|&i| !j.contains(i + 1)).collect();
        Ok(LinearCode::from_generator(
            &self.generator.select_columns(&keep),
        ))
    }

    /// Number of codewords, `p^dim`, saturating.
    pub fn size(&self) -> u128 {
        (self.prime().get() as u128)
            .checked_pow(self.dim() as u32)
            .unwrap_or(u128::MAX)
    }

    /// Calls `visit` on every codeword, zero included. Fails when the code
    /// has more than `budget` words.
    pub fn for_each_codeword(&self, budget: u128, mut visit: impl FnMut(&[u32])) -> Result<()> {
        let total = self.size();
        if total > budget {
            return Err(Error::Resource {
                what: format!("enumerating a [{}, {}] code", self.length, self.dim()),
                needed: total,
                limit: budget,
            });
        }
        let p = self.prime();
        let mut digits = vec![0u32; self.dim()];
        let mut word = vec![0u32; self.length];
        visit(&word);
        'outer: loop {
            // odometer step: incrementing digit i adds row i, wraps included
            for (i, digit) in digits.iter_mut().enumerate() {
                for (w, &g) in word.iter_mut().zip(self.generator.row(i)) {
                    *w = p.add(*w, g);
                }
                *digit += 1;
                if *digit < p.get() {
                    visit(&word);
                    continue 'outer;
                }
                *digit = 0;
            }
            break;
        }
        Ok(())
    }

    /// Minimum Hamming weight of a nonzero codeword, by exhaustive search.
    pub fn min_distance(&self, budget: u128) -> Result<usize> {
        if self.dim() == 0 {
            return Err(Error::Domain("minimum distance of the zero code".into()));
        }
        let mut best = usize::MAX;
        self.for_each_codeword(budget, |w| {
            let wt = w.iter().filter(|&&x| x != 0).count();
            if wt > 0 && wt < best {
                best = wt;
            }
        })?;
        Ok(best)
    }

    /// True when every generator row of `self` is orthogonal to every row of `other`.
    pub fn is_orthogonal_to(&self, other: &LinearCode) -> bool {
        let p = self.prime();
        self.generator
            .row_iter()
            .all(|a| other.generator.row_iter().all(|b| dot(p, a, b) == 0))
    }
}

/// `C1`: evaluations of every polynomial of degree below `k`.
pub fn build_c1(params: &SchemeParams) -> LinearCode {
    LinearCode::from_generator(&params.evaluation_matrix())
}

/// `C2`: evaluations of polynomials whose first `L` coefficients vanish.
pub fn build_c2(params: &SchemeParams) -> LinearCode {
    let g = params.c2_rows();
    if g.rows() == 0 {
        return LinearCode::zero(params.p, params.n);
    }
    LinearCode::from_generator(&g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn fixture() -> SchemeParams {
        SchemeParams::new(5, 3, 2, None).unwrap()
    }

    fn code(p: u32, rows: &[&[u32]]) -> LinearCode {
        let m = Matrix::from_rows(Prime::new(p).unwrap(), rows[0].len(), rows).unwrap();
        LinearCode::from_generator(&m)
    }

    fn words(c: &LinearCode) -> HashSet<Vec<u32>> {
        let mut out = HashSet::new();
        c.for_each_codeword(u128::MAX, |w| {
            out.insert(w.to_vec());
        })
        .unwrap();
        out
    }

    #[test]
    fn params_validation_names_the_invariant() {
        let e = SchemeParams::new(5, 3, 1, None).unwrap_err();
        assert!(e.to_string().contains("n = 2k\u{2212}L \u{2265} p"), "{e}");
        assert!(SchemeParams::new(6, 2, 1, None).is_err());
        assert!(SchemeParams::new(5, 2, 0, None).is_err());
        assert!(SchemeParams::new(5, 2, 3, None).is_err());
        let dup = SchemeParams::new(5, 3, 2, Some(vec![1, 2, 2, 4])).unwrap_err();
        assert!(dup.to_string().contains("distinct"));
        let zero = SchemeParams::new(5, 3, 2, Some(vec![0, 1, 2, 3])).unwrap_err();
        assert!(zero.to_string().contains("nonzero"));
        assert!(SchemeParams::new(5, 3, 2, Some(vec![1, 2, 3])).is_err());
        let p = fixture();
        assert_eq!((p.n, p.alphas.clone()), (4, vec![1, 2, 3, 4]));
    }

    #[test]
    fn c1_fixture() {
        let p = fixture();
        assert_eq!(
            p.evaluation_matrix().to_rows(),
            vec![vec![1, 1, 1, 1], vec![1, 2, 3, 4], vec![1, 4, 4, 1]]
        );
        let c1 = build_c1(&p);
        assert_eq!(c1.dim(), 3);
        assert_eq!(c1.length(), 4);
    }

    #[test]
    fn c1_is_full_space_when_l_equals_k() {
        let p = SchemeParams::new(7, 3, 3, None).unwrap();
        assert_eq!(build_c1(&p), LinearCode::full(p.p, 3));
        assert_eq!(build_c2(&p).dim(), 0);
    }

    #[test]
    fn c2_fixture() {
        let p = fixture();
        let c2 = build_c2(&p);
        assert_eq!(c2, code(5, &[&[1, 4, 4, 1]]));
        assert!(c2.is_subcode_of(&build_c1(&p)));
    }

    #[test]
    fn dual_fixture() {
        let p = fixture();
        let d = build_c1(&p).dual();
        assert_eq!(d, code(5, &[&[4, 3, 2, 1]]));
        assert!(d.is_orthogonal_to(&build_c1(&p)));
        assert_eq!(LinearCode::full(p.p, 4).dual().dim(), 0);
        assert_eq!(LinearCode::zero(p.p, 4).dual(), LinearCode::full(p.p, 4));
    }

    #[test]
    fn shorten_and_puncture_fixtures() {
        let c = code(5, &[&[1, 4, 4, 1]]);
        let e = ShareSet::empty(4);
        assert_eq!(c.shorten(&e).unwrap(), c);
        assert_eq!(c.puncture(&e).unwrap(), c);
        let j1 = ShareSet::new([1], 4).unwrap();
        assert_eq!(c.shorten(&j1).unwrap().dim(), 0);
        assert_eq!(c.shorten(&j1).unwrap().length(), 4);

        let d = code(5, &[&[4, 3, 2, 1]]);
        let punct = d.puncture(&ShareSet::new([4], 4).unwrap()).unwrap();
        assert_eq!(punct, code(5, &[&[4, 3, 2]]));
        assert_eq!(punct.length(), 3);

        let too_far = ShareSet::new([5], 5).unwrap();
        assert!(c.shorten(&too_far).is_err());
    }

    #[test]
    fn shorten_matches_brute_force() {
        let p = fixture();
        let c1 = build_c1(&p);
        for j in ShareSet::all_subsets(4) {
            let expected: HashSet<Vec<u32>> = words(&c1)
                .into_iter()
                .filter(|w| j.positions().iter().all(|&i| w[i] == 0))
                .collect();
            assert_eq!(words(&c1.shorten(&j).unwrap()), expected, "J = {j}");
        }
    }

    #[test]
    fn min_distance_fixtures() {
        let p = fixture();
        let c1 = build_c1(&p);
        assert_eq!(c1.dual().min_distance(DEFAULT_CODEWORD_BUDGET).unwrap(), 4);
        assert_eq!(c1.min_distance(DEFAULT_CODEWORD_BUDGET).unwrap(), 2);
        assert_eq!(words(&c1).len(), 125);
        let rep = code(7, &[&[1, 1, 1, 1, 1]]);
        assert_eq!(rep.min_distance(DEFAULT_CODEWORD_BUDGET).unwrap(), 5);
        assert!(matches!(
            c1.min_distance(100),
            Err(Error::Resource { needed: 125, .. })
        ));
        assert!(LinearCode::zero(p.p, 4).min_distance(10).is_err());
    }

    #[test]
    fn shorten_puncture_identity_on_fixture() {
        let p = fixture();
        let c1 = build_c1(&p);
        let c2 = build_c2(&p);
        for j in ShareSet::all_subsets(4) {
            let a = c1.dual().shorten(&j).unwrap().dim() + c1.puncture(&j).unwrap().dim();
            let b = c2.shorten(&j).unwrap().dim() + c2.dual().puncture(&j).unwrap().dim();
            assert_eq!(a, 4 - j.len());
            assert_eq!(b, 4 - j.len());
        }
    }

    #[test]
    fn grs_dual_rows_span_the_dual() {
        assert_eq!(fixture().c1_dual_rows().to_rows(), vec![vec![4, 3, 2, 1]]);
        for (pp, k, l) in [(7, 4, 2), (11, 5, 3), (13, 4, 1), (7, 3, 3)] {
            let p = SchemeParams::new(pp, k, l, None).unwrap();
            let raw = p.c1_dual_rows();
            assert_eq!(raw.rank(), raw.rows());
            let from_raw = if raw.rows() == 0 {
                LinearCode::zero(p.p, p.n)
            } else {
                LinearCode::from_generator(&raw)
            };
            assert_eq!(from_raw, build_c1(&p).dual());
        }
    }
}
