//! The ramp encoder and its access structure.
//!
//! A basis secret `|s>` of `L` qudits maps to the uniform superposition of
//! `|f_c(alpha_1), ..., f_c(alpha_n)>` over all coefficient vectors `c` of
//! length `k` whose first `L` entries equal `s`. Sets of at least `k` shares
//! are qualified, sets of at most `k - L` shares are forbidden, and the sizes
//! in between are intermediate.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gfp::Matrix;
use crate::limits::{ensure, saturating_pow, Budget};
use crate::lincode::SchemeParams;
use crate::qstate::{
    basis_index, digits_of, factorization_distance, FactorizationDistance, StateVector, C64,
};

pub use crate::share_set::ShareSet;

/// Trace-distance threshold separating "factorizes" from "correlated".
pub const FACTORIZATION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessClass {
    Qualified,
    Intermediate,
    Forbidden,
}

/// A normalized state of `L` qudits to be shared.
#[derive(Clone, Debug, PartialEq)]
pub struct SecretState(StateVector);

impl SecretState {
    pub fn new(state: StateVector, params: &SchemeParams) -> Result<Self> {
        if state.p() != params.p || state.num_qudits() != params.l {
            return Err(Error::Domain(format!(
                "secret must be {} qudits of dimension {}, got {} of dimension {}",
                params.l,
                params.p,
                state.num_qudits(),
                state.p()
            )));
        }
        Ok(SecretState(state))
    }

    pub fn basis(params: &SchemeParams, s: &[u32]) -> Result<Self> {
        SecretState::new(StateVector::basis(params.p, s)?, params)
    }

    /// Haar-like random secret from complex Gaussian amplitudes.
    pub fn random<R: Rng + ?Sized>(params: &SchemeParams, rng: &mut R) -> Self {
        let dim = params.p.as_usize().pow(params.l as u32);
        let amps: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        SecretState(
            StateVector::normalized(params.p, params.l, amps).expect("nonzero with probability 1"),
        )
    }

    pub fn state(&self) -> &StateVector {
        &self.0
    }
}

/// `D(s)`: all `c` in F_p^k with prefix `s`, free suffix in lexicographic order.
pub fn coset_d(s: &[u32], params: &SchemeParams) -> Result<Vec<Vec<u32>>> {
    check_secret_digits(s, params)?;
    let p = params.p.get();
    let free = params.k - params.l;
    let mut out = Vec::with_capacity(p.pow(free as u32) as usize);
    let mut suffix = vec![0u32; free];
    loop {
        let mut c = s.to_vec();
        c.extend_from_slice(&suffix);
        out.push(c);
        // increment, last coordinate fastest
        let mut q = free;
        loop {
            if q == 0 {
                return Ok(out);
            }
            q -= 1;
            suffix[q] += 1;
            if suffix[q] < p {
                break;
            }
            suffix[q] = 0;
        }
    }
}

fn check_secret_digits(s: &[u32], params: &SchemeParams) -> Result<()> {
    if s.len() != params.l {
        return Err(Error::Domain(format!(
            "basis secret has {} digits, expected L = {}",
            s.len(),
            params.l
        )));
    }
    if let Some(&d) = s.iter().find(|&&d| d >= params.p.get()) {
        return Err(Error::Domain(format!(
            "secret digit {d} outside F_{}",
            params.p
        )));
    }
    Ok(())
}

/// The encoding isometry for one parameter set.
#[derive(Clone, Debug)]
pub struct Encoder {
    params: SchemeParams,
    eval: Matrix,
}

impl Encoder {
    pub fn new(params: &SchemeParams) -> Self {
        Encoder {
            params: params.clone(),
            eval: params.evaluation_matrix(),
        }
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    /// `(f_c(alpha_1), ..., f_c(alpha_n))`.
    pub fn share_values(&self, c: &[u32]) -> Vec<u32> {
        let p = self.params.p;
        (0..self.params.n)
            .map(|i| {
                let s: u64 = c
                    .iter()
                    .enumerate()
                    .map(|(m, &cm)| cm as u64 * self.eval.raw(m, i) as u64)
                    .sum();
                p.reduce(s)
            })
            .collect()
    }

    /// Recovers the secret digits labelling a ket in the support of some
    /// encoded basis state, or `None` if the ket is not a codeword of `C1`.
    pub fn secret_of_ket(&self, ket: &[u32]) -> Option<Vec<u32>> {
        let c = self.eval.transpose().solve(ket)?;
        Some(c[..self.params.l].to_vec())
    }

    fn check_size(&self, qudits: usize) -> Result<()> {
        ensure(
            format!("a dense {qudits}-qudit state"),
            saturating_pow(self.params.p.get(), qudits),
            Budget::default().max_codespace_dim,
        )
    }

    /// Encoding of the basis secret `|s>`.
    pub fn encode_basis(&self, s: &[u32]) -> Result<StateVector> {
        let secret = SecretState::basis(&self.params, s)?;
        self.encode(&secret)
    }

    /// Linear extension of [`Encoder::encode_basis`].
    pub fn encode(&self, secret: &SecretState) -> Result<StateVector> {
        let params = &self.params;
        self.check_size(params.n)?;
        let p = params.p;
        let weight = (p.get() as f64)
            .powi((params.k - params.l) as i32)
            .sqrt()
            .recip();
        let mut amps = vec![C64::new(0.0, 0.0); p.as_usize().pow(params.n as u32)];
        for (si, &coeff) in secret.state().amplitudes().iter().enumerate() {
            if coeff == C64::new(0.0, 0.0) {
                continue;
            }
            let s = secret.state().digits(si);
            for c in coset_d(&s, params)? {
                amps[basis_index(p, &self.share_values(&c))] += coeff * weight;
            }
        }
        StateVector::new(p, params.n, amps)
    }

    /// `p^(-L/2) sum_s |s>_R (x) Enc|s>` on `L + n` qudits, reference first.
    pub fn reference_entangled(&self) -> Result<StateVector> {
        let params = &self.params;
        self.check_size(params.n + params.l)?;
        let p = params.p;
        let share_dim = p.as_usize().pow(params.n as u32);
        let weight = (p.get() as f64).powi(params.k as i32).sqrt().recip();
        let mut amps = vec![C64::new(0.0, 0.0); share_dim * p.as_usize().pow(params.l as u32)];
        for si in 0..p.as_usize().pow(params.l as u32) {
            let s = digits_of(p, params.l, si);
            for c in coset_d(&s, params)? {
                amps[si * share_dim + basis_index(p, &self.share_values(&c))] =
                    C64::new(weight, 0.0);
            }
        }
        StateVector::new(p, params.l + params.n, amps)
    }
}

pub fn encode_basis(s: &[u32], params: &SchemeParams) -> Result<StateVector> {
    Encoder::new(params).encode_basis(s)
}

pub fn encode(secret: &SecretState, params: &SchemeParams) -> Result<StateVector> {
    Encoder::new(params).encode(secret)
}

/// Threshold rule on `|J|`.
pub fn classify(j: &ShareSet, params: &SchemeParams) -> AccessClass {
    if j.len() >= params.k {
        AccessClass::Qualified
    } else if j.len() <= params.forbidden_max() {
        AccessClass::Forbidden
    } else {
        AccessClass::Intermediate
    }
}

/// Outcome of [`verify_access`] for one share set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccessVerdict {
    pub set: ShareSet,
    pub is_forbidden: bool,
    pub is_qualified: bool,
    /// `T(rho_RJ, rho_R (x) rho_J)`.
    pub distance: FactorizationDistance,
    /// The same quantity for the complement of `J`.
    pub complement_distance: FactorizationDistance,
}

impl AccessVerdict {
    pub fn class(&self) -> AccessClass {
        match (self.is_qualified, self.is_forbidden) {
            (true, _) => AccessClass::Qualified,
            (false, true) => AccessClass::Forbidden,
            (false, false) => AccessClass::Intermediate,
        }
    }
}

/// Decides access classes from the reduced states of the reference-entangled
/// encoding. `J` is forbidden when `rho_RJ` factorizes; it is qualified when
/// its complement is forbidden.
pub struct AccessVerifier {
    params: SchemeParams,
    joint: StateVector,
    cache: HashMap<u64, FactorizationDistance>,
}

impl AccessVerifier {
    pub fn new(params: &SchemeParams, budget: &Budget) -> Result<Self> {
        ensure(
            "reference-entangled encoding",
            saturating_pow(params.p.get(), params.n + params.l),
            budget.max_amplitudes,
        )?;
        Ok(AccessVerifier {
            params: params.clone(),
            joint: Encoder::new(params).reference_entangled()?,
            cache: HashMap::new(),
        })
    }

    /// The reference-entangled encoding, reference qudits first.
    pub fn joint_state(&self) -> &StateVector {
        &self.joint
    }

    pub fn distance(&mut self, j: &ShareSet) -> Result<FactorizationDistance> {
        if j.universe() != self.params.n {
            return Err(Error::Domain(format!(
                "share set over {} shares, scheme has {}",
                j.universe(),
                self.params.n
            )));
        }
        if let Some(d) = self.cache.get(&j.mask()) {
            return Ok(*d);
        }
        let l = self.params.l;
        let reference: Vec<usize> = (0..l).collect();
        let shares: Vec<usize> = j.positions().iter().map(|&q| q + l).collect();
        let d = factorization_distance(&self.joint, &reference, &shares)?;
        self.cache.insert(j.mask(), d);
        Ok(d)
    }

    fn factorizes(&mut self, j: &ShareSet) -> Result<bool> {
        let d = self.distance(j)?;
        if d.upper <= FACTORIZATION_TOL {
            Ok(true)
        } else if d.lower > FACTORIZATION_TOL {
            Ok(false)
        } else {
            Err(Error::Inconclusive(format!(
                "factorization distance of {j} lies in [{:e}, {:e}]",
                d.lower, d.upper
            )))
        }
    }

    pub fn verify(&mut self, j: &ShareSet) -> Result<AccessVerdict> {
        let is_forbidden = self.factorizes(j)?;
        let complement = j.complement();
        let is_qualified = self.factorizes(&complement)?;
        if is_forbidden && is_qualified {
            return Err(Error::Inconclusive(format!(
                "{j} and its complement both factorize"
            )));
        }
        Ok(AccessVerdict {
            set: j.clone(),
            is_forbidden,
            is_qualified,
            distance: self.distance(j)?,
            complement_distance: self.distance(&complement)?,
        })
    }
}

/// Information-theoretic access check for a single set.
pub fn verify_access(
    j: &ShareSet,
    params: &SchemeParams,
    budget: &Budget,
) -> Result<AccessVerdict> {
    AccessVerifier::new(params, budget)?.verify(j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn fixture() -> SchemeParams {
        SchemeParams::new(5, 3, 2, None).unwrap()
    }

    fn set(members: &[usize]) -> ShareSet {
        ShareSet::new(members.iter().copied(), 4).unwrap()
    }

    #[test]
    fn coset_examples() {
        let p = fixture();
        let d = coset_d(&[0, 0], &p).unwrap();
        let expected: Vec<Vec<u32>> = (0..5).map(|c| vec![0, 0, c]).collect();
        assert_eq!(d, expected);
        let full = SchemeParams::new(7, 2, 2, None).unwrap();
        assert_eq!(coset_d(&[3, 5], &full).unwrap(), vec![vec![3, 5]]);
        let big = SchemeParams::new(11, 4, 2, None).unwrap();
        let d = coset_d(&[7, 1], &big).unwrap();
        assert_eq!(d.len(), 121);
        assert!(d.iter().all(|c| c[..2] == [7, 1]));
        assert!(d.windows(2).all(|w| w[0] < w[1]));
        assert!(coset_d(&[1], &p).is_err());
        assert!(coset_d(&[1, 5], &p).is_err());
    }

    #[test]
    fn zero_secret_fixture() {
        let p = fixture();
        let enc = encode_basis(&[0, 0], &p).unwrap();
        // f(x) = c3 x^2 evaluated at 1..4 with plain integers, then reduced
        let expected: BTreeSet<Vec<u32>> = (0..5u32)
            .map(|c3| (1..=4u32).map(|x| c3 * x * x % 5).collect())
            .collect();
        let support: BTreeSet<Vec<u32>> = enc.support(1e-12).into_iter().collect();
        assert_eq!(support, expected);
        assert!(expected.contains(&vec![1, 4, 4, 1]));
        for ket in &expected {
            assert!((enc.amplitude(ket).re - 5f64.sqrt().recip()).abs() < 1e-15);
        }
    }

    #[test]
    fn general_secret_support_has_worked_example_form() {
        let p = fixture();
        for s1 in 0..5u32 {
            for s2 in 0..5u32 {
                let enc = encode_basis(&[s1, s2], &p).unwrap();
                let expected: BTreeSet<Vec<u32>> = (0..5u32)
                    .map(|c3| (1..=4u32).map(|x| (s1 + s2 * x + c3 * x * x) % 5).collect())
                    .collect();
                let support: BTreeSet<Vec<u32>> = enc.support(1e-12).into_iter().collect();
                assert_eq!(support, expected);
                assert!((enc.norm() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn distinct_basis_secrets_are_orthogonal() {
        let p = fixture();
        let encs: Vec<StateVector> = (0..25u32)
            .map(|i| encode_basis(&[i / 5, i % 5], &p).unwrap())
            .collect();
        for (a, ea) in encs.iter().enumerate() {
            for (b, eb) in encs.iter().enumerate() {
                let ip = ea.inner(eb).unwrap().norm();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn encode_is_linear_and_isometric() {
        let p = fixture();
        let enc = Encoder::new(&p);
        let h = 2f64.sqrt().recip();
        let mut amps = vec![C64::new(0.0, 0.0); 25];
        amps[0] = C64::new(h, 0.0);
        amps[6] = C64::new(h, 0.0);
        let secret = SecretState::new(StateVector::new(p.p, 2, amps).unwrap(), &p).unwrap();
        let out = enc.encode(&secret).unwrap();
        let a = enc.encode_basis(&[0, 0]).unwrap();
        let b = enc.encode_basis(&[1, 1]).unwrap();
        for (i, o) in out.amplitudes().iter().enumerate() {
            let want = (a.amplitudes()[i] + b.amplitudes()[i]) * h;
            assert!((o - want).norm() < 1e-15);
        }
        let basis = SecretState::basis(&p, &[3, 1]).unwrap();
        assert_eq!(
            enc.encode(&basis).unwrap(),
            enc.encode_basis(&[3, 1]).unwrap()
        );

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let x = SecretState::random(&p, &mut rng);
            let y = SecretState::random(&p, &mut rng);
            let before = x.state().inner(y.state()).unwrap();
            let after = enc
                .encode(&x)
                .unwrap()
                .inner(&enc.encode(&y).unwrap())
                .unwrap();
            assert!((before - after).norm() < 1e-12);
        }
    }

    #[test]
    fn secret_of_ket_inverts_encoding() {
        let p = fixture();
        let enc = Encoder::new(&p);
        let e = enc.encode_basis(&[4, 2]).unwrap();
        for ket in e.support(1e-12) {
            assert_eq!(enc.secret_of_ket(&ket), Some(vec![4, 2]));
        }
    }

    #[test]
    fn classify_examples() {
        let p = fixture();
        assert_eq!(classify(&set(&[1, 2, 3]), &p), AccessClass::Qualified);
        assert_eq!(classify(&set(&[2]), &p), AccessClass::Forbidden);
        assert_eq!(classify(&set(&[1, 4]), &p), AccessClass::Intermediate);
        assert_eq!(classify(&set(&[]), &p), AccessClass::Forbidden);
    }

    #[test]
    fn verify_access_examples() {
        let p = fixture();
        let b = Budget::default();
        let v = verify_access(&set(&[2]), &p, &b).unwrap();
        assert!(v.is_forbidden && !v.is_qualified);
        assert!(v.distance.exact && v.distance.upper <= FACTORIZATION_TOL);
        let v = verify_access(&set(&[1, 2, 3]), &p, &b).unwrap();
        assert!(v.is_qualified && !v.is_forbidden);
        let v = verify_access(&set(&[1, 2]), &p, &b).unwrap();
        assert_eq!(v.class(), AccessClass::Intermediate);
        assert!(v.distance.lower > 1e-2 && v.complement_distance.lower > 1e-2);
    }

    #[test]
    fn verification_matches_threshold_rule_on_small_schemes() {
        for (pp, k, l) in [(5, 2, 1), (7, 2, 1), (5, 2, 2), (7, 3, 2), (3, 1, 1)] {
            let p = SchemeParams::new(pp, k, l, None).unwrap();
            let mut v = AccessVerifier::new(&p, &Budget::default()).unwrap();
            for j in ShareSet::all_subsets(p.n) {
                let verdict = v.verify(&j).unwrap();
                assert_eq!(verdict.class(), classify(&j, &p), "{pp},{k},{l} J = {j}");
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let p = fixture();
        let tight = Budget {
            max_amplitudes: 1000,
            ..Budget::default()
        };
        assert!(matches!(
            verify_access(&set(&[1]), &p, &tight),
            Err(Error::Resource { needed: 15625, .. })
        ));
    }
}
