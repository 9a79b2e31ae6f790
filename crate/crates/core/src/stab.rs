//! The stabilizer group of the ramp code and its logical operators.
//!
//! The group is generated by `Z^x` for `x` in `C1^perp` and `X^x` for `x` in
//! `C2`. Its symplectic code holds `(a|b)` for each element `X^a Z^b`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::advance::require_advance_shareable;
use crate::error::{Error, Result};
use crate::gfp::{dot, Matrix, Prime};
use crate::limits::{ensure, saturating_pow, Budget};
use crate::lincode::{build_c1, build_c2, LinearCode, SchemeParams};
use crate::qstate::{digits_of, nearest_root_exponent, omega_powers, PauliWord, StateVector, C64};
use crate::ramp::Encoder;
use crate::share_set::ShareSet;

/// Largest coset block diagonalized by [`codespace_dimension`].
const MAX_BLOCK: usize = 4096;

/// Eigenvalue rounding tolerance for the projector rank.
pub const RANK_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct StabilizerGroup {
    p: Prime,
    n: usize,
    generators: Vec<PauliWord>,
    symplectic_code: LinearCode,
}

impl StabilizerGroup {
    /// Group generated by pairwise commuting words on `n` qudits.
    pub fn from_generators(p: Prime, n: usize, generators: Vec<PauliWord>) -> Result<Self> {
        for g in &generators {
            if g.p() != p || g.num_qudits() != n {
                return Err(Error::Domain(
                    "generator acts on a different register".into(),
                ));
            }
        }
        for (i, a) in generators.iter().enumerate() {
            for b in &generators[i + 1..] {
                if !a.commutes_with(b)? {
                    return Err(Error::Domain(format!(
                        "generators {a:?} and {b:?} do not commute"
                    )));
                }
            }
        }
        let rows: Vec<Vec<u32>> = generators
            .iter()
            .map(|g| g.x().iter().chain(g.z()).copied().collect())
            .collect();
        let symplectic_code = if rows.is_empty() {
            LinearCode::zero(p, 2 * n)
        } else {
            LinearCode::from_generator(&Matrix::from_rows(p, 2 * n, &rows)?)
        };
        Ok(StabilizerGroup {
            p,
            n,
            generators,
            symplectic_code,
        })
    }

    pub fn p(&self) -> Prime {
        self.p
    }

    pub fn num_qudits(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[PauliWord] {
        &self.generators
    }

    /// Vectors `(a|b)` of length `2n`.
    pub fn symplectic_code(&self) -> &LinearCode {
        &self.symplectic_code
    }

    /// Span of the X parts of the group.
    fn x_span(&self) -> LinearCode {
        let rows: Vec<&[u32]> = self.generators.iter().map(|g| g.x()).collect();
        if rows.is_empty() {
            return LinearCode::zero(self.p, self.n);
        }
        LinearCode::from_generator(&Matrix::from_rows(self.p, self.n, &rows).expect("length n"))
    }
}

/// Z-type generators from the rows of `C1^perp`, then X-type from `C2`.
pub fn build_stabilizer(params: &SchemeParams) -> StabilizerGroup {
    let p = params.p;
    let z = params.c1_dual_rows();
    let x = params.c2_rows();
    let generators = z
        .row_iter()
        .map(|r| PauliWord::z_type(p, r.to_vec()))
        .chain(x.row_iter().map(|r| PauliWord::x_type(p, r.to_vec())))
        .collect();
    StabilizerGroup::from_generators(p, params.n, generators)
        .expect("C2 lies inside C1, so the generators commute")
}

/// `max_M ||M|phi> - |phi>||` over the generators.
pub fn check_stabilizes(g: &StabilizerGroup, state: &StateVector) -> Result<f64> {
    let mut worst = 0.0f64;
    for m in &g.generators {
        let moved = m.apply(state)?;
        let dev = moved
            .amplitudes()
            .iter()
            .zip(state.amplitudes())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// Rank of `prod_M (1/p) sum_t M^t`, by diagonalizing the projector.
///
/// Every generator maps a ket `|v>` into `v + A`, where `A` is the span of
/// the X parts, so the projector is block diagonal over the cosets of `A`.
/// Each block is built from its basis kets and diagonalized separately.
pub fn codespace_dimension(g: &StabilizerGroup, budget: &Budget) -> Result<u128> {
    let p = g.p;
    let n = g.n;
    ensure(
        "stabilizer projector",
        saturating_pow(p.get(), n),
        budget.max_codespace_dim,
    )?;
    let span = g.x_span();
    let a_dim = span.dim();
    let block = p.as_usize().pow(a_dim as u32);
    ensure("projector block", block as u128, MAX_BLOCK as u128)?;
    let span_rows = span.generator().to_rows();
    let pivots = span.generator().rref().pivots;
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();

    let omega = omega_powers(p);
    // (1/p) sum_t M^t, as the list of powers
    let powers: Vec<Vec<PauliWord>> = g
        .generators
        .iter()
        .map(|m| (0..p.get()).map(|t| m.pow(t)).collect())
        .collect();

    let mut rank = 0u128;
    let cosets = p.as_usize().pow(free.len() as u32);
    for c in 0..cosets {
        let mut rep = vec![0u32; n];
        for (q, d) in free.iter().zip(digits_of(p, free.len(), c)) {
            rep[*q] = d;
        }
        // ket for local index l: rep + sum_r l_r * span_r
        let kets: Vec<Vec<u32>> = (0..block)
            .map(|l| {
                let lam = digits_of(p, a_dim, l);
                let mut v = rep.clone();
                for (row, &coef) in span_rows.iter().zip(&lam) {
                    for (vi, &ri) in v.iter_mut().zip(row) {
                        *vi = p.add(*vi, p.mul(coef, ri));
                    }
                }
                v
            })
            .collect();
        // the coordinates at the pivots determine the local index
        let local = |v: &[u32]| {
            pivots
                .iter()
                .fold(0usize, |acc, &q| acc * p.as_usize() + v[q] as usize)
        };
        let mut proj = DMatrix::<C64>::identity(block, block);
        for word_powers in &powers {
            let mut avg = DMatrix::<C64>::zeros(block, block);
            for w in word_powers {
                for (col, ket) in kets.iter().enumerate() {
                    let target: Vec<u32> =
                        ket.iter().zip(w.x()).map(|(&v, &x)| p.add(v, x)).collect();
                    let exp = p.add(w.phase(), dot(p, w.z(), ket));
                    avg[(local(&target), col)] += omega[exp as usize];
                }
            }
            proj = avg * proj;
        }
        proj /= C64::new((p.get() as f64).powi(g.generators.len() as i32), 0.0);
        let herm = (&proj + proj.adjoint()) * C64::new(0.5, 0.0);
        let eig = herm.symmetric_eigenvalues();
        for ev in eig.iter() {
            if (ev - 1.0).abs() <= RANK_TOL {
                rank += 1;
            } else if ev.abs() > RANK_TOL {
                return Err(Error::Inconclusive(format!(
                    "projector eigenvalue {ev} is neither 0 nor 1"
                )));
            }
        }
    }
    Ok(rank)
}

/// Logical `X` and `Z` operators for the `L` encoded qudits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogicalOperatorSet {
    #[serde(with = "pauli_list")]
    pub logical_x: Vec<PauliWord>,
    #[serde(with = "pauli_list")]
    pub logical_z: Vec<PauliWord>,
    /// Shares no representative acts on.
    pub avoid: ShareSet,
    pub calibrated: bool,
}

mod pauli_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::gfp::Prime;
    use crate::qstate::PauliWord;

    #[derive(Serialize, Deserialize)]
    struct Raw {
        p: Prime,
        phase: u32,
        x: Vec<u32>,
        z: Vec<u32>,
    }

    pub fn serialize<S: Serializer>(words: &[PauliWord], s: S) -> Result<S::Ok, S::Error> {
        words
            .iter()
            .map(|w| Raw {
                p: w.p(),
                phase: w.phase(),
                x: w.x().to_vec(),
                z: w.z().to_vec(),
            })
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<PauliWord>, D::Error> {
        Vec::<Raw>::deserialize(d)?
            .into_iter()
            .map(|r| PauliWord::new(r.p, r.phase, r.x, r.z).map_err(serde::de::Error::custom))
            .collect()
    }
}

impl LogicalOperatorSet {
    /// `x_i . z_j = delta_ij`, and every operator commutes with the group.
    pub fn is_canonically_paired(&self, g: &StabilizerGroup) -> bool {
        let p = g.p;
        for (i, x) in self.logical_x.iter().enumerate() {
            for (j, z) in self.logical_z.iter().enumerate() {
                if dot(p, x.x(), z.z()) != u32::from(i == j) {
                    return false;
                }
            }
        }
        self.logical_x.iter().chain(&self.logical_z).all(|l| {
            g.generators
                .iter()
                .all(|m| l.commutes_with(m).unwrap_or(false))
        })
    }

    /// True when no representative acts on a share in `avoid`.
    pub fn avoids(&self, j: &ShareSet) -> bool {
        self.logical_x
            .iter()
            .chain(&self.logical_z)
            .all(|w| w.support().iter().all(|&q| !j.contains(q)))
    }
}

/// Picks `count` rows of `cands` that stay independent modulo `base`.
fn independent_mod(cands: &LinearCode, base: &LinearCode, count: usize) -> Option<Vec<Vec<u32>>> {
    let p = base.prime();
    let mut acc = base.generator().clone();
    let mut chosen = Vec::new();
    for row in cands.generator().row_iter() {
        if chosen.len() == count {
            break;
        }
        let trial = acc
            .vstack(&Matrix::from_rows(p, row.len(), &[row]).expect("same length"))
            .expect("same width");
        if trial.rank() > acc.rank() {
            acc = trial;
            chosen.push(row.to_vec());
        }
    }
    (chosen.len() == count).then_some(chosen)
}

/// Lightest element of `v + d`, ties broken lexicographically.
fn min_support(v: &[u32], d: &LinearCode, budget: u128) -> Result<Vec<u32>> {
    let p = d.prime();
    let mut best: Option<(usize, Vec<u32>)> = None;
    d.for_each_codeword(budget, |w| {
        let cand: Vec<u32> = v.iter().zip(w).map(|(&a, &b)| p.add(a, b)).collect();
        let key = (cand.iter().filter(|&&c| c != 0).count(), cand);
        if best.as_ref().is_none_or(|b| key < *b) {
            best = Some(key);
        }
    })?;
    Ok(best.expect("the zero codeword is always visited").1)
}

/// `z'_j = sum_m (P^-1)_{mj} z_m` with `P_ij = x_i . z_j`, so that `x_i . z'_j = delta_ij`.
fn pair(xs: &[Vec<u32>], zs: &[Vec<u32>], p: Prime) -> Result<Vec<Vec<u32>>> {
    let l = xs.len();
    let mut gram = Matrix::zeros(p, l, l);
    for (i, x) in xs.iter().enumerate() {
        for (j, z) in zs.iter().enumerate() {
            gram.set(i, j, dot(p, x, z));
        }
    }
    let inv = gram
        .inverse()
        .ok_or_else(|| Error::Infeasible("logical X and Z classes pair degenerately".into()))?;
    Ok((0..l)
        .map(|j| {
            let mut z = vec![0u32; zs[0].len()];
            for (m, zm) in zs.iter().enumerate() {
                let c = inv.raw(m, j);
                for (zi, &v) in z.iter_mut().zip(zm) {
                    *zi = p.add(*zi, p.mul(c, v));
                }
            }
            z
        })
        .collect())
}

struct Classes {
    c1: LinearCode,
    c2: LinearCode,
    x_stab: LinearCode,
    z_stab: LinearCode,
}

fn classes(params: &SchemeParams, avoid: &ShareSet) -> Result<Classes> {
    let c1 = build_c1(params);
    let c2 = build_c2(params);
    Ok(Classes {
        x_stab: c2.shorten(avoid)?,
        z_stab: c1.dual().shorten(avoid)?,
        c1,
        c2,
    })
}

fn assemble(
    p: Prime,
    xs: Vec<Vec<u32>>,
    zs: Vec<Vec<u32>>,
    cls: &Classes,
    avoid: &ShareSet,
    budget: &Budget,
) -> Result<LogicalOperatorSet> {
    let logical_x = xs
        .iter()
        .map(|x| min_support(x, &cls.x_stab, budget.max_codewords).map(|v| PauliWord::x_type(p, v)))
        .collect::<Result<_>>()?;
    let logical_z = zs
        .iter()
        .map(|z| min_support(z, &cls.z_stab, budget.max_codewords).map(|v| PauliWord::z_type(p, v)))
        .collect::<Result<_>>()?;
    Ok(LogicalOperatorSet {
        logical_x,
        logical_z,
        avoid: avoid.clone(),
        calibrated: false,
    })
}

/// Logical representatives supported off `avoid`.
///
/// X logicals come from `C1` shortened on `avoid`, taken independent modulo
/// `C2`; Z logicals from `C2^perp` shortened on `avoid`, independent modulo
/// `C1^perp`, then recombined so that `x_i . z_j = delta_ij`. Each
/// representative is the lightest in its class modulo the stabilizer part
/// that also avoids the set.
pub fn find_logical_operators(
    g: &StabilizerGroup,
    params: &SchemeParams,
    avoid: &ShareSet,
    budget: &Budget,
) -> Result<LogicalOperatorSet> {
    if avoid.universe() != params.n || g.n != params.n {
        return Err(Error::Domain(
            "share set and stabilizer disagree on n".into(),
        ));
    }
    require_advance_shareable(&g.symplectic_code, avoid)?;
    let cls = classes(params, avoid)?;
    let l = params.l;
    let xs = independent_mod(&cls.c1.shorten(avoid)?, &cls.c2, l).ok_or_else(|| {
        Error::Infeasible(format!("C1 has no {l} logical X classes avoiding {avoid}"))
    })?;
    let c1_dual = cls.c1.dual();
    let zs = independent_mod(&cls.c2.dual().shorten(avoid)?, &c1_dual, l).ok_or_else(|| {
        Error::Infeasible(format!(
            "C2^perp has no {l} logical Z classes avoiding {avoid}"
        ))
    })?;
    let zs = pair(&xs, &zs, params.p)?;
    assemble(params.p, xs, zs, &cls, avoid, budget)
}

/// Adjusts representatives and phases so that `Xbar_i Enc|s> = Enc|s + e_i>`
/// and `Zbar_i Enc|s> = omega^(s_i) Enc|s>`, then checks both identities on
/// every basis secret.
pub fn calibrate_logicals(
    g: &StabilizerGroup,
    ops: &LogicalOperatorSet,
    encoder: &Encoder,
    budget: &Budget,
) -> Result<LogicalOperatorSet> {
    let params = encoder.params();
    let p = params.p;
    let l = params.l;
    if !ops.is_canonically_paired(g) {
        return Err(Error::Calibration(
            "logical operators are not canonically paired".into(),
        ));
    }
    ensure(
        "logical calibration sweep",
        saturating_pow(p.get(), l + params.n),
        budget.max_codespace_dim,
    )?;
    let zero = encoder.encode_basis(&vec![0; l])?;

    // Xbar_i Enc|0> = Enc|t_i>; read t_i off a support ket
    let mut shifts = Matrix::zeros(p, l, l);
    for (i, x) in ops.logical_x.iter().enumerate() {
        let moved = x.apply(&zero)?;
        let ket = moved
            .support(1e-9)
            .into_iter()
            .next()
            .ok_or_else(|| Error::Calibration("logical X annihilated the code".into()))?;
        let t = encoder
            .secret_of_ket(&ket)
            .ok_or_else(|| Error::Calibration(format!("logical X_{} leaves C1", i + 1)))?;
        for (j, &v) in t.iter().enumerate() {
            shifts.set(i, j, v);
        }
    }
    let tinv = shifts
        .inverse()
        .ok_or_else(|| Error::Calibration("logical X shifts are dependent".into()))?;
    let xs: Vec<Vec<u32>> = (0..l)
        .map(|i| {
            let mut v = vec![0u32; params.n];
            for (m, xm) in ops.logical_x.iter().enumerate() {
                let c = tinv.raw(i, m);
                for (vi, &a) in v.iter_mut().zip(xm.x()) {
                    *vi = p.add(*vi, p.mul(c, a));
                }
            }
            v
        })
        .collect();
    let zs_old: Vec<Vec<u32>> = ops.logical_z.iter().map(|z| z.z().to_vec()).collect();
    let zs = pair(&xs, &zs_old, p)?;
    let cls = classes(params, &ops.avoid)?;
    let mut out = assemble(p, xs, zs, &cls, &ops.avoid, budget)?;

    let root = |a: &StateVector, b: &StateVector| -> Result<u32> {
        let ip = a.inner(b)?;
        if (ip.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::Calibration(format!(
                "overlap {ip} is not a root of unity"
            )));
        }
        Ok(nearest_root_exponent(p, ip))
    };
    for i in 0..l {
        let mut e = vec![0u32; l];
        e[i] = 1;
        let target = encoder.encode_basis(&e)?;
        let r = root(&target, &out.logical_x[i].apply(&zero)?)?;
        let x = out.logical_x[i].clone();
        out.logical_x[i] = x.clone().with_phase(p.sub(x.phase(), r));
        let r = root(&zero, &out.logical_z[i].apply(&zero)?)?;
        let z = out.logical_z[i].clone();
        out.logical_z[i] = z.clone().with_phase(p.sub(z.phase(), r));
    }

    let omega = omega_powers(p);
    let mut cache: HashMap<Vec<u32>, StateVector> = HashMap::new();
    let secrets = p.as_usize().pow(l as u32);
    for si in 0..secrets {
        let s = digits_of(p, l, si);
        let enc = encoder.encode_basis(&s)?;
        for i in 0..l {
            let mut shifted = s.clone();
            shifted[i] = p.add(shifted[i], 1);
            let target = match cache.get(&shifted) {
                Some(t) => t.clone(),
                None => encoder.encode_basis(&shifted)?,
            };
            let dev_x = out.logical_x[i].apply(&enc)?.max_abs_diff(&target)?;
            let z_out = out.logical_z[i].apply(&enc)?;
            let phase = omega[s[i] as usize];
            let dev_z = z_out
                .amplitudes()
                .iter()
                .zip(enc.amplitudes())
                .map(|(a, b)| (a - phase * b).norm())
                .fold(0.0, f64::max);
            if dev_x > 1e-9 || dev_z > 1e-9 {
                return Err(Error::Calibration(format!(
                    "logical operators on qudit {} fail for secret {s:?} (X deviation {dev_x:e}, Z deviation {dev_z:e})",
                    i + 1
                )));
            }
        }
        cache.insert(s, enc);
    }
    out.calibrated = true;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> SchemeParams {
        SchemeParams::new(5, 3, 2, None).unwrap()
    }

    fn set(members: &[usize], n: usize) -> ShareSet {
        ShareSet::new(members.iter().copied(), n).unwrap()
    }

    #[test]
    fn generators_of_fixture() {
        let p = fixture();
        let g = build_stabilizer(&p);
        assert_eq!(
            g.generators(),
            &[
                PauliWord::z_type(p.p, vec![4, 3, 2, 1]),
                PauliWord::x_type(p.p, vec![1, 4, 4, 1])
            ]
        );
        assert_eq!(dot(p.p, &[4, 3, 2, 1], &[1, 4, 4, 1]), 0);
        assert_eq!(g.symplectic_code().dim(), 2);
    }

    #[test]
    fn generator_count_is_n_minus_l() {
        for (pp, k, l) in [(5, 3, 2), (7, 4, 2), (11, 5, 3), (7, 3, 3), (13, 5, 1)] {
            let p = SchemeParams::new(pp, k, l, None).unwrap();
            let g = build_stabilizer(&p);
            assert_eq!(g.generators().len(), p.n - p.l);
            assert_eq!(g.symplectic_code().dim(), 2 * (k - l));
        }
    }

    #[test]
    fn encodings_are_stabilized() {
        let p = fixture();
        let g = build_stabilizer(&p);
        let enc = Encoder::new(&p);
        for i in 0..25u32 {
            let e = enc.encode_basis(&[i / 5, i % 5]).unwrap();
            assert!(check_stabilizes(&g, &e).unwrap() <= 1e-10);
        }
        let stray = StateVector::basis(p.p, &[0, 0, 0, 1]).unwrap();
        assert!(check_stabilizes(&g, &stray).unwrap() >= 0.1);
    }

    #[test]
    fn codespace_dimensions() {
        let b = Budget::default();
        let g = build_stabilizer(&fixture());
        assert_eq!(codespace_dimension(&g, &b).unwrap(), 25);
        let p5 = Prime::new(5).unwrap();
        let trivial = StabilizerGroup::from_generators(p5, 3, vec![]).unwrap();
        assert_eq!(codespace_dimension(&trivial, &b).unwrap(), 125);
        let g = build_stabilizer(&SchemeParams::new(7, 3, 1, None).unwrap());
        assert_eq!(codespace_dimension(&g, &b).unwrap(), 7);
    }

    #[test]
    fn codespace_of_a_single_phase_shifted_generator() {
        // omega X fixes only the X eigenvector with eigenvalue omega^2
        let p = Prime::new(3).unwrap();
        let g = StabilizerGroup::from_generators(
            p,
            1,
            vec![PauliWord::new(p, 1, vec![1], vec![0]).unwrap()],
        )
        .unwrap();
        assert_eq!(codespace_dimension(&g, &Budget::default()).unwrap(), 1);
    }

    #[test]
    fn non_commuting_generators_rejected() {
        let p = Prime::new(3).unwrap();
        let r = StabilizerGroup::from_generators(
            p,
            1,
            vec![PauliWord::x_type(p, vec![1]), PauliWord::z_type(p, vec![1])],
        );
        assert!(r.is_err());
    }

    #[test]
    fn logicals_without_avoidance() {
        let p = fixture();
        let g = build_stabilizer(&p);
        let ops = find_logical_operators(&g, &p, &ShareSet::empty(4), &Budget::default()).unwrap();
        assert_eq!(ops.logical_x.len(), 2);
        assert_eq!(ops.logical_z.len(), 2);
        assert!(!ops.calibrated);
        assert!(ops.is_canonically_paired(&g));
        let c1 = build_c1(&p);
        let c2 = build_c2(&p);
        for x in &ops.logical_x {
            assert!(x.z().iter().all(|&v| v == 0));
            assert!(c1.contains(x.x()) && !c2.contains(x.x()));
        }
        for z in &ops.logical_z {
            assert!(z.x().iter().all(|&v| v == 0));
            assert!(c2.dual().contains(z.z()) && !c1.dual().contains(z.z()));
        }
    }

    #[test]
    fn logicals_avoiding_one_share_exist() {
        let p = fixture();
        let g = build_stabilizer(&p);
        let c1 = build_c1(&p);
        // brute force: the C1 words with first coordinate 0 reach both nontrivial classes
        let mut classes = std::collections::HashSet::new();
        c1.for_each_codeword(1000, |w| {
            if w[0] == 0 {
                classes.insert(Encoder::new(&p).secret_of_ket(w).unwrap());
            }
        })
        .unwrap();
        assert_eq!(classes.len(), 25);
        for j in 1..=4 {
            let avoid = set(&[j], 4);
            let ops = find_logical_operators(&g, &p, &avoid, &Budget::default()).unwrap();
            assert!(ops.avoids(&avoid));
            assert!(ops.is_canonically_paired(&g));
        }
    }

    #[test]
    fn avoiding_two_shares_is_rejected() {
        let p = fixture();
        let g = build_stabilizer(&p);
        let err = find_logical_operators(&g, &p, &set(&[1, 2], 4), &Budget::default()).unwrap_err();
        assert!(matches!(
            err,
            Error::NotAdvanceShareable {
                shortened_dim: 0,
                required: -2,
                ..
            }
        ));
    }

    #[test]
    fn calibration_on_fixture() {
        let p = fixture();
        let g = build_stabilizer(&p);
        let enc = Encoder::new(&p);
        let b = Budget::default();
        for avoid in [ShareSet::empty(4), set(&[1], 4), set(&[3], 4)] {
            let ops = find_logical_operators(&g, &p, &avoid, &b).unwrap();
            let cal = calibrate_logicals(&g, &ops, &enc, &b).unwrap();
            assert!(cal.calibrated && cal.avoids(&avoid) && cal.is_canonically_paired(&g));

            let e10 = enc.encode_basis(&[1, 0]).unwrap();
            let out = cal.logical_z[0].apply(&e10).unwrap();
            let w = omega_powers(p.p)[1];
            assert!(
                out.max_abs_diff(
                    &StateVector::new(p.p, 4, e10.amplitudes().iter().map(|a| a * w).collect())
                        .unwrap()
                )
                .unwrap()
                    < 1e-9
            );

            let e00 = enc.encode_basis(&[0, 0]).unwrap();
            let e01 = enc.encode_basis(&[0, 1]).unwrap();
            let out = cal.logical_x[1].apply(&e00).unwrap();
            assert!(out.max_abs_diff(&e01).unwrap() < 1e-9);
        }
    }

    #[test]
    fn calibration_on_larger_schemes() {
        let b = Budget::default();
        for (pp, k, l, avoid) in [(7, 3, 2, vec![2]), (7, 2, 1, vec![3]), (5, 2, 2, vec![])] {
            let p = SchemeParams::new(pp, k, l, None).unwrap();
            let g = build_stabilizer(&p);
            let avoid = set(&avoid, p.n);
            let ops = find_logical_operators(&g, &p, &avoid, &b).unwrap();
            let cal = calibrate_logicals(&g, &ops, &Encoder::new(&p), &b).unwrap();
            assert!(cal.avoids(&avoid));
        }
    }

    #[test]
    fn calibration_rejects_unpaired_operators() {
        let p = fixture();
        let g = build_stabilizer(&p);
        let b = Budget::default();
        let mut ops = find_logical_operators(&g, &p, &ShareSet::empty(4), &b).unwrap();
        ops.logical_z.swap(0, 1);
        assert!(matches!(
            calibrate_logicals(&g, &ops, &Encoder::new(&p), &b),
            Err(Error::Calibration(_))
        ));
    }
}
