//! Maximum likelihood for the maximal distribution.
//!
//! The likelihood of a realized sample under `M[mu_lo, mu_hi]` is the point
//! capacity of the sample, which through the Dirac representation is
//! `V = 1` when `mu_lo <= min(x) <= max(x) <= mu_hi` and `V = 0` otherwise.
//! Estimation maximizes `V` first and then minimizes the uncertainty
//! `delta = mu_hi - mu_lo`, which gives `(min(x), max(x))`.
//!
//! The estimator never uses independence, so it applies unchanged to
//! identically distributed samples with arbitrary dependence.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::func::MultiLipschitzFn;
use crate::joint::JointSpec;
use crate::maximal::{GridSpec, MaximalDist};
use crate::numeric::cmp_width;

/// Nonempty sample of finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    values: Vec<f64>,
    min: f64,
    max: f64,
}

impl SampleSet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::arg("sample set is empty"));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::arg(format!("sample {i} is not finite ({v})")));
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(SampleSet { values, min, max })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MleResult {
    pub mu_lo_hat: f64,
    pub mu_hi_hat: f64,
    pub delta: f64,
    pub n: usize,
}

impl MleResult {
    fn new(mu_lo_hat: f64, mu_hi_hat: f64, n: usize) -> Self {
        MleResult {
            mu_lo_hat,
            mu_hi_hat,
            delta: mu_hi_hat - mu_lo_hat,
            n,
        }
    }

    pub fn as_dist(&self) -> MaximalDist {
        MaximalDist::new(self.mu_lo_hat, self.mu_hi_hat).expect("estimate is ordered")
    }
}

/// `V(x_1, ..., x_n; mu_lo, mu_hi)`, either 0 or 1.
pub fn likelihood(s: &SampleSet, mu_lo: f64, mu_hi: f64) -> Result<u8> {
    if mu_lo.is_nan() || mu_hi.is_nan() || mu_lo > mu_hi {
        return Err(Error::arg(format!(
            "need mu_lo <= mu_hi, got [{mu_lo}, {mu_hi}]"
        )));
    }
    Ok(u8::from(mu_lo <= s.min && s.max <= mu_hi))
}

/// Closed-form solution of the minimax problem: `(min, max)` of the sample.
pub fn mle_estimate(s: &SampleSet) -> MleResult {
    MleResult::new(s.min, s.max, s.len())
}

/// Brute-force solution of the minimax problem over a candidate grid.
///
/// Enumerates every ordered pair `mu_lo <= mu_hi` of grid values, keeps the
/// pairs with the largest likelihood, and among them the smallest width;
/// remaining ties go to the smallest `mu_lo`, then the smallest `mu_hi`.
/// Widths are compared exactly, not after rounding the subtraction.
pub fn solve_minimax_oracle(s: &SampleSet, candidate_grid: &[f64]) -> Result<MleResult> {
    if let Some(v) = candidate_grid.iter().find(|v| !v.is_finite()) {
        return Err(Error::arg(format!(
            "candidate grid contains non-finite value {v}"
        )));
    }
    if !candidate_grid.contains(&s.min) || !candidate_grid.contains(&s.max) {
        return Err(Error::arg(format!(
            "candidate grid must contain the sample extremes {} and {}",
            s.min, s.max
        )));
    }
    let mut grid = candidate_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut best: Option<(u8, f64, f64)> = None;
    for (i, &lo) in grid.iter().enumerate() {
        for &hi in &grid[i..] {
            let v = likelihood(s, lo, hi)?;
            let better = match best {
                None => true,
                Some((bv, blo, bhi)) => {
                    v > bv
                        || (v == bv
                            && cmp_width(lo, hi, blo, bhi)
                                .then(lo.total_cmp(&blo))
                                .then(hi.total_cmp(&bhi))
                                .is_lt())
                }
            };
            if better {
                best = Some((v, lo, hi));
            }
        }
    }
    let (_, lo, hi) = best.expect("grid holds the sample extremes");
    Ok(MleResult::new(lo, hi, s.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnbiasednessCheck {
    pub upper_ok: bool,
    pub lower_ok: bool,
    /// `E^[max(X_1, ..., X_n)]`.
    pub upper_value: f64,
    /// `-E^[-min(X_1, ..., X_n)]`.
    pub lower_value: f64,
}

/// Checks that the sample maximum and minimum of `n` independent copies of
/// `d` have upper and lower expectation equal to `mu_hi` and `mu_lo`, using
/// the nested joint evaluation on `atoms_per_axis` grid points per axis.
pub fn unbiasedness_check(
    d: &MaximalDist,
    n: usize,
    atoms_per_axis: usize,
) -> Result<UnbiasednessCheck> {
    if n == 0 {
        return Err(Error::arg("n must be at least 1"));
    }
    if atoms_per_axis < 2 {
        return Err(Error::arg(format!(
            "atoms_per_axis must be at least 2, got {atoms_per_axis}"
        )));
    }
    let g = GridSpec::for_atoms(d, atoms_per_axis)?;
    let joint = JointSpec::maximal(std::iter::repeat_n(*d, n))?;
    let upper_value = joint
        .compose_independent(&MultiLipschitzFn::max_of(n)?, &g)?
        .value;
    let lower_value = -joint
        .compose_independent(&MultiLipschitzFn::neg_min_of(n)?, &g)?
        .value;
    Ok(UnbiasednessCheck {
        upper_ok: upper_value == d.mu_hi(),
        lower_ok: lower_value == d.mu_lo(),
        upper_value,
        lower_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[f64]) -> SampleSet {
        SampleSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sample_validation() {
        assert!(SampleSet::new(vec![]).is_err());
        assert!(SampleSet::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn likelihood_examples() {
        let x = s(&[0.3, 1.2, 2.5]);
        assert_eq!(likelihood(&x, 0.0, 3.0).unwrap(), 1);
        assert_eq!(likelihood(&x, 0.5, 3.0).unwrap(), 0);
        assert_eq!(likelihood(&s(&[1.0]), 1.0, 1.0).unwrap(), 1);
        assert!(likelihood(&x, 3.0, 0.0).is_err());
    }

    #[test]
    fn estimate_examples() {
        let r = mle_estimate(&s(&[0.3, 1.2, 2.5]));
        assert_eq!((r.mu_lo_hat, r.mu_hi_hat, r.n), (0.3, 2.5, 3));
        assert_eq!(r.delta, 2.5 - 0.3);
        let r = mle_estimate(&s(&[5.0]));
        assert_eq!((r.mu_lo_hat, r.mu_hi_hat, r.delta), (5.0, 5.0, 0.0));
        let r = mle_estimate(&s(&[-1.0, -1.0, -1.0]));
        assert_eq!((r.mu_lo_hat, r.mu_hi_hat), (-1.0, -1.0));
    }

    #[test]
    fn oracle_examples() {
        let x = s(&[0.3, 1.2, 2.5]);
        let r = solve_minimax_oracle(&x, &[0.0, 0.3, 1.2, 2.5, 3.0]).unwrap();
        assert_eq!((r.mu_lo_hat, r.mu_hi_hat), (0.3, 2.5));
        assert_eq!(r, mle_estimate(&x));

        let r = solve_minimax_oracle(&s(&[1.0]), &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!((r.mu_lo_hat, r.mu_hi_hat), (1.0, 1.0));

        let r = solve_minimax_oracle(&s(&[-2.0, 2.0]), &[-3.0, -2.0, 0.0, 2.0, 3.0]).unwrap();
        assert_eq!((r.mu_lo_hat, r.mu_hi_hat), (-2.0, 2.0));

        assert!(solve_minimax_oracle(&x, &[0.0, 0.3, 3.0]).is_err());
    }

    #[test]
    fn oracle_is_exact_below_rounding() {
        // 1e16 - 0.5 and 1e16 - 0.25 both round to 1e16; the narrower pair
        // must still win over the smaller mu_lo
        let x = s(&[0.5, 1e16]);
        let r = solve_minimax_oracle(&x, &[0.25, 0.5, 1e16]).unwrap();
        assert_eq!((r.mu_lo_hat, r.mu_hi_hat), (0.5, 1e16));
    }

    #[test]
    fn unbiasedness_examples() {
        let r = unbiasedness_check(&MaximalDist::new(0.0, 1.0).unwrap(), 3, 5).unwrap();
        assert_eq!((r.upper_value, r.lower_value), (1.0, 0.0));
        assert!(r.upper_ok && r.lower_ok);

        let r = unbiasedness_check(&MaximalDist::degenerate(0.7).unwrap(), 4, 3).unwrap();
        assert_eq!((r.upper_value, r.lower_value), (0.7, 0.7));

        let r = unbiasedness_check(&MaximalDist::new(-1.0, 2.0).unwrap(), 1, 4).unwrap();
        assert_eq!((r.upper_value, r.lower_value), (2.0, -1.0));

        assert!(unbiasedness_check(&MaximalDist::new(0.0, 1.0).unwrap(), 0, 3).is_err());
        assert!(unbiasedness_check(&MaximalDist::new(0.0, 1.0).unwrap(), 2, 1).is_err());
    }
}
