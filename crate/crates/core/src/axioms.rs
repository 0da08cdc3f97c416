//! Randomized verification that the family supremum is a sublinear
//! expectation: monotone, constant preserving, sub-additive and positively
//! homogeneous.
//!
//! Generated measures have dyadic weights that sum to one exactly, so the
//! monotonicity and constant checks are exact comparisons.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::func::BoundedLipschitzFn;
use crate::scenario::{DiscreteMeasure, ScenarioFamily};

/// Absolute slack for sub-additivity, relative slack for homogeneity.
pub const AXIOM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub cases: usize,
    pub seed: u64,
    pub monotonicity_violations: usize,
    pub constant_violations: usize,
    pub subadditivity_violations: usize,
    pub homogeneity_violations: usize,
    /// Largest `E[f+g] - E[f] - E[g]` seen.
    pub max_subadditivity_excess: f64,
    /// Largest `|E[lf] - l E[f]| / max(1, |l E[f]|)` seen.
    pub max_homogeneity_error: f64,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.monotonicity_violations == 0
            && self.constant_violations == 0
            && self.subadditivity_violations == 0
            && self.homogeneity_violations == 0
    }

    pub const CSV_HEADER: &'static str = "axiom,cases,violations,max_error";

    pub fn to_csv_rows(&self) -> Vec<String> {
        vec![
            format!(
                "monotonicity,{},{},0",
                self.cases, self.monotonicity_violations
            ),
            format!(
                "constant_preserving,{},{},0",
                self.cases, self.constant_violations
            ),
            format!(
                "subadditivity,{},{},{}",
                self.cases, self.subadditivity_violations, self.max_subadditivity_excess
            ),
            format!(
                "positive_homogeneity,{},{},{}",
                self.cases, self.homogeneity_violations, self.max_homogeneity_error
            ),
        ]
    }
}

const WEIGHT_BITS: i32 = 20;

/// Random family: 1-4 measures of 1-6 atoms on `[-5, 5]` with dyadic weights.
pub fn random_family<R: Rng>(rng: &mut R) -> Result<ScenarioFamily> {
    let scale = f64::from(1u32 << WEIGHT_BITS);
    let n_measures = rng.random_range(1..=4);
    let measures = (0..n_measures)
        .map(|_| {
            let n_atoms = rng.random_range(1..=6);
            let raw: Vec<u32> = (0..n_atoms).map(|_| rng.random_range(0..=1000)).collect();
            let total = f64::from(raw.iter().sum::<u32>().max(1));
            let mut weights: Vec<f64> = raw[..n_atoms - 1]
                .iter()
                .map(|&u| (f64::from(u) / total * scale).floor() / scale)
                .collect();
            weights.push(1.0 - weights.iter().sum::<f64>());
            DiscreteMeasure::new(
                weights
                    .into_iter()
                    .map(|w| (rng.random_range(-5.0..=5.0), w)),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    ScenarioFamily::new(measures)
}

/// Random Lipschitz function: a sum of one to three scaled basis terms.
pub fn random_function<R: Rng>(rng: &mut R) -> BoundedLipschitzFn {
    let terms = rng.random_range(1..=3);
    let mut f = BoundedLipschitzFn::constant(rng.random_range(-1.0..=1.0));
    for _ in 0..terms {
        let c = rng.random_range(-2.0..=2.0);
        let s = rng.random_range(-3.0..=3.0);
        let basis = match rng.random_range(0..5) {
            0 => BoundedLipschitzFn::identity(),
            1 => BoundedLipschitzFn::abs_dev(s),
            2 => BoundedLipschitzFn::sin().compose_scale(rng.random_range(0.1..=4.0)),
            3 => BoundedLipschitzFn::new(move |x| (x - s).max(0.0), 1.0, f64::INFINITY)
                .expect("valid"),
            _ => BoundedLipschitzFn::new(move |x| x.min(s), 1.0, f64::INFINITY).expect("valid"),
        };
        f = f.plus(&basis.scaled(c));
    }
    f
}

/// Runs `cases` randomized checks of all four properties.
pub fn verify_axioms(cases: usize, seed: u64) -> Result<AxiomReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AxiomReport {
        cases,
        seed,
        monotonicity_violations: 0,
        constant_violations: 0,
        subadditivity_violations: 0,
        homogeneity_violations: 0,
        max_subadditivity_excess: f64::NEG_INFINITY,
        max_homogeneity_error: 0.0,
    };
    for _ in 0..cases {
        let fam = random_family(&mut rng)?;
        let f = random_function(&mut rng);
        let g = random_function(&mut rng);
        let e = |h: &BoundedLipschitzFn| fam.sublinear_expect(h).map(|v| v.value);

        // f <= f + h with h >= 0
        let bump = BoundedLipschitzFn::abs_dev(rng.random_range(-3.0..=3.0))
            .scaled(rng.random_range(0.0..=2.0))
            .offset(rng.random_range(0.0..=1.0));
        if e(&f.plus(&bump))? < e(&f)? {
            report.monotonicity_violations += 1;
        }

        let c = rng.random_range(-100.0..=100.0);
        if e(&BoundedLipschitzFn::constant(c))? != c {
            report.constant_violations += 1;
        }

        let (ef, eg) = (e(&f)?, e(&g)?);
        let excess = e(&f.plus(&g))? - (ef + eg);
        report.max_subadditivity_excess = report.max_subadditivity_excess.max(excess);
        if excess > AXIOM_TOLERANCE {
            report.subadditivity_violations += 1;
        }

        let lambda = rng.random_range(0.0..=10.0);
        let scaled = lambda * ef;
        let err = (e(&f.scaled(lambda))? - scaled).abs() / scaled.abs().max(1.0);
        report.max_homogeneity_error = report.max_homogeneity_error.max(err);
        if err > AXIOM_TOLERANCE {
            report.homogeneity_violations += 1;
        }
    }
    Ok(report)
}
