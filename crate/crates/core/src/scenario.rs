//! Finite families of discrete probability measures and the sublinear
//! expectation they induce, `E^[f] = max_P E_P[f]`.
//!
//! Every supremum here is a finite maximum, so values are exact up to the
//! single rounding of each linear expectation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::BoundedLipschitzFn;
use crate::numeric::{exact_dot, exact_sum};

/// Absolute tolerance on `|sum(weights) - 1|`.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub point: f64,
    pub weight: f64,
}

/// Finitely supported probability measure. Duplicate points are kept as
/// separate atoms; their weights add up in every query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    atoms: Vec<(f64, f64)>,
}

impl TryFrom<MeasureRepr> for DiscreteMeasure {
    type Error = Error;

    fn try_from(r: MeasureRepr) -> Result<Self> {
        DiscreteMeasure::new(r.atoms)
    }
}

impl From<DiscreteMeasure> for MeasureRepr {
    fn from(m: DiscreteMeasure) -> Self {
        MeasureRepr {
            atoms: m.atoms.iter().map(|a| (a.point, a.weight)).collect(),
        }
    }
}

impl DiscreteMeasure {
    /// Builds a measure from `(point, weight)` pairs. Weights are validated,
    /// never renormalized.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|(point, weight)| Atom { point, weight })
            .collect();
        for (i, a) in atoms.iter().enumerate() {
            if !a.point.is_finite() {
                return Err(Error::arg(format!(
                    "atom {i}: point {} is not finite",
                    a.point
                )));
            }
            if !(0.0..=1.0).contains(&a.weight) {
                return Err(Error::arg(format!(
                    "atom {i}: weight {} is outside [0, 1]",
                    a.weight
                )));
            }
        }
        let total = exact_sum(atoms.iter().map(|a| a.weight));
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::arg(format!("weights sum to {total}, expected 1")));
        }
        Ok(DiscreteMeasure { atoms })
    }

    pub fn dirac(point: f64) -> Result<Self> {
        Self::new([(point, 1.0)])
    }

    /// Equal weights on the given points.
    pub fn uniform(points: &[f64]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::arg("uniform measure needs at least one point"));
        }
        let w = 1.0 / points.len() as f64;
        Self::new(points.iter().map(|&p| (p, w)))
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `E_P[f] = sum_i w_i f(x_i)`.
    pub fn expect_linear(&self, f: &BoundedLipschitzFn) -> Result<f64> {
        self.expect_by(|x| f.eval(x))
    }

    pub(crate) fn expect_by<F: FnMut(f64) -> f64>(&self, mut f: F) -> Result<f64> {
        let mut vals = Vec::with_capacity(self.atoms.len());
        for (index, a) in self.atoms.iter().enumerate() {
            let value = f(a.point);
            if !value.is_finite() {
                return Err(Error::Evaluation {
                    index,
                    point: a.point,
                    value,
                });
            }
            vals.push((a.weight, value));
        }
        Ok(exact_dot(vals))
    }

    /// Fallible variant for integrands that themselves may fail.
    pub(crate) fn try_expect_by<F>(&self, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let mut vals = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            vals.push((a.weight, f(a.point)?));
        }
        Ok(exact_dot(vals))
    }

    /// `P(A)` for the event given as a predicate on points.
    pub fn probability<P: Fn(f64) -> bool>(&self, event: P) -> f64 {
        exact_sum(
            self.atoms
                .iter()
                .filter(|a| event(a.point))
                .map(|a| a.weight),
        )
    }
}

/// Result of a sublinear expectation: the value and the first measure (in
/// family order) attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SublinearValue {
    pub value: f64,
    pub argmax_index: usize,
}

/// Nonempty family of discrete measures, the ambiguity set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<DiscreteMeasure>", into = "Vec<DiscreteMeasure>")]
pub struct ScenarioFamily {
    measures: Vec<DiscreteMeasure>,
}

impl TryFrom<Vec<DiscreteMeasure>> for ScenarioFamily {
    type Error = Error;

    fn try_from(measures: Vec<DiscreteMeasure>) -> Result<Self> {
        ScenarioFamily::new(measures)
    }
}

impl From<ScenarioFamily> for Vec<DiscreteMeasure> {
    fn from(f: ScenarioFamily) -> Self {
        f.measures
    }
}

impl ScenarioFamily {
    pub fn new(measures: Vec<DiscreteMeasure>) -> Result<Self> {
        if measures.is_empty() {
            return Err(Error::arg(
                "scenario family must contain at least one measure",
            ));
        }
        Ok(ScenarioFamily { measures })
    }

    /// Family of point masses, one per point.
    pub fn diracs(points: &[f64]) -> Result<Self> {
        Self::new(
            points
                .iter()
                .map(|&p| DiscreteMeasure::dirac(p))
                .collect::<Result<_>>()?,
        )
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Data(format!("scenario family JSON: {e}")))
    }

    pub fn measures(&self) -> &[DiscreteMeasure] {
        &self.measures
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Union of all atom points, in family then atom order.
    pub fn support(&self) -> impl Iterator<Item = f64> + '_ {
        self.measures
            .iter()
            .flat_map(|m| m.atoms.iter().map(|a| a.point))
    }

    /// `max_P E_P[f]`; ties go to the lowest measure index.
    pub fn sublinear_expect(&self, f: &BoundedLipschitzFn) -> Result<SublinearValue> {
        self.sublinear_expect_by(|x| f.eval(x))
    }

    pub(crate) fn sublinear_expect_by<F: FnMut(f64) -> f64>(
        &self,
        mut f: F,
    ) -> Result<SublinearValue> {
        self.argmax(|m| m.expect_by(&mut f))
    }

    pub(crate) fn try_sublinear_expect_by<F>(&self, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        Ok(self.argmax(|m| m.try_expect_by(&mut f))?.value)
    }

    fn argmax<G>(&self, mut expect: G) -> Result<SublinearValue>
    where
        G: FnMut(&DiscreteMeasure) -> Result<f64>,
    {
        let mut best = SublinearValue {
            value: f64::NEG_INFINITY,
            argmax_index: 0,
        };
        for (i, m) in self.measures.iter().enumerate() {
            let v = expect(m)?;
            if v > best.value {
                best = SublinearValue {
                    value: v,
                    argmax_index: i,
                };
            }
        }
        Ok(best)
    }

    /// Upper capacity `V(A) = max_P P(A)`.
    pub fn capacity<P: Fn(f64) -> bool>(&self, event: P) -> f64 {
        self.measures
            .iter()
            .map(|m| m.probability(&event))
            .fold(0.0, f64::max)
    }
}
