//! Joint evaluation under sequential independence.
//!
//! For marginals `X_1, ..., X_n` where each `X_{i+1}` is independent of
//! `(X_1, ..., X_i)`, the joint expectation is the nested evaluation
//!
//! ```text
//! E^[f(X_1, ..., X_n)] = E^_1[ x_1 -> E^_2[ x_2 -> ... E^_n[ f(x_1, ..., x_{n-1}, X_n) ] ] ]
//! ```
//!
//! The innermost marginal is taken last in the list. The composition is not
//! symmetric in general; [`asymmetry_probe`] evaluates both orders of a pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::{BoundedLipschitzFn, MultiLipschitzFn};
use crate::maximal::{GridSpec, MaximalDist};
use crate::scenario::ScenarioFamily;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marginal {
    Maximal(MaximalDist),
    Family(ScenarioFamily),
}

impl From<MaximalDist> for Marginal {
    fn from(d: MaximalDist) -> Self {
        Marginal::Maximal(d)
    }
}

impl From<ScenarioFamily> for Marginal {
    fn from(f: ScenarioFamily) -> Self {
        Marginal::Family(f)
    }
}

/// Ordered marginals; entry `i + 1` is independent of entries `0..=i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    marginals: Vec<Marginal>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointEval {
    pub value: f64,
    pub error_bound: f64,
}

/// Point capacity together with the approximating sequence
/// `E^[prod_i phi_k^{x_i}(X_i)]`, `k = 1..=k_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointCapacity {
    pub value: f64,
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymmetryProbe {
    /// `E^[E^[f(x, Y)]_{x=X}]`: `Y` independent of `X`.
    pub ab: f64,
    /// `E^[E^[f(X, y)]_{y=Y}]`: `X` independent of `Y`.
    pub ba: f64,
}

impl JointSpec {
    pub fn new(marginals: Vec<Marginal>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::arg(
                "a joint law needs at least one marginal",
            ));
        }
        Ok(JointSpec { marginals })
    }

    pub fn maximal(dists: impl IntoIterator<Item = MaximalDist>) -> Result<Self> {
        Self::new(dists.into_iter().map(Marginal::Maximal).collect())
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    pub fn len(&self) -> usize {
        self.marginals.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Nested evaluation of `E^[f(X_1, ..., X_n)]`. Maximal marginals are
    /// scanned on the grid `g`; each contributes `L_i * step / 2` to the
    /// error bound, where `L_i` is the Lipschitz constant of `f` in its
    /// coordinate (partial maxima and expectations keep that constant).
    pub fn compose_independent(&self, f: &MultiLipschitzFn, g: &GridSpec) -> Result<JointEval> {
        if f.arity() != self.len() {
            return Err(Error::arg(format!(
                "function takes {} arguments but there are {} marginals",
                f.arity(),
                self.len()
            )));
        }
        let mut grids = Vec::with_capacity(self.len());
        let mut error_bound = 0.0;
        for (m, &lip) in self.marginals.iter().zip(f.lipschitz()) {
            match m {
                Marginal::Maximal(d) => {
                    let pts = d.grid(g)?;
                    let h = match pts.as_slice() {
                        [.., a, b] => g.step.max(b - a),
                        _ => 0.0,
                    };
                    error_bound += lip * h / 2.0;
                    grids.push(pts);
                }
                Marginal::Family(_) => grids.push(Vec::new()),
            }
        }
        let mut prefix = Vec::with_capacity(self.len());
        let value = self.nested(0, &mut prefix, f, &grids)?;
        Ok(JointEval { value, error_bound })
    }

    fn nested(
        &self,
        level: usize,
        prefix: &mut Vec<f64>,
        f: &MultiLipschitzFn,
        grids: &[Vec<f64>],
    ) -> Result<f64> {
        if level == self.len() {
            let v = f.eval(prefix);
            if !v.is_finite() {
                return Err(Error::Evaluation {
                    index: level - 1,
                    point: prefix[level - 1],
                    value: v,
                });
            }
            return Ok(v);
        }
        match &self.marginals[level] {
            Marginal::Maximal(_) => {
                let mut best = f64::NEG_INFINITY;
                for &x in &grids[level] {
                    prefix.push(x);
                    let v = self.nested(level + 1, prefix, f, grids);
                    prefix.pop();
                    best = best.max(v?);
                }
                Ok(best)
            }
            Marginal::Family(fam) => fam.try_sublinear_expect_by(|x| {
                prefix.push(x);
                let v = self.nested(level + 1, prefix, f, grids);
                prefix.pop();
                v
            }),
        }
    }

    /// `E^[1{X_1 = x_1, ..., X_n = x_n}]` for maximal marginals: the product
    /// of interval memberships, which is the limit of the returned trace.
    ///
    /// Each trace entry is evaluated exactly: under independence the
    /// expectation of the product factorizes, and `phi_k^{x}` peaks at `x`,
    /// so its maximum over an interval sits at the interval point nearest `x`.
    pub fn point_capacity(&self, points: &[f64], k_max: u32) -> Result<PointCapacity> {
        if points.len() != self.len() {
            return Err(Error::arg(format!(
                "{} points given for {} marginals",
                points.len(),
                self.len()
            )));
        }
        let dists = self
            .marginals
            .iter()
            .map(|m| match m {
                Marginal::Maximal(d) => Ok(*d),
                Marginal::Family(_) => Err(Error::arg("point capacity needs maximal marginals")),
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(x) = points.iter().find(|x| !x.is_finite()) {
            return Err(Error::arg(format!("point {x} is not finite")));
        }
        let value = if dists.iter().zip(points).all(|(d, &x)| d.contains(x)) {
            1.0
        } else {
            0.0
        };
        let trace = (1..=k_max)
            .map(|k| {
                dists.iter().zip(points).fold(1.0, |acc, (d, &x)| {
                    acc * indicator_approx_raw(x, k).eval(d.clamp(x))
                })
            })
            .collect();
        Ok(PointCapacity { value, trace })
    }
}

/// Both nesting orders for a pair of marginals.
pub fn asymmetry_probe(
    a: impl Into<Marginal>,
    b: impl Into<Marginal>,
    f: &MultiLipschitzFn,
    g: &GridSpec,
) -> Result<AsymmetryProbe> {
    if f.arity() != 2 {
        return Err(Error::arg(format!(
            "asymmetry probe needs a 2-ary function, got arity {}",
            f.arity()
        )));
    }
    let (a, b) = (a.into(), b.into());
    let ab = JointSpec::new(vec![a.clone(), b.clone()])?.compose_independent(f, g)?;
    let swapped = f.permuted(&[1, 0])?;
    let ba = JointSpec::new(vec![b, a])?.compose_independent(&swapped, g)?;
    Ok(AsymmetryProbe {
        ab: ab.value,
        ba: ba.value,
    })
}

/// Lipschitz approximation of the indicator of `{x_star}`:
/// `phi_k(x) = 1 / (1 + k |x - x_star|)`, decreasing to the indicator as
/// `k` grows.
pub fn indicator_approx(x_star: f64, k: u32) -> Result<BoundedLipschitzFn> {
    if k == 0 {
        return Err(Error::arg("k must be at least 1"));
    }
    if !x_star.is_finite() {
        return Err(Error::arg(format!("x_star {x_star} is not finite")));
    }
    Ok(indicator_approx_raw(x_star, k))
}

fn indicator_approx_raw(x_star: f64, k: u32) -> BoundedLipschitzFn {
    let kf = f64::from(k);
    BoundedLipschitzFn::new(move |x| 1.0 / (1.0 + kf * (x - x_star).abs()), kf, 1.0)
        .expect("constants are valid")
}
