//! Test functions with declared Lipschitz constants.
//!
//! Every certificate in the crate (grid error bounds, accumulated joint
//! errors) is derived from the declared constant, so it must hold on the
//! region where the function is evaluated. Functions such as `x^2` are not
//! globally Lipschitz; their constructors take the radius of the region.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Scalar Lipschitz function with a sup-norm bound (possibly infinite).
#[derive(Clone)]
pub struct BoundedLipschitzFn {
    eval: ScalarFn,
    lipschitz: f64,
    bound: f64,
}

impl BoundedLipschitzFn {
    pub fn new<F>(f: F, lipschitz: f64, bound: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lipschitz.is_finite() && lipschitz >= 0.0) {
            return Err(Error::arg(format!(
                "Lipschitz constant must be finite and nonnegative, got {lipschitz}"
            )));
        }
        if bound.is_nan() || bound < 0.0 {
            return Err(Error::arg(format!(
                "bound must be nonnegative, got {bound}"
            )));
        }
        Ok(Self::raw(f, lipschitz, bound))
    }

    fn raw<F>(f: F, lipschitz: f64, bound: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        BoundedLipschitzFn {
            eval: Arc::new(f),
            lipschitz,
            bound,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn identity() -> Self {
        Self::raw(|x| x, 1.0, f64::INFINITY)
    }

    pub fn constant(c: f64) -> Self {
        Self::raw(move |_| c, 0.0, c.abs())
    }

    /// `x^2`, with Lipschitz constant `2 * radius` valid on `[-radius, radius]`.
    pub fn square_on(radius: f64) -> Self {
        let r = radius.abs();
        Self::raw(|x| x * x, 2.0 * r, f64::INFINITY)
    }

    /// `|x - center|`.
    pub fn abs_dev(center: f64) -> Self {
        Self::raw(move |x| (x - center).abs(), 1.0, f64::INFINITY)
    }

    pub fn sin() -> Self {
        Self::raw(f64::sin, 1.0, 1.0)
    }

    /// `x -> self(x) + other(x)`.
    pub fn plus(&self, other: &BoundedLipschitzFn) -> Self {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        Self::raw(
            move |x| f(x) + g(x),
            self.lipschitz + other.lipschitz,
            self.bound + other.bound,
        )
    }

    /// `x -> factor * self(x)`.
    pub fn scaled(&self, factor: f64) -> Self {
        let f = self.eval.clone();
        Self::raw(
            move |x| factor * f(x),
            self.lipschitz * factor.abs(),
            mul_bound(self.bound, factor.abs()),
        )
    }

    /// `x -> self(x) + c`.
    pub fn offset(&self, c: f64) -> Self {
        let f = self.eval.clone();
        Self::raw(move |x| f(x) + c, self.lipschitz, self.bound + c.abs())
    }

    /// `x -> self(scale * x)`.
    pub fn compose_scale(&self, scale: f64) -> Self {
        let f = self.eval.clone();
        Self::raw(
            move |x| f(scale * x),
            self.lipschitz * scale.abs(),
            self.bound,
        )
    }

    /// Randomized-style spot check of the declared constants on the given
    /// points. Returns the first offending pair, if any.
    pub fn find_violation(&self, points: &[f64]) -> Option<(f64, f64)> {
        let vals: Vec<f64> = points.iter().map(|&x| self.eval(x)).collect();
        for (i, (&x, &fx)) in points.iter().zip(&vals).enumerate() {
            if self.bound.is_finite() && fx.abs() > self.bound * (1.0 + 1e-12) {
                return Some((x, x));
            }
            for (&y, &fy) in points[i + 1..].iter().zip(&vals[i + 1..]) {
                let slack = 4.0 * f64::EPSILON * fx.abs().max(fy.abs());
                if (fx - fy).abs() > self.lipschitz * (x - y).abs() * (1.0 + 1e-9) + slack {
                    return Some((x, y));
                }
            }
        }
        None
    }
}

fn mul_bound(bound: f64, factor: f64) -> f64 {
    if factor == 0.0 {
        0.0
    } else {
        bound * factor
    }
}

impl fmt::Debug for BoundedLipschitzFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundedLipschitzFn")
            .field("lipschitz", &self.lipschitz)
            .field("bound", &self.bound)
            .finish_non_exhaustive()
    }
}

/// Function of several variables with one Lipschitz constant per coordinate:
/// `|f(x) - f(y)| <= sum_i lipschitz[i] * |x_i - y_i|`.
#[derive(Clone)]
pub struct MultiLipschitzFn {
    eval: VectorFn,
    lipschitz: Vec<f64>,
    bound: f64,
}

impl MultiLipschitzFn {
    pub fn new<F>(f: F, lipschitz: Vec<f64>, bound: f64) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if lipschitz.is_empty() {
            return Err(Error::arg("function must take at least one argument"));
        }
        if let Some(l) = lipschitz.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::arg(format!(
                "Lipschitz constants must be finite and nonnegative, got {l}"
            )));
        }
        if bound.is_nan() || bound < 0.0 {
            return Err(Error::arg(format!(
                "bound must be nonnegative, got {bound}"
            )));
        }
        Ok(MultiLipschitzFn {
            eval: Arc::new(f),
            lipschitz,
            bound,
        })
    }

    /// Product `prod_i factors[i](x_i)` of nonnegative bounded factors.
    pub fn product(factors: Vec<BoundedLipschitzFn>) -> Result<Self> {
        if factors.iter().any(|f| !f.bound.is_finite()) {
            return Err(Error::arg("product factors must have finite bounds"));
        }
        let lipschitz = (0..factors.len())
            .map(|i| {
                factors
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .fold(factors[i].lipschitz, |acc, (_, f)| acc * f.bound)
            })
            .collect();
        let bound = factors.iter().map(|f| f.bound).product();
        let fs = factors.clone();
        Self::new(
            move |x| fs.iter().zip(x).fold(1.0, |acc, (f, &xi)| acc * f.eval(xi)),
            lipschitz,
            bound,
        )
    }

    /// `f(x_0, ..., x_{n-1}) = max_i x_i`.
    pub fn max_of(arity: usize) -> Result<Self> {
        Self::new(
            |x| x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            vec![1.0; arity],
            f64::INFINITY,
        )
    }

    /// `f(x_0, ..., x_{n-1}) = -min_i x_i`.
    pub fn neg_min_of(arity: usize) -> Result<Self> {
        Self::new(
            |x| -x.iter().copied().fold(f64::INFINITY, f64::min),
            vec![1.0; arity],
            f64::INFINITY,
        )
    }

    /// Same function with its arguments taken in the given order:
    /// `g(y) = f(x)` where `x[order[k]] = y[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let n = self.arity();
        let mut seen = vec![false; n];
        if order.len() != n
            || order
                .iter()
                .any(|&i| i >= n || std::mem::replace(&mut seen[i], true))
        {
            return Err(Error::arg(format!(
                "{order:?} is not a permutation of 0..{n}"
            )));
        }
        let f = self.eval.clone();
        let order = order.to_vec();
        let lipschitz = order.iter().map(|&i| self.lipschitz[i]).collect();
        let perm = order.clone();
        Self::new(
            move |y| {
                let mut x = vec![0.0; y.len()];
                for (k, &i) in perm.iter().enumerate() {
                    x[i] = y[k];
                }
                f(&x)
            },
            lipschitz,
            self.bound,
        )
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn arity(&self) -> usize {
        self.lipschitz.len()
    }

    pub fn lipschitz(&self) -> &[f64] {
        &self.lipschitz
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }
}

impl fmt::Debug for MultiLipschitzFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiLipschitzFn")
            .field("lipschitz", &self.lipschitz)
            .field("bound", &self.bound)
            .finish_non_exhaustive()
    }
}
