//! Named test functions for command-line and foreign callers.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::func::BoundedLipschitzFn;
use crate::joint::indicator_approx;

/// A test function chosen by name:
/// `identity`, `square`, `neg-square`, `abs[:C]`, `sin`, `cos`,
/// `indicator:X:K`.
#[derive(Debug, Clone, PartialEq)]
pub enum FnSpec {
    Identity,
    Square,
    NegSquare,
    AbsDev(f64),
    Sin,
    Cos,
    Indicator { x_star: f64, k: u32 },
}

impl FnSpec {
    /// Builds the function with constants valid on `[-radius, radius]`.
    pub fn build(&self, radius: f64) -> Result<BoundedLipschitzFn> {
        Ok(match *self {
            FnSpec::Identity => BoundedLipschitzFn::identity(),
            FnSpec::Square => BoundedLipschitzFn::square_on(radius),
            FnSpec::NegSquare => BoundedLipschitzFn::square_on(radius).scaled(-1.0),
            FnSpec::AbsDev(c) => BoundedLipschitzFn::abs_dev(c),
            FnSpec::Sin => BoundedLipschitzFn::sin(),
            FnSpec::Cos => BoundedLipschitzFn::new(f64::cos, 1.0, 1.0)?,
            FnSpec::Indicator { x_star, k } => indicator_approx(x_star, k)?,
        })
    }
}

impl FromStr for FnSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').map(str::trim).collect();
        let num = |t: &str| -> Result<f64> {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::arg(format!("function `{s}`: bad number `{t}`")))
        };
        match parts.as_slice() {
            ["identity"] | ["x"] => Ok(FnSpec::Identity),
            ["square"] => Ok(FnSpec::Square),
            ["neg-square"] => Ok(FnSpec::NegSquare),
            ["abs"] => Ok(FnSpec::AbsDev(0.0)),
            ["abs", c] => Ok(FnSpec::AbsDev(num(c)?)),
            ["sin"] => Ok(FnSpec::Sin),
            ["cos"] => Ok(FnSpec::Cos),
            ["indicator", x, k] => Ok(FnSpec::Indicator {
                x_star: num(x)?,
                k: k.parse().map_err(|_| Error::arg(format!("function `{s}`: bad k `{k}`")))?,
            }),
            _ => Err(Error::arg(format!(
                "unknown function `{s}` (expected identity, square, neg-square, abs[:C], sin, cos, indicator:X:K)"
            ))),
        }
    }
}

impl fmt::Display for FnSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FnSpec::Identity => write!(f, "identity"),
            FnSpec::Square => write!(f, "square"),
            FnSpec::NegSquare => write!(f, "neg-square"),
            FnSpec::AbsDev(c) => write!(f, "abs:{c}"),
            FnSpec::Sin => write!(f, "sin"),
            FnSpec::Cos => write!(f, "cos"),
            FnSpec::Indicator { x_star, k } => write!(f, "indicator:{x_star}:{k}"),
        }
    }
}
