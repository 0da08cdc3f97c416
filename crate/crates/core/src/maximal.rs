//! One-dimensional maximal distribution `M[mu_lo, mu_hi]`, whose sublinear
//! expectation is `E^[f(X)] = max_{mu_lo <= x <= mu_hi} f(x)`.
//!
//! Interval maxima are taken over a grid that always contains both
//! endpoints. Grid points are `mu_lo + k * step` followed by `mu_hi`, so
//! halving the step yields a superset of the previous grid and the reported
//! value can only grow. The certificate `lipschitz * step / 2` bounds the gap
//! to the true maximum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::BoundedLipschitzFn;
use crate::scenario::ScenarioFamily;

/// Refuse grids with more points than this.
pub const MAX_GRID_POINTS: usize = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMaximal")]
pub struct MaximalDist {
    mu_lo: f64,
    mu_hi: f64,
}

#[derive(Deserialize)]
struct RawMaximal {
    mu_lo: f64,
    mu_hi: f64,
}

impl TryFrom<RawMaximal> for MaximalDist {
    type Error = Error;

    fn try_from(r: RawMaximal) -> Result<Self> {
        MaximalDist::new(r.mu_lo, r.mu_hi)
    }
}

/// Grid resolution for interval maxima.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub step: f64,
    /// Golden-section refinement around the grid argmax.
    #[serde(default)]
    pub refine: bool,
}

impl GridSpec {
    pub fn new(step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::arg(format!(
                "grid step must be positive, got {step}"
            )));
        }
        Ok(GridSpec {
            step,
            refine: false,
        })
    }

    pub fn refined(mut self) -> Self {
        self.refine = true;
        self
    }

    /// Step that makes the grid of `d` consist of exactly `n_atoms` equally
    /// spaced points (the same grid [`MaximalDist::dirac_family`] uses).
    pub fn for_atoms(d: &MaximalDist, n_atoms: usize) -> Result<Self> {
        if d.is_degenerate() {
            return Self::new(1.0);
        }
        if n_atoms < 2 {
            return Err(Error::arg(format!(
                "need at least 2 grid points on a nondegenerate interval, got {n_atoms}"
            )));
        }
        Self::new(d.width() / (n_atoms - 1) as f64)
    }
}

/// Value of an interval maximum with its certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaximalEval {
    pub value: f64,
    pub argmax: f64,
    pub error_bound: f64,
}

/// Value of a grid maximum over a box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridEval {
    pub value: f64,
    pub error_bound: f64,
}

impl MaximalDist {
    pub fn new(mu_lo: f64, mu_hi: f64) -> Result<Self> {
        if !(mu_lo.is_finite() && mu_hi.is_finite()) {
            return Err(Error::arg(format!(
                "interval endpoints must be finite, got [{mu_lo}, {mu_hi}]"
            )));
        }
        if mu_lo > mu_hi {
            return Err(Error::arg(format!("mu_lo {mu_lo} exceeds mu_hi {mu_hi}")));
        }
        Ok(MaximalDist { mu_lo, mu_hi })
    }

    /// Point mass, the uncertainty-free case.
    pub fn degenerate(c: f64) -> Result<Self> {
        Self::new(c, c)
    }

    pub fn mu_lo(&self) -> f64 {
        self.mu_lo
    }

    pub fn mu_hi(&self) -> f64 {
        self.mu_hi
    }

    pub fn width(&self) -> f64 {
        self.mu_hi - self.mu_lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.mu_lo == self.mu_hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.mu_lo <= x && x <= self.mu_hi
    }

    /// Distance from `x` to the interval; zero exactly on the interval.
    pub fn interval_distance(&self, x: f64) -> f64 {
        if x < self.mu_lo {
            self.mu_lo - x
        } else if x > self.mu_hi {
            x - self.mu_hi
        } else {
            0.0
        }
    }

    /// Point of the interval closest to `x`.
    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.mu_lo, self.mu_hi)
    }

    /// Grid points in increasing order, endpoints included.
    pub fn grid(&self, g: &GridSpec) -> Result<Vec<f64>> {
        if !(g.step.is_finite() && g.step > 0.0) {
            return Err(Error::arg(format!(
                "grid step must be positive, got {}",
                g.step
            )));
        }
        if self.is_degenerate() {
            return Ok(vec![self.mu_lo]);
        }
        let q = self.width() / g.step;
        // snap ratios that are integral up to rounding, so n-atom steps give n points
        let intervals = if (q - q.round()).abs() <= 1e-9 * q.max(1.0) {
            q.round()
        } else {
            q.ceil()
        }
        .max(1.0);
        if intervals >= MAX_GRID_POINTS as f64 {
            return Err(Error::arg(format!(
                "grid step {} yields {intervals} intervals, limit is {MAX_GRID_POINTS}",
                g.step
            )));
        }
        let m = intervals as usize;
        let mut pts: Vec<f64> = (0..m).map(|k| self.mu_lo + k as f64 * g.step).collect();
        pts.push(self.mu_hi);
        Ok(pts)
    }

    /// Largest gap between consecutive grid points, at least `g.step`.
    fn spacing(pts: &[f64], g: &GridSpec) -> f64 {
        match pts {
            [.., a, b] => g.step.max(b - a),
            _ => 0.0,
        }
    }

    /// `max_{x in [mu_lo, mu_hi]} f(x)` by grid scan, ties to the smallest x.
    pub fn eval_maximal(&self, f: &BoundedLipschitzFn, g: &GridSpec) -> Result<MaximalEval> {
        let pts = self.grid(g)?;
        let mut vals = Vec::with_capacity(pts.len());
        let mut best = 0;
        for (i, &x) in pts.iter().enumerate() {
            let v = checked(f.eval(x), i, x)?;
            if i == 0 || v > vals[best] {
                best = i;
            }
            vals.push(v);
        }
        if self.is_degenerate() {
            return Ok(MaximalEval {
                value: vals[0],
                argmax: pts[0],
                error_bound: 0.0,
            });
        }
        let grid_eval = MaximalEval {
            value: vals[best],
            argmax: pts[best],
            error_bound: f.lipschitz() * Self::spacing(&pts, g) / 2.0,
        };
        if !g.refine {
            return Ok(grid_eval);
        }
        refine(f, &pts, &vals, best, grid_eval)
    }

    /// Ambiguity set of point masses on the uniform `n_atoms`-point grid.
    pub fn dirac_family(&self, n_atoms: usize) -> Result<ScenarioFamily> {
        if n_atoms == 0 {
            return Err(Error::arg("n_atoms must be positive"));
        }
        let g = GridSpec::for_atoms(self, n_atoms)?;
        ScenarioFamily::diracs(&self.grid(&g)?)
    }

    /// `E^[f(aX + bY)]` for `Y` an independent copy of `X`, evaluated as the
    /// grid maximum of `f(a x + b y)` over the square.
    pub fn convolve_scaled(
        &self,
        a: f64,
        b: f64,
        f: &BoundedLipschitzFn,
        g: &GridSpec,
    ) -> Result<GridEval> {
        if !(a.is_finite() && a >= 0.0 && b.is_finite() && b >= 0.0) {
            return Err(Error::arg(format!(
                "scale factors must be finite and nonnegative, got a={a}, b={b}"
            )));
        }
        let pts = self.grid(g)?;
        let mut best = f64::NEG_INFINITY;
        for &x in &pts {
            for (j, &y) in pts.iter().enumerate() {
                let arg = a * x + b * y;
                best = best.max(checked(f.eval(arg), j, arg)?);
            }
        }
        let h = if self.is_degenerate() {
            0.0
        } else {
            Self::spacing(&pts, g)
        };
        // a x + b y carries up to two roundings; comparing against f((a + b) x)
        // adds two more
        let radius = self.mu_lo.abs().max(self.mu_hi.abs());
        let rounding = 4.0 * f64::EPSILON * (a + b) * radius;
        Ok(GridEval {
            value: best,
            error_bound: f.lipschitz() * ((a + b) * h / 2.0 + rounding),
        })
    }
}

fn checked(v: f64, index: usize, point: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation {
            index,
            point,
            value: v,
        })
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search on the cells adjacent to the grid argmax.
///
/// The certificate then covers two parts: the final bracket width for the
/// refined cells (assuming `f` is unimodal there), and Lipschitz cell bounds
/// for every cell outside the basin where grid values decrease monotonically
/// away from the argmax. Inside that basin `f` is taken to follow its samples.
fn refine(
    f: &BoundedLipschitzFn,
    pts: &[f64],
    vals: &[f64],
    best: usize,
    grid_eval: MaximalEval,
) -> Result<MaximalEval> {
    let n = pts.len();
    let (mut lo, mut hi) = (pts[best.saturating_sub(1)], pts[(best + 1).min(n - 1)]);
    let mut value = grid_eval.value;
    let mut argmax = grid_eval.argmax;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = checked(f.eval(c), best, c)?;
    let mut fd = checked(f.eval(d), best, d)?;
    for _ in 0..300 {
        if hi - lo <= 8.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) {
            break;
        }
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = checked(f.eval(c), best, c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = checked(f.eval(d), best, d)?;
        }
        for (x, v) in [(c, fc), (d, fd)] {
            if v > value || (v == value && x < argmax) {
                value = v;
                argmax = x;
            }
        }
    }

    let mut left = best;
    while left > 0 && vals[left - 1] <= vals[left] {
        left -= 1;
    }
    let mut right = best;
    while right + 1 < n && vals[right + 1] <= vals[right] {
        right += 1;
    }
    let outside = (0..n - 1)
        .filter(|&k| k < left || k >= right)
        .map(|k| (vals[k] + vals[k + 1] + f.lipschitz() * (pts[k + 1] - pts[k])) / 2.0 - value)
        .fold(0.0, f64::max);
    let bracket = f.lipschitz() * (hi - lo);
    Ok(MaximalEval {
        value,
        argmax,
        error_bound: outside.max(bracket).min(grid_eval.error_bound),
    })
}
