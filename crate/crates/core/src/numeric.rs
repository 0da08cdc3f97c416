//! Correctly rounded summation.
//!
//! Linear expectations are evaluated as exact dot products rounded once, so a
//! measure whose weights sum to exactly one reproduces constants bit for bit
//! and pointwise `f <= g` always yields `E[f] <= E[g]`.

/// Sum of `terms` rounded once to the nearest double (Shewchuk partials with
/// half-way correction). Falls back to naive summation when a term or a
/// partial overflows.
pub fn exact_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut acc = ExactAccumulator::default();
    for term in terms {
        acc.add(term);
    }
    acc.value()
}

/// Running sum held exactly as nonoverlapping partials.
#[derive(Debug, Clone, Default)]
pub(crate) struct ExactAccumulator {
    partials: Vec<f64>,
    naive: f64,
}

impl ExactAccumulator {
    pub(crate) fn add(&mut self, term: f64) {
        self.naive += term;
        if !term.is_finite() {
            return;
        }
        let partials = &mut self.partials;
        let mut x = term;
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }

    /// The sum rounded once.
    pub(crate) fn value(&self) -> f64 {
        if !self.naive.is_finite() || self.partials.iter().any(|p| !p.is_finite()) {
            return self.naive;
        }
        round_partials(&self.partials)
    }

    /// `sum - n * c` rounded once; in particular its sign is exact.
    pub(crate) fn excess_over(&self, n: f64, c: f64) -> f64 {
        let p = n * c;
        let e = n.mul_add(c, -p);
        let mut t = self.clone();
        t.add(-p);
        t.add(-e);
        t.value()
    }
}

fn round_partials(p: &[f64]) -> f64 {
    let mut n = p.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = p[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = p[n];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    hi
}

/// `sum(w[i] * v[i])` rounded once.
pub fn exact_dot<I: IntoIterator<Item = (f64, f64)>>(pairs: I) -> f64 {
    exact_sum(pairs.into_iter().flat_map(|(w, v)| {
        let p = w * v;
        // fma recovers the rounding error of the product exactly
        let e = w.mul_add(v, -p);
        [p, e]
    }))
}

/// Exact comparison of `a_hi - a_lo` against `b_hi - b_lo`.
pub(crate) fn cmp_width(a_lo: f64, a_hi: f64, b_lo: f64, b_hi: f64) -> std::cmp::Ordering {
    let (da, ea) = two_diff(a_hi, a_lo);
    let (db, eb) = two_diff(b_hi, b_lo);
    da.total_cmp(&db).then(ea.total_cmp(&eb))
}

fn two_diff(a: f64, b: f64) -> (f64, f64) {
    let s = a - b;
    let bb = s - a;
    let err = (a - (s - bb)) - (b + bb);
    (s, err)
}
