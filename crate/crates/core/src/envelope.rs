//! Rolling-window upper/lower variance envelope.
//!
//! For a forecast index `t` (0-based position in the series; usually the
//! series length) with window length `L` and `K` windows, window `j`
//! (1-based) covers the `L` observations ending at `t - j`:
//!
//! ```text
//! index:   ... t-K-L+1 ...... t-L-1  t-L  ......  t-2  t-1 | t
//! j = 1:                             [t-L   ......       t-1]
//! j = 2:                      [t-L-1 ......  t-2]
//! j = K:   [t-K-L+1 ...... t-K]
//! ```
//!
//! Each window yields a local sample variance
//! `sigma_j^2 = sum_i (Z_i - mu_j)^2 / (L - 1)`, or `sum_i Z_i^2 / (L - 1)`
//! when the series is taken as mean-zero (`demean = false`). The envelope
//! `[min_j sigma_j^2, max_j sigma_j^2]` estimates the lower and upper
//! variance.
//!
//! `K` and `L` are not chosen automatically. `K` is fixed with prior
//! knowledge; a larger `K` expresses a preference for more uncertainty.

use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Observed series, optionally timestamped (seconds).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    timestamps: Option<Vec<f64>>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, timestamps: Option<Vec<f64>>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Data(format!("observation {i} is not finite ({v})")));
        }
        if let Some(ts) = &timestamps {
            if ts.len() != values.len() {
                return Err(Error::Data(format!(
                    "{} timestamps for {} observations",
                    ts.len(),
                    values.len()
                )));
            }
            if let Some(i) = ts
                .windows(2)
                .position(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
            {
                return Err(Error::Data(format!(
                    "timestamps not strictly increasing at observation {}",
                    i + 1
                )));
            }
        }
        Ok(TimeSeries { timestamps, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn timestamps(&self) -> Option<&[f64]> {
        self.timestamps.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EnvelopeConfig {
    /// Window length `L`.
    pub window: usize,
    /// Number of windows `K`.
    pub num_windows: usize,
    pub demean: bool,
}

impl EnvelopeConfig {
    pub fn new(window: usize, num_windows: usize, demean: bool) -> Result<Self> {
        if window < 2 {
            return Err(Error::arg(format!(
                "window length must be at least 2, got {window}"
            )));
        }
        if num_windows < 1 {
            return Err(Error::arg("number of windows must be at least 1"));
        }
        Ok(EnvelopeConfig {
            window,
            num_windows,
            demean,
        })
    }

    /// Observations needed before the forecast index.
    pub fn required_history(&self) -> usize {
        self.window + self.num_windows - 1
    }
}

/// Local variances `sigma_j^2` for `j = 1..=K`, in window order. `t_index`
/// defaults to the series length.
pub fn rolling_local_variance(
    z: &TimeSeries,
    cfg: &EnvelopeConfig,
    t_index: Option<usize>,
) -> Result<Vec<f64>> {
    let t = t_index.unwrap_or(z.len());
    if t > z.len() {
        return Err(Error::arg(format!(
            "forecast index {t} is beyond the series end {}",
            z.len()
        )));
    }
    let required = cfg.required_history();
    if t < required {
        return Err(Error::Length {
            required,
            available: t,
        });
    }
    let l = cfg.window;
    let denom = (l - 1) as f64;
    Ok((1..=cfg.num_windows)
        .map(|j| {
            let w = &z.values[t - j + 1 - l..=t - j];
            if cfg.demean {
                let mean = w.iter().sum::<f64>() / l as f64;
                w.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / denom
            } else {
                w.iter().map(|x| x * x).sum::<f64>() / denom
            }
        })
        .collect())
}

/// Min/max envelope of window variances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceEnvelope {
    pub sigma_lo_sq: f64,
    pub sigma_hi_sq: f64,
    /// `(j, sigma_j^2)` with `j` 1-based.
    pub per_window: Vec<(usize, f64)>,
}

pub fn variance_envelope(sigmas: &[f64]) -> Result<VarianceEnvelope> {
    if sigmas.is_empty() {
        return Err(Error::arg("no window variances"));
    }
    if let Some(v) = sigmas.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::arg(format!(
            "window variance {v} is not a nonnegative number"
        )));
    }
    Ok(VarianceEnvelope {
        sigma_lo_sq: sigmas.iter().copied().fold(f64::INFINITY, f64::min),
        sigma_hi_sq: sigmas.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        per_window: sigmas
            .iter()
            .copied()
            .enumerate()
            .map(|(i, v)| (i + 1, v))
            .collect(),
    })
}

/// Envelope with the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub sigma_lo_sq: f64,
    pub sigma_hi_sq: f64,
    pub per_window: Vec<(usize, f64)>,
    #[serde(rename = "L")]
    pub window: usize,
    #[serde(rename = "K")]
    pub num_windows: usize,
    pub demean: bool,
    pub t_index: usize,
}

impl EnvelopeReport {
    pub fn compute(z: &TimeSeries, cfg: &EnvelopeConfig, t_index: Option<usize>) -> Result<Self> {
        let sigmas = rolling_local_variance(z, cfg, t_index)?;
        let env = variance_envelope(&sigmas)?;
        Ok(EnvelopeReport {
            sigma_lo_sq: env.sigma_lo_sq,
            sigma_hi_sq: env.sigma_hi_sq,
            per_window: env.per_window,
            window: cfg.window,
            num_windows: cfg.num_windows,
            demean: cfg.demean,
            t_index: t_index.unwrap_or(z.len()),
        })
    }

    pub const CSV_HEADER: &'static str = "j,sigma_sq";

    pub fn to_csv_rows(&self) -> Vec<String> {
        self.per_window
            .iter()
            .map(|(j, v)| format!("{j},{v}"))
            .collect()
    }
}

/// Column selector: zero-based index or header name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl FromStr for ColumnRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::arg("empty column name"));
        }
        Ok(s.parse()
            .map(ColumnRef::Index)
            .unwrap_or_else(|_| ColumnRef::Name(s.to_string())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub value: ColumnRef,
    pub timestamp: Option<ColumnRef>,
    /// Named columns imply a header row.
    pub has_header: bool,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        ColumnSpec {
            value: ColumnRef::Index(0),
            timestamp: None,
            has_header: false,
        }
    }
}

impl ColumnSpec {
    fn header_required(&self) -> bool {
        self.has_header
            || matches!(self.value, ColumnRef::Name(_))
            || matches!(self.timestamp, Some(ColumnRef::Name(_)))
    }
}

/// Reads a series from CSV. Rows are numbered from 1 after the header; any
/// unparsable value is an error naming its row.
pub fn ingest_csv(path: &Path, spec: &ColumnSpec) -> Result<TimeSeries> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, spec)
}

pub(crate) fn read_csv<R: std::io::Read>(input: R, spec: &ColumnSpec) -> Result<TimeSeries> {
    let has_header = spec.header_required();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let resolve = |c: &ColumnRef, headers: Option<&csv::StringRecord>| -> Result<usize> {
        match c {
            ColumnRef::Index(i) => Ok(*i),
            ColumnRef::Name(name) => headers
                .and_then(|h| h.iter().position(|f| f == name))
                .ok_or_else(|| Error::Data(format!("no column named `{name}` in header"))),
        }
    };
    let headers = if has_header {
        Some(
            rdr.headers()
                .map_err(|e| Error::Parse {
                    row: 0,
                    message: e.to_string(),
                })?
                .clone(),
        )
    } else {
        None
    };
    let value_col = resolve(&spec.value, headers.as_ref())?;
    let ts_col = spec
        .timestamp
        .as_ref()
        .map(|c| resolve(c, headers.as_ref()))
        .transpose()?;

    let mut values = Vec::new();
    let mut stamps = ts_col.map(|_| Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        let field = |col: usize| {
            rec.get(col).ok_or_else(|| Error::Parse {
                row,
                message: format!("missing column {col}"),
            })
        };
        values.push(parse_value(field(value_col)?, row)?);
        if let (Some(col), Some(ts)) = (ts_col, stamps.as_mut()) {
            ts.push(parse_timestamp(field(col)?, row)?);
        }
    }
    TimeSeries::new(values, stamps)
}

fn parse_value(raw: &str, row: usize) -> Result<f64> {
    let s = raw.replace('\u{2212}', "-");
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            row,
            message: format!("`{raw}` is not a finite number"),
        }),
    }
}

fn parse_timestamp(raw: &str, row: usize) -> Result<f64> {
    if let Ok(v) = raw.parse::<f64>() {
        if v.is_finite() {
            return Ok(v);
        }
    }
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(raw) {
        return Ok(dt.timestamp() as f64 + f64::from(dt.timestamp_subsec_nanos()) * 1e-9);
    }
    if let Ok(dt) = chrono::NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S") {
        return Ok(dt.and_utc().timestamp() as f64);
    }
    if let Ok(d) = chrono::NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
        return Ok(d
            .and_hms_opt(0, 0, 0)
            .expect("midnight")
            .and_utc()
            .timestamp() as f64);
    }
    Err(Error::Parse {
        row,
        message: format!("`{raw}` is not a timestamp"),
    })
}
