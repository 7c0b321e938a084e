use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of samples inside a fit window.
const MIN_POINTS: usize = 10;

/// Decay/growth law fitted by least squares on `log y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateModel {
    /// `y ~ C exp(rate t)`
    Exponential,
    /// `y ~ C <t>^rate` with `<t> = 1 + t`
    Algebraic,
}

impl FromStr for RateModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" | "exp" => Ok(RateModel::Exponential),
            "algebraic" | "alg" | "power" => Ok(RateModel::Algebraic),
            _ => Err(Error::Fit(format!("unknown model {s:?} (expected exponential or algebraic)"))),
        }
    }
}

/// Result of [`fit_rate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub model: RateModel,
    pub rate: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
    pub window: (f64, f64),
}

/// Fit `log y = intercept + rate * s` with `s = t` or `s = log(1 + t)`.
///
/// The default window is the last half of the sampled time range.
pub fn fit_rate(t: &[f64], y: &[f64], model: RateModel, window: Option<(f64, f64)>) -> Result<RateFit> {
    if t.len() != y.len() {
        return Err(Error::Fit("time and value columns differ in length".into()));
    }
    if t.is_empty() {
        return Err(Error::Fit("empty series".into()));
    }
    let (t0, t1) = (t[0], t[t.len() - 1]);
    let window = window.unwrap_or((t0 + 0.5 * (t1 - t0), t1));
    let mut xs = Vec::new();
    let mut ls = Vec::new();
    for (&ti, &yi) in t.iter().zip(y) {
        if ti < window.0 || ti > window.1 {
            continue;
        }
        if !(yi.is_finite() && yi > 0.0) {
            return Err(Error::Fit(format!("non-positive value {yi} at t = {ti}")));
        }
        xs.push(match model {
            RateModel::Exponential => ti,
            RateModel::Algebraic => (1.0 + ti).ln(),
        });
        ls.push(yi.ln());
    }
    if xs.len() < MIN_POINTS {
        return Err(Error::Fit(format!(
            "{} samples in window [{}, {}], need at least {MIN_POINTS}",
            xs.len(),
            window.0,
            window.1
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ls.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ls).map(|(x, l)| (x - mx) * (l - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("window contains a single time value".into()));
    }
    let rate = sxy / sxx;
    let intercept = my - rate * mx;
    let ss_tot: f64 = ls.iter().map(|l| (l - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(&ls).map(|(x, l)| (l - intercept - rate * x).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RateFit {
        model,
        rate,
        intercept,
        r2,
        points: xs.len(),
        window,
    })
}

/// Numeric CSV with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let columns: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Fit(format!("row {}: {s:?} is not a number", line + 2)))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Series { columns, rows })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let k = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Fit(format!("no column {name:?}")))?;
        Ok(self.rows.iter().map(|r| r[k]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn exact_exponential() {
        let t = samples(0.0, 5.0, 101);
        let y: Vec<f64> = t.iter().map(|t| (-2.0 * t).exp()).collect();
        let f = fit_rate(&t, &y, RateModel::Exponential, None).unwrap();
        assert!((f.rate + 2.0).abs() < 1e-6);
        assert!(f.r2 > 1.0 - 1e-12);
        assert_eq!(f.window, (2.5, 5.0));
    }

    #[test]
    fn exact_algebraic() {
        let t = samples(1.0, 100.0, 200);
        let y: Vec<f64> = t.iter().map(|t| (1.0 + t).powi(-2)).collect();
        let f = fit_rate(&t, &y, RateModel::Algebraic, Some((1.0, 100.0))).unwrap();
        assert!((f.rate + 2.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_short_or_non_positive_series() {
        let t = samples(0.0, 1.0, 15);
        let y = vec![1.0; 15];
        assert!(fit_rate(&t, &y, RateModel::Exponential, None).is_err());
        let mut y = vec![1.0; 15];
        y[14] = 0.0;
        assert!(fit_rate(&t, &y, RateModel::Exponential, Some((0.0, 1.0))).is_err());
    }
}
