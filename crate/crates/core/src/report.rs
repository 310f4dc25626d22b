//! CSV outputs: metrics tables and singular-value decay reports.

use serde::{Deserialize, Serialize};

use crate::decomp::hosvd::normalized_singular_values;
use crate::error::{Error, Result};
use crate::estimator::ErrorStats;
use crate::tensor::ComplexTensor3;

/// One line of a metrics table. `seed` is text so the aggregate line can
/// carry `mean`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scenario: String,
    pub seed: String,
    pub method: String,
    pub n_images: usize,
    pub mse_rad2: Option<f64>,
    pub sd_defo: Option<f64>,
    pub bias_defo: Option<f64>,
    pub sd_elev: Option<f64>,
    pub bias_elev: Option<f64>,
}

impl MetricsRow {
    pub fn new(scenario: &str, seed: u64, method: &str, n_images: usize) -> Self {
        Self {
            scenario: scenario.into(),
            seed: seed.to_string(),
            method: method.into(),
            n_images,
            mse_rad2: None,
            sd_defo: None,
            bias_defo: None,
            sd_elev: None,
            bias_elev: None,
        }
    }

    pub fn with_stats(mut self, stats: &ErrorStats) -> Self {
        self.sd_defo = Some(stats.sd_deformation);
        self.bias_defo = Some(stats.bias_deformation);
        self.sd_elev = Some(stats.sd_elevation);
        self.bias_elev = Some(stats.bias_elevation);
        self
    }
}

fn mean_of(rows: &[&MetricsRow], f: impl Fn(&MetricsRow) -> Option<f64>) -> Option<f64> {
    let vals: Vec<f64> = rows.iter().filter_map(|r| f(r)).collect();
    if vals.is_empty() {
        None
    } else {
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// Appends one `mean` row per (scenario, method, n_images) group, in order
/// of first appearance.
pub fn with_mean_rows(rows: &[MetricsRow]) -> Vec<MetricsRow> {
    let mut keys: Vec<(String, String, usize)> = Vec::new();
    for r in rows {
        let key = (r.scenario.clone(), r.method.clone(), r.n_images);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut out = rows.to_vec();
    for (scenario, method, n_images) in keys {
        let group: Vec<&MetricsRow> = rows
            .iter()
            .filter(|r| r.scenario == scenario && r.method == method && r.n_images == n_images)
            .collect();
        out.push(MetricsRow {
            scenario,
            seed: "mean".into(),
            method,
            n_images,
            mse_rad2: mean_of(&group, |r| r.mse_rad2),
            sd_defo: mean_of(&group, |r| r.sd_defo),
            bias_defo: mean_of(&group, |r| r.bias_defo),
            sd_elev: mean_of(&group, |r| r.sd_elev),
            bias_elev: mean_of(&group, |r| r.bias_elev),
        });
    }
    out
}

/// Serialises any sequence of records as RFC 4180 CSV with a header line.
pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn from_csv<T: serde::de::DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularValueRow {
    /// 1-based mode.
    pub mode: usize,
    /// 1-based position in the descending spectrum.
    pub index: usize,
    pub normalized_sigma: f64,
}

/// `σᵢ / σ_max` of every mode unfolding as one long table.
pub fn singular_value_report(x: &ComplexTensor3) -> Result<Vec<SingularValueRow>> {
    let spectra = normalized_singular_values(x)?;
    Ok(spectra
        .iter()
        .enumerate()
        .flat_map(|(n, s)| {
            s.iter().enumerate().map(move |(i, &v)| SingularValueRow {
                mode: n + 1,
                index: i + 1,
                normalized_sigma: v,
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn mean_rows_group_by_method() {
        let mut a = MetricsRow::new("s", 0, "raw", 25);
        a.mse_rad2 = Some(1.0);
        let mut b = MetricsRow::new("s", 1, "raw", 25);
        b.mse_rad2 = Some(3.0);
        let mut c = MetricsRow::new("s", 0, "romio", 25);
        c.mse_rad2 = Some(0.5);
        let out = with_mean_rows(&[a, b, c]);
        assert_eq!(out.len(), 5);
        assert_eq!(out[3].seed, "mean");
        assert_eq!(out[3].mse_rad2, Some(2.0));
        assert_eq!(out[4].method, "romio");
        assert_eq!(out[4].sd_defo, None);
    }

    #[test]
    fn csv_round_trip() {
        let mut r = MetricsRow::new("table, \"quoted\"", 3, "horpca", 9);
        r.sd_defo = Some(0.25);
        let text = to_csv(&[r.clone()]).unwrap();
        assert!(text.starts_with(
            "scenario,seed,method,n_images,mse_rad2,sd_defo,bias_defo,sd_elev,bias_elev\n"
        ));
        let back: Vec<MetricsRow> = from_csv(&text).unwrap();
        assert_eq!(back, vec![r]);
    }

    #[test]
    fn separable_tensor_report() {
        let x = ComplexTensor3::from_fn([3, 4, 2], |i, j, k| {
            Complex64::new((i + 1) as f64 * (j as f64 - 1.5) * (k + 2) as f64, 0.0)
        })
        .unwrap();
        let rows = singular_value_report(&x).unwrap();
        assert_eq!(rows.len(), 3 + 4 + 2);
        for mode in 1..=3 {
            let s: Vec<f64> = rows
                .iter()
                .filter(|r| r.mode == mode)
                .map(|r| r.normalized_sigma)
                .collect();
            assert!((s[0] - 1.0).abs() < 1e-12);
            assert!(s[1..].iter().all(|&v| v < 1e-8));
        }
    }
}
