//! Frequency-response datasets: sampling from a system, channel extraction,
//! and the SISO CSV / MIMO JSON file formats.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LoewnerError, Result};
use crate::linalg::{self, C64};
use crate::lti::TransferFunction;

/// One complex frequency `s` with the `p x m` transfer matrix observed there.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencySample {
    pub s: C64,
    pub h: DMatrix<C64>,
}

impl FrequencySample {
    /// Sample on the imaginary axis, `s = i omega`.
    pub fn at_omega(omega: f64, h: DMatrix<C64>) -> Self {
        Self {
            s: C64::new(0.0, omega),
            h,
        }
    }

    pub fn omega(&self) -> f64 {
        self.s.im
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyResponseDataset {
    samples: Vec<FrequencySample>,
    inputs: usize,
    outputs: usize,
    pub metadata: BTreeMap<String, String>,
}

fn sample_order(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.im.abs()
        .total_cmp(&b.im.abs())
        .then(a.im.total_cmp(&b.im))
        .then(a.re.total_cmp(&b.re))
}

impl FrequencyResponseDataset {
    /// Validates shapes, finiteness and distinctness, then sorts samples by
    /// `|Im s|` and `Im s`.
    pub fn new(inputs: usize, outputs: usize, mut samples: Vec<FrequencySample>) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(LoewnerError::Dimension("dataset needs m, p >= 1".into()));
        }
        for (k, smp) in samples.iter().enumerate() {
            if smp.h.shape() != (outputs, inputs) {
                return Err(LoewnerError::SchemaMismatch(format!(
                    "sample {k} has a {}x{} response, expected {outputs}x{inputs}",
                    smp.h.nrows(),
                    smp.h.ncols()
                )));
            }
            if !smp.s.re.is_finite() || !smp.s.im.is_finite() || !linalg::all_finite(&smp.h) {
                return Err(LoewnerError::NonFinite(format!("sample {k}")));
            }
        }
        samples.sort_by(|a, b| sample_order(&a.s, &b.s));
        if let Some(w) = samples.windows(2).find(|w| w[0].s == w[1].s) {
            return Err(LoewnerError::DuplicateFrequency(w[0].s));
        }
        Ok(Self {
            samples,
            inputs,
            outputs,
            metadata: BTreeMap::new(),
        })
    }

    pub fn samples(&self) -> &[FrequencySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn points(&self) -> Vec<C64> {
        self.samples.iter().map(|s| s.s).collect()
    }

    pub fn is_siso(&self) -> bool {
        self.inputs == 1 && self.outputs == 1
    }

    /// The SISO dataset of channel `(out_idx, in_idx)`.
    pub fn extract_node(&self, out_idx: usize, in_idx: usize) -> Result<Self> {
        if out_idx >= self.outputs || in_idx >= self.inputs {
            return Err(LoewnerError::IndexOutOfRange {
                out_idx,
                in_idx,
                outputs: self.outputs,
                inputs: self.inputs,
            });
        }
        let samples = self
            .samples
            .iter()
            .map(|smp| FrequencySample {
                s: smp.s,
                h: DMatrix::from_element(1, 1, smp.h[(out_idx, in_idx)]),
            })
            .collect();
        let mut ds = Self {
            samples,
            inputs: 1,
            outputs: 1,
            metadata: self.metadata.clone(),
        };
        ds.metadata
            .insert("node".into(), format!("{out_idx},{in_idx}"));
        Ok(ds)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        if !self.is_siso() {
            return Err(LoewnerError::SchemaMismatch(format!(
                "CSV holds SISO data only, dataset is {}x{}",
                self.outputs, self.inputs
            )));
        }
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["omega", "re", "im"])?;
        for smp in &self.samples {
            let omega = imaginary_axis(smp.s)?;
            let h = smp.h[(0, 0)];
            wtr.write_record([fmt_f64(omega), fmt_f64(h.re), fmt_f64(h.im)])?;
        }
        let bytes = wtr
            .into_inner()
            .map_err(|e| LoewnerError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is ascii"))
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = rdr.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["omega", "re", "im"] {
            return Err(LoewnerError::Parse {
                location: "line 1".into(),
                message: format!(
                    "expected header `omega,re,im`, found `{}`",
                    header.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        let mut samples = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let location = format!("line {line}");
            if record.len() != 3 {
                return Err(LoewnerError::Parse {
                    location,
                    message: format!("row has {} fields, expected 3", record.len()),
                });
            }
            let mut vals = [0.0; 3];
            for (k, (field, name)) in record.iter().zip(["omega", "re", "im"]).enumerate() {
                vals[k] = field.parse::<f64>().map_err(|_| LoewnerError::Parse {
                    location: location.clone(),
                    message: format!("field `{name}` is not a number: `{field}`"),
                })?;
            }
            samples.push(FrequencySample::at_omega(
                vals[0],
                DMatrix::from_element(1, 1, C64::new(vals[1], vals[2])),
            ));
        }
        Self::new(1, 1, samples)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let samples = self
            .samples
            .iter()
            .map(|smp| {
                Ok(SampleRecord {
                    omega: imaginary_axis(smp.s)?,
                    h_re: crate::lti::to_rows(&smp.h.map(|z| z.re)),
                    h_im: crate::lti::to_rows(&smp.h.map(|z| z.im)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let file = DatasetFile {
            m: self.inputs,
            p: self.outputs,
            samples,
        };
        Ok(serde_json::to_string(&file)? + "\n")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: DatasetFile = serde_json::from_str(text)?;
        let samples = file
            .samples
            .iter()
            .enumerate()
            .map(|(k, rec)| {
                let shape_ok = |rows: &Vec<Vec<f64>>| {
                    rows.len() == file.p && rows.iter().all(|r| r.len() == file.m)
                };
                if !shape_ok(&rec.h_re) || !shape_ok(&rec.h_im) {
                    return Err(LoewnerError::SchemaMismatch(format!(
                        "sample {k} (omega = {}) is not {}x{}",
                        rec.omega, file.p, file.m
                    )));
                }
                let h = DMatrix::from_fn(file.p, file.m, |i, j| {
                    C64::new(rec.h_re[i][j], rec.h_im[i][j])
                });
                Ok(FrequencySample::at_omega(rec.omega, h))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(file.m, file.p, samples)
    }

    /// SISO datasets go to CSV, everything else to JSON.
    pub fn to_file_string(&self) -> Result<String> {
        if self.is_siso() {
            self.to_csv_string()
        } else {
            self.to_json_string()
        }
    }
}

fn imaginary_axis(s: C64) -> Result<f64> {
    if s.re != 0.0 {
        return Err(LoewnerError::NotImaginaryAxis(s));
    }
    Ok(s.im)
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Serialize, Deserialize)]
struct SampleRecord {
    omega: f64,
    #[serde(rename = "H_re")]
    h_re: Vec<Vec<f64>>,
    #[serde(rename = "H_im")]
    h_im: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    m: usize,
    p: usize,
    samples: Vec<SampleRecord>,
}

/// Samples `sys` at `s = i omega` for each omega.
pub fn sample_frequency_response<T: TransferFunction>(
    sys: &T,
    frequencies: &[f64],
) -> Result<FrequencyResponseDataset> {
    if let Some(&w) = frequencies.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(LoewnerError::InvalidRange(format!(
            "sample frequencies must be finite and nonnegative, got {w}"
        )));
    }
    let mut sorted = frequencies.to_vec();
    sorted.sort_by(f64::total_cmp);
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(LoewnerError::DuplicateFrequency(C64::new(0.0, w[0])));
    }
    let samples = sorted
        .par_iter()
        .map(|&omega| {
            let h = sys
                .eval_transfer(C64::new(0.0, omega))
                .map_err(|e| match e {
                    LoewnerError::SingularPencil { .. } => LoewnerError::PoleHit { omega },
                    other => other,
                })?;
            if !linalg::all_finite(&h) {
                return Err(LoewnerError::PoleHit { omega });
            }
            Ok(FrequencySample::at_omega(omega, h))
        })
        .collect::<Result<Vec<_>>>()?;
    FrequencyResponseDataset::new(sys.inputs(), sys.outputs(), samples)
}

/// `count` points log-spaced over `[lo, hi]`, endpoints included.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) {
        return Err(LoewnerError::InvalidRange(format!(
            "log grid needs 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    Ok(match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..count)
                .map(|k| {
                    if k == count - 1 {
                        hi
                    } else {
                        10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64)
                    }
                })
                .collect()
        }
    })
}

/// Reads a dataset, choosing the format from the extension (`.csv` /
/// `.json`) or, failing that, from the first non-blank character.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<FrequencyResponseDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let json = match ext.as_deref() {
        Some("json") => true,
        Some("csv") => false,
        _ => text.trim_start().starts_with('{'),
    };
    let mut ds = if json {
        FrequencyResponseDataset::from_json_str(&text)?
    } else {
        FrequencyResponseDataset::from_csv_str(&text)?
    };
    ds.metadata
        .insert("source".into(), path.display().to_string());
    Ok(ds)
}

/// Writes CSV for SISO data and JSON otherwise.
pub fn write_dataset(ds: &FrequencyResponseDataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, ds.to_file_string()?)?;
    Ok(())
}
