//! Error metric, error-versus-order sweeps and response comparison tables.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{fmt_f64, FrequencyResponseDataset};
use crate::error::{LoewnerError, Result};
use crate::linalg::{spectral_norm, C64};
use crate::lti::TransferFunction;
use crate::pencil::{reduce, LoewnerPencil, PencilSVD, ReducedModel};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrequencyError {
    pub omega: f64,
    /// `||G_i - H_i||_2 / ||H_i||_2` with the spectral norm.
    pub relative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub per_frequency: Vec<FrequencyError>,
    /// `||g - h||_2 / ||h||_2` over all entries of all samples stacked.
    pub epsilon: f64,
    pub worst: f64,
    pub r: Option<usize>,
    pub notes: Vec<String>,
}

impl ErrorReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

// A zero reference falls back to the absolute error.
fn ratio(diff: f64, reference: f64) -> f64 {
    if reference > 0.0 {
        diff / reference
    } else {
        diff
    }
}

fn check_dims<T: TransferFunction + ?Sized>(
    ds: &FrequencyResponseDataset,
    model: &T,
) -> Result<()> {
    if (model.outputs(), model.inputs()) != (ds.outputs(), ds.inputs()) {
        return Err(LoewnerError::Dimension(format!(
            "model is {}x{} but data is {}x{}",
            model.outputs(),
            model.inputs(),
            ds.outputs(),
            ds.inputs()
        )));
    }
    Ok(())
}

fn evaluate<T: TransferFunction + ?Sized>(
    ds: &FrequencyResponseDataset,
    model: &T,
) -> Result<Vec<DMatrix<C64>>> {
    check_dims(ds, model)?;
    ds.samples()
        .iter()
        .map(|smp| {
            model.eval_transfer(smp.s).map_err(|e| match e {
                LoewnerError::SingularPencil { .. } => LoewnerError::PoleHit { omega: smp.omega() },
                other => other,
            })
        })
        .collect()
}

/// Compares model values `G_i` against the data `H_i`.
pub fn relative_error<T: TransferFunction + ?Sized>(
    ds: &FrequencyResponseDataset,
    model: &T,
) -> Result<ErrorReport> {
    let values = evaluate(ds, model)?;
    Ok(compare(ds, &values))
}

/// Error report for precomputed model values, one matrix per sample.
pub fn compare(ds: &FrequencyResponseDataset, values: &[DMatrix<C64>]) -> ErrorReport {
    let mut diff_sq = 0.0;
    let mut ref_sq = 0.0;
    let per_frequency: Vec<FrequencyError> = ds
        .samples()
        .iter()
        .zip(values)
        .map(|(smp, g)| {
            let diff = g - &smp.h;
            diff_sq += diff.norm_squared();
            ref_sq += smp.h.norm_squared();
            FrequencyError {
                omega: smp.omega(),
                relative: ratio(spectral_norm(&diff), spectral_norm(&smp.h)),
            }
        })
        .collect();
    let worst = per_frequency
        .iter()
        .fold(0.0, |acc: f64, e| acc.max(e.relative));
    ErrorReport {
        per_frequency,
        epsilon: ratio(diff_sq.sqrt(), ref_sq.sqrt()),
        worst,
        r: None,
        notes: Vec::new(),
    }
}

/// [`relative_error`] for a reduced model, with its order and a count of
/// unstable poles in the notes.
pub fn model_error(ds: &FrequencyResponseDataset, model: &ReducedModel) -> Result<ErrorReport> {
    let mut report = relative_error(ds, model)?;
    report.r = Some(model.order());
    if let Ok(poles) = model.poles() {
        let unstable = poles.iter().filter(|p| p.re >= 0.0).count();
        report.notes.push(format!("unstable poles: {unstable}"));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepEntry {
    pub r: usize,
    /// `Ok(epsilon)` or the reason the order was skipped.
    pub outcome: std::result::Result<f64, String>,
}

/// Reduces to every requested order and measures the error. Failures at one
/// order are recorded, not propagated. Output order follows `orders`.
pub fn error_sweep(
    pencil: &LoewnerPencil,
    svd: &PencilSVD,
    ds: &FrequencyResponseDataset,
    orders: &[usize],
) -> Vec<SweepEntry> {
    orders
        .par_iter()
        .map(|&r| {
            let outcome = reduce(pencil, svd, r)
                .and_then(|model| relative_error(ds, &model))
                .map(|rep| rep.epsilon)
                .map_err(|e| e.to_string());
            SweepEntry { r, outcome }
        })
        .collect()
}

/// `r,epsilon,status` rows; skipped orders leave `epsilon` empty.
pub fn sweep_csv(entries: &[SweepEntry]) -> String {
    let mut out = String::from("r,epsilon,status\n");
    for e in entries {
        match &e.outcome {
            Ok(eps) => out.push_str(&format!("{},{},ok\n", e.r, fmt_f64(*eps))),
            Err(reason) => out.push_str(&format!(
                "{},,\"skipped: {}\"\n",
                e.r,
                reason.replace('"', "'")
            )),
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResponseRow {
    pub omega: f64,
    pub out_idx: usize,
    pub in_idx: usize,
    pub mag_h: f64,
    pub mag_g: f64,
    pub arg_h: f64,
    pub arg_g: f64,
}

/// Phase in `(-pi, pi]`.
fn phase(z: C64) -> f64 {
    let a = z.arg();
    if a <= -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        a + 0.0
    }
}

/// Magnitude and phase of data and model per channel and frequency.
pub fn response_table<T: TransferFunction + ?Sized>(
    ds: &FrequencyResponseDataset,
    model: &T,
) -> Result<Vec<ResponseRow>> {
    let values = evaluate(ds, model)?;
    let mut rows = Vec::with_capacity(ds.len() * ds.inputs() * ds.outputs());
    for (smp, g) in ds.samples().iter().zip(&values) {
        for i in 0..ds.outputs() {
            for j in 0..ds.inputs() {
                let (h, g) = (smp.h[(i, j)], g[(i, j)]);
                rows.push(ResponseRow {
                    omega: smp.omega(),
                    out_idx: i,
                    in_idx: j,
                    mag_h: h.norm(),
                    mag_g: g.norm(),
                    arg_h: phase(h),
                    arg_g: phase(g),
                });
            }
        }
    }
    Ok(rows)
}

/// SISO tables use `omega,|H|,|G|,argH,argG`; MIMO tables add `out,in`
/// channel columns after `omega`.
pub fn response_csv(rows: &[ResponseRow], siso: bool) -> String {
    let mut out = String::from(if siso {
        "omega,|H|,|G|,argH,argG\n"
    } else {
        "omega,out,in,|H|,|G|,argH,argG\n"
    });
    for r in rows {
        let tail = [r.mag_h, r.mag_g, r.arg_h, r.arg_g].map(fmt_f64).join(",");
        if siso {
            out.push_str(&format!("{},{}\n", fmt_f64(r.omega), tail));
        } else {
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(r.omega),
                r.out_idx,
                r.in_idx,
                tail
            ));
        }
    }
    out
}
