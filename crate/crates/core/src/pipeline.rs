//! Convenience wiring of partition, pencil assembly, SVD and reduction.

use crate::data::FrequencyResponseDataset;
use crate::error::{LoewnerError, Result};
use crate::partition::{conjugate_close, partition, PartitionScheme};
use crate::pencil::{
    build_pencil, reduce_adaptive, select_order, svd_pencil, LoewnerPencil, OrderPolicy,
    OrderSelection, PencilSVD, ReducedModel, Shift, DEFAULT_RANK_TOL,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReductionOptions {
    pub scheme: PartitionScheme,
    /// Add the complex conjugate of every sample before assembly.
    pub conjugate_close: bool,
    /// Transform the pencil to real form; requires `conjugate_close`.
    pub real: bool,
    pub shift: Shift,
    pub order: OrderPolicy,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        Self {
            scheme: PartitionScheme::Interleave,
            conjugate_close: true,
            real: true,
            shift: Shift::Auto,
            order: OrderPolicy::Tolerance(DEFAULT_RANK_TOL),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Reduction {
    pub pencil: LoewnerPencil,
    pub svd: PencilSVD,
    pub selection: OrderSelection,
    pub model: ReducedModel,
}

/// Partition, optional conjugate closure, and pencil assembly.
pub fn assemble(ds: &FrequencyResponseDataset, opts: &ReductionOptions) -> Result<LoewnerPencil> {
    if opts.real && !opts.conjugate_close {
        return Err(LoewnerError::Pairing(
            "real form requires conjugate-closed data".into(),
        ));
    }
    let td = partition(ds, opts.scheme)?;
    let td = if opts.conjugate_close {
        conjugate_close(&td)?
    } else {
        td
    };
    build_pencil(&td, opts.real)
}

/// Full data-to-model run.
pub fn fit(ds: &FrequencyResponseDataset, opts: &ReductionOptions) -> Result<Reduction> {
    let pencil = assemble(ds, opts)?;
    if let Shift::Value(x) = opts.shift {
        if opts.real && x.im != 0.0 {
            return Err(LoewnerError::InvalidRange(format!(
                "a real model needs a real shift, got {x}"
            )));
        }
    }
    let svd = svd_pencil(&pencil, opts.shift);
    let selection = select_order(&svd, opts.order)?;
    if selection.no_signal {
        return Err(LoewnerError::InvalidRange(
            "pencil has no signal (all singular values are zero)".into(),
        ));
    }
    let model = reduce_adaptive(&pencil, &svd, selection.order)?;
    Ok(Reduction {
        pencil,
        svd,
        selection,
        model,
    })
}
