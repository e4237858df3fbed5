//! Data-driven model order reduction with the Loewner framework.
//!
//! Frequency-response samples are split into right and left tangential
//! interpolation data, assembled into the Loewner pencil `(L, Ls)`, and
//! projected onto the dominant singular subspaces of `Ls - x L` to obtain a
//! reduced descriptor realization.

pub mod analysis;
pub mod data;
pub mod error;
pub mod linalg;
pub mod lti;
pub mod partition;
pub mod pencil;
pub mod pipeline;

pub use analysis::{error_sweep, relative_error, response_table, ErrorReport, SweepEntry};
pub use data::{
    read_dataset, sample_frequency_response, write_dataset, FrequencyResponseDataset,
    FrequencySample,
};
pub use error::{LoewnerError, Result};
pub use linalg::C64;
pub use lti::{generate_modal_system, DescriptorSystem, ModalSpec, TransferFunction};
pub use partition::{conjugate_close, partition, realify, PartitionScheme, TangentialDataset};
pub use pencil::{
    build_pencil, reduce, reduce_adaptive, select_order, svd_pencil, sylvester_residual,
    LoewnerPencil, OrderPolicy, PencilSVD, ReducedModel, Shift,
};
pub use pipeline::{fit, ReductionOptions};
