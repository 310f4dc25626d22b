//! Low-rank tensor decompositions: HoSVD, the proximal operators and the
//! robust ADMM solvers.

pub mod admm;
pub mod hosvd;
pub mod prox;

pub use admm::{
    decompose, decompose_observed, horpca, romio_decompose, DecompositionResult, IterationState,
    RomioConfig,
};
pub use hosvd::{hosvd, truncate_hosvd, HosvdFactors, Truncation};
pub use prox::{nst, nsvt};
