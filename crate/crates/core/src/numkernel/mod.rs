//! Complex dense linear algebra with operation counting.

mod inplace;
mod kernels;
mod ledger;
mod matrix;
mod oracle;

pub use inplace::{cover_gram_with_inverse, cover_gram_with_inverse_upper, cover_with_gram};
pub use kernels::{
    block_inv_step_i, block_inv_step_v, conj_transpose_matvec, deflate_q, deflate_q_sm, gram_accumulate,
    herm_rank1_update, init_q_block, init_q_sherman_morrison, sm_rank1_inverse_update, BlockInverse, BlockStep,
    Symmetry, PIVOT_TOL, REAL_PIVOT_TOL,
};
pub(crate) use kernels::{deflate_in_place, deflate_sm_in_place, real_pivot};
pub use ledger::FlopLedger;
pub use matrix::{CMat, HermPacked};
pub use oracle::gauss_jordan_inverse;

/// Complex scalar used throughout.
pub type Cplx = num_complex::Complex64;
