//! Dense building blocks: a column-major matrix type, a packed GEMM,
//! tiled LDLᵀ, triangular application and the interpolative decomposition.
//!
//! Every kernel here is deterministic: the floating-point operation order of
//! each output element depends only on the operand shapes, never on how the
//! work is split into tiles. The distributed root factorization relies on
//! this to reproduce the sequential result bit for bit.

mod block;
mod gemm;
mod id;
mod ldlt;
mod triangular;

pub use block::{DenseBlock, MatMut, MatRef};
pub use gemm::{gemm, symmetric_product, Trans};
pub use id::{householder_r, interpolative_decomposition, IdResult};
pub use ldlt::{
    ldlt, ldlt_diag_tile, ldlt_in_place, ldlt_panel_tile, ldlt_with_threshold, max_abs_diag,
    pivot_threshold, LdltFactor,
};
pub use triangular::{
    apply_unit_lower, apply_unit_lower_inverse, apply_unit_lower_inverse_mat,
    apply_unit_lower_inverse_transpose, apply_unit_lower_inverse_transpose_mat,
    apply_unit_lower_transpose, solve_diagonal, solve_diagonal_mat, tile_gemv,
    tile_gemv_sub, tile_gemv_t, tile_gemv_t_sub, tile_lower_solve, tile_lower_transpose_solve,
};

/// Tile edge used by every blocked kernel and by the 2D block-cyclic layout.
pub const TILE: usize = 32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DenseError {
    #[error("pivot {index} has magnitude {value:e}, below threshold {threshold:e}")]
    SmallPivot {
        index: usize,
        value: f64,
        threshold: f64,
    },
    #[error("zero diagonal entry at index {0}")]
    ZeroDiagonal(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
}
