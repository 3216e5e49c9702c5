//! Sequential hierarchical interpolative factorization.
//!
//! [`factorize`] sweeps the levels of the cell hierarchy. At each level every
//! cell interior is eliminated against its boundary, then every face is
//! compressed with an interpolative decomposition of its coupling to the rest
//! of the active points, and the redundant face points are eliminated. The
//! survivors of the last level form a dense root block.

mod apply;
mod factor;
mod io;
mod kernels;
mod level;
mod ops;

pub use apply::Step;
pub use factor::{
    apply_cell_update, apply_face_result, cell_inputs, check_interior_coupling, face_inputs,
    face_nodes, factorize, make_skel_factor, offsets, root_matrix, ElimFactor, HifFactorization,
    LevelFactors, RootFactor, SkelFactor,
};
pub use io::{read_factorization, write_factorization, FORMAT_VERSION};
pub use kernels::{eliminate_block, skeletonize_block, Elimination, Skeletonized};
pub use level::{place, LevelMatrix};
pub use ops::{skeletonize_face, sparse_eliminate, FaceUpdate};

use crate::dense::DenseError;
use crate::geometry::GeometryError;

#[derive(Debug, thiserror::Error)]
pub enum HifError {
    #[error("{context}: {source}")]
    Dense {
        context: String,
        #[source]
        source: DenseError,
    },
    #[error(transparent)]
    Kernel(#[from] DenseError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid factorization file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HifError {
    pub(crate) fn dense(context: String, source: DenseError) -> Self {
        HifError::Dense { context, source }
    }
}
