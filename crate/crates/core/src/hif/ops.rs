//! Point-level entry points on an explicit sparse matrix, for small problems
//! and tests. The level sweep uses the same dense kernels on node blocks.

use std::collections::BTreeSet;

use super::factor::{ElimFactor, SkelFactor};
use super::kernels::{eliminate_block, skeletonize_block};
use super::HifError;
use crate::dense::DenseBlock;
use crate::geometry::{NodeId, SparseSymMatrix};

fn dense_sub(a: &SparseSymMatrix, rows: &[usize], cols: &[usize]) -> DenseBlock {
    DenseBlock::from_fn(rows.len(), cols.len(), |i, j| a.get(rows[i], cols[j]))
}

/// Eliminates `interior` against `face`. Returns the factor and the additive
/// update `−A_FI·A_II⁻¹·A_IF` for the `face × face` block.
pub fn sparse_eliminate(
    a: &SparseSymMatrix,
    interior: &[usize],
    face: &[usize],
) -> Result<(ElimFactor, DenseBlock), HifError> {
    let allowed: BTreeSet<usize> = interior.iter().chain(face).copied().collect();
    for &i in interior {
        if let Some((k, _)) = a.row(i).find(|(k, v)| *v != 0.0 && !allowed.contains(k)) {
            return Err(HifError::Precondition(format!("point {i} couples to {k} outside I ∪ F")));
        }
    }
    let (elim, u) = eliminate_block(dense_sub(a, interior, interior), dense_sub(a, interior, face))?;
    let f = ElimFactor { node: NodeId(0), interior: interior.to_vec(), face: face.to_vec(), elim };
    Ok((f, u))
}

/// Outcome of compressing a face of an explicit matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceUpdate {
    /// Points that stay active.
    pub skeleton: Vec<usize>,
    /// Replacement for the `skeleton × skeleton` block.
    pub b_hat: DenseBlock,
    /// Points coupled to the face from outside, in ascending order.
    pub exterior: Vec<usize>,
}

/// Skeletonizes `face` against every point it couples to outside itself.
pub fn skeletonize_face(
    a: &SparseSymMatrix,
    face: &[usize],
    eps: f64,
) -> Result<(Option<SkelFactor>, FaceUpdate), HifError> {
    let inside: BTreeSet<usize> = face.iter().copied().collect();
    let exterior: Vec<usize> = face
        .iter()
        .flat_map(|&f| a.row(f).filter(|(_, v)| *v != 0.0).map(|(k, _)| k))
        .filter(|k| !inside.contains(k))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let s = skeletonize_block(&dense_sub(a, face, face), &dense_sub(a, &exterior, face), eps)?;
    let skeleton: Vec<usize> = s.id.skeleton.iter().map(|&p| face[p]).collect();
    let update = FaceUpdate { skeleton, b_hat: s.b_hat.clone(), exterior };
    let factor = super::factor::make_skel_factor(NodeId(0), face, s);
    Ok((factor, update))
}
