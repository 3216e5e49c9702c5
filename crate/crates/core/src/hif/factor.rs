use super::kernels::{eliminate_block, skeletonize_block, Elimination, Skeletonized};
use super::level::LevelMatrix;
use super::HifError;
use crate::dense::{ldlt_in_place, DenseBlock, LdltFactor};
use crate::geometry::{GridSpec, NodeId, NodeKind, SparseSymMatrix};

/// Elimination of one cell interior `I` against the nodes `F` it couples to.
#[derive(Clone, Debug, PartialEq)]
pub struct ElimFactor {
    /// The interior node (cell index and kind) at its level.
    pub node: NodeId,
    pub interior: Vec<usize>,
    pub face: Vec<usize>,
    pub elim: Elimination,
}

/// Skeletonization of one face: interpolation `Q_F` then elimination of the
/// redundant points against the skeleton.
#[derive(Clone, Debug, PartialEq)]
pub struct SkelFactor {
    pub node: NodeId,
    pub skeleton: Vec<usize>,
    pub redundant: Vec<usize>,
    /// `|skeleton| × |redundant|`.
    pub t: DenseBlock,
    pub elim: Elimination,
}

/// Dense factorization of the points that survive every level.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct RootFactor {
    /// Ascending.
    pub dofs: Vec<usize>,
    pub ldlt: LdltFactor,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct LevelFactors {
    pub level: usize,
    pub elims: Vec<ElimFactor>,
    pub skels: Vec<SkelFactor>,
    /// `|Σ^ℓ|` entering the level.
    pub active_in: usize,
    /// Active count after interior elimination.
    pub active_mid: usize,
    /// `|Σ^(ℓ+1)|`.
    pub active_out: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HifFactorization {
    pub spec: GridSpec,
    pub eps: f64,
    pub levels: Vec<LevelFactors>,
    pub root: RootFactor,
    /// Largest level-matrix footprint seen while factoring, in stored entries.
    pub peak_level_entries: usize,
}

impl ElimFactor {
    pub fn stored_entries(&self) -> usize {
        self.elim.stored_entries()
    }
}

impl SkelFactor {
    pub fn stored_entries(&self) -> usize {
        self.elim.stored_entries() + self.t.rows() * self.t.cols()
    }
}

impl HifFactorization {
    pub fn num_dofs(&self) -> usize {
        self.spec.num_dofs()
    }

    /// `|Σ_L|`, the size of the root block.
    pub fn root_size(&self) -> usize {
        self.root.dofs.len()
    }

    /// Total stored factor entries (triangles counted once).
    pub fn stored_entries(&self) -> usize {
        let lv: usize = self
            .levels
            .iter()
            .map(|l| {
                l.elims.iter().map(ElimFactor::stored_entries).sum::<usize>()
                    + l.skels.iter().map(SkelFactor::stored_entries).sum::<usize>()
            })
            .sum();
        let k = self.root.dofs.len();
        lv + k * k.saturating_sub(1) / 2 + k
    }

    pub fn stored_bytes(&self) -> usize {
        8 * self.stored_entries()
    }

    pub fn num_factors(&self) -> usize {
        self.levels.iter().map(|l| l.elims.len() + l.skels.len()).sum::<usize>() + 1
    }
}

/// Dense inputs for eliminating a cell's interior node: `A_II` and `A_IF`
/// with `F` the interior's neighbors in ascending node order.
pub fn cell_inputs(lm: &LevelMatrix, inode: NodeId) -> (Vec<NodeId>, DenseBlock, DenseBlock) {
    let f = lm.neighbors(inode);
    let a_ii = lm.block_or_zero(inode, inode);
    let a_if = lm.gather(&[inode], &f);
    (f, a_ii, a_if)
}

/// Dense inputs for skeletonizing a face node: `A_FF` and `Ã(R, F)` with `R`
/// the face's neighbors in ascending node order.
pub fn face_inputs(lm: &LevelMatrix, fnode: NodeId) -> (DenseBlock, DenseBlock) {
    let r = lm.neighbors(fnode);
    let a_ff = lm.block_or_zero(fnode, fnode);
    let m = lm.gather(&r, &[fnode]);
    (a_ff, m)
}

/// Adds a cell's Schur update to the blocks among its boundary nodes.
pub fn apply_cell_update(lm: &mut LevelMatrix, f: &[NodeId], u: &DenseBlock) {
    let offs = offsets(lm, f);
    for (i, &a) in f.iter().enumerate() {
        for (j, &b) in f.iter().enumerate().skip(i) {
            lm.add_sub_block(a, b, u, offs[i], offs[j]);
        }
    }
}

pub fn offsets(lm: &LevelMatrix, nodes: &[NodeId]) -> Vec<usize> {
    let mut out = Vec::with_capacity(nodes.len());
    let mut acc = 0;
    for &n in nodes {
        out.push(acc);
        acc += lm.dofs(n).len();
    }
    out
}

/// Replaces a face node by its skeleton and the compressed diagonal block.
pub fn apply_face_result(lm: &mut LevelMatrix, fnode: NodeId, s: &Skeletonized) {
    if s.elim.is_none() {
        return;
    }
    if s.id.skeleton.is_empty() {
        lm.remove_node(fnode);
        return;
    }
    lm.restrict_node(fnode, &s.id.skeleton);
    lm.set_block(fnode, fnode, s.b_hat.clone());
}

/// Builds the stored factor from a face result and the face's DOFs before
/// compression.
pub fn make_skel_factor(fnode: NodeId, dofs: &[usize], s: Skeletonized) -> Option<SkelFactor> {
    let elim = s.elim?;
    Some(SkelFactor {
        node: fnode,
        skeleton: s.id.skeleton.iter().map(|&p| dofs[p]).collect(),
        redundant: s.id.redundant.iter().map(|&p| dofs[p]).collect(),
        t: s.id.t,
        elim,
    })
}

/// Face nodes of a level in skeletonization order (normal axis, then cell).
pub fn face_nodes(lm: &LevelMatrix) -> Vec<NodeId> {
    let mut out: Vec<NodeId> =
        lm.node_ids().into_iter().filter(|n| matches!(n.kind(), NodeKind::Face(_))).collect();
    out.sort_by_key(|n| (n.kind().code(), n.cell()));
    out
}

/// Checks that an interior only couples to its own cell's boundary.
pub fn check_interior_coupling(spec: &GridSpec, level: usize, inode: NodeId, f: &[NodeId]) -> Result<(), HifError> {
    let boundary = spec.boundary_nodes(spec.cell_from_linear(level, inode.cell()));
    if let Some(bad) = f.iter().find(|n| boundary.binary_search(n).is_err()) {
        return Err(HifError::Precondition(format!(
            "interior of cell {} at level {level} couples to node {:?} outside its boundary",
            inode.cell(),
            bad
        )));
    }
    Ok(())
}

/// Assembles the root block in ascending DOF order.
pub fn root_matrix(lm: &LevelMatrix) -> (Vec<usize>, DenseBlock) {
    let nodes = lm.node_ids();
    let order = lm.concat_dofs(&nodes);
    let g = lm.gather(&nodes, &nodes);
    let mut perm: Vec<usize> = (0..order.len()).collect();
    perm.sort_by_key(|&i| order[i]);
    let dofs: Vec<usize> = perm.iter().map(|&i| order[i]).collect();
    (dofs, g.select(&perm, &perm))
}

/// Sequential hierarchical interpolative factorization.
pub fn factorize(a: &SparseSymMatrix, spec: &GridSpec, eps: f64) -> Result<HifFactorization, HifError> {
    if a.dim() != spec.num_dofs() {
        return Err(HifError::LengthMismatch { expected: spec.num_dofs(), found: a.dim() });
    }
    let mut lm = LevelMatrix::from_sparse(spec, a);
    let mut levels = Vec::with_capacity(spec.levels);
    let mut peak = lm.stored_entries();
    for level in 0..spec.levels {
        let mut lf = LevelFactors { level, active_in: lm.num_active(), ..Default::default() };
        for cell in 0..spec.num_cells(level) {
            let inode = NodeId::new(cell, NodeKind::Interior);
            if !lm.has_node(inode) {
                continue;
            }
            let (f, a_ii, a_if) = cell_inputs(&lm, inode);
            check_interior_coupling(spec, level, inode, &f)?;
            let (elim, u) = eliminate_block(a_ii, a_if)
                .map_err(|e| HifError::dense(format!("level {level}, cell {cell} interior"), e))?;
            apply_cell_update(&mut lm, &f, &u);
            lf.elims.push(ElimFactor { node: inode, interior: lm.dofs(inode).to_vec(), face: lm.concat_dofs(&f), elim });
            lm.remove_node(inode);
        }
        lf.active_mid = lm.num_active();
        peak = peak.max(lm.stored_entries());

        let faces = face_nodes(&lm);
        let mut results = Vec::with_capacity(faces.len());
        for &fnode in &faces {
            let (a_ff, m) = face_inputs(&lm, fnode);
            let s = skeletonize_block(&a_ff, &m, eps)
                .map_err(|e| HifError::dense(format!("level {level}, face node {}", fnode.0), e))?;
            results.push((fnode, s));
        }
        for (fnode, s) in results {
            let dofs = lm.dofs(fnode).to_vec();
            apply_face_result(&mut lm, fnode, &s);
            if let Some(sf) = make_skel_factor(fnode, &dofs, s) {
                lf.skels.push(sf);
            }
        }
        lf.active_out = lm.num_active();
        peak = peak.max(lm.stored_entries());
        levels.push(lf);
        lm = lm.reblock(spec);
    }
    let (dofs, root) = root_matrix(&lm);
    let ldlt = ldlt_in_place(root).map_err(|e| HifError::dense("root".to_string(), e))?;
    Ok(HifFactorization { spec: *spec, eps, levels, root: RootFactor { dofs, ldlt }, peak_level_entries: peak })
}
