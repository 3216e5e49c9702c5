use std::collections::{BTreeMap, BTreeSet};

use rustc_hash::FxHashMap;

use crate::dense::DenseBlock;
use crate::geometry::{GridSpec, NodeId, SparseSymMatrix};

/// Symmetric level matrix stored as dense blocks between nodes.
///
/// Block `(a, b)` is keyed with `a ≤ b` and has `dofs(a)` rows and `dofs(b)`
/// columns; diagonal blocks hold the full square. A store may hold only a
/// subset of blocks (a distributed shard), while node metadata is complete.
#[derive(Clone, Debug, Default)]
pub struct LevelMatrix {
    pub level: usize,
    nodes: BTreeMap<NodeId, Vec<usize>>,
    blocks: FxHashMap<(NodeId, NodeId), DenseBlock>,
    adj: FxHashMap<NodeId, BTreeSet<NodeId>>,
}

fn key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Copies `src` (or its transpose) into `dst` at the given positions.
pub fn place(dst: &mut DenseBlock, src: &DenseBlock, rows: &[usize], cols: &[usize], transpose: bool) {
    if transpose {
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                dst.set(r, c, src.get(j, i));
            }
        }
    } else {
        for (j, &c) in cols.iter().enumerate() {
            let col = src.col(j);
            for (i, &r) in rows.iter().enumerate() {
                dst.set(r, c, col[i]);
            }
        }
    }
}

impl LevelMatrix {
    pub fn new(level: usize) -> Self {
        LevelMatrix { level, ..Default::default() }
    }

    /// Level-0 blocking of the assembled operator, optionally keeping only the
    /// blocks for which `keep(a, b)` holds.
    pub fn from_sparse_filtered(
        spec: &GridSpec,
        a: &SparseSymMatrix,
        mut keep: impl FnMut(NodeId, NodeId) -> bool,
    ) -> Self {
        let mut lm = LevelMatrix::new(0);
        let node_of: Vec<NodeId> = (0..a.dim()).map(|i| spec.node_of(0, i)).collect();
        for (i, &nd) in node_of.iter().enumerate() {
            lm.nodes.entry(nd).or_default().push(i);
        }
        let mut pos = vec![0usize; a.dim()];
        for dofs in lm.nodes.values() {
            for (p, &i) in dofs.iter().enumerate() {
                pos[i] = p;
            }
        }
        for i in 0..a.dim() {
            let ni = node_of[i];
            for (k, v) in a.row(i) {
                let nk = node_of[k];
                if ni > nk || !keep(ni, nk) {
                    continue;
                }
                let (ri, ck) = (lm.nodes[&ni].len(), lm.nodes[&nk].len());
                let blk = lm.blocks.entry((ni, nk)).or_insert_with(|| DenseBlock::zeros(ri, ck));
                blk.set(pos[i], pos[k], v);
            }
        }
        lm.rebuild_adjacency();
        lm
    }

    pub fn from_sparse(spec: &GridSpec, a: &SparseSymMatrix) -> Self {
        Self::from_sparse_filtered(spec, a, |_, _| true)
    }

    fn rebuild_adjacency(&mut self) {
        self.adj.clear();
        for &(a, b) in self.blocks.keys() {
            if a != b {
                self.adj.entry(a).or_default().insert(b);
                self.adj.entry(b).or_default().insert(a);
            }
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &[usize])> + '_ {
        self.nodes.iter().map(|(&k, v)| (k, v.as_slice()))
    }

    pub fn node_ids(&self) -> Vec<NodeId> {
        self.nodes.keys().copied().collect()
    }

    pub fn has_node(&self, n: NodeId) -> bool {
        self.nodes.contains_key(&n)
    }

    pub fn dofs(&self, n: NodeId) -> &[usize] {
        self.nodes.get(&n).map_or(&[], |v| v.as_slice())
    }

    pub fn set_dofs(&mut self, n: NodeId, dofs: Vec<usize>) {
        self.nodes.insert(n, dofs);
    }

    pub fn num_active(&self) -> usize {
        self.nodes.values().map(Vec::len).sum()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn stored_entries(&self) -> usize {
        self.blocks.values().map(|b| b.rows() * b.cols()).sum()
    }

    /// Nodes sharing a stored block with `n`, ascending, excluding `n`.
    pub fn neighbors(&self, n: NodeId) -> Vec<NodeId> {
        self.adj.get(&n).map_or_else(Vec::new, |s| s.iter().copied().collect())
    }

    pub fn has_block(&self, a: NodeId, b: NodeId) -> bool {
        self.blocks.contains_key(&key(a, b))
    }

    /// Raw stored block with key `(min, max)`.
    pub fn raw_block(&self, a: NodeId, b: NodeId) -> Option<&DenseBlock> {
        self.blocks.get(&key(a, b))
    }

    pub fn raw_blocks(&self) -> impl Iterator<Item = (&(NodeId, NodeId), &DenseBlock)> {
        self.blocks.iter()
    }

    /// Block with rows `dofs(a)` and columns `dofs(b)`.
    pub fn block(&self, a: NodeId, b: NodeId) -> Option<DenseBlock> {
        let blk = self.blocks.get(&key(a, b))?;
        Some(if a <= b { blk.clone() } else { blk.transpose() })
    }

    /// Block or zeros.
    pub fn block_or_zero(&self, a: NodeId, b: NodeId) -> DenseBlock {
        self.block(a, b).unwrap_or_else(|| DenseBlock::zeros(self.dofs(a).len(), self.dofs(b).len()))
    }

    /// Stores a block given with rows `dofs(a)` and columns `dofs(b)`.
    pub fn set_block(&mut self, a: NodeId, b: NodeId, blk: DenseBlock) {
        let stored = if a <= b { blk } else { blk.transpose() };
        self.insert_raw(key(a, b), stored);
    }

    pub fn insert_raw(&mut self, k: (NodeId, NodeId), blk: DenseBlock) {
        if k.0 != k.1 {
            self.adj.entry(k.0).or_default().insert(k.1);
            self.adj.entry(k.1).or_default().insert(k.0);
        }
        self.blocks.insert(k, blk);
    }

    /// Adds `upd(i, j)` for `i < rows`, `j < cols` at an offset of a larger
    /// update whose row range belongs to `a` and column range to `b`.
    pub fn add_sub_block(&mut self, a: NodeId, b: NodeId, upd: &DenseBlock, r0: usize, c0: usize) {
        let (ra, cb) = (self.dofs(a).len(), self.dofs(b).len());
        let k = key(a, b);
        if !self.blocks.contains_key(&k) {
            let shape = if a <= b { (ra, cb) } else { (cb, ra) };
            self.insert_raw(k, DenseBlock::zeros(shape.0, shape.1));
        }
        let blk = self.blocks.get_mut(&k).unwrap();
        if a <= b {
            for j in 0..cb {
                let src = &upd.col(c0 + j)[r0..r0 + ra];
                for (d, s) in blk.col_mut(j).iter_mut().zip(src) {
                    *d += s;
                }
            }
        } else {
            for i in 0..ra {
                let col = blk.col_mut(i);
                for (j, d) in col.iter_mut().enumerate() {
                    *d += upd.get(r0 + i, c0 + j);
                }
            }
        }
    }

    /// Drops a node and all its blocks.
    pub fn remove_node(&mut self, n: NodeId) {
        if let Some(nb) = self.adj.remove(&n) {
            for m in nb {
                self.blocks.remove(&key(n, m));
                if let Some(s) = self.adj.get_mut(&m) {
                    s.remove(&n);
                }
            }
        }
        self.blocks.remove(&(n, n));
        self.nodes.remove(&n);
    }

    /// Keeps the given positions of node `n`'s DOFs in all of its blocks.
    pub fn restrict_node(&mut self, n: NodeId, keep: &[usize]) {
        let dofs = self.dofs(n);
        let new_dofs: Vec<usize> = keep.iter().map(|&p| dofs[p]).collect();
        for m in self.neighbors(n) {
            let k = key(n, m);
            if let Some(blk) = self.blocks.get(&k) {
                let restricted = if n < m {
                    blk.select(keep, &(0..blk.cols()).collect::<Vec<_>>())
                } else {
                    blk.select_cols(keep)
                };
                self.blocks.insert(k, restricted);
            }
        }
        if let Some(blk) = self.blocks.get(&(n, n)) {
            let r = blk.select(keep, keep);
            self.blocks.insert((n, n), r);
        }
        self.nodes.insert(n, new_dofs);
    }

    /// Dense matrix with the given node lists along rows and columns.
    pub fn gather(&self, rows: &[NodeId], cols: &[NodeId]) -> DenseBlock {
        let rsz: Vec<usize> = rows.iter().map(|&n| self.dofs(n).len()).collect();
        let csz: Vec<usize> = cols.iter().map(|&n| self.dofs(n).len()).collect();
        let mut out = DenseBlock::zeros(rsz.iter().sum(), csz.iter().sum());
        let mut c0 = 0;
        for (cj, &cn) in cols.iter().enumerate() {
            let mut r0 = 0;
            for (ri, &rn) in rows.iter().enumerate() {
                if let Some(blk) = self.blocks.get(&key(rn, cn)) {
                    let transpose = rn > cn;
                    for j in 0..csz[cj] {
                        let dst = &mut out.col_mut(c0 + j)[r0..r0 + rsz[ri]];
                        if transpose {
                            for (i, d) in dst.iter_mut().enumerate() {
                                *d = blk.get(j, i);
                            }
                        } else {
                            dst.copy_from_slice(blk.col(j));
                        }
                    }
                }
                r0 += rsz[ri];
            }
            c0 += csz[cj];
        }
        out
    }

    /// Concatenated DOF list of a node list.
    pub fn concat_dofs(&self, nodes: &[NodeId]) -> Vec<usize> {
        nodes.iter().flat_map(|&n| self.dofs(n).iter().copied()).collect()
    }

    /// Maps every node to its level-(ℓ+1) node and rearranges the stored
    /// blocks accordingly. Entries are moved, never summed.
    pub fn reblock(&self, spec: &GridSpec) -> LevelMatrix {
        let next = self.level + 1;
        let mut out = LevelMatrix::new(next);
        let parent: FxHashMap<NodeId, NodeId> = self
            .nodes
            .iter()
            .filter(|(_, d)| !d.is_empty())
            .map(|(&n, d)| (n, spec.node_of(next, d[0])))
            .collect();
        for (&n, d) in &self.nodes {
            if let Some(&p) = parent.get(&n) {
                out.nodes.entry(p).or_default().extend_from_slice(d);
            }
        }
        for d in out.nodes.values_mut() {
            d.sort_unstable();
        }
        let positions = self.positions_in(&out, &parent);
        let mut keys: Vec<&(NodeId, NodeId)> = self.blocks.keys().collect();
        keys.sort_unstable();
        for k in keys {
            let (a, b) = *k;
            let (Some(&pa), Some(&pb)) = (parent.get(&a), parent.get(&b)) else { continue };
            let blk = &self.blocks[k];
            let nk = key(pa, pb);
            let shape = (out.dofs(nk.0).len(), out.dofs(nk.1).len());
            if !out.blocks.contains_key(&nk) {
                out.insert_raw(nk, DenseBlock::zeros(shape.0, shape.1));
            }
            let dst = out.blocks.get_mut(&nk).unwrap();
            let (pos_a, pos_b) = (&positions[&a], &positions[&b]);
            if pa <= pb {
                place(dst, blk, pos_a, pos_b, false);
            } else {
                place(dst, blk, pos_b, pos_a, true);
            }
            if pa == pb && a != b {
                place(dst, blk, pos_b, pos_a, true);
            }
        }
        out
    }

    /// Positions of each node's DOFs inside its parent's DOF list.
    pub fn positions_in(
        &self,
        next: &LevelMatrix,
        parent: &FxHashMap<NodeId, NodeId>,
    ) -> FxHashMap<NodeId, Vec<usize>> {
        let mut out = FxHashMap::default();
        for (&n, d) in &self.nodes {
            if let Some(p) = parent.get(&n) {
                let pd = next.dofs(*p);
                out.insert(n, d.iter().map(|x| pd.binary_search(x).expect("dof in parent")).collect());
            }
        }
        out
    }

    /// Largest `|a_ij − a_ji|` over the diagonal blocks.
    pub fn max_asymmetry(&self) -> f64 {
        self.blocks.iter().filter(|((a, b), _)| a == b).map(|(_, blk)| blk.asymmetry()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.values().map(DenseBlock::max_abs).fold(0.0, f64::max)
    }
}
