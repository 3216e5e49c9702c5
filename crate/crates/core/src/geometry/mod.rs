//! Periodic grid, octree cells, and the node decomposition used to block the
//! level matrices.
//!
//! A *node* at level ℓ is a maximal set of grid points that share a cell and
//! a position class relative to the level-ℓ frames (coordinates that are
//! multiples of `s = m·2^ℓ`): the cell interior, one of the three owned faces,
//! one of the three owned edges, or the owned corner. Every level-ℓ node lies
//! entirely inside one level-(ℓ+1) node.

mod field;
mod io;
mod stencil;

pub use field::{CoefficientField, FieldKind};
pub use io::{read_field, read_matrix_market, write_field, write_matrix_market};
pub use stencil::{assemble_stencil, SparseSymMatrix};

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("grid size {n} has no split n = m·2^L with 1 ≤ m ≤ 64")]
    InvalidSize { n: usize },
    #[error("leaf size {m} does not divide {n} into a power-of-two number of cells")]
    InvalidLeafSize { n: usize, m: usize },
    #[error("coefficient a at point {index} is {value}, must be positive")]
    NonPositiveCoefficient { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const MAX_LEAF: usize = 64;
pub const MIN_LEAF: usize = 4;

/// `n³` periodic grid split as `n = m·2^L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridSpec {
    pub n: usize,
    pub m: usize,
    pub levels: usize,
}

impl GridSpec {
    /// Picks the smallest leaf size `m ≥ 4` of the form `n/2^L`, falling back
    /// to the smallest available `m` when `n` has no such split.
    pub fn new(n: usize) -> Result<Self, GeometryError> {
        if n == 0 {
            return Err(GeometryError::InvalidSize { n });
        }
        let mut candidates = Vec::new();
        let (mut m, mut l) = (n, 0);
        loop {
            if m <= MAX_LEAF {
                candidates.push((m, l));
            }
            if m % 2 != 0 {
                break;
            }
            m /= 2;
            l += 1;
        }
        let pick = candidates
            .iter()
            .filter(|(m, _)| *m >= MIN_LEAF)
            .min_by_key(|(m, _)| *m)
            .or_else(|| candidates.iter().max_by_key(|(m, _)| *m))
            .copied();
        match pick {
            Some((m, levels)) => Ok(GridSpec { n, m, levels }),
            None => Err(GeometryError::InvalidSize { n }),
        }
    }

    /// Uses an explicit leaf size.
    pub fn with_leaf(n: usize, m: usize) -> Result<Self, GeometryError> {
        if m == 0 || m > MAX_LEAF || n % m != 0 || !(n / m).is_power_of_two() {
            return Err(GeometryError::InvalidLeafSize { n, m });
        }
        Ok(GridSpec { n, m, levels: (n / m).trailing_zeros() as usize })
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn num_dofs(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Cell edge length in grid points at level `l`.
    pub fn cell_size(&self, level: usize) -> usize {
        self.m << level
    }

    /// Cells per dimension at level `l`.
    pub fn cells_per_dim(&self, level: usize) -> usize {
        1 << (self.levels - level)
    }

    pub fn num_cells(&self, level: usize) -> usize {
        self.cells_per_dim(level).pow(3)
    }

    #[inline]
    pub fn linear(&self, p: [usize; 3]) -> usize {
        (p[0] * self.n + p[1]) * self.n + p[2]
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    pub fn cells(&self, level: usize) -> impl Iterator<Item = CellId> + '_ {
        let nc = self.cells_per_dim(level);
        (0..nc * nc * nc).map(move |i| CellId { level, j: [i / (nc * nc), (i / nc) % nc, i % nc] })
    }

    /// Classifies grid point `idx` at `level`.
    pub fn node_of(&self, level: usize, idx: usize) -> NodeId {
        let p = self.coords(idx);
        let s = self.cell_size(level);
        let on = [p[0] % s == 0, p[1] % s == 0, p[2] % s == 0];
        let kind = match on {
            [false, false, false] => NodeKind::Interior,
            [true, false, false] => NodeKind::Face(Axis::X),
            [false, true, false] => NodeKind::Face(Axis::Y),
            [false, false, true] => NodeKind::Face(Axis::Z),
            [false, true, true] => NodeKind::Edge(Axis::X),
            [true, false, true] => NodeKind::Edge(Axis::Y),
            [true, true, false] => NodeKind::Edge(Axis::Z),
            [true, true, true] => NodeKind::Corner,
        };
        let cell = CellId { level, j: [p[0] / s, p[1] / s, p[2] / s] };
        NodeId::new(self.cell_linear(cell), kind)
    }

    pub fn cell_linear(&self, cell: CellId) -> usize {
        let nc = self.cells_per_dim(cell.level);
        (cell.j[0] * nc + cell.j[1]) * nc + cell.j[2]
    }

    pub fn cell_from_linear(&self, level: usize, lin: usize) -> CellId {
        let nc = self.cells_per_dim(level);
        CellId { level, j: [lin / (nc * nc), (lin / nc) % nc, lin % nc] }
    }

    /// Grid points of a node, ascending.
    pub fn node_points(&self, level: usize, node: NodeId) -> Vec<usize> {
        let cell = self.cell_from_linear(level, node.cell());
        let s = self.cell_size(level);
        let range = |d: usize, fixed: bool| -> std::ops::Range<usize> {
            let lo = cell.j[d] * s;
            if fixed {
                lo..lo + 1
            } else {
                lo + 1..lo + s
            }
        };
        let fixed = node.kind().fixed_dims();
        let mut out = Vec::new();
        for x in range(0, fixed[0]) {
            for y in range(1, fixed[1]) {
                for z in range(2, fixed[2]) {
                    out.push(self.linear([x, y, z]));
                }
            }
        }
        out
    }

    /// The 26 nodes on the closed boundary of a cell, in a fixed order.
    pub fn boundary_nodes(&self, cell: CellId) -> Vec<NodeId> {
        let nc = self.cells_per_dim(cell.level);
        let shifted = |off: [usize; 3]| -> usize {
            let j = [(cell.j[0] + off[0]) % nc, (cell.j[1] + off[1]) % nc, (cell.j[2] + off[2]) % nc];
            self.cell_linear(CellId { level: cell.level, j })
        };
        let mut out = Vec::with_capacity(26);
        for axis in Axis::ALL {
            for o in 0..2 {
                let mut off = [0; 3];
                off[axis.index()] = o;
                out.push(NodeId::new(shifted(off), NodeKind::Face(axis)));
            }
        }
        for axis in Axis::ALL {
            let (a, b) = axis.others();
            for oa in 0..2 {
                for ob in 0..2 {
                    let mut off = [0; 3];
                    off[a] = oa;
                    off[b] = ob;
                    out.push(NodeId::new(shifted(off), NodeKind::Edge(axis)));
                }
            }
        }
        for o0 in 0..2 {
            for o1 in 0..2 {
                for o2 in 0..2 {
                    out.push(NodeId::new(shifted([o0, o1, o2]), NodeKind::Corner));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// The six faces around a cell: three owned, then three owned by the
    /// neighbors in the positive directions.
    pub fn surrounding_faces(&self, cell: CellId) -> [FaceId; 6] {
        let nc = self.cells_per_dim(cell.level);
        let face = |axis: Axis, shift: usize| {
            let mut j = cell.j;
            j[axis.index()] = (j[axis.index()] + shift) % nc;
            FaceId { level: cell.level, axis, cell: j }
        };
        [
            face(Axis::X, 0),
            face(Axis::Y, 0),
            face(Axis::Z, 0),
            face(Axis::X, 1),
            face(Axis::Y, 1),
            face(Axis::Z, 1),
        ]
    }

    /// Active grid points strictly inside the cell's boundary frames, ascending.
    pub fn interior_dofs(&self, cell: CellId, active: &ActiveSet) -> Vec<usize> {
        let s = self.cell_size(cell.level);
        let mut out = Vec::new();
        for x in cell.j[0] * s + 1..(cell.j[0] + 1) * s {
            for y in cell.j[1] * s + 1..(cell.j[1] + 1) * s {
                for z in cell.j[2] * s + 1..(cell.j[2] + 1) * s {
                    let idx = self.linear([x, y, z]);
                    if active.contains(idx) {
                        out.push(idx);
                    }
                }
            }
        }
        out
    }

    /// All active points of a face's frame, excluding its bounding edges.
    pub fn face_dofs(&self, face: FaceId, active: &ActiveSet) -> Vec<usize> {
        let node = NodeId::new(self.cell_linear(face.owner()), NodeKind::Face(face.axis));
        self.node_points(face.level, node).into_iter().filter(|&i| active.contains(i)).collect()
    }

    pub fn faces(&self, level: usize) -> Vec<FaceId> {
        let mut out = Vec::new();
        for axis in Axis::ALL {
            for c in self.cells(level) {
                out.push(FaceId { level, axis, cell: c.j });
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i]
    }

    /// The two remaining dimensions, ascending.
    pub fn others(self) -> (usize, usize) {
        match self {
            Axis::X => (1, 2),
            Axis::Y => (0, 2),
            Axis::Z => (0, 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Interior,
    /// Face with the given normal.
    Face(Axis),
    /// Edge parallel to the given axis.
    Edge(Axis),
    Corner,
}

impl NodeKind {
    pub fn code(self) -> usize {
        match self {
            NodeKind::Interior => 0,
            NodeKind::Face(a) => 1 + a.index(),
            NodeKind::Edge(a) => 4 + a.index(),
            NodeKind::Corner => 7,
        }
    }

    pub fn from_code(c: usize) -> NodeKind {
        match c {
            0 => NodeKind::Interior,
            1..=3 => NodeKind::Face(Axis::from_index(c - 1)),
            4..=6 => NodeKind::Edge(Axis::from_index(c - 4)),
            _ => NodeKind::Corner,
        }
    }

    /// Dimensions in which the node's coordinate sits on a frame.
    pub fn fixed_dims(self) -> [bool; 3] {
        match self {
            NodeKind::Interior => [false; 3],
            NodeKind::Face(a) => {
                let mut f = [false; 3];
                f[a.index()] = true;
                f
            }
            NodeKind::Edge(a) => {
                let mut f = [true; 3];
                f[a.index()] = false;
                f
            }
            NodeKind::Corner => [true; 3],
        }
    }
}

/// `cell_linear · 8 + kind code` at a given level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn new(cell: usize, kind: NodeKind) -> Self {
        NodeId((cell * 8 + kind.code()) as u32)
    }

    pub fn cell(self) -> usize {
        self.0 as usize / 8
    }

    pub fn kind(self) -> NodeKind {
        NodeKind::from_code(self.0 as usize % 8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Cell `C^ℓ_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId {
    pub level: usize,
    pub j: [usize; 3],
}

impl CellId {
    /// The level-(ℓ+1) cell containing this one.
    pub fn parent(&self) -> CellId {
        CellId { level: self.level + 1, j: [self.j[0] / 2, self.j[1] / 2, self.j[2] / 2] }
    }

    pub fn children(&self) -> [CellId; 8] {
        let mut out = [*self; 8];
        for (c, o) in out.iter_mut().enumerate() {
            let off = [c >> 2, (c >> 1) & 1, c & 1];
            o.level = self.level - 1;
            o.j = [2 * self.j[0] + off[0], 2 * self.j[1] + off[1], 2 * self.j[2] + off[2]];
        }
        out
    }
}

/// A level-ℓ face, identified by its normal and the cell that owns it (the
/// cell whose low-index frame it is).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaceId {
    pub level: usize,
    pub axis: Axis,
    pub cell: [usize; 3],
}

impl FaceId {
    pub fn owner(&self) -> CellId {
        CellId { level: self.level, j: self.cell }
    }

    /// The two cells sharing this face: the owner and its negative-side neighbor.
    pub fn cells(&self, spec: &GridSpec) -> [CellId; 2] {
        let nc = spec.cells_per_dim(self.level);
        let mut j = self.cell;
        let d = self.axis.index();
        j[d] = (j[d] + nc - 1) % nc;
        [self.owner(), CellId { level: self.level, j }]
    }
}

/// Membership bitmap of the active DOFs `Σ^ℓ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActiveSet {
    pub level: usize,
    bits: Vec<bool>,
    count: usize,
}

impl ActiveSet {
    pub fn full(n_dofs: usize) -> Self {
        ActiveSet { level: 0, bits: vec![true; n_dofs], count: n_dofs }
    }

    pub fn empty(n_dofs: usize) -> Self {
        ActiveSet { level: 0, bits: vec![false; n_dofs], count: 0 }
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn insert(&mut self, i: usize) {
        if !self.bits[i] {
            self.bits[i] = true;
            self.count += 1;
        }
    }

    pub fn remove(&mut self, i: usize) {
        if self.bits[i] {
            self.bits[i] = false;
            self.count -= 1;
        }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.bits.len()).filter(|&i| self.bits[i]).collect()
    }

    pub fn is_subset_of(&self, other: &ActiveSet) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_splits() {
        assert_eq!(GridSpec::new(32).unwrap(), GridSpec { n: 32, m: 4, levels: 3 });
        assert_eq!(GridSpec::new(64).unwrap(), GridSpec { n: 64, m: 4, levels: 4 });
        assert_eq!(GridSpec::new(24).unwrap(), GridSpec { n: 24, m: 6, levels: 2 });
        assert_eq!(GridSpec::new(8).unwrap(), GridSpec { n: 8, m: 4, levels: 1 });
        assert!(GridSpec::new(67).is_err());
        assert!(GridSpec::new(0).is_err());
        assert_eq!(GridSpec::with_leaf(32, 8).unwrap().levels, 2);
        assert!(GridSpec::with_leaf(32, 6).is_err());
    }

    #[test]
    fn leaf_interior_count() {
        let spec = GridSpec::new(16).unwrap();
        let active = ActiveSet::full(spec.num_dofs());
        for cell in spec.cells(0) {
            assert_eq!(spec.interior_dofs(cell, &active).len(), 27);
        }
        let none = ActiveSet::empty(spec.num_dofs());
        assert!(spec.interior_dofs(CellId { level: 1, j: [0, 0, 0] }, &none).is_empty());
    }

    #[test]
    fn nodes_partition_points() {
        let spec = GridSpec::new(16).unwrap();
        for level in 0..=spec.levels {
            let mut seen = vec![0u8; spec.num_dofs()];
            for cell in 0..spec.num_cells(level) {
                for code in 0..8 {
                    for p in spec.node_points(level, NodeId::new(cell, NodeKind::from_code(code))) {
                        seen[p] += 1;
                        assert_eq!(spec.node_of(level, p), NodeId::new(cell, NodeKind::from_code(code)));
                    }
                }
            }
            assert!(seen.iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn nodes_nest_across_levels() {
        let spec = GridSpec::new(32).unwrap();
        for level in 0..spec.levels {
            let mut map = std::collections::HashMap::new();
            for p in 0..spec.num_dofs() {
                let lo = spec.node_of(level, p);
                let hi = spec.node_of(level + 1, p);
                assert_eq!(*map.entry(lo).or_insert(hi), hi);
            }
        }
    }

    #[test]
    fn boundary_has_26_nodes() {
        let spec = GridSpec::new(32).unwrap();
        let cell = CellId { level: 1, j: [3, 0, 2] };
        assert_eq!(spec.boundary_nodes(cell).len(), 26);
    }

    #[test]
    fn faces_shared_by_two_cells() {
        let spec = GridSpec::new(16).unwrap();
        for level in 0..spec.levels {
            let mut count = std::collections::HashMap::new();
            for cell in spec.cells(level) {
                for f in spec.surrounding_faces(cell) {
                    *count.entry(f).or_insert(0) += 1;
                }
            }
            assert_eq!(count.len(), 3 * spec.num_cells(level));
            assert!(count.values().all(|&c| c == 2));
        }
    }
}
