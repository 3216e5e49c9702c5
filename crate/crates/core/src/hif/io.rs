//! Versioned little-endian binary format for a factorization.
//!
//! Layout: magic `DHIF`, version, `n`, `m`, level count, `eps`, peak entries,
//! then per level its counters and factors in application order, then the
//! root. Index lists are `u64` length followed by `u64` entries; dense blocks
//! are `rows`, `cols` and column-major `f64` data.

use std::io::{Read, Write};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::factor::{ElimFactor, HifFactorization, LevelFactors, RootFactor, SkelFactor};
use super::kernels::Elimination;
use super::HifError;
use crate::dense::{DenseBlock, LdltFactor};
use crate::geometry::{GridSpec, NodeId};

const MAGIC: &[u8; 4] = b"DHIF";
pub const FORMAT_VERSION: u32 = 1;
// Guards allocations driven by corrupt length fields.
const MAX_LEN: u64 = 1 << 34;

fn put_len<W: Write>(w: &mut W, v: usize) -> std::io::Result<()> {
    w.write_u64::<LE>(v as u64)
}

fn put_indices<W: Write>(w: &mut W, v: &[usize]) -> std::io::Result<()> {
    put_len(w, v.len())?;
    v.iter().try_for_each(|&x| w.write_u64::<LE>(x as u64))
}

fn put_f64s<W: Write>(w: &mut W, v: &[f64]) -> std::io::Result<()> {
    v.iter().try_for_each(|&x| w.write_f64::<LE>(x))
}

fn put_block<W: Write>(w: &mut W, b: &DenseBlock) -> std::io::Result<()> {
    put_len(w, b.rows())?;
    put_len(w, b.cols())?;
    put_f64s(w, b.as_slice())
}

fn put_elim<W: Write>(w: &mut W, e: &Elimination) -> std::io::Result<()> {
    put_block(w, &e.ldlt.l)?;
    put_f64s(w, &e.ldlt.d)?;
    put_block(w, &e.z)
}

fn get_len<R: Read>(r: &mut R) -> Result<usize, HifError> {
    let v = r.read_u64::<LE>()?;
    if v > MAX_LEN {
        return Err(HifError::Format(format!("length {v} out of range")));
    }
    Ok(v as usize)
}

fn get_indices<R: Read>(r: &mut R) -> Result<Vec<usize>, HifError> {
    let len = get_len(r)?;
    (0..len).map(|_| get_len(r)).collect()
}

fn get_f64s<R: Read>(r: &mut R, len: usize) -> Result<Vec<f64>, HifError> {
    let mut out = vec![0.0; len];
    r.read_f64_into::<LE>(&mut out)?;
    Ok(out)
}

fn get_block<R: Read>(r: &mut R) -> Result<DenseBlock, HifError> {
    let rows = get_len(r)?;
    let cols = get_len(r)?;
    let len = rows.checked_mul(cols).filter(|&l| (l as u64) <= MAX_LEN);
    let len = len.ok_or_else(|| HifError::Format(format!("block {rows}x{cols} too large")))?;
    Ok(DenseBlock::from_col_major(rows, cols, get_f64s(r, len)?))
}

fn get_elim<R: Read>(r: &mut R) -> Result<Elimination, HifError> {
    let l = get_block(r)?;
    if l.rows() != l.cols() {
        return Err(HifError::Format("non-square L".into()));
    }
    let d = get_f64s(r, l.rows())?;
    let z = get_block(r)?;
    if z.rows() != l.rows() {
        return Err(HifError::Format("Z rows differ from L".into()));
    }
    Ok(Elimination { ldlt: LdltFactor { l, d }, z })
}

pub fn write_factorization<W: Write>(mut w: W, f: &HifFactorization) -> Result<(), HifError> {
    let w = &mut w;
    w.write_all(MAGIC)?;
    w.write_u32::<LE>(FORMAT_VERSION)?;
    put_len(w, f.spec.n)?;
    put_len(w, f.spec.m)?;
    put_len(w, f.levels.len())?;
    w.write_f64::<LE>(f.eps)?;
    put_len(w, f.peak_level_entries)?;
    for lv in &f.levels {
        for v in [lv.level, lv.active_in, lv.active_mid, lv.active_out, lv.elims.len(), lv.skels.len()] {
            put_len(w, v)?;
        }
        for e in &lv.elims {
            w.write_u32::<LE>(e.node.0)?;
            put_indices(w, &e.interior)?;
            put_indices(w, &e.face)?;
            put_elim(w, &e.elim)?;
        }
        for s in &lv.skels {
            w.write_u32::<LE>(s.node.0)?;
            put_indices(w, &s.skeleton)?;
            put_indices(w, &s.redundant)?;
            put_block(w, &s.t)?;
            put_elim(w, &s.elim)?;
        }
    }
    put_indices(w, &f.root.dofs)?;
    put_block(w, &f.root.ldlt.l)?;
    put_f64s(w, &f.root.ldlt.d)?;
    Ok(())
}

pub fn read_factorization<R: Read>(mut r: R) -> Result<HifFactorization, HifError> {
    let r = &mut r;
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(HifError::Format("bad magic".into()));
    }
    let version = r.read_u32::<LE>()?;
    if version != FORMAT_VERSION {
        return Err(HifError::Format(format!("unsupported version {version}")));
    }
    let n = get_len(r)?;
    let m = get_len(r)?;
    let spec = GridSpec::with_leaf(n, m)?;
    let nlevels = get_len(r)?;
    if nlevels != spec.levels {
        return Err(HifError::Format(format!("{nlevels} levels stored, grid has {}", spec.levels)));
    }
    let eps = r.read_f64::<LE>()?;
    let peak = get_len(r)?;
    let mut levels = Vec::with_capacity(nlevels);
    for _ in 0..nlevels {
        let mut h = [0usize; 6];
        for v in h.iter_mut() {
            *v = get_len(r)?;
        }
        let mut lv = LevelFactors { level: h[0], active_in: h[1], active_mid: h[2], active_out: h[3], ..Default::default() };
        for _ in 0..h[4] {
            let node = NodeId(r.read_u32::<LE>()?);
            let interior = get_indices(r)?;
            let face = get_indices(r)?;
            let elim = get_elim(r)?;
            check_dims(elim.dim(), interior.len(), elim.z.cols(), face.len())?;
            lv.elims.push(ElimFactor { node, interior, face, elim });
        }
        for _ in 0..h[5] {
            let node = NodeId(r.read_u32::<LE>()?);
            let skeleton = get_indices(r)?;
            let redundant = get_indices(r)?;
            let t = get_block(r)?;
            let elim = get_elim(r)?;
            check_dims(elim.dim(), redundant.len(), elim.z.cols(), skeleton.len())?;
            check_dims(t.rows(), skeleton.len(), t.cols(), redundant.len())?;
            lv.skels.push(SkelFactor { node, skeleton, redundant, t, elim });
        }
        levels.push(lv);
    }
    let dofs = get_indices(r)?;
    let l = get_block(r)?;
    let d = get_f64s(r, l.rows())?;
    check_dims(l.rows(), dofs.len(), l.cols(), dofs.len())?;
    let out = HifFactorization { spec, eps, levels, root: RootFactor { dofs, ldlt: LdltFactor { l, d } }, peak_level_entries: peak };
    let nd = spec.num_dofs();
    let all_in_range = out
        .levels
        .iter()
        .flat_map(|l| {
            l.elims.iter().flat_map(|e| e.interior.iter().chain(&e.face))
                .chain(l.skels.iter().flat_map(|s| s.skeleton.iter().chain(&s.redundant)))
        })
        .chain(&out.root.dofs)
        .all(|&i| i < nd);
    if !all_in_range {
        return Err(HifError::Format("point index out of range".into()));
    }
    Ok(out)
}

fn check_dims(a: usize, b: usize, c: usize, d: usize) -> Result<(), HifError> {
    if a != b || c != d {
        return Err(HifError::Format(format!("inconsistent factor dimensions ({a} vs {b}, {c} vs {d})")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{assemble_stencil, CoefficientField, FieldKind};
    use crate::hif::factorize;

    #[test]
    fn round_trip_and_rejects_garbage() {
        let spec = GridSpec::new(8).unwrap();
        let field = CoefficientField::new(&spec, FieldKind::Constant, 0);
        let a = assemble_stencil(&spec, &field).unwrap();
        let f = factorize(&a, &spec, 1e-3).unwrap();
        let mut buf = Vec::new();
        write_factorization(&mut buf, &f).unwrap();
        let g = read_factorization(&buf[..]).unwrap();
        assert_eq!(f, g);
        assert!(read_factorization(&buf[..buf.len() - 3]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_factorization(&bad[..]), Err(HifError::Format(_))));
    }
}
