use std::io::{BufRead, Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{CoefficientField, FieldKind, GeometryError, SparseSymMatrix};

const FIELD_MAGIC: &[u8; 4] = b"DHFD";
const FIELD_VERSION: u32 = 1;

/// Writes the lower triangle in Matrix Market symmetric coordinate format.
pub fn write_matrix_market<W: Write>(mut w: W, a: &SparseSymMatrix) -> Result<(), GeometryError> {
    let lower = a.lower_triplets();
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", a.dim(), a.dim(), lower.len())?;
    for (i, k, v) in lower {
        writeln!(w, "{} {} {:e}", i + 1, k + 1, v)?;
    }
    Ok(())
}

pub fn read_matrix_market<R: BufRead>(r: R) -> Result<SparseSymMatrix, GeometryError> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| GeometryError::Format("empty file".into()))??;
    let lower = header.to_ascii_lowercase();
    if !lower.starts_with("%%matrixmarket matrix coordinate real") {
        return Err(GeometryError::Format(format!("unsupported header: {header}")));
    }
    let symmetric = lower.contains("symmetric");
    let mut size: Option<(usize, usize)> = None;
    let mut triplets = Vec::new();
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        let bad = || GeometryError::Format(format!("bad line: {t}"));
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(bad());
                }
                let rows: usize = parts[0].parse().map_err(|_| bad())?;
                let nnz: usize = parts[2].parse().map_err(|_| bad())?;
                size = Some((rows, nnz));
            }
            Some(_) => {
                if parts.len() != 3 {
                    return Err(bad());
                }
                let i: usize = parts[0].parse().map_err(|_| bad())?;
                let k: usize = parts[1].parse().map_err(|_| bad())?;
                let v: f64 = parts[2].parse().map_err(|_| bad())?;
                if i == 0 || k == 0 {
                    return Err(bad());
                }
                triplets.push((i - 1, k - 1, v));
                if symmetric && i != k {
                    triplets.push((k - 1, i - 1, v));
                }
            }
        }
    }
    let (dim, _) = size.ok_or_else(|| GeometryError::Format("missing size line".into()))?;
    SparseSymMatrix::from_triplets(dim, &triplets)
}

/// Binary field dump: magic, version, `n`, kind, seed, then `a` and `b`.
pub fn write_field<W: Write>(mut w: W, f: &CoefficientField) -> Result<(), GeometryError> {
    w.write_all(FIELD_MAGIC)?;
    w.write_u32::<LittleEndian>(FIELD_VERSION)?;
    w.write_u64::<LittleEndian>(f.n as u64)?;
    w.write_u32::<LittleEndian>(f.kind.code())?;
    w.write_u64::<LittleEndian>(f.seed)?;
    for &v in f.a.iter().chain(&f.b) {
        w.write_f64::<LittleEndian>(v)?;
    }
    Ok(())
}

pub fn read_field<R: Read>(mut r: R) -> Result<CoefficientField, GeometryError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != FIELD_MAGIC {
        return Err(GeometryError::Format("not a field dump".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != FIELD_VERSION {
        return Err(GeometryError::Format(format!("unsupported field version {version}")));
    }
    let n = r.read_u64::<LittleEndian>()? as usize;
    let kind = FieldKind::from_code(r.read_u32::<LittleEndian>()?)
        .ok_or_else(|| GeometryError::Format("unknown field kind".into()))?;
    let seed = r.read_u64::<LittleEndian>()?;
    let n3 = n * n * n;
    let mut read_vec = || -> Result<Vec<f64>, GeometryError> {
        let mut v = vec![0.0; n3];
        r.read_f64_into::<LittleEndian>(&mut v)?;
        Ok(v)
    };
    let a = read_vec()?;
    let b = read_vec()?;
    Ok(CoefficientField { n, kind, seed, a, b })
}
