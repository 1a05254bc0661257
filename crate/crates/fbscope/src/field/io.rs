//! Field container serialization.
//!
//! Layout (little-endian): magic "FBSF", version u16, dim u16, then per
//! axis cells u32, origin f64, extent f64, then the row-major f64 nodal
//! arrays for u and χ. The Lipschitz bound is not stored; loading
//! recomputes it from the discrete gradients.

use super::{GridSpec, ScalarField};
use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"FBSF";
const VERSION: u16 = 1;

pub fn write_field<W: Write>(mut w: W, field: &ScalarField) -> Result<()> {
    let spec = field.spec();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(spec.dim() as u16).to_le_bytes())?;
    for d in 0..spec.dim() {
        w.write_all(&(spec.cells(d) as u32).to_le_bytes())?;
    }
    for d in 0..spec.dim() {
        w.write_all(&spec.origin()[d].to_le_bytes())?;
    }
    for d in 0..spec.dim() {
        w.write_all(&spec.extent()[d].to_le_bytes())?;
    }
    for &v in field.u() {
        w.write_all(&v.to_le_bytes())?;
    }
    for &c in field.chi_values() {
        w.write_all(&c.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field<R: Read>(mut r: R) -> Result<ScalarField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Container("bad magic bytes".into()));
    }
    let mut b2 = [0u8; 2];
    r.read_exact(&mut b2)?;
    let version = u16::from_le_bytes(b2);
    if version != VERSION {
        return Err(Error::Container(format!("unsupported version {version}")));
    }
    r.read_exact(&mut b2)?;
    let dim = u16::from_le_bytes(b2) as usize;
    if dim != 2 && dim != 3 {
        return Err(Error::Container(format!("bad dimension {dim}")));
    }
    let mut cells = [0usize; 3];
    for c in cells.iter_mut().take(dim) {
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        *c = u32::from_le_bytes(b4) as usize;
    }
    let mut f64buf = [0u8; 8];
    let mut origin = [0.0; 3];
    for o in origin.iter_mut().take(dim) {
        r.read_exact(&mut f64buf)?;
        *o = f64::from_le_bytes(f64buf);
    }
    let mut extent = [0.0; 3];
    for e in extent.iter_mut().take(dim) {
        r.read_exact(&mut f64buf)?;
        *e = f64::from_le_bytes(f64buf);
    }
    let spec = GridSpec::new(dim, origin, extent, cells)
        .map_err(|e| Error::Container(format!("bad grid spec: {e}")))?;
    let n = spec.node_count();
    let mut u = vec![0.0; n];
    for v in u.iter_mut() {
        r.read_exact(&mut f64buf)?;
        *v = f64::from_le_bytes(f64buf);
    }
    let mut chi = vec![0.0; n];
    for c in chi.iter_mut() {
        r.read_exact(&mut f64buf)?;
        *c = f64::from_le_bytes(f64buf);
    }
    // lipschitz metadata is recomputed from the stored samples
    let probe = ScalarField::new(spec.clone(), u.clone(), chi.clone(), f64::INFINITY);
    let lip = probe?.measured_lipschitz();
    ScalarField::new(spec, u, chi, lip)
}

pub fn save_field(path: &Path, field: &ScalarField) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_field(std::io::BufWriter::new(f), field)
}

pub fn load_field(path: &Path) -> Result<ScalarField> {
    let f = std::fs::File::open(path)?;
    read_field(std::io::BufReader::new(f))
}

/// One node per row: coordinates, u, χ; 17 significant digits.
pub fn field_to_csv(field: &ScalarField, header_comment: &str) -> String {
    let spec = field.spec();
    let mut out = String::new();
    if !header_comment.is_empty() {
        out.push_str(&format!("# {header_comment}\n"));
    }
    out.push_str(if spec.dim() == 2 {
        "x,y,u,chi\n"
    } else {
        "x,y,z,u,chi\n"
    });
    for idx in spec.node_iter() {
        let p = spec.node_pos(idx);
        let k = spec.node_index(idx);
        if spec.dim() == 2 {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                p[0], p[1], field.u()[k], field.chi_values()[k]
            ));
        } else {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                p[0], p[1], p[2], field.u()[k], field.chi_values()[k]
            ));
        }
    }
    out
}
