//! Binary and JSON persistence of fields and DtN matrices, and hashing.

use crate::error::{Error, Result};
use crate::mesh::{DiscreteField, StructuredMesh};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of the canonical JSON serialization of `v`.
pub fn json_hash<T: Serialize>(v: &T) -> String {
    sha256_hex(serde_json::to_string(v).expect("serializable").as_bytes())
}

/// Sidecar describing a binary field file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSidecar {
    /// Node counts along each axis.
    pub dims: [usize; 3],
    pub pitch: f64,
    pub origin: [f64; 3],
    pub domain_hash: String,
    pub data_sha256: String,
    pub provenance: serde_json::Value,
}

/// Little-endian f64 bytes of a field, row-major over `(i, j, k, re/im)`.
pub fn field_bytes(u: &DiscreteField) -> Vec<u8> {
    let [nx, ny, nz] = u.dims;
    let mut out = Vec::with_capacity(nx * ny * nz * 16);
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let v = u.values[i + nx * (j + ny * k)];
                out.extend_from_slice(&v.re.to_le_bytes());
                out.extend_from_slice(&v.im.to_le_bytes());
            }
        }
    }
    out
}

/// Inverse of [`field_bytes`].
pub fn field_from_bytes(dims: [usize; 3], bytes: &[u8]) -> Result<DiscreteField> {
    let [nx, ny, nz] = dims;
    if bytes.len() != nx * ny * nz * 16 {
        return Err(Error::ParseError("field byte length does not match dims".into()));
    }
    let mut values = vec![Complex64::new(0.0, 0.0); nx * ny * nz];
    let mut it = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let re = it.next().expect("length checked");
                let im = it.next().expect("length checked");
                values[i + nx * (j + ny * k)] = Complex64::new(re, im);
            }
        }
    }
    Ok(DiscreteField { dims, values })
}

/// Writes `<stem>.bin` and `<stem>.json`.
pub fn write_field(
    dir: &Path,
    stem: &str,
    mesh: &StructuredMesh,
    u: &DiscreteField,
    provenance: serde_json::Value,
) -> Result<FieldSidecar> {
    std::fs::create_dir_all(dir)?;
    let bytes = field_bytes(u);
    let side = FieldSidecar {
        dims: u.dims,
        pitch: mesh.h,
        origin: mesh.origin.0,
        domain_hash: sha256_hex(mesh.descriptor().as_bytes()),
        data_sha256: sha256_hex(&bytes),
        provenance,
    };
    std::fs::write(dir.join(format!("{stem}.bin")), &bytes)?;
    std::fs::write(
        dir.join(format!("{stem}.json")),
        serde_json::to_string_pretty(&side).map_err(|e| Error::IoError(e.to_string()))?,
    )?;
    Ok(side)
}

/// Reads a field written by [`write_field`], verifying its hash.
pub fn read_field(dir: &Path, stem: &str) -> Result<(FieldSidecar, DiscreteField)> {
    let side: FieldSidecar = serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json")))?)
        .map_err(|e| Error::ParseError(e.to_string()))?;
    let bytes = std::fs::read(dir.join(format!("{stem}.bin")))?;
    if sha256_hex(&bytes) != side.data_sha256 {
        return Err(Error::ParseError("field hash mismatch".into()));
    }
    let u = field_from_bytes(side.dims, &bytes)?;
    Ok((side, u))
}

/// Header of a persisted DtN matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DtnHeader {
    pub n: usize,
    pub dof_coords: Vec<[f64; 3]>,
    pub admittivity_hash: String,
    pub mesh_hash: String,
    pub data_sha256: String,
}

/// Interleaved `(re, im)` little-endian f64 bytes, row-major.
pub fn complex_matrix_bytes(n: usize, m: &[Complex64]) -> Vec<u8> {
    assert_eq!(m.len(), n * n);
    let mut out = Vec::with_capacity(n * n * 16);
    for v in m {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn complex_matrix_from_bytes(n: usize, bytes: &[u8]) -> Result<Vec<Complex64>> {
    if bytes.len() != n * n * 16 {
        return Err(Error::ParseError("matrix byte length mismatch".into()));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_bytes_roundtrip_and_order() {
        let dims = [2, 3, 4];
        let values: Vec<Complex64> = (0..24).map(|i| Complex64::new(i as f64, -(i as f64))).collect();
        let u = DiscreteField { dims, values };
        let b = field_bytes(&u);
        assert_eq!(b.len(), 24 * 16);
        // second record is (i=0, j=0, k=1) = node 6
        assert_eq!(f64::from_le_bytes(b[16..24].try_into().unwrap()), 6.0);
        assert_eq!(field_from_bytes(dims, &b).unwrap(), u);
    }

    #[test]
    fn matrix_bytes_roundtrip() {
        let m: Vec<Complex64> = (0..9).map(|i| Complex64::new(i as f64, 0.5)).collect();
        assert_eq!(complex_matrix_from_bytes(3, &complex_matrix_bytes(3, &m)).unwrap(), m);
    }
}
