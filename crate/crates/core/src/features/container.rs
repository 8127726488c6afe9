//! `features.bin` layout (all integers and floats little-endian):
//!
//! ```text
//! magic        12 bytes  "DRIVENN-FEAT"
//! version      u32       1
//! n_drugs      u64
//! drug ids     n_drugs × (u32 byte length, UTF-8 bytes)
//! block dims   3 × u64   embedding, protein, mono
//! values       n_drugs × width f64, row-major
//! protein pca  pca record
//! mono pca     pca record
//!
//! pca record:
//!   present             u8 (0 = absent, nothing follows)
//!   variance_threshold  f64
//!   n_features          u64
//!   retained            u64
//!   n_eigenvalues       u64
//!   mean                n_features × f64
//!   eigenvalues         n_eigenvalues × f64
//!   components          retained × n_features f64, row-major
//! ```
//!
//! Only the retained axes are stored, so a reloaded model's `components`
//! has exactly `retained` rows.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{BlockDims, DrugFeatureMatrix, PcaModel};
use crate::binio::{ByteReader, ByteWriter};
use crate::error::Result;
use crate::ids::DrugId;

pub const FEATURES_MAGIC: &[u8; 12] = b"DRIVENN-FEAT";
pub const FEATURES_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    pub features: DrugFeatureMatrix,
    pub protein_pca: Option<PcaModel>,
    pub mono_pca: Option<PcaModel>,
}

fn write_pca(w: &mut ByteWriter, model: Option<&PcaModel>) {
    let Some(m) = model else {
        w.u8(0);
        return;
    };
    w.u8(1);
    w.f64(m.variance_threshold);
    w.usize(m.n_features());
    w.usize(m.retained);
    w.usize(m.eigenvalues.len());
    w.f64s(m.mean.iter().copied());
    w.f64s(m.eigenvalues.iter().copied());
    for k in 0..m.retained {
        w.f64s(m.components.row(k).iter().copied());
    }
}

fn read_pca(r: &mut ByteReader) -> Result<Option<PcaModel>> {
    match r.u8()? {
        0 => return Ok(None),
        1 => {}
        other => return Err(r.error(format!("bad pca presence flag {other}"))),
    }
    let variance_threshold = r.f64()?;
    let p = r.len()?;
    let retained = r.len()?;
    let n_eigen = r.len()?;
    let mean = DVector::from_vec(r.f64s(p)?);
    let eigenvalues = DVector::from_vec(r.f64s(n_eigen)?);
    let components = DMatrix::from_row_slice(retained, p, &r.f64s(retained * p)?);
    Ok(Some(PcaModel {
        mean,
        components,
        eigenvalues,
        retained,
        variance_threshold,
    }))
}

pub fn write_features(path: impl AsRef<Path>, bundle: &FeatureBundle) -> Result<()> {
    let f = &bundle.features;
    let mut w = ByteWriter::new(FEATURES_MAGIC, FEATURES_VERSION);
    w.usize(f.drug_order().len());
    for d in f.drug_order() {
        w.str(d.as_str());
    }
    let dims = f.block_dims();
    w.usize(dims.embedding);
    w.usize(dims.protein);
    w.usize(dims.mono);
    for row in f.values().row_iter() {
        w.f64s(row.iter().copied());
    }
    write_pca(&mut w, bundle.protein_pca.as_ref());
    write_pca(&mut w, bundle.mono_pca.as_ref());
    w.write_to(path.as_ref())
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureBundle> {
    let (mut r, version) = ByteReader::open(path.as_ref(), FEATURES_MAGIC)?;
    if version != FEATURES_VERSION {
        return Err(r.error(format!("unsupported version {version}")));
    }
    let n = r.len()?;
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let s = r.string()?;
        order.push(DrugId::new(s).ok_or_else(|| r.error("empty drug id"))?);
    }
    let dims = BlockDims {
        embedding: r.len()?,
        protein: r.len()?,
        mono: r.len()?,
    };
    let values = DMatrix::from_row_slice(n, dims.width(), &r.f64s(n * dims.width())?);
    let protein_pca = read_pca(&mut r)?;
    let mono_pca = read_pca(&mut r)?;
    r.finish()?;
    Ok(FeatureBundle {
        features: DrugFeatureMatrix::new(order, dims, values)?,
        protein_pca,
        mono_pca,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::fit_pca;

    #[test]
    fn round_trip() {
        let data = DMatrix::from_row_slice(4, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let pca = fit_pca(&data, 0.9).unwrap();
        let projected = pca.transform(&data).unwrap();
        let order: Vec<DrugId> = ["a", "b", "c", "d"].iter().map(|s| DrugId::new(*s).unwrap()).collect();
        let features = DrugFeatureMatrix::new(
            order,
            BlockDims {
                embedding: 0,
                protein: projected.ncols(),
                mono: 0,
            },
            projected,
        )
        .unwrap();
        let bundle = FeatureBundle {
            features,
            protein_pca: Some(pca.clone()),
            mono_pca: None,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.bin");
        write_features(&path, &bundle).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..12], FEATURES_MAGIC);
        let back = read_features(&path).unwrap();
        assert_eq!(back.features, bundle.features);
        let p = back.protein_pca.unwrap();
        assert_eq!(p.retained, pca.retained);
        assert_eq!(p.components, pca.components.rows(0, pca.retained).clone_owned());
        assert_eq!(p.transform(&data).unwrap(), pca.transform(&data).unwrap());
        assert!(back.mono_pca.is_none());

        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(read_features(&path).is_err());
    }
}
