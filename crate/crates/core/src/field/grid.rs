//! Regular grids of samples and their on-disk format.
//!
//! A grid is described by a manifest `<name>.json` and a payload `<name>.f64`
//! holding the values as little-endian 64-bit floats in row-major order (last
//! axis fastest). Negative infinity marks points where the function is `-inf`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Value of `format` in every manifest; a file without it is rejected.
pub const GRID_FORMAT: &str = "subeq-grid";
pub const GRID_VERSION: u32 = 1;

/// Axis-aligned lattice `origin + spacing * index`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub shape: Vec<usize>,
}

impl GridGeometry {
    pub fn new(origin: Vec<f64>, spacing: Vec<f64>, shape: Vec<usize>) -> Result<Self> {
        let d = origin.len();
        if d == 0 {
            return Err(Error::Precondition("grid needs at least one axis".into()));
        }
        if spacing.len() != d {
            return Err(Error::dim("grid spacing", d, spacing.len()));
        }
        if shape.len() != d {
            return Err(Error::dim("grid shape", d, shape.len()));
        }
        if spacing.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return Err(Error::Precondition("grid spacing must be positive and finite".into()));
        }
        if origin.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("grid origin"));
        }
        if shape.iter().any(|&s| s == 0) {
            return Err(Error::Precondition("grid axes need at least one sample".into()));
        }
        Ok(Self { origin, spacing, shape })
    }

    /// Uniform grid with `counts[k]` samples covering `[lo[k], hi[k]]` inclusively.
    pub fn spanning(lo: &[f64], hi: &[f64], counts: &[usize]) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != counts.len() {
            return Err(Error::dim("grid bounds", lo.len(), hi.len().min(counts.len())));
        }
        let mut spacing = Vec::with_capacity(lo.len());
        for k in 0..lo.len() {
            if counts[k] < 2 || !(hi[k] > lo[k]) {
                return Err(Error::Precondition(format!(
                    "axis {k} needs hi > lo and at least two samples"
                )));
            }
            spacing.push((hi[k] - lo[k]) / (counts[k] - 1) as f64);
        }
        Self::new(lo.to_vec(), spacing, counts.to_vec())
    }

    pub fn dims(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major strides, last axis fastest.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims()];
        for k in (0..self.dims().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.shape[k + 1];
        }
        s
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims()];
        for k in (0..self.dims()).rev() {
            idx[k] = flat % self.shape[k];
            flat /= self.shape[k];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &s)| acc * s + i)
    }

    /// Flat index of `flat + offset` (in cells), or `None` off the grid.
    pub fn offset(&self, flat: usize, offset: &[isize]) -> Option<usize> {
        let idx = self.multi_index(flat);
        let mut moved = Vec::with_capacity(idx.len());
        for k in 0..idx.len() {
            let j = idx[k] as isize + offset[k];
            if j < 0 || j >= self.shape[k] as isize {
                return None;
            }
            moved.push(j as usize);
        }
        Some(self.flat_index(&moved))
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.origin[k] + self.spacing[k] * i as f64)
            .collect()
    }

    /// Distance from the sample to the nearest face of the bounding box.
    pub fn distance_to_boundary(&self, flat: usize) -> f64 {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.spacing[k] * i.min(self.shape[k] - 1 - i) as f64)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Samples of `f: X -> R u {-inf}` on a grid, with a domain mask.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T: Scalar> {
    pub geometry: GridGeometry,
    pub values: Vec<T>,
    /// `true` where the sample belongs to the domain.
    pub mask: Vec<bool>,
}

impl<T: Scalar> GridFunction<T> {
    pub fn new(geometry: GridGeometry, values: Vec<T>) -> Result<Self> {
        let mask = vec![true; values.len()];
        Self::with_mask(geometry, values, mask)
    }

    pub fn with_mask(geometry: GridGeometry, values: Vec<T>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::dim("grid values", geometry.len(), values.len()));
        }
        if mask.len() != geometry.len() {
            return Err(Error::dim("grid mask", geometry.len(), mask.len()));
        }
        if values.iter().any(|v| v.is_nan() || *v == T::infinity()) {
            return Err(Error::NonFinite("grid values"));
        }
        Ok(Self {
            geometry,
            values,
            mask,
        })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(geometry: GridGeometry, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..geometry.len())
            .map(|i| T::of(f(&geometry.point(i))))
            .collect();
        Self::new(geometry, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// In the domain and not `-inf`.
    pub fn is_finite_at(&self, flat: usize) -> bool {
        self.mask[flat] && self.values[flat].is_finite()
    }

    pub fn active_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Largest `|f|` over finite domain samples.
    pub fn sup_abs(&self) -> Result<T> {
        let mut seen = false;
        let mut m = T::zero();
        for i in 0..self.len() {
            if self.is_finite_at(i) {
                seen = true;
                m = m.max(self.values[i].abs());
            }
        }
        if seen {
            Ok(m)
        } else {
            Err(Error::AllMasked)
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            geometry: self.geometry.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            mask: self.mask.clone(),
        }
    }

    /// Pointwise maximum of two grids on the same geometry; the mask is the
    /// intersection of the masks.
    pub fn max_with(&self, other: &Self) -> Result<Self> {
        if self.geometry != other.geometry {
            return Err(Error::Precondition("grids must share a geometry".into()));
        }
        Ok(Self {
            geometry: self.geometry.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a.max(*b)).collect(),
            mask: self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect(),
        })
    }

    /// Writes `<stem>.json` and `<stem>.f64`. Returns the two paths.
    pub fn save(&self, stem: &Path) -> Result<(PathBuf, PathBuf)> {
        let manifest_path = stem.with_extension("json");
        let data_path = stem.with_extension("f64");
        let all = self.mask.iter().all(|m| *m);
        let manifest = GridManifest {
            format: GRID_FORMAT.into(),
            version: GRID_VERSION,
            dims: self.geometry.dims(),
            origin: self.geometry.origin.clone(),
            spacing: self.geometry.spacing.clone(),
            shape: self.geometry.shape.clone(),
            mask_encoding: if all { MaskEncoding::None } else { MaskEncoding::Inline },
            mask: (!all).then(|| self.mask.iter().map(|&m| u8::from(m)).collect()),
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        fs::write(&manifest_path, text).map_err(|source| Error::Io {
            path: manifest_path.clone(),
            source,
        })?;
        let mut bytes = Vec::with_capacity(8 * self.len());
        for v in &self.values {
            bytes.extend_from_slice(&v.as_f64().to_le_bytes());
        }
        fs::write(&data_path, bytes).map_err(|source| Error::Io {
            path: data_path.clone(),
            source,
        })?;
        Ok((manifest_path, data_path))
    }

    /// Reads a grid given the manifest path or the common stem.
    pub fn load(path: &Path) -> Result<Self> {
        let manifest_path = path.with_extension("json");
        let data_path = path.with_extension("f64");
        let bad = |p: &Path, reason: String| Error::GridFormat {
            path: p.to_path_buf(),
            reason,
        };
        let text = fs::read_to_string(&manifest_path).map_err(|source| Error::Io {
            path: manifest_path.clone(),
            source,
        })?;
        let manifest: GridManifest =
            serde_json::from_str(&text).map_err(|e| bad(&manifest_path, e.to_string()))?;
        if manifest.format != GRID_FORMAT {
            return Err(bad(&manifest_path, format!("format tag `{}`", manifest.format)));
        }
        if manifest.version != GRID_VERSION {
            return Err(bad(&manifest_path, format!("unsupported version {}", manifest.version)));
        }
        if manifest.dims != manifest.shape.len() {
            return Err(bad(&manifest_path, "dims disagrees with shape".into()));
        }
        let geometry = GridGeometry::new(manifest.origin, manifest.spacing, manifest.shape)
            .map_err(|e| bad(&manifest_path, e.to_string()))?;
        let bytes = fs::read(&data_path).map_err(|source| Error::Io {
            path: data_path.clone(),
            source,
        })?;
        if bytes.len() != 8 * geometry.len() {
            return Err(bad(
                &data_path,
                format!("expected {} bytes, found {}", 8 * geometry.len(), bytes.len()),
            ));
        }
        let mut values = Vec::with_capacity(geometry.len());
        for chunk in bytes.chunks_exact(8) {
            let v = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
            if v.is_nan() || v == f64::INFINITY {
                return Err(bad(&data_path, "NaN or +inf sample".into()));
            }
            values.push(T::of(v));
        }
        let mask = match (manifest.mask_encoding, manifest.mask) {
            (MaskEncoding::None, _) => vec![true; geometry.len()],
            (MaskEncoding::Inline, Some(m)) if m.len() == geometry.len() => {
                m.into_iter().map(|b| b != 0).collect()
            }
            (MaskEncoding::Inline, _) => {
                return Err(bad(&manifest_path, "inline mask missing or of wrong length".into()))
            }
        };
        GridFunction::with_mask(geometry, values, mask)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskEncoding {
    /// Every sample is in the domain.
    None,
    /// `mask` holds one 0/1 byte per sample.
    Inline,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct GridManifest {
    format: String,
    version: u32,
    dims: usize,
    origin: Vec<f64>,
    spacing: Vec<f64>,
    shape: Vec<usize>,
    mask_encoding: MaskEncoding,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mask: Option<Vec<u8>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let g = GridGeometry::new(vec![0.0, 0.0, 0.0], vec![1.0, 0.5, 0.25], vec![3, 4, 5]).unwrap();
        assert_eq!(g.strides(), vec![20, 5, 1]);
        for i in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(i)), i);
        }
        assert_eq!(g.point(g.flat_index(&[2, 1, 3])), vec![2.0, 0.5, 0.75]);
        assert_eq!(g.offset(0, &[-1, 0, 0]), None);
        assert_eq!(g.offset(0, &[1, 1, 1]), Some(26));
    }

    #[test]
    fn spanning_hits_both_ends() {
        let g = GridGeometry::spanning(&[-1.0], &[1.0], &[201]).unwrap();
        assert_eq!(g.point(0), vec![-1.0]);
        assert!((g.point(200)[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(GridGeometry::new(vec![0.0], vec![0.0], vec![3]).is_err());
        assert!(GridGeometry::new(vec![0.0], vec![1.0], vec![0]).is_err());
        let g = GridGeometry::new(vec![0.0], vec![1.0], vec![2]).unwrap();
        assert!(matches!(
            GridFunction::<f64>::new(g, vec![0.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn file_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridGeometry::new(vec![-1.0, 0.5], vec![0.1, 0.3], vec![4, 3]).unwrap();
        let mut f = GridFunction::<f64>::from_fn(g, |x| (x[0] * 7.3).sin() + x[1] / 3.0).unwrap();
        f.values[3] = f64::NEG_INFINITY;
        f.mask[5] = false;
        let stem = dir.path().join("field");
        f.save(&stem).unwrap();
        let back = GridFunction::<f64>::load(&stem.with_extension("json")).unwrap();
        assert_eq!(back.geometry, f.geometry);
        assert_eq!(back.mask, f.mask);
        for (a, b) in back.values.iter().zip(&f.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn truncated_payload_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridGeometry::new(vec![0.0], vec![1.0], vec![3]).unwrap();
        let f = GridFunction::<f64>::new(g, vec![1.0, 2.0, 3.0]).unwrap();
        let stem = dir.path().join("g");
        let (_, data) = f.save(&stem).unwrap();
        std::fs::write(&data, [0u8; 16]).unwrap();
        match GridFunction::<f64>::load(&stem) {
            Err(Error::GridFormat { path, .. }) => assert_eq!(path, data),
            other => panic!("unexpected {other:?}"),
        }
    }
}
