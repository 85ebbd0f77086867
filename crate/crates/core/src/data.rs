use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::datagen::{GeneratorSpec, NoiseSpec};
use crate::error::{invalid_input, Result};
use crate::linalg::Matrix;
use crate::losses::Sample;

/// Where a dataset came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    #[default]
    InMemory,
    Synthetic {
        spec: GeneratorSpec,
    },
    File {
        path: String,
        format: String,
    },
}

/// Range of one feature column before it was mapped onto `[−1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: DataSource,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Vec<ColumnScaling>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corruption: Option<Corruption>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corruption {
    pub noise: NoiseSpec,
    pub seed: u64,
}

/// Immutable `n × p` design matrix with `n` targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSet {
    features: Matrix,
    targets: Vec<f64>,
    meta: Provenance,
}

impl DataSet {
    pub fn new(features: Matrix, targets: Vec<f64>, meta: Provenance) -> Result<Self> {
        if features.rows() == 0 || features.cols() == 0 {
            return Err(invalid_input!(
                "dataset needs n >= 1 and p >= 1, got {}x{}",
                features.rows(),
                features.cols()
            ));
        }
        if targets.len() != features.rows() {
            return Err(invalid_input!(
                "{} targets for {} rows",
                targets.len(),
                features.rows()
            ));
        }
        if let Some(k) = features.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(invalid_input!(
                "non-finite feature at row {}, column {}",
                k / features.cols(),
                k % features.cols()
            ));
        }
        if let Some(i) = targets.iter().position(|v| !v.is_finite()) {
            return Err(invalid_input!("non-finite target at row {i}"));
        }
        Ok(Self { features, targets, meta })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], targets: Vec<f64>) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?, targets, Provenance::default())
    }

    /// Number of samples.
    #[inline]
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Feature dimension `p`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    #[inline]
    pub fn x(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    #[inline]
    pub fn y(&self, i: usize) -> f64 {
        self.targets[i]
    }

    #[inline]
    pub fn sample(&self, i: usize) -> Sample<'_> {
        Sample { x: self.x(i), y: self.targets[i] }
    }

    pub fn samples(&self) -> impl Iterator<Item = Sample<'_>> {
        self.features.iter_rows().zip(&self.targets).map(|(x, &y)| Sample { x, y })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn meta(&self) -> &Provenance {
        &self.meta
    }

    pub fn into_parts(self) -> (Matrix, Vec<f64>, Provenance) {
        (self.features, self.targets, self.meta)
    }

    /// Feature-wise copy with every column multiplied by `c`.
    pub fn scaled_features(&self, c: f64) -> Result<Self> {
        let mut f = self.features.clone();
        f.as_mut_slice().iter_mut().for_each(|v| *v *= c);
        Self::new(f, self.targets.clone(), self.meta.clone())
    }
}

/// Maps every feature column affinely onto `[−1, 1]` (min to −1, max to +1).
/// Constant columns become 0. The original ranges are recorded in the
/// provenance.
pub fn normalize_features(data: &DataSet) -> DataSet {
    let (n, p) = (data.len(), data.dim());
    let mut ranges = Vec::with_capacity(p);
    for j in 0..p {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let v = data.features[(i, j)];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        ranges.push(ColumnScaling { min: lo, max: hi });
    }
    let mut f = data.features.clone();
    for i in 0..n {
        for (j, r) in ranges.iter().enumerate() {
            let v = &mut f[(i, j)];
            *v = if r.max > r.min {
                (2.0 * (*v - r.min) / (r.max - r.min) - 1.0).clamp(-1.0, 1.0)
            } else {
                0.0
            };
        }
    }
    let mut meta = data.meta.clone();
    meta.normalization = Some(ranges);
    DataSet { features: f, targets: data.targets.clone(), meta }
}
