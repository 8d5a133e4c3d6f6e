//! Feature interaction: correlation matrix, strongest correlate, and the
//! data behind dependence plots.

use serde::{Deserialize, Serialize};

use crate::data::{feature_names, Sample, N_FEATURES};
use crate::error::{Error, Result};
use crate::numerics::{pearson, Mat};
use crate::shap::ShapExplanation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrMatrix {
    pub names: Vec<String>,
    /// Row-major `d × d` coefficients.
    pub values: Vec<Vec<f64>>,
    /// Set where either input column is constant; such cells hold 0.
    pub constant: Vec<Vec<bool>>,
}

impl CorrMatrix {
    /// Pairwise Pearson coefficients of the columns of `rows`.
    pub fn from_rows(rows: &Mat, names: &[&str]) -> Result<Self> {
        if rows.rows() < 2 {
            return Err(Error::invalid("correlation needs at least 2 samples"));
        }
        if names.len() != rows.cols() {
            return Err(Error::LengthMismatch {
                expected: rows.cols(),
                actual: names.len(),
            });
        }
        let d = rows.cols();
        let cols: Vec<Vec<f64>> = (0..d).map(|j| rows.column(j)).collect();
        let mut values = vec![vec![0.0; d]; d];
        let mut constant = vec![vec![false; d]; d];
        for i in 0..d {
            for j in i..d {
                let c = pearson(&cols[i], &cols[j])?;
                let r = if i == j && !c.constant_input { 1.0 } else { c.r };
                values[i][j] = r;
                values[j][i] = r;
                constant[i][j] = c.constant_input;
                constant[j][i] = c.constant_input;
            }
        }
        Ok(CorrMatrix {
            names: names.iter().map(|s| s.to_string()).collect(),
            values,
            constant,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn index_of(&self, feature: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == feature)
            .ok_or_else(|| Error::UnknownFeature(feature.to_string()))
    }

    /// CSV with feature names as header row and first column.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (name, row) in self.names.iter().zip(&self.values) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::invalid(format!("csv buffer: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Correlations of the raw feature columns of `samples`, catalog order.
pub fn correlation_matrix(samples: &[Sample]) -> Result<CorrMatrix> {
    let mut rows = Mat::zeros(samples.len(), N_FEATURES);
    for (r, s) in samples.iter().enumerate() {
        rows.row_mut(r).copy_from_slice(&s.features);
    }
    CorrMatrix::from_rows(&rows, &feature_names())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlate {
    pub index: usize,
    pub name: String,
    pub r: f64,
    /// No off-diagonal entry in the row is positive.
    pub no_positive: bool,
}

/// Off-diagonal argmax of the feature's row; ties go to the earlier feature.
pub fn strongest_correlate(matrix: &CorrMatrix, feature: &str) -> Result<Correlate> {
    let i = matrix.index_of(feature)?;
    let mut best: Option<usize> = None;
    for j in (0..matrix.len()).filter(|&j| j != i) {
        if best.is_none_or(|b| matrix.get(i, j) > matrix.get(i, b)) {
            best = Some(j);
        }
    }
    let j = best.ok_or_else(|| Error::invalid("correlation matrix has a single feature"))?;
    Ok(Correlate {
        index: j,
        name: matrix.names[j].clone(),
        r: matrix.get(i, j),
        no_positive: matrix.get(i, j) <= 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependencePoint {
    /// Normalized feature value at the final step.
    pub x: f64,
    pub shap: f64,
    /// Normalized correlate value at the final step.
    pub color: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceData {
    pub feature: String,
    pub correlate: String,
    pub correlate_r: f64,
    pub no_positive: bool,
    pub points: Vec<DependencePoint>,
}

/// One point per explained window. `windows` are normalized and aligned
/// with `explanations`.
pub fn dependence_data(
    feature: &str,
    explanations: &[ShapExplanation],
    windows: &[&Mat],
    matrix: &CorrMatrix,
) -> Result<DependenceData> {
    if explanations.len() != windows.len() {
        return Err(Error::LengthMismatch {
            expected: explanations.len(),
            actual: windows.len(),
        });
    }
    let f = matrix.index_of(feature)?;
    let c = strongest_correlate(matrix, feature)?;
    let points = explanations
        .iter()
        .zip(windows)
        .map(|(e, w)| {
            if e.phi.len() != matrix.len() || w.cols() != matrix.len() || w.rows() == 0 {
                return Err(Error::LengthMismatch {
                    expected: matrix.len(),
                    actual: e.phi.len().min(w.cols()),
                });
            }
            let last = w.row(w.rows() - 1);
            Ok(DependencePoint {
                x: last[f],
                shap: e.phi[f],
                color: last[c.index],
            })
        })
        .collect::<Result<_>>()?;
    Ok(DependenceData {
        feature: feature.to_string(),
        correlate: c.name,
        correlate_r: c.r,
        no_positive: c.no_positive,
        points,
    })
}
