//! Principal component analysis with variance-threshold selection.
//!
//! The population covariance `XᵀX / n` of the column-centered data is
//! eigendecomposed directly when there are no more columns than rows. Wide
//! blocks (thousands of binary indicators over a few hundred drugs) go through
//! the `n × n` Gram matrix `XXᵀ / n` instead: it shares the non-zero spectrum, and
//! each axis is recovered as `Xᵀu / √(nλ)`, then re-orthonormalized.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues at or below this fraction of the largest are treated as zero.
const RANK_TOLERANCE: f64 = 1e-12;
/// Slack when comparing cumulative variance fractions against the threshold.
const THRESHOLD_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    /// Principal axes as rows, orthonormal, ordered by decreasing eigenvalue.
    pub components: DMatrix<f64>,
    /// Covariance eigenvalues, non-increasing and non-negative.
    pub eigenvalues: DVector<f64>,
    pub retained: usize,
    pub variance_threshold: f64,
}

impl PcaModel {
    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        let total = self.eigenvalues.sum();
        self.eigenvalues.iter().map(|l| l / total).collect()
    }

    /// Projects `(rows − mean)` onto the first `retained` axes.
    pub fn transform(&self, rows: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.project(rows, self.retained)
    }

    pub fn project(&self, rows: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
        if rows.ncols() != self.n_features() {
            return Err(Error::Dimension {
                expected: self.n_features(),
                actual: rows.ncols(),
                context: "pca transform input width",
            });
        }
        let k = k.min(self.components.nrows());
        let mut centered = rows.clone();
        for mut row in centered.row_iter_mut() {
            row -= self.mean.transpose();
        }
        let axes = self.components.rows(0, k);
        Ok(centered * axes.transpose())
    }

    /// Maps projected coordinates (one column per leading axis) back to the
    /// input space.
    pub fn inverse_transform(&self, projected: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let k = projected.ncols();
        if k > self.components.nrows() {
            return Err(Error::Dimension {
                expected: self.components.nrows(),
                actual: k,
                context: "pca inverse input width",
            });
        }
        let mut out = projected * self.components.rows(0, k);
        for mut row in out.row_iter_mut() {
            row += self.mean.transpose();
        }
        Ok(out)
    }
}

/// Smallest `k ≥ 1` whose leading eigenvalues reach `threshold` of the total.
pub(crate) fn retained_for_threshold(eigenvalues: &[f64], threshold: f64) -> usize {
    let total: f64 = eigenvalues.iter().sum();
    let mut cumulative = 0.0;
    for (k, l) in eigenvalues.iter().enumerate() {
        cumulative += l;
        if cumulative / total >= threshold - THRESHOLD_SLACK {
            return k + 1;
        }
    }
    eigenvalues.len().max(1)
}

pub fn fit_pca(data: &DMatrix<f64>, variance_threshold: f64) -> Result<PcaModel> {
    if !(variance_threshold > 0.0 && variance_threshold <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "variance threshold {variance_threshold} outside (0, 1]"
        )));
    }
    let (n, p) = data.shape();
    if n < 2 {
        return Err(Error::TooSmall { actual: n, minimum: 2 });
    }
    if p == 0 {
        return Err(Error::Degenerate("matrix has no columns".into()));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("matrix contains non-finite values".into()));
    }

    let mut mean = DVector::zeros(p);
    let mut centered = data.clone();
    let mut any_variation = false;
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        let first = col[0];
        if col.iter().all(|&v| v == first) {
            mean[j] = first;
            col.fill(0.0);
            continue;
        }
        any_variation = true;
        let m = col.sum() / n as f64;
        mean[j] = m;
        col.add_scalar_mut(-m);
    }
    if !any_variation {
        return Err(Error::Degenerate(
            "every column is constant; total variance is zero".into(),
        ));
    }

    let (eigenvalues, components) = if p <= n {
        covariance_route(&centered)
    } else {
        gram_route(&centered)
    };
    let retained = retained_for_threshold(eigenvalues.as_slice(), variance_threshold).min(components.nrows());
    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
        retained,
        variance_threshold,
    })
}

/// Eigenpairs sorted by decreasing eigenvalue (stable for ties), negatives clamped.
fn sorted_eigen(matrix: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(matrix);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let vectors = eig.eigenvectors.select_columns(&order);
    (values, vectors)
}

fn covariance_route(centered: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = centered.nrows() as f64;
    let cov = centered.tr_mul(centered) / n;
    let (values, vectors) = sorted_eigen(symmetrize(cov));
    let mut components = vectors.transpose();
    fix_signs(&mut components);
    (DVector::from_vec(values), components)
}

fn gram_route(centered: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = centered.nrows();
    let gram = centered * centered.transpose() / n as f64;
    let (values, vectors) = sorted_eigen(symmetrize(gram));
    let largest = values.first().copied().unwrap_or(0.0);
    let rank = values.iter().take_while(|&&l| l > largest * RANK_TOLERANCE).count();

    let mut components = DMatrix::zeros(rank, centered.ncols());
    for (k, &value) in values.iter().enumerate().take(rank) {
        let axis = centered.tr_mul(&vectors.column(k)) / (n as f64 * value).sqrt();
        components.set_row(k, &axis.transpose());
    }
    orthonormalize_rows(&mut components);
    fix_signs(&mut components);
    let mut eigenvalues = DVector::from_vec(values);
    for l in eigenvalues.iter_mut().skip(rank) {
        *l = 0.0;
    }
    (eigenvalues, components)
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Modified Gram-Schmidt over rows.
fn orthonormalize_rows(m: &mut DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in 0..i {
            let dot = m.row(i).dot(&m.row(j));
            let updated = m.row(i) - m.row(j) * dot;
            m.set_row(i, &updated);
        }
        let norm = m.row(i).norm();
        if norm > 0.0 {
            m.row_mut(i).unscale_mut(norm);
        }
    }
}

/// Makes the largest-magnitude coordinate of every axis positive (first index
/// wins ties).
fn fix_signs(components: &mut DMatrix<f64>) {
    for mut row in components.row_iter_mut() {
        let mut best = 0usize;
        for (j, v) in row.iter().enumerate() {
            if v.abs() > row[best].abs() {
                best = j;
            }
        }
        if row[best] < 0.0 {
            row.neg_mut();
        }
    }
}
