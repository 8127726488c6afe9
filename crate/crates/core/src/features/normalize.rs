use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ZScore {
    pub mean: Vec<f64>,
    /// Population standard deviation; 0 marks a constant column.
    pub stdev: Vec<f64>,
}

/// Column-wise standardization with the population standard deviation.
/// Constant columns map to zero.
pub fn zscore_normalize(matrix: &DMatrix<f64>) -> (DMatrix<f64>, ZScore) {
    let n = matrix.nrows() as f64;
    let mut out = matrix.clone();
    let mut mean = Vec::with_capacity(matrix.ncols());
    let mut stdev = Vec::with_capacity(matrix.ncols());
    for mut col in out.column_iter_mut() {
        let first = col.get(0).copied().unwrap_or(0.0);
        if col.iter().all(|&v| v == first) {
            mean.push(first);
            stdev.push(0.0);
            col.fill(0.0);
            continue;
        }
        let m = col.sum() / n;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        let s = var.sqrt();
        col.apply(|v| *v = (*v - m) / s);
        mean.push(m);
        stdev.push(s);
    }
    (out, ZScore { mean, stdev })
}
