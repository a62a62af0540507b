use crate::error::{Error, Result};

/// Eigen-decomposition of a symmetric `n × n` row-major matrix by cyclic
/// Jacobi rotations. Returns eigenvalues in descending order and the
/// matching unit eigenvectors.
pub fn symmetric_eigen(matrix: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k * n + i]).collect())
        .collect();
    (values, vectors)
}

/// Flip `v` so that its largest-magnitude coordinate is positive. The
/// lowest index wins magnitude ties.
pub fn orient(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Top-two principal components of a row-major data matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaProjection {
    pub mean: Vec<f64>,
    pub components: [Vec<f64>; 2],
    /// Variance along each component.
    pub variances: [f64; 2],
    /// One `[pc1, pc2]` pair per input row.
    pub coords: Vec<[f64; 2]>,
}

impl PcaProjection {
    /// Map a projected point back into the original space.
    pub fn reconstruct(&self, coord: [f64; 2]) -> Vec<f64> {
        self.mean
            .iter()
            .enumerate()
            .map(|(k, m)| m + coord[0] * self.components[0][k] + coord[1] * self.components[1][k])
            .collect()
    }
}

/// Mean-centre `rows × cols` data and project it onto its two leading
/// principal components.
pub fn pca_projection(data: &[f64], rows: usize, cols: usize) -> Result<PcaProjection> {
    if rows < 3 || cols < 2 || data.len() != rows * cols {
        return Err(Error::DegenerateInput(format!(
            "need at least 3 rows and 2 columns, got {rows}×{cols} ({} values)",
            data.len()
        )));
    }
    let mut mean = vec![0.0; cols];
    for r in 0..rows {
        for (m, x) in mean.iter_mut().zip(&data[r * cols..(r + 1) * cols]) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= rows as f64;
    }
    let centred: Vec<f64> = data.iter().enumerate().map(|(i, x)| x - mean[i % cols]).collect();
    if centred.iter().all(|&x| x == 0.0) {
        return Err(Error::DegenerateInput("all rows are identical".into()));
    }

    let mut cov = vec![0.0; cols * cols];
    for r in 0..rows {
        let row = &centred[r * cols..(r + 1) * cols];
        for i in 0..cols {
            for j in i..cols {
                cov[i * cols + j] += row[i] * row[j];
            }
        }
    }
    let denom = (rows - 1) as f64;
    for i in 0..cols {
        for j in i..cols {
            cov[i * cols + j] /= denom;
            cov[j * cols + i] = cov[i * cols + j];
        }
    }

    let (values, mut vectors) = symmetric_eigen(&cov, cols);
    vectors.truncate(2);
    for v in &mut vectors {
        orient(v);
    }
    let [c1, c2]: [Vec<f64>; 2] = vectors.try_into().expect("two components");
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let coords = (0..rows)
        .map(|r| {
            let row = &centred[r * cols..(r + 1) * cols];
            [dot(row, &c1), dot(row, &c2)]
        })
        .collect();
    Ok(PcaProjection {
        mean,
        components: [c1, c2],
        variances: [values[0].max(0.0), values[1].max(0.0)],
        coords,
    })
}
