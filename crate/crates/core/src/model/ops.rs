//! Row-major dense kernels and their backward passes.

use rand::Rng;

pub(crate) const LN_EPS: f64 = 1e-5;

/// `x[rows×n_in] · w[n_in×n_out] + b`.
pub(crate) fn affine(x: &[f64], rows: usize, w: &[f64], b: &[f64], n_in: usize, n_out: usize) -> Vec<f64> {
    debug_assert_eq!(x.len(), rows * n_in);
    debug_assert_eq!(w.len(), n_in * n_out);
    let mut y = Vec::with_capacity(rows * n_out);
    for _ in 0..rows {
        y.extend_from_slice(b);
    }
    for (xr, yr) in x.chunks_exact(n_in).zip(y.chunks_exact_mut(n_out)) {
        for (&xv, wr) in xr.iter().zip(w.chunks_exact(n_out)) {
            if xv == 0.0 {
                continue;
            }
            for (yv, &wv) in yr.iter_mut().zip(wr) {
                *yv += xv * wv;
            }
        }
    }
    y
}

/// Accumulates `dw += xᵀ·dy`, `db += Σ dy` and returns `dy · wᵀ`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn affine_backward(
    dy: &[f64],
    x: &[f64],
    rows: usize,
    w: &[f64],
    n_in: usize,
    n_out: usize,
    dw: &mut [f64],
    db: &mut [f64],
) -> Vec<f64> {
    debug_assert_eq!(dy.len(), rows * n_out);
    let mut dx = vec![0.0; rows * n_in];
    for ((dyr, xr), dxr) in dy
        .chunks_exact(n_out)
        .zip(x.chunks_exact(n_in))
        .zip(dx.chunks_exact_mut(n_in))
    {
        for (acc, &g) in db.iter_mut().zip(dyr) {
            *acc += g;
        }
        for (((&xv, dwr), wr), dxv) in xr
            .iter()
            .zip(dw.chunks_exact_mut(n_out))
            .zip(w.chunks_exact(n_out))
            .zip(dxr.iter_mut())
        {
            let mut dot = 0.0;
            for ((acc, &g), &wv) in dwr.iter_mut().zip(dyr).zip(wr) {
                *acc += xv * g;
                dot += g * wv;
            }
            *dxv = dot;
        }
    }
    dx
}

pub(crate) struct LayerNormOut {
    pub y: Vec<f64>,
    pub xhat: Vec<f64>,
    pub rstd: Vec<f64>,
}

pub(crate) fn layer_norm(x: &[f64], d: usize, gain: &[f64], bias: &[f64]) -> LayerNormOut {
    let rows = x.len() / d;
    let mut y = vec![0.0; x.len()];
    let mut xhat = vec![0.0; x.len()];
    let mut rstd = vec![0.0; rows];
    for (r, xr) in x.chunks_exact(d).enumerate() {
        let mean = xr.iter().sum::<f64>() / d as f64;
        let var = xr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let rs = 1.0 / (var + LN_EPS).sqrt();
        rstd[r] = rs;
        for i in 0..d {
            let h = (xr[i] - mean) * rs;
            xhat[r * d + i] = h;
            y[r * d + i] = h * gain[i] + bias[i];
        }
    }
    LayerNormOut { y, xhat, rstd }
}

pub(crate) fn layer_norm_backward(
    dy: &[f64],
    xhat: &[f64],
    rstd: &[f64],
    d: usize,
    gain: &[f64],
    dgain: &mut [f64],
    dbias: &mut [f64],
) -> Vec<f64> {
    let mut dx = vec![0.0; dy.len()];
    let mut dxhat = vec![0.0; d];
    for (r, (dyr, xr)) in dy.chunks_exact(d).zip(xhat.chunks_exact(d)).enumerate() {
        let mut mean_dxhat = 0.0;
        let mut mean_dxhat_xhat = 0.0;
        for i in 0..d {
            dgain[i] += dyr[i] * xr[i];
            dbias[i] += dyr[i];
            dxhat[i] = dyr[i] * gain[i];
            mean_dxhat += dxhat[i];
            mean_dxhat_xhat += dxhat[i] * xr[i];
        }
        mean_dxhat /= d as f64;
        mean_dxhat_xhat /= d as f64;
        for i in 0..d {
            dx[r * d + i] = rstd[r] * (dxhat[i] - mean_dxhat - xr[i] * mean_dxhat_xhat);
        }
    }
    dx
}

pub(crate) fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

/// Zero `grad` where the pre-activation was not positive.
pub(crate) fn relu_backward(grad: &mut [f64], pre: &[f64]) {
    for (g, &p) in grad.iter_mut().zip(pre) {
        if p <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Inverted dropout: each element is kept with probability `1 − p` and
/// scaled by `1/(1 − p)`. Returns the per-element multipliers.
pub fn dropout<R: Rng + ?Sized>(x: &mut [f64], p: f64, rng: &mut R) -> Vec<f64> {
    let scale = 1.0 / (1.0 - p);
    let factors: Vec<f64> = x
        .iter()
        .map(|_| if rng.gen::<f64>() < p { 0.0 } else { scale })
        .collect();
    for (v, f) in x.iter_mut().zip(&factors) {
        *v *= f;
    }
    factors
}

/// In-place softmax; entries with `keep[j] == false` get probability zero.
pub(crate) fn masked_softmax(row: &mut [f64], keep: &[bool]) {
    let max = row
        .iter()
        .zip(keep)
        .filter(|(_, &k)| k)
        .map(|(&v, _)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (v, &k) in row.iter_mut().zip(keep) {
        *v = if k { (*v - max).exp() } else { 0.0 };
        sum += *v;
    }
    if sum > 0.0 {
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// `log Σ exp(z)` computed stably.
pub(crate) fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn affine_matches_naive() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let w = [1.0, 0.5, -1.0, 2.0, 0.0, 1.0];
        let b = [0.1, 0.2];
        let y = affine(&x, 2, &w, &b, 3, 2);
        let expected = [-0.9, 7.7, -0.9, 18.2];
        for (a, b) in y.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dropout_preserves_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 20_000;
        let mut x = vec![1.5; n];
        dropout(&mut x, 0.4, &mut rng);
        let mean = x.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.5).abs() / 1.5 < 0.02, "{mean}");
        let zeros = x.iter().filter(|v| **v == 0.0).count() as f64 / n as f64;
        assert!((zeros - 0.4).abs() < 0.02);
    }

    #[test]
    fn masked_softmax_zeroes_masked() {
        let mut row = [1.0, 2.0, 100.0];
        masked_softmax(&mut row, &[true, true, false]);
        assert_eq!(row[2], 0.0);
        assert!((row[0] + row[1] - 1.0).abs() < 1e-15);
    }
}
