//! Pre-norm transformer encoder and classification heads with hand-written
//! backpropagation.
//!
//! Each batch row is processed on its full padded length; padded positions
//! are excluded as attention keys, so real positions never see them and the
//! padded rows receive no gradient from the loss.

use rand::Rng;

use super::config::HeadKind;
use super::ops::{
    affine, affine_backward, layer_norm, layer_norm_backward, masked_softmax, relu, relu_backward,
};
use super::ModelBundle;
use crate::tensor::ParamSet;

pub(crate) const EMBED: usize = 0;
pub(crate) const POS: usize = 1;
pub(crate) const PER_LAYER: usize = 16;

pub(crate) const LN1_G: usize = 0;
pub(crate) const LN1_B: usize = 1;
pub(crate) const WQ: usize = 2;
pub(crate) const BQ: usize = 3;
pub(crate) const WK: usize = 4;
pub(crate) const BK: usize = 5;
pub(crate) const WV: usize = 6;
pub(crate) const BV: usize = 7;
pub(crate) const WO: usize = 8;
pub(crate) const BO: usize = 9;
pub(crate) const LN2_G: usize = 10;
pub(crate) const LN2_B: usize = 11;
pub(crate) const W1: usize = 12;
pub(crate) const B1: usize = 13;
pub(crate) const W2: usize = 14;
pub(crate) const B2: usize = 15;

pub(crate) fn layer_base(layer: usize) -> usize {
    2 + layer * PER_LAYER
}

pub(crate) fn final_ln(n_layers: usize) -> usize {
    2 + n_layers * PER_LAYER
}

pub(crate) fn head_base(n_layers: usize) -> usize {
    final_ln(n_layers) + 2
}

pub(crate) struct LayerCache {
    h1: Vec<f64>,
    ln1_xhat: Vec<f64>,
    ln1_rstd: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// `[heads × L × L]` attention probabilities.
    pub(crate) probs: Vec<f64>,
    ctx: Vec<f64>,
    h2: Vec<f64>,
    ln2_xhat: Vec<f64>,
    ln2_rstd: Vec<f64>,
    ff_pre: Vec<f64>,
    ff_act: Vec<f64>,
}

pub(crate) enum HeadCache {
    Linear,
    Mlp {
        z1_pre: Vec<f64>,
        /// Dropout multipliers, absent in eval mode.
        drop: Option<Vec<f64>>,
        a1: Vec<f64>,
        z2_pre: Vec<f64>,
        a2: Vec<f64>,
    },
}

pub(crate) struct RowCache {
    tokens: Vec<usize>,
    keep: Vec<bool>,
    pub(crate) layers: Vec<LayerCache>,
    lnf_xhat: Vec<f64>,
    lnf_rstd: Vec<f64>,
    /// Final encoder output, `[L × d]`.
    pub(crate) rep: Vec<f64>,
    head: HeadCache,
}

/// Forward one padded row. Returns `[L × n_tags]` logits and the cache.
pub(crate) fn forward_row<R: Rng + ?Sized>(
    m: &ModelBundle,
    tokens: &[usize],
    keep: &[bool],
    train: bool,
    rng: &mut R,
) -> (Vec<f64>, RowCache) {
    let p = &m.params;
    let d = m.encoder.d_model;
    let len = tokens.len();
    let heads = m.encoder.n_heads;
    let hd = m.encoder.head_dim();
    let scale = 1.0 / (hd as f64).sqrt();

    let mut x = vec![0.0; len * d];
    for (i, &tok) in tokens.iter().enumerate() {
        let e = &p[EMBED].data[tok * d..(tok + 1) * d];
        let pe = &p[POS].data[i * d..(i + 1) * d];
        for c in 0..d {
            x[i * d + c] = e[c] + pe[c];
        }
    }

    let mut layers = Vec::with_capacity(m.encoder.n_layers);
    for l in 0..m.encoder.n_layers {
        let base = layer_base(l);
        let t = |s: usize| &p[base + s].data[..];

        let ln1 = layer_norm(&x, d, t(LN1_G), t(LN1_B));
        let q = affine(&ln1.y, len, t(WQ), t(BQ), d, d);
        let k = affine(&ln1.y, len, t(WK), t(BK), d, d);
        let v = affine(&ln1.y, len, t(WV), t(BV), d, d);

        let mut probs = vec![0.0; heads * len * len];
        let mut ctx = vec![0.0; len * d];
        for h in 0..heads {
            let off = h * hd;
            for i in 0..len {
                let row = &mut probs[(h * len + i) * len..(h * len + i + 1) * len];
                let qi = &q[i * d + off..i * d + off + hd];
                for j in 0..len {
                    if keep[j] {
                        let kj = &k[j * d + off..j * d + off + hd];
                        row[j] = qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() * scale;
                    }
                }
                masked_softmax(row, keep);
                let ci = &mut ctx[i * d + off..i * d + off + hd];
                for j in 0..len {
                    let w = row[j];
                    if w == 0.0 {
                        continue;
                    }
                    for (c, &vv) in ci.iter_mut().zip(&v[j * d + off..j * d + off + hd]) {
                        *c += w * vv;
                    }
                }
            }
        }
        let attn_out = affine(&ctx, len, t(WO), t(BO), d, d);
        for (xv, a) in x.iter_mut().zip(&attn_out) {
            *xv += a;
        }

        let ln2 = layer_norm(&x, d, t(LN2_G), t(LN2_B));
        let ff_pre = affine(&ln2.y, len, t(W1), t(B1), d, m.encoder.d_ff);
        let ff_act = relu(&ff_pre);
        let ff_out = affine(&ff_act, len, t(W2), t(B2), m.encoder.d_ff, d);
        for (xv, f) in x.iter_mut().zip(&ff_out) {
            *xv += f;
        }

        layers.push(LayerCache {
            h1: ln1.y,
            ln1_xhat: ln1.xhat,
            ln1_rstd: ln1.rstd,
            q,
            k,
            v,
            probs,
            ctx,
            h2: ln2.y,
            ln2_xhat: ln2.xhat,
            ln2_rstd: ln2.rstd,
            ff_pre,
            ff_act,
        });
    }

    let fl = final_ln(m.encoder.n_layers);
    let lnf = layer_norm(&x, d, &p[fl].data, &p[fl + 1].data);
    let rep = lnf.y;

    let hb = head_base(m.encoder.n_layers);
    let n_tags = m.n_tags;
    let (logits, head) = match m.head.kind {
        HeadKind::Linear => (
            affine(&rep, len, &p[hb].data, &p[hb + 1].data, d, n_tags),
            HeadCache::Linear,
        ),
        HeadKind::Mlp => {
            let hdim = m.head.hidden(d);
            let z1_pre = affine(&rep, len, &p[hb].data, &p[hb + 1].data, d, hdim);
            let mut a1 = relu(&z1_pre);
            let drop = (train && m.head.dropout_p > 0.0)
                .then(|| super::ops::dropout(&mut a1, m.head.dropout_p, rng));
            let z2_pre = affine(&a1, len, &p[hb + 2].data, &p[hb + 3].data, hdim, hdim);
            let a2 = relu(&z2_pre);
            let logits = affine(&a2, len, &p[hb + 4].data, &p[hb + 5].data, hdim, n_tags);
            (
                logits,
                HeadCache::Mlp {
                    z1_pre,
                    drop,
                    a1,
                    z2_pre,
                    a2,
                },
            )
        }
    };

    let cache = RowCache {
        tokens: tokens.to_vec(),
        keep: keep.to_vec(),
        layers,
        lnf_xhat: lnf.xhat,
        lnf_rstd: lnf.rstd,
        rep,
        head,
    };
    (logits, cache)
}

/// Backpropagate `dlogits` (`[L × n_tags]`) through one row, accumulating
/// into `grads`.
pub(crate) fn backward_row(m: &ModelBundle, cache: &RowCache, dlogits: &[f64], grads: &mut ParamSet) {
    let p = &m.params;
    let d = m.encoder.d_model;
    let len = cache.tokens.len();
    let heads = m.encoder.n_heads;
    let hd = m.encoder.head_dim();
    let scale = 1.0 / (hd as f64).sqrt();
    let n_tags = m.n_tags;
    let hb = head_base(m.encoder.n_layers);

    let drep = match &cache.head {
        HeadCache::Linear => {
            let (gw, gb) = pair_mut(grads, hb);
            affine_backward(dlogits, &cache.rep, len, &p[hb].data, d, n_tags, gw, gb)
        }
        HeadCache::Mlp {
            z1_pre,
            drop,
            a1,
            z2_pre,
            a2,
        } => {
            let hdim = m.head.hidden(d);
            let (gw, gb) = pair_mut(grads, hb + 4);
            let mut da2 = affine_backward(dlogits, a2, len, &p[hb + 4].data, hdim, n_tags, gw, gb);
            relu_backward(&mut da2, z2_pre);
            let (gw, gb) = pair_mut(grads, hb + 2);
            let mut da1 = affine_backward(&da2, a1, len, &p[hb + 2].data, hdim, hdim, gw, gb);
            if let Some(factors) = drop {
                for (g, f) in da1.iter_mut().zip(factors) {
                    *g *= f;
                }
            }
            relu_backward(&mut da1, z1_pre);
            let (gw, gb) = pair_mut(grads, hb);
            affine_backward(&da1, &cache.rep, len, &p[hb].data, d, hdim, gw, gb)
        }
    };

    let fl = final_ln(m.encoder.n_layers);
    let (gg, gbias) = pair_mut(grads, fl);
    let mut dx = layer_norm_backward(&drep, &cache.lnf_xhat, &cache.lnf_rstd, d, &p[fl].data, gg, gbias);

    for l in (0..m.encoder.n_layers).rev() {
        let lc = &cache.layers[l];
        let base = layer_base(l);
        let t = |s: usize| &p[base + s].data[..];

        // Feed-forward sub-block: x += W2·relu(W1·LN2(x)).
        let (gw, gb) = pair_mut(grads, base + W2);
        let mut dff = affine_backward(&dx, &lc.ff_act, len, t(W2), m.encoder.d_ff, d, gw, gb);
        relu_backward(&mut dff, &lc.ff_pre);
        let (gw, gb) = pair_mut(grads, base + W1);
        let dh2 = affine_backward(&dff, &lc.h2, len, t(W1), d, m.encoder.d_ff, gw, gb);
        let (gg, gbias) = pair_mut(grads, base + LN2_G);
        let dln2 = layer_norm_backward(&dh2, &lc.ln2_xhat, &lc.ln2_rstd, d, t(LN2_G), gg, gbias);
        for (a, b) in dx.iter_mut().zip(&dln2) {
            *a += b;
        }

        // Attention sub-block: x += Wo·attn(LN1(x)).
        let (gw, gb) = pair_mut(grads, base + WO);
        let dctx = affine_backward(&dx, &lc.ctx, len, t(WO), d, d, gw, gb);
        let mut dq = vec![0.0; len * d];
        let mut dk = vec![0.0; len * d];
        let mut dv = vec![0.0; len * d];
        let mut dprob = vec![0.0; len];
        for h in 0..heads {
            let off = h * hd;
            for i in 0..len {
                let probs = &lc.probs[(h * len + i) * len..(h * len + i + 1) * len];
                let dci = &dctx[i * d + off..i * d + off + hd];
                let mut weighted = 0.0;
                for j in 0..len {
                    if !cache.keep[j] {
                        dprob[j] = 0.0;
                        continue;
                    }
                    let vj = &lc.v[j * d + off..j * d + off + hd];
                    dprob[j] = dci.iter().zip(vj).map(|(a, b)| a * b).sum();
                    weighted += dprob[j] * probs[j];
                    let pj = probs[j];
                    for (g, &c) in dv[j * d + off..j * d + off + hd].iter_mut().zip(dci) {
                        *g += pj * c;
                    }
                }
                for j in 0..len {
                    let ds = probs[j] * (dprob[j] - weighted) * scale;
                    if ds == 0.0 {
                        continue;
                    }
                    for c in 0..hd {
                        dq[i * d + off + c] += ds * lc.k[j * d + off + c];
                        dk[j * d + off + c] += ds * lc.q[i * d + off + c];
                    }
                }
            }
        }
        let mut dh1 = vec![0.0; len * d];
        for (w, b, dproj) in [(WQ, BQ, &dq), (WK, BK, &dk), (WV, BV, &dv)] {
            let (gw, gb) = pair_mut(grads, base + w);
            debug_assert_eq!(w + 1, b);
            let part = affine_backward(dproj, &lc.h1, len, t(w), d, d, gw, gb);
            for (a, b) in dh1.iter_mut().zip(&part) {
                *a += b;
            }
        }
        let (gg, gbias) = pair_mut(grads, base + LN1_G);
        let dln1 = layer_norm_backward(&dh1, &lc.ln1_xhat, &lc.ln1_rstd, d, t(LN1_G), gg, gbias);
        for (a, b) in dx.iter_mut().zip(&dln1) {
            *a += b;
        }
    }

    for (i, &tok) in cache.tokens.iter().enumerate() {
        let row = &dx[i * d..(i + 1) * d];
        for (g, v) in grads[EMBED].data[tok * d..(tok + 1) * d].iter_mut().zip(row) {
            *g += v;
        }
        for (g, v) in grads[POS].data[i * d..(i + 1) * d].iter_mut().zip(row) {
            *g += v;
        }
    }
}

/// Mutable views of tensors `i` and `i + 1` (a weight and its bias).
fn pair_mut(grads: &mut ParamSet, i: usize) -> (&mut [f64], &mut [f64]) {
    let (a, b) = grads.tensors.split_at_mut(i + 1);
    (&mut a[i].data, &mut b[0].data)
}
