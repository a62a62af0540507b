//! AdamW, RMSprop and SGD with decoupled weight decay, plus the linear
//! learning-rate schedule.
//!
//! Weight decay is applied straight to the parameters (`p -= lr·wd·p`) for
//! all three optimizers, so a given `weight_decay` means the same thing
//! whichever optimizer a trial draws.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::ParamSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OptimizerKind {
    AdamW,
    RmsProp,
    Sgd,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 3] = [OptimizerKind::AdamW, OptimizerKind::RmsProp, OptimizerKind::Sgd];

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adamw" => Some(Self::AdamW),
            "rmsprop" => Some(Self::RmsProp),
            "sgd" => Some(Self::Sgd),
            _ => None,
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::AdamW => "AdamW",
            Self::RmsProp => "RMSprop",
            Self::Sgd => "SGD",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// RMSprop smoothing constant.
    pub alpha: f64,
}

impl OptimizerConfig {
    pub fn new(kind: OptimizerKind, weight_decay: f64) -> Self {
        Self {
            kind,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            alpha: 0.99,
        }
    }
}

/// Optimizer hyperparameters, step counter and moment buffers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub config: OptimizerConfig,
    pub t: u64,
    /// AdamW first moment.
    pub first: Option<ParamSet>,
    /// AdamW second moment, or the RMSprop square average.
    pub second: Option<ParamSet>,
}

impl OptimizerState {
    pub fn new(config: OptimizerConfig, params: &ParamSet) -> Self {
        let (first, second) = match config.kind {
            OptimizerKind::AdamW => (Some(params.zeros_like()), Some(params.zeros_like())),
            OptimizerKind::RmsProp => (None, Some(params.zeros_like())),
            OptimizerKind::Sgd => (None, None),
        };
        Self {
            config,
            t: 0,
            first,
            second,
        }
    }

    /// Apply one update with learning rate `lr`.
    ///
    /// Parameters are left untouched if any gradient is non-finite.
    pub fn step(&mut self, params: &mut ParamSet, grads: &ParamSet, lr: f64) -> Result<()> {
        if !params.same_layout(grads) {
            return Err(Error::Shape("gradients do not match parameter layout".into()));
        }
        if !(lr >= 0.0 && lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {lr} must be finite and >= 0")));
        }
        if let Some(t) = grads.tensors.iter().find(|t| t.data.iter().any(|g| !g.is_finite())) {
            return Err(Error::NonFiniteGradient(t.name.clone()));
        }
        for buf in [&self.first, &self.second].into_iter().flatten() {
            if !buf.same_layout(params) {
                return Err(Error::Shape("optimizer state does not match parameters".into()));
            }
        }

        self.t += 1;
        let c = &self.config;
        let decay = lr * c.weight_decay;
        match c.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.tensors.iter_mut().zip(&grads.tensors) {
                    for (pv, &gv) in p.data.iter_mut().zip(&g.data) {
                        let old = *pv;
                        *pv = old - lr * gv - decay * old;
                    }
                }
            }
            OptimizerKind::RmsProp => {
                let avg = self.second.as_mut().expect("rmsprop square average");
                for ((p, g), a) in params.tensors.iter_mut().zip(&grads.tensors).zip(&mut avg.tensors) {
                    for ((pv, &gv), av) in p.data.iter_mut().zip(&g.data).zip(&mut a.data) {
                        *av = c.alpha * *av + (1.0 - c.alpha) * gv * gv;
                        let old = *pv;
                        *pv = old - lr * gv / (av.sqrt() + c.eps) - decay * old;
                    }
                }
            }
            OptimizerKind::AdamW => {
                let bc1 = 1.0 - c.beta1.powi(self.t as i32);
                let bc2 = 1.0 - c.beta2.powi(self.t as i32);
                let m = self.first.as_mut().expect("adamw first moment");
                let v = self.second.as_mut().expect("adamw second moment");
                for (((p, g), mt), vt) in params
                    .tensors
                    .iter_mut()
                    .zip(&grads.tensors)
                    .zip(&mut m.tensors)
                    .zip(&mut v.tensors)
                {
                    for (((pv, &gv), mv), vv) in p.data.iter_mut().zip(&g.data).zip(&mut mt.data).zip(&mut vt.data) {
                        *mv = c.beta1 * *mv + (1.0 - c.beta1) * gv;
                        *vv = c.beta2 * *vv + (1.0 - c.beta2) * gv * gv;
                        let m_hat = *mv / bc1;
                        let v_hat = *vv / bc2;
                        let old = *pv;
                        *pv = old - lr * (m_hat / (v_hat.sqrt() + c.eps)) - decay * old;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Linear decay from `lr0` at step 0 to zero at `total_steps`, no warmup.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LrSchedule {
    pub lr0: f64,
    pub total_steps: u64,
}

impl LrSchedule {
    pub fn new(lr0: f64, total_steps: u64) -> Result<Self> {
        if !(lr0 > 0.0 && lr0.is_finite()) || total_steps == 0 {
            return Err(Error::Config(format!(
                "schedule needs lr0 > 0 and total_steps > 0, got {lr0} and {total_steps}"
            )));
        }
        Ok(Self { lr0, total_steps })
    }

    pub fn lr_at(&self, step: u64) -> f64 {
        self.lr0 * (1.0 - step as f64 / self.total_steps as f64).max(0.0)
    }
}
