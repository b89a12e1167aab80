use serde::{Deserialize, Serialize};

use super::tensor::{zeros_like, Parameters};
use super::ModelError;

/// Optimizer and loop settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Seeds minibatch shuffling.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 64,
            epochs: 10,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 42,
        }
    }
}

impl TrainConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: &str| Err(ModelError::Config(msg.to_string()));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.adam_beta1 > 0.0 && self.adam_beta1 < 1.0) {
            return bad("adam_beta1 must lie in (0, 1)");
        }
        if !(self.adam_beta2 > 0.0 && self.adam_beta2 < 1.0) {
            return bad("adam_beta2 must lie in (0, 1)");
        }
        if !(self.adam_eps > 0.0) {
            return bad("adam_eps must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        Ok(())
    }
}

/// First and second moment estimates, one tensor per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Parameters,
    pub v: Parameters,
}

impl AdamState {
    pub fn new(params: &Parameters) -> Self {
        AdamState {
            m: zeros_like(params),
            v: zeros_like(params),
        }
    }
}

/// One bias-corrected Adam update at step `t` (1-based).
///
/// Inputs are left untouched; the updated parameters and moments are
/// returned.
pub fn adam_step(
    params: &Parameters,
    grads: &Parameters,
    state: &AdamState,
    t: u64,
    cfg: &TrainConfig,
) -> Result<(Parameters, AdamState), ModelError> {
    if t == 0 {
        return Err(ModelError::Config("adam step index starts at 1".into()));
    }
    let mut new_params = params.clone();
    let mut new_state = state.clone();
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let c1 = 1.0 - b1.powi(t as i32);
    let c2 = 1.0 - b2.powi(t as i32);
    if grads.len() != params.len() {
        return Err(ModelError::Shape("gradient set does not match parameters".into()));
    }
    for (name, p) in new_params.iter_mut() {
        let g = grads
            .get(name)
            .ok_or_else(|| ModelError::Shape(format!("missing gradient for {name}")))?;
        let m = new_state
            .m
            .get_mut(name)
            .ok_or_else(|| ModelError::Shape(format!("missing first moment for {name}")))?;
        let v = new_state
            .v
            .get_mut(name)
            .ok_or_else(|| ModelError::Shape(format!("missing second moment for {name}")))?;
        if g.shape() != p.shape() || m.shape() != p.shape() || v.shape() != p.shape() {
            return Err(ModelError::Shape(format!("shape mismatch for {name}")));
        }
        let (pd, gd) = (p.data_mut(), g.data());
        let (md, vd) = (m.data_mut(), v.data_mut());
        for i in 0..pd.len() {
            md[i] = b1 * md[i] + (1.0 - b1) * gd[i];
            vd[i] = b2 * vd[i] + (1.0 - b2) * gd[i] * gd[i];
            let m_hat = md[i] / c1;
            let v_hat = vd[i] / c2;
            pd[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
        }
    }
    Ok((new_params, new_state))
}
