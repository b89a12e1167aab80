//! Central finite-difference verification of the analytic gradients.

use super::arch::Model;
use super::tensor::Parameters;
use super::ModelError;
use crate::representation::EncodedSequence;

/// Denominator floor for the relative error. Coordinates whose gradient is
/// near zero compare on an absolute scale; central differences at
/// epsilon 1e-5 carry about 1e-10 of rounding noise.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-5;

/// `|a - n| / max(|a|, |n|, RELATIVE_ERROR_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR)
}

/// Largest relative error between the model's backward pass and central
/// differences of the loss, over every parameter coordinate.
pub fn grad_check(model: &Model, example: &EncodedSequence, epsilon: f64) -> Result<f64, ModelError> {
    let (_, analytic) = model.loss_and_gradients(example)?;
    grad_check_against(model, example, epsilon, &analytic)
}

/// As [`grad_check`], comparing against caller-supplied gradients.
pub fn grad_check_against(
    model: &Model,
    example: &EncodedSequence,
    epsilon: f64,
    analytic: &Parameters,
) -> Result<f64, ModelError> {
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(ModelError::Config(format!(
            "epsilon must lie in [1e-7, 1e-3], got {epsilon}"
        )));
    }
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for (name, tensor) in model.parameters() {
        let grad = analytic
            .get(name)
            .ok_or_else(|| ModelError::Shape(format!("no gradient for {name}")))?;
        if grad.shape() != tensor.shape() {
            return Err(ModelError::Shape(format!("gradient shape mismatch for {name}")));
        }
        for i in 0..tensor.len() {
            let original = tensor.data()[i];
            probe.parameters_mut().get_mut(name).expect("same names").data_mut()[i] = original + epsilon;
            let up = probe.loss(example)?;
            probe.parameters_mut().get_mut(name).expect("same names").data_mut()[i] = original - epsilon;
            let down = probe.loss(example)?;
            probe.parameters_mut().get_mut(name).expect("same names").data_mut()[i] = original;
            let numeric = (up - down) / (2.0 * epsilon);
            worst = worst.max(relative_error(grad.data()[i], numeric));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::NUM_TAGS;
    use crate::model::arch::{ArchitectureKind, ModelConfig};

    fn example(kind: ArchitectureKind, dim: usize) -> EncodedSequence {
        let steps = if matches!(kind, ArchitectureKind::UseDense | ArchitectureKind::BertHead) { 1 } else { 4 };
        let real = if steps == 1 { 1 } else { 3 };
        EncodedSequence::from_steps(
            (0..real).map(|t| (0..dim).map(|j| ((t * 7 + j * 3) % 5) as f64 * 0.3 - 0.6).collect()),
            dim,
            steps,
            Some(11),
        )
    }

    fn model(kind: ArchitectureKind) -> Model {
        Model::build(ModelConfig {
            hidden_dim: 5,
            max_len: 4,
            dense_dims: vec![6, 7, NUM_TAGS],
            seed: 3,
            ..ModelConfig::new(kind, 4)
        })
        .unwrap()
    }

    #[test]
    fn every_architecture_passes() {
        for kind in ArchitectureKind::ALL {
            let err = grad_check(&model(kind), &example(kind, 4), 1e-5).unwrap();
            assert!(err < 1e-4, "{kind:?}: {err}");
        }
    }

    #[test]
    fn negated_gradient_is_detected() {
        let kind = ArchitectureKind::BertHead;
        let m = model(kind);
        let ex = example(kind, 4);
        let (_, mut g) = m.loss_and_gradients(&ex).unwrap();
        g.get_mut("out.w").unwrap().scale(-1.0);
        let err = grad_check_against(&m, &ex, 1e-5, &g).unwrap();
        assert!((err - 2.0).abs() < 1e-3, "{err}");
    }

    #[test]
    fn linear_head_is_nearly_exact() {
        let kind = ArchitectureKind::BertHead;
        let err = grad_check(&model(kind), &example(kind, 4), 1e-4).unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn epsilon_range_enforced() {
        let kind = ArchitectureKind::BertHead;
        assert!(grad_check(&model(kind), &example(kind, 4), 1e-2).is_err());
    }
}
