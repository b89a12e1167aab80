//! Compare every architecture's backward pass with central finite
//! differences of its loss.

use dialogue_acts::corpus::NUM_TAGS;
use dialogue_acts::model::{grad_check, grad_check_against, ArchitectureKind, Model, ModelConfig};
use dialogue_acts::representation::EncodedSequence;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let input_dim = 6;
    for kind in ArchitectureKind::ALL {
        let config = ModelConfig {
            hidden_dim: 8,
            max_len: 6,
            dense_dims: vec![10, 10, NUM_TAGS],
            ..ModelConfig::new(kind, input_dim)
        };
        let model = Model::build(config)?;
        let steps = match kind {
            ArchitectureKind::UseDense | ArchitectureKind::BertHead => 1,
            ArchitectureKind::UseConvLstm => 3,
            _ => 6,
        };
        let example = EncodedSequence::from_steps(
            (0..steps.min(4)).map(|t| (0..input_dim).map(|j| ((t * 5 + j) as f64 * 0.7).sin()).collect()),
            input_dim,
            steps,
            Some(7),
        );
        let err = grad_check(&model, &example, 1e-5)?;
        println!("{:<10} {:>6} parameters  max relative error {err:.2e}", kind.cli_name(),
            model.parameters().values().map(|t| t.len()).sum::<usize>());
    }

    let model = Model::build(ModelConfig::new(ArchitectureKind::BertHead, input_dim))?;
    let example = EncodedSequence::from_steps(std::iter::once(vec![0.5; input_dim]), input_dim, 1, Some(3));
    let (_, mut grads) = model.loss_and_gradients(&example)?;
    grads.get_mut("out.w").unwrap().scale(-1.0);
    println!("\nwith one gradient negated: {:.3}", grad_check_against(&model, &example, 1e-5, &grads)?);
    Ok(())
}
