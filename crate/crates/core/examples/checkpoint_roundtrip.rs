//! Train a small model, write it to a checkpoint file, load it back and
//! confirm the predictions are identical.

use dialogue_acts::corpus::TagSet;
use dialogue_acts::model::{load_checkpoint, save_checkpoint, train, ArchitectureKind, Model, ModelConfig, TrainConfig};
use dialogue_acts::representation::EncodedSequence;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data: Vec<EncodedSequence> = (0..20)
        .map(|i| {
            let steps = (0..3).map(|t| vec![((i * 3 + t) as f64).cos(), (i % 4) as f64 / 4.0]);
            EncodedSequence::from_steps(steps, 2, 4, Some(i % 4))
        })
        .collect();
    let config = ModelConfig {
        hidden_dim: 6,
        max_len: 4,
        ..ModelConfig::new(ArchitectureKind::GloveLstm, 2)
    };
    let tc = TrainConfig { epochs: 30, batch_size: 5, learning_rate: 0.02, ..Default::default() };
    let tm = train(Model::build(config)?, &data, &[], &tc)?;
    println!("final train accuracy {:.2}", tm.history.last().unwrap().train_accuracy);

    let path = std::env::temp_dir().join("checkpoint_example.json");
    save_checkpoint(&tm, &path)?;
    let back = load_checkpoint(&path)?;
    println!("{} bytes written to {}", std::fs::metadata(&path)?.len(), path.display());

    for seq in data.iter().take(4) {
        let a = tm.model.predict(seq)?;
        let b = back.model.predict(seq)?;
        assert_eq!(a, b);
        println!("label {:<3} predicted {:<3} p={:.3}", TagSet::damsl().get(seq.label.unwrap()).unwrap().label(),
            TagSet::damsl().get(a.tag).unwrap().label(), a.distribution[a.tag]);
    }
    println!("parameters and predictions identical after reload");
    Ok(())
}
