//! The five classifier architectures.
//!
//! | kind          | input                         | layers                               |
//! |---------------|-------------------------------|--------------------------------------|
//! | `ProbLstm`    | tag-probability rows          | LSTM -> dense(classes)               |
//! | `GloveLstm`   | word vectors                  | LSTM -> dense(classes)               |
//! | `UseDense`    | one sentence vector           | dense(relu) -> dense(relu) -> dense  |
//! | `UseConvLstm` | window of sentence vectors    | conv1d(relu) -> LSTM -> dense        |
//! | `BertHead`    | one sentence vector           | dense(classes)                       |
//!
//! All heads end in a softmax over the tag classes.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    conv1d_backward, conv1d_forward, dense_backward, dense_forward, lstm_backward, lstm_forward,
    softmax, softmax_cross_entropy, Activation, LstmCache, LstmParams,
};
use super::tensor::{Parameters, Tensor};
use super::ModelError;
use crate::corpus::{TagId, NUM_TAGS};
use crate::representation::EncodedSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArchitectureKind {
    #[serde(rename = "prob-lstm")]
    ProbLstm,
    #[serde(rename = "glove-lstm")]
    GloveLstm,
    #[serde(rename = "use")]
    UseDense,
    #[serde(rename = "use-lstm")]
    UseConvLstm,
    #[serde(rename = "bert-head")]
    BertHead,
}

impl ArchitectureKind {
    pub const ALL: [ArchitectureKind; 5] = [
        ArchitectureKind::ProbLstm,
        ArchitectureKind::GloveLstm,
        ArchitectureKind::UseDense,
        ArchitectureKind::UseConvLstm,
        ArchitectureKind::BertHead,
    ];

    /// Command-line name.
    pub fn cli_name(self) -> &'static str {
        match self {
            ArchitectureKind::ProbLstm => "prob-lstm",
            ArchitectureKind::GloveLstm => "glove-lstm",
            ArchitectureKind::UseDense => "use",
            ArchitectureKind::UseConvLstm => "use-lstm",
            ArchitectureKind::BertHead => "bert-head",
        }
    }

    /// Row label used in results tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ArchitectureKind::ProbLstm => "Prob+LSTM",
            ArchitectureKind::GloveLstm => "GloVe+LSTM",
            ArchitectureKind::UseDense => "USE",
            ArchitectureKind::UseConvLstm => "USE+LSTM",
            ArchitectureKind::BertHead => "BERT",
        }
    }

    /// Whether the model consumes precomputed sentence vectors.
    pub fn uses_sentence_vectors(self) -> bool {
        matches!(
            self,
            ArchitectureKind::UseDense | ArchitectureKind::UseConvLstm | ArchitectureKind::BertHead
        )
    }
}

impl fmt::Display for ArchitectureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for ArchitectureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ArchitectureKind::ALL
            .into_iter()
            .find(|k| k.cli_name() == s)
            .ok_or_else(|| {
                format!("unknown architecture {s:?} (expected prob-lstm, glove-lstm, use, use-lstm or bert-head)")
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ArchitectureKind,
    /// Width of each input step.
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub n_classes: usize,
    /// Token steps per input for the sequence encoders.
    pub max_len: usize,
    /// Sentence vectors per input for `UseConvLstm`.
    pub context_window: usize,
    /// Odd kernel width of the `UseConvLstm` convolution.
    pub conv_width: usize,
    /// Widths of the three `UseDense` layers; the last equals `n_classes`.
    pub dense_dims: Vec<usize>,
    /// Seeds parameter initialization.
    pub seed: u64,
}

impl ModelConfig {
    /// Defaults for `kind` with the given input width.
    pub fn new(kind: ArchitectureKind, input_dim: usize) -> Self {
        ModelConfig {
            kind,
            input_dim,
            hidden_dim: 128,
            n_classes: NUM_TAGS,
            max_len: 128,
            context_window: 3,
            conv_width: 3,
            dense_dims: vec![256, 128, NUM_TAGS],
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::Config(msg));
        if self.input_dim == 0 || self.hidden_dim == 0 || self.max_len == 0 {
            return bad("input_dim, hidden_dim and max_len must be positive".into());
        }
        if self.n_classes != NUM_TAGS {
            return bad(format!("n_classes must be {NUM_TAGS}, got {}", self.n_classes));
        }
        match self.kind {
            ArchitectureKind::UseDense => {
                if self.dense_dims.len() != 3 {
                    return bad(format!(
                        "UseDense needs exactly three dense layers, got {}",
                        self.dense_dims.len()
                    ));
                }
                if self.dense_dims.contains(&0) {
                    return bad("dense layer widths must be positive".into());
                }
                if self.dense_dims[2] != self.n_classes {
                    return bad(format!(
                        "last dense layer must have {} units, got {}",
                        self.n_classes, self.dense_dims[2]
                    ));
                }
            }
            ArchitectureKind::UseConvLstm => {
                if self.context_window == 0 {
                    return bad("context_window must be positive".into());
                }
                if self.conv_width.is_multiple_of(2) {
                    return bad(format!("conv_width must be odd, got {}", self.conv_width));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Expected parameter names and shapes, in initialization order.
    pub fn parameter_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let (d, h, c) = (self.input_dim, self.hidden_dim, self.n_classes);
        let lstm = |input: usize| {
            vec![
                ("lstm.w".to_string(), vec![input, 4 * h]),
                ("lstm.u".to_string(), vec![h, 4 * h]),
                ("lstm.b".to_string(), vec![4 * h]),
                ("out.w".to_string(), vec![h, c]),
                ("out.b".to_string(), vec![c]),
            ]
        };
        match self.kind {
            ArchitectureKind::ProbLstm | ArchitectureKind::GloveLstm => lstm(d),
            ArchitectureKind::UseConvLstm => {
                let mut v = vec![
                    ("conv.k".to_string(), vec![self.conv_width, d, h]),
                    ("conv.b".to_string(), vec![h]),
                ];
                v.extend(lstm(h));
                v
            }
            ArchitectureKind::UseDense => {
                let mut v = Vec::new();
                let mut fan_in = d;
                for (i, &width) in self.dense_dims.iter().enumerate() {
                    v.push((format!("dense{i}.w"), vec![fan_in, width]));
                    v.push((format!("dense{i}.b"), vec![width]));
                    fan_in = width;
                }
                v
            }
            ArchitectureKind::BertHead => {
                vec![("out.w".to_string(), vec![d, c]), ("out.b".to_string(), vec![c])]
            }
        }
    }
}

/// Output of [`Model::predict`].
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub distribution: Vec<f64>,
    pub tag: TagId,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub enum ForwardCache {
    Lstm {
        x: Tensor,
        lstm: LstmCache,
        h: Tensor,
    },
    ConvLstm {
        x: Tensor,
        conv_out: Tensor,
        lstm: LstmCache,
        h: Tensor,
    },
    Dense {
        /// inputs to each dense layer followed by the final logits
        activations: Vec<Tensor>,
    },
    Head {
        x: Tensor,
    },
}

/// An architecture with concrete parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    params: Parameters,
}

fn glorot(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let (fan_in, fan_out) = match shape {
        [i, o] => (*i, *o),
        [w, i, o] => (w * i, w * o),
        _ => (1, 1),
    };
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-limit..limit)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape is non-empty")
}

impl Model {
    /// Wire the architecture and initialize it: Glorot-uniform weights from
    /// the config seed, zero biases, and forget-gate biases set to 1.
    pub fn build(config: ModelConfig) -> Result<Model, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = Parameters::new();
        for (name, shape) in config.parameter_shapes() {
            let t = if shape.len() == 1 {
                let mut b = Tensor::zeros(&shape);
                if name == "lstm.b" {
                    let h = config.hidden_dim;
                    b.data_mut()[h..2 * h].iter_mut().for_each(|v| *v = 1.0);
                }
                b
            } else {
                glorot(&shape, &mut rng)
            };
            params.insert(name, t);
        }
        Ok(Model { config, params })
    }

    /// Reassemble a model from stored parameters, checking every shape.
    pub fn from_parts(config: ModelConfig, params: Parameters) -> Result<Model, ModelError> {
        config.validate()?;
        let shapes = config.parameter_shapes();
        if shapes.len() != params.len() {
            return Err(ModelError::Shape(format!(
                "expected {} parameter tensors, found {}",
                shapes.len(),
                params.len()
            )));
        }
        for (name, shape) in &shapes {
            match params.get(name) {
                Some(t) if t.shape() == shape.as_slice() => {}
                Some(t) => {
                    return Err(ModelError::Shape(format!(
                        "{name}: expected shape {shape:?}, found {:?}",
                        t.shape()
                    )))
                }
                None => return Err(ModelError::Shape(format!("missing parameter {name}"))),
            }
        }
        Ok(Model { config, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn parameters(&self) -> &Parameters {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut Parameters {
        &mut self.params
    }

    pub fn set_parameters(&mut self, params: Parameters) {
        self.params = params;
    }

    fn p(&self, name: &str) -> &Tensor {
        &self.params[name]
    }

    fn lstm_params(&self) -> LstmParams<'_> {
        LstmParams {
            w: self.p("lstm.w"),
            u: self.p("lstm.u"),
            b: self.p("lstm.b"),
        }
    }

    fn check_input(&self, seq: &EncodedSequence) -> Result<(), ModelError> {
        if seq.is_empty() || seq.mask.len() != seq.vectors.len() {
            return Err(ModelError::Input("empty sequence or mask length mismatch".into()));
        }
        if let Some(bad) = seq.vectors.iter().find(|v| v.len() != self.config.input_dim) {
            return Err(ModelError::Input(format!(
                "input width {} does not match model input_dim {}",
                bad.len(),
                self.config.input_dim
            )));
        }
        Ok(())
    }

    /// Compute logits and keep what the backward pass needs.
    pub fn forward(&self, seq: &EncodedSequence) -> Result<(Vec<f64>, ForwardCache), ModelError> {
        self.check_input(seq)?;
        let x = Tensor::from_rows(&seq.vectors)?;
        match self.config.kind {
            ArchitectureKind::ProbLstm | ArchitectureKind::GloveLstm => {
                let lstm = lstm_forward(&x, &seq.mask, self.lstm_params())?;
                let h = Tensor::row(lstm.h_final.clone());
                let logits = dense_forward(&h, self.p("out.w"), self.p("out.b"), Activation::None)?;
                Ok((logits.into_data(), ForwardCache::Lstm { x, lstm, h }))
            }
            ArchitectureKind::UseConvLstm => {
                let conv_out = conv1d_forward(&x, self.p("conv.k"), self.p("conv.b"), Activation::Relu)?;
                let lstm = lstm_forward(&conv_out, &seq.mask, self.lstm_params())?;
                let h = Tensor::row(lstm.h_final.clone());
                let logits = dense_forward(&h, self.p("out.w"), self.p("out.b"), Activation::None)?;
                Ok((
                    logits.into_data(),
                    ForwardCache::ConvLstm {
                        x,
                        conv_out,
                        lstm,
                        h,
                    },
                ))
            }
            ArchitectureKind::UseDense => {
                let mut activations = vec![Tensor::row(seq.vectors[0].clone())];
                for i in 0..3 {
                    let act = if i < 2 { Activation::Relu } else { Activation::None };
                    let y = dense_forward(
                        &activations[i],
                        self.p(&format!("dense{i}.w")),
                        self.p(&format!("dense{i}.b")),
                        act,
                    )?;
                    activations.push(y);
                }
                let logits = activations[3].data().to_vec();
                Ok((logits, ForwardCache::Dense { activations }))
            }
            ArchitectureKind::BertHead => {
                let x = Tensor::row(seq.vectors[0].clone());
                let logits = dense_forward(&x, self.p("out.w"), self.p("out.b"), Activation::None)?;
                Ok((logits.into_data(), ForwardCache::Head { x }))
            }
        }
    }

    /// Parameter gradients given the loss gradient on the logits.
    pub fn backward(&self, cache: &ForwardCache, dlogits: &[f64]) -> Result<Parameters, ModelError> {
        let dlogits = Tensor::row(dlogits.to_vec());
        let mut grads = Parameters::new();
        match cache {
            ForwardCache::Lstm { x, lstm, h } => {
                let logits = dense_forward(h, self.p("out.w"), self.p("out.b"), Activation::None)?;
                let head = dense_backward(h, self.p("out.w"), &logits, &dlogits, Activation::None)?;
                let g = lstm_backward(x, self.lstm_params(), lstm, head.dx.data())?;
                grads.insert("out.w".into(), head.dw);
                grads.insert("out.b".into(), head.db);
                grads.insert("lstm.w".into(), g.dw);
                grads.insert("lstm.u".into(), g.du);
                grads.insert("lstm.b".into(), g.db);
            }
            ForwardCache::ConvLstm {
                x,
                conv_out,
                lstm,
                h,
            } => {
                let logits = dense_forward(h, self.p("out.w"), self.p("out.b"), Activation::None)?;
                let head = dense_backward(h, self.p("out.w"), &logits, &dlogits, Activation::None)?;
                let g = lstm_backward(conv_out, self.lstm_params(), lstm, head.dx.data())?;
                let conv = conv1d_backward(
                    x,
                    self.p("conv.k"),
                    self.p("conv.b"),
                    conv_out,
                    &g.dx,
                    Activation::Relu,
                )?;
                grads.insert("out.w".into(), head.dw);
                grads.insert("out.b".into(), head.db);
                grads.insert("lstm.w".into(), g.dw);
                grads.insert("lstm.u".into(), g.du);
                grads.insert("lstm.b".into(), g.db);
                grads.insert("conv.k".into(), conv.dk);
                grads.insert("conv.b".into(), conv.db);
            }
            ForwardCache::Dense { activations } => {
                let mut upstream = dlogits;
                for i in (0..3).rev() {
                    let act = if i < 2 { Activation::Relu } else { Activation::None };
                    let g = dense_backward(
                        &activations[i],
                        self.p(&format!("dense{i}.w")),
                        &activations[i + 1],
                        &upstream,
                        act,
                    )?;
                    grads.insert(format!("dense{i}.w"), g.dw);
                    grads.insert(format!("dense{i}.b"), g.db);
                    upstream = g.dx;
                }
            }
            ForwardCache::Head { x } => {
                let logits = dense_forward(x, self.p("out.w"), self.p("out.b"), Activation::None)?;
                let g = dense_backward(x, self.p("out.w"), &logits, &dlogits, Activation::None)?;
                grads.insert("out.w".into(), g.dw);
                grads.insert("out.b".into(), g.db);
            }
        }
        Ok(grads)
    }

    pub fn logits(&self, seq: &EncodedSequence) -> Result<Vec<f64>, ModelError> {
        Ok(self.forward(seq)?.0)
    }

    /// Cross-entropy loss for a labeled example.
    pub fn loss(&self, seq: &EncodedSequence) -> Result<f64, ModelError> {
        let label = seq.label.ok_or(ModelError::Unlabeled)?;
        Ok(softmax_cross_entropy(&self.logits(seq)?, label)?.0)
    }

    /// Loss and parameter gradients for a labeled example.
    pub fn loss_and_gradients(&self, seq: &EncodedSequence) -> Result<(f64, Parameters), ModelError> {
        let label = seq.label.ok_or(ModelError::Unlabeled)?;
        let (logits, cache) = self.forward(seq)?;
        let (loss, dlogits) = softmax_cross_entropy(&logits, label)?;
        Ok((loss, self.backward(&cache, &dlogits)?))
    }

    /// Class distribution and argmax tag (lowest id wins ties).
    pub fn predict(&self, seq: &EncodedSequence) -> Result<Prediction, ModelError> {
        let distribution = softmax(&self.logits(seq)?);
        Ok(Prediction {
            tag: argmax(&distribution),
            distribution,
        })
    }
}

/// Index of the largest value; the first one on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
