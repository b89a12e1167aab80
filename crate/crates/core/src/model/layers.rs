//! Forward and backward passes for the building blocks: dense, 1-D
//! convolution over time, LSTM, and softmax cross-entropy.
//!
//! Sequences are `[steps, features]` matrices. Every backward function
//! returns exact analytic gradients given the forward inputs and outputs.

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    None,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::None => z,
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::None => 1.0,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn shape_err(what: &str, expected: &[usize], found: &[usize]) -> ModelError {
    ModelError::Shape(format!("{what}: expected {expected:?}, found {found:?}"))
}

// ---------------------------------------------------------------- dense

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub dx: Tensor,
    pub dw: Tensor,
    pub db: Tensor,
}

/// `y = act(x W + b)` for `x: [rows, in]`, `W: [in, out]`, `b: [out]`.
pub fn dense_forward(x: &Tensor, w: &Tensor, b: &Tensor, act: Activation) -> Result<Tensor, ModelError> {
    let (rows, n_in) = x.dims2()?;
    let (w_in, n_out) = w.dims2()?;
    if w_in != n_in {
        return Err(shape_err("dense weight", &[n_in, n_out], w.shape()));
    }
    if b.shape() != [n_out] {
        return Err(shape_err("dense bias", &[n_out], b.shape()));
    }
    let (xd, wd, bd) = (x.data(), w.data(), b.data());
    let mut y = vec![0.0; rows * n_out];
    for r in 0..rows {
        let out = &mut y[r * n_out..(r + 1) * n_out];
        out.copy_from_slice(bd);
        for i in 0..n_in {
            let xi = xd[r * n_in + i];
            if xi == 0.0 {
                continue;
            }
            let wrow = &wd[i * n_out..(i + 1) * n_out];
            for (o, wv) in out.iter_mut().zip(wrow) {
                *o += xi * wv;
            }
        }
        for o in out.iter_mut() {
            *o = act.apply(*o);
        }
    }
    Tensor::new(vec![rows, n_out], y)
}

/// Gradients of a dense layer given its input `x`, output `y` and the
/// upstream gradient `dy`.
pub fn dense_backward(
    x: &Tensor,
    w: &Tensor,
    y: &Tensor,
    dy: &Tensor,
    act: Activation,
) -> Result<DenseGrads, ModelError> {
    let (rows, n_in) = x.dims2()?;
    let (_, n_out) = w.dims2()?;
    if y.shape() != [rows, n_out] || dy.shape() != y.shape() {
        return Err(shape_err("dense upstream gradient", &[rows, n_out], dy.shape()));
    }
    let dz: Vec<f64> = y
        .data()
        .iter()
        .zip(dy.data())
        .map(|(&yv, &g)| g * act.derivative_from_output(yv))
        .collect();
    let (xd, wd) = (x.data(), w.data());
    let mut dx = vec![0.0; rows * n_in];
    let mut dw = vec![0.0; n_in * n_out];
    let mut db = vec![0.0; n_out];
    for r in 0..rows {
        let dzr = &dz[r * n_out..(r + 1) * n_out];
        for (acc, g) in db.iter_mut().zip(dzr) {
            *acc += g;
        }
        for i in 0..n_in {
            let xi = xd[r * n_in + i];
            let wrow = &wd[i * n_out..(i + 1) * n_out];
            let dwrow = &mut dw[i * n_out..(i + 1) * n_out];
            let mut s = 0.0;
            for o in 0..n_out {
                dwrow[o] += xi * dzr[o];
                s += wrow[o] * dzr[o];
            }
            dx[r * n_in + i] = s;
        }
    }
    Ok(DenseGrads {
        dx: Tensor::new(vec![rows, n_in], dx)?,
        dw: Tensor::new(vec![n_in, n_out], dw)?,
        db: Tensor::new(vec![n_out], db)?,
    })
}

// ---------------------------------------------------------------- conv1d

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads {
    pub dx: Tensor,
    pub dk: Tensor,
    pub db: Tensor,
}

fn conv_dims(x: &Tensor, k: &Tensor, b: &Tensor) -> Result<(usize, usize, usize, usize), ModelError> {
    let (steps, n_in) = x.dims2()?;
    let [width, k_in, n_out] = k.shape()[..] else {
        return Err(ModelError::Shape(format!("kernels must be [width, in, out], got {:?}", k.shape())));
    };
    if width % 2 == 0 {
        return Err(ModelError::Shape(format!("kernel width must be odd, got {width}")));
    }
    if k_in != n_in {
        return Err(shape_err("conv kernels", &[width, n_in, n_out], k.shape()));
    }
    if b.shape() != [n_out] {
        return Err(shape_err("conv bias", &[n_out], b.shape()));
    }
    Ok((steps, n_in, width, n_out))
}

/// Same-length convolution over time with zero padding:
/// `y[t] = act(b + sum_k x[t + k - width/2] K[k])`.
pub fn conv1d_forward(x: &Tensor, k: &Tensor, b: &Tensor, act: Activation) -> Result<Tensor, ModelError> {
    let (steps, n_in, width, n_out) = conv_dims(x, k, b)?;
    let half = width / 2;
    let (xd, kd) = (x.data(), k.data());
    let mut y = vec![0.0; steps * n_out];
    for t in 0..steps {
        let out = &mut y[t * n_out..(t + 1) * n_out];
        out.copy_from_slice(b.data());
        for j in 0..width {
            let Some(src) = (t + j).checked_sub(half).filter(|&s| s < steps) else {
                continue;
            };
            for i in 0..n_in {
                let xv = xd[src * n_in + i];
                if xv == 0.0 {
                    continue;
                }
                let krow = &kd[(j * n_in + i) * n_out..(j * n_in + i + 1) * n_out];
                for (o, kv) in out.iter_mut().zip(krow) {
                    *o += xv * kv;
                }
            }
        }
        for o in out.iter_mut() {
            *o = act.apply(*o);
        }
    }
    Tensor::new(vec![steps, n_out], y)
}

pub fn conv1d_backward(
    x: &Tensor,
    k: &Tensor,
    b: &Tensor,
    y: &Tensor,
    dy: &Tensor,
    act: Activation,
) -> Result<ConvGrads, ModelError> {
    let (steps, n_in, width, n_out) = conv_dims(x, k, b)?;
    if y.shape() != [steps, n_out] || dy.shape() != y.shape() {
        return Err(shape_err("conv upstream gradient", &[steps, n_out], dy.shape()));
    }
    let half = width / 2;
    let dz: Vec<f64> = y
        .data()
        .iter()
        .zip(dy.data())
        .map(|(&yv, &g)| g * act.derivative_from_output(yv))
        .collect();
    let (xd, kd) = (x.data(), k.data());
    let mut dx = vec![0.0; steps * n_in];
    let mut dk = vec![0.0; width * n_in * n_out];
    let mut db = vec![0.0; n_out];
    for t in 0..steps {
        let dzt = &dz[t * n_out..(t + 1) * n_out];
        for (acc, g) in db.iter_mut().zip(dzt) {
            *acc += g;
        }
        for j in 0..width {
            let Some(src) = (t + j).checked_sub(half).filter(|&s| s < steps) else {
                continue;
            };
            for i in 0..n_in {
                let base = (j * n_in + i) * n_out;
                let xv = xd[src * n_in + i];
                let mut s = 0.0;
                for o in 0..n_out {
                    dk[base + o] += xv * dzt[o];
                    s += kd[base + o] * dzt[o];
                }
                dx[src * n_in + i] += s;
            }
        }
    }
    Ok(ConvGrads {
        dx: Tensor::new(vec![steps, n_in], dx)?,
        dk: Tensor::new(vec![width, n_in, n_out], dk)?,
        db: Tensor::new(vec![n_out], db)?,
    })
}

// ---------------------------------------------------------------- lstm

/// LSTM weights with gates stacked in the order input, forget, cell, output:
/// `w: [in, 4h]`, `u: [h, 4h]`, `b: [4h]`.
#[derive(Debug, Clone, Copy)]
pub struct LstmParams<'a> {
    pub w: &'a Tensor,
    pub u: &'a Tensor,
    pub b: &'a Tensor,
}

#[derive(Debug, Clone)]
struct LstmStep {
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// activated gates i, f, g, o concatenated
    gates: Vec<f64>,
    c: Vec<f64>,
}

/// Forward state kept for the backward pass. Masked steps have no entry.
#[derive(Debug, Clone)]
pub struct LstmCache {
    hidden: usize,
    steps: Vec<Option<LstmStep>>,
    pub h_final: Vec<f64>,
    pub c_final: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmGrads {
    pub dx: Tensor,
    pub dw: Tensor,
    pub du: Tensor,
    pub db: Tensor,
}

fn lstm_dims(x: &Tensor, p: LstmParams<'_>) -> Result<(usize, usize, usize), ModelError> {
    let (steps, n_in) = x.dims2()?;
    let (u_rows, u_cols) = p.u.dims2()?;
    let hidden = u_rows;
    if u_cols != 4 * hidden {
        return Err(shape_err("lstm recurrent weight", &[hidden, 4 * hidden], p.u.shape()));
    }
    if p.w.shape() != [n_in, 4 * hidden] {
        return Err(shape_err("lstm input weight", &[n_in, 4 * hidden], p.w.shape()));
    }
    if p.b.shape() != [4 * hidden] {
        return Err(shape_err("lstm bias", &[4 * hidden], p.b.shape()));
    }
    Ok((steps, n_in, hidden))
}

/// Run the recurrence from zero state. Steps whose mask is `false` carry
/// the hidden and cell state through unchanged.
pub fn lstm_forward(x: &Tensor, mask: &[bool], p: LstmParams<'_>) -> Result<LstmCache, ModelError> {
    let (steps, n_in, hidden) = lstm_dims(x, p)?;
    if mask.len() != steps {
        return Err(ModelError::Shape(format!("mask has {} steps, input has {steps}", mask.len())));
    }
    let g4 = 4 * hidden;
    let (xd, wd, ud, bd) = (x.data(), p.w.data(), p.u.data(), p.b.data());
    let mut h = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    let mut cache = Vec::with_capacity(steps);
    for t in 0..steps {
        if !mask[t] {
            cache.push(None);
            continue;
        }
        let mut z = bd.to_vec();
        for i in 0..n_in {
            let xv = xd[t * n_in + i];
            if xv == 0.0 {
                continue;
            }
            for (zv, wv) in z.iter_mut().zip(&wd[i * g4..(i + 1) * g4]) {
                *zv += xv * wv;
            }
        }
        for (k, &hv) in h.iter().enumerate() {
            if hv == 0.0 {
                continue;
            }
            for (zv, uv) in z.iter_mut().zip(&ud[k * g4..(k + 1) * g4]) {
                *zv += hv * uv;
            }
        }
        let mut gates = z;
        for (idx, g) in gates.iter_mut().enumerate() {
            *g = if idx / hidden == 2 { g.tanh() } else { sigmoid(*g) };
        }
        let mut c_new = vec![0.0; hidden];
        let mut h_new = vec![0.0; hidden];
        for j in 0..hidden {
            let (ig, fg, gg, og) = (
                gates[j],
                gates[hidden + j],
                gates[2 * hidden + j],
                gates[3 * hidden + j],
            );
            c_new[j] = fg * c[j] + ig * gg;
            h_new[j] = og * c_new[j].tanh();
        }
        cache.push(Some(LstmStep {
            h_prev: std::mem::replace(&mut h, h_new),
            c_prev: std::mem::replace(&mut c, c_new.clone()),
            gates,
            c: c_new,
        }));
    }
    Ok(LstmCache {
        hidden,
        steps: cache,
        h_final: h,
        c_final: c,
    })
}

/// Backpropagate a gradient on the final hidden state through the sequence.
pub fn lstm_backward(
    x: &Tensor,
    p: LstmParams<'_>,
    cache: &LstmCache,
    dh_final: &[f64],
) -> Result<LstmGrads, ModelError> {
    let (steps, n_in, hidden) = lstm_dims(x, p)?;
    if cache.hidden != hidden || cache.steps.len() != steps || dh_final.len() != hidden {
        return Err(ModelError::Shape("lstm cache does not match inputs".into()));
    }
    let g4 = 4 * hidden;
    let (xd, wd, ud) = (x.data(), p.w.data(), p.u.data());
    let mut dx = vec![0.0; steps * n_in];
    let mut dw = vec![0.0; n_in * g4];
    let mut du = vec![0.0; hidden * g4];
    let mut db = vec![0.0; g4];
    let mut dh = dh_final.to_vec();
    let mut dc = vec![0.0; hidden];
    let mut dz = vec![0.0; g4];
    for t in (0..steps).rev() {
        let Some(step) = &cache.steps[t] else {
            continue;
        };
        let gates = &step.gates;
        for j in 0..hidden {
            let (ig, fg, gg, og) = (
                gates[j],
                gates[hidden + j],
                gates[2 * hidden + j],
                gates[3 * hidden + j],
            );
            let tc = step.c[j].tanh();
            let dct = dc[j] + dh[j] * og * (1.0 - tc * tc);
            dz[j] = dct * gg * ig * (1.0 - ig);
            dz[hidden + j] = dct * step.c_prev[j] * fg * (1.0 - fg);
            dz[2 * hidden + j] = dct * ig * (1.0 - gg * gg);
            dz[3 * hidden + j] = dh[j] * tc * og * (1.0 - og);
            dc[j] = dct * fg;
        }
        for (acc, g) in db.iter_mut().zip(&dz) {
            *acc += g;
        }
        for i in 0..n_in {
            let xv = xd[t * n_in + i];
            let wrow = &wd[i * g4..(i + 1) * g4];
            let dwrow = &mut dw[i * g4..(i + 1) * g4];
            let mut s = 0.0;
            for q in 0..g4 {
                dwrow[q] += xv * dz[q];
                s += wrow[q] * dz[q];
            }
            dx[t * n_in + i] = s;
        }
        for k in 0..hidden {
            let hv = step.h_prev[k];
            let urow = &ud[k * g4..(k + 1) * g4];
            let durow = &mut du[k * g4..(k + 1) * g4];
            let mut s = 0.0;
            for q in 0..g4 {
                durow[q] += hv * dz[q];
                s += urow[q] * dz[q];
            }
            dh[k] = s;
        }
    }
    Ok(LstmGrads {
        dx: Tensor::new(vec![steps, n_in], dx)?,
        dw: Tensor::new(vec![n_in, g4], dw)?,
        du: Tensor::new(vec![hidden, g4], du)?,
        db: Tensor::new(vec![g4], db)?,
    })
}

// ---------------------------------------------------------------- loss

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-log softmax(logits)[label]` and its gradient `softmax - onehot`.
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>), ModelError> {
    if label >= logits.len() {
        return Err(ModelError::LabelOutOfRange {
            label,
            n_classes: logits.len(),
        });
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln() + max;
    let loss = (log_sum - logits[label]).max(0.0);
    let mut grad = softmax(logits);
    grad[label] -= 1.0;
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
        let n = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    /// Central-difference derivative of `f` along every entry of `t`.
    fn numeric(t: &Tensor, eps: f64, mut f: impl FnMut(&Tensor) -> f64) -> Vec<f64> {
        (0..t.len())
            .map(|i| {
                let mut plus = t.clone();
                plus.data_mut()[i] += eps;
                let mut minus = t.clone();
                minus.data_mut()[i] -= eps;
                (f(&plus) - f(&minus)) / (2.0 * eps)
            })
            .collect()
    }

    fn max_rel(analytic: &[f64], numeric: &[f64]) -> f64 {
        analytic
            .iter()
            .zip(numeric)
            .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-8))
            .fold(0.0, f64::max)
    }

    /// Fixed linear functional of an output, so gradients are checked
    /// against a scalar objective.
    fn probe(y: &Tensor, weights: &[f64]) -> f64 {
        y.data().iter().zip(weights).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn dense_identity_and_relu() {
        let x = Tensor::from_rows(&[vec![1.0, -2.0, 3.0]]).unwrap();
        let mut eye = Tensor::zeros(&[3, 3]);
        for i in 0..3 {
            eye.data_mut()[i * 3 + i] = 1.0;
        }
        let b = Tensor::zeros(&[3]);
        assert_eq!(dense_forward(&x, &eye, &b, Activation::None).unwrap(), x);
        let neg = Tensor::from_rows(&[vec![-1.0, -0.5, -3.0]]).unwrap();
        let y = dense_forward(&neg, &eye, &b, Activation::Relu).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
        assert!(dense_forward(&x, &Tensor::zeros(&[2, 3]), &b, Activation::None).is_err());
    }

    #[test]
    fn dense_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for act in [Activation::None, Activation::Tanh, Activation::Relu] {
            let x = random(&[3, 4], &mut rng);
            let w = random(&[4, 5], &mut rng);
            let b = random(&[5], &mut rng);
            let probe_w: Vec<f64> = (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y = dense_forward(&x, &w, &b, act).unwrap();
            let dy = Tensor::new(vec![3, 5], probe_w.clone()).unwrap();
            let g = dense_backward(&x, &w, &y, &dy, act).unwrap();
            let eps = 1e-6;
            let nx = numeric(&x, eps, |x| probe(&dense_forward(x, &w, &b, act).unwrap(), &probe_w));
            let nw = numeric(&w, eps, |w| probe(&dense_forward(&x, w, &b, act).unwrap(), &probe_w));
            let nb = numeric(&b, eps, |b| probe(&dense_forward(&x, &w, b, act).unwrap(), &probe_w));
            assert!(max_rel(g.dx.data(), &nx) < 1e-6, "{act:?} dx");
            assert!(max_rel(g.dw.data(), &nw) < 1e-6, "{act:?} dw");
            assert!(max_rel(g.db.data(), &nb) < 1e-6, "{act:?} db");
        }
    }

    #[test]
    fn conv_identity_and_averaging() {
        let x = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let mut k = Tensor::zeros(&[1, 2, 2]);
        k.data_mut()[0] = 1.0;
        k.data_mut()[3] = 1.0;
        let b = Tensor::zeros(&[2]);
        assert_eq!(conv1d_forward(&x, &k, &b, Activation::None).unwrap(), x);

        let constant = Tensor::from_rows(&vec![vec![2.0]; 6]).unwrap();
        let avg = Tensor::new(vec![3, 1, 1], vec![1.0 / 3.0; 3]).unwrap();
        let y = conv1d_forward(&constant, &avg, &Tensor::zeros(&[1]), Activation::None).unwrap();
        for t in 1..5 {
            assert!((y.data()[t] - 2.0).abs() < 1e-12);
        }
        assert!((y.data()[0] - 4.0 / 3.0).abs() < 1e-12);
        assert!(conv1d_forward(&x, &Tensor::zeros(&[2, 2, 2]), &b, Activation::None).is_err());
    }

    #[test]
    fn conv_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for act in [Activation::None, Activation::Tanh] {
            let x = random(&[5, 3], &mut rng);
            let k = random(&[3, 3, 4], &mut rng);
            let b = random(&[4], &mut rng);
            let pw: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y = conv1d_forward(&x, &k, &b, act).unwrap();
            let dy = Tensor::new(vec![5, 4], pw.clone()).unwrap();
            let g = conv1d_backward(&x, &k, &b, &y, &dy, act).unwrap();
            let eps = 1e-6;
            let nx = numeric(&x, eps, |x| probe(&conv1d_forward(x, &k, &b, act).unwrap(), &pw));
            let nk = numeric(&k, eps, |k| probe(&conv1d_forward(&x, k, &b, act).unwrap(), &pw));
            let nb = numeric(&b, eps, |b| probe(&conv1d_forward(&x, &k, b, act).unwrap(), &pw));
            assert!(max_rel(g.dx.data(), &nx) < 1e-4);
            assert!(max_rel(g.dk.data(), &nk) < 1e-4);
            assert!(max_rel(g.db.data(), &nb) < 1e-4);
        }
    }

    #[test]
    fn lstm_mask_and_zero_weights() {
        let h = 3;
        let w = Tensor::zeros(&[2, 4 * h]);
        let u = Tensor::zeros(&[h, 4 * h]);
        let b = Tensor::zeros(&[4 * h]);
        let p = LstmParams { w: &w, u: &u, b: &b };
        let x = Tensor::from_rows(&[vec![1.0, -1.0]]).unwrap();
        let cache = lstm_forward(&x, &[true], p).unwrap();
        assert_eq!(cache.h_final, vec![0.0; h]);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = random(&[2, 4 * h], &mut rng);
        let u = random(&[h, 4 * h], &mut rng);
        let b = random(&[4 * h], &mut rng);
        let p = LstmParams { w: &w, u: &u, b: &b };
        let x = random(&[4, 2], &mut rng);
        let cache = lstm_forward(&x, &[false; 4], p).unwrap();
        assert_eq!(cache.h_final, vec![0.0; h]);
        assert_eq!(cache.c_final, vec![0.0; h]);
    }

    #[test]
    fn lstm_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (n_in, h) = (3, 4);
        let x = random(&[3, n_in], &mut rng);
        let w = random(&[n_in, 4 * h], &mut rng);
        let u = random(&[h, 4 * h], &mut rng);
        let b = random(&[4 * h], &mut rng);
        let pw: Vec<f64> = (0..h).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for mask in [[true, true, true], [true, false, true]] {
            let f = |x: &Tensor, w: &Tensor, u: &Tensor, b: &Tensor| {
                let c = lstm_forward(x, &mask, LstmParams { w, u, b }).unwrap();
                c.h_final.iter().zip(&pw).map(|(a, b)| a * b).sum::<f64>()
            };
            let cache = lstm_forward(&x, &mask, LstmParams { w: &w, u: &u, b: &b }).unwrap();
            let g = lstm_backward(&x, LstmParams { w: &w, u: &u, b: &b }, &cache, &pw).unwrap();
            let eps = 1e-6;
            let nx = numeric(&x, eps, |x| f(x, &w, &u, &b));
            let nw = numeric(&w, eps, |w| f(&x, w, &u, &b));
            let nu = numeric(&u, eps, |u| f(&x, &w, u, &b));
            let nb = numeric(&b, eps, |b| f(&x, &w, &u, b));
            assert!(max_rel(g.dx.data(), &nx) < 1e-4, "dx");
            assert!(max_rel(g.dw.data(), &nw) < 1e-4, "dw");
            assert!(max_rel(g.du.data(), &nu) < 1e-4, "du");
            assert!(max_rel(g.db.data(), &nb) < 1e-4, "db");
            if !mask[1] {
                assert!(g.dx.row_slice(1).iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn cross_entropy_values() {
        let (loss, grad) = softmax_cross_entropy(&[0.0; 42], 5).unwrap();
        assert!((loss - 42f64.ln()).abs() < 1e-12);
        assert!((grad[5] - (1.0 / 42.0 - 1.0)).abs() < 1e-15);

        let mut logits = vec![0.0; 42];
        logits[7] = 30.0;
        let (loss, _) = softmax_cross_entropy(&logits, 7).unwrap();
        assert!(loss < 1e-9);

        assert!(matches!(
            softmax_cross_entropy(&[0.0; 42], 42),
            Err(ModelError::LabelOutOfRange { .. })
        ));
    }

    #[test]
    fn cross_entropy_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let logits: Vec<f64> = (0..42).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let (_, grad) = softmax_cross_entropy(&logits, 11).unwrap();
        let t = Tensor::row(logits);
        let num = numeric(&t, 1e-5, |z| softmax_cross_entropy(z.data(), 11).unwrap().0);
        assert!(max_rel(&grad, &num) < 1e-6);
    }

    #[test]
    fn softmax_is_a_distribution() {
        let p = softmax(&[1000.0, -1000.0, 3.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&v| v >= 0.0));
    }
}
