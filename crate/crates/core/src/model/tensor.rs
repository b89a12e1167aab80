use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Dense row-major array of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Tensor, ModelError> {
        let expected: usize = shape.iter().product();
        if shape.contains(&0) || expected != data.len() {
            return Err(ModelError::Shape(format!(
                "shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn zeros_like(other: &Tensor) -> Tensor {
        Tensor::zeros(&other.shape)
    }

    /// A single-row matrix `[1, n]`.
    pub fn row(values: Vec<f64>) -> Tensor {
        Tensor {
            shape: vec![1, values.len()],
            data: values,
        }
    }

    /// Stack equal-length rows into a `[rows, cols]` matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Tensor, ModelError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(ModelError::Shape("rows have different lengths".into()));
        }
        Tensor::new(vec![rows.len(), cols], rows.concat())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `(rows, cols)` of a 2-D tensor.
    pub fn dims2(&self) -> Result<(usize, usize), ModelError> {
        match self.shape[..] {
            [r, c] => Ok((r, c)),
            _ => Err(ModelError::Shape(format!("expected a matrix, got shape {:?}", self.shape))),
        }
    }

    pub fn row_slice(&self, r: usize) -> &[f64] {
        let cols = self.shape[self.shape.len() - 1];
        &self.data[r * cols..(r + 1) * cols]
    }

    pub fn add_assign(&mut self, other: &Tensor) -> Result<(), ModelError> {
        if self.shape != other.shape {
            return Err(ModelError::Shape(format!(
                "cannot add {:?} to {:?}",
                other.shape, self.shape
            )));
        }
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
        Ok(())
    }

    pub fn scale(&mut self, k: f64) {
        self.data.iter_mut().for_each(|a| *a *= k);
    }
}

/// Named parameter (or gradient) tensors, iterated in name order.
pub type Parameters = BTreeMap<String, Tensor>;

/// Elementwise `acc += other` over matching parameter collections.
pub fn accumulate(acc: &mut Parameters, other: &Parameters) -> Result<(), ModelError> {
    if acc.len() != other.len() {
        return Err(ModelError::Shape("parameter sets differ".into()));
    }
    for (name, t) in other {
        acc.get_mut(name)
            .ok_or_else(|| ModelError::Shape(format!("unexpected parameter {name}")))?
            .add_assign(t)?;
    }
    Ok(())
}

pub fn zeros_like(params: &Parameters) -> Parameters {
    params
        .iter()
        .map(|(k, t)| (k.clone(), Tensor::zeros_like(t)))
        .collect()
}

pub fn parameter_count(params: &Parameters) -> usize {
    params.values().map(Tensor::len).sum()
}
