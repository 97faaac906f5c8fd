//! Dense f64 linear algebra and reverse-mode automatic differentiation.
//!
//! Small by intent: just enough primitives (matmul, add, broadcast-add,
//! activations, concat, slice, reshape, scale, sum) to express small MLPs
//! and compositions where one network's output becomes another network's
//! weights. Everything is deterministic: identical inputs give bit-identical
//! values and gradients.

mod matrix;
mod tape;

pub use matrix::Matrix;
pub use tape::{NodeId, Tape};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiffError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },
    #[error("state error: {0}")]
    State(String),
}

/// Activation applied between MLP layers.
///
/// `Prelu` carries a single shared trainable slope per activation site
/// (standard single-parameter variant, initialized to 0.25). ReLU's
/// derivative at 0 is taken as 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Tanh,
    Relu,
    Prelu { slope: f64 },
    Identity,
}

impl Activation {
    pub fn prelu() -> Self {
        Activation::Prelu { slope: 0.25 }
    }

    pub fn is_prelu(&self) -> bool {
        matches!(self, Activation::Prelu { .. })
    }
}

/// Compare the tape's analytic gradient against central finite differences.
///
/// `build` must declare exactly one leaf (shaped like `point`) and return a
/// scalar (1x1) output node. Returns the max over coordinates of
/// |analytic - central| / (|central| + 1e-12).
pub fn grad_check<F>(build: F, point: &Matrix, h: f64) -> Result<f64, DiffError>
where
    F: Fn(&mut Tape) -> Result<NodeId, DiffError>,
{
    if h <= 0.0 {
        return Err(DiffError::State(format!("grad_check: h must be > 0, got {h}")));
    }
    let eval = |x: &Matrix| -> Result<f64, DiffError> {
        let mut tape = Tape::new();
        let out = build(&mut tape)?;
        if tape.num_leaves() != 1 {
            return Err(DiffError::State(format!(
                "grad_check: builder declared {} leaves, expected 1",
                tape.num_leaves()
            )));
        }
        if tape.shape(out) != (1, 1) {
            return Err(DiffError::State("grad_check: output must be 1x1".into()));
        }
        tape.forward(&[x])?;
        Ok(tape.value(out).as_scalar())
    };

    // Analytic pass.
    let mut tape = Tape::new();
    build(&mut tape)?;
    tape.forward(&[point])?;
    let analytic = tape.backward(&Matrix::scalar(1.0))?.remove(0);

    let mut max_rel = 0.0f64;
    for i in 0..point.len() {
        let mut plus = point.clone();
        plus.data_mut()[i] += h;
        let mut minus = point.clone();
        minus.data_mut()[i] -= h;
        let central = (eval(&plus)? - eval(&minus)?) / (2.0 * h);
        let rel = (analytic.data()[i] - central).abs() / (central.abs() + 1e-12);
        if !rel.is_finite() {
            return Err(DiffError::NonFinite { node: i });
        }
        max_rel = max_rel.max(rel);
    }
    Ok(max_rel)
}
