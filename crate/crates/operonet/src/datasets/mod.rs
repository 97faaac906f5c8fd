//! Synthetic operator-learning datasets (identity, differentiation,
//! advection, Burgers), the pseudo-spectral Burgers oracle, and the ODNB
//! binary dataset format.

pub mod burgers;
pub mod cheb;
pub mod generate;
pub mod grf;
pub mod odnb;

pub use burgers::burgers_solve;
pub use cheb::{cheb_antiderivative, cheb_eval, sample_cheb_coeffs, CHEB_DEG};
pub use generate::{
    gen_advection, gen_burgers, gen_differentiation, gen_identity, gen_identity_sensors,
};
pub use grf::{grf_sample, GrfSample};
pub use odnb::{read_dataset, write_dataset};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("solver instability at step {step}: {what}")]
    Instability { step: usize, what: String },
    #[error("format error at byte {offset} in {path}: {what}")]
    Format {
        path: String,
        offset: u64,
        what: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Generator provenance carried inside every dataset file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetMeta {
    pub name: String,
    pub seed: u64,
    pub version: u32,
    pub notes: String,
}

/// N input functions sampled at m sensor points, with targets at Q query
/// points. All arrays are row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorDataset {
    pub m: usize,
    pub d_x: usize,
    pub d_y: usize,
    pub n: usize,
    pub q: usize,
    /// m x d_x sensor coordinates.
    pub sensor_locations: Vec<f64>,
    /// Q x d_y query coordinates.
    pub query_points: Vec<f64>,
    /// N x m sensor values.
    pub inputs: Vec<f64>,
    /// N x Q target values.
    pub targets: Vec<f64>,
    pub meta: DatasetMeta,
}

impl OperatorDataset {
    pub fn input_row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.m..(i + 1) * self.m]
    }

    pub fn target_row(&self, i: usize) -> &[f64] {
        &self.targets[i * self.q..(i + 1) * self.q]
    }

    pub fn query_point(&self, j: usize) -> &[f64] {
        &self.query_points[j * self.d_y..(j + 1) * self.d_y]
    }

    /// Shape consistency and finiteness of every array.
    pub fn validate(&self) -> Result<(), DataError> {
        let checks = [
            ("sensor_locations", self.sensor_locations.len(), self.m * self.d_x),
            ("query_points", self.query_points.len(), self.q * self.d_y),
            ("inputs", self.inputs.len(), self.n * self.m),
            ("targets", self.targets.len(), self.n * self.q),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(DataError::Domain(format!(
                    "{name} has {got} values, expected {want}"
                )));
            }
        }
        for (name, arr) in [
            ("sensor_locations", &self.sensor_locations),
            ("query_points", &self.query_points),
            ("inputs", &self.inputs),
            ("targets", &self.targets),
        ] {
            if !arr.iter().all(|v| v.is_finite()) {
                return Err(DataError::Domain(format!("{name} contains non-finite values")));
            }
        }
        Ok(())
    }
}

/// `n` evenly spaced points including both endpoints.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}
