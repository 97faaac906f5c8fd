use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::rng::Rng;

/// Grid size of a GRF realization on the unit torus.
pub const GRF_GRID: usize = 128;
/// Highest retained integer frequency (Nyquist of the 128 grid).
pub const GRF_K_MAX: usize = 64;

/// One draw from the Gaussian random field N(0, 5^4 (-Lap + 25 I)^{-2})
/// with periodic boundary conditions on [0, 1).
#[derive(Clone, Debug)]
pub struct GrfSample {
    /// Full length-128 spectrum, Hermitian-symmetric (index i holds
    /// frequency i for i <= 64, i - 128 above).
    pub fourier_coefficients: Vec<Complex64>,
    /// Field values at x_j = j / 128.
    pub realization: Vec<f64>,
}

/// Covariance eigenvalue at integer frequency k: 5^4 / ((2 pi k)^2 + 25)^2.
pub fn grf_lambda(k: i64) -> f64 {
    let two_pi_k = 2.0 * std::f64::consts::PI * k as f64;
    625.0 / (two_pi_k * two_pi_k + 25.0).powi(2)
}

pub fn grf_sample(rng: &mut Rng) -> GrfSample {
    let n = GRF_GRID;
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    spec[0] = Complex64::new(grf_lambda(0).sqrt() * rng.normal(), 0.0);
    for k in 1..GRF_K_MAX {
        let amp = (grf_lambda(k as i64) / 2.0).sqrt();
        let c = Complex64::new(amp * rng.normal(), amp * rng.normal());
        spec[k] = c;
        spec[n - k] = c.conj();
    }
    // Nyquist mode must be real for a real field.
    spec[GRF_K_MAX] = Complex64::new(grf_lambda(GRF_K_MAX as i64).sqrt() * rng.normal(), 0.0);

    // Unnormalized inverse DFT: w(x_j) = sum_k spec_k e^{2 pi i k j / n}.
    let mut buf = spec.clone();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    GrfSample {
        fourier_coefficients: spec,
        realization: buf.iter().map(|c| c.re).collect(),
    }
}
