use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::DataError;

/// Pseudo-spectral split-step solver for periodic viscous Burgers
/// w_t + w w_x = nu w_xx on [0, 1).
///
/// Each step advances the advection term -w w_x by forward Euler using a
/// 2/3-rule dealiased spectral derivative, then applies the diffusion
/// operator exactly in frequency space via the integrating factor
/// e^{-nu k^2 dt}. The step size obeys CFL dt max|w| / dx <= 0.2 and the
/// diffusive safeguard dt <= dx^2 / (4 nu).
pub fn burgers_solve(w0: &[f64], nu: f64, t_end: f64) -> Result<Vec<f64>, DataError> {
    if nu <= 0.0 {
        return Err(DataError::Domain(format!("viscosity must be positive, got {nu}")));
    }
    if t_end < 0.0 {
        return Err(DataError::Domain(format!("t_end must be nonnegative, got {t_end}")));
    }
    let n = w0.len();
    let dx = 1.0 / n as f64;
    let fwd = FftPlanner::new().plan_fft_forward(n);
    let inv = FftPlanner::new().plan_fft_inverse(n);
    let cutoff = n / 3; // 2/3-rule: keep |k| <= n/3

    let mut w: Vec<f64> = w0.to_vec();
    let mut t = 0.0;
    let mut step = 0;
    while t < t_end {
        let max_w = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut dt = (0.2 * dx / max_w.max(1e-12)).min(dx * dx / (4.0 * nu));
        if t + dt > t_end {
            dt = t_end - t;
        }

        // Dealiased w and w_x.
        let mut spec = to_spectrum(&w, &fwd);
        dealias(&mut spec, cutoff);
        let mut dspec = spec.clone();
        for (i, c) in dspec.iter_mut().enumerate() {
            let k = freq(i, n);
            *c *= Complex64::new(0.0, 2.0 * std::f64::consts::PI * k as f64);
        }
        let wd = from_spectrum(&spec, &inv);
        let wx = from_spectrum(&dspec, &inv);

        // Euler step on the advection term, then exact diffusion.
        for i in 0..n {
            w[i] -= dt * wd[i] * wx[i];
        }
        let mut spec = to_spectrum(&w, &fwd);
        for (i, c) in spec.iter_mut().enumerate() {
            let k = 2.0 * std::f64::consts::PI * freq(i, n) as f64;
            *c *= (-nu * k * k * dt).exp();
        }
        w = from_spectrum(&spec, &inv);

        if !w.iter().all(|v| v.is_finite()) {
            return Err(DataError::Instability {
                step,
                what: format!("non-finite field at t = {t}"),
            });
        }
        t += dt;
        step += 1;
    }
    Ok(w)
}

fn freq(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn dealias(spec: &mut [Complex64], cutoff: usize) {
    let n = spec.len();
    for (i, c) in spec.iter_mut().enumerate() {
        if freq(i, n).unsigned_abs() as usize > cutoff {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

fn to_spectrum(w: &[f64], fwd: &Arc<dyn Fft<f64>>) -> Vec<Complex64> {
    let n = w.len();
    let mut buf: Vec<Complex64> = w.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    for c in &mut buf {
        *c /= n as f64;
    }
    buf
}

fn from_spectrum(spec: &[Complex64], inv: &Arc<dyn Fft<f64>>) -> Vec<f64> {
    let mut buf = spec.to_vec();
    inv.process(&mut buf);
    buf.iter().map(|c| c.re).collect()
}
