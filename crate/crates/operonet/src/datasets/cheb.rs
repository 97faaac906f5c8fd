use super::DataError;
use crate::rng::Rng;

/// Number of Chebyshev coefficients per sampled function (degrees 0..19).
pub const CHEB_DEG: usize = 20;

/// Clenshaw evaluation of sum c_l T_l(x) on [-1, 1].
pub fn cheb_eval(c: &[f64], x: f64) -> Result<f64, DataError> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(DataError::Domain(format!(
            "cheb_eval: x = {x} outside [-1, 1]"
        )));
    }
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &cl in c.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + cl;
        b2 = b1;
        b1 = b0;
    }
    Ok(c.first().copied().unwrap_or(0.0) + x * b1 - b2)
}

/// Coefficients drawn i.i.d. from U[-1/4, 1/4].
pub fn sample_cheb_coeffs(rng: &mut Rng) -> [f64; CHEB_DEG] {
    let mut c = [0.0; CHEB_DEG];
    for v in &mut c {
        *v = rng.uniform_in(-0.25, 0.25);
    }
    c
}

/// Exact antiderivative in the Chebyshev basis with u(-1) = 0:
/// int T_0 = T_1, int T_1 = T_2/4, int T_l = T_{l+1}/(2(l+1)) - T_{l-1}/(2(l-1)).
pub fn cheb_antiderivative(c: &[f64; CHEB_DEG]) -> [f64; CHEB_DEG + 1] {
    let mut a = [0.0; CHEB_DEG + 1];
    a[1] += c[0];
    a[2] += c[1] / 4.0;
    for l in 2..CHEB_DEG {
        a[l + 1] += c[l] / (2.0 * (l as f64 + 1.0));
        a[l - 1] -= c[l] / (2.0 * (l as f64 - 1.0));
    }
    // T_l(-1) = (-1)^l; choose a_0 so the antiderivative vanishes at -1.
    let at_minus_one: f64 = a[1..]
        .iter()
        .enumerate()
        .map(|(i, &al)| al * if (i + 1) % 2 == 0 { 1.0 } else { -1.0 })
        .sum();
    a[0] = -at_minus_one;
    a
}
