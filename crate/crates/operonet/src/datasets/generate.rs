use rayon::prelude::*;

use super::burgers::burgers_solve;
use super::cheb::{cheb_antiderivative, cheb_eval, sample_cheb_coeffs};
use super::grf::{grf_sample, GRF_GRID};
use super::{linspace, DataError, DatasetMeta, OperatorDataset};
use crate::rng::Rng;

const GENERATOR_VERSION: u32 = 1;

/// Identity operator u -> u: Chebyshev samples on 50 uniform points of
/// [-1, 1], targets equal to inputs.
pub fn gen_identity(n: usize, seed: u64) -> Result<OperatorDataset, DataError> {
    gen_identity_sensors(n, seed, 50)
}

/// Identity operator with a custom sensor count (used by the sensor-count
/// sweeps); queries coincide with sensors.
pub fn gen_identity_sensors(n: usize, seed: u64, m: usize) -> Result<OperatorDataset, DataError> {
    if m < 2 {
        return Err(DataError::Domain("identity: need at least 2 sensors".into()));
    }
    let grid = linspace(-1.0, 1.0, m);
    let mut inputs = Vec::with_capacity(n * m);
    for i in 0..n {
        let mut rng = Rng::derive(seed, i as u64);
        let c = sample_cheb_coeffs(&mut rng);
        for &x in &grid {
            inputs.push(cheb_eval(&c, x)?);
        }
    }
    let ds = OperatorDataset {
        m,
        d_x: 1,
        d_y: 1,
        n,
        q: m,
        sensor_locations: grid.clone(),
        query_points: grid,
        targets: inputs.clone(),
        inputs,
        meta: DatasetMeta {
            name: "identity".into(),
            seed,
            version: GENERATOR_VERSION,
            notes: "chebyshev deg-20 coeffs U[-1/4,1/4]".into(),
        },
    };
    ds.validate()?;
    Ok(ds)
}

/// Differentiation operator u -> du/dx: the output is a Chebyshev sample s,
/// the input is its exact antiderivative with u(-1) = 0, both on 100
/// uniform points of [-1, 1].
pub fn gen_differentiation(n: usize, seed: u64) -> Result<OperatorDataset, DataError> {
    let m = 100;
    let grid = linspace(-1.0, 1.0, m);
    let mut inputs = Vec::with_capacity(n * m);
    let mut targets = Vec::with_capacity(n * m);
    for i in 0..n {
        let mut rng = Rng::derive(seed, i as u64);
        let c = sample_cheb_coeffs(&mut rng);
        let a = cheb_antiderivative(&c);
        for &x in &grid {
            inputs.push(cheb_eval(&a, x)?);
            targets.push(cheb_eval(&c, x)?);
        }
    }
    let ds = OperatorDataset {
        m,
        d_x: 1,
        d_y: 1,
        n,
        q: m,
        sensor_locations: grid.clone(),
        query_points: grid,
        inputs,
        targets,
        meta: DatasetMeta {
            name: "differentiation".into(),
            seed,
            version: GENERATOR_VERSION,
            notes: "input = exact chebyshev antiderivative, u(-1)=0".into(),
        },
    };
    ds.validate()?;
    Ok(ds)
}

/// Advection with unit speed on the torus, t = 0.5: rectangle-pulse initial
/// conditions on a 40-point grid; the solution is an exact circular shift
/// by 20 cells.
pub fn gen_advection(n: usize, seed: u64) -> Result<OperatorDataset, DataError> {
    let m = 40;
    let shift = 20;
    let grid: Vec<f64> = (0..m).map(|j| j as f64 / m as f64).collect();
    let mut inputs = Vec::with_capacity(n * m);
    let mut targets = Vec::with_capacity(n * m);
    for i in 0..n {
        let mut rng = Rng::derive(seed, i as u64);
        let a = rng.uniform_in(0.1, 0.4);
        let omega = rng.uniform_in(0.2, 0.4);
        let h = rng.uniform_in(0.5, 1.5);
        let row: Vec<f64> = grid
            .iter()
            .map(|&x| 1.0 + if x >= a && x <= a + omega { h } else { 0.0 })
            .collect();
        for j in 0..m {
            targets.push(row[(j + m - shift) % m]);
        }
        inputs.extend(row);
    }
    let ds = OperatorDataset {
        m,
        d_x: 1,
        d_y: 1,
        n,
        q: m,
        sensor_locations: grid.clone(),
        query_points: grid,
        inputs,
        targets,
        meta: DatasetMeta {
            name: "advection".into(),
            seed,
            version: GENERATOR_VERSION,
            notes: "w0 = 1 + h*1[a,a+w], a~U[0.1,0.4], w~U[0.2,0.4], h~U[0.5,1.5]; \
                    pinned stand-in for the upstream rectangle data"
                .into(),
        },
    };
    ds.validate()?;
    Ok(ds)
}

/// Burgers solution operator w(0, .) -> w(1, .) at nu = 0.1: GRF initial
/// conditions on the 128-point torus grid, targets from the pseudo-spectral
/// solver.
pub fn gen_burgers(n: usize, seed: u64) -> Result<OperatorDataset, DataError> {
    let m = GRF_GRID;
    let grid: Vec<f64> = (0..m).map(|j| j as f64 / m as f64).collect();
    let rows: Vec<Result<(Vec<f64>, Vec<f64>), DataError>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = Rng::derive(seed, i as u64);
            let w0 = grf_sample(&mut rng).realization;
            let w1 = burgers_solve(&w0, 0.1, 1.0)?;
            Ok((w0, w1))
        })
        .collect();
    let mut inputs = Vec::with_capacity(n * m);
    let mut targets = Vec::with_capacity(n * m);
    for r in rows {
        let (w0, w1) = r?;
        inputs.extend(w0);
        targets.extend(w1);
    }
    let ds = OperatorDataset {
        m,
        d_x: 1,
        d_y: 1,
        n,
        q: m,
        sensor_locations: grid.clone(),
        query_points: grid,
        inputs,
        targets,
        meta: DatasetMeta {
            name: "burgers".into(),
            seed,
            version: GENERATOR_VERSION,
            notes: "GRF N(0, 5^4(-Lap+25I)^-2) inputs; split-step spectral solver, nu=0.1, t=1"
                .into(),
        },
    };
    ds.validate()?;
    Ok(ds)
}
