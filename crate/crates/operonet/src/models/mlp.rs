use crate::diffcore::Activation;

use super::ModelError;

/// Layer topology of a fully connected net: input width first, output width
/// last, activation between all layers except after the last.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpSpec {
    pub layer_widths: Vec<usize>,
    pub activation: Activation,
}

impl MlpSpec {
    pub fn new(layer_widths: Vec<usize>, activation: Activation) -> Result<Self, ModelError> {
        if layer_widths.len() < 2 {
            return Err(ModelError::Construction(format!(
                "mlp spec needs at least 2 widths, got {:?}",
                layer_widths
            )));
        }
        if layer_widths.iter().any(|&w| w == 0) {
            return Err(ModelError::Construction(format!(
                "mlp spec widths must be >= 1, got {:?}",
                layer_widths
            )));
        }
        Ok(MlpSpec {
            layer_widths,
            activation,
        })
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.layer_widths.len() - 1
    }

    /// Number of activation sites (layer boundaries with an activation).
    pub fn num_activation_sites(&self) -> usize {
        self.num_layers() - 1
    }

    /// Trainable slope count when the activation is PReLU, else 0. Slopes
    /// live outside the flat weight/bias vector so that N_theta keeps the
    /// standard closed form.
    pub fn num_slopes(&self) -> usize {
        if self.activation.is_prelu() {
            self.num_activation_sites()
        } else {
            0
        }
    }
}

/// N_theta: sum over layers of w_i * w_{i+1} + w_{i+1}.
pub fn count_params(spec: &MlpSpec) -> usize {
    spec.layer_widths
        .windows(2)
        .map(|w| w[0] * w[1] + w[1])
        .sum()
}

/// Flattened parameters of an MLP. Layout is part of the public contract:
/// for each layer in order, the (out x in) weight matrix row-major, then the
/// bias vector.
#[derive(Clone, Debug)]
pub struct MlpParams {
    pub spec: MlpSpec,
    pub flat: Vec<f64>,
}

impl MlpParams {
    pub fn new(spec: MlpSpec, flat: Vec<f64>) -> Result<Self, ModelError> {
        let expect = count_params(&spec);
        if flat.len() != expect {
            return Err(ModelError::Construction(format!(
                "flat parameter vector has length {}, spec {:?} needs {expect}",
                flat.len(),
                spec.layer_widths
            )));
        }
        Ok(MlpParams { spec, flat })
    }
}

/// Plain affine-activation chain; no activation after the final layer.
/// PReLU slopes are supplied separately (one per activation site);
/// pass `&[]` for other activations.
pub fn mlp_forward_with_slopes(
    params: &MlpParams,
    x: &[f64],
    slopes: &[f64],
) -> Result<Vec<f64>, ModelError> {
    let spec = &params.spec;
    if x.len() != spec.input_width() {
        return Err(ModelError::Dimension(format!(
            "mlp input length {} does not match spec input width {}",
            x.len(),
            spec.input_width()
        )));
    }
    if spec.activation.is_prelu() && slopes.len() != spec.num_slopes() {
        return Err(ModelError::Dimension(format!(
            "expected {} prelu slopes, got {}",
            spec.num_slopes(),
            slopes.len()
        )));
    }
    let mut h = x.to_vec();
    let mut off = 0;
    for (layer, w) in spec.layer_widths.windows(2).enumerate() {
        let (n_in, n_out) = (w[0], w[1]);
        let weights = &params.flat[off..off + n_in * n_out];
        off += n_in * n_out;
        let bias = &params.flat[off..off + n_out];
        off += n_out;
        let mut next = vec![0.0; n_out];
        for (o, out) in next.iter_mut().enumerate() {
            let row = &weights[o * n_in..(o + 1) * n_in];
            let mut acc = bias[o];
            for (wv, hv) in row.iter().zip(&h) {
                acc += wv * hv;
            }
            *out = acc;
        }
        if layer + 1 < spec.num_layers() {
            match spec.activation {
                Activation::Tanh => next.iter_mut().for_each(|v| *v = v.tanh()),
                Activation::Relu => next.iter_mut().for_each(|v| *v = v.max(0.0)),
                Activation::Prelu { .. } => {
                    let s = slopes[layer];
                    next.iter_mut().for_each(|v| {
                        if *v < 0.0 {
                            *v *= s;
                        }
                    });
                }
                Activation::Identity => {}
            }
        }
        h = next;
    }
    Ok(h)
}

pub fn mlp_forward(params: &MlpParams, x: &[f64]) -> Result<Vec<f64>, ModelError> {
    let fixed: Vec<f64> = match params.spec.activation {
        Activation::Prelu { slope } => vec![slope; params.spec.num_slopes()],
        _ => Vec::new(),
    };
    mlp_forward_with_slopes(params, x, &fixed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(widths: &[usize]) -> MlpSpec {
        MlpSpec::new(widths.to_vec(), Activation::Tanh).unwrap()
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_params(&spec(&[2, 3, 1])), 13);
        assert_eq!(count_params(&spec(&[1, 20, 20, 10, 1])), 681);
        assert_eq!(count_params(&spec(&[1, 33, 33, 33, 33, 1])), 3466);
    }

    #[test]
    fn pure_affine() {
        let p = MlpParams::new(spec(&[1, 1]), vec![2.0, 3.0]).unwrap();
        assert_eq!(mlp_forward(&p, &[1.0]).unwrap(), vec![5.0]);
    }

    #[test]
    fn zero_network() {
        let p = MlpParams::new(spec(&[2, 3, 1]), vec![0.0; 13]).unwrap();
        assert_eq!(mlp_forward(&p, &[4.2, -1.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn tanh_of_zero_input() {
        // spec [1,2,1], flat = [w1=(1,1), b1=(0,0), w2=(1,1), b2=0], x=0
        let p = MlpParams::new(spec(&[1, 2, 1]), vec![1., 1., 0., 0., 1., 1., 0.]).unwrap();
        assert_eq!(mlp_forward(&p, &[0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn input_length_checked() {
        let p = MlpParams::new(spec(&[2, 3, 1]), vec![0.0; 13]).unwrap();
        assert!(mlp_forward(&p, &[1.0]).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(MlpSpec::new(vec![3], Activation::Tanh).is_err());
        assert!(MlpSpec::new(vec![3, 0, 1], Activation::Tanh).is_err());
    }
}
