use crate::diffcore::Activation;

use super::mlp::{count_params, MlpSpec};
use super::operator::{ModelKind, OperatorModel};
use super::ModelError;

/// Rebuild a DeepONet as a HyperDeepONet with identical outputs.
///
/// The target net is the trunk extended by a scalar output layer whose
/// weights are the branch outputs and whose bias is tau0. The hypernetwork
/// reuses the branch's layers; its final affine layer is the branch's final
/// layer composed with a 0/1 selection matrix, so every generated value is
/// either a verbatim copy of a trunk/branch parameter or an exact constant
/// — the construction is exact in floating point, not just analytically.
pub fn embed_deeponet_as_hyper(d: &OperatorModel) -> Result<OperatorModel, ModelError> {
    if d.kind() != ModelKind::DeepONet {
        return Err(ModelError::Construction(format!(
            "embedding requires a deeponet, got {}",
            d.kind().name()
        )));
    }
    let branch = d.branch_spec().clone();
    let trunk = d.target_spec().clone();
    if matches!(trunk.activation, Activation::Prelu { .. }) {
        return Err(ModelError::Construction(
            "cannot embed a PReLU trunk exactly: generated targets use fixed slopes".into(),
        ));
    }
    let p = trunk.output_width();

    let mut target_widths = trunk.layer_widths.clone();
    target_widths.push(1);
    let target = MlpSpec::new(target_widths, trunk.activation)?;
    let n_theta = count_params(&target);
    let n_trunk = count_params(&trunk);

    // Hyper widths: branch with its output layer widened from p to N_theta.
    let mut hyper_widths = branch.layer_widths.clone();
    *hyper_widths.last_mut().unwrap() = n_theta;
    let hyper = MlpSpec::new(hyper_widths, branch.activation)?;

    let mut model = OperatorModel::make_hyper_deeponet(d.sensor_count(), hyper, target)?;

    let src_branch = d.block("branch").unwrap().clone();
    let dst_hyper = model.block("hyper").unwrap().clone();
    let bp = &d.params[src_branch.offset..src_branch.offset + src_branch.len];

    // Copy all branch layers except the last verbatim.
    let w_prev = branch.layer_widths[branch.layer_widths.len() - 2];
    let head_len = src_branch.len - (w_prev * p + p);
    let dst = &mut model.params[dst_hyper.offset..dst_hyper.offset + dst_hyper.len];
    dst[..head_len].copy_from_slice(&bp[..head_len]);

    // Final hyper layer: N_theta x w_prev weights then N_theta biases.
    // Generated-theta index t corresponds to:
    //   t < n_trunk             -> constant trunk parameter (bias only)
    //   n_trunk <= t < n_trunk+p -> beta_j: copy branch final-layer row j
    //   t = n_trunk + p          -> constant tau0 (bias only)
    let last_w = &mut dst[head_len..];
    let (w_new, b_new) = last_w.split_at_mut(n_theta * w_prev);
    let branch_last_w = &bp[head_len..head_len + p * w_prev];
    let branch_last_b = &bp[head_len + p * w_prev..];
    let trunk_block = d.block("trunk").unwrap();
    let trunk_params = &d.params[trunk_block.offset..trunk_block.offset + n_trunk];
    let tau0 = d.params[d.block("tau0").unwrap().offset];
    for t in 0..n_theta {
        if t < n_trunk {
            b_new[t] = trunk_params[t];
        } else if t < n_trunk + p {
            let j = t - n_trunk;
            w_new[t * w_prev..(t + 1) * w_prev]
                .copy_from_slice(&branch_last_w[j * w_prev..(j + 1) * w_prev]);
            b_new[t] = branch_last_b[j];
        } else {
            b_new[t] = tau0;
        }
    }

    // PReLU branch slopes carry over unchanged (same activation sites).
    if let (Some(src), Some(dst_blk)) = (
        d.block("branch_slopes").map(|b| b.clone()),
        model.block("hyper_slopes").map(|b| b.clone()),
    ) {
        let vals = d.params[src.offset..src.offset + src.len].to_vec();
        model.params[dst_blk.offset..dst_blk.offset + dst_blk.len].copy_from_slice(&vals);
    }

    Ok(model)
}
