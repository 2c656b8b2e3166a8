use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::cvae::{CvaeModel, Sample};
use super::layer::Mlp;
use crate::error::Result;

pub const FD_STEP: f64 = 1e-5;

/// `|a - n| / (|a| + |n|)` over the sampled coordinates, 0 when both vanish.
fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt() + numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Compares the CVAE's analytic loss gradient with central differences on
/// `coordinates` randomly chosen parameters. The batch is `data`, with
/// reparameterization noise fixed from `seed`.
pub fn check_cvae_gradients(
    model: &CvaeModel,
    data: &[Sample],
    beta: f64,
    coordinates: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = data.len();
    let x = DMatrix::from_fn(b, model.input_dim(), |r, c| data[r].input[c]);
    let cond = DMatrix::from_fn(b, model.condition_dim(), |r, c| data[r].condition[c]);
    let eps = DMatrix::from_fn(b, model.latent_dim(), |_, _| rng.sample::<f64, _>(StandardNormal));

    let (_, grads) = model.loss_and_grads(&x, &cond, &eps, beta)?;
    let flat_grads: Vec<f64> = grads.slices().concat();
    let mut probe = model.clone();
    let mut analytic = Vec::with_capacity(coordinates);
    let mut numeric = Vec::with_capacity(coordinates);
    for _ in 0..coordinates {
        let idx = rng.random_range(0..flat_grads.len());
        let original = get_param(&mut probe, idx);
        set_param(&mut probe, idx, original + FD_STEP);
        let plus = probe.loss_and_grads(&x, &cond, &eps, beta)?.0.total;
        set_param(&mut probe, idx, original - FD_STEP);
        let minus = probe.loss_and_grads(&x, &cond, &eps, beta)?.0.total;
        set_param(&mut probe, idx, original);
        analytic.push(flat_grads[idx]);
        numeric.push((plus - minus) / (2.0 * FD_STEP));
    }
    Ok(relative_error(&analytic, &numeric))
}

fn get_param(model: &mut CvaeModel, mut idx: usize) -> f64 {
    for s in model.parameter_slices_mut() {
        if idx < s.len() {
            return s[idx];
        }
        idx -= s.len();
    }
    panic!("parameter index out of range");
}

fn set_param(model: &mut CvaeModel, mut idx: usize, value: f64) {
    for s in model.parameter_slices_mut() {
        if idx < s.len() {
            s[idx] = value;
            return;
        }
        idx -= s.len();
    }
    panic!("parameter index out of range");
}

/// Gradient check of a plain MLP under the scalar loss `sum(out * r)` for a
/// fixed random projection `r`, covering all parameters and the input.
pub fn check_mlp_gradients(mlp: &Mlp, x: &DMatrix<f64>, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = DMatrix::from_fn(x.nrows(), mlp.output_dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
    let loss = |m: &Mlp, x: &DMatrix<f64>| -> Result<f64> { Ok(m.infer(x)?.component_mul(&r).sum()) };

    let (_, cache) = mlp.forward(x)?;
    let (grads, gx) = mlp.backward(&cache, &r)?;
    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    let mut probe = mlp.clone();
    for (li, g) in grads.iter().enumerate() {
        for (pi, &ga) in g.weights.iter().chain(g.bias.iter()).enumerate() {
            let nw = g.weights.len();
            let poke = |m: &mut Mlp, delta: f64| {
                let layer = &mut m.layers_mut()[li];
                if pi < nw {
                    layer.weights.as_mut_slice()[pi] += delta;
                } else {
                    layer.bias[pi - nw] += delta;
                }
            };
            poke(&mut probe, FD_STEP);
            let plus = loss(&probe, x)?;
            poke(&mut probe, -2.0 * FD_STEP);
            let minus = loss(&probe, x)?;
            poke(&mut probe, FD_STEP);
            analytic.push(ga);
            numeric.push((plus - minus) / (2.0 * FD_STEP));
        }
    }
    for i in 0..x.len() {
        let mut xp = x.clone();
        xp.as_mut_slice()[i] += FD_STEP;
        let mut xm = x.clone();
        xm.as_mut_slice()[i] -= FD_STEP;
        analytic.push(gx.as_slice()[i]);
        numeric.push((loss(mlp, &xp)? - loss(mlp, &xm)?) / (2.0 * FD_STEP));
    }
    Ok(relative_error(&analytic, &numeric))
}
