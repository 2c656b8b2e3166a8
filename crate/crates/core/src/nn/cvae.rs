use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState, DEFAULT_LEARNING_RATE};
use super::layer::{hcat, Activation, LayerGrads, Mlp};
use crate::error::{Error, Result};

pub const DEFAULT_LATENT_DIM: usize = 32;
pub const DEFAULT_HIDDEN: usize = 256;
pub const DEFAULT_KL_WEIGHT: f64 = 1e-3;

/// What a CVAE checkpoint was trained for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Pose,
    Refiner,
    Mapper,
    Generic,
}

/// The basis-point set a model's condition features were computed with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisInfo {
    pub seed: u64,
    pub size: usize,
    pub cage_half_extent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvaeConfig {
    pub input_dim: usize,
    pub condition_dim: usize,
    pub latent_dim: usize,
    pub hidden: usize,
    /// Number of dense layers in the condition encoder.
    pub condition_layers: usize,
}

impl CvaeConfig {
    pub fn new(input_dim: usize, condition_dim: usize) -> Self {
        CvaeConfig {
            input_dim,
            condition_dim,
            latent_dim: DEFAULT_LATENT_DIM,
            hidden: DEFAULT_HIDDEN,
            condition_layers: 1,
        }
    }
}

/// Conditional VAE: a condition encoder feeding both a Gaussian encoder
/// (outputs `mu` then `log sigma`) and a decoder that reconstructs the
/// input from `(z, encoded condition)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CvaeModel {
    pub(crate) kind: ModelKind,
    pub(crate) condition_encoder: Mlp,
    pub(crate) encoder: Mlp,
    pub(crate) decoder: Mlp,
    pub(crate) latent_dim: usize,
    pub(crate) basis: Option<BasisInfo>,
    pub(crate) epochs_trained: usize,
}

/// Loss components of one batch, averaged over samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub reconstruction: f64,
    pub kl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvaeGrads {
    pub condition_encoder: Vec<LayerGrads>,
    pub encoder: Vec<LayerGrads>,
    pub decoder: Vec<LayerGrads>,
}

impl CvaeGrads {
    /// Flat views in the same order as [`CvaeModel::parameter_slices_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        [&self.condition_encoder, &self.encoder, &self.decoder]
            .into_iter()
            .flat_map(|g| g.iter())
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }
}

impl CvaeModel {
    pub fn new(kind: ModelKind, config: CvaeConfig, seed: u64) -> Result<Self> {
        let CvaeConfig {
            input_dim,
            condition_dim,
            latent_dim,
            hidden,
            condition_layers,
        } = config;
        if input_dim == 0 || condition_dim == 0 || latent_dim == 0 || hidden == 0 || condition_layers == 0 {
            return Err(Error::InvalidArgument("CVAE dimensions must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cond_widths = vec![condition_dim];
        cond_widths.extend(std::iter::repeat_n(hidden, condition_layers));
        let condition_encoder = Mlp::random(&cond_widths, Activation::Relu, Activation::Relu, &mut rng)?;
        let encoder = Mlp::random(
            &[input_dim + hidden, hidden, hidden, 2 * latent_dim],
            Activation::Relu,
            Activation::Identity,
            &mut rng,
        )?;
        let decoder = Mlp::random(
            &[latent_dim + hidden, hidden, hidden, input_dim],
            Activation::Relu,
            Activation::Identity,
            &mut rng,
        )?;
        Ok(CvaeModel {
            kind,
            condition_encoder,
            encoder,
            decoder,
            latent_dim,
            basis: None,
            epochs_trained: 0,
        })
    }

    pub(crate) fn from_parts(
        kind: ModelKind,
        condition_encoder: Mlp,
        encoder: Mlp,
        decoder: Mlp,
        latent_dim: usize,
        basis: Option<BasisInfo>,
        epochs_trained: usize,
    ) -> Result<Self> {
        let hidden = condition_encoder.output_dim();
        let input_dim = decoder.output_dim();
        let checks = [
            ("encoder output", 2 * latent_dim, encoder.output_dim()),
            ("encoder input", input_dim + hidden, encoder.input_dim()),
            ("decoder input", latent_dim + hidden, decoder.input_dim()),
        ];
        for (context, expected, found) in checks {
            if expected != found {
                return Err(Error::DimensionMismatch {
                    context,
                    expected,
                    found,
                });
            }
        }
        Ok(CvaeModel {
            kind,
            condition_encoder,
            encoder,
            decoder,
            latent_dim,
            basis,
            epochs_trained,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn input_dim(&self) -> usize {
        self.decoder.output_dim()
    }

    pub fn condition_dim(&self) -> usize {
        self.condition_encoder.input_dim()
    }

    pub fn hidden(&self) -> usize {
        self.condition_encoder.output_dim()
    }

    pub fn basis(&self) -> Option<&BasisInfo> {
        self.basis.as_ref()
    }

    pub fn set_basis(&mut self, basis: Option<BasisInfo>) {
        self.basis = basis;
    }

    pub fn epochs_trained(&self) -> usize {
        self.epochs_trained
    }

    pub fn condition_encoder(&self) -> &Mlp {
        &self.condition_encoder
    }

    pub fn encoder(&self) -> &Mlp {
        &self.encoder
    }

    pub fn decoder(&self) -> &Mlp {
        &self.decoder
    }

    pub fn parameter_count(&self) -> usize {
        self.condition_encoder.parameter_count() + self.encoder.parameter_count() + self.decoder.parameter_count()
    }

    /// Every parameter tensor as a flat mutable slice: condition encoder,
    /// encoder, decoder; per layer weights then bias.
    pub fn parameter_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for mlp in [&mut self.condition_encoder, &mut self.encoder, &mut self.decoder] {
            for layer in mlp.layers_mut() {
                out.push(layer.weights.as_mut_slice());
                out.push(layer.bias.as_mut_slice());
            }
        }
        out
    }

    pub fn parameter_shapes(&self) -> Vec<usize> {
        [&self.condition_encoder, &self.encoder, &self.decoder]
            .into_iter()
            .flat_map(|m| m.layers())
            .flat_map(|l| [l.weights.len(), l.bias.len()])
            .collect()
    }

    /// Encoded conditions, one row per condition row.
    pub fn encode_condition(&self, conditions: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.condition_encoder.infer(conditions)
    }

    /// Decode latents `z` against already-encoded conditions.
    pub fn decode_encoded(&self, z: &DMatrix<f64>, encoded: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if z.ncols() != self.latent_dim {
            return Err(Error::DimensionMismatch {
                context: "latent",
                expected: self.latent_dim,
                found: z.ncols(),
            });
        }
        if z.nrows() != encoded.nrows() {
            return Err(Error::DimensionMismatch {
                context: "latent batch",
                expected: encoded.nrows(),
                found: z.nrows(),
            });
        }
        self.decoder.infer(&hcat(z, encoded))
    }

    pub fn decode(&self, z: &[f64], condition: &[f64]) -> Result<Vec<f64>> {
        let c = self.encode_condition(&DMatrix::from_row_slice(1, condition.len(), condition))?;
        let out = self.decode_encoded(&DMatrix::from_row_slice(1, z.len(), z), &c)?;
        Ok(out.iter().copied().collect())
    }

    /// Posterior mean and log standard deviation for one `(input, condition)`.
    pub fn encode(&self, input: &[f64], condition: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let c = self.encode_condition(&DMatrix::from_row_slice(1, condition.len(), condition))?;
        let x = DMatrix::from_row_slice(1, input.len(), input);
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "cvae input",
                expected: self.input_dim(),
                found: x.ncols(),
            });
        }
        let e = self.encoder.infer(&hcat(&x, &c))?;
        let d = self.latent_dim;
        Ok((
            e.columns(0, d).iter().copied().collect(),
            e.columns(d, d).iter().copied().collect(),
        ))
    }

    /// Decoder output for a latent drawn from the standard normal prior.
    pub fn sample(&self, condition: &[f64], rng: &mut impl Rng) -> Result<Vec<f64>> {
        let z: Vec<f64> = (0..self.latent_dim).map(|_| rng.sample(StandardNormal)).collect();
        self.decode(&z, condition)
    }

    /// Batch loss `mean_b(|x_hat - x|^2 + beta KL)` and its exact gradients,
    /// for fixed reparameterization noise `eps` (batch x latent).
    pub fn loss_and_grads(
        &self,
        inputs: &DMatrix<f64>,
        conditions: &DMatrix<f64>,
        eps: &DMatrix<f64>,
        beta: f64,
    ) -> Result<(LossParts, CvaeGrads)> {
        let b = inputs.nrows();
        let d = self.latent_dim;
        let h = self.hidden();
        let n_in = self.input_dim();
        if inputs.ncols() != n_in {
            return Err(Error::DimensionMismatch {
                context: "cvae input",
                expected: n_in,
                found: inputs.ncols(),
            });
        }
        if conditions.nrows() != b || eps.nrows() != b || eps.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "cvae batch",
                expected: b,
                found: conditions.nrows().min(eps.nrows()),
            });
        }
        let bf = b as f64;

        let (hc, cache_c) = self.condition_encoder.forward(conditions)?;
        let (e, cache_e) = self.encoder.forward(&hcat(inputs, &hc))?;
        let mu = e.columns(0, d).into_owned();
        let log_sigma = e.columns(d, d).into_owned();
        let sigma = log_sigma.map(f64::exp);
        let z = &mu + sigma.component_mul(eps);
        let (x_hat, cache_d) = self.decoder.forward(&hcat(&z, &hc))?;

        let diff = &x_hat - inputs;
        let reconstruction = diff.norm_squared() / bf;
        let kl_sum: f64 = mu
            .iter()
            .zip(log_sigma.iter())
            .map(|(&m, &ls)| 0.5 * (m * m + (2.0 * ls).exp() - 1.0 - 2.0 * ls))
            .sum();
        let kl = kl_sum / bf;
        let parts = LossParts {
            total: reconstruction + beta * kl,
            reconstruction,
            kl,
        };

        let d_xhat = diff * (2.0 / bf);
        let (g_dec, d_dec_in) = self.decoder.backward(&cache_d, &d_xhat)?;
        let dz = d_dec_in.columns(0, d);
        let mut d_hc = d_dec_in.columns(d, h).into_owned();
        let d_mu = dz + &mu * (beta / bf);
        let mut d_ls = dz.component_mul(&sigma).component_mul(eps);
        d_ls.zip_apply(&sigma, |g, s| *g += beta * (s * s - 1.0) / bf);
        let (g_enc, d_enc_in) = self.encoder.backward(&cache_e, &hcat(&d_mu, &d_ls))?;
        d_hc += d_enc_in.columns(n_in, h);
        let (g_cond, _) = self.condition_encoder.backward(&cache_c, &d_hc)?;

        Ok((
            parts,
            CvaeGrads {
                condition_encoder: g_cond,
                encoder: g_enc,
                decoder: g_dec,
            },
        ))
    }
}

/// KL divergence of `N(mu, diag(exp(log_sigma))^2)` from the standard normal.
pub fn kl_standard_normal(mu: &[f64], log_sigma: &[f64]) -> Result<f64> {
    if mu.len() != log_sigma.len() {
        return Err(Error::DimensionMismatch {
            context: "kl",
            expected: mu.len(),
            found: log_sigma.len(),
        });
    }
    Ok(mu
        .iter()
        .zip(log_sigma)
        .map(|(&m, &ls)| 0.5 * (m * m + (2.0 * ls).exp() - 1.0 - 2.0 * ls))
        .sum())
}

/// Gradient of [`kl_standard_normal`] with respect to `mu` and `log_sigma`.
pub fn kl_standard_normal_grad(mu: &[f64], log_sigma: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d_mu = mu.to_vec();
    let d_ls = log_sigma.iter().map(|&ls| (2.0 * ls).exp() - 1.0).collect();
    (d_mu, d_ls)
}

/// `z = mu + exp(log_sigma) * eps`.
pub fn reparameterize(mu: &[f64], log_sigma: &[f64], eps: &[f64]) -> Result<Vec<f64>> {
    if mu.len() != log_sigma.len() || mu.len() != eps.len() {
        return Err(Error::DimensionMismatch {
            context: "reparameterize",
            expected: mu.len(),
            found: if log_sigma.len() != mu.len() {
                log_sigma.len()
            } else {
                eps.len()
            },
        });
    }
    Ok(mu
        .iter()
        .zip(log_sigma)
        .zip(eps)
        .map(|((&m, &ls), &e)| m + ls.exp() * e)
        .collect())
}

/// One training pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub condition: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub kl_weight: f64,
    /// Fraction of all steps over which the KL weight ramps up linearly.
    pub warmup_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 40,
            batch_size: 8,
            learning_rate: DEFAULT_LEARNING_RATE,
            kl_weight: DEFAULT_KL_WEIGHT,
            warmup_fraction: 0.1,
            seed: 0,
        }
    }
}

/// Per-epoch mean losses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub loss: Vec<f64>,
    pub reconstruction: Vec<f64>,
    pub kl: Vec<f64>,
}

/// Mini-batch Adam training. Shuffling and reparameterization noise come
/// from a ChaCha8 stream seeded by `config.seed`, so runs are reproducible.
pub fn train_cvae(mut model: CvaeModel, data: &[Sample], config: &TrainConfig) -> Result<(CvaeModel, TrainReport)> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("training dataset is empty".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    for s in data {
        if s.input.len() != model.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "training input",
                expected: model.input_dim(),
                found: s.input.len(),
            });
        }
        if s.condition.len() != model.condition_dim() {
            return Err(Error::DimensionMismatch {
                context: "training condition",
                expected: model.condition_dim(),
                found: s.condition.len(),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = AdamState::new(&model.parameter_shapes(), config.learning_rate);
    let batches_per_epoch = data.len().div_ceil(config.batch_size);
    let total_steps = config.epochs * batches_per_epoch;
    let warmup = ((total_steps as f64 * config.warmup_fraction).floor() as usize).max(1);
    let d = model.latent_dim;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut report = TrainReport::default();
    let mut step = 0usize;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let (mut sum_total, mut sum_rec, mut sum_kl) = (0.0, 0.0, 0.0);
        for (batch_idx, chunk) in order.chunks(config.batch_size).enumerate() {
            let b = chunk.len();
            let x = DMatrix::from_fn(b, model.input_dim(), |r, c| data[chunk[r]].input[c]);
            let cond = DMatrix::from_fn(b, model.condition_dim(), |r, c| data[chunk[r]].condition[c]);
            let eps = DMatrix::from_fn(b, d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let beta = config.kl_weight * ((step + 1) as f64 / warmup as f64).min(1.0);

            let (parts, grads) = model.loss_and_grads(&x, &cond, &eps, beta)?;
            if !parts.total.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, step: batch_idx });
            }
            let grad_slices = grads.slices();
            let mut params = model.parameter_slices_mut();
            adam_step(&mut params, &grad_slices, &mut adam)?;

            sum_total += parts.total * b as f64;
            sum_rec += parts.reconstruction * b as f64;
            sum_kl += parts.kl * b as f64;
            step += 1;
        }
        let n = data.len() as f64;
        report.loss.push(sum_total / n);
        report.reconstruction.push(sum_rec / n);
        report.kl.push(sum_kl / n);
        log::debug!("epoch {epoch}: loss {:.6}", sum_total / n);
    }
    model.epochs_trained += config.epochs;
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kl_closed_forms() {
        assert_eq!(kl_standard_normal(&[0.0; 7], &[0.0; 7]).unwrap(), 0.0);
        let kl = kl_standard_normal(&[1.0; 32], &[0.0; 32]).unwrap();
        assert!((kl - 16.0).abs() < 1e-12);
    }

    #[test]
    fn kl_gradient_matches_finite_differences() {
        let mu = [0.3, -1.1, 0.8];
        let ls = [0.2, -0.5, 0.0];
        let (gm, gl) = kl_standard_normal_grad(&mu, &ls);
        let analytic: Vec<f64> = gm.iter().chain(&gl).copied().collect();
        let h = 1e-6;
        let mut numeric = Vec::new();
        for which in 0..2 {
            for i in 0..3 {
                let (mut a, mut b) = ([mu, ls], [mu, ls]);
                a[which][i] += h;
                b[which][i] -= h;
                let f = |p: [[f64; 3]; 2]| kl_standard_normal(&p[0], &p[1]).unwrap();
                numeric.push((f(a) - f(b)) / (2.0 * h));
            }
        }
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, n)| (a - n).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(diff / scale < 1e-6);
    }

    #[test]
    fn reparameterize_examples() {
        assert_eq!(
            reparameterize(&[1.0, 2.0], &[0.5, 0.1], &[0.0, 0.0]).unwrap(),
            vec![1.0, 2.0]
        );
        assert_eq!(
            reparameterize(&[0.0, 0.0], &[0.0, 0.0], &[0.3, -0.7]).unwrap(),
            vec![0.3, -0.7]
        );
        let z = reparameterize(&[1.0, 2.0], &[0.0, 2f64.ln()], &[1.0, 1.0]).unwrap();
        assert_eq!(z[0], 2.0);
        assert!((z[1] - 4.0).abs() < 1e-15);
    }

    #[test]
    fn model_shapes() {
        let m = CvaeModel::new(ModelKind::Generic, CvaeConfig::new(6, 3), 1).unwrap();
        assert_eq!(m.encoder().output_dim(), 2 * DEFAULT_LATENT_DIM);
        assert_eq!(m.latent_dim(), 32);
        assert_eq!(m.decode(&[0.0; 32], &[1.0, 0.0, 0.0]).unwrap().len(), 6);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let m = CvaeModel::new(ModelKind::Generic, CvaeConfig::new(2, 1), 1).unwrap();
        assert!(train_cvae(m, &[], &TrainConfig::default()).is_err());
    }
}
