//! Dense networks with manual backpropagation, the CVAE built from them,
//! Adam, gradient checking and checkpoints.

mod adam;
mod checkpoint;
mod cvae;
mod gradcheck;
mod layer;

pub use adam::{adam_step, AdamState, DEFAULT_LEARNING_RATE};
pub use checkpoint::FORMAT_VERSION;
pub use cvae::{
    kl_standard_normal, kl_standard_normal_grad, reparameterize, train_cvae, BasisInfo, CvaeConfig, CvaeGrads,
    CvaeModel, LossParts, ModelKind, Sample, TrainConfig, TrainReport, DEFAULT_HIDDEN, DEFAULT_KL_WEIGHT,
    DEFAULT_LATENT_DIM,
};
pub use gradcheck::{check_cvae_gradients, check_mlp_gradients, FD_STEP};
pub use layer::{Activation, DenseLayer, LayerGrads, Mlp, MlpCache};
