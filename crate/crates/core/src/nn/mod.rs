//! Small feed-forward networks with manual reverse-mode gradients.

mod checkpoint;
mod gaussian;
mod mlp;

pub use checkpoint::{
    decode_head, decode_mlp, encode_head, encode_mlp, load_head, load_mlp, manifest, save_head, save_mlp,
    FORMAT_VERSION, MAGIC,
};
pub use gaussian::{
    diag_gaussian_logprob, sgd_apply, GaussianHead, GradBuffer, PolicySample, SquashKind, LOG_STD_INIT,
    LOG_STD_MAX, LOG_STD_MIN,
};
pub use mlp::{Mlp, MlpCache, MlpGrad};
