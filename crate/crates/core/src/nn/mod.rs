//! Small autoencoder, a matrix-valued reverse-mode tape, Adam and PCA.

pub mod activation;
pub mod adam;
pub mod mlp;
pub mod pca;
pub mod tape;

pub use activation::{gelu, gelu_prime, sigmoid};
pub use adam::Adam;
pub use mlp::{Autoencoder, Checkpoint, Dense, LayerVars, Mlp, OutputActivation};
pub use pca::{pca_fit, Pca};
pub use tape::{Gradients, Tape, Var};
