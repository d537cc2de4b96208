//! Small dense networks with hand-written reverse-mode gradients.

mod init;
mod mlp;
mod policy;
mod rmsprop;

pub use init::{orthogonal_init, orthogonal_matrix};
pub use mlp::{Activation, GradientSet, Layer, Mlp, Trace};
pub use policy::{
    PolicyArch, PolicyGrads, PolicyParams, ACTION_DIM, POLICY_FORMAT, POLICY_VERSION,
};
pub use rmsprop::RmsProp;
