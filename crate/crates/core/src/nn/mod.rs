//! Minimal differentiable network core.

mod layer;
mod loss;
mod optim;
mod pair;
mod sequential;

pub use layer::{ForwardCache, Layer, LayerKind};
pub use loss::{softmax_cross_entropy, softmax_rows};
pub use optim::SgdMomentum;
pub use pair::{gumbel, gumbel_softmax_pair, pair_sensitivity, softmax_pair, GumbelDraw, GUMBEL_EPS};
pub use sequential::{Sequential, SequentialCache};
