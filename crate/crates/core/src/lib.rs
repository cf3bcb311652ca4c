//! Local Rademacher complexity (LRC) regularization for small ReLU networks.
//!
//! The crate bundles a tape-based autodiff engine, an MLP over a flat
//! parameter vector, the clipped-hinge and cross-entropy losses, the
//! sign-sampled LRC regularizers with exact enumeration oracles, a Monte-Carlo
//! lab for global and local Rademacher complexity, and an SGD trainer.
//!
//! The regularizer follows the training algorithm literally: it averages
//! `|(1/B) sum_i sigma_i m_i|` over `K` fresh sign draws. The closed-form
//! `|E_sigma[sigma_i m_i]|` is identically zero, so it is never computed.

pub mod complexity;
pub mod data;
pub mod error;
pub mod gradcheck;
pub mod losses;
pub mod lrc;
pub mod network;
pub mod rng;
pub mod tape;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
pub use rng::{Prng, Role, SignVector};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;
