//! Affine maps between latent and sample space and the streaming statistics
//! used to fit them.

mod adjust;
mod affine;
mod median;
mod moments;

pub use adjust::{
    default_regularization, AdaptationState, AdjustmentConfig, Centering, Scaling, TransformUpdate,
    VARIANCE_FLOOR,
};
pub use affine::{AffineMap, Linear};
pub use median::{median_of, MedianAccumulator};
pub use moments::MomentAccumulator;
