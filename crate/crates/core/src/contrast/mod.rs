//! Graph view augmentation and contrastive objectives with exact gradients.

mod augment;
mod ema;
mod losses;

pub use augment::{augment_view, sample_view, AugmentSpec, ViewParts};
pub use ema::{ema_update, EmaTarget, DEFAULT_EMA_DECAY};
pub use losses::{
    loss_bootstrap, loss_info_nce, loss_joint, loss_jsd, loss_supcon, random_derangement, LossKind, LossSpec,
    LossValue, SelfKind,
};
