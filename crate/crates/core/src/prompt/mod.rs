//! The learnable prompt and its optimization.

mod checkpoint;
mod context;
mod head;
mod objective;
mod optim;
mod train;

pub use checkpoint::{decode_prompt, encode_prompt, load_prompt, save_prompt, PROMPT_MAGIC, PROMPT_VERSION};
pub use context::{ContextInit, PromptContext};
pub use head::{predict, ClassifierHead, TextFeatures, DEFAULT_TEMPERATURE};
pub use objective::{
    draw_replay, loss_new, loss_new_with, loss_old, loss_old_with, loss_total, ReplayDraw, TextFeatureGrads,
};
pub use optim::{sgd_momentum_step, SgdMomentum};
pub use train::{train_session, PromptTrainConfig, PromptTrainLog, MOMENTUM, PROMPT_INIT_STD, PROMPT_LEARNING_RATE};
