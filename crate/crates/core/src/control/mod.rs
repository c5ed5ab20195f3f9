//! Operator-side building blocks: subscriber management and warning presets.

pub mod presets;
pub mod subscribers;

pub use presets::{PresetMode, PresetPlan, WarningPreset};
pub use subscribers::{SubscriberEntry, SubscriberError, SubscriberStore};
