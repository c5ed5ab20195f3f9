use serde::{Deserialize, Serialize};

use super::{AlertDisplayEvent, UeError};
use crate::content::SpanKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetApp {
    Browser,
    Mail,
    Dialer,
    Maps,
}

impl From<SpanKind> for TargetApp {
    fn from(kind: SpanKind) -> Self {
        match kind {
            SpanKind::WebUrl => Self::Browser,
            SpanKind::Email => Self::Mail,
            SpanKind::Phone => Self::Dialer,
            SpanKind::MapAddress => Self::Maps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", content = "target")]
pub enum InteractionStep {
    UnlockPrompt,
    Unlocked,
    OpenTarget(TargetApp),
}

/// What the handset does when the user taps a span of a displayed alert.
/// A locked device asks for an unlock and then opens the target directly;
/// there is never a separate confirmation step.
pub fn interact_with_alert(
    event: &AlertDisplayEvent,
    span_index: usize,
    locked: bool,
) -> Result<Vec<InteractionStep>, UeError> {
    let span = event.spans.get(span_index).ok_or(UeError::InvalidSpan {
        index: span_index,
        spans: event.spans.len(),
    })?;
    let open = InteractionStep::OpenTarget(span.kind.into());
    Ok(if locked {
        vec![InteractionStep::UnlockPrompt, InteractionStep::Unlocked, open]
    } else {
        vec![open]
    })
}
