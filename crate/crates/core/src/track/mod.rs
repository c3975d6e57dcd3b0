//! Temporal tracking of the iris centre and eye corners.

mod kalman;
mod template;

pub use kalman::{
    estimate_measurement_noise, kf_predict, kf_update, observation, transition, KfConfig, KfState, KfUpdate,
};
pub use template::{
    ncc_score, track_template, CornerTemplate, TrackOutcome, DEFAULT_NCC_THRESHOLD, DEFAULT_PATCH_SIDE,
    DEFAULT_SEARCH_RADIUS,
};

use crate::closure::EyeState;
use crate::refine::FitResult;
use crate::{Error, Point2, Result};

/// One filter step: always predicts, and corrects only with an accepted
/// detection on an open eye. Returns the posterior and its position.
pub fn ic_tracker_step(s: &KfState, detection: Option<&FitResult>, eye_state: EyeState) -> (KfState, Point2) {
    let predicted = kf_predict(s);
    let state = match detection {
        Some(d) if d.accepted && eye_state == EyeState::Open => kf_update(&predicted, d.ellipse.centre).state,
        _ => predicted,
    };
    (state, state.position())
}

/// Iris-centre tracker that initializes itself from the first accepted detection.
#[derive(Debug, Clone, PartialEq)]
pub struct IrisTracker {
    pub config: KfConfig,
    state: Option<KfState>,
}

impl IrisTracker {
    pub fn new(config: KfConfig) -> Self {
        Self { config, state: None }
    }

    pub fn state(&self) -> Option<&KfState> {
        self.state.as_ref()
    }

    pub fn is_initialized(&self) -> bool {
        self.state.is_some()
    }

    pub fn reset(&mut self) {
        self.state = None;
    }

    /// Advances one frame. Before initialization an accepted open-eye
    /// detection seeds the filter; anything else is an error.
    pub fn step(&mut self, detection: Option<&FitResult>, eye_state: EyeState) -> Result<Point2> {
        match self.state {
            Some(s) => {
                let (next, pos) = ic_tracker_step(&s, detection, eye_state);
                self.state = Some(next);
                Ok(pos)
            }
            None => match detection {
                Some(d) if d.accepted && eye_state == EyeState::Open => {
                    self.state = Some(KfState::at_position(d.ellipse.centre, &self.config));
                    Ok(d.ellipse.centre)
                }
                _ => Err(Error::Uninitialized),
            },
        }
    }
}
