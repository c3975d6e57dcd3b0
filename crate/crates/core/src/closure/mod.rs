//! Eye open/closed classification from HOG features and a linear SVM.

mod hog;
mod svm;

pub use hog::{hog_features, preprocess_eye, HogConfig, PATCH_SIDE};
pub use svm::{cross_validate, svm_objective, svm_train, svm_train_with_history, CvReport, SvmConfig, SvmModel};

use crate::{GrayImage, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EyeState {
    Open,
    Closed,
}

impl EyeState {
    pub fn label(self) -> i8 {
        match self {
            EyeState::Open => 1,
            EyeState::Closed => -1,
        }
    }
}

/// HOG descriptor of a raw eye ROI.
pub fn eye_descriptor(roi: &GrayImage, cfg: &HogConfig) -> Result<alloc::vec::Vec<f64>> {
    hog_features(&preprocess_eye(roi)?, cfg)
}

/// Classifies an eye ROI; a zero decision value counts as open.
pub fn eye_state(roi: &GrayImage, m: &SvmModel, cfg: &HogConfig) -> Result<EyeState> {
    let f = eye_descriptor(roi, cfg)?;
    Ok(if m.decision(&f)? >= 0.0 { EyeState::Open } else { EyeState::Closed })
}
