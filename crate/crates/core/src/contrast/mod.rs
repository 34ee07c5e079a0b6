//! The two-parameter contrast space and everything that moves images
//! through it.
//!
//! A contrast `θ = (θ1, θ2)` decodes affinely to CSF/GM/WM class means.
//! [`render`] turns an anatomy into an image at a given contrast;
//! [`harmonize`] moves an existing image to a target contrast using only its
//! intensities.

mod blur;
mod harmonize;
mod kmeans;

pub use blur::{gaussian_blur, gaussian_kernel, FWHM_PER_SIGMA};
pub use harmonize::{harmonize, IntensityMap};
pub use kmeans::{estimate_class_means, BRAIN_THRESHOLD, MIN_BRAIN_VOXELS};

use crate::error::{Error, Result};
use crate::phantom::{tissue, Anatomy};
use crate::rng::{substream, SplitMix64};
use crate::volume::VoxelVolume;

/// Minimum class-mean gap (WM−GM and GM−CSF) for a T1-w looking contrast.
pub const T1W_MARGIN: f64 = 0.08;
const PLAUSIBILITY_EPS: f64 = 1e-9;

/// Upper clamp of rendered intensities.
pub const MAX_INTENSITY: f64 = 1.5;

/// A point in the contrast space `[0, 1]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastTheta {
    pub theta1: f64,
    pub theta2: f64,
}

impl ContrastTheta {
    pub fn new(theta1: f64, theta2: f64) -> Result<Self> {
        for t in [theta1, theta2] {
            if !(t.is_finite() && (0.0..=1.0).contains(&t)) {
                return Err(Error::InvalidParams(format!(
                    "contrast ({theta1}, {theta2}) is outside [0, 1]²"
                )));
            }
        }
        Ok(ContrastTheta { theta1, theta2 })
    }

    pub fn is_t1w_plausible(&self) -> bool {
        t1w_plausible(*self)
    }

    pub(crate) fn require_plausible(self) -> Result<Self> {
        if self.is_t1w_plausible() {
            Ok(self)
        } else {
            Err(Error::ImplausibleContrast(self.theta1, self.theta2))
        }
    }
}

impl std::fmt::Display for ContrastTheta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.6} {:.6}", self.theta1, self.theta2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMeans {
    pub csf: f64,
    pub gm: f64,
    pub wm: f64,
}

impl ClassMeans {
    pub fn as_array(&self) -> [f64; 3] {
        [self.csf, self.gm, self.wm]
    }
}

pub fn class_means(theta: ContrastTheta) -> ClassMeans {
    ClassMeans {
        csf: 0.10 + 0.10 * theta.theta2,
        gm: 0.30 + 0.40 * theta.theta1,
        wm: 0.50 + 0.40 * theta.theta2,
    }
}

/// True when the decoded means keep the T1-w ordering WM > GM > CSF with
/// at least [`T1W_MARGIN`] between neighbours (boundary inclusive).
pub fn t1w_plausible(theta: ContrastTheta) -> bool {
    let m = class_means(theta);
    m.wm - m.gm >= T1W_MARGIN - PLAUSIBILITY_EPS && m.gm - m.csf >= T1W_MARGIN - PLAUSIBILITY_EPS
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderParams {
    pub noise_sigma: f64,
    pub blur_fwhm_vox: f64,
    pub render_seed: u64,
}

impl Default for RenderParams {
    fn default() -> Self {
        RenderParams {
            noise_sigma: 0.02,
            blur_fwhm_vox: 1.2,
            render_seed: 0,
        }
    }
}

impl RenderParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        if !(self.blur_fwhm_vox.is_finite() && self.blur_fwhm_vox >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "blur_fwhm_vox must be >= 0, got {}",
                self.blur_fwhm_vox
            )));
        }
        Ok(())
    }

    pub fn with_seed(self, render_seed: u64) -> Self {
        RenderParams {
            render_seed,
            ..self
        }
    }
}

/// Class mean of a tissue code; ventricles image as CSF.
pub fn tissue_intensity(code: u8, means: &ClassMeans) -> f64 {
    match code {
        tissue::GRAY_MATTER => means.gm,
        tissue::WHITE_MATTER => means.wm,
        tissue::SULCAL_CSF => means.csf,
        c if tissue::is_ventricle(c) => means.csf,
        _ => 0.0,
    }
}

/// Synthesizes an image of `anatomy` at contrast `theta`: class means,
/// separable Gaussian blur, additive Gaussian noise, clamp to `[0, 1.5]`.
pub fn render(
    anatomy: &Anatomy,
    theta: ContrastTheta,
    params: &RenderParams,
) -> Result<VoxelVolume> {
    params.validate()?;
    let means = class_means(theta);
    let g = *anatomy.geometry();
    let mut data: Vec<f64> = anatomy
        .tissue
        .labels()
        .iter()
        .map(|&c| tissue_intensity(c, &means))
        .collect();

    if params.blur_fwhm_vox > 0.0 {
        gaussian_blur(&mut data, g.dims, params.blur_fwhm_vox);
    }
    if params.noise_sigma > 0.0 {
        let mut rng = SplitMix64::new(substream(params.render_seed, 1));
        for v in data.iter_mut() {
            *v += params.noise_sigma * rng.normal();
        }
    }
    let data = data
        .into_iter()
        .map(|v| v.clamp(0.0, MAX_INTENSITY) as f32)
        .collect();
    VoxelVolume::new(g, data)
}
