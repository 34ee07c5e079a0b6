//! The fixed ventricle parcellator.
//!
//! It is calibrated once at a training contrast and never adapts: a global
//! CSF threshold, 6-connected components, a sulcal-shell filter and a few
//! atlas rules on component centroids. Its accuracy therefore depends on the
//! contrast of the image it is given, which is exactly what the grid search
//! probes. [`segment_external`] runs any other segmenter through the same
//! file protocol.

use std::process::Command;

use crate::contrast::{class_means, ContrastTheta, BRAIN_THRESHOLD};
use crate::error::{Error, Result};
use crate::phantom::{Ellipsoid, CANONICAL_BRAIN};
use crate::volume::{
    components_of, read_volume_file, write_volume_file, LabelVolume, Parcel, Volume, VoxelVolume,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SegmenterModel {
    pub theta_train: ContrastTheta,
    /// Voxels darker than this (and inside the brain) are CSF candidates.
    pub tau_csf: f64,
    pub tau_bg: f64,
    pub min_component: usize,
    /// Components whose mean canonical radius exceeds this are sulcal CSF.
    pub rho_sulcal: f64,
    /// Centroids with normalized z at or below this are the fourth ventricle.
    pub z_fourth: f64,
    pub midline_half_width: f64,
    pub brain: Ellipsoid,
}

impl SegmenterModel {
    /// Calibrates at `theta_train`: the CSF threshold sits halfway between
    /// the training CSF and GM means.
    pub fn calibrate(theta_train: ContrastTheta) -> Result<Self> {
        if !theta_train.is_t1w_plausible() {
            return Err(Error::ImplausibleTrainingContrast(
                theta_train.theta1,
                theta_train.theta2,
            ));
        }
        let m = class_means(theta_train);
        Ok(SegmenterModel {
            theta_train,
            tau_csf: (m.csf + m.gm) / 2.0,
            tau_bg: BRAIN_THRESHOLD as f64,
            min_component: 5,
            rho_sulcal: 0.8,
            z_fourth: 0.35,
            midline_half_width: 0.06,
            brain: CANONICAL_BRAIN,
        })
    }

    fn classify(&self, centroid: [f64; 3]) -> Parcel {
        // first matching rule wins; boundary values go to the earlier rule
        if centroid[2] <= self.z_fourth {
            Parcel::Fourth
        } else if (centroid[0] - 0.5).abs() <= self.midline_half_width {
            Parcel::Third
        } else if centroid[0] <= 0.5 {
            Parcel::LeftLateral
        } else {
            Parcel::RightLateral
        }
    }

    /// Parcellates `volume`. An all-background result is valid output.
    pub fn segment(&self, volume: &VoxelVolume) -> LabelVolume {
        let g = *volume.geometry();
        let data = volume.data();
        let (tau_bg, tau_csf) = (self.tau_bg, self.tau_csf);
        let is_csf = |i: usize| {
            let v = data[i] as f64;
            v > tau_bg && v < tau_csf
        };

        let mut labels = LabelVolume::filled(g, 0);
        for comp in components_of(&g, is_csf) {
            if comp.size() < self.min_component {
                continue;
            }
            let mean_radius = comp
                .voxels
                .iter()
                .map(|&i| self.brain.radius_sq(g.normalized_coords(i)).sqrt())
                .sum::<f64>()
                / comp.size() as f64;
            if mean_radius > self.rho_sulcal {
                continue;
            }
            let code = self.classify(comp.centroid).code();
            let out = labels.labels_mut();
            for &i in &comp.voxels {
                out[i] = code;
            }
        }
        labels
    }
}

/// Runs an external segmenter. `command_template` is a shell command with
/// `{in}` (float NRRD written here) and `{out}` (uint8 NRRD expected back)
/// placeholders.
pub fn segment_external(volume: &Volume, command_template: &str) -> Result<LabelVolume> {
    if !command_template.contains("{in}") || !command_template.contains("{out}") {
        return Err(Error::InvalidParams(
            "external command template needs both {in} and {out}".into(),
        ));
    }
    let dir = tempfile::Builder::new()
        .prefix("ooclab-seg-")
        .tempdir()
        .map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let input = dir.path().join("in.nrrd");
    let output = dir.path().join("out.nrrd");
    write_volume_file(&input, volume)?;

    let command = command_template
        .replace("{in}", &shell_quote(&input.to_string_lossy()))
        .replace("{out}", &shell_quote(&output.to_string_lossy()));
    let result = Command::new("sh")
        .arg("-c")
        .arg(&command)
        .output()
        .map_err(|e| Error::ExternalFailure(format!("cannot spawn shell: {e}")))?;
    if !result.status.success() {
        return Err(Error::ExternalFailure(format!(
            "`{command}` exited with {}: {}",
            result.status,
            String::from_utf8_lossy(&result.stderr).trim()
        )));
    }

    let labels = match read_volume_file(&output) {
        Ok(v) => v.into_labels()?,
        Err(Error::Io { source, .. }) => {
            return Err(Error::Format(format!(
                "external segmenter output unreadable: {source}"
            )))
        }
        Err(e) => return Err(e),
    };
    volume.geometry().ensure_same_dims(labels.geometry())?;
    labels.validate_scheme(&Parcel::SCHEME)?;
    Ok(labels)
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}
