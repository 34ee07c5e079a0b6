//! 3D voxel grids shared by every stage of the pipeline.
//!
//! Voxels are stored x-fastest: `index = x + nx * (y + ny * z)`. There is no
//! physical orientation metadata; all geometry is expressed in index
//! coordinates or in normalized coordinates `u = x / (nx - 1)`.

mod components;
mod nrrd;

pub use components::{components_of, connected_components, Component};
pub use nrrd::{read_volume, read_volume_file, write_volume, write_volume_file, Volume};

use crate::error::{Error, Result};

/// Grid extent and voxel spacing (mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
}

// Spacings are validated finite, so equality is total.
impl Eq for Geometry {}

impl Geometry {
    pub fn new(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidParams(format!(
                "dims must be positive, got {dims:?}"
            )));
        }
        if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidParams(format!(
                "spacing must be finite and positive, got {spacing:?}"
            )));
        }
        dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .ok_or_else(|| Error::InvalidParams(format!("dims {dims:?} overflow")))?;
        Ok(Geometry { dims, spacing })
    }

    pub fn isotropic(n: usize) -> Self {
        Geometry::new([n, n, n], [1.0; 3]).expect("positive isotropic grid")
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    /// Normalized position of a voxel coordinate along `axis`; singleton axes map to 0.5.
    #[inline]
    pub fn normalized(&self, axis: usize, c: usize) -> f64 {
        let n = self.dims[axis];
        if n <= 1 {
            0.5
        } else {
            c as f64 / (n - 1) as f64
        }
    }

    pub fn normalized_coords(&self, index: usize) -> [f64; 3] {
        let c = self.coords(index);
        [
            self.normalized(0, c[0]),
            self.normalized(1, c[1]),
            self.normalized(2, c[2]),
        ]
    }

    pub(crate) fn ensure_same_dims(&self, other: &Geometry) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::ShapeMismatch {
                left: self.dims,
                right: other.dims,
            });
        }
        Ok(())
    }
}

/// Scalar intensity volume.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelVolume {
    geometry: Geometry,
    data: Vec<f32>,
}

impl VoxelVolume {
    pub fn new(geometry: Geometry, data: Vec<f32>) -> Result<Self> {
        if data.len() != geometry.len() {
            return Err(Error::InvalidParams(format!(
                "expected {} voxels, got {}",
                geometry.len(),
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "non-finite intensity at voxel {i}"
            )));
        }
        Ok(VoxelVolume { geometry, data })
    }

    pub fn filled(geometry: Geometry, value: f32) -> Self {
        VoxelVolume {
            data: vec![value; geometry.len()],
            geometry,
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geometry.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[self.geometry.index(x, y, z)]
    }

    /// Applies `f` voxelwise; non-finite results are replaced by 0.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> VoxelVolume {
        let data = self
            .data
            .iter()
            .map(|&v| {
                let out = f(v);
                if out.is_finite() {
                    out
                } else {
                    0.0
                }
            })
            .collect();
        VoxelVolume {
            geometry: self.geometry,
            data,
        }
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }
}

/// Categorical volume, one `u8` code per voxel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVolume {
    geometry: Geometry,
    labels: Vec<u8>,
}

impl LabelVolume {
    pub fn new(geometry: Geometry, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != geometry.len() {
            return Err(Error::InvalidParams(format!(
                "expected {} voxels, got {}",
                geometry.len(),
                labels.len()
            )));
        }
        Ok(LabelVolume { geometry, labels })
    }

    pub fn filled(geometry: Geometry, code: u8) -> Self {
        LabelVolume {
            labels: vec![code; geometry.len()],
            geometry,
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geometry.dims
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [u8] {
        &mut self.labels
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> u8 {
        self.labels[self.geometry.index(x, y, z)]
    }

    pub fn count(&self, code: u8) -> usize {
        self.labels.iter().filter(|&&c| c == code).count()
    }

    /// Fails with [`Error::LabelRange`] on the first code not in `scheme`.
    pub fn validate_scheme(&self, scheme: &[u8]) -> Result<()> {
        let mut allowed = [false; 256];
        for &c in scheme {
            allowed[c as usize] = true;
        }
        match self.labels.iter().find(|&&c| !allowed[c as usize]) {
            Some(&code) => Err(Error::LabelRange { code }),
            None => Ok(()),
        }
    }

    pub fn into_labels(self) -> Vec<u8> {
        self.labels
    }
}

/// Ventricle parcel codes of a parcellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Parcel {
    LeftLateral = 1,
    RightLateral = 2,
    Third = 3,
    Fourth = 4,
}

impl Parcel {
    pub const ALL: [Parcel; 4] = [
        Parcel::LeftLateral,
        Parcel::RightLateral,
        Parcel::Third,
        Parcel::Fourth,
    ];

    /// Valid codes of a parcellation, background included.
    pub const SCHEME: [u8; 5] = [0, 1, 2, 3, 4];

    /// Codes whose union forms the whole ventricle.
    pub const WHOLE: [u8; 4] = [1, 2, 3, 4];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Parcel> {
        match code {
            1 => Some(Parcel::LeftLateral),
            2 => Some(Parcel::RightLateral),
            3 => Some(Parcel::Third),
            4 => Some(Parcel::Fourth),
            _ => None,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Parcel::LeftLateral => "LLV",
            Parcel::RightLateral => "RLV",
            Parcel::Third => "V3",
            Parcel::Fourth => "V4",
        }
    }
}
