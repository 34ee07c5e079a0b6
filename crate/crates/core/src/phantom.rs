//! Procedural brain phantoms: nested tissue ellipsoids with four ventricle
//! parcels painted on top.
//!
//! A phantom's tissue map is the fixed anatomy that every contrast rendering
//! shares; its parcel map is the exact ground-truth delineation.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::volume::{Geometry, LabelVolume, Parcel};

/// Tissue codes of a phantom's tissue map.
pub mod tissue {
    pub const BACKGROUND: u8 = 0;
    pub const SULCAL_CSF: u8 = 1;
    pub const GRAY_MATTER: u8 = 2;
    pub const WHITE_MATTER: u8 = 3;
    pub const LEFT_LATERAL: u8 = 11;
    pub const RIGHT_LATERAL: u8 = 12;
    pub const THIRD: u8 = 13;
    pub const FOURTH: u8 = 14;

    pub const SCHEME: [u8; 8] = [0, 1, 2, 3, 11, 12, 13, 14];

    pub fn is_ventricle(code: u8) -> bool {
        (LEFT_LATERAL..=FOURTH).contains(&code)
    }
}

/// Gray-matter ellipsoid semi-axes as a fraction of the brain's.
pub const GM_SCALE: f64 = 0.94;
/// White-matter ellipsoid semi-axes as a fraction of the brain's.
pub const WM_SCALE: f64 = 0.78;

/// Axis-aligned ellipsoid in normalized coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipsoid {
    pub center: [f64; 3],
    pub semi_axes: [f64; 3],
}

impl Ellipsoid {
    pub const fn new(center: [f64; 3], semi_axes: [f64; 3]) -> Self {
        Ellipsoid { center, semi_axes }
    }

    /// `Σ ((u_k - c_k) / a_k)²`; the point is inside iff this is ≤ 1.
    #[inline]
    pub fn radius_sq(&self, u: [f64; 3]) -> f64 {
        (0..3)
            .map(|k| {
                let t = (u[k] - self.center[k]) / self.semi_axes[k];
                t * t
            })
            .sum()
    }

    #[inline]
    pub fn contains(&self, u: [f64; 3]) -> bool {
        self.radius_sq(u) <= 1.0
    }

    pub fn scaled(&self, factor: f64) -> Ellipsoid {
        Ellipsoid {
            center: self.center,
            semi_axes: self.semi_axes.map(|a| a * factor),
        }
    }
}

pub const CANONICAL_BRAIN: Ellipsoid = Ellipsoid::new([0.50, 0.50, 0.52], [0.38, 0.44, 0.40]);
pub const CANONICAL_LLV: Ellipsoid = Ellipsoid::new([0.35, 0.48, 0.55], [0.055, 0.16, 0.07]);
pub const CANONICAL_RLV: Ellipsoid = Ellipsoid::new([0.65, 0.48, 0.55], [0.055, 0.16, 0.07]);
pub const CANONICAL_V3: Ellipsoid = Ellipsoid::new([0.50, 0.45, 0.44], [0.02, 0.09, 0.06]);
pub const CANONICAL_V4: Ellipsoid = Ellipsoid::new([0.50, 0.38, 0.24], [0.035, 0.05, 0.05]);

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomParams {
    pub geometry: Geometry,
    pub brain: Ellipsoid,
    /// LLV, RLV, V3, V4 in that order.
    pub ventricles: [Ellipsoid; 4],
    /// Relative semi-axis jitter bound.
    pub jitter_axes: f64,
    /// Additive center jitter bound, normalized units.
    pub jitter_center: f64,
}

impl Default for PhantomParams {
    fn default() -> Self {
        PhantomParams {
            geometry: Geometry::isotropic(64),
            brain: CANONICAL_BRAIN,
            ventricles: [CANONICAL_LLV, CANONICAL_RLV, CANONICAL_V3, CANONICAL_V4],
            jitter_axes: 0.08,
            jitter_center: 0.02,
        }
    }
}

impl PhantomParams {
    pub fn validate(&self) -> Result<()> {
        for (name, j) in [
            ("jitter_axes", self.jitter_axes),
            ("jitter_center", self.jitter_center),
        ] {
            if !(j.is_finite() && j >= 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be >= 0, got {j}"
                )));
            }
        }
        if self.jitter_axes >= 1.0 {
            return Err(Error::InvalidParams("jitter_axes must be < 1".into()));
        }
        for e in std::iter::once(&self.brain).chain(self.ventricles.iter()) {
            if e.semi_axes.iter().any(|a| !(a.is_finite() && *a > 0.0))
                || e.center.iter().any(|c| !c.is_finite())
            {
                return Err(Error::InvalidParams(format!("invalid ellipsoid {e:?}")));
            }
        }
        Ok(())
    }
}

/// Ground truth for one synthetic subject.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Anatomy {
    pub tissue: LabelVolume,
    pub truth: LabelVolume,
    pub subject_seed: u64,
}

impl Anatomy {
    /// Builds an anatomy from a tissue map, deriving its parcel truth.
    pub fn from_tissue(tissue: LabelVolume, subject_seed: u64) -> Result<Self> {
        tissue.validate_scheme(&tissue::SCHEME)?;
        let truth = truth_of(&tissue);
        Ok(Anatomy {
            tissue,
            truth,
            subject_seed,
        })
    }

    pub fn geometry(&self) -> &Geometry {
        self.tissue.geometry()
    }
}

fn jitter(e: &Ellipsoid, rng: &mut SplitMix64, ja: f64, jc: f64) -> Ellipsoid {
    let mut out = *e;
    for a in out.semi_axes.iter_mut() {
        *a *= 1.0 + rng.uniform(-ja, ja);
    }
    for c in out.center.iter_mut() {
        *c += rng.uniform(-jc, jc);
    }
    out
}

/// The jittered ellipsoids of subject `subject_seed`: brain, then LLV, RLV, V3, V4.
///
/// Draw order: brain semi-axes (x, y, z), brain center (x, y, z), then each
/// ventricle's semi-axes and center in the same pattern.
pub fn subject_geometry(subject_seed: u64, params: &PhantomParams) -> (Ellipsoid, [Ellipsoid; 4]) {
    let mut rng = SplitMix64::new(subject_seed);
    let (ja, jc) = (params.jitter_axes, params.jitter_center);
    let brain = jitter(&params.brain, &mut rng, ja, jc);
    let ventricles = params.ventricles.map(|v| jitter(&v, &mut rng, ja, jc));
    (brain, ventricles)
}

pub fn generate_anatomy(subject_seed: u64, params: &PhantomParams) -> Result<Anatomy> {
    params.validate()?;
    let (brain, ventricles) = subject_geometry(subject_seed, params);
    let gm = brain.scaled(GM_SCALE);
    let wm = brain.scaled(WM_SCALE);
    let ventricle_codes = [
        tissue::LEFT_LATERAL,
        tissue::RIGHT_LATERAL,
        tissue::THIRD,
        tissue::FOURTH,
    ];

    let g = params.geometry;
    let labels = (0..g.len())
        .map(|i| {
            let u = g.normalized_coords(i);
            if !brain.contains(u) {
                return tissue::BACKGROUND;
            }
            // highest precedence first; ventricles are confined to the brain
            for (e, &code) in ventricles.iter().zip(&ventricle_codes).rev() {
                if e.contains(u) {
                    return code;
                }
            }
            if wm.contains(u) {
                tissue::WHITE_MATTER
            } else if gm.contains(u) {
                tissue::GRAY_MATTER
            } else {
                tissue::SULCAL_CSF
            }
        })
        .collect();
    let tissue_map = LabelVolume::new(g, labels)?;
    let truth = truth_of(&tissue_map);

    for p in Parcel::ALL {
        if truth.count(p.code()) == 0 {
            return Err(Error::DegeneratePhantom(format!(
                "parcel {} is empty for subject {subject_seed}",
                p.short_name()
            )));
        }
    }
    Ok(Anatomy {
        tissue: tissue_map,
        truth,
        subject_seed,
    })
}

/// Maps tissue codes 11..=14 to parcel codes 1..=4 and everything else to 0.
pub fn truth_of(tissue_map: &LabelVolume) -> LabelVolume {
    let labels = tissue_map
        .labels()
        .iter()
        .map(|&c| if tissue::is_ventricle(c) { c - 10 } else { 0 })
        .collect();
    LabelVolume::new(*tissue_map.geometry(), labels).expect("same length")
}
