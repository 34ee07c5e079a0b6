use super::{class_means, estimate_class_means, ClassMeans, ContrastTheta};
use crate::error::{Error, Result};
use crate::volume::VoxelVolume;

/// Continuous piecewise-linear intensity map through `(0, 0)` and three
/// class-mean control points, extrapolated linearly past both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMap {
    knots: [(f64, f64); 4],
}

impl IntensityMap {
    /// Map sending the `source` class means onto the `target` class means.
    pub fn between(source: &ClassMeans, target: &ClassMeans) -> Result<Self> {
        let s = source.as_array();
        let t = target.as_array();
        let knots = [(0.0, 0.0), (s[0], t[0]), (s[1], t[1]), (s[2], t[2])];
        if knots
            .windows(2)
            .any(|w| !(w[0].0 < w[1].0 && w[0].1 < w[1].1))
        {
            return Err(Error::NonMonotoneMap);
        }
        Ok(IntensityMap { knots })
    }

    pub fn knots(&self) -> &[(f64, f64); 4] {
        &self.knots
    }

    pub fn apply(&self, x: f64) -> f64 {
        let k = &self.knots;
        let seg = k[1..3].iter().take_while(|&&(kx, _)| x > kx).count();
        let (x0, y0) = k[seg];
        let (x1, y1) = k[seg + 1];
        let y = y0 + (x - x0) * (y1 - y0) / (x1 - x0);
        y.max(0.0)
    }
}

/// Moves `volume` to the class means of `target` using only its intensities.
pub fn harmonize(volume: &VoxelVolume, target: ContrastTheta) -> Result<VoxelVolume> {
    let target = target.require_plausible()?;
    let source = estimate_class_means(volume)?;
    let map = IntensityMap::between(&source, &class_means(target))?;
    Ok(volume.map(|v| map.apply(v as f64) as f32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contrast::{render, RenderParams, BRAIN_THRESHOLD};
    use crate::phantom::{generate_anatomy, PhantomParams};
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn means(a: f64, b: f64, c: f64) -> ClassMeans {
        ClassMeans {
            csf: a,
            gm: b,
            wm: c,
        }
    }

    #[test]
    fn passes_through_knots_and_extrapolates() {
        let m = IntensityMap::between(&means(0.1, 0.3, 0.5), &means(0.2, 0.4, 0.9)).unwrap();
        assert_eq!(m.apply(0.0), 0.0);
        assert!((m.apply(0.1) - 0.2).abs() < 1e-15);
        assert!((m.apply(0.3) - 0.4).abs() < 1e-15);
        assert!((m.apply(0.5) - 0.9).abs() < 1e-15);
        assert!((m.apply(0.4) - 0.65).abs() < 1e-15);
        // last segment slope 2.5 continues past 0.5
        assert!((m.apply(0.6) - 1.15).abs() < 1e-12);
        assert_eq!(m.apply(-1.0), 0.0);
    }

    #[test]
    fn non_monotone_control_points() {
        assert!(matches!(
            IntensityMap::between(&means(0.1, 0.3, 0.3), &means(0.2, 0.4, 0.9)),
            Err(Error::NonMonotoneMap)
        ));
        assert!(matches!(
            IntensityMap::between(&means(0.1, 0.3, 0.5), &means(0.2, 0.1, 0.9)),
            Err(Error::NonMonotoneMap)
        ));
    }

    proptest! {
        #[test]
        fn map_is_monotone(
            s in prop::array::uniform3(0.01f64..1.0),
            t in prop::array::uniform3(0.01f64..1.0),
            xs in prop::collection::vec(0.0f64..2.0, 2..50),
        ) {
            let mut s = s; s.sort_by(f64::total_cmp);
            let mut t = t; t.sort_by(f64::total_cmp);
            if let Ok(m) = IntensityMap::between(&means(s[0], s[1], s[2]), &means(t[0], t[1], t[2])) {
                let mut xs = xs;
                xs.sort_by(f64::total_cmp);
                let ys: Vec<f64> = xs.iter().map(|&x| m.apply(x)).collect();
                prop_assert!(ys.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn implausible_target_is_rejected() {
        let a = generate_anatomy(0, &PhantomParams::default()).unwrap();
        let v = render(
            &a,
            ContrastTheta::new(0.5, 0.5).unwrap(),
            &RenderParams::default(),
        )
        .unwrap();
        assert!(harmonize(&v, ContrastTheta::new(0.95, 0.05).unwrap()).is_err());
    }

    /// Mean |x − y| over voxels in either image's brain mask.
    fn brain_mad(x: &VoxelVolume, y: &VoxelVolume) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (a, b) in x.data().iter().zip(y.data()) {
            if *a > BRAIN_THRESHOLD || *b > BRAIN_THRESHOLD {
                sum += (a - b).abs() as f64;
                n += 1;
            }
        }
        sum / n as f64
    }

    fn random_plausible(rng: &mut SplitMix64) -> ContrastTheta {
        loop {
            let t = ContrastTheta::new(rng.next_f64(), rng.next_f64()).unwrap();
            if t.is_t1w_plausible() {
                return t;
            }
        }
    }

    #[test]
    fn noiseless_harmonization_matches_direct_render() {
        let a = generate_anatomy(4, &PhantomParams::default()).unwrap();
        let p = RenderParams {
            noise_sigma: 0.0,
            ..Default::default()
        };
        let mut rng = SplitMix64::new(2024);
        for _ in 0..5 {
            let (s, t) = (random_plausible(&mut rng), random_plausible(&mut rng));
            let h = harmonize(&render(&a, s, &p).unwrap(), t).unwrap();
            let direct = render(&a, t, &p).unwrap();
            let mad = brain_mad(&h, &direct);
            assert!(mad < 0.02, "{s:?} -> {t:?}: {mad}");
        }
    }

    #[test]
    fn harmonizing_to_own_contrast_is_near_identity() {
        let a = generate_anatomy(5, &PhantomParams::default()).unwrap();
        let p = RenderParams {
            noise_sigma: 0.0,
            ..Default::default()
        };
        for t in [(0.5, 0.5), (0.2, 0.8), (0.7, 0.45)] {
            let t = ContrastTheta::new(t.0, t.1).unwrap();
            let v = render(&a, t, &p).unwrap();
            let h = harmonize(&v, t).unwrap();
            assert!(brain_mad(&v, &h) < 0.02);
        }
    }
}
