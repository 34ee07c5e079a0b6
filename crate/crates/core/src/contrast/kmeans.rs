use super::ClassMeans;
use crate::error::{Error, Result};
use crate::volume::VoxelVolume;

/// Voxels brighter than this form the brain mask.
pub const BRAIN_THRESHOLD: f32 = 0.05;
pub const MIN_BRAIN_VOXELS: usize = 100;
const MAX_ITERATIONS: usize = 25;

fn nearest_rank(sorted: &[f64], percentile: f64) -> f64 {
    let rank = ((percentile / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Recovers CSF/GM/WM means from an image with 1D k-means (k = 3) over the
/// brain mask, initialized at the 10th/50th/90th nearest-rank percentiles.
pub fn estimate_class_means(volume: &VoxelVolume) -> Result<ClassMeans> {
    let mut values: Vec<f64> = volume
        .data()
        .iter()
        .filter(|&&v| v > BRAIN_THRESHOLD)
        .map(|&v| v as f64)
        .collect();
    if values.len() < MIN_BRAIN_VOXELS {
        return Err(Error::InsufficientForeground {
            found: values.len(),
            required: MIN_BRAIN_VOXELS,
        });
    }
    values.sort_by(f64::total_cmp);

    let mut centers = [10.0, 50.0, 90.0].map(|p| nearest_rank(&values, p));
    let mut assignment = vec![usize::MAX; values.len()];
    let mut counts = [0usize; 3];

    for _ in 0..MAX_ITERATIONS {
        // visit clusters in ascending mean so equal distances go to the lower one
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| centers[a].total_cmp(&centers[b]));

        let mut changed = false;
        let mut sums = [0.0f64; 3];
        counts = [0; 3];
        for (v, slot) in values.iter().zip(assignment.iter_mut()) {
            let mut best = order[0];
            let mut best_d = (v - centers[best]).abs();
            for &c in &order[1..] {
                let d = (v - centers[c]).abs();
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            if *slot != best {
                *slot = best;
                changed = true;
            }
            sums[best] += v;
            counts[best] += 1;
        }
        for c in 0..3 {
            if counts[c] > 0 {
                centers[c] = sums[c] / counts[c] as f64;
            }
        }
        if !changed {
            break;
        }
    }

    if counts.contains(&0) {
        return Err(Error::DegenerateClusters);
    }
    centers.sort_by(f64::total_cmp);
    if !(centers[0] < centers[1] && centers[1] < centers[2]) {
        return Err(Error::DegenerateClusters);
    }
    Ok(ClassMeans {
        csf: centers[0],
        gm: centers[1],
        wm: centers[2],
    })
}
