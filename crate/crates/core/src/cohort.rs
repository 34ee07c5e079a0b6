//! On-disk cohorts: `sub-<seed>_tissue.nrrd` and `sub-<seed>_truth.nrrd` pairs.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::phantom::{generate_anatomy, Anatomy, PhantomParams};
use crate::volume::{read_volume_file, write_volume_file, Volume};

pub fn tissue_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("sub-{seed}_tissue.nrrd"))
}

pub fn truth_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("sub-{seed}_truth.nrrd"))
}

fn subject_seed(file_name: &str) -> Option<u64> {
    file_name
        .strip_prefix("sub-")?
        .strip_suffix("_tissue.nrrd")
        .or_else(|| file_name.strip_prefix("sub-")?.strip_suffix("_truth.nrrd"))?
        .parse()
        .ok()
}

fn subject_files(dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if let Some(seed) = entry.file_name().to_str().and_then(subject_seed) {
            out.push((seed, entry.path()));
        }
    }
    Ok(out)
}

/// Generates subjects `first_seed..first_seed + n` and writes them to `dir`,
/// replacing any subject files already there.
pub fn write_cohort(
    dir: &Path,
    first_seed: u64,
    n: usize,
    params: &PhantomParams,
) -> Result<Vec<u64>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (_, path) in subject_files(dir)? {
        fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
    }
    let seeds: Vec<u64> = (0..n as u64).map(|k| first_seed + k).collect();
    for &seed in &seeds {
        let anatomy =
            generate_anatomy(seed, params).map_err(|e| e.context(format!("subject {seed}")))?;
        write_volume_file(tissue_path(dir, seed), &Volume::Labels(anatomy.tissue))?;
        write_volume_file(truth_path(dir, seed), &Volume::Labels(anatomy.truth))?;
    }
    Ok(seeds)
}

/// Loads every subject in `dir`, ordered by seed.
///
/// The stored truth must equal the truth derived from the tissue map.
pub fn read_cohort(dir: &Path) -> Result<Vec<Anatomy>> {
    let mut seeds: Vec<u64> = subject_files(dir)?
        .into_iter()
        .map(|(seed, _)| seed)
        .collect();
    if seeds.is_empty() {
        return Err(Error::Format(format!(
            "{}: no subjects found",
            dir.display()
        )));
    }
    seeds.sort_unstable();
    seeds.dedup();
    seeds
        .into_iter()
        .map(|seed| {
            let tissue = read_volume_file(tissue_path(dir, seed))?.into_labels()?;
            let anatomy = Anatomy::from_tissue(tissue, seed)?;
            let truth_file = truth_path(dir, seed);
            let truth = read_volume_file(&truth_file)?.into_labels()?;
            if truth != anatomy.truth {
                return Err(Error::Format(format!(
                    "{}: truth does not match the tissue map",
                    truth_file.display()
                )));
            }
            Ok(anatomy)
        })
        .collect()
}
