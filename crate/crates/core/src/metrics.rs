//! Dice overlap and cohort summaries.

use crate::error::{Error, Result};
use crate::volume::{LabelVolume, Parcel};

/// `2|A∩B| / (|A| + |B|)` over voxels whose code is in `codes`;
/// `None` when both selections are empty.
pub fn dice(pred: &LabelVolume, truth: &LabelVolume, codes: &[u8]) -> Result<Option<f64>> {
    pred.geometry().ensure_same_dims(truth.geometry())?;
    let mut selected = [false; 256];
    for &c in codes {
        selected[c as usize] = true;
    }
    let (mut a, mut b, mut both) = (0usize, 0usize, 0usize);
    for (&p, &t) in pred.labels().iter().zip(truth.labels()) {
        let in_a = selected[p as usize];
        let in_b = selected[t as usize];
        a += in_a as usize;
        b += in_b as usize;
        both += (in_a && in_b) as usize;
    }
    if a + b == 0 {
        return Ok(None);
    }
    Ok(Some(2.0 * both as f64 / (a + b) as f64))
}

/// Per-parcel and whole-ventricle Dice of one parcellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiceReport {
    /// Indexed by parcel code − 1 (LLV, RLV, V3, V4).
    pub per_parcel: [Option<f64>; 4],
    pub whole: Option<f64>,
    /// Unweighted mean over the defined per-parcel entries.
    pub mean_parcel: f64,
}

impl DiceReport {
    pub fn parcel(&self, p: Parcel) -> Option<f64> {
        self.per_parcel[p.code() as usize - 1]
    }

    pub fn label(&self, label: Label) -> Option<f64> {
        match label {
            Label::Parcel(p) => self.parcel(p),
            Label::Whole => self.whole,
        }
    }

    pub fn undefined_parcels(&self) -> usize {
        self.per_parcel.iter().filter(|d| d.is_none()).count()
    }
}

/// A reported structure: one parcel or the whole ventricle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Parcel(Parcel),
    Whole,
}

impl Label {
    pub const ALL: [Label; 5] = [
        Label::Parcel(Parcel::LeftLateral),
        Label::Parcel(Parcel::RightLateral),
        Label::Parcel(Parcel::Third),
        Label::Parcel(Parcel::Fourth),
        Label::Whole,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Label::Parcel(p) => p.short_name(),
            Label::Whole => "whole",
        }
    }
}

pub fn dice_report(pred: &LabelVolume, truth: &LabelVolume) -> Result<DiceReport> {
    let mut per_parcel = [None; 4];
    for p in Parcel::ALL {
        per_parcel[p.code() as usize - 1] = dice(pred, truth, &[p.code()])?;
    }
    let whole = dice(pred, truth, &Parcel::WHOLE)?;
    let defined: Vec<f64> = per_parcel.iter().flatten().copied().collect();
    if defined.is_empty() {
        // whole is undefined too: no parcel voxels anywhere
        return Err(Error::AllUndefined);
    }
    let mean_parcel = defined.iter().sum::<f64>() / defined.len() as f64;
    Ok(DiceReport {
        per_parcel,
        whole,
        mean_parcel,
    })
}

/// Arithmetic mean and sample (n − 1) standard deviation; the deviation is
/// `None` for a single value.
pub fn mean_std(values: &[f64]) -> Result<(f64, Option<f64>)> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return Ok((mean, None));
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    Ok((mean, Some((ss / (n - 1.0)).sqrt())))
}
