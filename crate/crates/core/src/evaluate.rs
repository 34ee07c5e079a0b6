//! Held-out evaluation: each test subject is imaged at its own native
//! contrast and segmented twice, once as acquired and once after
//! harmonization to the operating contrast. The paired per-subject Dice
//! values are compared with a signed-rank test per label.

use std::fmt;

use rayon::prelude::*;

use crate::contrast::{harmonize, render, t1w_plausible, ContrastTheta, RenderParams};
use crate::error::{Error, Result};
use crate::metrics::{dice_report, mean_std, DiceReport, Label};
use crate::phantom::Anatomy;
use crate::rng::{substream, SplitMix64};
use crate::segmenter::SegmenterModel;
use crate::stats::{wilcoxon_signed_rank, WilcoxonResult};
use crate::volume::VoxelVolume;

/// Rejection-samples a T1-w plausible contrast uniformly from `[0, 1]²`,
/// two uniforms (θ1 then θ2) per attempt.
pub fn sample_native_contrast(rng: &mut SplitMix64) -> ContrastTheta {
    loop {
        let theta = ContrastTheta {
            theta1: rng.next_f64(),
            theta2: rng.next_f64(),
        };
        if t1w_plausible(theta) {
            return theta;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectEvaluation {
    pub subject_seed: u64,
    pub native: ContrastTheta,
    /// Arm A: the image as acquired.
    pub original: DiceReport,
    /// Arm B: the image after contrast adjustment.
    pub adjusted: DiceReport,
}

/// Why a label has no test result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFailure {
    /// Every retained pair has identical Dice in both arms.
    DegenerateSample,
    /// No subject has a defined Dice in both arms.
    NoPairs,
}

impl fmt::Display for TestFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestFailure::DegenerateSample => "degenerate",
            TestFailure::NoPairs => "no_pairs",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelSummary {
    pub label: Label,
    pub n_pairs: usize,
    /// Subjects dropped because either arm was undefined for this label.
    pub n_dropped: usize,
    pub mean_a: Option<f64>,
    pub std_a: Option<f64>,
    pub mean_b: Option<f64>,
    pub std_b: Option<f64>,
    pub test: std::result::Result<WilcoxonResult, TestFailure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedEvaluation {
    /// Sorted by subject seed.
    pub subjects: Vec<SubjectEvaluation>,
    /// In [`Label::ALL`] order.
    pub summaries: Vec<LabelSummary>,
}

impl PairedEvaluation {
    pub fn summary(&self, label: Label) -> &LabelSummary {
        self.summaries
            .iter()
            .find(|s| s.label == label)
            .expect("every label is summarized")
    }
}

/// Seeds for subject `subject_seed`: (native contrast stream, render seed).
pub fn subject_seeds(base_seed: u64, subject_seed: u64) -> (u64, u64) {
    let native = substream(base_seed, subject_seed);
    (native, substream(native, 1))
}

/// Runs the harmonize-to-OOC protocol on `cohort`.
pub fn evaluate_ooc(
    cohort: &[Anatomy],
    model: &SegmenterModel,
    ooc: ContrastTheta,
    render_params: &RenderParams,
    base_seed: u64,
) -> Result<PairedEvaluation> {
    let ooc = ooc.require_plausible()?;
    evaluate_paired(cohort, model, render_params, base_seed, |v| {
        harmonize(v, ooc)
    })
}

/// Paired evaluation with an arbitrary intensity-only adjustment for arm B.
///
/// `adjust` sees only the rendered image, never the anatomy.
pub fn evaluate_paired<F>(
    cohort: &[Anatomy],
    model: &SegmenterModel,
    render_params: &RenderParams,
    base_seed: u64,
    adjust: F,
) -> Result<PairedEvaluation>
where
    F: Fn(&VoxelVolume) -> Result<VoxelVolume> + Sync,
{
    if cohort.is_empty() {
        return Err(Error::InvalidParams("test cohort is empty".into()));
    }
    render_params.validate()?;

    let mut subjects: Vec<SubjectEvaluation> = cohort
        .par_iter()
        .map(|anatomy| {
            let id = anatomy.subject_seed;
            let (native_seed, render_seed) = subject_seeds(base_seed, id);
            let native = sample_native_contrast(&mut SplitMix64::new(native_seed));
            let run = || -> Result<SubjectEvaluation> {
                let image = render(anatomy, native, &render_params.with_seed(render_seed))?;
                let original = dice_report(&model.segment(&image), &anatomy.truth)?;
                let adjusted_image = adjust(&image)?;
                let adjusted = dice_report(&model.segment(&adjusted_image), &anatomy.truth)?;
                Ok(SubjectEvaluation {
                    subject_seed: id,
                    native,
                    original,
                    adjusted,
                })
            };
            run().map_err(|e| e.context(format!("subject {id}")))
        })
        .collect::<Result<_>>()?;
    subjects.sort_by_key(|s| s.subject_seed);

    let summaries = Label::ALL
        .iter()
        .map(|&label| summarize(&subjects, label))
        .collect();
    Ok(PairedEvaluation {
        subjects,
        summaries,
    })
}

fn summarize(subjects: &[SubjectEvaluation], label: Label) -> LabelSummary {
    let pairs: Vec<(f64, f64)> = subjects
        .iter()
        .filter_map(|s| Some((s.original.label(label)?, s.adjusted.label(label)?)))
        .collect();
    let arm = |f: fn(&(f64, f64)) -> f64| -> (Option<f64>, Option<f64>) {
        let values: Vec<f64> = pairs.iter().map(f).collect();
        match mean_std(&values) {
            Ok((m, s)) => (Some(m), s),
            Err(_) => (None, None),
        }
    };
    let (mean_a, std_a) = arm(|p| p.0);
    let (mean_b, std_b) = arm(|p| p.1);
    let test = match wilcoxon_signed_rank(&pairs) {
        Ok(r) => Ok(r),
        Err(Error::DegenerateSample) => Err(TestFailure::DegenerateSample),
        Err(_) => Err(TestFailure::NoPairs),
    };
    LabelSummary {
        label,
        n_pairs: pairs.len(),
        n_dropped: subjects.len() - pairs.len(),
        mean_a,
        std_a,
        mean_b,
        std_b,
        test,
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"))
}

pub const REPORT_CSV_HEADER: &str = "subject,theta1,theta2,label,arm,dice";
pub const SUMMARY_CSV_HEADER: &str =
    "label,mean_a,std_a,mean_b,std_b,w_plus,p_two_sided,method,n_effective";

/// One row per (subject, label, arm); arms are `original` and `adjusted`.
pub fn export_report_csv(eval: &PairedEvaluation) -> Vec<u8> {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for s in &eval.subjects {
        for label in Label::ALL {
            for (arm, report) in [("original", &s.original), ("adjusted", &s.adjusted)] {
                out.push_str(&format!(
                    "{},{:.6},{:.6},{},{},{}\n",
                    s.subject_seed,
                    s.native.theta1,
                    s.native.theta2,
                    label.name(),
                    arm,
                    fmt_opt(report.label(label))
                ));
            }
        }
    }
    out.into_bytes()
}

/// One row per label; `a` is the original arm, `b` the adjusted arm.
pub fn export_summary_csv(eval: &PairedEvaluation) -> Vec<u8> {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for s in &eval.summaries {
        let (w, p, method, n_eff) = match &s.test {
            Ok(r) => (
                format!("{:.6}", r.w_plus),
                format!("{:.6}", r.p_two_sided),
                r.method.to_string(),
                r.n_effective,
            ),
            Err(f) => ("NA".into(), "NA".into(), f.to_string(), 0),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.label.name(),
            fmt_opt(s.mean_a),
            fmt_opt(s.std_a),
            fmt_opt(s.mean_b),
            fmt_opt(s.std_b),
            w,
            p,
            method,
            n_eff
        ));
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{generate_anatomy, PhantomParams};
    use crate::volume::Parcel;

    #[test]
    fn native_contrasts_are_plausible_and_reproducible() {
        let mut a = SplitMix64::new(12);
        let mut b = SplitMix64::new(12);
        for _ in 0..1000 {
            let t = sample_native_contrast(&mut a);
            assert!(t1w_plausible(t));
            assert_eq!(t, sample_native_contrast(&mut b));
        }
    }

    #[test]
    fn acceptance_rate() {
        // count attempts by replaying the uniform stream
        let mut rng = SplitMix64::new(2);
        let n = 10_000;
        let accepted = (0..n)
            .filter(|_| {
                let t = ContrastTheta {
                    theta1: rng.next_f64(),
                    theta2: rng.next_f64(),
                };
                t1w_plausible(t)
            })
            .count();
        let rate = accepted as f64 / n as f64;
        // plausible region is θ1 − θ2 ≤ 0.3, area 1 − 0.7²/2 = 0.755
        assert!((rate - 0.755).abs() <= 0.03, "{rate}");
        assert_eq!(accepted, 7470);
    }

    fn cohort(seeds: std::ops::Range<u64>) -> Vec<Anatomy> {
        let p = PhantomParams::default();
        seeds.map(|s| generate_anatomy(s, &p).unwrap()).collect()
    }

    #[test]
    fn identity_adjustment_is_degenerate() {
        let c = cohort(100..104);
        let m = SegmenterModel::calibrate(ContrastTheta::new(0.5, 0.5).unwrap()).unwrap();
        let e = evaluate_paired(&c, &m, &RenderParams::default(), 9, |v| Ok(v.clone())).unwrap();
        for s in &e.summaries {
            assert_eq!(s.test, Err(TestFailure::DegenerateSample), "{:?}", s.label);
            assert_eq!(s.mean_a, s.mean_b);
        }
        let summary = String::from_utf8(export_summary_csv(&e)).unwrap();
        assert_eq!(summary.lines().count(), 6);
        assert!(summary.lines().nth(5).unwrap().starts_with("whole,"));
        assert!(summary.contains(",NA,NA,degenerate,0"));
    }

    #[test]
    fn order_insensitive_and_deterministic() {
        let c = cohort(100..104);
        let m = SegmenterModel::calibrate(ContrastTheta::new(0.5, 0.5).unwrap()).unwrap();
        let ooc = ContrastTheta::new(0.6, 0.4).unwrap();
        let p = RenderParams::default();
        let e1 = evaluate_ooc(&c, &m, ooc, &p, 5).unwrap();
        let mut shuffled = c.clone();
        shuffled.reverse();
        shuffled.swap(0, 2);
        let e2 = evaluate_ooc(&shuffled, &m, ooc, &p, 5).unwrap();
        assert_eq!(e1, e2);
        assert_eq!(export_report_csv(&e1), export_report_csv(&e2));
        for s in &e1.summaries {
            assert_eq!(s.n_pairs + s.n_dropped, 4);
            if let Ok(r) = &s.test {
                assert_eq!(r.n_input, s.n_pairs);
            }
        }
        let report = String::from_utf8(export_report_csv(&e1)).unwrap();
        assert_eq!(report.lines().count(), 1 + 4 * 5 * 2);
        assert!(report.starts_with(REPORT_CSV_HEADER));
    }

    #[test]
    fn implausible_ooc_is_rejected() {
        let c = cohort(100..101);
        let m = SegmenterModel::calibrate(ContrastTheta::new(0.5, 0.5).unwrap()).unwrap();
        let bad = ContrastTheta::new(0.95, 0.05).unwrap();
        assert!(matches!(
            evaluate_ooc(&c, &m, bad, &RenderParams::default(), 0),
            Err(Error::ImplausibleContrast(..))
        ));
    }

    #[test]
    fn undefined_pairs_are_dropped() {
        let report = |d: [Option<f64>; 4]| DiceReport {
            per_parcel: d,
            whole: Some(0.5),
            mean_parcel: 0.5,
        };
        let subject = |seed, a, b| SubjectEvaluation {
            subject_seed: seed,
            native: ContrastTheta::new(0.5, 0.5).unwrap(),
            original: report(a),
            adjusted: report(b),
        };
        let subjects = vec![
            subject(
                1,
                [Some(0.4), None, Some(0.1), Some(0.2)],
                [Some(0.6), Some(0.3), Some(0.1), Some(0.2)],
            ),
            subject(
                2,
                [Some(0.5), Some(0.2), Some(0.1), Some(0.2)],
                [Some(0.7), Some(0.3), Some(0.1), None],
            ),
        ];
        let s = summarize(&subjects, Label::Parcel(Parcel::RightLateral));
        assert_eq!((s.n_pairs, s.n_dropped), (1, 1));
        assert_eq!(s.std_a, None);
        let s = summarize(&subjects, Label::Parcel(Parcel::LeftLateral));
        assert_eq!(s.n_pairs, 2);
        assert!((s.mean_b.unwrap() - 0.65).abs() < 1e-12);
        assert_eq!(s.test.unwrap().w_plus, 3.0);
    }
}
