//! Grid search over the contrast space for the optimal operating contrast.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::contrast::{render, t1w_plausible, ContrastTheta, RenderParams};
use crate::error::{Error, Result};
use crate::metrics::{dice_report, mean_std, DiceReport};
use crate::phantom::Anatomy;
use crate::rng::substream;
use crate::segmenter::SegmenterModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub i: usize,
    pub j: usize,
    pub theta: ContrastTheta,
    pub plausible: bool,
}

/// Regular grid of cell centers over `[lo1, hi1] × [lo2, hi2]`. Cells are
/// stored i-major: `index = i · R2 + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastGrid {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub resolution: [usize; 2],
    pub cells: Vec<GridCell>,
}

impl ContrastGrid {
    pub fn new(lo: [f64; 2], hi: [f64; 2], resolution: [usize; 2]) -> Result<Self> {
        if resolution.contains(&0) {
            return Err(Error::InvalidGrid(format!(
                "resolution must be >= 1, got {resolution:?}"
            )));
        }
        for k in 0..2 {
            if !(lo[k].is_finite() && hi[k].is_finite() && lo[k] < hi[k]) {
                return Err(Error::InvalidGrid(format!(
                    "axis {} bounds [{}, {}] are degenerate",
                    k + 1,
                    lo[k],
                    hi[k]
                )));
            }
            if lo[k] < 0.0 || hi[k] > 1.0 {
                return Err(Error::InvalidGrid(format!(
                    "axis {} bounds [{}, {}] leave [0, 1]",
                    k + 1,
                    lo[k],
                    hi[k]
                )));
            }
        }
        let center =
            |k: usize, c: usize| lo[k] + (c as f64 + 0.5) * (hi[k] - lo[k]) / resolution[k] as f64;
        let mut cells = Vec::with_capacity(resolution[0] * resolution[1]);
        for i in 0..resolution[0] {
            for j in 0..resolution[1] {
                let theta = ContrastTheta::new(center(0, i), center(1, j))?;
                cells.push(GridCell {
                    i,
                    j,
                    theta,
                    plausible: t1w_plausible(theta),
                });
            }
        }
        Ok(ContrastGrid {
            lo,
            hi,
            resolution,
            cells,
        })
    }

    /// The default 10 × 10 grid over `[0, 1]²`.
    pub fn unit(resolution: [usize; 2]) -> Result<Self> {
        ContrastGrid::new([0.0, 0.0], [1.0, 1.0], resolution)
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        i * self.resolution[1] + j
    }

    pub fn plausible_count(&self) -> usize {
        self.cells.iter().filter(|c| c.plausible).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub subject_seed: u64,
    pub report: DiceReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellScore {
    pub cell: GridCell,
    /// Mean over subjects of each subject's mean parcel Dice; `None` for rejected cells.
    pub mean_dice: Option<f64>,
    pub std_dice: Option<f64>,
    pub n_subjects: usize,
    pub records: Vec<SubjectRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapResult {
    pub grid: ContrastGrid,
    pub scores: Vec<CellScore>,
    pub ooc: ContrastTheta,
    pub ooc_cell: (usize, usize),
}

/// Seed for rendering subject `subject_index` at cell `cell_index`.
pub fn cell_render_seed(
    base_seed: u64,
    grid: &ContrastGrid,
    subject_index: usize,
    cell_index: usize,
) -> u64 {
    let n_cells = (grid.resolution[0] * grid.resolution[1]) as u64;
    substream(
        base_seed,
        subject_index as u64 * n_cells + cell_index as u64,
    )
}

/// Renders every subject at every plausible cell, segments with the fixed
/// model and scores against the truth. Rejected cells are never rendered.
///
/// Work is spread over the current rayon pool; the result does not depend
/// on the number of workers.
pub fn grid_search(
    cohort: &[Anatomy],
    model: &SegmenterModel,
    grid: &ContrastGrid,
    render_params: &RenderParams,
    base_seed: u64,
) -> Result<HeatmapResult> {
    if cohort.is_empty() {
        return Err(Error::InvalidParams("tuning cohort is empty".into()));
    }
    if grid.plausible_count() == 0 {
        return Err(Error::NoPlausibleCells);
    }
    render_params.validate()?;

    let tasks: Vec<(usize, usize)> = grid
        .cells
        .iter()
        .enumerate()
        .filter(|(_, c)| c.plausible)
        .flat_map(|(ci, _)| (0..cohort.len()).map(move |s| (ci, s)))
        .collect();

    let reports: Vec<DiceReport> = tasks
        .par_iter()
        .map(|&(ci, s)| {
            let cell = &grid.cells[ci];
            let params = render_params.with_seed(cell_render_seed(base_seed, grid, s, ci));
            let anatomy = &cohort[s];
            render(anatomy, cell.theta, &params)
                .and_then(|v| dice_report(&model.segment(&v), &anatomy.truth))
                .map_err(|e| {
                    e.context(format!(
                        "cell ({}, {}) subject {}",
                        cell.i, cell.j, anatomy.subject_seed
                    ))
                })
        })
        .collect::<Result<_>>()?;

    let mut reports = reports.into_iter();
    let mut scores = Vec::with_capacity(grid.cells.len());
    for cell in &grid.cells {
        if !cell.plausible {
            scores.push(CellScore {
                cell: *cell,
                mean_dice: None,
                std_dice: None,
                n_subjects: 0,
                records: Vec::new(),
            });
            continue;
        }
        let records: Vec<SubjectRecord> = cohort
            .iter()
            .map(|a| SubjectRecord {
                subject_seed: a.subject_seed,
                report: reports.next().expect("one report per task"),
            })
            .collect();
        let values: Vec<f64> = records.iter().map(|r| r.report.mean_parcel).collect();
        let (mean, std) = mean_std(&values)?;
        scores.push(CellScore {
            cell: *cell,
            mean_dice: Some(mean),
            std_dice: std,
            n_subjects: records.len(),
            records,
        });
    }

    let best = select_ooc(&scores).ok_or(Error::NoPlausibleCells)?;
    let cell = scores[best].cell;
    Ok(HeatmapResult {
        grid: grid.clone(),
        scores,
        ooc: cell.theta,
        ooc_cell: (cell.i, cell.j),
    })
}

/// Index of the highest-scoring cell; ties go to the earliest in (i, j) order.
pub fn select_ooc(scores: &[CellScore]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, s) in scores.iter().enumerate() {
        if let Some(d) = s.mean_dice {
            if best.is_none_or(|(_, b)| d > b) {
                best = Some((k, d));
            }
        }
    }
    best.map(|(k, _)| k)
}

/// One row of the exported heatmap.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapRow {
    pub i: usize,
    pub j: usize,
    pub theta1: f64,
    pub theta2: f64,
    pub plausible: bool,
    pub mean_dice: Option<f64>,
    pub std_dice: Option<f64>,
    pub n_subjects: usize,
}

/// The per-cell summary of a heatmap, as stored in `heatmap.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapTable {
    pub resolution: [usize; 2],
    pub rows: Vec<HeatmapRow>,
}

pub const HEATMAP_CSV_HEADER: &str = "i,j,theta1,theta2,plausible,mean_dice,std_dice,n_subjects";

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"))
}

impl HeatmapResult {
    pub fn table(&self) -> HeatmapTable {
        HeatmapTable {
            resolution: self.grid.resolution,
            rows: self
                .scores
                .iter()
                .map(|s| HeatmapRow {
                    i: s.cell.i,
                    j: s.cell.j,
                    theta1: s.cell.theta.theta1,
                    theta2: s.cell.theta.theta2,
                    plausible: s.cell.plausible,
                    mean_dice: s.mean_dice,
                    std_dice: s.std_dice,
                    n_subjects: s.n_subjects,
                })
                .collect(),
        }
    }

    pub fn score(&self, i: usize, j: usize) -> &CellScore {
        &self.scores[self.grid.cell_index(i, j)]
    }
}

impl HeatmapTable {
    pub fn to_csv(&self) -> Vec<u8> {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(HEATMAP_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let (mean, std) = if r.plausible {
                (fmt_opt(r.mean_dice), fmt_opt(r.std_dice))
            } else {
                ("NA".into(), "NA".into())
            };
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{},{},{},{}\n",
                r.i, r.j, r.theta1, r.theta2, r.plausible as u8, mean, std, r.n_subjects
            ));
        }
        out.into_bytes()
    }

    /// Binary PGM: column `i`, row `R2 − 1 − j` (θ2 grows upward); rejected
    /// cells are 0, scored cells span 1..=255 linearly between the extremes.
    pub fn to_pgm(&self) -> Result<Vec<u8>> {
        let [r1, r2] = self.resolution;
        let scored: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.plausible)
            .filter_map(|r| r.mean_dice)
            .collect();
        if scored.is_empty() {
            return Err(Error::NoPlausibleCells);
        }
        let min = scored.iter().copied().fold(f64::INFINITY, f64::min);
        let max = scored.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        let mut pixels = vec![0u8; r1 * r2];
        for r in &self.rows {
            let Some(d) = r.mean_dice.filter(|_| r.plausible) else {
                continue;
            };
            let level = if max > min {
                1.0 + (254.0 * (d - min) / (max - min)).round()
            } else {
                255.0
            };
            let row = r2 - 1 - r.j;
            pixels[row * r1 + r.i] = level as u8;
        }
        let mut out = format!("P5\n{r1} {r2}\n255\n").into_bytes();
        out.extend_from_slice(&pixels);
        Ok(out)
    }
}

pub fn export_heatmap_csv(result: &HeatmapResult) -> Vec<u8> {
    result.table().to_csv()
}

pub fn export_heatmap_pgm(result: &HeatmapResult) -> Result<Vec<u8>> {
    result.table().to_pgm()
}

pub const RECORDS_CSV_HEADER: &str = "i,j,subject,LLV,RLV,V3,V4,whole,mean_parcel";

/// Per-subject Dice records of every scored cell, so alternative scores can
/// be recomputed without re-rendering.
pub fn export_records_csv(result: &HeatmapResult) -> Vec<u8> {
    let mut out = String::from(RECORDS_CSV_HEADER);
    out.push('\n');
    for score in &result.scores {
        for rec in &score.records {
            let r = &rec.report;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{:.6}",
                score.cell.i,
                score.cell.j,
                rec.subject_seed,
                fmt_opt(r.per_parcel[0]),
                fmt_opt(r.per_parcel[1]),
                fmt_opt(r.per_parcel[2]),
                fmt_opt(r.per_parcel[3]),
                fmt_opt(r.whole),
                r.mean_parcel
            );
        }
    }
    out.into_bytes()
}

fn parse_field<T: std::str::FromStr>(line_no: usize, name: &str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Format(format!("heatmap line {line_no}: bad {name} '{s}'")))
}

fn parse_opt(line_no: usize, name: &str, s: &str) -> Result<Option<f64>> {
    if s == "NA" {
        Ok(None)
    } else {
        parse_field(line_no, name, s).map(Some)
    }
}

/// Parses a heatmap CSV written by [`HeatmapTable::to_csv`].
pub fn read_heatmap_csv(bytes: &[u8]) -> Result<HeatmapTable> {
    let text =
        std::str::from_utf8(bytes).map_err(|_| Error::Format("heatmap is not UTF-8".into()))?;
    let mut lines = text.lines();
    if lines.next() != Some(HEATMAP_CSV_HEADER) {
        return Err(Error::Format("unexpected heatmap header".into()));
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let line_no = k + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(Error::Format(format!(
                "heatmap line {line_no}: expected 8 fields"
            )));
        }
        rows.push(HeatmapRow {
            i: parse_field(line_no, "i", f[0])?,
            j: parse_field(line_no, "j", f[1])?,
            theta1: parse_field(line_no, "theta1", f[2])?,
            theta2: parse_field(line_no, "theta2", f[3])?,
            plausible: parse_field::<u8>(line_no, "plausible", f[4])? == 1,
            mean_dice: parse_opt(line_no, "mean_dice", f[5])?,
            std_dice: parse_opt(line_no, "std_dice", f[6])?,
            n_subjects: parse_field(line_no, "n_subjects", f[7])?,
        });
    }
    let r1 = rows.iter().map(|r| r.i + 1).max().unwrap_or(0);
    let r2 = rows.iter().map(|r| r.j + 1).max().unwrap_or(0);
    if rows.is_empty() || rows.len() != r1 * r2 {
        return Err(Error::Format(format!(
            "heatmap has {} rows, not a full grid",
            rows.len()
        )));
    }
    for (k, r) in rows.iter().enumerate() {
        if (r.i, r.j) != (k / r2, k % r2) {
            return Err(Error::Format(format!(
                "heatmap rows out of order at ({}, {})",
                r.i, r.j
            )));
        }
    }
    Ok(HeatmapTable {
        resolution: [r1, r2],
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{generate_anatomy, PhantomParams};

    #[test]
    fn default_grid_counts() {
        let g = ContrastGrid::unit([10, 10]).unwrap();
        assert_eq!(g.cells.len(), 100);
        assert_eq!(g.plausible_count(), 79);
        for c in &g.cells {
            assert_eq!(c.plausible, c.i as i64 - c.j as i64 <= 3);
            assert_eq!(g.cells[g.cell_index(c.i, c.j)], *c);
        }
    }

    #[test]
    fn single_cell_grid() {
        let g = ContrastGrid::unit([1, 1]).unwrap();
        assert_eq!(g.cells.len(), 1);
        assert_eq!(g.cells[0].theta, ContrastTheta::new(0.5, 0.5).unwrap());
        assert!(g.cells[0].plausible);
    }

    #[test]
    fn invalid_grids() {
        assert!(matches!(
            ContrastGrid::new([0.3, 0.0], [0.3, 1.0], [2, 2]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            ContrastGrid::unit([0, 3]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            ContrastGrid::new([0.0, 0.0], [1.0, 1.5], [2, 2]),
            Err(Error::InvalidGrid(_))
        ));
    }

    fn small_cohort() -> Vec<Anatomy> {
        let p = PhantomParams::default();
        (0..2).map(|s| generate_anatomy(s, &p).unwrap()).collect()
    }

    #[test]
    fn all_rejected_grid() {
        // a single cell deep in the rejected corner
        let g = ContrastGrid::new([0.9, 0.0], [1.0, 0.1], [1, 1]).unwrap();
        assert_eq!(g.plausible_count(), 0);
        let model = SegmenterModel::calibrate(ContrastTheta::new(0.5, 0.5).unwrap()).unwrap();
        let r = grid_search(&small_cohort(), &model, &g, &RenderParams::default(), 1);
        assert!(matches!(r, Err(Error::NoPlausibleCells)));
    }

    #[test]
    fn single_plausible_cell_is_the_ooc() {
        let g = ContrastGrid::new([0.0, 0.0], [0.2, 1.0], [1, 1]).unwrap();
        let model = SegmenterModel::calibrate(ContrastTheta::new(0.5, 0.5).unwrap()).unwrap();
        let r = grid_search(&small_cohort(), &model, &g, &RenderParams::default(), 1).unwrap();
        assert_eq!(r.ooc_cell, (0, 0));
        assert_eq!(r.ooc, g.cells[0].theta);
        assert_eq!(r.scores[0].n_subjects, 2);
        assert_eq!(
            export_heatmap_csv(&r)
                .iter()
                .filter(|&&b| b == b'\n')
                .count(),
            2
        );
        let pgm = export_heatmap_pgm(&r).unwrap();
        assert_eq!(pgm, b"P5\n1 1\n255\n\xff");
    }

    fn table_of(res: [usize; 2], scores: &[Option<f64>]) -> HeatmapTable {
        let rows = scores
            .iter()
            .enumerate()
            .map(|(k, &d)| HeatmapRow {
                i: k / res[1],
                j: k % res[1],
                theta1: 0.0,
                theta2: 0.0,
                plausible: d.is_some(),
                mean_dice: d,
                std_dice: d.map(|_| 0.01),
                n_subjects: d.map_or(0, |_| 8),
            })
            .collect();
        HeatmapTable {
            resolution: res,
            rows,
        }
    }

    #[test]
    fn pgm_orientation_and_scaling() {
        // i = 0: j = 0, 1; i = 1: j = 0 (rejected), 1
        let t = table_of([2, 2], &[Some(0.5), Some(0.7), None, Some(0.6)]);
        let pgm = t.to_pgm().unwrap();
        let px = &pgm[b"P5\n2 2\n255\n".len()..];
        // top row is j = 1
        assert_eq!(px, &[255, 128, 1, 0]);

        let flat = table_of([1, 3], &[Some(0.4), Some(0.4), None]);
        assert_eq!(
            &flat.to_pgm().unwrap()[b"P5\n1 3\n255\n".len()..],
            &[0, 255, 255]
        );
        assert!(table_of([1, 1], &[None]).to_pgm().is_err());
    }

    #[test]
    fn csv_format_and_parse() {
        let t = table_of([1, 2], &[Some(0.123_456_78), None]);
        let csv = String::from_utf8(t.to_csv()).unwrap();
        assert_eq!(
            csv,
            "i,j,theta1,theta2,plausible,mean_dice,std_dice,n_subjects\n\
             0,0,0.000000,0.000000,1,0.123457,0.010000,8\n\
             0,1,0.000000,0.000000,0,NA,NA,0\n"
        );
        assert!(csv.contains(",0,NA,NA,"));
        let back = read_heatmap_csv(csv.as_bytes()).unwrap();
        assert_eq!(back.resolution, [1, 2]);
        assert_eq!(back.rows[0].mean_dice, Some(0.123457));
        assert_eq!(back.to_csv(), csv.as_bytes());
        assert!(read_heatmap_csv(b"a,b\n").is_err());
    }

    #[test]
    fn ooc_tie_break_and_monotone_invariance() {
        let mk = |d: &[Option<f64>]| -> Vec<CellScore> {
            d.iter()
                .enumerate()
                .map(|(k, &m)| CellScore {
                    cell: GridCell {
                        i: k / 3,
                        j: k % 3,
                        theta: ContrastTheta::new(0.5, 0.5).unwrap(),
                        plausible: m.is_some(),
                    },
                    mean_dice: m,
                    std_dice: None,
                    n_subjects: 0,
                    records: vec![],
                })
                .collect()
        };
        let d = [Some(0.2), None, Some(0.9), Some(0.9), Some(0.1), None];
        assert_eq!(select_ooc(&mk(&d)), Some(2));
        let transformed: Vec<Option<f64>> =
            d.iter().map(|x| x.map(|v| (3.0 * v).exp() - 7.0)).collect();
        assert_eq!(select_ooc(&mk(&transformed)), Some(2));
        assert_eq!(select_ooc(&mk(&[None, None])), None);
    }
}
