//! Coarse grid search on a small tuning cohort; writes heatmap.csv and
//! heatmap.pgm to the current directory.

use ooclab::contrast::{ContrastTheta, RenderParams};
use ooclab::phantom::{generate_anatomy, PhantomParams};
use ooclab::search::{export_heatmap_csv, export_heatmap_pgm, grid_search, ContrastGrid};
use ooclab::segmenter::SegmenterModel;

fn main() -> ooclab::Result<()> {
    let params = PhantomParams::default();
    let cohort = (0..4)
        .map(|s| generate_anatomy(s, &params))
        .collect::<ooclab::Result<Vec<_>>>()?;
    let model = SegmenterModel::calibrate(ContrastTheta::new(0.5, 0.5)?)?;
    let grid = ContrastGrid::unit([5, 5])?;

    let result = grid_search(&cohort, &model, &grid, &RenderParams::default(), 1)?;

    // rows: theta2 descending, so the image and the printout share orientation
    for j in (0..grid.resolution[1]).rev() {
        let row: Vec<String> = (0..grid.resolution[0])
            .map(|i| match result.score(i, j).mean_dice {
                Some(d) => format!("{d:.3}"),
                None => "  -  ".into(),
            })
            .collect();
        println!(
            "theta2={:.2} | {}",
            result.score(0, j).cell.theta.theta2,
            row.join(" ")
        );
    }
    println!("OOC: {} at cell {:?}", result.ooc, result.ooc_cell);

    std::fs::write("heatmap.csv", export_heatmap_csv(&result)).expect("write heatmap.csv");
    std::fs::write("heatmap.pgm", export_heatmap_pgm(&result)?).expect("write heatmap.pgm");
    Ok(())
}
