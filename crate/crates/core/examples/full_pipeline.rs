//! Tuning cohort → grid search → held-out evaluation, all in memory.
//!
//! ```bash
//! cargo run --release -p ooclab --example full_pipeline
//! ```

use std::time::Instant;

use ooclab::contrast::{ContrastTheta, RenderParams};
use ooclab::evaluate::evaluate_ooc;
use ooclab::metrics::Label;
use ooclab::phantom::{generate_anatomy, PhantomParams};
use ooclab::search::{grid_search, ContrastGrid};
use ooclab::segmenter::SegmenterModel;

fn main() -> ooclab::Result<()> {
    let start = Instant::now();
    let params = PhantomParams::default();
    let tuning = (0..8)
        .map(|s| generate_anatomy(s, &params))
        .collect::<ooclab::Result<Vec<_>>>()?;
    let test = (100..135)
        .map(|s| generate_anatomy(s, &params))
        .collect::<ooclab::Result<Vec<_>>>()?;

    let model = SegmenterModel::calibrate(ContrastTheta::new(0.5, 0.5)?)?;
    let grid = ContrastGrid::unit([10, 10])?;
    let render = RenderParams::default();

    let heatmap = grid_search(&tuning, &model, &grid, &render, 1)?;
    println!("OOC cell {:?} at θ = {}", heatmap.ooc_cell, heatmap.ooc);
    for j in (0..10).rev() {
        let row: Vec<String> = (0..10)
            .map(|i| match heatmap.score(i, j).mean_dice {
                Some(d) => format!("{d:.3}"),
                None => "  -  ".into(),
            })
            .collect();
        println!("θ2={:.2} | {}", (j as f64 + 0.5) / 10.0, row.join(" "));
    }

    let eval = evaluate_ooc(&test, &model, heatmap.ooc, &render, 2)?;
    println!("\nlabel   original        adjusted        W+       p");
    for label in Label::ALL {
        let s = eval.summary(label);
        let (w, p) = match &s.test {
            Ok(r) => (format!("{:.1}", r.w_plus), format!("{:.2e}", r.p_two_sided)),
            Err(f) => (f.to_string(), "NA".into()),
        };
        println!(
            "{:<6}  {:.3} ± {:.3}   {:.3} ± {:.3}   {w:>6}   {p}",
            label.name(),
            s.mean_a.unwrap_or(f64::NAN),
            s.std_a.unwrap_or(f64::NAN),
            s.mean_b.unwrap_or(f64::NAN),
            s.std_b.unwrap_or(f64::NAN),
        );
    }
    println!("\nelapsed {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
