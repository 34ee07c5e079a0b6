//! Segment one subject across a sweep of contrasts and report Dice.

use ooclab::contrast::{render, ContrastTheta, RenderParams};
use ooclab::metrics::{dice_report, Label};
use ooclab::phantom::{generate_anatomy, PhantomParams};
use ooclab::segmenter::SegmenterModel;

fn main() -> ooclab::Result<()> {
    let anatomy = generate_anatomy(7, &PhantomParams::default())?;
    let model = SegmenterModel::calibrate(ContrastTheta::new(0.5, 0.5)?)?;
    println!("tau_csf = {:.3}", model.tau_csf);

    print!("theta          ");
    for l in Label::ALL {
        print!("{:>7}", l.name());
    }
    println!("  mean_parcel");
    for (t1, t2) in [
        (0.5, 0.5),
        (0.45, 0.15),
        (0.8, 0.6),
        (0.2, 0.8),
        (0.05, 0.95),
    ] {
        let theta = ContrastTheta::new(t1, t2)?;
        let image = render(&anatomy, theta, &RenderParams::default())?;
        let report = dice_report(&model.segment(&image), &anatomy.truth)?;
        print!("({t1:.2}, {t2:.2})   ");
        for l in Label::ALL {
            match report.label(l) {
                Some(d) => print!("{d:7.3}"),
                None => print!("{:>7}", "NA"),
            }
        }
        println!("  {:.3}", report.mean_parcel);
    }
    Ok(())
}
