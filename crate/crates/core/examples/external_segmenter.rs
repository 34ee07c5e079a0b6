//! Drive an external segmenter through the `{in}`/`{out}` command protocol.
//!
//! The default command copies the float input to the output, which the
//! protocol rejects (labels must be uint8). Pass a template to plug in a real
//! model:
//!
//! ```bash
//! cargo run -p ooclab --example external_segmenter -- 'my-model --in {in} --out {out}'
//! ```

use ooclab::contrast::{render, ContrastTheta, RenderParams};
use ooclab::metrics::dice_report;
use ooclab::phantom::{generate_anatomy, PhantomParams};
use ooclab::segmenter::segment_external;
use ooclab::volume::Volume;

fn main() -> ooclab::Result<()> {
    let template = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "cp {in} {out}".to_string());
    let anatomy = generate_anatomy(1, &PhantomParams::default())?;
    let image = render(
        &anatomy,
        ContrastTheta::new(0.5, 0.5)?,
        &RenderParams::default(),
    )?;

    println!("running: {template}");
    match segment_external(&Volume::Intensity(image), &template) {
        Ok(labels) => {
            let r = dice_report(&labels, &anatomy.truth)?;
            println!("whole {:?}, mean parcel {:.3}", r.whole, r.mean_parcel);
        }
        Err(e) => println!("external segmenter rejected: {e}"),
    }
    Ok(())
}
