//! Render one subject at a native contrast, estimate its class means and
//! harmonize it to a target contrast.

use ooclab::contrast::{
    class_means, estimate_class_means, harmonize, render, ContrastTheta, IntensityMap, RenderParams,
};
use ooclab::phantom::{generate_anatomy, PhantomParams};

fn main() -> ooclab::Result<()> {
    let anatomy = generate_anatomy(4, &PhantomParams::default())?;
    let native = ContrastTheta::new(0.25, 0.7)?;
    let target = ContrastTheta::new(0.45, 0.15)?;
    let params = RenderParams::default().with_seed(9);

    let image = render(&anatomy, native, &params)?;
    let estimated = estimate_class_means(&image)?;
    println!(
        "native  {native}: true {:?}",
        class_means(native).as_array()
    );
    println!("         k-means {:?}", estimated.as_array());

    let map = IntensityMap::between(&estimated, &class_means(target))?;
    for (x, y) in map.knots() {
        println!("  knot {x:.3} -> {y:.3}");
    }

    let adjusted = harmonize(&image, target)?;
    let direct = render(&anatomy, target, &params)?;
    let brain: Vec<usize> = (0..image.data().len())
        .filter(|&i| direct.data()[i] > 0.05)
        .collect();
    let mad: f64 = brain
        .iter()
        .map(|&i| (adjusted.data()[i] - direct.data()[i]).abs() as f64)
        .sum::<f64>()
        / brain.len() as f64;
    println!("target  {target}: mean |harmonized - direct| over brain = {mad:.4}");
    Ok(())
}
