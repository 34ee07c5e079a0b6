//! Generate a few subjects and print their tissue and ventricle volumes.
//!
//! ```bash
//! cargo run --release -p ooclab --example phantom -- 0 1 2
//! ```

use ooclab::phantom::{generate_anatomy, tissue, PhantomParams};
use ooclab::volume::{connected_components, Parcel};

fn main() -> ooclab::Result<()> {
    let seeds: Vec<u64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let seeds = if seeds.is_empty() {
        vec![0, 1, 2, 3]
    } else {
        seeds
    };
    let params = PhantomParams::default();

    println!("seed   CSF    GM     WM  | LLV  RLV   V3   V4 | components");
    for seed in seeds {
        let a = generate_anatomy(seed, &params)?;
        let count = |c: u8| a.tissue.count(c);
        let parcels: Vec<String> = Parcel::ALL
            .iter()
            .map(|p| format!("{:4}", a.truth.count(p.code())))
            .collect();
        println!(
            "{seed:4} {:5} {:6} {:6} | {} | {}",
            count(tissue::SULCAL_CSF),
            count(tissue::GRAY_MATTER),
            count(tissue::WHITE_MATTER),
            parcels.join(" "),
            connected_components(&a.truth).len()
        );
    }
    Ok(())
}
