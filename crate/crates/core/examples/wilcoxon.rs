//! Paired signed-rank test, exact and normal-approximation modes.

use ooclab::stats::{wilcoxon_signed_rank, wilcoxon_signed_rank_with, WilcoxonMethod};

fn main() -> ooclab::Result<()> {
    let before = [
        0.81, 0.84, 0.79, 0.88, 0.90, 0.77, 0.85, 0.83, 0.86, 0.80, 0.82, 0.87,
    ];
    let after = [
        0.84, 0.85, 0.83, 0.88, 0.91, 0.80, 0.88, 0.82, 0.89, 0.83, 0.84, 0.90,
    ];
    let pairs: Vec<(f64, f64)> = before.iter().copied().zip(after).collect();

    let exact = wilcoxon_signed_rank(&pairs)?;
    let normal = wilcoxon_signed_rank_with(&pairs, Some(WilcoxonMethod::NormalApprox))?;
    println!(
        "n = {} (effective {}), W+ = {}",
        exact.n_input, exact.n_effective, exact.w_plus
    );
    println!(
        "{:>13}: p = {:.6}",
        exact.method.to_string(),
        exact.p_two_sided
    );
    println!(
        "{:>13}: p = {:.6}",
        normal.method.to_string(),
        normal.p_two_sided
    );
    Ok(())
}
