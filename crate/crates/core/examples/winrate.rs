//! Preference model: published coefficients, a simulated head-to-head, and
//! a fit on synthetic annotations.
//!
//! cargo run --example winrate

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pagefidelity::metrics::MetricReport;
use pagefidelity::winrate::{fit, simulate_win_rate, sigmoid, AnnotatedPair, FitOptions, WinRateModel, DEFAULT_DIMS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let published = WinRateModel::published();
    println!("published: {:?} intercept {} flags {:?}", published.coefficients, published.intercept, published.flags);

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut run = |shift: f64| -> Vec<MetricReport> {
        (0..20)
            .map(|i| {
                let s = [(); 5].map(|_| (rng.gen_range(0.5..0.9) + shift).min(1.0));
                MetricReport::from_scores(format!("page{i:02}"), format!("page{i:02}"), s)
            })
            .collect()
    };
    let (strong, weak) = (run(0.08), run(0.0));
    let wr = simulate_win_rate(&published, &strong, &weak)?;
    println!("strong vs weak: win rate {:.2} ({} of {})", wr.rate, wr.wins, wr.pages);

    // annotators prefer higher block match and color, with noise
    let pairs: Vec<AnnotatedPair> = strong
        .iter()
        .zip(&weak)
        .cycle()
        .take(600)
        .enumerate()
        .map(|(i, (a, b))| {
            let (first, second) = if i % 2 == 0 { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
            let z = 8.0 * (first.block_match - second.block_match) + 4.0 * (first.color - second.color);
            let win = rng.gen_bool(sigmoid(z));
            AnnotatedPair { first, second, win }
        })
        .collect();
    let report = fit(&pairs, &DEFAULT_DIMS, &FitOptions::default())?;
    println!(
        "fitted in {} iterations (converged {}): {:?} intercept {:.3}, training accuracy {:.3}",
        report.iterations, report.converged, report.model.coefficients, report.model.intercept, report.training_accuracy
    );
    Ok(())
}
