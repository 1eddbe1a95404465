//! First-digit law basics: the ideal distribution, leading-digit
//! extraction, and KL divergence between digit distributions.
//!
//! ```bash
//! cargo run -p bens --example benford_basics
//! ```

use bens::benford::{self, DigitPmf};

fn main() -> bens::Result<()> {
    let ideal = benford::ideal_distribution();
    println!("Ideal first-digit distribution, P(d) = log10(1 + 1/d):");
    for d in 1..=9u8 {
        let p = ideal.prob(d);
        let bar = "#".repeat((p * 100.0).round() as usize);
        println!("  {d}: {p:.6}  {bar}");
    }
    println!("  sum = {}", ideal.values().iter().sum::<f64>());

    println!("\nLeading digits:");
    for x in [1.0, 345.6, 0.00721, 9.9999999, 10.0, 6.02e23] {
        println!("  leading_digit({x:>12}) = {}", benford::leading_digit(x)?);
    }

    let values = [19.0, 1.2, 150.0, 9.0, 3.5, 7.7, 1.01, 42.0];
    let hist = benford::digit_histogram(&values)?;
    let empirical = benford::to_pmf(&hist)?;
    println!("\nDigit histogram of {values:?}:");
    println!("  counts = {:?}, total = {}", hist.counts(), hist.total());

    let uniform = DigitPmf::uniform();
    println!("\nBase-10 KL divergences:");
    println!(
        "  D(ideal ‖ uniform)  = {:.6}",
        benford::kl_divergence(&ideal, &uniform)?
    );
    println!(
        "  D(ideal ‖ ideal)    = {:.6}",
        benford::kl_divergence(&ideal, &ideal)?
    );
    println!(
        "  D(sample ‖ ideal)   = {:.6}  (tiny sample, large divergence)",
        benford::kl_divergence(&empirical, &ideal)?
    );
    // The reverse direction is undefined here: the sample never saw some
    // digits, so D(ideal ‖ sample) would divide by zero estimates. The
    // feature extractor rejects such frames for exactly this reason.
    let err = benford::kl_divergence(&ideal, &empirical).unwrap_err();
    println!("  D(ideal ‖ sample)   -> {err}");
    Ok(())
}
