//! Conformity study on an in-memory synthetic corpus: pooled per-speaker
//! leading-digit distributions, the cross-speaker average, and the linear
//! regression against the ideal law.
//!
//! ```bash
//! cargo run -p bens --example conformity_study
//! ```

use bens::benford;
use bens::datagen;
use bens::features::{self, AnalysisConfig};
use bens::seed;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SPEAKERS: u64 = 8;
const UTTERANCES: u64 = 4;

fn main() -> bens::Result<()> {
    let corpus_seed = 2024u64;
    let analysis = AnalysisConfig::default();

    println!("Synthesizing {SPEAKERS} speakers x {UTTERANCES} utterances...");
    let mut speaker_pmfs = Vec::new();
    for spk in 0..SPEAKERS {
        let speaker_seed = seed::mix(corpus_seed, spk);
        let mut rng = ChaCha8Rng::seed_from_u64(speaker_seed);
        let voice = datagen::sample_voice(&mut rng, 16000);
        let mut hist = benford::DigitHistogram::new();
        for utt in 0..UTTERANCES {
            let (audio, _) =
                datagen::synth_voice(&voice, seed::mix(speaker_seed, utt), 16000, 16000, "utt")?;
            let per_file = analysis.with_dither_seed(seed::mix(corpus_seed, 100 + spk * 10 + utt));
            let (h, _frames) = features::utterance_digit_histogram(&audio, &per_file)?;
            hist.merge(&h);
        }
        speaker_pmfs.push(benford::to_pmf(&hist)?);
    }

    let average = benford::average_speaker_pmfs(&speaker_pmfs)?;
    let ideal = benford::ideal_distribution();
    let fit = benford::conformity_regression(&average, &ideal)?;

    println!("\n  digit   ideal      empirical");
    for d in 1..=9u8 {
        println!("  {d}       {:.6}   {:.6}", ideal.prob(d), average.prob(d));
    }
    println!(
        "\n  fit: empirical = {:.4}*ideal + {:.4}   (R^2 = {:.4})",
        fit.slope, fit.intercept, fit.r_squared
    );
    println!("  a slope near 1 and intercept near 0 indicate conformity");
    Ok(())
}
