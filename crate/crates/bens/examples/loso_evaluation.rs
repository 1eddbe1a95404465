//! Leave-one-speaker-out evaluation on an in-memory two-class corpus:
//! Benford-conforming voiced audio against noise controls, with per-fold
//! normalization refitting.
//!
//! ```bash
//! cargo run -p bens --example loso_evaluation
//! ```

use bens::classify::{self, Label, LabeledSample, SvmConfig};
use bens::datagen::{self, GenConfig};
use bens::features::{self, AnalysisConfig};
use bens::seed;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SPEAKERS: u64 = 6;
const UTTERANCES: u64 = 4;

fn main() -> bens::Result<()> {
    let corpus_seed = 808u64;
    let analysis = AnalysisConfig::default();

    println!("Synthesizing {SPEAKERS} voiced + {SPEAKERS} noise speakers, {UTTERANCES} utterances each...");
    let mut jobs = Vec::new();
    for spk in 0..SPEAKERS {
        for utt in 0..UTTERANCES {
            jobs.push((Label::Human, spk, utt));
            jobs.push((Label::Synthetic, spk, utt));
        }
    }
    let data: Vec<LabeledSample> = jobs
        .par_iter()
        .enumerate()
        .map(|(idx, &(label, spk, utt))| -> bens::Result<LabeledSample> {
            let (speaker, audio) = match label {
                Label::Human => {
                    let speaker_seed = seed::mix(corpus_seed, spk);
                    let mut rng = ChaCha8Rng::seed_from_u64(speaker_seed);
                    let voice = datagen::sample_voice(&mut rng, 16000);
                    let (audio, _) = datagen::synth_voice(
                        &voice,
                        seed::mix(speaker_seed, utt),
                        16000,
                        16000,
                        "utt",
                    )?;
                    (format!("voiced-{spk}"), audio)
                }
                Label::Synthetic => {
                    let speaker_seed = seed::mix(corpus_seed, (1 << 32) + spk);
                    let audio = datagen::non_benford_control(&GenConfig {
                        seed: seed::mix(speaker_seed, utt),
                        ..GenConfig::default()
                    })?;
                    (format!("noise-{spk}"), audio)
                }
            };
            let per_file = analysis.with_dither_seed(seed::mix(corpus_seed, 500 + idx as u64));
            let (vector, _) = features::bens_features(&audio, &per_file)?;
            Ok(LabeledSample {
                sample_id: format!("{speaker}-utt{utt}"),
                speaker_id: speaker,
                label,
                features: vector.to_array().to_vec(),
            })
        })
        .collect::<bens::Result<_>>()?;

    let outcome = classify::loso_cv(&data, &SvmConfig::default())?;
    let metrics = classify::report_metrics(&outcome.confusion)?;
    let cm = &outcome.confusion;

    println!("\nLOSO over {} folds, {} samples", outcome.folds.len(), cm.total());
    println!("                 predicted");
    println!("  true           human   synthetic");
    println!("  human          {:<7} {}", cm.tp, cm.fn_);
    println!("  synthetic      {:<7} {}", cm.fp, cm.tn);
    println!("\n  accuracy          : {:.4}", metrics.accuracy);
    println!("  misclassification : {:.4}", metrics.misclassification_rate);
    for fold in outcome.folds.iter().take(3) {
        let correct = fold
            .predictions
            .iter()
            .filter(|p| p.predicted == p.true_label)
            .count();
        println!(
            "  fold {:<12} -> {}/{} correct (norm stats {})",
            fold.held_out_speaker,
            correct,
            fold.predictions.len(),
            fold.norm_stats.digest_id()
        );
    }
    println!("  ... ({} folds total)", outcome.folds.len());
    Ok(())
}
