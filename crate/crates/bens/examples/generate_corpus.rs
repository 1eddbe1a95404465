//! Write a small seeded WAV corpus plus manifest to disk, then show the CLI
//! commands that consume it.
//!
//! ```bash
//! cargo run -p bens --example generate_corpus
//! ```

use bens::datagen::{generate_corpus, CorpusClasses, CorpusConfig};

fn main() -> bens::Result<()> {
    let dir = std::env::temp_dir().join("bens-demo-corpus");
    let cfg = CorpusConfig {
        seed: 12345,
        speakers_per_class: 4,
        utterances_per_speaker: 3,
        classes: CorpusClasses::Both,
        duration_s: 1.0,
        sample_rate_hz: 16000,
    };
    let manifest = generate_corpus(&dir, &cfg)?;

    println!("Wrote {} WAV files under {}", manifest.entries.len(), dir.display());
    for entry in manifest.entries.iter().take(4) {
        println!("  {}  speaker={} label={}", entry.path.display(), entry.speaker_id, entry.label);
    }
    println!("  ...");

    let manifest_csv = dir.join("manifest.csv");
    println!("\nNext steps:");
    println!("  bens conformity --manifest {}", manifest_csv.display());
    println!(
        "  bens extract --manifest {} --out {}",
        manifest_csv.display(),
        dir.join("features.csv").display()
    );
    println!(
        "  bens loso --features {} --out {}",
        dir.join("features.csv").display(),
        dir.join("loso.json").display()
    );
    Ok(())
}
