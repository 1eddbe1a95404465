//! The SMO solver on the XOR pattern: a degree-2 polynomial kernel separates
//! it, a linear kernel cannot.
//!
//! ```bash
//! cargo run -p bens --example svm_xor
//! ```

use bens::classify::{self, KernelKind, Label, LabeledSample, SvmConfig};

fn main() -> bens::Result<()> {
    let sample = |id: &str, label, x: f64, y: f64| LabeledSample {
        sample_id: id.into(),
        speaker_id: id.into(),
        label,
        features: vec![x, y],
    };
    let data = vec![
        sample("p0", Label::Human, 0.0, 0.0),
        sample("p1", Label::Human, 1.0, 1.0),
        sample("n0", Label::Synthetic, 0.0, 1.0),
        sample("n1", Label::Synthetic, 1.0, 0.0),
    ];

    for kernel in [
        KernelKind::Polynomial {
            degree: 2,
            coef0: 1.0,
        },
        KernelKind::Linear,
    ] {
        let cfg = SvmConfig {
            kernel,
            c: 10.0,
            track_objective: true,
            ..SvmConfig::default()
        };
        let (model, diag) = classify::train_svm_detailed(&data, &cfg)?;
        println!("kernel {kernel:?}");
        println!(
            "  support vectors: {}, sweeps: {}, dual steps: {}",
            model.support_vectors.len(),
            diag.sweeps,
            diag.objective_trace.len()
        );
        let mut errors = 0;
        for s in &data {
            let p = classify::predict(&model, &s.features)?;
            let ok = p.label == s.label;
            errors += usize::from(!ok);
            println!(
                "  {} {:?} -> decision {:+.4} -> {} {}",
                s.sample_id,
                s.features,
                p.decision,
                p.label,
                if ok { "" } else { "(wrong)" }
            );
        }
        println!("  training errors: {errors}/4\n");
    }
    Ok(())
}
