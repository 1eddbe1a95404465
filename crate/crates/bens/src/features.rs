//! BenS feature extraction: per-frame empirical digit distributions, frame
//! KL divergences against the ideal law, zero-estimate frame rejection, the
//! 11 per-utterance summary statistics, and z-score normalization.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audio_io::{dither, AudioBuffer, DitherConfig};
use crate::benford::{self, DigitPmf};
use crate::error::{Error, Result};
use crate::spectral::{demean, frame_signal, FrameConfig, MagnitudeSpectrum, SpectrumAnalyzer};

/// Dimension of the BenS feature vector.
pub const FEATURE_DIM: usize = 11;

/// Feature names in vector order.
pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "mean_kl", "std_kl", "p10", "p20", "p30", "p40", "p50", "p60", "p70", "p80", "p90",
];

/// End-to-end analysis parameters shared by the conformity study and the
/// feature extractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub frame: FrameConfig,
    /// `None` disables dithering.
    pub dither: Option<DitherConfig>,
    /// Minimum retained frames required to summarize an utterance.
    pub min_retained_frames: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            frame: FrameConfig::default(),
            dither: Some(DitherConfig::default()),
            min_retained_frames: 10,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(d) = &self.dither {
            d.validate()?;
        }
        if self.min_retained_frames < 2 {
            return Err(Error::InvalidConfig(
                "minimum retained frames must be at least 2".into(),
            ));
        }
        Ok(())
    }

    /// Copy of this config with the dither stream re-seeded (used to give
    /// each file its own noise stream).
    pub fn with_dither_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        if let Some(d) = &mut out.dither {
            d.seed = seed;
        }
        out
    }
}

/// Frame-level KL divergences retained for one utterance, with rejection
/// bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameKlSeries {
    pub values: Vec<f64>,
    pub frames_total: usize,
    pub frames_rejected: usize,
}

/// The 11 BenS statistics of an utterance's frame-KL series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BensFeatureVector {
    pub mean_kl: f64,
    pub std_kl: f64,
    /// Order statistics at ranks 10, 20, …, 90.
    pub percentiles: [f64; 9],
}

impl BensFeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_DIM] {
        let mut out = [0.0; FEATURE_DIM];
        out[0] = self.mean_kl;
        out[1] = self.std_kl;
        out[2..].copy_from_slice(&self.percentiles);
        out
    }

    pub fn from_array(a: [f64; FEATURE_DIM]) -> Self {
        let mut percentiles = [0.0; 9];
        percentiles.copy_from_slice(&a[2..]);
        Self {
            mean_kl: a[0],
            std_kl: a[1],
            percentiles,
        }
    }
}

/// Per-feature mean and standard deviation used for z-scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl NormStats {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu.len() != self.sigma.len() {
            return Err(Error::InvalidConfig(
                "normalization mu/sigma length mismatch".into(),
            ));
        }
        for (i, &s) in self.sigma.iter().enumerate() {
            if s <= 0.0 || !s.is_finite() {
                return Err(Error::ZeroVarianceFeature {
                    name: feature_name(i),
                });
            }
        }
        Ok(())
    }

    /// Short content hash identifying these statistics in model files.
    pub fn digest_id(&self) -> String {
        let mut hasher = Sha256::new();
        for v in self.mu.iter().chain(self.sigma.iter()) {
            hasher.update(v.to_le_bytes());
        }
        let digest = hasher.finalize();
        digest[..6].iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn feature_name(i: usize) -> String {
    FEATURE_NAMES
        .get(i)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("feature_{i}"))
}

/// KL divergence of one frame's spectrum against the ideal digit law.
///
/// The spectrum's positive bins are divided by their minimum so every value
/// is ≥ 1, leading digits are counted, and the empirical distribution is
/// compared with `ideal` via D(ideal ‖ empirical). Frames in which any digit
/// was never observed are rejected (`None`): a zero estimate would push the
/// divergence to infinity.
pub fn frame_kl(spectrum: &MagnitudeSpectrum, ideal: &DigitPmf) -> Result<Option<f64>> {
    if spectrum.bins.len() < 9 {
        return Err(Error::SpectrumTooSmall {
            bins: spectrum.bins.len(),
        });
    }
    let hist = match benford::digit_histogram_of_spectrum(&spectrum.bins)? {
        Some(h) => h,
        None => return Ok(None),
    };
    if hist.has_zero_count() {
        return Ok(None);
    }
    let empirical = benford::to_pmf(&hist)?;
    Ok(Some(benford::kl_divergence(ideal, &empirical)?))
}

/// Run the full per-frame pipeline (dither → frame → de-mean → magnitude
/// spectrum → frame KL) over one utterance.
pub fn frame_kl_series(audio: &AudioBuffer, cfg: &AnalysisConfig) -> Result<FrameKlSeries> {
    cfg.validate()?;
    let prepared = match &cfg.dither {
        Some(d) => dither(audio, d)?.audio,
        None => audio.clone(),
    };
    let frames = frame_signal(&prepared, &cfg.frame)?;
    let analyzer = SpectrumAnalyzer::new(
        cfg.frame.frame_len(prepared.sample_rate_hz),
        cfg.frame.window,
    );
    let ideal = benford::ideal_distribution();
    let mut values = Vec::with_capacity(frames.len());
    let mut rejected = 0usize;
    for (k, frame) in frames.iter().enumerate() {
        let spectrum = analyzer.magnitude_spectrum(&demean(frame), k);
        match frame_kl(&spectrum, &ideal)? {
            Some(kl) => values.push(kl),
            None => rejected += 1,
        }
    }
    Ok(FrameKlSeries {
        frames_total: frames.len(),
        frames_rejected: rejected,
        values,
    })
}

/// Extract the BenS feature vector from one utterance.
pub fn bens_features(
    audio: &AudioBuffer,
    cfg: &AnalysisConfig,
) -> Result<(BensFeatureVector, FrameKlSeries)> {
    let series = frame_kl_series(audio, cfg)?;
    let features = summarize_kl_series(&series, cfg.min_retained_frames)?;
    Ok((features, series))
}

/// Compute the 11 statistics of a retained-KL series: mean, sample standard
/// deviation (n−1), and the nine deciles.
///
/// Statistics are computed on the sorted series, which makes the result
/// bit-identical under any permutation of the frames.
pub fn summarize_kl_series(series: &FrameKlSeries, min_retained: usize) -> Result<BensFeatureVector> {
    let retained = series.values.len();
    if retained < min_retained.max(2) {
        return Err(Error::InsufficientFrames {
            total: series.frames_total,
            rejected: series.frames_rejected,
            retained,
            min: min_retained,
        });
    }
    let mut sorted = series.values.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("KL values are finite"));
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let mut percentiles = [0.0; 9];
    for (i, p) in (10..=90).step_by(10).enumerate() {
        percentiles[i] = percentile_sorted(&sorted, p as f64);
    }
    Ok(BensFeatureVector {
        mean_kl: mean,
        std_kl: var.sqrt(),
        percentiles,
    })
}

/// Rank-`p` percentile with linear interpolation: rank r = p/100·(n−1),
/// interpolated between the surrounding order statistics.
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySeries);
    }
    if !(0.0..=100.0).contains(&p) || !p.is_finite() {
        return Err(Error::PercentileRange(p));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("values must be comparable"));
    Ok(percentile_sorted(&sorted, p))
}

fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = p / 100.0 * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        return sorted[lo];
    }
    let frac = rank - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Per-feature sample mean and standard deviation (n−1) over a dataset.
pub fn fit_norm_stats(dataset: &[BensFeatureVector]) -> Result<NormStats> {
    let rows: Vec<[f64; FEATURE_DIM]> = dataset.iter().map(|v| v.to_array()).collect();
    let slices: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    fit_norm_stats_rows(&slices)
}

/// [`fit_norm_stats`] over raw feature rows of any fixed dimension.
pub fn fit_norm_stats_rows(rows: &[&[f64]]) -> Result<NormStats> {
    if rows.len() < 2 {
        return Err(Error::TooFewVectors(rows.len()));
    }
    let dim = rows[0].len();
    for r in rows {
        if r.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: r.len(),
            });
        }
    }
    let n = rows.len() as f64;
    let mut mu = vec![0.0; dim];
    for r in rows {
        for (m, &v) in mu.iter_mut().zip(r.iter()) {
            *m += v;
        }
    }
    for m in mu.iter_mut() {
        *m /= n;
    }
    let mut sigma = vec![0.0; dim];
    for r in rows {
        for ((s, &v), &m) in sigma.iter_mut().zip(r.iter()).zip(mu.iter()) {
            *s += (v - m) * (v - m);
        }
    }
    for (i, s) in sigma.iter_mut().enumerate() {
        *s = (*s / (n - 1.0)).sqrt();
        if *s <= 0.0 || s.is_nan() {
            return Err(Error::ZeroVarianceFeature {
                name: feature_name(i),
            });
        }
    }
    Ok(NormStats { mu, sigma })
}

/// z-score one feature vector: z_i = (x_i − mu_i) / sigma_i.
pub fn zscore(v: &BensFeatureVector, stats: &NormStats) -> Result<[f64; FEATURE_DIM]> {
    let z = zscore_slice(&v.to_array(), stats)?;
    let mut out = [0.0; FEATURE_DIM];
    out.copy_from_slice(&z);
    Ok(out)
}

/// z-score a raw feature row against statistics of matching dimension.
pub fn zscore_slice(features: &[f64], stats: &NormStats) -> Result<Vec<f64>> {
    stats.validate()?;
    if features.len() != stats.dim() {
        return Err(Error::DimensionMismatch {
            expected: stats.dim(),
            got: features.len(),
        });
    }
    Ok(features
        .iter()
        .zip(stats.mu.iter().zip(stats.sigma.iter()))
        .map(|(&x, (&m, &s))| (x - m) / s)
        .collect())
}

/// Pooled leading-digit histogram over all frames of one utterance, for the
/// corpus conformity study. No frames are rejected here; every frame's
/// digits are accumulated. Returns the histogram and the frame count.
pub fn utterance_digit_histogram(
    audio: &AudioBuffer,
    cfg: &AnalysisConfig,
) -> Result<(benford::DigitHistogram, usize)> {
    cfg.validate()?;
    let prepared = match &cfg.dither {
        Some(d) => dither(audio, d)?.audio,
        None => audio.clone(),
    };
    let frames = frame_signal(&prepared, &cfg.frame)?;
    let analyzer = SpectrumAnalyzer::new(
        cfg.frame.frame_len(prepared.sample_rate_hz),
        cfg.frame.window,
    );
    let mut hist = benford::DigitHistogram::new();
    for (k, frame) in frames.iter().enumerate() {
        let spectrum = analyzer.magnitude_spectrum(&demean(frame), k);
        if let Some(h) = benford::digit_histogram_of_spectrum(&spectrum.bins)? {
            hist.merge(&h);
        }
    }
    Ok((hist, frames.len()))
}

/// One row of the feature CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub sample_id: String,
    pub speaker_id: String,
    pub label: crate::manifest::SampleLabel,
    pub features: BensFeatureVector,
    pub frames_total: usize,
    pub frames_rejected: usize,
}

/// Feature CSV header, fixed by the file format.
pub const FEATURE_CSV_HEADER: [&str; 16] = [
    "sample_id",
    "speaker_id",
    "label",
    "mean_kl",
    "std_kl",
    "p10",
    "p20",
    "p30",
    "p40",
    "p50",
    "p60",
    "p70",
    "p80",
    "p90",
    "frames_total",
    "frames_rejected",
];

/// Write feature rows. Floats use the shortest round-trip decimal rendering,
/// so a rerun over identical inputs produces byte-identical files.
pub fn write_feature_csv(path: &std::path::Path, rows: &[FeatureRow]) -> Result<()> {
    use crate::manifest::{csv_open_error, csv_write_error};
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_open_error(path, e))?;
    writer
        .write_record(FEATURE_CSV_HEADER)
        .map_err(|e| csv_write_error(path, e))?;
    for row in rows {
        let f = row.features.to_array();
        let mut record: Vec<String> = vec![
            row.sample_id.clone(),
            row.speaker_id.clone(),
            row.label.to_string(),
        ];
        record.extend(f.iter().map(|v| v.to_string()));
        record.push(row.frames_total.to_string());
        record.push(row.frames_rejected.to_string());
        writer
            .write_record(&record)
            .map_err(|e| csv_write_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

/// Read a feature CSV produced by [`write_feature_csv`]. Parse failures name
/// the offending line.
pub fn read_feature_csv(path: &std::path::Path) -> Result<Vec<FeatureRow>> {
    use crate::manifest::csv_open_error;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_open_error(path, e))?;
    let parse_err = |line: usize, detail: String| Error::CsvParse {
        path: path.to_path_buf(),
        line,
        detail,
    };
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers != FEATURE_CSV_HEADER {
        return Err(parse_err(
            1,
            format!("unexpected header '{}'", headers.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| parse_err(line, e.to_string()))?;
        if record.len() != FEATURE_CSV_HEADER.len() {
            return Err(parse_err(
                line,
                format!(
                    "expected {} fields, got {}",
                    FEATURE_CSV_HEADER.len(),
                    record.len()
                ),
            ));
        }
        let label = record[2]
            .parse::<crate::manifest::SampleLabel>()
            .map_err(|detail| parse_err(line, detail))?;
        let mut values = [0.0; FEATURE_DIM];
        for (j, v) in values.iter_mut().enumerate() {
            *v = record[3 + j]
                .parse::<f64>()
                .map_err(|e| parse_err(line, format!("field '{}': {e}", FEATURE_CSV_HEADER[3 + j])))?;
        }
        let frames_total = record[14]
            .parse::<usize>()
            .map_err(|e| parse_err(line, format!("field 'frames_total': {e}")))?;
        let frames_rejected = record[15]
            .parse::<usize>()
            .map_err(|e| parse_err(line, format!("field 'frames_rejected': {e}")))?;
        rows.push(FeatureRow {
            sample_id: record[0].to_string(),
            speaker_id: record[1].to_string(),
            label,
            features: BensFeatureVector::from_array(values),
            frames_total,
            frames_rejected,
        });
    }
    Ok(rows)
}

/// Serialized form of [`NormStats`] with a format version and content id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormStatsFile {
    pub version: u32,
    pub id: String,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl NormStatsFile {
    pub fn from_stats(stats: &NormStats) -> Self {
        Self {
            version: 1,
            id: stats.digest_id(),
            mu: stats.mu.clone(),
            sigma: stats.sigma.clone(),
        }
    }

    pub fn into_stats(self) -> Result<NormStats> {
        let stats = NormStats {
            mu: self.mu,
            sigma: self.sigma,
        };
        stats.validate()?;
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn spectrum(bins: Vec<f64>) -> MagnitudeSpectrum {
        MagnitudeSpectrum {
            bins,
            frame_index: 0,
        }
    }

    #[test]
    fn frame_kl_zero_when_empirical_matches_reference() {
        // Digits 1..9 once each -> empirical uniform; against uniform KL = 0.
        let bins: Vec<f64> = (1..=9).map(|d| d as f64).collect();
        let kl = frame_kl(&spectrum(bins), &DigitPmf::uniform()).unwrap();
        assert_eq!(kl, Some(0.0));
    }

    #[test]
    fn frame_kl_rejects_missing_digits() {
        // Only digits 1 and 2 appear: zero estimates for 3..9.
        let bins = vec![1.0, 1.5, 2.0, 2.5, 1.1, 1.2, 2.2, 1.9, 1.05];
        let kl = frame_kl(&spectrum(bins), &benford::ideal_distribution()).unwrap();
        assert_eq!(kl, None);
    }

    #[test]
    fn frame_kl_rejects_all_zero_spectrum() {
        let kl = frame_kl(&spectrum(vec![0.0; 32]), &benford::ideal_distribution()).unwrap();
        assert_eq!(kl, None);
    }

    #[test]
    fn frame_kl_requires_nine_bins() {
        let err = frame_kl(&spectrum(vec![1.0; 8]), &benford::ideal_distribution()).unwrap_err();
        assert!(matches!(err, Error::SpectrumTooSmall { bins: 8 }));
    }

    #[test]
    fn frame_kl_matches_nine_term_oracle_on_9000_bins() {
        // counts[d] = round(9000 * ideal[d]) copies of the value d.
        let ideal = benford::ideal_distribution();
        let counts: Vec<u64> = (1..=9u8)
            .map(|d| (9000.0 * ideal.prob(d)).round() as u64)
            .collect();
        let total: u64 = counts.iter().sum();
        assert_eq!(total, 9000);
        let mut bins = Vec::with_capacity(total as usize);
        for (i, &c) in counts.iter().enumerate() {
            bins.extend(std::iter::repeat_n((i + 1) as f64, c as usize));
        }
        let got = frame_kl(&spectrum(bins), &ideal).unwrap().unwrap();
        // Oracle: direct nine-term summation over those exact counts.
        let mut expect = 0.0;
        for d in 1..=9u8 {
            let p = ideal.prob(d);
            let q = counts[d as usize - 1] as f64 / total as f64;
            expect += p * (p / q).log10();
        }
        assert_abs_diff_eq!(got, expect, epsilon = 1e-12);
        // Frozen oracle output.
        assert_abs_diff_eq!(got, 2.9715924980e-8, epsilon = 1e-12);
    }

    fn series(values: Vec<f64>) -> FrameKlSeries {
        FrameKlSeries {
            frames_total: values.len(),
            frames_rejected: 0,
            values,
        }
    }

    #[test]
    fn constant_series_statistics() {
        let c = 0.375;
        let v = summarize_kl_series(&series(vec![c; 20]), 10).unwrap();
        assert_eq!(v.mean_kl, c);
        assert_eq!(v.std_kl, 0.0);
        assert!(v.percentiles.iter().all(|&p| p == c));
    }

    #[test]
    fn grid_series_statistics() {
        // [0, 1, ..., 10]: mean 5, p10 = 1, p50 = 5, p90 = 9 under linear
        // interpolation (exact on this grid).
        let v = summarize_kl_series(&series((0..=10).map(f64::from).collect()), 10).unwrap();
        assert_abs_diff_eq!(v.mean_kl, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.percentiles[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.percentiles[4], 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.percentiles[8], 9.0, epsilon = 1e-12);
    }

    #[test]
    fn summary_is_invariant_under_frame_permutation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let values: Vec<f64> = (0..97).map(|_| rng.random_range(0.0..0.5)).collect();
        let base = summarize_kl_series(&series(values.clone()), 10).unwrap();
        let mut shuffled = values;
        // deterministic shuffle
        for i in (1..shuffled.len()).rev() {
            let j = rng.random_range(0..=i);
            shuffled.swap(i, j);
        }
        let permuted = summarize_kl_series(&series(shuffled), 10).unwrap();
        assert_eq!(base, permuted);
    }

    #[test]
    fn mean_and_percentiles_stay_within_series_range() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let n = rng.random_range(10..120);
            let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let v = summarize_kl_series(&series(values), 10).unwrap();
            assert!(v.mean_kl >= lo && v.mean_kl <= hi);
            for p in v.percentiles {
                assert!(p >= lo && p <= hi);
            }
        }
    }

    #[test]
    fn insufficient_frames_error_carries_accounting() {
        let s = FrameKlSeries {
            values: vec![0.1; 4],
            frames_total: 30,
            frames_rejected: 26,
        };
        match summarize_kl_series(&s, 10).unwrap_err() {
            Error::InsufficientFrames {
                total,
                rejected,
                retained,
                min,
            } => {
                assert_eq!((total, rejected, retained, min), (30, 26, 4, 10));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn percentile_examples() {
        assert_eq!(percentile(&[5.0], 0.0).unwrap(), 5.0);
        assert_eq!(percentile(&[5.0], 50.0).unwrap(), 5.0);
        assert_eq!(percentile(&[5.0], 100.0).unwrap(), 5.0);
        assert_eq!(percentile(&[1.0, 3.0], 50.0).unwrap(), 2.0);
        assert_eq!(percentile(&[4.0, 1.0, 3.0, 2.0], 25.0).unwrap(), 1.75);
        assert!(matches!(percentile(&[], 50.0), Err(Error::EmptySeries)));
        assert!(matches!(
            percentile(&[1.0], 101.0),
            Err(Error::PercentileRange(_))
        ));
    }

    #[test]
    fn percentiles_monotone_in_rank() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let n = rng.random_range(1..40);
            let vals: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let mut prev = f64::NEG_INFINITY;
            for p in 0..=20 {
                let v = percentile(&vals, p as f64 * 5.0).unwrap();
                assert!(v >= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn norm_stats_examples() {
        let v = BensFeatureVector::from_array([1.0, -2.0, 0.5, 1.5, -0.25, 3.0, 0.1, -1.0, 2.0, 4.0, -3.0]);
        let neg = BensFeatureVector::from_array(v.to_array().map(|x| -x));
        let stats = fit_norm_stats(&[v.clone(), neg]).unwrap();
        for m in &stats.mu {
            assert_abs_diff_eq!(*m, 0.0, epsilon = 1e-12);
        }

        let err = fit_norm_stats(&[v.clone(), v.clone()]).unwrap_err();
        assert!(matches!(err, Error::ZeroVarianceFeature { .. }));

        // per-feature {0, 1}: mean 0.5, sample std sqrt(0.5)
        let zeros = BensFeatureVector::from_array([0.0; FEATURE_DIM]);
        let ones = BensFeatureVector::from_array([1.0; FEATURE_DIM]);
        let stats = fit_norm_stats(&[zeros, ones]).unwrap();
        for (m, s) in stats.mu.iter().zip(stats.sigma.iter()) {
            assert_abs_diff_eq!(*m, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(*s, 0.5f64.sqrt(), epsilon = 1e-15);
        }
    }

    #[test]
    fn zscore_examples_and_round_trip() {
        let stats = NormStats {
            mu: vec![1.0; FEATURE_DIM],
            sigma: vec![2.0; FEATURE_DIM],
        };
        let at_mu = BensFeatureVector::from_array([1.0; FEATURE_DIM]);
        assert!(zscore(&at_mu, &stats).unwrap().iter().all(|&z| z == 0.0));

        let at_mu_plus_sigma = BensFeatureVector::from_array([3.0; FEATURE_DIM]);
        assert!(zscore(&at_mu_plus_sigma, &stats)
            .unwrap()
            .iter()
            .all(|&z| z == 1.0));

        // zscore ∘ de-normalization is the identity.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let z: Vec<f64> = (0..FEATURE_DIM).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x: Vec<f64> = z
            .iter()
            .zip(stats.mu.iter().zip(stats.sigma.iter()))
            .map(|(&z, (&m, &s))| z * s + m)
            .collect();
        let back = zscore_slice(&x, &stats).unwrap();
        for (a, b) in back.iter().zip(z.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    fn test_audio(amplitude: f64, seed: u64) -> AudioBuffer {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = 16000;
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / 16000.0;
                amplitude
                    * ((2.0 * std::f64::consts::PI * 313.0 * t).sin()
                        + 0.4 * (2.0 * std::f64::consts::PI * 1723.0 * t).sin()
                        + 0.2 * rng.random_range(-1.0..1.0))
            })
            .collect();
        AudioBuffer::new(samples, 16000, format!("test-{seed}")).unwrap()
    }

    #[test]
    fn features_are_amplitude_invariant_without_dithering() {
        let cfg = AnalysisConfig {
            dither: None,
            ..AnalysisConfig::default()
        };
        let base = test_audio(0.09, 42);
        let (f0, s0) = bens_features(&base, &cfg).unwrap();
        for c in [0.1, 10.0] {
            let scaled = AudioBuffer::new(
                base.samples.iter().map(|&s| s * c).collect(),
                16000,
                "scaled",
            )
            .unwrap();
            let (f1, s1) = bens_features(&scaled, &cfg).unwrap();
            assert_eq!(s0.frames_total, s1.frames_total);
            for (a, b) in f0.to_array().iter().zip(f1.to_array().iter()) {
                assert!((a - b).abs() <= 1e-9, "c={c}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn frame_accounting_sums() {
        let audio = test_audio(0.5, 7);
        let series = frame_kl_series(&audio, &AnalysisConfig::default()).unwrap();
        assert_eq!(series.frames_total, 98);
        assert_eq!(
            series.frames_total,
            series.values.len() + series.frames_rejected
        );
        assert!(series.values.iter().all(|&v| v.is_finite() && v >= 0.0));
    }

    #[test]
    fn feature_csv_round_trips_and_is_byte_stable() {
        use crate::manifest::SampleLabel;
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.csv");
        let p2 = dir.path().join("b.csv");
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<FeatureRow> = (0..5)
            .map(|i| FeatureRow {
                sample_id: format!("utt-{i}"),
                speaker_id: format!("spk-{}", i % 2),
                label: if i % 2 == 0 {
                    SampleLabel::Human
                } else {
                    SampleLabel::Synthetic
                },
                features: BensFeatureVector::from_array(std::array::from_fn(|_| {
                    rng.random_range(0.0..1.0)
                })),
                frames_total: 98,
                frames_rejected: i,
            })
            .collect();
        write_feature_csv(&p1, &rows).unwrap();
        write_feature_csv(&p2, &rows).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        let back = read_feature_csv(&p1).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn feature_csv_parse_error_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        let mut content = FEATURE_CSV_HEADER.join(",");
        content.push('\n');
        content.push_str("id,spk,human,0.1,0.1,0,0,0,0,0,0,0,0,0,98,0\n");
        content.push_str("id2,spk,human,NOT_A_NUMBER,0.1,0,0,0,0,0,0,0,0,0,98,0\n");
        std::fs::write(&p, content).unwrap();
        match read_feature_csv(&p).unwrap_err() {
            Error::CsvParse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn norm_stats_digest_is_stable_and_content_sensitive() {
        let a = NormStats {
            mu: vec![0.0; FEATURE_DIM],
            sigma: vec![1.0; FEATURE_DIM],
        };
        let b = NormStats {
            mu: vec![0.0; FEATURE_DIM],
            sigma: vec![1.0; FEATURE_DIM],
        };
        assert_eq!(a.digest_id(), b.digest_id());
        let mut c = a.clone();
        c.mu[3] = 0.25;
        assert_ne!(a.digest_id(), c.digest_id());
    }
}
