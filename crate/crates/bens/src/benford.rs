//! Leading-digit statistics: the ideal first-digit law, digit extraction,
//! frequency histograms, base-10 KL divergence, and the conformity regression
//! of an empirical digit distribution against the ideal one.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of possible leading digits (1 through 9).
pub const DIGIT_COUNT: usize = 9;

/// Probability mass function over the leading digits 1..=9.
///
/// Serializes as a JSON object with explicit digit keys `"1"`..`"9"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    into = "BTreeMap<String, f64>",
    try_from = "BTreeMap<String, f64>"
)]
pub struct DigitPmf {
    p: [f64; DIGIT_COUNT],
}

impl DigitPmf {
    /// Build a PMF from probabilities indexed by digit − 1.
    ///
    /// Each entry must lie in [0, 1] and the total must be 1 within 1e-9.
    pub fn new(p: [f64; DIGIT_COUNT]) -> Result<Self> {
        for (i, &v) in p.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidPmf(format!(
                    "p({}) = {v} outside [0, 1]",
                    i + 1
                )));
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidPmf(format!("probabilities sum to {sum}")));
        }
        Ok(Self { p })
    }

    /// Uniform distribution, 1/9 per digit.
    pub fn uniform() -> Self {
        Self {
            p: [1.0 / 9.0; DIGIT_COUNT],
        }
    }

    /// Probability of leading digit `digit` (1..=9).
    pub fn prob(&self, digit: u8) -> f64 {
        assert!((1..=9).contains(&digit), "digit must be 1..=9");
        self.p[digit as usize - 1]
    }

    /// All nine probabilities, indexed by digit − 1.
    pub fn values(&self) -> &[f64; DIGIT_COUNT] {
        &self.p
    }
}

impl From<DigitPmf> for BTreeMap<String, f64> {
    fn from(pmf: DigitPmf) -> Self {
        pmf.p
            .iter()
            .enumerate()
            .map(|(i, &v)| ((i + 1).to_string(), v))
            .collect()
    }
}

impl TryFrom<BTreeMap<String, f64>> for DigitPmf {
    type Error = Error;

    fn try_from(map: BTreeMap<String, f64>) -> Result<Self> {
        let mut p = [0.0; DIGIT_COUNT];
        for d in 1..=9u8 {
            p[d as usize - 1] = *map
                .get(&d.to_string())
                .ok_or_else(|| Error::InvalidPmf(format!("missing digit key \"{d}\"")))?;
        }
        DigitPmf::new(p)
    }
}

/// Frequency histogram of leading digits.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitHistogram {
    counts: [u64; DIGIT_COUNT],
    total: u64,
}

impl DigitHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record one observation of `digit` (1..=9).
    pub fn record(&mut self, digit: u8) {
        assert!((1..=9).contains(&digit), "digit must be 1..=9");
        self.counts[digit as usize - 1] += 1;
        self.total += 1;
    }

    /// Merge another histogram into this one.
    pub fn merge(&mut self, other: &DigitHistogram) {
        for (a, b) in self.counts.iter_mut().zip(other.counts.iter()) {
            *a += b;
        }
        self.total += other.total;
    }

    pub fn count(&self, digit: u8) -> u64 {
        assert!((1..=9).contains(&digit), "digit must be 1..=9");
        self.counts[digit as usize - 1]
    }

    pub fn counts(&self) -> &[u64; DIGIT_COUNT] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// True if some digit was never observed.
    pub fn has_zero_count(&self) -> bool {
        self.counts.contains(&0)
    }
}

/// Ordinary least-squares fit of an empirical distribution on the ideal one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// The ideal first-digit distribution: P(d) = log10(1 + 1/d).
pub fn ideal_distribution() -> DigitPmf {
    let mut p = [0.0; DIGIT_COUNT];
    for (i, v) in p.iter_mut().enumerate() {
        let d = (i + 1) as f64;
        *v = (1.0 + 1.0 / d).log10();
    }
    DigitPmf { p }
}

/// Most significant decimal digit of a positive, finite value.
///
/// Computed as floor(x / 10^floor(log10 x)), then verified by multiplication
/// so that rounding in `log10` at decade boundaries cannot shift the result
/// off by one.
pub fn leading_digit(x: f64) -> Result<u8> {
    leading_digit_inner(x, None)
}

fn leading_digit_inner(x: f64, index: Option<usize>) -> Result<u8> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::DigitDomain { value: x, index });
    }
    // Rescale subnormal-range values so the power-of-ten arithmetic below
    // stays in normal range.
    let x = if x < 1e-290 { x * 1e300 } else { x };

    // log10 gives the decade estimate; comparisons against m·10^e then
    // verify and correct it, so rounding at decade boundaries cannot shift
    // the answer.
    let mut exp = x.log10().floor() as i32;
    while cmp_decimal(x, 1, exp) == std::cmp::Ordering::Less {
        exp -= 1;
    }
    while cmp_decimal(x, 10, exp) != std::cmp::Ordering::Less {
        exp += 1;
    }
    let mut digit = ((x / 10f64.powi(exp)) as i32).clamp(1, 9);
    while digit > 1 && cmp_decimal(x, digit as u32, exp) == std::cmp::Ordering::Less {
        digit -= 1;
    }
    while digit < 9 && cmp_decimal(x, digit as u32 + 1, exp) != std::cmp::Ordering::Less {
        digit += 1;
    }
    Ok(digit as u8)
}

/// Compare a positive finite `x` against m·10^e.
///
/// Exact for |e| ≤ 31 by comparing the integers m₂·2^p (the float's rational
/// form) and m·5^e scaled to a common power of two; falls back to float
/// multiplication outside that range, where boundary values are not exactly
/// representable anyway.
fn cmp_decimal(x: f64, m: u32, e: i32) -> std::cmp::Ordering {
    exact_cmp_decimal(x, m, e).unwrap_or_else(|| {
        x.partial_cmp(&(m as f64 * 10f64.powi(e)))
            .expect("finite comparison")
    })
}

fn exact_cmp_decimal(x: f64, m: u32, e: i32) -> Option<std::cmp::Ordering> {
    use std::cmp::Ordering;
    let bits = x.to_bits();
    let exp_field = ((bits >> 52) & 0x7FF) as i64;
    let frac = bits & 0x000F_FFFF_FFFF_FFFF;
    // x = m2 · 2^p
    let (m2, p) = if exp_field == 0 {
        (frac as u128, -1074i64)
    } else {
        ((frac | (1 << 52)) as u128, exp_field - 1075)
    };

    // Shifted comparison with saturation: an overflowing left shift means
    // that side is strictly larger (both sides are nonzero).
    fn cmp_shifted(lhs: u128, rhs: u128, shift: i64) -> Ordering {
        // compares lhs·2^shift vs rhs
        if shift >= 0 {
            if shift >= 128 || lhs.leading_zeros() < shift as u32 {
                return Ordering::Greater;
            }
            (lhs << shift).cmp(&rhs)
        } else {
            let back = -shift;
            if back >= 128 || rhs.leading_zeros() < back as u32 {
                return Ordering::Less;
            }
            lhs.cmp(&(rhs << back))
        }
    }

    if e >= 0 {
        // m2·2^p vs m·5^e·2^e  ⇔  m2·2^(p−e) vs m·5^e
        if e > 31 {
            return None;
        }
        let rhs = (m as u128) * 5u128.pow(e as u32);
        Some(cmp_shifted(m2, rhs, p - e as i64))
    } else {
        // m2·2^p vs m·10^e  ⇔  m2·5^|e|·2^(p+|e|) vs m
        let k = -e as u32;
        if k > 31 {
            return None;
        }
        let lhs = m2.checked_mul(5u128.pow(k))?;
        Some(cmp_shifted(lhs, m as u128, p + k as i64))
    }
}

/// Histogram of the leading digits of a sequence of positive values.
///
/// Fails on the first non-positive or non-finite value, reporting its index.
pub fn digit_histogram(values: &[f64]) -> Result<DigitHistogram> {
    let mut hist = DigitHistogram::new();
    for (i, &v) in values.iter().enumerate() {
        hist.record(leading_digit_inner(v, Some(i))?);
    }
    Ok(hist)
}

/// Normalize a histogram into a probability mass function.
pub fn to_pmf(hist: &DigitHistogram) -> Result<DigitPmf> {
    if hist.total == 0 {
        return Err(Error::EmptyHistogram);
    }
    let mut p = [0.0; DIGIT_COUNT];
    for (v, &c) in p.iter_mut().zip(hist.counts.iter()) {
        *v = c as f64 / hist.total as f64;
    }
    Ok(DigitPmf { p })
}

/// Base-10 Kullback-Leibler divergence D(p ‖ q) = Σ p(d)·log10(p(d)/q(d)).
///
/// Terms with p(d) = 0 contribute nothing. A digit with q(d) = 0 while
/// p(d) > 0 makes the divergence undefined and is reported as an error;
/// callers discard such distributions upstream.
pub fn kl_divergence(p: &DigitPmf, q: &DigitPmf) -> Result<f64> {
    let mut sum = 0.0;
    for d in 0..DIGIT_COUNT {
        let (pd, qd) = (p.p[d], q.p[d]);
        if pd == 0.0 {
            continue;
        }
        if qd == 0.0 {
            return Err(Error::KlUndefined {
                digit: (d + 1) as u8,
            });
        }
        sum += pd * (pd / qd).log10();
    }
    Ok(sum)
}

/// Unweighted per-digit arithmetic mean of a set of PMFs.
pub fn average_speaker_pmfs(per_speaker: &[DigitPmf]) -> Result<DigitPmf> {
    if per_speaker.is_empty() {
        return Err(Error::EmptyPmfSet);
    }
    let n = per_speaker.len() as f64;
    let mut p = [0.0; DIGIT_COUNT];
    for pmf in per_speaker {
        for (acc, &v) in p.iter_mut().zip(pmf.p.iter()) {
            *acc += v;
        }
    }
    for v in p.iter_mut() {
        *v /= n;
    }
    Ok(DigitPmf { p })
}

/// Least-squares regression of the nine empirical probabilities on the nine
/// ideal ones: empirical ≈ slope·ideal + intercept, with the coefficient of
/// determination R².
pub fn conformity_regression(empirical: &DigitPmf, ideal: &DigitPmf) -> Result<RegressionFit> {
    ols(ideal.values(), empirical.values())
}

fn ols(xs: &[f64; DIGIT_COUNT], ys: &[f64; DIGIT_COUNT]) -> Result<RegressionFit> {
    let n = DIGIT_COUNT as f64;
    let mean_x: f64 = xs.iter().sum::<f64>() / n;
    let mean_y: f64 = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys.iter()) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx <= 1e-20 {
        return Err(Error::ZeroVariancePredictor);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&x, &y) in xs.iter().zip(ys.iter()) {
        let r = y - (slope * x + intercept);
        ss_res += r * r;
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        // Constant response is fit exactly by slope 0 through its mean.
        1.0
    };
    Ok(RegressionFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Leading-digit histogram of one magnitude spectrum.
///
/// Exact-zero bins are dropped (a zero has no leading digit), the remainder
/// is divided by its smallest value so every retained bin is ≥ 1, and the
/// leading digits of the normalized bins are counted. Returns `None` when no
/// positive bin exists.
pub fn digit_histogram_of_spectrum(bins: &[f64]) -> Result<Option<DigitHistogram>> {
    let mut min_pos = f64::INFINITY;
    for &b in bins {
        if b > 0.0 && b < min_pos {
            min_pos = b;
        }
    }
    if !min_pos.is_finite() {
        return Ok(None);
    }
    let mut hist = DigitHistogram::new();
    for (i, &b) in bins.iter().enumerate() {
        if b > 0.0 {
            hist.record(leading_digit_inner(b / min_pos, Some(i))?);
        }
    }
    Ok(Some(hist))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // Independent oracle: the leading digit as the first significant char of
    // an 18-significant-digit decimal rendering of the value.
    pub(crate) fn string_leading_digit(x: f64) -> u8 {
        let s = format!("{x:.17e}");
        s.as_bytes()[0] - b'0'
    }

    #[test]
    #[allow(clippy::approx_constant)] // reference values, frozen to six decimals
    fn ideal_matches_closed_form() {
        let pmf = ideal_distribution();
        assert_abs_diff_eq!(pmf.prob(1), 0.301030, epsilon = 5e-7);
        assert_abs_diff_eq!(pmf.prob(9), 0.045757, epsilon = 5e-7);
        let sum: f64 = pmf.values().iter().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ideal_is_strictly_decreasing() {
        let pmf = ideal_distribution();
        for d in 1..9u8 {
            assert!(pmf.prob(d) > pmf.prob(d + 1));
        }
    }

    #[test]
    fn leading_digit_examples() {
        assert_eq!(leading_digit(1.0).unwrap(), 1);
        assert_eq!(leading_digit(345.6).unwrap(), 3);
        assert_eq!(leading_digit(0.00721).unwrap(), 7);
        assert_eq!(leading_digit(9.9999999).unwrap(), 9);
        assert_eq!(leading_digit(10.0).unwrap(), 1);
    }

    #[test]
    fn leading_digit_rejects_domain_violations() {
        assert!(leading_digit(0.0).is_err());
        assert!(leading_digit(-3.0).is_err());
        assert!(leading_digit(f64::NAN).is_err());
        assert!(leading_digit(f64::INFINITY).is_err());
    }

    #[test]
    fn leading_digit_agrees_with_string_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xBEEF);
        for _ in 0..100_000 {
            let exp: f64 = rng.random_range(-9.0..9.0);
            let x = 10f64.powf(exp);
            assert_eq!(leading_digit(x).unwrap(), string_leading_digit(x), "x={x:e}");
        }
    }

    #[test]
    fn leading_digit_handles_decade_boundaries() {
        for e in -9..=9i32 {
            let p = 10f64.powi(e);
            for x in [p, p.next_up(), p.next_down(), 9.0 * p, (10.0 * p).next_down()] {
                assert_eq!(
                    leading_digit(x).unwrap(),
                    string_leading_digit(x),
                    "x = {x:e}"
                );
            }
        }
    }

    #[test]
    fn leading_digit_scale_invariance_under_powers_of_ten() {
        // Mantissas strictly inside digit intervals: scaling by 10^k then
        // perturbs the value far less than its distance to a digit boundary.
        // (An exact-boundary mantissa like 2.0 genuinely changes digit when
        // multiplied by an inexact power of ten.)
        for x in [1.5f64, 2.25, 3.7, 5.5, 7.125, 9.5] {
            let base = leading_digit(x).unwrap();
            for k in -6..=6i32 {
                let scaled = x * 10f64.powi(k);
                assert_eq!(leading_digit(scaled).unwrap(), base, "x={x} k={k}");
            }
        }
    }

    #[test]
    fn histogram_examples() {
        let h = digit_histogram(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]).unwrap();
        assert_eq!(h.total(), 9);
        assert!(h.counts().iter().all(|&c| c == 1));

        let empty = digit_histogram(&[]).unwrap();
        assert_eq!(empty.total(), 0);
        assert!(empty.counts().iter().all(|&c| c == 0));

        let h = digit_histogram(&[19.0, 1.2, 150.0, 9.0]).unwrap();
        assert_eq!(h.count(1), 3);
        assert_eq!(h.count(9), 1);
        assert_eq!(h.total(), 4);
    }

    #[test]
    fn histogram_reports_offending_index() {
        let err = digit_histogram(&[1.0, -2.0]).unwrap_err();
        match err {
            Error::DigitDomain { index, .. } => assert_eq!(index, Some(1)),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn to_pmf_examples() {
        let h = digit_histogram(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]).unwrap();
        let pmf = to_pmf(&h).unwrap();
        for d in 1..=9u8 {
            assert_abs_diff_eq!(pmf.prob(d), 1.0 / 9.0, epsilon = 1e-15);
        }

        let mut h = DigitHistogram::new();
        for _ in 0..3 {
            h.record(1);
        }
        h.record(2);
        let pmf = to_pmf(&h).unwrap();
        assert_eq!(pmf.prob(1), 0.75);
        assert_eq!(pmf.prob(2), 0.25);
        assert_eq!(pmf.prob(3), 0.0);

        assert!(matches!(
            to_pmf(&DigitHistogram::new()),
            Err(Error::EmptyHistogram)
        ));
    }

    #[test]
    fn kl_of_identical_distributions_is_zero() {
        let p = ideal_distribution();
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        let u = DigitPmf::uniform();
        assert_eq!(kl_divergence(&u, &u).unwrap(), 0.0);
    }

    #[test]
    fn kl_ideal_vs_uniform_matches_nine_term_oracle() {
        let ideal = ideal_distribution();
        let uniform = DigitPmf::uniform();
        // Oracle: direct nine-term summation written out independently.
        let mut expect = 0.0;
        for d in 1..=9u32 {
            let p = (1.0 + 1.0 / d as f64).log10();
            expect += p * (p * 9.0).log10();
        }
        let got = kl_divergence(&ideal, &uniform).unwrap();
        assert_abs_diff_eq!(got, expect, epsilon = 1e-15);
        // Frozen value of the oracle.
        assert_abs_diff_eq!(got, 0.088505492007692, epsilon = 1e-12);
    }

    #[test]
    fn kl_undefined_when_q_has_zero_where_p_positive() {
        let p = ideal_distribution();
        let mut q = [0.0; DIGIT_COUNT];
        q[0] = 1.0;
        let q = DigitPmf::new(q).unwrap();
        assert!(matches!(
            kl_divergence(&p, &q),
            Err(Error::KlUndefined { digit: 2 })
        ));
        // The reverse direction is fine: terms with p = 0 contribute nothing.
        assert!(kl_divergence(&q, &p).is_ok());
    }

    #[test]
    fn kl_nonnegative_on_random_pairs() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let p = random_pmf(&mut rng);
            let q = random_pmf(&mut rng);
            assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
        }
    }

    pub(crate) fn random_pmf(rng: &mut impl rand::Rng) -> DigitPmf {
        let mut p = [0.0; DIGIT_COUNT];
        let mut sum = 0.0;
        for v in p.iter_mut() {
            *v = rng.random_range(0.01..1.0);
            sum += *v;
        }
        for v in p.iter_mut() {
            *v /= sum;
        }
        // Renormalize exactly enough for the constructor's 1e-9 gate.
        DigitPmf::new(p).unwrap()
    }

    #[test]
    fn average_of_one_is_identity() {
        let p = ideal_distribution();
        assert_eq!(average_speaker_pmfs(std::slice::from_ref(&p)).unwrap(), p);
    }

    #[test]
    fn average_of_uniform_and_ideal_is_midpoint() {
        let a = DigitPmf::uniform();
        let b = ideal_distribution();
        let avg = average_speaker_pmfs(&[a.clone(), b.clone()]).unwrap();
        for d in 1..=9u8 {
            assert_abs_diff_eq!(
                avg.prob(d),
                0.5 * (a.prob(d) + b.prob(d)),
                epsilon = 1e-15
            );
        }
        let sum: f64 = avg.values().iter().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn average_of_copies_is_identity() {
        let p = ideal_distribution();
        let avg = average_speaker_pmfs(&[p.clone(), p.clone(), p.clone()]).unwrap();
        for d in 1..=9u8 {
            assert_abs_diff_eq!(avg.prob(d), p.prob(d), epsilon = 1e-15);
        }
        assert!(matches!(average_speaker_pmfs(&[]), Err(Error::EmptyPmfSet)));
    }

    #[test]
    fn regression_identity_fit() {
        let ideal = ideal_distribution();
        let fit = conformity_regression(&ideal, &ideal).unwrap();
        assert_abs_diff_eq!(fit.slope, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn regression_recovers_affine_transform() {
        // empirical = a·ideal + b stays a valid PMF for a = 1.5, b = (1-a)/9.
        let ideal = ideal_distribution();
        let (a, b) = (1.5, (1.0 - 1.5) / 9.0);
        let mut e = [0.0; DIGIT_COUNT];
        for (ev, &iv) in e.iter_mut().zip(ideal.values().iter()) {
            *ev = a * iv + b;
        }
        let empirical = DigitPmf::new(e).unwrap();
        let fit = conformity_regression(&empirical, &ideal).unwrap();
        assert_abs_diff_eq!(fit.slope, a, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.intercept, b, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn regression_rejects_constant_predictor() {
        let ideal = ideal_distribution();
        let flat = DigitPmf::uniform();
        assert!(matches!(
            conformity_regression(&ideal, &flat),
            Err(Error::ZeroVariancePredictor)
        ));
    }

    #[test]
    fn spectrum_histogram_drops_zero_bins_and_normalizes() {
        // Zero bins vanish; min-positive normalization leaves values >= 1.
        let hist = digit_histogram_of_spectrum(&[0.0, 0.002, 0.004, 0.018, 0.0])
            .unwrap()
            .unwrap();
        // normalized: 1.0, 2.0, 9.0
        assert_eq!(hist.total(), 3);
        assert_eq!(hist.count(1), 1);
        assert_eq!(hist.count(2), 1);
        assert_eq!(hist.count(9), 1);

        assert!(digit_histogram_of_spectrum(&[0.0, 0.0]).unwrap().is_none());
        assert!(digit_histogram_of_spectrum(&[]).unwrap().is_none());
    }

    #[test]
    fn pmf_json_uses_digit_keys() {
        let pmf = ideal_distribution();
        let json = serde_json::to_string(&pmf).unwrap();
        assert!(json.starts_with("{\"1\":0.3010"));
        let back: DigitPmf = serde_json::from_str(&json).unwrap();
        assert_eq!(back, pmf);
    }
}
