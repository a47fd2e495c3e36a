//! Evaluation statistics: pass@k, exact match, per-run summaries, model
//! overlap and the distributional tests used to compare similarity scores.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("empty input")]
    EmptyInput,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("too few non-zero pairs: {0} (need at least {MIN_PAIRS})")]
    TooFewPairs(usize),
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// Largest number of non-zero pairs handled by exact enumeration.
pub const EXACT_WILCOXON_MAX: usize = 20;
const MIN_PAIRS: usize = 5;

/// Removes every ASCII whitespace byte (space, tab, CR, LF, FF).
pub fn canonical_form(code: &str) -> String {
    code.chars().filter(|c| !c.is_ascii_whitespace()).collect()
}

/// Hex SHA-256 of the canonical form; two patches are duplicates iff their
/// hashes agree.
pub fn content_hash(code: &str) -> String {
    canonical_hash(&canonical_form(code))
}

/// Hex SHA-256 of an already canonicalized string.
pub fn canonical_hash(canonical: &str) -> String {
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Exact match ignoring whitespace.
pub fn exact_match(a: &str, b: &str) -> bool {
    canonical_form(a) == canonical_form(b)
}

/// Unbiased pass@k estimate `1 - C(n-c, k) / C(n, k)`.
///
/// Evaluated as `1 - prod_{i=n-c+1..=n} (1 - k/i)`, which stays finite for
/// any `n` that fits in memory. `k == 1` returns `c / n` directly.
pub fn pass_at_k(n: usize, c: usize, k: usize) -> Result<f64, MetricsError> {
    if c > n {
        return Err(MetricsError::DomainError(format!("c={c} exceeds n={n}")));
    }
    if k == 0 || k > n {
        return Err(MetricsError::DomainError(format!("k={k} outside 1..={n}")));
    }
    if k == 1 {
        return Ok(c as f64 / n as f64);
    }
    if n - c < k {
        return Ok(1.0);
    }
    let kf = k as f64;
    let miss = ((n - c + 1)..=n).fold(1.0_f64, |acc, i| acc * (1.0 - kf / i as f64));
    Ok(1.0 - miss)
}

/// pass@k over a candidate pool that may hold fewer than `k` samples.
///
/// With `n < k` every sample is drawn, so the value is 1 when any sample is
/// correct. An empty pool scores 0.
pub fn pass_at_k_capped(n: usize, c: usize, k: usize) -> Result<f64, MetricsError> {
    if n == 0 {
        return Ok(0.0);
    }
    pass_at_k(n, c, k.clamp(1, n))
}

/// Per-bug tallies collected after validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugResult {
    pub bug_id: String,
    pub project: String,
    /// Total candidates, duplicates included.
    pub n: usize,
    /// Candidates classified Plausible.
    pub c: usize,
    pub compile_count: usize,
    pub unique_count: usize,
    /// Candidates equal to the developer fix ignoring whitespace. Not
    /// required to be `<= c`: exact matches are still judged by the tests.
    pub em_count: usize,
}

impl BugResult {
    pub fn check(&self) -> Result<(), MetricsError> {
        if self.c > self.n || self.compile_count > self.n || self.c > self.compile_count {
            return Err(MetricsError::DomainError(format!(
                "inconsistent counts for {}: n={} c={} compile={}",
                self.bug_id, self.n, self.c, self.compile_count
            )));
        }
        if self.unique_count > self.n || (self.n > 0 && self.unique_count == 0) {
            return Err(MetricsError::DomainError(format!(
                "unique_count {} inconsistent with n={} for {}",
                self.unique_count, self.n, self.bug_id
            )));
        }
        Ok(())
    }

    pub fn fixed(&self) -> bool {
        self.c >= 1
    }
}

/// Unweighted mean of per-bug pass@k (each bug one vote).
pub fn aggregate_pass_at_k(results: &[BugResult], k: usize) -> Result<f64, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut total = 0.0;
    for r in results {
        total += pass_at_k(r.n, r.c, k)?;
    }
    Ok(total / results.len() as f64)
}

/// Percentages averaged across bugs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub duplicate_pct: f64,
    pub compile_pct: f64,
    pub plausible_pct: f64,
}

pub fn summary_stats(results: &[BugResult]) -> Result<SummaryStats, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut dup = 0.0;
    let mut compile = 0.0;
    let mut plausible = 0.0;
    for r in results {
        if r.n == 0 {
            return Err(MetricsError::DomainError(format!("{} has no candidates", r.bug_id)));
        }
        r.check()?;
        let n = r.n as f64;
        dup += 100.0 * (r.n - r.unique_count) as f64 / n;
        compile += 100.0 * r.compile_count as f64 / n;
        plausible += 100.0 * r.c as f64 / n;
    }
    let bugs = results.len() as f64;
    Ok(SummaryStats {
        duplicate_pct: dup / bugs,
        compile_pct: compile / bugs,
        plausible_pct: plausible / bugs,
    })
}

/// Venn-style breakdown of which models fixed which bugs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overlap {
    /// Keyed by the `&`-joined model ids of an exact membership region,
    /// e.g. `"a"` (fixed only by `a`) or `"a&b&c"` (fixed by all three).
    pub regions: BTreeMap<String, usize>,
    pub union: usize,
    pub totals: BTreeMap<String, usize>,
}

pub fn overlap(fixed_sets: &BTreeMap<String, BTreeSet<String>>) -> Result<Overlap, MetricsError> {
    let models: Vec<&String> = fixed_sets.keys().collect();
    if models.is_empty() || models.len() > 3 {
        return Err(MetricsError::DomainError(format!(
            "overlap needs 1 to 3 models, got {}",
            models.len()
        )));
    }
    let mut regions = BTreeMap::new();
    for mask in 1u32..(1 << models.len()) {
        regions.insert(region_label(&models, mask), 0usize);
    }
    let union: BTreeSet<&String> = fixed_sets.values().flatten().collect();
    for bug in &union {
        let mask = models
            .iter()
            .enumerate()
            .filter(|(_, m)| fixed_sets[m.as_str()].contains(bug.as_str()))
            .fold(0u32, |acc, (i, _)| acc | (1 << i));
        *regions.get_mut(&region_label(&models, mask)).expect("region exists") += 1;
    }
    let totals = fixed_sets.iter().map(|(m, s)| (m.clone(), s.len())).collect();
    Ok(Overlap {
        regions,
        union: union.len(),
        totals,
    })
}

fn region_label(models: &[&String], mask: u32) -> String {
    models
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, m)| m.as_str())
        .collect::<Vec<_>>()
        .join("&")
}

/// Quantile with linear interpolation at position `(n - 1) * p` of the
/// sorted sample.
pub fn quantile(samples: &[f64], p: f64) -> Result<f64, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if !(0.0..=1.0).contains(&p) || samples.iter().any(|x| x.is_nan()) {
        return Err(MetricsError::DomainError("quantile outside [0,1] or NaN sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, p))
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Fisher excess kurtosis `m4 / m2^2 - 3` with biased central moments.
pub fn excess_kurtosis(samples: &[f64]) -> Result<f64, MetricsError> {
    let n = samples.len() as f64;
    if samples.len() < 2 {
        return Err(MetricsError::InsufficientData("kurtosis needs at least 2 samples".into()));
    }
    let mean = samples.iter().sum::<f64>() / n;
    let m2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if m2 == 0.0 || samples.iter().all(|x| *x == samples[0]) {
        return Err(MetricsError::InsufficientData("kurtosis undefined for constant sample".into()));
    }
    let m4 = samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    Ok(m4 / (m2 * m2) - 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub count: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    /// `None` when the sample is constant.
    pub kurtosis: Option<f64>,
}

pub fn distribution_summary(samples: &[f64]) -> Result<DistributionSummary, MetricsError> {
    if samples.len() < 4 {
        return Err(MetricsError::InsufficientData(format!(
            "quartiles need at least 4 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(MetricsError::DomainError("NaN sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    Ok(DistributionSummary {
        count: samples.len(),
        median: quantile_sorted(&sorted, 0.5),
        q1,
        q3,
        iqr: q3 - q1,
        kurtosis: excess_kurtosis(samples).ok(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of the positive differences.
    pub w_plus: f64,
    /// Pairs left after dropping zero differences.
    pub pairs: usize,
    pub p_value: f64,
    pub exact: bool,
}

/// One-sided Wilcoxon signed-rank test of `median(x - y) > 0`.
///
/// Zero differences are dropped and tied magnitudes receive mid-ranks. Up to
/// [`EXACT_WILCOXON_MAX`] pairs the null distribution is enumerated exactly;
/// above that a tie- and continuity-corrected normal approximation is used.
pub fn wilcoxon_signed_rank_one_sided(x: &[f64], y: &[f64]) -> Result<WilcoxonResult, MetricsError> {
    let (diffs, ranks) = signed_ranks(x, y)?;
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    let m = diffs.len();
    let (p_value, exact) = if m <= EXACT_WILCOXON_MAX {
        (exact_upper_tail(&ranks, w_plus), true)
    } else {
        (normal_upper_tail(&ranks, w_plus), false)
    };
    Ok(WilcoxonResult {
        w_plus,
        pairs: m,
        p_value,
        exact,
    })
}

/// Normal-approximation p-value regardless of sample size.
pub fn wilcoxon_normal_approx(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    let (diffs, ranks) = signed_ranks(x, y)?;
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    Ok(normal_upper_tail(&ranks, w_plus))
}

fn signed_ranks(x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>), MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch(x.len(), y.len()));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(MetricsError::DomainError("NaN in paired samples".into()));
    }
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(MetricsError::AllZeroDifferences);
    }
    if diffs.len() < MIN_PAIRS {
        return Err(MetricsError::TooFewPairs(diffs.len()));
    }
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut ranks = vec![0.0; diffs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        // positions i..=j share the mean of ranks i+1..=j+1
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mid;
        }
        i = j + 1;
    }
    Ok((diffs, ranks))
}

/// `P(W+ >= w)` under the null, by counting sign assignments. Mid-ranks are
/// multiples of 1/2, so the subset-sum table runs over doubled ranks.
fn exact_upper_tail(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    let mut counts = vec![0u64; max_sum + 1];
    counts[0] = 1;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let threshold = (w_plus * 2.0).round() as usize;
    let hits: u64 = counts[threshold..].iter().sum();
    hits as f64 / (1u64 << ranks.len()) as f64
}

fn normal_upper_tail(ranks: &[f64], w_plus: f64) -> f64 {
    let m = ranks.len() as f64;
    let mean = m * (m + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|r| **r == sorted[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let var = m * (m + 1.0) * (2.0 * m + 1.0) / 24.0 - tie_term / 48.0;
    let z = (w_plus - mean - 0.5) / var.sqrt();
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn choose(n: u64, k: u64) -> f64 {
        if k > n {
            return 0.0;
        }
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn pass_at_k_examples() {
        assert_eq!(pass_at_k(100, 0, 10).unwrap(), 0.0);
        assert_eq!(pass_at_k(100, 100, 1).unwrap(), 1.0);
        assert!((pass_at_k(5, 2, 2).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn pass_at_k_matches_binomial_ratio_for_large_n() {
        let got = pass_at_k(10_000, 37, 100).unwrap();
        // log-space reference
        let ln_ratio: f64 = (0..100)
            .map(|i| ((10_000 - 37 - i) as f64).ln() - ((10_000 - i) as f64).ln())
            .sum();
        assert!((got - (1.0 - ln_ratio.exp())).abs() < 1e-10);
        assert!((pass_at_k(30, 4, 3).unwrap() - (1.0 - choose(26, 3) / choose(30, 3))).abs() < 1e-12);
    }

    #[test]
    fn pass_at_k_rejects_bad_domain() {
        assert!(matches!(pass_at_k(5, 6, 1), Err(MetricsError::DomainError(_))));
        assert!(matches!(pass_at_k(5, 1, 0), Err(MetricsError::DomainError(_))));
        assert!(matches!(pass_at_k(5, 1, 6), Err(MetricsError::DomainError(_))));
    }

    #[test]
    fn capped_pass_at_k() {
        assert_eq!(pass_at_k_capped(0, 0, 5).unwrap(), 0.0);
        assert_eq!(pass_at_k_capped(3, 1, 5).unwrap(), 1.0);
        assert_eq!(pass_at_k_capped(3, 0, 5).unwrap(), 0.0);
        assert_eq!(pass_at_k_capped(10, 2, 5).unwrap(), pass_at_k(10, 2, 5).unwrap());
    }

    fn result(id: &str, n: usize, c: usize) -> BugResult {
        BugResult {
            bug_id: id.into(),
            project: "P".into(),
            n,
            c,
            compile_count: c,
            unique_count: n.min(1).max(n),
            em_count: 0,
        }
    }

    #[test]
    fn aggregate_examples() {
        let two = [result("a", 4, 0), result("b", 4, 4)];
        assert!((aggregate_pass_at_k(&two, 1).unwrap() - 0.5).abs() < 1e-15);
        let all = [result("a", 3, 3), result("b", 7, 7)];
        assert_eq!(aggregate_pass_at_k(&all, 2).unwrap(), 1.0);
        let three = [result("a", 5, 2), result("b", 5, 0), result("c", 5, 5)];
        assert!((aggregate_pass_at_k(&three, 2).unwrap() - 1.7 / 3.0).abs() < 1e-12);
        assert_eq!(aggregate_pass_at_k(&[], 1), Err(MetricsError::EmptyInput));
    }

    #[test]
    fn canonical_form_examples() {
        assert_eq!(canonical_form("int x = 1;"), canonical_form("int  x=1 ;\n"));
        assert_eq!(canonical_form(""), "");
        assert!(exact_match("a b", "ab"));
        assert_eq!(canonical_form("\ta\r\n\x0cb"), "ab");
    }

    #[test]
    fn summary_examples() {
        let one = BugResult {
            bug_id: "x".into(),
            project: "P".into(),
            n: 10,
            c: 2,
            compile_count: 5,
            unique_count: 6,
            em_count: 0,
        };
        let s = summary_stats(&[one]).unwrap();
        assert!((s.duplicate_pct - 40.0).abs() < 1e-12);
        assert!((s.compile_pct - 50.0).abs() < 1e-12);
        assert!((s.plausible_pct - 20.0).abs() < 1e-12);

        let s = summary_stats(&[result("a", 4, 0), result("b", 4, 4)]).unwrap();
        assert!((s.plausible_pct - 50.0).abs() < 1e-12);

        let mut none = result("a", 4, 0);
        none.compile_count = 0;
        let s = summary_stats(&[none]).unwrap();
        assert_eq!((s.compile_pct, s.plausible_pct), (0.0, 0.0));
        assert_eq!(summary_stats(&[]), Err(MetricsError::EmptyInput));
    }

    fn sets(spec: &[(&str, &[&str])]) -> BTreeMap<String, BTreeSet<String>> {
        spec.iter()
            .map(|(m, bugs)| (m.to_string(), bugs.iter().map(|b| b.to_string()).collect()))
            .collect()
    }

    #[test]
    fn overlap_three_models() {
        let o = overlap(&sets(&[("A", &["1", "2"]), ("B", &["2", "3"]), ("C", &["2"])])).unwrap();
        assert_eq!(o.regions.len(), 7);
        assert_eq!(o.regions["A&B&C"], 1);
        assert_eq!(o.regions["A"], 1);
        assert_eq!(o.regions["B"], 1);
        assert_eq!(o.regions["C"], 0);
        assert_eq!(o.regions["A&B"], 0);
        assert_eq!(o.union, 3);
        assert_eq!(o.totals["A"], 2);
    }

    #[test]
    fn overlap_identical_and_disjoint() {
        let o = overlap(&sets(&[("A", &["1", "2"]), ("B", &["1", "2"])])).unwrap();
        assert_eq!(o.regions["A&B"], 2);
        assert_eq!(o.regions["A"] + o.regions["B"], 0);
        let o = overlap(&sets(&[("A", &["1"]), ("B", &["2"]), ("C", &["3"])])).unwrap();
        assert_eq!(o.regions["A&B&C"], 0);
        assert_eq!(o.union, 3);
        assert!(overlap(&BTreeMap::new()).is_err());
    }

    #[test]
    fn distribution_examples() {
        let d = distribution_summary(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((d.median, d.q1, d.q3, d.iqr), (2.5, 1.75, 3.25, 1.5));

        let d = distribution_summary(&[0.7; 6]).unwrap();
        assert_eq!(d.iqr, 0.0);
        assert_eq!(d.kurtosis, None);
        assert!(matches!(excess_kurtosis(&[0.7; 6]), Err(MetricsError::InsufficientData(_))));

        let two_point: Vec<f64> = (0..50).flat_map(|_| [-1.0, 1.0]).collect();
        assert!((excess_kurtosis(&two_point).unwrap() + 2.0).abs() < 1e-12);
        assert!(matches!(distribution_summary(&[1.0, 2.0, 3.0]), Err(MetricsError::InsufficientData(_))));
    }

    #[test]
    fn wilcoxon_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = [0.0; 6];
        let r = wilcoxon_signed_rank_one_sided(&x, &y).unwrap();
        assert_eq!(r.w_plus, 21.0);
        assert_eq!(r.p_value, 0.015625);
        assert!(r.exact);

        assert_eq!(wilcoxon_signed_rank_one_sided(&x, &x), Err(MetricsError::AllZeroDifferences));
        assert_eq!(
            wilcoxon_signed_rank_one_sided(&[1.0, 2.0, 0.0], &[0.0, 0.0, 0.0]),
            Err(MetricsError::TooFewPairs(2))
        );
        assert!(matches!(
            wilcoxon_signed_rank_one_sided(&[1.0], &[1.0, 2.0]),
            Err(MetricsError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn wilcoxon_null_centered_pattern() {
        // d = +1,-2,-3,+4,+5,-6 : W+ = 10, null mean 10.5
        let d = [1.0, -2.0, -3.0, 4.0, 5.0, -6.0];
        let r = wilcoxon_signed_rank_one_sided(&d, &[0.0; 6]).unwrap();
        assert_eq!(r.w_plus, 10.0);
        // 37 of the 64 sign assignments reach W+ >= 10
        assert_eq!(r.p_value, 37.0 / 64.0);
    }

    #[test]
    fn wilcoxon_mid_ranks() {
        // |d| ties: 1,1,2,2,3 -> ranks 1.5,1.5,3.5,3.5,5
        let d = [1.0, -1.0, 2.0, 2.0, 3.0];
        let r = wilcoxon_signed_rank_one_sided(&d, &[0.0; 5]).unwrap();
        assert_eq!(r.w_plus, 1.5 + 3.5 + 3.5 + 5.0);
    }

    #[test]
    fn wilcoxon_large_sample_uses_normal_branch() {
        let x: Vec<f64> = (1..=30).map(|i| i as f64).collect();
        let y = vec![0.0; 30];
        let r = wilcoxon_signed_rank_one_sided(&x, &y).unwrap();
        assert!(!r.exact);
        assert!(r.p_value > 0.0 && r.p_value < 1e-5);
    }
}
