//! Sentence-level BLEU and its keyword-weighted variant.

use std::collections::HashMap;

use super::lexer::KeywordSet;

pub const MAX_ORDER: usize = 4;
/// Unigram weight of a keyword relative to any other token.
pub const KEYWORD_WEIGHT: f64 = 5.0;

fn ngram_counts<T: AsRef<str>>(tokens: &[T], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram precision as (matched, total); add-one smoothing applies
/// to orders >= 2 when nothing matched.
fn precision<T: AsRef<str>>(candidate: &[T], reference: &[T], n: usize) -> f64 {
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let total: usize = cand.values().sum();
    let matched: usize = cand
        .iter()
        .map(|(g, c)| (*c).min(refs.get(g).copied().unwrap_or(0)))
        .sum();
    smooth(matched as f64, total as f64, n)
}

fn smooth(matched: f64, total: f64, n: usize) -> f64 {
    if n >= 2 && matched == 0.0 {
        return 1.0 / (total + 1.0);
    }
    if total == 0.0 {
        return 0.0;
    }
    matched / total
}

fn brevity_penalty(cand_len: usize, ref_len: usize) -> f64 {
    if cand_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    }
}

fn combine(precisions: &[f64], cand_len: usize, ref_len: usize) -> f64 {
    if cand_len == 0 || precisions.iter().any(|p| *p <= 0.0) {
        return 0.0;
    }
    let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / precisions.len() as f64;
    (brevity_penalty(cand_len, ref_len) * log_mean.exp()).clamp(0.0, 1.0)
}

/// Geometric mean of modified 1..=4-gram precisions times the brevity
/// penalty. An empty candidate scores 0.
pub fn bleu<T: AsRef<str>>(candidate: &[T], reference: &[T]) -> f64 {
    let precisions: Vec<f64> = (1..=MAX_ORDER).map(|n| precision(candidate, reference, n)).collect();
    combine(&precisions, candidate.len(), reference.len())
}

/// BLEU whose unigram precision weights keyword tokens by
/// [`KEYWORD_WEIGHT`]; higher orders are unweighted.
pub fn weighted_keyword_bleu<T: AsRef<str>>(candidate: &[T], reference: &[T], keywords: &KeywordSet) -> f64 {
    let weight = |tok: &str| if keywords.contains(tok) { KEYWORD_WEIGHT } else { 1.0 };
    let cand = ngram_counts(candidate, 1);
    let refs = ngram_counts(reference, 1);
    let mut matched = 0.0;
    let mut total = 0.0;
    for (g, c) in &cand {
        let w = weight(g[0]);
        total += w * *c as f64;
        matched += w * (*c).min(refs.get(g).copied().unwrap_or(0)) as f64;
    }
    let mut precisions = vec![smooth(matched, total, 1)];
    precisions.extend((2..=MAX_ORDER).map(|n| precision(candidate, reference, n)));
    combine(&precisions, candidate.len(), reference.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn identical_is_one() {
        let t = toks("if ( a ) return b ;");
        assert!((bleu(&t, &t) - 1.0).abs() < 1e-12);
        assert!((weighted_keyword_bleu(&t, &t, &KeywordSet::java()) - 1.0).abs() < 1e-12);
        let short = toks("x ;");
        assert!((bleu(&short, &short) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_candidate_is_zero() {
        assert_eq!(bleu(&Vec::<&str>::new(), &toks("a b")), 0.0);
    }

    #[test]
    fn disjoint_vocabularies() {
        // no unigram overlap: the unigram precision is 0, so the score is 0
        let score = bleu(&toks("a b c d e"), &toks("v w x y z"));
        assert!(score < 0.1);
        assert_eq!(score, 0.0);
    }

    #[test]
    fn hand_computed_value() {
        // cand: a b c d ; ref: a b c e
        // p1 = 3/4, p2 = 2/3, p3 = 1/2, p4 = 0 -> smoothed 1/(1+1)
        let expected = (0.75f64 * (2.0 / 3.0) * 0.5 * 0.5).powf(0.25);
        assert!((bleu(&toks("a b c d"), &toks("a b c e")) - expected).abs() < 1e-12);
        // brevity: cand a b c vs ref a b c d -> p = 1,1,1, p4 smoothed 1/1
        let bp = (1.0f64 - 4.0 / 3.0).exp();
        assert!((bleu(&toks("a b c"), &toks("a b c d")) - bp).abs() < 1e-12);
    }

    #[test]
    fn keyword_change_costs_more_than_identifier_change() {
        let kw = KeywordSet::java();
        let reference = toks("if ( a > b ) return a ; else return b ;");
        let kw_changed = toks("if ( a > b ) throw a ; else return b ;");
        let id_changed = toks("if ( a > b ) return c ; else return b ;");
        let k = weighted_keyword_bleu(&kw_changed, &reference, &kw);
        let i = weighted_keyword_bleu(&id_changed, &reference, &kw);
        assert!(k < i, "{k} !< {i}");
    }

    #[test]
    fn no_keywords_reduces_to_bleu() {
        let a = toks("x = y + z ;");
        let b = toks("x = y - z ;");
        assert!((weighted_keyword_bleu(&a, &b, &KeywordSet::java()) - bleu(&a, &b)).abs() < 1e-15);
    }
}
