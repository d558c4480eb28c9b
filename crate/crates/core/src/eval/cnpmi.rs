use std::collections::HashMap;

use super::TopicSet;
use crate::corpus::{BowDocument, Language};
use crate::{Error, Result};

/// Comparable document pairs used only for co-occurrence counting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferencePairs {
    pairs: Vec<(BowDocument, BowDocument)>,
}

impl ReferencePairs {
    pub fn new(pairs: Vec<(BowDocument, BowDocument)>) -> Result<Self> {
        for (n, (a, b)) in pairs.iter().enumerate() {
            if a.language != Language::L1 || b.language != Language::L2 {
                return Err(Error::Contract(format!(
                    "reference pair {n} has wrong languages"
                )));
            }
            if a.entries.is_empty() || b.entries.is_empty() {
                return Err(Error::Contract(format!(
                    "reference pair {n} has an empty side"
                )));
            }
        }
        Ok(ReferencePairs { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(BowDocument, BowDocument)] {
        &self.pairs
    }
}

/// NPMI from presence counts over `n` pairs. Zero joint count gives −1;
/// a joint count of `n` (both words in every pair) gives 1.
pub fn npmi_from_counts(joint: usize, a: usize, b: usize, n: usize) -> f64 {
    if joint == 0 || a == 0 || b == 0 {
        return -1.0;
    }
    if joint == n {
        return 1.0;
    }
    let n = n as f64;
    let p_ab = joint as f64 / n;
    let p_a = a as f64 / n;
    let p_b = b as f64 / n;
    (p_ab / (p_a * p_b)).ln() / -p_ab.ln()
}

/// Cross-lingual NPMI between matched topics:
/// `(1/K) Σ_k (1/T²) Σ_{i ∈ top1(k)} Σ_{j ∈ top2(k)} NPMI(i, j)`,
/// with probabilities estimated from document-pair presence.
pub fn cnpmi(ts1: &TopicSet, ts2: &TopicSet, reference: &ReferencePairs) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::Config(
            "CNPMI needs a non-empty reference corpus".into(),
        ));
    }
    if ts1.num_topics() != ts2.num_topics() {
        return Err(Error::Dimension {
            expected: ts1.num_topics(),
            actual: ts2.num_topics(),
        });
    }
    if ts1.language == ts2.language {
        return Err(Error::Contract(
            "CNPMI compares two different languages".into(),
        ));
    }
    // orient so that `first` matches side 1 of the reference pairs
    let (first, second) = if ts1.language == Language::L1 {
        (ts1, ts2)
    } else {
        (ts2, ts1)
    };
    let n = reference.len();
    let presence = |set: &TopicSet, side: usize| -> HashMap<usize, Vec<bool>> {
        let mut map = HashMap::new();
        for t in &set.topics {
            for &(w, _) in t {
                map.entry(w).or_insert_with(|| {
                    reference
                        .pairs
                        .iter()
                        .map(|(a, b)| {
                            if side == 0 {
                                a.contains(w)
                            } else {
                                b.contains(w)
                            }
                        })
                        .collect()
                });
            }
        }
        map
    };
    let pres1 = presence(first, 0);
    let pres2 = presence(second, 1);

    let k = first.num_topics();
    let mut total = 0.0;
    for t in 0..k {
        let (w1, w2) = (&first.topics[t], &second.topics[t]);
        if w1.is_empty() || w2.is_empty() {
            continue;
        }
        let mut s = 0.0;
        for &(a, _) in w1 {
            let pa = &pres1[&a];
            let ca = pa.iter().filter(|&&p| p).count();
            for &(b, _) in w2 {
                let pb = &pres2[&b];
                let cb = pb.iter().filter(|&&p| p).count();
                let joint = pa.iter().zip(pb).filter(|(x, y)| **x && **y).count();
                s += npmi_from_counts(joint, ca, cb, n);
            }
        }
        total += s / (w1.len() * w2.len()) as f64;
    }
    Ok(total / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn doc(lang: Language, words: &[usize]) -> BowDocument {
        let mut entries: Vec<(usize, u32)> = words.iter().map(|&w| (w, 1)).collect();
        entries.sort();
        entries.dedup();
        BowDocument {
            language: lang,
            entries,
            label: None,
        }
    }

    fn single(lang: Language, words: &[usize]) -> TopicSet {
        TopicSet {
            language: lang,
            topics: vec![words.iter().map(|&w| (w, 0.0)).collect()],
        }
    }

    #[test]
    fn perfect_cooccurrence_is_one() {
        // word 0 (l1) and word 10 (l2) appear together in half the pairs, nowhere else
        let pairs = (0..10)
            .map(|i| {
                if i % 2 == 0 {
                    (doc(Language::L1, &[0, 1]), doc(Language::L2, &[10, 11]))
                } else {
                    (doc(Language::L1, &[1]), doc(Language::L2, &[11]))
                }
            })
            .collect();
        let r = ReferencePairs::new(pairs).unwrap();
        let v = cnpmi(
            &single(Language::L1, &[0]),
            &single(Language::L2, &[10]),
            &r,
        )
        .unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        // argument order does not matter
        let v = cnpmi(
            &single(Language::L2, &[10]),
            &single(Language::L1, &[0]),
            &r,
        )
        .unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn never_together_is_minus_one() {
        let pairs = vec![
            (doc(Language::L1, &[0]), doc(Language::L2, &[11])),
            (doc(Language::L1, &[1]), doc(Language::L2, &[10])),
        ];
        let r = ReferencePairs::new(pairs).unwrap();
        let v = cnpmi(
            &single(Language::L1, &[0]),
            &single(Language::L2, &[10]),
            &r,
        )
        .unwrap();
        assert_eq!(v, -1.0);
        // absent word
        let v = cnpmi(
            &single(Language::L1, &[5]),
            &single(Language::L2, &[10]),
            &r,
        )
        .unwrap();
        assert_eq!(v, -1.0);
    }

    #[test]
    fn independent_words_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pairs = (0..20_000)
            .map(|_| {
                let a: Vec<usize> = if rng.random::<f64>() < 0.3 {
                    vec![0, 1]
                } else {
                    vec![1]
                };
                let b: Vec<usize> = if rng.random::<f64>() < 0.4 {
                    vec![10, 11]
                } else {
                    vec![11]
                };
                (doc(Language::L1, &a), doc(Language::L2, &b))
            })
            .collect();
        let r = ReferencePairs::new(pairs).unwrap();
        let v = cnpmi(
            &single(Language::L1, &[0]),
            &single(Language::L2, &[10]),
            &r,
        )
        .unwrap();
        assert!(v.abs() < 0.1, "{v}");
    }

    #[test]
    fn errors() {
        let r = ReferencePairs::default();
        assert!(cnpmi(&single(Language::L1, &[0]), &single(Language::L2, &[1]), &r).is_err());
        let r =
            ReferencePairs::new(vec![(doc(Language::L1, &[0]), doc(Language::L2, &[1]))]).unwrap();
        let two = TopicSet {
            language: Language::L2,
            topics: vec![vec![], vec![]],
        };
        assert!(cnpmi(&single(Language::L1, &[0]), &two, &r).is_err());
        assert!(
            ReferencePairs::new(vec![(doc(Language::L2, &[0]), doc(Language::L2, &[1]))]).is_err()
        );
    }

    #[test]
    fn npmi_closed_forms() {
        assert_eq!(npmi_from_counts(0, 3, 4, 10), -1.0);
        assert_eq!(npmi_from_counts(10, 10, 10, 10), 1.0);
        // p_ab = p_a = p_b = 0.3
        assert_abs_diff_eq!(npmi_from_counts(3, 3, 3, 10), 1.0, epsilon = 1e-12);
        // p_ab = 0.1, p_a = p_b = 0.5: ln(0.4)/ln(10)... = ln(0.1/0.25)/(−ln 0.1)
        assert_abs_diff_eq!(
            npmi_from_counts(1, 5, 5, 10),
            (0.4f64).ln() / 10f64.ln(),
            epsilon = 1e-12
        );
    }
}
