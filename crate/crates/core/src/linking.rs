//! Cross-lingual vocabulary linking.
//!
//! A word is linked to the translations of itself and of its nearest
//! monolingual embedding neighbors:
//!
//! ```text
//! CVL(w) = ⋃ trans(u)  for u ∈ {w} ∪ NN(w)
//! ```
//!
//! Linked pairs are directional and drive the contrastive alignment loss.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use crate::corpus::{Language, TranslationDictionary, Vocabulary};
use crate::embedding::{nearest_neighbors, EmbeddingTable};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Provenance {
    /// `j` is a dictionary translation of `i` itself.
    Dictionary,
    /// `j` is only reachable through a neighbor of `i`.
    Neighbor,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Dictionary => "dictionary",
            Provenance::Neighbor => "neighbor",
        })
    }
}

/// Per-word linked sets over global indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkTable {
    /// `links[i]` = CVL(w_i) with provenance, ascending by target index.
    links: Vec<Vec<(usize, Provenance)>>,
    n_cvl: usize,
}

/// A positive pair drawn uniformly from all links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkedPair {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

impl LinkTable {
    /// Builds a table from explicit per-word link sets, checking that every
    /// link crosses languages.
    pub fn from_links(vocab: &Vocabulary, links: Vec<Vec<(usize, Provenance)>>) -> Result<Self> {
        if links.len() != vocab.total() {
            return Err(Error::Dimension {
                expected: vocab.total(),
                actual: links.len(),
            });
        }
        let mut links = links;
        for (i, set) in links.iter_mut().enumerate() {
            set.sort();
            set.dedup_by_key(|(j, _)| *j);
            for &(j, _) in set.iter() {
                if j >= vocab.total() || vocab.language_of(j) == vocab.language_of(i) {
                    return Err(Error::Contract(format!(
                        "link {i} -> {j} does not cross languages"
                    )));
                }
            }
        }
        let n_cvl = links.iter().map(Vec::len).sum();
        Ok(LinkTable { links, n_cvl })
    }

    /// Total number of directional links, `N_CVL`.
    pub fn n_cvl(&self) -> usize {
        self.n_cvl
    }

    pub fn num_words(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self, i: usize) -> &[(usize, Provenance)] {
        &self.links[i]
    }

    pub fn linked(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.links[i].iter().map(|&(j, _)| j)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.links[i].binary_search_by_key(&j, |&(t, _)| t).is_ok()
    }

    pub fn count(&self, provenance: Provenance) -> usize {
        self.links
            .iter()
            .flatten()
            .filter(|(_, p)| *p == provenance)
            .count()
    }

    /// Writes `word_i<TAB>word_j<TAB>provenance`, grouped under `# l1 -> l2`
    /// and `# l2 -> l1` section markers so source languages stay unambiguous.
    pub fn write_tsv(&self, path: &Path, vocab: &Vocabulary) -> Result<()> {
        let mut out = String::new();
        for lang in Language::BOTH {
            out.push_str(&format!("# {} -> {}\n", lang, lang.other()));
            for i in vocab.range(lang) {
                for &(j, p) in &self.links[i] {
                    out.push_str(&format!("{}\t{}\t{}\n", vocab.word(i), vocab.word(j), p));
                }
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read_tsv(path: &Path, vocab: &Vocabulary) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path.display().to_string();
        let mut links = vec![Vec::new(); vocab.total()];
        let mut source_lang = None;
        for (n, line) in text.lines().enumerate() {
            if let Some(marker) = line.strip_prefix("# ") {
                source_lang = match marker {
                    "l1 -> l2" => Some(Language::L1),
                    "l2 -> l1" => Some(Language::L2),
                    _ => source_lang,
                };
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lang = source_lang
                .ok_or_else(|| Error::parse(&name, n + 1, "link before section marker"))?;
            let cols: Vec<&str> = line.split('\t').collect();
            let [wi, wj, prov] = cols[..] else {
                return Err(Error::parse(&name, n + 1, "expected 3 columns"));
            };
            let i = vocab
                .lookup(lang, wi)
                .ok_or_else(|| Error::parse(&name, n + 1, format!("unknown word {wi:?}")))?;
            let j = vocab
                .lookup(lang.other(), wj)
                .ok_or_else(|| Error::parse(&name, n + 1, format!("unknown word {wj:?}")))?;
            let p = match prov {
                "dictionary" => Provenance::Dictionary,
                "neighbor" => Provenance::Neighbor,
                _ => return Err(Error::parse(&name, n + 1, "unknown provenance")),
            };
            links[i].push((j, p));
        }
        LinkTable::from_links(vocab, links)
    }
}

/// Builds CVL sets from a dictionary and per-language embedding tables.
///
/// `embeddings` is indexed by [`Language::slot`]; tables may be absent only
/// when `n_neighbors == 0`.
pub fn build_cvl(
    vocab: &Vocabulary,
    dict: &TranslationDictionary,
    embeddings: [Option<&EmbeddingTable>; 2],
    n_neighbors: usize,
) -> Result<LinkTable> {
    let mut links = vec![Vec::new(); vocab.total()];
    for lang in Language::BOTH {
        let table = if n_neighbors > 0 {
            let t = embeddings[lang.slot()].ok_or_else(|| {
                Error::Config(format!(
                    "neighbor linking requested but no {lang} embedding table"
                ))
            })?;
            if t.len() != vocab.size(lang) {
                return Err(Error::Dimension {
                    expected: vocab.size(lang),
                    actual: t.len(),
                });
            }
            Some(t)
        } else {
            None
        };
        for i in vocab.range(lang) {
            let mut set: BTreeMap<usize, Provenance> = BTreeMap::new();
            for &j in dict.translations(i).into_iter().flatten() {
                set.insert(j, Provenance::Dictionary);
            }
            if let Some(t) = table {
                let local = i - vocab.offset(lang);
                for nb in nearest_neighbors(t, local, n_neighbors)? {
                    let g = vocab.global(lang, nb);
                    for &j in dict.translations(g).into_iter().flatten() {
                        set.entry(j).or_insert(Provenance::Neighbor);
                    }
                }
            }
            links[i] = set.into_iter().collect();
        }
    }
    let table = LinkTable::from_links(vocab, links)?;
    if table.n_cvl == 0 {
        return Err(Error::Config(
            "no linked cross-lingual word pairs: no alignment signal".into(),
        ));
    }
    Ok(table)
}

/// All linked pairs in ascending `(i, j)` order, each weighted `1/N_CVL`.
pub fn enumerate_pairs(table: &LinkTable) -> Result<Vec<LinkedPair>> {
    if table.n_cvl == 0 {
        return Err(Error::Contract("link table has no pairs".into()));
    }
    let weight = 1.0 / table.n_cvl as f64;
    Ok(table
        .links
        .iter()
        .enumerate()
        .flat_map(|(i, set)| {
            set.iter().map(move |&(j, _)| LinkedPair {
                source: i,
                target: j,
                weight,
            })
        })
        .collect())
}

/// Contrast set for the positive pair `(i, j)`: `{j} ∪ (V(lang j) \ CVL(i))`.
pub fn negative_set(
    table: &LinkTable,
    vocab: &Vocabulary,
    i: usize,
    j: usize,
) -> Result<BTreeSet<usize>> {
    if !table.contains(i, j) {
        return Err(Error::Contract(format!("{j} is not linked from {i}")));
    }
    let mut set: BTreeSet<usize> = vocab
        .range(vocab.language_of(j))
        .filter(|&k| !table.contains(i, k))
        .collect();
    set.insert(j);
    Ok(set)
}
