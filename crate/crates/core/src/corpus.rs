//! Bilingual corpus ingestion: vocabulary, bag-of-words documents and
//! translation dictionaries.
//!
//! Words of both languages share one global index space. Indices
//! `0..V1` belong to the first language and `V1..V1+V2` to the second.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Language {
    L1,
    L2,
}

impl Language {
    pub const BOTH: [Language; 2] = [Language::L1, Language::L2];

    pub fn other(self) -> Language {
        match self {
            Language::L1 => Language::L2,
            Language::L2 => Language::L1,
        }
    }

    /// 0 for the first language, 1 for the second.
    pub fn slot(self) -> usize {
        match self {
            Language::L1 => 0,
            Language::L2 => 1,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Language::L1 => "l1",
            Language::L2 => "l2",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Language> {
        match tag {
            "l1" => Some(Language::L1),
            "l2" => Some(Language::L2),
            _ => None,
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Joint vocabulary of the two languages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: [Vec<String>; 2],
    index: [HashMap<String, usize>; 2],
}

impl Vocabulary {
    /// Builds a vocabulary from explicit per-language word lists.
    pub fn from_words(words_l1: Vec<String>, words_l2: Vec<String>) -> Result<Self> {
        let words = [words_l1, words_l2];
        let mut index: [HashMap<String, usize>; 2] = Default::default();
        for lang in Language::BOTH {
            let list = &words[lang.slot()];
            if list.is_empty() {
                return Err(Error::Config(format!(
                    "empty vocabulary for language {lang}"
                )));
            }
            let map = &mut index[lang.slot()];
            for (i, w) in list.iter().enumerate() {
                if map.insert(w.clone(), i).is_some() {
                    return Err(Error::Config(format!(
                        "duplicate word {w:?} in language {lang} vocabulary"
                    )));
                }
            }
        }
        Ok(Vocabulary { words, index })
    }

    pub fn size(&self, lang: Language) -> usize {
        self.words[lang.slot()].len()
    }

    /// Total number of words, `V1 + V2`.
    pub fn total(&self) -> usize {
        self.words[0].len() + self.words[1].len()
    }

    pub fn words(&self, lang: Language) -> &[String] {
        &self.words[lang.slot()]
    }

    /// First global index of `lang`.
    pub fn offset(&self, lang: Language) -> usize {
        match lang {
            Language::L1 => 0,
            Language::L2 => self.words[0].len(),
        }
    }

    /// Global index range of `lang`.
    pub fn range(&self, lang: Language) -> std::ops::Range<usize> {
        let start = self.offset(lang);
        start..start + self.size(lang)
    }

    pub fn language_of(&self, global: usize) -> Language {
        if global < self.words[0].len() {
            Language::L1
        } else {
            Language::L2
        }
    }

    pub fn global(&self, lang: Language, local: usize) -> usize {
        self.offset(lang) + local
    }

    pub fn local(&self, global: usize) -> (Language, usize) {
        let lang = self.language_of(global);
        (lang, global - self.offset(lang))
    }

    pub fn lookup(&self, lang: Language, word: &str) -> Option<usize> {
        self.index[lang.slot()]
            .get(word)
            .map(|&local| self.global(lang, local))
    }

    pub fn word(&self, global: usize) -> &str {
        let (lang, local) = self.local(global);
        &self.words[lang.slot()][local]
    }

    /// Writes `language<TAB>global_index<TAB>word` lines.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for lang in Language::BOTH {
            for (local, w) in self.words(lang).iter().enumerate() {
                out.push_str(&format!("{}\t{}\t{}\n", lang, self.global(lang, local), w));
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path.display().to_string();
        let mut words: [Vec<String>; 2] = Default::default();
        for (n, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::parse(
                    &name,
                    n + 1,
                    "expected 3 tab-separated columns",
                ));
            }
            let lang = Language::from_tag(cols[0])
                .ok_or_else(|| Error::parse(&name, n + 1, "unknown language tag"))?;
            let global: usize = cols[1]
                .parse()
                .map_err(|_| Error::parse(&name, n + 1, "bad index"))?;
            let expected = match lang {
                Language::L1 => words[0].len(),
                Language::L2 => words[0].len() + words[1].len(),
            };
            if global != expected {
                return Err(Error::parse(&name, n + 1, "indices out of order"));
            }
            words[lang.slot()].push(cols[2].to_string());
        }
        let [l1, l2] = words;
        Vocabulary::from_words(l1, l2)
    }
}

/// Builds the joint vocabulary by document-frequency pruning.
///
/// Per language, words with document frequency `>= min_doc_freq` are kept,
/// sorted by descending frequency (ties lexicographic) and truncated to
/// `max_vocab_per_lang`.
pub fn build_vocabulary<S: AsRef<str>>(
    docs_l1: &[Vec<S>],
    docs_l2: &[Vec<S>],
    min_doc_freq: usize,
    max_vocab_per_lang: usize,
) -> Result<Vocabulary> {
    if min_doc_freq == 0 {
        return Err(Error::Config("min_doc_freq must be >= 1".into()));
    }
    let mut lists = Vec::with_capacity(2);
    for (lang, docs) in [(Language::L1, docs_l1), (Language::L2, docs_l2)] {
        if docs.is_empty() {
            return Err(Error::Config(format!("empty corpus for language {lang}")));
        }
        let mut df: HashMap<&str, usize> = HashMap::new();
        for doc in docs {
            let uniq: BTreeSet<&str> = doc.iter().map(AsRef::as_ref).collect();
            for w in uniq {
                *df.entry(w).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> =
            df.into_iter().filter(|&(_, c)| c >= min_doc_freq).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        kept.truncate(max_vocab_per_lang);
        if kept.is_empty() {
            return Err(Error::Config(format!(
                "empty vocabulary for language {lang} after pruning"
            )));
        }
        lists.push(
            kept.into_iter()
                .map(|(w, _)| w.to_string())
                .collect::<Vec<_>>(),
        );
    }
    let l2 = lists.pop().unwrap();
    let l1 = lists.pop().unwrap();
    Vocabulary::from_words(l1, l2)
}

/// Sparse bag-of-words document over global word indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BowDocument {
    pub language: Language,
    /// `(global index, count)`, ascending by index, counts >= 1.
    pub entries: Vec<(usize, u32)>,
    pub label: Option<usize>,
}

impl BowDocument {
    pub fn token_count(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| c as u64).sum()
    }

    /// Dense count vector over the document's language vocabulary.
    pub fn dense(&self, vocab: &Vocabulary) -> Vec<f64> {
        let offset = vocab.offset(self.language);
        let mut x = vec![0.0; vocab.size(self.language)];
        for &(g, c) in &self.entries {
            x[g - offset] = c as f64;
        }
        x
    }

    pub fn contains(&self, global: usize) -> bool {
        self.entries
            .binary_search_by_key(&global, |&(g, _)| g)
            .is_ok()
    }
}

/// Counts in-vocabulary tokens; returns `None` when nothing survives.
pub fn vectorize<S: AsRef<str>>(
    doc: &[S],
    vocab: &Vocabulary,
    lang: Language,
) -> Option<BowDocument> {
    let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
    for tok in doc {
        if let Some(g) = vocab.lookup(lang, tok.as_ref()) {
            *counts.entry(g).or_default() += 1;
        }
    }
    if counts.is_empty() {
        return None;
    }
    Some(BowDocument {
        language: lang,
        entries: counts.into_iter().collect(),
        label: None,
    })
}

/// Vectorizes a whole corpus, attaching line-aligned labels.
///
/// Returns the kept documents and the number dropped as empty.
pub fn vectorize_corpus<S: AsRef<str>>(
    docs: &[Vec<S>],
    labels: Option<&[usize]>,
    vocab: &Vocabulary,
    lang: Language,
) -> Result<(Vec<BowDocument>, usize)> {
    if let Some(labels) = labels {
        if labels.len() != docs.len() {
            return Err(Error::Dimension {
                expected: docs.len(),
                actual: labels.len(),
            });
        }
    }
    let mut out = Vec::with_capacity(docs.len());
    let mut dropped = 0;
    for (i, doc) in docs.iter().enumerate() {
        match vectorize(doc, vocab, lang) {
            Some(mut bow) => {
                bow.label = labels.map(|l| l[i]);
                out.push(bow);
            }
            None => dropped += 1,
        }
    }
    if dropped > 0 {
        log::info!("language {lang}: dropped {dropped} empty documents");
    }
    Ok((out, dropped))
}

/// Symmetric translation sets over global indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TranslationDictionary {
    /// Unique `(l1 global, l2 global)` entries.
    entries: BTreeSet<(usize, usize)>,
    trans: BTreeMap<usize, BTreeSet<usize>>,
}

impl TranslationDictionary {
    /// Builds from `(l1 global, l2 global)` entries.
    pub fn from_entries(entries: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let entries: BTreeSet<(usize, usize)> = entries.into_iter().collect();
        let mut trans: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for &(a, b) in &entries {
            trans.entry(a).or_default().insert(b);
            trans.entry(b).or_default().insert(a);
        }
        TranslationDictionary { entries, trans }
    }

    pub fn translations(&self, global: usize) -> Option<&BTreeSet<usize>> {
        self.trans.get(&global)
    }

    pub fn entries(&self) -> &BTreeSet<(usize, usize)> {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fraction of the language's words having at least one translation.
    pub fn coverage(&self, vocab: &Vocabulary, lang: Language) -> f64 {
        let covered = vocab
            .range(lang)
            .filter(|g| self.trans.contains_key(g))
            .count();
        covered as f64 / vocab.size(lang) as f64
    }

    /// Keeps a uniformly random `fraction` of the entries (rounded to the
    /// nearest count).
    pub fn subsample(&self, fraction: f64, seed: u64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::Config(format!(
                "dictionary coverage must be in (0, 1], got {fraction}"
            )));
        }
        let mut all: Vec<(usize, usize)> = self.entries.iter().copied().collect();
        let keep = (fraction * all.len() as f64).round() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        all.shuffle(&mut rng);
        all.truncate(keep);
        Ok(Self::from_entries(all))
    }
}

/// Retains the pairs whose two sides are both in vocabulary.
pub fn load_dictionary<S: AsRef<str>>(
    pairs: &[(S, S)],
    vocab: &Vocabulary,
) -> TranslationDictionary {
    let entries = pairs.iter().filter_map(|(a, b)| {
        let a = vocab.lookup(Language::L1, a.as_ref())?;
        let b = vocab.lookup(Language::L2, b.as_ref())?;
        Some((a, b))
    });
    let dict = TranslationDictionary::from_entries(entries);
    if dict.is_empty() {
        log::warn!("no dictionary pair has both sides in the vocabulary");
    }
    log::info!(
        "dictionary: {} entries, coverage l1 {:.3}, l2 {:.3}",
        dict.entries.len(),
        dict.coverage(vocab, Language::L1),
        dict.coverage(vocab, Language::L2)
    );
    dict
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// One document per line, whitespace-separated tokens.
pub fn read_corpus(path: &Path) -> Result<Vec<Vec<String>>> {
    Ok(read_text(path)?
        .lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect())
}

pub fn write_corpus<S: AsRef<str>>(path: &Path, docs: &[Vec<S>]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for doc in docs {
        let line: Vec<&str> = doc.iter().map(AsRef::as_ref).collect();
        writeln!(f, "{}", line.join(" ")).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// One integer class id per line.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let name = path.display().to_string();
    read_text(path)?
        .lines()
        .enumerate()
        .map(|(n, l)| {
            l.trim()
                .parse()
                .map_err(|_| Error::parse(&name, n + 1, format!("bad label {l:?}")))
        })
        .collect()
}

/// `source<TAB>target` pairs; `#` lines and blank lines are skipped.
pub fn read_dictionary(path: &Path) -> Result<Vec<(String, String)>> {
    let name = path.display().to_string();
    let mut pairs = Vec::new();
    for (n, line) in read_text(path)?.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        match (cols.next(), cols.next(), cols.next()) {
            (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => {
                pairs.push((a.to_string(), b.to_string()))
            }
            _ => return Err(Error::parse(&name, n + 1, "expected source<TAB>target")),
        }
    }
    Ok(pairs)
}
