//! Document ingestion, the inverted index with collection statistics, and the
//! windowed n-gram model used for collocation lookup.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{normalize_with_surface, PipelineConfig};

/// Window size used when none is configured.
pub const DEFAULT_WINDOW_SIZE: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub raw_text: String,
    /// Normalized terms, stopwords removed and stemmed, in text order.
    pub tokens: Vec<String>,
}

impl Document {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Occurrences of `phrase` as a run of adjacent tokens.
    pub fn phrase_count(&self, phrase: &[String]) -> u64 {
        count_phrase(&self.tokens, phrase)
    }
}

pub(crate) fn count_phrase(tokens: &[String], phrase: &[String]) -> u64 {
    match phrase.len() {
        0 => 0,
        1 => tokens.iter().filter(|t| **t == phrase[0]).count() as u64,
        n if n > tokens.len() => 0,
        _ => tokens
            .windows(phrase.len())
            .filter(|w| *w == phrase)
            .count() as u64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    /// Position of the document in [`CollectionIndex::documents`].
    pub doc: u32,
    /// Within-document count of the term.
    pub count: u32,
}

/// Read-only counting interface used by role resolution and term filters.
pub trait TermStats {
    /// Collection frequency of a normalized term (or space-joined phrase).
    fn collection_frequency(&self, term: &str) -> u64;
    fn total_tokens(&self) -> u64;
}

/// Inverted index over a document collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionIndex {
    pipeline: PipelineConfig,
    /// Sorted by `doc_id`.
    documents: Vec<Document>,
    postings: BTreeMap<String, Vec<Posting>>,
    collection_counts: BTreeMap<String, u64>,
    total_tokens: u64,
    /// Most frequent lowercased surface form of each term.
    surfaces: BTreeMap<String, String>,
}

impl CollectionIndex {
    /// Build from `(doc_id, text)` pairs. Documents are ordered by id, so the
    /// result does not depend on input order.
    pub fn from_texts<I, S, T>(texts: I, pipeline: PipelineConfig) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut raw: Vec<(String, String)> = texts
            .into_iter()
            .map(|(id, text)| (id.into(), text.into()))
            .collect();
        if raw.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        raw.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = raw.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Config(format!("duplicate doc_id {}", w[0].0)));
        }

        let analysed: Vec<(Document, Vec<(String, String)>)> = raw
            .into_par_iter()
            .map(|(doc_id, raw_text)| {
                let pairs = normalize_with_surface(&raw_text, &pipeline);
                let tokens = pairs.iter().map(|(_, t)| t.clone()).collect();
                (
                    Document {
                        doc_id,
                        raw_text,
                        tokens,
                    },
                    pairs,
                )
            })
            .collect();

        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut collection_counts: BTreeMap<String, u64> = BTreeMap::new();
        let mut surface_counts: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
        let mut total_tokens = 0u64;
        let mut documents = Vec::with_capacity(analysed.len());

        for (i, (doc, pairs)) in analysed.into_iter().enumerate() {
            let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
            for t in &doc.tokens {
                *tf.entry(t.as_str()).or_default() += 1;
            }
            for (term, count) in tf {
                postings.entry(term.to_string()).or_default().push(Posting {
                    doc: i as u32,
                    count,
                });
                *collection_counts.entry(term.to_string()).or_default() += u64::from(count);
            }
            for (surface, term) in pairs {
                *surface_counts
                    .entry(term)
                    .or_default()
                    .entry(surface)
                    .or_default() += 1;
            }
            total_tokens += doc.len() as u64;
            documents.push(doc);
        }

        let surfaces = surface_counts
            .into_iter()
            .map(|(term, forms)| {
                let best = forms
                    .into_iter()
                    .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
                    .map(|(s, _)| s)
                    .unwrap_or_default();
                (term, best)
            })
            .collect();

        Ok(Self {
            pipeline,
            documents,
            postings,
            collection_counts,
            total_tokens,
            surfaces,
        })
    }

    pub fn pipeline(&self) -> &PipelineConfig {
        &self.pipeline
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn document(&self, idx: usize) -> &Document {
        &self.documents[idx]
    }

    pub fn doc_count(&self) -> usize {
        self.documents.len()
    }

    pub fn doc_index(&self, doc_id: &str) -> Option<usize> {
        self.documents
            .binary_search_by(|d| d.doc_id.as_str().cmp(doc_id))
            .ok()
    }

    pub fn doc_length(&self, doc_id: &str) -> Option<usize> {
        self.doc_index(doc_id).map(|i| self.documents[i].len())
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.collection_counts.keys().map(String::as_str)
    }

    pub fn collection_counts(&self) -> &BTreeMap<String, u64> {
        &self.collection_counts
    }

    /// Representative surface form for a normalized term, if it was seen.
    pub fn surface(&self, term: &str) -> Option<&str> {
        self.surfaces.get(term).map(String::as_str)
    }

    /// Per-document occurrence counts of a phrase given as normalized tokens.
    /// Single tokens come straight from the postings.
    pub fn phrase_postings(&self, phrase: &[String]) -> Vec<Posting> {
        match phrase {
            [] => Vec::new(),
            [term] => self.postings(term).to_vec(),
            [first, ..] => self
                .postings(first)
                .iter()
                .filter_map(|p| {
                    let count = self.documents[p.doc as usize].phrase_count(phrase);
                    (count > 0).then_some(Posting {
                        doc: p.doc,
                        count: count as u32,
                    })
                })
                .collect(),
        }
    }

    pub fn phrase_collection_count(&self, phrase: &[String]) -> u64 {
        match phrase {
            [term] => self.collection_counts.get(term).copied().unwrap_or(0),
            _ => self
                .phrase_postings(phrase)
                .iter()
                .map(|p| u64::from(p.count))
                .sum(),
        }
    }
}

impl TermStats for CollectionIndex {
    fn collection_frequency(&self, term: &str) -> u64 {
        let phrase: Vec<String> = term.split_whitespace().map(str::to_string).collect();
        self.phrase_collection_count(&phrase)
    }

    fn total_tokens(&self) -> u64 {
        self.total_tokens
    }
}

/// Where to read a collection from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusSource {
    /// Directory of `*.txt` files, one document each, id = file stem.
    PlainDir(PathBuf),
    /// A file (or a directory of files) of `<DOC>` blocks.
    Trec(PathBuf),
}

/// The index plus the per-file problems that were skipped over.
#[derive(Debug)]
pub struct IngestOutcome {
    pub index: CollectionIndex,
    pub file_errors: Vec<(PathBuf, String)>,
}

pub fn ingest(source: &CorpusSource, pipeline: PipelineConfig) -> Result<IngestOutcome> {
    let mut file_errors = Vec::new();
    let mut texts: Vec<(String, String)> = Vec::new();
    match source {
        CorpusSource::PlainDir(dir) => {
            let files = list_files(dir, Some("txt"))?;
            let read: Vec<_> = files
                .par_iter()
                .map(|p| (p.clone(), std::fs::read_to_string(p)))
                .collect();
            for (path, res) in read {
                match res {
                    Ok(text) => {
                        let id = path
                            .file_stem()
                            .map(|s| s.to_string_lossy().into_owned())
                            .unwrap_or_default();
                        texts.push((id, text));
                    }
                    Err(e) => file_errors.push((path, e.to_string())),
                }
            }
        }
        CorpusSource::Trec(path) => {
            let files = if path.is_dir() {
                list_files(path, None)?
            } else {
                vec![path.clone()]
            };
            for file in files {
                match std::fs::read_to_string(&file) {
                    Ok(text) => match parse_trec_docs(&text) {
                        Ok(docs) => texts.extend(docs),
                        Err(msg) => file_errors.push((file, msg)),
                    },
                    Err(e) => file_errors.push((file, e.to_string())),
                }
            }
        }
    }

    // keep the first occurrence of a repeated id (files are visited sorted)
    let mut seen = BTreeSet::new();
    let mut unique = Vec::with_capacity(texts.len());
    for (id, text) in texts {
        if seen.insert(id.clone()) {
            unique.push((id, text));
        } else {
            file_errors.push((PathBuf::from(&id), "duplicate doc_id skipped".to_string()));
        }
    }
    for (path, msg) in &file_errors {
        log::warn!("{}: {}", path.display(), msg);
    }
    let index = CollectionIndex::from_texts(unique, pipeline)?;
    Ok(IngestOutcome { index, file_errors })
}

fn list_files(dir: &Path, extension: Option<&str>) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .filter(|p| match extension {
            Some(ext) => p.extension().is_some_and(|e| e == ext),
            None => true,
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Split an SGML-like stream into `(DOCNO, text)` pairs. Text is everything
/// inside the `<DOC>` block other than the DOCNO element, with tags removed.
pub fn parse_trec_docs(stream: &str) -> std::result::Result<Vec<(String, String)>, String> {
    let mut docs = Vec::new();
    let mut rest = stream;
    while let Some(start) = rest.find("<DOC>") {
        let body_start = start + "<DOC>".len();
        let end = rest[body_start..]
            .find("</DOC>")
            .ok_or_else(|| "unterminated <DOC> block".to_string())?;
        let body = &rest[body_start..body_start + end];
        rest = &rest[body_start + end + "</DOC>".len()..];

        let (no_start, no_end) = match (body.find("<DOCNO>"), body.find("</DOCNO>")) {
            (Some(s), Some(e)) if s < e => (s, e),
            _ => return Err("<DOC> block without <DOCNO>".to_string()),
        };
        let doc_id = body[no_start + "<DOCNO>".len()..no_end].trim().to_string();
        if doc_id.is_empty() {
            return Err("empty <DOCNO>".to_string());
        }
        let text = format!(
            "{} {}",
            &body[..no_start],
            &body[no_end + "</DOCNO>".len()..]
        );
        docs.push((doc_id, strip_tags(&text)));
    }
    Ok(docs)
}

fn strip_tags(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_tag = false;
    for c in text.chars() {
        match c {
            '<' => {
                in_tag = true;
                out.push(' ');
            }
            '>' if in_tag => in_tag = false,
            _ if !in_tag => out.push(c),
            _ => {}
        }
    }
    out
}

/// One n-gram record: a token sequence and how often it occurs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub tokens: Vec<String>,
    pub count: u64,
}

impl Window {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Windowed n-gram counts plus the 1-gram model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NGramModel {
    window_size: usize,
    windows: Vec<Window>,
    /// Stemmed view of each window, used for matching normalized terms.
    stemmed: Vec<Vec<String>>,
    unigram_counts: BTreeMap<String, u64>,
    /// term -> indices of windows whose stemmed view contains it
    term_windows: BTreeMap<String, Vec<usize>>,
}

impl NGramModel {
    fn assemble(
        window_size: usize,
        counts: BTreeMap<Vec<String>, u64>,
        unigram_counts: BTreeMap<String, u64>,
        stem: impl Fn(&str) -> String,
    ) -> Self {
        let windows: Vec<Window> = counts
            .into_iter()
            .map(|(tokens, count)| Window { tokens, count })
            .collect();
        let stemmed: Vec<Vec<String>> = windows
            .iter()
            .map(|w| w.tokens.iter().map(|t| stem(t)).collect())
            .collect();
        let mut term_windows: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, seq) in stemmed.iter().enumerate() {
            let distinct: BTreeSet<&String> = seq.iter().collect();
            for t in distinct {
                term_windows.entry(t.clone()).or_default().push(i);
            }
        }
        Self {
            window_size,
            windows,
            stemmed,
            unigram_counts,
            term_windows,
        }
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn unigram_counts(&self) -> &BTreeMap<String, u64> {
        &self.unigram_counts
    }

    pub fn unigram_count(&self, token: &str) -> u64 {
        self.unigram_counts.get(token).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn total_windows(&self) -> u64 {
        self.windows.iter().map(|w| w.count).sum()
    }

    /// Load `term1 term2 … termN<TAB>count` records. Length-1 records form the
    /// 1-gram model; without any, unigram counts are summed from the windows.
    pub fn load_counts_file(path: &Path, pipeline: &PipelineConfig) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_counts(&text, &path.display().to_string(), pipeline)
    }

    pub fn parse_counts(text: &str, source: &str, pipeline: &PipelineConfig) -> Result<Self> {
        let mut counts: BTreeMap<Vec<String>, u64> = BTreeMap::new();
        let mut unigrams: BTreeMap<String, u64> = BTreeMap::new();
        let mut window_size = 0;
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (seq, count) = line
                .rsplit_once('\t')
                .ok_or_else(|| Error::parse(source, lineno + 1, "expected <tokens>\\t<count>"))?;
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|_| Error::parse(source, lineno + 1, "count is not an integer"))?;
            let tokens: Vec<String> = seq.split_whitespace().map(str::to_lowercase).collect();
            if tokens.is_empty() || count == 0 {
                return Err(Error::parse(
                    source,
                    lineno + 1,
                    "empty sequence or zero count",
                ));
            }
            if tokens.len() == 1 {
                *unigrams.entry(tokens[0].clone()).or_default() += count;
            } else {
                window_size = window_size.max(tokens.len());
                *counts.entry(tokens).or_default() += count;
            }
        }
        if unigrams.is_empty() {
            for (seq, count) in &counts {
                for t in seq {
                    *unigrams.entry(t.clone()).or_default() += count;
                }
            }
        }
        Ok(Self::assemble(window_size.max(2), counts, unigrams, |t| {
            pipeline.stem(t)
        }))
    }

    /// Windows containing both terms of a normalized pair, most frequent first.
    /// Multi-word terms must appear as adjacent runs. A pair of identical
    /// terms needs two distinct occurrences.
    pub fn window_matches(&self, pair: (&str, &str)) -> Vec<(String, u64)> {
        self.matching_windows(pair)
            .into_iter()
            .map(|i| (self.windows[i].text(), self.windows[i].count))
            .collect()
    }

    /// Indices of matching windows in the order `window_matches` reports them.
    pub(crate) fn matching_windows(&self, pair: (&str, &str)) -> Vec<usize> {
        let a: Vec<String> = pair.0.split_whitespace().map(str::to_string).collect();
        let b: Vec<String> = pair.1.split_whitespace().map(str::to_string).collect();
        let (Some(a0), Some(b0)) = (a.first(), b.first()) else {
            return Vec::new();
        };
        let (Some(wa), Some(wb)) = (self.term_windows.get(a0), self.term_windows.get(b0)) else {
            return Vec::new();
        };
        let wb: BTreeSet<usize> = wb.iter().copied().collect();
        let mut hits: Vec<usize> = wa
            .iter()
            .copied()
            .filter(|i| wb.contains(i))
            .filter(|&i| contains_pair(&self.stemmed[i], &a, &b))
            .collect();
        hits.sort_by(|&x, &y| {
            self.windows[y]
                .count
                .cmp(&self.windows[x].count)
                .then_with(|| self.windows[x].text().cmp(&self.windows[y].text()))
        });
        hits
    }

    /// Positions in window `i` that are not covered by either pair member.
    pub(crate) fn surrounding_tokens(&self, i: usize, pair: (&str, &str)) -> Vec<&str> {
        let seq = &self.stemmed[i];
        let mut covered = vec![false; seq.len()];
        for term in [pair.0, pair.1] {
            let phrase: Vec<&str> = term.split_whitespace().collect();
            mark_phrase(seq, &phrase, &mut covered);
        }
        self.windows[i]
            .tokens
            .iter()
            .zip(covered)
            .filter(|(_, c)| !c)
            .map(|(t, _)| t.as_str())
            .collect()
    }
}

fn phrase_positions(seq: &[String], phrase: &[String]) -> Vec<usize> {
    if phrase.is_empty() || phrase.len() > seq.len() {
        return Vec::new();
    }
    (0..=seq.len() - phrase.len())
        .filter(|&s| seq[s..s + phrase.len()] == *phrase)
        .collect()
}

fn contains_pair(seq: &[String], a: &[String], b: &[String]) -> bool {
    let pa = phrase_positions(seq, a);
    let pb = phrase_positions(seq, b);
    // the two occurrences must not overlap
    pa.iter()
        .any(|&x| pb.iter().any(|&y| x + a.len() <= y || y + b.len() <= x))
}

fn mark_phrase(seq: &[String], phrase: &[&str], covered: &mut [bool]) {
    if phrase.is_empty() || phrase.len() > seq.len() {
        return;
    }
    for s in 0..=seq.len() - phrase.len() {
        if seq[s..s + phrase.len()]
            .iter()
            .zip(phrase)
            .all(|(x, y)| x == y)
        {
            covered[s..s + phrase.len()]
                .iter_mut()
                .for_each(|c| *c = true);
        }
    }
}

/// Every contiguous span of length `n` per document; documents shorter than
/// `n` contribute their full token list once.
pub fn build_ngram_model(index: &CollectionIndex, n: usize) -> Result<NGramModel> {
    if n < 2 {
        return Err(Error::Config(format!("window size must be >= 2, got {n}")));
    }
    let mut counts: BTreeMap<Vec<String>, u64> = BTreeMap::new();
    for doc in index.documents() {
        let tokens = &doc.tokens;
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() < n {
            *counts.entry(tokens.clone()).or_default() += 1;
        } else {
            for w in tokens.windows(n) {
                *counts.entry(w.to_vec()).or_default() += 1;
            }
        }
    }
    let unigrams = index.collection_counts().clone();
    Ok(NGramModel::assemble(n, counts, unigrams, str::to_string))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw_index(docs: &[(&str, &str)]) -> CollectionIndex {
        CollectionIndex::from_texts(docs.iter().copied(), PipelineConfig::raw()).unwrap()
    }

    #[test]
    fn collection_counts_by_hand() {
        let idx = raw_index(&[("d1", "a b a"), ("d2", "b c")]);
        let cc = idx.collection_counts();
        assert_eq!(cc["a"], 2);
        assert_eq!(cc["b"], 2);
        assert_eq!(cc["c"], 1);
        assert_eq!(idx.total_tokens(), 5);
        assert_eq!(idx.doc_length("d1"), Some(3));
    }

    #[test]
    fn single_term_document() {
        let idx = raw_index(&[("d1", "x x x")]);
        assert_eq!(idx.postings("x"), &[Posting { doc: 0, count: 3 }]);
        assert_eq!(idx.doc_length("d1"), Some(3));
    }

    #[test]
    fn empty_collection_is_fatal() {
        let none: Vec<(String, String)> = Vec::new();
        assert!(matches!(
            CollectionIndex::from_texts(none, PipelineConfig::raw()),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn empty_directory_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let res = ingest(
            &CorpusSource::PlainDir(dir.path().into()),
            PipelineConfig::raw(),
        );
        assert!(matches!(res, Err(Error::EmptyCorpus)));
    }

    #[test]
    fn plain_directory_ids_from_file_stems() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("beta.txt"), "b c").unwrap();
        std::fs::write(dir.path().join("alpha.txt"), "a b a").unwrap();
        std::fs::write(dir.path().join("notes.md"), "ignored").unwrap();
        let out = ingest(
            &CorpusSource::PlainDir(dir.path().into()),
            PipelineConfig::raw(),
        )
        .unwrap();
        let ids: Vec<_> = out
            .index
            .documents()
            .iter()
            .map(|d| d.doc_id.as_str())
            .collect();
        assert_eq!(ids, ["alpha", "beta"]);
        assert!(out.file_errors.is_empty());
    }

    #[test]
    fn unreadable_file_is_recorded_and_skipped() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("good.txt"), "a b").unwrap();
        std::fs::write(dir.path().join("bad.txt"), [0xff, 0xfe, 0x00]).unwrap();
        let out = ingest(
            &CorpusSource::PlainDir(dir.path().into()),
            PipelineConfig::raw(),
        )
        .unwrap();
        assert_eq!(out.index.doc_count(), 1);
        assert_eq!(out.file_errors.len(), 1);
    }

    #[test]
    fn trec_stream() {
        let stream = "<DOC>\n<DOCNO> WSJ-1 </DOCNO>\n<TEXT>Prisons are full.</TEXT>\n</DOC>\n\
                      <DOC><DOCNO>WSJ-2</DOCNO><HL>Jails</HL> overflow</DOC>";
        let docs = parse_trec_docs(stream).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].0, "WSJ-1");
        assert!(docs[0].1.contains("Prisons are full."));
        assert!(!docs[0].1.contains("WSJ-1"));
        assert_eq!(docs[1].0, "WSJ-2");
        assert!(parse_trec_docs("<DOC><TEXT>x</TEXT></DOC>").is_err());
        assert!(parse_trec_docs("<DOC><DOCNO>a</DOCNO>").is_err());
    }

    #[test]
    fn surface_forms_track_most_frequent_variant() {
        let idx = CollectionIndex::from_texts(
            [("d1", "jails jails jail prison")],
            PipelineConfig::default(),
        )
        .unwrap();
        assert_eq!(idx.surface("jail"), Some("jails"));
    }

    #[test]
    fn phrase_counts() {
        let idx = raw_index(&[
            ("d1", "engine failure and engine failure engine"),
            ("d2", "failure engine"),
        ]);
        let phrase = vec!["engine".to_string(), "failure".to_string()];
        let p = idx.phrase_postings(&phrase);
        assert_eq!(p, vec![Posting { doc: 0, count: 2 }]);
        assert_eq!(idx.collection_frequency("engine failure"), 2);
    }

    #[test]
    fn windows_by_hand() {
        let idx = raw_index(&[("d1", "a b c d")]);
        let m = build_ngram_model(&idx, 3).unwrap();
        let got: Vec<_> = m.windows().iter().map(|w| (w.text(), w.count)).collect();
        assert_eq!(got, vec![("a b c".into(), 1), ("b c d".into(), 1)]);
    }

    #[test]
    fn short_document_contributes_once() {
        let idx = raw_index(&[("d1", "a b")]);
        let m = build_ngram_model(&idx, 3).unwrap();
        let got: Vec<_> = m.windows().iter().map(|w| (w.text(), w.count)).collect();
        assert_eq!(got, vec![("a b".into(), 1)]);
    }

    #[test]
    fn identical_documents_accumulate() {
        let idx = raw_index(&[("d1", "a b c"), ("d2", "a b c")]);
        let m = build_ngram_model(&idx, 2).unwrap();
        let got: Vec<_> = m.windows().iter().map(|w| (w.text(), w.count)).collect();
        assert_eq!(got, vec![("a b".into(), 2), ("b c".into(), 2)]);
        assert_eq!(m.unigram_count("b"), 2);
    }

    #[test]
    fn window_size_below_two_rejected() {
        let idx = raw_index(&[("d1", "a b")]);
        assert!(matches!(build_ngram_model(&idx, 1), Err(Error::Config(_))));
    }

    #[test]
    fn window_matches_seeded_collocation() {
        let idx = CollectionIndex::from_texts(
            [
                ("d1", "the state overcrowded prisons"),
                ("d2", "a state overcrowded prisons report"),
                ("d3", "state overcrowded prisons"),
            ],
            PipelineConfig::default(),
        )
        .unwrap();
        let m = build_ngram_model(&idx, 3).unwrap();
        let hits = m.window_matches(("overcrowd", "prison"));
        assert_eq!(hits[0], ("state overcrowd prison".to_string(), 3));
        assert!(hits
            .iter()
            .all(|(w, _)| w.contains("overcrowd") && w.contains("prison")));
    }

    #[test]
    fn window_matches_no_cooccurrence() {
        let idx = raw_index(&[("d1", "a b c d e f g h")]);
        let m = build_ngram_model(&idx, 3).unwrap();
        assert!(m.window_matches(("a", "h")).is_empty());
        assert!(m.window_matches(("a", "zzz")).is_empty());
    }

    #[test]
    fn window_matches_duplicate_term_pair() {
        let idx = raw_index(&[("d1", "x y x")]);
        let m = build_ngram_model(&idx, 3).unwrap();
        assert_eq!(m.window_matches(("x", "x")), vec![("x y x".to_string(), 1)]);
    }

    #[test]
    fn window_matches_non_adjacent_either_order() {
        let idx = raw_index(&[("d1", "p q r s"), ("d2", "s q p r")]);
        let m = build_ngram_model(&idx, 4).unwrap();
        assert_eq!(m.window_matches(("p", "s")).len(), 2);
    }

    #[test]
    fn counts_file_round_trip() {
        let text = "Overcrowded prisons\t7\nstate overcrowded prisons\t3\njails\t5\n";
        let m = NGramModel::parse_counts(text, "mem", &PipelineConfig::default()).unwrap();
        assert_eq!(m.window_size(), 3);
        assert_eq!(m.unigram_count("jails"), 5);
        let hits = m.window_matches(("overcrowd", "prison"));
        assert_eq!(hits[0].1, 7);
        assert!(NGramModel::parse_counts("a b 3\n", "mem", &PipelineConfig::raw()).is_err());
    }

    fn docs_strategy() -> impl Strategy<Value = Vec<Vec<u8>>> {
        prop::collection::vec(prop::collection::vec(0u8..6, 0..12), 1..8)
    }

    fn to_texts(docs: &[Vec<u8>]) -> Vec<(String, String)> {
        docs.iter()
            .enumerate()
            .map(|(i, d)| {
                let text = d
                    .iter()
                    .map(|t| format!("t{t}"))
                    .collect::<Vec<_>>()
                    .join(" ");
                (format!("d{i:02}"), text)
            })
            .collect()
    }

    proptest! {
        #[test]
        fn index_invariants(docs in docs_strategy()) {
            let idx = CollectionIndex::from_texts(to_texts(&docs), PipelineConfig::raw()).unwrap();
            let sum: u64 = idx.collection_counts().values().sum();
            prop_assert_eq!(sum, idx.total_tokens());
            for term in idx.vocabulary() {
                let postings = idx.postings(term);
                prop_assert!(postings.windows(2).all(|w| w[0].doc < w[1].doc));
                for p in postings {
                    let d = idx.document(p.doc as usize);
                    prop_assert!(p.count as usize <= d.len());
                    prop_assert!(u64::from(p.count) <= idx.collection_frequency(term));
                }
            }
        }

        #[test]
        fn ingest_order_independent(docs in docs_strategy()) {
            let texts = to_texts(&docs);
            let mut reversed = texts.clone();
            reversed.reverse();
            let a = CollectionIndex::from_texts(texts, PipelineConfig::raw()).unwrap();
            let b = CollectionIndex::from_texts(reversed, PipelineConfig::raw()).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn total_window_count(docs in docs_strategy(), n in 2usize..6) {
            let idx = CollectionIndex::from_texts(to_texts(&docs), PipelineConfig::raw()).unwrap();
            let m = build_ngram_model(&idx, n).unwrap();
            let expected: u64 = idx
                .documents()
                .iter()
                .map(|d| match d.len() {
                    0 => 0,
                    l if l < n => 1,
                    l => (l - n + 1) as u64,
                })
                .sum();
            prop_assert_eq!(m.total_windows(), expected);
            prop_assert!(m.windows().iter().all(|w| w.tokens.len() <= n && w.count > 0));
        }
    }
}
