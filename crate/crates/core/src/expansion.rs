//! Candidate term pooling and pattern-based reconciliation into an
//! expanded query.
//!
//! Two pools feed every pattern: statistically collocated terms found in
//! n-gram windows around the query's base pairs, and lexical-semantic terms
//! reached through the knowledge base from each CoI/DC concept. A pattern
//! picks the lexical relation (IE1 synonyms, IE2 hypernyms, IE3 hyponyms,
//! IE4 coordinate terms); both pools are cut at their thresholds and stem
//! collisions are settled in favour of the lexical copy.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus_index::{CollectionIndex, NGramModel, TermStats};
use crate::error::{Error, Result};
use crate::lexical_kb::{KnowledgeBase, LexicalRelation, SimilarityMeasure, DEFAULT_DEPTH};
use crate::linguistics::{ConceptualQuery, Pos, RoleType};
use crate::text::PipelineConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TermSource {
    Statistical,
    LexicalSemantic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateTerm {
    /// Normalized (stemmed) form; the identity used for deduplication.
    pub term: String,
    /// Readable form: the KB lemma or the most frequent surface variant.
    pub display: String,
    pub source: TermSource,
    /// `None` for statistical candidates.
    pub relation: Option<LexicalRelation>,
    /// Summed frequency (statistical) or mean similarity (lexical).
    pub score: f64,
    /// Base terms or pairs the candidate was reached from.
    pub origin: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolKind {
    Statistical,
    Lexical(LexicalRelation),
}

/// Candidates sorted by non-increasing score, one entry per normalized term.
#[derive(Debug, Clone, PartialEq)]
pub struct TermPool {
    pub kind: PoolKind,
    pub entries: Vec<CandidateTerm>,
}

impl TermPool {
    pub fn empty(kind: PoolKind) -> Self {
        Self {
            kind,
            entries: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains_display(&self, display: &str) -> bool {
        self.entries.iter().any(|e| e.display == display)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Pattern {
    /// No expansion.
    #[default]
    None,
    /// Collocates plus synonyms.
    Ie1,
    /// Collocates plus hypernyms.
    Ie2,
    /// Collocates plus hyponyms.
    Ie3,
    /// Collocates plus coordinate terms.
    Ie4,
}

impl Pattern {
    pub const ALL: [Pattern; 5] = [
        Pattern::None,
        Pattern::Ie1,
        Pattern::Ie2,
        Pattern::Ie3,
        Pattern::Ie4,
    ];

    pub fn relation(self) -> Option<LexicalRelation> {
        match self {
            Pattern::None => None,
            Pattern::Ie1 => Some(LexicalRelation::Synonym),
            Pattern::Ie2 => Some(LexicalRelation::Hypernym),
            Pattern::Ie3 => Some(LexicalRelation::Hyponym),
            Pattern::Ie4 => Some(LexicalRelation::Coordinate),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pattern::None => "none",
            Pattern::Ie1 => "IE1",
            Pattern::Ie2 => "IE2",
            Pattern::Ie3 => "IE3",
            Pattern::Ie4 => "IE4",
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Pattern::None),
            "ie1" => Ok(Pattern::Ie1),
            "ie2" => Ok(Pattern::Ie2),
            "ie3" => Ok(Pattern::Ie3),
            "ie4" => Ok(Pattern::Ie4),
            _ => Err(Error::Config(format!("unknown expansion pattern {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionConfig {
    /// Statistical terms kept (global, not per base term).
    pub k_stat: usize,
    /// Lexical terms kept from the pattern's pool.
    pub k_lex: usize,
    /// Hypernym/hyponym traversal depth.
    pub depth: usize,
    /// Seed for breaking frequency ties among statistical candidates.
    pub seed: u64,
    /// Candidates more frequent than this fraction of |C| are dropped.
    pub max_collection_fraction: f64,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self {
            k_stat: 5,
            k_lex: 5,
            depth: DEFAULT_DEPTH,
            seed: 42,
            max_collection_fraction: 0.10,
        }
    }
}

/// Drops special-character terms, stopwords and overly common terms.
pub struct TermFilter<'a> {
    pub pipeline: &'a PipelineConfig,
    pub stats: Option<&'a dyn TermStats>,
    pub max_collection_fraction: f64,
}

impl TermFilter<'_> {
    pub fn keep(&self, display: &str, term: &str) -> bool {
        if term.is_empty()
            || !display.chars().all(|c| c.is_alphanumeric() || c == ' ')
            || self.pipeline.is_stopword(display)
        {
            return false;
        }
        match self.stats {
            Some(stats) if stats.total_tokens() > 0 => {
                let cf = stats.collection_frequency(term) as f64;
                cf <= self.max_collection_fraction * stats.total_tokens() as f64
            }
            _ => true,
        }
    }
}

/// Sum frequencies of raw words sharing a stem. Each distinct word counts
/// once. The display form is the most frequent variant.
pub fn merge_stem_variants(
    words: &[(String, u64)],
    pipeline: &PipelineConfig,
) -> Vec<(String, String, u64)> {
    let mut seen = BTreeSet::new();
    let mut by_stem: BTreeMap<String, (String, u64, u64)> = BTreeMap::new();
    for (word, freq) in words {
        if !seen.insert(word.clone()) {
            continue;
        }
        let stem = pipeline.stem(word);
        let entry = by_stem
            .entry(stem)
            .or_insert_with(|| (word.clone(), *freq, 0));
        if *freq > entry.1 || (*freq == entry.1 && *word < entry.0) {
            entry.0 = word.clone();
            entry.1 = *freq;
        }
        entry.2 += freq;
    }
    by_stem
        .into_iter()
        .map(|(stem, (display, _, total))| (stem, display, total))
        .collect()
}

/// Collocates of the base pairs, ranked by 1-gram frequency. Equal
/// frequencies are ordered by a seeded shuffle.
pub fn pool_statistical(
    base_pairs: &[(String, String)],
    model: &NGramModel,
    filter: &TermFilter<'_>,
    index: Option<&CollectionIndex>,
    seed: u64,
) -> TermPool {
    let pipeline = filter.pipeline;
    let mut words: Vec<(String, u64)> = Vec::new();
    let mut origins: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();

    for (a, b) in base_pairs {
        let pair_tokens: BTreeSet<&str> =
            a.split_whitespace().chain(b.split_whitespace()).collect();
        for w in model.matching_windows((a, b)) {
            for token in model.surrounding_tokens(w, (a, b)) {
                if pipeline.is_stopword(token) {
                    continue;
                }
                let stem = pipeline.stem(token);
                if pair_tokens.contains(stem.as_str()) {
                    continue;
                }
                words.push((token.to_string(), model.unigram_count(token)));
                origins.entry(stem).or_default().insert(format!("{a}|{b}"));
            }
        }
    }

    let mut entries: Vec<CandidateTerm> = merge_stem_variants(&words, pipeline)
        .into_iter()
        .map(|(term, display, freq)| {
            // corpus-built models hold stems; show the indexed surface form
            let display = index
                .and_then(|i| i.surface(&display))
                .map(str::to_string)
                .unwrap_or(display);
            CandidateTerm {
                origin: origins
                    .get(&term)
                    .map(|o| o.iter().cloned().collect())
                    .unwrap_or_default(),
                term,
                display,
                source: TermSource::Statistical,
                relation: None,
                score: freq as f64,
            }
        })
        .filter(|c| filter.keep(&c.display, &c.term))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    entries.shuffle(&mut rng);
    entries.sort_by(|x, y| y.score.total_cmp(&x.score));
    TermPool {
        kind: PoolKind::Statistical,
        entries,
    }
}

/// Attach a sense to every CoI/DC concept, using the other CoI/DC concepts
/// as context. Concepts absent from the knowledge base keep `None`.
pub fn disambiguate_query(
    cq: &mut ConceptualQuery,
    kb: &KnowledgeBase,
    measure: &dyn SimilarityMeasure,
) {
    let significant: Vec<(usize, String, Option<Pos>)> = cq
        .significant_concepts()
        .map(|(i, c)| (i, c.surface.clone(), c.pos))
        .collect();
    for (i, surface, pos) in &significant {
        let context: Vec<(&str, Option<Pos>)> = significant
            .iter()
            .filter(|(j, _, _)| j != i)
            .map(|(_, s, p)| (s.as_str(), *p))
            .collect();
        cq.concepts[*i].sense = kb
            .disambiguate(measure, surface, *pos, &context)
            .map(|a| a.synset_id);
    }
}

/// Terms related to each disambiguated CoI/DC concept, with every lemma of
/// each reached synset, scored by mean similarity to all base senses.
/// Verbs contribute only synonyms.
pub fn pool_lexical(
    cq: &ConceptualQuery,
    kb: &KnowledgeBase,
    measure: &dyn SimilarityMeasure,
    relation: LexicalRelation,
    depth: usize,
    filter: &TermFilter<'_>,
) -> TermPool {
    let bases: Vec<(String, Pos, usize)> = cq
        .significant_concepts()
        .filter_map(|(_, c)| {
            let sense = kb.index_of(c.sense.as_deref()?)?;
            Some((c.surface.clone(), c.pos.unwrap_or(Pos::Noun), sense))
        })
        .collect();
    let originals: BTreeSet<String> = cq
        .concepts
        .iter()
        .filter(|c| !c.normalized.is_empty())
        .map(|c| c.normalized.clone())
        .collect();

    let mut best: BTreeMap<String, CandidateTerm> = BTreeMap::new();
    for (surface, pos, sense) in &bases {
        if *pos == Pos::Verb && relation != LexicalRelation::Synonym {
            continue;
        }
        for target in kb.related_synsets(*sense, relation, depth) {
            let score = bases
                .iter()
                .map(|(_, _, b)| measure.similarity(kb, target, *b))
                .sum::<f64>()
                / bases.len() as f64;
            for lemma in &kb.synset(target).lemmas {
                let term = filter.pipeline.normalize_phrase(lemma);
                if originals.contains(&term) || !filter.keep(lemma, &term) {
                    continue;
                }
                let entry = best.entry(term.clone()).or_insert_with(|| CandidateTerm {
                    term,
                    display: lemma.clone(),
                    source: TermSource::LexicalSemantic,
                    relation: Some(relation),
                    score,
                    origin: Vec::new(),
                });
                if score > entry.score {
                    entry.score = score;
                    entry.display = lemma.clone();
                }
                if !entry.origin.contains(surface) {
                    entry.origin.push(surface.clone());
                }
            }
        }
    }
    let mut entries: Vec<CandidateTerm> = best.into_values().collect();
    entries.sort_by(|x, y| {
        y.score
            .total_cmp(&x.score)
            .then_with(|| x.term.cmp(&y.term))
    });
    TermPool {
        kind: PoolKind::Lexical(relation),
        entries,
    }
}

/// Remove stem duplicates within each list and across them. On a
/// collision the statistical copy goes and the lexical one stays.
pub fn dedup(
    stat: Vec<CandidateTerm>,
    lex: Vec<CandidateTerm>,
) -> (Vec<CandidateTerm>, Vec<CandidateTerm>) {
    let mut lex_terms = BTreeSet::new();
    let lex: Vec<CandidateTerm> = lex
        .into_iter()
        .filter(|c| lex_terms.insert(c.term.clone()))
        .collect();
    let mut stat_terms = BTreeSet::new();
    let stat = stat
        .into_iter()
        .filter(|c| !lex_terms.contains(&c.term) && stat_terms.insert(c.term.clone()))
        .collect();
    (stat, lex)
}

/// An added concept; its role is always EC.
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub term: String,
    pub display: String,
    pub source: TermSource,
    pub relation: Option<LexicalRelation>,
    pub score: f64,
}

impl From<CandidateTerm> for Expansion {
    fn from(c: CandidateTerm) -> Self {
        Self {
            term: c.term,
            display: c.display,
            source: c.source,
            relation: c.relation,
            score: c.score,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedQuery {
    pub original: ConceptualQuery,
    pub expansions: Vec<Expansion>,
    pub pattern: Pattern,
}

/// A query concept as retrieval sees it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleTerm {
    /// Normalized form; empty for pure function words.
    pub term: String,
    pub surface: String,
    pub role: RoleType,
}

impl ExpandedQuery {
    /// The query without expansion terms.
    pub fn unexpanded(original: ConceptualQuery) -> Self {
        Self {
            original,
            expansions: Vec::new(),
            pattern: Pattern::None,
        }
    }

    /// Original concepts in order, then expansions as EC.
    pub fn role_terms(&self) -> Vec<RoleTerm> {
        let mut out: Vec<RoleTerm> = self
            .original
            .concepts
            .iter()
            .map(|c| RoleTerm {
                term: c.normalized.clone(),
                surface: c.surface.clone(),
                role: c.role.expect("resolved roles"),
            })
            .collect();
        out.extend(self.expansions.iter().map(|e| RoleTerm {
            term: e.term.clone(),
            surface: e.display.clone(),
            role: RoleType::EC,
        }));
        out
    }

    /// `term<TAB>role<TAB>relation-or-"-"<TAB>score` per concept. Original
    /// concepts carry no score and print `-`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for c in &self.original.concepts {
            out.push_str(&format!(
                "{}\t{}\t-\t-\n",
                c.surface,
                c.role.expect("resolved roles")
            ));
        }
        for e in &self.expansions {
            let rel = e.relation.map_or("-", LexicalRelation::as_str);
            out.push_str(&format!("{}\tEC\t{}\t{:.6}\n", e.display, rel, e.score));
        }
        out
    }
}

fn original_forms(cq: &ConceptualQuery) -> BTreeSet<String> {
    let mut forms = BTreeSet::new();
    for c in &cq.concepts {
        if c.normalized.is_empty() {
            continue;
        }
        forms.insert(c.normalized.clone());
        for t in c.normalized.split_whitespace() {
            forms.insert(t.to_string());
        }
    }
    forms
}

fn top_k(pool: &TermPool, k: usize, exclude: &BTreeSet<String>) -> Vec<CandidateTerm> {
    let mut seen = BTreeSet::new();
    pool.entries
        .iter()
        .filter(|c| !exclude.contains(&c.term) && seen.insert(c.term.clone()))
        .take(k)
        .cloned()
        .collect()
}

/// Top-`k_stat` statistical plus top-`k_lex` terms from the pattern's
/// lexical pool, deduplicated and appended to the untouched original
/// concepts.
pub fn apply_pattern(
    cq: &ConceptualQuery,
    pattern: Pattern,
    stat_pool: &TermPool,
    lex_pool: Option<&TermPool>,
    k_stat: usize,
    k_lex: usize,
) -> Result<ExpandedQuery> {
    let Some(relation) = pattern.relation() else {
        return Ok(ExpandedQuery::unexpanded(cq.clone()));
    };
    if stat_pool.kind != PoolKind::Statistical {
        return Err(Error::Config("statistical pool expected".into()));
    }
    if let Some(pool) = lex_pool {
        if pool.kind != PoolKind::Lexical(relation) {
            return Err(Error::Config(format!(
                "{pattern} draws from the {relation} pool, got {:?}",
                pool.kind
            )));
        }
    }
    let exclude = original_forms(cq);
    let stat = top_k(stat_pool, k_stat, &exclude);
    let lex = lex_pool
        .map(|p| top_k(p, k_lex, &exclude))
        .unwrap_or_default();
    let (stat, lex) = dedup(stat, lex);
    let expansions = stat.into_iter().chain(lex).map(Expansion::from).collect();
    Ok(ExpandedQuery {
        original: cq.clone(),
        expansions,
        pattern,
    })
}

/// Everything produced while expanding one query, kept for audit output.
#[derive(Debug, Clone)]
pub struct ExpansionTrace {
    pub query: ConceptualQuery,
    pub base_pairs: Vec<(String, String, String)>,
    pub stat_pool: TermPool,
    pub lex_pool: Option<TermPool>,
    pub expanded: ExpandedQuery,
}

impl ExpansionTrace {
    /// Base pairs and both pools as `#` lines, then the concept dump.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (h, d, label) in &self.base_pairs {
            out.push_str(&format!("#pair\t{h}\t{d}\t{label}\n"));
        }
        for c in &self.stat_pool.entries {
            out.push_str(&format!("#stat\t{}\t{:.6}\n", c.display, c.score));
        }
        if let Some(pool) = &self.lex_pool {
            for c in &pool.entries {
                let rel = c.relation.map_or("-", LexicalRelation::as_str);
                out.push_str(&format!("#lex\t{}\t{}\t{:.6}\n", c.display, rel, c.score));
            }
        }
        out.push_str(&self.expanded.dump());
        out
    }
}

/// The resources expansion reads.
pub struct Expander<'a> {
    pub index: &'a CollectionIndex,
    pub model: &'a NGramModel,
    pub kb: &'a KnowledgeBase,
    pub measure: &'a dyn SimilarityMeasure,
    pub config: ExpansionConfig,
}

impl Expander<'_> {
    /// Disambiguate, build both pools and apply `pattern`.
    pub fn expand(&self, query: &ConceptualQuery, pattern: Pattern) -> Result<ExpansionTrace> {
        let mut cq = query.clone();
        disambiguate_query(&mut cq, self.kb, self.measure);
        cq.axioms.extend(
            self.kb
                .holonym_axioms(&cq.concepts)
                .into_iter()
                .filter(|a| !query.axioms.contains(a)),
        );
        let filter = TermFilter {
            pipeline: self.index.pipeline(),
            stats: Some(self.index),
            max_collection_fraction: self.config.max_collection_fraction,
        };
        let base_pairs: Vec<(String, String, String)> = cq
            .base_pairs()
            .into_iter()
            .map(|p| {
                (
                    cq.concepts[p.head].normalized.clone(),
                    cq.concepts[p.dependent].normalized.clone(),
                    p.label.to_string(),
                )
            })
            .filter(|(h, d, _)| !h.is_empty() && !d.is_empty())
            .collect();
        let pairs: Vec<(String, String)> = base_pairs
            .iter()
            .map(|(h, d, _)| (h.clone(), d.clone()))
            .collect();
        let stat_pool = if pattern == Pattern::None {
            TermPool::empty(PoolKind::Statistical)
        } else {
            pool_statistical(
                &pairs,
                self.model,
                &filter,
                Some(self.index),
                self.config.seed,
            )
        };
        let lex_pool = pattern
            .relation()
            .map(|rel| pool_lexical(&cq, self.kb, self.measure, rel, self.config.depth, &filter));
        let expanded = apply_pattern(
            &cq,
            pattern,
            &stat_pool,
            lex_pool.as_ref(),
            self.config.k_stat,
            self.config.k_lex,
        )?;
        Ok(ExpansionTrace {
            query: cq,
            base_pairs,
            stat_pool,
            lex_pool,
            expanded,
        })
    }
}
