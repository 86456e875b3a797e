//! WordNet-style lexical knowledge base: synsets, relation traversal, path
//! similarity and context-based sense selection.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linguistics::{Axiom, Concept, Pos};
use crate::text::{stem_fixpoint, tokenize};

/// Default traversal depth for hypernym/hyponym chains.
pub const DEFAULT_DEPTH: usize = 2;

/// Edge types stored in the knowledge base.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Hypernym,
    Hyponym,
    Holonym,
    Meronym,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Hypernym => "hypernym",
            EdgeKind::Hyponym => "hyponym",
            EdgeKind::Holonym => "holonym",
            EdgeKind::Meronym => "meronym",
        }
    }

    fn inverse(self) -> Self {
        match self {
            EdgeKind::Hypernym => EdgeKind::Hyponym,
            EdgeKind::Hyponym => EdgeKind::Hypernym,
            EdgeKind::Holonym => EdgeKind::Meronym,
            EdgeKind::Meronym => EdgeKind::Holonym,
        }
    }
}

impl FromStr for EdgeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hypernym" => Ok(EdgeKind::Hypernym),
            "hyponym" => Ok(EdgeKind::Hyponym),
            "holonym" => Ok(EdgeKind::Holonym),
            "meronym" => Ok(EdgeKind::Meronym),
            _ => Err(Error::Kb(format!("unknown edge relation {s:?}"))),
        }
    }
}

/// Relations that can be asked of a synset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LexicalRelation {
    Synonym,
    Hypernym,
    Hyponym,
    Coordinate,
    Holonym,
    Meronym,
}

impl LexicalRelation {
    pub fn as_str(self) -> &'static str {
        match self {
            LexicalRelation::Synonym => "synonym",
            LexicalRelation::Hypernym => "hypernym",
            LexicalRelation::Hyponym => "hyponym",
            LexicalRelation::Coordinate => "coordinate",
            LexicalRelation::Holonym => "holonym",
            LexicalRelation::Meronym => "meronym",
        }
    }
}

impl fmt::Display for LexicalRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LexicalRelation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "synonym" | "synonyms" => Ok(LexicalRelation::Synonym),
            "hypernym" | "hypernyms" => Ok(LexicalRelation::Hypernym),
            "hyponym" | "hyponyms" => Ok(LexicalRelation::Hyponym),
            "coordinate" | "coordinates" => Ok(LexicalRelation::Coordinate),
            "holonym" | "holonyms" => Ok(LexicalRelation::Holonym),
            "meronym" | "meronyms" => Ok(LexicalRelation::Meronym),
            _ => Err(Error::Kb(format!("unknown relation {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Synset {
    pub id: String,
    pub pos: Pos,
    /// Most frequent lemma first.
    pub lemmas: Vec<String>,
    pub gloss: String,
    pub edges: Vec<(EdgeKind, String)>,
}

/// A chosen sense for a query concept.
#[derive(Debug, Clone, PartialEq)]
pub struct SenseAssignment {
    pub synset_id: String,
    /// Mean relatedness to the context, in `[0, 1]`.
    pub score: f64,
}

/// Pluggable synset relatedness.
pub trait SimilarityMeasure: Send + Sync {
    /// Score in `[0, 1]`, symmetric, 1 on identical synsets.
    fn similarity(&self, kb: &KnowledgeBase, a: usize, b: usize) -> f64;
}

/// `1 / (1 + L)` with `L` the shortest hypernym/hyponym path; 0 when no
/// path exists.
#[derive(Debug, Clone, Copy, Default)]
pub struct PathSimilarity;

impl SimilarityMeasure for PathSimilarity {
    fn similarity(&self, kb: &KnowledgeBase, a: usize, b: usize) -> f64 {
        match kb.taxonomy_distance(a, b) {
            Some(l) => 1.0 / (1.0 + l as f64),
            None => 0.0,
        }
    }
}

fn pos_letter(pos: Pos) -> &'static str {
    match pos {
        Pos::Noun => "n",
        Pos::Verb => "v",
        Pos::Adjective => "a",
        Pos::Adverb => "r",
        Pos::Function => "f",
    }
}

fn lemma_key(lemma: &str) -> String {
    tokenize(&lemma.replace('_', " "))
        .collect::<Vec<_>>()
        .join(" ")
}

fn stem_key(lemma: &str) -> String {
    tokenize(&lemma.replace('_', " "))
        .map(|w| stem_fixpoint(&w))
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    synsets: Vec<Synset>,
    by_id: HashMap<String, usize>,
    by_lemma: BTreeMap<String, Vec<usize>>,
    by_stem: BTreeMap<String, Vec<usize>>,
    /// Resolved edge targets, parallel to each synset's `edges`.
    links: Vec<Vec<(EdgeKind, usize)>>,
}

impl PartialEq for KnowledgeBase {
    fn eq(&self, other: &Self) -> bool {
        self.synsets == other.synsets
    }
}

impl KnowledgeBase {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// `S<TAB>id<TAB>pos<TAB>lemma1|lemma2|…<TAB>gloss` and
    /// `E<TAB>src_id<TAB>relation<TAB>dst_id` lines; `#` starts a comment.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut synsets: Vec<Synset> = Vec::new();
        let mut by_id: HashMap<String, usize> = HashMap::new();
        let mut edge_lines: Vec<(usize, String, EdgeKind, String)> = Vec::new();

        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[0] {
                "S" => {
                    if fields.len() != 5 {
                        return Err(Error::parse(source, lineno, "synset line needs 5 fields"));
                    }
                    let id = fields[1].trim().to_string();
                    if id.is_empty() {
                        return Err(Error::parse(source, lineno, "empty synset id"));
                    }
                    let pos: Pos = fields[2]
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse(source, lineno, "bad part of speech"))?;
                    if pos == Pos::Function {
                        return Err(Error::parse(
                            source,
                            lineno,
                            "function words have no synsets",
                        ));
                    }
                    let lemmas: Vec<String> = fields[3]
                        .split('|')
                        .map(lemma_key)
                        .filter(|l| !l.is_empty())
                        .collect();
                    if lemmas.is_empty() {
                        return Err(Error::parse(source, lineno, "synset without lemmas"));
                    }
                    if by_id.insert(id.clone(), synsets.len()).is_some() {
                        return Err(Error::parse(
                            source,
                            lineno,
                            format!("duplicate synset id {id}"),
                        ));
                    }
                    synsets.push(Synset {
                        id,
                        pos,
                        lemmas,
                        gloss: fields[4].to_string(),
                        edges: Vec::new(),
                    });
                }
                "E" => {
                    if fields.len() != 4 {
                        return Err(Error::parse(source, lineno, "edge line needs 4 fields"));
                    }
                    let kind: EdgeKind = fields[2]
                        .trim()
                        .parse()
                        .map_err(|e: Error| Error::parse(source, lineno, e.to_string()))?;
                    edge_lines.push((
                        lineno,
                        fields[1].trim().to_string(),
                        kind,
                        fields[3].trim().to_string(),
                    ));
                }
                other => {
                    return Err(Error::parse(
                        source,
                        lineno,
                        format!("unknown record type {other:?}"),
                    ))
                }
            }
        }

        for (lineno, src, kind, dst) in edge_lines {
            let (Some(&s), true) = (by_id.get(&src), by_id.contains_key(&dst)) else {
                return Err(Error::parse(
                    source,
                    lineno,
                    format!("edge {src} -> {dst} references an unknown synset"),
                ));
            };
            if !synsets[s].edges.contains(&(kind, dst.clone())) {
                synsets[s].edges.push((kind, dst));
            }
        }

        Self::from_synsets(synsets)
    }

    /// Index a synset list, checking referential integrity and that
    /// hypernym/hyponym edges come in inverse pairs.
    pub fn from_synsets(synsets: Vec<Synset>) -> Result<Self> {
        let by_id: HashMap<String, usize> = synsets
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.clone(), i))
            .collect();
        if by_id.len() != synsets.len() {
            return Err(Error::Kb("duplicate synset ids".into()));
        }
        let mut links = Vec::with_capacity(synsets.len());
        for s in &synsets {
            let mut resolved = Vec::with_capacity(s.edges.len());
            for (kind, dst) in &s.edges {
                let &d = by_id
                    .get(dst)
                    .ok_or_else(|| Error::Kb(format!("edge {} -> {dst}: unknown synset", s.id)))?;
                resolved.push((*kind, d));
            }
            links.push(resolved);
        }
        for (i, s) in synsets.iter().enumerate() {
            for &(kind, d) in &links[i] {
                if matches!(kind, EdgeKind::Hypernym | EdgeKind::Hyponym)
                    && !links[d].contains(&(kind.inverse(), i))
                {
                    return Err(Error::Kb(format!(
                        "{} {} {} has no inverse {} edge",
                        s.id,
                        kind.as_str(),
                        synsets[d].id,
                        kind.inverse().as_str()
                    )));
                }
            }
        }
        let mut by_lemma: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut by_stem: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, s) in synsets.iter().enumerate() {
            for l in &s.lemmas {
                let e = by_lemma.entry(l.clone()).or_default();
                if !e.contains(&i) {
                    e.push(i);
                }
                let e = by_stem.entry(stem_key(l)).or_default();
                if !e.contains(&i) {
                    e.push(i);
                }
            }
        }
        Ok(Self {
            synsets,
            by_id,
            by_lemma,
            by_stem,
            links,
        })
    }

    /// Serialize back to the line format accepted by [`KnowledgeBase::parse`].
    pub fn to_kb_string(&self) -> String {
        let mut out = String::new();
        for s in &self.synsets {
            out.push_str(&format!(
                "S\t{}\t{}\t{}\t{}\n",
                s.id,
                pos_letter(s.pos),
                s.lemmas.join("|"),
                s.gloss
            ));
        }
        for s in &self.synsets {
            for (kind, dst) in &s.edges {
                out.push_str(&format!("E\t{}\t{}\t{}\n", s.id, kind.as_str(), dst));
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.synsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }

    pub fn synset(&self, idx: usize) -> &Synset {
        &self.synsets[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&Synset> {
        self.index_of(id).map(|i| &self.synsets[i])
    }

    /// Synsets listing `lemma` with the given part of speech, in KB order.
    pub fn synsets(&self, lemma: &str, pos: Pos) -> Vec<&Synset> {
        self.synset_indices(lemma, Some(pos))
            .into_iter()
            .map(|i| &self.synsets[i])
            .collect()
    }

    fn synset_indices(&self, lemma: &str, pos: Option<Pos>) -> Vec<usize> {
        self.by_lemma
            .get(&lemma_key(lemma))
            .map(|v| {
                v.iter()
                    .copied()
                    .filter(|&i| pos.is_none_or(|p| self.synsets[i].pos == p))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Exact lemma lookup, falling back to stem equality so inflected query
    /// words ("prisons", "coping") find their base lemmas.
    pub fn lookup(&self, word: &str, pos: Option<Pos>) -> Vec<usize> {
        let exact = self.synset_indices(word, pos);
        if !exact.is_empty() {
            return exact;
        }
        self.by_stem
            .get(&stem_key(word))
            .map(|v| {
                v.iter()
                    .copied()
                    .filter(|&i| pos.is_none_or(|p| self.synsets[i].pos == p))
                    .collect()
            })
            .unwrap_or_default()
    }

    fn edge_targets(&self, idx: usize, kind: EdgeKind) -> impl Iterator<Item = usize> + '_ {
        self.links[idx]
            .iter()
            .filter(move |(k, _)| *k == kind)
            .map(|&(_, d)| d)
    }

    fn traverse(&self, start: usize, kind: EdgeKind, depth: usize) -> Vec<usize> {
        let mut seen: BTreeSet<usize> = [start].into();
        let mut frontier = vec![start];
        let mut out = Vec::new();
        for _ in 0..depth {
            let mut next = Vec::new();
            for &s in &frontier {
                for d in self.edge_targets(s, kind) {
                    if seen.insert(d) {
                        out.push(d);
                        next.push(d);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        out
    }

    /// Synsets reached from `idx` by `relation`. Hypernym, hyponym, holonym
    /// and meronym chains are followed `depth` levels; coordinates are the
    /// other hyponyms of each direct hypernym; synonym is the synset itself.
    pub fn related_synsets(
        &self,
        idx: usize,
        relation: LexicalRelation,
        depth: usize,
    ) -> Vec<usize> {
        match relation {
            LexicalRelation::Synonym => vec![idx],
            LexicalRelation::Hypernym => self.traverse(idx, EdgeKind::Hypernym, depth),
            LexicalRelation::Hyponym => self.traverse(idx, EdgeKind::Hyponym, depth),
            LexicalRelation::Holonym => self.traverse(idx, EdgeKind::Holonym, depth),
            LexicalRelation::Meronym => self.traverse(idx, EdgeKind::Meronym, depth),
            LexicalRelation::Coordinate => {
                let mut out = Vec::new();
                for h in self.edge_targets(idx, EdgeKind::Hypernym) {
                    for sister in self.edge_targets(h, EdgeKind::Hyponym) {
                        if sister != idx && !out.contains(&sister) {
                            out.push(sister);
                        }
                    }
                }
                out
            }
        }
    }

    /// Lemmas related to synset `id`. Synonyms are the co-lemmas after the
    /// synset's head lemma.
    pub fn related(
        &self,
        id: &str,
        relation: LexicalRelation,
        depth: usize,
    ) -> Result<Vec<String>> {
        let idx = self
            .index_of(id)
            .ok_or_else(|| Error::Kb(format!("unknown synset {id}")))?;
        if relation == LexicalRelation::Synonym {
            return Ok(self.synsets[idx].lemmas[1..].to_vec());
        }
        let mut out: Vec<String> = Vec::new();
        for s in self.related_synsets(idx, relation, depth) {
            for l in &self.synsets[s].lemmas {
                if !out.contains(l) {
                    out.push(l.clone());
                }
            }
        }
        Ok(out)
    }

    /// Shortest path length over hypernym/hyponym edges, in either direction.
    pub fn taxonomy_distance(&self, a: usize, b: usize) -> Option<usize> {
        if a == b {
            return Some(0);
        }
        let mut dist = vec![usize::MAX; self.synsets.len()];
        let mut queue = VecDeque::from([a]);
        dist[a] = 0;
        while let Some(s) = queue.pop_front() {
            for &(kind, d) in &self.links[s] {
                if matches!(kind, EdgeKind::Hypernym | EdgeKind::Hyponym) && dist[d] == usize::MAX {
                    dist[d] = dist[s] + 1;
                    if d == b {
                        return Some(dist[d]);
                    }
                    queue.push_back(d);
                }
            }
        }
        None
    }

    /// Term-level similarity: the best-scoring sense pair.
    pub fn term_similarity(&self, measure: &dyn SimilarityMeasure, a: &str, b: &str) -> f64 {
        let sa = self.lookup(a, None);
        let sb = self.lookup(b, None);
        sa.iter()
            .flat_map(|&x| sb.iter().map(move |&y| (x, y)))
            .map(|(x, y)| measure.similarity(self, x, y))
            .fold(0.0, f64::max)
    }

    /// Pick the sense of `word` that is, on average, most related to the
    /// best-matching sense of each context word. Ties and an empty context
    /// fall back to the first (most frequent) sense. `None` when the word
    /// is not in the knowledge base.
    pub fn disambiguate(
        &self,
        measure: &dyn SimilarityMeasure,
        word: &str,
        pos: Option<Pos>,
        context: &[(&str, Option<Pos>)],
    ) -> Option<SenseAssignment> {
        let senses = self.lookup(word, pos);
        let first = *senses.first()?;
        let context_senses: Vec<Vec<usize>> = context
            .iter()
            .map(|(w, p)| self.lookup(w, *p))
            .filter(|s| !s.is_empty())
            .collect();
        if context_senses.is_empty() {
            return Some(SenseAssignment {
                synset_id: self.synsets[first].id.clone(),
                score: 0.0,
            });
        }
        let mut best = (first, f64::NEG_INFINITY);
        for &s in &senses {
            let total: f64 = context_senses
                .iter()
                .map(|cs| {
                    cs.iter()
                        .map(|&t| measure.similarity(self, s, t))
                        .fold(0.0, f64::max)
                })
                .sum();
            let score = total / context_senses.len() as f64;
            if score > best.1 {
                best = (s, score);
            }
        }
        Some(SenseAssignment {
            synset_id: self.synsets[best.0].id.clone(),
            score: best.1,
        })
    }

    /// Holonymy between query concepts: concept `whole` names a synset that is
    /// a holonym of a synset named by `part` (or by one of the words of a
    /// multi-word `part`).
    pub fn holonym_axioms(&self, concepts: &[Concept]) -> Vec<Axiom> {
        let mut axioms = Vec::new();
        let lookups: Vec<Vec<usize>> = concepts
            .iter()
            .map(|c| {
                if c.normalized.is_empty() {
                    Vec::new()
                } else {
                    self.lookup(&c.surface, None)
                }
            })
            .collect();
        for (p, part) in concepts.iter().enumerate() {
            if part.normalized.is_empty() {
                continue;
            }
            let mut part_senses = lookups[p].clone();
            if part.is_ncp {
                for w in part.surface.split_whitespace() {
                    part_senses.extend(self.lookup(w, Some(Pos::Noun)));
                }
            }
            let holonyms: BTreeSet<usize> = part_senses
                .iter()
                .flat_map(|&s| {
                    self.edge_targets(s, EdgeKind::Holonym).chain(
                        // meronym edges stored on the whole point the other way
                        (0..self.synsets.len())
                            .filter(move |&w| self.links[w].contains(&(EdgeKind::Meronym, s))),
                    )
                })
                .collect();
            for (w, senses) in lookups.iter().enumerate() {
                if w != p && senses.iter().any(|s| holonyms.contains(s)) {
                    let ax = Axiom::Holonym { whole: w, part: p };
                    if !axioms.contains(&ax) {
                        axioms.push(ax);
                    }
                }
            }
        }
        axioms
    }
}
