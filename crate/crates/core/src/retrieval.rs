//! Concept-based document scoring: a Dirichlet-smoothed query likelihood
//! (`sat`) combined with a role-weighted coverage term (`imp`), plus the
//! query-likelihood and relevance-model baselines.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus_index::{CollectionIndex, Posting};
use crate::error::{Error, Result};
use crate::expansion::ExpandedQuery;
use crate::linguistics::RoleType;
use crate::scalar::Scalar;

pub const DEFAULT_MU: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingConfig<T> {
    pub mu: T,
}

impl<T: Scalar> Default for SmoothingConfig<T> {
    fn default() -> Self {
        Self {
            mu: T::of(DEFAULT_MU),
        }
    }
}

impl<T: Scalar> SmoothingConfig<T> {
    pub fn new(mu: T) -> Result<Self> {
        if !(mu >= T::zero()) || !mu.is_finite() {
            return Err(Error::Config(format!(
                "mu must be a non-negative number, got {mu}"
            )));
        }
        Ok(Self { mu })
    }
}

/// `(N_d + mu * N_c / |C|) / (|d| + mu)`. `None` when both `mu` and `|d|`
/// are zero.
pub fn smoothed_prob<T: Scalar>(
    doc_count: u64,
    doc_len: usize,
    collection_count: u64,
    collection_len: u64,
    cfg: &SmoothingConfig<T>,
) -> Option<T> {
    let denom = T::of_count(doc_len) + cfg.mu;
    if denom <= T::zero() || collection_len == 0 {
        return None;
    }
    let background = T::of(collection_count as f64) / T::of(collection_len as f64);
    Some((T::of(doc_count as f64) + cfg.mu * background) / denom)
}

/// One distinct role-typed concept of a query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BagEntry {
    /// Normalized form, or `#surface` for concepts that normalize to nothing.
    pub key: String,
    /// Normalized tokens matched as an adjacent run; empty for pure function words.
    pub tokens: Vec<String>,
    pub count: u32,
    pub role: RoleType,
    /// Whether the concept contributes to `sat`.
    pub in_sat: bool,
}

/// Which concepts feed the likelihood component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SatScope {
    /// Original concepts and expansions.
    #[default]
    Expanded,
    /// Original concepts only.
    Original,
}

/// A query as a multiset of role-typed concepts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryBag {
    entries: Vec<BagEntry>,
}

impl QueryBag {
    /// Adds one occurrence of a concept. A repeated concept keeps its
    /// highest-priority role.
    pub fn push(&mut self, term: &str, surface: &str, role: RoleType, in_sat: bool) {
        let tokens: Vec<String> = term.split_whitespace().map(str::to_string).collect();
        let key = if tokens.is_empty() {
            format!("#{}", surface.to_lowercase())
        } else {
            tokens.join(" ")
        };
        if let Some(e) = self.entries.iter_mut().find(|e| e.key == key) {
            e.count += 1;
            e.role = e.role.min(role);
            e.in_sat |= in_sat;
        } else {
            self.entries.push(BagEntry {
                key,
                tokens,
                count: 1,
                role,
                in_sat,
            });
        }
    }

    pub fn from_expanded(eq: &ExpandedQuery, scope: SatScope) -> Result<Self> {
        let mut bag = QueryBag {
            entries: Vec::new(),
        };
        for rt in eq.role_terms() {
            let in_sat = scope == SatScope::Expanded || rt.role != RoleType::EC;
            bag.push(&rt.term, &rt.surface, rt.role, in_sat);
        }
        bag.check()
    }

    /// A bag of already-normalized unigrams, all CoI.
    pub fn from_terms<S: AsRef<str>>(terms: &[S]) -> Result<Self> {
        let mut bag = QueryBag {
            entries: Vec::new(),
        };
        for t in terms {
            bag.push(t.as_ref(), t.as_ref(), RoleType::CoI, true);
        }
        bag.check()
    }

    fn check(self) -> Result<Self> {
        if self.entries.is_empty() {
            return Err(Error::Query("query has no concepts".into()));
        }
        Ok(self)
    }

    pub fn entries(&self) -> &[BagEntry] {
        &self.entries
    }

    /// `|q|`: the number of distinct concepts, function words included.
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    /// Concepts that never occur in the collection; `sat` skips them.
    pub fn unseen(&self, index: &CollectionIndex) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| {
                e.in_sat && !e.tokens.is_empty() && index.phrase_collection_count(&e.tokens) == 0
            })
            .map(|e| e.key.clone())
            .collect()
    }
}

/// Importance weight per role type. The SC weight is always zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoleWeights<T> {
    coi: T,
    dc: T,
    rc: T,
    ec: T,
}

impl<T: Scalar> RoleWeights<T> {
    pub fn new(coi: T, dc: T, rc: T, ec: T) -> Result<Self> {
        for (name, w) in [("coi", coi), ("dc", dc), ("rc", rc), ("ec", ec)] {
            if !(w >= T::zero() && w <= T::one()) {
                return Err(Error::Config(format!("weight {name}={w} outside [0,1]")));
            }
        }
        Ok(Self { coi, dc, rc, ec })
    }

    pub fn uniform(w: T) -> Result<Self> {
        Self::new(w, w, w, w)
    }

    pub fn weight(&self, role: RoleType) -> T {
        match role {
            RoleType::CoI => self.coi,
            RoleType::DC => self.dc,
            RoleType::RC => self.rc,
            RoleType::SC => T::zero(),
            RoleType::EC => self.ec,
        }
    }

    /// Weights in [`RoleType::ALL`] order.
    pub fn as_array(&self) -> [T; 5] {
        RoleType::ALL.map(|r| self.weight(r))
    }

    /// `w_coi = ...` lines, one per role.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        for r in RoleType::ALL {
            let _ = writeln!(
                out,
                "w_{} = {:.9}",
                r.as_str().to_lowercase(),
                self.weight(r).as_f64()
            );
        }
        out
    }

    pub fn parse_kv(text: &str, source: &str) -> Result<Self> {
        let mut values: BTreeMap<String, T> = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(source, n + 1, "expected key = value"))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::parse(source, n + 1, format!("bad number {:?}", v.trim())))?;
            values.insert(k.trim().to_lowercase(), T::of(v));
        }
        let get = |k: &str| -> Result<T> {
            values
                .get(k)
                .copied()
                .ok_or_else(|| Error::parse(source, 0, format!("missing {k}")))
        };
        if let Some(sc) = values.get("w_sc") {
            if *sc != T::zero() {
                return Err(Error::parse(source, 0, "w_sc must be 0"));
            }
        }
        Self::new(get("w_coi")?, get("w_dc")?, get("w_rc")?, get("w_ec")?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_kv(&text, &path.display().to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDocument<T> {
    pub doc_id: String,
    pub sat: T,
    pub imp: T,
    pub rel: T,
}

/// Weight-independent evidence for one candidate document: its likelihood
/// and how many distinct concepts of each role it contains.
#[derive(Debug, Clone, PartialEq)]
pub struct DocEvidence<T> {
    pub doc: usize,
    pub sat: T,
    /// Indexed like [`RoleType::ALL`].
    pub matched: [u32; 5],
}

impl<T: Scalar> DocEvidence<T> {
    pub fn imp(&self, weights: &RoleWeights<T>, q_size: usize) -> T {
        let num: T = RoleType::ALL
            .iter()
            .zip(self.matched)
            .map(|(r, n)| weights.weight(*r) * T::of_count(n as usize))
            .sum();
        num / T::of_count(q_size)
    }
}

fn role_slot(role: RoleType) -> usize {
    RoleType::ALL
        .iter()
        .position(|r| *r == role)
        .expect("role listed")
}

/// `Σ N_q(c) · ln p(c|d)` over the concepts in the sat scope, skipping
/// concepts unseen in the collection.
pub fn sat<T: Scalar>(
    doc: usize,
    bag: &QueryBag,
    index: &CollectionIndex,
    cfg: &SmoothingConfig<T>,
) -> Result<T> {
    let d = index.document(doc);
    let total = crate::corpus_index::TermStats::total_tokens(index);
    let mut acc = T::zero();
    for e in bag
        .entries
        .iter()
        .filter(|e| e.in_sat && !e.tokens.is_empty())
    {
        let cf = index.phrase_collection_count(&e.tokens);
        if cf == 0 {
            continue;
        }
        let p = smoothed_prob(d.phrase_count(&e.tokens), d.len(), cf, total, cfg)
            .ok_or_else(|| Error::Query(format!("document {} is empty and mu is 0", d.doc_id)))?;
        acc = acc + T::of(f64::from(e.count)) * p.ln();
    }
    Ok(acc)
}

/// `Σ W(role)` over concepts present in the document, divided by `|q|`.
pub fn imp<T: Scalar>(
    doc: usize,
    bag: &QueryBag,
    index: &CollectionIndex,
    weights: &RoleWeights<T>,
) -> T {
    let d = index.document(doc);
    let num: T = bag
        .entries
        .iter()
        .filter(|e| !e.tokens.is_empty() && d.phrase_count(&e.tokens) > 0)
        .map(|e| weights.weight(e.role))
        .sum();
    num / T::of_count(bag.size())
}

/// `sat + ln(imp)`, or `None` when the document carries no weighted concept.
pub fn rel<T: Scalar>(
    doc: usize,
    bag: &QueryBag,
    index: &CollectionIndex,
    weights: &RoleWeights<T>,
    cfg: &SmoothingConfig<T>,
) -> Result<Option<ScoredDocument<T>>> {
    let imp = imp(doc, bag, index, weights);
    if imp <= T::zero() {
        return Ok(None);
    }
    let sat = sat(doc, bag, index, cfg)?;
    Ok(Some(ScoredDocument {
        doc_id: index.document(doc).doc_id.clone(),
        sat,
        imp,
        rel: sat + imp.ln(),
    }))
}

struct PreparedEntry {
    postings: Vec<Posting>,
    cf: u64,
}

/// Evidence for every document containing at least one concept of the bag.
pub fn collect_evidence<T: Scalar>(
    bag: &QueryBag,
    index: &CollectionIndex,
    cfg: &SmoothingConfig<T>,
) -> Result<Vec<DocEvidence<T>>> {
    let prepared: Vec<PreparedEntry> = bag
        .entries
        .iter()
        .map(|e| {
            let postings = index.phrase_postings(&e.tokens);
            let cf = postings.iter().map(|p| u64::from(p.count)).sum();
            PreparedEntry { postings, cf }
        })
        .collect();
    let mut candidates: Vec<usize> = prepared
        .iter()
        .flat_map(|p| p.postings.iter().map(|x| x.doc as usize))
        .collect();
    candidates.sort_unstable();
    candidates.dedup();

    let total = crate::corpus_index::TermStats::total_tokens(index);
    candidates
        .into_par_iter()
        .map(|doc| {
            let d = index.document(doc);
            let mut sat = T::zero();
            let mut matched = [0u32; 5];
            for (e, p) in bag.entries.iter().zip(&prepared) {
                let count = p
                    .postings
                    .binary_search_by_key(&(doc as u32), |x| x.doc)
                    .map(|i| u64::from(p.postings[i].count))
                    .unwrap_or(0);
                if count > 0 {
                    matched[role_slot(e.role)] += 1;
                }
                if e.in_sat && p.cf > 0 {
                    let prob =
                        smoothed_prob(count, d.len(), p.cf, total, cfg).ok_or_else(|| {
                            Error::Query(format!("document {} is empty and mu is 0", d.doc_id))
                        })?;
                    sat = sat + T::of(f64::from(e.count)) * prob.ln();
                }
            }
            Ok(DocEvidence { doc, sat, matched })
        })
        .collect()
}

/// Turn evidence into a ranked list: documents with zero importance are
/// dropped, the rest ordered by `rel` descending then `doc_id` ascending.
pub fn rank_evidence<T: Scalar>(
    evidence: &[DocEvidence<T>],
    q_size: usize,
    index: &CollectionIndex,
    weights: &RoleWeights<T>,
    k: usize,
) -> Vec<ScoredDocument<T>> {
    let mut scored: Vec<ScoredDocument<T>> = evidence
        .iter()
        .filter_map(|ev| {
            let imp = ev.imp(weights, q_size);
            (imp > T::zero()).then(|| ScoredDocument {
                doc_id: index.document(ev.doc).doc_id.clone(),
                sat: ev.sat,
                imp,
                rel: ev.sat + imp.ln(),
            })
        })
        .collect();
    sort_ranked(&mut scored, |s| s.rel);
    scored.truncate(k);
    scored
}

fn sort_ranked<T: Scalar>(docs: &mut [ScoredDocument<T>], key: impl Fn(&ScoredDocument<T>) -> T) {
    docs.sort_by(|a, b| {
        key(b)
            .partial_cmp(&key(a))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
}

/// Top-`k` candidate documents by `rel`.
pub fn search<T: Scalar>(
    bag: &QueryBag,
    index: &CollectionIndex,
    weights: &RoleWeights<T>,
    cfg: &SmoothingConfig<T>,
    k: usize,
) -> Result<Vec<ScoredDocument<T>>> {
    if k == 0 {
        return Err(Error::Config("result depth must be at least 1".into()));
    }
    let evidence = collect_evidence(bag, index, cfg)?;
    Ok(rank_evidence(&evidence, bag.size(), index, weights, k))
}

/// Query-likelihood baseline over normalized unigrams; `imp` is reported as 1.
pub fn lm_search<T: Scalar, S: AsRef<str>>(
    terms: &[S],
    index: &CollectionIndex,
    cfg: &SmoothingConfig<T>,
    k: usize,
) -> Result<Vec<ScoredDocument<T>>> {
    if k == 0 {
        return Err(Error::Config("result depth must be at least 1".into()));
    }
    let bag = QueryBag::from_terms(terms)?;
    let mut scored: Vec<ScoredDocument<T>> = collect_evidence(&bag, index, cfg)?
        .into_iter()
        .map(|ev| ScoredDocument {
            doc_id: index.document(ev.doc).doc_id.clone(),
            sat: ev.sat,
            imp: T::one(),
            rel: ev.sat,
        })
        .collect();
    sort_ranked(&mut scored, |s| s.rel);
    scored.truncate(k);
    Ok(scored)
}

/// Relevance-model feedback: the `n_terms` most frequent non-query terms
/// of the top `k_docs` query-likelihood results, appended to the query.
pub fn rm_expand<T: Scalar, S: AsRef<str>>(
    terms: &[S],
    index: &CollectionIndex,
    cfg: &SmoothingConfig<T>,
    k_docs: usize,
    n_terms: usize,
) -> Result<Vec<String>> {
    let mut out: Vec<String> = terms.iter().map(|t| t.as_ref().to_string()).collect();
    if n_terms == 0 || k_docs == 0 {
        return Ok(out);
    }
    let top = lm_search(terms, index, cfg, k_docs)?;
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for sd in &top {
        let doc = index.document(index.doc_index(&sd.doc_id).expect("ranked doc is indexed"));
        for t in &doc.tokens {
            if !index.pipeline().is_stopword(t) && !out.iter().any(|q| q == t) {
                *counts.entry(t.as_str()).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    out.extend(ranked.into_iter().take(n_terms).map(|(t, _)| t.to_string()));
    Ok(out)
}

/// `topic Q0 doc rank score tag` lines, ranks from 1.
pub fn format_run<T: Scalar>(topic: &str, ranked: &[ScoredDocument<T>], tag: &str) -> String {
    let mut out = String::new();
    for (i, sd) in ranked.iter().enumerate() {
        let _ = writeln!(
            out,
            "{topic} Q0 {} {} {:.6} {tag}",
            sd.doc_id,
            i + 1,
            sd.rel.as_f64()
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::PipelineConfig;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cfg(mu: f64) -> SmoothingConfig<f64> {
        SmoothingConfig::new(mu).unwrap()
    }

    #[test]
    fn smoothing_examples() {
        assert_abs_diff_eq!(smoothed_prob(3, 10, 5, 100, &cfg(0.0)).unwrap(), 0.3);
        assert_abs_diff_eq!(smoothed_prob(0, 0, 10, 100, &cfg(5.0)).unwrap(), 0.1);
        assert_abs_diff_eq!(
            smoothed_prob(2, 4, 10, 100, &cfg(2.0)).unwrap(),
            2.2 / 6.0,
            epsilon = 1e-12
        );
        assert!(smoothed_prob::<f64>(0, 0, 10, 100, &cfg(0.0)).is_none());
        assert!(SmoothingConfig::new(-1.0f64).is_err());
    }

    #[test]
    fn full_match_role_search_orders_like_lm() {
        let index = CollectionIndex::from_texts(
            [
                ("a", "cheap flights cheap hotels"),
                ("b", "flights hotels paris"),
                ("c", "hotels flights flights and more words here"),
            ],
            PipelineConfig::raw(),
        )
        .unwrap();
        let terms = ["flights", "hotels"];
        let bag = QueryBag::from_terms(&terms).unwrap();
        let ids = |r: Vec<ScoredDocument<f64>>| r.into_iter().map(|s| s.doc_id).collect::<Vec<_>>();
        let role = search(
            &bag,
            &index,
            &RoleWeights::uniform(1.0).unwrap(),
            &cfg(10.0),
            10,
        )
        .unwrap();
        let lm = lm_search(&terms, &index, &cfg(10.0), 10).unwrap();
        assert_eq!(ids(role), ids(lm));
    }

    #[test]
    fn imp_hand_example() {
        let index = CollectionIndex::from_texts(
            [("d", "cars engines repair fail"), ("e", "nothing here")],
            PipelineConfig::default(),
        )
        .unwrap();
        let mut bag = QueryBag {
            entries: Vec::new(),
        };
        bag.push("car", "car", RoleType::CoI, true);
        bag.push("engin", "engine", RoleType::CoI, true);
        bag.push("repair", "repair", RoleType::DC, true);
        bag.push("", "how", RoleType::SC, true);
        let w = RoleWeights::new(0.9, 0.5, 0.3, 0.2).unwrap();
        let d = index.doc_index("d").unwrap();
        assert_abs_diff_eq!(imp(d, &bag, &index, &w), 0.575, epsilon = 1e-12);
        assert_eq!(imp(index.doc_index("e").unwrap(), &bag, &index, &w), 0.0);
        assert_eq!(bag.size(), 4);
    }

    #[test]
    fn imp_of_one_reduces_to_sat() {
        let index = CollectionIndex::from_texts(
            [("a", "alpha beta"), ("b", "alpha gamma")],
            PipelineConfig::default(),
        )
        .unwrap();
        let bag = QueryBag::from_terms(&["alpha"]).unwrap();
        let w = RoleWeights::uniform(1.0).unwrap();
        let s = rel(0, &bag, &index, &w, &cfg(10.0)).unwrap().unwrap();
        assert_eq!(s.imp, 1.0);
        assert_eq!(s.rel, s.sat);
    }

    #[test]
    fn sat_multiplicity_and_sign() {
        let index = CollectionIndex::from_texts(
            [("a", "alpha beta alpha"), ("b", "gamma")],
            PipelineConfig::default(),
        )
        .unwrap();
        let one = QueryBag::from_terms(&["alpha"]).unwrap();
        let two = QueryBag::from_terms(&["alpha", "alpha"]).unwrap();
        let s1 = sat(0, &one, &index, &cfg(1.0)).unwrap();
        let s2 = sat(0, &two, &index, &cfg(1.0)).unwrap();
        assert!(s1 <= 0.0);
        assert_abs_diff_eq!(s2, 2.0 * s1, epsilon = 1e-12);
        // unseen concepts are skipped and reported
        let unseen = QueryBag::from_terms(&["alpha", "zeta"]).unwrap();
        assert_eq!(sat(0, &unseen, &index, &cfg(1.0)).unwrap(), s1);
        assert_eq!(unseen.unseen(&index), vec!["zeta".to_string()]);
    }

    #[test]
    fn search_edges() {
        let index =
            CollectionIndex::from_texts([("a", "alpha"), ("b", "beta")], PipelineConfig::default())
                .unwrap();
        let w = RoleWeights::uniform(1.0).unwrap();
        let bag = QueryBag::from_terms(&["zeta"]).unwrap();
        assert!(search(&bag, &index, &w, &cfg(10.0), 5).unwrap().is_empty());
        let bag = QueryBag::from_terms(&["alpha", "beta"]).unwrap();
        assert_eq!(search(&bag, &index, &w, &cfg(10.0), 50).unwrap().len(), 2);
        assert!(search(&bag, &index, &w, &cfg(10.0), 0).is_err());
        let single =
            CollectionIndex::from_texts([("only", "alpha")], PipelineConfig::default()).unwrap();
        let r = lm_search(&["alpha"], &single, &cfg(10.0), 10).unwrap();
        assert_eq!(r[0].doc_id, "only");
    }

    #[test]
    fn rm_picks_planted_term() {
        let index = CollectionIndex::from_texts(
            [
                ("a", "alpha zebra zebra zebra beta"),
                ("b", "alpha zebra gamma"),
                ("c", "delta epsilon"),
            ],
            PipelineConfig::raw(),
        )
        .unwrap();
        let q = ["alpha"];
        let out = rm_expand(&q, &index, &cfg(10.0), 2, 1).unwrap();
        assert_eq!(out, ["alpha", "zebra"]);
        assert_eq!(rm_expand(&q, &index, &cfg(10.0), 2, 0).unwrap(), ["alpha"]);
        let all = rm_expand(&q, &index, &cfg(10.0), 99, 3).unwrap();
        assert_eq!(all, ["alpha", "zebra", "beta", "gamma"]);
    }

    #[test]
    fn weights_file_round_trip() {
        let w = RoleWeights::new(0.9, 0.25, 0.125, 0.5).unwrap();
        let back = RoleWeights::<f64>::parse_kv(&w.to_kv_string(), "w").unwrap();
        assert_eq!(back, w);
        assert_eq!(w.weight(RoleType::SC), 0.0);
        assert!(
            RoleWeights::<f64>::parse_kv("w_coi=1\nw_dc=1\nw_rc=1\nw_ec=1\nw_sc=0.5", "w").is_err()
        );
        assert!(RoleWeights::new(1.5f64, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn run_format() {
        let docs = vec![ScoredDocument {
            doc_id: "D1".into(),
            sat: -1.0,
            imp: 1.0,
            rel: -1.0f64,
        }];
        assert_eq!(format_run("151", &docs, "lm"), "151 Q0 D1 1 -1.000000 lm\n");
    }

    #[test]
    fn generic_over_f32() {
        let index = CollectionIndex::from_texts(
            [("a", "alpha beta"), ("b", "beta")],
            PipelineConfig::default(),
        )
        .unwrap();
        let bag = QueryBag::from_terms(&["alpha", "beta"]).unwrap();
        let w = RoleWeights::<f32>::uniform(1.0).unwrap();
        let r32 = search(&bag, &index, &w, &SmoothingConfig::<f32>::default(), 5).unwrap();
        let r64 = search(
            &bag,
            &index,
            &RoleWeights::uniform(1.0).unwrap(),
            &cfg(DEFAULT_MU),
            5,
        )
        .unwrap();
        let ids32: Vec<&str> = r32.iter().map(|d| d.doc_id.as_str()).collect();
        let ids64: Vec<&str> = r64.iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids32, ids64);
    }

    proptest! {
        #[test]
        fn smoothing_sums_to_one(
            docs in prop::collection::vec(prop::collection::vec(0usize..12, 0..15), 1..6),
            mu in 0.5f64..2000.0,
        ) {
            let vocab = ["a1", "b2", "c3", "d4", "e5", "f6", "g7", "h8", "i9", "j10", "k11", "l12"];
            let texts: Vec<(String, String)> = docs
                .iter()
                .enumerate()
                .map(|(i, d)| (format!("d{i}"), d.iter().map(|&t| vocab[t]).collect::<Vec<_>>().join(" ")))
                .collect();
            let Ok(index) = CollectionIndex::from_texts(texts, PipelineConfig::raw()) else { return Ok(()); };
            let total = crate::corpus_index::TermStats::total_tokens(&index);
            prop_assume!(total > 0);
            let c = cfg(mu);
            for d in index.documents() {
                let sum: f64 = index
                    .collection_counts()
                    .iter()
                    .map(|(t, cf)| smoothed_prob(d.phrase_count(std::slice::from_ref(t)), d.len(), *cf, total, &c).unwrap())
                    .sum();
                prop_assert!((sum - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn log_rank_matches_product_rank(
            pairs in prop::collection::vec((-30.0f64..0.0, 0.01f64..1.0), 2..20),
        ) {
            let mut by_log: Vec<usize> = (0..pairs.len()).collect();
            by_log.sort_by(|&a, &b| (pairs[b].0 + pairs[b].1.ln()).total_cmp(&(pairs[a].0 + pairs[a].1.ln())).then(a.cmp(&b)));
            for w in by_log.windows(2) {
                let (x, y) = (pairs[w[0]], pairs[w[1]]);
                prop_assert!(x.0.exp() * x.1 >= y.0.exp() * y.1 * (1.0 - 1e-9));
            }
        }
    }
}
