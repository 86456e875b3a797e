#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use roleqe::cli::{cmd_index, IndexArtifact, RunConfig, Session};
use roleqe::corpus_index::CollectionIndex;
use roleqe::eval::{load_qrels, load_topics, Qrels, Topic};
use roleqe::expansion::Pattern;
use roleqe::lexical_kb::KnowledgeBase;
use roleqe::linguistics::{NcpLexicon, QueryAnalyzer, RoleType};
use roleqe::retrieval::QueryBag;

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn bench_dir() -> PathBuf {
    manifest_dir().join("data/bench")
}

pub struct Bench {
    pub cfg: RunConfig,
    pub artifact: IndexArtifact,
    pub kb: KnowledgeBase,
    pub topics: Vec<Topic>,
    pub qrels: Qrels,
}

impl Bench {
    pub fn load() -> Bench {
        let dir = bench_dir();
        let cfg = RunConfig::load(&dir.join("bench.conf")).unwrap();
        let artifact = cmd_index(&cfg).unwrap();
        let kb = KnowledgeBase::load(cfg.kb.as_ref().unwrap()).unwrap();
        let topics = load_topics(&dir.join("topics.txt")).unwrap();
        let (qrels, _) = load_qrels(&dir.join("qrels.txt")).unwrap();
        Bench {
            cfg,
            artifact,
            kb,
            topics,
            qrels,
        }
    }

    pub fn session(&self, pattern: Pattern) -> Session {
        let cfg = RunConfig {
            pattern,
            ..self.cfg.clone()
        };
        let analyzer = QueryAnalyzer::new(
            self.artifact.index.pipeline().clone(),
            NcpLexicon::builtin(),
        );
        Session::from_parts(cfg, self.artifact.clone(), Some(self.kb.clone()), analyzer).unwrap()
    }
}

/// One query concept as the oracle sees it.
#[derive(Debug, Clone)]
pub struct OracleConcept {
    pub tokens: Vec<String>,
    pub role: RoleType,
    pub count: u32,
    pub in_sat: bool,
}

pub fn oracle_concepts(bag: &QueryBag) -> Vec<OracleConcept> {
    bag.entries()
        .iter()
        .map(|e| OracleConcept {
            tokens: e.tokens.clone(),
            role: e.role,
            count: e.count,
            in_sat: e.in_sat,
        })
        .collect()
}

fn occurrences(doc: &[String], phrase: &[String]) -> u64 {
    if phrase.is_empty() || phrase.len() > doc.len() {
        return 0;
    }
    let mut n = 0;
    for start in 0..=doc.len() - phrase.len() {
        if doc[start..start + phrase.len()] == *phrase {
            n += 1;
        }
    }
    n
}

/// Straight-line `p(q|d) * Imp(q,d)` for every document, in document order.
/// `None` marks documents without any weighted concept.
pub fn brute_force_scores(
    docs: &[Vec<String>],
    concepts: &[OracleConcept],
    weights: [f64; 5],
    mu: f64,
) -> Vec<Option<f64>> {
    let total: u64 = docs.iter().map(|d| d.len() as u64).sum();
    let weight = |r: RoleType| weights[RoleType::ALL.iter().position(|x| *x == r).unwrap()];
    docs.iter()
        .map(|doc| {
            let mut likelihood = 1.0f64;
            let mut importance = 0.0f64;
            for c in concepts {
                let in_doc = occurrences(doc, &c.tokens);
                if in_doc > 0 {
                    importance += weight(c.role);
                }
                let cf: u64 = docs.iter().map(|d| occurrences(d, &c.tokens)).sum();
                if c.in_sat && cf > 0 {
                    let p =
                        (in_doc as f64 + mu * cf as f64 / total as f64) / (doc.len() as f64 + mu);
                    likelihood *= p.powi(c.count as i32);
                }
            }
            let importance = importance / concepts.len() as f64;
            (importance > 0.0).then_some(likelihood * importance)
        })
        .collect()
}

/// Doc indices ordered by brute-force score, ties by id (index order).
pub fn brute_force_ranking(scores: &[Option<f64>]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).filter(|&i| scores[i].is_some()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .unwrap()
            .partial_cmp(&scores[a].unwrap())
            .unwrap()
            .then(a.cmp(&b))
    });
    idx
}

pub fn doc_tokens(index: &CollectionIndex) -> Vec<Vec<String>> {
    index.documents().iter().map(|d| d.tokens.clone()).collect()
}

/// Precision summed at each relevant rank over the number relevant.
pub fn oracle_ap(ranking: &[String], relevant: &BTreeSet<&str>) -> f64 {
    let mut hits = 0.0;
    let mut total = 0.0;
    for (i, d) in ranking.iter().enumerate() {
        if relevant.contains(d.as_str()) {
            hits += 1.0;
            total += hits / (i as f64 + 1.0);
        }
    }
    total / relevant.len() as f64
}

/// Oracle MAP of the given per-topic bags under `weights`.
pub fn oracle_map(
    index: &CollectionIndex,
    bags: &[(String, QueryBag)],
    qrels: &Qrels,
    weights: [f64; 5],
    mu: f64,
) -> f64 {
    let docs = doc_tokens(index);
    let mut aps = Vec::new();
    for (topic, bag) in bags {
        let relevant = qrels.relevant(topic);
        if relevant.is_empty() {
            continue;
        }
        let scores = brute_force_scores(&docs, &oracle_concepts(bag), weights, mu);
        let ranking: Vec<String> = brute_force_ranking(&scores)
            .into_iter()
            .map(|i| index.document(i).doc_id.clone())
            .collect();
        aps.push(oracle_ap(&ranking, &relevant));
    }
    aps.iter().sum::<f64>() / aps.len() as f64
}

pub fn write_file(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}
