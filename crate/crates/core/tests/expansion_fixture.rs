use std::path::{Path, PathBuf};

use roleqe::corpus_index::{build_ngram_model, ingest, CollectionIndex, CorpusSource, NGramModel};
use roleqe::expansion::{
    dedup, CandidateTerm, Expander, ExpansionConfig, ExpansionTrace, Pattern, TermSource,
};
use roleqe::lexical_kb::{KnowledgeBase, LexicalRelation, PathSimilarity};
use roleqe::linguistics::{NcpLexicon, QueryAnalyzer, RoleType};
use roleqe::text::PipelineConfig;

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/prisons")
}

struct Prisons {
    index: CollectionIndex,
    model: NGramModel,
    kb: KnowledgeBase,
}

fn load() -> Prisons {
    let dir = fixture_dir();
    let index = ingest(
        &CorpusSource::PlainDir(dir.join("corpus")),
        PipelineConfig::default(),
    )
    .unwrap()
    .index;
    let model = build_ngram_model(&index, 5).unwrap();
    let kb = KnowledgeBase::load(&dir.join("kb.tsv")).unwrap();
    Prisons { index, model, kb }
}

fn expand(f: &Prisons, pattern: Pattern, config: ExpansionConfig) -> ExpansionTrace {
    let analyzer = QueryAnalyzer::new(PipelineConfig::default(), NcpLexicon::default());
    let cq = analyzer
        .analyze("coping with overcrowded prisons", Some(&f.index))
        .unwrap();
    Expander {
        index: &f.index,
        model: &f.model,
        kb: &f.kb,
        measure: &PathSimilarity,
        config,
    }
    .expand(&cq, pattern)
    .unwrap()
}

#[test]
fn statistical_pool_holds_the_collocates() {
    let f = load();
    let trace = expand(&f, Pattern::Ie1, ExpansionConfig::default());
    let pool = &trace.stat_pool;
    for word in [
        "state",
        "years",
        "jails",
        "country",
        "conditions",
        "problems",
    ] {
        assert!(
            pool.contains_display(word),
            "{word} missing from {:?}",
            pool.entries
        );
    }
    assert!(pool.entries.windows(2).all(|w| w[0].score >= w[1].score));
}

#[test]
fn synonym_pool_holds_co_lemmas() {
    let f = load();
    let trace = expand(&f, Pattern::Ie1, ExpansionConfig::default());
    let pool = trace.lex_pool.as_ref().unwrap();
    for word in ["prison house", "grapple", "deal", "contend", "make out"] {
        assert!(
            pool.contains_display(word),
            "{word} missing from {:?}",
            pool.entries
        );
    }
    assert!(pool
        .entries
        .iter()
        .all(|c| c.relation == Some(LexicalRelation::Synonym)));
}

#[test]
fn ie1_three_and_three() {
    let f = load();
    let trace = expand(
        &f,
        Pattern::Ie1,
        ExpansionConfig {
            k_stat: 3,
            k_lex: 3,
            ..Default::default()
        },
    );
    let eq = &trace.expanded;
    assert_eq!(eq.original.concepts.len(), 4);
    let stat = eq
        .expansions
        .iter()
        .filter(|e| e.source == TermSource::Statistical)
        .count();
    let lex = eq
        .expansions
        .iter()
        .filter(|e| e.source == TermSource::LexicalSemantic)
        .count();
    assert!(
        stat <= 3 && lex <= 3 && stat + lex >= 4,
        "{:?}",
        eq.expansions
    );
    let terms = eq.role_terms();
    let mut stems: Vec<&str> = terms
        .iter()
        .filter(|t| !t.term.is_empty())
        .map(|t| t.term.as_str())
        .collect();
    let n = stems.len();
    stems.sort_unstable();
    stems.dedup();
    assert_eq!(stems.len(), n);
    assert!(terms[4..].iter().all(|t| t.role == RoleType::EC));
}

#[test]
fn base_pairs_and_dump() {
    let f = load();
    let trace = expand(&f, Pattern::Ie1, ExpansionConfig::default());
    let mut pairs: Vec<(String, String)> = trace
        .base_pairs
        .iter()
        .map(|(h, d, _)| {
            if h < d {
                (h.clone(), d.clone())
            } else {
                (d.clone(), h.clone())
            }
        })
        .collect();
    pairs.sort();
    assert_eq!(
        pairs,
        [
            ("cope".to_string(), "prison".to_string()),
            ("overcrowd".to_string(), "prison".to_string())
        ]
    );
    let dump = trace.dump();
    assert!(dump.lines().any(|l| l.starts_with("#pair\t")));
    assert!(dump.lines().any(|l| l.starts_with("#stat\t")));
    assert!(dump.lines().any(|l| l.starts_with("#lex\t")));
}

#[test]
fn pattern_none_keeps_originals_only() {
    let f = load();
    let trace = expand(&f, Pattern::None, ExpansionConfig::default());
    assert!(trace.expanded.expansions.is_empty());
    assert_eq!(trace.expanded.role_terms().len(), 4);
}

#[test]
fn hyponym_pattern_reaches_penitentiary() {
    let f = load();
    let trace = expand(&f, Pattern::Ie3, ExpansionConfig::default());
    let lex: Vec<&str> = trace
        .expanded
        .expansions
        .iter()
        .filter(|e| e.source == TermSource::LexicalSemantic)
        .map(|e| e.display.as_str())
        .collect();
    assert!(lex.contains(&"penitentiary"), "{lex:?}");
    assert!(trace
        .expanded
        .expansions
        .iter()
        .all(|e| e.relation.is_none() || e.relation == Some(LexicalRelation::Hyponym)));
}

#[test]
fn journal_collision_keeps_lexical_copy() {
    let cand = |source, relation| CandidateTerm {
        term: "journal".into(),
        display: "journal".into(),
        source,
        relation,
        score: 1.0,
        origin: vec!["book".into()],
    };
    let (stat, lex) = dedup(
        vec![cand(TermSource::Statistical, None)],
        vec![cand(
            TermSource::LexicalSemantic,
            Some(LexicalRelation::Hyponym),
        )],
    );
    assert!(stat.is_empty());
    assert_eq!(lex.len(), 1);
    assert_eq!(lex[0].relation, Some(LexicalRelation::Hyponym));
}

#[test]
fn fixed_seed_is_deterministic() {
    let f = load();
    let a = expand(
        &f,
        Pattern::Ie4,
        ExpansionConfig {
            seed: 11,
            ..Default::default()
        },
    )
    .dump();
    let b = expand(
        &f,
        Pattern::Ie4,
        ExpansionConfig {
            seed: 11,
            ..Default::default()
        },
    )
    .dump();
    assert_eq!(a, b);
}
