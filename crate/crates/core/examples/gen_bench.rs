//! Writes the synthetic benchmark: 50 topics of 4 documents each, a
//! lexicon relating each topic's head noun to a synonym and a hypernym,
//! topics, qrels and a config.
//!
//! Per topic, with head `H`, modifier `M` and collocates `J`/`K`:
//! one relevant document uses the query terms verbatim, the other relevant
//! document only the synonym (even topics) or hypernym (odd topics) plus the
//! collocates, and two non-relevant documents each mention one query term.
//!
//!     cargo run --example gen_bench -- crates/core/data/bench

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roleqe::text::{stem_fixpoint, Stopwords};

const SEED: u64 = 20_240_611;
const TOPICS: usize = 50;
const FILLERS: usize = 1500;

struct Words {
    rng: ChaCha8Rng,
    stems: BTreeSet<String>,
    stopwords: Stopwords,
}

impl Words {
    fn fresh(&mut self, suffix: &str) -> String {
        const ONSETS: &[&str] = &[
            "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "t", "v", "z", "br", "tr", "pl",
        ];
        const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];
        const CODAS: &[&str] = &["k", "m", "n", "p", "r", "t", "v"];
        loop {
            let syllables = self.rng.gen_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(ONSETS.choose(&mut self.rng).unwrap());
                w.push_str(VOWELS.choose(&mut self.rng).unwrap());
            }
            if suffix.is_empty() {
                w.push_str(CODAS.choose(&mut self.rng).unwrap());
            } else {
                w.push_str(suffix);
            }
            let stem = stem_fixpoint(&w);
            if !self.stopwords.contains(&w) && self.stems.insert(stem) {
                return w;
            }
        }
    }
}

struct Topic {
    head: String,
    synonym: String,
    hypernym: String,
    modifier: String,
    j: String,
    k: String,
}

fn main() -> std::io::Result<()> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("crates/core/data/bench"));
    std::fs::create_dir_all(&out)?;

    let mut words = Words {
        rng: ChaCha8Rng::seed_from_u64(SEED),
        stems: BTreeSet::new(),
        stopwords: Stopwords::default(),
    };
    let topics: Vec<Topic> = (0..TOPICS)
        .map(|_| Topic {
            head: words.fresh(""),
            synonym: words.fresh(""),
            hypernym: words.fresh(""),
            modifier: words.fresh("ous"),
            j: words.fresh(""),
            k: words.fresh(""),
        })
        .collect();
    let fillers: Vec<String> = (0..FILLERS).map(|_| words.fresh("")).collect();
    let mut rng = words.rng;
    let mut fill = |n: usize| -> Vec<String> {
        (0..n)
            .map(|_| fillers.choose(&mut rng).unwrap().clone())
            .collect()
    };

    let mut numbers: Vec<usize> = (1..=TOPICS * 4).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    numbers.shuffle(&mut shuffle_rng);

    let mut corpus = String::new();
    let mut qrels = String::new();
    let mut topic_file = String::new();
    let mut kb = String::from("# Synthetic benchmark lexicon.\n");

    for (t, tp) in topics.iter().enumerate() {
        let number = 301 + t;
        let alternate = if t % 2 == 0 {
            &tp.synonym
        } else {
            &tp.hypernym
        };
        let mut docs: Vec<(Vec<String>, bool)> = Vec::new();

        let mut d1 = vec![
            tp.j.clone(),
            tp.modifier.clone(),
            tp.head.clone(),
            tp.k.clone(),
            tp.j.clone(),
            tp.k.clone(),
        ];
        d1.extend(fill(8));
        docs.push((d1, true));

        let mut d2 = fill(3);
        d2.push(tp.j.clone());
        d2.extend(fill(2));
        d2.push(alternate.clone());
        d2.extend(fill(2));
        d2.push(tp.k.clone());
        d2.extend(fill(3));
        docs.push((d2, true));

        let mut d3 = fill(4);
        d3.push(tp.head.clone());
        d3.extend(fill(4));
        if t % 3 == 0 {
            d3.push(tp.j.clone());
        }
        d3.extend(fill(3));
        docs.push((d3, false));

        let mut d4 = fill(5);
        d4.push(tp.modifier.clone());
        d4.extend(fill(6));
        docs.push((d4, false));

        for (i, (tokens, relevant)) in docs.into_iter().enumerate() {
            let id = format!("SYN-{:03}", numbers[t * 4 + i]);
            let _ = writeln!(
                corpus,
                "<DOC>\n<DOCNO> {id} </DOCNO>\n<TEXT>\n{}.\n</TEXT>\n</DOC>",
                tokens.join(" ")
            );
            let _ = writeln!(qrels, "{number} 0 {id} {}", u8::from(relevant));
        }

        let _ = writeln!(
            topic_file,
            "<top>\n<num> Number: {number}\n<title> Topic: {} {}\n<desc> Description:\nDocuments about {} {}.\n<narr> Narrative:\nA relevant document discusses the {} or its {}.\n</top>\n",
            tp.modifier, tp.head, tp.modifier, tp.head, tp.head, tp.synonym
        );

        let _ = writeln!(
            kb,
            "S\t{h}.n.1\tn\t{h}|{s}\tsynthetic head noun {t}",
            h = tp.head,
            s = tp.synonym
        );
        let _ = writeln!(
            kb,
            "S\t{p}.n.1\tn\t{p}\tsynthetic hypernym {t}",
            p = tp.hypernym
        );
        let _ = writeln!(
            kb,
            "S\t{m}.a.1\ta\t{m}\tsynthetic modifier {t}",
            m = tp.modifier
        );
        let _ = writeln!(
            kb,
            "E\t{h}.n.1\thypernym\t{p}.n.1",
            h = tp.head,
            p = tp.hypernym
        );
        let _ = writeln!(
            kb,
            "E\t{p}.n.1\thyponym\t{h}.n.1",
            h = tp.head,
            p = tp.hypernym
        );
    }

    std::fs::write(out.join("corpus.trec"), corpus)?;
    std::fs::write(out.join("qrels.txt"), qrels)?;
    std::fs::write(out.join("topics.txt"), topic_file)?;
    std::fs::write(out.join("kb.tsv"), kb)?;
    std::fs::write(
        out.join("bench.conf"),
        "# Synthetic benchmark configuration; paths are relative to this file.\n\
         corpus = corpus.trec\n\
         corpus_format = trec\n\
         kb = kb.tsv\n\
         window = 5\n\
         mu = 1000\n\
         k_stat = 5\n\
         k_lex = 5\n\
         seed = 42\n",
    )?;
    Ok(())
}
