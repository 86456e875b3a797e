//! TREC topics, qrels and runs; average precision, MAP, paired t-tests and
//! the comparison report.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Documents scored per topic unless configured otherwise.
pub const DEFAULT_DEPTH: usize = 1000;

/// Significance level of the paired t-test.
pub const ALPHA: f64 = 0.05;

const SD_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topic {
    pub number: String,
    pub title: String,
    pub description: String,
    pub narrative: String,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parse `<top>` blocks with `<num>`, `<title>`, `<desc>` and `<narr>`
/// fields. Field text runs until the next tag and may span lines.
pub fn parse_topics(text: &str, source: &str) -> Result<Vec<Topic>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Field {
        None,
        Num,
        Title,
        Desc,
        Narr,
    }
    fn strip_label(s: &str, label: &str) -> String {
        let s = s.trim();
        match s.get(..label.len()) {
            Some(head) if head.eq_ignore_ascii_case(label) => s[label.len()..].trim().to_string(),
            _ => s.to_string(),
        }
    }

    let mut topics = Vec::new();
    let mut seen = BTreeSet::new();
    let mut fields: BTreeMap<u8, String> = BTreeMap::new();
    let mut current = Field::None;
    let mut open_line: Option<usize> = None;

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let mut rest = raw.trim();
        if rest.is_empty() {
            continue;
        }
        loop {
            let tags: [(&str, Option<Field>); 6] = [
                ("<top>", None),
                ("</top>", None),
                ("<num>", Some(Field::Num)),
                ("<title>", Some(Field::Title)),
                ("<desc>", Some(Field::Desc)),
                ("<narr>", Some(Field::Narr)),
            ];
            let found = tags
                .iter()
                .filter_map(|(tag, f)| rest.find(tag).map(|pos| (pos, *tag, *f)))
                .min_by_key(|(pos, _, _)| *pos);
            let (before, tag) = match found {
                Some((pos, tag, f)) => {
                    let before = &rest[..pos];
                    (before, Some((tag, f, pos)))
                }
                None => (rest, None),
            };
            if !before.trim().is_empty() && current != Field::None {
                let slot = fields.entry(current as u8).or_default();
                if !slot.is_empty() {
                    slot.push(' ');
                }
                slot.push_str(before.trim());
            }
            let Some((tag, field, pos)) = tag else { break };
            match tag {
                "<top>" => {
                    if open_line.is_some() {
                        return Err(Error::parse(source, line_no, "nested <top>"));
                    }
                    open_line = Some(line_no);
                    fields.clear();
                    current = Field::None;
                }
                "</top>" => {
                    let start = open_line
                        .take()
                        .ok_or_else(|| Error::parse(source, line_no, "</top> without <top>"))?;
                    let get = |f: Field| fields.get(&(f as u8)).cloned().unwrap_or_default();
                    let number = strip_label(&get(Field::Num), "Number:");
                    if number.is_empty() {
                        return Err(Error::parse(source, start, "topic without <num>"));
                    }
                    let title = strip_label(&get(Field::Title), "Topic:");
                    if title.is_empty() {
                        return Err(Error::parse(
                            source,
                            start,
                            format!("topic {number} without <title>"),
                        ));
                    }
                    if !seen.insert(number.clone()) {
                        return Err(Error::parse(
                            source,
                            start,
                            format!("duplicate topic {number}"),
                        ));
                    }
                    topics.push(Topic {
                        number,
                        title,
                        description: strip_label(&get(Field::Desc), "Description:"),
                        narrative: strip_label(&get(Field::Narr), "Narrative:"),
                    });
                    current = Field::None;
                }
                _ => {
                    if open_line.is_none() {
                        return Err(Error::parse(
                            source,
                            line_no,
                            format!("{tag} outside <top>"),
                        ));
                    }
                    current = field.expect("field tag");
                }
            }
            rest = &rest[pos + tag.len()..];
        }
    }
    if let Some(start) = open_line {
        return Err(Error::parse(source, start, "unterminated <top>"));
    }
    Ok(topics)
}

pub fn load_topics(path: &Path) -> Result<Vec<Topic>> {
    parse_topics(&read(path)?, &path.display().to_string())
}

/// Binary relevance judgments per topic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, bool>>,
}

impl Qrels {
    pub fn insert(&mut self, topic: &str, doc: &str, relevant: bool) -> Option<bool> {
        self.judgments
            .entry(topic.to_string())
            .or_default()
            .insert(doc.to_string(), relevant)
    }

    pub fn is_relevant(&self, topic: &str, doc: &str) -> bool {
        self.judgments
            .get(topic)
            .and_then(|m| m.get(doc))
            .copied()
            .unwrap_or(false)
    }

    pub fn relevant(&self, topic: &str) -> BTreeSet<&str> {
        self.judgments
            .get(topic)
            .map(|m| {
                m.iter()
                    .filter(|(_, r)| **r)
                    .map(|(d, _)| d.as_str())
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    /// Topics with at least one relevant document.
    pub fn evaluable_topics(&self) -> Vec<&str> {
        self.topics()
            .filter(|t| !self.relevant(t).is_empty())
            .collect()
    }

    /// Judgments for the given topics only.
    pub fn restrict<S: AsRef<str>>(&self, topics: &[S]) -> Qrels {
        let judgments = topics
            .iter()
            .filter_map(|t| {
                self.judgments
                    .get_key_value(t.as_ref())
                    .map(|(k, v)| (k.clone(), v.clone()))
            })
            .collect();
        Qrels { judgments }
    }
}

/// `topic iter doc rel` lines. Grades above zero count as relevant; a
/// repeated judgment replaces the earlier one and is reported as a warning.
pub fn parse_qrels(text: &str, source: &str) -> Result<(Qrels, Vec<String>)> {
    let mut qrels = Qrels::default();
    let mut warnings = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [topic, _iter, doc, rel] = fields[..] else {
            return Err(Error::parse(
                source,
                n + 1,
                format!("expected 4 columns, got {}", fields.len()),
            ));
        };
        let grade: i64 = rel
            .parse()
            .map_err(|_| Error::parse(source, n + 1, format!("bad relevance {rel:?}")))?;
        if qrels.insert(topic, doc, grade > 0).is_some() {
            warnings.push(format!(
                "{source}:{}: duplicate judgment for {topic}/{doc}",
                n + 1
            ));
        }
    }
    Ok((qrels, warnings))
}

pub fn load_qrels(path: &Path) -> Result<(Qrels, Vec<String>)> {
    parse_qrels(&read(path)?, &path.display().to_string())
}

/// A ranked run: per topic, document ids in rank order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Run {
    pub tag: String,
    pub rankings: BTreeMap<String, Vec<String>>,
}

/// Parse `topic Q0 doc rank score tag` lines; documents are ordered by rank.
pub fn parse_run(text: &str, source: &str) -> Result<Run> {
    let mut ranked: BTreeMap<String, Vec<(u64, String)>> = BTreeMap::new();
    let mut tag = None;
    for (n, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [topic, _q0, doc, rank, score, run_tag] = fields[..] else {
            return Err(Error::parse(
                source,
                n + 1,
                format!("expected 6 columns, got {}", fields.len()),
            ));
        };
        let rank: u64 = rank
            .parse()
            .map_err(|_| Error::parse(source, n + 1, format!("bad rank {rank:?}")))?;
        score
            .parse::<f64>()
            .map_err(|_| Error::parse(source, n + 1, format!("bad score {score:?}")))?;
        tag.get_or_insert_with(|| run_tag.to_string());
        ranked
            .entry(topic.to_string())
            .or_default()
            .push((rank, doc.to_string()));
    }
    let rankings = ranked
        .into_iter()
        .map(|(t, mut docs)| {
            docs.sort();
            (t, docs.into_iter().map(|(_, d)| d).collect())
        })
        .collect();
    Ok(Run {
        tag: tag.unwrap_or_default(),
        rankings,
    })
}

pub fn load_run(path: &Path) -> Result<Run> {
    parse_run(&read(path)?, &path.display().to_string())
}

/// Mean of precision at each relevant rank, over the total number of
/// relevant documents. `None` when nothing is relevant.
pub fn average_precision<T: Scalar, S: AsRef<str>>(
    ranking: &[S],
    relevant: &BTreeSet<&str>,
) -> Option<T> {
    if relevant.is_empty() {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = T::zero();
    let mut seen = BTreeSet::new();
    for (i, doc) in ranking.iter().enumerate() {
        let doc = doc.as_ref();
        if relevant.contains(doc) && seen.insert(doc) {
            hits += 1;
            sum = sum + T::of_count(hits) / T::of_count(i + 1);
        }
    }
    Some(sum / T::of_count(relevant.len()))
}

pub fn map_score<T: Scalar>(aps: &[T]) -> Result<T> {
    if aps.is_empty() {
        return Err(Error::Eval("no evaluable topics".into()));
    }
    Ok(aps.iter().copied().sum::<T>() / T::of_count(aps.len()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRun<T> {
    pub tag: String,
    pub rankings: BTreeMap<String, Vec<String>>,
    pub per_topic_ap: BTreeMap<String, T>,
    pub map: T,
}

/// Score a run against every topic of `qrels` that has a relevant
/// document. A topic missing from the run scores 0. Rankings are cut at
/// `depth`.
pub fn evaluate_run<T: Scalar>(
    run: &Run,
    qrels: &Qrels,
    depth: usize,
) -> Result<(EvalRun<T>, Vec<String>)> {
    let mut warnings = Vec::new();
    let mut per_topic_ap = BTreeMap::new();
    for topic in qrels.topics() {
        let relevant = qrels.relevant(topic);
        let ranking = run.rankings.get(topic).map(Vec::as_slice).unwrap_or(&[]);
        let cut = &ranking[..ranking.len().min(depth)];
        match average_precision::<T, _>(cut, &relevant) {
            Some(ap) => {
                per_topic_ap.insert(topic.to_string(), ap);
            }
            None => warnings.push(format!("topic {topic} has no relevant documents; skipped")),
        }
    }
    for topic in run.rankings.keys() {
        if !per_topic_ap.contains_key(topic) && qrels.relevant(topic).is_empty() {
            warnings.push(format!("run {} topic {topic} has no judgments", run.tag));
        }
    }
    let aps: Vec<T> = per_topic_ap.values().copied().collect();
    let map = map_score(&aps)?;
    Ok((
        EvalRun {
            tag: run.tag.clone(),
            rankings: run.rankings.clone(),
            per_topic_ap,
            map,
        },
        warnings,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub df: usize,
    /// Two-sided.
    pub p: f64,
    pub significant: bool,
    /// The standard deviation of the differences was floored.
    pub guarded: bool,
}

/// Two-sided p-value of a Student t statistic.
pub fn t_two_sided_p(t: f64, df: usize) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// The `t` with `P(T > t) = upper_tail` for `df` degrees of freedom.
pub fn t_critical(upper_tail: f64, df: usize) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    dist.inverse_cdf(1.0 - upper_tail)
}

/// Paired two-sided t-test on `a - b`. Identical inputs give `t = 0` and
/// `p = 1`; a nonzero mean with zero spread uses a floored deviation.
pub fn paired_t_test<T: Scalar>(a: &[T], b: &[T]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::Eval(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::Eval("paired t-test needs at least two pairs".into()));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x.as_f64() - y.as_f64())
        .collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let df = n - 1;
    if mean == 0.0 {
        return Ok(TTest {
            t: 0.0,
            df,
            p: 1.0,
            significant: false,
            guarded: false,
        });
    }
    let guarded = var.sqrt() < SD_FLOOR;
    if guarded {
        log::warn!("zero-variance differences with mean {mean}; deviation floored at {SD_FLOOR}");
    }
    let sd = var.sqrt().max(SD_FLOOR);
    let t = mean / (sd / (n as f64).sqrt());
    let p = t_two_sided_p(t, df);
    Ok(TTest {
        t,
        df,
        p,
        significant: p < ALPHA,
        guarded,
    })
}

/// CSV comparing every system with the baselines. Rows list the baselines
/// first, then the runs. Improvement is relative to the first baseline; a
/// baseline tag appears under `significant_vs` when the system's MAP is
/// higher and the paired test on per-topic AP is significant.
pub fn report<T: Scalar>(runs: &[EvalRun<T>], baselines: &[EvalRun<T>]) -> Result<String> {
    if runs.is_empty() && baselines.is_empty() {
        return Err(Error::Eval("no runs to report".into()));
    }
    let systems: Vec<&EvalRun<T>> = baselines.iter().chain(runs).collect();
    let topics: Vec<&String> = systems[0].per_topic_ap.keys().collect();
    for s in &systems {
        if s.per_topic_ap.keys().collect::<Vec<_>>() != topics {
            return Err(Error::Eval(format!(
                "run {} covers different topics",
                s.tag
            )));
        }
    }
    let aps = |r: &EvalRun<T>| -> Vec<T> { r.per_topic_ap.values().copied().collect() };

    let mut out = String::from("system,map,rel_improvement_pct,significant_vs\n");
    for s in &systems {
        let improvement = match baselines.first() {
            Some(base) if base.map > T::zero() => {
                format!(
                    "{:.2}",
                    (s.map.as_f64() - base.map.as_f64()) / base.map.as_f64() * 100.0
                )
            }
            Some(_) => "NA".to_string(),
            None => "0.00".to_string(),
        };
        let mut marks = Vec::new();
        for base in baselines {
            if s.map > base.map
                && topics.len() >= 2
                && paired_t_test(&aps(s), &aps(base))?.significant
            {
                marks.push(base.tag.as_str());
            }
        }
        let _ = writeln!(
            out,
            "{},{:.6},{},{}",
            s.tag,
            s.map.as_f64(),
            improvement,
            marks.join(";")
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const FIG5: &str = "<top>
<num> Number: 151
<title> Topic: Coping with overcrowded prisons
<desc> Description:
The document will provide information on jail and prison overcrowding.
<narr> Narrative:
A relevant document will describe scenes of overcrowding.
</top>
";

    #[test]
    fn parses_topic_block() {
        let topics = parse_topics(FIG5, "t").unwrap();
        assert_eq!(topics.len(), 1);
        assert_eq!(topics[0].number, "151");
        assert_eq!(topics[0].title, "Coping with overcrowded prisons");
        assert!(topics[0].description.starts_with("The document"));
        assert!(topics[0].narrative.ends_with("overcrowding."));
        assert!(parse_topics("", "t").unwrap().is_empty());
        let two = format!("{FIG5}\n{}", FIG5.replace("151", "152"));
        assert_eq!(parse_topics(&two, "t").unwrap().len(), 2);
    }

    #[test]
    fn topic_errors_carry_location() {
        let err = parse_topics("\n<top>\n<title> x\n</top>\n", "f.txt").unwrap_err();
        assert!(err.to_string().starts_with("f.txt:2:"), "{err}");
        assert!(parse_topics("<top>\n<num> Number: 1\n</top>", "f").is_err());
        assert!(parse_topics("<top>\n<num> 1\n<title> a", "f").is_err());
    }

    #[test]
    fn qrels_parsing() {
        let (q, w) = parse_qrels(
            "151 0 WSJ-1 1\n151 0 WSJ-2 0\n151 0 WSJ-3 2\n151 0 WSJ-2 1\n",
            "q",
        )
        .unwrap();
        assert!(q.is_relevant("151", "WSJ-1"));
        assert!(q.is_relevant("151", "WSJ-3"));
        assert!(q.is_relevant("151", "WSJ-2"));
        assert_eq!(w.len(), 1);
        let err = parse_qrels("151 0 WSJ-1 1\n151 0 x\n", "q").unwrap_err();
        assert!(err.to_string().starts_with("q:2:"));
    }

    #[test]
    fn ap_examples() {
        let rel: BTreeSet<&str> = ["r1", "r2", "r3"].into();
        assert_abs_diff_eq!(
            average_precision::<f64, _>(&["r1", "n", "r2"], &rel).unwrap(),
            (1.0 + 2.0 / 3.0) / 3.0,
            epsilon = 1e-12
        );
        assert_eq!(
            average_precision::<f64, _>(&["r3", "r1", "r2", "n"], &rel),
            Some(1.0)
        );
        assert_eq!(average_precision::<f64, _>(&["n"], &rel), Some(0.0));
        assert_eq!(average_precision::<f64, &str>(&[], &BTreeSet::new()), None);
        assert_eq!(map_score(&[1.0, 0.5]).unwrap(), 0.75);
        assert!(map_score::<f64>(&[]).is_err());
    }

    #[test]
    fn t_test_examples() {
        let t = paired_t_test(&[0.1, 0.2, 0.3], &[0.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(t.t, 3.4641, epsilon = 1e-4);
        assert_eq!(t.df, 2);
        assert_abs_diff_eq!(t.p, 0.0742, epsilon = 1e-3);
        assert!(!t.significant);
        let same = paired_t_test(&[0.3, 0.5], &[0.3, 0.5]).unwrap();
        assert_eq!((same.t, same.p, same.significant), (0.0, 1.0, false));
        let flat = paired_t_test(&[0.1; 4], &[0.0; 4]).unwrap();
        assert!(flat.guarded && flat.significant);
        assert!(paired_t_test(&[0.1, 0.2], &[0.1]).is_err());
    }

    #[test]
    fn critical_values_match_table() {
        let table = [
            12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179,
            2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
            2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
        ];
        for (i, expected) in table.iter().enumerate() {
            let df = i + 1;
            assert_abs_diff_eq!(t_critical(0.025, df), expected, epsilon = 5e-4);
            assert_abs_diff_eq!(t_two_sided_p(*expected, df), 0.05, epsilon = 1e-3);
        }
    }

    #[test]
    fn run_round_trip_and_report() {
        let run = parse_run(
            "1 Q0 b 2 -2.0 sys\n1 Q0 a 1 -1.0 sys\n2 Q0 c 1 -1.0 sys\n",
            "r",
        )
        .unwrap();
        assert_eq!(run.tag, "sys");
        assert_eq!(run.rankings["1"], ["a", "b"]);
        let (qrels, _) = parse_qrels("1 0 a 1\n2 0 d 1\n3 0 x 0\n", "q").unwrap();
        let (ev, warnings) = evaluate_run::<f64>(&run, &qrels, DEFAULT_DEPTH).unwrap();
        assert_eq!(ev.map, 0.5);
        assert_eq!(warnings.len(), 1);
        let csv = report(&[ev.clone()], &[ev]).unwrap();
        assert_eq!(csv, "system,map,rel_improvement_pct,significant_vs\nsys,0.500000,0.00,\nsys,0.500000,0.00,\n");
        assert!(report::<f64>(&[], &[]).is_err());
        assert!(parse_run("1 Q0 a x 1 s\n", "r").is_err());
    }

    #[test]
    fn depth_cuts_ranking() {
        let run = Run {
            tag: "s".into(),
            rankings: [("1".to_string(), vec!["n".to_string(), "a".to_string()])].into(),
        };
        let (qrels, _) = parse_qrels("1 0 a 1\n", "q").unwrap();
        assert_eq!(evaluate_run::<f64>(&run, &qrels, 1).unwrap().0.map, 0.0);
        assert_eq!(evaluate_run::<f64>(&run, &qrels, 2).unwrap().0.map, 0.5);
    }

    proptest! {
        #[test]
        fn ap_bounds_and_prefix(
            flags in prop::collection::vec(any::<bool>(), 1..30),
            suffix in prop::collection::vec(any::<bool>(), 0..10),
        ) {
            let docs: Vec<String> = (0..flags.len()).map(|i| format!("d{i}")).collect();
            let rel: BTreeSet<&str> = docs.iter().zip(&flags).filter(|(_, f)| **f).map(|(d, _)| d.as_str()).collect();
            prop_assume!(!rel.is_empty());
            let ap: f64 = average_precision(&docs, &rel).unwrap();
            prop_assert!((0.0..=1.0).contains(&ap));
            let mut prefixed: Vec<String> = rel.iter().map(|d| d.to_string()).collect();
            prefixed.extend(suffix.iter().enumerate().map(|(i, _)| format!("x{i}")));
            prop_assert_eq!(average_precision::<f64, _>(&prefixed, &rel), Some(1.0));
        }

        #[test]
        fn map_is_order_free(mut aps in prop::collection::vec(0.0f64..=1.0, 1..20)) {
            let m = map_score(&aps).unwrap();
            aps.reverse();
            prop_assert!((m - map_score(&aps).unwrap()).abs() < 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&m));
        }

        #[test]
        fn self_test_never_significant(a in prop::collection::vec(0.0f64..=1.0, 2..20)) {
            prop_assert!(!paired_t_test(&a, &a).unwrap().significant);
        }
    }
}
