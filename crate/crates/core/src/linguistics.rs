//! Query front-end: concept segmentation, non-compositional phrase merging,
//! part-of-speech labelling, relation pairs and role-type assignment.
//!
//! Parsing is rule-based and tuned for short title queries. Queries that
//! need a real parser can be supplied pre-tagged through
//! [`parse_preparsed`].

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus_index::TermStats;
use crate::error::{Error, Result};
use crate::text::{tokenize, PipelineConfig};

const DEFAULT_NCP_LEXICON: &str = include_str!("../data/ncp_default.txt");

/// Role a concept plays in the query. Declaration order is the priority
/// order used to settle multiple assignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RoleType {
    /// Concept of interest.
    CoI,
    /// Descriptive concept.
    DC,
    /// Relational concept.
    RC,
    /// Structural concept.
    SC,
    /// Enhancement concept, only produced by expansion.
    EC,
}

impl RoleType {
    pub const ALL: [RoleType; 5] = [
        RoleType::CoI,
        RoleType::DC,
        RoleType::RC,
        RoleType::SC,
        RoleType::EC,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoleType::CoI => "CoI",
            RoleType::DC => "DC",
            RoleType::RC => "RC",
            RoleType::SC => "SC",
            RoleType::EC => "EC",
        }
    }

    /// CoI and DC concepts carry the search intent and seed expansion.
    pub fn is_significant(self) -> bool {
        matches!(self, RoleType::CoI | RoleType::DC)
    }
}

impl fmt::Display for RoleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoleType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "coi" => Ok(RoleType::CoI),
            "dc" => Ok(RoleType::DC),
            "rc" => Ok(RoleType::RC),
            "sc" => Ok(RoleType::SC),
            "ec" => Ok(RoleType::EC),
            _ => Err(Error::Query(format!("unknown role type {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pos {
    Noun,
    Verb,
    Adjective,
    Adverb,
    Function,
}

impl Pos {
    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "noun",
            Pos::Verb => "verb",
            Pos::Adjective => "adjective",
            Pos::Adverb => "adverb",
            Pos::Function => "function",
        }
    }

    pub fn is_content(self) -> bool {
        self != Pos::Function
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pos {
    type Err = Error;

    /// Accepts full names, WordNet letters and Penn Treebank tags.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let pos = match lower.as_str() {
            "noun" | "n" | "nn" | "nns" | "nnp" | "nnps" | "propn" => Pos::Noun,
            "verb" | "v" | "vb" | "vbd" | "vbg" | "vbn" | "vbp" | "vbz" => Pos::Verb,
            "adjective" | "adj" | "a" | "s" | "jj" | "jjr" | "jjs" => Pos::Adjective,
            "adverb" | "adv" | "r" | "rb" | "rbr" | "rbs" => Pos::Adverb,
            "function" | "f" | "function-word" | "dt" | "in" | "to" | "cc" | "prp" | "prp$"
            | "wrb" | "wdt" | "wp" | "md" | "det" | "adp" | "pron" | "cconj" | "part" | "aux" => {
                Pos::Function
            }
            _ => return Err(Error::Query(format!("unknown part of speech {s:?}"))),
        };
        Ok(pos)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    /// Lowercased text span; multi-word for phrases.
    pub surface: String,
    /// Normalized form, space-joined for phrases; empty for pure function words.
    pub normalized: String,
    pub pos: Option<Pos>,
    pub role: Option<RoleType>,
    pub is_ncp: bool,
    /// Knowledge-base sense, filled by disambiguation.
    pub sense: Option<String>,
}

impl Concept {
    pub fn new(surface: &str, pipeline: &PipelineConfig) -> Self {
        Self {
            surface: surface.to_string(),
            normalized: pipeline.normalize_phrase(surface),
            pos: None,
            role: None,
            is_ncp: false,
            sense: None,
        }
    }

    pub fn normalized_tokens(&self) -> Vec<String> {
        self.normalized
            .split_whitespace()
            .map(str::to_string)
            .collect()
    }
}

/// Grammatical relation linking a head to its dependent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelationLabel {
    /// Adjectival modifier: head noun, dependent adjective.
    Amod,
    /// Noun compound: head noun, modifying noun.
    Nn,
    /// Verb and its direct object.
    Dobj,
    /// Link through a preposition.
    Prep(String),
    /// Any other relation; implies no roles.
    Dep(String),
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelationLabel::Amod => f.write_str("amod"),
            RelationLabel::Nn => f.write_str("nn"),
            RelationLabel::Dobj => f.write_str("dobj"),
            RelationLabel::Prep(p) => write!(f, "prep_{p}"),
            RelationLabel::Dep(l) => f.write_str(l),
        }
    }
}

impl RelationLabel {
    pub fn parse(label: &str) -> Self {
        let lower = label.to_ascii_lowercase();
        match lower.as_str() {
            "amod" => RelationLabel::Amod,
            "nn" | "compound" => RelationLabel::Nn,
            "dobj" | "obj" => RelationLabel::Dobj,
            "prep" => RelationLabel::Prep(String::new()),
            _ => {
                if let Some(p) = lower
                    .strip_prefix("prep_")
                    .or_else(|| lower.strip_prefix("nmod:"))
                {
                    RelationLabel::Prep(p.to_string())
                } else {
                    RelationLabel::Dep(lower)
                }
            }
        }
    }
}

/// Indices into the concept list of the owning query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptPair {
    pub head: usize,
    pub dependent: usize,
    pub label: RelationLabel,
}

/// Derived fact between two query concepts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axiom {
    /// `whole` is a holonym of (part of) `part`.
    Holonym { whole: usize, part: usize },
}

impl Axiom {
    fn members(&self) -> [usize; 2] {
        match *self {
            Axiom::Holonym { whole, part } => [whole, part],
        }
    }
}

/// Role-typed concepts, the relations between them and derived axioms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptualQuery {
    pub concepts: Vec<Concept>,
    pub relations: Vec<ConceptPair>,
    pub axioms: Vec<Axiom>,
}

impl ConceptualQuery {
    pub fn role(&self, i: usize) -> RoleType {
        self.concepts[i]
            .role
            .expect("roles resolved at construction")
    }

    /// Relations whose two ends are both CoI or DC concepts.
    pub fn base_pairs(&self) -> Vec<&ConceptPair> {
        self.relations
            .iter()
            .filter(|p| {
                self.role(p.head).is_significant() && self.role(p.dependent).is_significant()
            })
            .collect()
    }

    pub fn significant_concepts(&self) -> impl Iterator<Item = (usize, &Concept)> {
        self.concepts
            .iter()
            .enumerate()
            .filter(|(_, c)| c.role.is_some_and(RoleType::is_significant))
    }
}

/// Multi-word units matched leftmost-longest against the query.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NcpLexicon {
    phrases: BTreeSet<Vec<String>>,
    max_len: usize,
}

impl NcpLexicon {
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_NCP_LEXICON)
    }

    /// One lowercase phrase per line; single words and `#` lines are ignored.
    pub fn parse(text: &str) -> Self {
        let mut lex = Self::default();
        for line in text.lines() {
            let line = line.trim();
            if line.starts_with('#') {
                continue;
            }
            let phrase: Vec<String> = tokenize(line).collect();
            if phrase.len() >= 2 {
                lex.max_len = lex.max_len.max(phrase.len());
                lex.phrases.insert(phrase);
            }
        }
        lex
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, phrase: &[String]) -> bool {
        self.phrases.contains(phrase)
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }
}

/// One concept per token, in query order.
pub fn segment_concepts(query: &str, pipeline: &PipelineConfig) -> Result<Vec<Concept>> {
    let concepts: Vec<Concept> = tokenize(query)
        .map(|t| Concept::new(&t, pipeline))
        .collect();
    if concepts.is_empty() {
        return Err(Error::Query("empty query".into()));
    }
    Ok(concepts)
}

/// Merge lexicon phrases into single NCP concepts, leftmost-longest.
pub fn detect_ncp(
    concepts: Vec<Concept>,
    lexicon: &NcpLexicon,
    pipeline: &PipelineConfig,
) -> Vec<Concept> {
    if lexicon.is_empty() {
        return concepts;
    }
    let mut out = Vec::with_capacity(concepts.len());
    let mut i = 0;
    while i < concepts.len() {
        let longest = (2..=lexicon.max_len.min(concepts.len() - i))
            .rev()
            .find(|&len| {
                let words: Vec<String> = concepts[i..i + len]
                    .iter()
                    .flat_map(|c| c.surface.split_whitespace().map(str::to_string))
                    .collect();
                lexicon.contains(&words)
            });
        match longest {
            Some(len) => {
                let surface = concepts[i..i + len]
                    .iter()
                    .map(|c| c.surface.as_str())
                    .collect::<Vec<_>>()
                    .join(" ");
                let mut merged = Concept::new(&surface, pipeline);
                merged.is_ncp = true;
                out.push(merged);
                i += len;
            }
            None => {
                out.push(concepts[i].clone());
                i += 1;
            }
        }
    }
    out
}

const FUNCTION_WORDS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "some", "any", "each", "every", "no",
    "all", "both", "either", "neither", "my", "your", "his", "her", "its", "our", "their", "of",
    "in", "on", "at", "by", "for", "with", "without", "from", "to", "into", "onto", "about",
    "against", "between", "through", "during", "before", "after", "above", "below", "under",
    "over", "among", "across", "around", "toward", "towards", "upon", "within", "via", "per",
    "and", "or", "but", "nor", "so", "yet", "if", "because", "while", "although", "as", "than",
    "how", "what", "when", "where", "why", "which", "who", "whom", "whose", "i", "me", "we", "us",
    "you", "he", "him", "she", "it", "they", "them", "is", "are", "was", "were", "be", "been",
    "being", "am", "do", "does", "did", "have", "has", "had", "can", "could", "will", "would",
    "shall", "should", "may", "might", "must", "not",
];

const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "some", "any", "each", "every", "no", "my",
    "your", "his", "her", "its", "our", "their",
];

const PREPOSITIONS: &[&str] = &[
    "of", "in", "on", "at", "by", "for", "with", "without", "from", "to", "into", "onto", "about",
    "against", "between", "through", "during", "before", "after", "above", "below", "under",
    "over", "among", "across", "around", "toward", "towards", "upon", "within", "via", "per",
];

const COMMON_VERBS: &[&str] = &[
    "repair",
    "fix",
    "find",
    "make",
    "get",
    "take",
    "give",
    "use",
    "buy",
    "sell",
    "build",
    "cope",
    "prevent",
    "reduce",
    "improve",
    "cause",
    "affect",
    "treat",
    "cure",
    "avoid",
    "stop",
    "learn",
    "identify",
    "remove",
    "replace",
    "install",
    "choose",
    "compare",
    "manage",
    "deal",
    "protect",
    "control",
    "increase",
    "decrease",
    "relieve",
    "alleviate",
    "become",
    "go",
    "put",
    "seem",
    "keep",
];

/// Verbs that only connect other concepts; they become RC when they govern
/// an object.
const LIGHT_VERBS: &[&str] = &[
    "make", "get", "take", "give", "become", "go", "put", "seem", "keep", "have", "do",
];

const COMMON_ADJECTIVES: &[&str] = &[
    "new",
    "old",
    "big",
    "small",
    "large",
    "high",
    "low",
    "good",
    "bad",
    "public",
    "private",
    "foreign",
    "international",
    "national",
    "economic",
    "social",
    "political",
    "federal",
    "human",
    "free",
    "cheap",
    "early",
    "late",
    "young",
    "long",
    "short",
    "legal",
    "illegal",
    "main",
    "major",
    "minor",
    "local",
    "global",
    "recent",
    "current",
    "modern",
];

fn in_list(list: &[&str], word: &str) -> bool {
    list.contains(&word)
}

fn suffix_pos(word: &str) -> Option<Pos> {
    const ADJ: &[&str] = &["ous", "ful", "ive", "able", "ible", "less", "ish", "ical"];
    if word.len() > 4 && word.ends_with("ly") {
        return Some(Pos::Adverb);
    }
    if ADJ
        .iter()
        .any(|s| word.len() > s.len() + 2 && word.ends_with(s))
    {
        return Some(Pos::Adjective);
    }
    if word.len() > 4 && (word.ends_with("ize") || word.ends_with("ise") || word.ends_with("ify")) {
        return Some(Pos::Verb);
    }
    None
}

/// Closed-class lexicon plus suffix and position heuristics. Unknown words
/// are nouns; NCPs are nouns.
pub fn pos_tag(mut concepts: Vec<Concept>) -> Vec<Concept> {
    let words: Vec<String> = concepts.iter().map(|c| c.surface.clone()).collect();
    let function: Vec<bool> = concepts
        .iter()
        .map(|c| !c.is_ncp && (in_list(FUNCTION_WORDS, &c.surface) || c.normalized.is_empty()))
        .collect();

    // First pass: lexicon and suffixes, -ed/-ing left undecided.
    let mut tags: Vec<Option<Pos>> = concepts
        .iter()
        .zip(&function)
        .map(|(c, &f)| {
            if c.is_ncp {
                Some(Pos::Noun)
            } else if f {
                Some(Pos::Function)
            } else if in_list(COMMON_ADJECTIVES, &c.surface) {
                Some(Pos::Adjective)
            } else if c.surface.ends_with("ed") || c.surface.ends_with("ing") {
                None
            } else if let Some(p) = suffix_pos(&c.surface) {
                Some(p)
            } else if in_list(COMMON_VERBS, &c.surface) {
                None
            } else {
                Some(Pos::Noun)
            }
        })
        .collect();

    // Second pass: context for the undecided words.
    for i in 0..tags.len() {
        if tags[i].is_some() {
            continue;
        }
        let word = words[i].as_str();
        let prev = i.checked_sub(1).map(|p| words[p].as_str());
        let next_tag = tags.get(i + 1).copied().flatten();
        let next_word = words.get(i + 1).map(String::as_str);
        let after_det = prev.is_some_and(|p| in_list(DETERMINERS, p));
        let before_nominal = matches!(next_tag, Some(Pos::Noun) | Some(Pos::Adjective))
            || (next_tag.is_none() && next_word.is_some_and(|w| !w.ends_with("ing")));
        let tag = if prev == Some("to") && !after_det {
            Pos::Verb
        } else if word.ends_with("ed") {
            if before_nominal && !next_word.is_some_and(|w| in_list(FUNCTION_WORDS, w)) {
                Pos::Adjective
            } else {
                Pos::Verb
            }
        } else if word.ends_with("ing") {
            if after_det {
                Pos::Noun
            } else {
                Pos::Verb
            }
        } else if after_det || i > 0 && tags[i - 1] == Some(Pos::Adjective) {
            Pos::Noun
        } else {
            Pos::Verb
        };
        tags[i] = Some(tag);
    }

    for (c, t) in concepts.iter_mut().zip(tags) {
        c.pos = t;
    }
    concepts
}

fn pos_of(c: &Concept) -> Pos {
    c.pos.unwrap_or(Pos::Noun)
}

/// A maximal adjective/noun run ending in a noun.
struct NounPhrase {
    start: usize,
    head: usize,
}

fn noun_phrases(concepts: &[Concept]) -> Vec<NounPhrase> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < concepts.len() {
        if matches!(
            pos_of(&concepts[i]),
            Pos::Noun | Pos::Adjective | Pos::Adverb
        ) {
            let start = i;
            let mut j = i;
            while j < concepts.len()
                && matches!(
                    pos_of(&concepts[j]),
                    Pos::Noun | Pos::Adjective | Pos::Adverb
                )
            {
                j += 1;
            }
            if let Some(head) = (start..j)
                .rev()
                .find(|&k| pos_of(&concepts[k]) == Pos::Noun)
            {
                out.push(NounPhrase { start, head });
                i = head + 1;
                continue;
            }
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

/// Relation pairs from the rule table: amod and nn inside noun phrases,
/// dobj from a verb to the following phrase, prep links across a
/// preposition, and a generic `dep` link between adjacent content words
/// left unconnected.
pub fn extract_relation_pairs(concepts: &[Concept]) -> Vec<ConceptPair> {
    let nps = noun_phrases(concepts);
    let mut pairs = Vec::new();
    let mut linked = vec![false; concepts.len()];
    let link = |pairs: &mut Vec<ConceptPair>,
                linked: &mut [bool],
                head: usize,
                dependent: usize,
                label| {
        if head != dependent {
            linked[head] = true;
            linked[dependent] = true;
            pairs.push(ConceptPair {
                head,
                dependent,
                label,
            });
        }
    };

    for np in &nps {
        for k in np.start..np.head {
            match pos_of(&concepts[k]) {
                Pos::Noun => link(&mut pairs, &mut linked, np.head, k, RelationLabel::Nn),
                Pos::Adjective => link(&mut pairs, &mut linked, np.head, k, RelationLabel::Amod),
                _ => {}
            }
        }
    }

    // Governors: verbs and noun-phrase heads, linked rightwards to the next
    // noun phrase across determiners and at most one preposition.
    for (i, c) in concepts.iter().enumerate() {
        let is_verb = pos_of(c) == Pos::Verb;
        let is_np_head = nps.iter().any(|np| np.head == i);
        if !is_verb && !is_np_head {
            continue;
        }
        let mut j = i + 1;
        let mut prep: Option<&str> = None;
        while j < concepts.len() && pos_of(&concepts[j]) == Pos::Function {
            let w = concepts[j].surface.as_str();
            if in_list(PREPOSITIONS, w) {
                if prep.is_some() {
                    break;
                }
                prep = Some(w);
            } else if !in_list(DETERMINERS, w) {
                break;
            }
            j += 1;
        }
        let Some(np) = nps.iter().find(|np| np.start == j) else {
            continue;
        };
        match prep {
            Some(p) => link(
                &mut pairs,
                &mut linked,
                i,
                np.head,
                RelationLabel::Prep(p.to_string()),
            ),
            None if is_verb => link(&mut pairs, &mut linked, i, np.head, RelationLabel::Dobj),
            None => {}
        }
    }

    // Leftover adjacent content words get the generic relation.
    let content: Vec<usize> = (0..concepts.len())
        .filter(|&i| pos_of(&concepts[i]).is_content())
        .collect();
    for w in content.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b == a + 1 && (!linked[a] || !linked[b]) {
            link(
                &mut pairs,
                &mut linked,
                a,
                b,
                RelationLabel::Dep("dep".into()),
            );
        }
    }
    pairs
}

/// Candidate roles gathered per concept, before conflicts are settled.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RoleAssignments {
    pub candidates: Vec<BTreeSet<RoleType>>,
    /// Roles fixed up front (pre-parsed input); they bypass resolution.
    pub fixed: Vec<Option<RoleType>>,
}

impl RoleAssignments {
    pub fn unassigned(&self) -> Vec<usize> {
        (0..self.candidates.len())
            .filter(|&i| self.fixed[i].is_none() && self.candidates[i].is_empty())
            .collect()
    }
}

fn is_light_verb(c: &Concept) -> bool {
    in_list(LIGHT_VERBS, &c.surface)
}

/// Apply the relation→role rule table. Concepts only reached through
/// generic relations stay unassigned.
pub fn assign_roles(pairs: &[ConceptPair], concepts: &[Concept]) -> RoleAssignments {
    let n = concepts.len();
    let mut candidates = vec![BTreeSet::new(); n];
    let mut in_pair = vec![false; n];
    for p in pairs {
        in_pair[p.head] = true;
        in_pair[p.dependent] = true;
        let verb_role = |i: usize| {
            if pos_of(&concepts[i]) == Pos::Verb && is_light_verb(&concepts[i]) {
                RoleType::RC
            } else {
                RoleType::CoI
            }
        };
        match &p.label {
            RelationLabel::Amod | RelationLabel::Nn => {
                candidates[p.head].insert(RoleType::CoI);
                candidates[p.dependent].insert(RoleType::DC);
            }
            RelationLabel::Dobj | RelationLabel::Prep(_) => {
                candidates[p.head].insert(verb_role(p.head));
                candidates[p.dependent].insert(verb_role(p.dependent));
            }
            RelationLabel::Dep(_) => {}
        }
    }
    for (i, c) in concepts.iter().enumerate() {
        match pos_of(c) {
            Pos::Function => {
                candidates[i].insert(RoleType::SC);
            }
            Pos::Noun | Pos::Verb if !in_pair[i] => {
                candidates[i].insert(RoleType::CoI);
            }
            Pos::Adjective | Pos::Adverb if !in_pair[i] => {
                candidates[i].insert(RoleType::DC);
            }
            _ => {}
        }
    }
    let fixed = concepts.iter().map(|c| c.role).collect();
    RoleAssignments { candidates, fixed }
}

/// Settle concepts left without a role: inherit a role assigned elsewhere,
/// otherwise compare collection frequencies within the generic pair (more
/// frequent → CoI, other → DC, equal → both CoI).
pub fn resolve_unassigned(
    mut assignments: RoleAssignments,
    pairs: &[ConceptPair],
    concepts: &[Concept],
    stats: Option<&dyn TermStats>,
) -> Result<RoleAssignments> {
    let before = assignments.clone();
    let has_role =
        |a: &RoleAssignments, i: usize| a.fixed[i].is_some() || !a.candidates[i].is_empty();

    for p in pairs {
        let (a, b) = (p.head, p.dependent);
        let missing: Vec<usize> = [a, b]
            .into_iter()
            .filter(|&i| !has_role(&before, i))
            .collect();
        if missing.is_empty() {
            continue;
        }
        let stats = stats.ok_or_else(|| {
            Error::Query("collection statistics required to resolve unassigned roles".into())
        })?;
        let freq = |i: usize| stats.collection_frequency(&concepts[i].normalized);
        let (fa, fb) = (freq(a), freq(b));
        for i in missing {
            let other_freq = if i == a { fb } else { fa };
            let mine = if i == a { fa } else { fb };
            let role = if mine >= other_freq {
                RoleType::CoI
            } else {
                RoleType::DC
            };
            assignments.candidates[i].insert(role);
        }
    }
    // Concepts in no pair at all.
    for i in assignments.unassigned() {
        let role = match pos_of(&concepts[i]) {
            Pos::Noun | Pos::Verb => RoleType::CoI,
            Pos::Function => RoleType::SC,
            _ => RoleType::DC,
        };
        assignments.candidates[i].insert(role);
    }
    Ok(assignments)
}

/// Highest-priority role, CoI > DC > RC > SC.
pub fn resolve_multiple(candidates: &BTreeSet<RoleType>) -> Option<RoleType> {
    candidates.iter().next().copied()
}

/// Write one resolved role into each concept.
pub fn apply_roles(mut concepts: Vec<Concept>, assignments: &RoleAssignments) -> Vec<Concept> {
    for (i, c) in concepts.iter_mut().enumerate() {
        c.role = assignments.fixed[i].or_else(|| resolve_multiple(&assignments.candidates[i]));
        if c.pos == Some(Pos::Function) {
            c.role = Some(RoleType::SC);
        }
    }
    concepts
}

pub fn build_conceptual_query(
    concepts: Vec<Concept>,
    pairs: Vec<ConceptPair>,
    axioms: Vec<Axiom>,
) -> Result<ConceptualQuery> {
    if let Some(c) = concepts.iter().find(|c| c.role.is_none()) {
        return Err(Error::Query(format!("concept {:?} has no role", c.surface)));
    }
    let n = concepts.len();
    for p in &pairs {
        if p.head >= n || p.dependent >= n || p.head == p.dependent {
            return Err(Error::Query(format!(
                "relation {} -> {} is not between two distinct query concepts",
                p.head, p.dependent
            )));
        }
    }
    if axioms.iter().any(|a| a.members().iter().any(|&m| m >= n)) {
        return Err(Error::Query(
            "axiom references a concept outside the query".into(),
        ));
    }
    Ok(ConceptualQuery {
        concepts,
        relations: pairs,
        axioms,
    })
}

/// The rule-based front-end end to end, without axioms.
#[derive(Debug, Clone, Default)]
pub struct QueryAnalyzer {
    pub pipeline: PipelineConfig,
    pub ncp: NcpLexicon,
}

impl QueryAnalyzer {
    pub fn new(pipeline: PipelineConfig, ncp: NcpLexicon) -> Self {
        Self { pipeline, ncp }
    }

    pub fn analyze(&self, query: &str, stats: Option<&dyn TermStats>) -> Result<ConceptualQuery> {
        let concepts = segment_concepts(query, &self.pipeline)?;
        let concepts = detect_ncp(concepts, &self.ncp, &self.pipeline);
        let concepts = pos_tag(concepts);
        let pairs = extract_relation_pairs(&concepts);
        finish(concepts, pairs, stats)
    }
}

fn finish(
    concepts: Vec<Concept>,
    pairs: Vec<ConceptPair>,
    stats: Option<&dyn TermStats>,
) -> Result<ConceptualQuery> {
    let assignments = assign_roles(&pairs, &concepts);
    let assignments = resolve_unassigned(assignments, &pairs, &concepts, stats)?;
    let concepts = apply_roles(concepts, &assignments);
    build_conceptual_query(concepts, pairs, Vec::new())
}

/// A query whose tags (and optionally roles and pairs) come from an
/// external parser.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreparsedQuery {
    pub concepts: Vec<Concept>,
    pub pairs: Vec<ConceptPair>,
}

impl PreparsedQuery {
    pub fn analyze(self, stats: Option<&dyn TermStats>) -> Result<ConceptualQuery> {
        finish(self.concepts, self.pairs, stats)
    }
}

/// Blank-line separated blocks of `token<TAB>POS<TAB>role-or-_` lines and
/// `#pair<TAB>head_idx<TAB>dep_idx<TAB>label` lines (0-based indices).
pub fn parse_preparsed(
    text: &str,
    source: &str,
    pipeline: &PipelineConfig,
) -> Result<Vec<PreparsedQuery>> {
    let mut out = Vec::new();
    let mut current = PreparsedQuery {
        concepts: Vec::new(),
        pairs: Vec::new(),
    };
    let mut pending_pairs: Vec<(usize, usize, usize, String)> = Vec::new();

    let flush = |current: &mut PreparsedQuery,
                 pending: &mut Vec<(usize, usize, usize, String)>,
                 out: &mut Vec<PreparsedQuery>|
     -> Result<()> {
        for (line, head, dep, label) in pending.drain(..) {
            if head >= current.concepts.len() || dep >= current.concepts.len() || head == dep {
                return Err(Error::parse(source, line, "pair index out of range"));
            }
            current.pairs.push(ConceptPair {
                head,
                dependent: dep,
                label: RelationLabel::parse(&label),
            });
        }
        if !current.concepts.is_empty() {
            out.push(std::mem::replace(
                current,
                PreparsedQuery {
                    concepts: Vec::new(),
                    pairs: Vec::new(),
                },
            ));
        }
        Ok(())
    };

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            flush(&mut current, &mut pending_pairs, &mut out)?;
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields[0] == "#pair" {
            if fields.len() != 4 {
                return Err(Error::parse(
                    source,
                    lineno,
                    "expected #pair<TAB>head<TAB>dep<TAB>label",
                ));
            }
            let idx = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::parse(source, lineno, "pair index is not an integer"))
            };
            pending_pairs.push((
                lineno,
                idx(fields[1])?,
                idx(fields[2])?,
                fields[3].trim().to_string(),
            ));
            continue;
        }
        if fields.len() != 3 {
            return Err(Error::parse(
                source,
                lineno,
                "expected token<TAB>POS<TAB>role",
            ));
        }
        let surface = tokenize(fields[0]).collect::<Vec<_>>().join(" ");
        if surface.is_empty() {
            return Err(Error::parse(source, lineno, "empty token"));
        }
        let mut concept = Concept::new(&surface, pipeline);
        concept.is_ncp = surface.contains(' ');
        concept.pos = Some(
            fields[1]
                .trim()
                .parse()
                .map_err(|e: Error| Error::parse(source, lineno, e.to_string()))?,
        );
        let role = fields[2].trim();
        if role != "_" {
            concept.role = Some(
                role.parse()
                    .map_err(|e: Error| Error::parse(source, lineno, e.to_string()))?,
            );
        }
        current.concepts.push(concept);
    }
    flush(&mut current, &mut pending_pairs, &mut out)?;
    Ok(out)
}
