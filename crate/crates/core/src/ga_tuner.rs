//! Genetic search over role weights, maximizing MAP on a training set.
//!
//! Document evidence (likelihood plus per-role match counts) does not depend
//! on the weights, so it is computed once per topic and every fitness call
//! only re-ranks.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::corpus_index::CollectionIndex;
use crate::error::{Error, Result};
use crate::eval::Qrels;
use crate::linguistics::RoleType;
use crate::retrieval::{collect_evidence, DocEvidence, QueryBag, RoleWeights, SmoothingConfig};
use crate::scalar::Scalar;

/// Evolving genes, in this order. The SC weight is fixed at zero.
pub const EVOLVING_ROLES: [RoleType; 4] = [RoleType::CoI, RoleType::DC, RoleType::RC, RoleType::EC];

#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome<T> {
    pub genes: [T; 4],
    pub fitness: Option<T>,
}

impl<T: Scalar> Chromosome<T> {
    pub fn new(genes: [T; 4]) -> Self {
        let genes = genes.map(|g| g.max(T::zero()).min(T::one()));
        Self {
            genes,
            fitness: None,
        }
    }

    pub fn weights(&self) -> RoleWeights<T> {
        let [coi, dc, rc, ec] = self.genes;
        RoleWeights::new(coi, dc, rc, ec).expect("genes stay in [0,1]")
    }

    /// All five role weights in [`RoleType::ALL`] order.
    pub fn all_genes(&self) -> [T; 5] {
        self.weights().as_array()
    }
}

/// How often an operator fires each generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorRate {
    /// A fixed number of events spread over the offspring.
    Events(usize),
    /// Crossover: chance per offspring pair. Mutation: chance per gene.
    Probability(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GAConfig {
    pub population_size: usize,
    pub max_iterations: usize,
    pub crossover: OperatorRate,
    pub mutation: OperatorRate,
    pub mutation_sigma: f64,
    pub rng_seed: u64,
    pub elitism_count: usize,
    /// Fitness above this threshold gets its selection weight multiplied.
    pub boost_threshold: f64,
    pub boost_factor: f64,
    /// Stop after this many generations without a new best.
    pub early_stop: Option<usize>,
}

impl Default for GAConfig {
    fn default() -> Self {
        Self {
            population_size: 200,
            max_iterations: 100,
            crossover: OperatorRate::Events(1000),
            mutation: OperatorRate::Events(10),
            mutation_sigma: 0.1,
            rng_seed: 42,
            elitism_count: 1,
            boost_threshold: 0.5,
            boost_factor: 1.5,
            early_stop: None,
        }
    }
}

impl GAConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.population_size < 2 {
            return bad(format!(
                "population_size must be at least 2, got {}",
                self.population_size
            ));
        }
        if self.elitism_count == 0 || self.elitism_count >= self.population_size {
            return bad(format!(
                "elitism_count must be in 1..population_size, got {}",
                self.elitism_count
            ));
        }
        for (name, rate) in [("crossover", self.crossover), ("mutation", self.mutation)] {
            if let OperatorRate::Probability(p) = rate {
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("{name} rate {p} outside [0,1]"));
                }
            }
        }
        if !(self.mutation_sigma >= 0.0) || !(self.boost_factor >= 1.0) {
            return bad("mutation_sigma must be >= 0 and boost_factor >= 1".into());
        }
        Ok(())
    }
}

pub fn init_population<T: Scalar>(
    cfg: &GAConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Chromosome<T>>> {
    cfg.validate()?;
    Ok((0..cfg.population_size)
        .map(|_| Chromosome::new([(); 4].map(|_| T::of(rng.gen_range(0.0..=1.0)))))
        .collect())
}

struct TopicEvidence<T> {
    evidence: Vec<DocEvidence<T>>,
    q_size: usize,
    relevant: BTreeSet<usize>,
    n_relevant: usize,
}

/// Precomputed training data for fitness evaluation.
pub struct EvalContext<T> {
    topics: Vec<(String, TopicEvidence<T>)>,
    depth: usize,
}

impl<T: Scalar> EvalContext<T> {
    /// Topics without relevant documents are left out.
    pub fn build(
        queries: &[(String, QueryBag)],
        qrels: &Qrels,
        index: &CollectionIndex,
        smoothing: &SmoothingConfig<T>,
        depth: usize,
    ) -> Result<Self> {
        let mut topics = Vec::new();
        for (id, bag) in queries {
            let relevant_ids = qrels.relevant(id);
            if relevant_ids.is_empty() {
                continue;
            }
            let relevant = relevant_ids
                .iter()
                .filter_map(|d| index.doc_index(d))
                .collect();
            topics.push((
                id.clone(),
                TopicEvidence {
                    evidence: collect_evidence(bag, index, smoothing)?,
                    q_size: bag.size(),
                    relevant,
                    n_relevant: relevant_ids.len(),
                },
            ));
        }
        if topics.is_empty() {
            return Err(Error::Eval(
                "no training topic has relevant documents".into(),
            ));
        }
        Ok(Self { topics, depth })
    }

    pub fn topic_ids(&self) -> impl Iterator<Item = &str> {
        self.topics.iter().map(|(id, _)| id.as_str())
    }

    /// A context holding a single topic.
    pub fn only(&self, topic: &str) -> Option<EvalContext<T>> {
        let (id, t) = self.topics.iter().find(|(id, _)| id == topic)?;
        Some(EvalContext {
            topics: vec![(
                id.clone(),
                TopicEvidence {
                    evidence: t.evidence.clone(),
                    q_size: t.q_size,
                    relevant: t.relevant.clone(),
                    n_relevant: t.n_relevant,
                },
            )],
            depth: self.depth,
        })
    }

    fn topic_ap(&self, t: &TopicEvidence<T>, weights: &RoleWeights<T>) -> T {
        // documents are stored in doc_id order, so index order breaks ties
        let mut ranked: Vec<(T, usize)> = t
            .evidence
            .iter()
            .filter_map(|ev| {
                let imp = ev.imp(weights, t.q_size);
                (imp > T::zero()).then(|| (ev.sat + imp.ln(), ev.doc))
            })
            .collect();
        ranked.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        });
        ranked.truncate(self.depth);
        let mut hits = 0usize;
        let mut sum = T::zero();
        for (rank, (_, doc)) in ranked.iter().enumerate() {
            if t.relevant.contains(doc) {
                hits += 1;
                sum = sum + T::of_count(hits) / T::of_count(rank + 1);
            }
        }
        sum / T::of_count(t.n_relevant)
    }

    /// MAP over the context's topics.
    pub fn fitness(&self, weights: &RoleWeights<T>) -> T {
        let total: T = self
            .topics
            .iter()
            .map(|(_, t)| self.topic_ap(t, weights))
            .sum();
        total / T::of_count(self.topics.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStats<T> {
    pub generation: usize,
    pub best_map: T,
    pub mean_map: T,
    pub best_genes: [T; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaOutcome<T> {
    pub best: Chromosome<T>,
    pub history: Vec<GenerationStats<T>>,
}

impl<T: Scalar> GaOutcome<T> {
    pub fn best_weights(&self) -> RoleWeights<T> {
        self.best.weights()
    }

    pub fn best_map(&self) -> T {
        self.best.fitness.unwrap_or_else(T::zero)
    }

    /// `gen<TAB>best_map<TAB>mean_map<TAB>` then the four evolving genes.
    pub fn report(&self) -> String {
        let mut out = String::new();
        for h in &self.history {
            let _ = write!(
                out,
                "{}\t{:.6}\t{:.6}",
                h.generation,
                h.best_map.as_f64(),
                h.mean_map.as_f64()
            );
            for g in h.best_genes {
                let _ = write!(out, "\t{:.6}", g.as_f64());
            }
            out.push('\n');
        }
        out
    }
}

fn evaluate<T: Scalar>(pop: &mut [Chromosome<T>], ctx: &EvalContext<T>) {
    let scores: Vec<Option<T>> = pop
        .par_iter()
        .map(|c| c.fitness.or_else(|| Some(ctx.fitness(&c.weights()))))
        .collect();
    for (c, f) in pop.iter_mut().zip(scores) {
        c.fitness = f;
    }
}

fn fitness_of<T: Scalar>(c: &Chromosome<T>) -> f64 {
    c.fitness.map_or(0.0, Scalar::as_f64)
}

/// Binary tournament where each contestant wins with probability
/// proportional to its boosted fitness.
fn tournament<'a, T: Scalar>(
    pop: &'a [Chromosome<T>],
    cfg: &GAConfig,
    rng: &mut ChaCha8Rng,
) -> &'a Chromosome<T> {
    let a = &pop[rng.gen_range(0..pop.len())];
    let b = &pop[rng.gen_range(0..pop.len())];
    let boosted = |c: &Chromosome<T>| {
        let f = fitness_of(c);
        if f > cfg.boost_threshold {
            f * cfg.boost_factor
        } else {
            f
        }
    };
    let (wa, wb) = (boosted(a), boosted(b));
    let p_a = if wa + wb > 0.0 { wa / (wa + wb) } else { 0.5 };
    if rng.gen_bool(p_a.clamp(0.0, 1.0)) {
        a
    } else {
        b
    }
}

fn crossover<T: Scalar>(x: &mut Chromosome<T>, y: &mut Chromosome<T>, rng: &mut ChaCha8Rng) {
    let point = rng.gen_range(1..4);
    for i in point..4 {
        std::mem::swap(&mut x.genes[i], &mut y.genes[i]);
    }
    x.fitness = None;
    y.fitness = None;
}

fn mutate_gene<T: Scalar>(
    c: &mut Chromosome<T>,
    gene: usize,
    noise: &Normal<f64>,
    rng: &mut ChaCha8Rng,
) {
    let v = c.genes[gene].as_f64() + noise.sample(rng);
    c.genes[gene] = T::of(v.clamp(0.0, 1.0));
    c.fitness = None;
}

fn best_of<T: Scalar>(pop: &[Chromosome<T>]) -> &Chromosome<T> {
    // first maximum, so ties resolve by population order
    pop.iter()
        .reduce(|best, c| {
            if fitness_of(c) > fitness_of(best) {
                c
            } else {
                best
            }
        })
        .expect("non-empty population")
}

fn stats<T: Scalar>(generation: usize, pop: &[Chromosome<T>]) -> GenerationStats<T> {
    let best = best_of(pop);
    let mean = pop.iter().map(fitness_of).sum::<f64>() / pop.len() as f64;
    GenerationStats {
        generation,
        best_map: best.fitness.unwrap_or_else(T::zero),
        mean_map: T::of(mean),
        best_genes: best.genes,
    }
}

fn breed<T: Scalar>(
    pop: &[Chromosome<T>],
    cfg: &GAConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Chromosome<T>> {
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&a, &b| {
        fitness_of(&pop[b])
            .total_cmp(&fitness_of(&pop[a]))
            .then(a.cmp(&b))
    });
    let mut next: Vec<Chromosome<T>> = order[..cfg.elitism_count]
        .iter()
        .map(|&i| pop[i].clone())
        .collect();
    let mut offspring: Vec<Chromosome<T>> = (0..pop.len() - cfg.elitism_count)
        .map(|_| tournament(pop, cfg, rng).clone())
        .collect();
    let n = offspring.len();

    match cfg.crossover {
        OperatorRate::Events(events) if n >= 2 => {
            for _ in 0..events {
                let i = rng.gen_range(0..n);
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                let (lo, hi) = (i.min(j), i.max(j));
                let (left, right) = offspring.split_at_mut(hi);
                crossover(&mut left[lo], &mut right[0], rng);
            }
        }
        OperatorRate::Probability(p) => {
            for pair in offspring.chunks_mut(2) {
                if let [x, y] = pair {
                    if rng.gen_bool(p) {
                        crossover(x, y, rng);
                    }
                }
            }
        }
        OperatorRate::Events(_) => {}
    }

    let noise = Normal::new(0.0, cfg.mutation_sigma).expect("validated sigma");
    match cfg.mutation {
        OperatorRate::Events(events) if n > 0 => {
            for _ in 0..events {
                let i = rng.gen_range(0..n);
                let gene = rng.gen_range(0..4);
                mutate_gene(&mut offspring[i], gene, &noise, rng);
            }
        }
        OperatorRate::Probability(p) => {
            for c in &mut offspring {
                for gene in 0..4 {
                    if rng.gen_bool(p) {
                        mutate_gene(c, gene, &noise, rng);
                    }
                }
            }
        }
        OperatorRate::Events(_) => {}
    }
    next.extend(offspring);
    next
}

/// Run the GA from a seeded random population.
pub fn evolve<T: Scalar>(cfg: &GAConfig, ctx: &EvalContext<T>) -> Result<GaOutcome<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let pop = init_population(cfg, &mut rng)?;
    evolve_from(cfg, ctx, pop, &mut rng)
}

/// Run the GA from a given population.
pub fn evolve_from<T: Scalar>(
    cfg: &GAConfig,
    ctx: &EvalContext<T>,
    mut pop: Vec<Chromosome<T>>,
    rng: &mut ChaCha8Rng,
) -> Result<GaOutcome<T>> {
    cfg.validate()?;
    if pop.len() != cfg.population_size {
        return Err(Error::Config(format!(
            "population has {} members, expected {}",
            pop.len(),
            cfg.population_size
        )));
    }
    evaluate(&mut pop, ctx);
    let mut best = best_of(&pop).clone();
    let mut history = vec![stats(0, &pop)];
    let mut stagnant = 0usize;
    for generation in 1..=cfg.max_iterations {
        pop = breed(&pop, cfg, rng);
        evaluate(&mut pop, ctx);
        let gen_best = best_of(&pop);
        if fitness_of(gen_best) > fitness_of(&best) {
            best = gen_best.clone();
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        history.push(stats(generation, &pop));
        log::debug!("generation {generation}: best {:.6}", fitness_of(&best));
        if cfg.early_stop.is_some_and(|limit| stagnant >= limit) {
            break;
        }
    }
    Ok(GaOutcome { best, history })
}

/// One GA run per topic, each seeded from the configured seed plus the
/// topic's position.
pub fn evolve_per_topic<T: Scalar>(
    cfg: &GAConfig,
    ctx: &EvalContext<T>,
) -> Result<Vec<(String, GaOutcome<T>)>> {
    ctx.topic_ids()
        .enumerate()
        .map(|(i, id)| {
            let single = ctx.only(id).expect("listed topic");
            let topic_cfg = GAConfig {
                rng_seed: cfg.rng_seed.wrapping_add(i as u64),
                ..cfg.clone()
            };
            Ok((id.to_string(), evolve(&topic_cfg, &single)?))
        })
        .collect()
}
