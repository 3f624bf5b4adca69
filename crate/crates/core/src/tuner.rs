//! Genetic search over scorer parameters.
//!
//! The chromosome is real-coded: one KDE bandwidth per class, then (in
//! posterior mode) one histogram bin count per class kept on integer
//! values, then the smoothing constant. Fitness is the evaluation cost
//! `(1 - f1_macro) + fpr_macro` of a scorer fitted on the training split
//! and applied to the validation split; the search minimizes it.
//!
//! The whole run is deterministic for a given seed: a single ChaCha8
//! stream drives initialization, selection, crossover, and mutation in a
//! fixed order, so identical inputs reproduce identical histories.

use std::collections::HashMap;
use std::rc::Rc;

use rand::distr::Distribution;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::density::{KdeModel, NhModel};
use crate::error::{Error, Result};
use crate::inference::{argmax_class, smoothed_normalize, BayesScorer, LogitSample, Mode, Rule};
use crate::metrics::evaluate;
use crate::scalar::Real;

/// Parameters of a fitted scorer, as searched by the tuner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams<T> {
    /// One KDE bandwidth per class.
    pub bandwidths: Vec<T>,
    /// One histogram bin count per class; empty in likelihood-only mode.
    pub nbins: Vec<usize>,
    /// Additive smoothing constant.
    pub lambda: T,
}

/// Inclusive per-gene search ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds {
    pub bandwidth: (f64, f64),
    pub nbins: (usize, usize),
    pub lambda: (f64, f64),
}

impl Default for SearchBounds {
    fn default() -> Self {
        SearchBounds {
            bandwidth: (0.01, 5.0),
            nbins: (2, 64),
            lambda: (1e-9, 1e-5),
        }
    }
}

/// Knobs of the genetic search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    /// Individuals per generation.
    pub population: usize,
    /// Fraction of non-elite children produced by crossover; the rest are
    /// mutation children.
    pub crossover_fraction: f64,
    /// Generation cap. `None` resolves to `100 * nvars`, where `nvars` is
    /// the chromosome length.
    pub max_generations: Option<usize>,
    /// Best individuals copied unchanged into the next generation.
    pub elite_count: usize,
    /// Individuals drawn per tournament when selecting a parent.
    pub tournament_size: usize,
    /// Mutation standard deviation as a fraction of each gene's range.
    pub mutation_scale: f64,
    /// Stop after this many consecutive generations without improvement.
    /// `None` disables stalling; the search always runs to the cap.
    pub stall_generations: Option<usize>,
    /// RNG seed; fixes the entire run.
    pub seed: u64,
    pub bounds: SearchBounds,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 200,
            crossover_fraction: 0.8,
            max_generations: None,
            elite_count: 2,
            tournament_size: 2,
            mutation_scale: 0.1,
            stall_generations: None,
            seed: 0,
            bounds: SearchBounds::default(),
        }
    }
}

impl GaConfig {
    fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::parameter("population must hold at least 2 individuals"));
        }
        if self.elite_count >= self.population {
            return Err(Error::parameter(format!(
                "elite count {} must be below the population size {}",
                self.elite_count, self.population
            )));
        }
        if self.tournament_size == 0 || self.tournament_size > self.population {
            return Err(Error::parameter("tournament size must be in 1..=population"));
        }
        if !(0.0..=1.0).contains(&self.crossover_fraction) {
            return Err(Error::parameter("crossover fraction must lie in [0, 1]"));
        }
        if !self.mutation_scale.is_finite() || self.mutation_scale <= 0.0 {
            return Err(Error::parameter("mutation scale must be positive"));
        }
        let b = &self.bounds;
        let ordered = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !ordered(b.bandwidth.0, b.bandwidth.1) || b.bandwidth.0 <= 0.0 {
            return Err(Error::parameter("bandwidth bounds must be positive and ordered"));
        }
        if !ordered(b.lambda.0, b.lambda.1) || b.lambda.0 <= 0.0 {
            return Err(Error::parameter("smoothing bounds must be positive and ordered"));
        }
        if b.nbins.0 < 1 || b.nbins.0 > b.nbins.1 {
            return Err(Error::parameter(
                "bin-count bounds must be ordered and at least 1",
            ));
        }
        Ok(())
    }
}

/// Summary of one generation, recorded after its population is scored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStat<T> {
    /// 0 is the random initial population.
    pub generation: usize,
    /// Best cost in the population — never worse than the previous
    /// generation's, since elites survive unchanged.
    pub best_cost: T,
    pub mean_cost: T,
}

/// Outcome of a search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult<T> {
    pub best: HyperParams<T>,
    pub best_cost: T,
    /// One entry per scored generation, including the initial one.
    pub history: Vec<GenerationStat<T>>,
    /// Fitness evaluations charged, elites excluded. Duplicate
    /// chromosomes are answered from a cache but still counted here.
    pub evaluations: usize,
}

/// Progress callbacks from [`tune_with`].
#[derive(Debug)]
pub enum TuneEvent<'a, T> {
    /// An individual's parameters and cost. Emitted for every population
    /// member of every generation, elites included.
    Evaluated {
        generation: usize,
        params: &'a HyperParams<T>,
        cost: T,
    },
    /// A generation finished scoring.
    GenerationDone {
        generation: usize,
        best_cost: T,
        mean_cost: T,
    },
}

/// Cost of one parameter set: fit on `train`, score `val`, evaluate.
///
/// This is the quantity the genetic search minimizes. Training samples
/// are grouped by their ground-truth labels; validation samples need
/// labels too.
pub fn fitness<T: Real>(
    params: &HyperParams<T>,
    train: &[LogitSample<T>],
    val: &[LogitSample<T>],
    mode: Mode,
) -> Result<T> {
    let scorer = BayesScorer::fit(train, &params.bandwidths, &params.nbins, params.lambda, mode)?;
    let rule = match mode {
        Mode::Ml => Rule::Ml,
        Mode::Map => Rule::Map,
    };
    let mut labels = Vec::with_capacity(val.len());
    let mut preds = Vec::with_capacity(val.len());
    for sample in val {
        let label = sample.label.ok_or_else(|| {
            Error::data(format!("validation sample {:?} has no label", sample.id))
        })?;
        let (class, _) = scorer.predict(&sample.logits, rule)?;
        labels.push(label);
        preds.push(class);
    }
    Ok(evaluate::<T>(&labels, &preds, scorer.num_classes())?.cost)
}

/// Run the search with default (no-op) progress reporting.
pub fn tune<T: Real>(
    train: &[LogitSample<T>],
    val: &[LogitSample<T>],
    mode: Mode,
    config: &GaConfig,
) -> Result<TuneResult<T>> {
    tune_with(train, val, mode, config, |_| {})
}

/// Run the search, reporting progress through `observer`.
pub fn tune_with<T, F>(
    train: &[LogitSample<T>],
    val: &[LogitSample<T>],
    mode: Mode,
    config: &GaConfig,
    mut observer: F,
) -> Result<TuneResult<T>>
where
    T: Real,
    F: FnMut(TuneEvent<'_, T>),
{
    config.validate()?;
    let mut ctx = EvalContext::new(train, val)?;
    let nc = ctx.nc;
    let genes = gene_layout(nc, mode, &config.bounds);
    let max_generations = config.max_generations.unwrap_or(100 * genes.len());

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut population: Vec<Vec<f64>> = (0..config.population)
        .map(|_| genes.iter().map(|g| g.sample_uniform(&mut rng)).collect())
        .collect();
    let mut costs: Vec<T> = Vec::with_capacity(config.population);
    let mut evaluations = 0usize;
    for genome in &population {
        costs.push(ctx.cost(genome, mode));
        evaluations += 1;
    }

    let mut history = Vec::with_capacity(max_generations + 1);
    let report = |generation: usize,
                      population: &[Vec<f64>],
                      costs: &[T],
                      history: &mut Vec<GenerationStat<T>>,
                      observer: &mut F| {
        for (genome, &cost) in population.iter().zip(costs) {
            let params = decode::<T>(genome, nc, mode);
            observer(TuneEvent::Evaluated {
                generation,
                params: &params,
                cost,
            });
        }
        let best_cost = costs.iter().copied().fold(T::infinity(), T::min);
        let mean_cost =
            costs.iter().copied().sum::<T>() / T::from_usize(costs.len()).expect("fits scalar");
        history.push(GenerationStat {
            generation,
            best_cost,
            mean_cost,
        });
        observer(TuneEvent::GenerationDone {
            generation,
            best_cost,
            mean_cost,
        });
    };
    report(0, &population, &costs, &mut history, &mut observer);

    let elite = config.elite_count;
    let n_children = config.population - elite;
    let n_crossover = (config.crossover_fraction * n_children as f64).round() as usize;
    let mut stall = 0usize;

    for generation in 1..=max_generations {
        let previous_best = history.last().expect("gen 0 recorded").best_cost;

        // Rank the current population; ties keep the earlier index.
        let mut order: Vec<usize> = (0..config.population).collect();
        order.sort_by(|&a, &b| costs[a].partial_cmp(&costs[b]).expect("finite costs"));

        let mut next_pop: Vec<Vec<f64>> = Vec::with_capacity(config.population);
        let mut next_costs: Vec<T> = Vec::with_capacity(config.population);

        // Elites survive with their known costs; they are not re-evaluated.
        for &idx in order.iter().take(elite) {
            next_pop.push(population[idx].clone());
            next_costs.push(costs[idx]);
        }

        let tournament = |rng: &mut ChaCha8Rng| -> usize {
            let mut best = rng.random_range(0..config.population);
            for _ in 1..config.tournament_size {
                let rival = rng.random_range(0..config.population);
                if costs[rival] < costs[best] {
                    best = rival;
                }
            }
            best
        };

        for child_idx in 0..n_children {
            let genome = if child_idx < n_crossover {
                // Scattered crossover: each gene from either parent.
                let a = tournament(&mut rng);
                let b = tournament(&mut rng);
                (0..genes.len())
                    .map(|g| {
                        if rng.random::<bool>() {
                            population[a][g]
                        } else {
                            population[b][g]
                        }
                    })
                    .collect()
            } else {
                // Gaussian mutation of every gene of a selected parent.
                let parent = tournament(&mut rng);
                genes
                    .iter()
                    .enumerate()
                    .map(|(g, gene)| gene.mutate(population[parent][g], config.mutation_scale, &mut rng))
                    .collect::<Vec<f64>>()
            };
            let cost = ctx.cost(&genome, mode);
            evaluations += 1;
            next_pop.push(genome);
            next_costs.push(cost);
        }

        population = next_pop;
        costs = next_costs;
        report(generation, &population, &costs, &mut history, &mut observer);

        if let Some(limit) = config.stall_generations {
            let best_now = history.last().expect("just pushed").best_cost;
            if best_now < previous_best {
                stall = 0;
            } else {
                stall += 1;
                if stall >= limit {
                    break;
                }
            }
        }
    }

    let mut best_idx = 0;
    for i in 1..costs.len() {
        if costs[i] < costs[best_idx] {
            best_idx = i;
        }
    }
    Ok(TuneResult {
        best: decode::<T>(&population[best_idx], nc, mode),
        best_cost: costs[best_idx],
        history,
        evaluations,
    })
}

/// One gene's range and integrality.
#[derive(Debug, Clone, Copy)]
struct Gene {
    lo: f64,
    hi: f64,
    integral: bool,
}

impl Gene {
    fn sample_uniform(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.integral {
            rng.random_range(self.lo as usize..=self.hi as usize) as f64
        } else if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..self.hi)
        }
    }

    fn mutate(&self, value: f64, scale: f64, rng: &mut ChaCha8Rng) -> f64 {
        let sigma = scale * (self.hi - self.lo);
        let proposed = if sigma > 0.0 {
            let noise = Normal::new(0.0, sigma).expect("positive sigma").sample(rng);
            value + noise
        } else {
            value
        };
        let proposed = if self.integral { proposed.round() } else { proposed };
        proposed.clamp(self.lo, self.hi)
    }
}

fn gene_layout(nc: usize, mode: Mode, bounds: &SearchBounds) -> Vec<Gene> {
    let mut genes = Vec::new();
    for _ in 0..nc {
        genes.push(Gene {
            lo: bounds.bandwidth.0,
            hi: bounds.bandwidth.1,
            integral: false,
        });
    }
    if mode == Mode::Map {
        for _ in 0..nc {
            genes.push(Gene {
                lo: bounds.nbins.0 as f64,
                hi: bounds.nbins.1 as f64,
                integral: true,
            });
        }
    }
    genes.push(Gene {
        lo: bounds.lambda.0,
        hi: bounds.lambda.1,
        integral: false,
    });
    genes
}

fn decode<T: Real>(genome: &[f64], nc: usize, mode: Mode) -> HyperParams<T> {
    let bandwidths = genome[..nc].iter().map(|&g| T::cast(g)).collect();
    let (nbins, lambda) = match mode {
        Mode::Ml => (Vec::new(), genome[nc]),
        Mode::Map => (
            genome[nc..2 * nc]
                .iter()
                .map(|&g| g as usize)
                .collect(),
            genome[2 * nc],
        ),
    };
    HyperParams {
        bandwidths,
        nbins,
        lambda: T::cast(lambda),
    }
}

/// Shared state for scoring chromosomes.
///
/// Fitness depends on the chromosome only through per-class CDF columns:
/// class `c`'s likelihood column is its KDE's CDF at every validation
/// sample's `c`-th logit, which depends only on `(c, bandwidth)`. Columns
/// are therefore cached by gene value — crossover children reuse their
/// parents' genes, so most of a generation's column work is answered from
/// the cache. Whole chromosomes are cached too. Every cache hit returns
/// bit-identical numbers to a fresh [`fitness`] call.
struct EvalContext<T> {
    nc: usize,
    /// Per class: training observations (class-c samples' c-th logits).
    class_obs: Vec<Vec<T>>,
    /// Per class: every validation sample's c-th logit, in sample order.
    queries: Vec<Vec<T>>,
    val_labels: Vec<usize>,
    kde_columns: HashMap<(usize, u64), Rc<Vec<T>>>,
    nh_columns: HashMap<(usize, usize), Rc<Vec<T>>>,
    genome_costs: HashMap<Vec<u64>, T>,
}

impl<T: Real> EvalContext<T> {
    fn new(train: &[LogitSample<T>], val: &[LogitSample<T>]) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::data("cannot tune on zero training samples"));
        }
        if val.is_empty() {
            return Err(Error::data("cannot tune on zero validation samples"));
        }
        let nc = train[0].logits.len();
        if nc < 2 {
            return Err(Error::data("need at least two logit columns to tune"));
        }

        let mut class_obs: Vec<Vec<T>> = vec![Vec::new(); nc];
        for sample in train {
            if sample.logits.len() != nc {
                return Err(Error::data(format!(
                    "sample {:?} has {} logits, expected {nc}",
                    sample.id,
                    sample.logits.len()
                )));
            }
            if sample.logits.iter().any(|v| !v.is_finite()) {
                return Err(Error::data(format!(
                    "sample {:?} has a non-finite logit",
                    sample.id
                )));
            }
            let label = sample.label.ok_or_else(|| {
                Error::data(format!("training sample {:?} has no label", sample.id))
            })?;
            if label >= nc {
                return Err(Error::data(format!(
                    "sample {:?} has label {label}, outside 0..{nc}",
                    sample.id
                )));
            }
            class_obs[label].push(sample.logits[label]);
        }
        for (c, obs) in class_obs.iter().enumerate() {
            if obs.len() < 2 {
                return Err(Error::data(format!(
                    "class {c} has {} training samples; at least 2 are required",
                    obs.len()
                )));
            }
        }

        let mut queries: Vec<Vec<T>> = vec![Vec::with_capacity(val.len()); nc];
        let mut val_labels = Vec::with_capacity(val.len());
        for sample in val {
            if sample.logits.len() != nc {
                return Err(Error::data(format!(
                    "validation sample {:?} has {} logits, expected {nc}",
                    sample.id,
                    sample.logits.len()
                )));
            }
            if sample.logits.iter().any(|v| !v.is_finite()) {
                return Err(Error::data(format!(
                    "validation sample {:?} has a non-finite logit",
                    sample.id
                )));
            }
            let label = sample.label.ok_or_else(|| {
                Error::data(format!("validation sample {:?} has no label", sample.id))
            })?;
            if label >= nc {
                return Err(Error::data(format!(
                    "validation sample {:?} has label {label}, outside 0..{nc}",
                    sample.id
                )));
            }
            for c in 0..nc {
                queries[c].push(sample.logits[c]);
            }
            val_labels.push(label);
        }

        Ok(EvalContext {
            nc,
            class_obs,
            queries,
            val_labels,
            kde_columns: HashMap::new(),
            nh_columns: HashMap::new(),
            genome_costs: HashMap::new(),
        })
    }

    fn kde_column(&mut self, class: usize, bandwidth: f64) -> Rc<Vec<T>> {
        let key = (class, bandwidth.to_bits());
        if let Some(col) = self.kde_columns.get(&key) {
            return Rc::clone(col);
        }
        let model = KdeModel::fit(&self.class_obs[class], T::cast(bandwidth))
            .expect("validated observations and in-bounds bandwidth");
        let col = Rc::new(
            self.queries[class]
                .iter()
                .map(|&q| model.cdf(q))
                .collect::<Vec<T>>(),
        );
        self.kde_columns.insert(key, Rc::clone(&col));
        col
    }

    fn nh_column(&mut self, class: usize, nbins: usize) -> Rc<Vec<T>> {
        let key = (class, nbins);
        if let Some(col) = self.nh_columns.get(&key) {
            return Rc::clone(col);
        }
        let model = NhModel::fit(&self.class_obs[class], nbins)
            .expect("validated observations and in-bounds bin count");
        let col = Rc::new(
            self.queries[class]
                .iter()
                .map(|&q| model.cdf(q))
                .collect::<Vec<T>>(),
        );
        self.nh_columns.insert(key, Rc::clone(&col));
        col
    }

    fn cost(&mut self, genome: &[f64], mode: Mode) -> T {
        let key: Vec<u64> = genome.iter().map(|g| g.to_bits()).collect();
        if let Some(&cost) = self.genome_costs.get(&key) {
            return cost;
        }

        let lambda = T::cast(*genome.last().expect("genome has a smoothing gene"));
        let likelihood: Vec<Rc<Vec<T>>> = (0..self.nc)
            .map(|c| self.kde_column(c, genome[c]))
            .collect();
        let prior: Option<Vec<Rc<Vec<T>>>> = match mode {
            Mode::Ml => None,
            Mode::Map => Some(
                (0..self.nc)
                    .map(|c| self.nh_column(c, genome[self.nc + c] as usize))
                    .collect(),
            ),
        };

        let mut preds = Vec::with_capacity(self.val_labels.len());
        let mut terms = vec![T::zero(); self.nc];
        for j in 0..self.val_labels.len() {
            for (c, term) in terms.iter_mut().enumerate() {
                *term = match &prior {
                    None => likelihood[c][j],
                    Some(p) => likelihood[c][j] * p[c][j],
                };
            }
            let scores = smoothed_normalize(&terms, lambda);
            preds.push(argmax_class(&scores));
        }
        let cost = evaluate::<T>(&self.val_labels, &preds, self.nc)
            .expect("validated labels")
            .cost;
        self.genome_costs.insert(key, cost);
        cost
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Three well-separated classes: class c's own logit is shifted up.
    fn separable_data(seed: u64, n_per_class: usize) -> Vec<LogitSample<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut samples = Vec::new();
        for c in 0..3usize {
            for i in 0..n_per_class {
                let logits: Vec<f64> = (0..3)
                    .map(|k| {
                        let base = if k == c { 4.0 } else { -2.0 };
                        base + rng.random_range(-1.0..1.0)
                    })
                    .collect();
                samples.push(LogitSample::new(format!("s{c}_{i}"), logits, Some(c)));
            }
        }
        samples
    }

    fn small_config(seed: u64) -> GaConfig {
        GaConfig {
            population: 16,
            max_generations: Some(6),
            seed,
            ..GaConfig::default()
        }
    }

    #[test]
    fn cached_search_fitness_matches_the_plain_path() {
        let train = separable_data(1, 12);
        let val = separable_data(2, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for mode in [Mode::Ml, Mode::Map] {
            let mut ctx = EvalContext::<f64>::new(&train, &val).unwrap();
            for _ in 0..5 {
                let genome: Vec<f64> = match mode {
                    Mode::Ml => vec![
                        rng.random_range(0.01..5.0),
                        rng.random_range(0.01..5.0),
                        rng.random_range(0.01..5.0),
                        rng.random_range(1e-9..1e-5),
                    ],
                    Mode::Map => vec![
                        rng.random_range(0.01..5.0),
                        rng.random_range(0.01..5.0),
                        rng.random_range(0.01..5.0),
                        rng.random_range(2..=64usize) as f64,
                        rng.random_range(2..=64usize) as f64,
                        rng.random_range(2..=64usize) as f64,
                        rng.random_range(1e-9..1e-5),
                    ],
                };
                let params = decode::<f64>(&genome, 3, mode);
                let plain = fitness(&params, &train, &val, mode).unwrap();
                let cached = ctx.cost(&genome, mode);
                assert_eq!(plain, cached, "cache must not change fitness numbers");
                // Second lookup hits the genome cache.
                assert_eq!(ctx.cost(&genome, mode), cached);
            }
        }
    }

    #[test]
    fn same_seed_reproduces_the_run_and_seeds_differ() {
        let train = separable_data(3, 10);
        let val = separable_data(4, 6);
        let a = tune::<f64>(&train, &val, Mode::Ml, &small_config(11)).unwrap();
        let b = tune::<f64>(&train, &val, Mode::Ml, &small_config(11)).unwrap();
        assert_eq!(a.best, b.best);
        assert_eq!(a.best_cost, b.best_cost);
        assert_eq!(a.history, b.history);

        let c = tune::<f64>(&train, &val, Mode::Ml, &small_config(12)).unwrap();
        // Different seeds explore different populations; histories agree
        // only by coincidence. Compare the full mean trace, which is far
        // more sensitive than the best cost.
        let means_a: Vec<f64> = a.history.iter().map(|s| s.mean_cost).collect();
        let means_c: Vec<f64> = c.history.iter().map(|s| s.mean_cost).collect();
        assert_ne!(means_a, means_c);
    }

    #[test]
    fn best_cost_history_never_increases() {
        let train = separable_data(5, 10);
        let val = separable_data(6, 6);
        for mode in [Mode::Ml, Mode::Map] {
            let result = tune::<f64>(&train, &val, mode, &small_config(21)).unwrap();
            assert_eq!(result.history.len(), 7);
            for pair in result.history.windows(2) {
                assert!(
                    pair[1].best_cost <= pair[0].best_cost,
                    "best cost worsened between generations"
                );
            }
            assert_eq!(result.best_cost, result.history.last().unwrap().best_cost);
            // On cleanly separable data the search should find a low cost.
            assert!(result.best_cost < 0.2, "cost {} too high", result.best_cost);
        }
    }

    #[test]
    fn every_individual_respects_bounds_and_integrality() {
        let train = separable_data(7, 10);
        let val = separable_data(8, 6);
        let config = small_config(31);
        let mut seen = 0usize;
        let bounds = config.bounds;
        tune_with::<f64, _>(&train, &val, Mode::Map, &config, |event| {
            if let TuneEvent::Evaluated { params, .. } = event {
                seen += 1;
                for &h in &params.bandwidths {
                    assert!(h >= bounds.bandwidth.0 && h <= bounds.bandwidth.1);
                }
                for &b in &params.nbins {
                    assert!(b >= bounds.nbins.0 && b <= bounds.nbins.1);
                }
                assert!(params.lambda >= bounds.lambda.0 && params.lambda <= bounds.lambda.1);
                assert_eq!(params.nbins.len(), 3);
                assert_eq!(params.bandwidths.len(), 3);
            }
        })
        .unwrap();
        // Every member of every generation is reported: 16 * 7.
        assert_eq!(seen, 16 * 7);
    }

    #[test]
    fn evaluation_count_charges_all_non_elite_children() {
        let train = separable_data(9, 10);
        let val = separable_data(10, 6);
        let config = small_config(41);
        let result = tune::<f64>(&train, &val, Mode::Ml, &config).unwrap();
        // Initial population plus (population - elites) per generation.
        assert_eq!(result.evaluations, 16 + 6 * (16 - 2));
    }

    #[test]
    fn stalling_stops_a_flat_search_early() {
        // Identical logits everywhere: every parameter set scores the same,
        // so no generation can improve and the stall window trips.
        let flat: Vec<LogitSample<f64>> = (0..12)
            .map(|i| LogitSample::new(format!("s{i}"), vec![0.0, 0.0], Some(i % 2)))
            .collect();
        let config = GaConfig {
            population: 8,
            max_generations: Some(50),
            stall_generations: Some(2),
            seed: 5,
            ..GaConfig::default()
        };
        let result = tune::<f64>(&flat, &flat, Mode::Ml, &config).unwrap();
        assert_eq!(result.history.len(), 3, "gen 0 plus two stalled generations");
    }

    #[test]
    fn default_generation_cap_scales_with_chromosome_length() {
        // 2 classes, likelihood-only: 3 genes, so the default cap is 300.
        // Use a stall limit to avoid actually running 300 generations.
        let train = separable_data(13, 10);
        let two_class: Vec<LogitSample<f64>> = train
            .iter()
            .filter(|s| s.label != Some(2))
            .map(|s| {
                LogitSample::new(s.id.clone(), s.logits[..2].to_vec(), s.label)
            })
            .collect();
        let config = GaConfig {
            population: 8,
            max_generations: None,
            stall_generations: Some(3),
            seed: 2,
            ..GaConfig::default()
        };
        let result = tune::<f64>(&two_class, &two_class, Mode::Ml, &config).unwrap();
        assert!(result.history.len() <= 301);
    }

    #[test]
    fn tune_validates_inputs() {
        let train = separable_data(15, 10);
        let val = separable_data(16, 6);
        // Unlabeled validation sample.
        let mut unlabeled = val.clone();
        unlabeled[0].label = None;
        assert!(tune::<f64>(&train, &unlabeled, Mode::Ml, &small_config(1)).is_err());
        // Empty splits.
        assert!(tune::<f64>(&[], &val, Mode::Ml, &small_config(1)).is_err());
        assert!(tune::<f64>(&train, &[], Mode::Ml, &small_config(1)).is_err());
        // A class with a single training sample.
        let mut sparse = train.clone();
        sparse.retain(|s| s.label != Some(2) || s.id == "s2_0");
        assert!(tune::<f64>(&sparse, &val, Mode::Ml, &small_config(1)).is_err());
        // Bad configuration.
        let mut bad = small_config(1);
        bad.population = 1;
        assert!(tune::<f64>(&train, &val, Mode::Ml, &bad).is_err());
        let mut bad = small_config(1);
        bad.crossover_fraction = 1.5;
        assert!(tune::<f64>(&train, &val, Mode::Ml, &bad).is_err());
        let mut bad = small_config(1);
        bad.bounds.lambda = (0.0, 1e-5);
        assert!(tune::<f64>(&train, &val, Mode::Ml, &bad).is_err());
    }

    #[test]
    fn fitness_improves_over_random_initialization_on_structured_data() {
        let train = separable_data(17, 16);
        let val = separable_data(18, 10);
        let result = tune::<f64>(&train, &val, Mode::Ml, &small_config(51)).unwrap();
        let first = result.history.first().unwrap();
        assert!(result.best_cost <= first.best_cost);
        assert!(result.best_cost <= first.mean_cost);
    }
}
