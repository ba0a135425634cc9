//! A generic elitist evolutionary optimizer.
//!
//! The loop is the textbook one: generate an initial population, then
//! repeatedly recombine parents into offspring, mutate the offspring, evaluate
//! them, and keep the best `population_size` individuals out of parents and
//! offspring together (μ+λ truncation).
//!
//! Every individual gets its own random stream, derived from the master seed
//! and a running individual counter. Variation for one offspring only touches
//! that offspring's stream, so evaluating offspring concurrently cannot change
//! the outcome of a run.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of times an all-invalid initial population is regenerated before giving up.
pub const MAX_INIT_ATTEMPTS: usize = 100;

/// Improvements at or below this size do not reset the stagnation counter.
pub const IMPROVEMENT_EPS: f64 = 1e-12;

/// Random stream used by all variation operators.
pub type EaRng = ChaCha8Rng;

/// Returns the stream for individual number `counter` under `master_seed`.
pub fn individual_rng(master_seed: u64, counter: u64) -> EaRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(counter);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Direction {
    /// Orders two finite fitness values so that the better one comes first.
    fn cmp(self, a: f64, b: f64) -> Ordering {
        match self {
            Direction::Minimize => a.total_cmp(&b),
            Direction::Maximize => b.total_cmp(&a),
        }
    }

    fn improvement(self, old: f64, new: f64) -> f64 {
        match self {
            Direction::Minimize => old - new,
            Direction::Maximize => new - old,
        }
    }
}

/// Fitness of an individual. Invalid individuals always rank last.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Fitness {
    Valid(f64),
    Invalid,
}

impl Fitness {
    /// Wraps a raw value; non-finite values become [`Fitness::Invalid`].
    pub fn new(value: f64) -> Self {
        if value.is_finite() {
            Fitness::Valid(value)
        } else {
            Fitness::Invalid
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Fitness::Valid(v) => Some(v),
            Fitness::Invalid => None,
        }
    }

    pub fn is_valid(self) -> bool {
        matches!(self, Fitness::Valid(_))
    }
}

impl From<Option<f64>> for Fitness {
    fn from(value: Option<f64>) -> Self {
        value.map_or(Fitness::Invalid, Fitness::new)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual<G> {
    pub genotype: G,
    pub fitness: Fitness,
    /// Generation in which the individual was created (0 = initial population).
    pub birth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EaConfig {
    pub population_size: usize,
    pub offspring_count: usize,
    pub max_generations: usize,
    /// Stop after this many generations without improvement of the best fitness.
    pub stagnation_limit: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub master_seed: u64,
}

impl Default for EaConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            offspring_count: 100,
            max_generations: 500,
            stagnation_limit: 100,
            mutation_rate: 0.1,
            crossover_rate: 0.9,
            master_seed: 42,
        }
    }
}

impl EaConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.population_size < 2 {
            return fail("population size must be at least 2");
        }
        if self.offspring_count < 1 {
            return fail("offspring count must be at least 1");
        }
        if self.stagnation_limit < 1 {
            return fail("stagnation limit must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return fail("mutation rate must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return fail("crossover rate must lie in [0, 1]");
        }
        Ok(())
    }
}

/// A problem the engine can optimize.
///
/// `evaluate` must be pure: the engine calls it from several threads at once.
pub trait Problem: Sync {
    type Genotype: Clone + Send + Sync;

    fn direction(&self) -> Direction {
        Direction::Minimize
    }

    fn generate(&self, rng: &mut EaRng) -> Self::Genotype;

    fn evaluate(&self, genotype: &Self::Genotype) -> Fitness;

    fn crossover(&self, a: &Self::Genotype, b: &Self::Genotype, rng: &mut EaRng) -> Self::Genotype;

    /// Mutates in place; `rate` is the per-gene mutation probability.
    fn mutate(&self, genotype: &mut Self::Genotype, rate: f64, rng: &mut EaRng);
}

/// One line of the generation log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best: Option<f64>,
    pub mean: Option<f64>,
    pub invalid_count: usize,
}

#[derive(Debug, Clone)]
pub struct RunResult<G> {
    pub best: Individual<G>,
    pub log: Vec<GenerationRecord>,
    pub evaluations: u64,
}

impl<G> RunResult<G> {
    /// Writes the log as newline-delimited JSON records.
    pub fn log_ndjson(&self) -> String {
        log_ndjson(&self.log)
    }
}

pub fn log_ndjson(log: &[GenerationRecord]) -> String {
    let mut out = String::new();
    for rec in log {
        // GenerationRecord always serializes.
        out.push_str(&serde_json::to_string(rec).expect("serializable record"));
        out.push('\n');
    }
    out
}

/// Survivor selection: the `population_size` best individuals.
///
/// `candidates` must be ordered parents first, offspring after, so that ties
/// are broken in favour of older individuals and then lower insertion index.
pub fn select<G>(
    mut candidates: Vec<Individual<G>>,
    population_size: usize,
    direction: Direction,
) -> Vec<Individual<G>> {
    // sort_by is stable, so equal keys keep their insertion order.
    candidates.sort_by(|a, b| rank(direction, a, b));
    candidates.truncate(population_size);
    candidates
}

fn rank<G>(direction: Direction, a: &Individual<G>, b: &Individual<G>) -> Ordering {
    let by_fitness = match (a.fitness, b.fitness) {
        (Fitness::Valid(x), Fitness::Valid(y)) => direction.cmp(x, y),
        (Fitness::Valid(_), Fitness::Invalid) => Ordering::Less,
        (Fitness::Invalid, Fitness::Valid(_)) => Ordering::Greater,
        (Fitness::Invalid, Fitness::Invalid) => Ordering::Equal,
    };
    by_fitness.then(a.birth.cmp(&b.birth))
}

fn record<G>(generation: usize, population: &[Individual<G>]) -> GenerationRecord {
    let valid: Vec<f64> = population.iter().filter_map(|i| i.fitness.value()).collect();
    GenerationRecord {
        generation,
        // Population is sorted, so the first individual is the best.
        best: population.first().and_then(|i| i.fitness.value()),
        mean: (!valid.is_empty()).then(|| valid.iter().sum::<f64>() / valid.len() as f64),
        invalid_count: population.len() - valid.len(),
    }
}

/// Runs the evolutionary loop to termination.
pub fn run<P: Problem>(config: &EaConfig, problem: &P) -> Result<RunResult<P::Genotype>> {
    config.validate()?;
    let direction = problem.direction();
    let mut counter: u64 = 0;
    let mut evaluations: u64 = 0;

    let mut population = None;
    for _ in 0..MAX_INIT_ATTEMPTS {
        let start = counter;
        counter += config.population_size as u64;
        let initial: Vec<Individual<P::Genotype>> = (start..counter)
            .into_par_iter()
            .map(|id| {
                let mut rng = individual_rng(config.master_seed, id);
                let genotype = problem.generate(&mut rng);
                let fitness = problem.evaluate(&genotype);
                Individual {
                    genotype,
                    fitness,
                    birth: 0,
                }
            })
            .collect();
        evaluations += config.population_size as u64;
        if initial.iter().any(|i| i.fitness.is_valid()) {
            population = Some(initial);
            break;
        }
    }
    let Some(initial) = population else {
        return Err(Error::NoValidIndividual {
            attempts: MAX_INIT_ATTEMPTS,
        });
    };
    let mut population = select(initial, config.population_size, direction);
    let mut log = vec![record(0, &population)];
    let mut best_so_far = population[0].fitness.value();
    let mut stagnant = 0;

    for generation in 1..=config.max_generations {
        let start = counter;
        counter += config.offspring_count as u64;
        let parents = &population;
        let offspring: Vec<Individual<P::Genotype>> = (start..counter)
            .into_par_iter()
            .map(|id| {
                let mut rng = individual_rng(config.master_seed, id);
                let first = &parents[rng.random_range(0..parents.len())];
                let second = &parents[rng.random_range(0..parents.len())];
                let mut genotype = if rng.random_bool(config.crossover_rate) {
                    problem.crossover(&first.genotype, &second.genotype, &mut rng)
                } else {
                    first.genotype.clone()
                };
                problem.mutate(&mut genotype, config.mutation_rate, &mut rng);
                let fitness = problem.evaluate(&genotype);
                Individual {
                    genotype,
                    fitness,
                    birth: generation,
                }
            })
            .collect();
        evaluations += config.offspring_count as u64;

        let mut pool = population;
        pool.extend(offspring);
        population = select(pool, config.population_size, direction);
        log.push(record(generation, &population));

        let best = population[0].fitness.value();
        let improved = match (best_so_far, best) {
            (Some(old), Some(new)) => direction.improvement(old, new) > IMPROVEMENT_EPS,
            (None, Some(_)) => true,
            _ => false,
        };
        if improved {
            best_so_far = best;
            stagnant = 0;
        } else {
            stagnant += 1;
            if stagnant >= config.stagnation_limit {
                break;
            }
        }
    }

    Ok(RunResult {
        best: population.swap_remove(0),
        log,
        evaluations,
    })
}

/// True when the logged best fitness never gets worse from one generation to the next.
pub fn is_elitist(log: &[GenerationRecord], direction: Direction) -> bool {
    log.windows(2).all(|w| match (w[0].best, w[1].best) {
        (Some(a), Some(b)) => direction.improvement(a, b) >= 0.0,
        (Some(_), None) => false,
        _ => true,
    })
}

/// Real-valued variation operators shared by the clustering and tree solvers.
pub mod real {
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    use super::EaRng;

    /// Standard deviation of the Gaussian gene perturbation.
    pub const GAUSSIAN_SIGMA: f64 = 0.1;

    /// Uniform random genes in `[0, 1)`.
    pub fn random_genes(len: usize, rng: &mut EaRng) -> Vec<f64> {
        (0..len).map(|_| rng.random::<f64>()).collect()
    }

    /// Each gene is taken from either parent with equal probability.
    pub fn uniform_crossover<T: Copy>(a: &[T], b: &[T], rng: &mut EaRng) -> Vec<T> {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| if rng.random_bool(0.5) { x } else { y })
            .collect()
    }

    /// Per gene with probability `rate`: half the time flip `v -> 1 - v`,
    /// otherwise add N(0, σ²) noise clipped to `[0, 1]`.
    pub fn flip_or_gaussian(genes: &mut [f64], rate: f64, rng: &mut EaRng) {
        let noise = Normal::new(0.0, GAUSSIAN_SIGMA).expect("valid sigma");
        for gene in genes.iter_mut() {
            if rng.random_bool(rate) {
                *gene = if rng.random_bool(0.5) {
                    1.0 - *gene
                } else {
                    (*gene + noise.sample(rng)).clamp(0.0, 1.0)
                };
            }
        }
    }

    /// Maps a gene in `[0, 1]` to a bucket in `0..buckets` (zero-based).
    ///
    /// The unit interval is split into `buckets` equal parts; a gene of exactly
    /// 1 falls into the last bucket.
    pub fn bucket(gene: f64, buckets: usize) -> usize {
        ((gene * buckets as f64).floor() as usize).min(buckets - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Sphere {
        dims: usize,
    }

    impl Problem for Sphere {
        type Genotype = Vec<f64>;

        fn generate(&self, rng: &mut EaRng) -> Vec<f64> {
            real::random_genes(self.dims, rng)
        }

        fn evaluate(&self, g: &Vec<f64>) -> Fitness {
            Fitness::new(g.iter().map(|v| v * v).sum())
        }

        fn crossover(&self, a: &Vec<f64>, b: &Vec<f64>, rng: &mut EaRng) -> Vec<f64> {
            real::uniform_crossover(a, b, rng)
        }

        fn mutate(&self, g: &mut Vec<f64>, rate: f64, rng: &mut EaRng) {
            real::flip_or_gaussian(g, rate, rng)
        }
    }

    fn ind(fitness: Fitness, birth: usize, tag: u32) -> Individual<u32> {
        Individual {
            genotype: tag,
            fitness,
            birth,
        }
    }

    #[test]
    fn sphere_converges() {
        let config = EaConfig {
            population_size: 40,
            offspring_count: 40,
            max_generations: 200,
            stagnation_limit: 200,
            mutation_rate: 0.25,
            crossover_rate: 0.9,
            master_seed: 11,
        };
        let result = run(&config, &Sphere { dims: 4 }).unwrap();
        let best = result.best.fitness.value().unwrap();
        assert!(best <= 1e-3, "best {best}");
        assert!(result.log.len() <= 201);
        assert!(is_elitist(&result.log, Direction::Minimize));
    }

    #[test]
    fn zero_generations_returns_best_initial() {
        let config = EaConfig {
            population_size: 2,
            max_generations: 0,
            ..EaConfig::default()
        };
        let problem = Sphere { dims: 3 };
        let result = run(&config, &problem).unwrap();
        assert_eq!(result.log.len(), 1);
        let initial: Vec<f64> = (0..2)
            .map(|id| {
                let g = problem.generate(&mut individual_rng(config.master_seed, id));
                problem.evaluate(&g).value().unwrap()
            })
            .collect();
        let expect = initial.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(result.best.fitness.value(), Some(expect));
        assert_eq!(result.evaluations, 2);
    }

    #[test]
    fn same_seed_same_log() {
        let config = EaConfig {
            max_generations: 30,
            ..EaConfig::default()
        };
        let a = run(&config, &Sphere { dims: 5 }).unwrap();
        let b = run(&config, &Sphere { dims: 5 }).unwrap();
        assert_eq!(a.log_ndjson(), b.log_ndjson());
        assert_eq!(a.best.genotype, b.best.genotype);
    }

    #[test]
    fn stagnation_stops_early() {
        struct Flat;
        impl Problem for Flat {
            type Genotype = u8;
            fn generate(&self, _: &mut EaRng) -> u8 {
                0
            }
            fn evaluate(&self, _: &u8) -> Fitness {
                Fitness::Valid(1.0)
            }
            fn crossover(&self, a: &u8, _: &u8, _: &mut EaRng) -> u8 {
                *a
            }
            fn mutate(&self, _: &mut u8, _: f64, _: &mut EaRng) {}
        }
        let config = EaConfig {
            max_generations: 1000,
            stagnation_limit: 7,
            ..EaConfig::default()
        };
        let result = run(&config, &Flat).unwrap();
        assert_eq!(result.log.len(), 8);
    }

    #[test]
    fn all_invalid_initial_population_errors() {
        struct Never;
        impl Problem for Never {
            type Genotype = ();
            fn generate(&self, _: &mut EaRng) {}
            fn evaluate(&self, _: &()) -> Fitness {
                Fitness::Invalid
            }
            fn crossover(&self, _: &(), _: &(), _: &mut EaRng) {}
            fn mutate(&self, _: &mut (), _: f64, _: &mut EaRng) {}
        }
        let err = run(&EaConfig::default(), &Never).unwrap_err();
        assert!(matches!(err, Error::NoValidIndividual { attempts: 100 }));
    }

    #[test]
    fn bad_config_is_rejected() {
        let cfg = EaConfig {
            population_size: 1,
            ..EaConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = EaConfig {
            mutation_rate: 1.5,
            ..EaConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn select_keeps_best() {
        let pool = vec![
            ind(Fitness::Valid(3.0), 0, 0),
            ind(Fitness::Valid(1.0), 0, 1),
            ind(Fitness::Valid(2.0), 0, 2),
        ];
        let kept: Vec<u32> = select(pool, 2, Direction::Minimize)
            .into_iter()
            .map(|i| i.genotype)
            .collect();
        assert_eq!(kept, vec![1, 2]);
    }

    #[test]
    fn select_all_invalid() {
        let pool = vec![
            ind(Fitness::Invalid, 0, 0),
            ind(Fitness::Invalid, 0, 1),
            ind(Fitness::Invalid, 1, 2),
        ];
        let kept = select(pool, 2, Direction::Minimize);
        assert_eq!(kept.len(), 2);
        assert!(kept.iter().all(|i| !i.fitness.is_valid()));
    }

    #[test]
    fn select_tie_keeps_parent() {
        // Offspring listed first on purpose: age decides, not position.
        let pool = vec![ind(Fitness::Valid(1.0), 5, 1), ind(Fitness::Valid(1.0), 4, 0)];
        let kept = select(pool, 1, Direction::Minimize);
        assert_eq!(kept[0].genotype, 0);
    }

    #[test]
    fn select_returns_all_when_short() {
        let pool = vec![ind(Fitness::Valid(1.0), 0, 0)];
        assert_eq!(select(pool, 5, Direction::Maximize).len(), 1);
    }

    #[test]
    fn maximize_orders_descending() {
        let pool = vec![ind(Fitness::Valid(1.0), 0, 0), ind(Fitness::Valid(2.0), 0, 1)];
        assert_eq!(select(pool, 1, Direction::Maximize)[0].genotype, 1);
    }

    #[test]
    fn bucket_rule_clamps() {
        assert_eq!(real::bucket(1.0, 4), 3);
        assert_eq!(real::bucket(0.0, 4), 0);
        assert_eq!(real::bucket(0.4999, 2), 0);
        assert_eq!(real::bucket(0.5, 2), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn fitness() -> impl Strategy<Value = Fitness> {
            prop_oneof![
                3 => (-5i32..5).prop_map(|v| Fitness::Valid(v as f64)),
                1 => Just(Fitness::Invalid),
            ]
        }

        proptest! {
            #[test]
            fn select_prefers_valid(fits in prop::collection::vec(fitness(), 1..20), size in 1usize..10) {
                let pool: Vec<_> = fits.iter().enumerate().map(|(i, &f)| ind(f, 0, i as u32)).collect();
                let valid = fits.iter().filter(|f| f.is_valid()).count();
                let kept = select(pool, size, Direction::Minimize);
                let kept_valid = kept.iter().filter(|i| i.fitness.is_valid()).count();
                prop_assert_eq!(kept_valid, valid.min(size));
            }
        }
    }
}
