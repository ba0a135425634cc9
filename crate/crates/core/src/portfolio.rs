//! Single-stage portfolio selection with a two-part genotype.
//!
//! The genotype holds `b` real "bucket" genes and one selection bit per asset.
//! Each bucket is one `1/b` slice of the budget; its gene decides which of the
//! selected assets receives it. Decoding therefore always yields a
//! budget-normalized, long-only portfolio whose weights are multiples of `1/b`.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{loss_distribution, ScenarioSet};
use crate::ea::{self, real, Direction, EaConfig, EaRng, Fitness, GenerationRecord, Problem};
use crate::error::{Error, Result};
use crate::risk::{self, ObjectiveSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioGenotype {
    /// Bucket genes in `[0, 1]`.
    pub buckets: Vec<f64>,
    /// Asset selection bits.
    pub selection: Vec<bool>,
}

impl PortfolioGenotype {
    pub fn selected_count(&self) -> usize {
        self.selection.iter().filter(|&&b| b).count()
    }
}

/// Budget-normalized long-only weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Portfolio {
    weights: Vec<f64>,
}

impl Portfolio {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of assets with a non-zero weight.
    pub fn holdings(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }
}

/// Maps a genotype to its portfolio, or `None` if no asset is selected.
///
/// With `m` selected assets ordered by index, a bucket gene `v` goes to slot
/// `min(floor(v * m), m - 1)`; an asset's weight is its bucket count over `b`.
pub fn decode(genotype: &PortfolioGenotype) -> Option<Portfolio> {
    let selected: Vec<usize> = genotype
        .selection
        .iter()
        .enumerate()
        .filter_map(|(i, &on)| on.then_some(i))
        .collect();
    if selected.is_empty() || genotype.buckets.is_empty() {
        return None;
    }
    let mut counts = vec![0usize; genotype.selection.len()];
    for &v in &genotype.buckets {
        counts[selected[real::bucket(v, selected.len())]] += 1;
    }
    let b = genotype.buckets.len() as f64;
    Some(Portfolio {
        weights: counts.into_iter().map(|c| c as f64 / b).collect(),
    })
}

/// A constraint on the decoded portfolio. Returns the violation magnitude, 0 when satisfied.
pub trait Constraint: Send + Sync {
    fn violation(&self, portfolio: &Portfolio) -> f64;
}

impl<F> Constraint for F
where
    F: Fn(&Portfolio) -> f64 + Send + Sync,
{
    fn violation(&self, portfolio: &Portfolio) -> f64 {
        self(portfolio)
    }
}

/// At most this many assets with a positive weight; violation counts the excess assets.
#[derive(Debug, Clone, Copy)]
pub struct MaxHoldings(pub usize);

impl Constraint for MaxHoldings {
    fn violation(&self, portfolio: &Portfolio) -> f64 {
        portfolio.holdings().saturating_sub(self.0) as f64
    }
}

/// Upper bound on every single weight; violation is the total excess weight.
#[derive(Debug, Clone, Copy)]
pub struct MaxWeight(pub f64);

impl Constraint for MaxWeight {
    fn violation(&self, portfolio: &Portfolio) -> f64 {
        portfolio.weights.iter().map(|&w| (w - self.0).max(0.0)).sum()
    }
}

/// Linear penalty on the summed violations of a list of constraints.
pub struct ConstraintSet {
    constraints: Vec<Box<dyn Constraint>>,
    penalty_weight: f64,
}

impl ConstraintSet {
    pub fn new(penalty_weight: f64) -> Result<Self> {
        if !(penalty_weight > 0.0 && penalty_weight.is_finite()) {
            return Err(Error::Config(format!("penalty weight must be positive, got {penalty_weight}")));
        }
        Ok(Self {
            constraints: Vec::new(),
            penalty_weight,
        })
    }

    /// No constraints at all.
    pub fn empty() -> Self {
        Self {
            constraints: Vec::new(),
            penalty_weight: 1.0,
        }
    }

    pub fn with(mut self, constraint: impl Constraint + 'static) -> Self {
        self.constraints.push(Box::new(constraint));
        self
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn penalty_weight(&self) -> f64 {
        self.penalty_weight
    }

    /// Sum of violations; `None` if any check returns a negative or non-finite value.
    pub fn total_violation(&self, portfolio: &Portfolio) -> Option<f64> {
        let mut total = 0.0;
        for c in &self.constraints {
            let v = c.violation(portfolio);
            if !(v >= 0.0 && v.is_finite()) {
                return None;
            }
            total += v;
        }
        Some(total)
    }

    pub fn penalty(&self, portfolio: &Portfolio) -> Option<f64> {
        self.total_violation(portfolio).map(|v| self.penalty_weight * v)
    }
}

impl std::fmt::Debug for ConstraintSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConstraintSet")
            .field("constraints", &self.constraints.len())
            .field("penalty_weight", &self.penalty_weight)
            .finish()
    }
}

/// Penalized objective of a genotype; larger is better.
pub fn evaluate(
    genotype: &PortfolioGenotype,
    scenarios: &ScenarioSet,
    spec: &ObjectiveSpec,
    constraints: &ConstraintSet,
) -> Fitness {
    let Some(portfolio) = decode(genotype) else {
        return Fitness::Invalid;
    };
    let Ok(l) = loss_distribution(portfolio.weights(), scenarios) else {
        return Fitness::Invalid;
    };
    let Ok(objective) = risk::weighted_objective(spec, &l) else {
        return Fitness::Invalid;
    };
    match constraints.penalty(&portfolio) {
        Some(penalty) => Fitness::new(objective - penalty),
        None => Fitness::Invalid,
    }
}

/// EA problem for portfolio selection.
#[derive(Debug)]
pub struct PortfolioProblem<'a> {
    pub scenarios: &'a ScenarioSet,
    pub spec: ObjectiveSpec,
    pub constraints: &'a ConstraintSet,
    pub buckets: usize,
    /// Fixed number of selected assets, if any.
    pub cardinality: Option<usize>,
}

impl<'a> PortfolioProblem<'a> {
    pub fn new(
        scenarios: &'a ScenarioSet,
        spec: ObjectiveSpec,
        constraints: &'a ConstraintSet,
        buckets: usize,
        cardinality: Option<usize>,
    ) -> Result<Self> {
        spec.validate()?;
        if buckets == 0 {
            return Err(Error::Config("bucket count must be at least 1".into()));
        }
        if let Some(k) = cardinality {
            if k == 0 || k > scenarios.dims() {
                return Err(Error::Config(format!(
                    "cardinality {k} is infeasible for {} assets",
                    scenarios.dims()
                )));
            }
        }
        Ok(Self {
            scenarios,
            spec,
            constraints,
            buckets,
            cardinality,
        })
    }

    fn assets(&self) -> usize {
        self.scenarios.dims()
    }

    /// Sets or clears random bits until exactly `k` are set.
    fn repair(selection: &mut [bool], k: usize, rng: &mut EaRng) {
        loop {
            let on: Vec<usize> = (0..selection.len()).filter(|&i| selection[i]).collect();
            match on.len().cmp(&k) {
                std::cmp::Ordering::Equal => return,
                std::cmp::Ordering::Greater => selection[on[rng.random_range(0..on.len())]] = false,
                std::cmp::Ordering::Less => {
                    let off: Vec<usize> = (0..selection.len()).filter(|&i| !selection[i]).collect();
                    selection[off[rng.random_range(0..off.len())]] = true;
                }
            }
        }
    }
}

impl Problem for PortfolioProblem<'_> {
    type Genotype = PortfolioGenotype;

    fn direction(&self) -> Direction {
        Direction::Maximize
    }

    fn generate(&self, rng: &mut EaRng) -> PortfolioGenotype {
        let a = self.assets();
        let buckets = real::random_genes(self.buckets, rng);
        let selection = match self.cardinality {
            Some(k) => {
                let mut sel = vec![false; a];
                for i in index::sample(rng, a, k) {
                    sel[i] = true;
                }
                sel
            }
            None => (0..a).map(|_| rng.random_bool(0.5)).collect(),
        };
        PortfolioGenotype { buckets, selection }
    }

    fn evaluate(&self, genotype: &PortfolioGenotype) -> Fitness {
        evaluate(genotype, self.scenarios, &self.spec, self.constraints)
    }

    fn crossover(&self, a: &PortfolioGenotype, b: &PortfolioGenotype, rng: &mut EaRng) -> PortfolioGenotype {
        let buckets = real::uniform_crossover(&a.buckets, &b.buckets, rng);
        let mut selection = real::uniform_crossover(&a.selection, &b.selection, rng);
        if let Some(k) = self.cardinality {
            Self::repair(&mut selection, k, rng);
        }
        PortfolioGenotype { buckets, selection }
    }

    fn mutate(&self, genotype: &mut PortfolioGenotype, rate: f64, rng: &mut EaRng) {
        real::flip_or_gaussian(&mut genotype.buckets, rate, rng);
        let a = genotype.selection.len();
        match self.cardinality {
            Some(k) if k < a => {
                for _ in 0..a {
                    if rng.random_bool(rate) {
                        let on: Vec<usize> = (0..a).filter(|&i| genotype.selection[i]).collect();
                        let off: Vec<usize> = (0..a).filter(|&i| !genotype.selection[i]).collect();
                        genotype.selection[on[rng.random_range(0..on.len())]] = false;
                        genotype.selection[off[rng.random_range(0..off.len())]] = true;
                    }
                }
            }
            Some(_) => {}
            None => {
                for bit in genotype.selection.iter_mut() {
                    if rng.random_bool(rate) {
                        *bit = !*bit;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PortfolioResult {
    pub portfolio: Portfolio,
    pub genotype: PortfolioGenotype,
    /// Penalized objective of the best individual.
    pub fitness: f64,
    pub expectation: f64,
    pub risk: f64,
    /// Unpenalized `E - kappa * risk`.
    pub objective: f64,
    pub log: Vec<GenerationRecord>,
}

/// Runs the EA and returns the best portfolio found.
pub fn optimize_portfolio(
    scenarios: &ScenarioSet,
    spec: ObjectiveSpec,
    constraints: &ConstraintSet,
    config: &EaConfig,
    buckets: usize,
    cardinality: Option<usize>,
) -> Result<PortfolioResult> {
    let problem = PortfolioProblem::new(scenarios, spec, constraints, buckets, cardinality)?;
    let run = ea::run(config, &problem)?;
    let genotype = run.best.genotype;
    let portfolio = decode(&genotype).ok_or_else(|| Error::NoValidIndividual { attempts: ea::MAX_INIT_ATTEMPTS })?;
    let l = loss_distribution(portfolio.weights(), scenarios)?;
    let expectation = risk::expectation(&l);
    let risk_value = risk::risk(&spec.measure, &l)?;
    Ok(PortfolioResult {
        fitness: run.best.fitness.value().unwrap_or(f64::NAN),
        expectation,
        risk: risk_value,
        objective: expectation - spec.kappa * risk_value,
        portfolio,
        genotype,
        log: run.log,
    })
}

/// Mean pairwise L1 distance between portfolios; 0 for fewer than two.
///
/// Used to report how far apart the optima of runs with different seeds are.
pub fn seed_dispersion(portfolios: &[Portfolio]) -> f64 {
    let n = portfolios.len();
    if n < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += portfolios[i]
                .weights
                .iter()
                .zip(&portfolios[j].weights)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
        }
    }
    total / (n * (n - 1) / 2) as f64
}
