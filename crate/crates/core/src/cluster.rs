//! Single-stage scenario generation by evolutionary clustering.
//!
//! A chromosome holds one gene in `[0, 1]` per input scenario. The gene picks
//! the scenario's cluster by splitting the unit interval into `k` equal parts.
//! Each cluster becomes one output scenario: its value is the cluster center
//! and its probability the summed probability of its members.

use serde::{Deserialize, Serialize};

use crate::distributions::ScenarioSet;
use crate::ea::{self, real, EaConfig, EaRng, Fitness, GenerationRecord, Problem};
use crate::error::{Error, Result};
use crate::metric::{check_weights, Center, Distance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterChromosome {
    pub genes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringSpec {
    pub k: usize,
    pub distance: Distance,
    pub center: Center,
    /// Weight each cluster's distance by its output probability.
    pub probability_weighted: bool,
    /// Optional per-dimension weights for multivariate inputs; all ones when absent.
    pub dimension_weights: Option<Vec<f64>>,
}

impl ClusteringSpec {
    pub fn new(k: usize, distance: Distance, center: Center) -> Self {
        Self {
            k,
            distance,
            center,
            probability_weighted: false,
            dimension_weights: None,
        }
    }

    pub fn validate(&self, scenarios: &ScenarioSet) -> Result<()> {
        if self.k == 0 || self.k > scenarios.len() {
            return Err(Error::Config(format!(
                "cluster count {} must lie in 1..={}",
                self.k,
                scenarios.len()
            )));
        }
        check_weights(self.dimension_weights.as_deref(), scenarios.dims())
    }
}

/// Zero-based cluster id of every gene: `min(floor(gene * k), k - 1)`.
pub fn assign_clusters(chromosome: &ClusterChromosome, k: usize) -> Vec<usize> {
    chromosome.genes.iter().map(|&g| real::bucket(g, k)).collect()
}

/// Replaces gene `index` by `1 - gene`.
pub fn flip_mutate(chromosome: &ClusterChromosome, index: usize) -> Result<ClusterChromosome> {
    let len = chromosome.genes.len();
    if index >= len {
        return Err(Error::IndexOutOfRange { index, len });
    }
    let mut out = chromosome.clone();
    out.genes[index] = 1.0 - out.genes[index];
    Ok(out)
}

/// The reduced scenario set produced by a clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOutput {
    pub scenarios: ScenarioSet,
    /// Summed member-to-center distance of each cluster.
    pub distances: Vec<f64>,
    pub objective: f64,
}

struct Stats {
    centers: Vec<Vec<f64>>,
    probabilities: Vec<f64>,
    distances: Vec<f64>,
    objective: f64,
}

fn cluster_stats(scenarios: &ScenarioSet, ids: &[usize], spec: &ClusteringSpec) -> Option<Stats> {
    let k = spec.k;
    let dims = scenarios.dims();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in ids.iter().enumerate() {
        members[c].push(i);
    }
    if members.iter().any(Vec::is_empty) {
        return None;
    }
    let weights = spec.dimension_weights.as_deref();
    let p = scenarios.probabilities();
    let mut centers = Vec::with_capacity(k);
    let mut probabilities = Vec::with_capacity(k);
    let mut distances = Vec::with_capacity(k);
    let mut column = Vec::new();
    for m in &members {
        let center: Vec<f64> = (0..dims)
            .map(|d| {
                column.clear();
                column.extend(m.iter().map(|&i| scenarios.row(i)[d]));
                spec.center.of(&mut column)
            })
            .collect();
        let dist: f64 = m
            .iter()
            .map(|&i| spec.distance.between(scenarios.row(i), &center, weights))
            .sum();
        probabilities.push(m.iter().map(|&i| p[i]).sum::<f64>());
        distances.push(dist);
        centers.push(center);
    }
    let objective = if spec.probability_weighted {
        distances.iter().zip(&probabilities).map(|(d, p)| d * p).sum()
    } else {
        distances.iter().sum()
    };
    Some(Stats {
        centers,
        probabilities,
        distances,
        objective,
    })
}

/// Builds the `k` output scenarios for a cluster assignment.
///
/// Returns `Ok(None)` when some cluster is empty.
pub fn build_output(
    scenarios: &ScenarioSet,
    ids: &[usize],
    spec: &ClusteringSpec,
) -> Result<Option<ClusterOutput>> {
    spec.validate(scenarios)?;
    if ids.len() != scenarios.len() {
        return Err(Error::DimensionMismatch {
            what: "cluster ids",
            expected: scenarios.len(),
            actual: ids.len(),
        });
    }
    if let Some(&bad) = ids.iter().find(|&&c| c >= spec.k) {
        return Err(Error::IndexOutOfRange { index: bad, len: spec.k });
    }
    let Some(stats) = cluster_stats(scenarios, ids, spec) else {
        return Ok(None);
    };
    let probabilities = stats.probabilities;
    Ok(Some(ClusterOutput {
        scenarios: ScenarioSet::new(stats.centers, Some(probabilities))?,
        distances: stats.distances,
        objective: stats.objective,
    }))
}

/// EA problem: minimize the clustering objective.
#[derive(Debug)]
pub struct ClusterProblem<'a> {
    scenarios: &'a ScenarioSet,
    spec: &'a ClusteringSpec,
}

impl<'a> ClusterProblem<'a> {
    pub fn new(scenarios: &'a ScenarioSet, spec: &'a ClusteringSpec) -> Result<Self> {
        spec.validate(scenarios)?;
        Ok(Self { scenarios, spec })
    }
}

impl Problem for ClusterProblem<'_> {
    type Genotype = ClusterChromosome;

    fn generate(&self, rng: &mut EaRng) -> ClusterChromosome {
        ClusterChromosome {
            genes: real::random_genes(self.scenarios.len(), rng),
        }
    }

    fn evaluate(&self, chromosome: &ClusterChromosome) -> Fitness {
        let ids = assign_clusters(chromosome, self.spec.k);
        cluster_stats(self.scenarios, &ids, self.spec)
            .map(|s| s.objective)
            .into()
    }

    fn crossover(&self, a: &ClusterChromosome, b: &ClusterChromosome, rng: &mut EaRng) -> ClusterChromosome {
        ClusterChromosome {
            genes: real::uniform_crossover(&a.genes, &b.genes, rng),
        }
    }

    fn mutate(&self, chromosome: &mut ClusterChromosome, rate: f64, rng: &mut EaRng) {
        real::flip_or_gaussian(&mut chromosome.genes, rate, rng);
    }
}

#[derive(Debug, Clone)]
pub struct ClusterResult {
    pub output: ClusterOutput,
    pub ids: Vec<usize>,
    pub chromosome: ClusterChromosome,
    pub log: Vec<GenerationRecord>,
}

/// Reduces `scenarios` to `spec.k` output scenarios with the EA.
pub fn generate_scenarios(
    scenarios: &ScenarioSet,
    spec: &ClusteringSpec,
    config: &EaConfig,
) -> Result<ClusterResult> {
    let problem = ClusterProblem::new(scenarios, spec)?;
    let run = ea::run(config, &problem)?;
    let chromosome = run.best.genotype;
    let ids = assign_clusters(&chromosome, spec.k);
    let output = build_output(scenarios, &ids, spec)?.ok_or(Error::NoValidIndividual {
        attempts: ea::MAX_INIT_ATTEMPTS,
    })?;
    Ok(ClusterResult {
        output,
        ids,
        chromosome,
        log: run.log,
    })
}
