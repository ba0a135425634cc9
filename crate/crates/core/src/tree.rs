//! Multi-stage scenario tree generation.
//!
//! A tree chromosome is a vector of genes in `[0, 1]`. The first `s` genes
//! route every input path to a terminal node, exactly like the single-stage
//! clustering. Then, working from the terminal stage towards the root, one
//! block of genes per stage assigns each node of that stage to a parent at the
//! stage above. Stage 2 nodes all hang off the root, so for a tree with
//! node counts `n = [n_2, ..., n_T]` the chromosome has
//! `s + n_3 + ... + n_T` genes.
//!
//! Each node's value is the center (median by default) of the values of all
//! paths routed through it, and its probability their summed probability.
//! A chromosome that leaves any node without paths does not describe a tree
//! of the requested shape and is rejected.

use serde::{Deserialize, Serialize};

use crate::distributions::{ScenarioPathMatrix, ScenarioTree, TreeNode};
use crate::ea::{self, real, EaConfig, EaRng, Fitness, GenerationRecord, Problem};
use crate::error::{Error, Result};
use crate::metric::{Center, Distance};

/// Desired node counts for stages `2..=T` (the root is implicit).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeShape {
    node_counts: Vec<usize>,
}

impl TreeShape {
    pub fn new(node_counts: Vec<usize>) -> Result<Self> {
        if node_counts.len() < 2 {
            return Err(Error::Config(
                "a tree shape needs at least two stages after the root".into(),
            ));
        }
        if node_counts.contains(&0) {
            return Err(Error::Config("every stage needs at least one node".into()));
        }
        Ok(Self { node_counts })
    }

    pub fn node_counts(&self) -> &[usize] {
        &self.node_counts
    }

    /// Number of stages `T`, root included.
    pub fn stages(&self) -> usize {
        self.node_counts.len() + 1
    }

    pub fn terminal_nodes(&self) -> usize {
        *self.node_counts.last().expect("non-empty shape")
    }

    /// Node count at `level` (level 0 is the root).
    pub fn at_level(&self, level: usize) -> usize {
        if level == 0 {
            1
        } else {
            self.node_counts[level - 1]
        }
    }

    /// Chromosome length for `paths` input paths.
    pub fn chromosome_len(&self, paths: usize) -> usize {
        paths + self.node_counts[1..].iter().sum::<usize>()
    }

    pub fn check_against(&self, paths: &ScenarioPathMatrix) -> Result<()> {
        if self.stages() != paths.stages() {
            return Err(Error::DimensionMismatch {
                what: "stages",
                expected: paths.stages(),
                actual: self.stages(),
            });
        }
        if let Some(&n) = self.node_counts.iter().find(|&&n| n > paths.len()) {
            return Err(Error::Config(format!(
                "stage with {n} nodes exceeds the {} input paths",
                paths.len()
            )));
        }
        Ok(())
    }
}

impl std::str::FromStr for TreeShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let counts = s
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad node count {part:?} in shape {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(counts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeSpec {
    pub distance: Distance,
    pub center: Center,
    /// Weight each path's distance by its probability.
    pub probability_weighted: bool,
}

impl Default for TreeSpec {
    fn default() -> Self {
        Self {
            distance: Distance::L1,
            center: Center::Median,
            probability_weighted: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeChromosome {
    pub genes: Vec<f64>,
}

/// Per-level node index of every path, or `None` if some node stays empty.
fn route(genes: &[f64], s: usize, shape: &TreeShape) -> Option<Vec<Vec<usize>>> {
    let depth = shape.stages();
    let mut nodes = vec![vec![0usize; s]; depth];
    let terminals = shape.terminal_nodes();
    let mut used = vec![false; terminals];
    for (i, &g) in genes[..s].iter().enumerate() {
        let t = real::bucket(g, terminals);
        nodes[depth - 1][i] = t;
        used[t] = true;
    }
    if used.contains(&false) {
        return None;
    }
    let mut offset = s;
    for level in (2..depth).rev() {
        let count = shape.at_level(level);
        let parents = shape.at_level(level - 1);
        let block = &genes[offset..offset + count];
        offset += count;
        let parent_of: Vec<usize> = block.iter().map(|&g| real::bucket(g, parents)).collect();
        let mut used = vec![false; parents];
        for &p in &parent_of {
            used[p] = true;
        }
        if used.contains(&false) {
            return None;
        }
        for i in 0..s {
            nodes[level - 1][i] = parent_of[nodes[level][i]];
        }
    }
    Some(nodes)
}

/// Maps a chromosome onto a tree of the given shape.
///
/// Returns `Ok(None)` when the chromosome leaves a node without input paths.
pub fn map_to_tree(
    chromosome: &TreeChromosome,
    paths: &ScenarioPathMatrix,
    shape: &TreeShape,
    center: Center,
) -> Result<Option<ScenarioTree>> {
    shape.check_against(paths)?;
    let s = paths.len();
    let expected = shape.chromosome_len(s);
    if chromosome.genes.len() != expected {
        return Err(Error::DimensionMismatch {
            what: "genes",
            expected,
            actual: chromosome.genes.len(),
        });
    }
    let Some(mut nodes) = route(&chromosome.genes, s, shape) else {
        return Ok(None);
    };

    let depth = shape.stages();
    let p = paths.probabilities();
    let mut levels = Vec::with_capacity(depth);
    levels.push(vec![TreeNode {
        value: paths.root_value(),
        probability: p.iter().sum(),
        parent: None,
    }]);
    let mut values = Vec::new();
    for level in 1..depth {
        let count = shape.at_level(level);
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
        let mut parent = vec![0usize; count];
        for i in 0..s {
            let node = nodes[level][i];
            members[node].push(i);
            parent[node] = if level == 1 { 0 } else { nodes[level - 1][i] };
        }
        let stage: Vec<TreeNode> = members
            .iter()
            .zip(parent)
            .map(|(m, parent)| {
                values.clear();
                values.extend(m.iter().map(|&i| paths.value(i, level)));
                TreeNode {
                    value: center.of(&mut values),
                    probability: m.iter().map(|&i| p[i]).sum(),
                    parent: Some(parent),
                }
            })
            .collect();
        levels.push(stage);
    }
    let routing = nodes.pop().expect("at least one level");
    ScenarioTree::with_routing(levels, routing).map(Some)
}

/// Distance between the input paths and the tree trajectories they are routed through.
///
/// Sums `dist(path value, node value)` over stages `2..=T` for every path,
/// weighted by the path probability when `probability_weighted` is set.
pub fn tree_distance(
    tree: &ScenarioTree,
    paths: &ScenarioPathMatrix,
    distance: Distance,
    probability_weighted: bool,
) -> Result<f64> {
    if tree.stages() != paths.stages() {
        return Err(Error::DimensionMismatch {
            what: "stages",
            expected: paths.stages(),
            actual: tree.stages(),
        });
    }
    if tree.routing().len() != paths.len() {
        return Err(Error::MalformedTree(format!(
            "{} of {} paths are routed to a node",
            tree.routing().len(),
            paths.len()
        )));
    }
    let mut total = 0.0;
    for (i, &terminal) in tree.routing().iter().enumerate() {
        let trajectory = tree.trajectory(terminal);
        let d: f64 = (1..tree.stages())
            .map(|level| distance.scalar(paths.value(i, level), tree.level(level)[trajectory[level]].value))
            .sum();
        total += if probability_weighted { paths.probabilities()[i] * d } else { d };
    }
    Ok(total)
}

/// EA problem: minimize the tree distance over valid trees.
#[derive(Debug)]
pub struct TreeProblem<'a> {
    paths: &'a ScenarioPathMatrix,
    shape: &'a TreeShape,
    spec: TreeSpec,
}

impl<'a> TreeProblem<'a> {
    pub fn new(paths: &'a ScenarioPathMatrix, shape: &'a TreeShape, spec: TreeSpec) -> Result<Self> {
        shape.check_against(paths)?;
        Ok(Self { paths, shape, spec })
    }

    pub fn objective(&self, chromosome: &TreeChromosome) -> Result<Option<f64>> {
        match map_to_tree(chromosome, self.paths, self.shape, self.spec.center)? {
            None => Ok(None),
            Some(tree) => tree_distance(&tree, self.paths, self.spec.distance, self.spec.probability_weighted).map(Some),
        }
    }
}

impl Problem for TreeProblem<'_> {
    type Genotype = TreeChromosome;

    fn generate(&self, rng: &mut EaRng) -> TreeChromosome {
        TreeChromosome {
            genes: real::random_genes(self.shape.chromosome_len(self.paths.len()), rng),
        }
    }

    fn evaluate(&self, chromosome: &TreeChromosome) -> Fitness {
        self.objective(chromosome).ok().flatten().into()
    }

    fn crossover(&self, a: &TreeChromosome, b: &TreeChromosome, rng: &mut EaRng) -> TreeChromosome {
        TreeChromosome {
            genes: real::uniform_crossover(&a.genes, &b.genes, rng),
        }
    }

    fn mutate(&self, chromosome: &mut TreeChromosome, rate: f64, rng: &mut EaRng) {
        real::flip_or_gaussian(&mut chromosome.genes, rate, rng);
    }
}

#[derive(Debug, Clone)]
pub struct TreeResult {
    pub tree: ScenarioTree,
    pub objective: f64,
    pub chromosome: TreeChromosome,
    pub log: Vec<GenerationRecord>,
}

/// Generates a scenario tree of the given shape with the EA.
pub fn generate_tree(
    paths: &ScenarioPathMatrix,
    shape: &TreeShape,
    spec: TreeSpec,
    config: &EaConfig,
) -> Result<TreeResult> {
    let problem = TreeProblem::new(paths, shape, spec)?;
    let no_tree = || Error::NoValidTree {
        shape: shape.node_counts().to_vec(),
        scenarios: paths.len(),
    };
    let run = match ea::run(config, &problem) {
        Err(Error::NoValidIndividual { .. }) => return Err(no_tree()),
        other => other?,
    };
    let chromosome = run.best.genotype;
    let tree = map_to_tree(&chromosome, paths, shape, spec.center)?.ok_or_else(no_tree)?;
    let objective = tree_distance(&tree, paths, spec.distance, spec.probability_weighted)?;
    Ok(TreeResult {
        tree,
        objective,
        chromosome,
        log: run.log,
    })
}
