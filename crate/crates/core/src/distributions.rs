//! Discrete probability objects shared by every solver.
//!
//! All types are immutable after construction. Probability vectors are held
//! behind an [`Arc`] so that a [`LossDistribution`] can share the vector of the
//! [`ScenarioSet`] it was derived from.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Probabilities must sum to one within this tolerance.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// Inputs whose probability sum is off by at most this much are renormalized.
pub const RENORMALIZE_THRESHOLD: f64 = 1e-6;

/// Checks a probability vector and renormalizes it if it is slightly off.
///
/// Returns `true` when the vector was rescaled. A sum that misses one by more
/// than [`RENORMALIZE_THRESHOLD`] is rejected.
pub fn normalize_probabilities(probabilities: &mut [f64]) -> Result<bool> {
    for (row, &p) in probabilities.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::BadProbability { row, value: p });
        }
    }
    let sum: f64 = probabilities.iter().sum();
    let off = (sum - 1.0).abs();
    if off <= PROBABILITY_TOLERANCE {
        return Ok(false);
    }
    if off > RENORMALIZE_THRESHOLD {
        return Err(Error::ProbabilitySum {
            sum,
            threshold: RENORMALIZE_THRESHOLD,
        });
    }
    log::warn!("probabilities sum to {sum}; renormalizing");
    for p in probabilities.iter_mut() {
        *p /= sum;
    }
    Ok(true)
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn checked_probabilities(n: usize, probabilities: Option<Vec<f64>>) -> Result<Arc<[f64]>> {
    let mut p = probabilities.unwrap_or_else(|| uniform(n));
    if p.len() != n {
        return Err(Error::DimensionMismatch {
            what: "probabilities",
            expected: n,
            actual: p.len(),
        });
    }
    normalize_probabilities(&mut p)?;
    Ok(p.into())
}

fn flatten(rows: Vec<Vec<f64>>, min_cols: usize, what: &'static str) -> Result<(Vec<f64>, usize)> {
    let cols = rows.first().map(Vec::len).unwrap_or(0);
    if rows.is_empty() {
        return Err(Error::Config(format!("{what}: at least one row is required")));
    }
    if cols < min_cols {
        return Err(Error::Config(format!(
            "{what}: at least {min_cols} column(s) required, got {cols}"
        )));
    }
    let mut flat = Vec::with_capacity(rows.len() * cols);
    for (row, values) in rows.into_iter().enumerate() {
        if values.len() != cols {
            return Err(Error::DimensionMismatch {
                what: "columns",
                expected: cols,
                actual: values.len(),
            });
        }
        if let Some(column) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row, column });
        }
        flat.extend(values);
    }
    Ok((flat, cols))
}

/// A discrete single-stage multivariate distribution: `s` scenarios over `a`
/// dimensions, each scenario carrying a probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    values: Vec<f64>,
    dims: usize,
    probabilities: Arc<[f64]>,
}

impl ScenarioSet {
    /// Builds a scenario set from rows. Missing probabilities default to uniform.
    pub fn new(rows: Vec<Vec<f64>>, probabilities: Option<Vec<f64>>) -> Result<Self> {
        let (values, dims) = flatten(rows, 1, "scenario set")?;
        let probabilities = checked_probabilities(values.len() / dims, probabilities)?;
        Ok(Self {
            values,
            dims,
            probabilities,
        })
    }

    /// Univariate convenience constructor.
    pub fn univariate(values: &[f64], probabilities: Option<Vec<f64>>) -> Result<Self> {
        Self::new(values.iter().map(|&v| vec![v]).collect(), probabilities)
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of assets (columns).
    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.dims..(j + 1) * self.dims]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dims)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub(crate) fn shared_probabilities(&self) -> Arc<[f64]> {
        Arc::clone(&self.probabilities)
    }
}

/// Discrete profit-and-loss distribution of a portfolio.
///
/// Outcomes are profits: a positive outcome is a gain. Risk measures that talk
/// about losses work on the negated outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct LossDistribution {
    outcomes: Vec<f64>,
    probabilities: Arc<[f64]>,
}

impl LossDistribution {
    pub fn new(outcomes: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::Config("loss distribution needs at least one outcome".into()));
        }
        if let Some(row) = outcomes.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row, column: 0 });
        }
        let probabilities = checked_probabilities(outcomes.len(), Some(probabilities))?;
        Ok(Self {
            outcomes,
            probabilities,
        })
    }

    /// Equally likely outcomes.
    pub fn uniform(outcomes: Vec<f64>) -> Result<Self> {
        let p = uniform(outcomes.len().max(1));
        Self::new(outcomes, p)
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Iterates `(outcome, probability)` pairs.
    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.outcomes
            .iter()
            .copied()
            .zip(self.probabilities.iter().copied())
    }
}

/// Computes the P&L distribution `outcome_j = Σ_i x_i S[j, i]`.
///
/// `portfolio` must have one weight per asset and the weights must sum to one.
pub fn loss_distribution(portfolio: &[f64], scenarios: &ScenarioSet) -> Result<LossDistribution> {
    if portfolio.len() != scenarios.dims() {
        return Err(Error::DimensionMismatch {
            what: "assets",
            expected: scenarios.dims(),
            actual: portfolio.len(),
        });
    }
    let sum: f64 = portfolio.iter().sum();
    if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
        return Err(Error::Budget { sum });
    }
    let outcomes = scenarios
        .rows()
        .map(|row| row.iter().zip(portfolio).map(|(r, x)| r * x).sum())
        .collect();
    Ok(LossDistribution {
        outcomes,
        probabilities: scenarios.shared_probabilities(),
    })
}

/// Sampled multi-stage scenario paths.
///
/// Each row holds the values of one path at stages `2..=T`; stage 1 is the
/// deterministic root carrying `root_value`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioPathMatrix {
    values: Vec<f64>,
    cols: usize,
    probabilities: Arc<[f64]>,
    root_value: f64,
}

impl ScenarioPathMatrix {
    pub fn new(rows: Vec<Vec<f64>>, probabilities: Option<Vec<f64>>, root_value: f64) -> Result<Self> {
        let (values, cols) = flatten(rows, 2, "scenario path matrix")?;
        if !root_value.is_finite() {
            return Err(Error::Config("root value must be finite".into()));
        }
        let probabilities = checked_probabilities(values.len() / cols, probabilities)?;
        Ok(Self {
            values,
            cols,
            probabilities,
            root_value,
        })
    }

    /// Number of paths `s`.
    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of stages `T`, root included.
    pub fn stages(&self) -> usize {
        self.cols + 1
    }

    /// Values of path `i` at stages `2..=T`.
    pub fn path(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    /// Value of path `i` at tree level `level` (level 0 is the root).
    pub fn value(&self, i: usize, level: usize) -> f64 {
        if level == 0 {
            self.root_value
        } else {
            self.values[i * self.cols + level - 1]
        }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn root_value(&self) -> f64 {
        self.root_value
    }
}

/// One node of a [`ScenarioTree`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeNode {
    pub value: f64,
    pub probability: f64,
    /// Index into the previous level; `None` only for the root.
    pub parent: Option<usize>,
}

/// A stage-indexed scenario tree.
///
/// Levels are zero-based: level 0 holds the root (stage 1), level `T - 1` the
/// terminal nodes. Every non-root node has exactly one parent, so each node's
/// history is its unique path back to the root.
///
/// A tree produced from input paths also remembers which terminal node each
/// input path was routed to.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTree {
    levels: Vec<Vec<TreeNode>>,
    routing: Vec<usize>,
}

impl ScenarioTree {
    /// Builds a tree and checks its structural invariants.
    pub fn new(levels: Vec<Vec<TreeNode>>) -> Result<Self> {
        Self::with_routing(levels, Vec::new())
    }

    /// Builds a tree together with the terminal node index of every input path.
    pub fn with_routing(levels: Vec<Vec<TreeNode>>, routing: Vec<usize>) -> Result<Self> {
        let tree = Self { levels, routing };
        tree.validate()?;
        Ok(tree)
    }

    /// Checks the structural invariants enforced by the constructors.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::MalformedTree(m));
        let Some(root_level) = self.levels.first() else {
            return bad("no levels".into());
        };
        if root_level.len() != 1 {
            return bad(format!("root level has {} nodes", root_level.len()));
        }
        let root = root_level[0];
        if root.parent.is_some() || (root.probability - 1.0).abs() > PROBABILITY_TOLERANCE {
            return bad("root must have probability 1 and no parent".into());
        }
        for (level, nodes) in self.levels.iter().enumerate() {
            if nodes.is_empty() {
                return bad(format!("level {level} is empty"));
            }
            let mut total = 0.0;
            for (i, node) in nodes.iter().enumerate() {
                if !node.value.is_finite() || !node.probability.is_finite() || node.probability < 0.0 {
                    return bad(format!("node {i} at level {level} has a bad value or probability"));
                }
                total += node.probability;
                if level > 0 {
                    match node.parent {
                        Some(p) if p < self.levels[level - 1].len() => {}
                        _ => return bad(format!("node {i} at level {level} has no valid parent")),
                    }
                }
            }
            if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
                return bad(format!("level {level} probabilities sum to {total}"));
            }
        }
        for level in 1..self.levels.len() {
            let mut child_mass = vec![0.0; self.levels[level - 1].len()];
            for node in &self.levels[level] {
                child_mass[node.parent.unwrap_or_default()] += node.probability;
            }
            for (i, (parent, mass)) in self.levels[level - 1].iter().zip(&child_mass).enumerate() {
                if (parent.probability - mass).abs() > PROBABILITY_TOLERANCE {
                    return bad(format!(
                        "node {i} at level {} has probability {} but its children carry {mass}",
                        level - 1,
                        parent.probability
                    ));
                }
            }
        }
        let terminals = self.levels.last().map(Vec::len).unwrap_or(0);
        if let Some(&bad_route) = self.routing.iter().find(|&&r| r >= terminals) {
            return bad(format!("path routed to missing terminal node {bad_route}"));
        }
        Ok(())
    }

    /// Number of stages `T`.
    pub fn stages(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Vec<TreeNode>] {
        &self.levels
    }

    pub fn level(&self, level: usize) -> &[TreeNode] {
        &self.levels[level]
    }

    /// Node counts per level, root included.
    pub fn node_counts(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }

    pub fn node_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    /// Terminal node index for each input path; empty if the tree was not built from paths.
    pub fn routing(&self) -> &[usize] {
        &self.routing
    }

    /// Node indices from the root (level 0) down to the given terminal node.
    pub fn trajectory(&self, terminal: usize) -> Vec<usize> {
        let depth = self.levels.len();
        let mut out = vec![0; depth];
        let mut idx = terminal;
        for level in (0..depth).rev() {
            out[level] = idx;
            idx = self.levels[level][idx].parent.unwrap_or(0);
        }
        out
    }
}
