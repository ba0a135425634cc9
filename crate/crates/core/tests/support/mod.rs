//! Brute-force oracles and fixtures shared by integration and acceptance tests.
//!
//! Everything here is written from scratch against the problem definitions
//! and deliberately avoids the library's own mapping and center code.

#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data")
}

pub const SIX_PATHS: [[f64; 2]; 6] = [
    [1.0, 1.2],
    [1.1, 0.9],
    [2.0, 2.5],
    [2.2, 2.1],
    [0.5, 0.2],
    [1.9, 3.0],
];

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

pub fn median(values: &[f64]) -> f64 {
    let v = sorted(values);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OracleCenter {
    Mean,
    Median,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OracleDistance {
    Abs,
    Squared,
}

fn center(values: &[f64], c: OracleCenter) -> f64 {
    match c {
        OracleCenter::Mean => mean(values),
        OracleCenter::Median => median(values),
    }
}

fn dist(a: f64, b: f64, d: OracleDistance) -> f64 {
    match d {
        OracleDistance::Abs => (a - b).abs(),
        OracleDistance::Squared => (a - b) * (a - b),
    }
}

/// Minimum univariate 2-clustering objective over all `2^s` assignments with
/// no empty cluster.
pub fn exhaustive_two_clustering(
    values: &[f64],
    probs: &[f64],
    c: OracleCenter,
    d: OracleDistance,
    weighted: bool,
) -> f64 {
    let s = values.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << s) - 1 {
        let mut total = 0.0;
        for side in [0, 1] {
            let members: Vec<usize> = (0..s).filter(|&i| ((mask >> i) & 1) as usize == side).collect();
            let vals: Vec<f64> = members.iter().map(|&i| values[i]).collect();
            let ctr = center(&vals, c);
            let dsum: f64 = vals.iter().map(|&v| dist(v, ctr, d)).sum();
            let p: f64 = members.iter().map(|&i| probs[i]).sum();
            total += if weighted { p * dsum } else { dsum };
        }
        best = best.min(total);
    }
    best
}

/// Tree distance of one explicit configuration for T = 3, or `None` when some
/// node is empty.
pub fn three_stage_distance(
    paths: &[[f64; 2]],
    probs: &[f64],
    terminal_of_path: &[usize],
    parent_of_terminal: &[usize],
    n2: usize,
    c: OracleCenter,
    d: OracleDistance,
) -> Option<f64> {
    let n3 = parent_of_terminal.len();
    let mut total = 0.0;
    let mut stage2 = vec![0.0; n2];
    for node in 0..n2 {
        let vals: Vec<f64> = (0..paths.len())
            .filter(|&i| parent_of_terminal[terminal_of_path[i]] == node)
            .map(|i| paths[i][0])
            .collect();
        if vals.is_empty() {
            return None;
        }
        stage2[node] = center(&vals, c);
    }
    let mut stage3 = vec![0.0; n3];
    for node in 0..n3 {
        let vals: Vec<f64> = (0..paths.len())
            .filter(|&i| terminal_of_path[i] == node)
            .map(|i| paths[i][1])
            .collect();
        if vals.is_empty() {
            return None;
        }
        stage3[node] = center(&vals, c);
    }
    for (i, path) in paths.iter().enumerate() {
        let t = terminal_of_path[i];
        let here = dist(path[0], stage2[parent_of_terminal[t]], d) + dist(path[1], stage3[t], d);
        total += probs[i] * here;
    }
    Some(total)
}

/// Minimum tree distance over every terminal assignment and parent map for T = 3.
pub fn exhaustive_three_stage(
    paths: &[[f64; 2]],
    probs: &[f64],
    n2: usize,
    n3: usize,
    c: OracleCenter,
    d: OracleDistance,
) -> f64 {
    let s = paths.len();
    let mut best = f64::INFINITY;
    let mut terminal = vec![0usize; s];
    let routings = n3.pow(s as u32);
    let parent_maps = n2.pow(n3 as u32);
    for r in 0..routings {
        let mut code = r;
        for t in terminal.iter_mut() {
            *t = code % n3;
            code /= n3;
        }
        for m in 0..parent_maps {
            let mut code = m;
            let parents: Vec<usize> = (0..n3)
                .map(|_| {
                    let p = code % n2;
                    code /= n2;
                    p
                })
                .collect();
            if let Some(v) = three_stage_distance(paths, probs, &terminal, &parents, n2, c, d) {
                best = best.min(v);
            }
        }
    }
    best
}

/// All ways to split `b` buckets into `parts` ordered non-negative counts.
pub fn compositions(b: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![b]];
    }
    (0..=b)
        .flat_map(|first| {
            compositions(b - first, parts - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// Best `mean - kappa * stddev` over every portfolio reachable with `b`
/// buckets spread over exactly `k` selected assets (zero counts allowed).
pub fn exhaustive_portfolio(rows: &[Vec<f64>], probs: &[f64], b: usize, k: usize, kappa: f64) -> f64 {
    let a = rows[0].len();
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << a) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let selected: Vec<usize> = (0..a).filter(|&i| (mask >> i) & 1 == 1).collect();
        for counts in compositions(b, k) {
            let mut x = vec![0.0; a];
            for (&asset, &c) in selected.iter().zip(&counts) {
                x[asset] = c as f64 / b as f64;
            }
            let outcomes: Vec<f64> = rows.iter().map(|r| r.iter().zip(&x).map(|(v, w)| v * w).sum()).collect();
            let m: f64 = outcomes.iter().zip(probs).map(|(o, p)| o * p).sum();
            let var: f64 = outcomes.iter().zip(probs).map(|(o, p)| p * (o - m) * (o - m)).sum();
            best = best.max(m - kappa * var.sqrt());
        }
    }
    best
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random univariate instance with `s` in `3..=8` and rounded values.
pub fn random_cluster_instance(seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let s = r.random_range(3..=8);
    let values: Vec<f64> = (0..s).map(|_| (r.random_range(-1.0..1.0) * 1000.0_f64).round() / 1000.0).collect();
    let weights: Vec<f64> = (0..s).map(|_| r.random_range(0.5..1.5)).collect();
    let total: f64 = weights.iter().sum();
    (values, weights.into_iter().map(|w| w / total).collect())
}

/// Scenario rows where asset 0 beats asset 1 in every scenario.
pub fn dominance_instance(seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    let s = r.random_range(2..=12);
    (0..s)
        .map(|_| {
            let other: f64 = r.random_range(-0.05..0.05);
            let edge: f64 = r.random_range(0.001..0.03);
            vec![other + edge, other]
        })
        .collect()
}
