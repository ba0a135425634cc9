//! Probability functionals over discrete P&L distributions.
//!
//! Sign convention: outcomes are profits. Tail risk (CVaR) is measured on the
//! losses `-outcome`, so a larger CVaR means a worse left tail.

use serde::{Deserialize, Serialize};

use crate::distributions::LossDistribution;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RiskMeasure {
    StdDev,
    Variance,
    /// Mean absolute deviation around the expectation.
    Mad,
    /// Expected loss in the worst `alpha` probability tail.
    Cvar { alpha: f64 },
}

impl RiskMeasure {
    pub fn validate(&self) -> Result<()> {
        if let RiskMeasure::Cvar { alpha } = *self {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::Config(format!("CVaR alpha must lie in (0, 1), got {alpha}")));
            }
        }
        Ok(())
    }
}

/// Risk–return trade-off: maximize `E(l) - kappa * risk(l)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub measure: RiskMeasure,
    pub kappa: f64,
}

impl ObjectiveSpec {
    pub fn new(measure: RiskMeasure, kappa: f64) -> Result<Self> {
        let spec = Self { measure, kappa };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::Config(format!("kappa must be a finite non-negative number, got {}", self.kappa)));
        }
        self.measure.validate()
    }
}

pub fn expectation(l: &LossDistribution) -> f64 {
    l.atoms().map(|(o, p)| o * p).sum()
}

pub fn variance(l: &LossDistribution) -> f64 {
    let mean = expectation(l);
    l.atoms().map(|(o, p)| p * (o - mean) * (o - mean)).sum()
}

pub fn std_dev(l: &LossDistribution) -> f64 {
    variance(l).sqrt()
}

pub fn mean_absolute_deviation(l: &LossDistribution) -> f64 {
    let mean = expectation(l);
    l.atoms().map(|(o, p)| p * (o - mean).abs()).sum()
}

/// Conditional value-at-risk of the losses `-outcome` at tail probability `alpha`.
///
/// Outcomes are sorted from worst to best and their probabilities are summed
/// until the tail mass reaches `alpha`; the atom straddling the boundary only
/// contributes the fraction of its probability that still fits.
pub fn cvar(l: &LossDistribution, alpha: f64) -> Result<f64> {
    RiskMeasure::Cvar { alpha }.validate()?;
    let mut atoms: Vec<(f64, f64)> = l.atoms().collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut mass = 0.0;
    let mut tail = 0.0;
    for (outcome, p) in atoms {
        let take = p.min(alpha - mass);
        if take <= 0.0 {
            break;
        }
        tail += take * -outcome;
        mass += take;
    }
    Ok(tail / alpha)
}

pub fn risk(measure: &RiskMeasure, l: &LossDistribution) -> Result<f64> {
    Ok(match *measure {
        RiskMeasure::StdDev => std_dev(l),
        RiskMeasure::Variance => variance(l),
        RiskMeasure::Mad => mean_absolute_deviation(l),
        RiskMeasure::Cvar { alpha } => cvar(l, alpha)?,
    })
}

/// `E(l) - kappa * risk(l)`; larger is better.
pub fn weighted_objective(spec: &ObjectiveSpec, l: &LossDistribution) -> Result<f64> {
    Ok(expectation(l) - spec.kappa * risk(&spec.measure, l)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const ALL: [RiskMeasure; 4] = [
        RiskMeasure::StdDev,
        RiskMeasure::Variance,
        RiskMeasure::Mad,
        RiskMeasure::Cvar { alpha: 0.25 },
    ];

    fn two_point() -> LossDistribution {
        LossDistribution::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn expectation_examples() {
        let l = LossDistribution::new(vec![1.0; 3], vec![1.0 / 3.0; 3]).unwrap();
        assert_abs_diff_eq!(expectation(&l), 1.0, epsilon = 1e-15);

        let ten = LossDistribution::uniform(vec![
            0.017, -0.023, -0.008, -0.022, -0.019, 0.024, 0.016, -0.006, 0.032, -0.023,
        ])
        .unwrap();
        // Hand sum: 0.089 - 0.101 = -0.012, times 0.1.
        assert_abs_diff_eq!(expectation(&ten), -0.0012, epsilon = 1e-15);

        let sym = LossDistribution::new(vec![2.0, -2.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(expectation(&sym), 0.0);
    }

    #[test]
    fn constant_distribution_has_no_dispersion() {
        let l = LossDistribution::uniform(vec![0.7; 5]).unwrap();
        for m in [RiskMeasure::StdDev, RiskMeasure::Variance, RiskMeasure::Mad] {
            assert_abs_diff_eq!(risk(&m, &l).unwrap(), 0.0, epsilon = 1e-15);
        }
        // CVaR is a loss level, not a dispersion: a sure profit of 0.7 is a loss of -0.7.
        assert_abs_diff_eq!(cvar(&l, 0.25).unwrap(), -0.7, epsilon = 1e-15);
        let zero = LossDistribution::uniform(vec![0.0; 5]).unwrap();
        assert_eq!(cvar(&zero, 0.25).unwrap(), 0.0);
    }

    #[test]
    fn two_point_dispersion() {
        let l = two_point();
        assert_abs_diff_eq!(variance(&l), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(std_dev(&l), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mean_absolute_deviation(&l), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn cvar_worst_third() {
        let l = LossDistribution::uniform(vec![-1.0, 0.0, 3.0]).unwrap();
        assert_abs_diff_eq!(cvar(&l, 1.0 / 3.0).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cvar_fractional_boundary_atom() {
        // Tail of mass 0.5 takes all of -1 (p = 1/3) and 1/6 of the 0 atom.
        let l = LossDistribution::uniform(vec![3.0, -1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(cvar(&l, 0.5).unwrap(), (1.0 / 3.0) / 0.5, epsilon = 1e-12);
    }

    #[test]
    fn cvar_alpha_out_of_range() {
        let l = two_point();
        for alpha in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(cvar(&l, alpha), Err(Error::Config(_))));
        }
    }

    #[test]
    fn objective_examples() {
        let l = two_point();
        let zero = ObjectiveSpec::new(RiskMeasure::StdDev, 0.0).unwrap();
        assert_eq!(weighted_objective(&zero, &l).unwrap(), expectation(&l));

        let two = ObjectiveSpec::new(RiskMeasure::StdDev, 2.0).unwrap();
        assert_abs_diff_eq!(weighted_objective(&two, &l).unwrap(), -2.0, epsilon = 1e-15);

        let c = LossDistribution::uniform(vec![0.3; 4]).unwrap();
        for kappa in [0.0, 0.5, 10.0] {
            let spec = ObjectiveSpec::new(RiskMeasure::Mad, kappa).unwrap();
            assert_abs_diff_eq!(weighted_objective(&spec, &c).unwrap(), 0.3, epsilon = 1e-15);
        }
    }

    #[test]
    fn negative_kappa_is_rejected() {
        assert!(ObjectiveSpec::new(RiskMeasure::Variance, -1.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dist() -> impl Strategy<Value = LossDistribution> {
            (1usize..8).prop_flat_map(|n| {
                (
                    prop::collection::vec(-10.0f64..10.0, n),
                    prop::collection::vec(0.05f64..1.0, n),
                )
                    .prop_map(|(o, w)| {
                        let total: f64 = w.iter().sum();
                        LossDistribution::new(o, w.into_iter().map(|v| v / total).collect()).unwrap()
                    })
            })
        }

        proptest! {
            #[test]
            fn permutation_leaves_functionals_unchanged(l in dist(), seed in any::<u64>()) {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let mut idx: Vec<usize> = (0..l.len()).collect();
                idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                let perm = LossDistribution::new(
                    idx.iter().map(|&i| l.outcomes()[i]).collect(),
                    idx.iter().map(|&i| l.probabilities()[i]).collect(),
                ).unwrap();
                prop_assert!((expectation(&l) - expectation(&perm)).abs() < 1e-9);
                for m in ALL {
                    prop_assert!((risk(&m, &l).unwrap() - risk(&m, &perm).unwrap()).abs() < 1e-9);
                }
            }
        }
    }
}
