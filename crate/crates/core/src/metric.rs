//! Distances and node-set centers shared by the clustering and tree solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    /// Weighted sum of absolute differences.
    #[default]
    L1,
    /// Weighted sum of squared differences.
    L2,
}

impl Distance {
    pub fn between(self, a: &[f64], b: &[f64], weights: Option<&[f64]>) -> f64 {
        let term = |d: f64| match self {
            Distance::L1 => d.abs(),
            Distance::L2 => d * d,
        };
        match weights {
            Some(w) => a.iter().zip(b).zip(w).map(|((x, y), w)| w * term(x - y)).sum(),
            None => a.iter().zip(b).map(|(x, y)| term(x - y)).sum(),
        }
    }

    pub fn scalar(self, a: f64, b: f64) -> f64 {
        match self {
            Distance::L1 => (a - b).abs(),
            Distance::L2 => (a - b) * (a - b),
        }
    }
}

impl std::str::FromStr for Distance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(Distance::L1),
            "l2" => Ok(Distance::L2),
            _ => Err(Error::Config(format!("unknown distance {s:?}; expected l1 or l2"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Center {
    Mean,
    /// Middle value; the average of the two middle values for even counts.
    Median,
}

impl Center {
    /// Center of a non-empty slice. The slice may be reordered.
    pub fn of(self, values: &mut [f64]) -> f64 {
        debug_assert!(!values.is_empty());
        match self {
            Center::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Center::Median => {
                let n = values.len();
                let mid = n / 2;
                let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
                let upper = *upper;
                if n % 2 == 1 {
                    upper
                } else {
                    let lower_max = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    0.5 * (lower_max + upper)
                }
            }
        }
    }
}

impl std::str::FromStr for Center {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Center::Mean),
            "median" => Ok(Center::Median),
            _ => Err(Error::Config(format!("unknown center {s:?}; expected mean or median"))),
        }
    }
}

pub(crate) fn check_weights(weights: Option<&[f64]>, dims: usize) -> Result<()> {
    if let Some(w) = weights {
        if w.len() != dims {
            return Err(Error::DimensionMismatch {
                what: "dimension weights",
                expected: dims,
                actual: w.len(),
            });
        }
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config("dimension weights must be finite and non-negative".into()));
        }
    }
    Ok(())
}
