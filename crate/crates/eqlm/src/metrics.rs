//! Learning-curve statistics: area under the curve, final-window mean,
//! Student-t confidence intervals (with an optional percentile-bootstrap
//! mode), Welch's two-tailed t-test, and the tuning loss used for
//! hyperparameter evaluation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Episodes-long window the headline "final reward" metric averages over.
pub const FINAL_WINDOW: usize = 100;

/// Per-episode total rewards for one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    returns: Vec<f64>,
}

impl LearningCurve {
    pub fn new(returns: Vec<f64>) -> Result<Self> {
        if !returns.iter().all(|r| r.is_finite()) {
            return Err(Error::NonFinite("LearningCurve"));
        }
        Ok(LearningCurve { returns })
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }
}

/// Mean with a two-sided confidence interval over a set of runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSetSummary {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub std: f64,
    pub n_runs: usize,
}

/// Welch two-sample t-test outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    /// Test statistic.
    pub t: f64,
    /// Two-tailed p-value.
    pub p: f64,
    /// Welch-Satterthwaite degrees of freedom.
    pub df: f64,
}

/// Area under the learning curve: the per-episode returns summed as
/// unit-width rectangles, i.e. total accumulated reward.
pub fn auc(curve: &LearningCurve) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::InvalidInput("auc of an empty curve".to_string()));
    }
    Ok(curve.returns.iter().sum())
}

/// Mean return over the final `window` episodes.
pub fn final_mean(curve: &LearningCurve, window: usize) -> Result<f64> {
    if window == 0 {
        return Err(Error::InvalidInput("final_mean window must be >= 1".to_string()));
    }
    if curve.len() < window {
        return Err(Error::InvalidInput(format!(
            "curve has {} episodes, final_mean needs {window}",
            curve.len()
        )));
    }
    let tail = &curve.returns[curve.len() - window..];
    Ok(tail.iter().sum::<f64>() / window as f64)
}

fn mean_and_sample_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn check_samples(op: &str, samples: &[f64], min: usize) -> Result<()> {
    if samples.len() < min {
        return Err(Error::InvalidInput(format!(
            "{op} needs at least {min} samples, got {}",
            samples.len()
        )));
    }
    if !samples.iter().all(|s| s.is_finite()) {
        return Err(Error::NonFinite("samples"));
    }
    Ok(())
}

fn check_level(level: f64) -> Result<()> {
    if !(0.0..1.0).contains(&level) {
        return Err(Error::InvalidParameter {
            name: "level",
            reason: format!("confidence level must be in [0, 1), got {level}"),
        });
    }
    Ok(())
}

/// Two-sided Student-t quantile at probability `p` with `df` degrees of
/// freedom.
fn t_quantile(p: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .expect("df >= 1 by construction")
        .inverse_cdf(p)
}

/// Sample mean with a two-sided Student-t confidence interval
/// `mean +/- t_{(1+level)/2, n-1} * s / sqrt(n)`.
pub fn mean_ci(samples: &[f64], level: f64) -> Result<RunSetSummary> {
    check_samples("mean_ci", samples, 2)?;
    check_level(level)?;
    let n = samples.len();
    let (mean, std) = mean_and_sample_std(samples);
    let half = if std == 0.0 {
        0.0
    } else {
        t_quantile(0.5 + level / 2.0, (n - 1) as f64) * std / (n as f64).sqrt()
    };
    Ok(RunSetSummary {
        mean,
        ci_low: mean - half,
        ci_high: mean + half,
        std,
        n_runs: n,
    })
}

/// Percentile-bootstrap interval for the mean: `resamples` with-replacement
/// resamples drawn from a seeded generator, interval at the
/// `(1 -/+ level)/2` empirical quantiles. Deterministic for a given seed.
pub fn mean_ci_bootstrap(samples: &[f64], level: f64, resamples: usize, seed: u64) -> Result<RunSetSummary> {
    check_samples("mean_ci_bootstrap", samples, 2)?;
    check_level(level)?;
    if resamples < 2 {
        return Err(Error::InvalidParameter {
            name: "resamples",
            reason: "need at least 2 bootstrap resamples".to_string(),
        });
    }
    let n = samples.len();
    let (mean, std) = mean_and_sample_std(samples);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| {
            let mut acc = 0.0;
            for _ in 0..n {
                acc += samples[rng.random_range(0..n)];
            }
            acc / n as f64
        })
        .collect();
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |q: f64| {
        let idx = (q * (resamples - 1) as f64).round() as usize;
        means[idx.min(resamples - 1)]
    };
    Ok(RunSetSummary {
        mean,
        ci_low: quantile((1.0 - level) / 2.0),
        ci_high: quantile(0.5 + level / 2.0),
        std,
        n_runs: n,
    })
}

/// Welch's two-sample t-test with a two-tailed p-value.
///
/// Variances are not pooled; degrees of freedom follow the
/// Welch-Satterthwaite approximation. Identical samples give `t = 0`,
/// `p = 1`.
pub fn t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    check_samples("t_test", a, 2)?;
    check_samples("t_test", b, 2)?;
    let (mean_a, std_a) = mean_and_sample_std(a);
    let (mean_b, std_b) = mean_and_sample_std(b);
    let na = a.len() as f64;
    let nb = b.len() as f64;
    let var_term_a = std_a * std_a / na;
    let var_term_b = std_b * std_b / nb;
    let denom_sq = var_term_a + var_term_b;

    if denom_sq == 0.0 {
        // Both samples are constant: equal means are indistinguishable,
        // unequal means are trivially separated.
        return Ok(if mean_a == mean_b {
            TTestResult { t: 0.0, p: 1.0, df: na + nb - 2.0 }
        } else {
            TTestResult {
                t: (mean_a - mean_b).signum() * f64::INFINITY,
                p: 0.0,
                df: na + nb - 2.0,
            }
        });
    }

    let t = (mean_a - mean_b) / denom_sq.sqrt();
    let df = denom_sq * denom_sq
        / (var_term_a * var_term_a / (na - 1.0) + var_term_b * var_term_b / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Numerical {
        op: "t_test",
        detail: e.to_string(),
    })?;
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok(TTestResult { t, p, df })
}

/// Hyperparameter-tuning loss over a set of evaluation runs: the upper
/// bound of the 95% confidence interval of the mean negated AUC. Lower is
/// better; the upper bound makes it a conservative worst-case estimate.
pub fn tuning_loss(curves: &[LearningCurve]) -> Result<f64> {
    if curves.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "tuning_loss needs at least 2 curves, got {}",
            curves.len()
        )));
    }
    let losses: Vec<f64> = curves.iter().map(auc).collect::<Result<Vec<_>>>()?
        .into_iter()
        .map(|a| -a)
        .collect();
    Ok(mean_ci(&losses, 0.95)?.ci_high)
}
