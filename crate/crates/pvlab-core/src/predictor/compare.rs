use alloc::format;
use alloc::vec::Vec;

use super::{evaluation_from_errors, fit_linear, squared_errors, Dataset, Evaluation, LinearPredictor};
use crate::context::Context;
use crate::error::{invalid, Result};
use crate::gauss::{build_joint, conditional_error, sample_chain, GaussianSource, JointGaussian};
use crate::markov::ChainKind;
use crate::rng::RngSpec;
use crate::stats::MeanEstimate;

/// A Gaussian source pushed through a Markov noising chain.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChain {
    pub source: GaussianSource,
    pub kind: ChainKind,
}

impl GaussianChain {
    pub fn new(source: GaussianSource, kind: ChainKind) -> Self {
        Self { source, kind }
    }

    pub fn n_frames(&self) -> usize {
        self.kind.n_frames()
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn joint(&self) -> Result<JointGaussian> {
        build_joint(&self.source, &self.kind, self.n_frames())
    }
}

/// Linear predictors of `x_T` at two context sizes, fitted and tested on
/// the same draws.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextComparison {
    pub k_small: usize,
    pub k_large: usize,
    pub small: Evaluation,
    pub large: Evaluation,
    pub oracle_small: f64,
    pub oracle_large: f64,
    /// `MSE(k_large) − MSE(k_small)` on the shared test set.
    pub difference: f64,
    /// Standard error of the paired per-sample difference.
    pub difference_std_error: f64,
    pub predictors: (LinearPredictor, LinearPredictor),
}

impl ContextComparison {
    /// Four standard errors of the paired difference.
    pub fn slack(&self) -> f64 {
        4.0 * self.difference_std_error
    }

    pub fn oracle_gap(&self) -> f64 {
        self.oracle_small - self.oracle_large
    }

    /// Larger context beats smaller beyond the slack.
    pub fn strictly_improves(&self) -> bool {
        self.difference < -self.slack()
    }

    pub fn indistinguishable(&self) -> bool {
        self.difference.abs() <= self.slack()
    }
}

/// Training draws come from `rng.child(0)` and test draws from
/// `rng.child(1)`.
pub fn compare_context_sizes(
    chain: &GaussianChain,
    k_small: usize,
    k_large: usize,
    n_train: usize,
    n_test: usize,
    ridge: f64,
    rng: RngSpec,
) -> Result<ContextComparison> {
    if k_small == 0 || k_small > k_large || k_large >= chain.n_frames() {
        return invalid(format!(
            "context sizes must satisfy 1 <= k1 <= k2 < T = {}, got {k_small}, {k_large}",
            chain.n_frames()
        ));
    }
    let min_train = k_large * chain.dim() + 1;
    if n_train < min_train || n_test == 0 {
        return invalid(format!("need at least {min_train} training and 1 test sample, got {n_train} and {n_test}"));
    }
    let joint = chain.joint()?;
    let train = sample_chain(&chain.source, &chain.kind, n_train, rng.child(0))?;
    let test = sample_chain(&chain.source, &chain.kind, n_test, rng.child(1))?;

    let fit = |k: usize| -> Result<(LinearPredictor, Vec<f64>, f64)> {
        let p = fit_linear(&Dataset::last_frame(&train, k)?, k, ridge)?;
        let errs = squared_errors(&p, &Dataset::last_frame(&test, k)?)?;
        let oracle = conditional_error(&joint, &Context::recent(k)?)?;
        Ok((p, errs, oracle))
    };
    let (p_small, e_small, o_small) = fit(k_small)?;
    let (p_large, e_large, o_large) = if k_large == k_small { (p_small.clone(), e_small.clone(), o_small) } else { fit(k_large)? };
    let diff = MeanEstimate::from_values(e_large.iter().zip(&e_small).map(|(b, a)| b - a));
    Ok(ContextComparison {
        k_small,
        k_large,
        small: evaluation_from_errors(&e_small, chain.dim()),
        large: evaluation_from_errors(&e_large, chain.dim()),
        oracle_small: o_small,
        oracle_large: o_large,
        difference: diff.mean,
        difference_std_error: diff.std_error,
        predictors: (p_small, p_large),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::NoiseSchedule;

    fn chain(high: bool, betas: &[f64]) -> GaussianChain {
        let s = NoiseSchedule::new(betas.to_vec()).unwrap();
        let kind = if high { ChainKind::HighOrder(s) } else { ChainKind::FirstOrder(s) };
        GaussianChain::new(GaussianSource::isotropic(1, 1.0).unwrap(), kind)
    }

    #[test]
    fn high_order_pinned_values() {
        let c = compare_context_sizes(&chain(true, &[0.5, 0.5]), 1, 2, 100_000, 100_000, 0.0, RngSpec::new(11, 0)).unwrap();
        assert!((c.small.mse - 0.5).abs() < 0.02 * 0.5);
        assert!((c.large.mse - 4.0 / 9.0).abs() < 0.02 * 4.0 / 9.0);
        assert!(c.strictly_improves(), "{c:?}");
        assert!((c.oracle_gap() - 1.0 / 18.0).abs() < 1e-12);
    }

    #[test]
    fn first_order_within_slack() {
        let c = compare_context_sizes(&chain(false, &[0.5, 0.5]), 1, 2, 100_000, 100_000, 0.0, RngSpec::new(12, 0)).unwrap();
        assert!(c.indistinguishable(), "{c:?}");
        assert!(c.oracle_gap().abs() < 1e-12);
    }

    #[test]
    fn equal_sizes_give_zero() {
        let c = compare_context_sizes(&chain(true, &[0.5, 0.5]), 1, 1, 1000, 1000, 0.0, RngSpec::new(1, 0)).unwrap();
        assert_eq!(c.difference, 0.0);
    }

    #[test]
    fn argument_checks() {
        let c = chain(true, &[0.5, 0.5]);
        assert!(compare_context_sizes(&c, 2, 1, 100, 100, 0.0, RngSpec::default()).is_err());
        assert!(compare_context_sizes(&c, 1, 3, 100, 100, 0.0, RngSpec::default()).is_err());
        assert!(compare_context_sizes(&c, 1, 2, 2, 100, 0.0, RngSpec::default()).is_err());
    }
}
