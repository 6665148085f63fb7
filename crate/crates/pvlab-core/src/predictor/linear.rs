use alloc::format;

use nalgebra::{DMatrix, DVector};

use super::{Dataset, Predictor};
use crate::error::{invalid, Error, Result};
use crate::linalg::eigen_extremes;

/// Relative eigenvalue floor for an unregularized Gram matrix.
const CONDITION_FLOOR: f64 = 1e-12;

/// Affine predictor `y = A x + b` fitted by (ridge) least squares.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPredictor {
    pub context_size: usize,
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub ridge: f64,
}

impl Predictor for LinearPredictor {
    fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    fn output_dim(&self) -> usize {
        self.weights.nrows()
    }

    fn predict_into(&self, input: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.bias[r] + (0..input.len()).map(|c| self.weights[(r, c)] * input[c]).sum::<f64>();
        }
    }
}

/// Minimizes `(1/n) Σ ‖y − A x − b‖² + λ ‖A‖²_F` through the centered normal
/// equations `(XᶜᵀXᶜ/n + λI) Aᵀ = XᶜᵀYᶜ/n`, solved by Cholesky. The
/// intercept is not penalized.
pub fn fit_linear(data: &Dataset, context_size: usize, ridge: f64) -> Result<LinearPredictor> {
    if context_size == 0 || data.input_dim() != context_size * data.output_dim() {
        return invalid(format!(
            "context size {context_size} with {}-d frames does not match {}-d inputs",
            data.output_dim(),
            data.input_dim()
        ));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return invalid(format!("ridge must be nonnegative, got {ridge}"));
    }
    let n = data.len();
    if n == 0 {
        return invalid("cannot fit on an empty dataset");
    }
    let (p, d) = (data.input_dim(), data.output_dim());
    let inv_n = 1.0 / n as f64;
    let mut x_mean = DVector::<f64>::zeros(p);
    let mut y_mean = DVector::<f64>::zeros(d);
    for i in 0..n {
        for (j, v) in data.input(i).iter().enumerate() {
            x_mean[j] += v;
        }
        for (j, v) in data.target(i).iter().enumerate() {
            y_mean[j] += v;
        }
    }
    x_mean *= inv_n;
    y_mean *= inv_n;

    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut cross = DMatrix::<f64>::zeros(p, d);
    let mut xc = alloc::vec![0.0; p];
    for i in 0..n {
        for (j, v) in data.input(i).iter().enumerate() {
            xc[j] = v - x_mean[j];
        }
        for a in 0..p {
            for b in 0..=a {
                gram[(a, b)] += xc[a] * xc[b];
            }
            for (c, y) in data.target(i).iter().enumerate() {
                cross[(a, c)] += xc[a] * (y - y_mean[c]);
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }
    gram *= inv_n;
    cross *= inv_n;
    for a in 0..p {
        gram[(a, a)] += ridge;
    }

    let (min_eig, max_eig) = eigen_extremes(&gram);
    if !(min_eig > CONDITION_FLOOR * max_eig.abs()) {
        return Err(Error::Conditioning { eigenvalue: min_eig, largest: max_eig });
    }
    let chol = gram.cholesky().ok_or(Error::Conditioning { eigenvalue: min_eig, largest: max_eig })?;
    let weights = chol.solve(&cross).transpose();
    let bias = &y_mean - &weights * &x_mean;
    Ok(LinearPredictor { context_size, weights, bias, ridge })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::{build_joint, optimal_predictor, sample_chain, GaussianSource};
    use crate::markov::ChainKind;
    use crate::predictor::evaluate;
    use crate::{Context, NoiseSchedule, RngSpec};
    use alloc::vec::Vec;

    #[test]
    fn recovers_selector() {
        // targets copy the second context frame
        let mut rng = RngSpec::new(1, 0).rng();
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for _ in 0..200 {
            let a = crate::rng::standard_normal(&mut rng);
            let b = crate::rng::standard_normal(&mut rng);
            inputs.extend([a, b]);
            targets.push(b);
        }
        let d = Dataset::new(2, 1, inputs, targets).unwrap();
        let f = fit_linear(&d, 2, 0.0).unwrap();
        assert!((f.weights[(0, 1)] - 1.0).abs() < 1e-10);
        assert!(f.weights[(0, 0)].abs() < 1e-10);
        assert!(evaluate(&f, &d).unwrap().mse < 1e-20);
    }

    #[test]
    fn underdetermined_is_a_conditioning_error() {
        let s = sample_chain(&GaussianSource::isotropic(2, 1.0).unwrap(), &ChainKind::FirstOrder(NoiseSchedule::new(alloc::vec![0.5, 0.5]).unwrap()), 4, RngSpec::new(1, 0)).unwrap();
        // k·d = 4 inputs from 4 samples
        let d = Dataset::last_frame(&s, 2).unwrap();
        assert!(matches!(fit_linear(&d, 2, 0.0), Err(Error::Conditioning { .. })));
        assert!(fit_linear(&d, 2, 0.1).is_ok());
        assert!(fit_linear(&d, 3, 0.0).is_err());
    }

    #[test]
    fn learns_population_coefficient() {
        let src = GaussianSource::isotropic(1, 1.0).unwrap();
        let kind = ChainKind::FirstOrder(NoiseSchedule::new(alloc::vec![0.5]).unwrap());
        let oracle = optimal_predictor(&build_joint(&src, &kind, 2).unwrap(), &Context::recent(1).unwrap()).unwrap();
        let s = sample_chain(&src, &kind, 100_000, RngSpec::new(3, 0)).unwrap();
        let f = fit_linear(&Dataset::last_frame(&s, 1).unwrap(), 1, 0.0).unwrap();
        assert!((f.weights[(0, 0)] - oracle.gain[(0, 0)]).abs() < 0.02 * oracle.gain[(0, 0)]);
        let test = sample_chain(&src, &kind, 100_000, RngSpec::new(3, 1)).unwrap();
        let e = evaluate(&f, &Dataset::last_frame(&test, 1).unwrap()).unwrap();
        assert!((e.mse - 0.5).abs() < 0.02 * 0.5);
    }

    #[test]
    fn permutation_equivariant() {
        let src = GaussianSource::isotropic(2, 1.0).unwrap();
        let kind = ChainKind::HighOrder(NoiseSchedule::new(alloc::vec![0.3, 0.4]).unwrap());
        let s = sample_chain(&src, &kind, 2000, RngSpec::new(3, 0)).unwrap();
        let d = Dataset::last_frame(&s, 2).unwrap();
        let mut order: Vec<usize> = (0..d.len()).collect();
        let mut rng = RngSpec::new(8, 8).rng();
        for i in (1..order.len()).rev() {
            order.swap(i, crate::rng::index_below(&mut rng, i + 1));
        }
        let a = fit_linear(&d, 2, 0.0).unwrap();
        let b = fit_linear(&d.select(&order), 2, 0.0).unwrap();
        assert!((&a.weights - &b.weights).abs().max() < 1e-10);
        assert!((&a.bias - &b.bias).abs().max() < 1e-10);
    }
}
