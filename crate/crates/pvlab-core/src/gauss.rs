//! Closed-form reconstruction errors for linear-Gaussian pseudo-video chains.
//!
//! Frames are stacked lag-major, `(x_T, x_{T-1}, …, x_1)`, each block `d`
//! wide. Because every corrupted frame is an affine function of cleaner
//! frames plus independent Gaussian noise, the joint of all frames is
//! Gaussian and the minimum error of predicting `x_T` from a context `S` is
//! the trace of the Schur complement
//! `Σ_TT − Σ_TS Σ_SS⁻¹ Σ_ST`, independent of the context values.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::context::{check_nested, Context};
use crate::error::{invalid, Error, Result};
use crate::linalg::{eigen_extremes, max_asymmetry, psd_sqrt, spd_solve};
use crate::markov::{forward_chain, ChainKind};
use crate::report::{OracleReport, OracleRow, Tolerances};
use crate::rng::{standard_normal, RngSpec};

/// Distribution of the clean frame `x_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSource {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianSource {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return invalid("source dimension must be positive");
        }
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::ShapeMismatch {
                expected: format!("{d}x{d} covariance"),
                found: format!("{}x{}", cov.nrows(), cov.ncols()),
            });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return invalid("source parameters must be finite");
        }
        let asym = max_asymmetry(&cov);
        if asym > 1e-12 {
            return invalid(format!("source covariance not symmetric (max |Σ_ij - Σ_ji| = {asym:e})"));
        }
        let (min_eig, _) = eigen_extremes(&cov);
        if min_eig < -1e-10 {
            return invalid(format!("source covariance not PSD (eigenvalue {min_eig:e})"));
        }
        Ok(Self { mean, cov })
    }

    /// Zero-mean source with covariance `variance · I`.
    pub fn isotropic(dim: usize, variance: f64) -> Result<Self> {
        Self::new(DVector::zeros(dim), DMatrix::identity(dim, dim) * variance)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }
}

/// Joint distribution of all stacked frames.
#[derive(Debug, Clone, PartialEq)]
pub struct JointGaussian {
    n_frames: usize,
    dim: usize,
    chain_kind: &'static str,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl JointGaussian {
    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn chain_kind(&self) -> &'static str {
        self.chain_kind
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// `Cov(x_{T-a}, x_{T-b})` as a `d × d` block.
    pub fn cov_block(&self, a: usize, b: usize) -> DMatrix<f64> {
        let d = self.dim;
        self.cov.view((a * d, b * d), (d, d)).into_owned()
    }

    fn indices(&self, lags: &[usize]) -> Vec<usize> {
        lags.iter().flat_map(|&l| l * self.dim..(l + 1) * self.dim).collect()
    }

    fn sub_cov(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.cov[(rows[i], cols[j])])
    }

    fn sub_mean(&self, rows: &[usize]) -> DVector<f64> {
        DVector::from_fn(rows.len(), |i, _| self.mean[rows[i]])
    }

    fn check_lags(&self, lags: &[usize]) -> Result<()> {
        if let Some(l) = lags.iter().find(|&&l| l >= self.n_frames) {
            return invalid(format!("lag {l} outside a {}-frame chain", self.n_frames));
        }
        Ok(())
    }
}

/// Exact mean and covariance of all frames by linear propagation.
pub fn build_joint(source: &GaussianSource, kind: &ChainKind, n_frames: usize) -> Result<JointGaussian> {
    if n_frames < 2 {
        return invalid(format!("a chain needs T >= 2 frames, got {n_frames}"));
    }
    if kind.n_frames() != n_frames {
        return invalid(format!(
            "schedule has {} steps but T = {n_frames} needs {}",
            kind.schedule().steps(),
            n_frames - 1
        ));
    }
    let d = source.dim();
    let n = n_frames * d;
    let mut mean = DVector::zeros(n);
    let mut cov = DMatrix::zeros(n, n);
    mean.rows_mut(0, d).copy_from(source.mean());
    cov.view_mut((0, 0), (d, d)).copy_from(source.cov());
    for t in 1..n_frames {
        let (parents, w) = kind.parents(t);
        // x_t = w Σ_p x_p + noise, independent of everything before it
        for i in 0..d {
            mean[t * d + i] = w * parents.clone().map(|p| mean[p * d + i]).sum::<f64>();
        }
        for s in 0..t {
            for i in 0..d {
                for j in 0..d {
                    let c = w * parents.clone().map(|p| cov[(p * d + i, s * d + j)]).sum::<f64>();
                    cov[(t * d + i, s * d + j)] = c;
                    cov[(s * d + j, t * d + i)] = c;
                }
            }
        }
        let beta = kind.schedule().beta(t);
        for i in 0..d {
            for j in 0..d {
                let mut c = w * parents.clone().map(|p| cov[(t * d + i, p * d + j)]).sum::<f64>();
                if i == j {
                    c += beta;
                }
                cov[(t * d + i, t * d + j)] = c;
            }
        }
    }
    // symmetrize away accumulation-order differences
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(JointGaussian { n_frames, dim: d, chain_kind: kind.name(), mean, cov })
}

/// Gaussian conditional of some frames given others.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditional {
    /// `Σ_TI Σ_II⁻¹`
    pub gain: DMatrix<f64>,
    /// `μ_T − gain · μ_I`
    pub offset: DVector<f64>,
    /// Conditional covariance (Schur complement).
    pub cov: DMatrix<f64>,
    pub degenerate: bool,
}

impl Conditional {
    pub fn error(&self) -> f64 {
        self.cov.trace().max(0.0)
    }
}

/// Conditions the frames at `target_lags` on the frames at `input_lags`
/// (in the given order).
pub fn condition(joint: &JointGaussian, target_lags: &[usize], input_lags: &[usize]) -> Result<Conditional> {
    joint.check_lags(target_lags)?;
    joint.check_lags(input_lags)?;
    if input_lags.is_empty() {
        return invalid("conditioning set must be nonempty");
    }
    let ti = joint.indices(target_lags);
    let ii = joint.indices(input_lags);
    let s_ii = joint.sub_cov(&ii, &ii);
    let s_it = joint.sub_cov(&ii, &ti);
    let s_tt = joint.sub_cov(&ti, &ti);
    let sol = spd_solve(&s_ii, &s_it);
    let gain = sol.x.transpose();
    let cov = &s_tt - s_it.transpose() * &sol.x;
    let cov = (&cov + cov.transpose()) * 0.5;
    let offset = joint.sub_mean(&ti) - &gain * joint.sub_mean(&ii);
    Ok(Conditional { gain, offset, cov, degenerate: sol.degenerate })
}

/// `L*_S = tr(Σ_TT − Σ_TS Σ_SS⁻¹ Σ_ST)`.
pub fn conditional_error(joint: &JointGaussian, context: &Context) -> Result<f64> {
    context.check_frames(joint.n_frames)?;
    Ok(condition(joint, &[0], context.lags())?.error())
}

/// Affine map `x ↦ gain · x + offset` from stacked input frames to one
/// target frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePredictor {
    pub target_lag: usize,
    pub input_lags: Vec<usize>,
    pub gain: DMatrix<f64>,
    pub offset: DVector<f64>,
    /// Trace of the residual covariance, i.e. the expected squared error.
    pub residual_error: f64,
    pub degenerate: bool,
}

impl AffinePredictor {
    pub fn predict_into(&self, input: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.offset[r] + (0..input.len()).map(|c| self.gain[(r, c)] * input[c]).sum::<f64>();
        }
    }
}

/// The conditional-mean predictor `E[x_T | x_S]`, inputs ordered by lag.
pub fn optimal_predictor(joint: &JointGaussian, context: &Context) -> Result<AffinePredictor> {
    context.check_frames(joint.n_frames)?;
    optimal_step_predictor(joint, 0, context.lags())
}

/// Conditional-mean predictor of frame `target_lag` from `input_lags`.
pub fn optimal_step_predictor(joint: &JointGaussian, target_lag: usize, input_lags: &[usize]) -> Result<AffinePredictor> {
    let c = condition(joint, &[target_lag], input_lags)?;
    Ok(AffinePredictor {
        target_lag,
        input_lags: input_lags.to_vec(),
        residual_error: c.error(),
        gain: c.gain,
        offset: c.offset,
        degenerate: c.degenerate,
    })
}

/// Computes `L*` along a nested context chain, the gap at each refinement,
/// and the same gap through the total-variance identity: the variance of the
/// refined conditional mean `E[x_T | x_{S_i}]` under `p(x_{S_i} | x_{S_{i-1}})`.
pub fn nested_context_report(joint: &JointGaussian, nested: &[Context], tol: Tolerances) -> Result<OracleReport> {
    check_nested(nested)?;
    let mut rows: Vec<OracleRow> = Vec::with_capacity(nested.len());
    for (i, ctx) in nested.iter().enumerate() {
        ctx.check_frames(joint.n_frames)?;
        let cond = condition(joint, &[0], ctx.lags())?;
        let l_star = cond.error();
        let (gap, identity, mut degenerate) = if i == 0 {
            (None, None, cond.degenerate)
        } else {
            let prev = &nested[i - 1];
            let gap = if prev == ctx { 0.0 } else { rows[i - 1].l_star - l_star };
            // Cov(x_{S_i} | x_{S_{i-1}}) pushed through the refined gain
            let inner = condition(joint, ctx.lags(), prev.lags())?;
            let spread = &cond.gain * &inner.cov * cond.gain.transpose();
            let identity = if prev == ctx { 0.0 } else { spread.trace() };
            (Some(gap), Some(identity), cond.degenerate || inner.degenerate)
        };
        if l_star < 0.0 {
            degenerate = true;
        }
        rows.push(OracleRow {
            context: ctx.clone(),
            l_star,
            gap_to_prev: gap,
            gap_identity: identity,
            equality: gap.map(|g| g.abs() < tol.equality),
            degenerate,
        });
    }
    Ok(OracleReport { chain_kind: joint.chain_kind.to_string(), n_frames: joint.n_frames, dim: joint.dim, rows })
}

/// Independent draws of whole chains, lag-major per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSamples {
    n_frames: usize,
    dim: usize,
    data: Vec<f64>,
}

impl ChainSamples {
    pub fn new(n_frames: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        let width = n_frames * dim;
        if width == 0 || !data.len().is_multiple_of(width) || data.is_empty() {
            return invalid(format!("{} values do not form whole {n_frames}x{dim} samples", data.len()));
        }
        Ok(Self { n_frames, dim, data })
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / (self.n_frames * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Stacked frames of sample `i`.
    pub fn sample(&self, i: usize) -> &[f64] {
        let w = self.n_frames * self.dim;
        &self.data[i * w..(i + 1) * w]
    }

    /// Frame at `lag` of sample `i`.
    pub fn frame(&self, i: usize, lag: usize) -> &[f64] {
        let s = self.sample(i);
        &s[lag * self.dim..(lag + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_frames * self.dim)
    }

    /// Samples `range` as a new set.
    pub fn slice(&self, range: core::ops::Range<usize>) -> ChainSamples {
        let w = self.n_frames * self.dim;
        ChainSamples { n_frames: self.n_frames, dim: self.dim, data: self.data[range.start * w..range.end * w].to_vec() }
    }
}

/// Draws `n` chains by running the corruption recursion forward from
/// `x_T ~ N(μ, Σ)`. Per sample the stream yields the `d` source normals
/// followed by the step noise in [`forward_chain`] order.
pub fn sample_chain(source: &GaussianSource, kind: &ChainKind, n: usize, rng: RngSpec) -> Result<ChainSamples> {
    if n == 0 {
        return invalid("sample count must be at least 1");
    }
    let d = source.dim();
    let n_frames = kind.n_frames();
    let width = n_frames * d;
    let factor = psd_sqrt(source.cov());
    let mut stream = rng.rng();
    let mut data = alloc::vec![0.0; n * width];
    let mut z = alloc::vec![0.0; d];
    for row in data.chunks_exact_mut(width) {
        z.iter_mut().for_each(|v| *v = standard_normal(&mut stream));
        for i in 0..d {
            row[i] = source.mean()[i] + (0..d).map(|j| factor[(i, j)] * z[j]).sum::<f64>();
        }
        forward_chain(kind, row, d, &mut stream);
    }
    ChainSamples::new(n_frames, d, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::high_order_markov_noise;
    use crate::schedule::NoiseSchedule;
    use crate::{Frame, Shape};
    use alloc::vec;
    use proptest::prelude::*;

    const SQRT_HALF: f64 = core::f64::consts::FRAC_1_SQRT_2;

    fn sched(b: &[f64]) -> NoiseSchedule {
        NoiseSchedule::new(b.to_vec()).unwrap()
    }

    fn unit() -> GaussianSource {
        GaussianSource::isotropic(1, 1.0).unwrap()
    }

    fn ctx(l: &[usize]) -> Context {
        Context::new(l.to_vec()).unwrap()
    }

    /// Hand propagation for d = 1, β = [0.5, 0.5], Var(x_T) = 1:
    /// returns (Var x_{T-1}, Cov(x_T,x_{T-1}), Var x_{T-2}, Cov(x_T,x_{T-2}), Cov(x_{T-1},x_{T-2})).
    fn hand_high_order() -> [f64; 5] {
        let c_t1 = SQRT_HALF;
        let v1 = 0.5 + 0.5;
        let c_t2 = SQRT_HALF * (1.0 + c_t1) / 2.0;
        let c_12 = SQRT_HALF * (c_t1 + v1) / 2.0;
        let v2 = 0.5 * (1.0 + v1 + 2.0 * c_t1) / 4.0 + 0.5;
        [v1, c_t1, v2, c_t2, c_12]
    }

    /// 3×3 Schur complement by explicit 2×2 inverse.
    fn hand_l2() -> f64 {
        let [v1, c_t1, v2, c_t2, c_12] = hand_high_order();
        let det = v1 * v2 - c_12 * c_12;
        let quad = (c_t1 * c_t1 * v2 - 2.0 * c_t1 * c_t2 * c_12 + c_t2 * c_t2 * v1) / det;
        1.0 - quad
    }

    #[test]
    fn hand_oracle_values() {
        let [v1, _, v2, c_t2, _] = hand_high_order();
        assert!((v1 - 1.0).abs() < 1e-15);
        assert!((v2 - 0.9268).abs() < 1e-4);
        assert!((c_t2 - 0.6036).abs() < 1e-4);
        assert!((hand_l2() - 4.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn first_order_two_frames() {
        let j = build_joint(&unit(), &ChainKind::FirstOrder(sched(&[0.5])), 2).unwrap();
        assert!((j.cov()[(0, 1)] - SQRT_HALF).abs() < 1e-15);
        assert!((j.cov()[(1, 1)] - 1.0).abs() < 1e-15);
        let l = conditional_error(&j, &ctx(&[1])).unwrap();
        assert!((l - 0.5).abs() < 1e-15);
        let p = optimal_predictor(&j, &ctx(&[1])).unwrap();
        assert!((p.gain[(0, 0)] - SQRT_HALF).abs() < 1e-15);
        assert!(p.offset[0].abs() < 1e-15);
    }

    #[test]
    fn high_order_matches_hand_propagation() {
        let j = build_joint(&unit(), &ChainKind::HighOrder(sched(&[0.5, 0.5])), 3).unwrap();
        let [v1, c_t1, v2, c_t2, c_12] = hand_high_order();
        assert!((j.cov()[(1, 1)] - v1).abs() < 1e-14);
        assert!((j.cov()[(0, 1)] - c_t1).abs() < 1e-14);
        assert!((j.cov()[(2, 2)] - v2).abs() < 1e-14);
        assert!((j.cov()[(0, 2)] - c_t2).abs() < 1e-14);
        assert!((j.cov()[(1, 2)] - c_12).abs() < 1e-14);
        let l1 = conditional_error(&j, &ctx(&[1])).unwrap();
        let l2 = conditional_error(&j, &ctx(&[1, 2])).unwrap();
        assert!((l1 - 0.5).abs() < 1e-14);
        assert!((l2 - hand_l2()).abs() < 1e-14);
    }

    #[test]
    fn nested_context_report_pinned_gap() {
        let j = build_joint(&unit(), &ChainKind::HighOrder(sched(&[0.5, 0.5])), 3).unwrap();
        let r = nested_context_report(&j, &[ctx(&[1]), ctx(&[1, 2])], Tolerances::default()).unwrap();
        let gap = r.rows[1].gap_to_prev.unwrap();
        assert!((gap - (0.5 - 4.0 / 9.0)).abs() < 1e-14);
        assert!((r.rows[1].gap_identity.unwrap() - gap).abs() < 1e-12);
        assert_eq!(r.rows[1].equality, Some(false));
        assert_eq!(r.rows[0].gap_to_prev, None);
    }

    #[test]
    fn first_order_equality_case() {
        let j = build_joint(&unit(), &ChainKind::FirstOrder(sched(&[0.3, 0.4, 0.2])), 4).unwrap();
        let r = nested_context_report(&j, &[ctx(&[1]), ctx(&[1, 2]), ctx(&[1, 2, 3])], Tolerances::default()).unwrap();
        for g in r.gaps() {
            assert!(g.abs() < 1e-10, "gap {g}");
        }
        assert!(r.rows[1..].iter().all(|r| r.equality == Some(true)));
    }

    #[test]
    fn identical_contexts_zero_gap() {
        let j = build_joint(&unit(), &ChainKind::HighOrder(sched(&[0.5, 0.5])), 3).unwrap();
        let r = nested_context_report(&j, &[ctx(&[1, 2]), ctx(&[1, 2])], Tolerances::default()).unwrap();
        assert_eq!(r.rows[1].gap_to_prev, Some(0.0));
    }

    #[test]
    fn non_nested_rejected() {
        let j = build_joint(&unit(), &ChainKind::HighOrder(sched(&[0.5, 0.5])), 3).unwrap();
        assert!(nested_context_report(&j, &[ctx(&[2]), ctx(&[1])], Tolerances::default()).is_err());
        assert!(conditional_error(&j, &ctx(&[3])).is_err());
    }

    #[test]
    fn duplicated_target_gives_zero_error() {
        let j = build_joint(&unit(), &ChainKind::FirstOrder(sched(&[0.0, 0.3])), 3).unwrap();
        assert!(conditional_error(&j, &ctx(&[1])).unwrap().abs() < 1e-10);
        let p = optimal_predictor(&j, &ctx(&[1])).unwrap();
        assert!((p.gain[(0, 0)] - 1.0).abs() < 1e-10);
        assert!(p.offset[0].abs() < 1e-10);
        // two exact copies make Σ_SS singular
        let j = build_joint(&unit(), &ChainKind::FirstOrder(sched(&[0.0, 0.0])), 3).unwrap();
        let r = nested_context_report(&j, &[ctx(&[1]), ctx(&[1, 2])], Tolerances::default()).unwrap();
        assert!(r.rows[1].degenerate);
        assert!(r.rows[1].l_star.abs() < 1e-10);
    }

    #[test]
    fn vanishing_noise_is_perfectly_correlated() {
        for kind in [ChainKind::FirstOrder(sched(&[1e-12; 3])), ChainKind::HighOrder(sched(&[1e-12; 3]))] {
            let j = build_joint(&GaussianSource::isotropic(2, 1.5).unwrap(), &kind, 4).unwrap();
            for a in 0..4 {
                for b in 0..4 {
                    for i in 0..2 {
                        let (ia, ib) = (a * 2 + i, b * 2 + i);
                        let corr = j.cov()[(ia, ib)] / libm::sqrt(j.cov()[(ia, ia)] * j.cov()[(ib, ib)]);
                        assert!((corr - 1.0).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_sources_and_lengths() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(GaussianSource::new(DVector::zeros(2), asym).is_err());
        let neg = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(GaussianSource::new(DVector::zeros(2), neg).is_err());
        assert!(build_joint(&unit(), &ChainKind::FirstOrder(sched(&[0.5])), 3).is_err());
    }

    #[test]
    fn sampler_matches_joint_and_augment() {
        let kind = ChainKind::FirstOrder(sched(&[0.5]));
        let j = build_joint(&unit(), &kind, 2).unwrap();
        let s = sample_chain(&unit(), &kind, 1_000_000, RngSpec::new(5, 0)).unwrap();
        let n = s.len() as f64;
        let (mut c00, mut c01, mut c11) = (0.0, 0.0, 0.0);
        for row in s.iter() {
            c00 += row[0] * row[0];
            c01 += row[0] * row[1];
            c11 += row[1] * row[1];
        }
        assert!((c00 / n - 1.0).abs() < 0.01);
        assert!((c01 / n - j.cov()[(0, 1)]).abs() < 0.01 * j.cov()[(0, 1)]);
        assert!((c11 / n - 1.0).abs() < 0.01);
        assert_eq!(s, sample_chain(&unit(), &kind, 1_000_000, RngSpec::new(5, 0)).unwrap());
    }

    #[test]
    fn copy_chain_samples_identical_frames() {
        let kind = ChainKind::HighOrder(sched(&[0.0, 0.0, 0.0]));
        let s = sample_chain(&GaussianSource::isotropic(3, 1.0).unwrap(), &kind, 50, RngSpec::new(1, 0)).unwrap();
        for i in 0..s.len() {
            for lag in 1..4 {
                // running means of equal values round to within an ulp
                for (a, b) in s.frame(i, lag).iter().zip(s.frame(i, 0)) {
                    assert!((a - b).abs() <= 4.0 * f64::EPSILON * b.abs());
                }
            }
        }
    }

    #[test]
    fn sampler_forward_recursion_matches_augment_bitwise() {
        // With a degenerate (zero-variance) source at the image values, the
        // sampler consumes d source normals and then exactly the noise stream
        // the augment path uses from a stream that skipped those normals.
        let shape = Shape::new(2, 3, 1).unwrap();
        let img = Frame::from_fn(shape, |y, x, _| (y * 3 + x) as f32 * 0.125).unwrap();
        let schedule = sched(&[0.2, 0.3, 0.4]);
        let kind = ChainKind::HighOrder(schedule.clone());
        let video = high_order_markov_noise(&img, &schedule, RngSpec::new(7, 1)).unwrap();

        let mut stacked = vec![0.0; 4 * 6];
        stacked[..6].copy_from_slice(&img.to_f64());
        forward_chain(&kind, &mut stacked, 6, &mut RngSpec::new(7, 1).rng());
        for lag in 1..4 {
            let frame = Frame::from_f64(shape, &stacked[lag * 6..(lag + 1) * 6]).unwrap();
            assert_eq!(&frame, &video.frames()[3 - lag]);
        }
    }

    #[test]
    fn first_order_closed_form_covariance() {
        let betas = [0.1, 0.25, 0.05, 0.4];
        let j = build_joint(&GaussianSource::isotropic(1, 2.0).unwrap(), &ChainKind::FirstOrder(sched(&betas)), 5).unwrap();
        let mut prod = 1.0;
        for t in 1..5 {
            prod *= libm::sqrt(1.0 - betas[t - 1]);
            assert!((j.cov()[(t, 0)] - 2.0 * prod).abs() < 1e-12);
        }
    }

    fn random_source(d: usize, seed: u64) -> GaussianSource {
        let mut rng = RngSpec::new(seed, 99).rng();
        let b = DMatrix::from_fn(d, d, |_, _| crate::rng::uniform_range(&mut rng, -1.0, 1.0));
        let cov = &b * b.transpose() + DMatrix::identity(d, d) * 0.1;
        let cov = (&cov + cov.transpose()) * 0.5;
        let mean = DVector::from_fn(d, |_, _| crate::rng::uniform_range(&mut rng, -1.0, 1.0));
        GaussianSource::new(mean, cov).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn nested_contexts_never_increase_error(
            d in 1usize..5, t in 2usize..7, seed in any::<u64>(), high in any::<bool>(),
            betas in prop::collection::vec(0.01f64..0.99, 6),
        ) {
            let s = sched(&betas[..t - 1]);
            let kind = if high { ChainKind::HighOrder(s) } else { ChainKind::FirstOrder(s) };
            let j = build_joint(&random_source(d, seed), &kind, t).unwrap();
            let nested: std::vec::Vec<Context> = (1..t).map(|k| Context::recent(k).unwrap()).collect();
            let r = nested_context_report(&j, &nested, Tolerances::default()).unwrap();
            prop_assert!(r.is_monotone(1e-9));
            prop_assert!(r.max_identity_error() < 1e-9);
            if !high {
                for g in r.gaps() { prop_assert!(g.abs() < 1e-9); }
            }
        }

        #[test]
        fn high_order_strict_gap(d in 1usize..5, t in 3usize..7, seed in any::<u64>(),
                                 betas in prop::collection::vec(0.05f64..0.95, 6)) {
            let j = build_joint(&random_source(d, seed), &ChainKind::HighOrder(sched(&betas[..t - 1])), t).unwrap();
            let l1 = conditional_error(&j, &ctx(&[1])).unwrap();
            let l2 = conditional_error(&j, &ctx(&[1, 2])).unwrap();
            prop_assert!(l1 - l2 > 1e-6, "gap {}", l1 - l2);
        }
    }
}
