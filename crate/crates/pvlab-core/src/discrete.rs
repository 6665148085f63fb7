//! Exact reconstruction errors of small finite-alphabet chains by
//! enumerating the whole joint probability table.
//!
//! Shares no numerical code with [`crate::gauss`], so the two oracles check
//! each other.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::context::{check_nested, Context};
use crate::error::{invalid, Error, Result};
use crate::report::{OracleReport, OracleRow, Tolerances};
use crate::rng::{categorical, uniform_range, RngSpec, StreamRng};

/// Largest joint table `K^T` that will be enumerated.
pub const MAX_TABLE: usize = 10_000_000;

const ROW_TOL: f64 = 1e-12;

/// Conditional table of one corruption step.
///
/// Step `t` draws `x_{T-t}` given its `order` nearest cleaner frames
/// `x_{T-t+1}, …, x_{T-t+order}`. Rows are indexed by those values in mixed
/// radix with `x_{T-t+1}` most significant; each row holds `K` probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct StepKernel {
    order: usize,
    table: Vec<f64>,
}

impl StepKernel {
    pub fn new(alphabet: usize, order: usize, table: Vec<f64>) -> Result<Self> {
        if order == 0 {
            return invalid("kernel order must be at least 1");
        }
        let rows = checked_pow(alphabet, order).ok_or_else(|| Error::ResourceLimit("kernel table too large".into()))?;
        if table.len() != rows * alphabet {
            return invalid(format!("order-{order} kernel over {alphabet} symbols needs {} entries, got {}", rows * alphabet, table.len()));
        }
        for (r, row) in table.chunks_exact(alphabet).enumerate() {
            if row.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
                return invalid(format!("kernel row {r} has a negative or non-finite entry"));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_TOL {
                return invalid(format!("kernel row {r} sums to {s}"));
            }
        }
        Ok(Self { order, table })
    }

    /// Binary symmetric channel: keep the previous symbol with probability
    /// `1 - flip`.
    pub fn binary_flip(flip: f64) -> Result<Self> {
        Self::new(2, 1, alloc::vec![1.0 - flip, flip, flip, 1.0 - flip])
    }

    /// Kernel with uniform random rows drawn from `rng`.
    pub fn random(alphabet: usize, order: usize, rng: &mut StreamRng) -> Result<Self> {
        let rows = checked_pow(alphabet, order).ok_or_else(|| Error::ResourceLimit("kernel table too large".into()))?;
        let mut table = Vec::with_capacity(rows * alphabet);
        for _ in 0..rows {
            let start = table.len();
            table.extend((0..alphabet).map(|_| uniform_range(rng, 0.05, 1.0)));
            let s: f64 = table[start..].iter().sum();
            table[start..].iter_mut().for_each(|p| *p /= s);
        }
        Self::new(alphabet, order, table)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    fn row(&self, alphabet: usize, row: usize) -> &[f64] {
        &self.table[row * alphabet..(row + 1) * alphabet]
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc = 1usize;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

/// A finite-alphabet pseudo-video chain.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteChainSpec {
    alphabet: usize,
    source_pmf: Vec<f64>,
    kernels: Vec<StepKernel>,
}

impl DiscreteChainSpec {
    /// `kernels[t-1]` produces `x_{T-t}`; its order may not exceed `t`.
    pub fn new(alphabet: usize, source_pmf: Vec<f64>, kernels: Vec<StepKernel>) -> Result<Self> {
        if alphabet < 1 {
            return invalid("alphabet must be nonempty");
        }
        if source_pmf.len() != alphabet {
            return invalid(format!("source pmf has {} entries for {alphabet} symbols", source_pmf.len()));
        }
        if source_pmf.iter().any(|p| !(*p >= 0.0 && p.is_finite())) || (source_pmf.iter().sum::<f64>() - 1.0).abs() > ROW_TOL {
            return invalid("source pmf must be nonnegative and sum to 1");
        }
        if kernels.is_empty() {
            return invalid("a chain needs at least one corruption step");
        }
        for (i, k) in kernels.iter().enumerate() {
            let t = i + 1;
            if k.order > t {
                return invalid(format!("step {t} kernel has order {} but only {t} cleaner frames exist", k.order));
            }
            let rows = checked_pow(alphabet, k.order).unwrap_or(usize::MAX);
            if k.table.len() != rows.saturating_mul(alphabet) {
                return invalid(format!("step {t} kernel table does not match alphabet {alphabet}"));
            }
        }
        Ok(Self { alphabet, source_pmf, kernels })
    }

    /// Binary chain with uniform source and the same flip probability at
    /// every step.
    pub fn binary_flip_chain(n_frames: usize, flip: f64) -> Result<Self> {
        if n_frames < 2 {
            return invalid("a chain needs T >= 2");
        }
        let k = StepKernel::binary_flip(flip)?;
        Self::new(2, alloc::vec![0.5, 0.5], alloc::vec![k; n_frames - 1])
    }

    /// Random source and kernels with the given per-step orders.
    pub fn random(alphabet: usize, orders: &[usize], rng: RngSpec) -> Result<Self> {
        let mut stream = rng.rng();
        let mut source: Vec<f64> = (0..alphabet).map(|_| uniform_range(&mut stream, 0.05, 1.0)).collect();
        let s: f64 = source.iter().sum();
        source.iter_mut().for_each(|p| *p /= s);
        let kernels = orders
            .iter()
            .map(|&o| StepKernel::random(alphabet, o, &mut stream))
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphabet, source, kernels)
    }

    /// Sign quantization of a zero-mean first-order Gaussian chain: each
    /// step flips the sign with the bivariate-normal orthant probability
    /// `½ − asin(ρ_t)/π`, `ρ_t` being the correlation of consecutive frames.
    pub fn sign_quantized_first_order(source_variance: f64, betas: &[f64]) -> Result<Self> {
        if !(source_variance > 0.0) {
            return invalid("source variance must be positive");
        }
        let mut var = source_variance;
        let mut kernels = Vec::with_capacity(betas.len());
        for &b in betas {
            if !(0.0..1.0).contains(&b) {
                return invalid(format!("beta {b} outside [0, 1)"));
            }
            let next = (1.0 - b) * var + b;
            let rho = libm::sqrt(1.0 - b) * libm::sqrt(var) / libm::sqrt(next);
            let flip = 0.5 - libm::asin(rho.min(1.0)) / core::f64::consts::PI;
            kernels.push(StepKernel::binary_flip(flip.max(0.0))?);
            var = next;
        }
        Self::new(2, alloc::vec![0.5, 0.5], kernels)
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn n_frames(&self) -> usize {
        self.kernels.len() + 1
    }

    pub fn source_pmf(&self) -> &[f64] {
        &self.source_pmf
    }

    pub fn kernels(&self) -> &[StepKernel] {
        &self.kernels
    }

    pub fn orders(&self) -> Vec<usize> {
        self.kernels.iter().map(StepKernel::order).collect()
    }

    /// Chain label such as `discrete(1,2)`.
    pub fn label(&self) -> String {
        let parts: Vec<String> = self.orders().iter().map(|o| format!("{o}")).collect();
        format!("discrete({})", parts.join(","))
    }

    fn kernel_row(&self, t: usize, values_by_lag: &[usize]) -> usize {
        let k = &self.kernels[t - 1];
        (1..=k.order).fold(0, |row, j| row * self.alphabet + values_by_lag[t - j])
    }

    /// Probability of `x_{T-t} = v` given the already fixed cleaner frames.
    fn step_prob(&self, t: usize, values_by_lag: &[usize]) -> f64 {
        let row = self.kernel_row(t, values_by_lag);
        self.kernels[t - 1].row(self.alphabet, row)[values_by_lag[t]]
    }

    /// Default value embedding `{0, 1, …, K-1}`.
    pub fn default_values(&self) -> Vec<f64> {
        (0..self.alphabet).map(|v| v as f64).collect()
    }
}

/// Joint probability of every frame tuple, `x_T` most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    alphabet: usize,
    n_frames: usize,
    table: Vec<f64>,
}

impl JointPmf {
    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// Table index of the tuple given lag-ordered values (lag 0 = `x_T`).
    pub fn index(&self, values_by_lag: &[usize]) -> usize {
        values_by_lag.iter().fold(0, |idx, &v| idx * self.alphabet + v)
    }

    /// Calls `f(values_by_lag, p)` for every table entry in index order.
    fn for_each(&self, mut f: impl FnMut(&[usize], f64)) {
        let mut digits = alloc::vec![0usize; self.n_frames];
        for &p in &self.table {
            f(&digits, p);
            increment(&mut digits, self.alphabet);
        }
    }

    fn cell(&self, digits: &[usize], lags: &[usize]) -> usize {
        lags.iter().fold(0, |c, &l| c * self.alphabet + digits[l])
    }

    fn cell_count(&self, lags: &[usize]) -> usize {
        checked_pow(self.alphabet, lags.len()).unwrap_or(usize::MAX)
    }
}

// little odometer over mixed-radix digits, last digit fastest
fn increment(digits: &mut [usize], base: usize) {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return;
        }
        *d = 0;
    }
}

/// Exact joint table: `p(x_T) · Π_t p(x_{T-t} | parents)`.
pub fn enumerate_joint(spec: &DiscreteChainSpec) -> Result<JointPmf> {
    let n_frames = spec.n_frames();
    let size = checked_pow(spec.alphabet, n_frames)
        .filter(|&s| s <= MAX_TABLE)
        .ok_or_else(|| Error::ResourceLimit(format!("{}^{} exceeds the {MAX_TABLE}-entry enumeration bound", spec.alphabet, n_frames)))?;
    let mut table = Vec::with_capacity(size);
    let mut digits = alloc::vec![0usize; n_frames];
    for _ in 0..size {
        let mut p = spec.source_pmf[digits[0]];
        for t in 1..n_frames {
            if p == 0.0 {
                break;
            }
            p *= spec.step_prob(t, &digits);
        }
        table.push(p);
        increment(&mut digits, spec.alphabet);
    }
    Ok(JointPmf { alphabet: spec.alphabet, n_frames, table })
}

fn check_values(pmf: &JointPmf, values: &[f64]) -> Result<()> {
    if values.len() != pmf.alphabet {
        return invalid(format!("value map has {} entries for {} symbols", values.len(), pmf.alphabet));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return invalid("value map must be finite");
    }
    Ok(())
}

/// Per-cell sums `(Σp, Σp·v, Σp·v²)` of the embedded target over context
/// cells.
fn cell_moments(pmf: &JointPmf, values: &[f64], lags: &[usize]) -> Vec<[f64; 3]> {
    let mut acc = alloc::vec![[0.0f64; 3]; pmf.cell_count(lags)];
    pmf.for_each(|digits, p| {
        let v = values[digits[0]];
        let a = &mut acc[pmf.cell(digits, lags)];
        a[0] += p;
        a[1] += p * v;
        a[2] += p * v * v;
    });
    acc
}

/// `Σ_{x_S} p(x_S) · Var(v(x_T) | x_S)` by exact marginalization. Cells with
/// zero probability contribute nothing.
pub fn conditional_error_discrete(pmf: &JointPmf, values: &[f64], context: &Context) -> Result<f64> {
    check_values(pmf, values)?;
    context.check_frames(pmf.n_frames)?;
    let err = cell_moments(pmf, values, context.lags())
        .iter()
        .filter(|a| a[0] > 0.0)
        .map(|a| a[2] - a[1] * a[1] / a[0])
        .sum::<f64>();
    Ok(err.max(0.0))
}

/// Expected variance, over the frames added by `fine` beyond `coarse`, of the
/// conditional mean given `fine`.
fn refinement_spread(pmf: &JointPmf, values: &[f64], coarse: &[usize], fine: &[usize]) -> f64 {
    let fine_mean: Vec<f64> = cell_moments(pmf, values, fine)
        .iter()
        .map(|a| if a[0] > 0.0 { a[1] / a[0] } else { 0.0 })
        .collect();
    let mut acc = alloc::vec![[0.0f64; 3]; pmf.cell_count(coarse)];
    pmf.for_each(|digits, p| {
        let m = fine_mean[pmf.cell(digits, fine)];
        let a = &mut acc[pmf.cell(digits, coarse)];
        a[0] += p;
        a[1] += p * m;
        a[2] += p * m * m;
    });
    acc.iter().filter(|a| a[0] > 0.0).map(|a| (a[2] - a[1] * a[1] / a[0]).max(0.0)).sum()
}

/// Discrete counterpart of [`crate::gauss::nested_context_report`].
pub fn nested_context_report_discrete(
    spec: &DiscreteChainSpec,
    values: &[f64],
    nested: &[Context],
    tol: Tolerances,
) -> Result<OracleReport> {
    check_nested(nested)?;
    let pmf = enumerate_joint(spec)?;
    let mut rows: Vec<OracleRow> = Vec::with_capacity(nested.len());
    for (i, ctx) in nested.iter().enumerate() {
        let l_star = conditional_error_discrete(&pmf, values, ctx)?;
        let (gap, identity) = if i == 0 {
            (None, None)
        } else if nested[i - 1] == *ctx {
            (Some(0.0), Some(0.0))
        } else {
            let prev = &nested[i - 1];
            (Some(rows[i - 1].l_star - l_star), Some(refinement_spread(&pmf, values, prev.lags(), ctx.lags())))
        };
        rows.push(OracleRow {
            context: ctx.clone(),
            l_star,
            gap_to_prev: gap,
            gap_identity: identity,
            equality: gap.map(|g| g.abs() < tol.equality),
            degenerate: false,
        });
    }
    Ok(OracleReport { chain_kind: spec.label(), n_frames: spec.n_frames(), dim: 1, rows })
}

/// Ancestral samples, `n × T` symbols, lag-major per sample.
pub fn sample_discrete(spec: &DiscreteChainSpec, n: usize, rng: RngSpec) -> Vec<usize> {
    let n_frames = spec.n_frames();
    let mut stream = rng.rng();
    let mut out = alloc::vec![0usize; n * n_frames];
    for row in out.chunks_exact_mut(n_frames) {
        row[0] = categorical(&mut stream, &spec.source_pmf);
        for t in 1..n_frames {
            let r = spec.kernel_row(t, row);
            row[t] = categorical(&mut stream, spec.kernels[t - 1].row(spec.alphabet, r));
        }
    }
    out
}

/// Outcome of checking the enumerated error against sampled data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossValidation {
    pub n: usize,
    /// In-sample MSE of the tabular conditional-mean predictor.
    pub empirical_mse: f64,
    pub exact: f64,
    /// `3/√n · (value range)²`
    pub tolerance: f64,
    pub passed: bool,
}

/// Samples `n` chains, fits the per-cell mean of `v(x_T)` for `context`, and
/// compares its MSE with the enumerated `L*`.
pub fn cross_validate(
    spec: &DiscreteChainSpec,
    values: &[f64],
    context: &Context,
    n: usize,
    rng: RngSpec,
) -> Result<CrossValidation> {
    if n == 0 {
        return invalid("cross validation needs samples");
    }
    let pmf = enumerate_joint(spec)?;
    let exact = conditional_error_discrete(&pmf, values, context)?;
    let n_frames = spec.n_frames();
    let samples = sample_discrete(spec, n, rng);
    let lags = context.lags();
    let cells = pmf.cell_count(lags);
    let mut sums = alloc::vec![(0usize, 0.0f64); cells];
    for row in samples.chunks_exact(n_frames) {
        let c = pmf.cell(row, lags);
        sums[c].0 += 1;
        sums[c].1 += values[row[0]];
    }
    let mse = samples
        .chunks_exact(n_frames)
        .map(|row| {
            let (count, total) = sums[pmf.cell(row, lags)];
            let e = values[row[0]] - total / count as f64;
            e * e
        })
        .sum::<f64>()
        / n as f64;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tolerance = 3.0 / libm::sqrt(n as f64) * (hi - lo) * (hi - lo);
    Ok(CrossValidation { n, empirical_mse: mse, exact, tolerance, passed: (mse - exact).abs() <= tolerance })
}
