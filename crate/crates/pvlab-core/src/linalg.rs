use nalgebra::{DMatrix, SymmetricEigen};

/// Relative pivot below which a Cholesky factor counts as singular.
const PIVOT_TOL: f64 = 1e-14;
/// Ridge added on fallback, relative to the mean diagonal.
const RIDGE_SCALE: f64 = 1e-12;

pub(crate) struct SpdSolution {
    pub x: DMatrix<f64>,
    pub degenerate: bool,
}

fn mean_diag(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows().max(1);
    a.trace() / n as f64
}

fn try_cholesky(a: &DMatrix<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let scale = mean_diag(a);
    let chol = a.clone().cholesky()?;
    let l = chol.l_dirty();
    let min_pivot = (0..a.nrows()).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
    if min_pivot <= PIVOT_TOL * scale.abs() {
        return None;
    }
    Some(chol)
}

/// Solves `A X = B` for symmetric PSD `A`. Falls back to `A + λI` with
/// `λ = 1e-12 · trace(A) / n` when `A` is numerically singular, and reports
/// that it did so.
pub(crate) fn spd_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> SpdSolution {
    if let Some(chol) = try_cholesky(a) {
        return SpdSolution { x: chol.solve(b), degenerate: false };
    }
    let scale = mean_diag(a).abs().max(f64::MIN_POSITIVE);
    let mut ridge = RIDGE_SCALE * scale;
    loop {
        let mut reg = a.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += ridge;
        }
        if let Some(chol) = reg.cholesky() {
            return SpdSolution { x: chol.solve(b), degenerate: true };
        }
        ridge *= 10.0;
    }
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub(crate) fn eigen_extremes(a: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(a.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// `F` with `F Fᵀ = A` for symmetric PSD `A`, clipping tiny negative
/// eigenvalues to zero.
pub(crate) fn psd_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(chol) = a.clone().cholesky() {
        return chol.l();
    }
    let eig = SymmetricEigen::new(a.clone());
    let mut f = eig.eigenvectors.clone();
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        let s = libm::sqrt(l.max(0.0));
        f.column_mut(j).scale_mut(s);
    }
    f
}

pub(crate) fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..i {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}
