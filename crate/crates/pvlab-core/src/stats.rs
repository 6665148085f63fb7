//! Small summary statistics shared by the oracles and predictors.

/// Mean and standard error of a sample, accumulated in index order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        // Welford
        let (mut n, mut mean, mut m2) = (0usize, 0.0f64, 0.0f64);
        for v in values {
            n += 1;
            let d = v - mean;
            mean += d / n as f64;
            m2 += d * (v - mean);
        }
        let std_error = if n > 1 { libm::sqrt(m2 / (n - 1) as f64 / n as f64) } else { 0.0 };
        Self { mean, std_error, n }
    }
}

/// Peak signal-to-noise ratio in dB. A zero error maps to `+inf`.
pub fn psnr(per_pixel_mse: f64, max_val: f64) -> f64 {
    if per_pixel_mse <= 0.0 {
        f64::INFINITY
    } else {
        10.0 * libm::log10(max_val * max_val / per_pixel_mse)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_closed_form() {
        assert!((psnr(0.01, 1.0) - 20.0).abs() < 1e-12);
        assert_eq!(psnr(0.0, 1.0), f64::INFINITY);
        assert!(psnr(0.02, 1.0) < psnr(0.01, 1.0));
    }

    #[test]
    fn mean_estimate() {
        let m = MeanEstimate::from_values([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        // sample sd = sqrt(5/3); se = sd / 2
        assert!((m.std_error - libm::sqrt(5.0 / 3.0) / 2.0).abs() < 1e-15);
    }
}
