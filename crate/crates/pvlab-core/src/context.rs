use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// A set of earlier frames used to predict the clean frame, stored as lags:
/// lag `j` is frame `x_{T-j}`. Lags are kept sorted ascending and unique, so
/// `{1, 2}` is `{x_{T-1}, x_{T-2}}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Context {
    lags: Vec<usize>,
}

impl Context {
    pub fn new(mut lags: Vec<usize>) -> Result<Self> {
        lags.sort_unstable();
        lags.dedup();
        if lags.is_empty() {
            return invalid("context set must be nonempty");
        }
        if lags[0] == 0 {
            return invalid("lag 0 is the target frame and cannot be in its own context");
        }
        Ok(Self { lags })
    }

    /// The `k` most recent frames `{x_{T-1}, …, x_{T-k}}`.
    pub fn recent(k: usize) -> Result<Self> {
        Self::new((1..=k).collect())
    }

    pub fn lags(&self) -> &[usize] {
        &self.lags
    }

    pub fn len(&self) -> usize {
        self.lags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lags.is_empty()
    }

    pub fn max_lag(&self) -> usize {
        self.lags[self.lags.len() - 1]
    }

    pub fn is_subset_of(&self, other: &Context) -> bool {
        self.lags.iter().all(|l| other.lags.binary_search(l).is_ok())
    }

    /// Checks every lag refers to an existing frame of a `n_frames` video.
    pub fn check_frames(&self, n_frames: usize) -> Result<()> {
        if self.max_lag() >= n_frames {
            return invalid(format!(
                "context {self} refers to a frame older than x_1 in a {n_frames}-frame chain"
            ));
        }
        Ok(())
    }

    /// Index-set label in subscript notation, e.g. `{T-1,T-2}`.
    pub fn label(&self) -> String {
        let parts: Vec<String> = self.lags.iter().map(|l| format!("T-{l}")).collect();
        format!("{{{}}}", parts.join(","))
    }
}

impl core::fmt::Display for Context {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.label())
    }
}

/// Verifies `contexts` form a chain `S_1 ⊆ S_2 ⊆ …`.
pub fn check_nested(contexts: &[Context]) -> Result<()> {
    if contexts.is_empty() {
        return invalid("at least one context set is required");
    }
    for (i, w) in contexts.windows(2).enumerate() {
        if !w[0].is_subset_of(&w[1]) {
            return invalid(format!("context {} is not contained in context {}: {} vs {}", i, i + 1, w[0], w[1]));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn normalizes_and_labels() {
        let c = Context::new(vec![2, 1, 2]).unwrap();
        assert_eq!(c.lags(), &[1, 2]);
        assert_eq!(c.label(), "{T-1,T-2}");
        assert!(Context::new(vec![]).is_err());
        assert!(Context::new(vec![0]).is_err());
    }

    #[test]
    fn nesting() {
        let a = Context::recent(1).unwrap();
        let b = Context::recent(2).unwrap();
        let c = Context::new(vec![3]).unwrap();
        assert!(check_nested(&[a.clone(), b.clone()]).is_ok());
        assert!(check_nested(&[a.clone(), a.clone()]).is_ok());
        assert!(check_nested(&[b, a.clone()]).is_err());
        assert!(check_nested(&[a, c]).is_err());
    }
}
