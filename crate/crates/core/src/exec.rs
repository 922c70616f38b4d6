//! Data-parallel map over independent lines, with a sequential fallback.
//!
//! Every parallel region in the crate goes through [`map_indexed`]: each
//! index is computed by a pure closure and results come back in index order,
//! so the output is identical for any thread count.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    /// Rayon work-stealing map. Without the `parallel` feature this runs
    /// sequentially.
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run in parallel.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// `(start..end).map(f).collect()`, possibly in parallel.
pub fn map_indexed<T, F>(exec: Execution, start: usize, end: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (start..end).into_par_iter().map(f).collect()
        }
        _ => (start..end).map(f).collect(),
    }
}

/// Fallible variant of [`map_indexed`]; returns the error with the lowest index.
pub fn try_map_indexed<T, E, F>(exec: Execution, start: usize, end: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_indexed(exec, start, end, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_parallel_agree() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let a = map_indexed(Execution::Sequential, 3, 500, f);
        let b = map_indexed(Execution::Parallel, 3, 500, f);
        assert_eq!(a, b);
        assert_eq!(a.len(), 497);
    }

    #[test]
    fn first_error_wins() {
        let r: Result<Vec<usize>, usize> =
            try_map_indexed(Execution::Parallel, 0, 100, |i| if i % 7 == 6 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(6));
    }
}
