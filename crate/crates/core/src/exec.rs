//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) the index-map and reduction helpers
//! run on the rayon pool when [`Execution::Parallel`] is selected. Without the
//! feature every policy falls back to a plain sequential loop, so results are
//! bit-identical either way: reductions are always folded in index order.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Evaluates `f(i)` for `i in 0..len` and collects the results in index order.
pub fn map_indices<T, F>(exec: Execution, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// Fallible variant of [`map_indices`]; returns the first error by index.
pub fn try_map_indices<T, E, F>(exec: Execution, len: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_indices(exec, len, f).into_iter().collect()
}

/// Sums `f(i)` over `0..len` into a vector accumulator of dimension `dim`.
///
/// The parallel path computes fixed-size chunk partial sums and adds them in
/// chunk order, so the rounding pattern does not depend on the thread count.
pub fn sum_vectors<F>(exec: Execution, len: usize, dim: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    const CHUNK: usize = 512;
    let chunks = len.div_ceil(CHUNK);
    let partial = |c: usize| {
        let mut acc = vec![0.0; dim];
        let end = ((c + 1) * CHUNK).min(len);
        for i in c * CHUNK..end {
            f(i, &mut acc);
        }
        acc
    };
    let parts: Vec<Vec<f64>> = if exec.is_parallel() && chunks > 1 {
        map_indices(exec, chunks, partial)
    } else {
        (0..chunks).map(partial).collect()
    };
    let mut total = vec![0.0; dim];
    for p in parts {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_parallel_sums_agree_bitwise() {
        let f = |i: usize, acc: &mut [f64]| {
            acc[0] += (i as f64).sqrt();
            acc[1] += 1.0 / (1.0 + i as f64);
        };
        let a = sum_vectors(Execution::Sequential, 10_000, 2, f);
        let b = sum_vectors(Execution::Parallel, 10_000, 2, f);
        assert_eq!(a, b);
    }

    #[test]
    fn map_keeps_index_order() {
        let v = map_indices(Execution::Parallel, 1000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, x)| *x == 2 * i));
    }
}
