//! Runtime choice between the rayon pool and a plain loop. Work is always cut
//! into the same fixed batches, so results never depend on the worker count.

/// How batched work is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    #[default]
    Sequential,
    /// A dedicated pool with this many workers; `0` uses the global pool.
    /// Without the `parallel` feature this runs sequentially.
    Threads(usize),
}

impl Parallelism {
    pub fn from_workers(workers: usize) -> Self {
        if workers <= 1 {
            Parallelism::Sequential
        } else {
            Parallelism::Threads(workers)
        }
    }

    pub fn is_parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// `f(0), …, f(n - 1)` in index order.
pub fn map_indexed<T, F>(n: usize, par: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match par {
        Parallelism::Sequential => (0..n).map(f).collect(),
        Parallelism::Threads(workers) => run_parallel(n, workers, f),
    }
}

#[cfg(feature = "parallel")]
fn run_parallel<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if workers == 0 {
        return (0..n).into_par_iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(_) => (0..n).map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_parallel<T, F>(n: usize, _workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let seq = map_indexed(1000, Parallelism::Sequential, |i| i * i);
        for w in [0, 2, 5] {
            assert_eq!(map_indexed(1000, Parallelism::Threads(w), |i| i * i), seq);
        }
    }
}
