//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature disabled every [`Exec`] runs sequentially.

/// How to run a batch of independent tasks.
#[derive(Debug, Copy, Clone, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// `workers == 0` uses all available cores.
    Parallel { workers: usize },
}

impl Default for Exec {
    fn default() -> Self {
        Exec::Parallel { workers: 0 }
    }
}

impl Exec {
    pub fn with_workers(workers: usize) -> Exec {
        if workers == 1 {
            Exec::Sequential
        } else {
            Exec::Parallel { workers }
        }
    }

    /// `f(0), ..., f(n - 1)` in index order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match *self {
            Exec::Sequential => (0..n).map(f).collect(),
            Exec::Parallel { workers } => parallel_map(n, workers, f),
        }
    }

    /// Like [`Exec::map`] but stops at the first error (in index order).
    pub fn try_map<T, E, F>(&self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let run = || (0..n).into_par_iter().map(&f).collect();
    if workers == 0 {
        return run();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(run),
        Err(_) => (0..n).map(&f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(n: usize, _workers: usize, f: F) -> Vec<T>
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
    fn parallel_matches_sequential() {
        let f = |i: usize| (i as u64).wrapping_mul(2654435761) % 1000;
        let a = Exec::Sequential.map(1000, f);
        let b = Exec::Parallel { workers: 3 }.map(1000, f);
        assert_eq!(a, b);
    }

    #[test]
    fn try_map_reports_first_error() {
        let r: Result<Vec<usize>, usize> = Exec::default().try_map(50, |i| if i % 7 == 6 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(6));
    }
}
