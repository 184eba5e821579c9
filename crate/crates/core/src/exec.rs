//! Execution policy for data-parallel loops.

/// How a batch of independent work items is executed.
///
/// Output order always follows input order, so results do not depend on the
/// policy or on the worker count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    #[default]
    Sequential,
    /// Run on a dedicated pool with the given number of workers. Without the
    /// `parallel` feature this is the same as `Sequential`.
    Parallel { workers: usize },
}

impl Exec {
    /// `workers <= 1` maps to `Sequential`.
    pub fn with_workers(workers: usize) -> Self {
        if workers <= 1 {
            Exec::Sequential
        } else {
            Exec::Parallel { workers }
        }
    }

    pub fn workers(&self) -> usize {
        match self {
            Exec::Sequential => 1,
            Exec::Parallel { workers } => *workers,
        }
    }

    /// Maps `f` over `items`, preserving order.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Exec::Sequential => items.iter().map(f).collect(),
            Exec::Parallel { workers } => par_map(*workers, items, f),
        }
    }

    /// Maps a fallible `f` over `items`; returns the first error in input order.
    pub fn try_map<T, R, E, F>(&self, items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(&T) -> Result<R, E> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, R, F>(workers: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        // pool creation only fails on resource exhaustion; degrade to sequential
        Err(_) => items.iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, R, F>(_workers: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_for_any_worker_count() {
        let items: Vec<u64> = (0..1000).collect();
        let seq = Exec::Sequential.map(&items, |x| x * x);
        for w in [2, 3, 8] {
            assert_eq!(Exec::with_workers(w).map(&items, |x| x * x), seq);
        }
    }

    #[test]
    fn try_map_reports_first_error() {
        let items = vec![1, 2, 3, 4];
        let r: Result<Vec<i32>, i32> = Exec::with_workers(4).try_map(&items, |&x| if x >= 3 { Err(x) } else { Ok(x) });
        assert_eq!(r, Err(3));
    }
}
