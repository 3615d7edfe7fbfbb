//! Data-parallel map over independent work items.
//!
//! With the `parallel` feature the work is spread over a rayon pool;
//! without it the same calls run sequentially in order. Results are always
//! returned in input order, so output does not depend on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Whether this build distributes work across threads.
pub const PARALLEL: bool = cfg!(feature = "parallel");

/// `items.map(f)` on the global pool.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// `items.map(f)` on a pool of `jobs` workers (`None`: available parallelism).
pub fn map_with_jobs<T, R, F>(items: &[T], jobs: Option<usize>, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        match jobs {
            Some(n) if n >= 1 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
                Err(_) => items.iter().map(f).collect(),
            },
            _ => map(items, f),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        items.iter().map(f).collect()
    }
}

/// Sequential reference used by benchmarks and tests.
pub fn map_sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let expect: Vec<u64> = xs.iter().map(|x| x * x).collect();
        assert_eq!(map(&xs, |x| x * x), expect);
        assert_eq!(map_with_jobs(&xs, Some(3), |x| x * x), expect);
        assert_eq!(map_with_jobs(&xs, None, |x| x * x), expect);
        assert_eq!(map_sequential(&xs, |x| x * x), expect);
    }
}
