//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (on by default) `Execution::Parallel` runs on
//! the rayon pool; without it both variants run sequentially. Results are
//! always merged in index order so output never depends on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..len).map(f).collect()` in index order.
pub fn map_range<R, F>(exec: Execution, len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// First index (smallest) for which `f` returns `Some`, with its value.
pub fn find_first<R, F>(exec: Execution, len: usize, f: F) -> Option<(usize, R)>
where
    R: Send,
    F: Fn(usize) -> Option<R> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..len)
            .into_par_iter()
            .find_map_first(|i| f(i).map(|r| (i, r)));
    }
    let _ = exec;
    (0..len).find_map(|i| f(i).map(|r| (i, r)))
}

/// Caps the global pool at `threads` workers. Returns false if the pool was
/// already initialized or the feature is off.
pub fn init_threads(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree() {
        let seq = map_range(Execution::Sequential, 100, |i| i * i);
        let par = map_range(Execution::Parallel, 100, |i| i * i);
        assert_eq!(seq, par);
    }

    #[test]
    fn find_first_is_smallest_index() {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let hit = find_first(exec, 1000, |i| (i % 97 == 13).then_some(i * 2));
            assert_eq!(hit, Some((13, 26)));
        }
        assert_eq!(find_first(Execution::Parallel, 10, |_| None::<u8>), None);
    }
}
