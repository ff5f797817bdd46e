//! Data-parallel iteration with a sequential fallback.
//!
//! With the `parallel` feature (default) the functions dispatch to rayon;
//! without it they run sequentially. Both paths visit items in slice order
//! semantics-wise (results are written to the item's own slot), so outputs
//! are identical regardless of thread count. The `*_seq` variants are always
//! sequential and exist so benchmarks can compare the two paths in one build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f` to every element, in parallel when enabled.
#[cfg(feature = "parallel")]
pub fn for_each_mut<T: Send, F: Fn(&mut T) + Send + Sync>(items: &mut [T], f: F) {
    items.par_iter_mut().for_each(f);
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_mut<T, F: Fn(&mut T)>(items: &mut [T], f: F) {
    items.iter_mut().for_each(f);
}

/// Maps a slice to a vector, in parallel when enabled; output order matches
/// input order.
#[cfg(feature = "parallel")]
pub fn map<T: Sync, U: Send, F: Fn(&T) -> U + Send + Sync>(items: &[T], f: F) -> Vec<U> {
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, U, F: Fn(&T) -> U>(items: &[T], f: F) -> Vec<U> {
    items.iter().map(f).collect()
}

/// Caps worker parallelism (the `MDLGPSR_THREADS` environment knob). Must be
/// called before any parallel work; a no-op in sequential builds.
#[cfg(feature = "parallel")]
pub fn set_thread_cap(threads: usize) -> Result<(), String> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

#[cfg(not(feature = "parallel"))]
pub fn set_thread_cap(_threads: usize) -> Result<(), String> {
    Ok(())
}

/// Always-sequential counterpart of [`for_each_mut`].
pub fn for_each_mut_seq<T, F: Fn(&mut T)>(items: &mut [T], f: F) {
    items.iter_mut().for_each(f);
}

/// Always-sequential counterpart of [`map`].
pub fn map_seq<T, U, F: Fn(&T) -> U>(items: &[T], f: F) -> Vec<U> {
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let items: Vec<u64> = (0..1000).collect();
        let a = map(&items, |v| v * v + 1);
        let b = map_seq(&items, |v| v * v + 1);
        assert_eq!(a, b);

        let mut xs = items.clone();
        let mut ys = items;
        for_each_mut(&mut xs, |v| *v = v.wrapping_mul(31));
        for_each_mut_seq(&mut ys, |v| *v = v.wrapping_mul(31));
        assert_eq!(xs, ys);
    }
}
