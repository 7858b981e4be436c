//! Order-preserving data-parallel map.
//!
//! With the `parallel` feature, [`Parallelism::Parallel`] fans out over the
//! rayon pool; without it every call runs sequentially.

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

impl Parallelism {
    /// Whether `Parallel` actually runs in parallel in this build.
    pub fn available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// Map `f` over `items`, returning results in input order.
pub fn map_ordered<T, R, F>(items: &[T], parallelism: Parallelism, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match parallelism {
        #[cfg(feature = "parallel")]
        Parallelism::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}
