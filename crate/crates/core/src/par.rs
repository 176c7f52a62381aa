//! Data-parallel helpers. With the `parallel` feature the work is spread over
//! the rayon pool; without it, or with [`Execution::Sequential`], it runs on
//! the calling thread. Results are identical either way: parallel work only
//! ever writes disjoint outputs, and reductions run sequentially over those.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

// The default variant depends on the feature set.
#[allow(clippy::derivable_impls)]
impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

impl Execution {
    pub fn all() -> Vec<Execution> {
        vec![
            Execution::Sequential,
            #[cfg(feature = "parallel")]
            Execution::Parallel,
        ]
    }
}

/// Fills a row-major buffer of `width` columns; `f(column, row)` gives each value.
pub fn fill_rows<T, F>(values: &mut [T], width: usize, exec: Execution, f: F)
where
    T: Send,
    F: Fn(usize, usize) -> T + Sync,
{
    let fill = |(row, chunk): (usize, &mut [T])| {
        for (col, v) in chunk.iter_mut().enumerate() {
            *v = f(col, row);
        }
    };
    match exec {
        Execution::Sequential => values.chunks_mut(width).enumerate().for_each(fill),
        #[cfg(feature = "parallel")]
        Execution::Parallel => values.par_chunks_mut(width).enumerate().for_each(fill),
    }
}

/// Maps every row of a row-major buffer to one value, in row order.
pub fn map_rows<T, U, F>(values: &[T], width: usize, exec: Execution, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &[T]) -> U + Sync,
{
    match exec {
        Execution::Sequential => values.chunks(width).enumerate().map(|(r, c)| f(r, c)).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => values.par_chunks(width).enumerate().map(|(r, c)| f(r, c)).collect(),
    }
}

/// Order-preserving map over independent items.
pub fn map<T, U, F>(items: &[T], exec: Execution, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match exec {
        Execution::Sequential => items.iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => items.par_iter().map(f).collect(),
    }
}
