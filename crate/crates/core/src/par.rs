//! Order-preserving parallel maps over index ranges. Falls back to a plain
//! loop when the `parallel` feature is off.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn map_range<T: Send>(range: Range<usize>, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    range.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<T: Send>(range: Range<usize>, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    range.map(f).collect()
}

/// Like [`map_range`], returning the error of the lowest failing index.
pub fn try_map_range<T: Send, E: Send>(
    range: Range<usize>,
    f: impl Fn(usize) -> Result<T, E> + Sync + Send,
) -> Result<Vec<T>, E> {
    map_range(range, f).into_iter().collect()
}
