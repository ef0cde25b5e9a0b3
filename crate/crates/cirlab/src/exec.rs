//! Execution substrate: data-parallel map over event indices with a
//! sequential fallback. The `parallel` feature (on by default) routes
//! through rayon; results are index-ordered either way, so ensemble
//! statistics are bit-identical across both substrates.

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Always-sequential variant, available regardless of features; used by the
/// benchmark suite as the comparison baseline.
pub fn map_indexed_seq<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_in_order() {
        let par = map_indexed(257, |i| i * i);
        let seq = map_indexed_seq(257, |i| i * i);
        assert_eq!(par, seq);
    }
}
