//! Index-parallel evaluation with order-independent results.

/// Evaluates `f(0..n)` and returns results in index order.
///
/// With `workers == Some(k)` a dedicated pool of `k` threads is used;
/// `None` uses the global pool. Output never depends on the worker count.
pub fn map_indices<T, F>(n: usize, workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let run = || (0..n).into_par_iter().map(&f).collect::<Vec<T>>();
        match workers {
            Some(k) => rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map(|pool| pool.install(run))
                .unwrap_or_else(|_| (0..n).map(&f).collect()),
            None => run(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        (0..n).map(f).collect()
    }
}

/// Fixed-shape pairwise summation; the result depends only on the slice.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}
