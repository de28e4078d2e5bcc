//! Fan-out over independent seeds. With the `parallel` feature the work is
//! spread over the rayon pool; otherwise it runs in order on the caller's
//! thread. Either way the output order matches `seeds`.

pub fn map_seeds<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        seeds.par_iter().map(|&s| f(s)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_seeds_sequential(seeds, f)
    }
}

pub fn map_seeds_sequential<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    seeds.iter().map(|&s| f(s)).collect()
}
