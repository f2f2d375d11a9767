use rayon::ThreadPoolBuilder;

/// Run `f` on a dedicated rayon pool with `jobs` workers (0 = one per core).
pub fn with_pool<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    let pool = ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("failed to start worker pool");
    pool.install(f)
}
