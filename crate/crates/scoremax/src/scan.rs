//! Parallel horizon scan. Each horizon's program is independent, so the
//! scan is a parallel map followed by the same reduction the sequential
//! solver uses.

use rayon::prelude::*;
use scoremax_core::model::BeliefSystem;
use scoremax_core::optimizer::{finish_report, scan_range, solve_horizon, Mode, OptimizerError, SolveOptions, SolveReport};

/// Environment variable capping worker threads.
pub const THREADS_VAR: &str = "SCOREMAX_THREADS";

/// Thread pool sized by [`THREADS_VAR`], or rayon's default when unset.
pub fn thread_pool() -> rayon::ThreadPool {
    let threads = std::env::var(THREADS_VAR).ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0);
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    b.build().expect("thread pool")
}

/// Same result as [`scoremax_core::optimizer::solve`], with horizons solved
/// concurrently on the current pool.
pub fn solve_parallel(beliefs: &BeliefSystem, mode: Mode, opts: &SolveOptions) -> Result<SolveReport, OptimizerError> {
    let taus: Vec<usize> = scan_range(beliefs).collect();
    let solves = taus.into_par_iter().map(|tau| solve_horizon(beliefs, mode, tau, opts)).collect::<Result<Vec<_>, _>>()?;
    finish_report(beliefs, mode, solves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use scoremax_core::model::{EnvironmentSpec, Rates};
    use scoremax_core::optimizer::solve;

    #[test]
    fn parallel_matches_sequential() {
        let b = BeliefSystem::new(EnvironmentSpec {
            delta: 0.1,
            periods: 12,
            prior: 0.4,
            cost: 0.1,
            lambda: Rates::new(1.0, 0.3, 0.0, 0.0),
        })
        .unwrap();
        for mode in [Mode::Dynamic, Mode::Static] {
            let opts = SolveOptions::default();
            assert_eq!(solve_parallel(&b, mode, &opts).unwrap(), solve(&b, mode, &opts).unwrap());
        }
    }
}
