//! Small end-to-end scenarios through the public API.

use scoremax_core::contracts::{myopic_incentive_contract, MyopicOrientation};
use scoremax_core::optimizer::{solve, solve_vshaped_grid, staticize_single_signal, Mode, SolveOptions, SolvedContract};
use scoremax_core::{best_response, check_ic, v_shaped_from_kink, BeliefSystem, EnvironmentSpec, Rates};

fn beliefs(periods: usize, prior: f64, cost: f64, r: [f64; 4]) -> BeliefSystem {
    BeliefSystem::new(EnvironmentSpec { delta: 0.1, periods, prior, cost, lambda: Rates::new(r[0], r[1], r[2], r[3]) })
        .unwrap()
}

#[test]
fn stationary_kink_at_prior_is_optimal() {
    let b = beliefs(15, 0.3, 0.05, [1.0, 0.5, 0.5, 1.0]);
    let d = solve(&b, Mode::Dynamic, &SolveOptions::default()).unwrap();
    let kink = best_response(&b, &v_shaped_from_kink(0.3).unwrap().rule()).tau_star;
    assert_eq!(d.tau_star, kink);
    assert_eq!(d.tau_star, 15);
}

#[test]
fn perfect_learning_grid_matches_dynamic_program() {
    let b = beliefs(20, 0.35, 0.2, [1.0, 0.0, 0.0, 0.0]);
    let d = solve(&b, Mode::Dynamic, &SolveOptions::default()).unwrap();
    let g = solve_vshaped_grid(&b, 1e-3).unwrap();
    assert_eq!(d.tau_star, g.tau);
}

#[test]
fn single_signal_staticizes_without_loss() {
    let b = beliefs(12, 0.4, 0.1, [1.2, 0.4, 0.0, 0.0]);
    let opts = SolveOptions::default();
    let d = solve(&b, Mode::Dynamic, &opts).unwrap();
    let s = solve(&b, Mode::Static, &opts).unwrap();
    assert_eq!(d.tau_star, s.tau_star);
    let SolvedContract::Menu(menu) = &d.contract else { panic!("dynamic solve returns a menu") };
    let rule = staticize_single_signal(&b, menu, d.tau_star).unwrap();
    assert_eq!(best_response(&b, &rule).tau_star, d.tau_star);
}

#[test]
fn dynamic_beats_static_under_slow_drift() {
    let b = beliefs(40, 0.35, 0.136, [1.0, 0.6, 0.60, 0.99]);
    let opts = SolveOptions::default();
    let d = solve(&b, Mode::Dynamic, &opts).unwrap();
    let s = solve(&b, Mode::Static, &opts).unwrap();
    assert!(d.tau_star > s.tau_star, "{} vs {}", d.tau_star, s.tau_star);
    let myopic = myopic_incentive_contract(&b, b.max_horizon(), MyopicOrientation::Swapped).unwrap();
    assert!(check_ic(&myopic, &b).unwrap().is_empty());
}
