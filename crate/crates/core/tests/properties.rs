//! Randomized invariants across modules.

use proptest::prelude::*;
use scoremax_core::agent::brute_force_oracle;
use scoremax_core::contracts::indirect_utility;
use scoremax_core::lp::{solve_with, Constraint, LinearProgram, SolverOptions};
use scoremax_core::optimizer::{solve, Mode, SolveOptions, SolvedContract};
use scoremax_core::{
    best_response, canonicalize, check_ic, BeliefSystem, EnvironmentSpec, MenuContract, Rates, RewardPair,
    StaticScoringRule,
};

fn pair() -> impl Strategy<Value = RewardPair> {
    (0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(r0, r1)| RewardPair { r0, r1 })
}

fn rule() -> impl Strategy<Value = StaticScoringRule> {
    prop::collection::vec(pair(), 1..5).prop_map(|o| StaticScoringRule::new(o, None).unwrap())
}

/// Valid environments: `g1 ≥ g0`, `b0 ≥ b1`, rates sometimes switched off.
fn environment(max_periods: usize) -> impl Strategy<Value = EnvironmentSpec> {
    let rate = prop_oneof![1 => Just(0.0), 4 => 0.0..2.0f64];
    (0.05..0.2f64, 1..=max_periods, 0.05..0.95f64, 0.0..0.6f64, rate.clone(), rate.clone(), rate.clone(), rate)
        .prop_map(|(delta, periods, prior, cost, x, y, u, w)| EnvironmentSpec {
            delta,
            periods,
            prior,
            cost,
            lambda: Rates::new(x.max(y), x.min(y), u.min(w), u.max(w)),
        })
        .prop_filter("valid environment", |e| e.validate().is_ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn indirect_utility_is_convex(opts in prop::collection::vec(pair(), 1..6), a in 0.0..=1.0f64, b in 0.0..=1.0f64, t in 0.0..=1.0f64) {
        let u = |m| indirect_utility(&opts, m).unwrap().0;
        let mid = t * a + (1.0 - t) * b;
        prop_assert!(u(mid) <= t * u(a) + (1.0 - t) * u(b) + 1e-12);
    }

    #[test]
    fn static_rules_are_incentive_compatible_menus(env in environment(10), r in rule(), frac in 0.0..=1.0f64) {
        let b = BeliefSystem::new(env).unwrap();
        let tau = (frac * b.periods() as f64).round() as usize;
        let c = MenuContract::from_static(&b, &r, tau);
        prop_assert!(check_ic(&c, &b).unwrap().is_empty());
    }

    #[test]
    fn canonicalization_is_idempotent_and_keeps_effort(env in environment(10), r in rule(), frac in 0.0..=1.0f64) {
        let b = BeliefSystem::new(env).unwrap();
        let tau = (frac * b.periods() as f64).round() as usize;
        let c = MenuContract::from_static(&b, &r, tau);
        let once = canonicalize(&c, &b).unwrap();
        let twice = canonicalize(&once, &b).unwrap();
        prop_assert!(check_ic(&once, &b).unwrap().is_empty());
        for ((s1, x), (s2, y)) in once.slots().iter().zip(twice.slots().iter()) {
            prop_assert_eq!(s1, s2);
            prop_assert!(x.approx_eq(y, 1e-9), "{:?} vs {:?}", x, y);
        }
        // Paying (1, 0) after bad or no news only keeps effort for
        // effort-maximizing contracts; see `solved_contracts_canonicalize`.
        if !env.classify().perfect_learning && best_response(&b, &c).tau_star == tau {
            prop_assert!(best_response(&b, &once).tau_star >= tau);
        }
    }

    #[test]
    fn oracle_agrees_with_backward_induction(env in environment(8), r in rule(), frac in 0.0..=1.0f64) {
        let b = BeliefSystem::new(env).unwrap();
        let tau = (frac * b.periods() as f64).round() as usize;
        let c = MenuContract::from_static(&b, &r, tau);
        let o = brute_force_oracle(&b, &c).unwrap();
        let dp = best_response(&b, &c);
        prop_assert!((o.best_value - dp.value[0]).abs() <= 1e-9);
        prop_assert!(o.front_loading_gap() <= 1e-9);
    }

    #[test]
    fn certified_horizons_are_implemented(env in environment(8)) {
        let b = BeliefSystem::new(env).unwrap();
        let opts = SolveOptions::default();
        let d = solve(&b, Mode::Dynamic, &opts).unwrap();
        let s = solve(&b, Mode::Static, &opts).unwrap();
        prop_assert!(d.tau_star >= s.tau_star);
        prop_assert!(d.contract.tau_star(&b) >= d.tau_star);
        prop_assert!(s.contract.tau_star(&b) >= s.tau_star);
    }

    #[test]
    fn solved_contracts_canonicalize(env in environment(8)) {
        let b = BeliefSystem::new(env).unwrap();
        let d = solve(&b, Mode::Dynamic, &SolveOptions::default()).unwrap();
        let SolvedContract::Menu(c) = &d.contract else { unreachable!("dynamic solves return menus") };
        let canon = canonicalize(c, &b).unwrap();
        prop_assert!(check_ic(&canon, &b).unwrap().is_empty());
        prop_assert!(best_response(&b, &canon).tau_star >= d.tau_star);
    }

    #[test]
    fn float_and_exact_simplex_agree(
        rows in prop::collection::vec((prop::collection::vec(-3i32..=3, 3), -4i32..=4), 1..6),
    ) {
        let mut lp = LinearProgram::new(3);
        for (coeffs, rhs) in &rows {
            let c = coeffs.iter().enumerate().map(|(j, &a)| (j, a as f64)).collect();
            lp.add(Constraint::ge(c, *rhs as f64)).unwrap();
        }
        let float = solve_with(&lp, &SolverOptions::default()).unwrap();
        let exact = solve_with(&lp, &SolverOptions { exact: true, ..SolverOptions::default() }).unwrap();
        prop_assert_eq!(float.status, exact.status);
        if let Some(x) = float.point {
            prop_assert!(lp.max_residual(&x) <= 1e-8);
        }
    }
}
