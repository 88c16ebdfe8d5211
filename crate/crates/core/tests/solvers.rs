use std::sync::Arc;

use mvip::baselines::*;
use mvip::linesearch::{backtrack, LineSearchParams};
use mvip::operators::*;
use mvip::problems::{cubic_l1, L2Instance};
use mvip::solver::*;
use mvip::trace::{StoppingRule, TerminalStatus};
use mvip::{Inclusion, InnerProductSpace};
use ndarray::{array, Array1, Array2, ArrayView1};
use proptest::prelude::*;

/// `B(u) = Mu + c ⊙ u³` with `M = SᵀS + (K − Kᵀ)`: monotone, and
/// non-Lipschitz when `c ≠ 0`.
fn monotone_map(entries: &[f64], cubic: f64, d: usize) -> impl ForwardOperator + Clone {
    let s = Array2::from_shape_vec((d, d), entries[..d * d].to_vec()).unwrap();
    let k = Array2::from_shape_vec((d, d), entries[d * d..2 * d * d].to_vec()).unwrap();
    let m = s.t().dot(&s) + &k - k.t();
    let m = Arc::new(m);
    FnForward::new("poly", move |u: ArrayView1<f64>| {
        m.dot(&u) + u.mapv(|x| cubic * x * x * x)
    })
}

fn ifb_plain(gamma: f64) -> SolverConfig {
    let mut cfg = SolverConfig::benchmark_defaults(StoppingRule::iter_cap_only());
    cfg.gamma = gamma;
    cfg.inertia = InertiaSchedule::Constant(0.0);
    cfg
}

#[test]
fn cubic_with_l1_reaches_zero() {
    let p = cubic_l1(2).unwrap();
    assert_eq!(p.u1, array![2.0, -2.0]);
    let mut cfg = SolverConfig::benchmark_defaults(StoppingRule::successive_diff(1e-12));
    cfg.max_iters = 500;
    let out = solve_with_solution(
        &p.inclusion,
        p.u0.view(),
        p.u1.view(),
        &cfg,
        p.known_solution.as_ref(),
    )
    .unwrap();
    let n = out.solution.dot(&out.solution).sqrt();
    assert!(n <= 1e-6, "‖u‖ = {n}, status {:?}", out.trace.status);
    assert!(out.trace.violations.is_empty());
}

#[test]
fn solve_is_deterministic() {
    let p = L2Instance::new(101, 2).unwrap().assemble().unwrap();
    let mut cfg = SolverConfig::benchmark_defaults(StoppingRule::iter_cap_only());
    cfg.max_iters = 40;
    let a = solve(&p.inclusion, p.u0.view(), p.u1.view(), &cfg).unwrap();
    let b = solve(&p.inclusion, p.u0.view(), p.u1.view(), &cfg).unwrap();
    assert_eq!(a.solution, b.solution);
    let strip = |t: &mvip::IterationTrace| {
        t.records
            .iter()
            .map(|r| (r.step, r.delta, r.residual, r.error))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a.trace), strip(&b.trace));
}

#[test]
fn eval_counters_are_exact() {
    // With B = identity every line search evaluates B at w plus once per trial.
    let problem = Inclusion::new(
        IdentityMap,
        IdentityResolvent,
        InnerProductSpace::euclidean(2),
    );
    let mut cfg = ifb_plain(1.0);
    cfg.max_iters = 3;
    let out = solve(
        &problem,
        array![1.0, 1.0].view(),
        array![1.0, 1.0].view(),
        &cfg,
    )
    .unwrap();
    for r in &out.trace.records {
        let trials = r.backtracks.unwrap() as usize + 1;
        assert_eq!(r.resolvent_evals, trials);
        assert_eq!(r.forward_evals, trials + 1);
    }
}

#[test]
fn warm_start_still_satisfies_invariants() {
    let p = L2Instance::new(201, 3).unwrap().assemble().unwrap();
    let mut cfg = SolverConfig::benchmark_defaults(StoppingRule::successive_diff(1e-10));
    cfg.warm_start = true;
    let out = solve_with_solution(
        &p.inclusion,
        p.u0.view(),
        p.u1.view(),
        &cfg,
        p.known_solution.as_ref(),
    )
    .unwrap();
    assert!(out.trace.violations.is_empty());
    assert!(out.trace.final_dist_sq().unwrap() < 1e-12);
}

#[test]
fn exhausted_backtracking_is_reported() {
    let sign = FnForward::new("sign", |u: ArrayView1<f64>| {
        u.mapv(|x| if x > 0.0 { 1.0 } else { -1.0 })
    });
    let problem = Inclusion::new(sign, IdentityResolvent, InnerProductSpace::euclidean(1));
    let mut cfg = ifb_plain(1.0);
    cfg.linesearch.max_backtracks = 5;
    let out = solve(&problem, array![1e-300].view(), array![1e-300].view(), &cfg).unwrap();
    assert_eq!(out.trace.status, TerminalStatus::BacktrackExhausted);
    assert!(out.trace.message.is_some());
}

#[test]
fn divergence_is_reported() {
    // B(u) = −1000u is not monotone; the iterates grow geometrically.
    let bad = FnForward::new("anti", |u: ArrayView1<f64>| u.mapv(|x| -1e3 * x));
    let problem = Inclusion::new(bad, IdentityResolvent, InnerProductSpace::euclidean(1));
    let mut cfg = ifb_plain(1.9);
    cfg.max_iters = 10_000;
    let out = solve(&problem, array![1.0].view(), array![1.0].view(), &cfg).unwrap();
    assert_eq!(out.trace.status, TerminalStatus::Diverged);
}

#[test]
fn proximal_point_and_explicit_step_reductions() {
    let space = InnerProductSpace::euclidean(3);
    let cfg = ifb_plain(1.0);
    let u = array![2.5, -0.3, 1.0];
    let soft = SoftThreshold::new(0.7).unwrap();
    let s = ifb_step(u.view(), u.view(), 1, &ZeroMap, &soft, &space, &cfg).unwrap();
    assert_eq!(s.next, soft.apply(u.view(), s.step));

    let b = FnForward::new("cubic", |u: ArrayView1<f64>| u.mapv(|x| x * x * x));
    let s = ifb_step(u.view(), u.view(), 1, &b, &IdentityResolvent, &space, &cfg).unwrap();
    assert_eq!(s.v, &u - &(b.eval(u.view()) * s.step));
    assert_eq!(
        fb_step(u.view(), s.step, &b, &IdentityResolvent).unwrap(),
        s.v
    );
}

#[test]
fn jx_matches_ifb_on_a_box() {
    let lo = Array1::from_elem(4, -0.5);
    let hi = Array1::from_elem(4, 0.75);
    let k = BoxProjection::new(lo, hi).unwrap();
    let m = array![
        [2.0, 1.0, 0.0, 0.0],
        [-1.0, 1.0, 0.5, 0.0],
        [0.0, -0.5, 3.0, 1.0],
        [0.0, 0.0, -1.0, 0.5]
    ];
    let c = array![1.0, -2.0, 0.5, 3.0];
    let b = FnForward::new("affine", move |u: ArrayView1<f64>| {
        m.dot(&u) + &c + u.mapv(|x| x * x * x)
    });
    let space = InnerProductSpace::euclidean(4);
    let cfg = ifb_plain(1.0);
    let ls = cfg.linesearch;
    let mut u_ifb = array![0.3, 0.2, -0.4, 0.1];
    let mut u_jx = u_ifb.clone();
    for k_iter in 1..=60 {
        let a = ifb_step(u_ifb.view(), u_ifb.view(), k_iter, &b, &k, &space, &cfg).unwrap();
        let j = jx_step(u_jx.view(), &b, &k, &space, &ls, cfg.phi_zero_tol).unwrap();
        assert_eq!(a.phi_zero, j.phi_zero);
        if a.phi_zero {
            break;
        }
        assert_eq!(a.next, j.next, "iterate {k_iter}");
        u_ifb = a.next;
        u_jx = j.next;
    }
}

#[test]
fn baselines_share_trace_schema() {
    let p = L2Instance::new(51, 1).unwrap().assemble().unwrap();
    let stop = StoppingRule::successive_diff(1e-10);
    let methods = vec![
        BaselineMethod::Fb {
            step: StepSchedule::Armijo(LineSearchParams::default()),
        },
        BaselineMethod::Fb {
            step: StepSchedule::Constant(0.5),
        },
        BaselineMethod::Tseng {
            linesearch: LineSearchParams::default(),
        },
        BaselineMethod::zw_default(),
        BaselineMethod::Zw {
            step: StepSchedule::Armijo(LineSearchParams::default()),
            gamma: 1.5,
        },
        BaselineMethod::tc_default(),
        BaselineMethod::Tc(TcParams {
            reading: TcReading::Literal,
            ..TcParams::default()
        }),
        BaselineMethod::Jx {
            linesearch: LineSearchParams::default(),
        },
    ];
    for m in methods {
        let name = m.name();
        let cfg = BaselineConfig::new(m, stop.clone());
        let out = solve_baseline(
            &p.inclusion,
            p.u0.view(),
            p.u1.view(),
            &cfg,
            p.known_solution.as_ref(),
        )
        .unwrap();
        assert_eq!(out.trace.method, name);
        assert!(
            out.trace.violations.is_empty(),
            "{name}: {:?}",
            out.trace.violations.first()
        );
        assert!(!out.trace.records.is_empty());
        for r in &out.trace.records {
            assert!(r.dist_sq.is_some());
            assert!(r.forward_evals >= 1 && r.resolvent_evals >= 1);
        }
        assert!(
            out.trace.final_dist_sq().unwrap() < 1e-6,
            "{name} did not converge"
        );
    }
}

#[test]
fn baseline_parameter_ranges() {
    assert!(BaselineMethod::Zw {
        step: StepSchedule::Harmonic,
        gamma: 2.0
    }
    .validate()
    .is_err());
    assert!(BaselineMethod::Fb {
        step: StepSchedule::Constant(0.0)
    }
    .validate()
    .is_err());
    let bad_tc = TcParams {
        gamma: 0.0,
        ..TcParams::default()
    };
    assert!(BaselineMethod::Tc(bad_tc).validate().is_err());
    let u = array![1.0];
    let sp = InnerProductSpace::euclidean(1);
    let p = TcParams::default();
    assert!(tc_step(
        u.view(),
        u.view(),
        &IdentityMap,
        &IdentityResolvent,
        &sp,
        &p,
        1.0,
        0.1
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn step_invariants_hold(
        entries in prop::collection::vec(-1.0f64..1.0, 32),
        u_prev in prop::collection::vec(-3.0f64..3.0, 4),
        u_curr in prop::collection::vec(-3.0f64..3.0, 4),
        cubic in 0.0f64..2.0,
        sigma in 0.05f64..0.95,
        shrink in 0.1f64..0.9,
        s in 0.1f64..10.0,
        gamma in 0.05f64..1.95,
        theta in 0.0f64..0.9,
        rho in 0.0f64..1.0,
    ) {
        let d = 4;
        let b = monotone_map(&entries, cubic, d);
        let j = SoftThreshold::new(rho).unwrap();
        let space = InnerProductSpace::euclidean(d);
        let mut cfg = ifb_plain(gamma);
        cfg.linesearch = LineSearchParams::new(s, shrink, sigma).unwrap();
        cfg.inertia = InertiaSchedule::Constant(theta);
        let (up, uc) = (Array1::from(u_prev), Array1::from(u_curr));
        let st = ifb_step(up.view(), uc.view(), 1, &b, &j, &space, &cfg).unwrap();
        if let Some(delta) = st.delta {
            let slack = 1e-12;
            let lo = (1.0 - sigma) / ((1.0 + sigma) * (1.0 + sigma));
            let hi = 1.0 / (1.0 - sigma);
            prop_assert!(delta >= lo * (1.0 - slack) && delta <= hi * (1.0 + slack), "delta {delta} not in [{lo}, {hi}]");
            prop_assert!(st.phi_norm >= (1.0 - sigma) * st.residual * (1.0 - slack));
            prop_assert!(st.phi_norm <= (1.0 + sigma) * st.residual * (1.0 + slack));
        }
    }

    #[test]
    fn accepted_step_is_the_largest_passing_trial(
        entries in prop::collection::vec(-1.0f64..1.0, 18),
        w in prop::collection::vec(-3.0f64..3.0, 3),
        cubic in 0.0f64..3.0,
        sigma in 0.05f64..0.95,
        s in 0.5f64..20.0,
    ) {
        let b = monotone_map(&entries, cubic, 3);
        let space = InnerProductSpace::euclidean(3);
        let p = LineSearchParams::new(s, 0.5, sigma).unwrap();
        let w = Array1::from(w);
        let a = backtrack(w.view(), &b, &IdentityResolvent, &space, &p).unwrap();
        let b2 = backtrack(w.view(), &b, &IdentityResolvent, &space, &p).unwrap();
        prop_assert_eq!(&a, &b2);
        let bw = b.eval(w.view());
        let passes = |lambda: f64| {
            let v = &w - &(&bw * lambda);
            let bv = b.eval(v.view());
            lambda * space.norm(&(&bw - &bv).view()) <= sigma * space.norm(&(&w - &v).view())
        };
        prop_assert!(passes(a.step));
        for j in 0..a.exponent {
            prop_assert!(!passes(p.step(j)), "trial {j} passes but was rejected");
        }
    }

    #[test]
    fn fejer_inequality_on_monotone_problems(
        entries in prop::collection::vec(-1.0f64..1.0, 18),
        start in prop::collection::vec(-3.0f64..3.0, 3),
        cubic in 0.0f64..2.0,
        gamma in 0.1f64..1.9,
        theta in 0.0f64..0.5,
    ) {
        // B(0) = 0 and A = ∂‖·‖₁ give the solution u* = 0.
        let b = monotone_map(&entries, cubic, 3);
        let problem = Inclusion::new(b, SoftThreshold::new(1.0).unwrap(), InnerProductSpace::euclidean(3));
        let mut cfg = SolverConfig::benchmark_defaults(StoppingRule::successive_diff(1e-13));
        cfg.gamma = gamma;
        cfg.inertia = InertiaSchedule::Constant(theta);
        cfg.max_iters = 200;
        let u = Array1::from(start);
        let zero = Array1::zeros(3);
        let out = solve_with_solution(&problem, u.view(), u.view(), &cfg, Some(&zero)).unwrap();
        prop_assert!(out.trace.violations.is_empty(), "{:?}", out.trace.violations.first());
    }

    #[test]
    fn zw_equals_ifb_without_inertia(
        entries in prop::collection::vec(-1.0f64..1.0, 32),
        u in prop::collection::vec(-3.0f64..3.0, 4),
        cubic in 0.0f64..2.0,
        gamma in 0.05f64..1.95,
        rho in 0.0f64..1.0,
    ) {
        let b = monotone_map(&entries, cubic, 4);
        let j = SoftThreshold::new(rho).unwrap();
        let space = InnerProductSpace::euclidean(4);
        let cfg = ifb_plain(gamma);
        let u = Array1::from(u);
        let a = ifb_step(u.view(), u.view(), 1, &b, &j, &space, &cfg).unwrap();
        let z = zw_step(u.view(), &b, &j, &space, a.step, gamma, cfg.phi_zero_tol).unwrap();
        if !a.phi_zero {
            prop_assert_eq!(a.next, z.next);
        }
    }
}
