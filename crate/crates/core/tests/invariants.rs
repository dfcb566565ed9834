use proptest::prelude::*;

use critlab::asymptotics::{psi_finite, survival_normalized_error, p11_normalized_error, log_grid};
use critlab::branching::{expand_coeffs, QKernel};
use critlab::exec::Execution;
use critlab::harness::config::ExperimentConfig;
use critlab::harness::report::fmt_float;
use critlab::kolmogorov::{exact_r, identity_lemma2_residual, semigroup_residual, solve_f, solve_r_ode};
use critlab::ode::SolveConfig;
use critlab::simulator::{survival_curve, McRun, SimModel};
use critlab::sv::{solve_normalizer, Family, ModelParams, ScaleFunction};

fn sv_family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::ConstantL), Just(Family::DeltaEqualsLambda)]
}

fn model(family: Family, nu: f64, a0: f64) -> ScaleFunction {
    ScaleFunction::new(ModelParams::new(family, nu, a0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn r_decreases_in_t_and_s(family in sv_family(), nu in 0.2f64..0.95, a0 in 0.1f64..3.0,
                              t in 0.01f64..50.0, dt in 0.01f64..50.0, s in 0.0f64..0.9, ds in 0.01f64..0.09) {
        let sf = model(family, nu, a0);
        let cfg = SolveConfig::default();
        let r = solve_f(&sf, s, t, &cfg).unwrap().value;
        prop_assert!(r > 0.0 && r <= 1.0 - s);
        prop_assert!(solve_f(&sf, s, t + dt, &cfg).unwrap().value < r);
        prop_assert!(solve_f(&sf, s + ds, t, &cfg).unwrap().value < r);
    }

    #[test]
    fn ode_matches_oracle(family in sv_family(), nu in 0.2f64..0.95, a0 in 0.1f64..3.0,
                          t in 0.01f64..1e3, y0 in 0.05f64..1.0) {
        let sf = model(family, nu, a0);
        let ode = solve_r_ode(&sf, y0, t, &SolveConfig::default()).unwrap();
        let exact = exact_r(&sf, y0, t).unwrap();
        prop_assert!((ode / exact - 1.0).abs() < 1e-8, "{} vs {}", ode, exact);
    }

    #[test]
    fn semigroup_holds(family in sv_family(), nu in 0.2f64..0.95, a0 in 0.1f64..3.0,
                       t in 0.01f64..100.0, tau in 0.01f64..100.0, s in 0.0f64..0.95) {
        let sf = model(family, nu, a0);
        prop_assert!(semigroup_residual(&sf, t, tau, s, &SolveConfig::default()).unwrap() <= 1e-8);
    }

    #[test]
    fn exact_identity_residual(family in sv_family(), nu in 0.3f64..0.9, a0 in 0.2f64..2.0,
                               t in 0.1f64..200.0, s in 0.0f64..0.9) {
        let sf = model(family, nu, a0);
        let r = identity_lemma2_residual(&sf, s, t, &SolveConfig::default()).unwrap();
        prop_assert!(r.abs() <= 1e-6, "{}", r);
    }

    #[test]
    fn normalizer_solves_its_equation(family in sv_family(), nu in 0.2f64..0.95, a0 in 0.1f64..3.0, lt in 0.0f64..10.0) {
        let sf = model(family, nu, a0);
        let t = 10f64.powf(lt) / (nu * a0);
        let n = solve_normalizer(&sf, t).unwrap();
        prop_assert!(n.value.is_finite() && n.value > 0.0);
        prop_assert!(n.residual(&sf) < 1e-12);
    }

    #[test]
    fn normalized_errors_finite(nu in 0.3f64..0.9, a0 in 0.2f64..2.0, lt in 2.0f64..12.0) {
        let sf = model(Family::DeltaEqualsLambda, nu, a0);
        let t = 10f64.powf(lt);
        prop_assert!(survival_normalized_error(&sf, t).unwrap().is_finite());
        prop_assert!(p11_normalized_error(&sf, t).unwrap().is_finite());
    }

    #[test]
    fn laplace_transform_alternating_differences(family in sv_family(), nu in 0.3f64..0.9, lt in 1.0f64..6.0) {
        let sf = model(family, nu, 1.0);
        let t = 10f64.powf(lt);
        let grid = log_grid(1e-2, 1e2, 40);
        let psi: Vec<f64> = grid.iter().map(|&th| psi_finite(&sf, t, th).unwrap()).collect();
        prop_assert!(psi.iter().all(|&p| p > 0.0 && p <= 1.0));
        // first differences negative, second differences of the equally spaced
        // values in θ positive
        prop_assert!(psi.windows(2).all(|w| w[1] < w[0]));
        let lin: Vec<f64> = (0..20).map(|k| 0.05 + 0.2 * k as f64).collect();
        let v: Vec<f64> = lin.iter().map(|&th| psi_finite(&sf, t, th).unwrap()).collect();
        prop_assert!(v.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] >= -1e-12));
    }

    #[test]
    fn config_values_round_trip(nu in 0.05f64..0.95, a0 in 1e-3f64..1e3, seed in any::<u64>(), n in 1usize..100_000) {
        let text = format!("family = constant_l\nnu = {nu}\na0 = {a0}\nt_list = 1, 2.5\nseed = {seed}\nmc_n = {n}\n");
        let cfg = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(cfg.params.nu(), nu);
        prop_assert_eq!(cfg.params.a0(), a0);
        prop_assert_eq!(cfg.seed, Some(seed));
        prop_assert_eq!(cfg.mc_n, n);
    }

    #[test]
    fn report_floats_round_trip(bits in any::<u64>()) {
        let v = f64::from_bits(bits);
        prop_assume!(v.is_finite());
        prop_assert_eq!(fmt_float(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn monte_carlo_seed_determinism(seed in any::<u64>()) {
        let sf = model(Family::ConstantL, 0.5, 1.0);
        let sim = SimModel::new(&sf, 1024).unwrap();
        let run = McRun::new(1500, seed);
        let a = survival_curve(&sim, 2, &[0.5, 1.0], &run.with_exec(Execution::Sequential)).unwrap();
        let b = survival_curve(&sim, 2, &[0.5, 1.0], &run.with_exec(Execution::Parallel)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn qkernel_rows_sum_to_one(nu in 0.2f64..0.95, a0 in 0.1f64..3.0) {
        let sf = model(Family::ConstantL, nu, a0);
        let k = QKernel::new(&expand_coeffs(&sf, 4096).unwrap()).unwrap();
        for i in 1..=1000u64 {
            prop_assert!(k.row_defect(i) <= 1e-12);
            prop_assert_eq!(k.prob(1, 0), 0.0);
        }
    }
}
