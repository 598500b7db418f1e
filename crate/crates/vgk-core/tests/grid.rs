use std::f64::consts::PI;

use proptest::prelude::*;
use vgk_core::grid::*;
use vgk_core::{InitialData, ModelParams};

fn cfg(t_end: f64, output_dt: f64) -> GridRunConfig {
    GridRunConfig {
        t_end,
        dt_max: 1.0,
        output_dt,
        snapshot_times: vec![t_end],
        options: StepOptions::default(),
    }
}

fn marginal_moments(f: &GridField) -> (f64, f64, f64) {
    let m = f.g_marginal();
    let dg = f.spec.dg();
    let mass: f64 = m.iter().sum::<f64>() * dg;
    let mean = m
        .iter()
        .enumerate()
        .map(|(j, x)| f.g_center(j) * x)
        .sum::<f64>()
        * dg
        / mass;
    let var = m
        .iter()
        .enumerate()
        .map(|(j, x)| (f.g_center(j) - mean).powi(2) * x)
        .sum::<f64>()
        * dg
        / mass;
    (mass, mean, var)
}

#[test]
fn frozen_coefficients_follow_ou() {
    let p = ModelParams {
        g1: 0.0,
        a1: 0.0,
        ..ModelParams::figure2()
    };
    let init = InitialData::gaussian(3.0, 0.5);
    let err = |n_g: usize, dt: f64| {
        let spec = GridSpec::aligned(4, n_g, -10.0, 30.0);
        let f = GridField::from_initial(&init, 1.0, spec).unwrap();
        let r = run(
            f,
            &p,
            &GridRunConfig {
                dt_max: dt,
                ..cfg(1.0, 0.1)
            },
        )
        .unwrap();
        let (_, mean, var) = marginal_moments(&r.field);
        let e = (-1.0f64).exp();
        let dg = spec.dg();
        // Cell sampling adds dg²/12 to the variance.
        (
            (mean - (p.g0 + (3.0 - p.g0) * e)).abs(),
            (var - dg * dg / 12.0 - (p.a0 + (0.5 - p.a0) * e * e)).abs(),
        )
    };
    let coarse = err(200, 1e-2);
    let fine = err(400, 5e-3);
    // Backward Euler in the conductance step: first order in dt.
    assert!(coarse.0 < 0.1 && coarse.1 < 0.1, "{coarse:?}");
    assert!(
        fine.0 < 0.6 * coarse.0 && fine.1 < 0.6 * coarse.1,
        "{coarse:?} {fine:?}"
    );
}

#[test]
fn ou_stationary_state_is_preserved() {
    let p = ModelParams {
        g1: 0.0,
        a1: 0.0,
        ..ModelParams::figure2()
    };
    let spec = GridSpec::aligned(4, 400, -10.0, 30.0);
    let f = GridField::from_initial(&InitialData::gaussian(p.g0, p.a0), 1.0, spec).unwrap();
    let r = run(f, &p, &cfg(2.0, 0.5)).unwrap();
    let (_, mean, var) = marginal_moments(&r.field);
    assert!(
        (mean - p.g0).abs() < 1e-3 && (var - p.a0).abs() < 1e-2,
        "{mean} {var}"
    );
}

#[test]
fn minmod_is_less_dissipative_on_rigid_transport() {
    let p = ModelParams::figure2();
    let spec = GridSpec::aligned(64, 32, -10.0, 30.0);
    let init = InitialData::cosine_gaussian(0.9, 10.0, 4.0, 1.0);
    let dev = |transport: Transport| {
        let f = GridField::from_initial(&init, 1.0, spec).unwrap();
        let options = StepOptions {
            transport,
            freeze_conductance: true,
            ..Default::default()
        };
        let r = run(
            f,
            &p,
            &GridRunConfig {
                options,
                ..cfg(0.5, 0.5)
            },
        )
        .unwrap();
        assert!(r.diagnostics.min_density >= 0.0);
        r.field.deviation_from_mean()
    };
    let (up, mm) = (dev(Transport::Upwind), dev(Transport::Minmod));
    assert!(mm > up, "{mm} {up}");
}

#[test]
fn first_moment_grows_when_divergent() {
    let p = ModelParams::figure1();
    let spec = GridSpec::aligned(32, 512, -10.0, 150.0);
    let init = InitialData::gaussian(10.0, 4.0);
    let mut f = GridField::from_initial(&init, 1.0, spec).unwrap();
    let m0 = f.first_moment();
    let dt = f.stable_dt();
    let mut samples = Vec::new();
    while f.t < 8.0 {
        f.step(&p, dt, StepOptions::default()).unwrap();
        assert!(
            f.first_moment() >= m0 + p.g0 * f.t * 0.95,
            "t {} {} {}",
            f.t,
            f.first_moment(),
            m0
        );
        samples.push((f.t, firing_rate_grid(&f).rate));
    }
    assert!(f.leakage() < 1e-6);
    // Windowed means of N increase after t = 5.
    let means: Vec<f64> = (0..6)
        .map(|w| {
            let (a, b) = (5.0 + 0.5 * w as f64, 5.5 + 0.5 * w as f64);
            let xs: Vec<f64> = samples
                .iter()
                .filter(|s| s.0 >= a && s.0 < b)
                .map(|s| s.1)
                .collect();
            xs.iter().sum::<f64>() / xs.len() as f64
        })
        .collect();
    assert!(means.windows(2).all(|w| w[1] > w[0]), "{means:?}");
}

#[test]
fn homogenization_within_envelope() {
    let p = ModelParams::figure2();
    let spec = GridSpec::aligned(64, 96, -10.0, 50.0);
    let init = InitialData::cosine_gaussian(0.8, 10.0, 4.0, 1.0);
    let f = GridField::from_initial(&init, 1.0, spec).unwrap();
    let r = run(f, &p, &cfg(5.0, 0.05)).unwrap();
    let t = 5.0f64;
    let d = p.a0 * (t - 2.0 * (t / 2.0).tanh());
    let e = (-p.omega().powi(2) * d).exp();
    assert!(r.snapshots[0].deviation_from_mean() <= 2.0 * e / (1.0 - e) + 1e-12);
    assert!(r.diagnostics.mass_drift_rate <= 1e-10);
}

#[test]
fn single_entry_sweep_equals_plain_run() {
    let p = ModelParams::figure2();
    let spec = GridSpec::aligned(16, 32, -10.0, 40.0);
    let init = InitialData::cosine_gaussian(0.3, 10.0, 4.0, 1.0);
    let c = GridRunConfig {
        dt_max: 0.1,
        ..cfg(0.2, 0.01)
    };
    let sweep = run_eps_sweep(&init, &p, spec, &[1.0], &c).unwrap();
    let plain = run(GridField::from_initial(&init, 1.0, spec).unwrap(), &p, &c).unwrap();
    assert_eq!(sweep[0].1.series, plain.series);
    assert!(run_eps_sweep(&init, &p, spec, &[0.0], &c).is_err());
}

#[test]
fn predictor_corrector_changes_little() {
    let p = ModelParams::figure2();
    let spec = GridSpec::aligned(32, 64, -10.0, 40.0);
    let init = InitialData::cosine_gaussian(0.5, 10.0, 4.0, 1.0);
    let go = |predictor_corrector: bool| {
        let f = GridField::from_initial(&init, 1.0, spec).unwrap();
        let options = StepOptions {
            predictor_corrector,
            ..Default::default()
        };
        run(
            f,
            &p,
            &GridRunConfig {
                options,
                ..cfg(1.0, 0.5)
            },
        )
        .unwrap()
        .series
        .last()
        .n
    };
    let (a, b) = (go(false), go(true));
    assert!((a - b).abs() < 1e-3 * a, "{a} {b}");
}

#[test]
fn sampled_initial_data_accepted() {
    let n_v = 8;
    let n_g = 16;
    let dv = 1.0 / n_v as f64;
    let dg = 2.0;
    let mut values = vec![0.0; n_v * n_g];
    for j in 0..n_g {
        let g = -10.0 + (j as f64 + 0.5) * dg;
        for i in 0..n_v {
            let v = (i as f64 + 0.5) * dv;
            values[j * n_v + i] =
                (1.0 + 0.5 * (2.0 * PI * v).sin()) * (-(g - 5.0).powi(2) / 8.0).exp();
        }
    }
    let mass: f64 = values.iter().sum::<f64>() * dv * dg;
    values.iter_mut().for_each(|x| *x /= mass);
    let init = InitialData::GridSamples(vgk_core::params::GridSamples {
        n_v,
        n_g,
        g_lo: -10.0,
        g_hi: 22.0,
        values,
    });
    let f = GridField::from_initial(&init, 1.0, GridSpec::aligned(n_v, n_g, -10.0, 22.0)).unwrap();
    assert!((f.mass() - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conserves_mass_and_sign(
        g1 in 0.0..1.5f64,
        a1 in 0.0..0.5f64,
        eps in 0.05..2.0f64,
        amp in -0.9..0.9f64,
        mean in -5.0..20.0f64,
        minmod in any::<bool>(),
    ) {
        let p = ModelParams { g1, a1, epsilon: eps, ..ModelParams::figure2() };
        let spec = GridSpec::aligned(24, 48, -15.0, 60.0);
        let init = InitialData::cosine_gaussian(amp, mean, 3.0, 1.0);
        let mut f = GridField::from_initial(&init, 1.0, spec).unwrap();
        let transport = if minmod { Transport::Minmod } else { Transport::Upwind };
        let dt = f.stable_dt();
        for _ in 0..200 {
            f.step(&p, dt, StepOptions { transport, ..Default::default() }).unwrap();
        }
        prop_assert!((f.mass() - 1.0).abs() <= 1e-10 * f.t.max(1.0));
        prop_assert!(f.min() >= -1e-14);
        prop_assert!(firing_rate_grid(&f).raw >= 0.0);
    }
}
