use nalgebra::DVector;
use proptest::prelude::*;
use wmgrid_droop::*;
use wmgrid_model::{Discretization, OperatingModel};

const TS: f64 = 0.0083;

fn case_gains() -> DroopGains {
    DroopGains {
        alpha_p: -0.001,
        beta_p: -0.011,
        alpha_q: -15.17,
        beta_q: -769.44,
    }
}

#[test]
fn constant_frequency_error_summation() {
    let mut d = DroopState::new(0, case_gains(), TS).unwrap();
    let mut out = (0.0, 0.0);
    for _ in 0..10 {
        out = d.step(0.01, 0.0);
    }
    assert!((out.0 - (-1.913e-5)).abs() < 1e-12, "{}", out.0);
    assert_eq!(out.1, 0.0);
    assert!((d.accumulators().0 - 0.1).abs() < 1e-15);
}

#[test]
fn zero_history_gives_zero_command() {
    let mut d = DroopState::new(0, case_gains(), TS).unwrap();
    for _ in 0..50 {
        assert_eq!(d.step(0.0, 0.0), (0.0, 0.0));
    }
}

#[test]
fn setpoints_shift_absolute_measurements() {
    let mut a = DroopState::new(0, case_gains(), TS).unwrap().with_setpoints(377.0, 1.0);
    let mut b = DroopState::new(0, case_gains(), TS).unwrap();
    assert_eq!(a.step_absolute(377.5, 0.98), b.step(0.5, 0.98 - 1.0));
    a.reset();
    assert_eq!(a.accumulators(), (0.0, 0.0));
}

#[test]
fn invalid_configuration_is_rejected() {
    assert!(DroopState::new(0, case_gains(), 0.0).is_err());
    let mut g = case_gains();
    g.beta_q = f64::NAN;
    assert!(DroopState::new(0, g, TS).is_err());
    assert!(WatermarkSource::new(-1.0, 1).is_err());
}

#[test]
fn zero_variance_watermark_leaves_command_unchanged() {
    let mut wm = WatermarkSource::new(0.0, 7).unwrap();
    for k in 0..20 {
        let c = (k as f64 * 1e-3, -(k as f64));
        assert_eq!(inject_watermark(c, &mut wm), c);
    }
    assert_eq!(wm.log().len(), 20);
}

#[test]
fn watermark_sample_covariance() {
    let nu = 1e-7;
    let mut wm = WatermarkSource::new(nu, 42).unwrap();
    let n = 1_000_000;
    let (mut s00, mut s11, mut s01) = (0.0, 0.0, 0.0);
    for _ in 0..n {
        let e = wm.draw();
        s00 += e[0] * e[0];
        s11 += e[1] * e[1];
        s01 += e[0] * e[1];
    }
    let n = n as f64;
    assert!((s00 / n / nu - 1.0).abs() < 0.01);
    assert!((s11 / n / nu - 1.0).abs() < 0.01);
    // Standard error of the cross moment is nu / sqrt(n).
    assert!((s01 / n).abs() < 3.0 * nu / n.sqrt());
}

#[test]
fn watermark_channels_mask_draws() {
    let mut wm = WatermarkSource::new(1e-7, 3).unwrap().with_channels(WatermarkChannels { p: false, q: true });
    for _ in 0..100 {
        let e = wm.draw();
        assert_eq!(e[0], 0.0);
        assert!(e[1] != 0.0);
    }
    wm.truncate_log(10);
    assert_eq!(wm.log().len(), 10);
}

#[test]
fn closed_loop_simulation_matches_stepwise_controllers() {
    let om = OperatingModel::bundled("tamu4bus").unwrap();
    let plant = om.continuous.discretize(TS, Discretization::Zoh).unwrap();
    let gains: Vec<DroopGains> = om.microgrid.dgus.iter().map(DroopGains::from_dgu).collect();
    let cl = Interconnection::all_controlled(&plant, &gains, TS).build().unwrap();
    let nx = plant.n_state();
    assert_eq!(cl.n_state(), nx + 6);

    let mut x = DVector::from_fn(nx, |i, _| 1e-4 * ((i as f64) * 0.7).sin());
    let mut z = DVector::zeros(cl.n_state());
    z.rows_mut(0, nx).copy_from(&x);
    let mut ctl: Vec<DroopState> = gains
        .iter()
        .enumerate()
        .map(|(i, g)| DroopState::new(i, *g, TS).unwrap())
        .collect();
    let wm = [2e-4, -1e-4];
    let wm_all = DVector::from_fn(6, |i, _| wm[i % 2]);
    for _ in 0..200 {
        let y = &plant.c * &x;
        let mut u = DVector::zeros(6);
        for (i, c) in ctl.iter_mut().enumerate() {
            let (p, q) = c.step(y[2 * i], y[2 * i + 1]);
            u[2 * i] = p + wm[0];
            u[2 * i + 1] = q + wm[1];
        }
        x = &plant.a * &x + &plant.b_ref * u;
        z = &cl.a * &z + &cl.b_watermark * &wm_all;
        let err = (&x - z.rows(0, nx)).amax();
        assert!(err <= 1e-12 * x.amax().max(1e-12), "{err}");
    }
}

#[test]
fn honest_closed_loop_has_no_unstable_mode() {
    let om = OperatingModel::bundled("tamu4bus").unwrap();
    let plant = om.continuous.discretize(TS, Discretization::Zoh).unwrap();
    let gains: Vec<DroopGains> = om.microgrid.dgus.iter().map(DroopGains::from_dgu).collect();
    let cl = Interconnection::all_controlled(&plant, &gains, TS).build().unwrap();
    for m in cl.eigenvalues_abs().unwrap() {
        // Modes on the unit circle are the neutral integrator directions.
        assert!(m < 1.0 || (m - 1.0).abs() < 1e-9, "{m}");
    }
}

#[test]
fn open_dgu_keeps_command_input() {
    let om = OperatingModel::bundled("tamu4bus").unwrap();
    let plant = om.continuous.discretize(TS, Discretization::Zoh).unwrap();
    let gains: Vec<DroopGains> = om.microgrid.dgus.iter().map(DroopGains::from_dgu).collect();
    let cl = Interconnection::open_at(&plant, &gains, TS, 0).build().unwrap();
    assert_eq!(cl.open, vec![0]);
    assert_eq!(cl.controlled, vec![1, 2]);
    assert_eq!(cl.b_open.rows(0, plant.n_state()), plant.b_ref.columns(0, 2));
    let q = cl.disturbance_cov(&plant.process_cov, &plant.measurement_cov, [1e-7, 1e-7]);
    assert!((&q - q.transpose()).amax() == 0.0);
    assert!(q.clone().symmetric_eigen().eigenvalues.min() > -1e-20);
    let continuous = Interconnection::all_controlled(&om.continuous, &gains, TS).build();
    assert!(continuous.is_err());
}

proptest! {
    #[test]
    fn droop_is_linear_in_the_measurements(
        xs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40),
        k in -5.0f64..5.0,
    ) {
        let mut a = DroopState::new(0, case_gains(), TS).unwrap();
        let mut b = DroopState::new(0, case_gains(), TS).unwrap();
        for (w, v) in xs {
            let ya = a.step(w, v);
            let yb = b.step(k * w, k * v);
            prop_assert!((k * ya.0 - yb.0).abs() <= 1e-9 * (1.0 + yb.0.abs()));
            prop_assert!((k * ya.1 - yb.1).abs() <= 1e-9 * (1.0 + yb.1.abs()));
        }
    }

    #[test]
    fn watermark_stream_is_a_function_of_the_seed(seed in any::<u64>()) {
        let mut a = WatermarkSource::new(1e-7, seed).unwrap();
        let mut b = WatermarkSource::new(1e-7, seed).unwrap();
        for _ in 0..16 {
            prop_assert_eq!(a.draw(), b.draw());
        }
    }
}
