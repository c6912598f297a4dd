use proptest::prelude::*;
use wmgrid_attack::{AttackSpec, FilterState, RationalFilter, TargetSignal};
use wmgrid_detect::CalibrationOptions;
use wmgrid_droop::Interconnection;
use wmgrid_model::eigenvalues;
use wmgrid_sim::seeds::derive_seed;
use wmgrid_sim::*;

const BASE: &str = r#"
schema = 1
name = "probe"
model = "tamu4bus"
sample_period = 0.0083
steps = 400

[seeds]
base = 3

[watermark]
variance = 1e-7

[detector]
window = 0.5
thresholds = { chi1 = 1e6, chi2 = 1e6 }
"#;

fn prepared(text: &str) -> PreparedScenario {
    PreparedScenario::new(&Scenario::parse(text).unwrap()).unwrap()
}

fn bundled_short(name: &str, steps: usize) -> PreparedScenario {
    let mut sc = Scenario::bundled(name).unwrap();
    sc.file.duration = None;
    sc.file.steps = Some(steps);
    PreparedScenario::new(&sc).unwrap()
}

fn scenario_error(text: &str) -> SimError {
    match Scenario::parse(text) {
        Err(e) => e,
        Ok(sc) => PreparedScenario::new(&sc).unwrap_err(),
    }
}

#[test]
fn sensor_noise_alone_scales_every_stream_linearly() {
    // Without process noise and watermark the loop is driven only by sensor noise,
    // so quadrupling its variance doubles every signal.
    let quiet = |var: &str| {
        format!(
            "{BASE}\n[noise]\nprocess_variance = 0.0\nmeasurement_variance = {var}\n"
        )
        .replace("variance = 1e-7", "variance = 0.0")
        .replace("thresholds = { chi1 = 1e6, chi2 = 1e6 }", "dgus = []")
    };
    let a = run_scenario(&prepared(&quiet("1e-8"))).unwrap();
    let b = run_scenario(&prepared(&quiet("4e-8"))).unwrap();
    assert_eq!(a.outcome, RunOutcome::Completed);
    assert!(a.watermark.data.iter().all(|v| *v == 0.0));
    assert_eq!(a.state_norm[0], 0.0);
    for (sa, sb) in [(&a.actual, &b.actual), (&a.command, &b.command), (&a.applied, &b.applied)] {
        let scale = sa.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(scale > 0.0);
        for (x, y) in sa.data.iter().zip(&sb.data) {
            assert!((2.0 * x - y).abs() <= 1e-12 * scale, "{x} {y}");
        }
    }
    assert_eq!(a.actual, a.reported);
}

#[test]
fn runs_are_reproducible_and_seed_dependent() {
    let p = prepared(BASE);
    let a = run_scenario(&p).unwrap();
    let b = run_scenario(&p).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.steps(), 400);
    assert_eq!(a.detectors.len(), 3);
    let c = run_with_seeds(&p, SeedSet::from_base(4)).unwrap();
    assert_ne!(a.actual, c.actual);
}

#[test]
fn monte_carlo_run_matches_single_run() {
    let p = prepared(BASE);
    let single = run_with_seeds(&p, SeedSet::from_base(77)).unwrap();
    let mc = monte_carlo_map(&p, 3, 76, |_, ts| ts).unwrap();
    assert_eq!(mc.len(), 3);
    assert_eq!(mc[1], single);
    let summaries = monte_carlo(&p, 3, 76).unwrap();
    assert_eq!(summaries[1], RunSummary::from_series(1, &single));
    assert_eq!(summaries[1].seed, 77);
}

#[test]
fn passthrough_attack_changes_nothing() {
    let honest = prepared(BASE);
    let attacked = prepared(&format!(
        "{BASE}\n[[attack]]\ndgu = 2\nsignal = \"both\"\nstart = 0.5\nkind = \"passthrough\"\n"
    ));
    let a = run_scenario(&honest).unwrap();
    let b = run_scenario(&attacked).unwrap();
    assert_eq!(a, b);
    assert_eq!(b.first_confirmed(), None);
}

#[test]
fn replay_reports_the_recorded_loop_and_leaves_other_sensors_alone() {
    let p = bundled_short("replay", 1700);
    let ts = p.ts;
    let run = run_scenario(&p).unwrap();
    let start = (0..run.steps()).find(|&k| k as f64 * ts >= 10.0 - 1e-9).unwrap();
    let cap = (4.0 / ts).round() as usize;
    for k in 0..run.steps() {
        let (y, z) = (run.actual.row(k), run.reported.row(k));
        assert_eq!(y[2..], z[2..], "step {k}");
        if k < start {
            assert_eq!(y[..2], z[..2], "step {k}");
        } else {
            let src = start - cap + (k - start) % cap;
            assert_eq!(z[..2], run.actual.row(src)[..2], "step {k}");
        }
    }
}

#[test]
fn divergence_guard_stops_the_run() {
    let p = prepared(&BASE.replace("steps = 400", "steps = 400\ndivergence_bound = 1e-12"));
    let run = run_scenario(&p).unwrap();
    match run.outcome {
        RunOutcome::Diverged { step, time, state_norm } => {
            assert_eq!(step, 0);
            assert_eq!(time, 0.0);
            assert!(state_norm > 1e-12);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(run.steps(), 1);
    assert!(run.outcome.diverged());
}

#[test]
fn load_step_moves_the_outputs() {
    let quiet = BASE
        .replace("variance = 1e-7", "variance = 0.0")
        .replace("thresholds = { chi1 = 1e6, chi2 = 1e6 }", "dgus = []");
    let with_noise = format!("{quiet}\n[noise]\nprocess_variance = 0.0\nmeasurement_variance = 1e-30\n");
    let stepped = format!("{with_noise}\n[[load_step]]\ntime = 1.0\nload = 1\ndp = 0.05\n");
    let a = run_scenario(&prepared(&with_noise)).unwrap();
    let b = run_scenario(&prepared(&stepped)).unwrap();
    let k1 = (1.0 / 0.0083f64).ceil() as usize;
    for k in 0..k1 {
        assert_eq!(a.actual.row(k), b.actual.row(k));
    }
    let diff = (k1..400).map(|k| (a.actual.row(k)[1] - b.actual.row(k)[1]).abs()).fold(0.0, f64::max);
    assert!(diff > 1e-6, "{diff}");
}

#[test]
fn seeds_split_into_independent_streams() {
    let s = SeedSet::from_base(9);
    let all = [s.process, s.measurement, s.watermark, s.attack];
    for i in 0..4 {
        for j in i + 1..4 {
            assert_ne!(all[i], all[j]);
        }
    }
    assert_ne!(SeedSet::sub(s.watermark, 0), SeedSet::sub(s.watermark, 1));
    let sec = scenario::SeedSection {
        base: 9,
        watermark: Some(5),
        ..Default::default()
    };
    let o = SeedSet::from_section(&sec);
    assert_eq!(o.watermark, 5);
    assert_eq!(o.process, s.process);
}

#[test]
fn malformed_scenarios_are_rejected() {
    let cases = [
        BASE.replace("name = \"probe\"", "name = \"probe\"\ncolour = 1"),
        BASE.replace("steps = 400", "steps = 400\nduration = 2.0"),
        BASE.replace("steps = 400", ""),
        BASE.replace("schema = 1", "schema = 2"),
        BASE.replace("sample_period = 0.0083", "sample_period = -1.0"),
        format!("{BASE}\n[noise]\nmeasurement_variance = 0.0\n"),
        BASE.replace("[detector]", "[detector]\nthresholds_file = \"t.toml\""),
        BASE.replace("window = 0.5", "window = 0.5\nconfirm = 0"),
        format!("{BASE}\n[[attack]]\ndgu = 0\nsignal = \"both\"\nstart = 1.0\nkind = \"passthrough\"\n"),
        format!("{BASE}\n[[attack]]\ndgu = 4\nsignal = \"both\"\nstart = 1.0\nkind = \"passthrough\"\n"),
        format!("{BASE}\n[[attack]]\ndgu = 1\nsignal = \"both\"\nstart = 2.0\nend = 1.0\nkind = \"passthrough\"\n"),
        format!("{BASE}\n[[attack]]\ndgu = 1\nsignal = \"both\"\nstart = 1.0\nkind = \"teleport\"\n"),
        format!("{BASE}\n[[load_step]]\ntime = 1.0\nload = 9\ndp = 0.1\n"),
        BASE.replace("model = \"tamu4bus\"", "model = \"no/such/model.toml\""),
        BASE.replace("window = 0.5", "window = 0.5\ndgus = [7]"),
    ];
    for (i, text) in cases.iter().enumerate() {
        let e = scenario_error(text);
        assert!(e.is_usage(), "case {i}: {e}");
    }
}

#[test]
fn bundled_scenarios_validate() {
    for name in ["honest", "destab_fig3", "noise_inject", "replay"] {
        let sc = Scenario::bundled(name).unwrap();
        sc.file.validate().unwrap();
        assert!(sc.file.detector.dgu_thresholds.len() == 3, "{name}");
    }
    assert!(Scenario::bundled("nope").is_err());
}

#[test]
fn thresholds_file_round_trips() {
    let f = ThresholdsFile {
        schema: 1,
        scenario: "honest".into(),
        scenario_hash: "abc".into(),
        runs: 100,
        seed_base: 1000,
        quantile: 0.999,
        safety_factor: 1.5,
        windows: 123,
        dgus: vec![
            DguThresholds { index: 1, chi1: 38.5, chi2: 6.25 },
            DguThresholds { index: 3, chi1: 0.1, chi2: 1e-3 },
        ],
    };
    let back = ThresholdsFile::parse(&f.to_toml()).unwrap();
    assert_eq!(back, f);
    assert_eq!(back.get(2).unwrap().chi1, 0.1);
    assert!(back.get(1).is_none());

    let mut bad = f.clone();
    bad.dgus.clear();
    assert!(ThresholdsFile::parse(&bad.to_toml()).is_err());
    bad.dgus = vec![DguThresholds { index: 0, chi1: 1.0, chi2: 1.0 }];
    assert!(ThresholdsFile::parse(&bad.to_toml()).is_err());
    assert!(ThresholdsFile::parse(&f.to_toml().replace("schema = 1", "schema = 9")).is_err());
}

#[test]
fn calibration_needs_clean_runs_and_enough_of_them() {
    let attacked = prepared(&format!(
        "{BASE}\n[[attack]]\ndgu = 1\nsignal = \"both\"\nstart = 1.0\nkind = \"passthrough\"\n"
    ));
    let opts = CalibrationOptions::default();
    assert!(matches!(calibrate(&attacked, 30, 0, &opts, ""), Err(SimError::Scenario(_))));
    let clean = prepared(BASE);
    assert!(matches!(calibrate(&clean, 3, 0, &opts, ""), Err(SimError::Detect(_))));

    let file = calibrate(&clean, 20, 0, &opts, "h").unwrap();
    assert_eq!(file.dgus.len(), 3);
    assert_eq!(file.runs, 20);
    let windows: usize = monte_carlo(&clean, 20, 0).unwrap().iter().map(|r| r.detectors[0].windows).sum();
    assert_eq!(file.windows, 3 * windows);
    let mut p = clean.clone();
    p.apply_thresholds(&file).unwrap();
    assert_eq!(p.detectors[1].thresholds.unwrap().chi1, file.dgus[1].chi1);
}

#[test]
fn filter_state_space_reproduces_the_filter() {
    let f = AttackSpec::case_study_filter();
    let (a, g, h, d) = filter_state_space(&f);
    let mut st = FilterState::new(&f);
    let mut xi = nalgebra::DMatrix::zeros(a.nrows(), 1);
    for k in 0..200 {
        let x = ((k * 5 % 11) as f64 - 5.0) * 0.2;
        let y_ss = (&h * &xi)[(0, 0)] + d * x;
        xi = &a * &xi + &g * x;
        let y = st.step(x);
        assert!((y - y_ss).abs() < 1e-12, "k={k}");
    }
}

#[test]
fn transparent_filter_only_adds_its_own_poles() {
    let p = prepared(BASE);
    let identity = RationalFilter::new(vec![0.3, -1.1, 1.0], vec![0.3, -1.1, 1.0]).unwrap();
    let m = attacked_closed_loop(&p.plant, &p.gains, p.ts, 0, TargetSignal::Voltage, &identity).unwrap();
    let honest = Interconnection::all_controlled(&p.plant, &p.gains, p.ts).build().unwrap();
    assert_eq!(m.nrows(), honest.n_state() + 2);

    let mut expected: Vec<f64> = honest.eigenvalues_abs().unwrap();
    expected.extend(identity.poles().iter().map(|z| z.0.hypot(z.1)));
    expected.sort_by(f64::total_cmp);
    let mut got: Vec<f64> = eigenvalues(&m).unwrap().iter().map(|z| z.norm()).collect();
    got.sort_by(f64::total_cmp);
    for (a, b) in got.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
    assert!(attacked_closed_loop(&p.plant, &p.gains, p.ts, 5, TargetSignal::Voltage, &identity).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn seed_derivation_is_deterministic_and_spreads(base in any::<u64>(), s in 0u64..64) {
        prop_assert_eq!(derive_seed(base, s), derive_seed(base, s));
        prop_assert_ne!(derive_seed(base, s), derive_seed(base, s + 1));
        prop_assert_eq!(SeedSet::from_base(base), SeedSet::from_base(base));
    }

    #[test]
    fn step_count_follows_duration(n in 1usize..5000) {
        let text = BASE.replace("steps = 400", &format!("duration = {}", n as f64 * 0.0083));
        let sc = Scenario::parse(&text).unwrap();
        prop_assert_eq!(sc.file.steps().unwrap(), n);
    }
}
