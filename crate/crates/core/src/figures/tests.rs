use super::*;

fn panel_params(spec: &FigureSpec) -> Vec<ModelParams> {
    spec.panels.iter().map(|p| p.params).collect()
}

#[test]
fn fig2_defaults() {
    let spec = default_figure(FigureId::Fig2);
    let p = panel_params(&spec);
    let omegas: Vec<f64> = p.iter().map(|p| p.omega_mod).collect();
    assert_eq!(omegas, vec![0.0, 0.1, 0.5, 5.0]);
    let deltas: Vec<f64> = p.iter().map(|p| p.delta).collect();
    assert_eq!(deltas, vec![0.0, 5.0, 5.0, 5.0]);
    for q in &p {
        assert_eq!((q.gamma, q.lambda, q.theta, q.phi), (1.0, 0.1, FRAC_PI_2, 0.0));
        assert_eq!(q.unit, Unit::Gamma);
    }
    for panel in &spec.panels {
        assert_eq!(
            panel.kind,
            PanelKind::Witness { tau_max: 10.0, intervals: 1000, mode: CompositionMode::Homogeneous }
        );
    }
}

#[test]
fn fig3_defaults_are_bessel_tuned() {
    let spec = default_figure(FigureId::Fig3);
    for (p, j) in panel_params(&spec).iter().zip(TABULATED_FIRST_ZEROS) {
        assert!((p.delta / p.omega_mod - j).abs() < 1e-12);
        assert_eq!(p.omega_mod, 0.5);
    }
}

#[test]
fn speed_limit_figure_defaults() {
    let spec = default_figure(FigureId::QsltTauExcited);
    assert_eq!(spec.panels.len(), 3);
    let p = panel_params(&spec);
    assert_eq!((p[0].delta, p[0].omega_mod), (0.0, 0.0));
    assert_eq!((p[1].delta, p[1].omega_mod), (10.0, 5.0));
    assert!((p[2].delta - 12.02415).abs() < 1e-12 && p[2].omega_mod == 5.0);
    assert!(p.iter().all(|q| q.gamma == 0.1 && q.lambda == 1.0 && q.theta == 0.0));

    let sup = default_figure(FigureId::QsltTauSuperpos);
    assert!(panel_params(&sup).iter().all(|q| q.gamma == 1.0 && q.lambda == 3.0 && q.theta == FRAC_PI_2));

    let sweep = default_figure(FigureId::QsltGammaExcited);
    assert_eq!(sweep.panels.len(), 9);
    let taus: Vec<f64> = sweep
        .panels
        .iter()
        .map(|p| match p.kind {
            PanelKind::GammaSweep { tau, axis } => {
                assert_eq!(axis, AxisSpec::DEFAULT);
                tau
            }
            _ => panic!(),
        })
        .collect();
    assert_eq!(&taus[..3], &[0.4, 0.6, 0.8]);

    let d9 = default_figure(FigureId::DerivSuperpos);
    assert_eq!(d9.panels.len(), 1);
    let q = d9.panels[0].params;
    assert_eq!((q.delta, q.omega_mod, q.lambda, q.theta), (5.0, 5.0, 1.0, FRAC_PI_2));
    assert!(matches!(d9.panels[0].kind, PanelKind::Derivative { tau, .. } if tau == 1.0));
}

#[test]
fn figure_ids_round_trip() {
    for id in FigureId::ALL {
        assert_eq!(id.as_str().parse::<FigureId>().unwrap(), id);
    }
    assert!(matches!("fig99".parse::<FigureId>(), Err(Error::Validation { .. })));
}

#[test]
fn units_scale_the_numbers() {
    let flags = Overrides { gamma: Some(2.0), ..Default::default() };
    let spec = resolve_figure(FigureId::Fig2, &ConfigFile::default(), &flags).unwrap();
    let p = spec.panels[2].params;
    assert_eq!((p.gamma, p.lambda, p.delta, p.omega_mod), (2.0, 0.2, 10.0, 1.0));

    let abs = Overrides { gamma: Some(2.0), units: Some(Unit::Absolute), ..Default::default() };
    let p = resolve_figure(FigureId::Fig2, &ConfigFile::default(), &abs).unwrap().panels[2].params;
    assert_eq!((p.gamma, p.lambda, p.delta, p.omega_mod), (2.0, 0.1, 5.0, 0.5));

    let lam = Overrides { lambda: Some(2.0), units: Some(Unit::Lambda), ..Default::default() };
    let p = resolve_figure(FigureId::QsltTauExcited, &ConfigFile::default(), &lam).unwrap().panels[1].params;
    assert_eq!((p.gamma, p.lambda, p.delta, p.omega_mod), (0.2, 2.0, 20.0, 10.0));
}

#[test]
fn tuned_panels_follow_omega_unless_delta_given() {
    let flags = Overrides { omega: Some(1.0), ..Default::default() };
    let spec = resolve_figure(FigureId::Fig3, &ConfigFile::default(), &flags).unwrap();
    assert!((spec.panels[0].params.delta - TABULATED_FIRST_ZEROS[0]).abs() < 1e-12);
    let flags = Overrides { omega: Some(1.0), delta: Some(3.0), ..Default::default() };
    let spec = resolve_figure(FigureId::Fig3, &ConfigFile::default(), &flags).unwrap();
    assert!(spec.panels.iter().all(|p| p.params.delta == 3.0));
}

#[test]
fn unmodulated_panel_ignores_global_modulation() {
    let flags = Overrides { omega: Some(2.0), ..Default::default() };
    let spec = resolve_figure(FigureId::Fig2, &ConfigFile::default(), &flags).unwrap();
    assert_eq!((spec.panels[0].params.delta, spec.panels[0].params.omega_mod), (0.0, 0.0));
    assert_eq!(spec.panels[1].params.omega_mod, 2.0);
}

#[test]
fn precedence_defaults_config_panel_flags() {
    let config = ConfigFile::parse(
        "lambda = 0.2\npoints = 50\n[panels.b]\nlambda = 0.3\nomega = 0.7\n[panels.c]\ntheta = 1.0\n",
    )
    .unwrap();
    let flags = Overrides { theta: Some(0.5), ..Default::default() };
    let spec = resolve_figure(FigureId::Fig2, &config, &flags).unwrap();
    let p: Vec<ModelParams> = panel_params(&spec);
    assert_eq!(p[0].lambda, 0.2);
    assert_eq!((p[1].lambda, p[1].omega_mod), (0.3, 0.7));
    assert_eq!(p[2].theta, 0.5);
    assert!(matches!(spec.panels[3].kind, PanelKind::Witness { intervals: 50, .. }));
}

#[test]
fn config_errors() {
    assert!(matches!(ConfigFile::parse("gama = 1.0"), Err(Error::Config(_))));
    assert!(matches!(ConfigFile::parse("[panels.a]\nfoo = 1"), Err(Error::Config(_))));
    assert!(matches!(ConfigFile::parse("gamma = \"x\""), Err(Error::Config(_))));
    let c = ConfigFile::parse("units = \"lambda\"\nexact_segments = true").unwrap();
    assert_eq!(c.global.units, Some(Unit::Lambda));
    assert_eq!(c.global.exact_segments, Some(true));
}

#[test]
fn invalid_panel_names_the_field() {
    let flags = Overrides { theta: Some(4.0), ..Default::default() };
    match resolve_figure(FigureId::Fig2, &ConfigFile::default(), &flags) {
        Err(Error::Validation { field, .. }) => assert_eq!(field, "theta"),
        other => panic!("{other:?}"),
    }
    let flags = Overrides { tau_max: Some(-1.0), ..Default::default() };
    match resolve_figure(FigureId::QsltTauExcited, &ConfigFile::default(), &flags) {
        Err(Error::Validation { field, .. }) => assert_eq!(field, "tau_max"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn tune_bessel_examples() {
    assert!((tune_bessel(0, 5.0).unwrap() - 12.02415).abs() < 5e-5 * 5.0);
    assert!((tune_bessel(1, 1.0).unwrap() - 3.83170).abs() < 1e-5);
    assert!((tune_bessel(0, 0.5).unwrap() - 1.202415).abs() < 5e-5 * 0.5);
    assert!(matches!(tune_bessel(0, 0.0), Err(Error::Validation { .. })));
    assert!(tune_bessel(2, -1.0).is_err());
}

#[test]
fn float_format_has_17_significant_digits() {
    assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    let x = std::f64::consts::PI * 1e-7;
    assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
}

#[test]
fn witness_csv_layout_and_determinism() {
    let flags = Overrides { points: Some(20), ..Default::default() };
    let spec = resolve_figure(FigureId::Fig2, &ConfigFile::default(), &flags).unwrap();
    let panel = &spec.panels[1];
    let a = panel_csv(spec.id, panel, &compute_panel(panel).unwrap());
    let b = panel_csv(spec.id, panel, &compute_panel(panel).unwrap());
    assert_eq!(a, b);
    let lines: Vec<&str> = a.lines().collect();
    assert!(lines[0].starts_with("# qmod-dyn "));
    assert!(lines.iter().any(|l| l.starts_with("# params: gamma=1.0000000000000000e0")));
    assert!(lines.iter().any(|l| l.starts_with("# solver: ode-reform rel_tol=")));
    let header = lines.iter().position(|l| *l == "tau,sqw,oqw,coherence_half").unwrap();
    assert!(lines[..header].iter().all(|l| l.starts_with('#')));
    assert_eq!(lines.len() - header - 1, 21);
    assert_eq!(lines[header + 1].split(',').count(), 4);
}

#[test]
fn run_figure_writes_files_and_reports_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let flags = Overrides { points: Some(200), ..Default::default() };
    let spec = resolve_figure(FigureId::QsltTauSuperpos, &ConfigFile::default(), &flags).unwrap();
    let files = run_figure(&spec, dir.path(), true).unwrap();
    assert_eq!(files.len(), 6);
    let names: Vec<String> = files
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert!(names.contains(&"qslt-tau-superpos_unmodulated.csv".to_string()));
    let svg = std::fs::read_to_string(dir.path().join("qslt-tau-superpos_unmodulated.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
    let csv = std::fs::read_to_string(&files[0]).unwrap();
    assert!(csv.contains("\ntau,qslt_ratio,n_blp,r_g\n"));

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    assert!(matches!(run_figure(&spec, &blocker.join("sub"), false), Err(Error::Io { .. })));
}

#[test]
fn sweep_csv() {
    let cfg = SweepConfig {
        axis_start: 0.1,
        axis_stop: 0.5,
        axis_step: 0.1,
        taus: vec![0.4, 0.8],
        ..Default::default()
    };
    let csv = run_sweep(&cfg).unwrap();
    let header = "gamma_over_lambda,tau,qslt_ratio,n_blp,r_g,speedup_transition,nonmarkov_transition";
    let lines: Vec<&str> = csv.lines().collect();
    let h = lines.iter().position(|l| *l == header).unwrap();
    assert_eq!(lines.len() - h - 1, 10);

    let empty = SweepConfig { axis_start: 1.0, axis_stop: 0.5, ..Default::default() };
    assert!(matches!(run_sweep(&empty), Err(Error::Validation { .. })));
    let no_tau = SweepConfig { taus: vec![], ..Default::default() };
    assert!(matches!(run_sweep(&no_tau), Err(Error::Validation { .. })));

    let parsed = SweepConfig::parse("scenario = \"superposition\"\nlambda = 3.0\ntaus = [1.0]").unwrap();
    assert_eq!(parsed.scenario, Scenario::Superposition);
    assert_eq!(parsed.taus, vec![1.0]);
    assert!(SweepConfig::parse("bogus = 1").is_err());
}

#[test]
fn trajectory_dump() {
    let csv = trajectory_csv(&ModelParams::new(1.0, 0.1), 1.0, 11).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "t,re_c,im_c,re_c_dot,im_c_dot,population");
    assert_eq!(rows.len(), 12);
    assert!(rows[1].starts_with("0.0000000000000000e0,1.0000000000000000e0,"));
}

#[test]
fn svg_handles_flat_and_nan_series() {
    let x = [0.0, 1.0, 2.0];
    let s = line_plot("t<1>", "x", &x, &[("flat", &[1.0, 1.0, 1.0]), ("nan", &[f64::NAN, 0.5, 0.2])]);
    assert!(s.contains("t&lt;1&gt;"));
    assert!(!s.contains("NaN"));
}
