//! Figure definitions, parameter overrides, and deterministic CSV / SVG
//! output for the command-line front end.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::bessel::{self, TABULATED_FIRST_ZEROS};
use crate::error::{Error, Result};
use crate::params::{ModelParams, Unit};
use crate::solver::{self, Tolerances};
use crate::speed::{self, AxisQuantity, SpeedMetrics, SweepResult, DEFAULT_EPS, METRIC_TOLERANCES};
use crate::witness::{self, CompositionMode, WitnessCurves};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Figure identifiers accepted by `figure <id>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FigureId {
    Fig2,
    Fig3,
    QsltTauExcited,
    QsltGammaExcited,
    DerivExcited,
    QsltTauSuperpos,
    QsltGammaSuperpos,
    DerivSuperpos,
}

impl FigureId {
    pub const ALL: [FigureId; 8] = [
        FigureId::Fig2,
        FigureId::Fig3,
        FigureId::QsltTauExcited,
        FigureId::QsltGammaExcited,
        FigureId::DerivExcited,
        FigureId::QsltTauSuperpos,
        FigureId::QsltGammaSuperpos,
        FigureId::DerivSuperpos,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::QsltTauExcited => "qslt-tau-excited",
            FigureId::QsltGammaExcited => "qslt-gamma-excited",
            FigureId::DerivExcited => "deriv-excited",
            FigureId::QsltTauSuperpos => "qslt-tau-superpos",
            FigureId::QsltGammaSuperpos => "qslt-gamma-superpos",
            FigureId::DerivSuperpos => "deriv-superpos",
        }
    }

    /// Units in which the figure's default numbers are quoted.
    pub fn default_units(self) -> Unit {
        match self {
            FigureId::Fig2 | FigureId::Fig3 => Unit::Gamma,
            _ => Unit::Absolute,
        }
    }
}

impl std::str::FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = FigureId::ALL.iter().map(|i| i.as_str()).collect();
                Error::validation("figure", format!("unknown id {s:?}; expected one of {known:?} or all"))
            })
    }
}

/// Uniform γ/λ axis.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl AxisSpec {
    pub const DEFAULT: AxisSpec = AxisSpec {
        start: 0.05,
        stop: 2.0,
        step: 0.01,
    };

    pub fn values(&self) -> Result<Vec<f64>> {
        speed::uniform_axis(self.start, self.stop, self.step)
    }
}

/// What a panel computes.
#[derive(Debug, Clone, PartialEq)]
pub enum PanelKind {
    /// Witness curves for τ ∈ [0, tau_max] with `intervals` τ steps.
    Witness {
        tau_max: f64,
        intervals: usize,
        mode: CompositionMode,
    },
    /// Speed metrics versus τ on a `points` grid over [0, tau_max].
    TauSeries { tau_max: f64, points: usize },
    /// Speed metrics versus γ/λ at fixed τ (γ of the panel is ignored).
    GammaSweep { tau: f64, axis: AxisSpec },
    /// Derivatives of τ_QSLT/τ and 𝕽g with respect to γ/λ.
    Derivative { tau: f64, axis: AxisSpec },
}

/// One output file: a parameter set plus what to compute.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub name: String,
    pub params: ModelParams,
    pub kind: PanelKind,
}

/// Resolved figure: every panel with final absolute parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureSpec {
    pub id: FigureId,
    pub panels: Vec<Panel>,
}

/// Parameter overrides from flags or a config file. Numbers are read in
/// `units` (γ-units multiply λ, δ, Ω by γ; λ-units multiply γ, δ, Ω by λ).
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub delta: Option<f64>,
    pub omega: Option<f64>,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub tau_max: Option<f64>,
    /// Driving time of sweep and derivative panels.
    pub tau: Option<f64>,
    pub points: Option<usize>,
    pub units: Option<Unit>,
    pub exact_segments: Option<bool>,
}

impl Overrides {
    /// `self` with every field set in `top` replaced.
    pub fn then(&self, top: &Overrides) -> Overrides {
        Overrides {
            gamma: top.gamma.or(self.gamma),
            lambda: top.lambda.or(self.lambda),
            delta: top.delta.or(self.delta),
            omega: top.omega.or(self.omega),
            theta: top.theta.or(self.theta),
            phi: top.phi.or(self.phi),
            tau_max: top.tau_max.or(self.tau_max),
            tau: top.tau.or(self.tau),
            points: top.points.or(self.points),
            units: top.units.or(self.units),
            exact_segments: top.exact_segments.or(self.exact_segments),
        }
    }

    fn without_modulation(&self) -> Overrides {
        Overrides {
            delta: None,
            omega: None,
            ..self.clone()
        }
    }
}

/// Config file: top-level keys apply to every panel, `[panels.<name>]`
/// tables to one panel.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub global: Overrides,
    pub panels: BTreeMap<String, Overrides>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let panels = match table.remove("panels") {
            None => BTreeMap::new(),
            Some(v) => v
                .try_into()
                .map_err(|e: toml::de::Error| Error::Config(format!("[panels]: {e}")))?,
        };
        let global = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Ok(ConfigFile { global, panels })
    }

    pub fn load(path: &Path) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        ConfigFile::parse(&text)
    }
}

/// Default panel template before overrides: raw numbers in the figure's
/// units, an optional δ/Ω tuning ratio, and whether the panel is pinned to
/// the unmodulated case.
#[derive(Debug, Clone)]
struct Template {
    name: String,
    raw: Overrides,
    tuning: Option<f64>,
    unmodulated: bool,
    kind: TemplateKind,
}

#[derive(Debug, Clone, Copy)]
enum TemplateKind {
    Witness,
    TauSeries,
    GammaSweep,
    Derivative,
}

fn raw(gamma: f64, lambda: f64, delta: f64, omega: f64, theta: f64) -> Overrides {
    Overrides {
        gamma: Some(gamma),
        lambda: Some(lambda),
        delta: Some(delta),
        omega: Some(omega),
        theta: Some(theta),
        phi: Some(0.0),
        ..Default::default()
    }
}

/// The three modulation settings shared by the speed-limit figures:
/// (name, δ, Ω, tuning ratio).
fn modulation_settings() -> [(&'static str, f64, f64, Option<f64>); 3] {
    [
        ("unmodulated", 0.0, 0.0, None),
        ("delta10-omega5", 10.0, 5.0, None),
        ("bessel-j0-omega5", TABULATED_FIRST_ZEROS[0] * 5.0, 5.0, Some(TABULATED_FIRST_ZEROS[0])),
    ]
}

const SWEEP_TAUS: [f64; 3] = [0.4, 0.6, 0.8];

fn templates(id: FigureId) -> Vec<Template> {
    let witness = |name: &str, delta: f64, omega: f64, tuning: Option<f64>, unmod: bool| Template {
        name: name.to_string(),
        raw: Overrides {
            tau_max: Some(10.0),
            points: Some(1000),
            ..raw(1.0, 0.1, delta, omega, FRAC_PI_2)
        },
        tuning,
        unmodulated: unmod,
        kind: TemplateKind::Witness,
    };
    let tau_series = |gamma: f64, lambda: f64, theta: f64| {
        modulation_settings()
            .into_iter()
            .map(|(name, delta, omega, tuning)| Template {
                name: name.to_string(),
                raw: Overrides {
                    tau_max: Some(10.0),
                    points: Some(solver::default_points(10.0)),
                    ..raw(gamma, lambda, delta, omega, theta)
                },
                tuning,
                unmodulated: omega == 0.0,
                kind: TemplateKind::TauSeries,
            })
            .collect()
    };
    let sweeps = |theta: f64, kind: TemplateKind| {
        let mut out = Vec::new();
        for (name, delta, omega, tuning) in modulation_settings() {
            for tau in SWEEP_TAUS {
                out.push(Template {
                    name: format!("{name}_tau{tau}"),
                    raw: Overrides {
                        tau: Some(tau),
                        ..raw(1.0, 1.0, delta, omega, theta)
                    },
                    tuning,
                    unmodulated: omega == 0.0,
                    kind,
                });
            }
        }
        out
    };
    match id {
        FigureId::Fig2 => vec![
            witness("a", 0.0, 0.0, None, true),
            witness("b", 5.0, 0.1, None, false),
            witness("c", 5.0, 0.5, None, false),
            witness("d", 5.0, 5.0, None, false),
        ],
        FigureId::Fig3 => ["a", "b", "c", "d"]
            .iter()
            .zip(TABULATED_FIRST_ZEROS)
            .map(|(name, j)| witness(name, j * 0.5, 0.5, Some(j), false))
            .collect(),
        FigureId::QsltTauExcited => tau_series(0.1, 1.0, 0.0),
        FigureId::QsltTauSuperpos => tau_series(1.0, 3.0, FRAC_PI_2),
        FigureId::QsltGammaExcited => sweeps(0.0, TemplateKind::GammaSweep),
        FigureId::QsltGammaSuperpos => sweeps(FRAC_PI_2, TemplateKind::GammaSweep),
        FigureId::DerivExcited => sweeps(0.0, TemplateKind::Derivative),
        FigureId::DerivSuperpos => vec![Template {
            name: "tau1".to_string(),
            raw: Overrides {
                tau: Some(1.0),
                ..raw(1.0, 1.0, 5.0, 5.0, FRAC_PI_2)
            },
            tuning: None,
            unmodulated: false,
            kind: TemplateKind::Derivative,
        }],
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::validation(field, format!("{v} must be positive and finite")))
    }
}

/// Figure with its default panels, then config-file and flag overrides
/// applied in that order (flags win), and every panel validated.
pub fn resolve_figure(
    id: FigureId,
    config: &ConfigFile,
    flags: &Overrides,
) -> Result<FigureSpec> {
    let mut panels = Vec::new();
    for t in templates(id) {
        let panel_table = config.panels.get(&t.name).cloned().unwrap_or_default();
        let (global, flags) = if t.unmodulated {
            (config.global.without_modulation(), flags.without_modulation())
        } else {
            (config.global.clone(), flags.clone())
        };
        let o = t.raw.then(&global).then(&panel_table).then(&flags);
        let explicit_delta =
            global.delta.is_some() || panel_table.delta.is_some() || flags.delta.is_some();
        let units = o.units.unwrap_or(id.default_units());

        let (mut gamma, mut lambda) = (o.gamma.unwrap(), o.lambda.unwrap());
        let omega = o.omega.unwrap();
        let mut delta = match (t.tuning, explicit_delta) {
            (Some(ratio), false) => ratio * omega,
            _ => o.delta.unwrap(),
        };
        let mut omega = omega;
        match units {
            Unit::Gamma => {
                lambda *= gamma;
                delta *= gamma;
                omega *= gamma;
            }
            Unit::Lambda => {
                gamma *= lambda;
                delta *= lambda;
                omega *= lambda;
            }
            Unit::Absolute => {}
        }
        let params = ModelParams {
            gamma,
            lambda,
            delta,
            omega_mod: omega,
            theta: o.theta.unwrap(),
            phi: o.phi.unwrap(),
            unit: units,
        };
        params.validate()?;
        let kind = match t.kind {
            TemplateKind::Witness => {
                let intervals = o.points.unwrap();
                if intervals == 0 {
                    return Err(Error::validation("points", "must be at least 1"));
                }
                PanelKind::Witness {
                    tau_max: positive("tau_max", o.tau_max.unwrap())?,
                    intervals,
                    mode: if o.exact_segments.unwrap_or(false) {
                        CompositionMode::ExactSegments
                    } else {
                        CompositionMode::Homogeneous
                    },
                }
            }
            TemplateKind::TauSeries => {
                let points = o.points.unwrap();
                if points < 2 {
                    return Err(Error::validation("points", "must be at least 2"));
                }
                PanelKind::TauSeries {
                    tau_max: positive("tau_max", o.tau_max.unwrap())?,
                    points,
                }
            }
            TemplateKind::GammaSweep => PanelKind::GammaSweep {
                tau: positive("tau", o.tau.unwrap())?,
                axis: AxisSpec::DEFAULT,
            },
            TemplateKind::Derivative => PanelKind::Derivative {
                tau: positive("tau", o.tau.unwrap())?,
                axis: AxisSpec::DEFAULT,
            },
        };
        panels.push(Panel {
            name: t.name,
            params,
            kind,
        });
    }
    Ok(FigureSpec { id, panels })
}

/// Default figure with no overrides.
pub fn default_figure(id: FigureId) -> FigureSpec {
    resolve_figure(id, &ConfigFile::default(), &Overrides::default())
        .expect("built-in figure defaults are valid")
}

/// Computed content of a panel.
#[derive(Debug, Clone, PartialEq)]
pub enum PanelData {
    Witness(WitnessCurves),
    TauSeries(Vec<SpeedMetrics>),
    Sweep(SweepResult),
    Derivative {
        sweep: SweepResult,
        d_qslt_ratio: Vec<f64>,
        d_r_g: Vec<f64>,
    },
}

pub fn compute_panel(panel: &Panel) -> Result<PanelData> {
    let p = &panel.params;
    Ok(match panel.kind {
        PanelKind::Witness {
            tau_max,
            intervals,
            mode,
        } => PanelData::Witness(witness::witness_curves_with(p, tau_max, intervals, mode)?),
        PanelKind::TauSeries { tau_max, points } => {
            let traj = speed::solve_for_metrics(p, tau_max, points)?;
            PanelData::TauSeries(speed::metrics_series(&traj)?)
        }
        PanelKind::GammaSweep { tau, axis } => {
            PanelData::Sweep(speed::sweep_gamma_lambda(p, tau, &axis.values()?, DEFAULT_EPS)?)
        }
        PanelKind::Derivative { tau, axis } => {
            let sweep = speed::sweep_gamma_lambda(p, tau, &axis.values()?, DEFAULT_EPS)?;
            PanelData::Derivative {
                d_qslt_ratio: speed::derivative_along_axis(&sweep, AxisQuantity::QsltRatio)?,
                d_r_g: speed::derivative_along_axis(&sweep, AxisQuantity::Rg)?,
                sweep,
            }
        }
    })
}

fn params_line(p: &ModelParams) -> String {
    format!(
        "# params: gamma={} lambda={} delta={} omega={} theta={} phi={} units={}\n",
        fmt_f64(p.gamma),
        fmt_f64(p.lambda),
        fmt_f64(p.delta),
        fmt_f64(p.omega_mod),
        fmt_f64(p.theta),
        fmt_f64(p.phi),
        p.unit
    )
}

fn tolerance_line(label: &str, tol: Tolerances, extra: &str) -> String {
    format!(
        "# solver: {label} rel_tol={} abs_tol={}{extra}\n",
        fmt_f64(tol.rel),
        fmt_f64(tol.abs)
    )
}

fn opt_line(name: &str, v: Option<f64>) -> String {
    match v {
        Some(v) => format!("# {name}: {}\n", fmt_f64(v)),
        None => format!("# {name}: none\n"),
    }
}

fn rows(out: &mut String, header: &str, columns: &[&[f64]]) {
    out.push_str(header);
    out.push('\n');
    let n = columns[0].len();
    for i in 0..n {
        let line: Vec<String> = columns.iter().map(|c| fmt_f64(c[i])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
}

/// CSV text of a computed panel, with `#` provenance lines first.
pub fn panel_csv(id: FigureId, panel: &Panel, data: &PanelData) -> String {
    let mut out = format!(
        "# qmod-dyn {TOOL_VERSION}\n# figure: {} panel: {}\n",
        id.as_str(),
        panel.name
    );
    out.push_str(&params_line(&panel.params));
    match (data, &panel.kind) {
        (PanelData::Witness(w), PanelKind::Witness { intervals, .. }) => {
            out.push_str(&tolerance_line(
                solver::SolverTag::OdeReform.as_str(),
                w.tolerances,
                &format!(" grid_points={}", 2 * intervals + 1),
            ));
            let _ = writeln!(out, "# composition: {}", w.mode.as_str());
            rows(
                &mut out,
                "tau,sqw,oqw,coherence_half",
                &[&w.taus, &w.sqw, &w.oqw, &w.coherence_half],
            );
        }
        (PanelData::TauSeries(m), PanelKind::TauSeries { points, .. }) => {
            out.push_str(&tolerance_line(
                solver::SolverTag::OdeReform.as_str(),
                METRIC_TOLERANCES,
                &format!(" grid_points={points}"),
            ));
            let col = |f: fn(&SpeedMetrics) -> f64| m.iter().map(f).collect::<Vec<_>>();
            rows(
                &mut out,
                "tau,qslt_ratio,n_blp,r_g",
                &[&col(|x| x.tau), &col(|x| x.qslt_ratio), &col(|x| x.n_blp), &col(|x| x.r_g)],
            );
        }
        (PanelData::Sweep(s), PanelKind::GammaSweep { axis, .. }) => {
            sweep_header(&mut out, s, axis);
            let col = |f: fn(&SpeedMetrics) -> f64| s.metrics.iter().map(f).collect::<Vec<_>>();
            rows(
                &mut out,
                "gamma_over_lambda,qslt_ratio,n_blp,r_g",
                &[&s.axis, &col(|x| x.qslt_ratio), &col(|x| x.n_blp), &col(|x| x.r_g)],
            );
        }
        (
            PanelData::Derivative {
                sweep,
                d_qslt_ratio,
                d_r_g,
            },
            PanelKind::Derivative { axis, .. },
        ) => {
            sweep_header(&mut out, sweep, axis);
            rows(
                &mut out,
                "gamma_over_lambda,d_qslt_ratio,d_r_g",
                &[&sweep.axis, d_qslt_ratio, d_r_g],
            );
        }
        _ => unreachable!("panel data always matches its kind"),
    }
    out
}

fn sweep_header(out: &mut String, s: &SweepResult, axis: &AxisSpec) {
    out.push_str(&tolerance_line(
        solver::SolverTag::OdeReform.as_str(),
        METRIC_TOLERANCES,
        &format!(" grid_points={}", solver::default_points(s.tau)),
    ));
    let _ = writeln!(
        out,
        "# axis: gamma_over_lambda start={} stop={} step={}",
        fmt_f64(axis.start),
        fmt_f64(axis.stop),
        fmt_f64(axis.step)
    );
    let _ = writeln!(out, "# tau: {}", fmt_f64(s.tau));
    let _ = writeln!(out, "# eps: {}", fmt_f64(s.eps));
    out.push_str(&opt_line("transition_speedup", s.transition_speedup));
    out.push_str(&opt_line("transition_nonmarkov", s.transition_nonmarkov));
}

/// Minimal self-contained SVG line plot.
pub fn line_plot(title: &str, x_label: &str, x: &[f64], series: &[(&str, &[f64])]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let finite = |v: &f64| v.is_finite();
    let (x0, x1) = bounds(x.iter().copied().filter(finite));
    let (y0, y1) = bounds(series.iter().flat_map(|(_, ys)| ys.iter().copied().filter(finite)));
    let sx = |v: f64| M + (v - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |v: f64| H - M - (v - y0) / (y1 - y0) * (H - 2.0 * M);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        "<polyline points=\"{M},{M} {M},{b} {r},{b}\" fill=\"none\" stroke=\"black\"/>",
        b = H - M,
        r = W - M
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
        W / 2.0,
        H - 12.0,
        escape(x_label)
    );
    for (v, anchor, px, py) in [
        (x0, "start", M, H - M + 16.0),
        (x1, "end", W - M, H - M + 16.0),
        (y0, "end", M - 4.0, H - M),
        (y1, "end", M - 4.0, M + 4.0),
    ] {
        let _ = writeln!(
            out,
            "<text x=\"{px:.1}\" y=\"{py:.1}\" font-size=\"10\" text-anchor=\"{anchor}\">{v:.4}</text>"
        );
    }
    for (i, (name, ys)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = x
            .iter()
            .zip(ys.iter())
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(a, b)| format!("{:.2},{:.2}", sx(*a), sy(*b)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            pts.join(" ")
        );
        let ly = M + 14.0 * i as f64;
        let _ = writeln!(
            out,
            "<line x1=\"{a}\" y1=\"{ly}\" x2=\"{b}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\
             <text x=\"{c}\" y=\"{t}\" font-size=\"11\">{}</text>",
            escape(name),
            a = W - M - 120.0,
            b = W - M - 100.0,
            c = W - M - 95.0,
            t = ly + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn panel_svg(id: FigureId, panel: &Panel, data: &PanelData) -> String {
    let title = format!("{} {}", id.as_str(), panel.name);
    match data {
        PanelData::Witness(w) => line_plot(
            &title,
            "tau",
            &w.taus,
            &[("SQW", &w.sqw), ("OQW", &w.oqw), ("coherence/2", &w.coherence_half)],
        ),
        PanelData::TauSeries(m) => {
            let tau: Vec<f64> = m.iter().map(|x| x.tau).collect();
            let ratio: Vec<f64> = m.iter().map(|x| x.qslt_ratio).collect();
            let n: Vec<f64> = m.iter().map(|x| x.n_blp).collect();
            line_plot(&title, "tau", &tau, &[("QSLT/tau", &ratio), ("N", &n)])
        }
        PanelData::Sweep(s) => {
            let ratio: Vec<f64> = s.metrics.iter().map(|x| x.qslt_ratio).collect();
            let n: Vec<f64> = s.metrics.iter().map(|x| x.n_blp).collect();
            line_plot(&title, "gamma/lambda", &s.axis, &[("QSLT/tau", &ratio), ("N", &n)])
        }
        PanelData::Derivative {
            sweep,
            d_qslt_ratio,
            d_r_g,
        } => line_plot(
            &title,
            "gamma/lambda",
            &sweep.axis,
            &[("d(QSLT/tau)", d_qslt_ratio), ("d(Rg)", d_r_g)],
        ),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Computes every panel (in parallel, output ordered) and writes
/// `<id>_<panel>.csv` (and `.svg` when asked) under `out_dir`.
pub fn run_figure(spec: &FigureSpec, out_dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let data = spec
        .panels
        .par_iter()
        .map(compute_panel)
        .collect::<Result<Vec<_>>>()?;
    let mut written = Vec::new();
    for (panel, d) in spec.panels.iter().zip(&data) {
        let stem = format!("{}_{}", spec.id.as_str(), panel.name);
        let csv = out_dir.join(format!("{stem}.csv"));
        write_file(&csv, &panel_csv(spec.id, panel, d))?;
        written.push(csv);
        if svg {
            let path = out_dir.join(format!("{stem}.svg"));
            write_file(&path, &panel_svg(spec.id, panel, d))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// δ = j_{n,1}·Ω, the modulation amplitude that silences the n-th
/// Jacobi–Anger harmonic.
pub fn tune_bessel(n: u32, omega_mod: f64) -> Result<f64> {
    if !(omega_mod > 0.0 && omega_mod.is_finite()) {
        return Err(Error::validation("omega", format!("{omega_mod} must be > 0")));
    }
    Ok(bessel::first_zero(n) * omega_mod)
}

/// Initial-state scenario of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    #[default]
    Excited,
    Superposition,
}

impl Scenario {
    pub fn theta(self) -> f64 {
        match self {
            Scenario::Excited => 0.0,
            Scenario::Superposition => FRAC_PI_2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Excited => "excited",
            Scenario::Superposition => "superposition",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "excited" => Ok(Scenario::Excited),
            "superposition" => Ok(Scenario::Superposition),
            other => Err(Error::validation(
                "scenario",
                format!("expected excited or superposition, got {other:?}"),
            )),
        }
    }
}

/// Settings of a long-format γ/λ sweep.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub scenario: Scenario,
    pub lambda: f64,
    pub delta: f64,
    pub omega: f64,
    pub phi: f64,
    pub axis_start: f64,
    pub axis_stop: f64,
    pub axis_step: f64,
    pub taus: Vec<f64>,
    pub eps: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            scenario: Scenario::Excited,
            lambda: 1.0,
            delta: 0.0,
            omega: 0.0,
            phi: 0.0,
            axis_start: AxisSpec::DEFAULT.start,
            axis_stop: AxisSpec::DEFAULT.stop,
            axis_step: AxisSpec::DEFAULT.step,
            taus: SWEEP_TAUS.to_vec(),
            eps: DEFAULT_EPS,
        }
    }
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<SweepConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    fn base_params(&self) -> Result<ModelParams> {
        let p = ModelParams::new(self.lambda, self.lambda)
            .with_modulation(self.delta, self.omega)
            .with_state(self.scenario.theta(), self.phi);
        p.validate()?;
        Ok(p)
    }

    fn axis(&self) -> Result<Vec<f64>> {
        if !(self.axis_stop >= self.axis_start) {
            return Err(Error::validation(
                "axis",
                format!("empty axis: stop {} < start {}", self.axis_stop, self.axis_start),
            ));
        }
        speed::uniform_axis(self.axis_start, self.axis_stop, self.axis_step)
    }
}

/// Long-format sweep CSV: one row per (γ/λ, τ) with transition flags.
pub fn run_sweep(config: &SweepConfig) -> Result<String> {
    let base = config.base_params()?;
    let axis = config.axis()?;
    if config.taus.is_empty() {
        return Err(Error::validation("taus", "at least one driving time is required"));
    }
    let results = config
        .taus
        .iter()
        .map(|&tau| speed::sweep_gamma_lambda(&base, tau, &axis, config.eps))
        .collect::<Result<Vec<_>>>()?;

    let mut out = format!("# qmod-dyn {TOOL_VERSION}\n# sweep scenario: {}\n", config.scenario.as_str());
    out.push_str(&params_line(&base).replace("gamma=", "gamma(axis*lambda)="));
    out.push_str(&tolerance_line(solver::SolverTag::OdeReform.as_str(), METRIC_TOLERANCES, ""));
    let _ = writeln!(
        out,
        "# axis: gamma_over_lambda start={} stop={} step={}\n# eps: {}",
        fmt_f64(config.axis_start),
        fmt_f64(config.axis_stop),
        fmt_f64(config.axis_step),
        fmt_f64(config.eps)
    );
    out.push_str("gamma_over_lambda,tau,qslt_ratio,n_blp,r_g,speedup_transition,nonmarkov_transition\n");
    for r in &results {
        for (a, m) in r.axis.iter().zip(&r.metrics) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fmt_f64(*a),
                fmt_f64(r.tau),
                fmt_f64(m.qslt_ratio),
                fmt_f64(m.n_blp),
                fmt_f64(m.r_g),
                u8::from(r.transition_speedup == Some(*a)),
                u8::from(r.transition_nonmarkov == Some(*a)),
            );
        }
    }
    Ok(out)
}

/// CSV dump of a single trajectory.
pub fn trajectory_csv(params: &ModelParams, t_end: f64, points: usize) -> Result<String> {
    let traj = solver::solve(params, t_end, points)?;
    let mut out = format!("# qmod-dyn {TOOL_VERSION}\n");
    out.push_str(&params_line(params));
    out.push_str(&tolerance_line(traj.solver_tag.as_str(), traj.tolerances, &format!(" grid_points={points}")));
    out.push_str("t,re_c,im_c,re_c_dot,im_c_dot,population\n");
    for k in 0..traj.len() {
        let line = [
            traj.times[k],
            traj.c[k].re,
            traj.c[k].im,
            traj.c_dot[k].re,
            traj.c_dot[k].im,
            traj.population(k),
        ]
        .map(fmt_f64)
        .join(",");
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
