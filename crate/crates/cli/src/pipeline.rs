//! The four subcommands. Each returns a JSON report, a summary for humans and the files to write.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde_json::{json, Value};
use splitobs_core::analyzer::{
    fit_decay, fit_decay_rate, lyapunov_residual, spectrum_report, summary_table, AnalysisError, DecayFit,
    ErrorCoupling, SpectrumReport, DEFAULT_FLOOR, DEFAULT_SKIP,
};
use splitobs_core::decomposition::{joint_observability, INTERTWINING_TOL};
use splitobs_core::designer::{coupled_laplacian, CouplingReport, Regime, RoundMethod};
use splitobs_core::netgraph::strongly_connected;
use splitobs_core::simulator::{simulate, SimulationTrace, DUAL_PATH_TOL};
use splitobs_core::{Matrix, TimeKind};
use thiserror::Error;

use crate::build::{build_scenario, prepare, BuildError, Design, Overrides, Prepared};
use crate::schema::{ScenarioError, ScenarioFile};

/// Relative tolerance of the Lyapunov identity in `check`.
pub const LYAPUNOV_TOL: f64 = 1e-8;
/// Slack on spectral rate checks.
pub const SPECTRUM_TOL: f64 = 1e-6;
/// Fraction of the designed rate a simulated run must show.
pub const SIM_RATE_FRACTION: f64 = 0.9;
/// Error reduction an adaptive run must reach by the end of its horizon.
pub const ADAPTIVE_REDUCTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Design,
    Simulate,
    Analyze,
    Check,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Design => "design",
            Command::Simulate => "simulate",
            Command::Analyze => "analyze",
            Command::Check => "check",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("analysis: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("trace {path}: {message}")]
    Trace { path: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    /// 2 for anything the user can fix in the input, 1 for numerical or certificate failures.
    pub fn exit_code(&self) -> u8 {
        use splitobs_core::designer::DesignError as D;
        use splitobs_core::simulator::SimError as S;
        match self {
            CliError::Build(BuildError::Design(e)) => match e {
                D::InvalidRate(_)
                | D::AgentCount { .. }
                | D::TimeKindMismatch { .. }
                | D::InvalidDwell(_)
                | D::EmptyFamily
                | D::Decomposition(_)
                | D::Graph(_) => 2,
                _ => 1,
            },
            CliError::Build(BuildError::Sim(S::ToleranceNotMet { .. } | S::DualPathMismatch { .. } | S::Linalg(_))) => 1,
            CliError::Analysis(_) => 1,
            _ => 2,
        }
    }
}

/// A file a pipeline produced, named relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// 0 when every certificate holds, 1 otherwise.
    pub status: u8,
    pub report: Value,
    pub summary: String,
    pub artifacts: Vec<Artifact>,
}

fn complex_list(zs: &[Complex64]) -> Value {
    Value::Array(zs.iter().map(|z| json!([z.re, z.im])).collect())
}

fn matrix_value(m: &Matrix) -> Value {
    json!(m.to_rows())
}

fn fit_value(f: &DecayFit) -> Value {
    json!({
        "lambda_est": f.lambda_est,
        "intercept": f.intercept,
        "window": [f.window.0, f.window.1],
        "residual": f.residual,
        "floor": f.floor,
        "samples": f.samples,
        "step_ratio": f.step_ratio,
    })
}

fn spectrum_value(graph: usize, s: &SpectrumReport) -> Value {
    json!({
        "graph": graph,
        "value": s.value,
        "bound": s.bound,
        "margin": s.margin,
        "union_residual": s.union_residual,
        "full": complex_list(&s.full),
        "observable": complex_list(&s.observable),
        "unobservable": complex_list(&s.unobservable),
    })
}

fn name_of(file: &ScenarioFile) -> Value {
    file.name.clone().map_or(Value::Null, Value::String)
}

fn output_name(file: &ScenarioFile, pick: impl Fn(&crate::schema::OutputBlock) -> Option<String>, default: &str) -> String {
    file.output.as_ref().and_then(pick).unwrap_or_else(|| default.to_string())
}

/// Whether the design's own certificates hold.
pub fn design_certified(design: &Design) -> bool {
    match design {
        Design::Continuous(d) => {
            let coupling = match (&d.regime, &d.coupling) {
                (Regime::Fixed, _) => d.member_certificates.iter().all(|c| c.holds()),
                (Regime::Arbitrary, CouplingReport::Arbitrary(b)) => b.holds(),
                _ => true,
            };
            d.rates_hold() && d.gain_sufficient() && coupling
        }
        Design::Discrete(d) => d.rates_hold() && d.check.holds,
    }
}

fn design_report(p: &Prepared) -> Value {
    let agents: Vec<Value> = p
        .design
        .decs()
        .iter()
        .map(|d| {
            json!({
                "agent": d.index + 1,
                "unobservable_dim": d.unobservable_dim(),
                "invariant_residual": d.invariant_residual(),
                "gain": matrix_value(&d.k),
            })
        })
        .collect();
    let stacked = p.design.stacked();
    let mut report = json!({
        "scenario": name_of(&p.file),
        "time": match p.kind() { TimeKind::Continuous => "continuous", TimeKind::Discrete => "discrete" },
        "rate": p.design.rate(),
        "agents": agents,
        "unobservable_total": stacked.n_bar,
        "stacked_invariant_residual": stacked.invariant_residual(),
        "certified": design_certified(&p.design),
    });
    let certs = match &p.design {
        Design::Continuous(d) => &d.rate_certificates,
        Design::Discrete(d) => &d.rate_certificates,
    };
    let obj = report.as_object_mut().expect("object");
    obj.insert(
        "rate_certificates".into(),
        certs
            .iter()
            .map(|c| json!({"agent": c.agent + 1, "value": c.value, "bound": c.bound, "margin": c.margin, "holds": c.holds()}))
            .collect(),
    );
    match &p.design {
        Design::Continuous(d) => {
            let details = match &d.coupling {
                CouplingReport::Fixed(b) => json!({
                    "regime": "fixed",
                    "bound": b.g,
                    "numerator": b.numerator,
                    "denominator": b.denominator,
                    "clamped": b.clamped,
                }),
                CouplingReport::Dwell(b) => json!({
                    "regime": "dwell",
                    "bound": b.g,
                    "tau_d": b.tau_d,
                    "norm_a_tilde": b.norm_a_tilde,
                    "transient_c": b.transient.c,
                    "lambda_star": b.transient.lambda_star,
                    "member_margins": b.transient.margins,
                }),
                CouplingReport::Arbitrary(b) => json!({
                    "regime": "arbitrary",
                    "bound": b.g,
                    "numerator": b.numerator,
                    "denominators": b.denominators,
                    "clamped": b.clamped,
                    "member_certificates": b.certificates,
                    "holds": b.holds(),
                }),
            };
            obj.insert(
                "coupling".into(),
                json!({
                    "g": d.g,
                    "gain_sufficient": d.gain_sufficient(),
                    "bound": details,
                    "members": d.member_certificates.iter().enumerate().map(|(k, c)| json!({
                        "graph": k + 1,
                        "abscissa": c.abscissa,
                        "lmi_max": c.lmi_max,
                        "holds": c.holds(),
                    })).collect::<Vec<_>>(),
                }),
            );
        }
        Design::Discrete(d) => {
            let method = match d.method {
                RoundMethod::WeightedTwoNorm => "weighted_two_norm",
                RoundMethod::TwoNorm => "two_norm",
                RoundMethod::MixedNorm => "mixed_norm",
            };
            let s = &d.selection;
            obj.insert(
                "rounds".into(),
                json!({
                    "q": d.q,
                    "method": method,
                    "p": s.p,
                    "p_bar": s.p_bar,
                    "contraction": s.contraction,
                    "a_norm": s.a_norm,
                    "certificate": s.certificate,
                    "check": {"value": d.check.value, "contracts": d.check.contracts, "holds": d.check.holds},
                    "member_radii": d.member_radii,
                }),
            );
        }
    }
    report
}

fn design_summary(p: &Prepared) -> String {
    let mut out = String::new();
    let mut row = |k: &str, v: String| {
        let _ = writeln!(out, "{k:<28} {v}");
    };
    row("rate", format!("{}", p.design.rate()));
    match &p.design {
        Design::Continuous(d) => {
            row("coupling gain g", format!("{:.6}", d.g));
            row("regime bound", format!("{:.6}", d.coupling.bound()));
        }
        Design::Discrete(d) => {
            row("rounds q", d.q.to_string());
            row("certificate", format!("{:.6} (holds: {})", d.check.value, d.check.holds));
        }
    }
    row("certified", design_certified(&p.design).to_string());
    out
}

pub fn run_design(file: &ScenarioFile, ov: &Overrides) -> Result<Outcome, CliError> {
    let p = prepare(file, ov)?;
    let report = design_report(&p);
    let status = if design_certified(&p.design) { 0 } else { 1 };
    let name = output_name(file, |o| o.report.clone(), "design.json");
    Ok(Outcome {
        status,
        artifacts: vec![Artifact { name, contents: pretty(&report) }],
        summary: design_summary(&p),
        report,
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn simulate_prepared(p: &Prepared, ov: &Overrides) -> Result<SimulationTrace, CliError> {
    let sc = build_scenario(p, ov)?;
    log::info!("simulating {} over horizon {}", p.file.name.as_deref().unwrap_or("scenario"), sc.horizon);
    simulate(&sc).map_err(|e| CliError::Build(BuildError::Sim(e)))
}

fn grid_step(p: &Prepared) -> f64 {
    match p.kind() {
        TimeKind::Continuous => p.file.sim.h.unwrap_or(splitobs_core::simulator::DEFAULT_STEP),
        TimeKind::Discrete => 1.0,
    }
}

pub fn run_simulate(file: &ScenarioFile, ov: &Overrides) -> Result<Outcome, CliError> {
    let p = prepare(file, ov)?;
    let trace = simulate_prepared(&p, ov)?;
    let indicator = p.signal.indicator_csv(p.family.len(), grid_step(&p));
    let report = json!({
        "scenario": name_of(file),
        "samples": trace.len(),
        "switches": p.signal.switch_count(),
        "e_norm_initial": trace.e_norm.first(),
        "e_norm_final": trace.e_norm.last(),
        "consistency": trace.consistency,
    });
    let summary = format!(
        "{:<28} {}\n{:<28} {:.6e}\n{:<28} {:.3e}\n",
        "samples",
        trace.len(),
        "final error norm",
        trace.e_norm.last().copied().unwrap_or(f64::NAN),
        "dual-path consistency",
        trace.consistency
    );
    Ok(Outcome {
        status: 0,
        report,
        summary,
        artifacts: vec![
            Artifact { name: output_name(file, |o| o.trace.clone(), "trace.csv"), contents: trace.to_csv() },
            Artifact { name: output_name(file, |o| o.indicator.clone(), "indicator.csv"), contents: indicator },
        ],
    })
}

fn error_coupling(p: &Prepared) -> ErrorCoupling<f64> {
    match &p.design {
        Design::Continuous(d) => ErrorCoupling::Gain(d.g),
        Design::Discrete(d) => ErrorCoupling::Rounds(d.q),
    }
}

/// Fit window: after the last fault when there is one, else the horizon minus its first 10%.
fn fit_window(p: &Prepared, trace: &SimulationTrace) -> (f64, f64) {
    let end = trace.times.last().copied().unwrap_or(0.0);
    let period = match p.kind() {
        TimeKind::Continuous => 1.0,
        TimeKind::Discrete => p.plant.sample_period(),
    };
    let start = p.file.sim.faults.iter().map(|f| f.time * period).fold(end * DEFAULT_SKIP, f64::max);
    (start, end)
}

pub fn run_analyze(file: &ScenarioFile, ov: &Overrides) -> Result<Outcome, CliError> {
    let p = prepare(file, ov)?;
    let trace = simulate_prepared(&p, ov)?;
    let fit = fit_decay_rate(&trace, Some(fit_window(&p, &trace)), None)?;
    let stacked = p.design.stacked();
    let spectra = p
        .family
        .iter()
        .map(|s| spectrum_report(stacked, s, error_coupling(&p), p.design.rate()))
        .collect::<Result<Vec<_>, _>>()?;
    let report = json!({
        "scenario": name_of(file),
        "fit": fit_value(&fit),
        "spectra": spectra.iter().enumerate().map(|(k, s)| spectrum_value(k + 1, s)).collect::<Vec<_>>(),
    });
    let mut summary = summary_table(Some(&fit), spectra.first());
    for (k, s) in spectra.iter().enumerate().skip(1) {
        let _ = writeln!(summary, "{:<28} {:.6} (margin {:.3e})", format!("graph {} spectrum", k + 1), s.value, s.margin);
    }
    Ok(Outcome {
        status: 0,
        artifacts: vec![Artifact { name: output_name(file, |o| o.report.clone(), "analysis.json"), contents: pretty(&report) }],
        summary,
        report,
    })
}

/// Columns `t` and `e_norm` of a trace CSV.
pub fn read_trace_csv(path: &str, text: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let bad = |message: String| CliError::Trace { path: path.to_string(), message };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty file".into()))?.split(',').map(str::trim).collect();
    let col = |name: &str| header.iter().position(|h| *h == name).ok_or_else(|| bad(format!("no `{name}` column")));
    let (ct, ce) = (col("t")?, col("e_norm")?);
    let mut times = Vec::new();
    let mut norms = Vec::new();
    for (k, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != header.len() {
            return Err(bad(format!("row {} has {} cells, expected {}", k + 1, cells.len(), header.len())));
        }
        let num = |c: usize| cells[c].parse::<f64>().map_err(|_| bad(format!("row {}: `{}` is not a number", k + 1, cells[c])));
        times.push(num(ct)?);
        norms.push(num(ce)?);
    }
    Ok((times, norms))
}

/// Fits a trace read from CSV over its horizon minus the first 10%.
pub fn run_analyze_trace(path: &str, text: &str) -> Result<Outcome, CliError> {
    let (times, norms) = read_trace_csv(path, text)?;
    let start = times.first().copied().unwrap_or(0.0);
    let end = times.last().copied().unwrap_or(0.0);
    let floor = DEFAULT_FLOOR * norms.first().copied().unwrap_or(0.0);
    let fit = fit_decay(&times, &norms, (start + (end - start) * DEFAULT_SKIP, end), floor)?;
    let report = json!({ "trace": path, "fit": fit_value(&fit) });
    Ok(Outcome {
        status: 0,
        artifacts: vec![Artifact { name: "analysis.json".into(), contents: pretty(&report) }],
        summary: summary_table(Some(&fit), None),
        report,
    })
}

/// One line of the `check` suite.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckItem {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance condition.
    pub condition: String,
    pub pass: bool,
}

struct Suite(Vec<CheckItem>);

impl Suite {
    fn at_most(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.0.push(CheckItem { name: name.into(), value, condition: format!("<= {bound:e}"), pass: value <= bound });
    }

    fn at_least(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.0.push(CheckItem { name: name.into(), value, condition: format!(">= {bound:e}"), pass: value >= bound });
    }

    fn below(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.0.push(CheckItem { name: name.into(), value, condition: format!("< {bound:e}"), pass: value < bound });
    }

    fn above(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.0.push(CheckItem { name: name.into(), value, condition: format!("> {bound:e}"), pass: value > bound });
    }

    fn holds(&mut self, name: impl Into<String>, pass: bool) {
        self.0.push(CheckItem {
            name: name.into(),
            value: if pass { 1.0 } else { 0.0 },
            condition: "holds".into(),
            pass,
        });
    }
}

/// Runs the full invariant suite on the scenario's objects.
pub fn check_items(file: &ScenarioFile, ov: &Overrides) -> Result<Vec<CheckItem>, CliError> {
    let p = prepare(file, ov)?;
    let mut s = Suite(Vec::new());
    let stacked = p.design.stacked();
    let rate = p.design.rate();

    for d in p.design.decs() {
        s.at_most(format!("agent {} decomposition residual", d.index + 1), d.invariant_residual(), INTERTWINING_TOL);
    }
    s.at_most("stacked decomposition residual", stacked.invariant_residual(), INTERTWINING_TOL);
    let jo = joint_observability(&p.plant);
    s.holds("joint observability", jo.observable && jo.consistent());
    for (k, snap) in p.family.iter().enumerate() {
        s.holds(format!("graph {} strongly connected", k + 1), strongly_connected(&snap.graph));
    }

    match &p.design {
        Design::Continuous(d) => {
            for c in &d.rate_certificates {
                s.at_least(format!("agent {} quotient rate margin", c.agent + 1), c.margin, -1e-9);
            }
            s.at_least("coupling gain over regime bound", d.g - d.coupling.bound(), -1e-12 * d.g.abs().max(1.0));
            match (&d.regime, &d.coupling) {
                (Regime::Fixed, _) => {
                    for (k, c) in d.member_certificates.iter().enumerate() {
                        s.holds(format!("graph {} fixed-gain certificate", k + 1), c.holds());
                    }
                }
                (Regime::Dwell { .. }, CouplingReport::Dwell(b)) => {
                    s.above("dwell transient decay", b.transient.lambda_star, 0.0);
                    let kind = p.signal.kind();
                    s.holds(
                        "signal respects its dwell constraint",
                        kind.map_or(p.signal.switch_count() == 0, |k| p.signal.validate(&k).valid),
                    );
                }
                (Regime::Arbitrary, CouplingReport::Arbitrary(b)) => {
                    s.holds("arbitrary-switching certificate", b.holds());
                }
                _ => {}
            }
        }
        Design::Discrete(d) => {
            for c in &d.rate_certificates {
                s.at_least(format!("agent {} quotient rate margin", c.agent + 1), c.margin, -1e-9);
            }
            s.holds("consensus blocks contract", d.check.contracts);
            s.at_most("round certificate", d.check.value, rate * (1.0 + 1e-9));
            if let Some(kind) = p.signal.kind() {
                s.holds("signal respects its constraint", p.signal.validate(&kind).valid);
            }
        }
    }

    let fixed = p.family.len() == 1;
    for (k, snap) in p.family.iter().enumerate() {
        let g = k + 1;
        if stacked.n_bar > 0 {
            let ly = lyapunov_residual(snap, stacked)?;
            let scale = coupled_laplacian(stacked, &snap.l).norm_fro().max(1.0);
            s.at_most(format!("graph {g} Lyapunov identity"), ly.identity_residual / scale, LYAPUNOV_TOL);
            s.above(format!("graph {g} coupled Laplacian min eigenvalue"), ly.laplacian_min, 0.0);
            s.below(format!("graph {g} consensus contraction max eigenvalue"), ly.contraction_max, 0.0);
        }
        let spec = spectrum_report(stacked, snap, error_coupling(&p), rate)?;
        s.holds(format!("graph {g} spectrum is the union of block spectra"), spec.union_holds());
        let certified_per_member = match &p.design {
            Design::Continuous(d) => matches!(d.regime, Regime::Fixed) || fixed,
            Design::Discrete(_) => true,
        };
        if certified_per_member {
            s.at_least(format!("graph {g} error spectrum margin"), spec.margin, -SPECTRUM_TOL);
        }
    }

    let trace = simulate_prepared(&p, ov)?;
    if trace.kind == TimeKind::Discrete {
        s.at_most("dual-path consistency", trace.consistency, DUAL_PATH_TOL);
    }
    if p.file.sim.g0.is_some() {
        let monotone = (0..p.plant.m()).all(|i| trace.gain_series(i).is_some_and(|g| g.windows(2).all(|w| w[1] >= w[0])));
        s.holds("adaptive gains nondecreasing", monotone);
        let e0 = trace.e_norm.first().copied().unwrap_or(0.0);
        let ratio = trace.e_norm.last().copied().unwrap_or(f64::NAN) / e0;
        s.at_most("adaptive error reduction", ratio, ADAPTIVE_REDUCTION);
    } else {
        let target = match p.kind() {
            TimeKind::Continuous => rate,
            TimeKind::Discrete => -rate.ln() / p.plant.sample_period(),
        };
        let window = fit_window(&p, &trace);
        match fit_decay_rate(&trace, Some(window), None) {
            Ok(fit) => s.at_least("simulated decay rate", fit.lambda_est, SIM_RATE_FRACTION * target),
            Err(AnalysisError::InsufficientData { .. }) => {
                // The error fell below the fit floor inside the window.
                let floor = DEFAULT_FLOOR * trace.e_norm.first().copied().unwrap_or(0.0);
                let last = trace.e_norm.last().copied().unwrap_or(f64::NAN);
                s.at_most("simulated error below fit floor", last, floor);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(s.0)
}

pub fn check_table(items: &[CheckItem]) -> String {
    let mut out = String::new();
    for it in items {
        let _ = writeln!(
            out,
            "{} {:<52} {:>14.6e} {}",
            if it.pass { "PASS" } else { "FAIL" },
            it.name,
            it.value,
            it.condition
        );
    }
    let failed = items.iter().filter(|i| !i.pass).count();
    let _ = writeln!(out, "{} checks, {failed} failed", items.len());
    out
}

pub fn run_check(file: &ScenarioFile, ov: &Overrides) -> Result<Outcome, CliError> {
    let items = check_items(file, ov)?;
    let failed = items.iter().filter(|i| !i.pass).count();
    let report = json!({
        "scenario": name_of(file),
        "checks": items.iter().map(|i| json!({
            "name": i.name,
            "value": i.value,
            "condition": i.condition,
            "pass": i.pass,
        })).collect::<Vec<_>>(),
        "failed": failed,
    });
    Ok(Outcome {
        status: if failed == 0 { 0 } else { 1 },
        artifacts: vec![Artifact { name: output_name(file, |o| o.report.clone(), "check.json"), contents: pretty(&report) }],
        summary: check_table(&items),
        report,
    })
}

pub fn run(cmd: Command, file: &ScenarioFile, ov: &Overrides) -> Result<Outcome, CliError> {
    match cmd {
        Command::Design => run_design(file, ov),
        Command::Simulate => run_simulate(file, ov),
        Command::Analyze => run_analyze(file, ov),
        Command::Check => run_check(file, ov),
    }
}
