//! Scenario files: a versioned JSON document with one block per concern.
//!
//! Agents, graph members and arcs are numbered from 1 in files. Parsing runs in three passes:
//! JSON syntax, required blocks and unknown top-level keys, then typed decoding. A file that
//! decodes is checked for dimensions and ranges before any numerics run, and every problem found
//! is reported with the line it sits on.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

/// Top-level blocks every file must carry.
pub const REQUIRED_BLOCKS: [&str; 6] = ["schema", "plant", "graphs", "signal", "design", "sim"];
const OPTIONAL_BLOCKS: [&str; 2] = ["name", "output"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub plant: PlantBlock,
    pub graphs: Vec<GraphBlock>,
    pub signal: SignalBlock,
    pub design: DesignBlock,
    pub sim: SimBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeSpec {
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantBlock {
    pub time: TimeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_period: Option<f64>,
    /// State matrix as rows.
    pub a: Vec<Vec<f64>>,
    /// Output matrix of each agent as rows.
    pub c: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSpec {
    #[default]
    Uniform,
    Metropolis,
}

impl WeightSpec {
    fn is_uniform(&self) -> bool {
        *self == WeightSpec::Uniform
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphBlock {
    /// `[from, to]`: `from` is a neighbor of `to`. Self-loops are implied.
    pub arcs: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "WeightSpec::is_uniform")]
    pub weights: WeightSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalBlock {
    Constant {
        #[serde(default = "first_member")]
        graph: usize,
    },
    Dwell {
        tau_d: f64,
        #[serde(default)]
        seed: u64,
    },
    AvgDwell {
        tau_d: f64,
        delta0: f64,
        #[serde(default)]
        seed: u64,
    },
    Arbitrary {
        min_step: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Explicit `[breakpoint, graph]` pairs, optionally held to a constraint.
    Pairs {
        pairs: Vec<(f64, usize)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        constraint: Option<ConstraintSpec>,
    },
}

fn first_member() -> usize {
    1
}

impl SignalBlock {
    /// Dwell time the signal promises, if any.
    pub fn tau_d(&self) -> Option<f64> {
        match self {
            SignalBlock::Dwell { tau_d, .. } | SignalBlock::AvgDwell { tau_d, .. } => Some(*tau_d),
            SignalBlock::Pairs { constraint: Some(ConstraintSpec::Dwell { tau_d }), .. }
            | SignalBlock::Pairs { constraint: Some(ConstraintSpec::AvgDwell { tau_d, .. }), .. } => Some(*tau_d),
            _ => None,
        }
    }

    /// Chatter bound the signal promises; plain dwell counts as one.
    pub fn delta0(&self) -> Option<f64> {
        match self {
            SignalBlock::AvgDwell { delta0, .. }
            | SignalBlock::Pairs { constraint: Some(ConstraintSpec::AvgDwell { delta0, .. }), .. } => Some(*delta0),
            SignalBlock::Dwell { .. } | SignalBlock::Pairs { constraint: Some(ConstraintSpec::Dwell { .. }), .. } => {
                Some(1.0)
            }
            _ => None,
        }
    }

    pub fn is_generated(&self) -> bool {
        matches!(self, SignalBlock::Dwell { .. } | SignalBlock::AvgDwell { .. } | SignalBlock::Arbitrary { .. })
    }

    pub fn set_seed(&mut self, value: u64) {
        match self {
            SignalBlock::Dwell { seed, .. } | SignalBlock::AvgDwell { seed, .. } | SignalBlock::Arbitrary { seed, .. } => {
                *seed = value
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintSpec {
    Dwell { tau_d: f64 },
    AvgDwell { tau_d: f64, delta0: f64 },
    Arbitrary { min_step: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainSpec {
    #[default]
    Synthesize,
    /// `K_i` of each agent as rows (`n` rows, one column per output).
    Given(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeSpec {
    Fixed,
    Dwell,
    Arbitrary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    pub regime: RegimeSpec,
    /// Coupling gain; the regime's bound when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    /// Weighted two-norm on a fixed graph, plain two-norm on a switching family.
    #[default]
    Weighted,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundsSpec {
    #[serde(default)]
    pub method: MethodSpec,
    /// Round count; selected by the method when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignBlock {
    pub rate: f64,
    #[serde(default)]
    pub gains: GainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quotient_bases: Option<Vec<Vec<Vec<f64>>>>,
    /// Continuous time only; defaults to the fixed-graph bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingSpec>,
    /// Discrete time only; defaults to the weighted method.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<RoundsSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    /// Time (continuous) or event index (discrete).
    pub time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remove_arc: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remove_agent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    pub x0: Vec<f64>,
    pub xi0: Vec<Vec<f64>>,
    /// Initial adaptive gains; switches the continuous estimator to adaptive coupling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0: Option<Vec<f64>>,
    /// Time (continuous) or number of events (discrete).
    pub horizon: f64,
    /// Output grid step (continuous only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub faults: Vec<FaultSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indicator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaIssue {
    /// Dotted path of the offending value, empty for the document itself.
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for SchemaIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if !self.path.is_empty() {
            write!(f, "{}: ", self.path)?;
        }
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaIssues(pub Vec<SchemaIssue>);

impl fmt::Display for SchemaIssues {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} schema error(s)", self.0.len())?;
        for issue in &self.0 {
            write!(f, "\n  {issue}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario file {path} not found")]
    FileNotFound { path: PathBuf },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Schema(SchemaIssues),
}

impl ScenarioError {
    pub fn issues(&self) -> &[SchemaIssue] {
        match self {
            ScenarioError::Schema(s) => &s.0,
            _ => &[],
        }
    }
}

pub fn parse_scenario(path: &Path) -> Result<ScenarioFile, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            ScenarioError::FileNotFound { path: path.to_path_buf() }
        } else {
            ScenarioError::Io { path: path.to_path_buf(), source }
        }
    })?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<ScenarioFile, ScenarioError> {
    let fail = |v: Vec<SchemaIssue>| Err(ScenarioError::Schema(SchemaIssues(v)));
    let value: Value = if text.trim().is_empty() {
        Value::Object(Default::default())
    } else {
        match serde_json::from_str(text) {
            Ok(v) => v,
            Err(e) => return fail(vec![issue_from_json("", &e)]),
        }
    };
    let lines = LineIndex::build(text);
    let Some(obj) = value.as_object() else {
        return fail(vec![SchemaIssue { path: String::new(), line: Some(1), message: "expected a JSON object".into() }]);
    };
    let mut issues: Vec<SchemaIssue> = REQUIRED_BLOCKS
        .iter()
        .filter(|k| !obj.contains_key(**k))
        .map(|k| SchemaIssue { path: String::new(), line: None, message: format!("missing required block `{k}`") })
        .collect();
    for key in obj.keys().filter(|k| !REQUIRED_BLOCKS.contains(&k.as_str()) && !OPTIONAL_BLOCKS.contains(&k.as_str())) {
        issues.push(SchemaIssue { path: key.clone(), line: lines.line(key), message: "unknown block".into() });
    }
    if !issues.is_empty() {
        return fail(issues);
    }
    let mut de = serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = match serde_path_to_error::deserialize(&mut de) {
        Ok(f) => f,
        Err(e) => {
            let path = e.path().to_string();
            return fail(vec![issue_from_json(if path == "." { "" } else { &path }, e.inner())]);
        }
    };
    let issues = validate(&file, &lines);
    if issues.is_empty() {
        Ok(file)
    } else {
        fail(issues)
    }
}

/// Canonical form: blocks in fixed order, defaults omitted, pretty-printed.
pub fn to_canonical_string(file: &ScenarioFile) -> String {
    let mut s = serde_json::to_string_pretty(file).expect("scenario files serialize");
    s.push('\n');
    s
}

fn issue_from_json(path: &str, e: &serde_json::Error) -> SchemaIssue {
    let text = e.to_string();
    let message = match text.rsplit_once(" at line ") {
        Some((m, _)) => m.to_string(),
        None => text,
    };
    SchemaIssue { path: path.to_string(), line: (e.line() > 0).then_some(e.line()), message }
}

struct Checker<'a> {
    lines: &'a LineIndex,
    issues: Vec<SchemaIssue>,
}

impl Checker<'_> {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        let path = path.into();
        let line = self.lines.line(&path);
        self.issues.push(SchemaIssue { path, line, message: message.into() });
    }

    fn positive(&mut self, path: &str, v: f64) {
        if !(v > 0.0) || !v.is_finite() {
            self.push(path, format!("must be positive, found {v}"));
        }
    }

    /// Matrix with `cols` columns and, when given, `rows` rows.
    fn matrix(&mut self, path: &str, what: &str, m: &[Vec<f64>], rows: Option<usize>, cols: usize) {
        if let Some(r) = rows {
            if m.len() != r {
                self.push(path, format!("{what} has {} rows, expected {r}", m.len()));
            }
        }
        for (k, row) in m.iter().enumerate() {
            if row.len() != cols {
                self.push(
                    format!("{path}[{k}]"),
                    format!("{what} row {} has {} entries, expected {cols}", k + 1, row.len()),
                );
            }
        }
    }
}

fn validate(f: &ScenarioFile, lines: &LineIndex) -> Vec<SchemaIssue> {
    let mut ck = Checker { lines, issues: Vec::new() };
    if f.schema != SCHEMA_VERSION {
        ck.push("schema", format!("unsupported schema version {}, expected {SCHEMA_VERSION}", f.schema));
    }
    let continuous = f.plant.time == TimeSpec::Continuous;
    let n = f.plant.a.len();
    let m = f.plant.c.len();
    if n == 0 {
        ck.push("plant.a", "state matrix is empty");
    }
    ck.matrix("plant.a", "plant.a", &f.plant.a, None, n);
    if m == 0 {
        ck.push("plant.c", "no agents listed");
    }
    for (i, c) in f.plant.c.iter().enumerate() {
        if c.is_empty() {
            ck.push(format!("plant.c[{i}]"), format!("agent {} has no output rows", i + 1));
        }
        ck.matrix(&format!("plant.c[{i}]"), &format!("output matrix of agent {}", i + 1), c, None, n);
    }
    match (continuous, f.plant.sample_period) {
        (true, Some(_)) => ck.push("plant.sample_period", "applies to discrete-time plants only"),
        (false, Some(t)) => ck.positive("plant.sample_period", t),
        _ => {}
    }

    if f.graphs.is_empty() {
        ck.push("graphs", "graph family is empty");
    }
    for (g, graph) in f.graphs.iter().enumerate() {
        for (k, &[from, to]) in graph.arcs.iter().enumerate() {
            let path = format!("graphs[{g}].arcs[{k}]");
            if from == 0 || to == 0 || from > m || to > m {
                ck.push(path, format!("arc [{from}, {to}] names an agent outside 1..={m}"));
            } else if from == to {
                ck.push(path, format!("arc [{from}, {to}] is a self-loop; self-loops are implied"));
            }
        }
    }

    let family = f.graphs.len();
    match &f.signal {
        SignalBlock::Constant { graph } => {
            if *graph == 0 || *graph > family {
                ck.push("signal.graph", format!("graph {graph} outside 1..={family}"));
            }
        }
        SignalBlock::Dwell { tau_d, .. } => ck.positive("signal.tau_d", *tau_d),
        SignalBlock::AvgDwell { tau_d, delta0, .. } => {
            ck.positive("signal.tau_d", *tau_d);
            if !(*delta0 >= 0.0) {
                ck.push("signal.delta0", format!("must be nonnegative, found {delta0}"));
            }
        }
        SignalBlock::Arbitrary { min_step, .. } => ck.positive("signal.min_step", *min_step),
        SignalBlock::Pairs { pairs, constraint } => {
            if pairs.is_empty() {
                ck.push("signal.pairs", "no breakpoints listed");
            }
            for (k, &(_, g)) in pairs.iter().enumerate() {
                if g == 0 || g > family {
                    ck.push(format!("signal.pairs[{k}]"), format!("graph {g} outside 1..={family}"));
                }
            }
            match constraint {
                Some(ConstraintSpec::Dwell { tau_d }) => ck.positive("signal.constraint.tau_d", *tau_d),
                Some(ConstraintSpec::AvgDwell { tau_d, delta0 }) => {
                    ck.positive("signal.constraint.tau_d", *tau_d);
                    if !(*delta0 >= 0.0) {
                        ck.push("signal.constraint.delta0", format!("must be nonnegative, found {delta0}"));
                    }
                }
                Some(ConstraintSpec::Arbitrary { min_step }) => ck.positive("signal.constraint.min_step", *min_step),
                None => {}
            }
        }
    }

    let d = &f.design;
    ck.positive("design.rate", d.rate);
    if let GainSpec::Given(ks) = &d.gains {
        if ks.len() != m {
            ck.push("design.gains.given", format!("{} gains listed for {m} agents", ks.len()));
        }
        for (i, k) in ks.iter().enumerate() {
            let outputs = f.plant.c.get(i).map_or(0, Vec::len);
            ck.matrix(&format!("design.gains.given[{i}]"), &format!("gain of agent {}", i + 1), k, Some(n), outputs);
        }
    }
    if let Some(bases) = &d.quotient_bases {
        if bases.len() != m {
            ck.push("design.quotient_bases", format!("{} bases listed for {m} agents", bases.len()));
        }
        for (i, b) in bases.iter().enumerate() {
            ck.matrix(&format!("design.quotient_bases[{i}]"), &format!("quotient basis of agent {}", i + 1), b, None, n);
        }
    }
    if continuous && d.rounds.is_some() {
        ck.push("design.rounds", "applies to discrete-time plants only");
    }
    if !continuous && d.coupling.is_some() {
        ck.push("design.coupling", "applies to continuous-time plants only");
    }
    if let Some(c) = &d.coupling {
        if let Some(g) = c.g {
            if !(g >= 0.0) {
                ck.push("design.coupling.g", format!("must be nonnegative, found {g}"));
            }
        }
        if c.regime == RegimeSpec::Dwell && f.signal.tau_d().is_none() {
            ck.push("design.coupling.regime", "dwell regime needs a signal with a dwell time");
        }
    }
    if let Some(RoundsSpec { q: Some(0), .. }) = d.rounds {
        ck.push("design.rounds.q", "must be at least 1");
    }

    let s = &f.sim;
    if s.x0.len() != n {
        ck.push("sim.x0", format!("has {} entries, expected {n}", s.x0.len()));
    }
    if s.xi0.len() != m {
        ck.push("sim.xi0", format!("has {} estimates, expected {m}", s.xi0.len()));
    }
    for (i, xi) in s.xi0.iter().enumerate() {
        if xi.len() != n {
            ck.push(format!("sim.xi0[{i}]"), format!("estimate of agent {} has {} entries, expected {n}", i + 1, xi.len()));
        }
    }
    if let Some(g0) = &s.g0 {
        if !continuous {
            ck.push("sim.g0", "adaptive gains apply to continuous-time plants only");
        }
        if g0.len() != m {
            ck.push("sim.g0", format!("has {} entries, expected {m}", g0.len()));
        }
        if g0.iter().any(|&g| !(g >= 0.0)) {
            ck.push("sim.g0", "initial gains must be nonnegative");
        }
    }
    ck.positive("sim.horizon", s.horizon);
    if let Some(h) = s.h {
        if continuous {
            ck.positive("sim.h", h);
        } else {
            ck.push("sim.h", "applies to continuous-time plants only");
        }
    }
    for (k, fault) in s.faults.iter().enumerate() {
        let path = format!("sim.faults[{k}]");
        if !(fault.time >= 0.0) {
            ck.push(format!("{path}.time"), format!("must be nonnegative, found {}", fault.time));
        }
        match (fault.remove_arc, fault.remove_agent) {
            (Some([from, to]), None) => {
                if from == 0 || to == 0 || from > m || to > m || from == to {
                    ck.push(format!("{path}.remove_arc"), format!("arc [{from}, {to}] is not an arc between agents"));
                }
            }
            (None, Some(a)) => {
                if a == 0 || a > m {
                    ck.push(format!("{path}.remove_agent"), format!("agent {a} outside 1..={m}"));
                }
            }
            _ => ck.push(path, "needs exactly one of `remove_arc` and `remove_agent`"),
        }
    }
    ck.issues
}

/// Line of every value in a JSON text, keyed by the same dotted paths the issues use.
#[derive(Debug, Default)]
pub(crate) struct LineIndex {
    lines: HashMap<String, usize>,
}

impl LineIndex {
    pub(crate) fn build(text: &str) -> Self {
        let mut sc = Scanner { b: text.as_bytes(), pos: 0, line: 1, out: HashMap::new() };
        sc.value(String::new());
        Self { lines: sc.out }
    }

    /// Line of `path` or of its nearest recorded ancestor.
    pub(crate) fn line(&self, path: &str) -> Option<usize> {
        let mut p = path;
        loop {
            if let Some(&l) = self.lines.get(p) {
                return Some(l);
            }
            let cut = p.rfind(['.', '['])?;
            p = &p[..cut];
        }
    }
}

struct Scanner<'a> {
    b: &'a [u8],
    pos: usize,
    line: usize,
    out: HashMap<String, usize>,
}

impl Scanner<'_> {
    fn peek(&self) -> Option<u8> {
        self.b.get(self.pos).copied()
    }

    fn bump(&mut self) {
        if self.peek() == Some(b'\n') {
            self.line += 1;
        }
        self.pos += 1;
    }

    fn ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.bump();
        }
    }

    fn string(&mut self) -> String {
        self.bump();
        let start = self.pos;
        while let Some(c) = self.peek() {
            match c {
                b'\\' => {
                    self.bump();
                    self.bump();
                }
                b'"' => break,
                _ => self.bump(),
            }
        }
        let s = String::from_utf8_lossy(&self.b[start..self.pos.min(self.b.len())]).into_owned();
        self.bump();
        s
    }

    fn value(&mut self, path: String) {
        self.ws();
        self.out.entry(path.clone()).or_insert(self.line);
        match self.peek() {
            Some(b'{') => {
                self.bump();
                loop {
                    self.ws();
                    match self.peek() {
                        Some(b'"') => {
                            let key = self.string();
                            self.ws();
                            if self.peek() == Some(b':') {
                                self.bump();
                            }
                            let child = if path.is_empty() { key } else { format!("{path}.{key}") };
                            self.value(child);
                        }
                        Some(b',') => self.bump(),
                        Some(b'}') => {
                            self.bump();
                            return;
                        }
                        _ => return,
                    }
                }
            }
            Some(b'[') => {
                self.bump();
                let mut idx = 0;
                loop {
                    self.ws();
                    match self.peek() {
                        Some(b']') => {
                            self.bump();
                            return;
                        }
                        Some(b',') => self.bump(),
                        None => return,
                        _ => {
                            self.value(format!("{path}[{idx}]"));
                            idx += 1;
                        }
                    }
                }
            }
            Some(b'"') => {
                self.string();
            }
            Some(_) => {
                while !matches!(self.peek(), None | Some(b',' | b']' | b'}' | b' ' | b'\t' | b'\r' | b'\n')) {
                    self.bump();
                }
            }
            None => {}
        }
    }
}
