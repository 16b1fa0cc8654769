//! Experiment configuration: TOML or JSON with one schema.
//!
//! Parsing collects every problem it can find (unknown keys in all tables,
//! type errors per section, invariant violations) before giving up.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use schrokato::kato::ClassifyTolerances;
use schrokato::kernels::ControlVariant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub space: Option<SpaceConfig>,
    pub graph: Option<GraphConfig>,
    #[serde(default)]
    pub potentials: BTreeMap<String, PotentialConfig>,
    pub kernel: Option<KernelSection>,
    pub kato: Option<KatoSection>,
    pub fk: Option<FkSection>,
    pub spectrum: Option<SpectrumSection>,
    pub dominate: Option<DominateSection>,
    pub lattice: Option<LatticeSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub kind: SpaceKind,
    pub dim: Option<usize>,
    pub length: Option<f64>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Euclidean,
    Hyperbolic,
    Interval,
    Box,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub preset: Option<GraphPreset>,
    /// Lattice document (JSON) relative to the config file.
    pub file: Option<PathBuf>,
    pub n: Option<usize>,
    /// Edge probability of the random preset.
    pub p: Option<f64>,
    pub graph_seed: Option<u64>,
    /// Grid preset: ambient space and rectangle.
    pub grid: Option<SpaceConfig>,
    pub spacing: Option<f64>,
    pub gauge: Option<GaugeConfig>,
    /// Kept vertices of a Dirichlet restriction.
    pub mask: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphPreset {
    Path,
    Cycle,
    Random,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeConfig {
    pub kind: GaugeKind,
    /// Total flux, spread evenly over the edges (cycles).
    pub flux: Option<f64>,
    pub angles: Option<Vec<f64>>,
    pub rank: Option<usize>,
    pub gauge_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeKind {
    Trivial,
    Flux,
    Angles,
    RandomUnitary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub kind: PotentialKind,
    pub c: Option<f64>,
    pub alpha: Option<f64>,
    pub center: Option<Vec<f64>>,
    pub cutoff: Option<f64>,
    pub radius: Option<f64>,
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Constant,
    Coulomb,
    /// `c·1_{B(center, radius)}`.
    Indicator,
    /// Per-vertex values.
    Table,
    RadialPower,
    Green,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub times: Vec<f64>,
    pub points: Option<Vec<Vec<f64>>>,
    /// `(s, t)` pairs for Chapman–Kolmogorov residuals at each point.
    pub ck_pairs: Option<Vec<[f64; 2]>>,
    pub control: Option<ControlVariant>,
    /// Exponents `q′` whose integrability is recorded for the control pair.
    pub q_primes: Option<Vec<f64>>,
    /// Rate `A` of the integrability records (default 1).
    pub control_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KatoSection {
    pub potential: String,
    pub times: Vec<f64>,
    pub probes: Option<Vec<Vec<f64>>>,
    pub rates: Option<Vec<f64>>,
    pub alpha_min: Option<f64>,
    pub d_max: Option<f64>,
}

impl KatoSection {
    pub fn tolerances(&self) -> ClassifyTolerances {
        let d = ClassifyTolerances::default();
        ClassifyTolerances {
            alpha_min: self.alpha_min.unwrap_or(d.alpha_min),
            d_max: self.d_max.unwrap_or(d.d_max),
            r_grid: self.rates.clone().unwrap_or(d.r_grid),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FkSection {
    pub t: f64,
    pub n_paths: usize,
    pub potential: Option<String>,
    /// Terminal function: a potential name, evaluated like a potential.
    pub terminal: Option<String>,
    /// Start vertex (graphs).
    pub start_vertex: Option<usize>,
    /// Start point (spaces).
    pub start_point: Option<Vec<f64>>,
    /// Euler step for chart paths.
    pub step: Option<f64>,
    /// Number of paths written to `paths.csv`.
    pub dump_paths: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub potential: Option<String>,
    pub count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DominateSection {
    pub times: Vec<f64>,
    pub trials: Option<usize>,
    /// Scalar potential `V = v·I` of the bundle operator.
    pub potential: Option<String>,
    /// Scale of a random positive semidefinite term added to `V`.
    pub random_potential_scale: Option<f64>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub potential: Option<String>,
}

/// Every problem found while reading a config.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem{}):", self.0.len(), if self.0.len() == 1 { "" } else { "s" })?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// Allowed keys of a table; `None` marks leaves.
struct Shape {
    keys: &'static [(&'static str, Option<&'static Shape>)],
    /// Tables whose keys are user-chosen names (the potentials table).
    map_of: Option<&'static Shape>,
}

const fn table(keys: &'static [(&'static str, Option<&'static Shape>)]) -> Shape {
    Shape { keys, map_of: None }
}

static SPACE: Shape = table(&[("kind", None), ("dim", None), ("length", None), ("lower", None), ("upper", None)]);
static GAUGE: Shape = table(&[("kind", None), ("flux", None), ("angles", None), ("rank", None), ("gauge_seed", None)]);
static GRAPH: Shape = table(&[
    ("preset", None),
    ("file", None),
    ("n", None),
    ("p", None),
    ("graph_seed", None),
    ("grid", Some(&SPACE)),
    ("spacing", None),
    ("gauge", Some(&GAUGE)),
    ("mask", None),
]);
static POTENTIAL: Shape =
    table(&[("kind", None), ("c", None), ("alpha", None), ("center", None), ("cutoff", None), ("radius", None), ("values", None)]);
static POTENTIALS: Shape = Shape { keys: &[], map_of: Some(&POTENTIAL) };
static KERNEL: Shape = table(&[("times", None), ("points", None), ("ck_pairs", None), ("control", None), ("q_primes", None), ("control_rate", None)]);
static KATO: Shape = table(&[("potential", None), ("times", None), ("probes", None), ("rates", None), ("alpha_min", None), ("d_max", None)]);
static FK: Shape = table(&[
    ("t", None),
    ("n_paths", None),
    ("potential", None),
    ("terminal", None),
    ("start_vertex", None),
    ("start_point", None),
    ("step", None),
    ("dump_paths", None),
]);
static SPECTRUM: Shape = table(&[("potential", None), ("count", None)]);
static DOMINATE: Shape = table(&[("times", None), ("trials", None), ("potential", None), ("random_potential_scale", None), ("tolerance", None)]);
static LATTICE: Shape = table(&[("potential", None)]);
static ROOT: Shape = table(&[
    ("seed", None),
    ("format", None),
    ("out", None),
    ("space", Some(&SPACE)),
    ("graph", Some(&GRAPH)),
    ("potentials", Some(&POTENTIALS)),
    ("kernel", Some(&KERNEL)),
    ("kato", Some(&KATO)),
    ("fk", Some(&FK)),
    ("spectrum", Some(&SPECTRUM)),
    ("dominate", Some(&DOMINATE)),
    ("lattice", Some(&LATTICE)),
]);

fn check_keys(value: &Value, shape: &Shape, path: &str, errors: &mut Vec<String>) {
    let Value::Object(map) = value else {
        errors.push(format!("`{}` must be a table", if path.is_empty() { "<root>" } else { path }));
        return;
    };
    for (k, v) in map {
        let here = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
        if let Some(inner) = shape.map_of {
            check_keys(v, inner, &here, errors);
            continue;
        }
        match shape.keys.iter().find(|(name, _)| name == k) {
            None => errors.push(format!("unknown key `{here}`")),
            Some((_, Some(inner))) => check_keys(v, inner, &here, errors),
            Some((_, None)) => {}
        }
    }
}

/// Reads a config; the format follows the extension (`.json` or TOML).
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigErrors> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigErrors(vec![format!("cannot read {}: {e}", path.display())]))?;
    let is_json = path.extension().is_some_and(|e| e == "json");
    parse_config_str(&text, is_json)
}

pub fn parse_config_str(text: &str, is_json: bool) -> Result<ExperimentConfig, ConfigErrors> {
    let raw: Value = if is_json {
        serde_json::from_str(text).map_err(|e| ConfigErrors(vec![format!("JSON syntax: {e}")]))?
    } else {
        let t: toml::Table = toml::from_str(text).map_err(|e| ConfigErrors(vec![format!("TOML syntax: {e}")]))?;
        serde_json::to_value(t).map_err(|e| ConfigErrors(vec![e.to_string()]))?
    };
    let mut errors = Vec::new();
    check_keys(&raw, &ROOT, "", &mut errors);
    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    // type errors are reported per section so that one bad table does not hide another
    let Value::Object(map) = &raw else { unreachable!("checked above") };
    for (k, v) in map {
        let res = match k.as_str() {
            "space" => typed::<SpaceConfig>(v),
            "graph" => typed::<GraphConfig>(v),
            "potentials" => typed::<BTreeMap<String, PotentialConfig>>(v),
            "kernel" => typed::<KernelSection>(v),
            "kato" => typed::<KatoSection>(v),
            "fk" => typed::<FkSection>(v),
            "spectrum" => typed::<SpectrumSection>(v),
            "dominate" => typed::<DominateSection>(v),
            "lattice" => typed::<LatticeSection>(v),
            "seed" => typed::<u64>(v),
            "format" => typed::<Format>(v),
            "out" => typed::<PathBuf>(v),
            _ => Ok(()),
        };
        if let Err(e) = res {
            errors.push(format!("`{k}`: {e}"));
        }
    }
    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    let cfg: ExperimentConfig = serde_json::from_value(raw).map_err(|e| ConfigErrors(vec![e.to_string()]))?;
    let problems = cfg.validate();
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(problems))
    }
}

fn typed<T: DeserializeOwned>(v: &Value) -> Result<(), serde_json::Error> {
    serde_json::from_value::<T>(v.clone()).map(|_| ())
}

fn positive(errors: &mut Vec<String>, field: &str, v: Option<f64>) {
    if let Some(x) = v {
        if !(x > 0.0 && x.is_finite()) {
            errors.push(format!("`{field}` must be positive and finite (got {x})"));
        }
    }
}

fn positive_list(errors: &mut Vec<String>, field: &str, v: &[f64]) {
    if v.is_empty() {
        errors.push(format!("`{field}` must not be empty"));
    }
    for x in v {
        if !(*x > 0.0 && x.is_finite()) {
            errors.push(format!("`{field}` entries must be positive and finite (got {x})"));
            break;
        }
    }
}

impl ExperimentConfig {
    /// Invariant checks; returns all violations.
    pub fn validate(&self) -> Vec<String> {
        let mut e = Vec::new();
        if self.space.is_some() == self.graph.is_some() {
            e.push("exactly one source: give either `space` or `graph`".into());
        }
        if let Some(s) = &self.space {
            validate_space(&mut e, "space", s);
        }
        if let Some(g) = &self.graph {
            validate_graph(&mut e, g);
        }
        for (name, p) in &self.potentials {
            validate_potential(&mut e, name, p);
        }
        let known = |e: &mut Vec<String>, field: &str, name: &Option<String>| {
            if let Some(n) = name {
                if !self.potentials.contains_key(n) {
                    e.push(format!("`{field}` refers to unknown potential `{n}`"));
                }
            }
        };
        if let Some(k) = &self.kernel {
            positive_list(&mut e, "kernel.times", &k.times);
            if let Some(pairs) = &k.ck_pairs {
                for p in pairs {
                    positive(&mut e, "kernel.ck_pairs", Some(p[0].min(p[1])));
                }
            }
            positive(&mut e, "kernel.control_rate", k.control_rate);
            if k.q_primes.is_some() && k.control.is_none() {
                e.push("`kernel.q_primes` needs `kernel.control`".into());
            }
            if k.q_primes.as_ref().is_some_and(|q| q.iter().any(|x| !(*x >= 1.0))) {
                e.push("`kernel.q_primes` entries must be at least 1".into());
            }
        }
        if let Some(k) = &self.kato {
            positive_list(&mut e, "kato.times", &k.times);
            known(&mut e, "kato.potential", &Some(k.potential.clone()));
            if let Some(r) = &k.rates {
                positive_list(&mut e, "kato.rates", r);
            }
            let mut ts = k.times.clone();
            ts.sort_by(f64::total_cmp);
            if let (Some(a), Some(b)) = (ts.first(), ts.last()) {
                if *b < 100.0 * a {
                    e.push("`kato.times` must span at least two decades".into());
                }
            }
        }
        if let Some(f) = &self.fk {
            positive(&mut e, "fk.t", Some(f.t));
            positive(&mut e, "fk.step", f.step);
            if f.n_paths == 0 {
                e.push("`fk.n_paths` must be at least 1".into());
            }
            known(&mut e, "fk.potential", &f.potential);
            known(&mut e, "fk.terminal", &f.terminal);
            if self.space.is_some() && (f.start_point.is_none() || f.step.is_none()) {
                e.push("`fk` on a space needs `start_point` and `step`".into());
            }
            if self.graph.is_some() && f.start_vertex.is_none() {
                e.push("`fk` on a graph needs `start_vertex`".into());
            }
        }
        if let Some(s) = &self.spectrum {
            known(&mut e, "spectrum.potential", &s.potential);
        }
        if let Some(d) = &self.dominate {
            positive_list(&mut e, "dominate.times", &d.times);
            known(&mut e, "dominate.potential", &d.potential);
            positive(&mut e, "dominate.tolerance", d.tolerance);
            if d.random_potential_scale.is_some_and(|s| !(s >= 0.0)) {
                e.push("`dominate.random_potential_scale` must be nonnegative".into());
            }
        }
        if let Some(l) = &self.lattice {
            known(&mut e, "lattice.potential", &l.potential);
        }
        e
    }
}

fn validate_space(e: &mut Vec<String>, at: &str, s: &SpaceConfig) {
    match s.kind {
        SpaceKind::Euclidean | SpaceKind::Hyperbolic => {
            if s.dim.is_none_or(|d| d == 0) {
                e.push(format!("`{at}.dim` must be a positive integer"));
            }
        }
        SpaceKind::Interval => positive(e, &format!("{at}.length"), Some(s.length.unwrap_or(f64::NAN))),
        SpaceKind::Box => match (&s.lower, &s.upper) {
            (Some(l), Some(u)) if l.len() == u.len() && !l.is_empty() => {
                if l.iter().zip(u).any(|(a, b)| !(a < b)) {
                    e.push(format!("`{at}.lower` must lie below `{at}.upper`"));
                }
            }
            _ => e.push(format!("`{at}` boxes need `lower` and `upper` of equal length")),
        },
    }
}

fn validate_graph(e: &mut Vec<String>, g: &GraphConfig) {
    if g.preset.is_some() == g.file.is_some() {
        e.push("`graph` needs exactly one of `preset` and `file`".into());
    }
    positive(e, "graph.spacing", g.spacing);
    match g.preset {
        Some(GraphPreset::Path) | Some(GraphPreset::Cycle) | Some(GraphPreset::Random) => {
            if g.n.is_none_or(|n| n < 2) {
                e.push("`graph.n` must be at least 2".into());
            }
        }
        Some(GraphPreset::Grid) => {
            match &g.grid {
                Some(s) => validate_space(e, "graph.grid", s),
                None => e.push("`graph.grid` is required for the grid preset".into()),
            }
            if g.spacing.is_none() {
                e.push("`graph.spacing` is required for the grid preset".into());
            }
        }
        None => {}
    }
    if let Some(p) = g.p {
        if !(0.0..=1.0).contains(&p) {
            e.push(format!("`graph.p` must lie in [0, 1] (got {p})"));
        }
    }
    if let Some(gauge) = &g.gauge {
        match gauge.kind {
            GaugeKind::Flux if gauge.flux.is_none() => e.push("`graph.gauge.flux` is required".into()),
            GaugeKind::Angles if gauge.angles.is_none() => e.push("`graph.gauge.angles` is required".into()),
            _ => {}
        }
        if gauge.rank == Some(0) {
            e.push("`graph.gauge.rank` must be at least 1".into());
        }
    }
}

fn validate_potential(e: &mut Vec<String>, name: &str, p: &PotentialConfig) {
    let at = format!("potentials.{name}");
    match p.kind {
        PotentialKind::Table if p.values.is_none() => e.push(format!("`{at}.values` is required")),
        PotentialKind::Indicator => positive(e, &format!("{at}.radius"), Some(p.radius.unwrap_or(f64::NAN))),
        PotentialKind::RadialPower if p.alpha.is_none() => e.push(format!("`{at}.alpha` is required")),
        _ => {}
    }
    positive(e, &format!("{at}.cutoff"), p.cutoff);
    if p.c.is_some_and(|c| !c.is_finite()) {
        e.push(format!("`{at}.c` must be finite"));
    }
}
