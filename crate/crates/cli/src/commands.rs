//! The six subcommands. Each writes its artifacts and records contracts;
//! a failed contract turns into exit status 2.

use serde::Serialize;
use serde_json::json;

use schrokato::domination::{check_diamagnetic_bottom, check_hsu_direction, check_kato_simon, check_positivity, CheckVerdict};
use schrokato::geometry::Point;
use schrokato::kato::{classify_potential, khasminskii_constants, Potential};
use schrokato::kernels::{check_control_pair, make_control_pair, make_kernel, spectral_bottom_of, KernelHandle};
use schrokato::lattice::{LatticeDocument, PotentialField, SchrodingerOperator, EIGEN_LIMIT};
use schrokato::linalg::{random_hermitian, CMatrix, CVector, C64};
use schrokato::semigroup::spectrum_bottom;
use schrokato::stochastics::{
    fk_covariant, fk_scalar, path_rng, sample_path_chart, sample_path_ctmc, write_paths_csv, JumpChain, Observable, PathSource, Start,
};
use schrokato::Error;

use crate::config::{ExperimentConfig, Format, PotentialConfig};
use crate::output::{num, Artifacts};
use crate::setup::{continuum_potential, scalar_field, vertex_point, vertex_values, GraphSetup, Source};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigErrors),
    #[error(transparent)]
    Library(#[from] Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Agreement band of Monte-Carlo estimates with their oracle, in standard errors.
pub const MC_SIGMAS: f64 = 4.0;
/// Relative tolerance of the resolvent/heat-functional sandwich.
pub const SANDWICH_TOL: f64 = 1e-8;

pub struct Run<'a> {
    pub cfg: &'a ExperimentConfig,
    pub seed: u64,
    pub format: Format,
    pub source: Source,
    pub art: Artifacts,
}

impl Run<'_> {
    fn potential(&self, name: &str) -> CliResult<&PotentialConfig> {
        self.cfg.potentials.get(name).ok_or_else(|| usage(format!("unknown potential `{name}`")))
    }

    fn graph(&self, command: &str) -> CliResult<&GraphSetup> {
        match &self.source {
            Source::Graph(g) => Ok(g),
            Source::Space(_) => Err(usage(format!("`{command}` needs a `graph` source"))),
        }
    }

    /// Scalar values of a named potential on all vertices, or zeros.
    fn graph_values(&self, g: &GraphSetup, name: Option<&String>) -> CliResult<Vec<f64>> {
        match name {
            Some(n) => Ok(vertex_values(self.potential(n)?, &g.graph)?),
            None => Ok(vec![0.0; g.graph.n_vertices()]),
        }
    }

    /// Writes a table as CSV or JSON rows according to `--format`.
    fn table(&mut self, stem: &str, header: &[&str], rows: &[Vec<f64>]) -> CliResult<()> {
        match self.format {
            Format::Csv => {
                let h: Vec<String> = header.iter().map(|s| s.to_string()).collect();
                let r: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|x| num(*x)).collect()).collect();
                self.art.csv(&format!("{stem}.csv"), &h, &r)?;
            }
            Format::Json => {
                self.art.json(&format!("{stem}.json"), &json!({ "columns": header, "rows": rows }))?;
            }
        }
        Ok(())
    }
}

fn kept_points(g: &GraphSetup) -> Vec<Point> {
    match g.mask() {
        Some(m) => m.iter().map(|&v| vertex_point(&g.graph, v)).collect(),
        None => (0..g.graph.n_vertices()).map(|v| vertex_point(&g.graph, v)).collect(),
    }
}

fn points_or(cfg: &Option<Vec<Vec<f64>>>, default: impl FnOnce() -> Vec<Point>) -> Vec<Point> {
    match cfg {
        Some(p) => p.iter().map(|c| Point(c.clone())).collect(),
        None => default(),
    }
}

pub fn kernel(run: &mut Run) -> CliResult<()> {
    let sec = run.cfg.kernel.clone().ok_or_else(|| usage("`kernel` needs a [kernel] section"))?;
    let (k, points, ck_tol) = match &run.source {
        Source::Space(s) => (make_kernel(s)?, points_or(&sec.points, || vec![s.base_point()]), 1e-6),
        Source::Graph(g) => {
            if g.bundle.rank() != 1 {
                return Err(usage("lattice kernels are scalar; use a rank-one gauge"));
            }
            let op = g.operator(None)?;
            (KernelHandle::lattice(op)?, points_or(&sec.points, || kept_points(g)), 1e-12)
        }
    };
    let complete = k.is_stochastically_complete();
    let mut rows = Vec::new();
    let mut worst_mass: f64 = 0.0;
    for &t in &sec.times {
        for x in &points {
            let p = k.eval(t, x, x)?;
            let mass = k.mass(t, x)?;
            worst_mass = worst_mass.max(if complete { (mass - 1.0).abs() } else { (mass - 1.0).max(0.0) });
            let mut row = vec![t];
            row.extend(&x.0);
            row.extend([p, mass]);
            rows.push(row);
        }
    }
    let dim = points.first().map_or(0, |p| p.dim());
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((0..dim).map(|i| format!("x{i}")));
    header.extend(["p".into(), "mass".into()]);
    let h: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    run.table("kernel", &h, &rows)?;
    let what = if complete { "|mass - 1|" } else { "mass - 1" };
    run.art.contract("mass", worst_mass <= 1e-6, format!("max {what} = {worst_mass:e}, tolerance 1e-6"));

    if let Some(pairs) = &sec.ck_pairs {
        let mut ck = Vec::new();
        let mut worst: f64 = 0.0;
        for [s, t] in pairs {
            for x in &points {
                let r = k.ck_residual(*s, *t, x, x)?;
                worst = worst.max(r.abs());
                let mut row = vec![*s, *t];
                row.extend(&x.0);
                row.push(r);
                ck.push(row);
            }
        }
        let mut header: Vec<String> = vec!["s".into(), "t".into()];
        header.extend((0..dim).map(|i| format!("x{i}")));
        header.push("residual".into());
        let h: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        run.table("chapman_kolmogorov", &h, &ck)?;
        run.art.contract("chapman_kolmogorov", worst <= ck_tol, format!("max |residual| = {worst:e}, tolerance {ck_tol:e}"));
    }

    if let Some(variant) = sec.control {
        let Source::Space(space) = &run.source else {
            return Err(usage("control pairs need a `space` source"));
        };
        let mut pair = make_control_pair(space, variant)?;
        let a = sec.control_rate.unwrap_or(1.0);
        let mut records = Vec::new();
        for &q in sec.q_primes.as_deref().unwrap_or(&[]) {
            records.push(pair.declare_admissible(q, a)?);
        }
        let check = check_control_pair(&k, &pair, &points, &sec.times)?;
        run.art.json("control.json", &json!({ "pair": pair, "check": check, "integrability": records }))?;
        run.art.contract(
            "control_pair",
            check.max_violation <= 1e-12,
            format!("max violation {:e}, calibrated constant {}", check.max_violation, check.calibrated_c),
        );
        if !records.is_empty() {
            let all = records.iter().all(|r| r.finite);
            run.art.contract("integrability", all, format!("{} exponents declared", records.len()));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SandwichRow {
    r: f64,
    t: f64,
    lower: f64,
    d: f64,
    upper: f64,
    pass: bool,
}

pub fn kato(run: &mut Run) -> CliResult<()> {
    let sec = run.cfg.kato.clone().ok_or_else(|| usage("`kato` needs a [kato] section"))?;
    let pc = run.potential(&sec.potential)?.clone();
    let (k, w, probes) = match &run.source {
        Source::Space(s) => (make_kernel(s)?, continuum_potential(&pc, s)?, points_or(&sec.probes, || vec![s.base_point()])),
        Source::Graph(g) => {
            let op = SchrodingerOperator::scalar(&g.graph, None, g.mask())?;
            let values = vertex_values(&pc, &g.graph)?;
            (KernelHandle::lattice(op)?, Potential::Vertex { values }, points_or(&sec.probes, || kept_points(g)))
        }
    };
    let report = classify_potential(&k, &w, &probes, &sec.times, &sec.tolerances())?;

    // (1 − e^{−rt}) C_r ≤ D(t) ≤ e^{rt} C_r
    let mut sandwich = Vec::new();
    for rp in &report.resolvent {
        for cp in &report.curve {
            let (r, t) = (rp.r, cp.t);
            let lower = -(-r * t).exp_m1() * rp.c;
            let upper = (r * t).exp() * rp.c;
            let slack = SANDWICH_TOL * cp.d.abs().max(lower.abs()).max(f64::MIN_POSITIVE);
            let pass = lower <= cp.d + slack && cp.d <= upper + SANDWICH_TOL * upper.abs();
            sandwich.push(SandwichRow { r, t, lower, d: cp.d, upper, pass });
        }
    }
    let khas: Vec<_> = report
        .curve
        .iter()
        .filter(|p| p.d < 1.0)
        .map(|p| khasminskii_constants(p.d, p.t).map(|c| json!({ "s": p.t, "D": p.d, "c1": c.c1, "c2": c.c2 })))
        .collect::<Result<_, _>>()?;
    let failed = sandwich.iter().filter(|r| !r.pass).count();
    run.art.json("kato.json", &json!({ "report": report, "sandwich": sandwich, "khasminskii": khas }))?;
    run.art.contract("resolvent_sandwich", failed == 0, format!("{failed} of {} (r, t) pairs violated", sandwich.len()));
    Ok(())
}

pub fn fk(run: &mut Run) -> CliResult<()> {
    let sec = run.cfg.fk.clone().ok_or_else(|| usage("`fk` needs an [fk] section"))?;
    let (seed, n, t) = (run.seed, sec.n_paths, sec.t);
    let dump = sec.dump_paths.unwrap_or(0).min(n);
    match &run.source {
        Source::Graph(g) => {
            let x0 = sec.start_vertex.expect("validated");
            let w = run.graph_values(g, sec.potential.as_ref())?;
            let f = match &sec.terminal {
                Some(name) => vertex_values(run.potential(name)?, &g.graph)?,
                None => vec![1.0; g.graph.n_vertices()],
            };
            let chain = JumpChain::new(&g.graph, g.mask())?;
            let rank = g.bundle.rank();
            let field = scalar_field(&w, rank)?;
            let op = SchrodingerOperator::assemble(&g.graph, &g.bundle, Some(&field), g.mask())?;
            let local = op.local_index(x0).ok_or_else(|| usage(format!("start vertex {x0} is not kept")))?;
            let f_local = CVector::from_iterator(op.dim(), op.kept().iter().flat_map(|&v| std::iter::repeat_n(C64::new(f[v], 0.0), rank)));
            let exact = op.heat_matrix(t)? * f_local;
            let oracle: Vec<C64> = (0..rank).map(|a| exact[local * rank + a]).collect();
            let (estimate, agrees) = if rank == 1 && g.bundle.is_trivial() {
                let e = fk_scalar(PathSource::Lattice(&chain), Observable::Vertex(&w), Observable::Vertex(&f), t, &Start::Vertex(x0), n, seed)?;
                (serde_json::to_value(e).expect("plain data"), e.agrees_with(oracle[0].re, MC_SIGMAS, 1e-12))
            } else {
                let fs = CVector::from_iterator(f.len() * rank, f.iter().flat_map(|&v| std::iter::repeat_n(C64::new(v, 0.0), rank)));
                let e = fk_covariant(&chain, &g.bundle, &field, &fs, t, x0, n, seed)?;
                let ok = e.agrees_with(&oracle, MC_SIGMAS, 1e-12);
                (serde_json::to_value(e).expect("plain data"), ok)
            };
            run.art.json("fk.json", &json!({ "t": t, "start": x0, "estimate": estimate, "oracle": oracle }))?;
            run.art.contract("fk_oracle", agrees, format!("estimate within {MC_SIGMAS} standard errors of the matrix exponential"));
            if dump > 0 {
                let paths = (0..dump).map(|i| sample_path_ctmc(&chain, x0, t, &mut path_rng(seed, i as u64))).collect::<Result<Vec<_>, _>>()?;
                let mut buf = Vec::new();
                write_paths_csv(&mut buf, &paths)?;
                run.art.csv_text("paths.csv", &String::from_utf8(buf).expect("ascii"))?;
            }
        }
        Source::Space(space) => {
            let x0 = Point(sec.start_point.clone().expect("validated"));
            let h = sec.step.expect("validated");
            let w = sec.potential.as_ref().map(|name| run.potential(name).and_then(|p| Ok(continuum_potential(p, space)?))).transpose()?;
            let f = sec.terminal.as_ref().map(|name| run.potential(name).and_then(|p| Ok(continuum_potential(p, space)?))).transpose()?;
            let wf = w.as_ref().map(|p| field(p, space));
            let ff = f.as_ref().map(|p| field(p, space));
            let wo = match &wf {
                Some(c) => Observable::Field(c),
                None => Observable::Constant(0.0),
            };
            let fo = match &ff {
                Some(c) => Observable::Field(c),
                None => Observable::Constant(1.0),
            };
            let e = fk_scalar(PathSource::Chart { space, step: h }, wo, fo, t, &Start::Point(x0.clone()), n, seed)?;
            // closed form only without potential on a complete space
            let oracle = match (&w, &f) {
                (None, None) if make_kernel(space)?.is_stochastically_complete() => Some(1.0),
                (None, Some(Potential::Constant { c })) if make_kernel(space)?.is_stochastically_complete() => Some(*c),
                _ => None,
            };
            run.art.json("fk.json", &json!({ "t": t, "start": x0.0, "step": h, "estimate": e, "oracle": oracle }))?;
            if let Some(o) = oracle {
                run.art.contract("fk_oracle", e.agrees_with(o, MC_SIGMAS, 1e-12), format!("estimate within {MC_SIGMAS} standard errors of {o}"));
            }
            if dump > 0 {
                let paths = (0..dump).map(|i| sample_path_chart(space, &x0, t, h, &mut path_rng(seed, i as u64))).collect::<Result<Vec<_>, _>>()?;
                let mut buf = Vec::new();
                write_paths_csv(&mut buf, &paths)?;
                run.art.csv_text("paths.csv", &String::from_utf8(buf).expect("ascii"))?;
            }
        }
    }
    Ok(())
}

/// Pointwise evaluation; failures become NaN and poison the estimate.
fn field<'a>(p: &'a Potential, space: &'a schrokato::geometry::ModelSpace) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
    move |y: &[f64]| p.eval(space, &Point(y.to_vec())).unwrap_or(f64::NAN)
}

pub fn spectrum(run: &mut Run) -> CliResult<()> {
    let sec = run.cfg.spectrum.clone().unwrap_or(crate::config::SpectrumSection { potential: None, count: None });
    match &run.source {
        Source::Space(s) => {
            run.art.json("spectrum.json", &json!({ "bottom": spectral_bottom_of(s), "method": "closed_form" }))?;
        }
        Source::Graph(g) => {
            let field = match &sec.potential {
                Some(name) => Some(scalar_field(&vertex_values(run.potential(name)?, &g.graph)?, g.bundle.rank())?),
                None => None,
            };
            let op = g.operator(field.as_ref())?;
            let bottom = spectrum_bottom(&op)?;
            let eigenvalues: Vec<f64> =
                if op.dim() <= EIGEN_LIMIT { op.eigen()?.values.iter().take(sec.count.unwrap_or(10)).copied().collect() } else { vec![bottom.value] };
            let rows: Vec<Vec<f64>> = eigenvalues.iter().enumerate().map(|(i, l)| vec![i as f64, *l]).collect();
            run.table("eigenvalues", &["index", "eigenvalue"], &rows)?;
            run.art
                .json("spectrum.json", &json!({ "bottom": bottom.value, "residual": bottom.residual, "method": bottom.method, "dim": op.dim() }))?;
            let tol = 1e-8 * bottom.value.abs().max(1.0);
            run.art.contract("eigen_residual", bottom.residual <= tol, format!("residual {:e}, tolerance {tol:e}", bottom.residual));
        }
    }
    Ok(())
}

fn retolerance(mut v: CheckVerdict, tol: Option<f64>) -> CheckVerdict {
    if let Some(t) = tol {
        v.tolerance = t;
        v.pass = v.max_violation <= t;
    }
    v
}

pub fn dominate(run: &mut Run) -> CliResult<()> {
    let sec = run.cfg.dominate.clone().ok_or_else(|| usage("`dominate` needs a [dominate] section"))?;
    let g = run.graph("dominate")?;
    let w = run.graph_values(g, sec.potential.as_ref())?;
    let rank = g.bundle.rank();
    let trials = sec.trials.unwrap_or(100);
    let seed = run.seed;
    // V = w·I + s·B², so V ≥ w by construction
    let scale = sec.random_potential_scale.unwrap_or(0.0);
    let mut rng = path_rng(seed, u64::MAX - 2);
    let mats: Vec<CMatrix> = w
        .iter()
        .map(|&x| {
            let b = random_hermitian(rank, 1.0, &mut rng);
            CMatrix::identity(rank, rank) * C64::new(x, 0.0) + &b * &b * C64::new(scale, 0.0)
        })
        .collect();
    let op_v = SchrodingerOperator::assemble(&g.graph, &g.bundle, Some(&PotentialField::from_matrices(mats)?), g.mask())?;
    let op_w = SchrodingerOperator::scalar(&g.graph, Some(&w), g.mask())?;

    let mut verdicts = Vec::new();
    for (k, &t) in sec.times.iter().enumerate() {
        let v = check_kato_simon(&op_v, &op_w, t, trials, seed.wrapping_add(k as u64))?;
        verdicts.push(json!({ "t": t, "verdict": retolerance(v, sec.tolerance) }));
    }
    let mut bottom = check_diamagnetic_bottom(&op_v, &op_w)?;
    bottom.verdict = retolerance(bottom.verdict, sec.tolerance);
    let mut hsu = check_hsu_direction(&op_v, &op_w, &sec.times, trials, seed)?;
    hsu.pointwise = retolerance(hsu.pointwise, sec.tolerance);
    hsu.bilinear = retolerance(hsu.bilinear, sec.tolerance);
    let mut positivity = Vec::new();
    for &t in &sec.times {
        match check_positivity(&op_w, t) {
            Ok(p) => positivity.push(json!({ "t": t, "report": p })),
            Err(Error::Disconnected { min_entry }) => positivity.push(json!({ "t": t, "skipped": "disconnected", "min_entry": min_entry })),
            Err(e) => return Err(e.into()),
        }
    }

    let mut checks: Vec<(String, bool, String)> = Vec::new();
    let violation = |v: f64| format!("max violation {v:e}");
    for (t, v) in sec.times.iter().zip(&verdicts) {
        let pass = v["verdict"]["pass"].as_bool().unwrap_or(false);
        checks.push((format!("kato_simon(t={t})"), pass, violation(v["verdict"]["max_violation"].as_f64().unwrap_or(f64::NAN))));
    }
    checks.push(("diamagnetic_bottom".into(), bottom.verdict.pass, format!("bottoms {} and {}", bottom.bottom_v, bottom.bottom_w)));
    checks.push(("hsu_pointwise".into(), hsu.pointwise.pass, violation(hsu.pointwise.max_violation)));
    checks.push(("hsu_bilinear".into(), hsu.bilinear.pass, violation(hsu.bilinear.max_violation)));
    for p in &positivity {
        if let Some(pass) = p["report"]["verdict"]["pass"].as_bool() {
            checks.push((format!("positivity(t={})", p["t"]), pass, format!("min entry {}", p["report"]["min_entry"])));
        }
    }
    run.art.json("dominate.json", &json!({ "kato_simon": verdicts, "bottom": bottom, "hsu": hsu, "positivity": positivity }))?;
    for (name, pass, detail) in checks {
        run.art.contract(name, pass, detail);
    }
    Ok(())
}

pub fn lattice(run: &mut Run) -> CliResult<()> {
    let sec = run.cfg.lattice.clone().unwrap_or(crate::config::LatticeSection { potential: None });
    let g = run.graph("lattice")?;
    let field = match &sec.potential {
        Some(name) => Some(scalar_field(&vertex_values(run.potential(name)?, &g.graph)?, g.bundle.rank())?),
        None => g.file_potential.clone(),
    };
    let op = g.operator(field.as_ref())?;
    let mut mtx = Vec::new();
    op.write_matrix_market(&mut mtx)?;
    let doc = LatticeDocument::from_parts(&g.graph, &g.bundle, field.as_ref());
    let doc: serde_json::Value = serde_json::from_str(&doc.to_json()?).map_err(|e| Error::Parse(e.to_string()))?;
    let defect = op.hermitian_defect();
    let bottom = spectrum_bottom(&op)?;
    let summary = json!({
        "n_vertices": g.graph.n_vertices(),
        "n_edges": g.graph.n_edges(),
        "rank": op.rank(),
        "kept_sites": op.n_sites(),
        "dim": op.dim(),
        "hermitian_defect": defect,
        "bottom": bottom.value,
        "bottom_method": bottom.method,
    });
    run.art.with_banner("operator.mtx", &String::from_utf8(mtx).expect("ascii"), "%")?;
    run.art.json("lattice.json", &doc)?;
    run.art.json("summary.json", &summary)?;
    run.art.contract("hermitian", defect <= 1e-12, format!("defect {defect:e}"));
    Ok(())
}
