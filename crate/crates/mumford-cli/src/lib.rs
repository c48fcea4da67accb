//! Batch front end for `mumford-core`.

pub mod input;
pub mod svg;

use std::io::Read;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mumford_core::arith::{fmt_q, parse_q, Int, Q};
use mumford_core::delaunay::{delaunay, voronoi_cell};
use mumford_core::lattice::IntMatrix;
use mumford_core::matroid::Graph;
use mumford_core::monodromy::{data_logs, graph_vanishing_forms, is_pd, is_psd, monodromy_forms, SymplecticLattice};
use mumford_core::mumford::{classify_singularities, dual_complex, is_k_trivial, stratification, MumfordData};
use mumford_core::resolve::{monomial_base_change, resolve, MonomialMap, ResolutionPlan};
use mumford_core::theta::{central_fiber_relations, central_fiber_relations_strict, fmt_class, parse_class, theta_expand};
use mumford_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_REFUSAL: i32 = 3;

/// Built-in example configurations, shared with the tests and the docs.
pub const EXAMPLES: [(&str, &str); 6] = [
    ("tate", include_str!("../../../data/examples/tate.json")),
    ("theta1", include_str!("../../../data/examples/theta1.json")),
    ("theta3", include_str!("../../../data/examples/theta3.json")),
    ("shifted-theta", include_str!("../../../data/examples/shifted-theta.json")),
    ("r10", include_str!("../../../data/examples/r10.json")),
    ("mon-sep", include_str!("../../../data/examples/mon-sep.json")),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Validation(String),
    Refusal(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "error: {m}"),
            CliError::Refusal(m) => write!(f, "refused: {m}"),
        }
    }
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Refusal(_) => EXIT_REFUSAL,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Validation(m) => CliError::Validation(m),
            Error::Refusal(m) => CliError::Refusal(m),
            Error::Window(_) => CliError::Refusal(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
    Svg,
}

#[derive(Debug, Parser)]
#[command(name = "mumford", version, about = "Exact combinatorics of Mumford degenerations")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Config file (JSON or TOML); `-` or absent reads stdin.
    #[arg(long, short, global = true)]
    pub input: Option<PathBuf>,
    /// Inline JSON or TOML config.
    #[arg(long, global = true)]
    pub data: Option<String>,
    #[arg(long, value_enum, default_value = "json", global = true)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Data summary, singularity report, K-triviality and dual complex.
    Describe,
    /// Fiber components over the stratum `u_i = 0` for `i ∈ I` (1-based).
    Strata {
        #[arg(long = "I", value_delimiter = ',', required = true)]
        i: Vec<usize>,
    },
    /// Theta function expansion.
    Theta {
        /// `a/w` or `(a1,a2)/w`.
        #[arg(long)]
        class: String,
        /// Defaults to the denominator of the class.
        #[arg(long)]
        weight: Option<String>,
        #[arg(long, default_value = "6")]
        trunc: String,
    },
    /// Relations among products of theta functions modulo `u`.
    Relations {
        #[arg(long)]
        weight: String,
        #[arg(long)]
        degree: usize,
        /// Refuse when faces of the dicing meet their own translates.
        #[arg(long)]
        strict: bool,
    },
    /// Delaunay decomposition of a positive-definite form.
    Delaunay {
        #[arg(long)]
        form: Option<String>,
    },
    /// Voronoi cell of a positive-definite form.
    VoronoiCell {
        #[arg(long)]
        form: Option<String>,
    },
    /// Pull the data back along `u_i = Π w_j^{r_ij}`.
    Basechange {
        #[arg(long)]
        matrix: Option<String>,
    },
    /// Base change followed by the two resolution stages.
    Resolve {
        #[arg(long)]
        matrix: Option<String>,
        #[arg(long = "N")]
        n: Option<String>,
        /// New divisors in increasing order, 1-based.
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<usize>>,
        /// Old divisors whose branch order is reversed, 1-based.
        #[arg(long, value_delimiter = ',')]
        flip: Option<Vec<usize>>,
    },
    /// Monodromy weight filtration and forms.
    Weights,
    /// Print a built-in example config.
    Example { name: String },
    /// SVG of the bending complexes (g = 1 or 2).
    Svg {
        #[arg(long = "I", value_delimiter = ',')]
        i: Option<Vec<usize>>,
    },
}

/// Result of one invocation: exit status and the two streams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run(config: &RunConfig, stdin: &mut dyn Read) -> Outcome {
    match dispatch(config, stdin) {
        Ok(stdout) => Outcome { code: EXIT_OK, stdout, stderr: String::new() },
        Err(e) => Outcome { code: e.code(), stdout: String::new(), stderr: format!("{e}\n") },
    }
}

/// Parse arguments (without the program name) and run.
pub fn run_args<I, S>(args: I, stdin: &mut dyn Read) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let mut full: Vec<std::ffi::OsString> = vec!["mumford".into()];
    full.extend(args.into_iter().map(Into::into));
    match RunConfig::try_parse_from(full) {
        Ok(c) => run(&c, stdin),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            }
        }
    }
}

pub fn example(name: &str) -> Option<&'static str> {
    EXAMPLES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

fn check_window_env() -> CliResult<()> {
    if let Ok(s) = std::env::var("MUMFORD_WINDOW_SCALE") {
        match parse_q(&s) {
            Ok(q) if q > Q::from_integer(Int::from(0)) => {}
            _ => return Err(CliError::Validation(format!("MUMFORD_WINDOW_SCALE must be a positive rational, got {s:?}"))),
        }
    }
    Ok(())
}

fn arg_q(name: &str, s: &str) -> CliResult<Q> {
    parse_q(s).map_err(|_| CliError::Validation(format!("--{name}: not a rational number: {s:?}")))
}

fn arg_int(name: &str, s: &str) -> CliResult<Int> {
    s.trim().parse().map_err(|_| CliError::Validation(format!("--{name}: not an integer: {s:?}")))
}

fn arg_matrix(name: &str, s: &str) -> CliResult<IntMatrix> {
    let v = input::parse_text(s, &format!("--{name}"), None)?;
    Ok(IntMatrix::from_json(&v)?)
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap();
    s.push('\n');
    s
}

fn lines(v: &[String]) -> String {
    let mut s = v.join("\n");
    s.push('\n');
    s
}

fn one_based(idx: &[usize], k: usize, what: &str) -> CliResult<Vec<usize>> {
    idx.iter()
        .map(|&i| {
            if i == 0 || i > k {
                Err(CliError::Validation(format!("{what} index {i} out of range 1..{k}")))
            } else {
                Ok(i - 1)
            }
        })
        .collect()
}

fn form_input(form: Option<&str>, cfg: &RunConfig, stdin: &mut dyn Read) -> CliResult<IntMatrix> {
    if let Some(f) = form {
        return arg_matrix("form", f);
    }
    let v = input::load(cfg.data.as_deref(), cfg.input.as_deref(), stdin)?;
    if let Some(b) = v.get("form").or_else(|| v.get("B")) {
        return Ok(IntMatrix::from_json(b)?);
    }
    let data = MumfordData::from_json(&v)?;
    let t = data.total_form();
    if t.iter().flatten().any(|x| !x.is_integer()) {
        return Err(CliError::Validation("the total quadratic form of the data is not integral".into()));
    }
    Ok(IntMatrix::from_rows_with_cols(t.iter().map(|r| r.iter().map(Q::to_integer).collect()).collect(), data.g))
}

fn shape_name(dim: usize, n: usize) -> String {
    match (dim, n) {
        (2, 3) => "triangle".into(),
        (2, 4) => "quadrilateral".into(),
        (2, 6) => "hexagon".into(),
        (1, 2) => "segment".into(),
        (d, n) => format!("{d}-polytope with {n} vertices"),
    }
}

fn dispatch(cfg: &RunConfig, stdin: &mut dyn Read) -> CliResult<String> {
    check_window_env()?;
    let text = cfg.format == Format::Text;
    match &cfg.command {
        Command::Example { name } => {
            let Some(t) = example(name) else {
                let names: Vec<&str> = EXAMPLES.iter().map(|(n, _)| *n).collect();
                return Err(CliError::Validation(format!("unknown example {name:?}; known: {}", names.join(", "))));
            };
            let v = input::parse_text(t, name, None)?;
            MumfordData::from_json(&v)?;
            Ok(pretty(&v))
        }
        Command::Delaunay { form } => {
            let b = form_input(form.as_deref(), cfg, stdin)?;
            let d = delaunay(&b)?;
            if text {
                let parts: Vec<String> = d.census.iter().map(|(k, v)| format!("{v} cells of dim {k}")).collect();
                Ok(lines(&[parts.join(", ")]))
            } else {
                Ok(pretty(&d.to_json()))
            }
        }
        Command::VoronoiCell { form } => {
            let b = form_input(form.as_deref(), cfg, stdin)?;
            let p = voronoi_cell(&b)?;
            let shape = shape_name(p.dim, p.vertices.len());
            if text {
                return Ok(lines(&[shape]));
            }
            Ok(pretty(&json!({
                "form": b.to_json(),
                "shape": shape,
                "vertices": p.vertices.iter().map(|v| v.iter().map(fmt_q).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "facets": p.facets.len(),
            })))
        }
        Command::Weights => {
            let v = input::load(cfg.data.as_deref(), cfg.input.as_deref(), stdin)?;
            weights(&v, text)
        }
        _ => {
            let v = input::load(cfg.data.as_deref(), cfg.input.as_deref(), stdin)?;
            let data = MumfordData::from_json(&v)?;
            with_data(cfg, &v, &data, text)
        }
    }
}

fn weights(v: &Value, text: bool) -> CliResult<String> {
    if let Some(g) = v.get("graph") {
        let graph = Graph::from_json(g)?;
        let forest = match v.get("forest").and_then(Value::as_array) {
            Some(f) => f.iter().map(|x| x.as_u64().map(|x| x as usize)).collect::<Option<Vec<_>>>().ok_or_else(|| {
                CliError::Validation("forest must be a list of edge indices".into())
            })?,
            None => graph.bfs_forest(),
        };
        let forms = graph_vanishing_forms(&graph, &forest)?;
        let mut sum = IntMatrix::zeros(graph.genus(), graph.genus());
        for f in &forms {
            sum = sum.add(f);
        }
        let out = json!({
            "genus": graph.genus(),
            "forest": forest,
            "forms": forms.iter().map(IntMatrix::to_json).collect::<Vec<_>>(),
            "semidefinite": forms.iter().map(is_psd).collect::<Vec<_>>(),
            "sum_positive_definite": is_pd(&sum),
        });
        return Ok(if text { lines(&[format!("gr0 rank {}", graph.genus())]) } else { pretty(&out) });
    }
    if let Some(ns) = v.get("monodromy").and_then(Value::as_array) {
        let ns: Vec<IntMatrix> = ns.iter().map(IntMatrix::from_json).collect::<mumford_core::Result<_>>()?;
        let Some(n) = ns.first().map(IntMatrix::nrows) else {
            return Err(CliError::Validation("no monodromy operators given".into()));
        };
        let lat = match v.get("symplectic") {
            Some(l) => SymplecticLattice::new(IntMatrix::from_json(l)?)?,
            None if n % 2 == 0 => SymplecticLattice::standard(n / 2),
            None => return Err(CliError::Validation("operators act on an odd-rank lattice".into())),
        };
        let f = monodromy_forms(&ns, &lat)?;
        return Ok(if text {
            lines(&[format!("gr0 rank {}, in rational closure: {}", f.basis.len(), f.in_rational_closure())])
        } else {
            pretty(&f.to_json())
        });
    }
    let data = MumfordData::from_json(v)?;
    let logs = data_logs(&data)?;
    let f = monodromy_forms(&logs, &SymplecticLattice::standard(data.g))?;
    let dc = dual_complex(&data)?;
    let gr0 = f.basis.len();
    if text {
        return Ok(lines(&[format!("gr0 rank {gr0}, dual complex H1 rank {}", dc.h1_rank)]));
    }
    let mut out = f.to_json();
    out["dual_complex_h1_rank"] = json!(dc.h1_rank);
    out["consistent"] = json!(dc.h1_rank == gr0);
    Ok(pretty(&out))
}

fn with_data(cfg: &RunConfig, v: &Value, data: &MumfordData, text: bool) -> CliResult<String> {
    match &cfg.command {
        Command::Describe => {
            if cfg.format == Format::Svg {
                return Ok(svg::emit_svg(data, &[])?);
            }
            let rep = classify_singularities(data)?;
            let kt = is_k_trivial(data)?;
            let dc = dual_complex(data).ok();
            if text {
                let mut l = vec![
                    format!("{}: g = {}, k = {}, d = {}", data.name, data.g, data.k, data.d),
                    format!(
                        "total space: {}, central fibers: {}{}",
                        if rep.smooth { "smooth" } else { "singular" },
                        rep.overall.name(),
                        if rep.strict { ", strict" } else { "" }
                    ),
                    format!("K-trivial: {kt}"),
                ];
                if let Some(dc) = &dc {
                    l.push(format!("dual complex cells {:?}, H1 rank {}", dc.cells, dc.h1_rank));
                }
                return Ok(lines(&l));
            }
            let total: Vec<Vec<String>> = data.total_form().iter().map(|r| r.iter().map(fmt_q).collect()).collect();
            Ok(pretty(&json!({
                "data": data.to_json(),
                "total_form": total,
                "singularities": rep.to_json(),
                "k_trivial": kt,
                "dual_complex": dc.map(|d| d.to_json()),
            })))
        }
        Command::Strata { i } => {
            let idx = one_based(i, data.k, "stratum")?;
            if cfg.format == Format::Svg {
                return Ok(svg::emit_svg(data, &idx)?);
            }
            let s = stratification(data, &idx)?;
            if text {
                return Ok(lines(&[s.summary()]));
            }
            let mut out = s.to_json();
            out["summary"] = json!(s.summary());
            Ok(pretty(&out))
        }
        Command::Svg { i } => {
            let idx = match i {
                Some(i) => one_based(i, data.k, "section")?,
                None => Vec::new(),
            };
            Ok(svg::emit_svg(data, &idx)?)
        }
        Command::Theta { class, weight, trunc } => {
            let w = match weight {
                Some(w) => arg_int("weight", w)?,
                None => match class.rsplit_once('/') {
                    Some((_, d)) => arg_int("class", d)?,
                    None => Int::from(1),
                },
            };
            let c = parse_class(class, data.g, &w)?;
            let t = arg_q("trunc", trunc)?;
            let s = theta_expand(data, &c, &w, &t)?;
            if text {
                let mut l = vec![format!("Theta_{} up to u-degree {}", fmt_class(&s.class, &w), fmt_q(&t))];
                l.extend(s.lines());
                return Ok(lines(&l));
            }
            Ok(pretty(&s.to_json()))
        }
        Command::Relations { weight, degree, strict } => {
            let w = arg_int("weight", weight)?;
            let r = if *strict {
                central_fiber_relations_strict(data, &w, *degree)?
            } else {
                central_fiber_relations(data, &w, *degree)?
            };
            if text {
                let mut l = r.relation_strings();
                if l.is_empty() {
                    l.push("no relations".into());
                }
                return Ok(lines(&l));
            }
            Ok(pretty(&r.to_json()))
        }
        Command::Basechange { matrix } => {
            let r = map_from(matrix.as_deref(), v)?;
            let bc = monomial_base_change(data, &r)?;
            let rep = classify_singularities(&bc)?;
            if text {
                return Ok(lines(&[format!("{}: {}", bc.name, rep.overall.name())]));
            }
            let mut out = v.clone();
            out["matrix"] = r.r.to_json();
            out["base_changed"] = json!({"data": bc.to_json(), "singularities": rep.to_json()});
            Ok(pretty(&out))
        }
        Command::Resolve { matrix, n, order, flip } => {
            let r = map_from(matrix.as_deref(), v)?;
            let mut plan = ResolutionPlan::default_for(&r);
            match (n, v.get("N")) {
                (Some(n), _) => plan = plan.with_separation(arg_int("N", n)?),
                (None, Some(n)) => plan = plan.with_separation(mumford_core::lattice::matrix::int_from_json(n)?),
                _ => {}
            }
            if let Some(o) = order {
                plan = plan.with_order(one_based(o, r.n(), "divisor")?);
            }
            if let Some(f) = flip {
                for i in one_based(f, r.k(), "old divisor")? {
                    plan.flip[i] = true;
                }
            }
            let rep = resolve(data, &r, &plan)?;
            if text {
                return Ok(lines(&[
                    format!("base change: {}", rep.base_changed_report.overall.name()),
                    format!("stage 1: {} (scale {}, routes agree: {})", rep.stage1.name(), rep.scale, rep.routes_agree),
                    format!("stage 2: {} (standard affine: {})", rep.stage2.name(), rep.standard),
                    format!("dual complex cells {:?}, H1 rank {}", rep.partial_dual.cells, rep.partial_dual.h1_rank),
                ]));
            }
            Ok(pretty(&rep.to_json()))
        }
        Command::Example { .. } | Command::Delaunay { .. } | Command::VoronoiCell { .. } | Command::Weights => {
            unreachable!("handled before loading data")
        }
    }
}

fn map_from(matrix: Option<&str>, v: &Value) -> CliResult<MonomialMap> {
    let m = match (matrix, v.get("matrix")) {
        (Some(s), _) => arg_matrix("matrix", s)?,
        (None, Some(m)) => IntMatrix::from_json(m)?,
        (None, None) => return Err(CliError::Validation("no exponent matrix: pass --matrix".into())),
    };
    Ok(MonomialMap::new(m)?)
}
