//! Command-line front end: graph-spec ingestion, dispatch, deterministic
//! JSON/CSV emission.
//!
//! Exit codes: 0 success, 1 usage, 2 validation or precondition error,
//! 3 Dirichlet-guard refusal, 4 numerical failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::edge_spectral::{self, default_class_grid};
use crate::error::{Error, Result};
use crate::floquet::{self, fermi_csv};
use crate::graph_model::{self, builtin, ParsedGraph};
use crate::laurent::LaurentPoly;
use crate::numerics::{c64, Matrix2, Region};
use crate::potential::{Potential, PotentialKind};
use crate::reducibility;
use crate::riemann;

type C = Complex64;

#[derive(Parser, Debug)]
#[command(
    name = "qgraph",
    about = "Periodic quantum-graph spectral toolkit",
    disable_help_subcommand = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct LambdaArgs {
    /// Real part of the energy.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub re: f64,
    /// Imaginary part of the energy.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub im: f64,
}

impl LambdaArgs {
    fn value(&self) -> C {
        c64(self.re, self.im)
    }
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Integration slices per unit edge.
    #[arg(long, default_value_t = 1024)]
    pub slices: usize,
    /// Tolerance used by the command's verdicts.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Output file (reports are also printed to stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct GraphArgs {
    /// Graph-spec JSON file.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Builtin model: square_lattice | graphene_layer | graphene_bilayer | double_square_7.
    #[arg(long)]
    pub builtin: Option<String>,
}

impl GraphArgs {
    fn load(&self) -> Result<ParsedGraph> {
        match (&self.graph, &self.builtin) {
            (Some(path), None) => graph_model::parse_graph_file(path),
            (None, Some(name)) => builtin_graph(name),
            _ => Err(Error::Precondition(
                "provide exactly one of --graph or --builtin".into(),
            )),
        }
    }
}

/// Builtin models with default potentials.
pub fn builtin_graph(name: &str) -> Result<ParsedGraph> {
    match name {
        "square_lattice" => Ok(ParsedGraph::Graph(builtin::square_lattice(Potential::zero(1.0), 0.0))),
        "graphene_layer" => Ok(ParsedGraph::Graph(builtin::graphene_layer(
            Potential::zero(1.0),
            Potential::zero(1.0),
            Potential::zero(1.0),
            0.0,
            0.0,
        ))),
        "graphene_bilayer" => Ok(ParsedGraph::Bilayer(builtin::graphene_bilayer(
            Potential::zero(1.0),
            Potential::zero(1.0),
            Potential::zero(1.0),
            0.0,
            0.0,
            Potential::step(5.0, 0.5, 1.0),
            Potential::zero(1.0),
        ))),
        "double_square_7" => Ok(ParsedGraph::Bilayer(builtin::double_square_bilayer(
            Potential::zero(1.0),
            0.0,
            Potential::step(5.0, 0.5, 1.0),
            Potential::zero(1.0),
        ))),
        other => Err(Error::Precondition(format!("unknown builtin graph {other}"))),
    }
}

/// Inline potential syntax: zero | constant:<v> | step[:<h>[:<x0>]] |
/// trig:<c1,c2,..>[:<s1,s2,..>] | samples:<v1,v2,..> | @file.json.
pub fn parse_potential_arg(text: &str, length: f64) -> Result<Potential> {
    if let Some(path) = text.strip_prefix('@') {
        let body = std::fs::read_to_string(Path::new(path))?;
        let kind: PotentialKind = serde_json::from_str(&body)?;
        return Potential::new(kind, length);
    }
    let mut parts = text.split(':');
    let head = parts.next().unwrap_or_default();
    let nums = |s: &str| -> Result<Vec<f64>> {
        s.split(',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Precondition(format!("bad number {t} in potential spec")))
            })
            .collect()
    };
    match head {
        "zero" => Potential::new(PotentialKind::Zero, length),
        "constant" => {
            let v = parts
                .next()
                .ok_or_else(|| Error::Precondition("constant potential needs a value".into()))?
                .parse::<f64>()
                .map_err(|_| Error::Precondition("bad constant value".into()))?;
            Potential::new(PotentialKind::Constant { value: v }, length)
        }
        "step" => {
            let h = parts.next().map(str::parse).transpose().map_err(|_| {
                Error::Precondition("bad step height".into())
            })?.unwrap_or(5.0);
            let x0 = parts.next().map(str::parse).transpose().map_err(|_| {
                Error::Precondition("bad step breakpoint".into())
            })?.unwrap_or(0.5 * length);
            Potential::new(PotentialKind::Piecewise { breaks: vec![x0], values: vec![h, 0.0] }, length)
        }
        "trig" => {
            let cos = nums(parts.next().unwrap_or(""))?;
            let sin = nums(parts.next().unwrap_or(""))?;
            Potential::new(PotentialKind::Trig { cos, sin, period: None }, length)
        }
        "samples" => {
            let values = nums(parts.next().unwrap_or(""))?;
            Potential::new(PotentialKind::Samples { values }, length)
        }
        other => Err(Error::Precondition(format!("unknown potential spec {other}"))),
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Endpoint spectral data of one edge.
    Edge {
        #[arg(long)]
        potential: String,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[command(flatten)]
        lambda: LambdaArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Asymmetry and b functions of a potential.
    Afun {
        #[arg(long)]
        potential: String,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[command(flatten)]
        lambda: LambdaArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Same-asymmetry-class test for two potentials on the default grid.
    Classes {
        #[arg(long)]
        potential: String,
        #[arg(long = "potential-b")]
        potential_b: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Dispersion Laurent polynomial of a periodic graph.
    Dispersion {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        lambda: LambdaArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Same-class factorization of a bilayer dispersion polynomial.
    Factor {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        lambda: LambdaArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Composite-variable reduction for a bipartite 2-vertex bilayer.
    Graphene {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        lambda: LambdaArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Double-square reducibility discriminant.
    Square7 {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        lambda: LambdaArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// |D| samples over the Brillouin zone, CSV output.
    Fermi {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        lambda: LambdaArgs,
        /// Grid size n (n x n samples over [-pi, pi]^2).
        #[arg(long, default_value_t = 32)]
        grid: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Ramification points of a potential in a rectangle.
    Rami {
        #[arg(long)]
        potential: String,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[arg(long, default_value_t = -50.0, allow_hyphen_values = true)]
        re_min: f64,
        #[arg(long, default_value_t = 50.0, allow_hyphen_values = true)]
        re_max: f64,
        #[arg(long, default_value_t = -50.0, allow_hyphen_values = true)]
        im_min: f64,
        #[arg(long, default_value_t = 50.0, allow_hyphen_values = true)]
        im_max: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Decorated-layer equivalence residuals for a symmetric connector.
    Decorated {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        potential: String,
        #[command(flatten)]
        lambda: LambdaArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn cjson(z: C) -> serde_json::Value {
    json!({"re": z.re, "im": z.im})
}

fn poly_json(p: &LaurentPoly) -> serde_json::Value {
    serde_json::to_value(p.serial_terms()).expect("serializable")
}

fn matrix_json(m: &Matrix2) -> serde_json::Value {
    json!([[cjson(m.0[0][0]), cjson(m.0[0][1])], [cjson(m.0[1][0]), cjson(m.0[1][1])]])
}

#[derive(Serialize)]
struct Report {
    command: String,
    #[serde(flatten)]
    body: serde_json::Value,
}

/// Write text to `path` atomically (temp file + rename in the same dir).
fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into())
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn emit(common: &CommonArgs, text: &str) -> Result<()> {
    println!("{text}");
    if let Some(path) = &common.out {
        write_atomic(path, text)?;
    }
    Ok(())
}

fn run_command(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Edge { potential, length, lambda, common } => {
            let p = parse_potential_arg(&potential, length)?;
            let lam = lambda.value();
            let es = edge_spectral::endpoint_data(&p, lam, common.slices)?;
            let t = Matrix2([[es.c, es.s], [-es.c_prime, -es.s_prime]]);
            let wronskian = (es.c * es.s_prime - es.s * es.c_prime - 1.0).norm();
            let body = json!({
                "lambda": cjson(lam),
                "c": cjson(es.c),
                "s": cjson(es.s),
                "c_prime": cjson(es.c_prime),
                "s_prime": cjson(es.s_prime),
                "a": cjson(es.a),
                "b": cjson(es.b),
                "abs_s": es.s.norm(),
                "det_t_residual": (t.det() + 1.0).norm(),
                "wronskian_residual": wronskian,
            });
            emit(&common, &to_text("edge", body))
        }
        Command::Afun { potential, length, lambda, common } => {
            let p = parse_potential_arg(&potential, length)?;
            let lam = lambda.value();
            let es = edge_spectral::endpoint_data(&p, lam, common.slices)?;
            let body = json!({
                "lambda": cjson(lam),
                "a": cjson(es.a),
                "b": cjson(es.b),
            });
            emit(&common, &to_text("afun", body))
        }
        Command::Classes { potential, potential_b, common } => {
            let p1 = parse_potential_arg(&potential, 1.0)?;
            let p2 = parse_potential_arg(&potential_b, 1.0)?;
            let grid = default_class_grid();
            let dev = edge_spectral::class_deviation(&p1, &p2, &grid, common.slices)?;
            let body = json!({
                "same_class": dev <= common.tol,
                "max_deviation": dev,
                "tol": common.tol,
                "grid": grid.iter().map(|&z| cjson(z)).collect::<Vec<_>>(),
            });
            emit(&common, &to_text("classes", body))
        }
        Command::Dispersion { graph, lambda, common } => {
            let g = graph.load()?.as_graph()?;
            let lam = lambda.value();
            let fm = floquet::reduced_matrix(&g, lam, common.slices)?;
            let det = fm.matrix.det()?;
            let body = json!({
                "lambda": cjson(lam),
                "vertex_order": fm.vertex_order,
                "determinant": poly_json(&det),
            });
            emit(&common, &to_text("dispersion", body))
        }
        Command::Factor { graph, lambda, common } => {
            let spec = graph.load()?.as_bilayer()?;
            let lam = lambda.value();
            let report = reducibility::factor_same_class(&spec, lam, common.slices, common.tol)?;
            let body = json!({
                "lambda": cjson(lam),
                "mu": cjson(report.mu),
                "d_plus": poly_json(&report.d_plus),
                "d_minus": poly_json(&report.d_minus),
                "product_residual": report.product_residual,
                "components_distinct": report.components_distinct,
                "components_nonempty": [report.components_nonempty.0, report.components_nonempty.1],
            });
            emit(&common, &to_text("factor", body))
        }
        Command::Graphene { graph, lambda, common } => {
            let spec = graph.load()?.as_bilayer()?;
            let lam = lambda.value();
            let report = reducibility::graphene_reduction(&spec, lam, common.slices)?;
            let subspaces: Vec<Vec<Vec<serde_json::Value>>> = report
                .mode_subspaces
                .iter()
                .map(|basis| {
                    basis
                        .iter()
                        .map(|v| v.iter().map(|&z| cjson(z)).collect())
                        .collect()
                })
                .collect();
            let body = json!({
                "lambda": cjson(lam),
                "b1": matrix_json(&report.b1),
                "b2": matrix_json(&report.b2),
                "r": matrix_json(&report.r),
                "zeta_eigs": [cjson(report.zeta_eigs.0), cjson(report.zeta_eigs.1)],
                "quad_residual": report.quad_residual,
                "mode_subspaces": subspaces,
            });
            emit(&common, &to_text("graphene", body))
        }
        Command::Square7 { graph, lambda, common } => {
            let spec = graph.load()?.as_bilayer()?;
            let lam = lambda.value();
            let report = reducibility::square7_discriminant(&spec, lam, common.slices)?;
            let body = json!({
                "lambda": cjson(lam),
                "omega": {
                    "omega1_plus": cjson(report.omega[0]),
                    "omega1_minus": cjson(report.omega[1]),
                    "omega2_plus": cjson(report.omega[2]),
                    "omega2_minus": cjson(report.omega[3]),
                },
                "r_squared": cjson(report.r_squared),
                "discriminant_d2": cjson(report.discriminant_d2),
                "scale": report.scale,
                "reducible": report.reducible,
            });
            emit(&common, &to_text("square7", body))
        }
        Command::Fermi { graph, lambda, grid, common } => {
            if lambda.im != 0.0 {
                return Err(Error::Precondition("fermi slices need a real energy".into()));
            }
            let g = graph.load()?.as_graph()?;
            let rows = floquet::fermi_slice(&g, lambda.re, grid, grid, common.slices)?;
            let csv = fermi_csv(&rows);
            print!("{csv}");
            if let Some(path) = &common.out {
                write_atomic(path, &csv)?;
            }
            Ok(())
        }
        Command::Rami { potential, length, re_min, re_max, im_min, im_max, common } => {
            let p = parse_potential_arg(&potential, length)?;
            let region = Region::new(re_min, re_max, im_min, im_max);
            let points = riemann::branch_points(&p, &region, common.slices)?;
            let body = json!({
                "region": {"re_min": re_min, "re_max": re_max, "im_min": im_min, "im_max": im_max},
                "points": points.iter().map(|bp| json!({
                    "lambda0": cjson(bp.lambda0),
                    "sign": if bp.sign > 0 { "+i" } else { "-i" },
                    "newton_residual": bp.newton_residual,
                })).collect::<Vec<_>>(),
            });
            emit(&common, &to_text("rami", body))
        }
        Command::Decorated { graph, potential, lambda, common } => {
            let layer = match graph.load()? {
                ParsedGraph::Graph(g) => g,
                ParsedGraph::Bilayer(b) => b.layer,
            };
            let connector = parse_potential_arg(&potential, 1.0)?;
            let lam = lambda.value();
            let (rn, rd) = reducibility::decorated_equivalence(&layer, &connector, lam, common.slices)?;
            let body = json!({
                "lambda": cjson(lam),
                "neumann_residual": rn,
                "dirichlet_residual": rd,
            });
            emit(&common, &to_text("decorated", body))
        }
    }
}

fn to_text(command: &str, body: serde_json::Value) -> String {
    let report = Report { command: command.to_string(), body };
    serde_json::to_string_pretty(&report).expect("serializable report")
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // usage problems (unknown command, bad flags) -> exit 1
            let _ = err.print();
            return 1;
        }
    };
    match run_command(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
