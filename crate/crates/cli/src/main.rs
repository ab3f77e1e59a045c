//! `ptrans`: command-line front end for planar-transport.

mod report;
mod scenarios;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;

use planar_transport::calculus::sd_residual_potential;
use planar_transport::document::{parse_series, parse_word_list, series_to_document};
use planar_transport::fock;
use planar_transport::graph::Parity;
use planar_transport::temperley_lieb::{self, pairing_moment, v0};
use planar_transport::transport::{
    inverse_iteration, perturbed_trace_by_vertex, solve_transport, TransportConfig,
};
use planar_transport::{BipartiteGraph, PerronData, WordSeries};

use report::{Criterion, Failure, Report};
use scenarios::ScenarioOptions;

const QUARTIC: &str = include_str!("../../../data/series/quartic_e1.json");

#[derive(Parser)]
#[command(name = "ptrans", version, about = "Loop-algebra traces, calculus and free transport on bipartite graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Graph file, or a builtin name A2..A9
    #[arg(long)]
    graph: String,
    /// Write the JSON report here and print a summary instead
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum Scenario {
    OracleMatch,
    SdV0,
    #[value(alias = "transport")]
    TransportSmallT,
    InverseIteration,
    Tower,
}

#[derive(Subcommand)]
enum Command {
    /// Perron data of a graph
    GraphInfo {
        #[command(flatten)]
        common: Common,
    },
    /// Run a named acceptance scenario
    Verify {
        scenario: Scenario,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.01)]
        t: f64,
        #[arg(long = "deg", default_value_t = 8)]
        degree: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 8)]
        max_degree: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Perturbation series (default: the bundled quartic e1 e1~ e1 e1~)
        #[arg(long)]
        w: Option<PathBuf>,
    },
    /// Solve for the transport element of v0 + t·w
    Transport {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        w: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long = "deg", default_value_t = 8)]
        degree: usize,
    },
    /// Inverse iteration for x under the transport of v0 + t·w
    Invert {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        w: PathBuf,
        #[arg(long)]
        x: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long = "deg", default_value_t = 8)]
        degree: usize,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Vertex-resolved trace of a graded series, optionally perturbed by v0 + t·w
    Trace {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        w: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long = "deg", default_value_t = 8)]
        degree: usize,
    },
    /// Pairing-sum and vacuum moments of one word
    Moment {
        #[command(flatten)]
        common: Common,
        /// Comma-separated edge names
        #[arg(long)]
        word: String,
    },
    /// φ_k of a graded series
    Phik {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        series: PathBuf,
    },
    /// Schwinger-Dyson defect of the vacuum state for a potential
    SdCheck {
        #[command(flatten)]
        common: Common,
        /// Series file, or `v0`
        #[arg(long)]
        potential: String,
        #[arg(long, default_value_t = 4)]
        max_degree: usize,
    },
}

fn load_graph(name: &str) -> Result<BipartiteGraph, Failure> {
    let path = Path::new(name);
    if path.exists() {
        return Ok(BipartiteGraph::from_json(&std::fs::read_to_string(path)?)?);
    }
    let builtin = name
        .strip_prefix('A')
        .or_else(|| name.strip_prefix('a'))
        .and_then(|n| n.parse::<usize>().ok())
        .filter(|n| (2..=9).contains(n));
    match builtin {
        Some(n) => Ok(BipartiteGraph::a_n(n)),
        None => Err(Failure::Input(format!("no graph file or builtin named `{name}`"))),
    }
}

fn load_series(path: &Path, graph: &BipartiteGraph) -> Result<WordSeries, Failure> {
    Ok(parse_series(&std::fs::read_to_string(path)?, graph)?)
}

fn complex(z: Complex64) -> serde_json::Value {
    json!({ "re": z.re, "im": z.im })
}

fn emit(report: &Report, out: Option<&Path>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(report)?;
    match out {
        Some(p) => {
            std::fs::write(p, text + "\n")?;
            print!("{}", report.summary());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Report, Failure> {
    match cli.command {
        Command::GraphInfo { common } => {
            let g = load_graph(&common.graph)?;
            let pd = PerronData::new(&g)?;
            let mut r = Report::new("graph-info", &g, json!({ "graph": common.graph }), "Perron-Frobenius data");
            let max_lambda = pd.lambda.iter().fold(0.0f64, |m, &x| m.max(x));
            // at a leaf the eigen-equation forces λ = δ exactly
            let inner_lambda = (0..g.num_edges())
                .filter(|&e| g.out_edges(g.source(e)).len() > 1)
                .map(|e| pd.lambda(e))
                .fold(0.0f64, f64::max);
            let sigma: Vec<_> = (0..g.num_edges())
                .map(|e| json!({ "edge": g.edge(e).name, "sigma": pd.sigma(e), "lambda": pd.lambda(e) }))
                .collect();
            r.results = json!({
                "delta": pd.delta,
                "mu": pd.mu,
                "sigma": sigma,
                "edges": g.num_edges(),
                "vertices_plus": g.count_parity(Parity::Plus),
                "vertices_minus": g.count_parity(Parity::Minus),
                "eigen_residual": pd.residual,
                "iterations": pd.iterations,
            });
            r.criteria.push(Criterion::at_most("max lambda at most delta", max_lambda, pd.delta * (1.0 + 1e-12)));
            r.criteria.push(Criterion::below("lambda below delta off leaves", inner_lambda, pd.delta));
            r.criteria.push(Criterion::at_most("eigenvector residual", pd.residual, 1e-12 * pd.delta));
            emit(&r, common.report.as_deref())?;
            Ok(r)
        }
        Command::Verify { scenario, common, t, degree, samples, max_degree, seed, w } => {
            let g = load_graph(&common.graph)?;
            let pd = PerronData::new(&g)?;
            let w_series = match &w {
                Some(p) => load_series(p, &g)?,
                None => parse_series(QUARTIC, &g)?,
            };
            if !(t.is_finite() && t >= 0.0) {
                return Err(Failure::Input(format!("t must be a non-negative number, got {t}")));
            }
            let opts = ScenarioOptions { t, degree, samples, max_degree, seed, w: w_series };
            let config = json!({
                "graph": common.graph, "t": t, "degree": degree, "samples": samples,
                "max_degree": max_degree, "seed": seed, "w": w.as_ref().map(|p| p.display().to_string()),
            });
            let (name, anchor) = match scenario {
                Scenario::OracleMatch => ("verify oracle-match", "pairing-sum trace equals vacuum state"),
                Scenario::SdV0 => ("verify sd-v0", "Schwinger-Dyson equation for v0"),
                Scenario::TransportSmallT => ("verify transport-small-t", "transport fixed point"),
                Scenario::InverseIteration => ("verify inverse-iteration", "inverse of the transport map"),
                Scenario::Tower => ("verify tower", "tower inclusions and multiplicativity"),
            };
            let mut r = Report::new(name, &g, config, anchor);
            match scenario {
                Scenario::OracleMatch => scenarios::oracle_match(&pd, &opts, &mut r)?,
                Scenario::SdV0 => scenarios::sd_v0(&pd, &opts, &mut r)?,
                Scenario::TransportSmallT => scenarios::transport_small_t(&pd, &opts, &mut r)?,
                Scenario::InverseIteration => scenarios::inverse(&pd, &opts, &mut r)?,
                Scenario::Tower => scenarios::tower(&pd, &opts, &mut r)?,
            }
            emit(&r, common.report.as_deref())?;
            Ok(r)
        }
        Command::Transport { common, w, t, degree } => {
            let g = load_graph(&common.graph)?;
            let pd = PerronData::new(&g)?;
            let ws = load_series(&w, &g)?.scale(Complex64::new(t, 0.0));
            let cfg = TransportConfig::defaults(&pd).with_degree(degree);
            let mut r = Report::new(
                "transport",
                &g,
                json!({ "graph": common.graph, "w": w.display().to_string(), "t": t, "solver": cfg }),
                "transport element",
            );
            let res = solve_transport(&ws, &cfg, &pd)?;
            r.results = json!({
                "g": series_to_document(&res.g, &g),
                "g_hat": series_to_document(&res.g_hat, &g),
                "iterations": res.iterations,
                "delta_history": res.delta_history,
                "sd_residual": res.sd_residual,
                "norm_g": res.norm_g,
                "norm_w": res.norm_w,
                "xi": res.xi,
                "xi_scalar": res.xi_scalar,
                "m_tail_bound": res.m_tail_bound,
                "excursions": res.excursions,
                "adjoint_defect": res.adjoint_defect,
            });
            emit(&r, common.report.as_deref())?;
            Ok(r)
        }
        Command::Invert { common, w, x, t, degree, steps, tol } => {
            let g = load_graph(&common.graph)?;
            let pd = PerronData::new(&g)?;
            let ws = load_series(&w, &g)?.scale(Complex64::new(t, 0.0));
            let xs = load_series(&x, &g)?;
            let cfg = TransportConfig::defaults(&pd).with_degree(degree);
            let mut r = Report::new(
                "invert",
                &g,
                json!({ "graph": common.graph, "w": w.display().to_string(), "x": x.display().to_string(),
                        "t": t, "steps": steps, "tol": tol, "solver": cfg }),
                "inverse of the transport map",
            );
            let sol = solve_transport(&ws, &cfg, &pd)?;
            let (iterates, rep) = inverse_iteration(&sol.g, &xs, &cfg, &pd, tol, steps)?;
            r.results = json!({
                "distances": rep.distances,
                "converged": rep.converged,
                "gradient_norm": rep.gradient_norm,
                "preimage": series_to_document(iterates.last().unwrap(), &g),
            });
            r.criteria.push(Criterion::flag("converged", rep.converged));
            emit(&r, common.report.as_deref())?;
            Ok(r)
        }
        Command::Trace { common, series, w, t, degree } => {
            let g = load_graph(&common.graph)?;
            let pd = PerronData::new(&g)?;
            let x = load_series(&series, &g)?;
            let mut r = Report::new(
                "trace",
                &g,
                json!({ "graph": common.graph, "series": series.display().to_string(),
                        "w": w.as_ref().map(|p| p.display().to_string()), "t": t, "degree": degree }),
                "pairing-sum trace",
            );
            let by_vertex = match &w {
                None => temperley_lieb::trace_k(&x, &pd)?,
                Some(p) => {
                    if x.k != 0 {
                        return Err(Failure::Input("perturbed traces need a grading-0 series".into()));
                    }
                    let ws = load_series(p, &g)?.scale(Complex64::new(t, 0.0));
                    let cfg = TransportConfig::defaults(&pd).with_degree(degree);
                    let sol = solve_transport(&ws, &cfg, &pd)?;
                    r.anchor = "perturbed trace".into();
                    perturbed_trace_by_vertex(&x, &sol.g, &cfg, &pd)?
                }
            };
            let total: Complex64 = by_vertex.values().sum();
            let vertices: serde_json::Map<String, serde_json::Value> =
                by_vertex.iter().map(|(&v, &z)| (g.vertex(v).name.clone(), complex(z))).collect();
            r.results = json!({ "k": x.k, "total": complex(total), "by_vertex": vertices });
            emit(&r, common.report.as_deref())?;
            Ok(r)
        }
        Command::Moment { common, word } => {
            let g = load_graph(&common.graph)?;
            let pd = PerronData::new(&g)?;
            let edges = parse_word_list(&g, &word)?;
            let a = pairing_moment(&edges, &pd);
            let b = fock::vacuum_moment(&edges, &pd)?;
            let mut r = Report::new("moment", &g, json!({ "graph": common.graph, "word": word }), "pairing-sum trace equals vacuum state");
            r.results = json!({ "pairing": a, "vacuum": complex(b), "deviation": (b - a).norm() });
            r.criteria.push(Criterion::at_most("oracles agree", (b - a).norm(), 1e-10));
            emit(&r, common.report.as_deref())?;
            Ok(r)
        }
        Command::Phik { common, series } => {
            let g = load_graph(&common.graph)?;
            let pd = PerronData::new(&g)?;
            let x = load_series(&series, &g)?;
            let v = fock::phi_k(&x, &pd)?;
            let mut r = Report::new("phik", &g, json!({ "graph": common.graph, "series": series.display().to_string() }), "graded state");
            r.results = json!({ "k": x.k, "phi_k": complex(v) });
            emit(&r, common.report.as_deref())?;
            Ok(r)
        }
        Command::SdCheck { common, potential, max_degree } => {
            let g = load_graph(&common.graph)?;
            let pd = PerronData::new(&g)?;
            let v = if potential == "v0" { v0(&pd) } else { load_series(Path::new(&potential), &g)? };
            let rep = sd_residual_potential(&v, max_degree, &pd);
            let mut r = Report::new(
                "sd-check",
                &g,
                json!({ "graph": common.graph, "potential": potential, "max_degree": max_degree }),
                "Schwinger-Dyson equation for the vacuum state",
            );
            r.results = json!({
                "residual": rep.residual,
                "checked": rep.checked,
                "worst_edge": rep.worst_edge.map(|e| g.edge(e).name.clone()),
                "worst_word": rep.worst_word.iter().map(|&e| g.edge(e).name.clone()).collect::<Vec<_>>(),
            });
            emit(&r, common.report.as_deref())?;
            Ok(r)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(r) if r.passed() => ExitCode::SUCCESS,
        Ok(r) => {
            let failed = r.criteria.iter().filter(|c| !c.pass).count();
            eprintln!("ptrans: {failed} criterion check(s) failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("ptrans: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
