use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use facecone::chordal::{chordal_fiber, clique_complex};
use facecone::cycle::{counterexample_det, counterexample_rho_range, counterexample_sigma, cycle_fiber, CycleMatrix};
use facecone::io::{self, Structure};
use facecone::latent::{build_digraph, simulate_y};
use facecone::membership::decide_membership;
use facecone::param::phi;
use facecone::quotient::{complex_quotient, graph_quotient, schur_witness_set};
use facecone::selftest::{run_selftest, select_suites, SelftestOptions, DEFAULT_INSTANCES};
use facecone::volume::{estimate_volume, format_table, volume_table};
use facecone::{Error, Graph, SimplicialComplex, VertexSet};

/// Face parametrizations of PSD cones with prescribed zeros.
///
/// Matrices, complexes, graphs and parameters are read and written as JSON
/// with 1-based vertices. Exit status is 0 on success or membership, 1 for
/// a non-member (or a failed self-test), 2 for errors and undecidable
/// inputs.
#[derive(Parser, Debug)]
#[command(name = "facecone", version)]
struct Cli {
    /// Relative numerical tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Random seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print JSON where a text report is the default.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ComplexParams {
    /// Complex (or graph, meaning its clique complex) JSON.
    #[arg(long)]
    complex: PathBuf,
    /// Parameter JSON; missing entries are zero.
    #[arg(long)]
    params: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate φ on parameters.
    Phi(ComplexParams),
    /// Solve for a preimage.
    Fiber {
        /// Use the constructive chordal solver.
        #[arg(long)]
        chordal: bool,
        #[arg(long)]
        matrix: PathBuf,
        /// Graph (or complex, meaning its underlying graph) JSON.
        #[arg(long)]
        graph: PathBuf,
    },
    /// Membership test for the edge complex of a cycle.
    CycleCheck {
        #[arg(long)]
        matrix: PathBuf,
        /// The cycle; defaults to 1-2-..-m-1.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// All fiber points of a positive definite cycle matrix, up to sign.
    CycleFiber {
        #[arg(long)]
        matrix: PathBuf,
        /// List every sign pattern instead of two representatives.
        #[arg(long)]
        expand: bool,
    },
    /// The PSD non-member Σ(ρ) on C_m.
    Counterexample {
        #[arg(long)]
        m: usize,
        /// Defaults to the midpoint of the non-member range.
        #[arg(long, allow_hyphen_values = true)]
        rho: Option<f64>,
    },
    /// Quotient of a complex or graph by a vertex set.
    Quotient {
        /// Complex or graph JSON.
        #[arg(long)]
        input: PathBuf,
        /// Vertices to eliminate, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        u: Vec<usize>,
    },
    /// Parameters on the quotient complex reproducing the Schur complement.
    SchurWitness {
        #[command(flatten)]
        input: ComplexParams,
        /// Vertices to eliminate, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        u: Vec<usize>,
    },
    /// Monte Carlo volume fraction of the image for C_m.
    Volume {
        #[arg(long, required_unless_present = "table")]
        m: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        workers: Option<usize>,
        /// Run m = 3..7 and print a table.
        #[arg(long)]
        table: bool,
    },
    /// DOT text of the latent-variable digraph.
    Digraph {
        #[arg(long)]
        complex: PathBuf,
    },
    /// Empirical covariance of the latent-variable model.
    Simulate {
        #[command(flatten)]
        input: ComplexParams,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
    },
    /// Exact membership test for chordal graphs and chordless cycles.
    Membership {
        #[arg(long)]
        matrix: PathBuf,
        /// Graph or complex JSON.
        #[arg(long)]
        structure: PathBuf,
    },
    /// Randomized consistency checks.
    Selftest {
        /// all, cycle, quotient, or a suite name.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = DEFAULT_INSTANCES)]
        instances: usize,
        #[arg(long, hide = true)]
        perturb: bool,
    },
}

struct Output {
    stdout: String,
    code: u8,
}

impl Output {
    fn json(value: &Value, code: u8) -> Self {
        Output {
            stdout: io::to_json_string(value) + "\n",
            code,
        }
    }

    fn text(stdout: String) -> Self {
        Output { stdout, code: 0 }
    }
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Io(PathBuf, std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Run<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> Run<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(path.to_owned(), e))
}

fn load_complex(path: &Path) -> Run<SimplicialComplex> {
    Ok(match io::parse_structure(&read(path)?)? {
        Structure::Complex(c) => c,
        Structure::Graph(g) => clique_complex(&g)?,
    })
}

fn load_graph(path: &Path) -> Run<Graph> {
    Ok(match io::parse_structure(&read(path)?)? {
        Structure::Graph(g) => g,
        Structure::Complex(c) => c.underlying_graph(),
    })
}

fn load_params(input: &ComplexParams) -> Run<facecone::FactorParams> {
    let complex = Arc::new(load_complex(&input.complex)?);
    Ok(io::parse_params(&read(&input.params)?, complex)?)
}

fn vertex_set(u: &[usize], m: usize) -> Run<VertexSet> {
    let mut out = VertexSet::EMPTY;
    for &v in u {
        if v == 0 || v > m {
            return Err(Error::InvalidInput(format!("vertex {v} is outside 1..={m}")).into());
        }
        out.insert(v - 1);
    }
    Ok(out)
}

fn one_based(vertices: &[usize]) -> Vec<usize> {
    vertices.iter().map(|v| v + 1).collect()
}

fn run(cli: &Cli) -> Run<Output> {
    let tol = cli.tol;
    match &cli.command {
        Command::Phi(input) => Ok(Output::json(&io::matrix_json(&phi(&load_params(input)?)), 0)),
        Command::Fiber { chordal, matrix, graph } => {
            if !chordal {
                return Err(Error::InvalidInput("only --chordal fibers are supported here; use cycle-fiber for cycles".into()).into());
            }
            let sigma = io::parse_matrix(&read(matrix)?)?;
            let (_, params) = chordal_fiber(&load_graph(graph)?, &sigma, tol)?;
            Ok(Output::json(&io::params_json(&params), 0))
        }
        Command::CycleCheck { matrix, graph } => {
            let sigma = io::parse_matrix(&read(matrix)?)?;
            let g = match graph {
                Some(p) => load_graph(p)?,
                None => Graph::cycle(sigma.dim())?,
            };
            let structure = Structure::Complex(SimplicialComplex::edge_complex(&g)?);
            let out = decide_membership(&sigma, &structure, tol)?;
            Ok(Output::json(&io::outcome_json(&out), if out.verdict.member { 0 } else { 1 }))
        }
        Command::CycleFiber { matrix, expand } => {
            let s = CycleMatrix::from_symmetric(&io::parse_matrix(&read(matrix)?)?)?;
            let fiber = cycle_fiber(&s, tol)?;
            let points = if *expand {
                fiber.expand_signs(tol)?
            } else {
                fiber.representatives.clone()
            };
            let list: Vec<Value> = points.iter().map(io::params_json).collect();
            Ok(Output::json(&Value::Array(list), 0))
        }
        Command::Counterexample { m, rho } => {
            let rho = match rho {
                Some(r) => *r,
                None => {
                    if *m < 3 {
                        return Err(Error::InvalidInput(format!("cycle length must be at least 3, got {m}")).into());
                    }
                    let (lo, hi) = counterexample_rho_range(*m);
                    0.5 * (lo + hi)
                }
            };
            let s = counterexample_sigma(*m, rho)?;
            log::info!("det Σ(ρ) = {:e}", counterexample_det(*m, rho));
            Ok(Output::json(&io::matrix_json(&s.to_symmetric()), 0))
        }
        Command::Quotient { input, u } => match io::parse_structure(&read(input)?)? {
            Structure::Complex(c) => {
                let q = complex_quotient(&c, vertex_set(u, c.ground_size())?)?;
                Ok(Output::json(&io::complex_json(&q.complex), 0))
            }
            Structure::Graph(g) => {
                let q = graph_quotient(&g, vertex_set(u, g.vertex_count())?)?;
                Ok(Output::json(&io::graph_json(&q.graph), 0))
            }
        },
        Command::SchurWitness { input, u } => {
            let params = load_params(input)?;
            let set = vertex_set(u, params.complex().ground_size())?;
            let w = schur_witness_set(&params, set, tol)?;
            Ok(Output::json(
                &json!({
                    "complex": io::complex_json(&w.quotient),
                    "vertices": one_based(&w.vertices),
                    "params": io::params_json(&w.params),
                }),
                0,
            ))
        }
        Command::Volume {
            m,
            samples,
            workers,
            table,
        } => {
            if *table {
                let rows = volume_table(*samples, cli.seed, *workers, tol)?;
                if cli.json {
                    return Ok(Output::json(&serde_json::to_value(&rows).expect("plain data"), 0));
                }
                return Ok(Output::text(format_table(&rows)));
            }
            let m = m.expect("required unless --table");
            let e = estimate_volume(m, *samples, cli.seed, *workers, tol)?;
            Ok(Output::json(&serde_json::to_value(&e).expect("plain data"), 0))
        }
        Command::Digraph { complex } => Ok(Output::text(build_digraph(&load_complex(complex)?).to_dot())),
        Command::Simulate { input, n } => {
            let cov = simulate_y(&load_params(input)?, *n, cli.seed)?;
            Ok(Output::json(&io::matrix_json(&cov), 0))
        }
        Command::Membership { matrix, structure } => {
            let sigma = io::parse_matrix(&read(matrix)?)?;
            let structure = io::parse_structure(&read(structure)?)?;
            let out = decide_membership(&sigma, &structure, tol)?;
            Ok(Output::json(&io::outcome_json(&out), if out.verdict.member { 0 } else { 1 }))
        }
        Command::Selftest {
            suite,
            instances,
            perturb,
        } => {
            let suites = select_suites(suite)?;
            let opts = SelftestOptions {
                instances: *instances,
                seed: cli.seed,
                tol,
                perturb: *perturb,
            };
            let reports = run_selftest(&suites, &opts);
            let code = if reports.iter().all(|r| r.passed()) { 0 } else { 1 };
            if cli.json {
                return Ok(Output::json(&serde_json::to_value(&reports).expect("plain data"), code));
            }
            let mut text = String::new();
            for r in &reports {
                text += &format!(
                    "{:<22} {}  {} instances, {} failures, max error {:.3e}\n",
                    r.suite,
                    if r.passed() { "PASS" } else { "FAIL" },
                    r.instances,
                    r.failures,
                    r.max_error
                );
                if let Some(f) = &r.first_failure {
                    text += &format!("  {f}\n");
                }
            }
            Ok(Output { stdout: text, code })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            ExitCode::from(out.code)
        }
        Err(failure) => {
            let report = match failure {
                Failure::Lib(e) => io::error_json(&e),
                Failure::Io(path, e) => json!({ "error": { "code": "Io", "message": format!("{}: {e}", path.display()) } }),
            };
            println!("{}", io::to_json_string(&report));
            ExitCode::from(2)
        }
    }
}
