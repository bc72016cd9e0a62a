//! `dhm`: Duistermaat–Heckman measures, marginal eigenvalue laws and their discrete
//! counterparts from the command line.
//!
//! Exit status: 0 on success, 1 when `verify` exceeds its threshold, 2 on unreadable or
//! malformed input, 3 on engine errors and output failures, 4 on scale guards.

mod export;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dhmeasure::error::{DhError, DhResult};
use dhmeasure::exact::{fmt_q, parse_q, Q};
use dhmeasure::mc_oracle::{exact_cdf, ks_distance, ks_statistic, sample, sample_exact, Statistic};
use dhmeasure::measure_engine::{cone_density, projective_density_via_cone, single_summand_density, PiecewiseMeasure};
use dhmeasure::multiplicity::{character_oracle, kronecker, multiplicity_measure, YoungDiagram};
use dhmeasure::polyring::Polynomial;
use dhmeasure::qmarginal::{
    abelian_measure, average_functional, average_numeric, eigenvalue_distribution, entropy_fn, moment_polytope,
    nonabelian_measure, purity_polynomial, MarginalProblem, ProblemSpec, ReportFrame,
};
use dhmeasure::rootdata::{Frame, RationalVector};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "dhm",
    version,
    about = "Exact Duistermaat–Heckman measures and quantum marginal eigenvalue distributions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Abelian (torus) measure of a weight system, a cone, or a marginal problem.
    Density {
        /// Weights as `a,b;c,d;…`; rationals are written `p/q`.
        #[arg(long, conflicts_with_all = ["input", "spec", "kind"])]
        weights: Option<String>,
        /// Treat `--weights` as cone generators instead of weights of a projective space.
        #[arg(long, requires = "weights")]
        cone: bool,
        /// Re-export a measure previously written as JSON.
        #[arg(long, conflicts_with_all = ["spec", "kind"])]
        input: Option<PathBuf>,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Marginal eigenvalue distribution, or the non-Abelian measure with `--nonabelian`.
    Marginal {
        #[arg(long)]
        nonabelian: bool,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Vertices and facet inequalities of the moment polytope.
    Polytope {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Exact average of the purity or a spectra coordinate, or a quadrature of the entropy.
    Average {
        /// Purity `tr ρ_J²` of subsystem J.
        #[arg(long, group = "function")]
        purity: Option<usize>,
        /// Spectra coordinate I (first moment).
        #[arg(long, group = "function")]
        moment: Option<usize>,
        /// Von Neumann entropy of subsystem J, by simplex quadrature.
        #[arg(long, group = "function")]
        entropy: Option<usize>,
        /// Quadrature order for `--entropy`.
        #[arg(long, default_value_t = 8)]
        order: usize,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Kronecker coefficient g_{λμν} of the symmetric group.
    Kronecker {
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        mu: String,
        #[arg(long)]
        nu: String,
        /// Recompute with the character table and fail on disagreement.
        #[arg(long)]
        check: bool,
    },
    /// Discrete measure k^{-(n-R)} Σ m_k(λ) δ_{λ/k} in fundamental-weight coordinates.
    MultiplicityMeasure {
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Kolmogorov–Smirnov comparison of sampled marginals against the exact law.
    Verify {
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `max:J` (largest eigenvalue of subsystem J) or `purity:J`.
        #[arg(long, default_value = "max:0")]
        statistic: String,
        #[arg(long, default_value_t = 0.01)]
        threshold: f64,
        /// Also write the raw sampled spectra as CSV.
        #[arg(long)]
        dump: Option<PathBuf>,
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ProblemArgs {
    /// Problem file in JSON (see docs/problem-files.md).
    #[arg(long, conflicts_with_all = ["kind", "dims", "particles", "spectrum", "pure", "purify"])]
    spec: Option<PathBuf>,
    /// distinguishable, bosons, fermions or bipartite.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,
    #[arg(long)]
    particles: Option<usize>,
    /// Global spectrum of a mixed state, e.g. `4/7,2/7,1/7,0`.
    #[arg(long, value_delimiter = ',', conflicts_with = "pure")]
    spectrum: Option<Vec<String>>,
    /// Random pure global state (the default).
    #[arg(long)]
    pure: bool,
    /// Pure state of the system doubled by a purifying copy.
    #[arg(long)]
    purify: bool,
    #[arg(long, value_enum)]
    frame: Option<FrameArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FrameArg {
    Weyl,
    Spectra,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    /// Grid spacing of CSV density samples.
    #[arg(long, default_value = "1/100")]
    grid: String,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

enum Failure {
    Engine(DhError),
    Input(String),
    Output(String),
    Threshold,
}

impl From<DhError> for Failure {
    fn from(e: DhError) -> Self {
        Failure::Engine(e)
    }
}

type Run<T> = Result<T, Failure>;

impl ProblemArgs {
    fn problem(&self) -> Run<MarginalProblem> {
        let mut spec = match &self.spec {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
                serde_json::from_str::<ProblemSpec>(&text)
                    .map_err(|e| DhError::Parse(format!("{}: {e}", path.display())))?
            }
            None => ProblemSpec {
                kind: self.kind.clone().ok_or_else(|| DhError::Parse("give --spec or --kind".into()))?,
                dims: self.dims.clone(),
                particles: self.particles,
                spectrum: self.spectrum.clone(),
                purify: self.purify,
                frame: ReportFrame::Spectra,
            },
        };
        if let Some(f) = self.frame {
            spec.frame = match f {
                FrameArg::Weyl => ReportFrame::Weyl,
                FrameArg::Spectra => ReportFrame::Spectra,
            };
        }
        Ok(spec.to_problem()?)
    }
}

impl OutputArgs {
    fn measure(&self, m: &PiecewiseMeasure) -> Run<String> {
        match self.format {
            Format::Json => {
                let mut s = m.to_json();
                s.push('\n');
                Ok(s)
            }
            Format::Csv => Ok(export::measure_csv(m, &parse_q(&self.grid)?)?),
        }
    }
}

fn emit(output: &Option<PathBuf>, text: &str) -> Run<()> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Output(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_weights(s: &str) -> DhResult<Vec<RationalVector>> {
    let frame = Frame::Named("t".into());
    let ws: Vec<RationalVector> = s
        .split(';')
        .map(|w| w.split(',').map(|c| parse_q(c.trim())).collect::<DhResult<Vec<Q>>>())
        .map(|r| r.map(|v| RationalVector::new(v, frame.clone())))
        .collect::<DhResult<_>>()?;
    if ws.is_empty() || ws.iter().any(|w| w.len() != ws[0].len() || w.is_empty()) {
        return Err(DhError::Parse("weights must be nonempty and of equal length".into()));
    }
    Ok(ws)
}

fn parse_statistic(s: &str) -> DhResult<Statistic> {
    let (name, j) = s.split_once(':').ok_or_else(|| DhError::Parse(format!("statistic `{s}` is not NAME:J")))?;
    let j: usize = j.parse().map_err(|_| DhError::Parse(format!("bad subsystem index in `{s}`")))?;
    match name {
        "max" => Ok(Statistic::MaxEigenvalue(j)),
        "purity" => Ok(Statistic::Purity(j)),
        _ => Err(DhError::Parse(format!("unknown statistic `{name}`"))),
    }
}

#[derive(Serialize)]
struct ExactAverage {
    direct: String,
    via_abelian: Option<String>,
}

#[derive(Serialize)]
struct NumericAverage {
    value: f64,
    error_estimate: f64,
}

#[derive(Serialize)]
struct VerifyReport {
    statistic: String,
    samples: usize,
    seed: u64,
    ks: f64,
    calibration_ks: f64,
    threshold: f64,
    pass: bool,
}

fn run(cli: Cli) -> Run<()> {
    match cli.command {
        Command::Density { weights, cone, input, problem, out } => {
            let m = if let Some(w) = weights {
                let ws = parse_weights(&w)?;
                if cone {
                    cone_density(&ws, None)?
                } else {
                    let mut coords: Vec<_> = ws.iter().map(|w| &w.coords).collect();
                    coords.sort();
                    coords.dedup();
                    if coords.len() == ws.len() {
                        single_summand_density(&ws)?
                    } else {
                        projective_density_via_cone(&ws)?
                    }
                }
            } else if let Some(path) = input {
                let text =
                    std::fs::read_to_string(&path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
                PiecewiseMeasure::from_json(&text)?
            } else {
                abelian_measure(&problem.problem()?)?
            };
            emit(&out.output, &out.measure(&m)?)
        }
        Command::Marginal { nonabelian, problem, out } => {
            let p = problem.problem()?;
            let m = if nonabelian { nonabelian_measure(&p)? } else { eigenvalue_distribution(&p)? };
            emit(&out.output, &out.measure(&m)?)
        }
        Command::Polytope { problem, out } => {
            let poly = moment_polytope(&problem.problem()?)?;
            let text = match out.format {
                Format::Json => export::polytope_json(&poly),
                Format::Csv => export::polytope_csv(&poly)?,
            };
            emit(&out.output, &text)
        }
        Command::Average { purity, moment, entropy, order, problem, out } => {
            let p = problem.problem()?.in_frame(ReportFrame::Spectra);
            let rep = p.reported_rep()?;
            if let Some(j) = entropy {
                let a = average_numeric(&p, &entropy_fn(&rep, j)?, order)?;
                let text = match out.format {
                    Format::Json => {
                        export::to_json(&NumericAverage { value: a.value, error_estimate: a.error_estimate })
                    }
                    Format::Csv => export::pairs_csv(&[
                        ("value", export::sig12(a.value)),
                        ("error_estimate", export::sig12(a.error_estimate)),
                    ])?,
                };
                return emit(&out.output, &text);
            }
            let f = match (purity, moment) {
                (Some(j), _) => purity_polynomial(&rep, j)?,
                (None, Some(i)) => {
                    let r = dhmeasure::qmarginal::spectra_map(&rep).1.len();
                    if i >= r {
                        return Err(DhError::Precondition(format!("coordinate {i} of {r}")).into());
                    }
                    Polynomial::var(r, i)
                }
                (None, None) => return Err(DhError::Parse("give one of --purity, --moment, --entropy".into()).into()),
            };
            let a = average_functional(&p, &f)?;
            let text = match out.format {
                Format::Json => export::to_json(&ExactAverage {
                    direct: fmt_q(&a.direct),
                    via_abelian: a.via_abelian.as_ref().map(fmt_q),
                }),
                Format::Csv => export::pairs_csv(&[
                    ("direct", fmt_q(&a.direct)),
                    ("via_abelian", a.via_abelian.as_ref().map(fmt_q).unwrap_or_default()),
                ])?,
            };
            emit(&out.output, &text)
        }
        Command::Kronecker { lambda, mu, nu, check } => {
            let (a, b, c) = (YoungDiagram::parse(&lambda)?, YoungDiagram::parse(&mu)?, YoungDiagram::parse(&nu)?);
            let g = kronecker(&a, &b, &c)?;
            if check {
                let oracle = character_oracle(&a, &b, &c)?;
                if oracle != g {
                    return Err(DhError::Internal(format!("weight route gives {g}, characters give {oracle}")).into());
                }
            }
            println!("{g}");
            Ok(())
        }
        Command::MultiplicityMeasure { k, problem, out } => {
            let atoms = multiplicity_measure(&problem.problem()?.in_frame(ReportFrame::Weyl), k)?;
            let text = match out.format {
                Format::Json => export::atoms_json(&atoms),
                Format::Csv => export::atoms_csv(&atoms)?,
            };
            emit(&out.output, &text)
        }
        Command::Verify { samples, seed, statistic, threshold, dump, problem, output } => {
            let stat = parse_statistic(&statistic)?;
            let p = problem.problem()?.in_frame(ReportFrame::Spectra);
            let cdf = exact_cdf(&eigenvalue_distribution(&p)?, &p.reported_rep()?, &stat)?;
            let batch = sample(&p, samples, seed)?;
            let ks = ks_distance(&batch, &cdf, &stat)?;
            let calibration_ks = ks_statistic(&sample_exact(&cdf, samples, seed.wrapping_add(1)), |x| cdf.eval(x))?;
            if let Some(path) = dump {
                emit(&Some(path), &batch.to_csv())?;
            }
            let pass = ks < threshold && calibration_ks < threshold;
            emit(
                &output,
                &export::to_json(&VerifyReport { statistic, samples, seed, ks, calibration_ks, threshold, pass }),
            )?;
            if pass {
                Ok(())
            } else {
                Err(Failure::Threshold)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Engine(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Output(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Threshold) => {
            eprintln!("error: Kolmogorov–Smirnov distance above threshold");
            ExitCode::from(1)
        }
    }
}
