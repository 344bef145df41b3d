//! `arbre-subst`: generate iterated trees, run the audit suites and plot
//! Rauzy-type clouds. Exit codes: 0 success, 1 a check failed, 2 bad input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use arbre_subst::prefix_suffix::build_automaton;
use arbre_subst::rauzy_viz::{export_csv, fractal_cloud, render_svg, zeta_cloud, Coloring};
use arbre_subst::realization::Realization;
use arbre_subst::symbolic::{language, Substitution};
use arbre_subst::tree_subst::{family_rules, validate, TreeSubstitution, TreeTower};
use arbre_subst::verify::{self, Check, Suite, VerifyConfig};
use arbre_subst::Error;
use clap::{Parser, Subcommand, ValueEnum};

/// Reserved for randomized runs; every command is deterministic today.
const SEED_VAR: &str = "ARBRE_SUBST_SEED";

#[derive(Parser)]
#[command(
    name = "arbre-subst",
    version,
    about = "Tree substitutions for the family 1->12, k->k+1, d->1",
    after_help = "Group words print as dot-separated letters, inverses marked with '-': 1.2-.3 is 1 2^-1 3."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the n-th iterated tree (json, dot) or its realized points (csv).
    Gen {
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(3..))]
        d: u32,
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, value_enum, default_value_t = GenFormat::Json)]
        format: GenFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run audit suites and emit a JSON report.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(3..))]
        d: u32,
        #[arg(long, alias = "n")]
        max_stage: Option<usize>,
        #[arg(long)]
        prefix_len: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Prefix count for the Rauzy suite.
        #[arg(long)]
        depth: Option<usize>,
        /// Tree substitution to validate before the suites run.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// JSON report path; without it the report goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Project prefixes of the fixed point to the contracting plane (d = 3).
    Plot {
        #[arg(long, value_enum, default_value_t = PlotKind::Rauzy)]
        kind: PlotKind,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(3..))]
        d: u32,
        /// Tree stage for zeta clouds.
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 20_000)]
        depth: usize,
        /// `none`, `cylinder:M` or `arc:N`.
        #[arg(long, default_value = "none")]
        color: String,
        #[arg(long, value_enum, default_value_t = PlotFormat::Svg)]
        format: PlotFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the family rules as JSON, a template for `verify --rules`.
    Rules {
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(3..))]
        d: u32,
    },
    /// Factors and special factors of length n, as JSON.
    Language {
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(3..))]
        d: u32,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Prefix-suffix automaton as DOT.
    Automaton {
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(3..))]
        d: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GenFormat {
    Json,
    Dot,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    Rauzy,
    Zeta,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotFormat {
    Svg,
    Csv,
}

enum Failure {
    Checks,
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: serde::Serialize>(v: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| Failure::Input(e.to_string()))
}

fn gen(d: usize, n: usize, format: GenFormat, out: Option<&Path>) -> Result<(), Failure> {
    let text = match format {
        GenFormat::Json => json(&TreeTower::family(d, n)?.stage(n).to_json(d))?,
        GenFormat::Dot => TreeTower::family(d, n)?.stage(n).to_dot(&format!("T{n}")),
        GenFormat::Csv => Realization::family(d, n)?.embedding(n).to_csv(),
    };
    emit(out, &text)
}

/// Loads and validates a rules file; any problem is an input error.
fn load_rules(path: &Path) -> Result<Check, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let ts = TreeSubstitution::from_json(&text)?;
    let witnesses = validate(&ts).checks.into_iter().flat_map(|c| c.witnesses).collect();
    Ok(Check::from_witnesses("the supplied rules satisfy the four validity conditions", None, witnesses))
}

#[allow(clippy::too_many_arguments)]
fn run_verify(
    suite: &str,
    d: usize,
    max_stage: Option<usize>,
    prefix_len: Option<usize>,
    tol: Option<f64>,
    depth: Option<usize>,
    rules: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let suite: Suite = suite.parse()?;
    let rules_check = rules.map(load_rules).transpose()?;
    let mut cfg = VerifyConfig::new(d);
    cfg.max_stage = max_stage.unwrap_or(cfg.max_stage);
    cfg.prefix_len = prefix_len.unwrap_or(cfg.prefix_len);
    cfg.tol = tol.unwrap_or(cfg.tol);
    cfg.rauzy_depth = depth.unwrap_or(cfg.rauzy_depth);
    let mut report = verify::run(suite, &cfg)?;
    if let Some(c) = rules_check {
        report.passed &= c.passed();
        report.checks.insert(0, c);
    }
    let text = json(&report)?;
    match out {
        Some(_) => {
            emit(out, &text)?;
            print!("{}", report.summary_table());
        }
        None => {
            eprint!("{}", report.summary_table());
            print!("{text}");
        }
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn plot(
    kind: PlotKind,
    d: usize,
    n: usize,
    depth: usize,
    color: &str,
    format: PlotFormat,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let cloud = match kind {
        PlotKind::Rauzy => fractal_cloud(d, depth, color.parse::<Coloring>()?)?,
        PlotKind::Zeta => {
            let z = zeta_cloud(d, n, depth)?;
            if !z.collisions.is_empty() {
                eprintln!("{} projected collisions between distinct branch points", z.collisions.len());
            }
            z.cloud
        }
    };
    let text = match format {
        PlotFormat::Svg => render_svg(&cloud),
        PlotFormat::Csv => export_csv(&cloud),
    };
    emit(out, &text)
}

fn dispatch(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Gen { d, n, format, out } => gen(d as usize, n, format, out.as_deref()),
        Cmd::Verify { suite, d, max_stage, prefix_len, tol, depth, rules, out } => run_verify(
            &suite,
            d as usize,
            max_stage,
            prefix_len,
            tol,
            depth,
            rules.as_deref(),
            out.as_deref(),
        ),
        Cmd::Plot { kind, d, n, depth, color, format, out } => {
            plot(kind, d as usize, n, depth, &color, format, out.as_deref())
        }
        Cmd::Rules { d } => emit(None, &json(&family_rules(d as usize)?)?),
        Cmd::Language { d, n } => emit(None, &json(&language(&Substitution::family(d as usize)?, n)?)?),
        Cmd::Automaton { d } => emit(None, &build_automaton(&Substitution::family(d as usize)?).to_dot()),
    }
}

fn main() -> ExitCode {
    let _ = std::env::var_os(SEED_VAR);
    match dispatch(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
