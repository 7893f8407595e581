//! `csg`: solve, verify, simulate and export constrained stochastic games.
//!
//! Exit codes: 0 on a certified result or passing verification, 2 on
//! epsilon-only results and soft failures, 1 on errors, 64 on usage errors,
//! 66 on unreadable input files.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use csg_core::game::{
    builtin_example, builtin_names, parse_game, parse_strategies, Criterion, Game,
};
use csg_core::mp::{
    assemble_auto, assemble_mp4, export_mp_text, export_qp_cplex, specialize_qp, zero_sum_split,
};
use csg_core::sim::{compare, simulate_with_burn_in, AnalyticBaseline};
use csg_core::solver::{solve_nash, verify_nash, SolverConfig, Verdict};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_SOFT: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_NOINPUT: u8 = 66;

#[derive(Parser)]
#[command(
    name = "csg",
    version,
    about = "Constrained stochastic game solver: equilibria as certified zero-objective \
             minima of assembled mathematical programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find and certify a stationary Nash equilibrium
    Solve(SolveArgs),
    /// Verify a strategy profile from a strategies file
    Verify(VerifyArgs),
    /// Simulate a strategy profile and compare against analytic values
    Simulate(SimArgs),
    /// Export assembled programs or zero-sum LP pairs as text
    Export(ExportArgs),
    /// List built-in example games
    Examples,
}

#[derive(Args)]
struct GameSource {
    /// built-in example name (see `csg examples`)
    #[arg(long, conflicts_with = "game")]
    builtin: Option<String>,
    /// path to a game file (JSON, schema_version 1)
    #[arg(long)]
    game: Option<PathBuf>,
    /// override the cost criterion of a single-controller game
    #[arg(long, value_enum)]
    criterion: Option<CriterionArg>,
    /// discount factor for --criterion discounted
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    Average,
    Discounted,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Human,
    Document,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    source: GameSource,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    #[arg(long = "phi-tol", default_value_t = 1e-6)]
    phi_tol: f64,
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: GameSource,
    /// strategies file (JSON, one probability row per state per player)
    #[arg(long)]
    strategies: PathBuf,
    /// acceptance level for the best-response gaps
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    source: GameSource,
    /// strategies file; defaults to solving the game first
    #[arg(long)]
    strategies: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    horizon: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "burn-in", default_value_t = 0)]
    burn_in: usize,
    #[arg(long, default_value_t = 3.0)]
    z: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProgramArg {
    /// the program matching the game class and criterion
    Auto,
    Mp4,
    /// quadratic specialization (decoupled constraint costs)
    Qp,
    /// zero-sum primal/dual LP pair
    ZeroSum,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    source: GameSource,
    #[arg(long, value_enum, default_value = "auto")]
    program: ProgramArg,
    /// discount parameter for --program mp4 (defaults to the game's beta,
    /// or 1 for average-criterion games)
    #[arg(long = "mp4-beta")]
    mp4_beta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    fn error(message: impl std::fmt::Display) -> Self {
        Failure::new(EXIT_ERROR, message.to_string())
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_NOINPUT, format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| Failure::error(format!("cannot write {}: {e}", path.display())))
}

fn load_game(source: &GameSource) -> Result<Game, Failure> {
    let mut game = match (&source.builtin, &source.game) {
        (Some(name), None) => builtin_example(name).map_err(Failure::error)?,
        (None, Some(path)) => parse_game(&read_file(path)?).map_err(Failure::error)?,
        _ => {
            return Err(Failure::new(
                EXIT_USAGE,
                "exactly one of --builtin or --game is required",
            ))
        }
    };
    if let Some(criterion) = source.criterion {
        let Game::SingleController(g) = &game else {
            return Err(Failure::error(
                "criterion override applies to single-controller games only",
            ));
        };
        let new = match criterion {
            CriterionArg::Average => Criterion::Average,
            CriterionArg::Discounted => Criterion::Discounted {
                beta: source.beta.unwrap_or(0.5),
            },
        };
        game = Game::SingleController(g.with_criterion(new).map_err(Failure::error)?);
    } else if source.beta.is_some() {
        return Err(Failure::new(
            EXIT_USAGE,
            "--beta requires --criterion discounted",
        ));
    }
    Ok(game)
}

fn game_label(game: &Game) -> String {
    match game {
        Game::SingleController(g) => match g.criterion() {
            Criterion::Average => "single-controller, average criterion".into(),
            Criterion::Discounted { beta } => {
                format!("single-controller, discounted criterion (beta = {beta})")
            }
        },
        Game::Independent(g) => format!(
            "independent chains, {} players, average criterion",
            g.num_players()
        ),
    }
}

fn fmt_rows(strategy: &csg_core::game::StationaryStrategy) -> String {
    strategy
        .rows()
        .iter()
        .enumerate()
        .map(|(s, row)| {
            let cells: Vec<String> = row.iter().map(|p| format!("{p:.4}")).collect();
            format!("state {}: [{}]", s + 1, cells.join(", "))
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn print_certificate(cert: &csg_core::solver::NashCertificate, game: &Game) {
    let verdict = match &cert.verdict {
        Verdict::Certified => "certified".to_string(),
        Verdict::EpsilonOnly(e) => format!("epsilon-only (max gap {e:.4e})"),
        Verdict::Failed => "failed".to_string(),
    };
    println!("game: {}", game_label(game));
    println!("verdict: {verdict}");
    let costs: Vec<String> = cert
        .costs
        .iter()
        .enumerate()
        .map(|(i, c)| format!("player {} = {c:.4}", i + 1))
        .collect();
    println!("costs: {}", costs.join(", "));
    if cert.objective_value.is_finite() {
        println!("program objective: {:.6e}", cert.objective_value);
        println!("max residual: {:.6e}", cert.residual_max);
    } else {
        println!("program objective: none (infeasible strategies)");
    }
    let gaps: Vec<String> = cert
        .epsilon_gaps
        .iter()
        .map(|g| format!("{g:.4e}"))
        .collect();
    println!("best-response gaps: {}", gaps.join(", "));
    println!("strategies:");
    for (i, s) in cert.strategies.iter().enumerate() {
        println!("  player {}: {}", i + 1, fmt_rows(s));
    }
}

fn run_solve(args: &SolveArgs) -> Result<u8, Failure> {
    if let Some(threads) = args.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let game = load_game(&args.source)?;
    let config = SolverConfig {
        restarts: args.restarts,
        rng_seed: args.seed,
        phi_tolerance: args.phi_tol,
        damping: args.damping,
        ..Default::default()
    };
    let cert = solve_nash(&game, &config).map_err(Failure::error)?;
    let doc = cert.to_document(Some(args.seed));
    match args.format {
        Format::Human => print_certificate(&cert, &game),
        Format::Document => println!("{}", doc.to_json()),
    }
    if let Some(out) = &args.out {
        write_file(out, &doc.to_json())?;
    }
    Ok(match cert.verdict {
        Verdict::Certified => EXIT_OK,
        _ => EXIT_SOFT,
    })
}

fn run_verify(args: &VerifyArgs) -> Result<u8, Failure> {
    let game = load_game(&args.source)?;
    let strategies = parse_strategies(&read_file(&args.strategies)?).map_err(Failure::error)?;
    let cert = verify_nash(&game, &strategies, args.epsilon).map_err(Failure::error)?;
    let doc = cert.to_document(None);
    match args.format {
        Format::Human => {
            print_certificate(&cert, &game);
            println!(
                "verification at epsilon {:.1e}: {}",
                args.epsilon,
                if cert.passes(args.epsilon) {
                    "pass"
                } else {
                    "fail"
                }
            );
        }
        Format::Document => println!("{}", doc.to_json()),
    }
    if let Some(out) = &args.out {
        write_file(out, &doc.to_json())?;
    }
    Ok(if cert.passes(args.epsilon) {
        EXIT_OK
    } else {
        EXIT_SOFT
    })
}

fn run_simulate(args: &SimArgs) -> Result<u8, Failure> {
    let game = load_game(&args.source)?;
    let strategies = match &args.strategies {
        Some(path) => parse_strategies(&read_file(path)?).map_err(Failure::error)?,
        None => {
            let cert = solve_nash(&game, &SolverConfig::default()).map_err(Failure::error)?;
            cert.strategies
        }
    };
    let report = simulate_with_burn_in(&game, &strategies, args.horizon, args.seed, args.burn_in);
    let baseline = AnalyticBaseline::for_profile(&game, &strategies).map_err(Failure::error)?;
    let cmp = compare(&report, &baseline, args.z).map_err(Failure::error)?;
    match args.format {
        Format::Human => {
            println!("game: {}", game_label(&game));
            println!("horizon: {}, seed: {}", report.horizon, report.seed);
            for (i, (emp, ana)) in report
                .empirical_costs
                .iter()
                .zip(&baseline.costs)
                .enumerate()
            {
                println!(
                    "player {} cost: empirical {emp:.4} vs analytic {ana:.4} (se {:.2e}) -> {}",
                    i + 1,
                    report.standard_errors.costs[i],
                    if cmp.cost_pass[i] { "pass" } else { "FAIL" }
                );
            }
            for (c, (occ, ana)) in report
                .empirical_occupation
                .iter()
                .zip(&baseline.occupation)
                .enumerate()
            {
                let cells: Vec<String> = occ
                    .iter()
                    .zip(ana)
                    .zip(&cmp.occupation_pass[c])
                    .map(|((e, a), ok)| format!("{e:.4}/{a:.4}{}", if *ok { "" } else { "!" }))
                    .collect();
                println!(
                    "chain {} occupation (empirical/analytic): {}",
                    c + 1,
                    cells.join(", ")
                );
            }
            if let Some(tb) = report.truncation_bound {
                println!("discounted truncation bound: {tb:.2e}");
            }
        }
        Format::Document => println!("{}", report.to_document()),
    }
    if let Some(out) = &args.out {
        write_file(out, &report.to_document())?;
    }
    Ok(if cmp.all_pass() { EXIT_OK } else { EXIT_SOFT })
}

fn run_export(args: &ExportArgs) -> Result<u8, Failure> {
    let game = load_game(&args.source)?;
    let emit = |path: Option<&PathBuf>, text: &str| -> Result<(), Failure> {
        match path {
            Some(p) => write_file(p, text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    };
    match args.program {
        ProgramArg::Auto => {
            let mp = assemble_auto(&game).map_err(Failure::error)?;
            emit(args.out.as_ref(), &export_mp_text(&mp))?;
        }
        ProgramArg::Mp4 => {
            let Game::SingleController(g) = &game else {
                return Err(Failure::error(
                    "the unified program applies to single-controller games",
                ));
            };
            let beta = args.mp4_beta.unwrap_or(match g.criterion() {
                Criterion::Average => 1.0,
                Criterion::Discounted { beta } => beta,
            });
            let mp = assemble_mp4(g, beta).map_err(Failure::error)?;
            emit(args.out.as_ref(), &export_mp_text(&mp))?;
        }
        ProgramArg::Qp => {
            let mp = assemble_auto(&game).map_err(Failure::error)?;
            let qp = specialize_qp(&mp, &game).map_err(Failure::error)?;
            emit(
                args.out.as_ref(),
                &export_qp_cplex(&qp).map_err(Failure::error)?,
            )?;
        }
        ProgramArg::ZeroSum => {
            let mp = assemble_auto(&game).map_err(Failure::error)?;
            let qp = specialize_qp(&mp, &game).map_err(Failure::error)?;
            let pair = zero_sum_split(&qp, &game).map_err(Failure::error)?;
            let primal = csg_core::lp::to_cplex_lp(&pair.primal);
            let dual = csg_core::lp::to_cplex_lp(&pair.dual);
            match &args.out {
                Some(p) => {
                    write_file(p, &primal)?;
                    let mut dual_path = p.as_os_str().to_owned();
                    dual_path.push(".dual");
                    write_file(Path::new(&dual_path), &dual)?;
                }
                None => {
                    println!("\\ primal (maximize; optimal value = game value)");
                    print!("{primal}");
                    println!("\\ dual");
                    print!("{dual}");
                }
            }
        }
    }
    Ok(EXIT_OK)
}

fn run_examples() -> u8 {
    for name in builtin_names() {
        let game = builtin_example(name).expect("built-in names resolve");
        let shape = match &game {
            Game::SingleController(g) => format!(
                "{} states, {}x{} state-action pairs, n1={}, n2={}",
                g.num_states(),
                g.k1().len(),
                g.k2().len(),
                g.n1(),
                g.n2()
            ),
            Game::Independent(g) => {
                let chains: Vec<String> = (0..g.num_players())
                    .map(|i| format!("{}s/{}sa", g.chain(i).num_states(), g.chain(i).k().len()))
                    .collect();
                format!("chains: {}", chains.join(", "))
            }
        };
        println!("{name}: {} ({shape})", game_label(&game));
    }
    EXIT_OK
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Verify(args) => run_verify(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Export(args) => run_export(args),
        Command::Examples => Ok(run_examples()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
