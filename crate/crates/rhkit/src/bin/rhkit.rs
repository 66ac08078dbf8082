//! Command-line front end.
//!
//! Exit codes: 0 for definite answers, 2 for Unknown / Timeout / NotFound,
//! 1 for input errors.  Reports are line-oriented `key=value` records and are
//! byte-deterministic for fixed inputs and flags; set `RHKIT_CACHE_DIR` to
//! memoize loop lists across runs.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use rhkit::eq::{
    decide_existential, parse_system, parse_va, va_decide, DecideBudget, ExistentialContext,
    ExistentialOutcome, LiftMode, SolveBudget, VaOutcome,
};
use rhkit::graph::Fragment;
use rhkit::group::{
    parse_group_family, parse_presentation, NfOracle, RelPresentation, WpOracle,
};
use rhkit::lang::{build_language_automaton, GeometryConstants, LangTester};
use rhkit::report::{recognition_report, Report};
use rhkit::vk::{
    find_abelian_structure, hyperbolicity_constant, recognize, simple_loop_list, AbelianBounds,
    FinderOutcome, LoopCaps, RecognitionOutcome, RecognizeConfig,
};
use rhkit::Result;

#[derive(Parser)]
#[command(name = "rhkit", version, about = "Relatively hyperbolic group toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Include wall-clock timing in the report (breaks byte determinism).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Args)]
struct PresArg {
    /// Presentation file.
    #[arg(short = 'p', long)]
    presentation: PathBuf,
}

#[derive(Args)]
struct WpArg {
    /// Word-problem oracle for the ambient group: `builtin:free`,
    /// `builtin:free-abelian`, or `builtin:abelian[t1,...]`.
    #[arg(long)]
    wp: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Explore a ball of the coned-off Cayley graph.
    Graph {
        #[command(flatten)]
        pres: PresArg,
        #[command(flatten)]
        wp: WpArg,
        #[arg(long, default_value_t = 4)]
        radius: usize,
        #[arg(long, default_value_t = 3)]
        cone_budget: usize,
    },
    /// Build the geometric language automaton at toy constants.
    Lang {
        #[command(flatten)]
        pres: PresArg,
        #[command(flatten)]
        wp: WpArg,
        #[arg(long, default_value_t = 4)]
        radius: usize,
        #[arg(long, default_value_t = 3)]
        cone_budget: usize,
        #[arg(long, default_value_t = 1)]
        l1: u128,
        #[arg(long, default_value_t = 2)]
        l2: u128,
        #[arg(long, default_value_t = 3)]
        l: u128,
        #[arg(long, default_value_t = 2)]
        theta: u128,
        #[arg(long, default_value_t = 50)]
        a: u128,
        #[arg(long, default_value_t = 200_000)]
        max_states: usize,
    },
    /// Decide an equation/inequation system: bounded existential search over
    /// the presentation, or the complete procedure with `--va`.
    Solve {
        #[command(flatten)]
        pres: PresArg,
        #[command(flatten)]
        wp: WpArg,
        /// System file.
        #[arg(short = 's', long)]
        system: PathBuf,
        /// Virtually abelian structure file; switches to the complete solver.
        #[arg(long)]
        va: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        radius: usize,
        #[arg(long, default_value_t = 4)]
        cone_budget: usize,
        #[arg(long, default_value_t = 2_000_000)]
        budget: usize,
    },
    /// Run the relative-hyperbolicity recognition loop.
    Recognize {
        #[command(flatten)]
        pres: PresArg,
        #[command(flatten)]
        wp: WpArg,
        #[arg(long, default_value_t = 1)]
        k_start: u128,
        #[arg(long, default_value_t = 5)]
        k_max: u128,
        /// Diagram-stream cap; verdicts below the theoretical `240K` cell
        /// bound are heuristic and flagged by caveats.
        #[arg(long, default_value_t = 200)]
        cap: usize,
    },
    /// List simple loops of the coned-off graph up to a path length.
    Loops {
        #[command(flatten)]
        pres: PresArg,
        #[command(flatten)]
        wp: WpArg,
        /// Isoperimetric factor this list is relative to (provenance only;
        /// the enumeration is an exhaustive graph search up to `length`).
        #[arg(long, short = 'k', default_value_t = 1)]
        k: u128,
        #[arg(long, default_value_t = 3)]
        length: usize,
        #[arg(long, default_value_t = 3)]
        member_ball: usize,
    },
    /// Print the hyperbolicity constant derived from an isoperimetric factor.
    Delta {
        #[command(flatten)]
        pres: PresArg,
        #[arg(long, short = 'k')]
        k: u128,
        #[arg(long, default_value_t = 4)]
        coeff: u128,
    },
    /// Search for an abelian parabolic structure.
    FindAbelian {
        #[command(flatten)]
        pres: PresArg,
        #[command(flatten)]
        wp: WpArg,
        #[arg(long, default_value_t = 1)]
        n_max: usize,
        #[arg(long, default_value_t = 2)]
        k_max: usize,
        #[arg(long, default_value_t = 2)]
        s_max: u64,
        #[arg(long, default_value_t = 4)]
        recog_k_max: u128,
        #[arg(long, default_value_t = 50)]
        cap: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = std::time::Instant::now();
    match run(&cli.command) {
        Ok((mut report, definite)) => {
            if cli.timing {
                report.timing_ms = Some(start.elapsed().as_millis() as u64);
            }
            print!("{}", report.emit());
            if definite {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load_presentation(arg: &PresArg) -> Result<(String, RelPresentation)> {
    let text = std::fs::read_to_string(&arg.presentation)
        .map_err(|e| rhkit::RhError::MalformedInput(format!(
            "cannot read {}: {e}", arg.presentation.display()
        )))?;
    let pres = parse_presentation(&text)?;
    Ok((text, pres))
}

fn oracles(arg: &WpArg, pres: &RelPresentation) -> Result<Option<(WpOracle, NfOracle)>> {
    match &arg.wp {
        None => Ok(None),
        Some(tag) => {
            let family = tag.strip_prefix("builtin:").ok_or_else(|| {
                rhkit::RhError::MalformedInput(format!("unsupported oracle tag {tag:?}"))
            })?;
            Ok(Some(parse_group_family(family)?.oracles(pres.gens())?))
        }
    }
}

fn require_wp(arg: &WpArg, pres: &RelPresentation) -> Result<(WpOracle, NfOracle)> {
    oracles(arg, pres)?.ok_or_else(|| {
        rhkit::RhError::MalformedInput("this subcommand needs --wp builtin:<family>".into())
    })
}

fn run(command: &Command) -> Result<(Report, bool)> {
    match command {
        Command::Graph { pres, wp, radius, cone_budget } => {
            let (_, pres) = load_presentation(pres)?;
            let (_, nf) = require_wp(wp, &pres)?;
            let frag = Fragment::explore(&pres, &nf, *radius, *cone_budget)?;
            let report = Report::new("Explored")
                .config("radius", radius)
                .config("cone-budget", cone_budget)
                .field("vertices", frag.vertices().len())
                .field("edges", frag.edges().len())
                .field("truncated", frag.truncated());
            Ok((report, true))
        }
        Command::Lang { pres, wp, radius, cone_budget, l1, l2, l, theta, a, max_states } => {
            let (_, pres) = load_presentation(pres)?;
            let (_, nf) = require_wp(wp, &pres)?;
            let frag = Fragment::explore(&pres, &nf, *radius, *cone_budget)?;
            let consts = GeometryConstants::toy(*l1, *l2, *l, *theta, *a)?;
            let tester = LangTester::new(&frag, &consts)?;
            let lang = build_language_automaton(&tester, *max_states, &[])?;
            let report = Report::new("Built")
                .config("l1", l1)
                .config("l2", l2)
                .config("l", l)
                .config("theta", theta)
                .config("a", a)
                .field("states", lang.n_states)
                .field("transitions", lang.transitions.len());
            Ok((report, true))
        }
        Command::Solve { pres, wp, system, va, radius, cone_budget, budget } => {
            let sys_text = std::fs::read_to_string(system).map_err(|e| {
                rhkit::RhError::MalformedInput(format!("cannot read {}: {e}", system.display()))
            })?;
            let sys = parse_system(&sys_text)?;
            if let Some(va_path) = va {
                let va_text = std::fs::read_to_string(va_path).map_err(|e| {
                    rhkit::RhError::MalformedInput(format!(
                        "cannot read {}: {e}", va_path.display()
                    ))
                })?;
                let structure = parse_va(&va_text)?;
                return Ok(match va_decide(&sys, &structure)? {
                    VaOutcome::Sat(w) => {
                        let mut report = Report::new("Sat");
                        for (name, elem) in w {
                            report = report.field(format!("witness.{name}"), format!("{elem:?}"));
                        }
                        (report, true)
                    }
                    VaOutcome::Unsat => (Report::new("Unsat"), true),
                });
            }
            let (_, pres) = load_presentation(pres)?;
            let (_, nf) = require_wp(wp, &pres)?;
            let frag = Fragment::explore(&pres, &nf, *radius, *cone_budget)?;
            let consts = GeometryConstants::toy(1, 2, 3, 2, 50)?;
            let tester = LangTester::new(&frag, &consts)?;
            let lang = Arc::new(build_language_automaton(&tester, 200_000, &[])?);
            let l0 = tester.trivial_sublanguage(2, 2)?;
            let nontrivial = Arc::new(build_language_automaton(&tester, 200_000, &l0)?);
            let ctx = ExistentialContext {
                frag: &frag,
                consts: &consts,
                lang,
                lang_nontrivial: nontrivial,
                automata: BTreeMap::new(),
            };
            let decide_budget = DecideBudget {
                enumeration: *budget,
                max_members: 100,
                central_cap: 0,
                solve: SolveBudget { max_syllables: 1, max_coord: 2 },
            };
            let mode = if pres.parabolics().is_empty() {
                LiftMode::Hyperbolic
            } else {
                LiftMode::Relative
            };
            let sys = sys.triangulate()?;
            Ok(match decide_existential(&sys, &ctx, mode, &decide_budget)? {
                ExistentialOutcome::Sat { witness, member } => {
                    let mut report = Report::new("Sat")
                        .config("budget", budget)
                        .field("member", member);
                    for (name, word) in witness {
                        report = report.field(format!("witness.{name}"), word);
                    }
                    (report, true)
                }
                ExistentialOutcome::Unknown => {
                    (Report::new("Unknown").config("budget", budget), false)
                }
            })
        }
        Command::Recognize { pres, wp, k_start, k_max, cap } => {
            let (_, pres) = load_presentation(pres)?;
            let wp = oracles(wp, &pres)?.map(|(wp, _)| wp);
            let config = RecognizeConfig {
                k_start: *k_start,
                k_max: *k_max,
                cap_diagrams: *cap,
                ..RecognizeConfig::default()
            };
            let rr = recognize(&pres, wp.as_ref(), &config)?;
            let definite = !matches!(rr.outcome, RecognitionOutcome::Timeout(_));
            let report = recognition_report(&pres, &rr)
                .config("k-start", k_start)
                .config("k-max", k_max)
                .config("cap", cap);
            Ok((report, definite))
        }
        Command::Loops { pres, wp, k, length, member_ball } => {
            let (text, pres) = load_presentation(pres)?;
            let (wp, _) = require_wp(wp, &pres)?;
            let mut report = Report::new("Loops")
                .config("k", k)
                .config("length", length)
                .config("member-ball", member_ball);
            let cache_key = cache_key(&[&text, &format!("loops/{k}/{length}/{member_ball}")]);
            if let Some(cached) = cache_read(&cache_key) {
                report.witnesses = cached;
                report = report.field("cache", "hit");
            } else {
                let loops = simple_loop_list(
                    &pres,
                    &wp,
                    *length,
                    LoopCaps { member_ball: *member_ball, budget: 10_000_000 },
                )?;
                report.witnesses =
                    loops.iter().map(|w| pres.format_relword(w)).collect();
                cache_write(&cache_key, &report.witnesses);
            }
            let count = report.witnesses.len();
            Ok((report.field("count", count), true))
        }
        Command::Delta { pres, k, coeff } => {
            let (_, pres) = load_presentation(pres)?;
            let delta = hyperbolicity_constant(*k, &pres, *coeff);
            let report = Report::new("Delta")
                .config("k", k)
                .config("coeff", coeff)
                .field("delta", delta);
            Ok((report, true))
        }
        Command::FindAbelian { pres, wp, n_max, k_max, s_max, recog_k_max, cap } => {
            let (_, pres) = load_presentation(pres)?;
            let (wp, _) = require_wp(wp, &pres)?;
            let bounds = AbelianBounds { n_max: *n_max, k_max: *k_max, s_max: *s_max };
            let config = RecognizeConfig {
                k_max: *recog_k_max,
                cap_diagrams: *cap,
                ..RecognizeConfig::default()
            };
            Ok(match find_abelian_structure(&pres, &wp, &bounds, &config)? {
                FinderOutcome::Found(s) => {
                    let mut report = Report::new("Found")
                        .config("n-max", n_max)
                        .config("k-max", k_max)
                        .config("s-max", s_max)
                        .field("subsets", s.subsets.len());
                    for (i, subset) in s.subsets.iter().enumerate() {
                        report = report.field(format!("subset.{i}"), subset.join(","));
                    }
                    report.caveats = s.report.caveats.clone();
                    (report, true)
                }
                FinderOutcome::NotFound => (
                    Report::new("NotFound")
                        .config("n-max", n_max)
                        .config("k-max", k_max)
                        .config("s-max", s_max),
                    false,
                ),
            })
        }
    }
}

fn cache_key(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p.as_bytes());
        hasher.update([0]);
    }
    hex::encode(hasher.finalize())
}

fn cache_dir() -> Option<PathBuf> {
    std::env::var_os("RHKIT_CACHE_DIR").map(PathBuf::from)
}

fn cache_read(key: &str) -> Option<Vec<String>> {
    let path = cache_dir()?.join(key);
    let text = std::fs::read_to_string(path).ok()?;
    Some(text.lines().map(str::to_string).collect())
}

fn cache_write(key: &str, lines: &[String]) {
    if let Some(dir) = cache_dir() {
        if std::fs::create_dir_all(&dir).is_ok() {
            let _ = std::fs::write(dir.join(key), lines.join("\n"));
        }
    }
}
