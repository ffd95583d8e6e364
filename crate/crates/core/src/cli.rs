//! Command-line front end.
//!
//! Results go to `--out` (or standard output) as JSON or CSV; a short human
//! summary goes to standard error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::discord::{discord, discord_minimize_with, SearchConfig, StepSchedule};
use crate::eof_bound::eof_two_element_bound;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Party, C64};
use crate::measures::{concurrence, eof_from_concurrence};
use crate::scan::{
    mdms_transition_search, run_scan, step_size_profile, write_csv, write_profile_csv, ScanConfig,
    PROFILE_M4_LIMIT,
};
use crate::states::{
    bell_state, mdms_state, random_state, read_state, state_to_json, validate, BellState,
    DensityMatrix, StateFile,
};

pub const BUILTINS: [&str; 6] = [
    "bell-phi+",
    "bell-phi-",
    "bell-psi+",
    "bell-psi-",
    "mdms",
    "maximally-mixed",
];

#[derive(Debug, Parser)]
#[command(
    name = "qdiscord",
    version,
    about = "Quantum discord of two-qubit states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Discord of a two-qubit state.
    Discord {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Restrict the search to POVMs with this many elements.
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=4))]
        elements: Option<u8>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Concurrence and entanglement of formation of a two-qubit state.
    Concurrence {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random-state deviation scan.
    Scan {
        /// JSON scan configuration; omitted fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV of per-state records.
        #[arg(long)]
        out: PathBuf,
        /// Summary JSON; defaults to the CSV path with a `.summary.json` suffix.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Grid discord against the step size.
    Profile {
        #[command(flatten)]
        state: StateArgs,
        /// `default` or comma-separated steps in units of π.
        #[arg(long, default_value = "default")]
        steps: String,
        /// Coarsest step (units of π) below which the four-element grid is skipped.
        #[arg(long, default_value_t = PROFILE_M4_LIMIT)]
        m4_limit: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Largest MDMS perturbation that keeps a three-element advantage.
    MdmsTransition {
        #[arg(long, default_value_t = 0.11)]
        m: f64,
        #[arg(long, default_value_t = 0.2349602)]
        eps: f64,
        #[arg(long, default_value_t = 1e-8)]
        threshold: f64,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-element entanglement bound for a rank-2 qubit-qudit state.
    EofBound {
        #[command(flatten)]
        state: StateArgs,
        /// Grid floor in units of π.
        #[arg(long, default_value_t = 0.05)]
        floor: f64,
        #[arg(long)]
        no_polish: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a state file against the density-matrix invariants.
    Validate {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded random state.
    Random {
        #[arg(long, default_value_t = 4)]
        rank: usize,
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PartyArg {
    A,
    B,
}

#[derive(Debug, Args)]
pub struct StateArgs {
    /// State JSON file or a built-in name (bell-phi+, bell-phi-, bell-psi+,
    /// bell-psi-, mdms, maximally-mixed).
    #[arg(long)]
    pub state: String,
    /// MDMS mixing parameter.
    #[arg(long = "mdms-m", default_value_t = 0.11)]
    pub mdms_m: f64,
    /// MDMS singlet weight.
    #[arg(long = "mdms-eps", default_value_t = 0.2349602)]
    pub mdms_eps: f64,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, value_enum, default_value_t = PartyArg::B)]
    pub measure_party: PartyArg,
    #[arg(long, overrides_with = "no_polish")]
    pub polish: bool,
    #[arg(long)]
    pub no_polish: bool,
    /// Grid floors in units of π.
    #[arg(long = "floor-2")]
    pub floor2: Option<f64>,
    #[arg(long = "floor-3")]
    pub floor3: Option<f64>,
    #[arg(long = "floor-4")]
    pub floor4: Option<f64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

impl SearchArgs {
    pub fn config(&self) -> SearchConfig {
        let d = SearchConfig::default();
        SearchConfig {
            floor2: self.floor2.unwrap_or(d.floor2),
            floor3: self.floor3.unwrap_or(d.floor3),
            floor4: self.floor4.unwrap_or(d.floor4),
            polish: !self.no_polish,
            party: match self.measure_party {
                PartyArg::A => Party::A,
                PartyArg::B => Party::B,
            },
        }
    }
}

/// Concurrence subcommand output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceReport {
    pub concurrence: f64,
    pub entanglement_of_formation: f64,
}

pub fn builtin_state(name: &str, m: f64, eps: f64) -> Result<DensityMatrix> {
    Ok(match name {
        "bell-phi+" => bell_state(BellState::PhiPlus),
        "bell-phi-" => bell_state(BellState::PhiMinus),
        "bell-psi+" => bell_state(BellState::PsiPlus),
        "bell-psi-" => bell_state(BellState::PsiMinus),
        "mdms" => mdms_state(m, eps)?,
        "maximally-mixed" => DensityMatrix::maximally_mixed(4),
        _ => return Err(Error::Domain(format!("unknown built-in state {name}"))),
    })
}

impl StateArgs {
    fn is_builtin(&self) -> bool {
        BUILTINS.contains(&self.state.as_str()) && !Path::new(&self.state).exists()
    }

    pub fn load(&self) -> Result<DensityMatrix> {
        if self.is_builtin() {
            builtin_state(&self.state, self.mdms_m, self.mdms_eps)
        } else {
            read_state(Path::new(&self.state))
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?
        .install(f)
}

fn parse_steps(spec: &str) -> Result<StepSchedule> {
    if spec == "default" {
        return Ok(StepSchedule::standard());
    }
    let steps = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Domain(format!("bad step {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    StepSchedule::from_pi_units(&steps)
}

pub fn default_summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("summary.json")
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Discord {
            state,
            search,
            elements,
            out,
        } => {
            let rho = state.load()?;
            let cfg = search.config();
            let r = with_threads(search.threads, || match elements {
                Some(m) => discord_minimize_with(&rho, *m as usize, &cfg),
                None => discord(&rho, &cfg),
            })?;
            eprintln!(
                "discord δ = {:.12} (m={}, {})",
                r.value,
                r.m,
                if r.analytic { "analytic" } else { "numerical" }
            );
            emit(out, &json(&r)?)
        }
        Command::Concurrence { state, out } => {
            let rho = state.load()?;
            let c = concurrence(&rho)?;
            let r = ConcurrenceReport {
                concurrence: c,
                entanglement_of_formation: eof_from_concurrence(c)?,
            };
            eprintln!(
                "C = {:.12}, E_F = {:.12}",
                r.concurrence, r.entanglement_of_formation
            );
            emit(out, &json(&r)?)
        }
        Command::Scan {
            config,
            out,
            summary,
            samples,
            seed,
            threads,
        } => {
            let mut cfg: ScanConfig = match config {
                Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
                None => ScanConfig::default(),
            };
            if let Some(n) = samples {
                cfg.samples = *n;
            }
            if let Some(s) = seed {
                cfg.seed = *s;
            }
            if let Some(t) = threads {
                cfg.threads = *t;
            }
            let s = run_scan(&cfg)?;
            let mut csv = Vec::new();
            write_csv(&s.records, &mut csv)?;
            fs::write(out, csv)?;
            let summary_path = summary.clone().unwrap_or_else(|| default_summary_path(out));
            fs::write(&summary_path, json(&s)?)?;
            eprintln!(
                "{} states: Δ3 deviant {} (p = {}), Δ4 deviant {} (p = {})",
                cfg.samples, s.dev3.deviant, s.dev3.p, s.dev4.deviant, s.dev4.p
            );
            Ok(())
        }
        Command::Profile {
            state,
            steps,
            m4_limit,
            format,
            threads,
            out,
        } => {
            let rho = state.load()?;
            let schedule = parse_steps(steps)?;
            let rows = with_threads(*threads, || step_size_profile(&rho, &schedule, *m4_limit))?;
            if let Some(last) = rows.last() {
                eprintln!(
                    "running minima at {}π: δ2 = {:.12}, δ3 = {:.12}",
                    last.step_over_pi, last.min2, last.min3
                );
            }
            let text = match format {
                Format::Json => json(&rows)?,
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_profile_csv(&rows, &mut buf)?;
                    String::from_utf8(buf).expect("CSV is ASCII")
                }
            };
            emit(out, &text)
        }
        Command::MdmsTransition {
            m,
            eps,
            threshold,
            search,
            out,
        } => {
            let cfg = search.config();
            let r = with_threads(search.threads, || {
                mdms_transition_search(*m, *eps, *threshold, &cfg)
            })?;
            eprintln!("{}", r.message);
            emit(out, &json(&r)?)
        }
        Command::EofBound {
            state,
            floor,
            no_polish,
            out,
        } => {
            let rho = state.load()?;
            let r = eof_two_element_bound(
                &rho,
                &StepSchedule::standard_with_floor(*floor)?,
                !no_polish,
            )?;
            eprintln!(
                "two-element bound = {:.12} (reconstruction residual {:e})",
                r.value, r.reconstruction_residual
            );
            emit(out, &json(&r)?)
        }
        Command::Validate { state, out } => {
            let m = if state.is_builtin() {
                builtin_state(&state.state, state.mdms_m, state.mdms_eps)?
                    .matrix()
                    .clone()
            } else {
                let f: StateFile = serde_json::from_str(&fs::read_to_string(&state.state)?)?;
                raw_matrix(&f)?
            };
            let report = validate(&m)?;
            emit(out, &json(&report)?)?;
            match report.failure() {
                Some(msg) => Err(Error::InvalidState(msg)),
                None => {
                    eprintln!(
                        "valid state of dimension {} and rank {}",
                        report.dim, report.rank
                    );
                    Ok(())
                }
            }
        }
        Command::Random {
            rank,
            dim,
            seed,
            out,
        } => {
            let rho = random_state(*rank, *dim, *seed)?;
            eprintln!("random state: dimension {dim}, rank {rank}, seed {seed}");
            emit(out, &(state_to_json(&rho) + "\n"))
        }
    }
}

/// The matrix of a state file, checked for shape only.
fn raw_matrix(f: &StateFile) -> Result<ComplexMatrix> {
    let d = f.dim;
    let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
    if d == 0 || !shape_ok(&f.re) || !shape_ok(&f.im) {
        return Err(Error::InvalidState(format!(
            "re/im arrays must both be {d}x{d}"
        )));
    }
    let m = ComplexMatrix::from_fn(d, d, |i, j| C64::new(f.re[i][j], f.im[i][j]));
    if !m.is_finite() {
        return Err(Error::InvalidState("matrix has non-finite entries".into()));
    }
    Ok(m)
}

/// Exit code for a finished invocation: 0 on success, 1 on any input or
/// computation failure.
pub fn exit_code(result: &Result<()>) -> u8 {
    match result {
        Ok(()) => 0,
        Err(_) => 1,
    }
}
