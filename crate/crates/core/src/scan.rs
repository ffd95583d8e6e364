//! Random-state deviation scans, step-size profiles and the MDMS perturbation
//! transition.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discord::{deviation, discord_minimize, grid_minimum, SearchConfig, StepSchedule};
use crate::error::{Error, Result};
use crate::linalg::Party;
use crate::states::{mdms_state, perturbed_mdms, random_state, DensityMatrix};
use crate::tolerance::TOL;

/// Rank of the sampled states: a fixed value or alternating 3 and 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RankSpec {
    Fixed(usize),
    Named(RankName),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankName {
    Mixed,
}

impl RankSpec {
    /// Rank of state `index`; mixed scans use 3 for even and 4 for odd indices.
    pub fn rank_of(&self, index: usize) -> usize {
        match self {
            RankSpec::Fixed(r) => *r,
            RankSpec::Named(RankName::Mixed) => 3 + index % 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    pub samples: usize,
    pub rank: RankSpec,
    /// Grid floors in units of π.
    pub floor2: f64,
    pub floor3: f64,
    pub floor4: f64,
    pub polish: bool,
    pub threshold: f64,
    pub seed: u64,
    /// Worker count; 0 uses every available core.
    pub threads: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let search = SearchConfig::default();
        Self {
            samples: 500,
            rank: RankSpec::Fixed(3),
            floor2: search.floor2,
            floor3: search.floor3,
            floor4: search.floor4,
            polish: true,
            threshold: TOL.deviation_threshold,
            seed: 1,
            threads: 0,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Domain("scan needs at least one sample".into()));
        }
        if let RankSpec::Fixed(r) = self.rank {
            if !(1..=4).contains(&r) {
                return Err(Error::Domain(format!("rank {r} not in 1..=4")));
            }
        }
        if !(self.threshold >= 0.0) {
            return Err(Error::Domain("threshold must be non-negative".into()));
        }
        for m in 2..=4 {
            self.search().schedule(m)?;
        }
        Ok(())
    }

    pub fn search(&self) -> SearchConfig {
        SearchConfig {
            floor2: self.floor2,
            floor3: self.floor3,
            floor4: self.floor4,
            polish: self.polish,
            party: Party::B,
        }
    }

    /// Seed of state `index`.
    pub fn state_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(index as u64)
    }
}

/// One scanned state. `dev3`/`dev4` are the raw differences `δ₂ - δ₃(4)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub state_index: usize,
    pub seed: u64,
    pub rank: usize,
    pub delta2: f64,
    pub delta3: f64,
    pub delta4: f64,
    pub dev3: f64,
    pub dev4: f64,
}

/// Abundance and moments of the deviations above the threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationStats {
    pub deviant: usize,
    /// Fraction of states with deviation above the threshold.
    pub p: f64,
    /// Mean deviation over deviant states.
    pub mean: Option<f64>,
    /// Population standard deviation over deviant states.
    pub sigma: Option<f64>,
    pub max: Option<f64>,
}

impl DeviationStats {
    pub fn from_values(
        values: impl IntoIterator<Item = f64>,
        total: usize,
        threshold: f64,
    ) -> Self {
        let hits: Vec<f64> = values.into_iter().filter(|&d| d > threshold).collect();
        let k = hits.len();
        let (mean, sigma, max) = if k == 0 {
            (None, None, None)
        } else {
            let mean = hits.iter().sum::<f64>() / k as f64;
            let var = hits.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / k as f64;
            let max = hits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (Some(mean), Some(var.sqrt()), Some(max))
        };
        Self {
            deviant: k,
            p: k as f64 / total as f64,
            mean,
            sigma,
            max,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub config: ScanConfig,
    pub dev3: DeviationStats,
    pub dev4: DeviationStats,
    pub records: Vec<ScanRecord>,
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn scan_record(cfg: &ScanConfig, index: usize) -> Result<ScanRecord> {
    let seed = cfg.state_seed(index);
    let rank = cfg.rank.rank_of(index);
    let fail = |e: Error| Error::Domain(format!("state {index} (seed {seed}) failed: {e}"));
    let rho = random_state(rank, 4, seed).map_err(fail)?;
    let d = deviation(&rho, &cfg.search(), cfg.threshold).map_err(fail)?;
    Ok(ScanRecord {
        state_index: index,
        seed,
        rank,
        delta2: d.delta2,
        delta3: d.delta3,
        delta4: d.delta4,
        dev3: d.raw3,
        dev4: d.raw4,
    })
}

pub fn run_scan(cfg: &ScanConfig) -> Result<ScanSummary> {
    cfg.validate()?;
    let records = with_pool(cfg.threads, || {
        (0..cfg.samples)
            .into_par_iter()
            .map(|i| scan_record(cfg, i))
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(summarize(cfg, records))
}

pub fn summarize(cfg: &ScanConfig, records: Vec<ScanRecord>) -> ScanSummary {
    let n = records.len();
    ScanSummary {
        config: cfg.clone(),
        dev3: DeviationStats::from_values(records.iter().map(|r| r.dev3), n, cfg.threshold),
        dev4: DeviationStats::from_values(records.iter().map(|r| r.dev4), n, cfg.threshold),
        records,
    }
}

pub const CSV_HEADER: &str = "state_index,seed,rank,delta2,delta3,delta4,dev3,dev4";

pub fn write_csv(records: &[ScanRecord], mut out: impl Write) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{:?},{:?},{:?},{:?},{:?}",
            r.state_index, r.seed, r.rank, r.delta2, r.delta3, r.delta4, r.dev3, r.dev4
        )?;
    }
    Ok(())
}

pub fn read_csv(input: impl BufRead) -> Result<Vec<ScanRecord>> {
    let bad = |line: usize, what: &str| Error::Domain(format!("scan CSV line {line}: {what}"));
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != CSV_HEADER {
        return Err(bad(1, "missing header"));
    }
    let mut records = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 8 {
            return Err(bad(k + 2, "expected 8 fields"));
        }
        let int = |s: &str| s.parse::<u64>().map_err(|_| bad(k + 2, "bad integer"));
        let real = |s: &str| s.parse::<f64>().map_err(|_| bad(k + 2, "bad number"));
        records.push(ScanRecord {
            state_index: int(f[0])? as usize,
            seed: int(f[1])?,
            rank: int(f[2])? as usize,
            delta2: real(f[3])?,
            delta3: real(f[4])?,
            delta4: real(f[5])?,
            dev3: real(f[6])?,
            dev4: real(f[7])?,
        });
    }
    Ok(records)
}

/// Grid-only discord at one step, with running minima over the box
/// `[step, 0.25π]` (or just this step when it is coarser than 0.25π).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub step_over_pi: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub delta4: Option<f64>,
    pub min2: f64,
    pub min3: f64,
    pub min4: Option<f64>,
}

/// Default coarsest step at which the four-element grid stops (units of π).
pub const PROFILE_M4_LIMIT: f64 = 0.18;

/// Per-step grid discord for m = 2, 3, 4 without polish. The four-element
/// grid only runs for steps at or above `m4_limit` (units of π).
pub fn step_size_profile(
    rho: &DensityMatrix,
    steps: &StepSchedule,
    m4_limit: f64,
) -> Result<Vec<ProfileRow>> {
    let base = discord_minimize(rho, 2, &StepSchedule::new(vec![PI])?, false)?;
    let offset = base.entropy_b - base.entropy_ab;
    let mut rows: Vec<ProfileRow> = Vec::new();
    let box_top = 0.25 * PI + 1e-12;
    let mut raw: Vec<(f64, f64, f64, Option<f64>)> = Vec::new();
    for &step in steps.steps() {
        let d2 = offset + grid_minimum(rho, 2, step)?.value;
        let d3 = offset + grid_minimum(rho, 3, step)?.value;
        let d4 = if step >= m4_limit * PI - 1e-12 {
            Some(offset + grid_minimum(rho, 4, step)?.value)
        } else {
            None
        };
        raw.push((step, d2, d3, d4));
        let in_box: Vec<_> = raw
            .iter()
            .filter(|r| r.0 <= box_top || r.0 == step)
            .collect();
        let min_of = |f: &dyn Fn(&(f64, f64, f64, Option<f64>)) -> Option<f64>| {
            in_box
                .iter()
                .filter_map(|r| f(r))
                .fold(None, |a: Option<f64>, v| Some(a.map_or(v, |a| a.min(v))))
        };
        rows.push(ProfileRow {
            step_over_pi: step / PI,
            delta2: d2,
            delta3: d3,
            delta4: d4,
            min2: min_of(&|r| Some(r.1)).expect("current row is in the box"),
            min3: min_of(&|r| Some(r.2)).expect("current row is in the box"),
            min4: min_of(&|r| r.3),
        });
    }
    Ok(rows)
}

pub const PROFILE_CSV_HEADER: &str = "step_over_pi,delta2,delta3,delta4,min2,min3,min4";

pub fn write_profile_csv(rows: &[ProfileRow], mut out: impl Write) -> Result<()> {
    writeln!(out, "{PROFILE_CSV_HEADER}")?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    for r in rows {
        writeln!(
            out,
            "{:?},{:?},{:?},{},{:?},{:?},{}",
            r.step_over_pi,
            r.delta2,
            r.delta3,
            opt(r.delta4),
            r.min2,
            r.min3,
            opt(r.min4)
        )?;
    }
    Ok(())
}

/// Outcome of the search for the largest perturbation that keeps `Δ₃` above
/// the threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub m: f64,
    pub eps: f64,
    pub threshold: f64,
    /// `None` when the unperturbed state shows no deviation.
    pub lambda_star: Option<f64>,
    /// Final bracket `(deviant, not deviant)`.
    pub bracket: Option<(f64, f64)>,
    /// `(λ, Δ₃)` on the initial sweep.
    pub sweep: Vec<(f64, f64)>,
    pub message: String,
}

pub const TRANSITION_RANGE: f64 = 0.05;
pub const TRANSITION_SWEEP: usize = 50;
pub const TRANSITION_TOL: f64 = 1e-4;

/// `δ₂ - δ₃` of the MDMS state perturbed by `λ`.
pub fn mdms_deviation3(m: f64, eps: f64, lambda: f64, cfg: &SearchConfig) -> Result<f64> {
    let rho = perturbed_mdms(&mdms_state(m, eps)?, lambda)?;
    let d2 = discord_minimize(&rho, 2, &cfg.schedule(2)?, cfg.polish)?.value;
    let d3 = discord_minimize(&rho, 3, &cfg.schedule(3)?, cfg.polish)?.value;
    Ok(d2 - d3)
}

/// Largest `λ ∈ [0, 0.05]` with `Δ₃(λ) > threshold`, bracketing the last sign
/// change of a 50-point sweep and bisecting to `1e-4`.
pub fn mdms_transition_search(
    m: f64,
    eps: f64,
    threshold: f64,
    cfg: &SearchConfig,
) -> Result<TransitionReport> {
    mdms_state(m, eps)?;
    let dev = |lambda: f64| mdms_deviation3(m, eps, lambda, cfg);
    let sweep: Vec<(f64, f64)> = (0..TRANSITION_SWEEP)
        .map(|k| {
            let lambda = TRANSITION_RANGE * k as f64 / (TRANSITION_SWEEP - 1) as f64;
            dev(lambda).map(|d| (lambda, d))
        })
        .collect::<Result<_>>()?;
    let mut report = TransitionReport {
        m,
        eps,
        threshold,
        lambda_star: None,
        bracket: None,
        sweep,
        message: String::new(),
    };
    if !(report.sweep[0].1 > threshold) {
        report.message = "no deviation at λ=0".into();
        return Ok(report);
    }
    let last = report
        .sweep
        .iter()
        .rposition(|&(_, d)| d > threshold)
        .expect("λ=0 is deviant");
    if last + 1 == report.sweep.len() {
        report.lambda_star = Some(TRANSITION_RANGE);
        report.message = "deviation persists over the whole range".into();
        return Ok(report);
    }
    let (mut lo, mut hi) = (report.sweep[last].0, report.sweep[last + 1].0);
    while hi - lo > TRANSITION_TOL {
        let mid = 0.5 * (lo + hi);
        if dev(mid)? > threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    report.lambda_star = Some(lo);
    report.bracket = Some((lo, hi));
    report.message = format!("transition at λ* = {lo:.6}");
    Ok(report)
}
