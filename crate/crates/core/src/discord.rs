//! Quantum discord of two-qubit states, measured on B.
//!
//! States of rank at most two use the closed form through the concurrence of
//! the purification's `ρ_AC`. Otherwise the conditional entropy is minimized
//! over extremal POVMs with 2, 3 and 4 elements: an exhaustive angle grid per
//! step size, then a Nelder-Mead polish started from the best grid point of
//! every step.
//!
//! Grid ranges (step `Δ`, all angles multiples of `Δ`):
//!
//! * m = 2: `θ ∈ [0, π]`, `φ ∈ [0, 2π)`, a single `φ` at the poles.
//! * m = 3: plane normal `Θ ∈ [0, π/2]`, `Φ ∈ [0, 2π)`; in-plane offset
//!   `ψ ∈ [0, 2π)`; relative angles `0 < γ2 < γ3 < 2π`.
//! * m = 4: rotation `Ω ∈ [0, π]`, `Φ ∈ [0, 2π)`; the other three directions
//!   are an increasing triple drawn from the `(θ, φ)` grid without the north
//!   pole.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Party;
use crate::measures::{concurrence, eof_from_concurrence, BlochObjective};
use crate::optimize::NelderMead;
use crate::povm::{
    four_element, orthogonal_pair, planar_three, planar_weights, plane_basis, rotate, rotation,
    tetrahedral_weights, unit_vector, ExtremalPovm, Vec3,
};
use crate::states::{reduced_ac, to_bloch, DensityMatrix};
use crate::tolerance::TOL;

/// Default step sizes in units of π.
pub const STANDARD_STEPS: [f64; 7] = [0.3, 0.25, 0.2, 0.15, 0.1, 0.05, 0.03];

/// Finest step (in units of π) accepted by the four-element grid.
pub const MIN_STEP_M4: f64 = 0.1;

const GRID_EPS: f64 = 1e-9;

/// Angular step sizes `Δθ = Δφ` in radians, strictly decreasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct StepSchedule {
    steps: Vec<f64>,
}

impl TryFrom<Vec<f64>> for StepSchedule {
    type Error = Error;
    fn try_from(steps: Vec<f64>) -> Result<Self> {
        Self::new(steps)
    }
}

impl From<StepSchedule> for Vec<f64> {
    fn from(s: StepSchedule) -> Self {
        s.steps
    }
}

impl StepSchedule {
    pub fn new(steps: Vec<f64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Domain("empty step schedule".into()));
        }
        if steps.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Domain("step sizes must be positive".into()));
        }
        if steps.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Domain(
                "step sizes must be strictly decreasing".into(),
            ));
        }
        Ok(Self { steps })
    }

    /// Steps given in units of π.
    pub fn from_pi_units(steps: &[f64]) -> Result<Self> {
        Self::new(steps.iter().map(|s| s * PI).collect())
    }

    /// The standard steps down to `floor` (units of π); `floor` itself is
    /// appended when it is not one of them.
    pub fn standard_with_floor(floor: f64) -> Result<Self> {
        if !(floor.is_finite() && floor > 0.0) {
            return Err(Error::Domain(format!(
                "step floor {floor} must be positive"
            )));
        }
        let mut steps: Vec<f64> = STANDARD_STEPS
            .iter()
            .copied()
            .filter(|&s| s > floor + 1e-12)
            .collect();
        steps.push(floor);
        Self::from_pi_units(&steps)
    }

    pub fn standard() -> Self {
        Self::from_pi_units(&STANDARD_STEPS).expect("standard steps are valid")
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn steps_over_pi(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s / PI).collect()
    }

    /// The smallest step, `w`.
    pub fn floor(&self) -> f64 {
        *self.steps.last().expect("schedules are non-empty")
    }

    /// The schedule with one extra, finer step.
    pub fn refined(&self, step: f64) -> Result<Self> {
        let mut steps = self.steps.clone();
        steps.push(step);
        Self::new(steps)
    }
}

/// Grid floors (units of π) per element count, plus the polish switch and
/// the measured party.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub floor2: f64,
    pub floor3: f64,
    pub floor4: f64,
    pub polish: bool,
    pub party: Party,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            floor2: 0.03,
            floor3: 0.1,
            floor4: 0.15,
            polish: true,
            party: Party::B,
        }
    }
}

impl SearchConfig {
    pub fn schedule(&self, m: usize) -> Result<StepSchedule> {
        match m {
            2 => StepSchedule::standard_with_floor(self.floor2),
            3 => StepSchedule::standard_with_floor(self.floor3),
            4 => StepSchedule::standard_with_floor(self.floor4),
            _ => Err(Error::Domain(format!("element count {m} not in 2..=4"))),
        }
    }
}

/// Best grid value found at one step size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepValue {
    pub step_over_pi: f64,
    pub conditional_entropy: f64,
    pub evaluations: u64,
}

/// How a numerical minimum was reached.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub steps: Vec<StepValue>,
    /// Best conditional entropy over all grid points.
    pub grid_minimum: f64,
    pub polished: bool,
    pub polish_evaluations: usize,
    /// Angle parameters of the returned POVM.
    pub parameters: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscordResult {
    /// `δ = S_B - S_AB + conditional_entropy`, bits.
    pub value: f64,
    /// Element count of the minimizing POVM (2 for the analytic path).
    pub m: usize,
    pub analytic: bool,
    pub measured_party: Party,
    pub optimal_povm: Option<ExtremalPovm>,
    pub conditional_entropy: f64,
    /// Entropy of the unmeasured party.
    pub entropy_a: f64,
    /// Entropy of the measured party.
    pub entropy_b: f64,
    pub entropy_ab: f64,
    pub mutual_information: f64,
    pub classical_correlation: f64,
    pub search: Option<SearchReport>,
}

struct Entropies {
    a: f64,
    b: f64,
    ab: f64,
}

fn prepare(rho: &DensityMatrix, party: Party) -> Result<DensityMatrix> {
    if rho.dim() != 4 {
        return Err(Error::Dimension(format!(
            "discord needs a two-qubit state, got dimension {}",
            rho.dim()
        )));
    }
    match party {
        Party::B => Ok(rho.clone()),
        Party::A => rho.swap_parties(),
    }
}

fn entropies(rho: &DensityMatrix) -> Result<Entropies> {
    Ok(Entropies {
        a: rho.reduced(Party::A)?.entropy(),
        b: rho.reduced(Party::B)?.entropy(),
        ab: rho.entropy(),
    })
}

fn assemble(
    s: &Entropies,
    conditional_entropy: f64,
    m: usize,
    party: Party,
    optimal_povm: Option<ExtremalPovm>,
    search: Option<SearchReport>,
) -> DiscordResult {
    DiscordResult {
        value: s.b - s.ab + conditional_entropy,
        m,
        analytic: search.is_none(),
        measured_party: party,
        optimal_povm,
        conditional_entropy,
        entropy_a: s.a,
        entropy_b: s.b,
        entropy_ab: s.ab,
        mutual_information: s.a + s.b - s.ab,
        classical_correlation: s.a - conditional_entropy,
        search,
    }
}

/// Closed-form discord of a state of rank at most two, measured on B.
pub fn discord_rank2_exact(rho: &DensityMatrix) -> Result<DiscordResult> {
    rank2_exact_on(rho, Party::B)
}

fn rank2_exact_on(rho: &DensityMatrix, party: Party) -> Result<DiscordResult> {
    let rho = prepare(rho, party)?;
    let rank = rho.rank();
    if rank > 2 {
        return Err(Error::Rank {
            found: rank,
            max: 2,
        });
    }
    let s = entropies(&rho)?;
    let c = concurrence(&reduced_ac(&rho)?)?;
    let cond = eof_from_concurrence(c)?;
    Ok(assemble(&s, cond, 2, party, None, None))
}

/// A grid minimum: conditional entropy and the angle parameters attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub value: f64,
    pub params: Vec<f64>,
    pub evaluations: u64,
}

fn closed_count(range: f64, step: f64) -> usize {
    (range / step + GRID_EPS).floor() as usize + 1
}

fn open_count(range: f64, step: f64) -> usize {
    (range / step - GRID_EPS).ceil() as usize
}

fn is_pole(theta: f64) -> bool {
    theta.abs() < GRID_EPS || (theta - PI).abs() < GRID_EPS
}

/// Feasible `(γ2, γ3)` index pairs and their weights for one step.
struct PlanarTable {
    samples: usize,
    pairs: Vec<(usize, usize, [f64; 3])>,
}

/// Directions and feasible triples for one step of the four-element grid.
struct TetraTable {
    angles: Vec<(f64, f64)>,
    dirs: Vec<Vec3>,
    triples: Vec<([u32; 3], [f64; 4])>,
}

fn cached<T: Send + Sync + 'static>(
    cache: &'static OnceLock<Mutex<HashMap<u64, Arc<T>>>>,
    step: f64,
    build: impl FnOnce() -> T,
) -> Arc<T> {
    let map = cache.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = map.lock().expect("cache lock").get(&step.to_bits()) {
        return t.clone();
    }
    let t = Arc::new(build());
    map.lock()
        .expect("cache lock")
        .entry(step.to_bits())
        .or_insert(t)
        .clone()
}

fn planar_table(step: f64) -> Arc<PlanarTable> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<PlanarTable>>>> = OnceLock::new();
    cached(&CACHE, step, || {
        let samples = open_count(2.0 * PI, step);
        let mut pairs = Vec::new();
        for a in 1..samples {
            for b in a + 1..samples {
                if let Ok(w) = planar_weights([0.0, a as f64 * step, b as f64 * step]) {
                    pairs.push((a, b, w));
                }
            }
        }
        PlanarTable { samples, pairs }
    })
}

fn tetra_table(step: f64) -> Arc<TetraTable> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<TetraTable>>>> = OnceLock::new();
    cached(&CACHE, step, || {
        let mut angles = Vec::new();
        for i in 1..closed_count(PI, step) {
            let theta = i as f64 * step;
            let nphi = if is_pole(theta) {
                1
            } else {
                open_count(2.0 * PI, step)
            };
            for j in 0..nphi {
                angles.push((theta, j as f64 * step));
            }
        }
        let dirs: Vec<Vec3> = angles.iter().map(|&(t, p)| unit_vector(t, p)).collect();
        let n = dirs.len();
        let z = [0.0, 0.0, 1.0];
        let triples = (0..n)
            .into_par_iter()
            .flat_map_iter(|j| {
                let dirs = &dirs;
                (j + 1..n).flat_map(move |k| {
                    (k + 1..n).filter_map(move |l| {
                        tetrahedral_weights(&[z, dirs[j], dirs[k], dirs[l]])
                            .ok()
                            .map(|w| ([j as u32, k as u32, l as u32], w))
                    })
                })
            })
            .collect();
        TetraTable {
            angles,
            dirs,
            triples,
        }
    })
}

/// Keeps the first strict minimum of a sequence of `(value, index)` candidates.
fn first_min<T>(items: impl IntoIterator<Item = Option<(f64, T)>>) -> Option<(f64, T)> {
    let mut best: Option<(f64, T)> = None;
    for (v, t) in items.into_iter().flatten() {
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, t));
        }
    }
    best
}

fn grid_m2(obj: &BlochObjective, step: f64) -> GridPoint {
    let mut best = (f64::INFINITY, vec![0.0, 0.0]);
    let mut evaluations = 0;
    for i in 0..closed_count(PI, step) {
        let theta = i as f64 * step;
        let nphi = if is_pole(theta) {
            1
        } else {
            open_count(2.0 * PI, step)
        };
        for j in 0..nphi {
            let phi = j as f64 * step;
            let n = unit_vector(theta, phi);
            let v = 0.5 * (obj.direction_cost(&n) + obj.direction_cost(&[-n[0], -n[1], -n[2]]));
            evaluations += 1;
            if v < best.0 {
                best = (v, vec![theta, phi]);
            }
        }
    }
    GridPoint {
        value: best.0,
        params: best.1,
        evaluations,
    }
}

fn grid_m3(obj: &BlochObjective, step: f64) -> GridPoint {
    let table = planar_table(step);
    let mut planes = Vec::new();
    for i in 0..closed_count(PI / 2.0, step) {
        let theta = i as f64 * step;
        let nphi = if i == 0 {
            1
        } else {
            open_count(2.0 * PI, step)
        };
        for j in 0..nphi {
            planes.push((theta, j as f64 * step));
        }
    }
    let ns = table.samples;
    let per_plane: Vec<Option<(f64, (usize, usize))>> = planes
        .par_iter()
        .map(|&(theta, phi)| {
            let (e1, e2) = plane_basis(theta, phi);
            let costs: Vec<f64> = (0..2 * ns)
                .map(|k| {
                    let (s, c) = (k as f64 * step).sin_cos();
                    obj.direction_cost(&[
                        c * e1[0] + s * e2[0],
                        c * e1[1] + s * e2[1],
                        c * e1[2] + s * e2[2],
                    ])
                })
                .collect();
            first_min((0..ns).flat_map(|psi| {
                let costs = &costs;
                table.pairs.iter().enumerate().map(move |(p, &(a, b, w))| {
                    let v = w[0] * costs[psi] + w[1] * costs[psi + a] + w[2] * costs[psi + b];
                    Some((v, (psi, p)))
                })
            }))
        })
        .collect();
    let evaluations = (planes.len() * ns * table.pairs.len()) as u64;
    match first_min(
        per_plane
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.map(|(v, t)| (v, (i, t)))),
    ) {
        Some((value, (plane, (psi, p)))) => {
            let (a, b, _) = table.pairs[p];
            GridPoint {
                value,
                params: vec![
                    planes[plane].0,
                    planes[plane].1,
                    psi as f64 * step,
                    a as f64 * step,
                    b as f64 * step,
                ],
                evaluations,
            }
        }
        None => GridPoint {
            value: f64::INFINITY,
            params: Vec::new(),
            evaluations,
        },
    }
}

fn grid_m4(obj: &BlochObjective, step: f64) -> Result<GridPoint> {
    if step < MIN_STEP_M4 * PI - 1e-12 {
        return Err(Error::Domain(format!(
            "four-element grid step {:.4}π is below the supported {MIN_STEP_M4}π",
            step / PI
        )));
    }
    let table = tetra_table(step);
    let mut rotations = Vec::new();
    for i in 0..closed_count(PI, step) {
        for j in 0..open_count(2.0 * PI, step) {
            rotations.push((i as f64 * step, j as f64 * step));
        }
    }
    let per_rotation: Vec<Option<(f64, usize)>> = rotations
        .par_iter()
        .map(|&(omega, phi)| {
            let r = rotation(omega, phi);
            let c1 = obj.direction_cost(&rotate(&r, &[0.0, 0.0, 1.0]));
            let costs: Vec<f64> = table
                .dirs
                .iter()
                .map(|d| obj.direction_cost(&rotate(&r, d)))
                .collect();
            first_min(table.triples.iter().enumerate().map(|(t, (idx, w))| {
                let v = w[0] * c1
                    + w[1] * costs[idx[0] as usize]
                    + w[2] * costs[idx[1] as usize]
                    + w[3] * costs[idx[2] as usize];
                Some((v, t))
            }))
        })
        .collect();
    let evaluations = (rotations.len() * table.triples.len()) as u64;
    Ok(
        match first_min(
            per_rotation
                .into_iter()
                .enumerate()
                .map(|(i, r)| r.map(|(v, t)| (v, (i, t)))),
        ) {
            Some((value, (rot, t))) => {
                let (omega, phi) = rotations[rot];
                let mut params = vec![omega, phi];
                for &d in &table.triples[t].0 {
                    let (th, ph) = table.angles[d as usize];
                    params.extend([th, ph]);
                }
                GridPoint {
                    value,
                    params,
                    evaluations,
                }
            }
            None => GridPoint {
                value: f64::INFINITY,
                params: Vec::new(),
                evaluations,
            },
        },
    )
}

/// Exhaustive grid minimum of the conditional entropy at one step size.
pub fn grid_minimum(rho: &DensityMatrix, m: usize, step: f64) -> Result<GridPoint> {
    let obj = BlochObjective::new(&to_bloch(rho)?);
    grid_with(&obj, m, step)
}

fn grid_with(obj: &BlochObjective, m: usize, step: f64) -> Result<GridPoint> {
    match m {
        2 => Ok(grid_m2(obj, step)),
        3 => Ok(grid_m3(obj, step)),
        4 => grid_m4(obj, step),
        _ => Err(Error::Domain(format!("element count {m} not in 2..=4"))),
    }
}

/// The POVM described by a parameter vector of the `m`-element family.
pub fn povm_from_params(m: usize, x: &[f64]) -> Option<ExtremalPovm> {
    match (m, x.len()) {
        (2, 2) => Some(orthogonal_pair(x[0], x[1])),
        (3, 5) => planar_three(x[0], x[1], x[2], x[3], x[4]).ok(),
        (4, 8) => four_element(x[0], x[1], [x[2], x[3], x[4], x[5], x[6], x[7]]).ok(),
        _ => None,
    }
}

/// Minimizes the conditional entropy over `m`-element extremal POVMs.
pub fn discord_minimize(
    rho: &DensityMatrix,
    m: usize,
    schedule: &StepSchedule,
    polish: bool,
) -> Result<DiscordResult> {
    minimize_on(rho, m, schedule, polish, Party::B)
}

/// [`discord_minimize`] with the schedule, polish flag and measured party
/// taken from `cfg`.
pub fn discord_minimize_with(
    rho: &DensityMatrix,
    m: usize,
    cfg: &SearchConfig,
) -> Result<DiscordResult> {
    minimize_on(rho, m, &cfg.schedule(m)?, cfg.polish, cfg.party)
}

fn minimize_on(
    rho: &DensityMatrix,
    m: usize,
    schedule: &StepSchedule,
    polish: bool,
    party: Party,
) -> Result<DiscordResult> {
    let rho = prepare(rho, party)?;
    let s = entropies(&rho)?;
    let obj = BlochObjective::new(&to_bloch(&rho)?);

    let mut steps = Vec::with_capacity(schedule.steps().len());
    let mut starts: Vec<(f64, GridPoint)> = Vec::new();
    for &step in schedule.steps() {
        let g = grid_with(&obj, m, step)?;
        steps.push(StepValue {
            step_over_pi: step / PI,
            conditional_entropy: g.value,
            evaluations: g.evaluations,
        });
        if g.value.is_finite() {
            starts.push((step, g));
        }
    }
    let grid_best = first_min(starts.iter().map(|(_, g)| Some((g.value, g))))
        .map(|(_, g)| g.clone())
        .ok_or_else(|| Error::Domain(format!("no feasible {m}-element POVM on the grid")))?;

    let objective = |x: &[f64]| match povm_from_params(m, x) {
        Some(p) => obj.value(&p),
        None => f64::INFINITY,
    };
    let mut best = (grid_best.value, grid_best.params.clone());
    let mut polish_evaluations = 0;
    if polish {
        // Each start is polished at the scale of its own grid, so appending a
        // step only adds candidates.
        for (step, start) in &starts {
            let r = NelderMead::default()
                .with_step(0.5 * step)
                .minimize(objective, &start.params);
            polish_evaluations += r.evaluations;
            if r.value < best.0 {
                best = (r.value, r.x);
            }
        }
    }
    let povm = povm_from_params(m, &best.1).expect("minimum is feasible");
    let cond = obj.value(&povm);
    let report = SearchReport {
        steps,
        grid_minimum: grid_best.value,
        polished: polish,
        polish_evaluations,
        parameters: best.1,
    };
    Ok(assemble(&s, cond, m, party, Some(povm), Some(report)))
}

/// Discord of a two-qubit state: the closed form at rank at most two, else
/// the smallest of the 2-, 3- and 4-element minima.
pub fn discord(rho: &DensityMatrix, cfg: &SearchConfig) -> Result<DiscordResult> {
    let measured = prepare(rho, cfg.party)?;
    if measured.rank() <= 2 {
        return rank2_exact_on(rho, cfg.party);
    }
    let mut best: Option<DiscordResult> = None;
    for m in 2..=4 {
        let r = minimize_on(rho, m, &cfg.schedule(m)?, cfg.polish, cfg.party)?;
        if best
            .as_ref()
            .is_none_or(|b| r.value < b.value - TOL.tie_break)
        {
            best = Some(r);
        }
    }
    Ok(best.expect("three candidates"))
}

/// `δ₂ - δ₃` and `δ₂ - δ₄`, all three minima taken numerically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub delta2: f64,
    pub delta3: f64,
    pub delta4: f64,
    pub raw3: f64,
    pub raw4: f64,
    /// `raw3` when above the threshold, otherwise zero.
    pub dev3: f64,
    pub dev4: f64,
    pub threshold: f64,
    pub schedules: [Vec<f64>; 3],
}

pub fn deviation(rho: &DensityMatrix, cfg: &SearchConfig, threshold: f64) -> Result<Deviation> {
    let mut deltas = [0.0; 3];
    let mut schedules: [Vec<f64>; 3] = Default::default();
    for (k, m) in (2..=4).enumerate() {
        let schedule = cfg.schedule(m)?;
        deltas[k] = minimize_on(rho, m, &schedule, cfg.polish, cfg.party)?.value;
        schedules[k] = schedule.steps_over_pi();
    }
    let raw3 = deltas[0] - deltas[1];
    let raw4 = deltas[0] - deltas[2];
    let event = |d: f64| if d > threshold { d } else { 0.0 };
    Ok(Deviation {
        delta2: deltas[0],
        delta3: deltas[1],
        delta4: deltas[2],
        raw3,
        raw4,
        dev3: event(raw3),
        dev4: event(raw4),
        threshold,
        schedules,
    })
}
