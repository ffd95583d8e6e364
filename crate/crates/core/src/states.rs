//! Density matrices: construction, validation, Bloch form, purification and
//! random generation.
//!
//! Basis ordering is `|00>, |01>, |10>, |11>` with party A as the major index.

use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigensystem, partial_trace, pauli, tensor_product, trace_out, ComplexMatrix, Party,
    C64, ONE, ZERO,
};
use crate::tolerance::TOL;

/// A Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "StateFile", try_from = "StateFile")]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

/// Result of checking a candidate density matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub dim: usize,
    pub hermiticity_residual: f64,
    pub trace_deviation: f64,
    pub min_eigenvalue: f64,
    pub rank: usize,
    pub eigenvalues: Vec<f64>,
    pub valid: bool,
}

impl ValidationReport {
    /// The first violated invariant, if any.
    pub fn failure(&self) -> Option<String> {
        if !self.hermiticity_residual.is_finite() {
            return Some("matrix has non-finite entries".into());
        }
        if self.hermiticity_residual > TOL.state_residual {
            return Some(format!(
                "hermiticity residual {:e} exceeds {:e}",
                self.hermiticity_residual, TOL.state_residual
            ));
        }
        if self.trace_deviation > TOL.state_residual {
            return Some(format!(
                "trace deviation {:e} exceeds {:e}",
                self.trace_deviation, TOL.state_residual
            ));
        }
        if self.min_eigenvalue < -TOL.psd_clamp {
            return Some(format!(
                "minimum eigenvalue {:e} is below {:e}",
                self.min_eigenvalue, -TOL.psd_clamp
            ));
        }
        None
    }
}

/// Checks Hermiticity, trace and positivity of a square matrix.
pub fn validate(m: &ComplexMatrix) -> Result<ValidationReport> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "state must be square, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Ok(ValidationReport {
            dim: m.rows(),
            hermiticity_residual: f64::NAN,
            trace_deviation: f64::NAN,
            min_eigenvalue: f64::NAN,
            rank: 0,
            eigenvalues: Vec::new(),
            valid: false,
        });
    }
    let eig = hermitian_eigensystem(m)?;
    let mut report = ValidationReport {
        dim: m.rows(),
        hermiticity_residual: m.hermiticity_residual(),
        trace_deviation: (m.trace() - ONE).norm(),
        min_eigenvalue: eig.values.last().copied().unwrap_or(0.0),
        rank: eig.rank_above(TOL.rank_threshold),
        eigenvalues: eig.values,
        valid: false,
    };
    report.valid = report.failure().is_none();
    Ok(report)
}

impl DensityMatrix {
    /// Validates `matrix` and wraps it.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let report = validate(&matrix)?;
        match report.failure() {
            Some(msg) => Err(Error::InvalidState(msg)),
            None => Ok(Self { matrix }),
        }
    }

    /// Wraps without validation; callers guarantee the invariants.
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::Domain("zero state vector".into()));
        }
        let v: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Ok(Self::from_trusted(ComplexMatrix::outer(&v)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_trusted(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn validate(&self) -> ValidationReport {
        validate(&self.matrix).expect("density matrices are square")
    }

    /// Numerical rank: eigenvalues above the rank threshold.
    pub fn rank(&self) -> usize {
        hermitian_eigensystem(&self.matrix)
            .expect("density matrices are square")
            .rank_above(TOL.rank_threshold)
    }

    pub fn entropy(&self) -> f64 {
        crate::linalg::von_neumann_entropy(&self.matrix).expect("density matrices are square")
    }

    /// Reduced state of one qubit of a two-qubit state.
    pub fn reduced(&self, keep: Party) -> Result<DensityMatrix> {
        Ok(Self::from_trusted(trace_out(&self.matrix, keep.other())?))
    }

    fn require_two_qubit(&self) -> Result<()> {
        if self.dim() != 4 {
            return Err(Error::Dimension(format!(
                "two-qubit state expected, got dimension {}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Exchanges the roles of A and B.
    pub fn swap_parties(&self) -> Result<DensityMatrix> {
        self.require_two_qubit()?;
        let perm = [0usize, 2, 1, 3];
        Ok(Self::from_trusted(ComplexMatrix::from_fn(4, 4, |i, j| {
            self.matrix[(perm[i], perm[j])]
        })))
    }

    /// `(U_A ⊗ U_B) ρ (U_A ⊗ U_B)†`.
    pub fn local_unitary(&self, ua: &ComplexMatrix, ub: &ComplexMatrix) -> Result<DensityMatrix> {
        let u = tensor_product(ua, ub);
        if u.rows() != self.dim() {
            return Err(Error::Dimension(
                "local unitary does not match state".into(),
            ));
        }
        let m = &(&u * &self.matrix) * &u.adjoint();
        Ok(Self::from_trusted(m.hermitian_part()))
    }

    /// Convex mixture `(1-w) self + w other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<DensityMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(
                "mixing states of different dimension".into(),
            ));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::Domain(format!("mixing weight {w} outside [0, 1]")));
        }
        Ok(Self::from_trusted(
            &self.matrix.scale_real(1.0 - w) + &other.matrix.scale_real(w),
        ))
    }
}

/// On-disk JSON layout: `{"dim": d, "re": [[..]], "im": [[..]]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<DensityMatrix> for StateFile {
    fn from(rho: DensityMatrix) -> Self {
        let d = rho.dim();
        let m = rho.matrix();
        StateFile {
            dim: d,
            re: (0..d)
                .map(|i| (0..d).map(|j| m[(i, j)].re).collect())
                .collect(),
            im: (0..d)
                .map(|i| (0..d).map(|j| m[(i, j)].im).collect())
                .collect(),
        }
    }
}

impl TryFrom<StateFile> for DensityMatrix {
    type Error = Error;
    fn try_from(f: StateFile) -> Result<Self> {
        let d = f.dim;
        if d == 0 {
            return Err(Error::InvalidState("dim must be positive".into()));
        }
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if !shape_ok(&f.re) || !shape_ok(&f.im) {
            return Err(Error::InvalidState(format!(
                "re/im arrays must both be {d}x{d}"
            )));
        }
        let m = ComplexMatrix::from_fn(d, d, |i, j| C64::new(f.re[i][j], f.im[i][j]));
        if !m.is_finite() {
            return Err(Error::InvalidState("matrix has non-finite entries".into()));
        }
        DensityMatrix::new(m)
    }
}

pub fn state_from_json(s: &str) -> Result<DensityMatrix> {
    let f: StateFile = serde_json::from_str(s)?;
    DensityMatrix::try_from(f)
}

pub fn state_to_json(rho: &DensityMatrix) -> String {
    serde_json::to_string_pretty(&StateFile::from(rho.clone())).expect("finite state serializes")
}

pub fn read_state(path: &Path) -> Result<DensityMatrix> {
    state_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_state(path: &Path, rho: &DensityMatrix) -> Result<()> {
    std::fs::write(path, state_to_json(rho) + "\n")?;
    Ok(())
}

/// Local Bloch vectors and correlation matrix of a two-qubit state:
/// `ρ = ¼(𝟙 + a·σ⊗𝟙 + 𝟙⊗b·σ + Σ T_ij σ_i⊗σ_j)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochForm {
    pub a: [f64; 3],
    pub b: [f64; 3],
    /// `T[i][j] = tr(ρ σ_i ⊗ σ_j)`, first index on A.
    pub t: [[f64; 3]; 3],
}

impl BlochForm {
    pub const CSV_HEADER: &'static str = "a1,a2,a3,b1,b2,b3,T11,T12,T13,T21,T22,T23,T31,T32,T33";

    pub fn to_csv_row(&self) -> String {
        let mut cols: Vec<String> = Vec::with_capacity(15);
        cols.extend(self.a.iter().map(|x| x.to_string()));
        cols.extend(self.b.iter().map(|x| x.to_string()));
        cols.extend(self.t.iter().flatten().map(|x| x.to_string()));
        cols.join(",")
    }

    /// True when the correlation matrix has no off-diagonal entries above `tol`.
    pub fn is_diagonal(&self, tol: f64) -> bool {
        (0..3).all(|i| (0..3).all(|j| i == j || self.t[i][j].abs() <= tol))
    }

    /// `(c_x, c_y, c_z)`, the diagonal of the correlation matrix.
    pub fn correlation_diagonal(&self) -> [f64; 3] {
        [self.t[0][0], self.t[1][1], self.t[2][2]]
    }
}

pub fn to_bloch(rho: &DensityMatrix) -> Result<BlochForm> {
    rho.require_two_qubit()?;
    let s = pauli();
    let id = ComplexMatrix::identity(2);
    let expect = |op: &ComplexMatrix| (rho.matrix() * op).trace().re;
    let mut form = BlochForm {
        a: [0.0; 3],
        b: [0.0; 3],
        t: [[0.0; 3]; 3],
    };
    for i in 0..3 {
        form.a[i] = expect(&tensor_product(&s[i], &id));
        form.b[i] = expect(&tensor_product(&id, &s[i]));
        for j in 0..3 {
            form.t[i][j] = expect(&tensor_product(&s[i], &s[j]));
        }
    }
    Ok(form)
}

/// Rebuilds the 4x4 matrix without checking positivity.
pub fn bloch_matrix(form: &BlochForm) -> ComplexMatrix {
    let s = pauli();
    let id = ComplexMatrix::identity(2);
    let mut m = ComplexMatrix::identity(4);
    for i in 0..3 {
        m = &m + &tensor_product(&s[i], &id).scale_real(form.a[i]);
        m = &m + &tensor_product(&id, &s[i]).scale_real(form.b[i]);
        for j in 0..3 {
            m = &m + &tensor_product(&s[i], &s[j]).scale_real(form.t[i][j]);
        }
    }
    m.scale_real(0.25)
}

pub fn from_bloch(form: &BlochForm) -> Result<DensityMatrix> {
    let m = bloch_matrix(form);
    let report = validate(&m)?;
    if report.min_eigenvalue < -TOL.psd_clamp {
        return Err(Error::NotPsd(report.min_eigenvalue));
    }
    Ok(DensityMatrix::from_trusted(m))
}

/// A pure state on a multipartite space, first factor most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct PureTripartite {
    pub dims: Vec<usize>,
    pub amplitudes: Vec<C64>,
}

impl PureTripartite {
    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Reduced density matrix on the factors listed in `keep`.
    pub fn reduced(&self, keep: &[usize]) -> Result<ComplexMatrix> {
        partial_trace(&ComplexMatrix::outer(&self.amplitudes), &self.dims, keep)
    }

    pub fn ancilla_dim(&self) -> usize {
        *self.dims.last().expect("at least one factor")
    }
}

/// Purifies `rho` as `Σ_i √λ_i |ψ_i> ⊗ |i>_C` over its nonzero eigenpairs.
///
/// `system_dims` factorizes the dimension of `rho`; the ancilla is appended
/// as the last factor with dimension equal to the numerical rank.
pub fn purify(rho: &DensityMatrix, system_dims: &[usize]) -> Result<PureTripartite> {
    if system_dims.iter().product::<usize>() != rho.dim() {
        return Err(Error::Dimension(format!(
            "{system_dims:?} does not factor dimension {}",
            rho.dim()
        )));
    }
    let eig = hermitian_eigensystem(rho.matrix())?;
    let rank = eig.rank_above(TOL.rank_threshold).max(1);
    let d = rho.dim();
    let mut amplitudes = vec![ZERO; d * rank];
    for c in 0..rank {
        let w = eig.values[c].max(0.0).sqrt();
        for s in 0..d {
            amplitudes[s * rank + c] = eig.vectors[(s, c)] * w;
        }
    }
    let mut dims = system_dims.to_vec();
    dims.push(rank);
    let mut psi = PureTripartite { dims, amplitudes };
    let n = psi.norm();
    psi.amplitudes.iter_mut().for_each(|z| *z /= n);
    Ok(psi)
}

/// `ρ_AC = tr_B(Σ_ij √(λ_i λ_j) |ψ_i><ψ_j| ⊗ |i><j|_C)` for a state of rank at most two.
///
/// The ancilla C is always a qubit; rank-one inputs leave C in `|0>`.
pub fn reduced_ac(rho_ab: &DensityMatrix) -> Result<DensityMatrix> {
    rho_ab.require_two_qubit()?;
    let eig = hermitian_eigensystem(rho_ab.matrix())?;
    let rank = eig.rank_above(TOL.rank_threshold);
    if rank > 2 {
        return Err(Error::Rank {
            found: rank,
            max: 2,
        });
    }
    let lambdas: Vec<f64> = (0..2)
        .map(|k| {
            if eig.values[k] > TOL.rank_threshold {
                eig.values[k]
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = lambdas.iter().sum();
    let mut amplitudes = vec![ZERO; 8];
    for c in 0..2 {
        let w = (lambdas[c] / total).sqrt();
        for s in 0..4 {
            amplitudes[s * 2 + c] = eig.vectors[(s, c)] * w;
        }
    }
    let psi = PureTripartite {
        dims: vec![2, 2, 2],
        amplitudes,
    };
    Ok(DensityMatrix::from_trusted(
        psi.reduced(&[0, 2])?.hermitian_part(),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

pub fn bell_vector(which: BellState) -> Vec<C64> {
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    match which {
        BellState::PhiPlus => vec![s, ZERO, ZERO, s],
        BellState::PhiMinus => vec![s, ZERO, ZERO, -s],
        BellState::PsiPlus => vec![ZERO, s, s, ZERO],
        BellState::PsiMinus => vec![ZERO, s, -s, ZERO],
    }
}

pub fn bell_state(which: BellState) -> DensityMatrix {
    DensityMatrix::from_trusted(ComplexMatrix::outer(&bell_vector(which)))
}

pub fn product_state(rho_a: &DensityMatrix, rho_b: &DensityMatrix) -> DensityMatrix {
    DensityMatrix::from_trusted(tensor_product(rho_a.matrix(), rho_b.matrix()))
}

/// `p|00><00| + (1-p)|11><11|`.
pub fn classical_correlated(p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(DensityMatrix::from_trusted(ComplexMatrix::diag_real(&[
        p,
        0.0,
        0.0,
        1.0 - p,
    ])))
}

/// Maximally discordant mixed state
/// `(1-ε)(m|00><00| + (1-m)|11><11|) + ε|Ψ⁻><Ψ⁻|`.
pub fn mdms_state(m: f64, eps: f64) -> Result<DensityMatrix> {
    let open = |x: f64| x > 0.0 && x < 1.0;
    if !open(m) || !open(eps) {
        return Err(Error::Domain(format!(
            "MDMS parameters must lie in (0, 1), got m={m}, eps={eps}"
        )));
    }
    let classical = classical_correlated(m)?;
    classical.mix(&bell_state(BellState::PsiMinus), eps)
}

/// `(1-λ) base + λ|Φ⁺><Φ⁺|`.
pub fn perturbed_mdms(base: &DensityMatrix, lambda: f64) -> Result<DensityMatrix> {
    base.require_two_qubit()?;
    base.mix(&bell_state(BellState::PhiPlus), lambda)
}

/// A fixed-rank random state `GG†/tr(GG†)` with `G` a `dim x rank` complex
/// Gaussian matrix.
pub fn random_state_with(rank: usize, dim: usize, rng: &mut impl Rng) -> Result<DensityMatrix> {
    if rank == 0 || rank > dim {
        return Err(Error::Domain(format!(
            "rank {rank} invalid for dimension {dim}"
        )));
    }
    let g = ComplexMatrix::from_fn(dim, rank, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let gg = &g * &g.adjoint();
    let tr = gg.trace().re;
    Ok(DensityMatrix::from_trusted(
        gg.scale_real(1.0 / tr).hermitian_part(),
    ))
}

/// Seeded variant of [`random_state_with`]; identical seeds give identical states.
pub fn random_state(rank: usize, dim: usize, seed: u64) -> Result<DensityMatrix> {
    random_state_with(rank, dim, &mut ChaCha20Rng::seed_from_u64(seed))
}

/// Haar-random unitary via Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        for u in &cols {
            let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= proj * y);
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-8 {
            cols.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    ComplexMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}
