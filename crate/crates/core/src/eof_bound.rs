//! Two-element upper bound on the entanglement of formation of rank-2 states
//! of a qubit B and a qudit C.
//!
//! A rank-2 `ρ_BC = λ1|ψ1><ψ1| + λ2|ψ2><ψ2|` is purified by a qubit A as
//! `Σ_i √λ_i |i>_A|ψ_i>`. An orthogonal measurement on A along `(θ, φ)` with
//! outcome vectors `|e_k>` leaves BC in `|φ_k> ∝ Σ_i <e_k|i> √λ_i |ψ_i>`, and
//! `Σ_k p_k |φ_k><φ_k| = ρ_BC` for every direction. The bound is the smallest
//! average marginal entropy `Σ_k p_k S(ρ_B^k)` over directions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::discord::StepSchedule;
use crate::error::{Error, Result};
use crate::linalg::{h2, hermitian_eigensystem, ComplexMatrix, C64, ZERO};
use crate::measures::pure_state_entanglement;
use crate::optimize::NelderMead;
use crate::states::DensityMatrix;
use crate::tolerance::TOL;

/// Largest qudit dimension accepted for C.
pub const MAX_QUDIT: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoElementDecomposition {
    /// Dimension of C.
    pub qudit_dim: usize,
    pub probabilities: [f64; 2],
    /// Unit vectors on B⊗C, B first.
    pub states: [Vec<C64>; 2],
    /// Marginal entropy of each element, bits.
    pub entanglements: [f64; 2],
    /// `Σ p_k E(|φ_k>)`.
    pub average: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EofBound {
    pub value: f64,
    /// Measurement direction `(θ, φ)` on the purifying qubit.
    pub angles: [f64; 2],
    pub decomposition: TwoElementDecomposition,
    /// Max-abs difference between the recombined decomposition and `ρ_BC`.
    pub reconstruction_residual: f64,
    pub steps_over_pi: Vec<f64>,
    pub polish_evaluations: usize,
}

/// Eigen-data of a rank-2 state: `√λ_i |ψ_i>`.
struct Rank2 {
    n: usize,
    weighted: [Vec<C64>; 2],
}

fn rank2_parts(rho: &DensityMatrix) -> Result<Rank2> {
    let dim = rho.dim();
    if !dim.is_multiple_of(2) || dim < 4 || dim / 2 > MAX_QUDIT {
        return Err(Error::Dimension(format!(
            "expected a 2xN state with 2 <= N <= {MAX_QUDIT}, got dimension {dim}"
        )));
    }
    let eig = hermitian_eigensystem(rho.matrix())?;
    let rank = eig.rank_above(TOL.rank_threshold);
    if rank > 2 {
        return Err(Error::Rank {
            found: rank,
            max: 2,
        });
    }
    let weighted = [0, 1].map(|k| {
        let l = if eig.values[k] > TOL.rank_threshold {
            eig.values[k]
        } else {
            0.0
        };
        eig.vector(k)
            .into_iter()
            .map(|z| z * l.sqrt())
            .collect::<Vec<_>>()
    });
    Ok(Rank2 {
        n: dim / 2,
        weighted,
    })
}

/// Outcome vectors of the orthogonal measurement along `(θ, φ)`.
fn basis(theta: f64, phi: f64) -> [[C64; 2]; 2] {
    let (s, c) = (0.5 * theta).sin_cos();
    let e = C64::from_polar(1.0, phi);
    [[C64::new(c, 0.0), e * s], [-e.conj() * s, C64::new(c, 0.0)]]
}

impl Rank2 {
    /// Unnormalized `Σ_i <e_k|i> √λ_i |ψ_i>` for both outcomes.
    fn branches(&self, theta: f64, phi: f64) -> [Vec<C64>; 2] {
        basis(theta, phi).map(|e| {
            self.weighted[0]
                .iter()
                .zip(&self.weighted[1])
                .map(|(a, b)| e[0].conj() * a + e[1].conj() * b)
                .collect()
        })
    }

    /// `Σ_k p_k S(ρ_B^k)` from the closed-form 2x2 marginal spectrum.
    fn average(&self, theta: f64, phi: f64) -> f64 {
        self.branches(theta, phi)
            .iter()
            .map(|v| {
                let (top, bottom) = v.split_at(self.n);
                let a: f64 = top.iter().map(|z| z.norm_sqr()).sum();
                let d: f64 = bottom.iter().map(|z| z.norm_sqr()).sum();
                let off: C64 = top.iter().zip(bottom).map(|(x, y)| x * y.conj()).sum();
                let p = a + d;
                if p < TOL.outcome_cutoff {
                    return 0.0;
                }
                let gap = ((a - d).powi(2) + 4.0 * off.norm_sqr()).sqrt();
                p * h2(0.5 * (1.0 + gap / p))
            })
            .sum()
    }

    fn decomposition(&self, theta: f64, phi: f64) -> Result<TwoElementDecomposition> {
        let branches = self.branches(theta, phi);
        let mut probabilities = [0.0; 2];
        let mut states: [Vec<C64>; 2] = Default::default();
        let mut entanglements = [0.0; 2];
        for (k, v) in branches.into_iter().enumerate() {
            let p: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            probabilities[k] = p;
            if p < TOL.outcome_cutoff {
                // A null outcome carries no weight; any unit vector will do.
                let mut unit = vec![ZERO; 2 * self.n];
                unit[0] = C64::new(1.0, 0.0);
                states[k] = unit;
                continue;
            }
            let norm = p.sqrt();
            states[k] = v.into_iter().map(|z| z / norm).collect();
            entanglements[k] = pure_state_entanglement(&states[k], 2, self.n)?;
        }
        let mut dec = TwoElementDecomposition {
            qudit_dim: self.n,
            probabilities,
            states,
            entanglements,
            average: 0.0,
        };
        dec.average = decomposition_average(&dec);
        Ok(dec)
    }
}

/// `Σ_k p_k E_k` of a decomposition.
pub fn decomposition_average(dec: &TwoElementDecomposition) -> f64 {
    dec.probabilities
        .iter()
        .zip(&dec.entanglements)
        .map(|(p, e)| p * e)
        .sum()
}

/// `Σ_k p_k |φ_k><φ_k|`.
pub fn recombine(dec: &TwoElementDecomposition) -> ComplexMatrix {
    let d = 2 * dec.qudit_dim;
    let mut m = ComplexMatrix::zeros(d, d);
    for (p, v) in dec.probabilities.iter().zip(&dec.states) {
        m = &m + &ComplexMatrix::outer(v).scale_real(*p);
    }
    m
}

pub fn reconstruction_residual(dec: &TwoElementDecomposition, rho: &DensityMatrix) -> f64 {
    recombine(dec).max_abs_diff(rho.matrix())
}

/// Smallest two-element decomposition average over orthogonal measurements
/// on the purifying qubit: grid over `θ ∈ [0, π]`, `φ ∈ [0, 2π)` per step,
/// then a simplex polish from each step's best point.
pub fn eof_two_element_bound(
    rho_bc: &DensityMatrix,
    schedule: &StepSchedule,
    polish: bool,
) -> Result<EofBound> {
    let parts = rank2_parts(rho_bc)?;
    let f = |x: &[f64]| parts.average(x[0], x[1]);
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    let mut starts = Vec::new();
    for &step in schedule.steps() {
        let mut local = (f64::INFINITY, [0.0, 0.0]);
        let ntheta = (PI / step + 1e-9).floor() as usize + 1;
        let nphi = (2.0 * PI / step - 1e-9).ceil() as usize;
        for i in 0..ntheta {
            let theta = i as f64 * step;
            let pole = i == 0 || (theta - PI).abs() < 1e-9;
            for j in 0..if pole { 1 } else { nphi } {
                let x = [theta, j as f64 * step];
                let v = f(&x);
                if v < local.0 {
                    local = (v, x);
                }
            }
        }
        if local.0 < best.0 {
            best = local;
        }
        starts.push((step, local.1));
    }
    let mut polish_evaluations = 0;
    if polish {
        for (step, x0) in &starts {
            let r = NelderMead::default().with_step(0.5 * step).minimize(f, x0);
            polish_evaluations += r.evaluations;
            if r.value < best.0 {
                best = (r.value, [r.x[0], r.x[1]]);
            }
        }
    }
    let decomposition = parts.decomposition(best.1[0], best.1[1])?;
    Ok(EofBound {
        value: decomposition.average,
        angles: best.1,
        reconstruction_residual: reconstruction_residual(&decomposition, rho_bc),
        decomposition,
        steps_over_pi: schedule.steps_over_pi(),
        polish_evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::tensor_vec;
    use crate::measures::entanglement_of_formation;
    use crate::states::{random_state, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn schedule() -> StepSchedule {
        StepSchedule::standard_with_floor(0.1).unwrap()
    }

    #[test]
    fn pure_state_bound_is_its_entanglement() {
        let rho = random_state(1, 6, 3).unwrap();
        let psi = hermitian_eigensystem(rho.matrix()).unwrap().vector(0);
        let e = pure_state_entanglement(&psi, 2, 3).unwrap();
        let b = eof_two_element_bound(&rho, &schedule(), true).unwrap();
        assert!((b.value - e).abs() < 1e-10, "{} vs {e}", b.value);
    }

    #[test]
    fn two_qubit_bound_is_wootters() {
        for seed in 0..10 {
            let rho = random_state(2, 4, 40 + seed).unwrap();
            let b = eof_two_element_bound(&rho, &schedule(), true).unwrap();
            let ef = entanglement_of_formation(&rho).unwrap();
            assert!(
                (b.value - ef).abs() < 1e-6,
                "seed {seed}: {} vs {ef}",
                b.value
            );
            assert!(b.reconstruction_residual < 1e-10);
        }
    }

    #[test]
    fn separable_mixture_is_zero() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let u = random_unitary(2, &mut rng);
        let w = random_unitary(3, &mut rng);
        let one = C64::new(1.0, 0.0);
        let p1 = tensor_vec(&[one, ZERO], &[one, ZERO, ZERO]);
        let p2 = tensor_vec(&u.column(0), &w.column(1));
        let m =
            &ComplexMatrix::outer(&p1).scale_real(0.3) + &ComplexMatrix::outer(&p2).scale_real(0.7);
        let rho = DensityMatrix::new(m).unwrap();
        let b = eof_two_element_bound(&rho, &StepSchedule::standard(), true).unwrap();
        assert!(b.value.abs() < 1e-9, "{}", b.value);
    }

    #[test]
    fn averages_of_extreme_decompositions() {
        let one = C64::new(1.0, 0.0);
        let h = C64::new(0.5f64.sqrt(), 0.0);
        let product = TwoElementDecomposition {
            qudit_dim: 2,
            probabilities: [0.5, 0.5],
            states: [vec![one, ZERO, ZERO, ZERO], vec![ZERO, ZERO, ZERO, one]],
            entanglements: [0.0, 0.0],
            average: 0.0,
        };
        assert_eq!(decomposition_average(&product), 0.0);
        let bell = TwoElementDecomposition {
            entanglements: [1.0, 1.0],
            states: [vec![h, ZERO, ZERO, h], vec![h, ZERO, ZERO, -h]],
            ..product
        };
        assert_eq!(decomposition_average(&bell), 1.0);
    }

    #[test]
    fn errors() {
        let rho = random_state(3, 6, 1).unwrap();
        assert!(matches!(
            eof_two_element_bound(&rho, &schedule(), false),
            Err(Error::Rank { .. })
        ));
        let odd = DensityMatrix::maximally_mixed(3);
        assert!(matches!(
            eof_two_element_bound(&odd, &schedule(), false),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn qutrit_bound_is_bounded_by_marginal_entropy() {
        for seed in 0..5 {
            let rho = random_state(2, 6, 70 + seed).unwrap();
            let b = eof_two_element_bound(&rho, &schedule(), true).unwrap();
            let marginal = crate::linalg::partial_trace(rho.matrix(), &[2, 3], &[0]).unwrap();
            let sb = crate::linalg::von_neumann_entropy(&marginal).unwrap();
            assert!(b.value >= 0.0 && b.value <= sb + 1e-9);
            assert!(b.reconstruction_residual < 1e-10);
        }
    }
}
