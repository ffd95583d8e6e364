//! Correlation and entanglement measures of two-qubit states.
//!
//! The conditional entropy of A after a POVM on B is available along two
//! independent routes: explicit matrix algebra on the 4x4 state
//! ([`conditional_entropy_direct`]) and the closed Bloch-vector form
//! ([`conditional_entropy_bloch`]). The minimizers use the Bloch form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    binary_entropy, h2, hermitian_eigensystem, matrix_sqrt_psd, pauli, spectrum_entropy,
    tensor_product, trace_out, ComplexMatrix, Party,
};
use crate::povm::{dot, norm, ExtremalPovm, Vec3};
use crate::states::{BlochForm, DensityMatrix};
use crate::tolerance::TOL;

/// Per-outcome data of a measurement on B.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalEntropyBreakdown {
    pub probabilities: Vec<f64>,
    /// `(λ⁺, λ⁻)` of each post-measurement state of A. Outcomes with
    /// vanishing probability report `(1, 0)`.
    pub eigenvalue_pairs: Vec<(f64, f64)>,
    /// `Σ p_k S(ρ_A|k)` in bits.
    pub total: f64,
}

/// `I(ρ) = S(ρ_A) + S(ρ_B) - S(ρ)`.
pub fn mutual_information(rho: &DensityMatrix) -> Result<f64> {
    let sa = rho.reduced(Party::A)?.entropy();
    let sb = rho.reduced(Party::B)?.entropy();
    Ok(sa + sb - rho.entropy())
}

/// Conditional entropy of A given a POVM on B by explicit matrix algebra:
/// `p_k = tr((𝟙⊗E_k)ρ)`, `ρ_A|k = tr_B((𝟙⊗E_k)ρ)/p_k`.
pub fn conditional_entropy_direct(
    rho: &DensityMatrix,
    povm: &ExtremalPovm,
) -> Result<ConditionalEntropyBreakdown> {
    if rho.dim() != 4 {
        return Err(Error::Dimension(
            "conditional entropy needs a two-qubit state".into(),
        ));
    }
    let id = ComplexMatrix::identity(2);
    let mut out = ConditionalEntropyBreakdown {
        probabilities: Vec::with_capacity(povm.m()),
        eigenvalue_pairs: Vec::with_capacity(povm.m()),
        total: 0.0,
    };
    for e in povm.operators() {
        let measured = &tensor_product(&id, &e) * rho.matrix();
        let p = measured.trace().re;
        out.probabilities.push(p);
        if p < TOL.outcome_cutoff {
            out.eigenvalue_pairs.push((1.0, 0.0));
            continue;
        }
        let post = trace_out(&measured, Party::B)?.scale_real(1.0 / p);
        let eig = hermitian_eigensystem(&post)?;
        out.eigenvalue_pairs.push((eig.values[0], eig.values[1]));
        out.total += p * spectrum_entropy(&eig.values);
    }
    Ok(out)
}

/// Closed-form conditional entropy of a measurement on B for a state in
/// Bloch form.
///
/// For direction `n` the outcome has `p = α(1 + b·n)` and leaves A with Bloch
/// vector `r = (a + T n)/(1 + b·n)`, where `(T n)_i = Σ_j T_ij n_j`.
#[derive(Clone, Copy, Debug)]
pub struct BlochObjective {
    a: Vec3,
    b: Vec3,
    t: [[f64; 3]; 3],
}

impl BlochObjective {
    pub fn new(form: &BlochForm) -> Self {
        Self {
            a: form.a,
            b: form.b,
            t: form.t,
        }
    }

    /// `(1 + b·n)` and the post-measurement Bloch radius `|r|`.
    #[inline]
    fn outcome(&self, n: &Vec3) -> (f64, f64) {
        let scale = 1.0 + dot(&self.b, n);
        let v = [
            self.a[0] + dot(&self.t[0], n),
            self.a[1] + dot(&self.t[1], n),
            self.a[2] + dot(&self.t[2], n),
        ];
        let radius = if scale > 0.0 {
            (norm(&v) / scale).min(1.0)
        } else {
            0.0
        };
        (scale, radius)
    }

    /// `(1 + b·n) h((1 + |r|)/2)`, the entropy an outcome along `n` carries
    /// per unit weight.
    #[inline]
    pub fn direction_cost(&self, n: &Vec3) -> f64 {
        let (scale, radius) = self.outcome(n);
        if scale < TOL.outcome_cutoff {
            return 0.0;
        }
        scale * h2(0.5 * (1.0 + radius))
    }

    /// `Σ_k α_k (1 + b·n_k) h(λ⁺_k)`.
    pub fn value(&self, povm: &ExtremalPovm) -> f64 {
        povm.elements()
            .iter()
            .map(|e| {
                let (scale, radius) = self.outcome(&e.n);
                let p = e.alpha * scale;
                if p < TOL.outcome_cutoff {
                    0.0
                } else {
                    p * h2(0.5 * (1.0 + radius))
                }
            })
            .sum()
    }

    pub fn breakdown(&self, povm: &ExtremalPovm) -> ConditionalEntropyBreakdown {
        let mut out = ConditionalEntropyBreakdown {
            probabilities: Vec::with_capacity(povm.m()),
            eigenvalue_pairs: Vec::with_capacity(povm.m()),
            total: 0.0,
        };
        for e in povm.elements() {
            let (scale, radius) = self.outcome(&e.n);
            let p = e.alpha * scale;
            out.probabilities.push(p);
            if p < TOL.outcome_cutoff {
                out.eigenvalue_pairs.push((1.0, 0.0));
                continue;
            }
            let plus = 0.5 * (1.0 + radius);
            out.eigenvalue_pairs.push((plus, 1.0 - plus));
            out.total += p * h2(plus);
        }
        out
    }
}

pub fn conditional_entropy_bloch(
    form: &BlochForm,
    povm: &ExtremalPovm,
) -> ConditionalEntropyBreakdown {
    BlochObjective::new(form).breakdown(povm)
}

/// `J = S(ρ_A) - S(A|{E})` for the optimal conditional entropy.
pub fn classical_correlation(rho: &DensityMatrix, min_conditional_entropy: f64) -> Result<f64> {
    Ok(rho.reduced(Party::A)?.entropy() - min_conditional_entropy)
}

/// `(σy⊗σy) ρ* (σy⊗σy)`.
pub fn spin_flip(rho: &ComplexMatrix) -> ComplexMatrix {
    let [_, sy, _] = pauli();
    let yy = tensor_product(&sy, &sy);
    &(&yy * &rho.conj()) * &yy
}

/// Square roots of round-off sized values are ~1e-8; such values are zeroed first.
#[inline]
fn floored(x: f64) -> f64 {
    if x > TOL.log_cutoff {
        x
    } else {
        0.0
    }
}

/// `max(0, l1 - l2 - l3 - l4)` from the eigenvalues `l_i²` of `ρ ρ̃`.
fn wootters(squares: &[f64]) -> f64 {
    let mut l: Vec<f64> = squares.iter().map(|&m| floored(m).sqrt()).collect();
    l.sort_by(|a, b| b.total_cmp(a));
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

/// Wootters concurrence from the eigenvalues of `ρ ρ̃`.
///
/// `ρ ρ̃` is similar to the Hermitian `√Λ V† ρ̃ V √Λ` in the eigenbasis
/// `ρ = V Λ V†`, so its spectrum comes from one Hermitian eigensolve.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::Dimension(
            "concurrence needs a two-qubit state".into(),
        ));
    }
    let eig = hermitian_eigensystem(rho.matrix())?;
    let flipped = spin_flip(rho.matrix());
    let v = &eig.vectors;
    let inner = &(&v.adjoint() * &flipped) * v;
    let roots: Vec<f64> = eig.values.iter().map(|&l| floored(l).sqrt()).collect();
    let sym = ComplexMatrix::from_fn(4, 4, |i, j| inner[(i, j)] * roots[i] * roots[j]);
    Ok(wootters(&hermitian_eigensystem(&sym)?.values))
}

/// Concurrence from `R(ρ) = √(√ρ ρ̃ √ρ)`; kept as an independent check on [`concurrence`].
pub fn concurrence_via_r_matrix(rho: &DensityMatrix) -> Result<f64> {
    let s = hermitian_eigensystem(rho.matrix())?.reconstruct_with(|l| floored(l).sqrt());
    let inner = (&(&s * &spin_flip(rho.matrix())) * &s).hermitian_part();
    let r = matrix_sqrt_psd(&inner)?;
    let l = hermitian_eigensystem(&r)?.values;
    Ok(wootters(&l.iter().map(|x| x * x).collect::<Vec<_>>()))
}

/// `ℰ(C) = h((1 + √(1 - C²))/2)`.
pub fn eof_from_concurrence(c: f64) -> Result<f64> {
    let slack = TOL.entropy_domain_slack;
    if !(c >= -slack && c <= 1.0 + slack) {
        return Err(Error::Domain(format!("concurrence {c} outside [0, 1]")));
    }
    let c = c.clamp(0.0, 1.0);
    binary_entropy(0.5 * (1.0 + (1.0 - c * c).max(0.0).sqrt()))
}

/// Entanglement of formation of a two-qubit state.
pub fn entanglement_of_formation(rho: &DensityMatrix) -> Result<f64> {
    eof_from_concurrence(concurrence(rho)?)
}

/// Entropy of the first-factor marginal of a pure bipartite vector `dims = (d1, d2)`.
pub fn pure_state_entanglement(psi: &[crate::linalg::C64], d1: usize, d2: usize) -> Result<f64> {
    let n: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if !(n > 0.0) {
        return Err(Error::Domain("zero vector has no entanglement".into()));
    }
    let proj = ComplexMatrix::outer(psi).scale_real(1.0 / n);
    let reduced = crate::linalg::partial_trace(&proj, &[d1, d2], &[0])?;
    Ok(spectrum_entropy(&hermitian_eigensystem(&reduced)?.values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use crate::povm::{four_element, orthogonal_pair, planar_three};
    use crate::states::{
        bell_state, classical_correlated, product_state, random_state, random_state_with,
        random_unitary, to_bloch, BellState,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_povm(m: usize, rng: &mut impl Rng) -> ExtremalPovm {
        loop {
            let mut u = || rng.random_range(0.0..2.0 * PI);
            let p = match m {
                2 => Ok(orthogonal_pair(u(), u())),
                3 => planar_three(u(), u(), u(), u(), u()),
                _ => four_element(u(), u(), [u(), u(), u(), u(), u(), u()]),
            };
            if let Ok(p) = p {
                return p;
            }
        }
    }

    #[test]
    fn mutual_information_anchors() {
        let up = DensityMatrix::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let prod = product_state(&up, &DensityMatrix::maximally_mixed(2));
        assert!(mutual_information(&prod).unwrap().abs() < 1e-12);
        let bell = bell_state(BellState::PhiPlus);
        assert!((mutual_information(&bell).unwrap() - 2.0).abs() < 1e-12);
        let cc = classical_correlated(0.5).unwrap();
        assert!((mutual_information(&cc).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn direct_conditional_entropy_anchors() {
        let bell = bell_state(BellState::PhiPlus);
        for (t, p) in [(0.0, 0.0), (1.0, 2.0), (2.5, 4.0)] {
            let b = conditional_entropy_direct(&bell, &orthogonal_pair(t, p)).unwrap();
            assert!(b.total.abs() < 1e-12);
        }
        let mixed = DensityMatrix::maximally_mixed(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in 2..=4 {
            let b = conditional_entropy_direct(&mixed, &random_povm(m, &mut rng)).unwrap();
            assert!((b.total - 1.0).abs() < 1e-12);
        }
        let cc = classical_correlated(0.5).unwrap();
        let z = conditional_entropy_direct(&cc, &orthogonal_pair(0.0, 0.0)).unwrap();
        assert!(z.total.abs() < 1e-12);
        let x = conditional_entropy_direct(&cc, &orthogonal_pair(PI / 2.0, 0.0)).unwrap();
        assert!((x.total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bloch_conditional_entropy_anchors() {
        let singlet = to_bloch(&bell_state(BellState::PsiMinus)).unwrap();
        let b = conditional_entropy_bloch(&singlet, &orthogonal_pair(0.7, 1.3));
        for &(plus, minus) in &b.eigenvalue_pairs {
            assert!((plus - 1.0).abs() < 1e-12 && minus.abs() < 1e-12);
        }
        assert!(b.total.abs() < 1e-12);

        let flat = BlochForm {
            a: [0.0; 3],
            b: [0.0; 3],
            t: [[0.0; 3]; 3],
        };
        let b = conditional_entropy_bloch(&flat, &orthogonal_pair(0.2, 0.1));
        assert!(b
            .eigenvalue_pairs
            .iter()
            .all(|&(p, m)| p == 0.5 && m == 0.5));
        assert_eq!(b.total, 1.0);
    }

    #[test]
    fn both_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..1000 {
            let rank = 1 + trial % 4;
            let rho = random_state_with(rank, 4, &mut rng).unwrap();
            let form = to_bloch(&rho).unwrap();
            let m = 2 + trial % 3;
            let p = random_povm(m, &mut rng);
            let d = conditional_entropy_direct(&rho, &p).unwrap();
            let b = conditional_entropy_bloch(&form, &p);
            assert!(
                (d.total - b.total).abs() <= 1e-12,
                "{} vs {}",
                d.total,
                b.total
            );
            assert!((d.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            for (x, y) in d.probabilities.iter().zip(&b.probabilities) {
                assert!((x - y).abs() < 1e-12);
            }
            for &(plus, minus) in &b.eigenvalue_pairs {
                assert!((plus + minus - 1.0).abs() < 1e-12);
            }
            assert!((BlochObjective::new(&form).value(&p) - b.total).abs() < 1e-15);
        }
    }

    #[test]
    fn asymmetric_correlations_use_row_index_on_a() {
        // |0>_A|+>_B mixed with |1>_A|->_B: T has a single x-z (A=z, B=x) entry.
        let plus = [C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
        let minus = [C64::new(1.0, 0.0), C64::new(-1.0, 0.0)];
        let zero = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let one = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let s0 = DensityMatrix::pure(&crate::linalg::tensor_vec(&zero, &plus)).unwrap();
        let s1 = DensityMatrix::pure(&crate::linalg::tensor_vec(&one, &minus)).unwrap();
        let rho = s0.mix(&s1, 0.5).unwrap();
        let f = to_bloch(&rho).unwrap();
        assert!((f.t[2][0] - 1.0).abs() < 1e-12 && f.t[0][2].abs() < 1e-12);
        // Measuring B along x reveals A completely.
        let px = orthogonal_pair(PI / 2.0, 0.0);
        assert!(conditional_entropy_bloch(&f, &px).total.abs() < 1e-12);
        assert!(conditional_entropy_direct(&rho, &px).unwrap().total.abs() < 1e-12);
    }

    #[test]
    fn classical_correlation_anchors() {
        let bell = bell_state(BellState::PhiPlus);
        assert!((classical_correlation(&bell, 0.0).unwrap() - 1.0).abs() < 1e-12);
        let up = DensityMatrix::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let prod = product_state(&DensityMatrix::maximally_mixed(2), &up);
        // Any measurement on B leaves A maximally mixed.
        let s = conditional_entropy_direct(&prod, &orthogonal_pair(0.3, 0.3))
            .unwrap()
            .total;
        assert!(classical_correlation(&prod, s).unwrap().abs() < 1e-12);
    }

    #[test]
    fn concurrence_anchors() {
        for w in [BellState::PhiPlus, BellState::PsiMinus] {
            assert!((concurrence(&bell_state(w)).unwrap() - 1.0).abs() < 1e-10);
        }
        let a = random_state(2, 2, 4).unwrap();
        let b = random_state(1, 2, 5).unwrap();
        assert!(concurrence(&product_state(&a, &b)).unwrap().abs() < 1e-10);
        // Werner states: C = max(0, (3p - 1)/2).
        for p in [0.1, 0.3, 0.5, 0.8, 1.0] {
            let w = DensityMatrix::maximally_mixed(4)
                .mix(&bell_state(BellState::PsiMinus), p)
                .unwrap();
            let want = ((3.0 * p - 1.0) / 2.0f64).max(0.0);
            assert!((concurrence(&w).unwrap() - want).abs() < 1e-9, "p={p}");
        }
    }

    #[test]
    fn concurrence_routes_agree_and_are_locally_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..300 {
            let rho = random_state_with(1 + trial % 4, 4, &mut rng).unwrap();
            let c = concurrence(&rho).unwrap();
            let r = concurrence_via_r_matrix(&rho).unwrap();
            assert!((c - r).abs() <= 1e-9, "{c} vs {r}");
            let ua = random_unitary(2, &mut rng);
            let uc = random_unitary(2, &mut rng);
            let moved = rho.local_unitary(&ua, &uc).unwrap();
            assert!((concurrence(&moved).unwrap() - c).abs() <= 1e-10);
        }
    }

    #[test]
    fn eof_never_exceeds_sampled_decompositions() {
        // Any decomposition ρ = Σ |w_k><w_k| with w_k = Σ_i U_ki √λ_i |ψ_i>
        // averages at least E_F.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for trial in 0..100 {
            let rho = random_state_with(2 + trial % 3, 4, &mut rng).unwrap();
            let ef = entanglement_of_formation(&rho).unwrap();
            let eig = hermitian_eigensystem(rho.matrix()).unwrap();
            let k = 6;
            let u = random_unitary(k, &mut rng);
            let mut avg = 0.0;
            for row in 0..k {
                let mut w = vec![C64::new(0.0, 0.0); 4];
                for i in 0..4 {
                    let s = eig.values[i].max(0.0).sqrt();
                    for x in 0..4 {
                        w[x] += u[(row, i)] * eig.vectors[(x, i)] * s;
                    }
                }
                let p: f64 = w.iter().map(|z| z.norm_sqr()).sum();
                if p > 1e-14 {
                    avg += p * pure_state_entanglement(&w, 2, 2).unwrap();
                }
            }
            assert!(avg >= ef - 1e-12, "{avg} < {ef}");
        }
    }

    #[test]
    fn eof_function() {
        assert_eq!(eof_from_concurrence(0.0).unwrap(), 0.0);
        assert!((eof_from_concurrence(1.0).unwrap() - 1.0).abs() < 1e-15);
        let h09 = binary_entropy(0.9).unwrap();
        assert!((eof_from_concurrence(0.6).unwrap() - h09).abs() < 1e-15);
        let mut last = -1.0;
        for i in 0..=100 {
            let v = eof_from_concurrence(i as f64 / 100.0).unwrap();
            assert!(v >= last);
            last = v;
        }
        assert!(eof_from_concurrence(1.2).is_err());
    }
}
