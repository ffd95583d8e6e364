//! Extremal rank-one qubit POVMs with two, three or four outcomes.
//!
//! An element is `E_i = α_i (𝟙 + n_i·σ)` with `|n_i| = 1`; completeness is
//! `Σ α_i = 1` and `Σ α_i n_i = 0`. All geometry is done on Bloch vectors;
//! 2x2 operators are only built for validation.

use serde::{Deserialize, Serialize};

use crate::linalg::{pauli, solve_real, ComplexMatrix};
use crate::tolerance::TOL;

pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn det3(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    dot(a, &cross(b, c))
}

#[inline]
fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Direction with polar angle `theta` and azimuth `phi`.
#[inline]
pub fn unit_vector(theta: f64, phi: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

/// Rotation `U(Ω, Φ) = R_z(Φ) R_y(Ω)`, which maps ẑ to `unit_vector(Ω, Φ)`.
pub type Rotation = [[f64; 3]; 3];

pub fn rotation(omega: f64, phi: f64) -> Rotation {
    let (so, co) = omega.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [
        [cp * co, -sp, cp * so],
        [sp * co, cp, sp * so],
        [-so, 0.0, co],
    ]
}

#[inline]
pub fn rotate(r: &Rotation, v: &Vec3) -> Vec3 {
    [dot(&r[0], v), dot(&r[1], v), dot(&r[2], v)]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PovmElement {
    pub alpha: f64,
    pub n: Vec3,
}

impl PovmElement {
    /// The 2x2 operator `α(𝟙 + n·σ)`.
    pub fn operator(&self) -> ComplexMatrix {
        let s = pauli();
        let mut m = ComplexMatrix::identity(2);
        for (k, sk) in s.iter().enumerate() {
            m = &m + &sk.scale_real(self.n[k]);
        }
        m.scale_real(self.alpha)
    }
}

/// Why an angle tuple does not define an extremal POVM.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rejection {
    /// The completeness system has no well-conditioned solution.
    Singular,
    /// A weight is at or below the positivity floor.
    NonPositiveWeight { index: usize, alpha: f64 },
    /// Four directions lie (numerically) in one plane.
    Coplanar { det: f64 },
}

/// A rank-one POVM with 2, 3 or 4 elements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "PovmFile", try_from = "PovmFile")]
pub struct ExtremalPovm {
    elements: Vec<PovmElement>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PovmFile {
    m: usize,
    elements: Vec<PovmElement>,
}

impl From<ExtremalPovm> for PovmFile {
    fn from(p: ExtremalPovm) -> Self {
        PovmFile {
            m: p.elements.len(),
            elements: p.elements,
        }
    }
}

impl TryFrom<PovmFile> for ExtremalPovm {
    type Error = String;
    fn try_from(f: PovmFile) -> Result<Self, String> {
        if f.m != f.elements.len() || !(2..=4).contains(&f.m) {
            return Err(format!(
                "POVM declares m={} with {} elements",
                f.m,
                f.elements.len()
            ));
        }
        Ok(ExtremalPovm {
            elements: f.elements,
        })
    }
}

impl ExtremalPovm {
    /// Wraps elements without checking completeness; see [`validate_povm`].
    pub fn from_elements(elements: Vec<PovmElement>) -> Self {
        Self { elements }
    }

    pub fn m(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[PovmElement] {
        &self.elements
    }

    pub fn operators(&self) -> Vec<ComplexMatrix> {
        self.elements.iter().map(PovmElement::operator).collect()
    }

    /// Applies a rotation to every direction.
    pub fn rotated(&self, r: &Rotation) -> Self {
        Self {
            elements: self
                .elements
                .iter()
                .map(|e| PovmElement {
                    alpha: e.alpha,
                    n: rotate(r, &e.n),
                })
                .collect(),
        }
    }
}

/// Orthogonal measurement along `±unit_vector(θ, φ)`.
pub fn orthogonal_pair(theta: f64, phi: f64) -> ExtremalPovm {
    let n = unit_vector(theta, phi);
    ExtremalPovm {
        elements: vec![
            PovmElement { alpha: 0.5, n },
            PovmElement {
                alpha: 0.5,
                n: [-n[0], -n[1], -n[2]],
            },
        ],
    }
}

/// Weights of three coplanar unit directions at in-plane angles `g`.
///
/// Solves `Σα = 1, Σα cos g = 0, Σα sin g = 0`. The result only depends on
/// angle differences.
pub fn planar_weights(g: [f64; 3]) -> Result<[f64; 3], Rejection> {
    let a = vec![
        vec![1.0, 1.0, 1.0],
        g.iter().map(|x| x.cos()).collect(),
        g.iter().map(|x| x.sin()).collect(),
    ];
    let (x, cond) = solve_real(&a, &[1.0, 0.0, 0.0]).ok_or(Rejection::Singular)?;
    if !(cond <= TOL.max_condition) {
        return Err(Rejection::Singular);
    }
    check_weights([x[0], x[1], x[2]])
}

fn check_weights<const N: usize>(w: [f64; N]) -> Result<[f64; N], Rejection> {
    for (index, &alpha) in w.iter().enumerate() {
        if !(alpha > TOL.povm_weight_floor) {
            return Err(Rejection::NonPositiveWeight { index, alpha });
        }
    }
    Ok(w)
}

/// Orthonormal basis `(e1, e2)` of the plane with normal `unit_vector(Θ, Φ)`.
pub fn plane_basis(normal_theta: f64, normal_phi: f64) -> (Vec3, Vec3) {
    let k = unit_vector(normal_theta, normal_phi);
    let (st, ct) = normal_theta.sin_cos();
    let (sp, cp) = normal_phi.sin_cos();
    let e1 = [ct * cp, ct * sp, -st];
    let e2 = cross(&k, &e1);
    (e1, e2)
}

/// Three coplanar directions at in-plane angles `ψ, ψ+γ2, ψ+γ3` in the plane
/// with normal `(Θ, Φ)`; weights from the in-plane completeness system.
pub fn planar_three(
    normal_theta: f64,
    normal_phi: f64,
    offset: f64,
    gamma2: f64,
    gamma3: f64,
) -> Result<ExtremalPovm, Rejection> {
    let g = [offset, offset + gamma2, offset + gamma3];
    let alpha = planar_weights(g)?;
    let (e1, e2) = plane_basis(normal_theta, normal_phi);
    let elements = g
        .iter()
        .zip(alpha)
        .map(|(&gi, a)| {
            let (s, c) = gi.sin_cos();
            PovmElement {
                alpha: a,
                n: [
                    c * e1[0] + s * e2[0],
                    c * e1[1] + s * e2[1],
                    c * e1[2] + s * e2[2],
                ],
            }
        })
        .collect();
    Ok(ExtremalPovm { elements })
}

/// `det[n2-n1, n3-n1, n4-n1]`: zero iff the four directions are coplanar.
pub fn coplanarity_det(n: &[Vec3; 4]) -> f64 {
    det3(&sub(&n[1], &n[0]), &sub(&n[2], &n[0]), &sub(&n[3], &n[0]))
}

/// Barycentric weights of the origin with respect to four directions.
///
/// Equivalent to solving the 4x4 system `[1; n_1..n_4] α = (1, 0, 0, 0)` by
/// Cramer's rule.
pub fn tetrahedral_weights(n: &[Vec3; 4]) -> Result<[f64; 4], Rejection> {
    let det = coplanarity_det(n);
    if !(det.abs() > TOL.coplanarity_floor) {
        return Err(Rejection::Coplanar { det });
    }
    let num = [
        det3(&n[1], &n[2], &n[3]),
        -det3(&n[0], &n[2], &n[3]),
        det3(&n[0], &n[1], &n[3]),
        -det3(&n[0], &n[1], &n[2]),
    ];
    check_weights(num.map(|x| x / det))
}

/// Four-element POVM: `n1 = U(Ω,Φ) ẑ`, `n_j = U(Ω,Φ) unit_vector(θ_j, φ_j)`.
///
/// `angles` is `(θ2, φ2, θ3, φ3, θ4, φ4)`.
pub fn four_element(omega: f64, phi: f64, angles: [f64; 6]) -> Result<ExtremalPovm, Rejection> {
    let r = rotation(omega, phi);
    let local = [
        [0.0, 0.0, 1.0],
        unit_vector(angles[0], angles[1]),
        unit_vector(angles[2], angles[3]),
        unit_vector(angles[4], angles[5]),
    ];
    let alpha = tetrahedral_weights(&local)?;
    let elements = local
        .iter()
        .zip(alpha)
        .map(|(v, a)| PovmElement {
            alpha: a,
            n: rotate(&r, v),
        })
        .collect();
    Ok(ExtremalPovm { elements })
}

/// Residuals of the completeness and extremality conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PovmReport {
    pub m: usize,
    /// `|Σα - 1|`.
    pub weight_residual: f64,
    /// `|Σ α n|`.
    pub vector_residual: f64,
    /// `max |Σ E_i - 𝟙|` over 2x2 entries.
    pub operator_residual: f64,
    /// Smallest weight.
    pub min_alpha: f64,
    /// `max ||n_i| - 1|`.
    pub norm_deviation: f64,
    /// `max |det(E_i / 2α_i)|`; zero for rank-one elements.
    pub rank_one_residual: f64,
    /// `max |E_1 E_2|` for two-element POVMs.
    pub orthogonality_residual: Option<f64>,
    /// `det[n2-n1, n3-n1, n4-n1]` for four-element POVMs.
    pub coplanarity_det: Option<f64>,
}

impl PovmReport {
    pub fn is_valid(&self, tol: f64) -> bool {
        (2..=4).contains(&self.m)
            && self.weight_residual <= tol
            && self.vector_residual <= tol
            && self.operator_residual <= tol
            && self.norm_deviation <= tol
            && self.min_alpha > TOL.povm_weight_floor
            && self
                .coplanarity_det
                .map_or(true, |d| d.abs() > TOL.coplanarity_floor)
    }
}

pub fn validate_povm(p: &ExtremalPovm) -> PovmReport {
    let els = p.elements();
    let weight_residual = (els.iter().map(|e| e.alpha).sum::<f64>() - 1.0).abs();
    let mut v = [0.0; 3];
    for e in els {
        for k in 0..3 {
            v[k] += e.alpha * e.n[k];
        }
    }
    let ops = p.operators();
    let mut sum = ComplexMatrix::zeros(2, 2);
    for op in &ops {
        sum = &sum + op;
    }
    let rank_one_residual = els
        .iter()
        .zip(&ops)
        .map(|(e, op)| {
            let h = op.scale_real(0.5 / e.alpha);
            (h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)]).norm()
        })
        .fold(0.0, f64::max);
    let orthogonality_residual = (p.m() == 2).then(|| {
        let prod = &ops[0] * &ops[1];
        prod.max_abs_diff(&ComplexMatrix::zeros(2, 2))
    });
    let coplanarity_det =
        (p.m() == 4).then(|| coplanarity_det(&[els[0].n, els[1].n, els[2].n, els[3].n]));
    PovmReport {
        m: p.m(),
        weight_residual,
        vector_residual: norm(&v),
        operator_residual: sum.max_abs_diff(&ComplexMatrix::identity(2)),
        min_alpha: els.iter().map(|e| e.alpha).fold(f64::INFINITY, f64::min),
        norm_deviation: els
            .iter()
            .map(|e| (norm(&e.n) - 1.0).abs())
            .fold(0.0, f64::max),
        rank_one_residual,
        orthogonality_residual,
        coplanarity_det,
    }
}

/// The 2x2 operator sum `Σ E_i`, exposed for callers that want the matrix itself.
pub fn operator_sum(p: &ExtremalPovm) -> ComplexMatrix {
    p.operators()
        .iter()
        .fold(ComplexMatrix::zeros(2, 2), |acc, op| &acc + op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: &Vec3, b: &Vec3, tol: f64) -> bool {
        (0..3).all(|k| (a[k] - b[k]).abs() <= tol)
    }

    #[test]
    fn rotation_maps_z() {
        for (o, p) in [(0.3, 1.2), (2.0, -0.4), (PI, 0.0)] {
            assert!(close(
                &rotate(&rotation(o, p), &[0.0, 0.0, 1.0]),
                &unit_vector(o, p),
                1e-15
            ));
        }
    }

    #[test]
    fn orthogonal_examples() {
        let p = orthogonal_pair(0.0, 0.0);
        assert_eq!(p.elements()[0].n, [0.0, 0.0, 1.0]);
        let p = orthogonal_pair(FRAC_PI_2, 0.0);
        assert!(close(&p.elements()[0].n, &[1.0, 0.0, 0.0], 1e-15));
        let r = validate_povm(&orthogonal_pair(1.234, 5.678));
        assert_eq!(r.weight_residual, 0.0);
        assert_eq!(r.vector_residual, 0.0);
        assert!(r.orthogonality_residual.unwrap() < 1e-12);
    }

    #[test]
    fn trine_has_equal_weights() {
        let deg = PI / 180.0;
        // normal along y: the x-z plane
        let p = planar_three(FRAC_PI_2, FRAC_PI_2, 0.0, 120.0 * deg, 240.0 * deg).unwrap();
        for e in p.elements() {
            assert!((e.alpha - 1.0 / 3.0).abs() < 1e-14);
            assert!(e.n[1].abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_planar_rejected() {
        assert!(matches!(
            planar_three(0.4, 0.2, 0.1, 0.0, 2.0),
            Err(Rejection::Singular) | Err(Rejection::NonPositiveWeight { .. })
        ));
        // All on one half circle: origin outside the triangle.
        assert!(matches!(
            planar_three(0.4, 0.2, 0.1, 0.5, 1.0),
            Err(Rejection::NonPositiveWeight { .. })
        ));
    }

    #[test]
    fn planar_generic_residual() {
        let deg = PI / 180.0;
        let p = planar_three(0.7, 2.1, 0.0, 90.0 * deg, 200.0 * deg).unwrap();
        let r = validate_povm(&p);
        assert!(r.is_valid(1e-12), "{r:?}");
        // Independent check: α_i ∝ sin of the opposite angle difference.
        let g = [0.0, 90.0 * deg, 200.0 * deg];
        let raw = [
            (g[2] - g[1]).sin(),
            (g[0] - g[2]).sin(),
            (g[1] - g[0]).sin(),
        ];
        let s: f64 = raw.iter().sum();
        for (e, w) in p.elements().iter().zip(raw) {
            assert!((e.alpha - w / s).abs() < 1e-14);
        }
    }

    #[test]
    fn tetrahedron_has_equal_weights() {
        let t = (-1.0f64 / 3.0).acos();
        let p = four_element(0.0, 0.0, [t, 0.0, t, 2.0 * PI / 3.0, t, 4.0 * PI / 3.0]).unwrap();
        for e in p.elements() {
            assert!((e.alpha - 0.25).abs() < 1e-14);
        }
        // Same under a global rotation.
        let q = four_element(1.1, 0.3, [t, 0.0, t, 2.0 * PI / 3.0, t, 4.0 * PI / 3.0]).unwrap();
        assert!(validate_povm(&q).is_valid(1e-12));
    }

    #[test]
    fn coplanar_four_rejected() {
        // all in the x-z plane (φ = 0 or π)
        let r = four_element(0.0, 0.0, [FRAC_PI_2, 0.0, FRAC_PI_2, PI, PI, 0.0]);
        assert!(matches!(r, Err(Rejection::Coplanar { .. })));
        let r = four_element(0.0, 0.0, [1.0, 0.0, 2.0, PI, 2.5, 0.0]);
        assert!(matches!(r, Err(Rejection::Coplanar { .. })));
    }

    #[test]
    fn cramer_weights_match_linear_solve() {
        let p = four_element(0.4, 1.9, [2.0, 0.3, 2.2, 2.4, 1.9, 4.4]).unwrap();
        let n: Vec<Vec3> = p.elements().iter().map(|e| e.n).collect();
        let a = vec![
            vec![1.0; 4],
            n.iter().map(|v| v[0]).collect(),
            n.iter().map(|v| v[1]).collect(),
            n.iter().map(|v| v[2]).collect(),
        ];
        let (x, _) = solve_real(&a, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        for (e, w) in p.elements().iter().zip(x) {
            assert!((e.alpha - w).abs() < 1e-12);
        }
        assert!(validate_povm(&p).is_valid(1e-12));
    }

    #[test]
    fn json_shape() {
        let s = serde_json::to_string(&orthogonal_pair(0.0, 0.0)).unwrap();
        assert!(
            s.starts_with(r#"{"m":2,"elements":[{"alpha":0.5,"n":[0.0,0.0,1.0]}"#),
            "{s}"
        );
        let back: ExtremalPovm = serde_json::from_str(&s).unwrap();
        assert_eq!(back, orthogonal_pair(0.0, 0.0));
        assert!(serde_json::from_str::<ExtremalPovm>(r#"{"m":3,"elements":[]}"#).is_err());
    }

    proptest! {
        #[test]
        fn constructed_povms_are_complete(
            t in 0.0..PI, p in 0.0..2.0 * PI,
            nt in 0.0..PI, np in 0.0..2.0 * PI, off in 0.0..2.0 * PI,
            g2 in 0.0..2.0 * PI, g3 in 0.0..2.0 * PI,
            o in 0.0..PI, op in 0.0..2.0 * PI,
            ang in proptest::array::uniform6(0.0..2.0 * PI),
        ) {
            let mut all = vec![orthogonal_pair(t, p)];
            if let Ok(q) = planar_three(nt, np, off, g2, g3) { all.push(q); }
            if let Ok(q) = four_element(o, op, ang) { all.push(q); }
            for q in all {
                let r = validate_povm(&q);
                prop_assert!(r.operator_residual <= 1e-12);
                prop_assert!(r.rank_one_residual <= 1e-12);
                prop_assert!(r.is_valid(1e-12), "{:?}", r);
                if let Some(o) = r.orthogonality_residual { prop_assert!(o <= 1e-12); }
            }
        }

        #[test]
        fn trine_weights_are_orientation_free(nt in 0.0..PI, np in 0.0..2.0 * PI, off in 0.0..2.0 * PI) {
            let q = planar_three(nt, np, off, 2.0 * PI / 3.0, 4.0 * PI / 3.0).unwrap();
            for e in q.elements() {
                prop_assert!((e.alpha - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }
}
