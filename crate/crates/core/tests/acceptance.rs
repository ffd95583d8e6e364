//! Acceptance criteria 1-8. Each test writes one `criterion N: PASS|FAIL`
//! line straight to stderr (bypassing the harness capture) and then asserts.

use std::f64::consts::PI;
use std::io::Write;

use qdiscord::discord::{
    deviation, discord, discord_minimize, discord_rank2_exact, SearchConfig, StepSchedule,
};
use qdiscord::eof_bound::eof_two_element_bound;
use qdiscord::linalg::{
    hermitian_eigensystem, partial_trace, von_neumann_entropy, ComplexMatrix, C64,
};
use qdiscord::measures::{
    conditional_entropy_bloch, conditional_entropy_direct, entanglement_of_formation,
};
use qdiscord::povm::{four_element, orthogonal_pair, planar_three, validate_povm, ExtremalPovm};
use qdiscord::scan::{
    mdms_deviation3, mdms_transition_search, run_scan, step_size_profile, write_csv, RankSpec,
    ScanConfig, PROFILE_M4_LIMIT, TRANSITION_TOL,
};
use qdiscord::states::{
    bell_state, classical_correlated, mdms_state, product_state, random_state, random_unitary,
    to_bloch, BellState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const MDMS_M: f64 = 0.11;
const MDMS_EPS: f64 = 0.2349602;

fn report(criterion: u32, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "criterion {criterion}: {verdict} ({detail})");
}

fn random_povm(m: usize, rng: &mut impl Rng) -> ExtremalPovm {
    let mut angle = |range: f64| rng.random::<f64>() * range;
    loop {
        let p = match m {
            2 => Ok(orthogonal_pair(angle(PI), angle(2.0 * PI))),
            3 => planar_three(
                angle(PI),
                angle(2.0 * PI),
                angle(2.0 * PI),
                angle(2.0 * PI),
                angle(2.0 * PI),
            ),
            _ => four_element(
                angle(PI),
                angle(2.0 * PI),
                [
                    angle(PI),
                    angle(2.0 * PI),
                    angle(PI),
                    angle(2.0 * PI),
                    angle(PI),
                    angle(2.0 * PI),
                ],
            ),
        };
        if let Ok(p) = p {
            return p;
        }
    }
}

#[test]
fn criterion_1_rank_two_closed_form_matches_minimization() {
    let cfg = SearchConfig::default();
    let s2 = cfg.schedule(2).unwrap();
    let s3 = cfg.schedule(3).unwrap();
    let (mut worst2, mut worst3) = (0.0f64, f64::INFINITY);
    for seed in 0..200 {
        let rho = random_state(2, 4, 10_000 + seed).unwrap();
        let exact = discord_rank2_exact(&rho).unwrap().value;
        let d2 = discord_minimize(&rho, 2, &s2, true).unwrap().value;
        let d3 = discord_minimize(&rho, 3, &s3, true).unwrap().value;
        worst2 = worst2.max((exact - d2).abs());
        worst3 = worst3.min(d3 - exact);
    }
    let ok = worst2 <= 1e-6 && worst3 >= -1e-6;
    report(
        1,
        ok,
        &format!(
            "max |exact - δ2| = {worst2:.3e}, min (δ3 - exact) = {worst3:.3e} over 200 states"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_2_exact_anchors() {
    let cfg = SearchConfig::default();
    let mut failures = Vec::new();
    let mut check = |name: &str, got: f64, want: f64| {
        if (got - want).abs() > 1e-9 {
            failures.push(format!("{name} = {got}, expected {want}"));
        }
    };

    let bell = discord(&bell_state(BellState::PhiPlus), &cfg).unwrap();
    check("Bell δ", bell.value, 1.0);
    check("Bell I", bell.mutual_information, 2.0);
    check("Bell J", bell.classical_correlation, 1.0);

    for seed in 0..5u64 {
        let rho = product_state(
            &random_state(2, 2, 2 * seed).unwrap(),
            &random_state(2, 2, 2 * seed + 1).unwrap(),
        );
        check("product δ", discord(&rho, &cfg).unwrap().value, 0.0);
    }

    let classical = discord(&classical_correlated(0.5).unwrap(), &cfg).unwrap();
    check("classical δ", classical.value, 0.0);
    check("classical I", classical.mutual_information, 1.0);
    check("classical J", classical.classical_correlation, 1.0);

    let ok = failures.is_empty();
    report(
        2,
        ok,
        &if ok {
            "all anchors within 1e-9".into()
        } else {
            failures.join("; ")
        },
    );
    assert!(ok, "{failures:?}");
}

#[test]
fn criterion_3_bloch_and_matrix_routes_agree() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for k in 0..1000u64 {
        let rank = 1 + (k % 4) as usize;
        let rho = random_state(rank, 4, 50_000 + k).unwrap();
        let povm = random_povm(2 + (k % 3) as usize, &mut rng);
        let direct = conditional_entropy_direct(&rho, &povm).unwrap().total;
        let bloch = conditional_entropy_bloch(&to_bloch(&rho).unwrap(), &povm).total;
        worst = worst.max((direct - bloch).abs());
    }
    let ok = worst <= 1e-12;
    report(
        3,
        ok,
        &format!("max difference {worst:.3e} over 1000 tuples, m = 2, 3, 4"),
    );
    assert!(ok);
}

#[test]
fn criterion_4_mdms_needs_more_than_two_elements() {
    let rho = mdms_state(MDMS_M, MDMS_EPS).unwrap();
    let d = deviation(&rho, &SearchConfig::default(), 1e-9).unwrap();
    let best = discord(&rho, &SearchConfig::default()).unwrap();
    let ok = d.raw3 > 0.0 && (1e-6..=3e-5).contains(&d.raw3) && best.m > 2;
    report(
        4,
        ok,
        &format!(
            "Δ3 = {:.4e}, Δ4 = {:.4e}, minimum at m = {}",
            d.raw3, d.raw4, best.m
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_5_perturbation_transition() {
    let cfg = SearchConfig::default();
    let r = mdms_transition_search(MDMS_M, MDMS_EPS, 1e-8, &cfg).unwrap();
    let lambda = r.lambda_star.unwrap_or(f64::NAN);
    let beyond = mdms_deviation3(MDMS_M, MDMS_EPS, lambda + 2.0 * TRANSITION_TOL, &cfg).unwrap();
    let ok = (5e-4..=1e-2).contains(&lambda) && beyond <= 1e-8;
    report(
        5,
        ok,
        &format!("λ* = {lambda:.5}, Δ3(λ* + 2·tol) = {beyond:.3e}"),
    );
    assert!(ok);
}

#[test]
fn criterion_6_random_state_abundance() {
    let rank3 = run_scan(&ScanConfig {
        samples: 500,
        rank: RankSpec::Fixed(3),
        seed: 600_000,
        ..Default::default()
    })
    .unwrap();
    let rank4 = run_scan(&ScanConfig {
        samples: 500,
        rank: RankSpec::Fixed(4),
        seed: 700_000,
        ..Default::default()
    })
    .unwrap();
    let p = rank3.dev3.p;
    let mean_ok = rank3.dev3.mean.map_or(true, |m| m <= 1e-4);
    let abundance_ok = (1e-3..=3e-2).contains(&p);
    let dev4_ok = rank4.dev4.deviant <= 2;
    let max_raw = rank3
        .records
        .iter()
        .map(|r| r.dev3)
        .fold(f64::NEG_INFINITY, f64::max);
    let ok = abundance_ok && mean_ok && dev4_ok;
    report(
        6,
        ok,
        &format!(
            "rank 3: p(Δ3) = {p} [{}], <Δ3> = {:?} [{}], max raw Δ3 = {max_raw:.3e}; rank 4: Δ4 deviants = {} [{}]",
            if abundance_ok { "ok" } else { "outside [1e-3, 3e-2]" },
            rank3.dev3.mean,
            if mean_ok { "ok" } else { "too large" },
            rank4.dev4.deviant,
            if dev4_ok { "ok" } else { "too many" },
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_7_two_element_entanglement_bound() {
    let schedule = StepSchedule::standard_with_floor(0.05).unwrap();
    let mut gap = 0.0f64;
    let mut below = f64::INFINITY;
    for seed in 0..100 {
        let rho = random_state(2, 4, 80_000 + seed).unwrap();
        let b = eof_two_element_bound(&rho, &schedule, true).unwrap();
        let ef = entanglement_of_formation(&rho).unwrap();
        gap = gap.max((b.value - ef).abs());
        below = below.min(b.value - ef);
    }
    let mut residual = 0.0f64;
    let mut range_ok = true;
    for seed in 0..50 {
        let rho = random_state(2, 6, 90_000 + seed).unwrap();
        let b = eof_two_element_bound(&rho, &schedule, true).unwrap();
        residual = residual.max(b.reconstruction_residual);
        let sb = von_neumann_entropy(&partial_trace(rho.matrix(), &[2, 3], &[0]).unwrap()).unwrap();
        range_ok &= b.value >= 0.0 && b.value <= sb + 1e-9;
    }
    let ok = gap <= 1e-6 && below >= -1e-9 && residual <= 1e-10 && range_ok;
    report(
        7,
        ok,
        &format!(
            "2x2: max |bound - E_F| = {gap:.3e}; 2x3: max reconstruction residual = {residual:.3e}, range {}",
            if range_ok { "ok" } else { "violated" }
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_8_property_suites() {
    let mut failures = Vec::new();
    let mut rng = ChaCha20Rng::seed_from_u64(8);

    // Local-unitary invariance.
    let cfg = SearchConfig::default();
    let mut lu = 0.0f64;
    for k in 0..100u64 {
        let rho = random_state(2 + (k % 3) as usize, 4, 120_000 + k).unwrap();
        let moved = rho
            .local_unitary(&random_unitary(2, &mut rng), &random_unitary(2, &mut rng))
            .unwrap();
        lu = lu
            .max((discord(&rho, &cfg).unwrap().value - discord(&moved, &cfg).unwrap().value).abs());
    }
    if lu > 2e-6 {
        failures.push(format!("local-unitary change {lu:.3e}"));
    }

    // Running minima of the step profile.
    let mut profile_states = vec![mdms_state(MDMS_M, MDMS_EPS).unwrap()];
    profile_states.extend((0..3).map(|k| random_state(3, 4, 130_000 + k).unwrap()));
    let mut monotone = true;
    for rho in &profile_states {
        let rows = step_size_profile(rho, &StepSchedule::standard(), PROFILE_M4_LIMIT).unwrap();
        let boxed: Vec<_> = rows
            .iter()
            .filter(|r| r.step_over_pi <= 0.25 + 1e-12)
            .collect();
        for w in boxed.windows(2) {
            monotone &= w[1].min2 <= w[0].min2 && w[1].min3 <= w[0].min3;
            if let (Some(a), Some(b)) = (w[0].min4, w[1].min4) {
                monotone &= b <= a;
            }
        }
    }
    if !monotone {
        failures.push("running minima increased".into());
    }

    // POVM completeness.
    let mut completeness = 0.0f64;
    for k in 0..600 {
        let r = validate_povm(&random_povm(2 + k % 3, &mut rng));
        completeness = completeness
            .max(r.weight_residual)
            .max(r.vector_residual)
            .max(r.operator_residual);
    }
    if completeness > 1e-12 {
        failures.push(format!("POVM residual {completeness:.3e}"));
    }

    // Eigensolver reconstruction.
    let mut recon = 0.0f64;
    for dim in 2..=16 {
        for _ in 0..5 {
            let g = ComplexMatrix::from_fn(dim, dim, |_, _| {
                C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let h = (&g + &g.adjoint()).scale_real(0.5);
            let eig = hermitian_eigensystem(&h).unwrap();
            recon = recon.max(eig.reconstruct().max_abs_diff(&h));
        }
    }
    if recon > 1e-10 {
        failures.push(format!("eigen reconstruction {recon:.3e}"));
    }

    // Scan determinism across worker counts.
    let base = ScanConfig {
        samples: 12,
        rank: RankSpec::Fixed(3),
        seed: 140_000,
        ..Default::default()
    };
    let csv = |threads: usize| {
        let s = run_scan(&ScanConfig {
            threads,
            ..base.clone()
        })
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&s.records, &mut buf).unwrap();
        buf
    };
    let identical = csv(1) == csv(4);
    if !identical {
        failures.push("scan CSV differs between 1 and 4 workers".into());
    }

    let ok = failures.is_empty();
    report(
        8,
        ok,
        &format!(
            "LU change {lu:.2e}, running minima {}, POVM residual {completeness:.2e}, eigen residual {recon:.2e}, scan CSV {}",
            if monotone { "monotone" } else { "NOT monotone" },
            if identical { "identical" } else { "differs" }
        ),
    );
    assert!(ok, "{failures:?}");
}
