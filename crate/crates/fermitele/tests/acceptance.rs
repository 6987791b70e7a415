//! End-to-end acceptance gate: one test (and one printed pass/fail line) per
//! criterion, each with its tolerance pinned next to the check.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::process::Command;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fermitele::dynamics::{
    dense_evolution_oracle, evolve_density_density, trotter_evolve, DensityInteraction,
    OneBodyHamiltonian, PhaseConvention,
};
use fermitele::entanglement::{
    brute_force_closest_fock, geometric_entanglement, linear_entropy, mode_rdm, one_particle_rdm,
    particle_entropy, BruteForceBudget, GeometricMode, GeometricOptions,
};
use fermitele::measurement::{
    check_beta_bound, check_measurement_inequality, random_state, sweep_seed, EntanglementMeasure,
    InequalitySample,
};
use fermitele::protocols::{
    resource_preparation_qdot, run_h2_protocol, run_nv_protocol, run_qdot_protocol,
};
use fermitele::{OrbitalPartition, OrbitalUnitary, PureState, SlaterDeterminant, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn conclude(number: usize, name: &str, checks: &[(&str, bool)]) {
    let pass = checks.iter().all(|(_, ok)| *ok);
    println!("criterion {number:02} {name}: {}", if pass { "PASS" } else { "FAIL" });
    for (what, ok) in checks {
        assert!(*ok, "criterion {number:02} {name}: failed check `{what}`");
    }
}

/// `(ĉ†_1↑ ĉ†_2↓ + ĉ†_1↓ ĉ†_2↑)|0⟩/√2` in the basis (1↑, 1↓, 2↑, 2↓).
fn psi_double_prime() -> PureState {
    let h = c(FRAC_1_SQRT_2, 0.0);
    PureState::from_terms(
        4,
        &[
            (SlaterDeterminant::from_orbitals(&[0, 3]), h),
            (SlaterDeterminant::from_orbitals(&[1, 2]), h),
        ],
    )
}

/// The three-determinant, three-electron state in the basis
/// (1↑, 1↓, 2↑, 2↓, 3↑, 3↓).
fn psi_triple_prime() -> PureState {
    let t = 1.0 / 3f64.sqrt();
    PureState::from_terms(
        6,
        &[
            (SlaterDeterminant::from_orbitals(&[1, 2, 4]), c(t, 0.0)),
            (SlaterDeterminant::from_orbitals(&[0, 3, 4]), c(-t, 0.0)),
            (SlaterDeterminant::from_orbitals(&[0, 2, 5]), c(t, 0.0)),
        ],
    )
}

#[test]
fn criterion_01_two_electron_entangled_state() {
    let psi = psi_double_prime();
    let entropy = particle_entropy(&psi).unwrap();
    let options = GeometricOptions { mode: GeometricMode::Closed2e, ..Default::default() };
    let geometric = geometric_entanglement(&psi, &options).unwrap().value;

    // All 7 nontrivial bipartitions of 4 orbitals, one representative per
    // complement pair.
    let mut all_mode_entangled = true;
    for mask in 1u32..8 {
        let set: Vec<usize> = (0..4).filter(|&k| mask >> k & 1 == 1).collect();
        let partition = OrbitalPartition::new(4, &set).unwrap();
        let s = linear_entropy(&mode_rdm(&psi, &partition).matrix);
        all_mode_entangled &= s > 1e-6;
    }

    conclude(
        1,
        "two-electron entangled state",
        &[
            ("particle_entropy = 1 ± 1e-10", (entropy - 1.0).abs() <= 1e-10),
            ("geometric = 0.5 ± 1e-10 (closed form)", (geometric - 0.5).abs() <= 1e-10),
            ("mode entropy > 0 for all 7 bipartitions", all_mode_entangled),
        ],
    );
}

#[test]
fn criterion_02_three_electron_state_and_natural_orbitals() {
    let psi = psi_triple_prime();
    let entropy = particle_entropy(&psi).unwrap();

    // Per-site rotation to the basis where the leading determinant carries
    // weight 2/3; the 1-RDM is then block-diagonal with 2×2 site blocks.
    let s2 = 2f64.sqrt() / 3f64.sqrt();
    let s1 = 1.0 / 3f64.sqrt();
    let mut w = DMatrix::<C64>::zeros(6, 6);
    for site in 0..3 {
        let (u, d) = (2 * site, 2 * site + 1);
        w[(u, u)] = c(s2, 0.0);
        w[(d, u)] = c(s1, 0.0);
        w[(u, d)] = c(-s1, 0.0);
        w[(d, d)] = c(s2, 0.0);
    }
    let rotated = psi
        .apply_orbital_unitary(&OrbitalUnitary::basis_change_from_new_orbitals(w).unwrap())
        .unwrap();
    let rho = one_particle_rdm(&rotated).matrix;
    let r2 = 2f64.sqrt();
    let expect = [
        [5.0, -r2, 0.0, 0.0, 0.0, 0.0],
        [-r2, 4.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 5.0, -r2, 0.0, 0.0],
        [0.0, 0.0, -r2, 4.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 5.0, -r2],
        [0.0, 0.0, 0.0, 0.0, -r2, 4.0],
    ];
    let mut rdm_matches = true;
    for i in 0..6 {
        for j in 0..6 {
            rdm_matches &= (rho[(i, j)] - c(expect[i][j] / 9.0, 0.0)).norm() <= 1e-10;
        }
    }

    let optimized = geometric_entanglement(
        &psi,
        &GeometricOptions { mode: GeometricMode::Optimize, restarts: 8, ..Default::default() },
    )
    .unwrap()
    .value;
    let oracle = brute_force_closest_fock(&psi, &BruteForceBudget::default()).unwrap();

    conclude(
        2,
        "three-electron state and natural orbitals",
        &[
            ("particle_entropy = 4/3 ± 1e-10", (entropy - 4.0 / 3.0).abs() <= 1e-10),
            ("rotated 1-RDM elementwise ± 1e-10", rdm_matches),
            ("geometric = 5/9 ± 1e-6 via optimizer", (optimized - 5.0 / 9.0).abs() <= 1e-6),
            ("geometric = 5/9 ± 1e-6 via brute-force oracle", (oracle - 5.0 / 9.0).abs() <= 1e-6),
        ],
    );
}

/// On-site repulsion for two sites, diagonal in the site basis, expressed in
/// the bonding/antibonding working basis (a↑, a↓, b↑, b↓).
fn minimal_model(u: f64) -> DensityInteraction {
    let h = FRAC_1_SQRT_2;
    let mut sites = DMatrix::<C64>::zeros(4, 4);
    for spin in 0..2 {
        sites[(spin, spin)] = c(h, 0.0);
        sites[(2 + spin, spin)] = c(h, 0.0);
        sites[(spin, 2 + spin)] = c(h, 0.0);
        sites[(2 + spin, 2 + spin)] = c(-h, 0.0);
    }
    DensityInteraction::new(4, vec![(vec![0, 1], u), (vec![2, 3], u)])
        .unwrap()
        .with_diagonalizing_basis(OrbitalUnitary::new(sites).unwrap())
        .unwrap()
}

#[test]
fn criterion_03_minimal_interaction_model() {
    let u = 2.0;
    let psi = PureState::determinant(4, SlaterDeterminant::from_orbitals(&[0, 3]));
    let part_a = OrbitalPartition::new(4, &[0, 1]).unwrap();
    let conv = PhaseConvention::default();

    let s_initial = linear_entropy(&mode_rdm(&psi, &part_a).matrix);
    let quarter =
        evolve_density_density(&psi, &minimal_model(u), PI / (2.0 * u), conv).unwrap();
    let s_quarter = linear_entropy(&mode_rdm(&quarter, &part_a).matrix);
    let particle_quarter = particle_entropy(&quarter).unwrap();

    // In the site basis the interaction is local to each site, so the
    // site-site mode entropy must stay put for all times.
    let site_interaction =
        DensityInteraction::new(4, vec![(vec![0, 1], u), (vec![2, 3], u)]).unwrap();
    let h = FRAC_1_SQRT_2;
    let mut w = DMatrix::<C64>::zeros(4, 4);
    for spin in 0..2 {
        w[(spin, spin)] = c(h, 0.0);
        w[(2 + spin, spin)] = c(h, 0.0);
        w[(spin, 2 + spin)] = c(h, 0.0);
        w[(2 + spin, 2 + spin)] = c(-h, 0.0);
    }
    let site_state = psi
        .apply_orbital_unitary(&OrbitalUnitary::basis_change_from_new_orbitals(w).unwrap())
        .unwrap();
    let s_site0 = linear_entropy(&mode_rdm(&site_state, &part_a).matrix);
    let mut site_entropy_constant = true;
    for k in 0..20 {
        let t = PI / u * k as f64 / 19.0;
        let evolved = evolve_density_density(&site_state, &site_interaction, t, conv).unwrap();
        let s = linear_entropy(&mode_rdm(&evolved, &part_a).matrix);
        site_entropy_constant &= (s - s_site0).abs() <= 1e-10;
    }

    conclude(
        3,
        "minimal interaction model",
        &[
            ("S[rho_a](0) = 0 ± 1e-12", s_initial.abs() <= 1e-12),
            ("S[rho_a](pi/2U) = 0.5 ± 1e-10", (s_quarter - 0.5).abs() <= 1e-10),
            ("particle_entropy(pi/2U) = 1 ± 1e-10", (particle_quarter - 1.0).abs() <= 1e-10),
            ("S[rho_site1](t) constant to 1e-10 over 20 t", site_entropy_constant),
        ],
    );
}

#[test]
fn criterion_04_trotter_convergence() {
    // Two-site Hubbard in the site basis: spin-preserving hopping plus
    // on-site repulsion.
    let mut hm = DMatrix::<C64>::zeros(4, 4);
    for spin in 0..2 {
        hm[(spin, 2 + spin)] = c(-0.8, 0.0);
        hm[(2 + spin, spin)] = c(-0.8, 0.0);
    }
    let h1 = OneBodyHamiltonian::new(hm).unwrap();
    let interaction =
        DensityInteraction::new(4, vec![(vec![0, 1], 2.0), (vec![2, 3], 2.0)]).unwrap();
    let psi = PureState::determinant(4, SlaterDeterminant::from_orbitals(&[0, 3]));
    let conv = PhaseConvention::default();
    let exact = dense_evolution_oracle(&psi, Some(&h1), Some(&interaction), 1.0, conv).unwrap();
    let error = |steps: usize| -> f64 {
        let approx = trotter_evolve(&psi, &h1, &interaction, 1.0, steps, conv).unwrap();
        approx.add(&exact.scaled(c(-1.0, 0.0))).norm()
    };

    let mut checks = Vec::new();
    for steps in [4usize, 8, 16] {
        let ratio = error(steps) / error(2 * steps);
        checks.push((steps, (1.7..=2.3).contains(&ratio)));
    }
    conclude(
        4,
        "trotter error halves with doubled steps",
        &[
            ("ratio in [1.7, 2.3] at M = 4", checks[0].1),
            ("ratio in [1.7, 2.3] at M = 8", checks[1].1),
            ("ratio in [1.7, 2.3] at M = 16", checks[2].1),
        ],
    );
}

#[test]
fn criterion_05_h2_protocol() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut stage_formulas = true;
    let mut stage_particle_zero = true;
    let mut branch_probabilities = true;
    let mut success_exact = true;
    let mut corrected_fidelities = true;

    for _ in 0..10 {
        let theta = rng.gen::<f64>() * PI / 2.0;
        let phi = rng.gen::<f64>() * TAU;
        let a = c(theta.cos(), 0.0);
        let b = c(theta.sin(), 0.0) * c(0.0, phi).exp();
        let report = run_h2_protocol(a, b).unwrap();

        let (a4, b4) = (a.norm().powi(4), b.norm().powi(4));
        let expected = [0.5, 1.0 - a4 - b4, 1.0 - (a4 + b4) / 2.0];
        for (stage, target) in report.stages.iter().zip(expected) {
            stage_formulas &= (stage.mode_entropies[0].1 - target).abs() <= 1e-10;
            stage_particle_zero &= stage.particle_entropy.abs() <= 1e-10;
        }

        let branch = |label: &str| {
            report.branches.iter().find(|br| br.label.starts_with(label)).unwrap()
        };
        let up = branch("Ay_up=1,Ay_dn=0");
        let dn = branch("Ay_up=0,Ay_dn=1");
        branch_probabilities &= (up.probability - 0.25).abs() <= 1e-10
            && (dn.probability - 0.25).abs() <= 1e-10
            && (branch("Ay_up=1,Ay_dn=1").probability - a.norm_sqr() / 2.0).abs() <= 1e-10
            && (branch("Ay_up=0,Ay_dn=0").probability - b.norm_sqr() / 2.0).abs() <= 1e-10;
        corrected_fidelities &=
            (up.fidelity - 1.0).abs() <= 1e-10 && (dn.fidelity - 1.0).abs() <= 1e-10;
        success_exact &= (up.probability + dn.probability - 0.5).abs() <= 1e-12
            && (report.success_probability - 0.5).abs() <= 1e-12;
    }

    conclude(
        5,
        "H2 teleportation protocol",
        &[
            ("stage mode entropies match formulas ± 1e-10", stage_formulas),
            ("particle_entropy 0 ± 1e-10 pre-measurement", stage_particle_zero),
            ("branch probabilities (1/4, 1/4, |a|^2/2, |b|^2/2) ± 1e-10", branch_probabilities),
            ("success probability 0.5 from the two correctable branches", success_exact),
            ("corrected-branch fidelity 1 ± 1e-10", corrected_fidelities),
        ],
    );
}

#[test]
fn criterion_06_nv_protocol() {
    let report = run_nv_protocol(c(0.6, 0.0), c(0.8, 0.0)).unwrap();
    let mut stage_values = true;
    let mut stage_geometric = true;
    for stage in &report.stages {
        stage_values &= (stage.particle_entropy - 1.0).abs() <= 1e-10
            && (stage.mode_entropies[0].1 - 0.5).abs() <= 1e-10;
        stage_geometric &= (stage.geometric - 0.5).abs() <= 1e-6;
    }
    let four_quarters = report.branches.len() == 4
        && report.branches.iter().all(|br| (br.probability - 0.25).abs() <= 1e-10);
    let fidelities = report.branches.iter().all(|br| (br.fidelity - 1.0).abs() <= 1e-9);

    conclude(
        6,
        "NV0 teleportation protocol",
        &[
            ("particle_entropy 1 and S[rho_N] 0.5 ± 1e-10 at every stage", stage_values),
            ("geometric 0.5 ± 1e-6", stage_geometric),
            ("four branches at 0.25 ± 1e-10", four_quarters),
            ("all fidelities 1 ± 1e-9 after correction", fidelities),
        ],
    );
}

#[test]
fn criterion_07_quantum_dot_protocol() {
    let resource = resource_preparation_qdot().unwrap();
    let resource_entropy = particle_entropy(&resource.state).unwrap();
    let resource_geometric = geometric_entanglement(
        &resource.state,
        &GeometricOptions { mode: GeometricMode::Closed2e, ..Default::default() },
    )
    .unwrap()
    .value;
    let partition = OrbitalPartition::new(6, &[4, 5]).unwrap();
    let resource_mode = linear_entropy(&mode_rdm(&resource.state, &partition).matrix);

    let report = run_qdot_protocol(c(0.6, 0.0), c(0.8, 0.0), 1.0).unwrap();
    let tunneled = report.stages.iter().find(|s| s.label == "tunneled").unwrap();
    let mut probabilities: Vec<f64> = report.branches.iter().map(|br| br.probability).collect();
    probabilities.sort_by(|x, y| y.total_cmp(x));
    let expected = [0.25, 0.25, 0.125, 0.125, 0.125, 0.125];
    let branch_probabilities = probabilities.len() == 6
        && probabilities.iter().zip(expected).all(|(p, e)| (p - e).abs() <= 1e-10);
    let fidelities = report.branches.iter().all(|br| (br.fidelity - 1.0).abs() <= 1e-9);

    conclude(
        7,
        "quantum-dot teleportation protocol",
        &[
            ("resource particle_entropy 1 ± 1e-10", (resource_entropy - 1.0).abs() <= 1e-10),
            ("resource geometric 0.5 ± 1e-10", (resource_geometric - 0.5).abs() <= 1e-10),
            ("resource mode entropy 0.5 ± 1e-10", (resource_mode - 0.5).abs() <= 1e-10),
            (
                "post-tunneling particle_entropy 1.25 ± 1e-10",
                (tunneled.particle_entropy - 1.25).abs() <= 1e-10,
            ),
            ("post-tunneling geometric 0.5 ± 1e-6", (tunneled.geometric - 0.5).abs() <= 1e-6),
            ("six branch probabilities (0.25 x2, 0.125 x4) ± 1e-10", branch_probabilities),
            ("all fidelities 1 ± 1e-9", fidelities),
        ],
    );
}

#[test]
fn criterion_08_measurement_inequality_sweeps() {
    let entropy_sweep =
        fermitele::scenario::sweep_inequality(6, 3, 1000, EntanglementMeasure::Entropy, 8)
            .unwrap();
    let geometric_sweep =
        fermitele::scenario::sweep_inequality(5, 2, 200, EntanglementMeasure::Geometric, 8)
            .unwrap();

    let mut beta_holds = true;
    for k in 0..200u64 {
        let seed = sweep_seed(80, k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = 5;
        let e = rng.gen_range(0..m);
        let alpha = rng.gen::<f64>();
        let theta = rng.gen::<f64>() * TAU;
        let psi_e = random_state(m, 1, sweep_seed(seed, 1), Some(e)).unwrap();
        let psi_s = random_state(m, 2, sweep_seed(seed, 2), Some(e)).unwrap();
        let sample = InequalitySample::new(psi_e, psi_s, e, alpha, theta).unwrap();
        beta_holds &= check_beta_bound(&sample).unwrap().holds;
        // The sweep path and the direct check agree on the entropy measure.
        beta_holds &= check_measurement_inequality(&sample, EntanglementMeasure::Entropy)
            .unwrap()
            .holds;
    }

    conclude(
        8,
        "measurement inequality sweeps",
        &[
            ("1000 entropy samples, zero violations", entropy_sweep.violations == 0),
            ("200 geometric samples, zero violations", geometric_sweep.violations == 0),
            ("beta bound holds on 200 samples", beta_holds),
        ],
    );
}

#[test]
fn criterion_09_property_suites() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let m = 4;
    let mut unitary_invariance = true;
    let mut local_invariance = true;
    let mut purity_symmetry = true;
    let mut anticommutation = true;

    for case in 0..200u64 {
        let psi = random_state(m, 2, sweep_seed(900, case), None).unwrap();

        // Random one-body generator → unitary propagator.
        let mut h = DMatrix::<C64>::zeros(m, m);
        for i in 0..m {
            h[(i, i)] = c(rng.gen::<f64>() - 0.5, 0.0);
            for j in i + 1..m {
                let z = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        let u = OneBodyHamiltonian::new(h).unwrap().propagator(1.0, PhaseConvention::default());
        let rotated = psi.apply_orbital_unitary(&u).unwrap();
        unitary_invariance &= (particle_entropy(&rotated).unwrap()
            - particle_entropy(&psi).unwrap())
        .abs()
            <= 1e-9;

        // Unitary local to the partition {0,1} and its complement.
        let block = |theta: f64, phi: f64| {
            let (s, t) = (theta.sin(), theta.cos());
            let p = c(0.0, phi).exp();
            [[c(t, 0.0) * p, c(-s, 0.0)], [c(s, 0.0), c(t, 0.0) * p.conj()]]
        };
        let local = OrbitalUnitary::embed_pair(
            m,
            0,
            1,
            block(rng.gen::<f64>() * TAU, rng.gen::<f64>() * TAU),
        )
        .unwrap()
        .compose(
            &OrbitalUnitary::embed_pair(
                m,
                2,
                3,
                block(rng.gen::<f64>() * TAU, rng.gen::<f64>() * TAU),
            )
            .unwrap(),
        );
        let part_a = OrbitalPartition::new(m, &[0, 1]).unwrap();
        let part_b = OrbitalPartition::new(m, &[2, 3]).unwrap();
        let s_a = linear_entropy(&mode_rdm(&psi, &part_a).matrix);
        let s_b = linear_entropy(&mode_rdm(&psi, &part_b).matrix);
        let moved = psi.apply_orbital_unitary(&local).unwrap();
        local_invariance &=
            (linear_entropy(&mode_rdm(&moved, &part_a).matrix) - s_a).abs() <= 1e-9;
        purity_symmetry &= (s_a - s_b).abs() <= 1e-9;

        // ĉ†_i ĉ†_j = −ĉ†_j ĉ†_i and ĉ_i ĉ†_i + ĉ†_i ĉ_i = 1.
        let base = random_state(m, 1, sweep_seed(901, case), None).unwrap();
        let (i, j) = (rng.gen_range(0..m), rng.gen_range(0..m));
        if i != j {
            let ij = base.apply_creation(j).unwrap().apply_creation(i).unwrap();
            let ji = base.apply_creation(i).unwrap().apply_creation(j).unwrap();
            anticommutation &= ij.add(&ji).norm() <= 1e-12;
        }
        let number = base
            .apply_creation(i)
            .unwrap()
            .apply_annihilation(i)
            .unwrap()
            .add(&base.apply_annihilation(i).unwrap().apply_creation(i).unwrap());
        anticommutation &= number.add(&base.scaled(c(-1.0, 0.0))).norm() <= 1e-12;
    }

    conclude(
        9,
        "property suites over 200 seeded cases",
        &[
            ("particle_entropy invariant under orbital unitaries", unitary_invariance),
            ("mode entropy invariant under local unitaries", local_invariance),
            ("purity symmetry S[rho_A] = S[rho_B]", purity_symmetry),
            ("anticommutation relations", anticommutation),
        ],
    );
}

#[test]
fn criterion_10_deterministic_reports() {
    let fixture = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/h2.scn");
    let run = || {
        let output = Command::new(env!("CARGO_BIN_EXE_fermitele"))
            .args(["run", fixture, "--seed", "7"])
            .output()
            .expect("binary runs");
        assert!(output.status.success(), "scenario run failed: {output:?}");
        output.stdout
    };
    let first = run();
    let second = run();
    conclude(
        10,
        "byte-identical reports for identical (scenario, seed)",
        &[("two runs of h2.scn --seed 7 match byte for byte", first == second)],
    );
}
