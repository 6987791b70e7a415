//! Teleportation inside a neutral NV center: five electrons (three holes)
//! in eight dangling-bond spin-orbitals.
//!
//! Everything is computed on the electron-picture state; the hole language
//! of the scheme only enters through the order in which annihilation
//! operators are applied and through the particle-hole map used in tests.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;

use super::{
    check_qubit, label_outcome, stage_report, success_probability, BranchReport, ProtocolReport,
};
use crate::error::{Error, Result};
use crate::fock::{OrbitalUnitary, PureState, C64};
use crate::measurement::{apply_correction, measure_occupation, teleport_fidelity, Aggregate, Outcome};

// Spin-orbital layout: the three C dangling orbitals (m_l = 0, 1, −1),
// then the N orbital, each as an (↑, ↓) pair.
const C0_UP: usize = 0;
const C0_DN: usize = 1;
const C1_UP: usize = 2;
const C1_DN: usize = 3;
const CM1_UP: usize = 4;
const CM1_DN: usize = 5;
const N_UP: usize = 6;
const N_DN: usize = 7;

pub fn run_nv_protocol(a: C64, b: C64) -> Result<ProtocolReport> {
    check_qubit(a, b)?;
    let filled = PureState::filled(8);
    let half = C64::new(FRAC_1_SQRT_2, 0.0);

    // Bell pair of holes: (ĉ_{N↓}ĉ_{1↓} + ĉ_{N↑}ĉ_{−1↓})|𝟏⟩ / √2.
    let bell = filled
        .apply_annihilation(C1_DN)?
        .apply_annihilation(N_DN)?
        .add(&filled.apply_annihilation(CM1_DN)?.apply_annihilation(N_UP)?)
        .scaled(half);

    // Qubit hole on the C m_l = 0 orbital, then the combined state.
    let qubit = filled
        .apply_annihilation(C0_UP)?
        .scaled(a)
        .add(&filled.apply_annihilation(C0_DN)?.scaled(b));
    let combined = qubit
        .apply_annihilation(C1_DN)?
        .apply_annihilation(N_DN)?
        .add(&qubit.apply_annihilation(CM1_DN)?.apply_annihilation(N_UP)?)
        .scaled(half);

    let flipped = combined.apply_orbital_unitary(&spin_flip_unitary(a, b)?)?;

    let partitions = [("N", vec![N_UP, N_DN])];
    let stages = vec![
        stage_report("bell_pair", &bell, &partitions)?,
        stage_report("combined", &combined, &partitions)?,
        stage_report("spin_flipped", &flipped, &partitions)?,
    ];

    // The four branches are distinguished by occupation in the mixed basis
    // u± = (1↑ ± −1↓)/√2 and v± = (1↓ ± −1↑)/√2 on the C m_l = ±1 orbitals.
    let rotated = flipped.apply_orbital_unitary(
        &OrbitalUnitary::basis_change_from_new_orbitals(measurement_basis())?,
    )?;
    let measured = measure_occupation(&rotated, &[C1_UP, C1_DN, CM1_UP, CM1_DN], Aggregate::PerOrbital)?;
    let names = ["C0_up", "C0_dn", "u_plus", "v_plus", "v_minus", "u_minus", "N_up", "N_dn"];

    let mut branches = Vec::with_capacity(measured.len());
    for branch in measured {
        let empty = match &branch.outcome {
            Outcome::PerOrbital(entries) => entries.iter().find(|(_, occ)| !occ).map(|(o, _)| *o),
            Outcome::Total { .. } => None,
        };
        let (correction, name) = match empty {
            Some(o) if o == C1_DN => (None, None), // v+ branch: already the target
            Some(o) if o == CM1_UP => (Some([[1.0, 0.0], [0.0, -1.0]]), Some("z_flip_N")),
            Some(o) if o == C1_UP => (Some([[0.0, 1.0], [1.0, 0.0]]), Some("x_swap_N")),
            Some(o) if o == CM1_DN => (Some([[0.0, 1.0], [-1.0, 0.0]]), Some("xz_swap_N")),
            _ => {
                return Err(Error::Execution {
                    index: 0,
                    message: format!("unexpected branch outcome {}", branch.outcome),
                })
            }
        };
        let resolved = match correction {
            Some(block) => {
                // The table acts on the hole-spin pair; electron orbitals
                // transform with the conjugate (real here, so identical).
                let unitary = OrbitalUnitary::embed_pair(
                    8,
                    N_UP,
                    N_DN,
                    block.map(|row| row.map(|x| C64::new(x, 0.0))),
                )?;
                apply_correction(&branch, &unitary)?
            }
            None => branch.clone(),
        };
        // Target: hole qubit (a ↑ + b ↓) moved to N, i.e. electrons in
        // a ĉ†_{N↓} − b ĉ†_{N↑} on top of the shared rest.
        branches.push(BranchReport {
            label: label_outcome(&branch.outcome, &names),
            probability: branch.probability,
            correction: name.map(String::from),
            fidelity: teleport_fidelity(&resolved, (N_UP, N_DN), (-b, a)),
        });
    }
    let success = success_probability(&branches);
    Ok(ProtocolReport {
        protocol: "nv0".to_string(),
        stages,
        branches,
        success_probability: success,
        caveats: vec![
            "the spin-flip step is parametrized by the teleported coefficients (a, b) and is \
             only a valid one-particle unitary when a·conj(b) is real"
                .to_string(),
        ],
    })
}

/// The spin-flip interaction, written as the orbital unitary it amounts to:
/// holes transform as ĉ_{k↓} → b ĉ_{k↓} + a ĉ_{k↑}, ĉ_{k↑} → −a ĉ_{k↓} +
/// b ĉ_{k↑} on the C m_l = ±1 pairs, and ĉ_{0↓} → b ĉ_{0↓} − a ĉ_{0↑},
/// ĉ_{0↑} → a ĉ_{0↓} + b ĉ_{0↑} on the m_l = 0 pair; electron creation
/// operators pick up the complex conjugates.
fn spin_flip_unitary(a: C64, b: C64) -> Result<OrbitalUnitary> {
    let (ac, bc) = (a.conj(), b.conj());
    let mut v = DMatrix::<C64>::identity(8, 8);
    for (up, dn) in [(C1_UP, C1_DN), (CM1_UP, CM1_DN)] {
        v[(up, up)] = bc;
        v[(dn, up)] = -ac;
        v[(up, dn)] = ac;
        v[(dn, dn)] = bc;
    }
    v[(C0_UP, C0_UP)] = bc;
    v[(C0_DN, C0_UP)] = ac;
    v[(C0_UP, C0_DN)] = -ac;
    v[(C0_DN, C0_DN)] = bc;
    OrbitalUnitary::new(v).map_err(|_| {
        Error::InvalidArgument(
            "the spin-flip step is only unitary when a·conj(b) is real".to_string(),
        )
    })
}

/// New-orbital columns of the measurement basis: the C m_l = ±1 orbitals are
/// mixed pairwise, everything else stays put.
fn measurement_basis() -> DMatrix<C64> {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let mut w = DMatrix::<C64>::identity(8, 8);
    // u± live on (1↑, −1↓); v± on (1↓, −1↑).
    for &(p, q, plus, minus) in
        &[(C1_UP, CM1_DN, C1_UP, CM1_DN), (C1_DN, CM1_UP, C1_DN, CM1_UP)]
    {
        w[(p, plus)] = h;
        w[(q, plus)] = h;
        w[(p, minus)] = h;
        w[(q, minus)] = -h;
    }
    w
}
