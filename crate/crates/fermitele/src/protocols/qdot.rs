//! Teleportation along a linear array of three quantum dots.
//!
//! The qubit starts as a spin on dot 1, the resource is a two-electron
//! singlet spread over dots 2 and 3, and a conditional-hopping interaction
//! between dots 1 and 2 (diagonal in their bonding basis) entangles the
//! two before the dot-1/dot-2 charge-and-spin measurement.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;

use super::{
    check_qubit, label_outcome, stage_report, success_probability, BranchReport, ProtocolReport,
};
use crate::dynamics::{evolve_density_density, DensityInteraction, PhaseConvention};
use crate::error::{Error, Result};
use crate::fock::{OrbitalUnitary, PureState, C64};
use crate::measurement::{apply_correction, measure_occupation, teleport_fidelity, Aggregate, Outcome};

const D1_UP: usize = 0;
const D1_DN: usize = 1;
const D2_UP: usize = 2;
const D2_DN: usize = 3;
const D3_UP: usize = 4;
const D3_DN: usize = 5;

/// The prepared singlet resource and the probability of the occupation
/// post-selection that produced it.
#[derive(Clone, Debug)]
pub struct QdotResource {
    pub state: PureState,
    pub post_selection_probability: f64,
}

/// Prepare the dot-2/dot-3 singlet from a doubly occupied dot 3: a 50/50
/// hop per spin channel followed by post-selection on one electron in each
/// dot.
pub fn resource_preparation_qdot() -> Result<QdotResource> {
    let vac = PureState::vacuum(6);
    let start = vac.apply_creation(D3_DN)?.apply_creation(D3_UP)?;
    let h = FRAC_1_SQRT_2;
    let beam = |re: f64| C64::new(re, 0.0);
    let block = [[beam(h), beam(h)], [beam(-h), beam(h)]];
    let hop = OrbitalUnitary::embed_pair(6, D2_UP, D3_UP, block)?
        .compose(&OrbitalUnitary::embed_pair(6, D2_DN, D3_DN, block)?);
    let hopped = start.apply_orbital_unitary(&hop)?;
    let branch = measure_occupation(&hopped, &[D2_UP, D2_DN], Aggregate::Total)?
        .into_iter()
        .find(|b| matches!(&b.outcome, Outcome::Total { count: 1, .. }))
        .ok_or_else(|| Error::Execution {
            index: 0,
            message: "post-selection on single occupation of dot 2 found no support".to_string(),
        })?;
    Ok(QdotResource { state: branch.post_state, post_selection_probability: branch.probability })
}

pub fn run_qdot_protocol(alpha: C64, beta: C64, u: f64) -> Result<ProtocolReport> {
    check_qubit(alpha, beta)?;
    if u <= 0.0 {
        return Err(Error::InvalidArgument(format!("interaction strength U = {u} must be positive")));
    }
    let resource = resource_preparation_qdot()?;
    let combined = resource
        .state
        .apply_creation(D1_UP)?
        .scaled(alpha)
        .add(&resource.state.apply_creation(D1_DN)?.scaled(beta));

    // Conditional hopping between dots 1 and 2, diagonal in their bonding
    // basis: pair energies U/4, 3U/4, 5U/4, 7U/4 for (a↑a↓), (a↓b↑),
    // (b↑b↓), (a↑b↓); run for t = π/U.
    let interaction = DensityInteraction::from_pairs(
        6,
        &[
            ((D1_UP, D1_DN), u / 4.0),
            ((D1_DN, D2_UP), 3.0 * u / 4.0),
            ((D2_UP, D2_DN), 5.0 * u / 4.0),
            ((D1_UP, D2_DN), 7.0 * u / 4.0),
        ],
    )?
    .with_diagonalizing_basis(bonding_basis()?)?;
    let tunneled = evolve_density_density(&combined, &interaction, PI / u, PhaseConvention::PlusIHt)?;

    let partitions = [("dot3", vec![D3_UP, D3_DN])];
    let stages = vec![
        stage_report("resource", &resource.state, &partitions)?,
        stage_report("combined", &combined, &partitions)?,
        stage_report("tunneled", &tunneled, &partitions)?,
    ];

    // Relabel the dot-1 and dot-2 spins along x, then read out all four
    // orbitals; six outcome patterns survive.
    let rotated =
        tunneled.apply_orbital_unitary(&OrbitalUnitary::basis_change_from_new_orbitals(x_basis())?)?;
    let measured =
        measure_occupation(&rotated, &[D1_UP, D1_DN, D2_UP, D2_DN], Aggregate::PerOrbital)?;
    let names = ["d1x_up", "d1x_dn", "d2x_up", "d2x_dn", "d3_up", "d3_dn"];

    let mut branches = Vec::with_capacity(measured.len());
    for branch in measured {
        let pattern = match &branch.outcome {
            Outcome::PerOrbital(entries) => {
                let mut bits = [false; 4];
                for (orb, occ) in entries {
                    bits[*orb] = *occ;
                }
                bits
            }
            Outcome::Total { .. } => [false; 4],
        };
        let i = C64::new(0.0, 1.0);
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let (block, name) = match pattern {
            [true, true, false, false] => ([[-i, zero], [zero, one]], "unphase_up_3"),
            [false, false, true, true] => ([[one, zero], [zero, -i]], "unphase_dn_3"),
            [true, false, true, false] | [false, true, false, true] => {
                ([[zero, one], [-one, zero]], "xz_swap_3")
            }
            [false, true, true, false] | [true, false, false, true] => {
                ([[zero, one], [one, zero]], "x_swap_3")
            }
            _ => {
                return Err(Error::Execution {
                    index: 0,
                    message: format!("unexpected branch outcome {}", branch.outcome),
                })
            }
        };
        let correction = OrbitalUnitary::embed_pair(6, D3_UP, D3_DN, block)?;
        let resolved = apply_correction(&branch, &correction)?;
        branches.push(BranchReport {
            label: label_outcome(&branch.outcome, &names),
            probability: branch.probability,
            correction: Some(name.to_string()),
            fidelity: teleport_fidelity(&resolved, (D3_UP, D3_DN), (alpha, beta)),
        });
    }
    let success = success_probability(&branches);
    Ok(ProtocolReport {
        protocol: "qdots".to_string(),
        stages,
        branches,
        success_probability: success,
        caveats: Vec::new(),
    })
}

/// Bonding/anti-bonding orbitals of dots 1 and 2, one pair per spin, as
/// new-orbital columns: a_σ = (1_σ + 2_σ)/√2 replaces 1_σ and
/// b_σ = (1_σ − 2_σ)/√2 replaces 2_σ.
fn bonding_basis() -> Result<OrbitalUnitary> {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let mut w = DMatrix::<C64>::identity(6, 6);
    for (d1, d2) in [(D1_UP, D2_UP), (D1_DN, D2_DN)] {
        w[(d1, d1)] = h;
        w[(d2, d1)] = h;
        w[(d1, d2)] = h;
        w[(d2, d2)] = -h;
    }
    OrbitalUnitary::new(w)
}

/// x-polarized spin labels on dots 1 and 2: ↑x = (↑+↓)/√2, ↓x = (↑−↓)/√2.
fn x_basis() -> DMatrix<C64> {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let mut w = DMatrix::<C64>::identity(6, 6);
    for (up, dn) in [(D1_UP, D1_DN), (D2_UP, D2_DN)] {
        w[(up, up)] = h;
        w[(dn, up)] = h;
        w[(up, dn)] = h;
        w[(dn, dn)] = -h;
    }
    w
}
