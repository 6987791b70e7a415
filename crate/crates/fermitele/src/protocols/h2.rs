//! Teleportation of an electron spin state within an H₂ molecule.
//!
//! Two sites A and B share one spin-orbital pair each. The resource is a
//! single ↓ electron in the bonding orbital; the unknown qubit is injected
//! as a second ↑ electron spread over both sites. A spin measurement on
//! site A then leaves site B holding the qubit in half of the branches.

use std::f64::consts::FRAC_1_SQRT_2;

use super::{
    check_qubit, label_outcome, stage_report, success_probability, BranchReport, ProtocolReport,
};
use crate::error::Result;
use crate::fock::{OrbitalUnitary, PureState, C64};
use crate::measurement::{apply_correction, measure_spin_axis, teleport_fidelity, Outcome, SpinAxis};

const A_UP: usize = 0;
const A_DN: usize = 1;
const B_UP: usize = 2;
const B_DN: usize = 3;

pub fn run_h2_protocol(a: C64, b: C64) -> Result<ProtocolReport> {
    check_qubit(a, b)?;
    let vac = PureState::vacuum(4);
    let half = C64::new(FRAC_1_SQRT_2, 0.0);

    // Bonding-orbital resource electron and the injected qubit electron.
    let resource = vac.apply_creation(A_DN)?.add(&vac.apply_creation(B_DN)?).scaled(half);
    let injected = vac.apply_creation(A_UP)?.scaled(a).add(&vac.apply_creation(B_UP)?.scaled(b));
    let combined =
        injected.apply_creation(A_DN)?.add(&injected.apply_creation(B_DN)?).scaled(half);

    let partitions = [("A", vec![A_UP, A_DN])];
    let stages = vec![
        stage_report("resource", &resource, &partitions)?,
        stage_report("injected", &injected, &partitions)?,
        stage_report("combined", &combined, &partitions)?,
    ];

    // Spin measurement on site A; post-states carry site A in the rotated
    // (↑y, ↓y) labels while site B is untouched.
    let measured = measure_spin_axis(&combined, (A_UP, A_DN), SpinAxis::Y)?;
    let names = ["Ay_up", "Ay_dn", "B_up", "B_dn"];

    // The (↑y occupied, ↓y empty) branch leaves B with (−a, b); a π pulse
    // along the measured axis supplies the phases e^{∓iπ/2} that restore it.
    let zero = C64::new(0.0, 0.0);
    let pi_pulse = OrbitalUnitary::embed_pair(
        4,
        B_UP,
        B_DN,
        [[C64::new(0.0, 1.0), zero], [zero, C64::new(0.0, -1.0)]],
    )?;
    let needs_pulse = Outcome::PerOrbital(vec![(A_UP, true), (A_DN, false)]);

    let mut branches = Vec::with_capacity(measured.len());
    for branch in measured {
        let (resolved, correction) = if branch.outcome == needs_pulse {
            (apply_correction(&branch, &pi_pulse)?, Some("pi_pulse_B".to_string()))
        } else {
            (branch.clone(), None)
        };
        branches.push(BranchReport {
            label: label_outcome(&branch.outcome, &names),
            probability: branch.probability,
            correction,
            fidelity: teleport_fidelity(&resolved, (B_UP, B_DN), (b, a)),
        });
    }
    let success = success_probability(&branches);
    Ok(ProtocolReport {
        protocol: "h2".to_string(),
        stages,
        branches,
        success_probability: success,
        caveats: Vec::new(),
    })
}
