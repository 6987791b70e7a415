//! Scenario interpreter: walks the statement list against a branch tree.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;

use super::{AssertKind, Axis, MatrixLiteral, PatternItem, Scenario, Statement};
use crate::dynamics::{
    evolve_density_density, evolve_one_body, DensityInteraction, OneBodyHamiltonian,
    PhaseConvention,
};
use crate::entanglement::{
    geometric_entanglement, linear_entropy, mode_rdm, particle_entropy, GeometricOptions,
};
use crate::error::{Error, Result};
use crate::fock::{OrbitalPartition, OrbitalUnitary, PureState, C64};
use crate::measurement::{
    measure_occupation, measure_spin_axis, teleport_fidelity, Aggregate, Branch, Outcome, SpinAxis,
};

#[derive(Clone, Debug)]
pub struct AssertionRecord {
    pub statement: usize,
    pub kind: String,
    pub expected: f64,
    pub actual: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct BranchRecord {
    /// Index of the `measure` statement that produced this branch.
    pub statement: usize,
    pub label: String,
    pub probability: f64,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub branches: Vec<BranchRecord>,
    pub assertions: Vec<AssertionRecord>,
    /// Total path probability of selected branches whose asserted fidelity
    /// reached 1 (tol 1e-9).
    pub success_probability: f64,
    pub violations: usize,
}

impl RunReport {
    pub fn all_pass(&self) -> bool {
        self.violations == 0
    }
}

struct Fork {
    statement: usize,
    branches: Vec<Branch>,
    /// Path probability of the state the measurement acted on.
    base_probability: f64,
    selected: Option<usize>,
}

pub fn execute_scenario(scenario: &Scenario, seed: u64) -> Result<RunReport> {
    let m = scenario.num_orbitals();
    let mut state = PureState::zero(m);
    let mut hole_started = false;
    let mut named: HashMap<String, OrbitalUnitary> = HashMap::new();
    let mut fork: Option<Fork> = None;
    let mut path_probability = 1.0;
    let mut credited: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut branch_records = Vec::new();
    let mut assertions: Vec<AssertionRecord> = Vec::new();

    for (index, statement) in scenario.statements.iter().enumerate() {
        let fail = |message: String| Error::Execution { index, message };
        let lift = |e: Error| Error::Execution { index, message: e.to_string() };
        match statement {
            Statement::Filled => state = PureState::filled(m),
            Statement::Term { re, im, orbitals } => {
                state = state.add(&creation_string(m, orbitals, C64::new(*re, *im)).map_err(lift)?);
            }
            Statement::Hole { re, im, orbitals } => {
                if !hole_started {
                    state = PureState::zero(m);
                    hole_started = true;
                }
                let mut term = PureState::filled(m).scaled(C64::new(*re, *im));
                for &orbital in orbitals.iter().rev() {
                    term = term.apply_annihilation(orbital).map_err(lift)?;
                }
                state = state.add(&term);
            }
            Statement::Rotate { up, dn, axis, angle } => {
                let unitary =
                    OrbitalUnitary::embed_pair(m, *up, *dn, rotation_block(*axis, *angle))
                        .map_err(lift)?;
                state = state.apply_orbital_unitary(&unitary).map_err(lift)?;
            }
            Statement::DefineUnitary { name, matrix } => {
                named.insert(name.clone(), build_unitary(matrix, m).map_err(lift)?);
            }
            Statement::ApplyUnitary { matrix } => {
                let unitary = build_unitary(matrix, m).map_err(lift)?;
                state = state.apply_orbital_unitary(&unitary).map_err(lift)?;
            }
            Statement::Evolve1 { t, matrix } => {
                let h = OneBodyHamiltonian::new(build_matrix(matrix, m).map_err(lift)?)
                    .map_err(lift)?;
                state = evolve_one_body(&state, &h, *t, PhaseConvention::PlusIHt).map_err(lift)?;
            }
            Statement::EvolveU { t, basis, terms } => {
                let pairs: Vec<((usize, usize), f64)> = terms
                    .iter()
                    .map(|&(i, j, e)| ((i.min(j), i.max(j)), e))
                    .collect();
                let mut interaction = DensityInteraction::from_pairs(m, &pairs).map_err(lift)?;
                if let Some(name) = basis {
                    let unitary = named
                        .get(name)
                        .ok_or_else(|| fail(format!("undefined unitary `{name}`")))?;
                    interaction =
                        interaction.with_diagonalizing_basis(unitary.clone()).map_err(lift)?;
                }
                state = evolve_density_density(&state, &interaction, *t, PhaseConvention::PlusIHt)
                    .map_err(lift)?;
            }
            Statement::MeasureOcc { orbitals, total } => {
                let aggregate = if *total { Aggregate::Total } else { Aggregate::PerOrbital };
                let branches = measure_occupation(&state, orbitals, aggregate).map_err(lift)?;
                record_fork(&mut branch_records, scenario, index, &branches);
                fork = Some(Fork {
                    statement: index,
                    branches,
                    base_probability: path_probability,
                    selected: None,
                });
            }
            Statement::MeasureSpin { axis, up, dn } => {
                let branches =
                    measure_spin_axis(&state, (*up, *dn), spin_axis(*axis)).map_err(lift)?;
                record_fork(&mut branch_records, scenario, index, &branches);
                fork = Some(Fork {
                    statement: index,
                    branches,
                    base_probability: path_probability,
                    selected: None,
                });
            }
            Statement::Select { index: branch_index } => {
                let fork = fork.as_mut().ok_or_else(|| fail("`select` before any measurement".to_string()))?;
                let branch = fork
                    .branches
                    .get(*branch_index)
                    .ok_or_else(|| fail(format!(
                        "branch index {branch_index} out of range (got {} branches)",
                        fork.branches.len()
                    )))?;
                state = branch.post_state.clone();
                path_probability = fork.base_probability * branch.probability;
                fork.selected = Some(*branch_index);
            }
            Statement::Assert(kind) => {
                let record = evaluate_assertion(
                    index,
                    kind,
                    &state,
                    fork.as_ref(),
                    path_probability,
                    seed,
                    &mut credited,
                )
                .map_err(lift)?;
                assertions.push(record);
            }
        }
    }

    let violations = assertions.iter().filter(|a| !a.pass).count();
    Ok(RunReport {
        scenario: scenario.name.clone(),
        seed,
        branches: branch_records,
        assertions,
        success_probability: credited.values().sum(),
        violations,
    })
}

fn evaluate_assertion(
    index: usize,
    kind: &AssertKind,
    state: &PureState,
    fork: Option<&Fork>,
    path_probability: f64,
    seed: u64,
    credited: &mut BTreeMap<(usize, usize), f64>,
) -> Result<AssertionRecord> {
    let (name, expected, tol, actual, matched) = match kind {
        AssertKind::ParticleEntropy { value, tol } => {
            ("particle_entropy", *value, *tol, particle_entropy(state)?, true)
        }
        AssertKind::Geometric { value, tol } => {
            let options = GeometricOptions { seed, ..Default::default() };
            ("geometric", *value, *tol, geometric_entanglement(state, &options)?.value, true)
        }
        AssertKind::ModeEntropy { orbitals, value, tol } => {
            let partition = OrbitalPartition::new(state.num_orbitals(), orbitals)?;
            ("mode_entropy", *value, *tol, linear_entropy(&mode_rdm(state, &partition).matrix), true)
        }
        AssertKind::Prob { pattern, value, tol } => {
            let hit = fork.and_then(|f| {
                f.branches.iter().find(|b| pattern_matches(pattern, &b.outcome))
            });
            match hit {
                Some(branch) => ("prob", *value, *tol, branch.probability, true),
                None => ("prob", *value, *tol, 0.0, false),
            }
        }
        AssertKind::Fidelity { up, dn, a, b, value, tol } => {
            let wrapper = Branch {
                outcome: Outcome::PerOrbital(Vec::new()),
                probability: path_probability,
                post_state: state.clone(),
                history: Vec::new(),
            };
            let fidelity = teleport_fidelity(
                &wrapper,
                (*up, *dn),
                (C64::new(a.0, a.1), C64::new(b.0, b.1)),
            );
            if fidelity >= 1.0 - 1e-9 {
                let key = match fork {
                    Some(f) => (f.statement, f.selected.unwrap_or(usize::MAX)),
                    None => (usize::MAX, usize::MAX),
                };
                credited.insert(key, path_probability);
            }
            ("fidelity", *value, *tol, fidelity, true)
        }
    };
    let pass = matched && (expected - actual).abs() <= tol.abs();
    Ok(AssertionRecord { statement: index, kind: name.to_string(), expected, actual, tol, pass })
}

fn pattern_matches(pattern: &[PatternItem], outcome: &Outcome) -> bool {
    pattern.iter().all(|item| match (item, outcome) {
        (PatternItem::Orbital { orbital, occupied }, Outcome::PerOrbital(entries)) => {
            entries.iter().any(|(o, occ)| o == orbital && occ == occupied)
        }
        (PatternItem::Total { count }, Outcome::Total { count: actual, .. }) => count == actual,
        _ => false,
    })
}

fn record_fork(
    records: &mut Vec<BranchRecord>,
    scenario: &Scenario,
    statement: usize,
    branches: &[Branch],
) {
    for branch in branches {
        records.push(BranchRecord {
            statement,
            label: outcome_label(scenario, &branch.outcome),
            probability: branch.probability,
        });
    }
}

fn outcome_label(scenario: &Scenario, outcome: &Outcome) -> String {
    match outcome {
        Outcome::PerOrbital(entries) => entries
            .iter()
            .map(|(o, occ)| format!("{}={}", scenario.label(*o), u8::from(*occ)))
            .collect::<Vec<_>>()
            .join(","),
        Outcome::Total { orbitals, count } => {
            let labels: Vec<&str> = orbitals.iter().map(|&o| scenario.label(o)).collect();
            format!("total[{}]={count}", labels.join(","))
        }
    }
}

fn creation_string(m: usize, orbitals: &[usize], amplitude: C64) -> Result<PureState> {
    let mut term = PureState::vacuum(m).scaled(amplitude);
    for &orbital in orbitals.iter().rev() {
        term = term.apply_creation(orbital)?;
    }
    Ok(term)
}

fn build_matrix(literal: &MatrixLiteral, m: usize) -> Result<DMatrix<C64>> {
    let dim = literal.len();
    if dim != m {
        return Err(Error::DimensionMismatch { expected: m, got: dim });
    }
    Ok(DMatrix::from_fn(dim, dim, |r, c| {
        let (re, im) = literal[r][c];
        C64::new(re, im)
    }))
}

fn build_unitary(literal: &MatrixLiteral, m: usize) -> Result<OrbitalUnitary> {
    OrbitalUnitary::new(build_matrix(literal, m)?)
}

fn spin_axis(axis: Axis) -> SpinAxis {
    match axis {
        Axis::X => SpinAxis::X,
        Axis::Y => SpinAxis::Y,
        Axis::Z => SpinAxis::Z,
    }
}

/// `exp(−i·angle/2 · σ_axis)` on the (up, dn) pair.
fn rotation_block(axis: Axis, angle: f64) -> [[C64; 2]; 2] {
    let (s, c) = (angle / 2.0).sin_cos();
    let r = |x: f64| C64::new(x, 0.0);
    let i = |x: f64| C64::new(0.0, x);
    match axis {
        Axis::X => [[r(c), i(-s)], [i(-s), r(c)]],
        Axis::Y => [[r(c), r(-s)], [r(s), r(c)]],
        Axis::Z => [[C64::new(c, -s), r(0.0)], [r(0.0), C64::new(c, s)]],
    }
}
