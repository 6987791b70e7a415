//! Projective measurements with explicit branch bookkeeping.
//!
//! A detector is modeled classically: each measurement splits the state into
//! branches labeled by the outcome, with the squared-norm probability and
//! the renormalized post-state. Spin measurements rotate a spin-orbital pair
//! into the requested eigenbasis first. The module also houses the
//! single-orbital measurement inequality check for both particle
//! entanglement measures, and the seeded random-state generator used by the
//! randomized sweeps.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::entanglement::{
    brute_force_closest_fock, gaussian, geometric_entanglement, mix_seed, one_particle_rdm,
    particle_entropy, BruteForceBudget, GeometricMode, GeometricOptions,
};
use crate::error::{Error, Result};
use crate::fock::{subsets, OrbitalUnitary, PureState, SlaterDeterminant, C64};

/// Classical record of a measurement result.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    /// Occupation of each measured orbital, sorted by orbital index.
    PerOrbital(Vec<(usize, bool)>),
    /// Total electron count over the measured orbital set.
    Total { orbitals: Vec<usize>, count: usize },
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::PerOrbital(entries) => {
                let parts: Vec<String> = entries
                    .iter()
                    .map(|(orb, occ)| format!("{}={}", orb, if *occ { 1 } else { 0 }))
                    .collect();
                write!(f, "{}", parts.join(","))
            }
            Outcome::Total { orbitals, count } => {
                let parts: Vec<String> = orbitals.iter().map(|o| o.to_string()).collect();
                write!(f, "total[{}]={}", parts.join(","), count)
            }
        }
    }
}

/// One branch of a measurement: outcome label, probability, normalized
/// post-measurement state, and the labels of all prior measurements.
#[derive(Clone, Debug)]
pub struct Branch {
    pub outcome: Outcome,
    pub probability: f64,
    pub post_state: PureState,
    pub history: Vec<Outcome>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregate {
    PerOrbital,
    Total,
}

/// Measure the occupation of a set of orbitals.
///
/// Terms are partitioned by the outcome label; each branch's probability is
/// the squared norm of its block and its post-state the normalized block.
/// Zero-probability outcomes are omitted; branches are sorted by label.
pub fn measure_occupation(
    state: &PureState,
    orbitals: &[usize],
    aggregate: Aggregate,
) -> Result<Vec<Branch>> {
    if orbitals.is_empty() {
        return Err(Error::InvalidArgument("measurement needs at least one orbital".into()));
    }
    let m = state.num_orbitals();
    let mut sorted: Vec<usize> = orbitals.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if let Some(&max) = sorted.last() {
        if max >= m {
            return Err(Error::OrbitalOutOfRange { index: max, num_orbitals: m });
        }
    }
    let norm_sqr = state.norm_sqr();
    if (norm_sqr - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { norm_sqr });
    }

    let mut blocks: std::collections::BTreeMap<Outcome, Vec<(SlaterDeterminant, C64)>> =
        Default::default();
    for (det, amp) in state.terms() {
        let outcome = match aggregate {
            Aggregate::PerOrbital => {
                Outcome::PerOrbital(sorted.iter().map(|&o| (o, det.occupied(o))).collect())
            }
            Aggregate::Total => Outcome::Total {
                orbitals: sorted.clone(),
                count: sorted.iter().filter(|&&o| det.occupied(o)).count(),
            },
        };
        blocks.entry(outcome).or_default().push((*det, *amp));
    }

    let mut branches = Vec::with_capacity(blocks.len());
    for (outcome, terms) in blocks {
        let block = PureState::from_terms(m, &terms);
        let probability = block.norm_sqr();
        if probability < 1e-24 {
            continue;
        }
        let post_state = block.scaled(C64::new(1.0 / probability.sqrt(), 0.0));
        branches.push(Branch { outcome, probability, post_state, history: Vec::new() });
    }
    Ok(branches)
}

/// Measurement axis for a spin-orbital pair.
///
/// The protocols in this crate quantize spins so that both the `X` and `Y`
/// axes correspond to the real balanced mixing of the pair (the printed
/// protocol steps use opposite spin-axis names in different quantization
/// frames for the same rotation); `Z` is the occupation basis itself, and an
/// explicit unit vector selects the standard `n·σ` eigenbasis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpinAxis {
    X,
    Y,
    Z,
    Unit([f64; 3]),
}

impl SpinAxis {
    /// Columns are the eigenstates of the axis in the (↑, ↓) pair basis.
    fn eigenbasis(self) -> [[C64; 2]; 2] {
        let h = 1.0 / 2f64.sqrt();
        let r = |x: f64| C64::new(x, 0.0);
        match self {
            SpinAxis::X | SpinAxis::Y => [[r(h), r(h)], [r(h), r(-h)]],
            SpinAxis::Z => [[r(1.0), r(0.0)], [r(0.0), r(1.0)]],
            SpinAxis::Unit(n) => {
                let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                let (nx, ny, nz) = (n[0] / norm, n[1] / norm, n[2] / norm);
                let theta = nz.acos();
                let phi = ny.atan2(nx);
                let (s, c) = (theta / 2.0).sin_cos();
                let eip = C64::new(0.0, phi).exp();
                // |+n⟩ = (cos θ/2, e^{iφ} sin θ/2), |−n⟩ orthogonal.
                [[r(c), eip * s], [-eip.conj() * s, r(c)]]
            }
        }
    }
}

/// Measure the spin of a spin-orbital pair along an axis: rotate the pair
/// into the axis eigenbasis, then measure both rotated orbitals.
///
/// The post-states are reported in the rotated frame; orbitals outside the
/// pair are untouched.
pub fn measure_spin_axis(
    state: &PureState,
    pair: (usize, usize),
    axis: SpinAxis,
) -> Result<Vec<Branch>> {
    let (up, dn) = pair;
    if up == dn {
        return Err(Error::InvalidArgument("spin pair needs two distinct orbitals".into()));
    }
    let m = state.num_orbitals();
    let block = axis.eigenbasis();
    // Columns of `block` are the new orbitals; amplitudes in the rotated
    // basis come from the adjoint.
    let w = OrbitalUnitary::embed_pair(m, up, dn, block)?;
    let rotated = state.apply_orbital_unitary(&OrbitalUnitary::basis_change_from_new_orbitals(
        w.matrix().clone(),
    )?)?;
    measure_occupation(&rotated, &[up, dn], Aggregate::PerOrbital)
}

/// Apply a classical correction unitary to a branch's post-state.
pub fn apply_correction(branch: &Branch, correction: &OrbitalUnitary) -> Result<Branch> {
    let post_state = branch.post_state.apply_orbital_unitary(correction)?;
    Ok(Branch {
        outcome: branch.outcome.clone(),
        probability: branch.probability,
        post_state,
        history: branch.history.clone(),
    })
}

/// Fidelity of a branch against the target qubit state
/// `a·ĉ†_up + b·ĉ†_dn` on the given pair, with every other orbital in the
/// definite occupation shared by the branch.
///
/// Returns 0 when the branch does not carry a well-defined qubit on the
/// pair (mixed rest configurations, or pair not singly occupied).
pub fn teleport_fidelity(branch: &Branch, pair: (usize, usize), target: (C64, C64)) -> f64 {
    let (up, dn) = pair;
    let state = &branch.post_state;
    let m = state.num_orbitals();
    let pair_mask = (1u64 << up) | (1u64 << dn);

    let mut rest: Option<u64> = None;
    for (det, _) in state.terms() {
        if (det.0 & pair_mask).count_ones() != 1 {
            return 0.0;
        }
        let r = det.0 & !pair_mask;
        match rest {
            None => rest = Some(r),
            Some(prev) if prev == r => {}
            Some(_) => return 0.0,
        }
    }
    let Some(rest) = rest else { return 0.0 };

    let rest_state = PureState::determinant(m, SlaterDeterminant(rest));
    let (a, b) = target;
    let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if norm < 1e-15 {
        return 0.0;
    }
    let target_state = rest_state
        .apply_creation(up)
        .expect("pair orbital in range")
        .scaled(a / norm)
        .add(&rest_state.apply_creation(dn).expect("pair orbital in range").scaled(b / norm));
    target_state.inner_product(state).map(|v| v.norm_sqr()).unwrap_or(0.0)
}

/// The two ingredients of the single-orbital measurement inequality:
/// an (N−1)-electron state and an N-electron state, both normalized and
/// both without support on the marked orbital `e`.
#[derive(Clone, Debug)]
pub struct InequalitySample {
    pub psi_e: PureState,
    pub psi_s: PureState,
    pub e: usize,
    pub alpha: f64,
    pub theta: f64,
}

impl InequalitySample {
    pub fn new(psi_e: PureState, psi_s: PureState, e: usize, alpha: f64, theta: f64) -> Result<Self> {
        let m = psi_e.num_orbitals();
        if psi_s.num_orbitals() != m {
            return Err(Error::DimensionMismatch { expected: m, got: psi_s.num_orbitals() });
        }
        if e >= m {
            return Err(Error::OrbitalOutOfRange { index: e, num_orbitals: m });
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!("alpha = {alpha} outside [0, 1]")));
        }
        for (state, name) in [(&psi_e, "psi_e"), (&psi_s, "psi_s")] {
            if state.terms().any(|(det, _)| det.occupied(e)) {
                return Err(Error::InvalidArgument(format!("{name} has support on orbital {e}")));
            }
            let n = state.norm_sqr();
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::NotNormalized { norm_sqr: n });
            }
        }
        match (psi_e.electron_count(), psi_s.electron_count()) {
            (Some(ne), Some(ns)) if ne + 1 == ns => {}
            _ => {
                return Err(Error::InvalidArgument(
                    "psi_e must have exactly one electron fewer than psi_s".into(),
                ))
            }
        }
        Ok(InequalitySample { psi_e, psi_s, e, alpha, theta })
    }

    /// `√α e^{iθ} ĉ†_e |Ψ_e⟩ + √(1−α) |Ψ_s⟩`, normalized by construction.
    pub fn combined(&self) -> PureState {
        let head = self
            .psi_e
            .apply_creation(self.e)
            .expect("e in range")
            .scaled(C64::new(0.0, self.theta).exp() * self.alpha.sqrt());
        head.add(&self.psi_s.scaled(C64::new((1.0 - self.alpha).sqrt(), 0.0)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntanglementMeasure {
    Entropy,
    Geometric,
}

#[derive(Clone, Debug)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub slack: f64,
}

/// Check that measuring the occupation of a single orbital does not
/// increase the average particle entanglement:
/// `E[Ψ] ≥ α·E[ĉ†_e Ψ_e] + (1−α)·E[Ψ_s]`.
///
/// The geometric measure uses the two-electron closed form when possible
/// and the brute-force oracle otherwise, so optimizer slack on the
/// left-hand side cannot fake a violation.
pub fn check_measurement_inequality(
    sample: &InequalitySample,
    measure: EntanglementMeasure,
) -> Result<InequalityReport> {
    let combined = sample.combined();
    let occupied = sample.psi_e.apply_creation(sample.e)?;
    let (lhs, rhs_e, rhs_s, tol) = match measure {
        EntanglementMeasure::Entropy => (
            particle_entropy(&combined)?,
            particle_entropy(&occupied)?,
            particle_entropy(&sample.psi_s)?,
            1e-9,
        ),
        EntanglementMeasure::Geometric => (
            geometric_value(&combined)?,
            geometric_value(&occupied)?,
            geometric_value(&sample.psi_s)?,
            1e-6,
        ),
    };
    let rhs = sample.alpha * rhs_e + (1.0 - sample.alpha) * rhs_s;
    let slack = lhs - rhs;
    Ok(InequalityReport { lhs, rhs, holds: slack >= -tol, slack })
}

fn geometric_value(state: &PureState) -> Result<f64> {
    let n = state
        .electron_count()
        .ok_or_else(|| Error::InvalidArgument("state must have a fixed electron count".into()))?;
    let m = state.num_orbitals();
    if n == 2 || m.saturating_sub(n) == 2 {
        let options = GeometricOptions { mode: GeometricMode::Closed2e, ..Default::default() };
        Ok(geometric_entanglement(state, &options)?.value)
    } else if n <= 1 || n >= m.saturating_sub(1) {
        // One electron / one hole (or empty / full): always a Fock state.
        Ok(0.0)
    } else {
        brute_force_closest_fock(state, &BruteForceBudget::default())
    }
}

#[derive(Clone, Debug)]
pub struct BetaBoundReport {
    pub beta: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Spot check of the overlap-orbital bound used in the inequality proof:
/// with `√β ĉ†_s|0⟩ = (−1)^{N−1} Σ_i Ψ^{e*}_i Ŝ_i |Ψ_s⟩`, the normalization
/// satisfies `β ≤ ρ^s_{ss}(1 − ρ^e_{ss})`.
pub fn check_beta_bound(sample: &InequalitySample) -> Result<BetaBoundReport> {
    let m = sample.psi_s.num_orbitals();
    let n = sample.psi_s.electron_count().unwrap_or(0);

    // Σ_i Ψ^{e*}_i Ŝ_i |Ψ_s⟩: annihilate each sub-determinant of Ψ_e from
    // Ψ_s, highest orbital first (the adjoint of the ascending product).
    let mut overlap_vec = PureState::zero(m);
    for (det, amp) in sample.psi_e.terms() {
        let mut partial = sample.psi_s.clone();
        for orb in det.orbitals().collect::<Vec<_>>().into_iter().rev() {
            partial = partial.apply_annihilation(orb)?;
            if partial.is_zero() {
                break;
            }
        }
        overlap_vec = overlap_vec.add(&partial.scaled(amp.conj()));
    }
    let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
    let overlap_vec = overlap_vec.scaled(C64::new(sign, 0.0));
    let beta = overlap_vec.norm_sqr();

    if beta < 1e-20 {
        return Ok(BetaBoundReport { beta, bound: 0.0, holds: true });
    }
    // Unit vector of the s orbital in the single-particle space.
    let mut s = DVector::<C64>::zeros(m);
    for (det, amp) in overlap_vec.terms() {
        let orb = det.orbitals().next().expect("one-electron state");
        s[orb] = *amp;
    }
    s /= C64::new(beta.sqrt(), 0.0);

    let rho_s = one_particle_rdm(&sample.psi_s).matrix;
    let rho_e = one_particle_rdm(&sample.psi_e.apply_creation(sample.e)?).matrix;
    let project = |rho: &DMatrix<C64>| -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                acc += s[i].conj() * rho[(i, j)] * s[j];
            }
        }
        acc.re
    };
    let bound = project(&rho_s) * (1.0 - project(&rho_e));
    Ok(BetaBoundReport { beta, bound, holds: beta <= bound + 1e-10 })
}

/// Deterministic Haar-like random state on the N-electron sector: complex
/// Gaussian amplitude per determinant (ascending mask order), normalized.
pub fn random_state(
    m: usize,
    n: usize,
    seed: u64,
    exclude_orbital: Option<usize>,
) -> Result<PureState> {
    if n > m {
        return Err(Error::InvalidArgument(format!("cannot place {n} electrons in {m} orbitals")));
    }
    if let Some(e) = exclude_orbital {
        if e >= m {
            return Err(Error::OrbitalOutOfRange { index: e, num_orbitals: m });
        }
        if m - 1 < n {
            return Err(Error::InvalidArgument(
                "excluding an orbital leaves too few for the electron count".into(),
            ));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    for orbs in subsets(m, n) {
        if let Some(e) = exclude_orbital {
            if orbs.contains(&e) {
                continue;
            }
        }
        let amp = C64::new(gaussian(&mut rng), gaussian(&mut rng));
        terms.push((SlaterDeterminant::from_orbitals(&orbs), amp));
    }
    PureState::from_terms(m, &terms).normalized()
}

/// Deterministic per-sample seed for randomized sweeps.
pub fn sweep_seed(master: u64, sample: u64) -> u64 {
    mix_seed(master, sample)
}
