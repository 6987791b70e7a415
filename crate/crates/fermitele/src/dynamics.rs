//! Time evolution.
//!
//! One-body evolution is an orbital rotation `exp(iH⁽¹⁾t)`; density-density
//! interactions act as occupation-dependent phases (optionally in a rotated
//! orbital basis in which they are diagonal); Trotter composition alternates
//! the two. A dense many-body matrix exponential serves as the test oracle.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::entanglement::{apply_orbital_annihilation, apply_orbital_creation};
use crate::error::{Error, Result};
use crate::fock::{subsets, OrbitalUnitary, PureState, SlaterDeterminant, C64, MATRIX_TOL};

/// Sign of the exponent in the evolution operator.
///
/// The default follows the convention `e^{+iĤt}` used throughout; the
/// flipped variant gives the textbook `e^{−iĤt}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PhaseConvention {
    #[default]
    PlusIHt,
    MinusIHt,
}

impl PhaseConvention {
    fn sign(self) -> f64 {
        match self {
            PhaseConvention::PlusIHt => 1.0,
            PhaseConvention::MinusIHt => -1.0,
        }
    }
}

/// Single-particle Hamiltonian `Ĥ⁽¹⁾ = Σ_{mn} H_{mn} c†_m c_n`.
#[derive(Clone, Debug)]
pub struct OneBodyHamiltonian {
    matrix: DMatrix<C64>,
}

impl OneBodyHamiltonian {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), got: matrix.ncols() });
        }
        let mut deviation: f64 = 0.0;
        for i in 0..matrix.nrows() {
            for j in 0..matrix.ncols() {
                deviation = deviation.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if deviation > MATRIX_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(OneBodyHamiltonian { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// The orbital rotation `exp(±iHt)`, computed by eigendecomposition.
    pub fn propagator(&self, t: f64, convention: PhaseConvention) -> OrbitalUnitary {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let dim = self.matrix.nrows();
        let mut phases = DMatrix::<C64>::zeros(dim, dim);
        for j in 0..dim {
            phases[(j, j)] = C64::new(0.0, convention.sign() * eig.eigenvalues[j] * t).exp();
        }
        let u = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
        OrbitalUnitary::new(u).expect("propagator is unitary by construction")
    }
}

/// Interaction that is density-density in some orbital basis:
/// `Ŵ = Σ_sets E · Π_{d∈set} n̂_d`, each unordered set counted once.
///
/// Sets may have any size ≥ 2. When `diagonalizing_basis` is present the
/// number operators refer to the rotated orbitals
/// `ĉ†_j = Σ_m c†_m U[(m, j)]`.
#[derive(Clone, Debug)]
pub struct DensityInteraction {
    num_orbitals: usize,
    terms: Vec<(Vec<usize>, f64)>,
    diagonalizing_basis: Option<OrbitalUnitary>,
}

impl DensityInteraction {
    pub fn new(num_orbitals: usize, terms: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        for (set, _) in &terms {
            if set.len() < 2 {
                return Err(Error::InvalidArgument(format!(
                    "interaction term needs at least two orbitals, got {set:?}"
                )));
            }
            for window in set.windows(2) {
                if window[1] <= window[0] {
                    return Err(Error::InvalidArgument(format!(
                        "interaction orbitals must be strictly ascending, got {set:?}"
                    )));
                }
            }
            if let Some(&max) = set.last() {
                if max >= num_orbitals {
                    return Err(Error::OrbitalOutOfRange { index: max, num_orbitals });
                }
            }
        }
        Ok(DensityInteraction { num_orbitals, terms, diagonalizing_basis: None })
    }

    /// Convenience constructor from `((i, j), E)` pair terms.
    pub fn from_pairs(num_orbitals: usize, pairs: &[((usize, usize), f64)]) -> Result<Self> {
        let terms = pairs
            .iter()
            .map(|&((i, j), e)| {
                if i < j {
                    Ok((vec![i, j], e))
                } else {
                    Err(Error::InvalidArgument(format!("pair ({i}, {j}) must satisfy i < j")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(num_orbitals, terms)
    }

    pub fn with_diagonalizing_basis(mut self, basis: OrbitalUnitary) -> Result<Self> {
        if basis.dim() != self.num_orbitals {
            return Err(Error::DimensionMismatch { expected: self.num_orbitals, got: basis.dim() });
        }
        self.diagonalizing_basis = Some(basis);
        Ok(self)
    }

    pub fn num_orbitals(&self) -> usize {
        self.num_orbitals
    }

    pub fn terms(&self) -> &[(Vec<usize>, f64)] {
        &self.terms
    }

    pub fn diagonalizing_basis(&self) -> Option<&OrbitalUnitary> {
        self.diagonalizing_basis.as_ref()
    }

    /// Interaction energy of a determinant in the diagonal basis.
    pub fn determinant_energy(&self, det: SlaterDeterminant) -> f64 {
        self.terms
            .iter()
            .filter(|(set, _)| set.iter().all(|&d| det.occupied(d)))
            .map(|(_, e)| e)
            .sum()
    }

    /// True when every interaction orbital lies inside `support` (in the
    /// diagonal basis, `support` must also contain the basis rotation).
    pub fn is_local_to(&self, support: &[usize]) -> bool {
        let orbitals_ok = self
            .terms
            .iter()
            .all(|(set, _)| set.iter().all(|d| support.contains(d)));
        match &self.diagonalizing_basis {
            None => orbitals_ok,
            Some(basis) => orbitals_ok && basis.is_local_to(support),
        }
    }
}

/// Evolve under a one-body Hamiltonian for time `t`: a pure orbital rotation.
pub fn evolve_one_body(
    state: &PureState,
    h1: &OneBodyHamiltonian,
    t: f64,
    convention: PhaseConvention,
) -> Result<PureState> {
    if h1.dim() != state.num_orbitals() {
        return Err(Error::DimensionMismatch { expected: state.num_orbitals(), got: h1.dim() });
    }
    state.apply_orbital_unitary(&h1.propagator(t, convention))
}

/// Evolve under a density-density interaction for time `t`.
///
/// Each determinant picks up the phase `exp(±i·t·E(D))` where `E(D)` sums
/// the energies of fully occupied interaction sets. With a diagonalizing
/// basis the state is rotated into that basis, dephased, and rotated back.
pub fn evolve_density_density(
    state: &PureState,
    interaction: &DensityInteraction,
    t: f64,
    convention: PhaseConvention,
) -> Result<PureState> {
    if interaction.num_orbitals() != state.num_orbitals() {
        return Err(Error::DimensionMismatch {
            expected: state.num_orbitals(),
            got: interaction.num_orbitals(),
        });
    }
    let dephase = |s: &PureState| -> PureState {
        let terms: Vec<(SlaterDeterminant, C64)> = s
            .terms()
            .map(|(det, amp)| {
                let energy = interaction.determinant_energy(*det);
                (*det, amp * C64::new(0.0, convention.sign() * t * energy).exp())
            })
            .collect();
        PureState::from_terms(s.num_orbitals(), &terms)
    };
    match interaction.diagonalizing_basis() {
        None => Ok(dephase(state)),
        Some(basis) => {
            // Amplitudes in the ĉ basis come from the adjoint rotation.
            let rotated = state.apply_orbital_unitary(&basis.adjoint())?;
            dephase(&rotated).apply_orbital_unitary(basis)
        }
    }
}

/// First-order Trotter evolution: `steps` alternations of the interaction
/// phase and the one-body rotation, each for `t / steps`.
pub fn trotter_evolve(
    state: &PureState,
    h1: &OneBodyHamiltonian,
    interaction: &DensityInteraction,
    t: f64,
    steps: usize,
    convention: PhaseConvention,
) -> Result<PureState> {
    if steps == 0 {
        return Err(Error::InvalidArgument("trotter steps must be ≥ 1".into()));
    }
    let dt = t / steps as f64;
    let one_body = h1.propagator(dt, convention);
    let mut current = state.clone();
    for _ in 0..steps {
        current = evolve_density_density(&current, interaction, dt, convention)?;
        current = current.apply_orbital_unitary(&one_body)?;
    }
    Ok(current)
}

/// Cap on the many-body dimension the dense oracle will materialize.
pub const DENSE_ORACLE_CAP: usize = 4096;

/// Exact evolution by exponentiating the full many-body Hamiltonian in the
/// fixed-electron-number determinant basis. Test oracle for the split-step
/// integrators; independent of the orbital-rotation code path.
pub fn dense_evolution_oracle(
    state: &PureState,
    h1: Option<&OneBodyHamiltonian>,
    interaction: Option<&DensityInteraction>,
    t: f64,
    convention: PhaseConvention,
) -> Result<PureState> {
    let m = state.num_orbitals();
    let n = state
        .electron_count()
        .ok_or_else(|| Error::InvalidArgument("oracle needs a fixed electron count".into()))?;
    let basis: Vec<SlaterDeterminant> = subsets(m, n)
        .into_iter()
        .map(|orbs| SlaterDeterminant::from_orbitals(&orbs))
        .collect();
    let dim = basis.len();
    if dim > DENSE_ORACLE_CAP {
        return Err(Error::DenseDimensionCap { dim, cap: DENSE_ORACLE_CAP });
    }
    let index: std::collections::BTreeMap<u64, usize> =
        basis.iter().enumerate().map(|(i, d)| (d.0, i)).collect();

    // Column d of H = Ĥ applied to |basis[d]⟩, assembled through the same
    // state-level operator algebra used everywhere else.
    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for (col, det) in basis.iter().enumerate() {
        let unit = PureState::determinant(m, *det);
        let mut image = PureState::zero(m);
        if let Some(h1) = h1 {
            if h1.dim() != m {
                return Err(Error::DimensionMismatch { expected: m, got: h1.dim() });
            }
            for i in 0..m {
                for j in 0..m {
                    let hij = h1.matrix()[(i, j)];
                    if hij.norm() > 0.0 {
                        let moved = unit.apply_annihilation(j)?.apply_creation(i)?;
                        image = image.add(&moved.scaled(hij));
                    }
                }
            }
        }
        if let Some(interaction) = interaction {
            if interaction.num_orbitals() != m {
                return Err(Error::DimensionMismatch { expected: m, got: interaction.num_orbitals() });
            }
            for (set, energy) in interaction.terms() {
                let mut occupied = unit.clone();
                for &d in set {
                    occupied = match interaction.diagonalizing_basis() {
                        None => occupied.apply_annihilation(d)?.apply_creation(d)?,
                        Some(basis) => {
                            let column = basis.matrix().column(d).into_owned();
                            let lowered = apply_orbital_annihilation(&occupied, &column.map(|z| z.conj()))?;
                            apply_orbital_creation(&lowered, &column)?
                        }
                    };
                }
                image = image.add(&occupied.scaled(C64::new(*energy, 0.0)));
            }
        }
        for (d, amp) in image.terms() {
            h[(index[&d.0], col)] = *amp;
        }
    }
    // Symmetrize away floating-point asymmetry before the eigensolve.
    let h = (h.clone() + h.adjoint()) * C64::new(0.5, 0.0);

    let eig = SymmetricEigen::new(h);
    let mut vector = nalgebra::DVector::<C64>::zeros(dim);
    for (det, amp) in state.terms() {
        let idx = *index
            .get(&det.0)
            .ok_or_else(|| Error::InvalidArgument("state leaves the fixed-N sector".into()))?;
        vector[idx] = *amp;
    }
    let in_eigen = eig.eigenvectors.adjoint() * vector;
    let mut phased = in_eigen;
    for j in 0..dim {
        phased[j] *= C64::new(0.0, convention.sign() * eig.eigenvalues[j] * t).exp();
    }
    let out = &eig.eigenvectors * phased;
    let terms: Vec<(SlaterDeterminant, C64)> =
        basis.iter().enumerate().map(|(i, d)| (*d, out[i])).collect();
    Ok(PureState::from_terms(m, &terms))
}
