//! Mode and particle entanglement measures.
//!
//! Mode entanglement: linear entropy of the reduced density matrix obtained
//! by tracing a pure state over one side of an orbital bipartition. Particle
//! entanglement: linear entropy of the one-particle reduced density matrix,
//! or the geometric distance to the closest Fock state.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fock::{det_submatrix, subsets, OrbitalPartition, PureState, SlaterDeterminant, C64};

/// Reduced density matrix of one side of an orbital bipartition, expressed in
/// the Fock basis of that side's sub-determinants.
#[derive(Clone, Debug)]
pub struct ModeDensityMatrix {
    /// Orbitals of the kept side.
    pub orbitals: Vec<usize>,
    /// Sub-determinant basis (masks over the kept orbitals), sorted by
    /// (popcount, mask value).
    pub basis: Vec<SlaterDeterminant>,
    pub matrix: DMatrix<C64>,
}

/// The M×M matrix `ρ^{(1p)}_{ij} = ⟨Ψ|c†_j c_i|Ψ⟩`.
#[derive(Clone, Debug)]
pub struct OneParticleRdm {
    pub matrix: DMatrix<C64>,
}

/// Partial trace of `|ψ⟩⟨ψ|` over the B side of the partition.
///
/// The basis enumerates every sub-determinant of the kept side when that side
/// has at most 14 orbitals (matching printed matrices, zero rows included);
/// beyond that only sub-determinants reachable from the state's terms appear.
pub fn mode_rdm(state: &PureState, partition: &OrbitalPartition) -> ModeDensityMatrix {
    assert_eq!(state.num_orbitals(), partition.num_orbitals);
    let kept: Vec<usize> = partition.set_a();

    let basis: Vec<SlaterDeterminant> = if kept.len() <= 14 {
        let mut masks: Vec<u64> = Vec::with_capacity(1 << kept.len());
        for sel in 0u64..(1 << kept.len()) {
            let mut mask = 0u64;
            for (bit, &orb) in kept.iter().enumerate() {
                if sel >> bit & 1 == 1 {
                    mask |= 1 << orb;
                }
            }
            masks.push(mask);
        }
        masks.sort_by_key(|m| (m.count_ones(), *m));
        masks.into_iter().map(SlaterDeterminant).collect()
    } else {
        let mut masks: Vec<u64> = state
            .terms()
            .map(|(det, _)| det.split(partition).0 .0)
            .collect();
        masks.sort_by_key(|m| (m.count_ones(), *m));
        masks.dedup();
        masks.into_iter().map(SlaterDeterminant).collect()
    };
    let index_of = |d: &SlaterDeterminant| basis.binary_search_by_key(&(d.0.count_ones(), d.0), |b| (b.0.count_ones(), b.0)).ok();

    // Group signed amplitudes by the traced-out sub-determinant.
    let mut by_b: std::collections::BTreeMap<u64, Vec<(usize, C64)>> = Default::default();
    for (det, amp) in state.terms() {
        let (da, db, sign) = det.split(partition);
        if let Some(idx) = index_of(&da) {
            by_b.entry(db.0).or_default().push((idx, amp * sign as f64));
        }
    }

    let dim = basis.len();
    let mut matrix = DMatrix::<C64>::zeros(dim, dim);
    for entries in by_b.values() {
        for &(i, a) in entries {
            for &(j, b) in entries {
                matrix[(i, j)] += a * b.conj();
            }
        }
    }
    ModeDensityMatrix { orbitals: kept, basis, matrix }
}

/// `Tr[ρ] − Tr[ρ²]` for a hermitian matrix.
pub fn linear_entropy(rho: &DMatrix<C64>) -> f64 {
    let trace: f64 = (0..rho.nrows()).map(|i| rho[(i, i)].re).sum();
    let trace_sq: f64 = rho.iter().map(|z| z.norm_sqr()).sum();
    trace - trace_sq
}

/// One-particle reduced density matrix, sign-correct through the
/// determinant-level creation/annihilation rules.
pub fn one_particle_rdm(state: &PureState) -> OneParticleRdm {
    let m = state.num_orbitals();
    let mut matrix = DMatrix::<C64>::zeros(m, m);
    for (det, amp) in state.terms() {
        for i in det.orbitals() {
            let (without_i, sign_i) = det.annihilate(i).expect("occupied");
            for j in 0..m {
                if let Some((with_j, sign_j)) = without_i.create(j) {
                    let other = state.amplitude(&with_j);
                    if other.norm_sqr() > 0.0 {
                        // ⟨Ψ|c†_j c_i|Ψ⟩ contribution from |det⟩.
                        matrix[(i, j)] += other.conj() * amp * (sign_i * sign_j) as f64;
                    }
                }
            }
        }
    }
    OneParticleRdm { matrix }
}

/// Particle entanglement entropy `⟨Ψ|Ψ⟩ · S[ρ^{(1p)} / ⟨Ψ|Ψ⟩]`.
///
/// Zero for any Fock state and invariant under orbital basis changes.
pub fn particle_entropy(state: &PureState) -> Result<f64> {
    let norm_sqr = state.norm_sqr();
    if norm_sqr < 1e-28 {
        return Err(Error::ZeroNorm);
    }
    let rho = one_particle_rdm(state).matrix;
    let trace: f64 = (0..rho.nrows()).map(|i| rho[(i, i)].re).sum();
    let trace_sq: f64 = rho.iter().map(|z| z.norm_sqr()).sum();
    Ok(trace - trace_sq / norm_sqr)
}

/// Eigendecomposition of a hermitian matrix, eigenvalues descending.
pub fn eigh_descending(h: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let dim = h.nrows();
    let mut vectors = DMatrix::<C64>::zeros(dim, dim);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeometricMode {
    /// Closed form for two electrons (or two holes): `1 − λ_max(ρ^{(1p)})`.
    Closed2e,
    /// Multi-start Riemannian ascent on the unitary manifold.
    Optimize,
    /// Independent Givens-sweep search (test oracle).
    BruteOracle,
    /// Closed form when applicable, otherwise the optimizer.
    Auto,
}

#[derive(Clone, Debug)]
pub struct GeometricOptions {
    pub mode: GeometricMode,
    pub restarts: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for GeometricOptions {
    fn default() -> Self {
        GeometricOptions { mode: GeometricMode::Auto, restarts: 32, seed: 0, tol: 1e-12 }
    }
}

/// Maximizing Fock state: occupied orbitals are the `witness_det` columns of
/// `witness_orbitals`, i.e. `Π_{j∈det} Σ_m c†_m U[(m, j)] |0⟩`.
#[derive(Clone, Debug)]
pub struct GeometricResult {
    pub value: f64,
    pub witness_orbitals: DMatrix<C64>,
    pub witness_det: SlaterDeterminant,
    pub overlap_sqr: f64,
}

/// Geometric particle entanglement `E_G = ⟨Ψ|Ψ⟩ − max |⟨Fock|Ψ⟩|²`.
pub fn geometric_entanglement(state: &PureState, options: &GeometricOptions) -> Result<GeometricResult> {
    let norm_sqr = state.norm_sqr();
    if (norm_sqr - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { norm_sqr });
    }
    let n = state
        .electron_count()
        .ok_or_else(|| Error::InvalidArgument("state must have a fixed electron count".into()))?;
    let m = state.num_orbitals();
    let mode = match options.mode {
        GeometricMode::Auto => {
            if n == 2 || (m >= 2 && m - n == 2) {
                GeometricMode::Closed2e
            } else {
                GeometricMode::Optimize
            }
        }
        other => other,
    };
    match mode {
        GeometricMode::Closed2e => closed_form_two_electron(state, n, m),
        GeometricMode::Optimize => optimize_overlap(state, n, m, options),
        GeometricMode::BruteOracle => {
            let value = brute_force_closest_fock(state, &BruteForceBudget::default())?;
            // The oracle reports only the value; no witness is recovered.
            Ok(GeometricResult {
                value,
                witness_orbitals: DMatrix::identity(m, m),
                witness_det: SlaterDeterminant::from_orbitals(&(0..n).collect::<Vec<_>>()),
                overlap_sqr: 1.0 - value,
            })
        }
        GeometricMode::Auto => unreachable!("resolved above"),
    }
}

fn closed_form_two_electron(state: &PureState, n: usize, m: usize) -> Result<GeometricResult> {
    let rho = one_particle_rdm(state).matrix;
    if n == 2 {
        let (values, vectors) = eigh_descending(&rho);
        let lambda_max = values[0];
        Ok(GeometricResult {
            value: (1.0 - lambda_max).max(0.0),
            witness_orbitals: vectors,
            witness_det: SlaterDeterminant::from_orbitals(&[0, 1]),
            overlap_sqr: lambda_max,
        })
    } else if m - n == 2 {
        // Two holes: the hole one-particle RDM is 1 − ρᵀ, so
        // E_G = 1 − λ_max(1 − ρᵀ) = λ_min(ρ).
        let (values, vectors) = eigh_descending(&rho);
        let lambda_min = values[values.len() - 1];
        // Witness occupies everything except the two lowest natural orbitals.
        let dets: Vec<usize> = (0..m - 2).collect();
        Ok(GeometricResult {
            value: lambda_min.max(0.0),
            witness_orbitals: vectors,
            witness_det: SlaterDeterminant::from_orbitals(&dets),
            overlap_sqr: 1.0 - lambda_min,
        })
    } else {
        Err(Error::InvalidArgument(format!(
            "closed form needs 2 electrons or 2 holes, got N={n}, M={m}"
        )))
    }
}

/// Squared overlap |⟨Slater(W, D)|Ψ⟩|² where the Slater occupies the first
/// `n` columns of `w`.
fn overlap_sqr(terms: &[(Vec<usize>, C64)], w: &DMatrix<C64>, cols: &[usize]) -> f64 {
    let mut g = C64::new(0.0, 0.0);
    for (rows, amp) in terms {
        g += det_submatrix(w, rows, cols).conj() * amp;
    }
    g.norm_sqr()
}

fn collect_terms(state: &PureState) -> Vec<(Vec<usize>, C64)> {
    state
        .terms()
        .map(|(det, amp)| (det.orbitals().collect(), *amp))
        .collect()
}

/// Orbitals of the natural-orbital warm start: eigenvectors of ρ^{(1p)}
/// ordered by descending occupation.
fn natural_orbital_start(state: &PureState) -> DMatrix<C64> {
    let rho = one_particle_rdm(state).matrix;
    eigh_descending(&rho).1
}

fn random_hermitian(m: usize, rng: &mut impl Rng, scale: f64) -> DMatrix<C64> {
    let mut h = DMatrix::<C64>::zeros(m, m);
    for i in 0..m {
        h[(i, i)] = C64::new(gaussian(rng) * scale, 0.0);
        for j in i + 1..m {
            let z = C64::new(gaussian(rng), gaussian(rng)) * (scale / 2f64.sqrt());
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    h
}

pub(crate) fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller; deterministic given the RNG stream.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// `exp(i H)` for hermitian `H`, via eigendecomposition.
pub fn exp_i_hermitian(h: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(h.clone());
    let dim = h.nrows();
    let mut phases = DMatrix::<C64>::zeros(dim, dim);
    for i in 0..dim {
        phases[(i, i)] = C64::new(0.0, eig.eigenvalues[i]).exp();
    }
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

fn optimize_overlap(
    state: &PureState,
    n: usize,
    m: usize,
    options: &GeometricOptions,
) -> Result<GeometricResult> {
    let terms = collect_terms(state);
    let cols: Vec<usize> = (0..n).collect();
    let mut best: Option<(f64, DMatrix<C64>)> = None;

    let restarts = options.restarts.max(1);
    for restart in 0..restarts {
        let start = if restart == 0 {
            natural_orbital_start(state)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(options.seed, restart as u64));
            exp_i_hermitian(&random_hermitian(m, &mut rng, 1.0))
        };
        let (f, w) = ascend(&terms, start, &cols, options.tol);
        match &best {
            Some((bf, _)) if f <= *bf => {}
            _ => best = Some((f, w)),
        }
    }
    let (f, w) = best.unwrap();
    Ok(GeometricResult {
        value: (1.0 - f).max(0.0),
        witness_orbitals: w,
        witness_det: SlaterDeterminant::from_orbitals(&cols),
        overlap_sqr: f,
    })
}

/// Riemannian ascent of the squared overlap over U(M): finite-difference
/// gradient in the generator directions that mix occupied and unoccupied
/// columns, re-centered after every accepted step.
fn ascend(
    terms: &[(Vec<usize>, C64)],
    mut w: DMatrix<C64>,
    cols: &[usize],
    tol: f64,
) -> (f64, DMatrix<C64>) {
    let m = w.nrows();
    let n = cols.len();
    let occupied: Vec<usize> = cols.to_vec();
    let virtuals: Vec<usize> = (0..m).filter(|k| !occupied.contains(k)).collect();
    // Parameters: one complex rotation per (occupied, virtual) column pair.
    let num_params = 2 * n * virtuals.len();
    if num_params == 0 {
        let f = overlap_sqr(terms, &w, cols);
        return (f, w);
    }

    let eval = |w0: &DMatrix<C64>, theta: &[f64]| -> f64 {
        let wt = apply_generator(w0, theta, &occupied, &virtuals);
        overlap_sqr(terms, &wt, cols)
    };

    let mut f = overlap_sqr(terms, &w, cols);
    let mut step = 0.25;
    let fd = 1e-5;
    for _iter in 0..400 {
        let mut grad = vec![0.0; num_params];
        let mut theta = vec![0.0; num_params];
        for p in 0..num_params {
            theta[p] = fd;
            let fp = eval(&w, &theta);
            theta[p] = -fd;
            let fm = eval(&w, &theta);
            theta[p] = 0.0;
            grad[p] = (fp - fm) / (2.0 * fd);
        }
        let gnorm: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-11 {
            break;
        }
        let mut improved = false;
        for _ls in 0..40 {
            let trial: Vec<f64> = grad.iter().map(|g| g * step).collect();
            let wt = apply_generator(&w, &trial, &occupied, &virtuals);
            let ft = overlap_sqr(terms, &wt, cols);
            if ft > f {
                let gain = ft - f;
                w = wt;
                f = ft;
                improved = true;
                step *= 1.5;
                if gain < tol {
                    return (f, w);
                }
                break;
            }
            step *= 0.5;
            if step < 1e-14 {
                break;
            }
        }
        if !improved {
            break;
        }
    }
    (f, w)
}

/// `w · exp(i H(θ))` with the generator built from occupied–virtual pairs.
fn apply_generator(
    w: &DMatrix<C64>,
    theta: &[f64],
    occupied: &[usize],
    virtuals: &[usize],
) -> DMatrix<C64> {
    let m = w.nrows();
    let mut h = DMatrix::<C64>::zeros(m, m);
    let mut idx = 0;
    for &o in occupied {
        for &v in virtuals {
            let z = C64::new(theta[idx], theta[idx + 1]);
            idx += 2;
            h[(o, v)] = z;
            h[(v, o)] = z.conj();
        }
    }
    w * exp_i_hermitian(&h)
}

#[derive(Clone, Debug)]
pub struct BruteForceBudget {
    pub restarts: usize,
    pub max_sweeps: usize,
}

impl Default for BruteForceBudget {
    fn default() -> Self {
        BruteForceBudget { restarts: 12, max_sweeps: 500 }
    }
}

/// Independent search for the closest Fock state: multi-start coordinate
/// ascent over Givens rotations between occupied and virtual columns, with a
/// disjoint parametrization from the optimizer's generator exponential.
///
/// Returns `E_G`; errors with [`Error::BudgetExhausted`] if no restart
/// converged within its sweep budget, and never reports a value in that case.
pub fn brute_force_closest_fock(state: &PureState, budget: &BruteForceBudget) -> Result<f64> {
    let norm_sqr = state.norm_sqr();
    if (norm_sqr - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { norm_sqr });
    }
    let n = state
        .electron_count()
        .ok_or_else(|| Error::InvalidArgument("state must have a fixed electron count".into()))?;
    let m = state.num_orbitals();
    let terms = collect_terms(state);
    let cols: Vec<usize> = (0..n).collect();
    let virtuals: Vec<usize> = (n..m).collect();

    let mut best: Option<f64> = None;
    let mut any_converged = false;
    for restart in 0..budget.restarts.max(1) {
        let mut w = if restart == 0 {
            DMatrix::<C64>::identity(m, m)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(0x42_5255_5445, restart as u64));
            exp_i_hermitian(&random_hermitian(m, &mut rng, 1.2))
        };
        let mut f = overlap_sqr(&terms, &w, &cols);
        let mut converged = false;
        for _sweep in 0..budget.max_sweeps {
            let before = f;
            for &p in &cols {
                for &q in &virtuals {
                    if let Some((theta, phi, ft)) = best_givens(&terms, &w, &cols, p, q) {
                        if ft > f {
                            apply_givens(&mut w, p, q, theta, phi);
                            f = ft;
                        }
                    }
                }
            }
            if f - before < 1e-14 {
                converged = true;
                break;
            }
        }
        if converged {
            any_converged = true;
            best = Some(best.map_or(f, |b: f64| b.max(f)));
        }
    }
    if !any_converged {
        return Err(Error::BudgetExhausted);
    }
    Ok((1.0 - best.unwrap()).max(0.0))
}

/// Exact maximizer of the overlap over a single Givens rotation of columns
/// (p ∈ occupied, q ∈ virtual).
///
/// The Slater overlap is multilinear in the occupied columns, so rotating
/// column p into column q gives g(θ, φ) = cosθ·g₀ + sinθ·e^{iφ}·g₁ with
/// g₀ the current overlap and g₁ the overlap with column p replaced by
/// column q. |g|² is maximized at |g₀|² + |g₁|² by aligning the phases.
fn best_givens(
    terms: &[(Vec<usize>, C64)],
    w: &DMatrix<C64>,
    cols: &[usize],
    p: usize,
    q: usize,
) -> Option<(f64, f64, f64)> {
    let g0 = {
        let mut g = C64::new(0.0, 0.0);
        for (rows, amp) in terms {
            g += det_submatrix(w, rows, cols).conj() * amp;
        }
        g
    };
    let swapped: Vec<usize> = cols.iter().map(|&c| if c == p { q } else { c }).collect();
    let g1 = {
        let mut g = C64::new(0.0, 0.0);
        for (rows, amp) in terms {
            g += det_submatrix(w, rows, &swapped).conj() * amp;
        }
        g
    };
    if g1.norm() < 1e-16 {
        return None;
    }
    let theta = g1.norm().atan2(g0.norm());
    let phi = g0.arg() - g1.arg();
    Some((theta, phi, g0.norm_sqr() + g1.norm_sqr()))
}

/// Right-multiply columns (p, q) of `w` by the Givens rotation
/// [[cosθ, −e^{iφ} sinθ], [e^{−iφ} sinθ, cosθ]].
fn apply_givens(w: &mut DMatrix<C64>, p: usize, q: usize, theta: f64, phi: f64) {
    let (s, c) = theta.sin_cos();
    let eip = C64::new(0.0, phi).exp();
    for r in 0..w.nrows() {
        let a = w[(r, p)];
        let b = w[(r, q)];
        w[(r, p)] = a * c + b * eip.conj() * s;
        w[(r, q)] = -a * eip * s + b * c;
    }
}

pub(crate) fn mix_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over (seed ⊕ rotated index).
    let mut z = seed ^ index.rotate_left(17) ^ 0x9e37_79b9_7f4a_7c15;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Decomposition of a Fock state (given by orthonormal orbital columns) with
/// respect to a marked orbital `e`:
/// `|Fock⟩ = phase · (α' c†_e + √(1−α'²) c†_s) c†'_2 ⋯ c†'_N |0⟩`
/// with `c_s` orthogonal to `c_e` and `α' ≥ 0`.
#[derive(Clone, Debug)]
pub struct FockDecomposition {
    pub alpha_prime: f64,
    /// Unit vector of the `s` orbital; `None` when α' = 1 (no `s` component).
    pub s_orbital: Option<DVector<C64>>,
    /// The N−1 residual orbital columns (orthogonal to both `e` and `s`).
    pub residual_columns: DMatrix<C64>,
    /// Global phase restoring exact equality with the input Fock state.
    pub phase: C64,
}

/// Factor a Fock state across the occupation of orbital `e`.
///
/// `columns` is M×N with orthonormal columns, each column one occupied
/// orbital of the Fock state expressed in the working basis.
pub fn fock_decompose_wrt_orbital(columns: &DMatrix<C64>, e: usize) -> Result<FockDecomposition> {
    let m = columns.nrows();
    let n = columns.ncols();
    if e >= m {
        return Err(Error::OrbitalOutOfRange { index: e, num_orbitals: m });
    }
    let gram = columns.adjoint() * columns;
    let mut deviation: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            deviation = deviation.max((gram[(i, j)] - expect).norm());
        }
    }
    if deviation > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "columns are not orthonormal (max deviation {deviation:.3e})"
        )));
    }

    // Row of the marked orbital across all columns.
    let r: Vec<C64> = (0..n).map(|j| columns[(e, j)]).collect();
    let r_norm: f64 = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    // Column mixing V ∈ U(N): first column concentrates the e-occupation.
    let mut v = DMatrix::<C64>::zeros(n, n);
    if r_norm < 1e-14 {
        v.fill_with_identity();
    } else {
        for i in 0..n {
            v[(i, 0)] = r[i].conj() / r_norm;
        }
        // Complete with Gram-Schmidt over the standard basis.
        let mut filled = 1;
        for basis in 0..n {
            if filled == n {
                break;
            }
            let mut cand = DVector::<C64>::zeros(n);
            cand[basis] = C64::new(1.0, 0.0);
            for k in 0..filled {
                let proj: C64 = (0..n).map(|i| v[(i, k)].conj() * cand[i]).sum();
                for i in 0..n {
                    let vik = v[(i, k)];
                    cand[i] -= proj * vik;
                }
            }
            let nn = cand.norm();
            if nn > 1e-8 {
                for i in 0..n {
                    v[(i, filled)] = cand[i] / C64::new(nn, 0.0);
                }
                filled += 1;
            }
        }
        assert_eq!(filled, n, "Gram-Schmidt completion failed");
    }

    let mixed = columns * &v;
    let alpha_prime = r_norm.min(1.0);
    let phase = det_submatrix(&v, &(0..n).collect::<Vec<_>>(), &(0..n).collect::<Vec<_>>()).conj();

    let s_orbital = if (1.0 - alpha_prime).abs() < 1e-12 || alpha_prime < 1e-14 && r_norm >= 1e-14 {
        None
    } else {
        let coeff = (1.0 - alpha_prime * alpha_prime).sqrt();
        if coeff < 1e-12 {
            None
        } else {
            let mut s = DVector::<C64>::zeros(m);
            for i in 0..m {
                s[i] = mixed[(i, 0)];
            }
            s[e] -= C64::new(alpha_prime, 0.0);
            Some(s / C64::new(coeff, 0.0))
        }
    };
    let s_orbital = if r_norm < 1e-14 {
        // No e-support at all: α' = 0 and the first mixed column is the s orbital.
        let mut s = DVector::<C64>::zeros(m);
        for i in 0..m {
            s[i] = mixed[(i, 0)];
        }
        Some(s)
    } else {
        s_orbital
    };
    let alpha_prime = if r_norm < 1e-14 { 0.0 } else { alpha_prime };

    let mut residual = DMatrix::<C64>::zeros(m, n.saturating_sub(1));
    for j in 1..n {
        for i in 0..m {
            residual[(i, j - 1)] = mixed[(i, j)];
        }
    }
    Ok(FockDecomposition { alpha_prime, s_orbital, residual_columns: residual, phase })
}

/// Apply `Σ_m coeffs[m] c†_m` to a state.
pub fn apply_orbital_creation(state: &PureState, coeffs: &DVector<C64>) -> Result<PureState> {
    let m = state.num_orbitals();
    if coeffs.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: coeffs.len() });
    }
    let mut out = PureState::zero(m);
    for k in 0..m {
        if coeffs[k].norm() > 0.0 {
            out = out.add(&state.apply_creation(k)?.scaled(coeffs[k]));
        }
    }
    Ok(out)
}

/// Apply `Σ_m coeffs[m] c_m` to a state.
pub fn apply_orbital_annihilation(state: &PureState, coeffs: &DVector<C64>) -> Result<PureState> {
    let m = state.num_orbitals();
    if coeffs.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: coeffs.len() });
    }
    let mut out = PureState::zero(m);
    for k in 0..m {
        if coeffs[k].norm() > 0.0 {
            out = out.add(&state.apply_annihilation(k)?.scaled(coeffs[k]));
        }
    }
    Ok(out)
}

/// The Fock state defined by orthonormal orbital columns, as a sparse state:
/// amplitude on determinant K is `det(columns[K, :])`.
pub fn fock_state_from_columns(m: usize, columns: &DMatrix<C64>) -> PureState {
    let n = columns.ncols();
    let mut terms = Vec::new();
    for rows in subsets(m, n) {
        let d = det_submatrix(columns, &rows, &(0..n).collect::<Vec<_>>());
        if d.norm() > 1e-15 {
            terms.push((SlaterDeterminant::from_orbitals(&rows), d));
        }
    }
    PureState::from_terms(m, &terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{OrbitalPartition, OrbitalUnitary};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Two electrons over 4 spin-orbitals (1↑,1↓,2↑,2↓) = (0,1,2,3):
    /// (1/√2)(c†_{1↑}c†_{2↓} + c†_{1↓}c†_{2↑})|0⟩.
    fn spin_singlet_like() -> PureState {
        let h = 1.0 / 2f64.sqrt();
        PureState::from_terms(
            4,
            &[
                (SlaterDeterminant::from_orbitals(&[0, 3]), c(h, 0.0)),
                (SlaterDeterminant::from_orbitals(&[1, 2]), c(h, 0.0)),
            ],
        )
    }

    /// Three electrons over 6 spin-orbitals (1↑,1↓,2↑,2↓,3↑,3↓) = (0..6):
    /// (1/√3)(c†_{1↓}c†_{2↑}c†_{3↑} − c†_{1↑}c†_{2↓}c†_{3↑} + c†_{1↑}c†_{2↑}c†_{3↓})|0⟩.
    fn three_electron_w_like() -> PureState {
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

    /// Per-site rotation new ↑' = (√2·↑ + g·↓)/√3, ↓' = (−g·↑ + √2·↓)/√3
    /// with a sign `g` chosen per site.
    fn w_like_rotation(site_signs: [f64; 3]) -> OrbitalUnitary {
        let s2 = 2f64.sqrt() / 3f64.sqrt();
        let s1 = 1.0 / 3f64.sqrt();
        let mut w = DMatrix::<C64>::zeros(6, 6);
        for site in 0..3 {
            let g = site_signs[site];
            let (u, d) = (2 * site, 2 * site + 1);
            w[(u, u)] = c(s2, 0.0);
            w[(d, u)] = c(g * s1, 0.0);
            w[(u, d)] = c(-g * s1, 0.0);
            w[(d, d)] = c(s2, 0.0);
        }
        OrbitalUnitary::basis_change_from_new_orbitals(w).unwrap()
    }

    #[test]
    fn single_shared_electron_mode_entropy() {
        let h = 1.0 / 2f64.sqrt();
        let psi = PureState::from_terms(
            2,
            &[
                (SlaterDeterminant::from_orbitals(&[0]), c(h, 0.0)),
                (SlaterDeterminant::from_orbitals(&[1]), c(h, 0.0)),
            ],
        );
        let part = OrbitalPartition::new(2, &[0]).unwrap();
        let rdm = mode_rdm(&psi, &part);
        assert_eq!(rdm.basis.len(), 2);
        assert_relative_eq!(rdm.matrix[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_relative_eq!(rdm.matrix[(1, 1)].re, 0.5, epsilon = 1e-12);
        assert_relative_eq!(linear_entropy(&rdm.matrix), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn mode_rdm_trace_and_hermiticity() {
        let psi = spin_singlet_like();
        for mask_a in 1u64..15 {
            let set: Vec<usize> = (0..4).filter(|&k| mask_a >> k & 1 == 1).collect();
            let part = OrbitalPartition::new(4, &set).unwrap();
            let rdm = mode_rdm(&psi, &part);
            let trace: f64 = (0..rdm.matrix.nrows()).map(|i| rdm.matrix[(i, i)].re).sum();
            assert_relative_eq!(trace, 1.0, epsilon = 1e-12);
            let dev = (&rdm.matrix - rdm.matrix.adjoint()).norm();
            assert!(dev < 1e-12);
        }
    }

    #[test]
    fn purity_symmetry_all_bipartitions() {
        let psi = three_electron_w_like();
        for mask_a in 1u64..63 {
            let set: Vec<usize> = (0..6).filter(|&k| mask_a >> k & 1 == 1).collect();
            let part = OrbitalPartition::new(6, &set).unwrap();
            let sa = linear_entropy(&mode_rdm(&psi, &part).matrix);
            let sb = linear_entropy(&mode_rdm(&psi, &part.swapped()).matrix);
            assert_relative_eq!(sa, sb, epsilon = 1e-10);
        }
    }

    #[test]
    fn two_electron_example_is_mode_entangled_everywhere() {
        let psi = spin_singlet_like();
        for mask_a in 1u64..15 {
            let set: Vec<usize> = (0..4).filter(|&k| mask_a >> k & 1 == 1).collect();
            let part = OrbitalPartition::new(4, &set).unwrap();
            let s = linear_entropy(&mode_rdm(&psi, &part).matrix);
            assert!(s > 1e-3, "bipartition {set:?} gave entropy {s}");
        }
    }

    #[test]
    fn one_particle_rdm_of_determinant_is_projector() {
        let det = PureState::determinant(5, SlaterDeterminant::from_orbitals(&[1, 3]));
        let rho = one_particle_rdm(&det).matrix;
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j && (i == 1 || i == 3) { 1.0 } else { 0.0 };
                assert_relative_eq!(rho[(i, j)].re, expect, epsilon = 1e-12);
                assert_relative_eq!(rho[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }
        assert_relative_eq!(particle_entropy(&det).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn two_electron_example_entropy_and_geometric() {
        let psi = spin_singlet_like();
        assert_relative_eq!(particle_entropy(&psi).unwrap(), 1.0, epsilon = 1e-10);
        let res = geometric_entanglement(&psi, &GeometricOptions::default()).unwrap();
        assert_relative_eq!(res.value, 0.5, epsilon = 1e-10);
        assert_relative_eq!(res.overlap_sqr, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn three_electron_dominant_determinant() {
        // The sign-adjusted per-site rotation (g = −1 on site 2) concentrates
        // weight 2/3 on the all-↑' determinant; 1 − (2/3)² = 5/9 is then the
        // geometric entanglement.
        let psi = three_electron_w_like();
        let rotated = psi.apply_orbital_unitary(&w_like_rotation([1.0, -1.0, 1.0])).unwrap();
        let lead = rotated.amplitude(&SlaterDeterminant::from_orbitals(&[0, 2, 4]));
        assert_relative_eq!(lead.re, 2.0 / 3.0, epsilon = 1e-12);
        let tail = rotated.amplitude(&SlaterDeterminant::from_orbitals(&[1, 3, 5]));
        assert_relative_eq!(tail.re, -2f64.sqrt() / 3.0, epsilon = 1e-12);
        assert_relative_eq!(rotated.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn three_electron_rotated_rdm_blocks() {
        // In the original basis the 1-RDM is diagonal, diag(2/3, 1/3) per
        // site, so the uniform per-site rotation produces identical 2×2
        // blocks (1/9)[[5, −√2], [−√2, 4]] on all three sites.
        let psi = three_electron_w_like();
        let plain = one_particle_rdm(&psi).matrix;
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i != j { 0.0 } else if i % 2 == 0 { 2.0 / 3.0 } else { 1.0 / 3.0 };
                assert_relative_eq!(plain[(i, j)].re, expect, epsilon = 1e-12);
                assert_relative_eq!(plain[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }

        let rotated = psi.apply_orbital_unitary(&w_like_rotation([1.0, 1.0, 1.0])).unwrap();
        let rho = one_particle_rdm(&rotated).matrix;
        let s2 = 2f64.sqrt();
        let expect = [
            [5.0, -s2, 0.0, 0.0, 0.0, 0.0],
            [-s2, 4.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 5.0, -s2, 0.0, 0.0],
            [0.0, 0.0, -s2, 4.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 5.0, -s2],
            [0.0, 0.0, 0.0, 0.0, -s2, 4.0],
        ];
        for i in 0..6 {
            for j in 0..6 {
                assert_relative_eq!(rho[(i, j)].re, expect[i][j] / 9.0, epsilon = 1e-12);
                assert_relative_eq!(rho[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn three_electron_entropy_is_four_thirds() {
        let psi = three_electron_w_like();
        assert_relative_eq!(particle_entropy(&psi).unwrap(), 4.0 / 3.0, epsilon = 1e-10);
        // Invariant under the basis rotation.
        let rotated = psi.apply_orbital_unitary(&w_like_rotation([1.0, 1.0, 1.0])).unwrap();
        assert_relative_eq!(particle_entropy(&rotated).unwrap(), 4.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn three_electron_geometric_via_optimizer() {
        let psi = three_electron_w_like();
        let options = GeometricOptions { mode: GeometricMode::Optimize, restarts: 8, ..Default::default() };
        let res = geometric_entanglement(&psi, &options).unwrap();
        assert_relative_eq!(res.value, 5.0 / 9.0, epsilon = 1e-6);
    }

    #[test]
    fn three_electron_geometric_via_oracle() {
        let psi = three_electron_w_like();
        let value = brute_force_closest_fock(&psi, &BruteForceBudget::default()).unwrap();
        assert_relative_eq!(value, 5.0 / 9.0, epsilon = 1e-6);
    }

    #[test]
    fn separable_three_electron_oracle_gives_zero() {
        let det = PureState::determinant(6, SlaterDeterminant::from_orbitals(&[0, 2, 4]));
        // Scramble with an orbital rotation so the Fock structure is hidden.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = OrbitalUnitary::new(exp_i_hermitian(&random_hermitian(6, &mut rng, 0.8))).unwrap();
        let hidden = det.apply_orbital_unitary(&u).unwrap();
        assert!(hidden.num_terms() > 1);
        let value = brute_force_closest_fock(&hidden, &BruteForceBudget::default()).unwrap();
        assert!(value.abs() < 1e-8, "got {value}");
        assert!(particle_entropy(&hidden).unwrap().abs() < 1e-10);
    }

    #[test]
    fn optimizer_matches_closed_form_on_random_two_electron_states() {
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let mut terms = Vec::new();
            for orbs in crate::fock::subsets(5, 2) {
                terms.push((
                    SlaterDeterminant::from_orbitals(&orbs),
                    c(gaussian(&mut rng), gaussian(&mut rng)),
                ));
            }
            let psi = PureState::from_terms(5, &terms).normalized().unwrap();
            let closed = geometric_entanglement(
                &psi,
                &GeometricOptions { mode: GeometricMode::Closed2e, ..Default::default() },
            )
            .unwrap();
            let opt = geometric_entanglement(
                &psi,
                &GeometricOptions { mode: GeometricMode::Optimize, restarts: 6, ..Default::default() },
            )
            .unwrap();
            assert_relative_eq!(closed.value, opt.value, epsilon = 1e-8);
        }
    }

    #[test]
    fn geometric_rejects_unnormalized() {
        let psi = spin_singlet_like().scaled(c(0.5, 0.0));
        assert!(geometric_entanglement(&psi, &GeometricOptions::default()).is_err());
    }

    #[test]
    fn decompose_single_column_on_marked_orbital() {
        let mut col = DMatrix::<C64>::zeros(3, 1);
        col[(1, 0)] = c(1.0, 0.0);
        let d = fock_decompose_wrt_orbital(&col, 1).unwrap();
        assert_relative_eq!(d.alpha_prime, 1.0, epsilon = 1e-12);
        assert!(d.s_orbital.is_none());
    }

    #[test]
    fn decompose_single_column_even_split() {
        let h = 1.0 / 2f64.sqrt();
        let mut col = DMatrix::<C64>::zeros(3, 1);
        col[(0, 0)] = c(h, 0.0);
        col[(2, 0)] = c(h, 0.0);
        let d = fock_decompose_wrt_orbital(&col, 0).unwrap();
        assert_relative_eq!(d.alpha_prime, h, epsilon = 1e-12);
        let s = d.s_orbital.unwrap();
        // s is a unit vector with no weight on the marked orbital.
        assert_relative_eq!(s.norm(), 1.0, epsilon = 1e-12);
        assert!(s[0].norm() < 1e-12);
        assert_relative_eq!(s[2].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn decompose_round_trip_reassembles_the_state() {
        for seed in 0..4u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
            let u = exp_i_hermitian(&random_hermitian(4, &mut rng, 0.9));
            let columns = u.columns(0, 2).into_owned();
            let reference = fock_state_from_columns(4, &columns);

            let e = (seed % 4) as usize;
            let d = fock_decompose_wrt_orbital(&columns, e).unwrap();

            // Rebuild: residual creators right-to-left, then the (e, s) layer.
            let mut state = PureState::vacuum(4);
            for j in (0..d.residual_columns.ncols()).rev() {
                let col = d.residual_columns.column(j).into_owned();
                state = apply_orbital_creation(&state, &col).unwrap();
            }
            let mut head = DVector::<C64>::zeros(4);
            head[e] = c(d.alpha_prime, 0.0);
            if let Some(s) = &d.s_orbital {
                let coeff = (1.0 - d.alpha_prime * d.alpha_prime).sqrt();
                for i in 0..4 {
                    head[i] += s[i] * coeff;
                }
            }
            let rebuilt = apply_orbital_creation(&state, &head).unwrap().scaled(d.phase);

            let diff = rebuilt.add(&reference.scaled(c(-1.0, 0.0)));
            assert!(diff.norm() < 1e-10, "seed {seed}: mismatch {}", diff.norm());
        }
    }

    #[test]
    fn decompose_rejects_non_orthonormal() {
        let mut cols = DMatrix::<C64>::zeros(3, 2);
        cols[(0, 0)] = c(1.0, 0.0);
        cols[(0, 1)] = c(1.0, 0.0);
        assert!(fock_decompose_wrt_orbital(&cols, 0).is_err());
    }
}
