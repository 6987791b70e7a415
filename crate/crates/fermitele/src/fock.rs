//! Sparse many-fermion states over up to 64 spin-orbitals.
//!
//! A [`SlaterDeterminant`] is an occupation bitmask with the canonical
//! operator order fixed to ascending orbital index: the determinant with
//! occupied orbitals `i1 < i2 < … < iN` is `c†_{i1} c†_{i2} ⋯ c†_{iN} |0⟩`.
//! Every sign in this module derives from that single convention.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Amplitudes below this magnitude are dropped after every linear operation.
pub const DROP_TOL: f64 = 1e-14;

/// Elementwise tolerance for unitarity / hermiticity checks.
pub const MATRIX_TOL: f64 = 1e-12;

pub const MAX_ORBITALS: usize = 64;

/// Occupation bitmask over at most 64 spin-orbitals, in canonical ascending
/// operator order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SlaterDeterminant(pub u64);

impl SlaterDeterminant {
    pub fn empty() -> Self {
        SlaterDeterminant(0)
    }

    pub fn from_orbitals(orbitals: &[usize]) -> Self {
        let mut mask = 0u64;
        for &k in orbitals {
            assert!(k < MAX_ORBITALS);
            assert!(mask & (1 << k) == 0, "duplicate orbital {k}");
            mask |= 1 << k;
        }
        SlaterDeterminant(mask)
    }

    pub fn occupied(&self, k: usize) -> bool {
        self.0 >> k & 1 == 1
    }

    pub fn electron_count(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn orbitals(&self) -> impl Iterator<Item = usize> + '_ {
        (0..MAX_ORBITALS).filter(|&k| self.occupied(k))
    }

    /// Apply `c†_k`. `None` if `k` is already occupied (Pauli exclusion);
    /// otherwise the new determinant and the reordering sign
    /// `(−1)^(#occupied below k)`.
    pub fn create(&self, k: usize) -> Option<(SlaterDeterminant, i32)> {
        if self.occupied(k) {
            return None;
        }
        let below = (self.0 & ((1u64 << k) - 1)).count_ones();
        let sign = if below % 2 == 0 { 1 } else { -1 };
        Some((SlaterDeterminant(self.0 | 1 << k), sign))
    }

    /// Apply `c_k`. `None` if `k` is unoccupied (`c_k|0⟩ = 0` on that mode).
    pub fn annihilate(&self, k: usize) -> Option<(SlaterDeterminant, i32)> {
        if !self.occupied(k) {
            return None;
        }
        let below = (self.0 & ((1u64 << k) - 1)).count_ones();
        let sign = if below % 2 == 0 { 1 } else { -1 };
        Some((SlaterDeterminant(self.0 & !(1 << k)), sign))
    }

    /// Split across a partition: `(det ∩ A, det ∩ B, sign)` where the sign is
    /// the parity of the permutation taking the canonical ascending product to
    /// the (A-part canonical)(B-part canonical) product.
    pub fn split(&self, partition: &OrbitalPartition) -> (SlaterDeterminant, SlaterDeterminant, i32) {
        let det_a = SlaterDeterminant(self.0 & partition.mask_a);
        let det_b = SlaterDeterminant(self.0 & !partition.mask_a);
        // Crossed pairs (b, a) with b ∈ B, a ∈ A, b < a swap relative order.
        let mut inversions = 0u32;
        for a in det_a.orbitals() {
            inversions += (det_b.0 & ((1u64 << a) - 1)).count_ones();
        }
        let sign = if inversions % 2 == 0 { 1 } else { -1 };
        (det_a, det_b, sign)
    }

    /// Union of two disjoint determinants with the sign that re-sorts the
    /// (A canonical)(B canonical) product into canonical order. Inverse of
    /// [`SlaterDeterminant::split`].
    pub fn join(det_a: SlaterDeterminant, det_b: SlaterDeterminant) -> (SlaterDeterminant, i32) {
        debug_assert_eq!(det_a.0 & det_b.0, 0);
        let mut inversions = 0u32;
        for a in det_a.orbitals() {
            inversions += (det_b.0 & ((1u64 << a) - 1)).count_ones();
        }
        let sign = if inversions % 2 == 0 { 1 } else { -1 };
        (SlaterDeterminant(det_a.0 | det_b.0), sign)
    }
}

impl fmt::Debug for SlaterDeterminant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{{")?;
        let mut first = true;
        for k in self.orbitals() {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
            first = false;
        }
        write!(f, "}}⟩")
    }
}

/// Bipartition of the orbitals `[0, M)` into sets A and B.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitalPartition {
    pub num_orbitals: usize,
    pub mask_a: u64,
}

impl OrbitalPartition {
    pub fn new(num_orbitals: usize, set_a: &[usize]) -> Result<Self> {
        if num_orbitals > MAX_ORBITALS {
            return Err(Error::TooManyOrbitals(num_orbitals));
        }
        let mut mask_a = 0u64;
        for &k in set_a {
            if k >= num_orbitals {
                return Err(Error::OrbitalOutOfRange { index: k, num_orbitals });
            }
            mask_a |= 1 << k;
        }
        Ok(OrbitalPartition { num_orbitals, mask_a })
    }

    pub fn mask_b(&self) -> u64 {
        !self.mask_a & crate::fock::full_mask(self.num_orbitals)
    }

    pub fn set_a(&self) -> Vec<usize> {
        (0..self.num_orbitals).filter(|&k| self.mask_a >> k & 1 == 1).collect()
    }

    pub fn swapped(&self) -> OrbitalPartition {
        OrbitalPartition { num_orbitals: self.num_orbitals, mask_a: self.mask_b() }
    }
}

pub fn full_mask(m: usize) -> u64 {
    if m == 64 {
        u64::MAX
    } else {
        (1u64 << m) - 1
    }
}

/// Sparse pure state: complex amplitudes over determinants.
///
/// Absent determinants carry amplitude zero. If `electron_count` is set,
/// every stored determinant has that popcount.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    num_orbitals: usize,
    terms: BTreeMap<SlaterDeterminant, C64>,
    electron_count: Option<usize>,
}

impl PureState {
    /// The zero state (no terms) over `m` orbitals.
    pub fn zero(m: usize) -> Self {
        assert!(m <= MAX_ORBITALS);
        PureState { num_orbitals: m, terms: BTreeMap::new(), electron_count: None }
    }

    /// The vacuum `|0⟩`.
    pub fn vacuum(m: usize) -> Self {
        let mut s = PureState::zero(m);
        s.terms.insert(SlaterDeterminant::empty(), C64::new(1.0, 0.0));
        s.electron_count = Some(0);
        s
    }

    /// The filled state `|𝟏⟩` with all `m` spin-orbitals occupied.
    pub fn filled(m: usize) -> Self {
        assert!(m >= 1 && m <= MAX_ORBITALS);
        let mut s = PureState::zero(m);
        s.terms.insert(SlaterDeterminant(full_mask(m)), C64::new(1.0, 0.0));
        s.electron_count = Some(m);
        s
    }

    pub fn from_terms(m: usize, terms: &[(SlaterDeterminant, C64)]) -> Self {
        let mut s = PureState::zero(m);
        for &(det, amp) in terms {
            let e = s.terms.entry(det).or_insert(C64::new(0.0, 0.0));
            *e += amp;
        }
        s.prune();
        s.infer_electron_count();
        s
    }

    /// Single determinant with amplitude one.
    pub fn determinant(m: usize, det: SlaterDeterminant) -> Self {
        PureState::from_terms(m, &[(det, C64::new(1.0, 0.0))])
    }

    pub fn num_orbitals(&self) -> usize {
        self.num_orbitals
    }

    pub fn electron_count(&self) -> Option<usize> {
        self.electron_count
    }

    pub fn terms(&self) -> impl Iterator<Item = (&SlaterDeterminant, &C64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn amplitude(&self, det: &SlaterDeterminant) -> C64 {
        self.terms.get(det).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn prune(&mut self) {
        self.terms.retain(|_, a| a.norm() > DROP_TOL);
    }

    fn infer_electron_count(&mut self) {
        let mut counts = self.terms.keys().map(|d| d.electron_count());
        match counts.next() {
            None => self.electron_count = None,
            Some(n) => {
                self.electron_count = if counts.all(|c| c == n) { Some(n) } else { None };
            }
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scaled(&self, factor: C64) -> PureState {
        let mut out = self.clone();
        for a in out.terms.values_mut() {
            *a *= factor;
        }
        out.prune();
        out
    }

    pub fn normalized(&self) -> Result<PureState> {
        let n = self.norm();
        if n < DROP_TOL {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    pub fn add(&self, other: &PureState) -> PureState {
        assert_eq!(self.num_orbitals, other.num_orbitals);
        let mut out = self.clone();
        for (det, amp) in &other.terms {
            let e = out.terms.entry(*det).or_insert(C64::new(0.0, 0.0));
            *e += amp;
        }
        out.prune();
        out.infer_electron_count();
        out
    }

    /// Linear extension of `c†_k` over all terms.
    pub fn apply_creation(&self, k: usize) -> Result<PureState> {
        self.check_orbital(k)?;
        let mut out = PureState::zero(self.num_orbitals);
        for (det, amp) in &self.terms {
            if let Some((new_det, sign)) = det.create(k) {
                let e = out.terms.entry(new_det).or_insert(C64::new(0.0, 0.0));
                *e += amp * sign as f64;
            }
        }
        out.prune();
        out.electron_count = self.electron_count.map(|n| n + 1);
        Ok(out)
    }

    /// Linear extension of `c_k` over all terms.
    pub fn apply_annihilation(&self, k: usize) -> Result<PureState> {
        self.check_orbital(k)?;
        let mut out = PureState::zero(self.num_orbitals);
        for (det, amp) in &self.terms {
            if let Some((new_det, sign)) = det.annihilate(k) {
                let e = out.terms.entry(new_det).or_insert(C64::new(0.0, 0.0));
                *e += amp * sign as f64;
            }
        }
        out.prune();
        out.electron_count = self.electron_count.and_then(|n| n.checked_sub(1));
        Ok(out)
    }

    fn check_orbital(&self, k: usize) -> Result<()> {
        if k >= self.num_orbitals {
            return Err(Error::OrbitalOutOfRange { index: k, num_orbitals: self.num_orbitals });
        }
        Ok(())
    }

    /// `⟨self|other⟩ = Σ_det conj(a_self) · a_other` (determinants orthonormal).
    pub fn inner_product(&self, other: &PureState) -> Result<C64> {
        if self.num_orbitals != other.num_orbitals {
            return Err(Error::DimensionMismatch {
                expected: self.num_orbitals,
                got: other.num_orbitals,
            });
        }
        let mut acc = C64::new(0.0, 0.0);
        // Iterate the smaller map.
        let (small, large) = if self.terms.len() <= other.terms.len() {
            (&self.terms, &other.terms)
        } else {
            (&other.terms, &self.terms)
        };
        for (det, _) in small {
            if let Some(b) = large.get(det) {
                acc += self.terms.get(det).map_or(C64::new(0.0, 0.0), |a| a.conj()) * b;
            }
        }
        Ok(acc)
    }

    /// Re-express the state in a rotated orbital basis.
    ///
    /// The unitary `v` gives the substitution `c†_i = Σ_j c'†_j v[(j, i)]`,
    /// i.e. `v = W†` when the columns of `W` hold the new orbitals expressed
    /// in the old basis. Each determinant maps to the antisymmetrized product
    /// of the transformed columns; the amplitude of the output determinant K
    /// is `Σ_D A_D · det(v[K, D])`.
    pub fn apply_orbital_unitary(&self, v: &OrbitalUnitary) -> Result<PureState> {
        if v.dim() != self.num_orbitals {
            return Err(Error::DimensionMismatch { expected: self.num_orbitals, got: v.dim() });
        }
        let m = self.num_orbitals;
        let mut out = PureState::zero(m);
        for (det, amp) in &self.terms {
            let cols: Vec<usize> = det.orbitals().collect();
            let n = cols.len();
            if n == 0 {
                let e = out.terms.entry(*det).or_insert(C64::new(0.0, 0.0));
                *e += amp;
                continue;
            }
            for rows in subsets(m, n) {
                let d = det_submatrix(&v.matrix, &rows, &cols);
                if d.norm() > 0.0 {
                    let e = out
                        .terms
                        .entry(SlaterDeterminant::from_orbitals(&rows))
                        .or_insert(C64::new(0.0, 0.0));
                    *e += amp * d;
                }
            }
        }
        out.prune();
        out.electron_count = self.electron_count;
        Ok(out)
    }
}

/// All ascending `n`-subsets of `0..m`.
pub fn subsets(m: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    fn rec(m: usize, n: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == n {
            out.push(current.clone());
            return;
        }
        let needed = n - current.len();
        for k in start..=(m - needed) {
            current.push(k);
            rec(m, n, k + 1, current, out);
            current.pop();
        }
    }
    if n <= m {
        rec(m, n, 0, &mut current, &mut out);
    }
    out
}

/// Determinant of the submatrix `mat[rows, cols]` by Gaussian elimination
/// with partial pivoting. Intended for small n (≤ 8 in practice).
pub fn det_submatrix(mat: &DMatrix<C64>, rows: &[usize], cols: &[usize]) -> C64 {
    let n = rows.len();
    debug_assert_eq!(n, cols.len());
    match n {
        0 => return C64::new(1.0, 0.0),
        1 => return mat[(rows[0], cols[0])],
        2 => {
            return mat[(rows[0], cols[0])] * mat[(rows[1], cols[1])]
                - mat[(rows[0], cols[1])] * mat[(rows[1], cols[0])];
        }
        _ => {}
    }
    let mut a: Vec<C64> = Vec::with_capacity(n * n);
    for &r in rows {
        for &c in cols {
            a.push(mat[(r, c)]);
        }
    }
    let mut det = C64::new(1.0, 0.0);
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].norm();
        for r in col + 1..n {
            let v = a[r * n + col].norm();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if pivot != col {
            for c in 0..n {
                a.swap(col * n + c, pivot * n + c);
            }
            det = -det;
        }
        let p = a[col * n + col];
        det *= p;
        for r in col + 1..n {
            let f = a[r * n + col] / p;
            for c in col..n {
                let v = a[col * n + c];
                a[r * n + c] -= f * v;
            }
        }
    }
    det
}

/// M×M unitary basis change, validated to [`MATRIX_TOL`] at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitalUnitary {
    matrix: DMatrix<C64>,
}

impl OrbitalUnitary {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let dim = matrix.nrows();
        let product = matrix.adjoint() * &matrix;
        let mut deviation: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let expect = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                deviation = deviation.max((product[(i, j)] - expect).norm());
            }
        }
        if deviation > MATRIX_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(OrbitalUnitary { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        OrbitalUnitary { matrix: DMatrix::identity(dim, dim) }
    }

    /// Build from the columns of `w`, where column `j` holds the new orbital
    /// `c'†_j = Σ_i c†_i w[(i, j)]`. The returned unitary is `w†`, ready to
    /// pass to [`PureState::apply_orbital_unitary`].
    pub fn basis_change_from_new_orbitals(w: DMatrix<C64>) -> Result<Self> {
        OrbitalUnitary::new(w.adjoint())
    }

    /// Embed a 2×2 unitary acting on orbitals `(p, q)` into an M×M identity.
    pub fn embed_pair(m: usize, p: usize, q: usize, block: [[C64; 2]; 2]) -> Result<Self> {
        if p == q {
            return Err(Error::InvalidArgument("pair orbitals must differ".into()));
        }
        let mut mat = DMatrix::identity(m, m);
        mat[(p, p)] = block[0][0];
        mat[(p, q)] = block[0][1];
        mat[(q, p)] = block[1][0];
        mat[(q, q)] = block[1][1];
        OrbitalUnitary::new(mat)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn adjoint(&self) -> OrbitalUnitary {
        OrbitalUnitary { matrix: self.matrix.adjoint() }
    }

    /// Matrix product `self · other` (composition of substitutions).
    pub fn compose(&self, other: &OrbitalUnitary) -> OrbitalUnitary {
        OrbitalUnitary { matrix: &self.matrix * &other.matrix }
    }

    /// Identity outside `support`?
    pub fn is_local_to(&self, support: &[usize]) -> bool {
        let m = self.dim();
        let in_support = |k: usize| support.contains(&k);
        for i in 0..m {
            for j in 0..m {
                if in_support(i) && in_support(j) {
                    continue;
                }
                let expect = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                if (self.matrix[(i, j)] - expect).norm() > MATRIX_TOL {
                    return false;
                }
            }
        }
        true
    }
}
