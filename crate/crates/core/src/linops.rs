//! Dense complex linear algebra on multi-qubit registers.
//!
//! Conventions used throughout the crate:
//!
//! * Qubit `0` is the leftmost tensor factor and therefore the most
//!   significant bit of a computational-basis index.
//! * The basis of a single qubit is `{|↑⟩, |↓⟩}` with `|↑⟩ ↦ 0` and
//!   `|↓⟩ ↦ 1`.
//!
//! Everything here is a pure function of its inputs; all values are
//! immutable after construction.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const NORM_TOL: f64 = 1e-10;
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalue floor used when checking positive semidefiniteness.
pub const PSD_TOL: f64 = -1e-9;
/// Below this gap the Daleckii–Krein divided difference switches to its
/// analytic limit.
pub const EIGENVALUE_COINCIDENCE_TOL: f64 = 1e-8;

fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

fn log2(n: usize) -> usize {
    n.trailing_zeros() as usize
}

/// Pure state of `num_qubits` qubits as a normalized amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: CVector,
    num_qubits: usize,
}

impl StateVector {
    /// Builds a state from raw amplitudes, checking length and norm.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let len = amplitudes.len();
        if !is_power_of_two(len) {
            return Err(Error::NotPowerOfTwo(len));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(len, norm));
        }
        Ok(Self {
            amplitudes,
            num_qubits: log2(len),
        })
    }

    /// Computational-basis state |index⟩.
    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let dim = 1 << num_qubits;
        assert!(index < dim, "basis index out of range");
        let mut amplitudes = CVector::zeros(dim);
        amplitudes[index] = C64::new(1.0, 0.0);
        Self {
            amplitudes,
            num_qubits,
        }
    }

    pub(crate) fn from_parts_unchecked(amplitudes: CVector, num_qubits: usize) -> Self {
        Self {
            amplitudes,
            num_qubits,
        }
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "inner product of states with {} and {} amplitudes",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Kronecker product; `self` supplies the most significant qubits.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let (da, db) = (self.dim(), other.dim());
        let mut amplitudes = CVector::zeros(da * db);
        for i in 0..da {
            for j in 0..db {
                amplitudes[i * db + j] = self.amplitudes[i] * other.amplitudes[j];
            }
        }
        StateVector {
            amplitudes,
            num_qubits: self.num_qubits + other.num_qubits,
        }
    }

    /// |self⟩⟨self| as a density matrix.
    pub fn projector(&self) -> DensityMatrix {
        let d = self.dim();
        let mut entries = CMatrix::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                entries[(r, c)] = self.amplitudes[r] * self.amplitudes[c].conj();
            }
        }
        DensityMatrix {
            entries,
            num_qubits: self.num_qubits,
        }
    }
}

/// Mixed state of `num_qubits` qubits: Hermitian, unit-trace, PSD matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
    num_qubits: usize,
}

impl DensityMatrix {
    /// Builds a density matrix, checking shape, Hermiticity and trace.
    /// Positive semidefiniteness is not checked here (it costs an
    /// eigendecomposition); use [`DensityMatrix::min_eigenvalue`].
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix is not square",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let dim = entries.nrows();
        if !is_power_of_two(dim) {
            return Err(Error::NotPowerOfTwo(dim));
        }
        let mut herm_dev: f64 = 0.0;
        for r in 0..dim {
            for c in r..dim {
                herm_dev = herm_dev.max((entries[(r, c)] - entries[(c, r)].conj()).norm());
            }
        }
        if herm_dev > HERMITICITY_TOL {
            return Err(Error::NotHermitian(herm_dev));
        }
        let trace = entries.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::NotUnitTrace(trace.re));
        }
        Ok(Self {
            entries,
            num_qubits: log2(dim),
        })
    }

    pub(crate) fn from_parts_unchecked(entries: CMatrix, num_qubits: usize) -> Self {
        Self {
            entries,
            num_qubits,
        }
    }

    /// Maximally mixed state Id/2^m.
    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let dim = 1 << num_qubits;
        let entries = CMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0);
        Self {
            entries,
            num_qubits,
        }
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// Kronecker product; `self` supplies the most significant qubits.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            entries: self.entries.kronecker(&other.entries),
            num_qubits: self.num_qubits + other.num_qubits,
        }
    }

    /// Smallest eigenvalue; the PSD invariant asks for ≥ −1e-9.
    pub fn min_eigenvalue(&self) -> f64 {
        let (eigs, _) = hermitian_eigen(&self.entries);
        eigs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Spectral decomposition truncated to eigenvalues above `cutoff`,
    /// largest weight first.
    pub fn spectral_factors(&self, cutoff: f64) -> Vec<(f64, CVector)> {
        let (eigs, vecs) = hermitian_eigen(&self.entries);
        let mut factors: Vec<(f64, CVector)> = eigs
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > cutoff)
            .map(|(i, w)| (*w, vecs.column(i).into_owned()))
            .collect();
        factors.sort_by(|a, b| b.0.total_cmp(&a.0));
        factors
    }
}

/// Generator of a neuron unitary: real coefficients over the non-identity
/// Pauli strings on `num_qubits` qubits, so that `K = Σ_α θ_α P_α` is
/// Hermitian by construction and `U = exp(iK)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianGenerator {
    coefficients: Vec<f64>,
    num_qubits: usize,
}

impl HermitianGenerator {
    pub fn new(coefficients: Vec<f64>, num_qubits: usize) -> Result<Self> {
        let expected = 4usize.pow(num_qubits as u32) - 1;
        if coefficients.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "generator on {} qubits needs {} coefficients, got {}",
                num_qubits,
                expected,
                coefficients.len()
            )));
        }
        Ok(Self {
            coefficients,
            num_qubits,
        })
    }

    pub fn zero(num_qubits: usize) -> Self {
        Self {
            coefficients: vec![0.0; 4usize.pow(num_qubits as u32) - 1],
            num_qubits,
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// K = Σ_α θ_α P_{α+1} (index 0 is the excluded identity string).
    pub fn to_matrix(&self) -> CMatrix {
        let dim = 1 << self.num_qubits;
        let mut k = CMatrix::zeros(dim, dim);
        for (i, &theta) in self.coefficients.iter().enumerate() {
            if theta == 0.0 {
                continue;
            }
            for_each_pauli_entry(i + 1, self.num_qubits, |row, col, val| {
                k[(row, col)] += val * theta;
            });
        }
        k
    }
}

/// Bit position (from the least significant end) of qubit `q` in an
/// `n`-qubit register.
#[inline]
pub(crate) fn bit_of_qubit(q: usize, n: usize) -> usize {
    n - 1 - q
}

/// Index mask selecting qubit `q` of an `n`-qubit register.
#[inline]
pub(crate) fn per_qubit_mask(q: usize, n: usize) -> usize {
    1 << bit_of_qubit(q, n)
}

/// Distributes the bits of `value` over qubit `positions` (the first
/// position receives the most significant bit of `value`).
pub(crate) fn scatter_bits(value: usize, positions: &[usize], n: usize) -> usize {
    let mut index = 0;
    let f = positions.len();
    for (i, &q) in positions.iter().enumerate() {
        let bit = (value >> (f - 1 - i)) & 1;
        index |= bit << bit_of_qubit(q, n);
    }
    index
}

/// Kronecker product of two pure states or two density matrices is
/// provided by [`StateVector::tensor`] and [`DensityMatrix::tensor`];
/// mixing the two kinds is rejected at the type level.
///
/// Reduced density matrix on the `keep` qubits, in their original
/// relative order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    let n = rho.num_qubits();
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() {
        return Err(Error::InvalidParameter("duplicate index in keep set".into()));
    }
    if let Some(&bad) = keep_sorted.iter().find(|&&q| q >= n) {
        return Err(Error::QubitOutOfRange {
            index: bad,
            num_qubits: n,
        });
    }
    let traced: Vec<usize> = (0..n).filter(|q| !keep_sorted.contains(q)).collect();
    let kd = 1 << keep_sorted.len();
    let td = 1 << traced.len();
    let mut out = CMatrix::zeros(kd, kd);
    for rk in 0..kd {
        for ck in 0..kd {
            let rbase = scatter_bits(rk, &keep_sorted, n);
            let cbase = scatter_bits(ck, &keep_sorted, n);
            let mut sum = C64::new(0.0, 0.0);
            for e in 0..td {
                let env = scatter_bits(e, &traced, n);
                sum += rho.entries()[(rbase | env, cbase | env)];
            }
            out[(rk, ck)] = sum;
        }
    }
    Ok(DensityMatrix {
        entries: out,
        num_qubits: keep_sorted.len(),
    })
}

/// Embeds a unitary on `targets.len()` qubits into an `m`-qubit register:
/// acts as `u` on `targets` (in listed order) and as identity elsewhere.
pub fn embed_unitary(u: &CMatrix, targets: &[usize], total: usize) -> Result<CMatrix> {
    let f = targets.len();
    if u.nrows() != (1 << f) || u.ncols() != (1 << f) {
        return Err(Error::DimensionMismatch(format!(
            "unitary of dimension {} does not act on {} qubits",
            u.nrows(),
            f
        )));
    }
    if f > total {
        return Err(Error::InvalidParameter(format!(
            "{} targets exceed register of {} qubits",
            f, total
        )));
    }
    let mut seen = vec![false; total];
    for &q in targets {
        if q >= total {
            return Err(Error::QubitOutOfRange {
                index: q,
                num_qubits: total,
            });
        }
        if seen[q] {
            return Err(Error::DuplicateTarget(q));
        }
        seen[q] = true;
    }
    let env: Vec<usize> = (0..total).filter(|q| !targets.contains(q)).collect();
    let dim = 1 << total;
    let fd = 1 << f;
    let ed = 1 << env.len();
    let mut out = CMatrix::zeros(dim, dim);
    for e in 0..ed {
        let ebits = scatter_bits(e, &env, total);
        for tr in 0..fd {
            let row = ebits | scatter_bits(tr, targets, total);
            for tc in 0..fd {
                let col = ebits | scatter_bits(tc, targets, total);
                out[(row, col)] = u[(tr, tc)];
            }
        }
    }
    Ok(out)
}

/// Calls `visit(row, col, value)` for every nonzero entry of the Pauli
/// string selected by the base-4 digits of `index` (digit 0 ↦ Id,
/// 1 ↦ X, 2 ↦ Y, 3 ↦ Z; the most significant digit belongs to qubit 0).
/// Every Pauli string has exactly one nonzero entry per row.
pub fn for_each_pauli_entry<F: FnMut(usize, usize, C64)>(index: usize, f: usize, mut visit: F) {
    let dim = 1 << f;
    let mut xmask = 0usize;
    let mut digits = Vec::with_capacity(f);
    for q in 0..f {
        let digit = (index >> (2 * (f - 1 - q))) & 3;
        digits.push(digit);
        if digit == 1 || digit == 2 {
            xmask |= 1 << bit_of_qubit(q, f);
        }
    }
    for row in 0..dim {
        let col = row ^ xmask;
        let mut val = C64::new(1.0, 0.0);
        for (q, &digit) in digits.iter().enumerate() {
            let rbit = (row >> bit_of_qubit(q, f)) & 1;
            match digit {
                0 | 1 => {}
                2 => {
                    // σ_y: ⟨0|σ_y|1⟩ = −i, ⟨1|σ_y|0⟩ = i
                    val *= if rbit == 0 {
                        C64::new(0.0, -1.0)
                    } else {
                        C64::new(0.0, 1.0)
                    };
                }
                3 => {
                    if rbit == 1 {
                        val = -val;
                    }
                }
                _ => unreachable!(),
            }
        }
        visit(row, col, val);
    }
}

/// Dense Pauli string P_index on `f` qubits.
pub fn pauli_string(index: usize, f: usize) -> Result<CMatrix> {
    if index >= 4usize.pow(f as u32) {
        return Err(Error::PauliIndexOutOfRange {
            index,
            num_qubits: f,
        });
    }
    let dim = 1 << f;
    let mut out = CMatrix::zeros(dim, dim);
    for_each_pauli_entry(index, f, |row, col, val| {
        out[(row, col)] = val;
    });
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues and a unitary
/// matrix of eigenvectors (column `i` belongs to eigenvalue `i`).
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let se = nalgebra::SymmetricEigen::new(h.clone());
    (se.eigenvalues.iter().copied().collect(), se.eigenvectors)
}

/// exp(iH) for Hermitian `h`, via eigendecomposition.
pub fn expi_hermitian_matrix(h: &CMatrix) -> CMatrix {
    let (eigs, v) = hermitian_eigen(h);
    expi_from_eigen(&eigs, &v)
}

/// exp(iK) from a precomputed eigendecomposition of K.
pub(crate) fn expi_from_eigen(eigs: &[f64], v: &CMatrix) -> CMatrix {
    let dim = v.nrows();
    let mut scaled = v.clone();
    for (i, &lambda) in eigs.iter().enumerate() {
        let phase = C64::new(0.0, lambda).exp();
        for r in 0..dim {
            scaled[(r, i)] *= phase;
        }
    }
    scaled * v.adjoint()
}

/// U = exp(iK) for K = Σ_α θ_α P_α.
pub fn exp_hermitian(k: &HermitianGenerator) -> CMatrix {
    expi_hermitian_matrix(&k.to_matrix())
}

/// Divided-difference matrix of e^{iλ} over an eigenvalue list:
/// Γ_rs = (e^{iλ_r} − e^{iλ_s})/(λ_r − λ_s), with the analytic limit
/// i·e^{iλ_r} on (near-)coincident eigenvalues.
pub(crate) fn exp_divided_differences(eigs: &[f64]) -> CMatrix {
    let n = eigs.len();
    let phases: Vec<C64> = eigs.iter().map(|&l| C64::new(0.0, l).exp()).collect();
    let mut gamma = CMatrix::zeros(n, n);
    for r in 0..n {
        for s in 0..n {
            let dl = eigs[r] - eigs[s];
            gamma[(r, s)] = if dl.abs() < EIGENVALUE_COINCIDENCE_TOL {
                C64::new(0.0, 1.0) * phases[r]
            } else {
                (phases[r] - phases[s]) / C64::new(dl, 0.0)
            };
        }
    }
    gamma
}

/// ∂U/∂θ_α of U = exp(iK) in the direction of the Pauli string
/// P_{α+1} (coefficient index α), by the Daleckii–Krein formula.
pub fn exp_hermitian_derivative(k: &HermitianGenerator, direction: usize) -> Result<CMatrix> {
    if direction >= k.len() {
        return Err(Error::PauliIndexOutOfRange {
            index: direction,
            num_qubits: k.num_qubits(),
        });
    }
    let (eigs, v) = hermitian_eigen(&k.to_matrix());
    let gamma = exp_divided_differences(&eigs);
    let p = pauli_string(direction + 1, k.num_qubits())?;
    let w = v.adjoint() * p * &v;
    let inner = w.zip_map(&gamma, |wv, gv| wv * gv);
    Ok(&v * inner * v.adjoint())
}

/// F(ρ, |ψ⟩) = ⟨ψ|ρ|ψ⟩, clamped to [0, 1].
pub fn fidelity_pure(rho: &DensityMatrix, psi: &StateVector) -> Result<f64> {
    if rho.dim() != psi.dim() {
        return Err(Error::DimensionMismatch(format!(
            "density matrix of dimension {} vs state of dimension {}",
            rho.dim(),
            psi.dim()
        )));
    }
    let v = rho.entries() * psi.amplitudes();
    let f = psi.amplitudes().dotc(&v);
    debug_assert!(f.im.abs() < 1e-10, "fidelity has imaginary residue {}", f.im);
    Ok(f.re.clamp(0.0, 1.0))
}

/// Applies a `2^f`-dimensional unitary to the `targets` qubits of an
/// `n`-qubit amplitude vector in place.
pub fn apply_unitary_on_targets(amps: &mut [C64], u: &CMatrix, targets: &[usize], n: usize) {
    let f = targets.len();
    let fd = 1 << f;
    debug_assert_eq!(u.nrows(), fd);
    debug_assert_eq!(amps.len(), 1 << n);
    let strides: Vec<usize> = targets.iter().map(|&q| 1 << bit_of_qubit(q, n)).collect();
    let env: Vec<usize> = (0..n).filter(|q| !targets.contains(q)).collect();
    let ed = 1 << env.len();
    let mut idx = vec![0usize; fd];
    let mut x = vec![C64::new(0.0, 0.0); fd];
    for e in 0..ed {
        let base = scatter_bits(e, &env, n);
        for (s, slot) in idx.iter_mut().enumerate() {
            let mut t = base;
            for (i, &stride) in strides.iter().enumerate() {
                if (s >> (f - 1 - i)) & 1 == 1 {
                    t |= stride;
                }
            }
            *slot = t;
        }
        for (s, &i) in idx.iter().enumerate() {
            x[s] = amps[i];
        }
        for (r, &i) in idx.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (s, &xs) in x.iter().enumerate() {
                acc += u[(r, s)] * xs;
            }
            amps[i] = acc;
        }
    }
}

/// Contraction used by the gradient engine: given vectors `a`, `b` on an
/// `n`-qubit register, returns the matrix `R[τ', τ] = Σ_env a[(τ', env)]
/// · conj(b[(τ, env)])` over the `targets` qubits, so that
/// `b† (du ⊗ Id) a = tr(du · R)` for any `du` on the targets.
pub(crate) fn reduce_outer_on_targets(
    a: &[C64],
    b: &[C64],
    targets: &[usize],
    n: usize,
) -> CMatrix {
    let f = targets.len();
    let fd = 1 << f;
    let strides: Vec<usize> = targets.iter().map(|&q| 1 << bit_of_qubit(q, n)).collect();
    let env: Vec<usize> = (0..n).filter(|q| !targets.contains(q)).collect();
    let ed = 1 << env.len();
    let mut out = CMatrix::zeros(fd, fd);
    let mut idx = vec![0usize; fd];
    for e in 0..ed {
        let base = scatter_bits(e, &env, n);
        for (s, slot) in idx.iter_mut().enumerate() {
            let mut t = base;
            for (i, &stride) in strides.iter().enumerate() {
                if (s >> (f - 1 - i)) & 1 == 1 {
                    t |= stride;
                }
            }
            *slot = t;
        }
        for (tp, &ia) in idx.iter().enumerate() {
            let av = a[ia];
            if av == C64::new(0.0, 0.0) {
                continue;
            }
            for (t, &ib) in idx.iter().enumerate() {
                out[(tp, t)] += av * b[ib].conj();
            }
        }
    }
    out
}

/// Random pure state from Gaussian amplitudes (test and sampling support).
pub fn random_state<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> StateVector {
    let dim = 1 << num_qubits;
    let mut amplitudes = CVector::zeros(dim);
    for i in 0..dim {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        amplitudes[i] = C64::new(re, im);
    }
    let norm = amplitudes.norm();
    amplitudes /= C64::new(norm, 0.0);
    StateVector {
        amplitudes,
        num_qubits,
    }
}

/// Random density matrix as a mixture of a few random pure states.
pub fn random_density<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> DensityMatrix {
    let dim = 1 << num_qubits;
    let components = 3.min(dim);
    let mut weights: Vec<f64> = (0..components).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let mut entries = CMatrix::zeros(dim, dim);
    for &w in &weights {
        let psi = random_state(num_qubits, rng);
        entries += psi.projector().entries() * C64::new(w, 0.0);
    }
    DensityMatrix {
        entries,
        num_qubits,
    }
}

/// Random unitary on `num_qubits` qubits (exp of a random Hermitian).
pub fn random_unitary<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> CMatrix {
    let dim = 1 << num_qubits;
    let mut h = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        h[(r, r)] = C64::new(rng.sample(StandardNormal), 0.0);
        for c in (r + 1)..dim {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let v = C64::new(re, im);
            h[(r, c)] = v;
            h[(c, r)] = v.conj();
        }
    }
    expi_hermitian_matrix(&h)
}

/// Maximum absolute deviation of `u`·`u†` from the identity.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let id = CMatrix::identity(u.nrows(), u.ncols());
    (u * u.adjoint() - id).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn max_entry_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn tensor_of_up_and_down_is_basis_one() {
        let up = StateVector::basis(1, 0);
        let down = StateVector::basis(1, 1);
        let t = up.tensor(&down);
        assert_eq!(t.dim(), 4);
        assert_abs_diff_eq!(t.amplitudes()[1].re, 1.0, epsilon = 1e-15);
        for i in [0usize, 2, 3] {
            assert_abs_diff_eq!(t.amplitudes()[i].norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn tensor_preserves_trace_and_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rho = random_density(1, &mut rng);
        let mixed = DensityMatrix::maximally_mixed(1);
        let t = rho.tensor(&mixed);
        assert_abs_diff_eq!(t.trace().re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.trace().im, 0.0, epsilon = 1e-12);

        let a = random_state(1, &mut rng);
        let b = random_state(1, &mut rng);
        assert_abs_diff_eq!(a.tensor(&b).amplitudes().norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let up = StateVector::basis(1, 0);
        let down = StateVector::basis(1, 1);
        let rho = up.tensor(&down).projector();
        let reduced = partial_trace(&rho, &[0]).unwrap();
        assert_abs_diff_eq!(reduced.entries()[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(reduced.entries()[(1, 1)].re, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_of_bell_pair_is_maximally_mixed() {
        let mut amps = CVector::zeros(4);
        amps[0] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[3] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let bell = StateVector::new(amps).unwrap();
        let reduced = partial_trace(&bell.projector(), &[0]).unwrap();
        assert!(max_entry_diff(reduced.entries(), DensityMatrix::maximally_mixed(1).entries()) < 1e-12);
    }

    /// Brute-force index-summation oracle, written digit by digit and
    /// independent of the scatter-based implementation.
    fn trace_out_last_of_three(rho: &DensityMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(4, 4);
        for r0 in 0..2usize {
            for r1 in 0..2usize {
                for c0 in 0..2usize {
                    for c1 in 0..2usize {
                        let mut sum = c(0.0, 0.0);
                        for e in 0..2usize {
                            let row = r0 * 4 + r1 * 2 + e;
                            let col = c0 * 4 + c1 * 2 + e;
                            sum += rho.entries()[(row, col)];
                        }
                        out[(r0 * 2 + r1, c0 * 2 + c1)] = sum;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn partial_trace_matches_brute_force_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let rho = random_density(3, &mut rng);
            let reduced = partial_trace(&rho, &[0, 1]).unwrap();
            assert!(max_entry_diff(reduced.entries(), &trace_out_last_of_three(&rho)) < 1e-12);
            assert_abs_diff_eq!(reduced.trace().re, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn partial_trace_undoes_tensor() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let a = random_density(2, &mut rng);
            let b = random_density(1, &mut rng);
            let t = a.tensor(&b);
            let back = partial_trace(&t, &[0, 1]).unwrap();
            assert!(max_entry_diff(back.entries(), a.entries()) < 1e-12);
        }
    }

    #[test]
    fn partial_trace_rejects_bad_input() {
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(matches!(partial_trace(&rho, &[]), Err(Error::EmptyKeepSet)));
        assert!(matches!(
            partial_trace(&rho, &[5]),
            Err(Error::QubitOutOfRange { .. })
        ));
    }

    #[test]
    fn embed_sigma_x_on_second_qubit() {
        let x = pauli_string(1, 1).unwrap();
        let e = embed_unitary(&x, &[1], 2).unwrap();
        let up_up = StateVector::basis(2, 0);
        let moved = &e * up_up.amplitudes();
        // |↑↑⟩ → |↑↓⟩ is index 0 → 1
        assert_abs_diff_eq!(moved[1].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn embed_identity_is_identity() {
        let id = CMatrix::identity(2, 2);
        let e = embed_unitary(&id, &[1], 3).unwrap();
        assert!(max_entry_diff(&e, &CMatrix::identity(8, 8)) < 1e-15);
    }

    /// Permutation-conjugation oracle: move the targets to the front with
    /// an explicit qubit-permutation matrix, apply u ⊗ Id, move back.
    fn embed_via_permutation(u: &CMatrix, targets: &[usize], total: usize) -> CMatrix {
        let order: Vec<usize> = {
            let mut rest: Vec<usize> = (0..total).filter(|q| !targets.contains(q)).collect();
            let mut o = targets.to_vec();
            o.append(&mut rest);
            o
        };
        let dim = 1 << total;
        // P maps |q_order(0) q_order(1) ...⟩ basis to the original one.
        let mut p = CMatrix::zeros(dim, dim);
        for src in 0..dim {
            let mut dst = 0usize;
            for (newpos, &oldq) in order.iter().enumerate() {
                let bit = (src >> bit_of_qubit(oldq, total)) & 1;
                dst |= bit << bit_of_qubit(newpos, total);
            }
            p[(dst, src)] = c(1.0, 0.0);
        }
        let envdim = 1 << (total - targets.len());
        let big = u.kronecker(&CMatrix::identity(envdim, envdim));
        p.adjoint() * big * p
    }

    #[test]
    fn embed_matches_permutation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let u = random_unitary(2, &mut rng);
        let targets = [2usize, 0];
        let fast = embed_unitary(&u, &targets, 3).unwrap();
        let slow = embed_via_permutation(&u, &targets, 3);
        assert!(max_entry_diff(&fast, &slow) < 1e-12);
        assert!(unitarity_defect(&fast) < 1e-10);
    }

    #[test]
    fn embed_rejects_duplicates_and_overflow() {
        let u = CMatrix::identity(4, 4);
        assert!(matches!(
            embed_unitary(&u, &[1, 1], 3),
            Err(Error::DuplicateTarget(1))
        ));
        assert!(embed_unitary(&u, &[0, 1], 1).is_err());
    }

    #[test]
    fn pauli_identity_and_involution() {
        let id = pauli_string(0, 2).unwrap();
        assert!(max_entry_diff(&id, &CMatrix::identity(4, 4)) < 1e-15);
        let x = pauli_string(1, 1).unwrap();
        assert!(max_entry_diff(&(&x * &x), &CMatrix::identity(2, 2)) < 1e-15);
    }

    #[test]
    fn pauli_trace_orthogonality() {
        for f in 1..=2usize {
            let dim = 1 << f;
            let count = 4usize.pow(f as u32);
            for a in 0..count {
                let pa = pauli_string(a, f).unwrap();
                for b in 0..count {
                    let pb = pauli_string(b, f).unwrap();
                    let tr = (&pa * &pb).trace();
                    let expected = if a == b { dim as f64 } else { 0.0 };
                    assert_abs_diff_eq!(tr.re, expected, epsilon = 1e-12);
                    assert_abs_diff_eq!(tr.im, 0.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn pauli_rejects_out_of_range() {
        assert!(pauli_string(4, 1).is_err());
    }

    #[test]
    fn exp_of_zero_generator_is_identity() {
        let k = HermitianGenerator::zero(2);
        assert!(max_entry_diff(&exp_hermitian(&k), &CMatrix::identity(4, 4)) < 1e-12);
    }

    #[test]
    fn exp_of_half_pi_x_is_i_sigma_x() {
        // coefficients on 1 qubit: [X, Y, Z]
        let k = HermitianGenerator::new(vec![std::f64::consts::FRAC_PI_2, 0.0, 0.0], 1).unwrap();
        let u = exp_hermitian(&k);
        let up = StateVector::basis(1, 0);
        let moved = &u * up.amplitudes();
        assert_abs_diff_eq!(moved[1].re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(moved[1].im, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(moved[0].norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn exp_times_inverse_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..5 {
            let coeffs: Vec<f64> = (0..15).map(|_| rng.random_range(-1.5..1.5)).collect();
            let k = HermitianGenerator::new(coeffs.clone(), 2).unwrap();
            let kneg =
                HermitianGenerator::new(coeffs.iter().map(|x| -x).collect(), 2).unwrap();
            let prod = exp_hermitian(&k) * exp_hermitian(&kneg);
            assert!(max_entry_diff(&prod, &CMatrix::identity(4, 4)) < 1e-12);
        }
    }

    #[test]
    fn exp_stays_unitary_for_large_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..5 {
            let coeffs: Vec<f64> = (0..15).map(|_| rng.random_range(-10.0..10.0)).collect();
            let k = HermitianGenerator::new(coeffs, 2).unwrap();
            assert!(unitarity_defect(&exp_hermitian(&k)) < 1e-10);
        }
    }

    fn fd_derivative(k: &HermitianGenerator, alpha: usize, h: f64) -> CMatrix {
        let mut plus = k.coefficients().to_vec();
        plus[alpha] += h;
        let mut minus = k.coefficients().to_vec();
        minus[alpha] -= h;
        let up = exp_hermitian(&HermitianGenerator::new(plus, k.num_qubits()).unwrap());
        let um = exp_hermitian(&HermitianGenerator::new(minus, k.num_qubits()).unwrap());
        (up - um) / c(2.0 * h, 0.0)
    }

    #[test]
    fn derivative_at_zero_is_i_pauli() {
        let k = HermitianGenerator::zero(1);
        for alpha in 0..3 {
            let d = exp_hermitian_derivative(&k, alpha).unwrap();
            let expected = pauli_string(alpha + 1, 1).unwrap() * c(0.0, 1.0);
            assert!(max_entry_diff(&d, &expected) < 1e-12);
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for trial in 0..100 {
            let f = 1 + trial % 2;
            let len = 4usize.pow(f as u32) - 1;
            let coeffs: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
            let k = HermitianGenerator::new(coeffs, f).unwrap();
            let alpha = rng.random_range(0..len);
            let analytic = exp_hermitian_derivative(&k, alpha).unwrap();
            let numeric = fd_derivative(&k, alpha, 1e-5);
            assert!(
                max_entry_diff(&analytic, &numeric) < 1e-7,
                "trial {trial}: derivative mismatch"
            );
        }
    }

    #[test]
    fn derivative_handles_degenerate_spectrum() {
        // K = (π/3)·(Z ⊗ Id) has eigenvalues {+π/3, +π/3, −π/3, −π/3}.
        // Pauli index for Z⊗Id is 3·4 + 0 = 12, coefficient slot 11.
        let mut coeffs = vec![0.0; 15];
        coeffs[11] = std::f64::consts::FRAC_PI_3;
        let k = HermitianGenerator::new(coeffs, 2).unwrap();
        let (eigs, _) = hermitian_eigen(&k.to_matrix());
        let mut sorted = eigs.clone();
        sorted.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(sorted[0], sorted[1], epsilon = 1e-12);
        for alpha in [0usize, 4, 11] {
            let analytic = exp_hermitian_derivative(&k, alpha).unwrap();
            let numeric = fd_derivative(&k, alpha, 1e-5);
            assert!(max_entry_diff(&analytic, &numeric) < 1e-7);
        }
    }

    #[test]
    fn fidelity_basics() {
        let mut amps = CVector::zeros(8);
        amps[0] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[7] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let ghz0 = StateVector::new(amps.clone()).unwrap();
        let mut amps_pi = CVector::zeros(8);
        amps_pi[0] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps_pi[7] = c(-std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let ghz_pi = StateVector::new(amps_pi).unwrap();

        let rho = ghz0.projector();
        assert_abs_diff_eq!(fidelity_pure(&rho, &ghz0).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity_pure(&rho, &ghz_pi).unwrap(), 0.0, epsilon = 1e-12);

        let mixed = DensityMatrix::maximally_mixed(3);
        assert_abs_diff_eq!(fidelity_pure(&mixed, &ghz0).unwrap(), 0.125, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_is_global_phase_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let rho = random_density(2, &mut rng);
        let psi = random_state(2, &mut rng);
        let phase = c(0.0, 1.234).exp();
        let shifted =
            StateVector::new(psi.amplitudes().map(|a| a * phase)).unwrap();
        let f0 = fidelity_pure(&rho, &psi).unwrap();
        let f1 = fidelity_pure(&rho, &shifted).unwrap();
        assert_abs_diff_eq!(f0, f1, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_rejects_dimension_mismatch() {
        let rho = DensityMatrix::maximally_mixed(2);
        let psi = StateVector::basis(1, 0);
        assert!(fidelity_pure(&rho, &psi).is_err());
    }

    #[test]
    fn state_vector_validation() {
        let mut amps = CVector::zeros(4);
        amps[0] = c(0.5, 0.0);
        assert!(matches!(
            StateVector::new(amps),
            Err(Error::NotNormalized(..))
        ));
        let mut amps3 = CVector::zeros(3);
        amps3[0] = c(1.0, 0.0);
        assert!(matches!(
            StateVector::new(amps3),
            Err(Error::NotPowerOfTwo(3))
        ));
    }

    #[test]
    fn density_matrix_validation() {
        let mut bad = CMatrix::identity(2, 2);
        bad[(0, 1)] = c(0.5, 0.0); // breaks hermiticity against the zero at (1,0)
        bad[(0, 0)] = c(0.5, 0.0);
        bad[(1, 1)] = c(0.5, 0.0);
        assert!(matches!(
            DensityMatrix::new(bad),
            Err(Error::NotHermitian(..))
        ));
        let not_unit = CMatrix::identity(2, 2);
        assert!(matches!(
            DensityMatrix::new(not_unit),
            Err(Error::NotUnitTrace(..))
        ));
    }

    #[test]
    fn apply_unitary_on_targets_matches_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..10 {
            let u = random_unitary(2, &mut rng);
            let psi = random_state(3, &mut rng);
            let targets = [2usize, 0];
            let big = embed_unitary(&u, &targets, 3).unwrap();
            let expected = &big * psi.amplitudes();
            let mut amps: Vec<C64> = psi.amplitudes().iter().copied().collect();
            apply_unitary_on_targets(&mut amps, &u, &targets, 3);
            for i in 0..8 {
                assert!((amps[i] - expected[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn reduce_outer_contracts_correctly() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let a = random_state(3, &mut rng);
        let b = random_state(3, &mut rng);
        let du = random_unitary(2, &mut rng);
        let targets = [1usize, 2];
        let embedded = embed_unitary(&du, &targets, 3).unwrap();
        let direct = b.amplitudes().dotc(&(&embedded * a.amplitudes()));
        let a_s: Vec<C64> = a.amplitudes().iter().copied().collect();
        let b_s: Vec<C64> = b.amplitudes().iter().copied().collect();
        let red = reduce_outer_on_targets(&a_s, &b_s, &targets, 3);
        let via_reduce = (&du * red).trace();
        assert!((direct - via_reduce).norm() < 1e-12);
    }

    #[test]
    fn spectral_factors_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let rho = random_density(2, &mut rng);
        let factors = rho.spectral_factors(1e-12);
        let mut rebuilt = CMatrix::zeros(4, 4);
        for (w, v) in &factors {
            for r in 0..4 {
                for cidx in 0..4 {
                    rebuilt[(r, cidx)] += v[r] * v[cidx].conj() * c(*w, 0.0);
                }
            }
        }
        assert!(max_entry_diff(&rebuilt, rho.entries()) < 1e-10);
    }
}
