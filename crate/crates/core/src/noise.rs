//! Noise processes: the spin-flip channel and its per-shot sampler, the
//! per-qubit depolarizing channel, the Brownian random-unitary sampler,
//! and ordered combinations of these stages.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{
    expi_hermitian_matrix, per_qubit_mask, C64, CMatrix, DensityMatrix, StateVector,
};
use crate::states::{apply_flips, FlipSubset};

/// Spin-flip noise: each qubit flips independently with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinFlipSpec {
    pub p: f64,
}

impl SpinFlipSpec {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "spin-flip probability {p} outside [0, 0.5]"
            )));
        }
        Ok(Self { p })
    }
}

fn default_brownian_steps() -> usize {
    20
}

/// Random-unitary noise of dimensionless strength `q`, realized as a
/// product of `n` exponentials of random Hermitian generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrownianSpec {
    pub q: f64,
    #[serde(default = "default_brownian_steps")]
    pub n: usize,
}

impl BrownianSpec {
    pub fn new(q: f64, n: usize) -> Result<Self> {
        if q < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "brownian strength {q} is negative"
            )));
        }
        if n < 1 {
            return Err(Error::InvalidParameter("brownian step count is zero".into()));
        }
        Ok(Self { q, n })
    }

    pub fn with_default_steps(q: f64) -> Result<Self> {
        Self::new(q, default_brownian_steps())
    }
}

/// Per-qubit depolarizing noise: replacement by the maximally mixed
/// state with probability `p_u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepolarizingSpec {
    pub p_u: f64,
}

impl DepolarizingSpec {
    pub fn new(p_u: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_u) {
            return Err(Error::InvalidParameter(format!(
                "depolarizing probability {p_u} outside [0, 1]"
            )));
        }
        Ok(Self { p_u })
    }
}

/// One elementary noise stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseStage {
    SpinFlip(SpinFlipSpec),
    Brownian(BrownianSpec),
    Depolarizing(DepolarizingSpec),
}

impl std::fmt::Display for NoiseStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NoiseStage::SpinFlip(s) => write!(f, "spin_flip(p={})", s.p),
            NoiseStage::Brownian(s) => write!(f, "brownian(q={},n={})", s.q, s.n),
            NoiseStage::Depolarizing(s) => write!(f, "depolarizing(p_u={})", s.p_u),
        }
    }
}

/// Ordered sequence of noise stages, applied first to last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NoiseSpec {
    stages: Vec<NoiseStage>,
}

impl NoiseSpec {
    pub fn new(stages: Vec<NoiseStage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidParameter("noise spec has no stages".into()));
        }
        Ok(Self { stages })
    }

    pub fn spin_flip(p: f64) -> Result<Self> {
        Ok(Self {
            stages: vec![NoiseStage::SpinFlip(SpinFlipSpec::new(p)?)],
        })
    }

    pub fn brownian(q: f64, n: usize) -> Result<Self> {
        Ok(Self {
            stages: vec![NoiseStage::Brownian(BrownianSpec::new(q, n)?)],
        })
    }

    pub fn stages(&self) -> &[NoiseStage] {
        &self.stages
    }

    pub fn has_spin_flip(&self) -> bool {
        self.stages
            .iter()
            .any(|s| matches!(s, NoiseStage::SpinFlip(_)))
    }

    /// Spin-flip probability of the first spin-flip stage, if any.
    pub fn spin_flip_p(&self) -> Option<f64> {
        self.stages.iter().find_map(|s| match s {
            NoiseStage::SpinFlip(spec) => Some(spec.p),
            _ => None,
        })
    }
}

impl std::fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, stage) in self.stages.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            write!(f, "{stage}")?;
        }
        Ok(())
    }
}

/// p = (1 − e^{−2ΓT})/2, the flip probability after flipping back and
/// forth at rate Γ for a time T.
pub fn flip_probability(gamma_t: f64) -> Result<f64> {
    if gamma_t < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "ΓT = {gamma_t} is negative"
        )));
    }
    Ok((1.0 - (-2.0 * gamma_t).exp()) / 2.0)
}

/// σ^x_j ρ σ^x_j by index permutation: flipping qubit `q` exchanges the
/// corresponding bit of both row and column indices.
fn conjugate_by_flip(rho: &CMatrix, q: usize, num_qubits: usize) -> CMatrix {
    let mask = per_qubit_mask(q, num_qubits);
    let dim = rho.nrows();
    let mut out = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            out[(r, c)] = rho[(r ^ mask, c ^ mask)];
        }
    }
    out
}

/// E(p, ρ): the single-qubit flip map E_j(p, ρ) = p σ^x_j ρ σ^x_j +
/// (1−p) ρ concatenated over all qubits j.
pub fn spinflip_channel(p: f64, rho: &DensityMatrix) -> Result<DensityMatrix> {
    SpinFlipSpec::new(p)?;
    let n = rho.num_qubits();
    let mut entries = rho.entries().clone();
    for q in 0..n {
        let flipped = conjugate_by_flip(&entries, q, n);
        entries = flipped * C64::new(p, 0.0) + entries * C64::new(1.0 - p, 0.0);
    }
    Ok(DensityMatrix::from_parts_unchecked(entries, n))
}

/// Draws the flipped subset of one experimental shot: each qubit is
/// included independently with probability `p`.
pub fn sample_flip_subset<R: Rng + ?Sized>(p: f64, m: usize, rng: &mut R) -> Result<FlipSubset> {
    SpinFlipSpec::new(p)?;
    let mut mask = 0usize;
    for q in 0..m {
        if rng.random::<f64>() < p {
            mask |= 1 << q;
        }
    }
    Ok(FlipSubset::from_mask(mask, m))
}

/// Replaces qubit `q` by the maximally mixed state:
/// ρ ↦ (tr_q ρ) ⊗ (Id/2 at q).
fn replace_by_mixed(rho: &CMatrix, q: usize, num_qubits: usize) -> CMatrix {
    let mask = per_qubit_mask(q, num_qubits);
    let dim = rho.nrows();
    let mut out = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            if (r & mask) != (c & mask) {
                continue;
            }
            // average of the two diagonal blocks of qubit q
            let sum = rho[(r & !mask, c & !mask)] + rho[(r | mask, c | mask)];
            out[(r, c)] = sum * 0.5;
        }
    }
    out
}

/// Depolarizing channel: for every qubit j, replacement by the maximally
/// mixed state with probability `p_u`, otherwise untouched.
pub fn depolarizing_channel(p_u: f64, rho: &DensityMatrix) -> Result<DensityMatrix> {
    DepolarizingSpec::new(p_u)?;
    let n = rho.num_qubits();
    let mut entries = rho.entries().clone();
    for q in 0..n {
        let replaced = replace_by_mixed(&entries, q, n);
        entries = replaced * C64::new(p_u, 0.0) + entries * C64::new(1.0 - p_u, 0.0);
    }
    Ok(DensityMatrix::from_parts_unchecked(entries, n))
}

/// Samples one Brownian random unitary on `m` qubits: the product of
/// `spec.n` exponentials exp(iG_j) of independent random Hermitian
/// generators whose entries have standard deviation 2πq/√(2^m·n), so
/// the accumulated variance is independent of the step count.
pub fn sample_brownian_unitary<R: Rng + ?Sized>(
    spec: &BrownianSpec,
    m: usize,
    rng: &mut R,
) -> CMatrix {
    let dim = 1usize << m;
    let sigma = 2.0 * std::f64::consts::PI * spec.q / ((dim * spec.n) as f64).sqrt();
    let mut u = CMatrix::identity(dim, dim);
    if spec.q == 0.0 {
        return u;
    }
    let off_sigma = sigma / std::f64::consts::SQRT_2;
    for _ in 0..spec.n {
        let mut g = CMatrix::zeros(dim, dim);
        for r in 0..dim {
            let d: f64 = rng.sample(StandardNormal);
            g[(r, r)] = C64::new(d * sigma, 0.0);
            for c in (r + 1)..dim {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let v = C64::new(re * off_sigma, im * off_sigma);
                g[(r, c)] = v;
                g[(c, r)] = v.conj();
            }
        }
        u = expi_hermitian_matrix(&g) * u;
    }
    u
}

/// Outcome of one noisy shot: the noised state and, when the spec
/// contains spin-flip stages, the net flipped subset.
pub(crate) fn sample_shot<R: Rng + ?Sized>(
    spec: &NoiseSpec,
    psi: &StateVector,
    rng: &mut R,
) -> Result<(StateVector, Option<FlipSubset>)> {
    let m = psi.num_qubits();
    let mut state = psi.clone();
    let mut net_mask: Option<usize> = None;
    for stage in spec.stages() {
        match stage {
            NoiseStage::SpinFlip(s) => {
                let subset = sample_flip_subset(s.p, m, rng)?;
                state = apply_flips(&state, &subset)?;
                net_mask = Some(net_mask.unwrap_or(0) ^ subset.mask());
            }
            NoiseStage::Brownian(s) => {
                let u = sample_brownian_unitary(s, m, rng);
                let mut amps = u * state.amplitudes();
                let norm = amps.norm();
                amps /= Complex64::new(norm, 0.0);
                state = StateVector::from_parts_unchecked(amps, m);
            }
            NoiseStage::Depolarizing(_) => {
                return Err(Error::NoShotModel(stage.to_string()));
            }
        }
    }
    Ok((state, net_mask.map(|mask| FlipSubset::from_mask(mask, m))))
}

/// Applies every stage of `spec` as one sampled pure-state shot.
/// Depolarizing stages have no pure-state shot model and are rejected.
pub fn apply_noise_to_pure<R: Rng + ?Sized>(
    spec: &NoiseSpec,
    psi: &StateVector,
    rng: &mut R,
) -> Result<StateVector> {
    sample_shot(spec, psi, rng).map(|(state, _)| state)
}
