//! Compiled evaluation engine for network channels.
//!
//! The public channel operations in [`crate::qnn`] realize each layer
//! on the full combined density matrix. This module is the fast path
//! used by training and validation: states are carried as weighted
//! sums of pure components, neuron unitaries act as targeted gate
//! applications on amplitude vectors, and the cost gradient is
//! assembled from per-neuron contraction matrices so that the
//! per-parameter work reduces to Pauli traces of one small matrix per
//! neuron. Both paths are tested against each other to 1e-12.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::linops::{
    apply_unitary_on_targets, exp_divided_differences, expi_from_eigen, for_each_pauli_entry,
    hermitian_eigen, reduce_outer_on_targets, C64, CMatrix, DensityMatrix, StateVector,
};
use crate::qnn::NetworkChannel;
use crate::states::TrainingPair;

/// Eigenvalue cutoff below which a spectral component of an
/// intermediate state is dropped.
const FACTOR_CUTOFF: f64 = 1e-12;

struct CompiledNeuron {
    targets: Vec<usize>,
    u: CMatrix,
    u_dag: CMatrix,
    /// eigenvectors of the generator
    v: CMatrix,
    eigs: Vec<f64>,
}

struct CompiledInterface {
    prev_width: usize,
    width: usize,
    total: usize,
    neurons: Vec<CompiledNeuron>,
    /// U |p, ↓…↓⟩ for every previous-layer basis index p; used by the
    /// backward co-state recursion and independent of the data.
    basis_evolved: Vec<Vec<C64>>,
}

pub(crate) struct Compiled {
    interfaces: Vec<CompiledInterface>,
}

/// A state as a weighted sum of pure components.
type Factors = Vec<(f64, Vec<C64>)>;

impl Compiled {
    pub(crate) fn new(net: &NetworkChannel) -> Self {
        let widths = net.topology().layer_widths();
        let interfaces = (0..net.topology().num_interfaces())
            .map(|l| {
                let prev_width = widths[l];
                let width = widths[l + 1];
                let total = prev_width + width;
                let neurons: Vec<CompiledNeuron> = (0..width)
                    .map(|j| {
                        let k = net.params().generator(l, j).to_matrix();
                        let (eigs, v) = hermitian_eigen(&k);
                        let u = expi_from_eigen(&eigs, &v);
                        CompiledNeuron {
                            targets: net.neuron_targets(l, j),
                            u_dag: u.adjoint(),
                            u,
                            v,
                            eigs,
                        }
                    })
                    .collect();
                let down_index = (1usize << width) - 1;
                let basis_evolved = (0..1usize << prev_width)
                    .map(|p| {
                        let mut amps = vec![C64::new(0.0, 0.0); 1 << total];
                        amps[(p << width) | down_index] = C64::new(1.0, 0.0);
                        for neuron in &neurons {
                            apply_unitary_on_targets(&mut amps, &neuron.u, &neuron.targets, total);
                        }
                        amps
                    })
                    .collect();
                CompiledInterface {
                    prev_width,
                    width,
                    total,
                    neurons,
                    basis_evolved,
                }
            })
            .collect();
        Self { interfaces }
    }

    fn output_width(&self) -> usize {
        self.interfaces.last().map(|i| i.width).unwrap_or(0)
    }

    /// Propagates a factored state through one interface, returning the
    /// next layer's density matrix.
    fn layer_density(&self, l: usize, factors: &Factors) -> CMatrix {
        let iface = &self.interfaces[l];
        let new_dim = 1usize << iface.width;
        let mut rho = CMatrix::zeros(new_dim, new_dim);
        for (w, x) in factors {
            let y = self.evolve_component(l, x).1;
            accumulate_traced_projector(&y, *w, &mut rho, new_dim);
        }
        rho
    }

    /// Lifts a previous-layer component into the combined register,
    /// applies all neuron gates in ascending order and returns the
    /// intermediate vectors (index j = state after gates 0..j) plus the
    /// final vector.
    fn evolve_component(&self, l: usize, x: &[C64]) -> (Vec<Vec<C64>>, Vec<C64>) {
        let iface = &self.interfaces[l];
        let down_index = (1usize << iface.width) - 1;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << iface.total];
        for (p, &value) in x.iter().enumerate() {
            amps[(p << iface.width) | down_index] = value;
        }
        let mut intermediates = Vec::with_capacity(iface.neurons.len());
        for neuron in &iface.neurons {
            intermediates.push(amps.clone());
            apply_unitary_on_targets(&mut amps, &neuron.u, &neuron.targets, iface.total);
        }
        (intermediates, amps)
    }

    /// Full forward pass from a factored input to the output density
    /// matrix.
    fn propagate(&self, mut factors: Factors) -> CMatrix {
        for l in 0..self.interfaces.len() {
            let rho = self.layer_density(l, &factors);
            if l + 1 == self.interfaces.len() {
                return rho;
            }
            factors = factorize(&rho);
        }
        // zero-interface network: reassemble the input
        let dim = factors.first().map(|(_, x)| x.len()).unwrap_or(0);
        let mut rho = CMatrix::zeros(dim, dim);
        for (w, x) in &factors {
            accumulate_traced_projector(x, *w, &mut rho, dim);
        }
        rho
    }

    pub(crate) fn forward_pure(&self, psi: &StateVector) -> DensityMatrix {
        let amps: Vec<C64> = psi.amplitudes().iter().copied().collect();
        let rho = self.propagate(vec![(1.0, amps)]);
        DensityMatrix::from_parts_unchecked(rho, self.output_width())
    }

    pub(crate) fn forward_dm(&self, rho: &DensityMatrix) -> DensityMatrix {
        let factors: Factors = rho
            .spectral_factors(FACTOR_CUTOFF)
            .into_iter()
            .map(|(w, v)| (w, v.iter().copied().collect()))
            .collect();
        let out = self.propagate(factors);
        DensityMatrix::from_parts_unchecked(out, self.output_width())
    }

    /// Fidelity of the forward image of `input` with `reference`.
    pub(crate) fn fidelity(&self, input: &StateVector, reference: &StateVector) -> f64 {
        let rho = self.forward_pure(input);
        let v = rho.entries() * reference.amplitudes();
        reference.amplitudes().dotc(&v).re.clamp(0.0, 1.0)
    }
}

/// rho += weight · tr_prev(|y⟩⟨y|), where the new register occupies the
/// low bits of the combined index.
fn accumulate_traced_projector(y: &[C64], weight: f64, rho: &mut CMatrix, new_dim: usize) {
    let blocks = y.len() / new_dim;
    let w = C64::new(weight, 0.0);
    for p in 0..blocks {
        let block = &y[p * new_dim..(p + 1) * new_dim];
        for s in 0..new_dim {
            let ys = block[s] * w;
            if ys == C64::new(0.0, 0.0) {
                continue;
            }
            for t in 0..new_dim {
                rho[(s, t)] += ys * block[t].conj();
            }
        }
    }
}

/// Spectral factorization with small components dropped.
fn factorize(rho: &CMatrix) -> Factors {
    let (eigs, vecs) = hermitian_eigen(rho);
    eigs.iter()
        .enumerate()
        .filter(|(_, w)| **w > FACTOR_CUTOFF)
        .map(|(i, w)| (*w, vecs.column(i).iter().copied().collect()))
        .collect()
}

/// out = (Id ⊗ e) · y, with e acting on the low `new_dim` bits.
fn apply_id_tensor(e: &CMatrix, y: &[C64], new_dim: usize) -> Vec<C64> {
    let blocks = y.len() / new_dim;
    let mut out = vec![C64::new(0.0, 0.0); y.len()];
    for p in 0..blocks {
        let src = &y[p * new_dim..(p + 1) * new_dim];
        let dst = &mut out[p * new_dim..(p + 1) * new_dim];
        for s in 0..new_dim {
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..new_dim {
                acc += e[(s, t)] * src[t];
            }
            dst[s] = acc;
        }
    }
    out
}

/// Per-neuron contraction matrices accumulated over training pairs:
/// dF_i/dθ = 2·Re tr(du_θ · M_neuron) summed over pairs.
pub(crate) struct GradientAccumulator {
    m: Vec<Vec<CMatrix>>,
}

impl GradientAccumulator {
    fn new(compiled: &Compiled) -> Self {
        let m = compiled
            .interfaces
            .iter()
            .map(|iface| {
                iface
                    .neurons
                    .iter()
                    .map(|n| {
                        let d = n.u.nrows();
                        DMatrix::zeros(d, d)
                    })
                    .collect()
            })
            .collect();
        Self { m }
    }
}

/// Forward pass, backward co-states and gradient contributions of one
/// training pair. Returns the pair's output fidelity with its
/// reference.
fn accumulate_pair(
    compiled: &Compiled,
    pair: &TrainingPair,
    acc: &mut GradientAccumulator,
) -> f64 {
    let interfaces = &compiled.interfaces;
    let num = interfaces.len();

    // forward: factor lists per layer plus per-component gate intermediates
    let mut layer_factors: Vec<Factors> = Vec::with_capacity(num);
    let mut layer_intermediates: Vec<Vec<Vec<Vec<C64>>>> = Vec::with_capacity(num);
    let mut layer_outputs: Vec<Vec<Vec<C64>>> = Vec::with_capacity(num);
    let mut factors: Factors = vec![(
        1.0,
        pair.input.amplitudes().iter().copied().collect(),
    )];
    let mut final_rho = CMatrix::zeros(0, 0);
    for (l, iface) in interfaces.iter().enumerate() {
        let new_dim = 1usize << iface.width;
        let mut rho = CMatrix::zeros(new_dim, new_dim);
        let mut intermediates = Vec::with_capacity(factors.len());
        let mut outputs = Vec::with_capacity(factors.len());
        for (w, x) in &factors {
            let (inter, y) = compiled.evolve_component(l, x);
            accumulate_traced_projector(&y, *w, &mut rho, new_dim);
            intermediates.push(inter);
            outputs.push(y);
        }
        layer_factors.push(factors);
        layer_intermediates.push(intermediates);
        layer_outputs.push(outputs);
        if l + 1 == num {
            final_rho = rho;
            factors = Vec::new();
        } else {
            factors = factorize(&rho);
        }
    }

    // fidelity with the reference
    let reference: Vec<C64> = pair.reference.amplitudes().iter().copied().collect();
    let out_dim = reference.len();
    let mut fid = 0.0;
    {
        let mut rv = vec![C64::new(0.0, 0.0); out_dim];
        for s in 0..out_dim {
            let mut acc_v = C64::new(0.0, 0.0);
            for t in 0..out_dim {
                acc_v += final_rho[(s, t)] * reference[t];
            }
            rv[s] = acc_v;
        }
        for s in 0..out_dim {
            fid += (reference[s].conj() * rv[s]).re;
        }
    }

    // backward co-states: E_l is the operator on layer l+1's space such
    // that F = tr(E_l · ρ_{l+1}) with everything downstream held fixed
    let mut costates: Vec<CMatrix> = vec![CMatrix::zeros(0, 0); num];
    let mut e = CMatrix::zeros(out_dim, out_dim);
    for s in 0..out_dim {
        for t in 0..out_dim {
            e[(s, t)] = reference[s] * reference[t].conj();
        }
    }
    costates[num - 1] = e;
    for l in (1..num).rev() {
        let iface = &interfaces[l];
        let new_dim = 1usize << iface.width;
        let prev_dim = 1usize << iface.prev_width;
        let ecur = &costates[l];
        let mut eprev = CMatrix::zeros(prev_dim, prev_dim);
        let applied: Vec<Vec<C64>> = iface
            .basis_evolved
            .iter()
            .map(|u_p| apply_id_tensor(ecur, u_p, new_dim))
            .collect();
        for p in 0..prev_dim {
            for pp in 0..prev_dim {
                let mut acc_v = C64::new(0.0, 0.0);
                for (a, b) in iface.basis_evolved[p].iter().zip(applied[pp].iter()) {
                    acc_v += a.conj() * b;
                }
                eprev[(p, pp)] = acc_v;
            }
        }
        costates[l - 1] = eprev;
    }

    // gradient contributions
    for (l, iface) in interfaces.iter().enumerate() {
        let new_dim = 1usize << iface.width;
        let ecur = &costates[l];
        for (r, (w, _)) in layer_factors[l].iter().enumerate() {
            let y = &layer_outputs[l][r];
            let mut b = apply_id_tensor(ecur, y, new_dim);
            for j in (0..iface.neurons.len()).rev() {
                if j + 1 < iface.neurons.len() {
                    let next = &iface.neurons[j + 1];
                    apply_unitary_on_targets(&mut b, &next.u_dag, &next.targets, iface.total);
                }
                let a = &layer_intermediates[l][r][j];
                let neuron = &iface.neurons[j];
                let red = reduce_outer_on_targets(a, &b, &neuron.targets, iface.total);
                acc.m[l][j] += red * C64::new(*w, 0.0);
            }
        }
    }

    fid.clamp(0.0, 1.0)
}

/// tr(P_α · Q) for every Pauli index α on `f` qubits, via the sparse
/// one-entry-per-row structure of Pauli strings.
fn pauli_traces(q: &CMatrix, f: usize) -> Vec<C64> {
    let count = 4usize.pow(f as u32);
    (0..count)
        .map(|index| {
            let mut tr = C64::new(0.0, 0.0);
            for_each_pauli_entry(index, f, |row, col, val| {
                tr += val * q[(col, row)];
            });
            tr
        })
        .collect()
}

/// Cost and the flattened analytic gradient of the cost over a batch
/// of training pairs.
pub(crate) struct RoundEvaluation {
    pub cost: f64,
    pub gradient: Vec<f64>,
}

pub(crate) fn evaluate_round(
    net: &NetworkChannel,
    pairs: &[TrainingPair],
) -> Result<RoundEvaluation> {
    let compiled = Compiled::new(net);
    let mut acc = GradientAccumulator::new(&compiled);
    let mut fidelities = Vec::with_capacity(pairs.len());
    for pair in pairs {
        fidelities.push(accumulate_pair(&compiled, pair, &mut acc));
    }
    let mean = fidelities.iter().sum::<f64>() / pairs.len() as f64;

    // finalize: for each neuron, dC/dθ_α = −(2/L)·Re tr(du_α · M).
    // With K = VΛV† and Γ the divided differences of e^{iλ},
    // tr(du_α · M) = tr(P_α · V (Γ ∘ (V†MV)ᵀ)ᵀ V†), so all coefficients
    // of a neuron reduce to Pauli traces of one small matrix Q.
    let scale = -2.0 / pairs.len() as f64;
    let mut gradient = Vec::new();
    for (l, iface) in compiled.interfaces.iter().enumerate() {
        for (j, neuron) in iface.neurons.iter().enumerate() {
            let m = &acc.m[l][j];
            let gamma = exp_divided_differences(&neuron.eigs);
            let vtmv = neuron.v.adjoint() * m * &neuron.v;
            let d = vtmv.nrows();
            let mut bt = CMatrix::zeros(d, d);
            for r in 0..d {
                for s in 0..d {
                    // Bᵀ where B = Γ ∘ Ṽᵀ
                    bt[(s, r)] = gamma[(r, s)] * vtmv[(s, r)];
                }
            }
            let qmat = &neuron.v * bt * neuron.v.adjoint();
            let f = neuron.targets.len();
            let traces = pauli_traces(&qmat, f);
            for alpha in 1..traces.len() {
                gradient.push(scale * traces[alpha].re);
            }
        }
    }

    Ok(RoundEvaluation {
        cost: 1.0 - mean,
        gradient,
    })
}

/// Cost and per-sample fidelities without gradient work.
pub(crate) fn evaluate_cost(net: &NetworkChannel, pairs: &[TrainingPair]) -> (f64, Vec<f64>) {
    let compiled = Compiled::new(net);
    let fidelities: Vec<f64> = pairs
        .iter()
        .map(|pair| compiled.fidelity(&pair.input, &pair.reference))
        .collect();
    let mean = fidelities.iter().sum::<f64>() / fidelities.len().max(1) as f64;
    (1.0 - mean, fidelities)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{fidelity_pure, random_density, random_state};
    use crate::qnn::{NetworkParams, Topology};
    use crate::states::{ghz, GhzSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_net(widths: &[usize], seed: u64) -> NetworkChannel {
        let topology = Topology::dense(widths).unwrap();
        let params = NetworkParams::random(&topology, 0.6, seed);
        NetworkChannel::new(topology, params).unwrap()
    }

    fn max_entry_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn compiled_forward_matches_density_matrix_path_pure() {
        for (widths, seed) in [
            (vec![2usize, 1, 2], 1u64),
            (vec![3, 1, 3], 2),
            (vec![4, 2, 1, 2, 4], 3),
        ] {
            let net = random_net(&widths, seed);
            let compiled = Compiled::new(&net);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let psi = random_state(widths[0], &mut rng);
            let fast = compiled.forward_pure(&psi);
            let slow = net.forward(&psi.projector()).unwrap();
            assert!(
                max_entry_diff(fast.entries(), slow.entries()) < 1e-12,
                "pure fast path diverged for {widths:?}"
            );
        }
    }

    #[test]
    fn compiled_forward_matches_density_matrix_path_mixed() {
        let net = random_net(&[3, 1, 3], 5);
        let compiled = Compiled::new(&net);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rho = random_density(3, &mut rng);
        let fast = compiled.forward_dm(&rho);
        let slow = net.forward(&rho).unwrap();
        assert!(max_entry_diff(fast.entries(), slow.entries()) < 1e-12);
    }

    #[test]
    fn costate_recursion_is_adjoint_of_forward() {
        // tr(E_l · ρ_{l+1}) must equal the final fidelity at every layer
        let net = random_net(&[2, 1, 2], 9);
        let compiled = Compiled::new(&net);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let input = random_state(2, &mut rng);
        let reference = random_state(2, &mut rng);
        let pair = TrainingPair {
            input: input.clone(),
            reference: reference.clone(),
        };
        let mut acc = GradientAccumulator::new(&compiled);
        let fid = accumulate_pair(&compiled, &pair, &mut acc);
        let direct = fidelity_pure(&net.forward(&input.projector()).unwrap(), &reference).unwrap();
        assert!((fid - direct).abs() < 1e-12);
    }

    #[test]
    fn engine_cost_matches_reference_forward() {
        let net = random_net(&[3, 1, 3], 13);
        let ghz0 = ghz(&GhzSpec::new(3, 0.0).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pairs: Vec<TrainingPair> = (0..4)
            .map(|_| TrainingPair {
                input: random_state(3, &mut rng),
                reference: ghz0.clone(),
            })
            .collect();
        let (cost, fids) = evaluate_cost(&net, &pairs);
        let mut expected = Vec::new();
        for pair in &pairs {
            let rho = net.forward(&pair.input.projector()).unwrap();
            expected.push(fidelity_pure(&rho, &pair.reference).unwrap());
        }
        for (a, b) in fids.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        let mean = expected.iter().sum::<f64>() / expected.len() as f64;
        assert!((cost - (1.0 - mean)).abs() < 1e-12);
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let topology = Topology::dense(&[2, 1, 2]).unwrap();
        let params = NetworkParams::random(&topology, 0.5, 19);
        let net = NetworkChannel::new(topology.clone(), params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let pairs: Vec<TrainingPair> = (0..4)
            .map(|_| TrainingPair {
                input: random_state(2, &mut rng),
                reference: random_state(2, &mut rng),
            })
            .collect();
        let round = evaluate_round(&net, &pairs).unwrap();

        let flat = net.params().to_flat();
        let h = 1e-5;
        for alpha in 0..flat.len() {
            let mut plus = flat.clone();
            plus[alpha] += h;
            let mut minus = flat.clone();
            minus[alpha] -= h;
            let cost_plus = evaluate_cost(
                &net.with_params(NetworkParams::from_flat(&topology, &plus).unwrap())
                    .unwrap(),
                &pairs,
            )
            .0;
            let cost_minus = evaluate_cost(
                &net.with_params(NetworkParams::from_flat(&topology, &minus).unwrap())
                    .unwrap(),
                &pairs,
            )
            .0;
            let numeric = (cost_plus - cost_minus) / (2.0 * h);
            assert!(
                (round.gradient[alpha] - numeric).abs() < 1e-6,
                "coefficient {alpha}: analytic {} vs numeric {numeric}",
                round.gradient[alpha]
            );
        }
    }

    #[test]
    fn gradient_vanishes_at_perfect_transmission() {
        // an all-swap [2,2] wire with identical input and reference
        // pairs sits at cost = 0, a strict minimum
        let topology = Topology::new(vec![2, 2], vec![vec![vec![0], vec![1]]]).unwrap();
        let mut params = NetworkParams::zeros(&topology);
        for j in 0..2 {
            params
                .set_generator(0, j, crate::qnn::swap_generator())
                .unwrap();
        }
        let net = NetworkChannel::new(topology, params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let pairs: Vec<TrainingPair> = (0..3)
            .map(|_| {
                let s = random_state(2, &mut rng);
                TrainingPair {
                    input: s.clone(),
                    reference: s,
                }
            })
            .collect();
        let round = evaluate_round(&net, &pairs).unwrap();
        assert!(round.cost.abs() < 1e-12);
        let gnorm = round.gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(gnorm < 1e-8, "gradient norm {gnorm} at a minimum");
    }
}
