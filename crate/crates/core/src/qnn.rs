//! Network topology, neuron unitaries and the layered quantum channel.
//!
//! A network with layer widths `[w_0, …, w_{M−1}]` has, for every
//! interface `ℓ` (mapping layer `ℓ` to layer `ℓ+1`), one neuron per
//! qubit of layer `ℓ+1`. Neuron `j` acts unitarily on its connected
//! qubits of layer `ℓ` plus its own fresh qubit, which is initialized
//! in `|↓⟩`. After all neurons of the layer have acted in ascending
//! order, layer `ℓ` is traced out.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linops::{
    embed_unitary, exp_hermitian, partial_trace, CMatrix, DensityMatrix, HermitianGenerator,
    StateVector, C64,
};
use crate::stream::{substream, TAG_PARAM_INIT};

/// Layer widths plus per-neuron fan-in connection lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    layer_widths: Vec<usize>,
    /// `connections[l][j]`: qubits of layer `l` that neuron `j` of
    /// layer `l+1` acts on, in listed order.
    connections: Vec<Vec<Vec<usize>>>,
}

impl Topology {
    pub fn new(layer_widths: Vec<usize>, connections: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        if layer_widths.len() < 2 {
            return Err(Error::InvalidTopology(
                "a network needs at least two layers".into(),
            ));
        }
        if layer_widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidTopology("zero-width layer".into()));
        }
        if connections.len() != layer_widths.len() - 1 {
            return Err(Error::InvalidTopology(format!(
                "{} connection groups for {} interfaces",
                connections.len(),
                layer_widths.len() - 1
            )));
        }
        for (l, group) in connections.iter().enumerate() {
            if group.len() != layer_widths[l + 1] {
                return Err(Error::InvalidTopology(format!(
                    "layer {} has {} neurons but {} connection lists",
                    l + 1,
                    layer_widths[l + 1],
                    group.len()
                )));
            }
            for (j, conn) in group.iter().enumerate() {
                let mut seen = vec![false; layer_widths[l]];
                for &q in conn {
                    if q >= layer_widths[l] {
                        return Err(Error::InvalidTopology(format!(
                            "neuron {j} of layer {} connects to qubit {q} of a width-{} layer",
                            l + 1,
                            layer_widths[l]
                        )));
                    }
                    if seen[q] {
                        return Err(Error::InvalidTopology(format!(
                            "neuron {j} of layer {} lists qubit {q} twice",
                            l + 1
                        )));
                    }
                    seen[q] = true;
                }
            }
        }
        Ok(Self {
            layer_widths,
            connections,
        })
    }

    /// Fully connected topology: every neuron acts on the whole
    /// previous layer.
    pub fn dense(layer_widths: &[usize]) -> Result<Self> {
        let connections = layer_widths
            .windows(2)
            .map(|w| (0..w[1]).map(|_| (0..w[0]).collect()).collect())
            .collect();
        Self::new(layer_widths.to_vec(), connections)
    }

    pub fn layer_widths(&self) -> &[usize] {
        &self.layer_widths
    }

    pub fn num_layers(&self) -> usize {
        self.layer_widths.len()
    }

    /// Number of interfaces (layer-to-layer maps).
    pub fn num_interfaces(&self) -> usize {
        self.layer_widths.len() - 1
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }

    pub fn connections(&self, interface: usize, neuron: usize) -> &[usize] {
        &self.connections[interface][neuron]
    }

    /// Qubits the neuron's unitary acts on: fan-in plus its own qubit.
    pub fn neuron_qubits(&self, interface: usize, neuron: usize) -> usize {
        self.connections[interface][neuron].len() + 1
    }

    pub fn neuron_parameter_count(&self, interface: usize, neuron: usize) -> usize {
        4usize.pow(self.neuron_qubits(interface, neuron) as u32) - 1
    }

    pub fn total_parameter_count(&self) -> usize {
        (0..self.num_interfaces())
            .map(|l| {
                (0..self.layer_widths[l + 1])
                    .map(|j| self.neuron_parameter_count(l, j))
                    .sum::<usize>()
            })
            .sum()
    }

    /// Checks the autoencoder shape: equal input and output widths and
    /// an interior layer narrower than the input.
    pub fn assert_autoencoder(&self) -> Result<()> {
        if self.input_width() != self.output_width() {
            return Err(Error::InvalidTopology(format!(
                "input width {} differs from output width {}",
                self.input_width(),
                self.output_width()
            )));
        }
        let interior_min = self.layer_widths[1..self.layer_widths.len() - 1]
            .iter()
            .copied()
            .min();
        match interior_min {
            Some(min) if min < self.input_width() => Ok(()),
            _ => Err(Error::InvalidTopology(
                "autoencoder needs an interior layer narrower than the input".into(),
            )),
        }
    }
}

/// The sparse [4,2,1,2,4] autoencoder in which every neuron keeps only
/// the immediately adjacent connections: layer-2 neurons pair up the
/// input qubits, the bottleneck sees both layer-2 qubits, and the
/// output side mirrors the input side.
pub fn sparse_topology_4_2_1_2_4() -> Topology {
    Topology::new(
        vec![4, 2, 1, 2, 4],
        vec![
            vec![vec![0, 1], vec![2, 3]],
            vec![vec![0, 1]],
            vec![vec![0], vec![0]],
            vec![vec![0], vec![0], vec![1], vec![1]],
        ],
    )
    .expect("fixed topology is valid")
}

/// Per-neuron Hermitian generators matching a topology.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    generators: Vec<Vec<HermitianGenerator>>,
}

impl NetworkParams {
    pub fn zeros(topology: &Topology) -> Self {
        let generators = (0..topology.num_interfaces())
            .map(|l| {
                (0..topology.layer_widths()[l + 1])
                    .map(|j| HermitianGenerator::zero(topology.neuron_qubits(l, j)))
                    .collect()
            })
            .collect();
        Self { generators }
    }

    /// Gaussian initialization: every coefficient drawn independently
    /// from N(0, scale²), in a fixed order (interfaces, then neurons,
    /// then coefficients) from a dedicated substream of `seed`.
    pub fn random(topology: &Topology, scale: f64, seed: u64) -> Self {
        let mut rng = substream(seed, TAG_PARAM_INIT, 0);
        let generators = (0..topology.num_interfaces())
            .map(|l| {
                (0..topology.layer_widths()[l + 1])
                    .map(|j| {
                        let n = topology.neuron_parameter_count(l, j);
                        let coeffs = (0..n)
                            .map(|_| {
                                let x: f64 = rng.sample(StandardNormal);
                                x * scale
                            })
                            .collect();
                        HermitianGenerator::new(coeffs, topology.neuron_qubits(l, j))
                            .expect("coefficient count matches by construction")
                    })
                    .collect()
            })
            .collect();
        Self { generators }
    }

    pub fn generator(&self, interface: usize, neuron: usize) -> &HermitianGenerator {
        &self.generators[interface][neuron]
    }

    pub fn set_generator(
        &mut self,
        interface: usize,
        neuron: usize,
        generator: HermitianGenerator,
    ) -> Result<()> {
        let current = &self.generators[interface][neuron];
        if current.num_qubits() != generator.num_qubits() {
            return Err(Error::InvalidParameter(format!(
                "generator acts on {} qubits, neuron needs {}",
                generator.num_qubits(),
                current.num_qubits()
            )));
        }
        self.generators[interface][neuron] = generator;
        Ok(())
    }

    /// Flattens all coefficients: interfaces ascending, neurons
    /// ascending, coefficients ascending.
    pub fn to_flat(&self) -> Vec<f64> {
        self.generators
            .iter()
            .flatten()
            .flat_map(|g| g.coefficients().iter().copied())
            .collect()
    }

    pub fn from_flat(topology: &Topology, flat: &[f64]) -> Result<Self> {
        if flat.len() != topology.total_parameter_count() {
            return Err(Error::InvalidParameter(format!(
                "{} values for {} parameters",
                flat.len(),
                topology.total_parameter_count()
            )));
        }
        let mut offset = 0;
        let generators = (0..topology.num_interfaces())
            .map(|l| {
                (0..topology.layer_widths()[l + 1])
                    .map(|j| {
                        let n = topology.neuron_parameter_count(l, j);
                        let coeffs = flat[offset..offset + n].to_vec();
                        offset += n;
                        HermitianGenerator::new(coeffs, topology.neuron_qubits(l, j))
                            .expect("coefficient count matches by construction")
                    })
                    .collect()
            })
            .collect();
        Ok(Self { generators })
    }
}

/// A topology with parameters: one immutable channel value.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkChannel {
    topology: Topology,
    params: NetworkParams,
}

impl NetworkChannel {
    pub fn new(topology: Topology, params: NetworkParams) -> Result<Self> {
        for l in 0..topology.num_interfaces() {
            for j in 0..topology.layer_widths()[l + 1] {
                if params.generator(l, j).num_qubits() != topology.neuron_qubits(l, j) {
                    return Err(Error::InvalidParameter(format!(
                        "generator of neuron {j} at interface {l} has the wrong size"
                    )));
                }
            }
        }
        Ok(Self { topology, params })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    pub fn with_params(&self, params: NetworkParams) -> Result<Self> {
        Self::new(self.topology.clone(), params)
    }

    /// U_j = exp(iK_j) of one neuron.
    pub fn neuron_unitary(&self, interface: usize, neuron: usize) -> CMatrix {
        exp_hermitian(self.params.generator(interface, neuron))
    }

    /// Qubit indices (in the combined previous+new register) the neuron
    /// acts on: its connections first, its own qubit last.
    pub fn neuron_targets(&self, interface: usize, neuron: usize) -> Vec<usize> {
        let prev_width = self.topology.layer_widths()[interface];
        let mut targets = self.topology.connections(interface, neuron).to_vec();
        targets.push(prev_width + neuron);
        targets
    }

    /// U = U_w · … · U_1 on the combined register of one interface
    /// (neuron 1 rightmost, so it acts first).
    pub fn layer_total_unitary(&self, interface: usize) -> Result<CMatrix> {
        let prev_width = self.topology.layer_widths()[interface];
        let width = self.topology.layer_widths()[interface + 1];
        let total = prev_width + width;
        let dim = 1usize << total;
        let mut u_total = CMatrix::identity(dim, dim);
        for j in 0..width {
            let u = self.neuron_unitary(interface, j);
            let embedded = embed_unitary(&u, &self.neuron_targets(interface, j), total)?;
            u_total = embedded * u_total;
        }
        Ok(u_total)
    }

    /// One layer of the network channel: appends the fresh qubits in
    /// |↓⟩, applies the neuron unitaries in ascending order, traces out
    /// the previous layer.
    pub fn layer_channel(&self, interface: usize, rho_prev: &DensityMatrix) -> Result<DensityMatrix> {
        let prev_width = self.topology.layer_widths()[interface];
        let width = self.topology.layer_widths()[interface + 1];
        if rho_prev.num_qubits() != prev_width {
            return Err(Error::WidthMismatch {
                expected: prev_width,
                got: rho_prev.num_qubits(),
            });
        }
        let fresh = StateVector::basis(width, (1 << width) - 1).projector();
        let big = rho_prev.tensor(&fresh);
        let u_total = self.layer_total_unitary(interface)?;
        let evolved = &u_total * big.entries() * u_total.adjoint();
        let evolved = DensityMatrix::from_parts_unchecked(evolved, prev_width + width);
        let keep: Vec<usize> = (prev_width..prev_width + width).collect();
        partial_trace(&evolved, &keep)
    }

    /// Full feed-forward channel: layer channels applied in sequence.
    pub fn forward(&self, rho_in: &DensityMatrix) -> Result<DensityMatrix> {
        if rho_in.num_qubits() != self.topology.input_width() {
            return Err(Error::WidthMismatch {
                expected: self.topology.input_width(),
                got: rho_in.num_qubits(),
            });
        }
        let mut rho = rho_in.clone();
        for l in 0..self.topology.num_interfaces() {
            rho = self.layer_channel(l, &rho)?;
        }
        Ok(rho)
    }

    /// Linear extension of the channel to arbitrary (non-Hermitian)
    /// matrices; used to assemble Choi matrices.
    pub fn apply_matrix(&self, m: &CMatrix) -> Result<CMatrix> {
        let input_width = self.topology.input_width();
        if m.nrows() != (1 << input_width) || m.ncols() != (1 << input_width) {
            return Err(Error::WidthMismatch {
                expected: input_width,
                got: m.nrows().trailing_zeros() as usize,
            });
        }
        let mut current = m.clone();
        for l in 0..self.topology.num_interfaces() {
            let prev_width = self.topology.layer_widths()[l];
            let width = self.topology.layer_widths()[l + 1];
            let fresh = StateVector::basis(width, (1 << width) - 1).projector();
            let big = current.kronecker(fresh.entries());
            let u_total = self.layer_total_unitary(l)?;
            let evolved = &u_total * big * u_total.adjoint();
            // partial trace over the previous layer, on a raw matrix
            let kd = 1usize << width;
            let td = 1usize << prev_width;
            let mut out = CMatrix::zeros(kd, kd);
            for rk in 0..kd {
                for ck in 0..kd {
                    let mut sum = C64::new(0.0, 0.0);
                    for e in 0..td {
                        sum += evolved[(e * kd + rk, e * kd + ck)];
                    }
                    out[(rk, ck)] = sum;
                }
            }
            current = out;
        }
        Ok(current)
    }

    /// The same trained channel applied `times` times in sequence.
    pub fn stack(&self, times: usize) -> Result<StackedChannel<'_>> {
        StackedChannel::new(self, times)
    }
}

/// A square network applied several times in sequence.
#[derive(Debug, Clone)]
pub struct StackedChannel<'a> {
    channel: &'a NetworkChannel,
    times: usize,
}

impl<'a> StackedChannel<'a> {
    pub fn new(channel: &'a NetworkChannel, times: usize) -> Result<Self> {
        if times < 1 {
            return Err(Error::InvalidParameter(
                "stack count must be at least 1".into(),
            ));
        }
        if channel.topology().input_width() != channel.topology().output_width() {
            return Err(Error::InvalidTopology(
                "only square networks can be stacked".into(),
            ));
        }
        Ok(Self { channel, times })
    }

    pub fn times(&self) -> usize {
        self.times
    }

    pub fn forward(&self, rho_in: &DensityMatrix) -> Result<DensityMatrix> {
        let mut rho = self.channel.forward(rho_in)?;
        for _ in 1..self.times {
            rho = self.channel.forward(&rho)?;
        }
        Ok(rho)
    }
}

/// Writes topology and parameters in the versioned text format:
/// a header with the widths, one `conn` line per neuron, then one
/// `params` line per neuron. Floats round-trip exactly.
pub fn write_network<W: Write>(w: &mut W, net: &NetworkChannel) -> Result<()> {
    let widths: Vec<String> = net
        .topology()
        .layer_widths()
        .iter()
        .map(|x| x.to_string())
        .collect();
    writeln!(w, "# qae network v1; widths={}", widths.join(","))?;
    for l in 0..net.topology().num_interfaces() {
        for j in 0..net.topology().layer_widths()[l + 1] {
            let conn: Vec<String> = net
                .topology()
                .connections(l, j)
                .iter()
                .map(|x| x.to_string())
                .collect();
            writeln!(w, "conn,{},{},{}", l, j, conn.join(","))?;
        }
    }
    for l in 0..net.topology().num_interfaces() {
        for j in 0..net.topology().layer_widths()[l + 1] {
            let coeffs: Vec<String> = net
                .params()
                .generator(l, j)
                .coefficients()
                .iter()
                .map(|x| x.to_string())
                .collect();
            writeln!(w, "params,{},{},{}", l, j, coeffs.join(","))?;
        }
    }
    Ok(())
}

/// Reads a network written by [`write_network`].
pub fn read_network<R: BufRead>(r: R) -> Result<NetworkChannel> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty network file".into()))??;
    let widths: Vec<usize> = header
        .strip_prefix("# qae network v1; widths=")
        .ok_or_else(|| Error::Parse(format!("unrecognized network header: {header:?}")))?
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad width {s:?}: {e}")))
        })
        .collect::<Result<_>>()?;

    let interfaces = widths.len().saturating_sub(1);
    let mut connections: Vec<Vec<Option<Vec<usize>>>> = (0..interfaces)
        .map(|l| vec![None; widths[l + 1]])
        .collect();
    let mut coeffs: Vec<Vec<Option<Vec<f64>>>> = (0..interfaces)
        .map(|l| vec![None; widths[l + 1]])
        .collect();

    for (i, line) in lines.enumerate() {
        let line = line?;
        let line_no = i + 2;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.splitn(4, ',');
        let kind = fields.next().unwrap_or_default();
        let l: usize = fields
            .next()
            .ok_or_else(|| Error::Parse(format!("line {line_no}: missing interface")))?
            .parse()
            .map_err(|e| Error::Parse(format!("line {line_no}: bad interface: {e}")))?;
        let j: usize = fields
            .next()
            .ok_or_else(|| Error::Parse(format!("line {line_no}: missing neuron")))?
            .parse()
            .map_err(|e| Error::Parse(format!("line {line_no}: bad neuron: {e}")))?;
        let rest = fields.next().unwrap_or_default();
        if l >= interfaces || j >= widths[l + 1] {
            return Err(Error::Parse(format!(
                "line {line_no}: neuron ({l}, {j}) outside the declared widths"
            )));
        }
        match kind {
            "conn" => {
                let list: Vec<usize> = if rest.is_empty() {
                    Vec::new()
                } else {
                    rest.split(',')
                        .map(|s| {
                            s.parse::<usize>().map_err(|e| {
                                Error::Parse(format!("line {line_no}: bad connection: {e}"))
                            })
                        })
                        .collect::<Result<_>>()?
                };
                connections[l][j] = Some(list);
            }
            "params" => {
                let list: Vec<f64> = rest
                    .split(',')
                    .map(|s| {
                        s.parse::<f64>().map_err(|e| {
                            Error::Parse(format!("line {line_no}: bad coefficient: {e}"))
                        })
                    })
                    .collect::<Result<_>>()?;
                coeffs[l][j] = Some(list);
            }
            other => {
                return Err(Error::Parse(format!(
                    "line {line_no}: unknown record {other:?}"
                )));
            }
        }
    }

    let connections: Vec<Vec<Vec<usize>>> = connections
        .into_iter()
        .enumerate()
        .map(|(l, group)| {
            group
                .into_iter()
                .enumerate()
                .map(|(j, c)| {
                    c.ok_or_else(|| {
                        Error::Parse(format!("missing conn line for neuron ({l}, {j})"))
                    })
                })
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let topology = Topology::new(widths.clone(), connections)?;
    let mut params = NetworkParams::zeros(&topology);
    for (l, group) in coeffs.into_iter().enumerate() {
        for (j, c) in group.into_iter().enumerate() {
            let c = c.ok_or_else(|| {
                Error::Parse(format!("missing params line for neuron ({l}, {j})"))
            })?;
            let generator = HermitianGenerator::new(c, topology.neuron_qubits(l, j))
                .map_err(|e| Error::Parse(format!("neuron ({l}, {j}): {e}")))?;
            params.set_generator(l, j, generator)?;
        }
    }
    NetworkChannel::new(topology, params)
}

/// Coefficient vector whose exponential is the two-qubit SWAP up to a
/// global phase: −π/4 on each of XX, YY, ZZ.
pub fn swap_generator() -> HermitianGenerator {
    let mut coeffs = vec![0.0; 15];
    let v = -std::f64::consts::FRAC_PI_4;
    coeffs[4] = v; // XX (Pauli index 5)
    coeffs[9] = v; // YY (Pauli index 10)
    coeffs[14] = v; // ZZ (Pauli index 15)
    HermitianGenerator::new(coeffs, 2).expect("fixed size")
}
