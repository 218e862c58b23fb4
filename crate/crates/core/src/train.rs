//! Cost and validation functions, analytic cost gradients, the Nadam
//! optimizer and the full-batch training loop.

use serde::{Deserialize, Serialize};

use crate::engine;
use crate::error::{Error, Result};
use crate::qnn::{NetworkChannel, NetworkParams, Topology};
use crate::states::{LabeledTestState, TrainingPair};

/// Cost of a batch: C = 1 − F̄ over the per-sample fidelities of the
/// network outputs with their reference states.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub cost: f64,
    pub mean_fidelity: f64,
    pub per_sample_fidelities: Vec<f64>,
}

/// Validation statistics: fidelities of the (possibly stacked) network
/// outputs with the known ideal targets, next to the same statistics
/// for the raw inputs. Spreads use the non-normalized sum-of-squares
/// form ΔF = √(Σ_i (F_i − F̄)²).
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub f_val_bar: f64,
    pub df_val: f64,
    pub per_sample_f_val: Vec<f64>,
    pub f_bar: f64,
    pub df: f64,
    pub per_sample_f: Vec<f64>,
}

/// Nadam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NadamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for NadamHyper {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// How the cost gradient is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    #[default]
    Analytic,
    FiniteDifference,
}

/// Central-difference step of the finite-difference gradient mode.
pub const FINITE_DIFFERENCE_STEP: f64 = 1e-5;

/// Training-run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub rounds: usize,
    pub seed: u64,
    pub init_scale: f64,
    pub hyper: NadamHyper,
    pub gradient_mode: GradientMode,
}

impl TrainConfig {
    pub fn new(rounds: usize, seed: u64) -> Self {
        Self {
            rounds,
            seed,
            init_scale: 0.5,
            hyper: NadamHyper::default(),
            gradient_mode: GradientMode::Analytic,
        }
    }

    pub fn with_learning_rate(mut self, learning_rate: f64) -> Self {
        self.hyper.learning_rate = learning_rate;
        self
    }
}

/// First and second Nadam moments plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    t: u64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    hyper: NadamHyper,
}

impl OptimizerState {
    pub fn new(num_params: usize, hyper: NadamHyper) -> Self {
        Self {
            t: 0,
            first_moment: vec![0.0; num_params],
            second_moment: vec![0.0; num_params],
            hyper,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

fn check_widths(net: &NetworkChannel, qubits: usize) -> Result<()> {
    if net.topology().input_width() != qubits {
        return Err(Error::WidthMismatch {
            expected: net.topology().input_width(),
            got: qubits,
        });
    }
    Ok(())
}

/// Cost of `net` on training pairs: per-sample fidelities of the
/// forward images with the references, averaged in sample order.
pub fn cost(net: &NetworkChannel, data: &[TrainingPair]) -> Result<CostReport> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    check_widths(net, data[0].input.num_qubits())?;
    let (cost, per_sample_fidelities) = engine::evaluate_cost(net, data);
    let mean_fidelity = 1.0 - cost;
    Ok(CostReport {
        cost,
        mean_fidelity,
        per_sample_fidelities,
    })
}

fn spread(samples: &[f64], mean: f64) -> f64 {
    samples.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>().sqrt()
}

/// Validation of a (possibly stacked) network on labeled test states:
/// post-denoising fidelities with the ideal targets next to the raw
/// input-side fidelities.
pub fn validation(
    net: &NetworkChannel,
    tests: &[LabeledTestState],
    stack_times: usize,
) -> Result<ValidationReport> {
    if tests.is_empty() {
        return Err(Error::EmptyData);
    }
    if stack_times < 1 {
        return Err(Error::InvalidParameter(
            "stack count must be at least 1".into(),
        ));
    }
    check_widths(net, tests[0].noisy.num_qubits())?;
    if stack_times > 1 && net.topology().input_width() != net.topology().output_width() {
        return Err(Error::InvalidTopology(
            "only square networks can be stacked".into(),
        ));
    }
    let compiled = engine::Compiled::new(net);
    let mut per_sample_f_val = Vec::with_capacity(tests.len());
    let mut per_sample_f = Vec::with_capacity(tests.len());
    for test in tests {
        let mut out = compiled.forward_pure(&test.noisy);
        for _ in 1..stack_times {
            out = compiled.forward_dm(&out);
        }
        per_sample_f_val.push(crate::linops::fidelity_pure(&out, &test.ideal)?);
        let overlap = test.noisy.inner(&test.ideal)?;
        per_sample_f.push(overlap.norm_sqr().clamp(0.0, 1.0));
    }
    let f_val_bar = per_sample_f_val.iter().sum::<f64>() / tests.len() as f64;
    let f_bar = per_sample_f.iter().sum::<f64>() / tests.len() as f64;
    Ok(ValidationReport {
        df_val: spread(&per_sample_f_val, f_val_bar),
        f_val_bar,
        df: spread(&per_sample_f, f_bar),
        f_bar,
        per_sample_f_val,
        per_sample_f,
    })
}

fn finite_difference_gradient(
    net: &NetworkChannel,
    data: &[TrainingPair],
) -> Result<Vec<f64>> {
    let topology = net.topology().clone();
    let flat = net.params().to_flat();
    let mut gradient = Vec::with_capacity(flat.len());
    for alpha in 0..flat.len() {
        let mut plus = flat.clone();
        plus[alpha] += FINITE_DIFFERENCE_STEP;
        let mut minus = flat.clone();
        minus[alpha] -= FINITE_DIFFERENCE_STEP;
        let cost_plus =
            engine::evaluate_cost(&net.with_params(NetworkParams::from_flat(&topology, &plus)?)?, data).0;
        let cost_minus =
            engine::evaluate_cost(&net.with_params(NetworkParams::from_flat(&topology, &minus)?)?, data).0;
        gradient.push((cost_plus - cost_minus) / (2.0 * FINITE_DIFFERENCE_STEP));
    }
    Ok(gradient)
}

/// ∂C/∂θ for every coefficient, flattened in parameter order.
pub fn gradient(
    net: &NetworkChannel,
    data: &[TrainingPair],
    mode: GradientMode,
) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    check_widths(net, data[0].input.num_qubits())?;
    match mode {
        GradientMode::Analytic => Ok(engine::evaluate_round(net, data)?.gradient),
        GradientMode::FiniteDifference => finite_difference_gradient(net, data),
    }
}

/// One Nadam update: biased moments m ← β₁m + (1−β₁)g and
/// v ← β₂v + (1−β₂)g², bias-corrected m̂ and v̂, then
/// θ ← θ − η·(β₁m̂ + (1−β₁)g/(1−β₁ᵗ)) / (√v̂ + ε).
pub fn nadam_step(
    state: &OptimizerState,
    params: &[f64],
    grad: &[f64],
) -> Result<(OptimizerState, Vec<f64>)> {
    if params.len() != state.first_moment.len() || grad.len() != params.len() {
        return Err(Error::DimensionMismatch(format!(
            "optimizer over {} parameters got {} params and {} gradients",
            state.first_moment.len(),
            params.len(),
            grad.len()
        )));
    }
    let h = state.hyper;
    let t = state.t + 1;
    let bias1 = 1.0 - h.beta1.powi(t as i32);
    let bias2 = 1.0 - h.beta2.powi(t as i32);
    let mut first = state.first_moment.clone();
    let mut second = state.second_moment.clone();
    let mut updated = params.to_vec();
    for i in 0..params.len() {
        let g = grad[i];
        first[i] = h.beta1 * first[i] + (1.0 - h.beta1) * g;
        second[i] = h.beta2 * second[i] + (1.0 - h.beta2) * g * g;
        let m_hat = first[i] / bias1;
        let v_hat = second[i] / bias2;
        let direction = h.beta1 * m_hat + (1.0 - h.beta1) * g / bias1;
        updated[i] -= h.learning_rate * direction / (v_hat.sqrt() + h.epsilon);
    }
    Ok((
        OptimizerState {
            t,
            first_moment: first,
            second_moment: second,
            hyper: h,
        },
        updated,
    ))
}

/// A finished training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: NetworkChannel,
    /// Cost at the parameters entering each round, so entry 0 is the
    /// cost of the random initialization.
    pub cost_trajectory: Vec<f64>,
}

/// Runs `config.rounds` full-batch gradient steps from a Gaussian
/// initialization. Deterministic given the config seed.
pub fn train(
    topology: &Topology,
    data: &[TrainingPair],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if config.rounds < 1 {
        return Err(Error::InvalidParameter("rounds must be at least 1".into()));
    }
    if topology.input_width() != data[0].input.num_qubits() {
        return Err(Error::WidthMismatch {
            expected: topology.input_width(),
            got: data[0].input.num_qubits(),
        });
    }
    let params = NetworkParams::random(topology, config.init_scale, config.seed);
    let mut flat = params.to_flat();
    let mut optimizer = OptimizerState::new(flat.len(), config.hyper);
    let mut cost_trajectory = Vec::with_capacity(config.rounds);
    for _ in 0..config.rounds {
        let net = NetworkChannel::new(
            topology.clone(),
            NetworkParams::from_flat(topology, &flat)?,
        )?;
        let (cost_value, grad) = match config.gradient_mode {
            GradientMode::Analytic => {
                let round = engine::evaluate_round(&net, data)?;
                (round.cost, round.gradient)
            }
            GradientMode::FiniteDifference => {
                let (cost_value, _) = engine::evaluate_cost(&net, data);
                (cost_value, finite_difference_gradient(&net, data)?)
            }
        };
        cost_trajectory.push(cost_value);
        let (next_optimizer, next_flat) = nadam_step(&optimizer, &flat, &grad)?;
        optimizer = next_optimizer;
        flat = next_flat;
    }
    let network = NetworkChannel::new(
        topology.clone(),
        NetworkParams::from_flat(topology, &flat)?,
    )?;
    Ok(TrainOutcome {
        network,
        cost_trajectory,
    })
}
