//! Experiment definitions: dataset construction, per-seed training and
//! validation, analytic baselines, flip-count-filtered statistics,
//! sweeps over noise strengths and CSV metrics.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{NoiseSpec, NoiseStage};
use crate::qnn::{sparse_topology_4_2_1_2_4, NetworkChannel, Topology};
use crate::states::{
    build_dataset, DatasetSpec, GhzSpec, LabeledTestState, TestTargets, TrainingPair,
};
use crate::stream::{derive, TAG_DATASET, TAG_TRAINING};
use crate::train::{train, validation, GradientMode, NadamHyper, TrainConfig};

/// Topology selection in an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    Dense { widths: Vec<usize> },
    #[serde(rename = "sparse_4_2_1_2_4")]
    Sparse42124 {},
    Explicit {
        widths: Vec<usize>,
        connections: Vec<Vec<Vec<usize>>>,
    },
}

impl TopologySpec {
    pub fn resolve(&self) -> Result<Topology> {
        match self {
            TopologySpec::Dense { widths } => Topology::dense(widths),
            TopologySpec::Sparse42124 {} => Ok(sparse_topology_4_2_1_2_4()),
            TopologySpec::Explicit {
                widths,
                connections,
            } => Topology::new(widths.clone(), connections.clone()),
        }
    }
}

/// One training phase with its pair count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainPhase {
    pub phase: f64,
    pub pairs: usize,
}

/// One fixed test phase with its state count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestPhase {
    pub phase: f64,
    pub count: usize,
}

/// How the test states are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestRule {
    Fixed { phases: Vec<TestPhase> },
    RandomOpenInterval { count: usize },
}

impl TestRule {
    pub fn count(&self) -> usize {
        match self {
            TestRule::Fixed { phases } => phases.iter().map(|p| p.count).sum(),
            TestRule::RandomOpenInterval { count } => *count,
        }
    }
}

/// Which stage parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    P,
    Q,
}

impl SweepParameter {
    pub fn label(&self) -> &'static str {
        match self {
            SweepParameter::P => "p",
            SweepParameter::Q => "q",
        }
    }
}

/// Sweep description: the varied parameter and its grid values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

fn default_stack_times() -> usize {
    1
}

fn default_init_scale() -> f64 {
    0.5
}

/// One figure-point family of the experiment harness: topology, target
/// family, noise, training settings and the seed list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub topology: TopologySpec,
    #[serde(default = "default_stack_times")]
    pub stack_times: usize,
    pub num_qubits: usize,
    pub train_phases: Vec<TrainPhase>,
    pub test_states: TestRule,
    pub noise_stages: Vec<NoiseStage>,
    pub sweep: SweepSpec,
    pub rounds: usize,
    #[serde(default)]
    pub optimizer: NadamHyper,
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
    #[serde(default)]
    pub gradient_mode: GradientMode,
    pub seeds: Vec<u64>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let topology = self.topology.resolve()?;
        topology.assert_autoencoder()?;
        if topology.input_width() != self.num_qubits {
            return Err(Error::InvalidParameter(format!(
                "topology input width {} differs from num_qubits {}",
                topology.input_width(),
                self.num_qubits
            )));
        }
        if self.stack_times > 1 && topology.input_width() != topology.output_width() {
            return Err(Error::InvalidTopology(
                "only square networks can be stacked".into(),
            ));
        }
        if self.train_phases.is_empty() {
            return Err(Error::InvalidParameter("no training phases".into()));
        }
        for tp in &self.train_phases {
            if tp.pairs == 0 {
                return Err(Error::InvalidParameter(
                    "per-phase pair count must be at least 1".into(),
                ));
            }
            GhzSpec::new(self.num_qubits, tp.phase)?;
        }
        match &self.test_states {
            TestRule::Fixed { phases } => {
                if phases.is_empty() || phases.iter().any(|p| p.count == 0) {
                    return Err(Error::InvalidParameter(
                        "test counts must be at least 1".into(),
                    ));
                }
                for p in phases {
                    GhzSpec::new(self.num_qubits, p.phase)?;
                }
            }
            TestRule::RandomOpenInterval { count } => {
                if *count == 0 {
                    return Err(Error::InvalidParameter(
                        "test counts must be at least 1".into(),
                    ));
                }
            }
        }
        NoiseSpec::new(self.noise_stages.clone())?;
        let has_spin_flip = self
            .noise_stages
            .iter()
            .any(|s| matches!(s, NoiseStage::SpinFlip(_)));
        let has_brownian = self
            .noise_stages
            .iter()
            .any(|s| matches!(s, NoiseStage::Brownian(_)));
        match self.sweep.parameter {
            SweepParameter::P if !has_spin_flip => {
                return Err(Error::InvalidParameter(
                    "sweep over p needs a spin_flip stage".into(),
                ));
            }
            SweepParameter::Q if !has_brownian => {
                return Err(Error::InvalidParameter(
                    "sweep over q needs a brownian stage".into(),
                ));
            }
            _ => {}
        }
        if self.sweep.values.is_empty() {
            return Err(Error::InvalidParameter("empty sweep grid".into()));
        }
        if self.rounds == 0 {
            return Err(Error::InvalidParameter("rounds must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameter("no seeds".into()));
        }
        Ok(())
    }

    /// The noise stages with the swept parameter replaced by `value`
    /// in the first matching stage.
    pub fn noise_at(&self, value: f64) -> Result<NoiseSpec> {
        let mut stages = self.noise_stages.clone();
        let mut replaced = false;
        for stage in &mut stages {
            match (self.sweep.parameter, &mut *stage) {
                (SweepParameter::P, NoiseStage::SpinFlip(s)) if !replaced => {
                    s.p = value;
                    replaced = true;
                }
                (SweepParameter::Q, NoiseStage::Brownian(s)) if !replaced => {
                    s.q = value;
                    replaced = true;
                }
                _ => {}
            }
        }
        if !replaced {
            return Err(Error::InvalidParameter(format!(
                "no stage accepts the swept parameter {}",
                self.sweep.parameter.label()
            )));
        }
        NoiseSpec::new(stages)
    }

    /// Dataset description for one grid value.
    pub fn dataset_spec(&self, noise_value: f64) -> Result<DatasetSpec> {
        let train_targets = self
            .train_phases
            .iter()
            .map(|tp| Ok((GhzSpec::new(self.num_qubits, tp.phase)?, tp.pairs)))
            .collect::<Result<Vec<_>>>()?;
        let test_targets = match &self.test_states {
            TestRule::Fixed { phases } => TestTargets::Fixed(
                phases
                    .iter()
                    .map(|p| Ok((GhzSpec::new(self.num_qubits, p.phase)?, p.count)))
                    .collect::<Result<Vec<_>>>()?,
            ),
            TestRule::RandomOpenInterval { count } => TestTargets::RandomPhases {
                num_qubits: self.num_qubits,
                count: *count,
            },
        };
        Ok(DatasetSpec {
            train_targets,
            test_targets,
            noise: self.noise_at(noise_value)?,
        })
    }

    fn train_config(&self, seed: u64, noise_value: f64) -> TrainConfig {
        TrainConfig {
            rounds: self.rounds,
            seed: derive(seed, TAG_TRAINING, noise_value.to_bits()),
            init_scale: self.init_scale,
            hyper: self.optimizer,
            gradient_mode: self.gradient_mode,
        }
    }

    fn dataset_seed(&self, seed: u64, noise_value: f64) -> u64 {
        derive(seed, TAG_DATASET, noise_value.to_bits())
    }

    /// Phases that every test state can take, when they are fixed.
    fn fixed_test_phases(&self) -> Option<Vec<f64>> {
        match &self.test_states {
            TestRule::Fixed { phases } => Some(phases.iter().map(|p| p.phase).collect()),
            TestRule::RandomOpenInterval { .. } => None,
        }
    }
}

/// Per-seed metrics of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedMetrics {
    pub seed: u64,
    pub f_bar: f64,
    pub df: f64,
    pub f_val_bar: f64,
    pub df_val: f64,
    pub f_val_bar_jle1: Option<f64>,
    pub n_tests_jle1: Option<usize>,
}

/// Median summary across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct MedianMetrics {
    pub f_bar: f64,
    pub df: f64,
    pub f_val_bar: f64,
    pub df_val: f64,
    pub f_val_bar_jle1: Option<f64>,
}

/// One figure point: per-seed metrics, their medians and, when
/// defined, the analytic baseline (F̄^∞, ΔF^∞/√L).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub noise_kind: String,
    pub noise_value: f64,
    pub baseline: Option<(f64, f64)>,
    pub per_seed: Vec<SeedMetrics>,
    pub median: MedianMetrics,
}

/// A point result bundles the metrics with the per-seed artifacts.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub record: MetricsRecord,
    pub per_seed_networks: Vec<NetworkChannel>,
    pub per_seed_cost_trajectories: Vec<Vec<f64>>,
}

/// F̄^∞ = (1−p)^m + p^m and its standard error √(F̄^∞(1−F̄^∞)/L).
/// Defined only for GHZ phases that are multiples of π, where every
/// per-shot fidelity is 0 or 1.
pub fn analytic_baseline(p: f64, m: usize, l: usize, phases: &[f64]) -> Result<(f64, f64)> {
    for &phase in phases {
        let reduced = phase.rem_euclid(std::f64::consts::PI);
        if reduced.min(std::f64::consts::PI - reduced) > 1e-12 {
            return Err(Error::BaselineUndefined(phase));
        }
    }
    if !(0.0..=0.5).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "spin-flip probability {p} outside [0, 0.5]"
        )));
    }
    let f_inf = (1.0 - p).powi(m as i32) + p.powi(m as i32);
    let df_inf = (f_inf * (1.0 - f_inf) / l as f64).sqrt();
    Ok((f_inf, df_inf))
}

/// Test states with at most `max_flips` flipped qubits. Errors when
/// the labels are missing (unitary-only noise).
pub fn filter_by_flip_count(
    tests: &[LabeledTestState],
    max_flips: usize,
) -> Result<Vec<LabeledTestState>> {
    tests
        .iter()
        .map(|t| t.flip_count.ok_or(Error::MissingFlipLabels).map(|c| (c, t)))
        .filter(|r| match r {
            Ok((c, _)) => *c <= max_flips,
            Err(_) => true,
        })
        .map(|r| r.map(|(_, t)| t.clone()))
        .collect()
}

struct SeedOutcome {
    metrics: SeedMetrics,
    network: NetworkChannel,
    cost_trajectory: Vec<f64>,
}

fn run_seed(config: &ExperimentConfig, noise_value: f64, seed: u64) -> Result<SeedOutcome> {
    let topology = config.topology.resolve()?;
    let dataset = config.dataset_spec(noise_value)?;
    let (pairs, tests): (Vec<TrainingPair>, Vec<LabeledTestState>) =
        build_dataset(&dataset, config.dataset_seed(seed, noise_value))?;
    let outcome = train(&topology, &pairs, &config.train_config(seed, noise_value))?;
    let report = validation(&outcome.network, &tests, config.stack_times)?;

    let (f_val_bar_jle1, n_tests_jle1) = if tests.iter().all(|t| t.flip_count.is_some()) {
        let subset = filter_by_flip_count(&tests, 1)?;
        if subset.is_empty() {
            (None, Some(0))
        } else {
            let filtered = validation(&outcome.network, &subset, config.stack_times)?;
            (Some(filtered.f_val_bar), Some(subset.len()))
        }
    } else {
        (None, None)
    };

    Ok(SeedOutcome {
        metrics: SeedMetrics {
            seed,
            f_bar: report.f_bar,
            df: report.df,
            f_val_bar: report.f_val_bar,
            df_val: report.df_val,
            f_val_bar_jle1,
            n_tests_jle1,
        },
        network: outcome.network,
        cost_trajectory: outcome.cost_trajectory,
    })
}

fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn summarize(per_seed: &[SeedMetrics]) -> MedianMetrics {
    let mut f_bar: Vec<f64> = per_seed.iter().map(|s| s.f_bar).collect();
    let mut df: Vec<f64> = per_seed.iter().map(|s| s.df).collect();
    let mut f_val: Vec<f64> = per_seed.iter().map(|s| s.f_val_bar).collect();
    let mut df_val: Vec<f64> = per_seed.iter().map(|s| s.df_val).collect();
    let mut filtered: Vec<f64> = per_seed.iter().filter_map(|s| s.f_val_bar_jle1).collect();
    MedianMetrics {
        f_bar: median(&mut f_bar),
        df: median(&mut df),
        f_val_bar: median(&mut f_val),
        df_val: median(&mut df_val),
        f_val_bar_jle1: if filtered.len() == per_seed.len() {
            Some(median(&mut filtered))
        } else {
            None
        },
    }
}

fn assemble_point(
    config: &ExperimentConfig,
    noise_value: f64,
    outcomes: Vec<SeedOutcome>,
) -> Result<PointResult> {
    let per_seed: Vec<SeedMetrics> = outcomes.iter().map(|o| o.metrics.clone()).collect();
    let median = summarize(&per_seed);

    // the closed form exists only for pure spin-flip noise on targets
    // with phases in πZ
    let pure_spin_flip = config
        .noise_stages
        .iter()
        .all(|s| matches!(s, NoiseStage::SpinFlip(_)))
        && matches!(config.sweep.parameter, SweepParameter::P);
    let baseline = if pure_spin_flip {
        config.fixed_test_phases().and_then(|phases| {
            analytic_baseline(
                noise_value,
                config.num_qubits,
                config.test_states.count(),
                &phases,
            )
            .ok()
        })
    } else {
        None
    };

    Ok(PointResult {
        record: MetricsRecord {
            noise_kind: config.sweep.parameter.label().to_string(),
            noise_value,
            baseline,
            per_seed,
            median,
        },
        per_seed_networks: outcomes.iter().map(|o| o.network.clone()).collect(),
        per_seed_cost_trajectories: outcomes.into_iter().map(|o| o.cost_trajectory).collect(),
    })
}

/// Runs one figure point: per-seed dataset draw, training, validation
/// and aggregation. The same drawn test set serves the pre- and
/// post-denoising statistics.
pub fn run_point(config: &ExperimentConfig, noise_value: f64) -> Result<PointResult> {
    config.validate()?;
    let outcomes: Vec<SeedOutcome> = config
        .seeds
        .iter()
        .map(|&seed| run_seed(config, noise_value, seed))
        .collect::<Result<_>>()?;
    assemble_point(config, noise_value, outcomes)
}

/// Runs every grid value of the sweep. Points and seeds are
/// independent tasks distributed over `threads` workers; the result
/// order and all numbers are identical for any thread count.
pub fn run_sweep(
    config: &ExperimentConfig,
    grid: &[f64],
    threads: usize,
) -> Result<Vec<PointResult>> {
    config.validate()?;
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty sweep grid".into()));
    }
    let tasks: Vec<(usize, f64, u64)> = grid
        .iter()
        .enumerate()
        .flat_map(|(i, &value)| config.seeds.iter().map(move |&s| (i, value, s)))
        .collect();
    let outcomes: Vec<(usize, Result<SeedOutcome>)> = if threads <= 1 {
        tasks
            .iter()
            .map(|&(i, value, seed)| (i, run_seed(config, value, seed)))
            .collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            tasks
                .par_iter()
                .map(|&(i, value, seed)| (i, run_seed(config, value, seed)))
                .collect()
        })
    };
    let mut grouped: Vec<Vec<SeedOutcome>> = (0..grid.len()).map(|_| Vec::new()).collect();
    for (i, outcome) in outcomes {
        grouped[i].push(outcome?);
    }
    grid.iter()
        .zip(grouped)
        .map(|(&value, outcomes)| assemble_point(config, value, outcomes))
        .collect()
}

/// Fixed CSV header of the metrics table.
pub const METRICS_CSV_HEADER: &str =
    "noise_kind,noise_value,seed,F_bar,dF,F_val_bar,dF_val,F_inf,dF_inf,F_val_bar_Jle1,n_tests_Jle1";

fn format_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

/// Emits metrics as CSV: one row per seed, then one `median` row per
/// record. Missing fields become empty cells.
pub fn write_metrics_csv<W: Write>(w: &mut W, records: &[MetricsRecord]) -> Result<()> {
    writeln!(w, "{METRICS_CSV_HEADER}")?;
    for record in records {
        let (f_inf, df_inf) = match record.baseline {
            Some((f, d)) => (f.to_string(), d.to_string()),
            None => (String::new(), String::new()),
        };
        for seed in &record.per_seed {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                record.noise_kind,
                record.noise_value,
                seed.seed,
                seed.f_bar,
                seed.df,
                seed.f_val_bar,
                seed.df_val,
                f_inf,
                df_inf,
                format_opt(&seed.f_val_bar_jle1),
                format_opt(&seed.n_tests_jle1),
            )?;
        }
        let m = &record.median;
        writeln!(
            w,
            "{},{},median,{},{},{},{},{},{},{},",
            record.noise_kind,
            record.noise_value,
            m.f_bar,
            m.df,
            m.f_val_bar,
            m.df_val,
            f_inf,
            df_inf,
            format_opt(&m.f_val_bar_jle1),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::SpinFlipSpec;
    use crate::states::ghz;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_config(p_values: Vec<f64>) -> ExperimentConfig {
        ExperimentConfig {
            name: "tiny".into(),
            topology: TopologySpec::Dense {
                widths: vec![2, 1, 2],
            },
            stack_times: 1,
            num_qubits: 2,
            train_phases: vec![TrainPhase {
                phase: 0.0,
                pairs: 4,
            }],
            test_states: TestRule::Fixed {
                phases: vec![TestPhase {
                    phase: 0.0,
                    count: 4,
                }],
            },
            noise_stages: vec![NoiseStage::SpinFlip(SpinFlipSpec::new(0.0).unwrap())],
            sweep: SweepSpec {
                parameter: SweepParameter::P,
                values: p_values,
            },
            rounds: 2,
            optimizer: NadamHyper::default(),
            init_scale: 0.5,
            gradient_mode: GradientMode::Analytic,
            seeds: vec![1, 2],
        }
    }

    #[test]
    fn baseline_examples() {
        let (f, d) = analytic_baseline(0.0, 4, 200, &[0.0]).unwrap();
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d, 0.0, epsilon = 1e-15);

        let (f, d) = analytic_baseline(0.3, 4, 200, &[0.0, std::f64::consts::PI]).unwrap();
        assert_abs_diff_eq!(f, 0.2482, epsilon = 1e-12);
        assert_abs_diff_eq!(d, (0.2482f64 * 0.7518 / 200.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(d, 0.030545, epsilon = 1e-6);

        assert!(matches!(
            analytic_baseline(0.3, 4, 200, &[1.0]),
            Err(Error::BaselineUndefined(_))
        ));
    }

    #[test]
    fn baseline_matches_monte_carlo() {
        // mean of per-shot fidelities over sampled flip subsets; for
        // GHZ-0 the fidelity is 1 exactly when J or its complement is
        // empty
        let p = 0.3;
        let m = 4;
        let samples = 1_000_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut hits = 0usize;
        for _ in 0..samples {
            let j = crate::noise::sample_flip_subset(p, m, &mut rng).unwrap();
            let mask = j.mask();
            if mask == 0 || mask == (1 << m) - 1 {
                hits += 1;
            }
        }
        let mc = hits as f64 / samples as f64;
        let (f_inf, _) = analytic_baseline(p, m, samples, &[0.0]).unwrap();
        let se = (f_inf * (1.0 - f_inf) / samples as f64).sqrt();
        assert!(
            (mc - f_inf).abs() < 3.0 * se,
            "Monte-Carlo mean {mc} vs closed form {f_inf} (3σ = {})",
            3.0 * se
        );
    }

    #[test]
    fn monte_carlo_subset_fidelity_equals_flip_identity() {
        // the indicator used above is exactly the fidelity of the
        // flipped GHZ-0 state with the clean one
        let target = ghz(&GhzSpec::new(4, 0.0).unwrap()).unwrap();
        for mask in 0..16usize {
            let j = crate::states::FlipSubset::from_mask(mask, 4);
            let flipped = crate::states::apply_flips(&target, &j).unwrap();
            let f = crate::linops::fidelity_pure(&flipped.projector(), &target).unwrap();
            let expected = if mask == 0 || mask == 15 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(f, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn run_point_without_noise_has_perfect_inputs() {
        let config = tiny_config(vec![0.0]);
        let result = run_point(&config, 0.0).unwrap();
        assert_eq!(result.record.per_seed.len(), 2);
        for seed in &result.record.per_seed {
            assert_abs_diff_eq!(seed.f_bar, 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(result.record.median.f_bar, 1.0, epsilon = 1e-12);
        assert_eq!(result.per_seed_networks.len(), 2);
        assert_eq!(result.per_seed_cost_trajectories.len(), 2);
        assert_eq!(result.per_seed_cost_trajectories[0].len(), 2);
        // baseline at p = 0 is (1, 0)
        let (f_inf, df_inf) = result.record.baseline.unwrap();
        assert_abs_diff_eq!(f_inf, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(df_inf, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn sweep_emits_grid_order_with_decreasing_baseline() {
        let config = tiny_config(vec![0.0, 0.1, 0.2, 0.3]);
        let results = run_sweep(&config, &config.sweep.values.clone(), 1).unwrap();
        assert_eq!(results.len(), 4);
        let baselines: Vec<f64> = results
            .iter()
            .map(|r| r.record.baseline.unwrap().0)
            .collect();
        for w in baselines.windows(2) {
            assert!(w[0] > w[1], "baseline not decreasing: {baselines:?}");
        }
        for (r, &p) in results.iter().zip(config.sweep.values.iter()) {
            assert_eq!(r.record.noise_value, p);
            assert_eq!(r.record.noise_kind, "p");
        }
    }

    #[test]
    fn sweep_is_thread_count_invariant() {
        let config = tiny_config(vec![0.0, 0.2]);
        let grid = config.sweep.values.clone();
        let serial = run_sweep(&config, &grid, 1).unwrap();
        let parallel = run_sweep(&config, &grid, 4).unwrap();
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        write_metrics_csv(
            &mut csv_a,
            &serial.iter().map(|r| r.record.clone()).collect::<Vec<_>>(),
        )
        .unwrap();
        write_metrics_csv(
            &mut csv_b,
            &parallel.iter().map(|r| r.record.clone()).collect::<Vec<_>>(),
        )
        .unwrap();
        assert_eq!(csv_a, csv_b);
        for (a, b) in serial.iter().zip(parallel.iter()) {
            for (na, nb) in a.per_seed_networks.iter().zip(b.per_seed_networks.iter()) {
                assert_eq!(na.params().to_flat(), nb.params().to_flat());
            }
        }
    }

    #[test]
    fn filter_keeps_low_flip_tests() {
        let spec = DatasetSpec {
            train_targets: vec![(GhzSpec::new(3, 0.0).unwrap(), 1)],
            test_targets: TestTargets::Fixed(vec![(GhzSpec::new(3, 0.0).unwrap(), 10_000)]),
            noise: NoiseSpec::spin_flip(0.2).unwrap(),
        };
        let (_, tests) = build_dataset(&spec, 77).unwrap();

        let all = filter_by_flip_count(&tests, 3).unwrap();
        assert_eq!(all.len(), tests.len());

        let none = filter_by_flip_count(&tests, 0).unwrap();
        for t in &none {
            let f = crate::linops::fidelity_pure(&t.noisy.projector(), &t.ideal).unwrap();
            assert_abs_diff_eq!(f, 1.0, epsilon = 1e-12);
        }

        let low = filter_by_flip_count(&tests, 1).unwrap();
        let expected = 0.8f64.powi(3) + 3.0 * 0.2 * 0.8f64.powi(2); // 0.896
        let se = (expected * (1.0 - expected) / tests.len() as f64).sqrt();
        let observed = low.len() as f64 / tests.len() as f64;
        assert!(
            (observed - expected).abs() < 3.0 * se,
            "|J| ≤ 1 fraction {observed} vs binomial {expected}"
        );
    }

    #[test]
    fn filter_requires_labels() {
        let g = ghz(&GhzSpec::new(2, 0.0).unwrap()).unwrap();
        let tests = vec![LabeledTestState {
            noisy: g.clone(),
            ideal: g,
            flip_count: None,
        }];
        assert!(matches!(
            filter_by_flip_count(&tests, 1),
            Err(Error::MissingFlipLabels)
        ));
    }

    #[test]
    fn csv_layout_is_stable() {
        let config = tiny_config(vec![0.0]);
        let result = run_point(&config, 0.0).unwrap();
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &[result.record.clone()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], METRICS_CSV_HEADER);
        // two seed rows plus a median row
        assert_eq!(lines.len(), 4);
        assert!(lines[3].contains(",median,"));

        let mut buf2 = Vec::new();
        write_metrics_csv(&mut buf2, &[result.record.clone()]).unwrap();
        assert_eq!(text.as_bytes(), buf2.as_slice());
    }

    #[test]
    fn config_validation_catches_mistakes() {
        let mut config = tiny_config(vec![0.0]);
        config.seeds.clear();
        assert!(config.validate().is_err());

        let mut config = tiny_config(vec![0.0]);
        config.num_qubits = 3;
        assert!(config.validate().is_err());

        let mut config = tiny_config(vec![0.0]);
        config.sweep.parameter = SweepParameter::Q;
        assert!(config.validate().is_err());

        let mut config = tiny_config(vec![0.0]);
        config.topology = TopologySpec::Dense {
            widths: vec![2, 2, 2],
        };
        assert!(config.validate().is_err(), "no bottleneck must be rejected");
    }

    #[test]
    fn explicit_and_sparse_topologies_resolve() {
        let sparse = TopologySpec::Sparse42124 {}.resolve().unwrap();
        assert_eq!(sparse.layer_widths(), &[4, 2, 1, 2, 4]);
        let explicit = TopologySpec::Explicit {
            widths: vec![2, 1, 2],
            connections: vec![vec![vec![0, 1]], vec![vec![0], vec![0]]],
        }
        .resolve()
        .unwrap();
        assert_eq!(explicit.layer_widths(), &[2, 1, 2]);
    }
}
