use qae_core::harness::*;
use qae_core::noise::{NoiseStage, SpinFlipSpec};
use qae_core::train::NadamHyper;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let p: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0.4);
    let eta: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.01);
    let eps: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1e-8);
    let config = ExperimentConfig {
        name: "fig5".into(),
        topology: TopologySpec::Dense { widths: vec![4, 1, 4] },
        stack_times: 2,
        num_qubits: 4,
        train_phases: vec![TrainPhase { phase: 0.0, pairs: 1500 }],
        test_states: TestRule::Fixed { phases: vec![TestPhase { phase: 0.0, count: 1500 }] },
        noise_stages: vec![NoiseStage::SpinFlip(SpinFlipSpec::new(0.0).unwrap())],
        sweep: SweepSpec { parameter: SweepParameter::P, values: vec![0.0] },
        rounds: 75,
        optimizer: NadamHyper { learning_rate: eta, epsilon: eps, ..Default::default() },
        init_scale: 0.5,
        gradient_mode: Default::default(),
        seeds: vec![1, 2, 3, 4, 5],
    };
    let r = run_point(&config, p).unwrap();
    let vals: Vec<String> = r.record.per_seed.iter().map(|s| format!("{:.3}", s.f_val_bar)).collect();
    println!("fig5 p={p} eta={eta} eps={eps}: seeds=[{}] median F_val={:.4}",
        vals.join(", "), r.record.median.f_val_bar);
}
