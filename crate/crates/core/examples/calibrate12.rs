use qae_core::harness::*;
use qae_core::noise::{NoiseStage, SpinFlipSpec};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let p: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0.4);
    let seeds: Vec<u64> = args.get(2).map(|s| s.split(',').map(|x| x.parse().unwrap()).collect())
        .unwrap_or((1..=20).collect());
    let config = ExperimentConfig {
        name: "fig4a".into(),
        topology: TopologySpec::Dense { widths: vec![3, 1, 3] },
        stack_times: 1,
        num_qubits: 3,
        train_phases: vec![
            TrainPhase { phase: 0.0, pairs: 100 },
            TrainPhase { phase: std::f64::consts::PI, pairs: 100 },
        ],
        test_states: TestRule::Fixed { phases: vec![
            TestPhase { phase: 0.0, count: 100 },
            TestPhase { phase: std::f64::consts::PI, count: 100 },
        ]},
        noise_stages: vec![NoiseStage::SpinFlip(SpinFlipSpec::new(0.0).unwrap())],
        sweep: SweepSpec { parameter: SweepParameter::P, values: vec![0.0] },
        rounds: 200,
        optimizer: Default::default(),
        init_scale: 0.5,
        gradient_mode: Default::default(),
        seeds,
    };
    let r = run_point(&config, p).unwrap();
    for s in &r.record.per_seed {
        println!("seed {}: F_val={:.4}", s.seed, s.f_val_bar);
    }
}
