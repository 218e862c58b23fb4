use qae_core::harness::*;
use qae_core::noise::{BrownianSpec, NoiseStage};
use qae_core::train::NadamHyper;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let q: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0.15);
    let eta: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.01);
    let seeds: Vec<u64> = args.get(3).map(|s| s.split(',').map(|x| x.parse().unwrap()).collect()).unwrap_or(vec![1]);
    let config = ExperimentConfig {
        name: "fig2b".into(),
        topology: TopologySpec::Dense { widths: vec![4, 2, 1, 2, 4] },
        stack_times: 1,
        num_qubits: 4,
        train_phases: vec![TrainPhase { phase: 0.0, pairs: 200 }],
        test_states: TestRule::Fixed { phases: vec![TestPhase { phase: 0.0, count: 200 }] },
        noise_stages: vec![NoiseStage::Brownian(BrownianSpec::new(0.0, 20).unwrap())],
        sweep: SweepSpec { parameter: SweepParameter::Q, values: vec![0.0] },
        rounds: 200,
        optimizer: NadamHyper { learning_rate: eta, ..Default::default() },
        init_scale: 0.5,
        gradient_mode: Default::default(),
        seeds,
    };
    let r = run_point(&config, q).unwrap();
    for s in &r.record.per_seed {
        println!("  seed {}: F_bar={:.4} F_val={:.4}", s.seed, s.f_bar, s.f_val_bar);
    }
    println!("q={q} eta={eta}: median F_bar={:.4} F_val={:.4}", r.record.median.f_bar, r.record.median.f_val_bar);
}
