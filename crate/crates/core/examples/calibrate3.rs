use qae_core::harness::*;
use qae_core::noise::{BrownianSpec, NoiseStage, SpinFlipSpec};
use qae_core::train::NadamHyper;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let eta: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0.01);
    let init: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.5);
    let seeds: Vec<u64> = args.get(3).map(|s| s.split(',').map(|x| x.parse().unwrap()).collect()).unwrap_or(vec![1]);
    let rounds: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(200);
    let config = ExperimentConfig {
        name: "fig3".into(),
        topology: TopologySpec::Dense { widths: vec![4, 2, 1, 2, 4] },
        stack_times: 1,
        num_qubits: 4,
        train_phases: vec![TrainPhase { phase: 0.0, pairs: 200 }],
        test_states: TestRule::Fixed { phases: vec![TestPhase { phase: 0.0, count: 200 }] },
        noise_stages: vec![
            NoiseStage::SpinFlip(SpinFlipSpec::new(0.2).unwrap()),
            NoiseStage::Brownian(BrownianSpec::new(0.3, 20).unwrap()),
        ],
        sweep: SweepSpec { parameter: SweepParameter::P, values: vec![0.2] },
        rounds,
        optimizer: NadamHyper { learning_rate: eta, ..Default::default() },
        init_scale: init,
        gradient_mode: Default::default(),
        seeds,
    };
    let r = run_point(&config, 0.2).unwrap();
    for s in &r.record.per_seed {
        println!("  seed {}: F_bar={:.4} F_val={:.4} dF_val={:.4}", s.seed, s.f_bar, s.f_val_bar, s.df_val);
    }
    println!("eta={eta} init={init} rounds={rounds}: median F_val={:.4} dF_val={:.4}",
        r.record.median.f_val_bar, r.record.median.df_val);
}
