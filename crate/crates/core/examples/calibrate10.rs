use qae_core::harness::*;
use qae_core::noise::{NoiseStage, SpinFlipSpec};
use qae_core::train::NadamHyper;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let p: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0.4);
    let eta: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.01);
    let eps: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1e-8);
    let init: f64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(0.5);
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
        optimizer: NadamHyper { learning_rate: eta, epsilon: eps, ..Default::default() },
        init_scale: init,
        gradient_mode: Default::default(),
        seeds: vec![1, 2, 3, 4, 5],
    };
    let r = run_point(&config, p).unwrap();
    let vals: Vec<String> = r.record.per_seed.iter().map(|s| format!("{:.3}", s.f_val_bar)).collect();
    println!("p={p} eta={eta} eps={eps} init={init}: seeds=[{}] median F_val={:.4} dF_val={:.4}",
        vals.join(", "), r.record.median.f_val_bar, r.record.median.df_val);
}
