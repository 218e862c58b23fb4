use qae_core::harness::*;
use qae_core::noise::{NoiseStage, SpinFlipSpec};
use qae_core::train::NadamHyper;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let p: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0.3);
    let rounds: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(200);
    let eta: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(0.01);
    let config = ExperimentConfig {
        name: "probe".into(),
        topology: TopologySpec::Dense { widths: vec![4, 2, 1, 2, 4] },
        stack_times: 1,
        num_qubits: 4,
        train_phases: vec![TrainPhase { phase: 0.0, pairs: 200 }],
        test_states: TestRule::Fixed { phases: vec![TestPhase { phase: 0.0, count: 200 }] },
        noise_stages: vec![NoiseStage::SpinFlip(SpinFlipSpec::new(0.0).unwrap())],
        sweep: SweepSpec { parameter: SweepParameter::P, values: vec![0.0] },
        rounds,
        optimizer: NadamHyper { learning_rate: eta, ..Default::default() },
        init_scale: 0.5,
        gradient_mode: Default::default(),
        seeds: vec![1, 2, 3, 4, 5],
    };
    let t = Instant::now();
    let r = run_point(&config, p).unwrap();
    for s in &r.record.per_seed {
        println!("seed {}: F_val={:.4} dF_val={:.4}", s.seed, s.f_val_bar, s.df_val);
    }
    println!("median F_val={:.4} dF_val={:.4}  rounds={rounds} eta={eta} [{:?}]",
        r.record.median.f_val_bar, r.record.median.df_val, t.elapsed());
}
