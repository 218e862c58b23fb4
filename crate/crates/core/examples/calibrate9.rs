use qae_core::harness::*;
use qae_core::noise::{NoiseStage, SpinFlipSpec};
use qae_core::train::NadamHyper;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(|s| s.as_str()).unwrap_or("dense");
    let p: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.3);
    let eta: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(0.01);
    let eps: f64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(1e-8);
    let rounds: usize = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(200);
    let (topology, m, phases, tests): (TopologySpec, usize, Vec<TrainPhase>, TestRule) = match which {
        "dense" => (
            TopologySpec::Dense { widths: vec![4, 2, 1, 2, 4] }, 4,
            vec![TrainPhase { phase: 0.0, pairs: 200 }],
            TestRule::Fixed { phases: vec![TestPhase { phase: 0.0, count: 200 }] },
        ),
        "sparse" => (
            TopologySpec::Sparse42124 {}, 4,
            vec![TrainPhase { phase: 0.0, pairs: 200 }],
            TestRule::Fixed { phases: vec![TestPhase { phase: 0.0, count: 200 }] },
        ),
        "fig4a" => (
            TopologySpec::Dense { widths: vec![3, 1, 3] }, 3,
            vec![TrainPhase { phase: 0.0, pairs: 100 }, TrainPhase { phase: std::f64::consts::PI, pairs: 100 }],
            TestRule::Fixed { phases: vec![
                TestPhase { phase: 0.0, count: 100 },
                TestPhase { phase: std::f64::consts::PI, count: 100 }]},
        ),
        "fig4b" => (
            TopologySpec::Dense { widths: vec![3, 1, 3] }, 3,
            (0..4).map(|i| TrainPhase { phase: i as f64 * std::f64::consts::PI / 3.0, pairs: 100 }).collect(),
            TestRule::RandomOpenInterval { count: 200 },
        ),
        _ => panic!("unknown"),
    };
    let config = ExperimentConfig {
        name: which.into(),
        topology, stack_times: 1, num_qubits: m,
        train_phases: phases,
        test_states: tests,
        noise_stages: vec![NoiseStage::SpinFlip(SpinFlipSpec::new(0.0).unwrap())],
        sweep: SweepSpec { parameter: SweepParameter::P, values: vec![0.0] },
        rounds,
        optimizer: NadamHyper { learning_rate: eta, epsilon: eps, ..Default::default() },
        init_scale: 0.5,
        gradient_mode: Default::default(),
        seeds: vec![1, 2, 3, 4, 5],
    };
    let r = run_point(&config, p).unwrap();
    for s in &r.record.per_seed {
        println!("  seed {}: F_val={:.4} dF_val={:.4} Jle1={:?}", s.seed, s.f_val_bar, s.df_val, s.f_val_bar_jle1.map(|x| (x*1e4).round()/1e4));
    }
    println!("{which} p={p} eta={eta} eps={eps} r={rounds}: median F_val={:.4} dF_val={:.4} Jle1={:?}",
        r.record.median.f_val_bar, r.record.median.df_val, r.record.median.f_val_bar_jle1.map(|x| (x*1e4).round()/1e4));
}
