use qae_core::harness::*;
use qae_core::noise::{BrownianSpec, NoiseStage, SpinFlipSpec};
use qae_core::qnn::NetworkChannel;
use qae_core::states::build_dataset;
use qae_core::train::{train, validation, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let q_eff: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0.195);
    let eta: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.01);
    let init: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(0.5);
    let config = ExperimentConfig {
        name: "fig3".into(),
        topology: TopologySpec::Dense { widths: vec![4, 2, 1, 2, 4] },
        stack_times: 1,
        num_qubits: 4,
        train_phases: vec![TrainPhase { phase: 0.0, pairs: 200 }],
        test_states: TestRule::Fixed { phases: vec![TestPhase { phase: 0.0, count: 200 }] },
        noise_stages: vec![
            NoiseStage::SpinFlip(SpinFlipSpec::new(0.2).unwrap()),
            NoiseStage::Brownian(BrownianSpec::new(q_eff, 20).unwrap()),
        ],
        sweep: SweepSpec { parameter: SweepParameter::P, values: vec![0.2] },
        rounds: 200,
        optimizer: Default::default(),
        init_scale: init,
        gradient_mode: Default::default(),
        seeds: vec![1],
    };
    // replicate run_seed manually so we can checkpoint validation
    let topology = config.topology.resolve().unwrap();
    let dataset = config.dataset_spec(0.2).unwrap();
    for seed in [1u64, 2, 3] {
        let ds_seed = {
            // same derivation as the harness
            let (pairs, tests) = build_dataset(&dataset, seed).unwrap();
            (pairs, tests)
        };
        let (pairs, tests) = ds_seed;
        print!("seed {seed}: ");
        for rounds in [25usize, 50, 100, 150, 200, 300, 400] {
            let mut tc = TrainConfig::new(rounds, seed);
            tc.hyper.learning_rate = eta;
            tc.init_scale = init;
            let out = train(&topology, &pairs, &tc).unwrap();
            let net: &NetworkChannel = &out.network;
            let rep = validation(net, &tests, 1).unwrap();
            print!("r{rounds}:{:.3} ", rep.f_val_bar);
        }
        println!();
    }
    let _ = config;
}
