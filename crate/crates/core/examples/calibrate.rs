use qae_core::harness::*;
use qae_core::noise::{BrownianSpec, NoiseStage, SpinFlipSpec};
use qae_core::train::NadamHyper;
use std::time::Instant;

fn base(name: &str, topo: TopologySpec, stack: usize, m: usize, stages: Vec<NoiseStage>,
        param: SweepParameter, rounds: usize, pairs: usize, tests: usize, seeds: Vec<u64>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        topology: topo,
        stack_times: stack,
        num_qubits: m,
        train_phases: vec![TrainPhase { phase: 0.0, pairs }],
        test_states: TestRule::Fixed { phases: vec![TestPhase { phase: 0.0, count: tests }] },
        noise_stages: stages,
        sweep: SweepSpec { parameter: param, values: vec![0.0] },
        rounds,
        optimizer: NadamHyper::default(),
        init_scale: 0.5,
        gradient_mode: Default::default(),
        seeds,
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(|s| s.as_str()).unwrap_or("fig2a");

    match which {
        "fig2a" => {
            // dense [4,2,1,2,4] at p in {0.1,0.2,0.3}, 1 seed to start
            let config = base(
                "fig2a-dense",
                TopologySpec::Dense { widths: vec![4, 2, 1, 2, 4] },
                1, 4,
                vec![NoiseStage::SpinFlip(SpinFlipSpec::new(0.0).unwrap())],
                SweepParameter::P, 200, 200, 200, vec![1],
            );
            for p in [0.1, 0.2, 0.3] {
                let t = Instant::now();
                let r = run_point(&config, p).unwrap();
                let s = &r.record.per_seed[0];
                println!("p={p}: F_bar={:.4} F_val={:.4} dF_val={:.4} cost0={:.4} costN={:.4}  [{:?}]",
                    s.f_bar, s.f_val_bar, s.df_val,
                    r.per_seed_cost_trajectories[0][0],
                    r.per_seed_cost_trajectories[0].last().unwrap(), t.elapsed());
            }
        }
        "fig2a414" => {
            let config = base(
                "fig2a-stacked",
                TopologySpec::Dense { widths: vec![4, 1, 4] },
                2, 4,
                vec![NoiseStage::SpinFlip(SpinFlipSpec::new(0.0).unwrap())],
                SweepParameter::P, 200, 200, 200, vec![1],
            );
            for p in [0.1, 0.2, 0.3] {
                let t = Instant::now();
                let r = run_point(&config, p).unwrap();
                let s = &r.record.per_seed[0];
                println!("p={p}: F_bar={:.4} F_val={:.4} dF_val={:.4} costN={:.4}  [{:?}]",
                    s.f_bar, s.f_val_bar, s.df_val,
                    r.per_seed_cost_trajectories[0].last().unwrap(), t.elapsed());
            }
        }
        "fig3" => {
            let config = base(
                "fig3",
                TopologySpec::Dense { widths: vec![4, 2, 1, 2, 4] },
                1, 4,
                vec![
                    NoiseStage::SpinFlip(SpinFlipSpec::new(0.2).unwrap()),
                    NoiseStage::Brownian(BrownianSpec::new(0.3, 20).unwrap()),
                ],
                SweepParameter::P, 200, 200, 200, vec![1],
            );
            let t = Instant::now();
            let r = run_point(&config, 0.2).unwrap();
            let s = &r.record.per_seed[0];
            println!("fig3: F_bar={:.4} dF={:.4} F_val={:.4} dF_val={:.4} costN={:.4}  [{:?}]",
                s.f_bar, s.df, s.f_val_bar, s.df_val,
                r.per_seed_cost_trajectories[0].last().unwrap(), t.elapsed());
        }
        "fig4a" => {
            let mut config = base(
                "fig4a",
                TopologySpec::Dense { widths: vec![3, 1, 3] },
                1, 3,
                vec![NoiseStage::SpinFlip(SpinFlipSpec::new(0.0).unwrap())],
                SweepParameter::P, 200, 0, 0, vec![1],
            );
            config.train_phases = vec![
                TrainPhase { phase: 0.0, pairs: 100 },
                TrainPhase { phase: std::f64::consts::PI, pairs: 100 },
            ];
            config.test_states = TestRule::Fixed { phases: vec![
                TestPhase { phase: 0.0, count: 100 },
                TestPhase { phase: std::f64::consts::PI, count: 100 },
            ]};
            for p in [0.3, 0.4] {
                let t = Instant::now();
                let r = run_point(&config, p).unwrap();
                let s = &r.record.per_seed[0];
                println!("p={p}: F_bar={:.4} F_val={:.4} dF_val={:.4} costN={:.4}  [{:?}]",
                    s.f_bar, s.f_val_bar, s.df_val,
                    r.per_seed_cost_trajectories[0].last().unwrap(), t.elapsed());
            }
        }
        "fig4b" => {
            let mut config = base(
                "fig4b",
                TopologySpec::Dense { widths: vec![3, 1, 3] },
                1, 3,
                vec![NoiseStage::SpinFlip(SpinFlipSpec::new(0.0).unwrap())],
                SweepParameter::P, 200, 0, 0, vec![1],
            );
            config.train_phases = (0..4).map(|i| TrainPhase {
                phase: i as f64 * std::f64::consts::PI / 3.0, pairs: 100 }).collect();
            config.test_states = TestRule::RandomOpenInterval { count: 200 };
            for p in [0.0, 0.2] {
                let t = Instant::now();
                let r = run_point(&config, p).unwrap();
                let s = &r.record.per_seed[0];
                println!("p={p}: F_bar={:.4} F_val={:.4} F_val_Jle1={:?} n_Jle1={:?}  [{:?}]",
                    s.f_bar, s.f_val_bar, s.f_val_bar_jle1, s.n_tests_jle1, t.elapsed());
            }
        }
        "fig5" => {
            let eta: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.01);
            let mut config = base(
                "fig5",
                TopologySpec::Dense { widths: vec![4, 1, 4] },
                2, 4,
                vec![NoiseStage::SpinFlip(SpinFlipSpec::new(0.0).unwrap())],
                SweepParameter::P, 75, 1500, 1500, vec![1],
            );
            config.optimizer.learning_rate = eta;
            let t = Instant::now();
            let r = run_point(&config, 0.4).unwrap();
            let s = &r.record.per_seed[0];
            println!("fig5 eta={eta}: F_bar={:.4} F_val={:.4} costN={:.4}  [{:?}]",
                s.f_bar, s.f_val_bar,
                r.per_seed_cost_trajectories[0].last().unwrap(), t.elapsed());
        }
        "fig7" => {
            let config = base(
                "fig7",
                TopologySpec::Sparse42124 {},
                1, 4,
                vec![NoiseStage::SpinFlip(SpinFlipSpec::new(0.0).unwrap())],
                SweepParameter::P, 200, 200, 200, vec![1],
            );
            for p in [0.1, 0.2, 0.3] {
                let t = Instant::now();
                let r = run_point(&config, p).unwrap();
                let s = &r.record.per_seed[0];
                println!("p={p}: F_bar={:.4} F_val={:.4} dF_val={:.4} costN={:.4}  [{:?}]",
                    s.f_bar, s.f_val_bar, s.df_val,
                    r.per_seed_cost_trajectories[0].last().unwrap(), t.elapsed());
            }
        }
        other => eprintln!("unknown scenario {other}"),
    }
}
