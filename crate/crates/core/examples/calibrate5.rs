use qae_core::harness::*;
use qae_core::linops::{fidelity_pure, hermitian_eigen, CMatrix, StateVector, C64};
use qae_core::noise::{BrownianSpec, NoiseStage, SpinFlipSpec};
use qae_core::states::{build_dataset, ghz, GhzSpec};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let q: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0.3);
    let p: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.2);
    let pairs_n: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(200);
    let mut stages = vec![];
    if p > 0.0 { stages.push(NoiseStage::SpinFlip(SpinFlipSpec::new(p).unwrap())); }
    stages.push(NoiseStage::Brownian(BrownianSpec::new(q, 20).unwrap()));
    let spec = qae_core::states::DatasetSpec {
        train_targets: vec![(GhzSpec::new(4, 0.0).unwrap(), pairs_n)],
        test_targets: qae_core::states::TestTargets::Fixed(vec![(GhzSpec::new(4, 0.0).unwrap(), 1)]),
        noise: qae_core::noise::NoiseSpec::new(stages).unwrap(),
    };
    for seed in [1u64, 2, 3] {
        let (pairs, _) = build_dataset(&spec, seed).unwrap();
        let mut s = CMatrix::zeros(16, 16);
        let mut n = 0.0;
        for pr in &pairs {
            for st in [&pr.input, &pr.reference] {
                let proj = st.projector();
                s += proj.entries();
                n += 1.0;
            }
        }
        s /= C64::new(n, 0.0);
        let (eigs, vecs) = hermitian_eigen(&s);
        let mut order: Vec<usize> = (0..16).collect();
        order.sort_by(|&a, &b| eigs[b].total_cmp(&eigs[a]));
        let top = order[0];
        let v = StateVector::new(vecs.column(top).into_owned()).unwrap();
        let target = ghz(&GhzSpec::new(4, 0.0).unwrap()).unwrap();
        let overlap = fidelity_pure(&v.projector(), &target).unwrap();
        println!("seed {seed}: top eig {:.4} (next {:.4}), |<GHZ|v>|^2 = {:.4}",
            eigs[top], eigs[order[1]], overlap);
    }
}
