use scenesynth::augmix::{sample_mix, MixConfig, OpSet};
use scenesynth::seed;

#[test]
fn dirichlet_weights_average_one_third() {
    let cfg = MixConfig::with_set(OpSet::Soft);
    let n = 10_000u64;
    let mut sums = [0.0f64; 3];
    for s in 0..n {
        let d = sample_mix(seed::derive(0xD1, s), &cfg).unwrap();
        for (acc, w) in sums.iter_mut().zip(&d.weights) {
            *acc += w;
        }
    }
    for (k, total) in sums.iter().enumerate() {
        let mean = total / n as f64;
        assert!((0.30..=0.37).contains(&mean), "chain {k}: mean weight {mean}");
    }
}

#[test]
fn chain_count_follows_config() {
    for n_chains in 1..=5 {
        let cfg = MixConfig {
            n_chains,
            ..MixConfig::with_set(OpSet::Hard)
        };
        let d = sample_mix(3, &cfg).unwrap();
        assert_eq!((d.chains.len(), d.weights.len()), (n_chains, n_chains));
    }
}
