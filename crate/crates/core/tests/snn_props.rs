use proptest::prelude::*;

use tespar_snn::mlp::{Activation, MlpModel};
use tespar_snn::rng;
use tespar_snn::robustness::median;
use tespar_snn::snn::{encode_spikes, if_step, run_snn, run_snn_scaled, NeuronState, SnnConfig};
use tespar_snn::tespar::FeatureVector;

proptest! {
    #[test]
    fn runs_are_deterministic(seed: u64, counts in prop::collection::vec(0u32..50, 12)) {
        let m = MlpModel::<f64>::init(&[12, 9, 2], true, Activation::Relu, seed).unwrap();
        let fv = FeatureVector::from_counts(counts);
        let cfg = SnnConfig { seed, n_steps: 40, v_t: 0.5, record_trace: true, ..SnnConfig::default() };
        let a = run_snn(&m, &fv, &cfg).unwrap();
        prop_assert_eq!(&a, &run_snn(&m, &fv, &cfg).unwrap());
        for (k, layer) in a.step_counts.iter().enumerate() {
            prop_assert!(layer.iter().zip(&a.layer_sizes).all(|(&c, &n)| c as usize <= n), "step {}", k);
        }
    }

    #[test]
    fn encoding_is_monotone(seed: u64, step in 0usize..1000, gain in 0.1f64..3.0, x in prop::collection::vec(0.0f64..1.0, 1..40), bump in 0.0f64..0.5) {
        let hi: Vec<f64> = x.iter().map(|v| (v + bump).min(1.0)).collect();
        let a = encode_spikes(&x, gain, seed, step);
        let b = encode_spikes(&hi, gain, seed, step);
        prop_assert!(a.iter().zip(&b).all(|(&lo, &up)| !lo || up));
    }

    #[test]
    fn reset_leaves_at_most_one_step_of_charge(
        v0 in -2.0f64..1.0,
        w in prop::collection::vec(-1.0f64..1.0, 1..30),
        mask in prop::collection::vec(any::<bool>(), 30),
        v_t in 0.1f64..2.0,
    ) {
        let cfg = SnnConfig { v_t, ..SnnConfig::default() };
        let incoming = &mask[..w.len()];
        let (s, fired) = if_step(NeuronState { v_mem: v0, spiked: false }, incoming, &w, &cfg).unwrap();
        let step: f64 = w.iter().zip(incoming).filter(|(_, &m)| m).map(|(x, _)| x).sum();
        if fired {
            prop_assert_eq!(s.v_mem, cfg.v_res);
        } else {
            prop_assert!(s.v_mem <= v_t && (s.v_mem - (v0 + step)).abs() < 1e-9);
        }
    }
}

fn agreement(m: &MlpModel<f64>, inputs: &[(Vec<f64>, usize)], n_steps: usize, seed: u64) -> f64 {
    let cfg = SnnConfig { n_steps, v_t: 0.5, seed, ..SnnConfig::default() };
    let hits = inputs
        .iter()
        .enumerate()
        .filter(|(k, (x, want))| {
            let c = SnnConfig { seed: rng::derive(seed, &[*k as u64]), ..cfg.clone() };
            run_snn_scaled(m, x, &c).unwrap().predicted == *want
        })
        .count();
    hits as f64 / inputs.len() as f64
}

#[test]
fn agreement_grows_with_steps() {
    let m = MlpModel::<f64>::init(&[50, 80, 2], true, Activation::Relu, 11).unwrap();
    let mut inputs = Vec::new();
    let mut k = 0u64;
    while inputs.len() < 200 {
        let x: Vec<f64> = (0..50).map(|i| rng::unit(99, &[k, i])).collect();
        k += 1;
        let s = m.forward(&x).unwrap();
        // Strict margin so the float argmax is well defined.
        if (s[0] - s[1]).abs() > 0.05 * s[0].abs().max(s[1].abs()) {
            inputs.push((x, if s[1] > s[0] { 1 } else { 0 }));
        }
    }
    let short: Vec<f64> = (0..5).map(|seed| agreement(&m, &inputs, 10, seed)).collect();
    let long: Vec<f64> = (0..5).map(|seed| agreement(&m, &inputs, 1000, seed)).collect();
    assert!(median(&long) >= median(&short), "n=10 {short:?} n=1000 {long:?}");
}
