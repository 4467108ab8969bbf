use proptest::prelude::*;

use tespar_snn::mlp::{Activation, MlpModel};
use tespar_snn::robustness::{perturb_model, quantize, FixedPointFormat, PerturbMode, PerturbSpec, Rounding};

fn format() -> impl Strategy<Value = FixedPointFormat> {
    (0u32..6, 0u32..12).prop_map(|(i, f)| FixedPointFormat::new(i, f).unwrap())
}

proptest! {
    #[test]
    fn nearest_error_is_half_a_step(fmt in format(), w in -70.0f64..70.0) {
        let (q, code) = quantize(w, fmt, Rounding::Nearest);
        prop_assert!(code >= fmt.min_code() && code <= fmt.max_code());
        prop_assert_eq!(q, fmt.value_of(code));
        if w >= fmt.min_value() && w <= fmt.max_value() {
            prop_assert!((q - w).abs() <= 2f64.powi(-(fmt.frac_bits as i32) - 1));
        }
    }

    #[test]
    fn truncation_rounds_down(fmt in format(), w in -70.0f64..70.0) {
        let (q, _) = quantize(w, fmt, Rounding::Truncate);
        if w >= fmt.min_value() && w <= fmt.max_value() {
            prop_assert!(q <= w && w - q < fmt.step());
        }
    }

    #[test]
    fn quantize_is_monotone(fmt in format(), a in -70.0f64..70.0, b in -70.0f64..70.0, trunc: bool) {
        let mode = if trunc { Rounding::Truncate } else { Rounding::Nearest };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(quantize(lo, fmt, mode).0 <= quantize(hi, fmt, mode).0);
    }

    #[test]
    fn quantize_is_idempotent(fmt in format(), w in -70.0f64..70.0) {
        let (q, c) = quantize(w, fmt, Rounding::Nearest);
        prop_assert_eq!(quantize(q, fmt, Rounding::Truncate), (q, c));
    }

    #[test]
    fn perturbation_keeps_shape_and_zero_bias(seed: u64, sigma in 0.0f64..200.0, trial in 0usize..20, additive: bool) {
        let m = MlpModel::<f64>::init(&[6, 5, 2], true, Activation::Relu, seed).unwrap();
        let mode = if additive { PerturbMode::Additive } else { PerturbMode::Relative };
        let p = perturb_model(&m, &PerturbSpec { sigma_pct: sigma, n_trials: 1, seed, mode }, trial).unwrap();
        prop_assert_eq!(p.dims(), m.dims());
        prop_assert!(p.zero_bias());
        prop_assert!(p.layers().iter().all(|l| l.bias.is_none() && l.weights.len() == l.fan_in * l.fan_out));
        if sigma == 0.0 {
            prop_assert_eq!(p, m);
        }
    }
}
