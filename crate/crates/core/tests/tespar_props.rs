use proptest::prelude::*;

use tespar_snn::tespar::{extract_epochs, extract_fv};

fn signal() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![(-4i32..=4).prop_map(f64::from), -1.0f64..1.0], 0..600)
}

proptest! {
    #[test]
    fn fv_total_is_closed_epoch_count(x in signal()) {
        let fv = extract_fv(&x, 10, 5).unwrap();
        prop_assert_eq!(fv.total(), extract_epochs(&x).len() as u64);
        prop_assert_eq!(fv.values.len(), 50);
    }

    #[test]
    fn fv_ignores_positive_gain(x in signal(), k in prop_oneof![Just(0.001f64), Just(3.0), Just(1024.0), 0.01f64..100.0]) {
        let scaled: Vec<f64> = x.iter().map(|v| v * k).collect();
        prop_assert_eq!(extract_fv(&scaled, 10, 5).unwrap(), extract_fv(&x, 10, 5).unwrap());
    }

    #[test]
    fn epochs_are_well_formed(x in signal()) {
        let mut prev = 0;
        for e in extract_epochs(&x) {
            prop_assert!(e.d >= 1);
            prop_assert!(e.s <= e.d);
            prop_assert_eq!(e.close_index, prev + e.d);
            prev = e.close_index;
        }
    }
}
