use proptest::prelude::*;

use tespar_snn::hwsim::{lzc_scan, FixedIfNeuron, Lfsr11, SliceRegisterFile, SpikeWord, WeightRom, SLICE_COUNTER_MAX};
use tespar_snn::robustness::HW_FORMAT;

proptest! {
    #[test]
    fn lzc_emits_each_set_lane_once_in_order(lanes in prop::collection::vec(any::<bool>(), 1..200)) {
        let w = SpikeWord::from_bools(&lanes);
        let addrs = lzc_scan(&w);
        prop_assert_eq!(addrs.len() as u32, w.popcount());
        prop_assert!(addrs.windows(2).all(|p| p[0] < p[1]));
        let want: Vec<usize> = lanes.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
        prop_assert_eq!(addrs, want);
        prop_assert_eq!(w.to_bools(), lanes);
    }

    #[test]
    fn lfsr_state_stays_in_range(seed in 1u16..=2047, steps in 0usize..5000) {
        let mut l = Lfsr11::new(seed).unwrap();
        for _ in 0..steps {
            l.advance();
            prop_assert!((1..=2047).contains(&l.state()));
        }
    }

    #[test]
    fn slice_counters_saturate(updates in prop::collection::vec((0usize..10, 0usize..5), 0..200), bulk in 0usize..9000) {
        let mut f = SliceRegisterFile::default();
        for _ in 0..bulk {
            f.slice_update(3, 2).unwrap();
        }
        let extra = updates.iter().filter(|&&u| u == (3, 2)).count();
        for (d, s) in updates {
            f.slice_update(d, s).unwrap();
        }
        prop_assert!(f.counters().iter().all(|&c| c <= SLICE_COUNTER_MAX));
        prop_assert_eq!(f.get(3, 2).unwrap() as usize, (bulk + extra).min(SLICE_COUNTER_MAX as usize));
    }

    #[test]
    fn accumulator_never_wraps(codes in prop::collection::vec(-512i16..=511, 0..400)) {
        let mut n = FixedIfNeuron::default();
        let mut exact: i64 = 0;
        for c in codes {
            n.integrate(c);
            exact = (exact + c as i64).clamp(i16::MIN as i64, i16::MAX as i64);
            prop_assert_eq!(n.acc as i64, exact);
        }
    }

    #[test]
    fn rom_round_trips_through_layer(fan_in in 1usize..8, fan_out in 1usize..8, seed: u64) {
        let codes: Vec<i16> = (0..fan_in * fan_out)
            .map(|k| (tespar_snn::rng::derive(seed, &[k as u64]) % 1024) as i16 - 512)
            .collect();
        let rom = WeightRom::from_codes(fan_in, fan_out, HW_FORMAT, codes).unwrap();
        let back = WeightRom::from_layer(&rom.to_layer::<f64>(), HW_FORMAT).unwrap();
        prop_assert_eq!(&back, &rom);
        prop_assert_eq!(rom.to_hex().lines().count(), fan_in);
    }
}
