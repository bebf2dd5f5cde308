use memthermo::calibration::ThermometerTable;
use memthermo::device::{
    apply_pulse_train, phi_for_state, read_resistance, retention_run, thermionic_current,
    DeviceState, Pulse, SwitchingParams, ThermionicParams, R_CEILING, R_FLOOR,
};
use memthermo::homeostasis::{neuron_step, FeedforwardMap, NeuronConfig, NeuronSystem, N_SYNAPSES};
use memthermo::presets::{default_fit, DeviceLevel};
use memthermo::thermal::{scrambled_schedule, ThermalPlant};
use proptest::prelude::*;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

fn setpoint() -> impl Strategy<Value = f64> {
    (0..=6u32).prop_map(|k| 300.0 + 10.0 * k as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn read_out_falls_with_temperature(log_r in R_FLOOR.log10()..R_CEILING.log10(), t in 300.0..359.0f64, dt in 0.01..1.0f64) {
        let fit = default_fit();
        let s = DeviceState::new(10f64.powf(log_r)).unwrap();
        prop_assert!(read_resistance(&s, &fit, t + dt) < read_resistance(&s, &fit, t));
    }

    #[test]
    fn barrier_rises_with_resistance(a in 3.0..7.5f64, b in 3.0..7.5f64) {
        let fit = default_fit();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(phi_for_state(10f64.powf(lo), &fit) <= phi_for_state(10f64.powf(hi), &fit));
    }

    #[test]
    fn split_train_equals_whole_train(
        level in 0..5usize,
        v in prop_oneof![0.5..1.6f64, -1.6..-0.5f64],
        t in 300.0..360.0f64,
        n1 in 1..150u64,
        n2 in 1..150u64,
    ) {
        let fit = default_fit();
        let p = SwitchingParams::default();
        let s = DeviceLevel::ALL[level].state();
        let (whole, _) = apply_pulse_train(&s, Pulse::new(v, 1e-4, n1 + n2), t, &fit, &p).unwrap();
        let (half, _) = apply_pulse_train(&s, Pulse::new(v, 1e-4, n1), t, &fit, &p).unwrap();
        let (split, _) = apply_pulse_train(&half, Pulse::new(v, 1e-4, n2), t, &fit, &p).unwrap();
        prop_assert!(close(whole.r_persistent(), split.r_persistent(), 1e-12));
        prop_assert!(close(whole.r_eff(), split.r_eff(), 1e-12));
        prop_assert_eq!(whole.pulse_count(), split.pulse_count());
    }

    #[test]
    fn sub_threshold_pulses_are_pure(level in 0..5usize, v in -0.49..0.49f64, n in 1..5000u64, t in 300.0..360.0f64) {
        let fit = default_fit();
        let p = SwitchingParams::default();
        let s = DeviceLevel::ALL[level].state();
        let (after, reads) = apply_pulse_train(&s, Pulse::new(v, 1e-4, n), t, &fit, &p).unwrap();
        prop_assert_eq!(after.r_eff(), s.r_eff());
        prop_assert!(reads.iter().all(|&r| r == read_resistance(&s, &fit, t)));
    }

    #[test]
    fn state_stays_inside_limits(level in 0..5usize, v in prop_oneof![0.5..3.0f64, -3.0..-0.5f64], n in 1..2000u64) {
        let fit = default_fit();
        let p = SwitchingParams::default();
        let (after, _) = apply_pulse_train(&DeviceLevel::ALL[level].state(), Pulse::new(v, 1e-4, n), 330.0, &fit, &p).unwrap();
        prop_assert!(after.r_eff() >= R_FLOOR && after.r_eff() <= R_CEILING);
    }

    #[test]
    fn retention_relaxes_monotonically(n in 1..400u64, reads in 1..300usize) {
        let fit = default_fit();
        let p = SwitchingParams::default();
        let s = DeviceLevel::L1.state();
        let (programmed, _) = apply_pulse_train(&s, Pulse::new(1.5, 1e-4, n), 330.0, &fit, &p).unwrap();
        let (relaxed, trace) = retention_run(&programmed, reads, 1.0, 330.0, &fit, &p).unwrap();
        prop_assert!(trace.windows(2).all(|w| w[1].1 <= w[0].1));
        prop_assert!(relaxed.r_eff() > s.r_eff());
        prop_assert!(relaxed.r_eff() <= programmed.r_eff());
    }

    #[test]
    fn plant_substepping_is_exact(from in setpoint(), to in setpoint(), dt in 0.1..5000.0f64, tau_dev in 30.0..1000.0f64) {
        let mut plant = ThermalPlant::new(from, 180.0, tau_dev).unwrap();
        plant.set_setpoint(to).unwrap();
        let one = plant.step(dt).unwrap();
        let two = plant.step(dt / 2.0).unwrap().step(dt / 2.0).unwrap();
        prop_assert!(close(one.t_air(), two.t_air(), 1e-12));
        prop_assert!(close(one.t_dev(), two.t_dev(), 1e-12));
    }

    #[test]
    fn plant_never_overshoots(points in prop::collection::vec((setpoint(), 1.0..2000.0f64), 1..8)) {
        let mut plant = ThermalPlant::new(300.0, 180.0, 720.0).unwrap();
        let (mut lo, mut hi) = (300.0f64, 300.0f64);
        for (sp, dt) in points {
            plant.set_setpoint(sp).unwrap();
            lo = lo.min(sp);
            hi = hi.max(sp);
            plant = plant.step(dt).unwrap();
            prop_assert!(plant.t_dev() >= lo - 1e-9 && plant.t_dev() <= hi + 1e-9);
        }
    }

    #[test]
    fn schedules_visit_ends_twice(seed in any::<u64>()) {
        let s = scrambled_schedule(seed, 3600.0).unwrap();
        let mut sp = s.setpoints();
        sp.sort_by(f64::total_cmp);
        prop_assert_eq!(sp, vec![300.0, 300.0, 310.0, 320.0, 330.0, 340.0, 350.0, 360.0, 360.0]);
    }

    #[test]
    fn thermometer_is_monotone(level in 0..5usize, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let fit = default_fit();
        let table = ThermometerTable::new(&fit, DeviceLevel::ALL[level].r_ref(), 0.05).unwrap();
        let (lo, hi) = table.band();
        let ra = lo + a * (hi - lo);
        let rb = lo + b * (hi - lo);
        let (ta, tb) = (table.invert(ra).unwrap().kelvin, table.invert(rb).unwrap().kelvin);
        if ra < rb {
            prop_assert!(ta >= tb);
        } else {
            prop_assert!(tb >= ta);
        }
    }

    #[test]
    fn current_follows_bias_sign_and_rises_when_hot(v in -0.45..0.45f64, t in 300.0..359.0f64) {
        prop_assume!(v != 0.0);
        let p = ThermionicParams::new(1e-6, 0.3, 0.05, 0.02).unwrap();
        let i = thermionic_current(v, t, &p).unwrap();
        prop_assert_eq!(i.signum(), v.signum());
        prop_assert!(thermionic_current(v, t + 1.0, &p).unwrap().abs() > i.abs());
    }

    #[test]
    fn feedforward_is_monotone(kappa in 0.0..300.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let m = FeedforwardMap::affine(kappa).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(m.setpoint(lo) <= m.setpoint(hi));
        prop_assert!((300.0..=360.0).contains(&m.setpoint(hi)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn accumulator_stays_below_threshold(inputs in prop::collection::vec(prop::collection::vec(0.0..=1.0f64, N_SYNAPSES), 1..60)) {
        let config = NeuronConfig { map: FeedforwardMap::Affine { kappa: 120.0 }, ..Default::default() };
        let mut s = NeuronSystem::new(&config, &default_fit(), 5).unwrap();
        for x in &inputs {
            neuron_step(&mut s, x).unwrap();
            prop_assert!(s.accumulator() >= 0.0 && s.accumulator() < s.theta());
        }
    }
}
