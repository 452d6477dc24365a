//! Property tests for the statevector engine and the region maps.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use cobitsim_core::protocol::otp;
use cobitsim_core::qstate::{
    apply_local, permute_registers, trace_distance, Party, QuantumState, RegisterLayout,
};
use cobitsim_core::resource::{map_cce_cocoe, map_diamond, Region};

fn three_qubit_layout() -> RegisterLayout {
    RegisterLayout::of(&[
        ("A1", Party::Alice, 1),
        ("A2", Party::Alice, 1),
        ("B1", Party::Bob, 1),
    ])
    .unwrap()
}

prop_compose! {
    fn arb_state()(raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8)) -> QuantumState {
        let mut amps: Vec<Complex64> = raw.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-6 {
            amps[0] = Complex64::ONE;
        } else {
            for a in &mut amps {
                *a /= norm;
            }
        }
        QuantumState::from_amplitudes(three_qubit_layout(), amps).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_distance_is_a_metric(a in arb_state(), b in arb_state(), c in arb_state()) {
        let dab = trace_distance(&a, &b).unwrap();
        let dba = trace_distance(&b, &a).unwrap();
        prop_assert!((dab - dba).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&dab));
        let dac = trace_distance(&a, &c).unwrap();
        let dcb = trace_distance(&c, &b).unwrap();
        prop_assert!(dab <= dac + dcb + 1e-9);
    }

    #[test]
    fn otp_is_an_involution(state in arb_state()) {
        let layout = RegisterLayout::of(&[
            ("m", Party::Alice, 1),
            ("k", Party::Alice, 1),
            ("x", Party::Bob, 1),
        ]).unwrap();
        let state = QuantumState::from_amplitudes(layout, state.amplitudes().to_vec()).unwrap();
        let twice = otp(&otp(&state, "m", "k").unwrap(), "m", "k").unwrap();
        for (a, b) in twice.amplitudes().iter().zip(state.amplitudes()) {
            prop_assert!((a - b).norm() == 0.0);
        }
    }

    #[test]
    fn permutation_round_trips_exactly(state in arb_state()) {
        let p = permute_registers(&state, &["B1", "A1", "A2"]).unwrap();
        let back = permute_registers(&p, &["A1", "A2", "B1"]).unwrap();
        prop_assert_eq!(back.amplitudes(), state.amplitudes());
    }

    #[test]
    fn hadamard_preserves_norm(state in arb_state()) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(s, 0.0), Complex64::new(s, 0.0),
            Complex64::new(s, 0.0), Complex64::new(-s, 0.0),
        ]);
        let out = apply_local(&state, &h, &["A2"]).unwrap();
        let norm: f64 = out.amplitudes().iter().map(|a| a.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diamond_paths_commute(
        q1 in -8i32..8, q2 in -8i32..8, e in -8i32..8
    ) {
        use Region::*;
        let p = [q1 as f64 / 2.0, q2 as f64 / 2.0, e as f64 / 2.0];
        let via_coqe = map_diamond(map_diamond(p, Qqe, CoQe).unwrap(), CoQe, CoCoE).unwrap();
        let via_qcoe = map_diamond(map_diamond(p, Qqe, QCoE).unwrap(), QCoE, CoCoE).unwrap();
        prop_assert_eq!(via_coqe, via_qcoe);
        prop_assert_eq!(map_diamond(via_coqe, CoCoE, Qqe).unwrap(), p);
    }

    #[test]
    fn thm12_round_trips(c1 in -8i32..8, c2 in -8i32..8, e in -8i32..8) {
        let p = [c1 as f64 / 4.0, c2 as f64 / 4.0, e as f64 / 4.0];
        prop_assert_eq!(map_cce_cocoe(map_cce_cocoe(p, true), false), p);
    }
}
