//! Property tests of the library's structural invariants: random inputs
//! rather than curated fixtures, with case counts kept desk-scale.

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use crackq::ansatz::{build_ansatz, fidelity, project_out};
use crackq::decomp::{
    build_operator, dirichlet_projector_terms, expectation_grouped, measurement_groups,
};
use crackq::fem::assemble_k;
use crackq::problem::ProblemSpec;
use crackq::qsim::{apply_program, mitigate_threshold, sample, Gate, ShotConfig};
use crackq::remesh::{
    duplicate_index_map, duplicate_state, inner_projection_holds, node_positions,
    EncodingDescriptor,
};
use crackq::tensor::{expectation_direct, materialize_sum, StateVector};

fn arb_state(n: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n).prop_filter_map(
        "needs nonzero norm",
        move |pairs| {
            let amps: Vec<C64> = pairs.iter().map(|&(re, im)| C64::new(re, im)).collect();
            let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
            (norm > 1e-6).then(|| StateVector::from_amplitudes(n, amps).unwrap().normalized())
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The tensor decomposition reproduces element-wise assembly for any
    /// admissible Poisson ratio and small plate size.
    #[test]
    fn decomposition_matches_assembly(
        n_x in 2usize..4,
        n_y in 1usize..3,
        nu in 0.0f64..0.495,
    ) {
        let spec = ProblemSpec::half_plate(n_x, n_y, nu);
        let k = assemble_k(&spec).unwrap();
        let m = materialize_sum(&build_operator(&spec).unwrap()).unwrap();
        for j in 0..k.ncols() {
            for i in 0..k.nrows() {
                prop_assert!((m[(i, j)] - C64::from(k[(i, j)])).norm() <= 1e-12);
            }
        }
    }

    /// Grouped measurement and direct dense contraction agree on any state.
    #[test]
    fn grouped_equals_direct(state in arb_state(5)) {
        let spec = ProblemSpec::half_plate(2, 2, 0.3);
        let op = build_operator(&spec).unwrap();
        let groups = measurement_groups(&op).unwrap();
        let (grouped, se) = expectation_grouped(&state, &groups, &ShotConfig::exact()).unwrap();
        let direct = expectation_direct(&state, &op).unwrap();
        prop_assert!(se == 0.0);
        prop_assert!((grouped - direct.re).abs() <= 1e-10);
        prop_assert!(direct.im.abs() <= 1e-10);
    }

    /// Gate programs are norm-preserving.
    #[test]
    fn programs_preserve_norm(
        state in arb_state(4),
        angles in prop::collection::vec(-3.2f64..3.2, 4),
    ) {
        let program = vec![
            Gate::H(0),
            Gate::Ry(1, angles[0]),
            Gate::Cnot { control: 0, target: 2 },
            Gate::Ry(3, angles[1]),
            Gate::Swap(1, 3),
            Gate::Ry(0, angles[2]),
            Gate::Cnot { control: 3, target: 1 },
            Gate::Ry(2, angles[3]),
        ];
        let out = apply_program(&state, &program).unwrap();
        let norm: f64 = out.amps.iter().map(|a| a.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() <= 1e-12);
    }

    /// The ansatz reference angles realize the identity on any base state.
    #[test]
    fn ansatz_identity_at_reference(
        state in arb_state(5),
        layers in 1usize..5,
        seed in 0u64..1000,
    ) {
        let ansatz = build_ansatz(5, layers, (0..5).collect(), seed);
        let out = ansatz.apply(&state, &ansatz.theta0).unwrap();
        prop_assert!((fidelity(&state, &out).unwrap() - 1.0).abs() <= 1e-12);
    }

    /// Dirichlet projection is idempotent and supported off the constraints.
    #[test]
    fn projection_idempotent(state in arb_state(5)) {
        let spec = ProblemSpec::half_plate(2, 2, 0.3);
        let proj = dirichlet_projector_terms(spec.n(), &spec.boundary_conditions()).unwrap();
        let once = project_out(&state, &proj).unwrap();
        let twice = project_out(&once, &proj).unwrap();
        for (a, b) in once.amps.iter().zip(&twice.amps) {
            prop_assert!((a - b).norm() <= 1e-14);
        }
        for bc in spec.boundary_conditions() {
            for i in bc.indices() {
                prop_assert!(once.amps[i].norm() <= 1e-14);
            }
        }
    }

    /// Duplication preserves the norm and matches the index-map oracle.
    #[test]
    fn duplication_matches_oracle(state in arb_state(5)) {
        let enc = EncodingDescriptor::from_problem(&ProblemSpec::half_plate(2, 2, 0.3));
        let circuit = duplicate_state(&state, &enc).unwrap();
        let oracle = duplicate_index_map(&state, &enc).unwrap();
        let norm: f64 = circuit.amps.iter().map(|a| a.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() <= 1e-12);
        for (a, b) in circuit.amps.iter().zip(&oracle.amps) {
            prop_assert!((a - b).norm() <= 1e-12);
        }
    }

    /// Mitigation keeps a normalized distribution with no sub-threshold mass.
    #[test]
    fn mitigation_normalizes(
        probs in prop::collection::vec(0.0f64..1.0, 2..16),
        tau in 0.0005f64..0.05,
    ) {
        let total: f64 = probs.iter().sum();
        prop_assume!(total > 0.0);
        let dist: std::collections::BTreeMap<usize, f64> =
            probs.iter().enumerate().map(|(i, p)| (i, p / total)).collect();
        match mitigate_threshold(&dist, tau) {
            Ok(out) => {
                prop_assert!((out.values().sum::<f64>() - 1.0).abs() <= 1e-12);
                prop_assert!(out.values().all(|&p| p > 0.0));
                // every surviving key had mass >= tau before renormalization
                prop_assert!(out.keys().all(|k| dist[k] >= tau));
            }
            Err(_) => prop_assert!(dist.values().all(|&p| p < tau)),
        }
    }

    /// Sampling returns exactly the requested number of shots, supported on
    /// the state's nonzero amplitudes.
    #[test]
    fn sampling_conserves_shots(state in arb_state(4), shots in 1u64..5000, seed in 0u64..100) {
        let counts = sample(&state, shots, seed);
        prop_assert_eq!(counts.values().sum::<u64>(), shots);
        for (&k, _) in &counts {
            prop_assert!(state.amps[k].norm_sqr() > 0.0);
        }
    }

    /// Rescaled node positions stay within the domain, are strictly
    /// increasing, and every coarse node lies between its two successors.
    #[test]
    fn node_positions_nested(q in 1usize..9, length in 0.1f64..10.0) {
        let pos = node_positions(q, length);
        prop_assert_eq!(pos.len(), 1 << q);
        prop_assert!(pos[0] == 0.0);
        prop_assert!((pos[pos.len() - 1] - length).abs() <= 1e-12);
        for w in pos.windows(2) {
            prop_assert!(w[1] > w[0]);
        }
        prop_assert!(inner_projection_holds(q, length));
    }
}
