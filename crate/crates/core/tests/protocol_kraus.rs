//! The heralded map produced by the full cavity simulation, restricted to
//! the qubits, is the Kraus operator the graph layer assumes.

use heralded::graphstate::{DenseQubitState, EoOutcome, PhysicalOp};
use heralded::protocol::{run_eo_exact, ProtocolConfig, QubitState};
use heralded::C64;

fn qubit(up: (f64, f64), down: (f64, f64)) -> QubitState {
    QubitState { up: C64::new(up.0, up.1), down: C64::new(down.0, down.1) }
}

#[test]
fn heralded_map_matches_graph_kraus() {
    let inputs = [
        (qubit((0.6, 0.0), (0.8, 0.0)), qubit((0.3, 0.1), (0.2, -0.9))),
        (QubitState::plus(), qubit((0.9, 0.0), (0.0, 0.43))),
        (qubit((0.1, 0.7), (0.7, 0.0)), QubitState::plus()),
    ];
    for (a, b) in inputs {
        let config = ProtocolConfig { initial: [a, b], ..ProtocolConfig::default() };
        let summary = run_eo_exact(&config).unwrap();
        let heralded: Vec<_> = summary.outcomes.iter().filter(|r| r.success).collect();
        assert_eq!(heralded.len(), 4);
        for r in heralded {
            let sign = r.sign.unwrap();
            // Same register, replayed with the graph-layer Kraus operator.
            let amps = vec![a.up * b.up, a.up * b.down, a.down * b.up, a.down * b.down];
            let mut dense = DenseQubitState::from_amplitudes(vec![0, 1], amps).unwrap();
            dense.normalize().unwrap();
            dense.apply_op(&PhysicalOp::Eo { a: 1, b: 0, outcome: EoOutcome::Success { sign } }).unwrap();
            // Dense bit order is (q1 q0) = (arm A, arm B): index 2·q_A + q_B.
            let v = nalgebra::DVector::from_vec(dense.amplitudes().to_vec());
            let overlap = r.final_state.overlap(&v);
            assert!(overlap > 1.0 - 1e-9, "{:?}: overlap {overlap}", r.outcome);
        }
    }
}
