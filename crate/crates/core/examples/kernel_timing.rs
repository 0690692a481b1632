//! Per-gate kernel timings on a 20-qubit state.
//!
//! cargo run --release -p xeb-core --example kernel_timing

use std::time::Instant;

use xeb_core::circuit::GateKind;
use xeb_core::statevector::StateVector;

const N: usize = 20;
const REPS: u32 = 10;

fn ms_per_gate(f: impl Fn()) -> f64 {
    let t = Instant::now();
    for _ in 0..REPS {
        f();
    }
    t.elapsed().as_secs_f64() * 1e3 / REPS as f64
}

fn main() {
    let state = std::cell::RefCell::new(StateVector::new(N).expect("state"));
    for kind in [GateKind::H, GateKind::X2, GateKind::Y2, GateKind::T] {
        let mut line = format!("{kind:>3}:");
        for q in [0, 3, 8, 12, 19] {
            let t = ms_per_gate(|| state.borrow_mut().apply_single_qubit(kind, q).expect("gate"));
            line += &format!("  q{q} {t:.2} ms");
        }
        println!("{line}");
    }
    for (a, b) in [(0, 1), (3, 7), (12, 19)] {
        let t = ms_per_gate(|| state.borrow_mut().apply_cz(a, b).expect("cz"));
        println!(" cz {a},{b}: {t:.2} ms");
    }
}
