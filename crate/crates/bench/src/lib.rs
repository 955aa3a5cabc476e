//! Shared inputs for the criterion benches.

use ehpc_core::{EnergyTrace, SystemParams};

pub fn paper_params() -> SystemParams {
    SystemParams::paper_defaults()
}

/// Deterministic pseudo-random arrivals in `1..=10`, `t` slots.
pub fn synthetic_trace(t: usize, salt: u64) -> EnergyTrace {
    let mut state = 0x9e37_79b9_7f4a_7c15u64 ^ salt;
    let e = (0..t)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state % 10 + 1) as f64
        })
        .collect();
    EnergyTrace::new(e).expect("arrivals are positive")
}
