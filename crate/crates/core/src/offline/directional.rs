use serde::Serialize;

use super::{EnergyTrace, PowerSchedule};

/// Run of slots `start..end` (zero-based, end exclusive) sharing one power level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub start: usize,
    pub end: usize,
    pub power: f64,
}

/// Band decomposition of single-user directional water-filling.
///
/// Each band ends at the slot minimizing the average arrival since the previous
/// band end; ties go to the latest slot so bands are maximal.
pub fn directional_bands(e: &EnergyTrace) -> Vec<Band> {
    let t = e.len();
    let mut cum = Vec::with_capacity(t + 1);
    cum.push(0.0);
    cum.extend(e.cumulative());

    let mut bands = Vec::new();
    let mut start = 0;
    while start < t {
        let mut best_end = start + 1;
        let mut best = cum[start + 1] - cum[start];
        for end in start + 2..=t {
            let avg = (cum[end] - cum[start]) / (end - start) as f64;
            if avg <= best + 1e-12 * best.abs().max(1.0) {
                if avg < best {
                    best = avg;
                }
                best_end = end;
            }
        }
        // recompute from sums so ties do not leak the tolerance into the power
        let power = (cum[best_end] - cum[start]) / (best_end - start) as f64;
        bands.push(Band { start, end: best_end, power });
        start = best_end;
    }
    bands
}

/// Single-user optimal schedule: constant power within each band.
pub fn directional_wf_single(e: &EnergyTrace) -> PowerSchedule {
    let mut p = vec![0.0; e.len()];
    for b in directional_bands(e) {
        p[b.start..b.end].fill(b.power);
    }
    PowerSchedule::from_vec_unchecked(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_node1_bands() {
        let bands = directional_bands(&EnergyTrace::paper_node1());
        assert_eq!(
            bands,
            vec![
                Band { start: 0, end: 4, power: 4.25 },
                Band { start: 4, end: 6, power: 5.5 },
                Band { start: 6, end: 10, power: 7.75 },
            ]
        );
    }

    #[test]
    fn constant_trace_is_one_band() {
        let e = EnergyTrace::new(vec![3.0; 7]).unwrap();
        assert_eq!(directional_bands(&e), vec![Band { start: 0, end: 7, power: 3.0 }]);
    }

    #[test]
    fn late_energy_stays_late() {
        let e = EnergyTrace::new(vec![0.0, 0.0, 0.0, 6.0]).unwrap();
        assert_eq!(directional_wf_single(&e).as_slice(), &[0.0, 0.0, 0.0, 6.0]);
    }

    #[test]
    fn all_zero_trace() {
        let e = EnergyTrace::new(vec![0.0; 4]).unwrap();
        assert_eq!(directional_wf_single(&e).as_slice(), &[0.0; 4]);
    }
}
