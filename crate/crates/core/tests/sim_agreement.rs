//! Long-run agreement between the event-driven simulator and the closed
//! forms: per-client average age, and the mean/variance of the iteration
//! time, across a grid of parameter sets spanning the quorum, aggregation
//! count, both rates, and the compute duration.

use timely_fl::age_model::{age_exact, iteration_time_moments, SystemParams};
use timely_fl::protocol_sim::{default_warmup, simulate, SchemeKind};

const GRID: [(usize, usize, f64, f64, f64); 10] = [
    (20, 10, 1.0, 1.0, 1.0),
    (40, 31, 1.0, 1.0, 1.0),
    (90, 79, 1.0, 1.0, 1.0),
    (20, 10, 0.5, 1.0, 1.0),
    (40, 31, 1.0, 0.5, 1.0),
    (90, 79, 0.5, 0.5, 1.0),
    (20, 10, 1.0, 1.0, 5.0),
    (40, 31, 0.5, 1.0, 5.0),
    (90, 79, 1.0, 0.5, 5.0),
    (40, 10, 0.5, 0.5, 5.0),
];

#[test]
fn simulated_age_and_iteration_time_match_closed_forms() {
    let iterations = 100_000;
    let warmup = default_warmup(iterations);
    for (set, &(m, k, lambda, mu_up, c)) in GRID.iter().enumerate() {
        let params = SystemParams::new(100, m, k, lambda, mu_up, c).unwrap();
        let breakdown = age_exact(&params).unwrap();
        let (mean_y, var_y) = iteration_time_moments(&params).unwrap();
        let sim = simulate(
            &params,
            SchemeKind::EarliestKofM,
            iterations,
            warmup,
            0xA5EED + set as u64,
        )
        .unwrap();

        let age_err = (sim.mean_avg_age - breakdown.total).abs() / breakdown.total;
        let mean_err = (sim.mean_iteration_time - mean_y).abs() / mean_y;
        let var_err = (sim.iteration_time_variance - var_y).abs() / var_y;
        assert!(
            age_err < 0.01,
            "set {set} (m={m},k={k}): age {} vs {} ({:.3}%)",
            sim.mean_avg_age,
            breakdown.total,
            100.0 * age_err
        );
        assert!(
            mean_err < 0.005,
            "set {set} (m={m},k={k}): mean Y {} vs {mean_y} ({:.3}%)",
            sim.mean_iteration_time,
            100.0 * mean_err
        );
        assert!(
            var_err < 0.03,
            "set {set} (m={m},k={k}): var Y {} vs {var_y} ({:.3}%)",
            sim.iteration_time_variance,
            100.0 * var_err
        );
    }
}
