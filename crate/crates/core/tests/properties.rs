//! Property tests over random step densities, schedules and samples.

mod common;

use num_rational::Rational64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use switchover::expected_time::piece_at;
use switchover::io::fmt_num;
use switchover::mle::{auto_partition, count_membership, et_empirical, fit_k, PartitionStrategy, TimingSamples};
use switchover::schedule::{derived_time, Schedule};
use switchover::{et_box, optimize_box, JointDensity};

fn density_from_seed(seed: u64) -> switchover::BoxDensity<f64> {
    common::random_box_density(&mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn scaling_time_scales_expected_time(seed in any::<u64>(), s in 0.1f64..10.0, u in 0.0f64..1.2) {
        let d = density_from_seed(seed);
        let tau = u * d.x_support_max();
        let lhs = et_box(&d.scaled(s), s * tau);
        let rhs = s * et_box(&d, tau);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn endpoint_minimum_is_global(seed in any::<u64>(), u in 0.0f64..1.5) {
        let d = density_from_seed(seed);
        let rep = optimize_box(&d).unwrap();
        prop_assert!(rep.et_star <= et_box(&d, u * d.x_support_max()) + 1e-12);
        prop_assert!(rep.candidates.iter().any(|c| c.tau == rep.tau_star));
    }

    #[test]
    fn expected_time_is_continuous_at_box_edges(seed in any::<u64>()) {
        let d = density_from_seed(seed);
        for b in &d.boxes {
            for edge in [b.a, b.b] {
                let h = 1e-7;
                let left = et_box(&d, (edge - h).max(0.0));
                let right = et_box(&d, edge + h);
                prop_assert!((left - right).abs() < 1e-5, "jump {} at {edge}", left - right);
            }
        }
    }

    #[test]
    fn pieces_are_concave_and_boundaries_match_means(seed in any::<u64>(), u in 0.0f64..1.0) {
        let d = density_from_seed(seed);
        prop_assert!(piece_at(&d, u * d.x_support_max()).quadratic <= 0.0);
        prop_assert!((et_box(&d, 0.0) - d.mean_y()).abs() < 1e-12);
        prop_assert!((et_box(&d, d.x_support_max()) - d.mean_x()).abs() < 1e-12);
    }

    #[test]
    fn exact_and_float_routes_agree(
        cells in prop::collection::vec((0i64..6, 1i64..4, 0i64..6, 1i64..4, 1i64..10), 1..5),
        num in 0i64..400,
    ) {
        // small integer boxes with dyadic heights; overlaps are irrelevant to the formula
        let exact: switchover::ExactBoxDensity = switchover::BoxDensity::new(
            cells.iter().map(|&(a, w, c, h, k)| switchover::StepBox::from_rect(
                Rational64::new(k, 64),
                switchover::Rect::new(Rational64::from(a), Rational64::from(a + w), Rational64::from(c), Rational64::from(c + h)),
            )).collect(),
        );
        let float = exact.map_scalar(|v| *v.numer() as f64 / *v.denom() as f64);
        let e = et_box(&exact, Rational64::new(num, 40));
        let e = *e.numer() as f64 / *e.denom() as f64;
        let f = et_box(&float, num as f64 / 40.0);
        prop_assert!((e - f).abs() < 1e-9 * e.abs().max(1.0), "{e} vs {f}");
    }

    #[test]
    fn empirical_route_matches_fitted_density(seed in any::<u64>(), u in 0.0f64..1.3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (part, samples) = common::random_partition_counts(&mut rng);
        let fitted = fit_k(&part, &samples).unwrap();
        prop_assert!(JointDensity::from(fitted.clone()).validate().is_valid());
        let top = part.rects().iter().map(|r| r.b).fold(0.0, f64::max);
        let counts = count_membership(&part, &samples);
        let tau = u * top;
        prop_assert!((et_empirical(tau, &part, &counts).unwrap() - et_box(&fitted, tau)).abs() < 1e-12);
    }

    #[test]
    fn auto_partitions_cover_every_sample(
        pairs in prop::collection::vec((0.001f64..100.0, 0.001f64..100.0), 1..200),
        nx in 1usize..7,
        ny in 1usize..7,
        quantile in any::<bool>(),
    ) {
        let samples = TimingSamples::new(pairs).unwrap();
        let strategy = if quantile { PartitionStrategy::Quantile { nx, ny } } else { PartitionStrategy::Uniform { nx, ny } };
        let part = auto_partition(&samples, strategy).unwrap();
        prop_assert!(part.len() <= nx * ny);
        prop_assert!(count_membership(&part, &samples).uncovered.is_empty());
        let fitted = fit_k(&part, &samples).unwrap();
        prop_assert!((fitted.mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn derived_time_invariants(
        times in prop::collection::vec(0.01f64..100.0, 1..6),
        budgets in prop::collection::vec(0.0f64..50.0, 5),
    ) {
        let n = times.len();
        let s = Schedule::new(budgets[..n - 1].to_vec()).unwrap();
        let out = derived_time(&times, &s).unwrap();
        let i = out.completing_index;
        prop_assert!((1..=n).contains(&i));
        // every earlier stage overran, the completing one did not (unless it is last)
        prop_assert!(times[..i - 1].iter().zip(s.budgets()).all(|(t, b)| t > b));
        if i < n {
            prop_assert!(times[i - 1] <= s.budgets()[i - 1]);
        }
        let expected = s.deadline(i - 1) + times[i - 1];
        prop_assert!((out.total_time - expected).abs() < 1e-9);
        prop_assert!(out.total_time >= times[i - 1]);
    }

    #[test]
    fn twelve_digit_formatting_round_trips(x in prop::num::f64::NORMAL) {
        let back: f64 = fmt_num(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-11 * x.abs(), "{x} -> {}", fmt_num(x));
    }
}
