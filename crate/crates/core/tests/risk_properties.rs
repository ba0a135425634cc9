use evostoch::risk::{cvar, expectation, mean_absolute_deviation, std_dev, variance};
use evostoch::LossDistribution;
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn dist() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..10).prop_flat_map(|n| {
        (
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(0.05f64..1.0, n).prop_map(|w| {
                let t: f64 = w.iter().sum();
                w.into_iter().map(|v| v / t).collect::<Vec<f64>>()
            }),
        )
    })
}

fn build(o: &[f64], p: &[f64]) -> LossDistribution {
    LossDistribution::new(o.to_vec(), p.to_vec()).unwrap()
}

proptest! {
    #[test]
    fn translation((o, p) in dist(), c in -3.0f64..3.0, alpha in 0.01f64..0.99) {
        let l = build(&o, &p);
        let shifted: Vec<f64> = o.iter().map(|v| v + c).collect();
        let m = build(&shifted, &p);
        prop_assert!((expectation(&m) - expectation(&l) - c).abs() < TOL);
        prop_assert!((std_dev(&m) - std_dev(&l)).abs() < TOL);
        prop_assert!((variance(&m) - variance(&l)).abs() < TOL);
        prop_assert!((mean_absolute_deviation(&m) - mean_absolute_deviation(&l)).abs() < TOL);
        prop_assert!((cvar(&m, alpha).unwrap() - (cvar(&l, alpha).unwrap() - c)).abs() < TOL);
    }

    #[test]
    fn positive_homogeneity((o, p) in dist(), lambda in 0.01f64..10.0, alpha in 0.01f64..0.99) {
        let l = build(&o, &p);
        let scaled: Vec<f64> = o.iter().map(|v| v * lambda).collect();
        let m = build(&scaled, &p);
        prop_assert!((std_dev(&m) - lambda * std_dev(&l)).abs() < TOL);
        prop_assert!((cvar(&m, alpha).unwrap() - lambda * cvar(&l, alpha).unwrap()).abs() < TOL);
    }

    #[test]
    fn cvar_non_increasing_in_alpha((o, p) in dist(), a in 0.01f64..0.99, b in 0.01f64..0.99) {
        let l = build(&o, &p);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(cvar(&l, hi).unwrap() <= cvar(&l, lo).unwrap() + TOL);
    }

    #[test]
    fn cvar_bounds((o, p) in dist(), alpha in 0.01f64..0.99) {
        // Between the expected loss and the worst loss.
        let l = build(&o, &p);
        let worst = -o.iter().copied().fold(f64::INFINITY, f64::min);
        let c = cvar(&l, alpha).unwrap();
        prop_assert!(c <= worst + TOL);
        prop_assert!(c >= -expectation(&l) - TOL);
    }
}
