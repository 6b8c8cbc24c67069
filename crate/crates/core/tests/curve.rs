use predaudit::curve::epsilon_at_order;
use predaudit::theory::{gaussian_group_rdp_bound, generic_group_rdp};
use predaudit::{compose_curves, gaussian_rdp_bound, rdp_to_dp, Error, RdpCurve, DEFAULT_ORDERS};
use proptest::prelude::*;

fn curve(values: Vec<f64>) -> RdpCurve {
    RdpCurve::new(DEFAULT_ORDERS.to_vec(), values).unwrap()
}

fn values_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..10.0, DEFAULT_ORDERS.len())
}

#[test]
fn zero_curve_conversion() {
    let zero = RdpCurve::zeros(&[64.0]).unwrap();
    let p = rdp_to_dp(&zero, 1e-6).unwrap();
    let direct = (63.0f64 / 64.0).ln() - ((1e-6f64).ln() + 64f64.ln()) / 63.0;
    assert!((p.epsilon - direct).abs() < 1e-15);
    assert!((p.epsilon - 0.137_531_444).abs() < 1e-9);
    assert_eq!(p.source_order, 64.0);
}

#[test]
fn gaussian_bound_and_its_conversion() {
    // ρ(α) = α/σ² for Δ = √2; minimise α/σ² + ln((α−1)/α) − (ln δ + ln α)/(α−1) by brute force.
    let sigma = 10.0;
    let theory = gaussian_rdp_bound(sigma, std::f64::consts::SQRT_2, &DEFAULT_ORDERS).unwrap();
    for (a, r) in theory.iter() {
        assert!((r - a / (sigma * sigma)).abs() < 1e-15);
    }
    let p = rdp_to_dp(&theory, 1e-5).unwrap();
    let brute = DEFAULT_ORDERS
        .iter()
        .map(|&a| a / 100.0 + ((a - 1.0) / a).ln() - ((1e-5f64).ln() + a.ln()) / (a - 1.0))
        .fold(f64::INFINITY, f64::min);
    assert_eq!(p.epsilon, brute);
}

#[test]
fn group_bounds() {
    let one = gaussian_rdp_bound(5.0, 2.0, &DEFAULT_ORDERS).unwrap();
    let three = gaussian_group_rdp_bound(5.0, 2.0, 3, &DEFAULT_ORDERS).unwrap();
    for (a, b) in one.values().iter().zip(three.values()) {
        assert!((b - 9.0 * a).abs() < 1e-12);
    }
    let (order, rho) = generic_group_rdp(64.0, 0.1, 2).unwrap();
    assert_eq!(order, 16.0);
    assert!((rho - 0.9).abs() < 1e-15);
    assert!(matches!(generic_group_rdp(4.0, 0.1, 2), Err(Error::OrderUnderflow { .. })));
    assert!(gaussian_rdp_bound(0.0, 1.0, &DEFAULT_ORDERS).is_err());
    assert!(gaussian_group_rdp_bound(1.0, 1.0, 0, &DEFAULT_ORDERS).is_err());
}

#[test]
fn invalid_inputs() {
    assert!(RdpCurve::new(vec![1.0, 2.0], vec![0.0, 0.0]).is_err());
    assert!(RdpCurve::new(vec![3.0, 2.0], vec![0.0, 0.0]).is_err());
    assert!(RdpCurve::new(vec![2.0], vec![-0.5]).is_err());
    assert!(compose_curves(&[]).is_err());
    let a = RdpCurve::zeros(&[2.0, 4.0]).unwrap();
    let b = RdpCurve::zeros(&[2.0, 8.0]).unwrap();
    assert!(matches!(compose_curves(&[a.clone(), b]), Err(Error::GridMismatch)));
    assert!(rdp_to_dp(&a, 0.0).is_err());
    assert!(rdp_to_dp(&a, 1.0).is_err());
    let inf = RdpCurve::new(vec![2.0, 4.0], vec![f64::INFINITY; 2]).unwrap();
    assert!(rdp_to_dp(&inf, 1e-6).is_err());
}

proptest! {
    #[test]
    fn composition_is_commutative_and_associative(a in values_strategy(), b in values_strategy(), c in values_strategy()) {
        let (a, b, c) = (curve(a), curve(b), curve(c));
        let ab = compose_curves(&[a.clone(), b.clone()]).unwrap();
        let ba = compose_curves(&[b.clone(), a.clone()]).unwrap();
        prop_assert_eq!(&ab, &ba);
        let left = compose_curves(&[ab, c.clone()]).unwrap();
        let right = compose_curves(&[a.clone(), compose_curves(&[b.clone(), c.clone()]).unwrap()]).unwrap();
        let flat = compose_curves(&[a, b, c]).unwrap();
        for ((l, r), f) in left.values().iter().zip(right.values()).zip(flat.values()) {
            prop_assert!((l - r).abs() <= 1e-12 * l.max(1.0));
            prop_assert!((l - f).abs() <= 1e-12 * l.max(1.0));
        }
    }

    #[test]
    fn repetition_equals_composition(a in values_strategy(), m in 1u32..20) {
        let a = curve(a);
        let copies = vec![a.clone(); m as usize];
        let composed = compose_curves(&copies).unwrap();
        for (x, y) in composed.values().iter().zip(a.repeated(m).values()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0));
        }
    }

    #[test]
    fn conversion_is_the_best_single_order(a in values_strategy(), log_delta in -12.0f64..-1.0) {
        let delta = 10f64.powf(log_delta);
        let c = curve(a);
        let p = rdp_to_dp(&c, delta).unwrap();
        for (order, rho) in c.iter() {
            prop_assert!(p.epsilon <= epsilon_at_order(order, rho, delta));
        }
        let at_source = epsilon_at_order(p.source_order, c.value_at(p.source_order).unwrap(), delta);
        prop_assert_eq!(p.epsilon, at_source);
    }

    #[test]
    fn conversion_is_monotone(a in values_strategy(), bump in 0.0f64..1.0, log_delta in -12.0f64..-2.0) {
        let delta = 10f64.powf(log_delta);
        let lo = curve(a.clone());
        let hi = curve(a.iter().map(|v| v + bump).collect());
        prop_assert!(rdp_to_dp(&lo, delta).unwrap().epsilon <= rdp_to_dp(&hi, delta).unwrap().epsilon);
        prop_assert!(rdp_to_dp(&lo, delta * 10.0).unwrap().epsilon <= rdp_to_dp(&lo, delta).unwrap().epsilon);
    }
}
