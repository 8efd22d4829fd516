use qid_demo::{default_band, jump_view, mixture_view, preset, triplet_view, DemoError};

#[test]
fn unknown_preset() {
    assert!(matches!(preset("cauchy"), Err(DemoError::UnknownPreset(_))));
}

#[test]
fn triplet_view_tracks_exact_curve() {
    let v = triplet_view("two-normal", 5000, 1, 8.0).unwrap();
    assert_eq!(v.u.len(), v.log_modulus.len());
    assert_eq!(v.log_modulus[0], 0.0);
    // low frequencies are where the sample cf is accurate
    for k in 0..50 {
        assert!(
            (v.log_modulus[k] - v.log_modulus_exact[k]).abs() < 0.05,
            "u = {}",
            v.u[k]
        );
    }
    assert!((v.estimate.p_hat - v.truth.p).abs() < 0.2);
}

#[test]
fn mixture_view_is_nonnegative_and_close() {
    let band = default_band("two-normal").unwrap();
    let v = mixture_view("two-normal", 10_000, 2, band).unwrap();
    assert!(v.g_circ_plus.iter().all(|g| *g >= 0.0));
    assert!(v.l2 < 1.0, "l2 = {}", v.l2);
    assert_eq!(v.x.len(), v.g_hat.len());
}

#[test]
fn noiseless_jump_view_is_accurate() {
    let v = jump_view(0, 0, 8.0).unwrap();
    assert!(v.l2 < 0.02, "l2 = {}", v.l2);
    let noisy = jump_view(10_000, 3, 8.0).unwrap();
    assert!(noisy.l2 > v.l2);
}

#[test]
fn views_serialize() {
    let v = jump_view(0, 0, 6.0).unwrap();
    let json = serde_json::to_value(&v).unwrap();
    for key in ["x", "estimate", "series", "l2"] {
        assert!(json.get(key).is_some());
    }
}
