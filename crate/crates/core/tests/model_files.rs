use std::path::{Path, PathBuf};

use impulse_ctmdp::model::{parse_model, read_model};
use impulse_ctmdp::{solve, validate_model, Ctmdp, Error, Mode};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn load(name: &str) -> Ctmdp {
    let raw = read_model(data(name)).unwrap();
    assert!(validate_model(&raw).is_valid());
    Ctmdp::new(raw).unwrap()
}

#[test]
fn two_state_file_values() {
    let m = load("two_state.toml");
    let sick = m.states().id("sick").unwrap();
    let v = solve(&m, 1e-12).unwrap().value;
    assert!((v[sick] - 0.5).abs() < 1e-10);

    let m = load("two_state_impulse.toml");
    let report = solve(&m, 1e-12).unwrap();
    let policy = impulse_ctmdp::extract_policy(&m, &report.value, 1e-8).unwrap();
    assert!((report.value[sick] - 0.3).abs() < 1e-10);
    assert_eq!(policy.mode[sick], Mode::Impulsive);
}

#[test]
fn round_trip_through_model_description() {
    for name in ["two_state.toml", "two_state_impulse.toml"] {
        let m = load(name);
        let again = Ctmdp::new(m.to_model()).unwrap();
        assert_eq!(m.n_states(), again.n_states());
        let a = solve(&m, 1e-12).unwrap().value;
        let b = solve(&again, 1e-12).unwrap().value;
        assert_eq!(a, b);
    }
}

#[test]
fn unknown_state_reference_is_reported() {
    let text = std::fs::read_to_string(data("two_state.toml"))
        .unwrap()
        .replace("targets = { healthy = 1.0 }", "targets = { dead = 1.0 }");
    match parse_model(&text) {
        Err(Error::Parse { line, field, .. }) => {
            assert_eq!(line, 12);
            assert_eq!(field, "rates[0].targets.dead");
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
}
