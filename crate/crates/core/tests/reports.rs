use std::fs;

use nalgebra::DMatrix;

use repdyn::experiments::{apply_overrides, run_two_state, TwoStateConfig};
use repdyn::gridworld::{build_four_rooms, four_rooms_map};
use repdyn::mdp::{build_chain_mdp, Mdp};
use repdyn::svg::{emit_svg, gridworld, SvgKind};

#[test]
fn bundle_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = apply_overrides(&TwoStateConfig::default(), &[("gamma".into(), "0.8".into())]).unwrap();
    let bundle = run_two_state(&cfg).unwrap();
    bundle.write(tmp.path()).unwrap();

    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("config.json")).unwrap()).unwrap();
    let reread: TwoStateConfig = serde_json::from_value(doc["config"].clone()).unwrap();
    assert_eq!(reread, cfg);
    let again = run_two_state(&reread).unwrap();
    for (name, body) in &again.tables {
        assert_eq!(
            &fs::read_to_string(tmp.path().join("tables").join(format!("{name}.csv"))).unwrap(),
            body
        );
    }
    // no temporary files are left behind
    for entry in fs::read_dir(tmp.path().join("tables")).unwrap() {
        assert!(!entry.unwrap().file_name().to_string_lossy().ends_with(".tmp"));
    }
}

#[test]
fn mdp_json_round_trip_is_exact() {
    let mdp = build_chain_mdp(12, 0.013, 2.0, 1.0).unwrap();
    let back = Mdp::from_json(&mdp.to_json().unwrap()).unwrap();
    assert_eq!(back, mdp);
    let (rooms, _) = build_four_rooms();
    assert_eq!(Mdp::from_json(&rooms.to_json().unwrap()).unwrap(), rooms);
}

#[test]
fn gridworld_rendering_covers_the_interior() {
    let map = four_rooms_map();
    let column = DMatrix::from_fn(map.n_states(), 1, |i, _| i as f64);
    let svg = gridworld(&column, &map, "state index").unwrap();
    // 11 x 11 interior, walls drawn blank
    assert_eq!(svg.matches("<rect").count(), 121);
    assert!(svg.contains("min=0"));
}

#[test]
fn rendering_rejects_non_finite_values() {
    let mut m = DMatrix::from_element(2, 3, 1.0);
    m[(1, 2)] = f64::NAN;
    let err = emit_svg(&m, SvgKind::Heatmap, "bad").unwrap_err().to_string();
    assert!(err.contains("(1, 2)"), "{err}");
}
