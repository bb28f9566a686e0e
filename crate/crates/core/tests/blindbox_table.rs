use std::path::PathBuf;

use qcc_core::blindbox::{
    classical_resources, expected_quantum_resources, new_session, resources_from_success, GameConfig, GameState,
};
use qcc_core::experiment::estimate_effective_params;
use qcc_core::montecarlo::BatchStats;
use qcc_core::ChannelParams;
use serde::Deserialize;

#[derive(Deserialize)]
struct Row {
    m: u64,
    intensity: f64,
    total_periods: u64,
    m_clicks: u64,
    correct: u64,
    printed_resources: f64,
}

fn rows() -> Vec<Row> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/table3_counts.csv");
    csv::Reader::from_path(path).unwrap().deserialize().map(|r| r.unwrap()).collect()
}

#[test]
fn resources_reconstructed_from_counts() {
    let rows = rows();
    assert_eq!(rows.len(), 9);
    for r in &rows {
        let success = r.correct as f64 / r.total_periods as f64;
        let q = resources_from_success(100, r.intensity, success).unwrap();
        assert!((q / r.printed_resources - 1.0).abs() < 1e-3, "m={} I={}: {q}", r.m, r.intensity);
    }
}

#[test]
fn tabulated_operating_points_pay_off() {
    // params as estimated from the I = 2.5 rows, dark counts per gate 6e-7
    let dark = 6e-7;
    for r in rows().iter().filter(|r| r.intensity == 2.5) {
        let st = BatchStats::from_counts(100, r.intensity, r.total_periods, r.m_clicks, r.correct).unwrap();
        let est = estimate_effective_params(&st, r.intensity, 100, r.m, dark).unwrap();
        let params = ChannelParams::new(0.68, dark, est.visibility).unwrap();
        let spend = expected_quantum_resources(&params, 100, r.m, 2.5).unwrap();
        let reward = classical_resources(100, r.m).unwrap();
        assert!(spend < reward, "m={}: {spend} >= {reward} (ν={})", r.m, est.visibility);
    }
}

#[test]
fn full_game_with_ledger() {
    let mut s = new_session(2024, GameConfig::new(100, 2, ChannelParams::reference()).unwrap()).unwrap();
    for _ in 0..3 {
        s.play(2.5).unwrap();
    }
    assert!((s.spent() - 4982.9).abs() < 0.05);
    let hidden = s.hidden_missing().to_vec();
    let res = s.guess(&hidden).unwrap();
    assert_eq!(res.state, GameState::Won);
    assert!((res.payoff - 2985.3).abs() < 0.05);
    assert!((res.net - (res.payoff - s.spent())).abs() < 1e-9);
}
