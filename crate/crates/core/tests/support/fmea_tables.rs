//! FMEA tables written out by hand, and a brute-force branch ranker.

#![allow(dead_code)]

use itriage_core::fmea::{Dimension, Weights};
use itriage_core::{KnowledgeBase, SeverityLevel};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use SeverityLevel::{High, Low, Medium};

pub const CATALOG: [(&str, &str, SeverityLevel, SeverityLevel, SeverityLevel); 11] = [
    ("Vacuum", "Outgassing (bake-out failure)", High, High, Low),
    ("Vacuum", "Leak (gasket/valve)", High, High, High),
    ("Vacuum", "Component failure", High, High, Low),
    ("Electronics", "RF detuning (resonator reflectance)", High, High, High),
    ("Electronics", "DC noise / voltage drift", Medium, Medium, Medium),
    ("Electronics", "Broken cable / poor contact", Medium, High, High),
    ("Optics", "Ionization laser misalignment", Medium, Medium, Medium),
    ("Optics", "Cooling beam misaligned", Medium, Medium, Low),
    ("Optics", "Laser frequency drift", Low, Medium, Low),
    ("Imaging", "Camera/PMT misalignment", Medium, Medium, Medium),
    ("Imaging", "Light leak / poor shielding", Low, Low, Low),
];

pub const EFFECTS: [(Dimension, [&str; 3]); 3] = [
    (Dimension::TimeCost, ["Hours", "Days", "Weeks"]),
    (Dimension::OperationalImpact, ["Motion is introduced", "Trapped for few minutes", "Ion loss"]),
    (Dimension::DisturbanceRisk, ["Unlikely to happen", "Could happen", "Mostlikely will happen"]),
];

pub const INTERVENTIONS: [(SeverityLevel, &str, &str); 3] = [
    (Low, "Minor performance loss or cosmetic fault", "Simple recalibration or adjustment"),
    (Medium, "Degrades fidelity or reliability of trapping", "Re-alignment or moderate component replacement"),
    (High, "Prevents trapping or damages hardware", "Extensive intervention (e.g. disassembly, replacing hardware)"),
];

/// Vacuum fan-out branches and the catalog rows of the findings behind them.
pub const VACUUM_FAN_OUT: [(&str, &[&str]); 3] =
    [("Leakage", &["leak"]), ("Outgassing", &["outgassing"]), ("Component Failure", &["vacuum_component_failure"])];

pub fn level_value(l: SeverityLevel) -> i64 {
    match l {
        Low => 1,
        Medium => 2,
        High => 3,
    }
}

pub fn random_weights(rng: &mut ChaCha8Rng) -> [BigRational; 3] {
    std::array::from_fn(|_| BigRational::new(BigInt::from(rng.gen_range(0..=40)), BigInt::from(rng.gen_range(1..=12))))
}

pub fn weights(w: &[BigRational; 3]) -> Weights {
    Weights::new(w[0].clone(), w[1].clone(), w[2].clone()).unwrap()
}

/// Score every branch by hand and sort, keeping declaration order on ties.
pub fn brute_force(kb: &KnowledgeBase, w: &[BigRational; 3]) -> Vec<(String, BigRational)> {
    let mut scored: Vec<(usize, String, BigRational)> = VACUUM_FAN_OUT
        .iter()
        .enumerate()
        .map(|(i, (label, modes))| {
            let best = modes
                .iter()
                .map(|m| {
                    let c = kb.failure_mode(m).unwrap().cost;
                    &w[0] * BigInt::from(level_value(c.operational_impact))
                        + &w[1] * BigInt::from(level_value(c.time_cost))
                        + &w[2] * BigInt::from(level_value(c.disturbance_risk))
                })
                .max()
                .unwrap();
            (i, label.to_string(), best)
        })
        .collect();
    for i in 0..scored.len() {
        for j in 0..scored.len() - 1 - i {
            let (a, b) = (&scored[j], &scored[j + 1]);
            if a.2 > b.2 || (a.2 == b.2 && a.0 > b.0) {
                scored.swap(j, j + 1);
            }
        }
    }
    scored.into_iter().map(|(_, l, s)| (l, s)).collect()
}

