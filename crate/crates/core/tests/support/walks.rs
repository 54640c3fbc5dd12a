//! Session drivers shared by the walk tests.

#![allow(dead_code)]

use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use itriage_core::session::{Clock, Input, ManualClock, Session, SessionError};
use itriage_core::{KnowledgeBase, NodeKind};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn clock() -> Arc<dyn Clock> {
    Arc::new(ManualClock::ticking(Utc.with_ymd_and_hms(2025, 3, 1, 9, 0, 0).unwrap(), Duration::seconds(5)))
}

/// Acknowledges every non-decision prompt and feeds `answers` to the
/// decisions in order, stopping when the answers run out at a decision.
pub fn drive(s: &mut Session, answers: &[&str]) {
    let mut answers = answers.iter();
    while s.status().is_active() {
        let p = s.current_prompt().unwrap();
        if p.kind == NodeKind::Decision {
            match answers.next() {
                Some(a) => s.advance(Input::Answer(a.to_string())).unwrap(),
                None => return,
            }
        } else if answers.len() == 0 {
            return;
        } else {
            s.advance(Input::Acknowledge).unwrap();
        }
    }
}

/// Random walk from a random tree; open dead ends and long walks abort.
pub fn random_walk(kb: &Arc<KnowledgeBase>, rng: &mut ChaCha8Rng, max_inputs: usize) -> Session {
    let tree = kb.trees().choose(rng).unwrap().id.clone();
    let mut s = Session::start(kb.clone(), &tree, clock()).unwrap();
    for _ in 0..max_inputs {
        if !s.status().is_active() {
            return s;
        }
        let p = s.current_prompt().unwrap();
        let input = if p.kind == NodeKind::Decision {
            Input::Answer(p.answers.choose(rng).unwrap().clone())
        } else {
            Input::Acknowledge
        };
        match s.advance(input) {
            Ok(()) => {}
            Err(SessionError::DeadEnd { .. }) => {
                s.abort().unwrap();
                return s;
            }
            Err(e) => panic!("{e}"),
        }
        if s.status().is_active() && rng.gen_ratio(1, 200) {
            s.abort().unwrap();
        }
    }
    s
}

/// Node texts of the all-Yes troubleshooting walk; a trailing `…` marks a
/// prefix match.
pub const FIDELITY_TEXTS: [&str; 15] = [
    "Check trap signal",
    "Does the user see the signal?",
    "Start troubleshooting",
    "Check pressure",
    "Pressure > UHV?",
    "Check trapping potential",
    "Potential components working?",
    "Check ion presence",
    "Does user see ablation sparks?",
    "Does user see fluorescence from 1st ionizaton?",
    "Check cooling fluorescence",
    "Does user see fluorescence from cooling laser?",
    "Check if it is the Trapping signal…",
    "Does signal presence correlate with the repump ON/OFF?",
    "Finish",
];

pub fn texts_match(got: &[&str], want: &[&str]) -> bool {
    got.len() == want.len()
        && got.iter().zip(want).all(|(g, w)| match w.strip_suffix('…') {
            Some(prefix) => g.starts_with(prefix),
            None => g == w,
        })
}
