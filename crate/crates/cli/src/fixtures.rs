//! Scenario files shipped with the binary.

use crate::schema::{parse_str, ScenarioError, ScenarioFile};

pub const FIXTURES: [(&str, &str); 6] = [
    ("oscillators_fixed", include_str!("../fixtures/oscillators_fixed.json")),
    ("oscillators_switching", include_str!("../fixtures/oscillators_switching.json")),
    ("oscillators_discrete_fixed", include_str!("../fixtures/oscillators_discrete_fixed.json")),
    ("oscillators_discrete_switching", include_str!("../fixtures/oscillators_discrete_switching.json")),
    ("adaptive_fixed", include_str!("../fixtures/adaptive_fixed.json")),
    ("resilience_arc_drop", include_str!("../fixtures/resilience_arc_drop.json")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    FIXTURES.iter().map(|(n, _)| *n)
}

pub fn text(name: &str) -> Option<&'static str> {
    FIXTURES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn load(name: &str) -> Option<Result<ScenarioFile, ScenarioError>> {
    text(name).map(parse_str)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_parses_and_is_named_after_itself() {
        for (name, _) in FIXTURES {
            let f = load(name).unwrap().unwrap();
            assert_eq!(f.name.as_deref(), Some(name));
        }
        assert!(load("missing").is_none());
    }
}
