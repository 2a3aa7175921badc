//! Extracting a Likert label from a model response.

use std::sync::OnceLock;

use regex::Regex;

use super::CollectError;

fn number_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(\d+)(?:\.(\d+))?").expect("valid regex"))
}

/// Extract the Likert label from a response.
///
/// Accepts integers and `x.0` decimals in 1..=6 ("5", "5.0" → 5); every
/// other number is ignored. Distinct in-range values in one response make
/// it ambiguous.
pub fn parse_likert(response: &str) -> Result<u8, CollectError> {
    let mut found: Option<u8> = None;
    for cap in number_pattern().captures_iter(response) {
        let int_part = cap.get(1).expect("group 1 always present").as_str();
        if let Some(frac) = cap.get(2) {
            if frac.as_str().bytes().any(|b| b != b'0') {
                continue;
            }
        }
        let Ok(value) = int_part.parse::<u64>() else {
            continue;
        };
        if !(1..=6).contains(&value) {
            continue;
        }
        let value = value as u8;
        match found {
            None => found = Some(value),
            Some(prev) if prev == value => {}
            Some(prev) => {
                return Err(CollectError::AmbiguousResponse {
                    first: prev,
                    second: value,
                    response: response.to_string(),
                })
            }
        }
    }
    found.ok_or_else(|| CollectError::NoLabelInResponse(response.to_string()))
}
