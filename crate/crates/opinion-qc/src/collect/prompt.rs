//! Prompt templates and rendering.
//!
//! The built-in template texts are the survey instruments used to elicit
//! harm ratings; their wording is fixed and rendering must not mutate
//! anything beyond placeholder substitution.

use serde::{Deserialize, Serialize};

use super::{CollectError, Persona};

/// A prompt template with `{claim}` / `{gender}` placeholders.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: String,
    pub text: String,
    /// The template ends in a rating prefix ("… I would rate it as a:"),
    /// so responses tend to be bare numbers.
    pub response_prefix_expected: bool,
}

impl PromptTemplate {
    pub fn takes_gender(&self) -> bool {
        self.text.contains("{gender}")
    }
}

const QUESTION: &str = "How likely is this claim to disproportionately harm certain demographic groups\n(e.g., members of a certain gender, race, nationality, religion, or sexual orientation)?\n(1-6 scale)";

const RATE_PREFIX: &str =
    "On a scale from 1-not at all likely to 6-extremely likely, I would rate it as a:";

/// The conditional (gender-backstory) and base prompt variants.
pub fn builtin_template(id: &str) -> Option<PromptTemplate> {
    let (text, prefix): (String, bool) = match id {
        "cond1" => (
            format!(
                "Claim: {{claim}}\nAnswer the following question as if you were a {{gender}}:\n{QUESTION}\nAs a {{gender}}, on a scale from 1-not at all likely to 6-extremely likely, I would rate it as a:"
            ),
            true,
        ),
        "cond2" => (
            format!(
                "Answer the following question as if you were a {{gender}}:\n{QUESTION}\nOptions: 1-not at all likely, 2, 3, 4, 5, 6-extremely likely\nClaim: {{claim}}\nResponse (Provide the answer without explaining your reasoning):"
            ),
            false,
        ),
        "base1" => (format!("Claim: {{claim}}\n{QUESTION}\n{RATE_PREFIX}"), true),
        "base2" => (
            format!(
                "Claim: {{claim}}\nAnswer the following question from a neutral perspective.\n{QUESTION}\n{RATE_PREFIX}"
            ),
            true,
        ),
        "base3" => (
            format!(
                "Claim: {{claim}}\nAnswer the following question from the perspective of a neutral person.\n{QUESTION}\n{RATE_PREFIX}"
            ),
            true,
        ),
        "base4" => (
            format!(
                "Claim: {{claim}}\nAnswer the following question from the perspective of an average person.\n{QUESTION}\n{RATE_PREFIX}"
            ),
            true,
        ),
        _ => return None,
    };
    Some(PromptTemplate {
        id: id.to_string(),
        text,
        response_prefix_expected: prefix,
    })
}

pub fn builtin_template_ids() -> &'static [&'static str] {
    &["cond1", "cond2", "base1", "base2", "base3", "base4"]
}

/// Look up a comma-separated list of built-in template ids.
pub fn resolve_templates(ids: &[String]) -> Result<Vec<PromptTemplate>, CollectError> {
    ids.iter()
        .map(|id| builtin_template(id).ok_or_else(|| CollectError::UnknownTemplate(id.clone())))
        .collect()
}

/// A rendered chat prompt: conditional/base prompts are a single user
/// message; in-context prompts add a system message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChatPrompt {
    pub system: Option<String>,
    pub user: String,
}

/// Substitute `{claim}` and `{gender}` in a single pass over the template.
/// Placeholder-looking text inside the substituted values is left alone.
pub fn render_prompt(
    template: &PromptTemplate,
    claim: &str,
    persona: Persona,
) -> Result<ChatPrompt, CollectError> {
    let mut out = String::with_capacity(template.text.len() + claim.len());
    let mut rest = template.text.as_str();
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let after = &rest[start..];
        let end = after
            .find('}')
            .ok_or_else(|| CollectError::UnresolvedPlaceholder(after.to_string()))?;
        let key = &after[1..end];
        match key {
            "claim" => out.push_str(claim),
            "gender" => match persona.gender_word() {
                Some(word) => out.push_str(word),
                None => {
                    return Err(CollectError::UnresolvedPlaceholder(format!(
                        "template {:?} needs a gender persona, got {persona:?}",
                        template.id
                    )))
                }
            },
            other => {
                return Err(CollectError::UnresolvedPlaceholder(other.to_string()));
            }
        }
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(ChatPrompt {
        system: None,
        user: out,
    })
}
