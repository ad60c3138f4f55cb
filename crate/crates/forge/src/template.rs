//! Instruction templates sent to chat backends, one per scenario.

use logicclip_core::corpus::Scenario;
use logicclip_core::LogicalCategory;

use crate::error::{ForgeError, Result};

const IMAGE: &str = r#"You are given a caption that describes an image and contains a {logic_type} logical structure.
Your task is to generate THREE hard negative captions that:

- Are fluent and grammatically correct.

- Appear plausible and similar in structure.

- Contain incorrect or conflicting {logic_type} logic.

Caption: "{caption}"

Image ID: {image_id}

Please output only the THREE hard negative captions as a numbered list, one per line:

1. <hard negative caption>

2. <hard negative caption>

3. <hard negative caption>

Placeholder Explanation:
{logic_type} refers to one of the following logical structures: conjunction, disjunction, negation, contrast, comparison, condition, causality, temporality, and inclusion.
"#;

const VIDEO: &str = r#"You are given a caption that describes a video and contains a {logic_type} logical structure.
Your task is to generate THREE hard negative captions that:

- Are fluent and grammatically correct.

- Appear plausible and similar in structure.

- Contain incorrect or conflicting {logic_type} logic.

Caption: "{caption}"

Video ID: {video_id}

Please output only the THREE hard negative captions as a numbered list, one per line:

1. <hard negative caption>

2. <hard negative caption>

3. <hard negative caption>

Placeholder Explanation:
{logic_type} refers to one of the following logical structures: conjunction, disjunction, negation, contrast, comparison, condition, causality, temporality, and inclusion.
"#;

const ANOMALY: &str = r#"You are given a caption that describes a abnormal video and contains a {logic_type} logical structure.
Your task is to generate THREE hard negative captions that:

- Are fluent and grammatically correct.

- Appear plausible and similar in structure.

- Contain incorrect or conflicting {logic_type} logic.

Caption: "{caption}"

Video ID: {video_id}

Please output only the THREE hard negative captions as a numbered list, one per line:

1. <hard negative caption>

2. <hard negative caption>

3. <hard negative caption>

Placeholder Explanation:
{logic_type} refers to one of the following logical structures: conjunction, disjunction, negation, contrast, comparison, condition, causality, temporality, and inclusion.
"#;

const MEDICINE: &str = r#"You are given a caption that describes a pathology report as follows: {pathology report}

Please follow the instructions below:

1. Extract positive findings (statements without negation) and negative findings (statements with negation, e.g., "no pleural effusion").

2. Construct ONE correct option using this rule-based format:
   "Because <positive finding> and <negative finding>, the impression is <IMPRESSION>."

3. Generate FOUR hard negative options using logical perturbations:

   - Negation Flip: Reverse negation (e.g., "no effusion" → "effusion present").

   - Conjunction Trap: Combine correct and incorrect statements with "and".

   - Disjunction Confusion: Use "or" with one correct and one incorrect clause.

   - Causal Misalignment: Disrupt the cause-effect chain using "because", "so", or "therefore".

4. Return exactly five options, labeled 1 to 5. Only the first option should be correct.
Please use the following exact format:

1. <Correct caption>

2. <Hard negative caption>

3. <Hard negative caption>

4. <Hard negative caption>

5. <Hard negative caption>
"#;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptTemplate {
    pub scenario: Scenario,
    pub body: &'static str,
}

impl PromptTemplate {
    pub fn for_scenario(scenario: Scenario) -> Self {
        let body = match scenario {
            Scenario::Image => IMAGE,
            Scenario::Video => VIDEO,
            Scenario::Anomaly => ANOMALY,
            Scenario::Medicine => MEDICINE,
        };
        PromptTemplate { scenario, body }
    }

    /// Placeholder holding the source id, if the scenario has one.
    pub fn id_placeholder(&self) -> Option<&'static str> {
        match self.scenario {
            Scenario::Image => Some("{image_id}"),
            Scenario::Video | Scenario::Anomaly => Some("{video_id}"),
            Scenario::Medicine => None,
        }
    }

    /// Number of numbered lines the backend must return.
    pub fn expected_count(&self) -> usize {
        self.scenario.option_count() - usize::from(self.scenario != Scenario::Medicine)
    }
}

/// Fills the scenario's template. Medicine takes the report text in place
/// of a caption and ignores `logic_type` and `id`.
pub fn build_prompt(scenario: Scenario, caption: &str, logic_type: LogicalCategory, id: Option<&str>) -> Result<String> {
    let template = PromptTemplate::for_scenario(scenario);
    let values: Vec<(&str, &str)> = match template.id_placeholder() {
        None => vec![("pathology report", caption)],
        Some(slot) => {
            let id = id.unwrap_or_default();
            vec![("logic_type", logic_type.name()), ("caption", caption), (&slot[1..slot.len() - 1], id)]
        }
    };
    if let Some((name, _)) = values.iter().find(|(_, v)| v.trim().is_empty()) {
        return Err(ForgeError::MissingPlaceholder(name.to_string()));
    }
    Ok(substitute(template.body, &values))
}

/// Single pass over `body`, so substituted text is never rescanned.
fn substitute(body: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(body.len());
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open + 1..];
        match tail.find('}').and_then(|close| values.iter().find(|(k, _)| *k == &tail[..close]).map(|kv| (close, kv.1))) {
            Some((close, value)) => {
                out.push_str(value);
                rest = &tail[close + 1..];
            }
            None => {
                out.push('{');
                rest = tail;
            }
        }
    }
    out.push_str(rest);
    out
}
