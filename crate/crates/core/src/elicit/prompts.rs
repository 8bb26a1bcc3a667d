//! Prompt registry.
//!
//! The elicitation, event and QA templates are kept exactly as published,
//! typos included, so transcripts stay comparable with other runs of the same
//! prompts. The extraction template is our own.

use serde::{Deserialize, Serialize};

use super::ElicitError;

pub const HOP0_TEMPLATE: &str = "Recall information from your own internal knowledge.\n\
Target: {target}\n\
Write 5-10 atomic statements about {target}.";

pub const NEIGHBOR_TEMPLATE: &str = "Recall information from your own internal knowledge.\n\
Target: {target}\n\
Neighbor: {neighbor}\n\
Write 5-10 SHORT atomic statements specifically about how {neighbor} relates to {target}.";

pub const EVENT_TEMPLATE: &str = "Please act as an information assistant to help users learn about pertinent details regarding the target.\n\
Given an anchor target, according to known knowledge about the target, and two key event about the target, please provide ONE concise factual statement about the target's main information.\n\
The statement should highlight details about the {target} that users may find important.\n\
Do NOT invent fictional or hypothetical scenarios. If you are not confident the connection is real, output UNKNOWN.\n\
The statement should explicitly include BOTH eventss' names (do not use pronouns), and keep it to ONE sentence.\n\
Anchor Target: {target}\n\
Event 1: {event_1}\n\
Event 2: {event_2}";

pub const QA_TEMPLATE: &str = "Please act as an information assistant to help users learn about pertinent details.\n\
Given a factual statement about the target, rewrite it into ONE QA pair.\n\
The question should highlight an important detail from the statement about Contral Context.\n\
The question MUST include the target entity's name (do not use pronouns).\n\
Target Entity: {target}\n\
Central Context (Obj): {obj}\n\
Statement: {event}";

pub const EXTRACTION_TEMPLATE: &str = "List every named entity, work, event, place, organization and date mentioned in the text below.\n\
Write one entity per line, exactly as it appears in the text, with no numbering or commentary. If there are none, write nothing.\n\
Text:\n\
{text}";

const ELICIT_HEADER: &str = "Recall information from your own internal knowledge.";
const EVENT_HEADER: &str =
    "Please act as an information assistant to help users learn about pertinent details regarding the target.";
const QA_HEADER: &str =
    "Please act as an information assistant to help users learn about pertinent details.\nGiven a factual statement";
const EXTRACTION_HEADER: &str = "List every named entity, work, event, place, organization and date";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Hop0,
    NeighborHop,
}

/// Renders an elicitation prompt. A description, when given, is inserted as
/// its own line after the `Target:` line; the published templates have no
/// slot for it.
pub fn render_prompt(
    kind: PromptKind,
    target: &str,
    neighbor: Option<&str>,
    description: Option<&str>,
) -> Result<String, ElicitError> {
    let mut out = match (kind, neighbor) {
        (PromptKind::Hop0, None) => HOP0_TEMPLATE.replace("{target}", target),
        (PromptKind::Hop0, Some(_)) => return Err(ElicitError::UnexpectedNeighbor),
        (PromptKind::NeighborHop, Some(n)) => NEIGHBOR_TEMPLATE
            .replace("{target}", target)
            .replace("{neighbor}", n),
        (PromptKind::NeighborHop, None) => return Err(ElicitError::MissingNeighbor),
    };
    if let Some(d) = description.map(str::trim).filter(|d| !d.is_empty()) {
        let line = format!("Target: {target}\n");
        if let Some(pos) = out.find(&line) {
            out.insert_str(pos + line.len(), &format!("Description: {d}\n"));
        }
    }
    Ok(out)
}

pub fn render_event_prompt(target: &str, event_1: &str, event_2: &str) -> String {
    EVENT_TEMPLATE
        .replace("{target}", target)
        .replace("{event_1}", event_1)
        .replace("{event_2}", event_2)
}

pub fn render_qa_prompt(target: &str, obj: &str, event: &str) -> String {
    QA_TEMPLATE
        .replace("{target}", target)
        .replace("{obj}", obj)
        .replace("{event}", event)
}

pub fn render_extraction_prompt(text: &str) -> String {
    EXTRACTION_TEMPLATE.replace("{text}", text)
}

/// A registry prompt with its slots recovered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedPrompt {
    Hop0 { target: String },
    NeighborHop { target: String, neighbor: String },
    Event { target: String, event_1: String, event_2: String },
    Qa { target: String, obj: String, event: String },
    Extraction { text: String },
}

fn field<'a>(prompt: &'a str, label: &str) -> Option<&'a str> {
    prompt
        .lines()
        .find_map(|l| l.strip_prefix(label))
        .map(str::trim)
}

/// Recognizes a registry prompt by its fixed header and slot labels.
pub fn parse_prompt(prompt: &str) -> Option<ParsedPrompt> {
    if let Some(rest) = prompt.strip_prefix(EXTRACTION_HEADER) {
        let text = rest.split_once("\nText:\n")?.1;
        return Some(ParsedPrompt::Extraction { text: text.to_string() });
    }
    if prompt.starts_with(ELICIT_HEADER) {
        let target = field(prompt, "Target: ")?.to_string();
        return Some(match field(prompt, "Neighbor: ") {
            Some(n) => ParsedPrompt::NeighborHop {
                target,
                neighbor: n.to_string(),
            },
            None => ParsedPrompt::Hop0 { target },
        });
    }
    if prompt.starts_with(EVENT_HEADER) {
        return Some(ParsedPrompt::Event {
            target: field(prompt, "Anchor Target: ")?.to_string(),
            event_1: field(prompt, "Event 1: ")?.to_string(),
            event_2: field(prompt, "Event 2: ")?.to_string(),
        });
    }
    if prompt.starts_with(QA_HEADER) {
        return Some(ParsedPrompt::Qa {
            target: field(prompt, "Target Entity: ")?.to_string(),
            obj: field(prompt, "Central Context (Obj): ")?.to_string(),
            event: prompt.split_once("\nStatement: ")?.1.trim().to_string(),
        });
    }
    None
}
