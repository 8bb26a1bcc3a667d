//! Entity extraction from elicited responses.
//!
//! The default path asks the responder itself for a line-delimited entity
//! list. The heuristic path, used on request or when that call fails, takes
//! maximal runs of capitalized tokens plus four-digit years.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::prompts::render_extraction_prompt;
use super::responder::Responder;
use crate::memgraph::{normalize_mention, EntityId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionMode {
    /// Responder-assisted, falling back to the heuristic on failure.
    #[default]
    Responder,
    Heuristic,
}

/// Entities found in one response.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Extraction {
    /// Occurrences per entity; the key set is the per-response entity set.
    pub counts: BTreeMap<EntityId, u64>,
    pub surface_forms: BTreeMap<EntityId, BTreeSet<String>>,
    /// The responder was asked to extract.
    pub queried: bool,
    /// The heuristic produced the result.
    pub used_fallback: bool,
}

impl Extraction {
    pub fn entities(&self) -> BTreeSet<EntityId> {
        self.counts.keys().cloned().collect()
    }

    fn add(&mut self, raw: &str, exclude: &[EntityId]) {
        let Ok(id) = normalize_mention(raw) else {
            return;
        };
        if exclude.contains(&id) {
            return;
        }
        *self.counts.entry(id.clone()).or_default() += 1;
        self.surface_forms
            .entry(id)
            .or_default()
            .insert(raw.trim().to_string());
    }
}

/// Extracts entities from `response`, dropping anything in `exclude`.
pub fn extract_entities(
    response: &str,
    responder: &dyn Responder,
    mode: ExtractionMode,
    sample_index: u32,
    exclude: &[EntityId],
) -> Extraction {
    let mut out = Extraction::default();
    if response.trim().is_empty() {
        return out;
    }
    if mode == ExtractionMode::Responder {
        out.queried = true;
        match responder.complete(&render_extraction_prompt(response), sample_index) {
            Ok(listing) => {
                for line in listing.lines() {
                    let item = strip_list_marker(line);
                    if !item.is_empty() {
                        out.add(item, exclude);
                    }
                }
                return out;
            }
            Err(e) => log::debug!("extraction call failed, using heuristic: {e}"),
        }
    }
    out.used_fallback = true;
    for span in heuristic_spans(response) {
        out.add(&span, exclude);
    }
    out
}

fn strip_list_marker(line: &str) -> &str {
    let t = line.trim();
    let t = t.trim_start_matches(['-', '*', '\u{2022}']).trim_start();
    let digits = t.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &t[digits..];
        if let Some(r) = rest.strip_prefix(['.', ')']) {
            return r.trim();
        }
    }
    t
}

/// Words that open a capitalized run only because they start a sentence.
const LEADING_STOPWORDS: &[&str] = &[
    "a", "an", "the", "in", "on", "at", "of", "for", "and", "but", "or", "as", "by", "to", "from",
    "with", "it", "its", "he", "she", "they", "his", "her", "their", "this", "that", "these",
    "those", "i", "we", "you", "after", "before", "during", "when", "while", "there",
];

fn is_year(tok: &str) -> bool {
    tok.len() == 4 && tok.chars().all(|c| c.is_ascii_digit())
}

/// Capitalized-run and year heuristic.
pub fn heuristic_spans(text: &str) -> Vec<String> {
    let mut spans = Vec::new();
    let mut run: Vec<&str> = Vec::new();

    let flush = |run: &mut Vec<&str>, spans: &mut Vec<String>| {
        while run
            .first()
            .is_some_and(|w| LEADING_STOPWORDS.contains(&w.to_lowercase().as_str()))
        {
            run.remove(0);
        }
        if !run.is_empty() {
            spans.push(run.join(" "));
        }
        run.clear();
    };

    for raw in text.split_whitespace() {
        let core = raw.trim_matches(|c: char| !c.is_alphanumeric());
        let ends_clause = raw
            .trim_end_matches(['"', '\'', ')', '\u{201d}', '\u{2019}'])
            .ends_with(['.', ',', ';', ':', '!', '?']);
        if core.is_empty() {
            flush(&mut run, &mut spans);
            continue;
        }
        if is_year(core) {
            flush(&mut run, &mut spans);
            spans.push(core.to_string());
            continue;
        }
        if core.chars().next().is_some_and(char::is_uppercase) {
            run.push(core);
            if ends_clause {
                flush(&mut run, &mut spans);
            }
        } else {
            flush(&mut run, &mut spans);
        }
    }
    flush(&mut run, &mut spans);
    spans
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elicit::responder::{FnResponder, ResponderError};

    fn failing() -> FnResponder<impl Fn(&str, u32) -> Result<String, ResponderError> + Send + Sync> {
        FnResponder(|_: &str, _: u32| Err(ResponderError::Other("down".into())))
    }

    fn ids(e: &Extraction) -> Vec<&str> {
        e.counts.keys().map(EntityId::as_str).collect()
    }

    #[test]
    fn heuristic_on_reference_sentence() {
        let target = normalize_mention("Taylor Swift").unwrap();
        let e = extract_entities(
            "Taylor Swift released Blank Space in 2014.",
            &failing(),
            ExtractionMode::Heuristic,
            0,
            &[target],
        );
        assert_eq!(ids(&e), vec!["2014", "blank space"]);
        assert!(e.used_fallback && !e.queried);
    }

    #[test]
    fn responder_failure_falls_back() {
        let e = extract_entities("Ed Sheeran wrote Perfect.", &failing(), ExtractionMode::Responder, 0, &[]);
        assert!(e.queried && e.used_fallback);
        assert_eq!(ids(&e), vec!["ed sheeran", "perfect"]);
    }

    #[test]
    fn empty_listing_gives_empty_set() {
        let r = FnResponder(|_: &str, _: u32| Ok(String::new()));
        let e = extract_entities("Anything at all.", &r, ExtractionMode::Responder, 0, &[]);
        assert!(e.counts.is_empty());
        assert!(!e.used_fallback);
    }

    #[test]
    fn duplicate_lines_count_twice() {
        let r = FnResponder(|_: &str, _: u32| Ok("1. Blank Space\n2. blank space\n\n- Red".to_string()));
        let e = extract_entities("x", &r, ExtractionMode::Responder, 0, &[]);
        assert_eq!(e.counts[&normalize_mention("blank space").unwrap()], 2);
        assert_eq!(e.entities().len(), 2);
        assert_eq!(e.surface_forms[&normalize_mention("blank space").unwrap()].len(), 2);
    }

    #[test]
    fn sentence_openers_are_dropped() {
        assert_eq!(
            heuristic_spans("The Eras Tour began in 2023. I loved it."),
            vec!["Eras Tour", "2023"]
        );
        assert_eq!(
            heuristic_spans("1. Folklore won Album of the Year."),
            vec!["Folklore", "Album", "Year"]
        );
    }
}
