//! Case-insensitive text matching shared by extraction, oracle rendering and
//! sample validation.
//!
//! Matching works on folded `char` sequences so that offsets map back to the
//! original string one-to-one, even when a full Unicode lowercase mapping would
//! change the length.

use std::ops::Range;

fn fold(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

fn folded_chars(s: &str) -> Vec<(usize, char)> {
    s.char_indices().map(|(i, c)| (i, fold(c))).collect()
}

/// Byte ranges of every case-insensitive occurrence of `needle` in `haystack`.
///
/// With `word_boundary` set, a match must not be flanked by alphanumeric
/// characters. Matches never overlap; scanning resumes after each hit.
pub fn find_all(haystack: &str, needle: &str, word_boundary: bool) -> Vec<Range<usize>> {
    let hay = folded_chars(haystack);
    let pat: Vec<char> = needle.chars().map(fold).collect();
    let mut out = Vec::new();
    if pat.is_empty() || pat.len() > hay.len() {
        return out;
    }
    let mut i = 0;
    while i + pat.len() <= hay.len() {
        let hit = hay[i..i + pat.len()]
            .iter()
            .zip(&pat)
            .all(|((_, h), p)| h == p);
        let bounded = !word_boundary
            || ((i == 0 || !hay[i - 1].1.is_alphanumeric())
                && hay
                    .get(i + pat.len())
                    .is_none_or(|(_, c)| !c.is_alphanumeric()));
        if hit && bounded {
            let start = hay[i].0;
            let end = hay.get(i + pat.len()).map_or(haystack.len(), |(b, _)| *b);
            out.push(start..end);
            i += pat.len();
        } else {
            i += 1;
        }
    }
    out
}

/// Case-insensitive substring test.
pub fn contains_ci(haystack: &str, needle: &str) -> bool {
    !needle.is_empty() && !find_all(haystack, needle, false).is_empty()
}

/// Replaces every word-bounded, case-insensitive occurrence of `needle`.
pub fn replace_word_ci(haystack: &str, needle: &str, replacement: &str) -> String {
    let mut out = String::with_capacity(haystack.len());
    let mut last = 0;
    for r in find_all(haystack, needle, true) {
        out.push_str(&haystack[last..r.start]);
        out.push_str(replacement);
        last = r.end;
    }
    out.push_str(&haystack[last..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_case_insensitive_matches() {
        let s = "Blank Space and blank space";
        assert_eq!(find_all(s, "BLANK SPACE", true).len(), 2);
        assert!(contains_ci(s, "space AND"));
    }

    #[test]
    fn word_boundary_rejects_embedded_names() {
        assert!(find_all("Redwood", "red", true).is_empty());
        assert_eq!(find_all("Redwood", "red", false).len(), 1);
        assert_eq!(find_all("(Red)", "red", true), vec![1..4]);
    }

    #[test]
    fn replace_keeps_surrounding_text() {
        assert_eq!(
            replace_word_ci("Taylor Swift released Red.", "taylor swift", "which entity"),
            "which entity released Red."
        );
    }

    #[test]
    fn empty_needle_never_matches() {
        assert!(!contains_ci("abc", ""));
    }
}
