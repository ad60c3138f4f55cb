//! Numbered-list scanner for backend responses.

use crate::error::{ForgeError, ParseFailure, Result};

/// Captions extracted from a response. For five-option (medicine) lists the
/// first option is the correct one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedList {
    pub captions: Vec<String>,
    pub correct_index: Option<usize>,
}

/// Extracts `1. text` .. `N. text` lines, skipping anything that does not
/// start with a number and a period.
pub fn parse_llm_response(text: &str, expected: usize) -> Result<ParsedList> {
    let fail = |failure| ForgeError::Parse { failure, raw: text.to_string() };
    if expected != 3 && expected != 5 {
        return Err(fail(ParseFailure::UnsupportedCount(expected)));
    }
    let mut items: Vec<(usize, &str)> = Vec::new();
    for line in text.lines() {
        if let Some(item) = numbered(line) {
            items.push(item);
        }
    }
    for (i, &(n, _)) in items.iter().enumerate() {
        if items[..i].iter().any(|&(m, _)| m == n) {
            return Err(fail(ParseFailure::Duplicate(n)));
        }
    }
    for (i, &(n, body)) in items.iter().enumerate() {
        let want = i + 1;
        if want > expected {
            return Err(fail(ParseFailure::Extra(n)));
        }
        if n != want {
            return Err(fail(if items.iter().any(|&(m, _)| m == want) {
                ParseFailure::OutOfOrder { expected: want, found: n }
            } else {
                ParseFailure::Missing(want)
            }));
        }
        if body.is_empty() {
            return Err(fail(ParseFailure::EmptyCaption(n)));
        }
    }
    if items.len() < expected {
        return Err(fail(ParseFailure::Missing(items.len() + 1)));
    }
    Ok(ParsedList {
        captions: items.into_iter().map(|(_, body)| body.to_string()).collect(),
        correct_index: (expected == 5).then_some(0),
    })
}

fn numbered(line: &str) -> Option<(usize, &str)> {
    let line = line.trim();
    let digits = line.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 || digits > 3 || line.as_bytes().get(digits) != Some(&b'.') {
        return None;
    }
    let rest = &line[digits + 1..];
    if !(rest.is_empty() || rest.starts_with(char::is_whitespace)) {
        return None;
    }
    Some((line[..digits].parse().ok()?, rest.trim()))
}

/// The list format backends are asked for, one caption per line.
pub fn render_numbered<S: AsRef<str>>(captions: &[S]) -> String {
    captions.iter().enumerate().map(|(i, c)| format!("{}. {}", i + 1, c.as_ref())).collect::<Vec<_>>().join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_list() {
        let p = parse_llm_response("1. A\n2. B\n3. C", 3).unwrap();
        assert_eq!(p.captions, ["A", "B", "C"]);
        assert_eq!(p.correct_index, None);
    }

    #[test]
    fn gap_is_reported() {
        match parse_llm_response("1. A\n3. C", 3) {
            Err(ForgeError::Parse { failure, raw }) => {
                assert_eq!(failure, ParseFailure::Missing(2));
                assert_eq!(raw, "1. A\n3. C");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn decimals_and_dates_are_not_items() {
        assert_eq!(numbered("3.5 apples"), None);
        assert_eq!(numbered("2024. was a year"), None);
        assert_eq!(numbered("10. ten"), Some((10, "ten")));
        assert_eq!(numbered("  2.   padded  "), Some((2, "padded")));
    }
}
