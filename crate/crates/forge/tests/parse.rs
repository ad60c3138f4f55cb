use logicclip_forge::{parse_llm_response, render_numbered, ForgeError, ParseFailure};
use proptest::prelude::*;

fn failure(text: &str, expected: usize) -> ParseFailure {
    match parse_llm_response(text, expected) {
        Err(ForgeError::Parse { failure, raw }) => {
            assert_eq!(raw, text);
            failure
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn plain_list() {
    assert_eq!(parse_llm_response("1. A\n2. B\n3. C", 3).unwrap().captions, ["A", "B", "C"]);
}

#[test]
fn preamble_and_blank_lines_are_skipped() {
    let text = "Sure! Here are three hard negatives for the caption:\n\n1. A\n\n2.   B  \n\n3. C\n\nLet me know if you need more.";
    assert_eq!(parse_llm_response(text, 3).unwrap().captions, ["A", "B", "C"]);
}

#[test]
fn medicine_marks_the_first_option() {
    let p = parse_llm_response("1. right\n2. w1\n3. w2\n4. w3\n5. w4", 5).unwrap();
    assert_eq!(p.captions.len(), 5);
    assert_eq!(p.correct_index, Some(0));
}

#[test]
fn malformed_lists() {
    assert_eq!(failure("1. A\n3. C", 3), ParseFailure::Missing(2));
    assert_eq!(failure("1. A\n2. B", 3), ParseFailure::Missing(3));
    assert_eq!(failure("1. A\n1. B\n2. C\n3. D", 3), ParseFailure::Duplicate(1));
    assert_eq!(failure("1. A\n2. \n3. C", 3), ParseFailure::EmptyCaption(2));
    assert_eq!(failure("1. A\n2. B\n3. C\n4. D", 3), ParseFailure::Extra(4));
    assert_eq!(failure("2. B\n1. A\n3. C", 3), ParseFailure::OutOfOrder { expected: 1, found: 2 });
    assert_eq!(failure("no list at all", 3), ParseFailure::Missing(1));
    assert_eq!(failure("1. A\n2. B\n3. C\n4. D", 4), ParseFailure::UnsupportedCount(4));
}

fn caption() -> impl Strategy<Value = String> {
    "[^\\r\\n\\u{85}\\u{2028}\\u{2029}]{1,80}"
        .prop_map(|s| s.trim().to_string())
        .prop_filter("non-empty after trimming", |s| !s.is_empty())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn render_then_parse_is_identity(a in caption(), b in caption(), c in caption()) {
        let captions = vec![a, b, c];
        let parsed = parse_llm_response(&render_numbered(&captions), 3).unwrap();
        prop_assert_eq!(parsed.captions, captions);
    }
}

proptest! {
    #[test]
    fn five_option_lists_round_trip(items in proptest::collection::vec(caption(), 5)) {
        let parsed = parse_llm_response(&render_numbered(&items), 5).unwrap();
        prop_assert_eq!(parsed.captions, items);
    }
}
