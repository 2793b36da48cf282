use proptest::prelude::*;
use reliance::corpus::{normalize, porter_stem, preprocess_text, tokenize, StopwordList};

#[test]
fn porter_matches_reference_vocabulary() {
    let data = include_str!("data/porter_vectors.txt");
    let mut checked = 0;
    for line in data.lines() {
        let (word, stem) = line.split_once(' ').unwrap();
        assert_eq!(porter_stem(word), stem, "stem({word})");
        checked += 1;
    }
    assert!(checked > 1000);
}

#[test]
fn stemming_is_not_idempotent() {
    // Re-stemming a stem can strip further; the full pipeline therefore is
    // not a fixed point even though tokenize+normalize is.
    assert_eq!(porter_stem("agreed"), "agre");
    assert_eq!(porter_stem("agre"), "agr");
    let sw = StopwordList::english();
    let once = preprocess_text("They agreed", &sw);
    assert_eq!(once, ["agre"]);
    assert_eq!(preprocess_text(&once.join(" "), &sw), ["agr"]);
}

proptest! {
    #[test]
    fn normalized_tokens_are_lowercase_alnum(text in "[ -~\\n\\t]{0,200}") {
        let sw = StopwordList::english();
        for tok in preprocess_text(&text, &sw) {
            prop_assert!(tok.chars().any(char::is_alphanumeric));
            prop_assert_eq!(tok.to_lowercase(), tok.clone());
        }
    }

    #[test]
    fn tokenize_normalize_is_idempotent(text in "[ -~\\n]{0,200}") {
        let sw = StopwordList::english();
        let once = normalize(&tokenize(&text), &sw);
        let twice = normalize(&tokenize(&once.join(" ")), &sw);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn tokenize_preserves_non_space_chars(text in "[ -~]{0,120}") {
        let joined: String = tokenize(&text).concat();
        let expected: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        prop_assert_eq!(joined, expected);
    }
}
