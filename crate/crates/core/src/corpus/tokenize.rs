use super::stopwords::StopwordList;

fn is_edge_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

/// Whitespace split, then detach leading and trailing punctuation into
/// single-character tokens. Punctuation inside a word is kept.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let start = chunk.find(|c: char| !is_edge_punct(c));
        let Some(start) = start else {
            out.extend(chunk.chars().map(String::from));
            continue;
        };
        let end = chunk
            .char_indices()
            .rev()
            .find(|&(_, c)| !is_edge_punct(c))
            .map(|(i, c)| i + c.len_utf8())
            .expect("chunk has a non-punctuation char");
        out.extend(chunk[..start].chars().map(String::from));
        out.push(chunk[start..end].to_string());
        out.extend(chunk[end..].chars().map(String::from));
    }
    out
}

/// Lowercase, then drop stopwords and tokens with no alphanumeric character.
pub fn normalize<S: AsRef<str>>(tokens: &[S], stopwords: &StopwordList) -> Vec<String> {
    tokens
        .iter()
        .map(|t| t.as_ref().to_lowercase())
        .filter(|t| t.chars().any(char::is_alphanumeric) && !stopwords.contains(t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn detaches_edge_punctuation() {
        assert_eq!(tokenize("Hello, world!"), toks(&["Hello", ",", "world", "!"]));
        assert_eq!(tokenize("\"(quoted)\""), toks(&["\"", "(", "quoted", ")", "\""]));
        assert_eq!(tokenize("..."), toks(&[".", ".", "."]));
    }

    #[test]
    fn keeps_internal_punctuation() {
        assert_eq!(tokenize("don't stop"), toks(&["don't", "stop"]));
        assert_eq!(tokenize("state-of-the-art."), toks(&["state-of-the-art", "."]));
    }

    #[test]
    fn empty_text_has_no_tokens() {
        assert!(tokenize("").is_empty());
        assert!(tokenize(" \n\t ").is_empty());
    }

    #[test]
    fn normalize_examples() {
        let sw = StopwordList::new(["the"]).unwrap();
        assert_eq!(normalize(&toks(&["The", ",", "Dog"]), &sw), toks(&["dog"]));
        assert!(normalize::<String>(&[], &sw).is_empty());
        let sw = StopwordList::new(["the", "a"]).unwrap();
        assert!(normalize(&toks(&["THE", "A"]), &sw).is_empty());
    }
}
