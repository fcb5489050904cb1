//! Text helpers shared by the segmenter, the scorers and the evaluation harness.

use unicode_normalization::UnicodeNormalization;

/// Unicode NFC form of `text`.
pub fn nfc(text: &str) -> String {
    text.nfc().collect()
}

/// Lowercased alphanumeric runs. Everything else separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Collapse every whitespace run into one ASCII space and trim the ends.
pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Key used to decide whether two sentences are the same opinion:
/// NFC, lowercase, collapsed whitespace, terminal punctuation stripped.
pub fn dedup_key(text: &str) -> String {
    let lowered = nfc(text).to_lowercase();
    let collapsed = collapse_whitespace(&lowered);
    collapsed
        .trim_end_matches(|c: char| is_terminal_punct(c) || c.is_whitespace())
        .to_string()
}

pub(crate) fn is_terminal_punct(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | ';' | ':' | ',' | '…')
}

/// Number of Unicode scalar values in `text`.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Slice `text` by character offsets `[start, end)`.
pub fn char_slice(text: &str, start: usize, end: usize) -> &str {
    let mut indices = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()));
    let begin = indices.nth(start).unwrap_or(text.len());
    let stop = if end > start {
        indices.nth(end - start - 1).unwrap_or(text.len())
    } else {
        begin
    };
    &text[begin..stop]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_splits_on_non_alphanumeric() {
        assert_eq!(
            tokenize("The cat, sat!  well-written"),
            vec!["the", "cat", "sat", "well", "written"]
        );
        assert!(tokenize(" ... ").is_empty());
    }

    #[test]
    fn dedup_key_ignores_case_spacing_and_final_punctuation() {
        assert_eq!(
            dedup_key("This  paper is\nwell-written."),
            dedup_key("this paper is well-written")
        );
        assert_ne!(dedup_key("A."), dedup_key("B."));
    }

    #[test]
    fn char_slice_counts_characters_not_bytes() {
        let s = "héllo wörld";
        assert_eq!(char_slice(s, 0, 5), "héllo");
        assert_eq!(char_slice(s, 6, 11), "wörld");
        assert_eq!(char_slice(s, 3, 3), "");
    }
}
