//! Answer normalization shared by every correctness metric.

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// SQuAD-style answer normalization.
///
/// Lowercases, drops every character that is not a letter, digit or
/// whitespace, removes the whole-word articles `a`, `an` and `the`, and
/// collapses runs of whitespace into single spaces.
///
/// ```
/// assert_eq!(citeval::normalize_text("The Story of Qiu Ju."), "story of qiu ju");
/// assert_eq!(citeval::normalize_text("July 2, 1776"), "july 2 1776");
/// ```
pub fn normalize_text(s: &str) -> String {
    let stripped: String = s
        .to_lowercase()
        .chars()
        .filter_map(|c| {
            if c.is_whitespace() {
                Some(' ')
            } else if c.is_alphanumeric() {
                Some(c)
            } else {
                None
            }
        })
        .collect();

    stripped
        .split(' ')
        .filter(|w| !w.is_empty() && !ARTICLES.contains(w))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lowercased alphanumeric tokens, without article removal. Used by ROUGE.
pub(crate) fn rouge_tokens(s: &str) -> Vec<String> {
    s.to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .map(str::to_owned)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(normalize_text("The Story of Qiu Ju."), "story of qiu ju");
        assert_eq!(normalize_text(""), "");
        assert_eq!(normalize_text("July 2, 1776"), "july 2 1776");
    }

    #[test]
    fn articles_are_whole_words_only() {
        assert_eq!(normalize_text("Another theory, an apple"), "another theory apple");
        assert_eq!(normalize_text("  A\tTHE\nan "), "");
    }

    #[test]
    fn keeps_non_ascii_letters() {
        assert_eq!(normalize_text("Café Müller!"), "café müller");
    }

    #[test]
    fn rouge_tokens_keep_articles() {
        assert_eq!(rouge_tokens("A b, C."), vec!["a", "b", "c"]);
    }

    proptest! {
        #[test]
        fn idempotent(s in "\\PC{0,40}") {
            let once = normalize_text(&s);
            prop_assert_eq!(normalize_text(&once), once);
        }

        #[test]
        fn idempotent_on_wordy_input(s in "([Tt]he|[Aa]n?|[a-zA-Z]{1,6}|[.,!?' ]){0,20}") {
            let once = normalize_text(&s);
            prop_assert_eq!(normalize_text(&once), once);
        }
    }
}
