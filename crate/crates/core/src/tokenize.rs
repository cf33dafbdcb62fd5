//! Word segmentation shared by the sparse index, the hashing embedder and
//! the ROUGE scorer.

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_connector(c: char) -> bool {
    matches!(c, '.' | ':' | '-')
}

/// Lowercased tokens. Runs of `.`, `:` or `-` between two word characters are
/// kept inside the token, so `ess::get_pin_capacitance` and `v1.2` survive
/// intact while a sentence-final period does not.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !is_word_char(chars[i]) {
            i += 1;
            continue;
        }
        let start = i;
        loop {
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
            }
            let mut j = i;
            while j < chars.len() && is_connector(chars[j]) {
                j += 1;
            }
            if j > i && j < chars.len() && is_word_char(chars[j]) {
                i = j;
            } else {
                break;
            }
        }
        tokens.push(lowercase(&chars[start..i]));
    }
    tokens
}

/// Plain word tokens: connectors always split.
pub fn simple_tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !is_word_char(c))
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn lowercase(chars: &[char]) -> String {
    chars.iter().flat_map(|c| c.to_lowercase()).collect()
}

/// Splits at newlines and after `.`, `!` or `?` when followed by whitespace.
/// Returned slices are trimmed; blank ones are dropped.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        let cut = match c {
            '\n' => Some((i, i + 1)),
            '.' | '!' | '?' => match iter.peek() {
                Some(&(_, next)) if next.is_whitespace() => Some((i + 1, i + 1)),
                _ => None,
            },
            _ => None,
        };
        if let Some((end, resume)) = cut {
            push_trimmed(&mut out, &text[start..end]);
            start = resume;
        }
    }
    push_trimmed(&mut out, &text[start..]);
    out
}

fn push_trimmed<'a>(out: &mut Vec<&'a str>, s: &'a str) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  ,;  ").is_empty());
    }

    #[test]
    fn lowercases_and_splits() {
        assert_eq!(tokenize("The CAT sat"), vec!["the", "cat", "sat"]);
    }

    #[test]
    fn command_names_stay_whole() {
        assert_eq!(
            tokenize("ess::get_pin_capacitance"),
            vec!["ess::get_pin_capacitance"]
        );
        assert_eq!(
            tokenize("Run ess::get_pin_capacitance, then stop."),
            vec!["run", "ess::get_pin_capacitance", "then", "stop"]
        );
    }

    #[test]
    fn connectors_need_word_chars_on_both_sides() {
        assert_eq!(tokenize("v1.2 e.g. a-b -x y- ::z"), vec!["v1.2", "e.g", "a-b", "x", "y", "z"]);
    }

    #[test]
    fn unicode_words() {
        assert_eq!(tokenize("Größe ÉCOLE"), vec!["größe", "école"]);
    }

    #[test]
    fn simple_tokens_split_connectors() {
        assert_eq!(
            simple_tokenize("ess::get_pin_capacitance v1.2"),
            vec!["ess", "get_pin_capacitance", "v1", "2"]
        );
    }

    #[test]
    fn sentences() {
        assert_eq!(
            split_sentences("One. Two!  Three?\nfour v1.2 five\n\n"),
            vec!["One.", "Two!", "Three?", "four v1.2 five"]
        );
        assert!(split_sentences("").is_empty());
    }
}
