//! Tokenization and sentence segmentation.

use super::{Sentence, Token};

/// Abbreviations whose trailing period does not end a sentence.
const ABBREVIATIONS: &[&str] = &[
    "dr", "mr", "mrs", "ms", "prof", "st", "jr", "sr", "vs", "etc", "eg", "ie", "approx",
    "mg", "mcg", "gm", "ml", "dl", "oz", "tab", "tabs", "cap", "caps",
];

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Split text into tokens: maximal alphanumeric runs (keeping '.', '/', '-'
/// between digits, so "7.2", "3/78" and "2074-05-01" stay whole) plus
/// single-character punctuation tokens. Offsets are byte positions into the
/// original text.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut tokens = Vec::new();
    let mut i = 0usize;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if is_word_char(c) {
            let mut j = i + 1;
            while j < chars.len() {
                let cj = chars[j].1;
                let digit_joiner = matches!(cj, '.' | '/' | '-')
                    && chars[j - 1].1.is_ascii_digit()
                    && j + 1 < chars.len()
                    && chars[j + 1].1.is_ascii_digit();
                if is_word_char(cj) || digit_joiner {
                    j += 1;
                } else {
                    break;
                }
            }
            let end = if j < chars.len() {
                chars[j].0
            } else {
                text.len()
            };
            tokens.push(Token {
                text: text[start..end].to_string(),
                start,
                end,
            });
            i = j;
        } else {
            let end = if i + 1 < chars.len() {
                chars[i + 1].0
            } else {
                text.len()
            };
            tokens.push(Token {
                text: text[start..end].to_string(),
                start,
                end,
            });
            i += 1;
        }
    }
    tokens
}

fn gap_has_blank_line(gap: &str) -> bool {
    let mut newlines = 0;
    for c in gap.chars() {
        if c == '\n' {
            newlines += 1;
            if newlines >= 2 {
                return true;
            }
        } else if !c.is_whitespace() {
            newlines = 0;
        }
    }
    false
}

fn is_bullet(tok: &Token) -> bool {
    matches!(tok.text.as_str(), "-" | "*" | "\u{2022}" | "o")
}

/// Segment a token stream into sentences. Boundaries fall after '.', '!', '?'
/// (unless the period closes a known abbreviation), after blank lines, after a
/// colon that ends its line, and before newline-initial bullet markers.
pub fn split_sentences(text: &str, tokens: &[Token]) -> Vec<Sentence> {
    let mut sentences = Vec::new();
    if tokens.is_empty() {
        return sentences;
    }
    let mut sent_start = 0usize;
    let close = |from: usize, to: usize, out: &mut Vec<Sentence>| {
        if from < to {
            out.push(Sentence {
                token_range: (from, to),
                start: tokens[from].start,
                end: tokens[to - 1].end,
            });
        }
    };
    for i in 0..tokens.len() {
        let tok = &tokens[i];
        let gap = if i + 1 < tokens.len() {
            &text[tok.end..tokens[i + 1].start]
        } else {
            &text[tok.end..]
        };
        let mut boundary = false;
        match tok.text.as_str() {
            "." => {
                let abbrev = i > 0
                    && ABBREVIATIONS.contains(&tokens[i - 1].text.to_lowercase().as_str())
                    // Only an immediately adjacent period closes an abbreviation.
                    && tokens[i - 1].end == tok.start;
                if !abbrev {
                    boundary = true;
                }
            }
            "!" | "?" => boundary = true,
            ":" if gap.contains('\n') => boundary = true,
            _ => {}
        }
        if gap_has_blank_line(gap) {
            boundary = true;
        }
        if !boundary && i + 1 < tokens.len() && gap.contains('\n') && is_bullet(&tokens[i + 1]) {
            boundary = true;
        }
        if boundary {
            close(sent_start, i + 1, &mut sentences);
            sent_start = i + 1;
        }
    }
    close(sent_start, tokens.len(), &mut sentences);
    sentences
}
