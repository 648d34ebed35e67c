use super::{CitationRef, SourceRange, LLM_MEMORY_MARKER};
use crate::intent::IntentCategory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TokenKind {
    Text,
    Begin(IntentCategory),
    End(IntentCategory),
    Marker(CitationRef),
    /// Marker-shaped text whose index is zero or does not fit in `u32`.
    BadIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub range: SourceRange,
}

impl Token {
    pub fn is_tag(&self) -> bool {
        matches!(self.kind, TokenKind::Begin(_) | TokenKind::End(_))
    }
}

const TAGS: [(&str, TokenKind); 4] = [
    ("<bcit>", TokenKind::Begin(IntentCategory::Citation)),
    ("<ecit>", TokenKind::End(IntentCategory::Citation)),
    ("<bpit>", TokenKind::Begin(IntentCategory::Paragraph)),
    ("<epit>", TokenKind::End(IntentCategory::Paragraph)),
];

/// Splits `raw[range]` into text, tag and citation-marker tokens.
/// Adjacent text is merged into a single token.
pub(crate) fn lex(raw: &str, range: SourceRange) -> Vec<Token> {
    let bytes = raw.as_bytes();
    let mut tokens = Vec::new();
    let mut text_start = range.start;
    let mut i = range.start;
    while i < range.end {
        let rest = &raw[i..range.end];
        let matched = match bytes[i] {
            b'<' => TAGS
                .iter()
                .find(|(lit, _)| rest.starts_with(lit))
                .map(|(lit, kind)| (*kind, lit.len())),
            b'[' => marker(rest),
            _ => None,
        };
        match matched {
            Some((kind, len)) => {
                if text_start < i {
                    tokens.push(Token {
                        kind: TokenKind::Text,
                        range: SourceRange::new(text_start, i),
                    });
                }
                tokens.push(Token {
                    kind,
                    range: SourceRange::new(i, i + len),
                });
                i += len;
                text_start = i;
            }
            None => {
                // Every special byte is ASCII, so stepping over a whole char
                // keeps `i` on a boundary.
                i += rest.chars().next().map_or(1, char::len_utf8);
            }
        }
    }
    if text_start < range.end {
        tokens.push(Token {
            kind: TokenKind::Text,
            range: SourceRange::new(text_start, range.end),
        });
    }
    tokens
}

/// Recognizes a citation marker at the start of `s` (which begins with `[`).
fn marker(s: &str) -> Option<(TokenKind, usize)> {
    if s.starts_with(LLM_MEMORY_MARKER) {
        return Some((TokenKind::Marker(CitationRef::LlmMemory), LLM_MEMORY_MARKER.len()));
    }
    let body_start = if let Some(after) = s.strip_prefix("[Citation") {
        let ws = after
            .bytes()
            .take_while(|b| *b == b' ' || *b == b'\t')
            .count();
        if ws == 0 {
            return None;
        }
        "[Citation".len() + ws
    } else {
        1
    };
    let digits = s[body_start..]
        .bytes()
        .take_while(u8::is_ascii_digit)
        .count();
    if digits == 0 {
        return None;
    }
    let close = body_start + digits;
    if s.as_bytes().get(close) != Some(&b']') {
        return None;
    }
    let len = close + 1;
    let kind = s[body_start..close]
        .parse::<u32>()
        .ok()
        .and_then(CitationRef::candidate)
        .map_or(TokenKind::BadIndex, TokenKind::Marker);
    Some((kind, len))
}

/// True when `text` contains a citation marker.
pub(crate) fn contains_marker(text: &str) -> bool {
    lex(text, SourceRange::new(0, text.len()))
        .iter()
        .any(|t| matches!(t.kind, TokenKind::Marker(_)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<TokenKind> {
        lex(s, SourceRange::new(0, s.len()))
            .into_iter()
            .map(|t| t.kind)
            .collect()
    }

    #[test]
    fn markers_and_tags() {
        use TokenKind::*;
        assert_eq!(
            kinds("a <bcit>x<ecit> [1][Citation 22] [LLM MEMORY | 2025]."),
            vec![
                Text,
                Begin(IntentCategory::Citation),
                Text,
                End(IntentCategory::Citation),
                Text,
                Marker(CitationRef::candidate(1).unwrap()),
                Marker(CitationRef::candidate(22).unwrap()),
                Text,
                Marker(CitationRef::LlmMemory),
                Text,
            ]
        );
    }

    #[test]
    fn non_markers_stay_text() {
        assert_eq!(kinds("[a] [1 ] [Citation1] [LLM MEMORY | 2024] <bcit"), vec![TokenKind::Text]);
    }

    #[test]
    fn zero_and_overflow_are_bad_indices() {
        assert_eq!(kinds("[0]"), vec![TokenKind::BadIndex]);
        assert_eq!(kinds("[99999999999]"), vec![TokenKind::BadIndex]);
    }

    #[test]
    fn multibyte_text_is_safe() {
        let s = "é[1]ü<bpit>";
        let toks = lex(s, SourceRange::new(0, s.len()));
        assert_eq!(toks.len(), 4);
        assert!(toks.iter().all(|t| s.is_char_boundary(t.range.start)));
    }
}
