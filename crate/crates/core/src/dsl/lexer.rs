use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::DslError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Int(i64),
    Str(String),
    Name(String),
    Op(&'static str),
    End,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub pos: usize,
}

const OPS: [&str; 24] = [
    "**", "//", "<=", ">=", "==", "!=", ":=", "->", "(", ")", "[", "]", "{", "}", ",", ":", ".", "+", "-", "*", "/",
    "%", "<", ">",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, DslError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'_') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'.' || bytes[i] == b'e' || bytes[i] == b'E' || bytes[i] == b'x') {
                return Err(DslError::parse(start, "only decimal integer literals are supported"));
            }
            let digits: String = src[start..i].chars().filter(|&c| c != '_').collect();
            let n = digits.parse::<i64>().map_err(|_| DslError::parse(start, "integer literal out of range"))?;
            out.push(Token { tok: Tok::Int(n), pos: start });
            continue;
        }
        if c == b'_' || c.is_ascii_alphabetic() {
            while i < bytes.len() && (bytes[i] == b'_' || bytes[i].is_ascii_alphanumeric()) {
                i += 1;
            }
            out.push(Token { tok: Tok::Name(src[start..i].to_string()), pos: start });
            continue;
        }
        if c == b'\'' || c == b'"' {
            let (s, end) = string_literal(src, start)?;
            out.push(Token { tok: Tok::Str(s), pos: start });
            i = end;
            continue;
        }
        if c == b'=' && bytes.get(i + 1) != Some(&b'=') {
            return Err(DslError::parse(start, "assignment is not allowed"));
        }
        match OPS.iter().find(|op| src[i..].starts_with(**op)) {
            Some(op) => {
                out.push(Token { tok: Tok::Op(op), pos: start });
                i += op.len();
            }
            None => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(DslError::parse(start, alloc::format!("unexpected character {ch:?}")));
            }
        }
    }
    out.push(Token { tok: Tok::End, pos: src.len() });
    Ok(out)
}

fn string_literal(src: &str, start: usize) -> Result<(String, usize), DslError> {
    let quote = src.as_bytes()[start] as char;
    let mut out = String::new();
    let mut chars = src[start + 1..].char_indices();
    while let Some((off, ch)) = chars.next() {
        let at = start + 1 + off;
        match ch {
            c if c == quote => return Ok((out, at + 1)),
            '\n' => break,
            '\\' => {
                let Some((_, esc)) = chars.next() else { break };
                match esc {
                    '\\' => out.push('\\'),
                    '\'' => out.push('\''),
                    '"' => out.push('"'),
                    'n' => out.push('\n'),
                    't' => out.push('\t'),
                    'r' => out.push('\r'),
                    '0' => out.push('\0'),
                    '/' => out.push('/'),
                    'x' | 'u' => {
                        let width = if esc == 'x' { 2 } else { 4 };
                        let mut code = 0u32;
                        for _ in 0..width {
                            let digit = chars.next().and_then(|(_, d)| d.to_digit(16));
                            code = code * 16 + digit.ok_or_else(|| DslError::parse(at, "bad escape sequence"))?;
                        }
                        out.push(char::from_u32(code).ok_or_else(|| DslError::parse(at, "bad escape sequence"))?);
                    }
                    _ => return Err(DslError::parse(at, "bad escape sequence")),
                }
            }
            c => out.push(c),
        }
    }
    Err(DslError::parse(start, "unterminated string literal"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_of_a_small_expression() {
        let toks: Vec<Tok> = tokenize("s['a'] <= 3").unwrap().into_iter().map(|t| t.tok).collect();
        assert_eq!(
            toks,
            [
                Tok::Name("s".into()),
                Tok::Op("["),
                Tok::Str("a".into()),
                Tok::Op("]"),
                Tok::Op("<="),
                Tok::Int(3),
                Tok::End
            ]
        );
    }

    #[test]
    fn escapes_and_errors() {
        assert_eq!(tokenize(r#""a\"bA""#).unwrap()[0].tok, Tok::Str("a\"bA".into()));
        assert!(tokenize("'open").is_err());
        assert!(tokenize("1.5").is_err());
        assert!(tokenize("x = 1").is_err());
        assert!(tokenize("a ; b").is_err());
    }
}
