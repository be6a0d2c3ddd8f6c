use std::fmt;

use super::{ParseError, SourceSpan};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Nat(u64),
    /// `<|`
    SelectOp,
    /// `|>`
    BranchOp,
    Le,
    EqEq,
    Arrow,
    Tilde,
    Bang,
    Quest,
    Lt,
    Gt,
    Dot,
    Comma,
    Colon,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Plus,
    Minus,
    Star,
    Amp,
    Assign,
    Bar,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Nat(n) => return write!(f, "`{n}`"),
            Tok::SelectOp => "<|",
            Tok::BranchOp => "|>",
            Tok::Le => "<=",
            Tok::EqEq => "==",
            Tok::Arrow => "->",
            Tok::Tilde => "~",
            Tok::Bang => "!",
            Tok::Quest => "?",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::Dot => ".",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Amp => "&",
            Tok::Assign => "=",
            Tok::Bar => "|",
            Tok::Eof => return f.write_str("end of input"),
        };
        write!(f, "`{s}`")
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

pub fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

pub fn tokenize(src: &str, file: Option<&str>) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let bytes: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    let span = |start: usize, end: usize, line: usize, col: usize| SourceSpan {
        file: file.map(str::to_string),
        start,
        end,
        line,
        column: col,
    };
    while i < bytes.len() {
        let (off, c) = bytes[i];
        let next = bytes.get(i + 1).map(|p| p.1);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && next == Some('-') {
            while i < bytes.len() && bytes[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        let (tok, len) = if is_ident_start(c) {
            let mut j = i;
            while j < bytes.len() && is_ident_char(bytes[j].1) {
                j += 1;
            }
            let end = bytes.get(j).map(|p| p.0).unwrap_or(src.len());
            (Tok::Ident(src[off..end].to_string()), j - i)
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < bytes.len() && bytes[j].1.is_ascii_digit() {
                j += 1;
            }
            let end = bytes.get(j).map(|p| p.0).unwrap_or(src.len());
            let text = &src[off..end];
            let n = text.parse::<u64>().map_err(|_| ParseError {
                span: span(off, end, line, col),
                message: format!("numeric literal `{text}` is out of range"),
                expected: Vec::new(),
            })?;
            (Tok::Nat(n), j - i)
        } else {
            let two = match (c, next) {
                ('<', Some('|')) => Some(Tok::SelectOp),
                ('|', Some('>')) => Some(Tok::BranchOp),
                ('<', Some('=')) => Some(Tok::Le),
                ('=', Some('=')) => Some(Tok::EqEq),
                ('-', Some('>')) => Some(Tok::Arrow),
                _ => None,
            };
            match two {
                Some(t) => (t, 2),
                None => {
                    let t = match c {
                        '~' => Tok::Tilde,
                        '!' => Tok::Bang,
                        '?' => Tok::Quest,
                        '<' => Tok::Lt,
                        '>' => Tok::Gt,
                        '.' => Tok::Dot,
                        ',' => Tok::Comma,
                        ':' => Tok::Colon,
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        '{' => Tok::LBrace,
                        '}' => Tok::RBrace,
                        '[' => Tok::LBracket,
                        ']' => Tok::RBracket,
                        '+' => Tok::Plus,
                        '-' => Tok::Minus,
                        '*' => Tok::Star,
                        '&' => Tok::Amp,
                        '=' => Tok::Assign,
                        '|' => Tok::Bar,
                        other => {
                            return Err(ParseError {
                                span: span(off, off + other.len_utf8(), line, col),
                                message: format!("unexpected character `{other}`"),
                                expected: Vec::new(),
                            })
                        }
                    };
                    (t, 1)
                }
            }
        };
        let end = bytes.get(i + len).map(|p| p.0).unwrap_or(src.len());
        out.push(Token { tok, span: span(off, end, line, col) });
        i += len;
        col += len;
    }
    out.push(Token { tok: Tok::Eof, span: span(src.len(), src.len(), line, col) });
    Ok(out)
}
