//! Hand-written lexer. Comments (`//` and `/* */`) are skipped; CRLF input
//! is accepted by treating `\r` as ordinary whitespace.

use crate::ast::Span;
use crate::parser::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Fn,
    Test,
    Let,
    If,
    Else,
    While,
    Return,
    True,
    False,
    Ident(String),
    Int(i64),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Bang,
    Assign,
    Eof,
}

impl Token {
    /// How the token reads in error messages.
    pub fn describe(&self) -> String {
        match self {
            Token::Fn => "`fn`".into(),
            Token::Test => "`test`".into(),
            Token::Let => "`let`".into(),
            Token::If => "`if`".into(),
            Token::Else => "`else`".into(),
            Token::While => "`while`".into(),
            Token::Return => "`return`".into(),
            Token::True => "`true`".into(),
            Token::False => "`false`".into(),
            Token::Ident(name) => format!("identifier `{name}`"),
            Token::Int(v) => format!("integer `{v}`"),
            Token::Str(_) => "string literal".into(),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::LBrace => "`{`".into(),
            Token::RBrace => "`}`".into(),
            Token::Comma => "`,`".into(),
            Token::Semi => "`;`".into(),
            Token::Plus => "`+`".into(),
            Token::Minus => "`-`".into(),
            Token::Star => "`*`".into(),
            Token::Slash => "`/`".into(),
            Token::Percent => "`%`".into(),
            Token::EqEq => "`==`".into(),
            Token::NotEq => "`!=`".into(),
            Token::Lt => "`<`".into(),
            Token::Le => "`<=`".into(),
            Token::Gt => "`>`".into(),
            Token::Ge => "`>=`".into(),
            Token::AndAnd => "`&&`".into(),
            Token::OrOr => "`||`".into(),
            Token::Bang => "`!`".into(),
            Token::Assign => "`=`".into(),
            Token::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpannedToken {
    pub token: Token,
    pub span: Span,
}

pub fn lex(source: &str) -> Result<Vec<SpannedToken>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    macro_rules! push {
        ($tok:expr, $span:expr) => {
            out.push(SpannedToken { token: $tok, span: $span })
        };
    }

    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if chars.get(i + 1) == Some(&'*') => {
                i += 2;
                col += 2;
                let mut closed = false;
                while i < chars.len() {
                    if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                        i += 2;
                        col += 2;
                        closed = true;
                        break;
                    }
                    if chars[i] == '\n' {
                        line += 1;
                        col = 1;
                    } else {
                        col += 1;
                    }
                    i += 1;
                }
                if !closed {
                    return Err(ParseError::message(span, "unterminated block comment"));
                }
            }
            '(' => {
                push!(Token::LParen, span);
                i += 1;
                col += 1;
            }
            ')' => {
                push!(Token::RParen, span);
                i += 1;
                col += 1;
            }
            '{' => {
                push!(Token::LBrace, span);
                i += 1;
                col += 1;
            }
            '}' => {
                push!(Token::RBrace, span);
                i += 1;
                col += 1;
            }
            ',' => {
                push!(Token::Comma, span);
                i += 1;
                col += 1;
            }
            ';' => {
                push!(Token::Semi, span);
                i += 1;
                col += 1;
            }
            '+' => {
                push!(Token::Plus, span);
                i += 1;
                col += 1;
            }
            '-' => {
                push!(Token::Minus, span);
                i += 1;
                col += 1;
            }
            '*' => {
                push!(Token::Star, span);
                i += 1;
                col += 1;
            }
            '/' => {
                push!(Token::Slash, span);
                i += 1;
                col += 1;
            }
            '%' => {
                push!(Token::Percent, span);
                i += 1;
                col += 1;
            }
            '=' => {
                if chars.get(i + 1) == Some(&'=') {
                    push!(Token::EqEq, span);
                    i += 2;
                    col += 2;
                } else {
                    push!(Token::Assign, span);
                    i += 1;
                    col += 1;
                }
            }
            '!' => {
                if chars.get(i + 1) == Some(&'=') {
                    push!(Token::NotEq, span);
                    i += 2;
                    col += 2;
                } else {
                    push!(Token::Bang, span);
                    i += 1;
                    col += 1;
                }
            }
            '<' => {
                if chars.get(i + 1) == Some(&'=') {
                    push!(Token::Le, span);
                    i += 2;
                    col += 2;
                } else {
                    push!(Token::Lt, span);
                    i += 1;
                    col += 1;
                }
            }
            '>' => {
                if chars.get(i + 1) == Some(&'=') {
                    push!(Token::Ge, span);
                    i += 2;
                    col += 2;
                } else {
                    push!(Token::Gt, span);
                    i += 1;
                    col += 1;
                }
            }
            '&' => {
                if chars.get(i + 1) == Some(&'&') {
                    push!(Token::AndAnd, span);
                    i += 2;
                    col += 2;
                } else {
                    return Err(ParseError::message(span, "expected `&&`"));
                }
            }
            '|' => {
                if chars.get(i + 1) == Some(&'|') {
                    push!(Token::OrOr, span);
                    i += 2;
                    col += 2;
                } else {
                    return Err(ParseError::message(span, "expected `||`"));
                }
            }
            '"' => {
                i += 1;
                col += 1;
                let mut value = String::new();
                let mut closed = false;
                while i < chars.len() {
                    match chars[i] {
                        '"' => {
                            i += 1;
                            col += 1;
                            closed = true;
                            break;
                        }
                        '\n' => {
                            return Err(ParseError::message(span, "unterminated string literal"));
                        }
                        '\\' => {
                            let esc = chars.get(i + 1).copied();
                            let ch = match esc {
                                Some('"') => '"',
                                Some('\\') => '\\',
                                Some('n') => '\n',
                                Some('t') => '\t',
                                _ => {
                                    return Err(ParseError::message(
                                        Span { line, col },
                                        "unknown escape sequence in string literal",
                                    ));
                                }
                            };
                            value.push(ch);
                            i += 2;
                            col += 2;
                        }
                        other => {
                            value.push(other);
                            i += 1;
                            col += 1;
                        }
                    }
                }
                if !closed {
                    return Err(ParseError::message(span, "unterminated string literal"));
                }
                push!(Token::Str(value), span);
            }
            d if d.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                    col += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let value: i64 = text
                    .parse()
                    .map_err(|_| ParseError::message(span, "integer literal out of range"))?;
                push!(Token::Int(value), span);
            }
            a if a.is_ascii_alphabetic() || a == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                    col += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let token = match word.as_str() {
                    "fn" => Token::Fn,
                    "test" => Token::Test,
                    "let" => Token::Let,
                    "if" => Token::If,
                    "else" => Token::Else,
                    "while" => Token::While,
                    "return" => Token::Return,
                    "true" => Token::True,
                    "false" => Token::False,
                    _ => Token::Ident(word),
                };
                push!(token, span);
            }
            other => {
                return Err(ParseError::message(
                    span,
                    format!("unexpected character `{other}`"),
                ));
            }
        }
    }

    out.push(SpannedToken {
        token: Token::Eof,
        span: Span { line, col },
    });
    Ok(out)
}
