use super::Position;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    Number(f64),
    Arrow,
    LBrace,
    RBrace,
    Equals,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(_) => "string".into(),
            Tok::Number(_) => "number".into(),
            Tok::Arrow => "`->`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Equals => "`=`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Position,
}

#[derive(Debug)]
pub(crate) struct LexError {
    pub pos: Position,
    pub message: String,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Position {
        Position { line: self.line, column: self.column }
    }
}

/// Position of the last character of `text`, or 1:1 when empty.
fn end_position(text: &str) -> Position {
    let mut last = Position { line: 1, column: 1 };
    let (mut line, mut column) = (1, 1);
    for c in text.chars() {
        last = Position { line, column };
        if c == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    last
}

pub(crate) fn tokenize(text: &str) -> (Vec<Token>, Vec<LexError>) {
    let mut cur = Cursor { chars: text.chars().peekable(), line: 1, column: 1 };
    let mut tokens = Vec::new();
    let mut errors = Vec::new();

    while let Some(c) = cur.peek() {
        let pos = cur.pos();
        match c {
            c if c.is_whitespace() => {
                cur.bump();
            }
            '#' => {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            }
            '{' => {
                cur.bump();
                tokens.push(Token { tok: Tok::LBrace, pos });
            }
            '}' => {
                cur.bump();
                tokens.push(Token { tok: Tok::RBrace, pos });
            }
            '=' => {
                cur.bump();
                tokens.push(Token { tok: Tok::Equals, pos });
            }
            '"' => {
                cur.bump();
                match lex_string(&mut cur) {
                    Ok(s) => tokens.push(Token { tok: Tok::Str(s), pos }),
                    Err(e) => errors.push(e),
                }
            }
            '-' => {
                cur.bump();
                match cur.peek() {
                    Some('>') => {
                        cur.bump();
                        tokens.push(Token { tok: Tok::Arrow, pos });
                    }
                    Some(d) if d.is_ascii_digit() || d == '.' => match lex_number(&mut cur, pos, true) {
                        Ok(v) => tokens.push(Token { tok: Tok::Number(v), pos }),
                        Err(e) => errors.push(e),
                    },
                    _ => errors.push(LexError { pos, message: "unexpected `-` (expected `->` or a number)".into() }),
                }
            }
            c if c.is_ascii_digit() || c == '.' => match lex_number(&mut cur, pos, false) {
                Ok(v) => tokens.push(Token { tok: Tok::Number(v), pos }),
                Err(e) => errors.push(e),
            },
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(c) = cur.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                tokens.push(Token { tok: Tok::Ident(s), pos });
            }
            other => {
                cur.bump();
                errors.push(LexError { pos, message: format!("unexpected character `{other}`") });
            }
        }
    }
    tokens.push(Token { tok: Tok::Eof, pos: end_position(text) });
    (tokens, errors)
}

fn lex_string(cur: &mut Cursor<'_>) -> Result<String, LexError> {
    let mut s = String::new();
    loop {
        let pos = cur.pos();
        match cur.bump() {
            None => return Err(LexError { pos, message: "unterminated string".into() }),
            Some('"') => return Ok(s),
            Some('\\') => match cur.bump() {
                Some('"') => s.push('"'),
                Some('\\') => s.push('\\'),
                Some('n') => s.push('\n'),
                Some(other) => {
                    // Keep scanning to the closing quote so one bad escape
                    // does not swallow the rest of the file.
                    skip_to_quote(cur);
                    return Err(LexError { pos, message: format!("unknown escape `\\{other}`") });
                }
                None => return Err(LexError { pos, message: "unterminated string".into() }),
            },
            Some(c) => s.push(c),
        }
    }
}

fn skip_to_quote(cur: &mut Cursor<'_>) {
    while let Some(c) = cur.bump() {
        match c {
            '"' => return,
            '\\' => {
                cur.bump();
            }
            _ => {}
        }
    }
}

fn lex_number(cur: &mut Cursor<'_>, pos: Position, negative: bool) -> Result<f64, LexError> {
    let mut s = String::new();
    if negative {
        s.push('-');
    }
    let mut prev = ' ';
    while let Some(c) = cur.peek() {
        let exp_sign = (c == '+' || c == '-') && (prev == 'e' || prev == 'E');
        if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || exp_sign {
            s.push(c);
            prev = c;
            cur.bump();
        } else {
            break;
        }
    }
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| LexError { pos, message: format!("malformed number `{s}`") })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_escapes_and_numbers() {
        let (toks, errs) = tokenize("\"a\\\"b\\\\c\\nd\" 1e-6 -2.5 30 -> x");
        assert!(errs.is_empty());
        let kinds: Vec<_> = toks.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Str("a\"b\\c\nd".into()),
                Tok::Number(1e-6),
                Tok::Number(-2.5),
                Tok::Number(30.0),
                Tok::Arrow,
                Tok::Ident("x".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn reports_positions() {
        let (_, errs) = tokenize("kb\n  \"open");
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].message, "unterminated string");
        let (_, errs) = tokenize("a\n b @");
        assert_eq!(errs[0].pos, Position { line: 2, column: 4 });
    }

    #[test]
    fn bad_escape() {
        let (toks, errs) = tokenize("\"a\\tb\" x");
        assert_eq!(errs.len(), 1);
        assert!(matches!(toks[0].tok, Tok::Ident(ref s) if s == "x"));
    }
}
