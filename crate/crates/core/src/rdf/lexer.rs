//! Tokenizer shared by the N-Quads, Turtle and SPARQL parsers.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    /// `<...>` with escapes decoded; may still be relative.
    Iri(String),
    PName { prefix: String, local: String },
    Blank(String),
    Var(String),
    Str(String),
    LangTag(String),
    DoubleCaret,
    Integer(String),
    Decimal(String),
    Double(String),
    /// Bare word: keywords, `a`, `true`, `false`.
    Word(String),
    /// `@prefix` / `@base`.
    Directive(String),
    Punct(char),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Iri(i) => write!(f, "<{i}>"),
            Tok::PName { prefix, local } => write!(f, "{prefix}:{local}"),
            Tok::Blank(b) => write!(f, "_:{b}"),
            Tok::Var(v) => write!(f, "?{v}"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::LangTag(l) => write!(f, "@{l}"),
            Tok::DoubleCaret => f.write_str("^^"),
            Tok::Integer(n) | Tok::Decimal(n) | Tok::Double(n) => f.write_str(n),
            Tok::Word(w) => f.write_str(w),
            Tok::Directive(d) => write!(f, "@{d}"),
            Tok::Punct(c) => write!(f, "'{c}'"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct LexError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// Unknown string escapes such as `\.` are kept verbatim when `lenient_escapes`
/// is set; SPARQL query strings written for regular expressions rely on it.
pub(crate) fn tokenize(text: &str, lenient_escapes: bool) -> Result<Vec<Token>, LexError> {
    Lexer {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        column: 1,
        lenient_escapes,
    }
    .run()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
    lenient_escapes: bool,
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-' || c == '\u{B7}'
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, line: usize, column: usize, message: impl Into<String>) -> LexError {
        LexError {
            line,
            column,
            message: message.into(),
        }
    }

    fn run(mut self) -> Result<Vec<Token>, LexError> {
        let mut out: Vec<Token> = Vec::new();
        loop {
            self.skip_trivia();
            let Some(c) = self.peek() else { break };
            let (line, column) = (self.line, self.column);
            let tok = match c {
                '<' => self.iri_or_punct()?,
                '"' | '\'' => Tok::Str(self.string(line, column)?),
                '?' | '$' if self.peek_at(1).is_some_and(is_name_char) => {
                    self.bump();
                    Tok::Var(self.take_while(is_name_char))
                }
                '_' if self.peek_at(1) == Some(':') => {
                    self.bump();
                    self.bump();
                    let label = self.local_part();
                    if label.is_empty() {
                        return Err(self.error(line, column, "empty blank node label"));
                    }
                    Tok::Blank(label)
                }
                '@' => {
                    self.bump();
                    let word = self.take_while(|c| c.is_ascii_alphanumeric() || c == '-');
                    if word.is_empty() {
                        return Err(self.error(line, column, "expected language tag or directive after '@'"));
                    }
                    let after_literal = matches!(out.last().map(|t| &t.tok), Some(Tok::Str(_)));
                    if !after_literal && (word == "prefix" || word == "base") {
                        Tok::Directive(word)
                    } else {
                        Tok::LangTag(word)
                    }
                }
                '^' if self.peek_at(1) == Some('^') => {
                    self.bump();
                    self.bump();
                    Tok::DoubleCaret
                }
                c if c.is_ascii_digit() => self.number(),
                '+' | '-' if self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) => self.number(),
                ':' => {
                    self.bump();
                    Tok::PName {
                        prefix: String::new(),
                        local: self.local_part(),
                    }
                }
                c if is_name_start(c) => {
                    let word = self.take_while(|c| is_name_char(c) || c == '.');
                    // Names may contain '.', but never end with one.
                    let trimmed = word.trim_end_matches('.').len();
                    let word = self.unread_tail(word, trimmed);
                    if self.peek() == Some(':') {
                        self.bump();
                        Tok::PName {
                            prefix: word,
                            local: self.local_part(),
                        }
                    } else {
                        Tok::Word(word)
                    }
                }
                '{' | '}' | '(' | ')' | '[' | ']' | '.' | ';' | ',' | '*' | '/' | '|' | '^' | '!'
                | '=' | '>' | '&' | '+' | '-' | '?' => {
                    self.bump();
                    Tok::Punct(c)
                }
                other => {
                    return Err(self.error(line, column, format!("unexpected character {other:?}")));
                }
            };
            out.push(Token { tok, line, column });
        }
        Ok(out)
    }

    /// Gives back the characters of `word` beyond `keep` (they were consumed greedily).
    fn unread_tail(&mut self, mut word: String, keep: usize) -> String {
        let extra = word[keep..].chars().count();
        for _ in 0..extra {
            self.pos -= 1;
            self.column -= 1;
        }
        word.truncate(keep);
        word
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }

    /// Local part of a prefixed name or blank node label; never ends with '.'.
    fn local_part(&mut self) -> String {
        let mut s = String::new();
        let mut raw_len = 0usize;
        let mut kept = 0usize;
        let mut kept_raw = 0usize;
        while let Some(c) = self.peek() {
            if is_name_char(c) || c == ':' || c == '%' {
                s.push(c);
                self.bump();
                raw_len += 1;
                kept = s.len();
                kept_raw = raw_len;
            } else if c == '.' {
                s.push(c);
                self.bump();
                raw_len += 1;
            } else if c == '\\'
                && self
                    .peek_at(1)
                    .is_some_and(|e| "_~.-!$&'()*+,;=/?#@%".contains(e))
            {
                self.bump();
                let e = self.bump().unwrap_or_default();
                s.push(e);
                raw_len += 2;
                kept = s.len();
                kept_raw = raw_len;
            } else {
                break;
            }
        }
        for _ in kept_raw..raw_len {
            self.pos -= 1;
            self.column -= 1;
        }
        s.truncate(kept);
        s
    }

    fn iri_or_punct(&mut self) -> Result<Tok, LexError> {
        let (line, column) = (self.line, self.column);
        let mut end = self.pos + 1;
        while let Some(&c) = self.chars.get(end) {
            if c == '>' {
                break;
            }
            if c.is_whitespace() || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`') {
                self.bump();
                return Ok(Tok::Punct('<'));
            }
            end += 1;
        }
        if end >= self.chars.len() {
            self.bump();
            return Ok(Tok::Punct('<'));
        }
        self.bump();
        let mut value = String::new();
        while let Some(c) = self.bump() {
            match c {
                '>' => return Ok(Tok::Iri(value)),
                '\\' => value.push(self.unicode_escape(line, column)?),
                c => value.push(c),
            }
        }
        Err(self.error(line, column, "unterminated IRI"))
    }

    fn unicode_escape(&mut self, line: usize, column: usize) -> Result<char, LexError> {
        let width = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err(self.error(line, column, "invalid escape in IRI")),
        };
        self.hex_char(width, line, column)
    }

    fn hex_char(&mut self, width: usize, line: usize, column: usize) -> Result<char, LexError> {
        let mut code = 0u32;
        for _ in 0..width {
            let d = self
                .bump()
                .and_then(|c| c.to_digit(16))
                .ok_or_else(|| self.error(line, column, "invalid hex digit in \\u escape"))?;
            code = code * 16 + d;
        }
        char::from_u32(code).ok_or_else(|| self.error(line, column, "escape is not a valid code point"))
    }

    fn string(&mut self, line: usize, column: usize) -> Result<String, LexError> {
        let quote = self.bump().unwrap_or('"');
        let long = self.peek() == Some(quote) && self.peek_at(1) == Some(quote);
        if long {
            self.bump();
            self.bump();
        } else if self.peek() == Some(quote) {
            self.bump();
            return Ok(String::new());
        }
        let mut value = String::new();
        loop {
            let Some(c) = self.bump() else {
                return Err(self.error(line, column, "unterminated string"));
            };
            match c {
                c if c == quote && !long => return Ok(value),
                c if c == quote && self.peek() == Some(quote) && self.peek_at(1) == Some(quote) => {
                    self.bump();
                    self.bump();
                    // A long string may end with extra quote characters: """a""""
                    while self.peek() == Some(quote) {
                        value.push(quote);
                        self.bump();
                    }
                    return Ok(value);
                }
                '\n' | '\r' if !long => {
                    return Err(self.error(line, column, "line break in short string"));
                }
                '\\' => {
                    let (el, ec) = (self.line, self.column);
                    match self.bump() {
                        Some('t') => value.push('\t'),
                        Some('b') => value.push('\u{8}'),
                        Some('n') => value.push('\n'),
                        Some('r') => value.push('\r'),
                        Some('f') => value.push('\u{c}'),
                        Some('"') => value.push('"'),
                        Some('\'') => value.push('\''),
                        Some('\\') => value.push('\\'),
                        Some('u') => value.push(self.hex_char(4, el, ec)?),
                        Some('U') => value.push(self.hex_char(8, el, ec)?),
                        Some(other) if self.lenient_escapes => {
                            value.push('\\');
                            value.push(other);
                        }
                        Some(other) => {
                            return Err(self.error(el, ec, format!("invalid escape \\{other}")));
                        }
                        None => return Err(self.error(line, column, "unterminated string")),
                    }
                }
                c => value.push(c),
            }
        }
    }

    fn number(&mut self) -> Tok {
        let mut s = String::new();
        if matches!(self.peek(), Some('+' | '-')) {
            s.push(self.bump().unwrap_or_default());
        }
        s.push_str(&self.take_while(|c| c.is_ascii_digit()));
        let mut decimal = false;
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
            s.push('.');
            s.push_str(&self.take_while(|c| c.is_ascii_digit()));
            decimal = true;
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let sign = matches!(self.peek_at(1), Some('+' | '-'));
            let digit_at = if sign { 2 } else { 1 };
            if self.peek_at(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                for _ in 0..digit_at {
                    s.push(self.bump().unwrap_or_default());
                }
                s.push_str(&self.take_while(|c| c.is_ascii_digit()));
                return Tok::Double(s);
            }
        }
        if decimal {
            Tok::Decimal(s)
        } else {
            Tok::Integer(s)
        }
    }
}

/// Sequential access to a token list with position-aware errors.
pub(crate) struct Cursor {
    tokens: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Cursor {
    pub fn new(tokens: Vec<Token>, text: &str) -> Self {
        let line = text.lines().count().max(1);
        let column = text.lines().last().map_or(0, |l| l.chars().count()) + 1;
        Cursor {
            tokens,
            pos: 0,
            end: (line, column),
        }
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    pub fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    /// Line and column of the next token (or end of input).
    pub fn position(&self) -> (usize, usize) {
        self.tokens
            .get(self.pos)
            .map_or(self.end, |t| (t.line, t.column))
    }

    pub fn is_punct(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Punct(c))
    }

    pub fn eat_punct(&mut self, c: char) -> bool {
        if self.is_punct(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Case-insensitive keyword test.
    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn error(&self, message: impl Into<String>) -> LexError {
        let (line, column) = self.position();
        LexError {
            line,
            column,
            message: message.into(),
        }
    }

    pub fn expect_punct(&mut self, c: char) -> Result<(), LexError> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{c}'")))
        }
    }

    pub fn unexpected(&self, wanted: &str) -> LexError {
        match self.peek() {
            Some(tok) => self.error(format!("expected {wanted}, found {tok}")),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(text: &str) -> Vec<Tok> {
        tokenize(text, false).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn prefixed_name_does_not_swallow_terminator() {
        assert_eq!(
            toks("?br datacite:hasIdentifier ?id."),
            vec![
                Tok::Var("br".into()),
                Tok::PName {
                    prefix: "datacite".into(),
                    local: "hasIdentifier".into()
                },
                Tok::Var("id".into()),
                Tok::Punct('.'),
            ]
        );
    }

    #[test]
    fn relative_iri_and_directives() {
        assert_eq!(
            toks("@base <https://x/>. <br/1> a <y>"),
            vec![
                Tok::Directive("base".into()),
                Tok::Iri("https://x/".into()),
                Tok::Punct('.'),
                Tok::Iri("br/1".into()),
                Tok::Word("a".into()),
                Tok::Iri("y".into()),
            ]
        );
    }

    #[test]
    fn literal_forms() {
        assert_eq!(
            toks(r#""a"@en 'b'^^xsd:string """c"d"""  5. 1.5 2e3"#),
            vec![
                Tok::Str("a".into()),
                Tok::LangTag("en".into()),
                Tok::Str("b".into()),
                Tok::DoubleCaret,
                Tok::PName {
                    prefix: "xsd".into(),
                    local: "string".into()
                },
                Tok::Str("c\"d".into()),
                Tok::Integer("5".into()),
                Tok::Punct('.'),
                Tok::Decimal("1.5".into()),
                Tok::Double("2e3".into()),
            ]
        );
    }

    #[test]
    fn lenient_escape_keeps_backslash() {
        let t = tokenize(r#""\.$""#, true).unwrap();
        assert_eq!(t[0].tok, Tok::Str("\\.$".into()));
        assert!(tokenize(r#""\.$""#, false).is_err());
    }

    #[test]
    fn positions_are_one_based() {
        let t = tokenize("a\n  <x>", false).unwrap();
        assert_eq!((t[1].line, t[1].column), (2, 3));
    }

    #[test]
    fn less_than_without_closing_is_punct() {
        assert_eq!(toks("< 3"), vec![Tok::Punct('<'), Tok::Integer("3".into())]);
    }
}
