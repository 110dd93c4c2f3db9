//! Tokenizer for Python 3 source.
//!
//! Produces the token stream the statement and expression parsers work on.
//! Comments and non-logical newlines are dropped; `INDENT`/`DEDENT` tokens are
//! synthesized from leading whitespace the same way CPython's tokenizer does.

use super::SyntaxError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokKind {
    Name,
    Number,
    Str,
    Op,
    Newline,
    Indent,
    Dedent,
    EndMarker,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokKind,
    pub text: String,
    /// 1-based line of the first character.
    pub line: usize,
    /// 0-based column (in chars) of the first character.
    pub col: usize,
    /// 1-based line of the last character.
    pub end_line: usize,
}

impl Token {
    pub fn is_op(&self, op: &str) -> bool {
        self.kind == TokKind::Op && self.text == op
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        self.kind == TokKind::Name && self.text == kw
    }
}

pub const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
    "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if",
    "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try",
    "while", "with", "yield",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", ">>", "<<", "<=", ">=", "==", "!=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", "+", "-", "*", "/", "%", "@", "&", "|",
    "^", "~", "<", ">", "(", ")", "[", "]", "{", "}", ",", ":", ";", ".", "=",
];

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    tokens: Vec<Token>,
    indents: Vec<usize>,
    depth: usize,
    at_line_start: bool,
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut lx = Lexer {
        chars: source.chars().collect(),
        pos: 0,
        line: 1,
        col: 0,
        tokens: Vec::new(),
        indents: vec![0],
        depth: 0,
        at_line_start: true,
    };
    lx.run()?;
    Ok(lx.tokens)
}

impl Lexer {
    fn peek(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 0;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError { line: self.line, message: message.into() }
    }

    fn push(&mut self, kind: TokKind, text: String, line: usize, col: usize) {
        let end_line = self.line;
        self.tokens.push(Token { kind, text, line, col, end_line });
    }

    fn last_is_newline(&self) -> bool {
        matches!(
            self.tokens.last().map(|t| t.kind),
            None | Some(TokKind::Newline) | Some(TokKind::Indent) | Some(TokKind::Dedent)
        )
    }

    fn run(&mut self) -> Result<(), SyntaxError> {
        loop {
            if self.at_line_start && self.depth == 0 {
                if !self.handle_indentation()? {
                    break;
                }
            }
            let Some(c) = self.peek(0) else { break };
            match c {
                ' ' | '\t' | '\x0c' | '\r' => {
                    self.bump();
                }
                '#' => {
                    while let Some(c) = self.peek(0) {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                '\\' if self.peek(1) == Some('\n') => {
                    self.bump();
                    self.bump();
                }
                '\\' if self.peek(1) == Some('\r') && self.peek(2) == Some('\n') => {
                    self.bump();
                    self.bump();
                    self.bump();
                }
                '\n' => {
                    let (line, col) = (self.line, self.col);
                    self.bump();
                    if self.depth == 0 {
                        if !self.last_is_newline() {
                            self.tokens.push(Token {
                                kind: TokKind::Newline,
                                text: "\n".into(),
                                line,
                                col,
                                end_line: line,
                            });
                        }
                        self.at_line_start = true;
                    }
                }
                c if c.is_ascii_digit() || (c == '.' && self.peek(1).is_some_and(|d| d.is_ascii_digit())) => {
                    self.number()?;
                }
                c if c == '_' || c.is_alphabetic() => {
                    if self.string_prefix_len().is_some() {
                        self.string()?;
                    } else {
                        self.name();
                    }
                }
                '\'' | '"' => self.string()?,
                _ => self.operator()?,
            }
        }
        if !self.last_is_newline() {
            let (line, col) = (self.line, self.col);
            self.push(TokKind::Newline, String::new(), line, col);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            let line = self.line;
            self.push(TokKind::Dedent, String::new(), line, 0);
        }
        let line = self.line;
        self.push(TokKind::EndMarker, String::new(), line, 0);
        if self.depth != 0 {
            return Err(self.err("unexpected EOF: unclosed bracket"));
        }
        Ok(())
    }

    /// Consumes leading whitespace of a physical line and emits INDENT/DEDENT.
    /// Returns false at end of input.
    fn handle_indentation(&mut self) -> Result<bool, SyntaxError> {
        loop {
            let mut width = 0usize;
            let mut off = 0usize;
            while let Some(c) = self.peek(off) {
                match c {
                    ' ' => width += 1,
                    '\t' => width = (width / 8 + 1) * 8,
                    '\x0c' => width = 0,
                    _ => break,
                }
                off += 1;
            }
            match self.peek(off) {
                None => {
                    for _ in 0..off {
                        self.bump();
                    }
                    return Ok(false);
                }
                Some('\n') | Some('#') | Some('\r') => {
                    // blank or comment-only line
                    for _ in 0..off {
                        self.bump();
                    }
                    while let Some(c) = self.peek(0) {
                        self.bump();
                        if c == '\n' {
                            break;
                        }
                    }
                    if self.peek(0).is_none() {
                        return Ok(false);
                    }
                    continue;
                }
                Some(_) => {
                    for _ in 0..off {
                        self.bump();
                    }
                    self.at_line_start = false;
                    let current = *self.indents.last().unwrap();
                    if width > current {
                        self.indents.push(width);
                        let line = self.line;
                        self.push(TokKind::Indent, String::new(), line, 0);
                    } else if width < current {
                        while width < *self.indents.last().unwrap() {
                            self.indents.pop();
                            let line = self.line;
                            self.push(TokKind::Dedent, String::new(), line, 0);
                        }
                        if width != *self.indents.last().unwrap() {
                            return Err(self.err("unindent does not match any outer indentation level"));
                        }
                    }
                    return Ok(true);
                }
            }
        }
    }

    fn name(&mut self) {
        let (line, col) = (self.line, self.col);
        let mut s = String::new();
        while let Some(c) = self.peek(0) {
            if c == '_' || c.is_alphanumeric() {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        self.push(TokKind::Name, s, line, col);
    }

    fn number(&mut self) -> Result<(), SyntaxError> {
        let (line, col) = (self.line, self.col);
        let mut s = String::new();
        let radix_prefix = self.peek(0) == Some('0')
            && matches!(self.peek(1), Some('x' | 'X' | 'o' | 'O' | 'b' | 'B'));
        if radix_prefix {
            s.push(self.bump().unwrap());
            s.push(self.bump().unwrap());
            while let Some(c) = self.peek(0) {
                if c.is_ascii_hexdigit() || c == '_' {
                    s.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
        } else {
            let mut seen_exp = false;
            while let Some(c) = self.peek(0) {
                if c.is_ascii_digit() || c == '_' || c == '.' {
                    s.push(c);
                    self.bump();
                } else if (c == 'e' || c == 'E') && !seen_exp {
                    seen_exp = true;
                    s.push(c);
                    self.bump();
                    if let Some(sign @ ('+' | '-')) = self.peek(0) {
                        s.push(sign);
                        self.bump();
                    }
                } else {
                    break;
                }
            }
            if let Some(j @ ('j' | 'J')) = self.peek(0) {
                s.push(j);
                self.bump();
            }
        }
        if self.peek(0).is_some_and(|c| c == '_' || c.is_alphabetic()) {
            return Err(self.err(format!("invalid number literal near '{s}'")));
        }
        self.push(TokKind::Number, s, line, col);
        Ok(())
    }

    fn string_prefix_len(&self) -> Option<usize> {
        let mut n = 0;
        while n < 3 {
            match self.peek(n) {
                Some('r' | 'R' | 'b' | 'B' | 'u' | 'U' | 'f' | 'F') => n += 1,
                Some('\'' | '"') if n > 0 => return Some(n),
                _ => return None,
            }
        }
        None
    }

    fn string(&mut self) -> Result<(), SyntaxError> {
        let (line, col) = (self.line, self.col);
        let prefix_len = self.string_prefix_len().unwrap_or(0);
        let mut s = String::new();
        for _ in 0..prefix_len {
            s.push(self.bump().unwrap());
        }
        let quote = self.bump().ok_or_else(|| self.err("unterminated string"))?;
        s.push(quote);
        let triple = self.peek(0) == Some(quote) && self.peek(1) == Some(quote);
        if triple {
            s.push(self.bump().unwrap());
            s.push(self.bump().unwrap());
        }
        loop {
            let Some(c) = self.bump() else {
                return Err(SyntaxError { line, message: "unterminated string literal".into() });
            };
            s.push(c);
            if c == '\\' {
                if let Some(n) = self.bump() {
                    s.push(n);
                }
                continue;
            }
            if c == '\n' && !triple {
                return Err(SyntaxError { line, message: "unterminated string literal".into() });
            }
            if c == quote {
                if !triple {
                    break;
                }
                if self.peek(0) == Some(quote) && self.peek(1) == Some(quote) {
                    s.push(self.bump().unwrap());
                    s.push(self.bump().unwrap());
                    break;
                }
            }
        }
        self.push(TokKind::Str, s, line, col);
        Ok(())
    }

    fn operator(&mut self) -> Result<(), SyntaxError> {
        let (line, col) = (self.line, self.col);
        for op in OPERATORS {
            let matches = op.chars().enumerate().all(|(i, oc)| self.peek(i) == Some(oc));
            if matches {
                for _ in 0..op.chars().count() {
                    self.bump();
                }
                match *op {
                    "(" | "[" | "{" => self.depth += 1,
                    ")" | "]" | "}" => {
                        if self.depth == 0 {
                            return Err(SyntaxError { line, message: format!("unmatched '{op}'") });
                        }
                        self.depth -= 1;
                    }
                    _ => {}
                }
                self.push(TokKind::Op, (*op).to_string(), line, col);
                return Ok(());
            }
        }
        let c = self.peek(0).unwrap_or(' ');
        Err(self.err(format!("invalid character '{c}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokKind, String)> {
        tokenize(src).unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn indentation_produces_indent_and_dedent() {
        let toks = kinds("if x:\n    y = 1\nz\n");
        let k: Vec<TokKind> = toks.iter().map(|t| t.0).collect();
        assert_eq!(
            k,
            vec![
                TokKind::Name,
                TokKind::Name,
                TokKind::Op,
                TokKind::Newline,
                TokKind::Indent,
                TokKind::Name,
                TokKind::Op,
                TokKind::Number,
                TokKind::Newline,
                TokKind::Dedent,
                TokKind::Name,
                TokKind::Newline,
                TokKind::EndMarker
            ]
        );
    }

    #[test]
    fn brackets_suppress_newlines_and_comments_vanish() {
        let toks = kinds("f(1,  # one\n  2)\n");
        let texts: Vec<&str> = toks.iter().map(|t| t.1.as_str()).collect();
        assert_eq!(texts, vec!["f", "(", "1", ",", "2", ")", "\n", ""]);
    }

    #[test]
    fn strings_with_prefixes_and_triple_quotes() {
        let toks = tokenize("x = rb'a\\'b' + \"\"\"multi\nline\"\"\" + f'{y}'\n").unwrap();
        let strs: Vec<&str> =
            toks.iter().filter(|t| t.kind == TokKind::Str).map(|t| t.text.as_str()).collect();
        assert_eq!(strs, vec!["rb'a\\'b'", "\"\"\"multi\nline\"\"\"", "f'{y}'"]);
        let triple = toks.iter().find(|t| t.text.starts_with("\"\"\"")).unwrap();
        assert_eq!((triple.line, triple.end_line), (1, 2));
    }

    #[test]
    fn numbers() {
        let toks = kinds("a = 0x1F + 1_000 + 1.5e-3 + .5 + 2j\n");
        let nums: Vec<String> =
            toks.into_iter().filter(|t| t.0 == TokKind::Number).map(|t| t.1).collect();
        assert_eq!(nums, vec!["0x1F", "1_000", "1.5e-3", ".5", "2j"]);
    }

    #[test]
    fn bad_dedent_is_an_error() {
        let err = tokenize("if x:\n        a\n    b\n").unwrap_err();
        assert_eq!(err.line, 3);
    }

    #[test]
    fn unterminated_string_is_an_error() {
        assert!(tokenize("x = 'abc\n").is_err());
    }
}
