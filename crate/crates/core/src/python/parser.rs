//! Recursive-descent parser for Python expressions and simple statements,
//! plus the block structure (logical lines nested by indentation).

use super::ast::*;
use super::literal::{decode_string_token, parse_number, StrToken};
use super::token::{is_keyword, TokKind, Token};
use super::SyntaxError;

/// One logical line and, for compound statements, its indented block.
#[derive(Debug, Clone)]
pub struct Block {
    pub tokens: Vec<Token>,
    pub children: Vec<Block>,
    pub start_line: usize,
    pub end_line: usize,
    /// Column of the first token.
    pub indent: usize,
}

impl Block {
    pub fn first(&self) -> &Token {
        &self.tokens[0]
    }

    pub fn starts_with_keyword(&self, kw: &str) -> bool {
        self.tokens.first().is_some_and(|t| t.is_keyword(kw))
    }

    /// Tokens after the header's final `:` when the body is written inline.
    pub fn inline_body(&self) -> Option<&[Token]> {
        if !self.children.is_empty() {
            return None;
        }
        let colon = header_colon(&self.tokens)?;
        let rest = &self.tokens[colon + 1..];
        (!rest.is_empty()).then_some(rest)
    }
}

/// Index of the `:` ending a compound statement header.
pub fn header_colon(tokens: &[Token]) -> Option<usize> {
    let mut depth = 0i32;
    let mut lambdas = 0usize;
    for (i, t) in tokens.iter().enumerate() {
        if t.kind == TokKind::Op {
            match t.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                ":" if depth == 0 => {
                    if lambdas > 0 {
                        lambdas -= 1;
                    } else {
                        return Some(i);
                    }
                }
                _ => {}
            }
        } else if t.is_keyword("lambda") && depth == 0 {
            lambdas += 1;
        }
    }
    None
}

/// Groups a token stream into nested blocks.
pub fn build_blocks(tokens: &[Token]) -> Result<Vec<Block>, SyntaxError> {
    let mut pos = 0;
    let blocks = blocks_until(tokens, &mut pos, false)?;
    Ok(blocks)
}

fn blocks_until(tokens: &[Token], pos: &mut usize, nested: bool) -> Result<Vec<Block>, SyntaxError> {
    let mut out = Vec::new();
    loop {
        let Some(tok) = tokens.get(*pos) else { break };
        match tok.kind {
            TokKind::EndMarker => break,
            TokKind::Dedent => {
                if nested {
                    *pos += 1;
                    return Ok(out);
                }
                *pos += 1;
            }
            TokKind::Newline => *pos += 1,
            TokKind::Indent => {
                return Err(SyntaxError { line: tok.line, message: "unexpected indent".into() });
            }
            _ => {
                let start = *pos;
                while tokens[*pos].kind != TokKind::Newline && tokens[*pos].kind != TokKind::EndMarker {
                    *pos += 1;
                }
                let line_tokens: Vec<Token> = tokens[start..*pos].to_vec();
                if tokens[*pos].kind == TokKind::Newline {
                    *pos += 1;
                }
                let mut children = Vec::new();
                if tokens.get(*pos).is_some_and(|t| t.kind == TokKind::Indent) {
                    *pos += 1;
                    children = blocks_until(tokens, pos, true)?;
                }
                let start_line = line_tokens[0].line;
                let mut end_line = line_tokens.last().map(|t| t.end_line).unwrap_or(start_line);
                if let Some(last) = children.last() {
                    end_line = end_line.max(last.end_line);
                }
                if line_tokens.last().is_some_and(|t| t.is_op(":")) && children.is_empty() {
                    return Err(SyntaxError {
                        line: start_line,
                        message: "expected an indented block".into(),
                    });
                }
                let indent = line_tokens[0].col;
                out.push(Block { tokens: line_tokens, children, start_line, end_line, indent });
            }
        }
    }
    Ok(out)
}

/// Splits a logical line into `;`-separated simple statements.
pub fn split_semicolons(tokens: &[Token]) -> Vec<&[Token]> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, t) in tokens.iter().enumerate() {
        if t.kind == TokKind::Op {
            match t.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                ";" if depth == 0 => {
                    if i > start {
                        out.push(&tokens[start..i]);
                    }
                    start = i + 1;
                }
                _ => {}
            }
        }
    }
    if start < tokens.len() {
        out.push(&tokens[start..]);
    }
    out
}

/// Joins tokens back into valid, readable source for statements the
/// amplifier does not model.
pub fn join_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    let mut prev: Option<&Token> = None;
    for t in tokens {
        if let Some(p) = prev {
            if needs_space(p, t) {
                out.push(' ');
            }
        }
        out.push_str(&t.text);
        prev = Some(t);
    }
    out
}

fn needs_space(a: &Token, b: &Token) -> bool {
    let word = |t: &Token| matches!(t.kind, TokKind::Name | TokKind::Number | TokKind::Str);
    if b.kind == TokKind::Op && matches!(b.text.as_str(), ")" | "]" | "}" | "," | ":" | "." | ";") {
        return false;
    }
    if a.kind == TokKind::Op && matches!(a.text.as_str(), "(" | "[" | "{" | "." | "~") {
        return false;
    }
    if b.is_op("(") || b.is_op("[") {
        let callee = (word(a) && !is_keyword(&a.text)) || a.is_op(")") || a.is_op("]");
        return !callee;
    }
    true
}

pub struct ExprParser<'a> {
    toks: &'a [Token],
    pos: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl<'a> ExprParser<'a> {
    pub fn new(toks: &'a [Token]) -> Self {
        ExprParser { toks, pos: 0 }
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, off: usize) -> Option<&'a Token> {
        self.toks.get(self.pos + off)
    }

    fn next(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: &str) -> PResult<T> {
        let line = self.peek().or(self.toks.last()).map(|t| t.line).unwrap_or(0);
        Err(SyntaxError { line, message: msg.to_string() })
    }

    fn at_op(&self, op: &str) -> bool {
        self.peek().is_some_and(|t| t.is_op(op))
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(kw))
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            self.err(&format!("expected '{op}'"))
        }
    }

    /// Parses the whole slice as one (possibly tuple) expression.
    pub fn parse_all(toks: &'a [Token]) -> PResult<Expr> {
        let mut p = ExprParser::new(toks);
        let e = p.star_expressions()?;
        if !p.at_end() {
            return p.err("unexpected token after expression");
        }
        Ok(e)
    }

    /// `a, *b, c` with an optional trailing comma; a lone item stays unwrapped.
    pub fn star_expressions(&mut self) -> PResult<Expr> {
        let first = self.star_expression()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_end() || self.at_stop() {
                break;
            }
            items.push(self.star_expression()?);
        }
        Ok(Expr::Tuple(items))
    }

    fn at_stop(&self) -> bool {
        self.peek().is_some_and(|t| {
            t.kind == TokKind::Op
                && matches!(t.text.as_str(), "=" | ")" | "]" | "}" | ":" | ";")
                || t.kind == TokKind::Op && t.text.ends_with('=') && t.text.len() >= 2
                    && !matches!(t.text.as_str(), "==" | "<=" | ">=" | "!=")
                || t.is_keyword("in")
        })
    }

    fn star_expression(&mut self) -> PResult<Expr> {
        if self.eat_op("*") {
            return Ok(Expr::Starred(Box::new(self.bitor()?)));
        }
        self.expression()
    }

    pub fn expression(&mut self) -> PResult<Expr> {
        if self.at_kw("lambda") {
            return self.lambda();
        }
        let body = self.disjunction()?;
        if self.at_kw("if") {
            // Conditional expression; `if` inside comprehensions is handled by callers
            let save = self.pos;
            self.pos += 1;
            let test = self.disjunction()?;
            if !self.eat_kw("else") {
                self.pos = save;
                return Ok(body);
            }
            let orelse = self.expression()?;
            return Ok(Expr::IfExp { test: Box::new(test), body: Box::new(body), orelse: Box::new(orelse) });
        }
        Ok(body)
    }

    fn lambda(&mut self) -> PResult<Expr> {
        self.eat_kw("lambda");
        let start = self.pos;
        let mut depth = 0;
        while let Some(t) = self.peek() {
            if t.kind == TokKind::Op {
                match t.text.as_str() {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => depth -= 1,
                    ":" if depth == 0 => break,
                    _ => {}
                }
            }
            self.pos += 1;
        }
        let params = join_tokens(&self.toks[start..self.pos]);
        self.expect_op(":")?;
        let body = self.expression()?;
        Ok(Expr::Lambda { params, body: Box::new(body) })
    }

    fn disjunction(&mut self) -> PResult<Expr> {
        let first = self.conjunction()?;
        if !self.at_kw("or") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("or") {
            values.push(self.conjunction()?);
        }
        Ok(Expr::BoolOp { op: BoolOp::Or, values })
    }

    fn conjunction(&mut self) -> PResult<Expr> {
        let first = self.inversion()?;
        if !self.at_kw("and") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("and") {
            values.push(self.inversion()?);
        }
        Ok(Expr::BoolOp { op: BoolOp::And, values })
    }

    fn inversion(&mut self) -> PResult<Expr> {
        if self.eat_kw("not") {
            let operand = self.inversion()?;
            return Ok(Expr::UnaryOp { op: UnaryOp::Not, operand: Box::new(operand) });
        }
        self.comparison()
    }

    fn comp_op(&mut self) -> Option<CmpOp> {
        let t = self.peek()?;
        let op = match (t.kind, t.text.as_str()) {
            (TokKind::Op, "==") => CmpOp::Eq,
            (TokKind::Op, "!=") => CmpOp::NotEq,
            (TokKind::Op, "<") => CmpOp::Lt,
            (TokKind::Op, "<=") => CmpOp::LtE,
            (TokKind::Op, ">") => CmpOp::Gt,
            (TokKind::Op, ">=") => CmpOp::GtE,
            (TokKind::Name, "in") => CmpOp::In,
            (TokKind::Name, "is") => {
                if self.peek_at(1).is_some_and(|n| n.is_keyword("not")) {
                    self.pos += 2;
                    return Some(CmpOp::IsNot);
                }
                CmpOp::Is
            }
            (TokKind::Name, "not") if self.peek_at(1).is_some_and(|n| n.is_keyword("in")) => {
                self.pos += 2;
                return Some(CmpOp::NotIn);
            }
            _ => return None,
        };
        self.pos += 1;
        Some(op)
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let left = self.bitor()?;
        let mut ops = Vec::new();
        while let Some(op) = self.comp_op() {
            ops.push((op, self.bitor()?));
        }
        if ops.is_empty() {
            Ok(left)
        } else {
            Ok(Expr::Compare { left: Box::new(left), ops })
        }
    }

    fn binary_level(&mut self, ops: &[&str], next: fn(&mut Self) -> PResult<Expr>) -> PResult<Expr> {
        let mut left = next(self)?;
        loop {
            let Some(t) = self.peek() else { break };
            if t.kind != TokKind::Op || !ops.contains(&t.text.as_str()) {
                break;
            }
            let op = BinOp::from_symbol(&t.text).expect("binary operator");
            self.pos += 1;
            let right = next(self)?;
            left = Expr::BinOp { left: Box::new(left), op, right: Box::new(right) };
        }
        Ok(left)
    }

    fn bitor(&mut self) -> PResult<Expr> {
        self.binary_level(&["|"], Self::bitxor)
    }

    fn bitxor(&mut self) -> PResult<Expr> {
        self.binary_level(&["^"], Self::bitand)
    }

    fn bitand(&mut self) -> PResult<Expr> {
        self.binary_level(&["&"], Self::shift)
    }

    fn shift(&mut self) -> PResult<Expr> {
        self.binary_level(&["<<", ">>"], Self::sum)
    }

    fn sum(&mut self) -> PResult<Expr> {
        self.binary_level(&["+", "-"], Self::term)
    }

    fn term(&mut self) -> PResult<Expr> {
        self.binary_level(&["*", "/", "//", "%", "@"], Self::factor)
    }

    fn factor(&mut self) -> PResult<Expr> {
        let op = match self.peek() {
            Some(t) if t.is_op("-") => UnaryOp::Neg,
            Some(t) if t.is_op("+") => UnaryOp::Pos,
            Some(t) if t.is_op("~") => UnaryOp::Invert,
            _ => return self.power(),
        };
        self.pos += 1;
        let operand = self.factor()?;
        if op == UnaryOp::Neg {
            // A minus directly applied to a number literal is folded into it.
            match operand {
                Expr::Const(Constant::Int(v)) => return Ok(Expr::Const(Constant::Int(-v))),
                Expr::Const(Constant::Float(v)) => return Ok(Expr::Const(Constant::Float(-v))),
                _ => {}
            }
        }
        Ok(Expr::UnaryOp { op, operand: Box::new(operand) })
    }

    fn power(&mut self) -> PResult<Expr> {
        let base = self.primary()?;
        if self.eat_op("**") {
            let exp = self.factor()?;
            return Ok(Expr::BinOp { left: Box::new(base), op: BinOp::Pow, right: Box::new(exp) });
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<Expr> {
        if self.at_kw("await") {
            return self.err("await is not supported");
        }
        let mut e = self.atom()?;
        loop {
            if self.eat_op(".") {
                match self.next() {
                    Some(t) if t.kind == TokKind::Name => {
                        e = Expr::Attribute { value: Box::new(e), attr: t.text.clone() };
                    }
                    _ => return self.err("expected attribute name"),
                }
            } else if self.eat_op("(") {
                let args = self.call_args()?;
                e = Expr::Call { func: Box::new(e), args };
            } else if self.eat_op("[") {
                let index = self.slices()?;
                self.expect_op("]")?;
                e = Expr::Subscript { value: Box::new(e), index: Box::new(index) };
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn call_args(&mut self) -> PResult<Vec<Arg>> {
        let mut args = Vec::new();
        while !self.eat_op(")") {
            if self.at_end() {
                return self.err("unclosed call");
            }
            if self.eat_op("**") {
                args.push(Arg::DoubleStar(self.expression()?));
            } else if self.eat_op("*") {
                args.push(Arg::Star(self.expression()?));
            } else if self.peek().is_some_and(|t| t.kind == TokKind::Name && !is_keyword(&t.text))
                && self.peek_at(1).is_some_and(|t| t.is_op("="))
            {
                let name = self.next().unwrap().text.clone();
                self.pos += 1;
                args.push(Arg::Keyword(name, self.expression()?));
            } else {
                let e = self.expression()?;
                if self.at_kw("for") || self.at_kw("async") {
                    let generators = self.comp_for()?;
                    args.push(Arg::Positional(Expr::Comprehension {
                        kind: CompKind::Generator,
                        elt: Box::new(e),
                        value: None,
                        generators,
                    }));
                } else {
                    args.push(Arg::Positional(e));
                }
            }
            if !self.eat_op(",") {
                self.expect_op(")")?;
                break;
            }
        }
        Ok(args)
    }

    fn slices(&mut self) -> PResult<Expr> {
        let first = self.slice_item()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("]") {
                break;
            }
            items.push(self.slice_item()?);
        }
        Ok(Expr::Tuple(items))
    }

    fn slice_item(&mut self) -> PResult<Expr> {
        let lower = if self.at_op(":") { None } else { Some(self.star_expression()?) };
        if !self.eat_op(":") {
            return lower.map_or_else(|| self.err("empty subscript"), Ok);
        }
        let bound = |p: &mut Self| -> PResult<Option<Box<Expr>>> {
            if p.at_op(":") || p.at_op(",") || p.at_op("]") {
                Ok(None)
            } else {
                Ok(Some(Box::new(p.expression()?)))
            }
        };
        let upper = bound(self)?;
        let step = if self.eat_op(":") { bound(self)? } else { None };
        Ok(Expr::Slice { lower: lower.map(Box::new), upper, step })
    }

    fn comp_for(&mut self) -> PResult<Vec<Generator>> {
        let mut gens = Vec::new();
        while self.at_kw("for") || self.at_kw("async") {
            if self.at_kw("async") {
                return self.err("async comprehensions are not supported");
            }
            self.pos += 1;
            let target = self.target_list()?;
            if !self.eat_kw("in") {
                return self.err("expected 'in'");
            }
            let iter = self.disjunction()?;
            let mut ifs = Vec::new();
            while self.eat_kw("if") {
                ifs.push(self.disjunction()?);
            }
            gens.push(Generator { target, iter, ifs });
        }
        Ok(gens)
    }

    fn target_list(&mut self) -> PResult<Expr> {
        let first = self.star_target()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_kw("in") {
                break;
            }
            items.push(self.star_target()?);
        }
        Ok(Expr::Tuple(items))
    }

    fn star_target(&mut self) -> PResult<Expr> {
        if self.eat_op("*") {
            return Ok(Expr::Starred(Box::new(self.bitor()?)));
        }
        self.bitor()
    }

    fn atom(&mut self) -> PResult<Expr> {
        let Some(t) = self.peek() else { return self.err("unexpected end of expression") };
        match t.kind {
            TokKind::Name => {
                self.pos += 1;
                match t.text.as_str() {
                    "None" => Ok(Expr::Const(Constant::None)),
                    "True" => Ok(Expr::Const(Constant::Bool(true))),
                    "False" => Ok(Expr::Const(Constant::Bool(false))),
                    s if is_keyword(s) => {
                        self.pos -= 1;
                        self.err(&format!("unexpected keyword '{s}'"))
                    }
                    s => Ok(Expr::Name(s.to_string())),
                }
            }
            TokKind::Number => {
                self.pos += 1;
                Ok(Expr::Const(parse_number(&t.text)))
            }
            TokKind::Str => self.strings(),
            TokKind::Op => match t.text.as_str() {
                "(" => {
                    self.pos += 1;
                    self.paren()
                }
                "[" => {
                    self.pos += 1;
                    self.list()
                }
                "{" => {
                    self.pos += 1;
                    self.brace()
                }
                "..." => {
                    self.pos += 1;
                    Ok(Expr::Const(Constant::Ellipsis))
                }
                other => self.err(&format!("unexpected '{other}'")),
            },
            _ => self.err("unexpected token"),
        }
    }

    fn strings(&mut self) -> PResult<Expr> {
        let mut texts = Vec::new();
        while let Some(t) = self.peek() {
            if t.kind != TokKind::Str {
                break;
            }
            texts.push(t.text.clone());
            self.pos += 1;
        }
        let mut value = String::new();
        let mut any_f = false;
        let mut any_bytes = false;
        for text in &texts {
            match decode_string_token(text) {
                Ok(StrToken::Str(s)) => value.push_str(&s),
                Ok(StrToken::FString) => any_f = true,
                Ok(StrToken::Bytes) => any_bytes = true,
                Err(_) => any_f = true,
            }
        }
        if any_bytes {
            return Ok(Expr::Const(Constant::Verbatim(texts.join(" "))));
        }
        if any_f {
            return Ok(Expr::FString(texts.join(" ")));
        }
        Ok(Expr::Const(Constant::Str(value)))
    }

    fn paren(&mut self) -> PResult<Expr> {
        if self.eat_op(")") {
            return Ok(Expr::Tuple(Vec::new()));
        }
        let first = self.star_expression()?;
        if self.at_kw("for") || self.at_kw("async") {
            let generators = self.comp_for()?;
            self.expect_op(")")?;
            return Ok(Expr::Comprehension {
                kind: CompKind::Generator,
                elt: Box::new(first),
                value: None,
                generators,
            });
        }
        if self.eat_op(")") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op(")") {
                break;
            }
            items.push(self.star_expression()?);
        }
        self.expect_op(")")?;
        Ok(Expr::Tuple(items))
    }

    fn list(&mut self) -> PResult<Expr> {
        if self.eat_op("]") {
            return Ok(Expr::List(Vec::new()));
        }
        let first = self.star_expression()?;
        if self.at_kw("for") || self.at_kw("async") {
            let generators = self.comp_for()?;
            self.expect_op("]")?;
            return Ok(Expr::Comprehension {
                kind: CompKind::List,
                elt: Box::new(first),
                value: None,
                generators,
            });
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("]") {
                break;
            }
            items.push(self.star_expression()?);
        }
        self.expect_op("]")?;
        Ok(Expr::List(items))
    }

    fn brace(&mut self) -> PResult<Expr> {
        if self.eat_op("}") {
            return Ok(Expr::Dict(Vec::new()));
        }
        let first = self.dict_or_set_item()?;
        let is_dict = matches!(first, BraceItem::Pair(..) | BraceItem::Unpack(_));
        if self.at_kw("for") || self.at_kw("async") {
            let generators = self.comp_for()?;
            self.expect_op("}")?;
            return match first {
                BraceItem::Pair(k, v) => Ok(Expr::Comprehension {
                    kind: CompKind::Dict,
                    elt: Box::new(k),
                    value: Some(Box::new(v)),
                    generators,
                }),
                BraceItem::Elem(e) => Ok(Expr::Comprehension {
                    kind: CompKind::Set,
                    elt: Box::new(e),
                    value: None,
                    generators,
                }),
                BraceItem::Unpack(_) => self.err("unpacking in dict comprehension"),
            };
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("}") {
                break;
            }
            items.push(self.dict_or_set_item()?);
        }
        self.expect_op("}")?;
        if is_dict {
            let mut out = Vec::new();
            for it in items {
                match it {
                    BraceItem::Pair(k, v) => out.push(DictItem::Pair(k, v)),
                    BraceItem::Unpack(e) => out.push(DictItem::Unpack(e)),
                    BraceItem::Elem(_) => return self.err("mixed dict and set display"),
                }
            }
            Ok(Expr::Dict(out))
        } else {
            let mut out = Vec::new();
            for it in items {
                match it {
                    BraceItem::Elem(e) => out.push(e),
                    _ => return self.err("mixed dict and set display"),
                }
            }
            Ok(Expr::Set(out))
        }
    }

    fn dict_or_set_item(&mut self) -> PResult<BraceItem> {
        if self.eat_op("**") {
            return Ok(BraceItem::Unpack(self.bitor()?));
        }
        let e = self.star_expression()?;
        if self.eat_op(":") {
            let v = self.expression()?;
            return Ok(BraceItem::Pair(e, v));
        }
        Ok(BraceItem::Elem(e))
    }
}

enum BraceItem {
    Pair(Expr, Expr),
    Unpack(Expr),
    Elem(Expr),
}

/// Parses one simple statement. Anything outside the modelled subset comes
/// back as [`Stmt::Raw`].
pub fn parse_simple_statement(tokens: &[Token]) -> Stmt {
    match try_parse_simple(tokens) {
        Ok(s) => s,
        Err(_) => Stmt::Raw(RawCode::single(join_tokens(tokens))),
    }
}

fn try_parse_simple(tokens: &[Token]) -> PResult<Stmt> {
    let first = &tokens[0];
    if first.kind == TokKind::Name && is_keyword(&first.text) {
        if first.text == "pass" && tokens.len() == 1 {
            return Ok(Stmt::Pass);
        }
        if !matches!(first.text.as_str(), "None" | "True" | "False" | "not" | "lambda") {
            return Ok(Stmt::Raw(RawCode::single(join_tokens(tokens))));
        }
    }
    let mut p = ExprParser::new(tokens);
    let first_expr = p.star_expressions()?;
    if p.at_end() {
        return Ok(Stmt::Expr(first_expr));
    }
    let t = p.peek().unwrap();
    if t.is_op("=") {
        let mut targets = vec![first_expr];
        let mut value;
        loop {
            p.expect_op("=")?;
            value = p.star_expressions()?;
            if p.at_op("=") {
                targets.push(value);
                continue;
            }
            break;
        }
        if !p.at_end() {
            return p.err("unexpected token after assignment");
        }
        for target in &targets {
            if !is_assign_target(target) {
                return p.err("invalid assignment target");
            }
        }
        return Ok(Stmt::Assign { targets, value });
    }
    if t.kind == TokKind::Op && t.text.len() >= 2 && t.text.ends_with('=') {
        let sym = &t.text[..t.text.len() - 1];
        if let Some(op) = BinOp::from_symbol(sym) {
            p.pos += 1;
            let value = p.star_expressions()?;
            if !p.at_end() {
                return p.err("unexpected token after augmented assignment");
            }
            if !is_assign_target(&first_expr) || matches!(first_expr, Expr::Tuple(_)) {
                return p.err("invalid augmented assignment target");
            }
            return Ok(Stmt::AugAssign { target: first_expr, op, value });
        }
    }
    p.err("unsupported statement form")
}

fn is_assign_target(e: &Expr) -> bool {
    match e {
        Expr::Name(n) => !is_keyword(n),
        Expr::Attribute { .. } | Expr::Subscript { .. } => true,
        Expr::Tuple(items) | Expr::List(items) => items.iter().all(is_assign_target),
        Expr::Starred(inner) => is_assign_target(inner),
        _ => false,
    }
}

/// Parses a `with` header into its items (`with a as b, c:`).
pub fn parse_with_items(header: &[Token]) -> PResult<Vec<WithItem>> {
    let mut p = ExprParser::new(header);
    if !p.eat_kw("with") {
        return p.err("expected 'with'");
    }
    let parenthesized = p.at_op("(") && {
        // `with (a as b, c):` form: only when the matching paren closes right before ':'
        let mut depth = 0;
        let mut close = None;
        for (i, t) in header.iter().enumerate().skip(1) {
            if t.is_op("(") {
                depth += 1;
            } else if t.is_op(")") {
                depth -= 1;
                if depth == 0 {
                    close = Some(i);
                    break;
                }
            }
        }
        close == Some(header.len() - 1) && header[1..].iter().any(|t| t.is_keyword("as"))
    };
    if parenthesized {
        p.pos += 1;
    }
    let mut items = Vec::new();
    loop {
        let context = p.expression()?;
        let target = if p.eat_kw("as") { Some(p.star_target()?) } else { None };
        items.push(WithItem { context, target });
        if !p.eat_op(",") {
            break;
        }
        if parenthesized && p.at_op(")") {
            break;
        }
    }
    if parenthesized {
        p.expect_op(")")?;
    }
    if !p.at_end() {
        return p.err("unexpected token in with header");
    }
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::super::token::tokenize;
    use super::*;

    fn line_tokens(src: &str) -> Vec<Token> {
        tokenize(src)
            .unwrap()
            .into_iter()
            .filter(|t| !matches!(t.kind, TokKind::Newline | TokKind::EndMarker))
            .collect()
    }

    fn expr(src: &str) -> Expr {
        ExprParser::parse_all(&line_tokens(src)).unwrap()
    }

    #[test]
    fn method_call_chain() {
        let e = expr("self.b.deposit(10)");
        assert_eq!(
            e,
            Expr::call(Expr::attr(Expr::attr(Expr::name("self"), "b"), "deposit"), vec![Expr::int(10)])
        );
    }

    #[test]
    fn negative_literal_folds_but_power_binds_tighter() {
        assert_eq!(expr("-45485"), Expr::int(-45485));
        assert!(matches!(expr("-2 ** 2"), Expr::UnaryOp { op: UnaryOp::Neg, .. }));
    }

    #[test]
    fn comparisons_and_bool_ops() {
        let e = expr("a is not None and b not in c or not d");
        let Expr::BoolOp { op: BoolOp::Or, values } = e else { panic!() };
        assert_eq!(values.len(), 2);
    }

    #[test]
    fn displays_and_comprehensions() {
        assert!(matches!(expr("[x * 2 for x in y if x]"), Expr::Comprehension { kind: CompKind::List, .. }));
        assert!(matches!(expr("{k: v for k, v in d.items()}"), Expr::Comprehension { kind: CompKind::Dict, .. }));
        assert!(matches!(expr("{1, 2}"), Expr::Set(_)));
        assert!(matches!(expr("{}"), Expr::Dict(_)));
        assert!(matches!(expr("(1,)"), Expr::Tuple(v) if v.len() == 1));
        assert!(matches!(expr("f(x for x in y)"), Expr::Call { .. }));
    }

    #[test]
    fn slices_and_lambdas() {
        assert!(matches!(expr("a[1:2, ::3]"), Expr::Subscript { .. }));
        let Expr::Lambda { params, .. } = expr("lambda x, y=1: x + y") else { panic!() };
        assert_eq!(params, "x, y = 1");
    }

    #[test]
    fn statements() {
        assert!(matches!(parse_simple_statement(&line_tokens("x = y = 3")), Stmt::Assign { targets, .. } if targets.len() == 2));
        assert!(matches!(parse_simple_statement(&line_tokens("self.x += 1")), Stmt::AugAssign { op: BinOp::Add, .. }));
        assert!(matches!(parse_simple_statement(&line_tokens("pass")), Stmt::Pass));
        assert!(matches!(parse_simple_statement(&line_tokens("return x")), Stmt::Raw(_)));
        assert!(matches!(parse_simple_statement(&line_tokens("x: int = 3")), Stmt::Raw(_)));
        assert!(matches!(parse_simple_statement(&line_tokens("f(x) = 3")), Stmt::Raw(_)));
    }

    #[test]
    fn with_items() {
        let toks = line_tokens("with self.assertRaises(ValueError) as cm:");
        let items = parse_with_items(&toks[..toks.len() - 1]).unwrap();
        assert_eq!(items.len(), 1);
        assert_eq!(items[0].target, Some(Expr::name("cm")));
    }

    #[test]
    fn blocks_nest_by_indentation() {
        let toks = tokenize("class A:\n    def f(self):\n        x = 1\n\n        y = 2\nz = 3\n").unwrap();
        let blocks = build_blocks(&toks).unwrap();
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].children.len(), 1);
        assert_eq!(blocks[0].children[0].children.len(), 2);
        assert_eq!((blocks[0].start_line, blocks[0].end_line), (1, 5));
    }

    #[test]
    fn raw_join_is_valid_looking() {
        let toks = line_tokens("raise ValueError('bad', x[1])");
        assert_eq!(join_tokens(&toks), "raise ValueError('bad', x[1])");
    }
}
