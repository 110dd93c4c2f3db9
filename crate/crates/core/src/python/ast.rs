//! Expression and statement trees for the subset of Python the amplifier
//! rewrites. Anything outside that subset is carried as [`RawCode`].

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Constant {
    None,
    Bool(bool),
    Int(i128),
    Float(f64),
    Str(String),
    /// Bytes, complex and out-of-range integers keep their source spelling.
    Verbatim(String),
    Ellipsis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mult,
    MatMult,
    Div,
    FloorDiv,
    Mod,
    Pow,
    LShift,
    RShift,
    BitOr,
    BitXor,
    BitAnd,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mult => "*",
            BinOp::MatMult => "@",
            BinOp::Div => "/",
            BinOp::FloorDiv => "//",
            BinOp::Mod => "%",
            BinOp::Pow => "**",
            BinOp::LShift => "<<",
            BinOp::RShift => ">>",
            BinOp::BitOr => "|",
            BinOp::BitXor => "^",
            BinOp::BitAnd => "&",
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinOp> {
        Some(match s {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mult,
            "@" => BinOp::MatMult,
            "/" => BinOp::Div,
            "//" => BinOp::FloorDiv,
            "%" => BinOp::Mod,
            "**" => BinOp::Pow,
            "<<" => BinOp::LShift,
            ">>" => BinOp::RShift,
            "|" => BinOp::BitOr,
            "^" => BinOp::BitXor,
            "&" => BinOp::BitAnd,
            _ => return None,
        })
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::BitOr => prec::BITOR,
            BinOp::BitXor => prec::BITXOR,
            BinOp::BitAnd => prec::BITAND,
            BinOp::LShift | BinOp::RShift => prec::SHIFT,
            BinOp::Add | BinOp::Sub => prec::ARITH,
            BinOp::Mult | BinOp::MatMult | BinOp::Div | BinOp::FloorDiv | BinOp::Mod => prec::TERM,
            BinOp::Pow => prec::POWER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnaryOp {
    Not,
    Neg,
    Pos,
    Invert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoolOp {
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    NotEq,
    Lt,
    LtE,
    Gt,
    GtE,
    Is,
    IsNot,
    In,
    NotIn,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::NotEq => "!=",
            CmpOp::Lt => "<",
            CmpOp::LtE => "<=",
            CmpOp::Gt => ">",
            CmpOp::GtE => ">=",
            CmpOp::Is => "is",
            CmpOp::IsNot => "is not",
            CmpOp::In => "in",
            CmpOp::NotIn => "not in",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompKind {
    List,
    Set,
    Generator,
    Dict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub target: Expr,
    pub iter: Expr,
    pub ifs: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Arg {
    Positional(Expr),
    Keyword(String, Expr),
    Star(Expr),
    DoubleStar(Expr),
}

impl Arg {
    pub fn value(&self) -> &Expr {
        match self {
            Arg::Positional(e) | Arg::Keyword(_, e) | Arg::Star(e) | Arg::DoubleStar(e) => e,
        }
    }

    pub fn value_mut(&mut self) -> &mut Expr {
        match self {
            Arg::Positional(e) | Arg::Keyword(_, e) | Arg::Star(e) | Arg::DoubleStar(e) => e,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DictItem {
    Pair(Expr, Expr),
    Unpack(Expr),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Name(String),
    Const(Constant),
    /// f-strings (possibly implicitly concatenated), kept as source tokens.
    FString(String),
    Attribute { value: Box<Expr>, attr: String },
    Call { func: Box<Expr>, args: Vec<Arg> },
    Subscript { value: Box<Expr>, index: Box<Expr> },
    Slice { lower: Option<Box<Expr>>, upper: Option<Box<Expr>>, step: Option<Box<Expr>> },
    BinOp { left: Box<Expr>, op: BinOp, right: Box<Expr> },
    UnaryOp { op: UnaryOp, operand: Box<Expr> },
    BoolOp { op: BoolOp, values: Vec<Expr> },
    Compare { left: Box<Expr>, ops: Vec<(CmpOp, Expr)> },
    IfExp { test: Box<Expr>, body: Box<Expr>, orelse: Box<Expr> },
    Lambda { params: String, body: Box<Expr> },
    List(Vec<Expr>),
    Tuple(Vec<Expr>),
    Set(Vec<Expr>),
    Dict(Vec<DictItem>),
    Comprehension {
        kind: CompKind,
        elt: Box<Expr>,
        /// Value expression of a dict comprehension.
        value: Option<Box<Expr>>,
        generators: Vec<Generator>,
    },
    Starred(Box<Expr>),
}

impl Expr {
    pub fn name(s: &str) -> Expr {
        Expr::Name(s.to_string())
    }

    pub fn attr(value: Expr, attr: &str) -> Expr {
        Expr::Attribute { value: Box::new(value), attr: attr.to_string() }
    }

    pub fn call(func: Expr, args: Vec<Expr>) -> Expr {
        Expr::Call { func: Box::new(func), args: args.into_iter().map(Arg::Positional).collect() }
    }

    pub fn int(v: i128) -> Expr {
        Expr::Const(Constant::Int(v))
    }

    pub fn str(s: &str) -> Expr {
        Expr::Const(Constant::Str(s.to_string()))
    }

    /// True when evaluating the expression may run user code through a call.
    pub fn contains_call(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if matches!(e, Expr::Call { .. }) {
                found = true;
            }
        });
        found
    }

    /// Dotted rendering of `a.b.c` chains, `None` for anything else.
    pub fn dotted(&self) -> Option<String> {
        match self {
            Expr::Name(n) => Some(n.clone()),
            Expr::Attribute { value, attr } => value.dotted().map(|v| format!("{v}.{attr}")),
            _ => None,
        }
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Name(_) | Expr::Const(_) | Expr::FString(_) => {}
            Expr::Attribute { value, .. } => value.walk(f),
            Expr::Call { func, args } => {
                func.walk(f);
                for a in args {
                    a.value().walk(f);
                }
            }
            Expr::Subscript { value, index } => {
                value.walk(f);
                index.walk(f);
            }
            Expr::Slice { lower, upper, step } => {
                for e in [lower, upper, step].into_iter().flatten() {
                    e.walk(f);
                }
            }
            Expr::BinOp { left, right, .. } => {
                left.walk(f);
                right.walk(f);
            }
            Expr::UnaryOp { operand, .. } => operand.walk(f),
            Expr::BoolOp { values, .. } => values.iter().for_each(|v| v.walk(f)),
            Expr::Compare { left, ops } => {
                left.walk(f);
                ops.iter().for_each(|(_, e)| e.walk(f));
            }
            Expr::IfExp { test, body, orelse } => {
                body.walk(f);
                test.walk(f);
                orelse.walk(f);
            }
            Expr::Lambda { body, .. } => body.walk(f),
            Expr::List(v) | Expr::Tuple(v) | Expr::Set(v) => v.iter().for_each(|e| e.walk(f)),
            Expr::Dict(items) => {
                for item in items {
                    match item {
                        DictItem::Pair(k, v) => {
                            k.walk(f);
                            v.walk(f);
                        }
                        DictItem::Unpack(e) => e.walk(f),
                    }
                }
            }
            Expr::Comprehension { elt, value, generators, .. } => {
                elt.walk(f);
                if let Some(v) = value {
                    v.walk(f);
                }
                for g in generators {
                    g.target.walk(f);
                    g.iter.walk(f);
                    g.ifs.iter().for_each(|e| e.walk(f));
                }
            }
            Expr::Starred(e) => e.walk(f),
        }
    }

    /// Pre-order mutable traversal. The callback returns `false` to stop
    /// descending into the node it was handed.
    pub fn walk_mut(&mut self, f: &mut dyn FnMut(&mut Expr) -> bool) {
        if !f(self) {
            return;
        }
        match self {
            Expr::Name(_) | Expr::Const(_) | Expr::FString(_) => {}
            Expr::Attribute { value, .. } => value.walk_mut(f),
            Expr::Call { func, args } => {
                func.walk_mut(f);
                for a in args {
                    a.value_mut().walk_mut(f);
                }
            }
            Expr::Subscript { value, index } => {
                value.walk_mut(f);
                index.walk_mut(f);
            }
            Expr::Slice { lower, upper, step } => {
                for e in [lower, upper, step].into_iter().flatten() {
                    e.walk_mut(f);
                }
            }
            Expr::BinOp { left, right, .. } => {
                left.walk_mut(f);
                right.walk_mut(f);
            }
            Expr::UnaryOp { operand, .. } => operand.walk_mut(f),
            Expr::BoolOp { values, .. } => values.iter_mut().for_each(|v| v.walk_mut(f)),
            Expr::Compare { left, ops } => {
                left.walk_mut(f);
                ops.iter_mut().for_each(|(_, e)| e.walk_mut(f));
            }
            Expr::IfExp { test, body, orelse } => {
                body.walk_mut(f);
                test.walk_mut(f);
                orelse.walk_mut(f);
            }
            Expr::Lambda { body, .. } => body.walk_mut(f),
            Expr::List(v) | Expr::Tuple(v) | Expr::Set(v) => {
                v.iter_mut().for_each(|e| e.walk_mut(f))
            }
            Expr::Dict(items) => {
                for item in items {
                    match item {
                        DictItem::Pair(k, v) => {
                            k.walk_mut(f);
                            v.walk_mut(f);
                        }
                        DictItem::Unpack(e) => e.walk_mut(f),
                    }
                }
            }
            Expr::Comprehension { elt, value, generators, .. } => {
                elt.walk_mut(f);
                if let Some(v) = value {
                    v.walk_mut(f);
                }
                for g in generators {
                    g.target.walk_mut(f);
                    g.iter.walk_mut(f);
                    g.ifs.iter_mut().for_each(|e| e.walk_mut(f));
                }
            }
            Expr::Starred(e) => e.walk_mut(f),
        }
    }
}

/// Source text the amplifier does not model, stored with its common
/// indentation removed. Lines listed in `pinned` (continuations of
/// multi-line strings sitting left of the block) are emitted unindented.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RawCode {
    pub lines: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pinned: Vec<usize>,
}

impl RawCode {
    pub fn single(line: impl Into<String>) -> RawCode {
        RawCode { lines: vec![line.into()], pinned: Vec::new() }
    }

    pub fn from_source_lines(lines: &[&str], indent: &str) -> RawCode {
        let mut raw = RawCode::default();
        for (i, l) in lines.iter().enumerate() {
            let l = l.trim_end();
            match l.strip_prefix(indent) {
                Some(rest) => raw.lines.push(rest.to_string()),
                None if l.trim().is_empty() => raw.lines.push(String::new()),
                None => {
                    raw.pinned.push(i);
                    raw.lines.push(l.to_string());
                }
            }
        }
        raw
    }

    /// Lines with `pad` prepended to every non-empty, non-pinned line.
    pub fn indented(&self, pad: &str) -> Vec<String> {
        self.lines
            .iter()
            .enumerate()
            .map(|(i, l)| {
                if l.is_empty() || self.pinned.contains(&i) {
                    l.clone()
                } else {
                    format!("{pad}{l}")
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WithItem {
    pub context: Expr,
    pub target: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Stmt {
    Expr(Expr),
    Assign { targets: Vec<Expr>, value: Expr },
    AugAssign { target: Expr, op: BinOp, value: Expr },
    Pass,
    With { items: Vec<WithItem>, body: Vec<Stmt> },
    Raw(RawCode),
}

impl Stmt {
    /// Every expression held directly by this statement (not nested blocks).
    pub fn expressions(&self) -> Vec<&Expr> {
        match self {
            Stmt::Expr(e) => vec![e],
            Stmt::Assign { targets, value } => targets.iter().chain(std::iter::once(value)).collect(),
            Stmt::AugAssign { target, value, .. } => vec![target, value],
            Stmt::With { items, .. } => items
                .iter()
                .flat_map(|i| std::iter::once(&i.context).chain(i.target.iter()))
                .collect(),
            Stmt::Pass | Stmt::Raw(_) => Vec::new(),
        }
    }

    pub fn expressions_mut(&mut self) -> Vec<&mut Expr> {
        match self {
            Stmt::Expr(e) => vec![e],
            Stmt::Assign { targets, value } => {
                targets.iter_mut().chain(std::iter::once(value)).collect()
            }
            Stmt::AugAssign { target, value, .. } => vec![target, value],
            Stmt::With { items, .. } => items
                .iter_mut()
                .flat_map(|i| std::iter::once(&mut i.context).chain(i.target.iter_mut()))
                .collect(),
            Stmt::Pass | Stmt::Raw(_) => Vec::new(),
        }
    }
}

pub(crate) mod prec {
    pub const TUPLE: u8 = 0;
    pub const LAMBDA: u8 = 1;
    pub const IFEXP: u8 = 2;
    pub const OR: u8 = 3;
    pub const AND: u8 = 4;
    pub const NOT: u8 = 5;
    pub const CMP: u8 = 6;
    pub const BITOR: u8 = 7;
    pub const BITXOR: u8 = 8;
    pub const BITAND: u8 = 9;
    pub const SHIFT: u8 = 10;
    pub const ARITH: u8 = 11;
    pub const TERM: u8 = 12;
    pub const UNARY: u8 = 13;
    pub const POWER: u8 = 14;
    pub const ATOM: u8 = 16;
}
