//! Expression and statement emission with minimal parenthesization.

use super::ast::*;
use super::literal::{repr_float, repr_str};

pub fn constant(c: &Constant) -> String {
    match c {
        Constant::None => "None".into(),
        Constant::Bool(true) => "True".into(),
        Constant::Bool(false) => "False".into(),
        Constant::Int(v) => v.to_string(),
        Constant::Float(v) => repr_float(*v),
        Constant::Str(s) => repr_str(s),
        Constant::Verbatim(s) => s.clone(),
        Constant::Ellipsis => "...".into(),
    }
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Tuple(items) if !items.is_empty() => prec::TUPLE,
        Expr::Lambda { .. } => prec::LAMBDA,
        Expr::IfExp { .. } => prec::IFEXP,
        Expr::BoolOp { op: BoolOp::Or, .. } => prec::OR,
        Expr::BoolOp { op: BoolOp::And, .. } => prec::AND,
        Expr::UnaryOp { op: UnaryOp::Not, .. } => prec::NOT,
        Expr::Compare { .. } => prec::CMP,
        Expr::BinOp { op, .. } => op.precedence(),
        Expr::UnaryOp { .. } => prec::UNARY,
        Expr::Const(Constant::Int(v)) if *v < 0 => prec::UNARY,
        Expr::Const(Constant::Float(v)) if v.is_sign_negative() => prec::UNARY,
        Expr::Const(Constant::Float(v)) if !v.is_finite() => prec::TERM,
        Expr::Starred(_) => prec::BITOR,
        _ => prec::ATOM,
    }
}

/// Renders `e` wrapped in parentheses when its precedence is below `min`.
fn at(e: &Expr, min: u8) -> String {
    let s = expr(e);
    if precedence(e) < min {
        format!("({s})")
    } else {
        s
    }
}

fn join(items: &[Expr], min: u8) -> String {
    items.iter().map(|e| at(e, min)).collect::<Vec<_>>().join(", ")
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Name(n) => n.clone(),
        Expr::Const(c) => constant(c),
        Expr::FString(s) => s.clone(),
        Expr::Attribute { value, attr } => {
            let base = match value.as_ref() {
                Expr::Const(Constant::Int(_)) => format!("({})", expr(value)),
                v => at(v, prec::ATOM),
            };
            format!("{base}.{attr}")
        }
        Expr::Call { func, args } => {
            let args = if let [Arg::Positional(g @ Expr::Comprehension { kind: CompKind::Generator, .. })] =
                args.as_slice()
            {
                comprehension_inner(g)
            } else {
                args.iter().map(arg).collect::<Vec<_>>().join(", ")
            };
            format!("{}({})", at(func, prec::ATOM), args)
        }
        Expr::Subscript { value, index } => {
            let idx = match index.as_ref() {
                Expr::Tuple(items) if !items.is_empty() => {
                    let mut s = items.iter().map(slice_item).collect::<Vec<_>>().join(", ");
                    if items.len() == 1 {
                        s.push(',');
                    }
                    s
                }
                other => slice_item(other),
            };
            format!("{}[{}]", at(value, prec::ATOM), idx)
        }
        Expr::Slice { .. } => slice_item(e),
        Expr::BinOp { left, op, right } => {
            let p = op.precedence();
            if *op == BinOp::Pow {
                // right-associative; the exponent may be a unary expression
                format!("{} ** {}", at(left, prec::POWER + 1), at(right, prec::UNARY))
            } else {
                format!("{} {} {}", at(left, p), op.symbol(), at(right, p + 1))
            }
        }
        Expr::UnaryOp { op, operand } => match op {
            UnaryOp::Not => format!("not {}", at(operand, prec::NOT)),
            UnaryOp::Neg => format!("-{}", at(operand, prec::UNARY)),
            UnaryOp::Pos => format!("+{}", at(operand, prec::UNARY)),
            UnaryOp::Invert => format!("~{}", at(operand, prec::UNARY)),
        },
        Expr::BoolOp { op, values } => {
            let (kw, p) = match op {
                BoolOp::And => (" and ", prec::AND),
                BoolOp::Or => (" or ", prec::OR),
            };
            values.iter().map(|v| at(v, p + 1)).collect::<Vec<_>>().join(kw)
        }
        Expr::Compare { left, ops } => {
            let mut s = at(left, prec::CMP + 1);
            for (op, right) in ops {
                s.push(' ');
                s.push_str(op.symbol());
                s.push(' ');
                s.push_str(&at(right, prec::CMP + 1));
            }
            s
        }
        Expr::IfExp { test, body, orelse } => format!(
            "{} if {} else {}",
            at(body, prec::IFEXP + 1),
            at(test, prec::IFEXP + 1),
            at(orelse, prec::IFEXP)
        ),
        Expr::Lambda { params, body } => {
            if params.is_empty() {
                format!("lambda: {}", at(body, prec::LAMBDA))
            } else {
                format!("lambda {}: {}", params, at(body, prec::LAMBDA))
            }
        }
        Expr::List(items) => format!("[{}]", join(items, prec::IFEXP)),
        Expr::Tuple(items) => match items.len() {
            0 => "()".into(),
            1 => format!("({},)", at(&items[0], prec::IFEXP)),
            _ => format!("({})", join(items, prec::IFEXP)),
        },
        Expr::Set(items) => {
            if items.is_empty() {
                "set()".into()
            } else {
                format!("{{{}}}", join(items, prec::IFEXP))
            }
        }
        Expr::Dict(items) => {
            let inner = items
                .iter()
                .map(|it| match it {
                    DictItem::Pair(k, v) => format!("{}: {}", at(k, prec::IFEXP), at(v, prec::IFEXP)),
                    DictItem::Unpack(e) => format!("**{}", at(e, prec::BITOR)),
                })
                .collect::<Vec<_>>()
                .join(", ");
            format!("{{{inner}}}")
        }
        Expr::Comprehension { kind, .. } => {
            let inner = comprehension_inner(e);
            match kind {
                CompKind::List => format!("[{inner}]"),
                CompKind::Set | CompKind::Dict => format!("{{{inner}}}"),
                CompKind::Generator => format!("({inner})"),
            }
        }
        Expr::Starred(inner) => format!("*{}", at(inner, prec::BITOR)),
    }
}

fn comprehension_inner(e: &Expr) -> String {
    let Expr::Comprehension { elt, value, generators, .. } = e else { unreachable!() };
    let mut s = match value {
        Some(v) => format!("{}: {}", at(elt, prec::IFEXP), at(v, prec::IFEXP)),
        None => at(elt, prec::IFEXP),
    };
    for g in generators {
        let target = match &g.target {
            Expr::Tuple(items) if !items.is_empty() => join(items, prec::BITOR),
            t => at(t, prec::BITOR),
        };
        s.push_str(&format!(" for {} in {}", target, at(&g.iter, prec::OR)));
        for cond in &g.ifs {
            s.push_str(&format!(" if {}", at(cond, prec::OR)));
        }
    }
    s
}

fn slice_item(e: &Expr) -> String {
    match e {
        Expr::Slice { lower, upper, step } => {
            let part = |b: &Option<Box<Expr>>| b.as_ref().map(|x| at(x, prec::IFEXP)).unwrap_or_default();
            let mut s = format!("{}:{}", part(lower), part(upper));
            if let Some(st) = step {
                s.push(':');
                s.push_str(&at(st, prec::IFEXP));
            }
            s
        }
        other => at(other, prec::IFEXP),
    }
}

fn arg(a: &Arg) -> String {
    match a {
        Arg::Positional(e) => at(e, prec::IFEXP),
        Arg::Keyword(k, e) => format!("{k}={}", at(e, prec::IFEXP)),
        Arg::Star(e) => format!("*{}", at(e, prec::BITOR)),
        Arg::DoubleStar(e) => format!("**{}", at(e, prec::BITOR)),
    }
}

/// Target rendering that drops the parentheses around bare tuples.
fn target(e: &Expr) -> String {
    match e {
        Expr::Tuple(items) if items.len() > 1 => join(items, prec::BITOR),
        other => expr(other),
    }
}

/// Statement lines at the given indentation (4 spaces per level).
pub fn stmt_lines(s: &Stmt, indent: usize, out: &mut Vec<String>) {
    let pad = "    ".repeat(indent);
    match s {
        Stmt::Expr(e) => out.push(format!("{pad}{}", top_level(e))),
        Stmt::Assign { targets, value } => {
            let mut line = pad.clone();
            for t in targets {
                line.push_str(&target(t));
                line.push_str(" = ");
            }
            line.push_str(&top_level(value));
            out.push(line);
        }
        Stmt::AugAssign { target: t, op, value } => {
            out.push(format!("{pad}{} {}= {}", expr(t), op.symbol(), top_level(value)))
        }
        Stmt::Pass => out.push(format!("{pad}pass")),
        Stmt::With { items, body } => {
            let items = items
                .iter()
                .map(|i| match &i.target {
                    Some(t) => format!("{} as {}", at(&i.context, prec::IFEXP), at(t, prec::BITOR)),
                    None => at(&i.context, prec::IFEXP),
                })
                .collect::<Vec<_>>()
                .join(", ");
            out.push(format!("{pad}with {items}:"));
            if body.is_empty() {
                out.push(format!("{pad}    pass"));
            }
            for b in body {
                stmt_lines(b, indent + 1, out);
            }
        }
        Stmt::Raw(raw) => out.extend(raw.indented(&pad)),
    }
}

/// Bare tuples are legal unparenthesized at statement level.
fn top_level(e: &Expr) -> String {
    match e {
        Expr::Tuple(items) if items.len() > 1 => join(items, prec::IFEXP),
        other => expr(other),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::{parse_simple_statement, ExprParser};
    use super::super::token::{tokenize, TokKind};
    use super::*;

    fn roundtrip(src: &str) -> String {
        let toks: Vec<_> = tokenize(src)
            .unwrap()
            .into_iter()
            .filter(|t| !matches!(t.kind, TokKind::Newline | TokKind::EndMarker))
            .collect();
        expr(&ExprParser::parse_all(&toks).unwrap())
    }

    #[test]
    fn canonical_forms() {
        let cases = [
            ("self.assertEqual( self.b.get_balance(), 10)", "self.assertEqual(self.b.get_balance(), 10)"),
            ("(a + b) * c", "(a + b) * c"),
            ("a + (b * c)", "a + b * c"),
            ("a - (b - c)", "a - (b - c)"),
            ("(-2) ** 2", "(-2) ** 2"),
            ("2 ** -1", "2 ** -1"),
            ("not (a and b)", "not (a and b)"),
            ("x if y else z", "x if y else z"),
            ("[1, 'a', None, True, 2.5]", "[1, 'a', None, True, 2.5]"),
            ("f(*a, **k, x=1)", "f(*a, **k, x=1)"),
            ("sum(x for x in y)", "sum(x for x in y)"),
            ("a[1:2, ::3]", "a[1:2, ::3]"),
            ("(1,)", "(1,)"),
            ("{'a': 1, **d}", "{'a': 1, **d}"),
            ("\"it's\"", "\"it's\""),
            ("lambda: 0", "lambda: 0"),
            ("(yield_ for yield_ in x)", "(yield_ for yield_ in x)"),
        ];
        for (src, want) in cases {
            assert_eq!(roundtrip(src), want, "source: {src}");
        }
    }

    #[test]
    fn statements_emit() {
        let toks: Vec<_> = tokenize("a, b = 1, 2\n")
            .unwrap()
            .into_iter()
            .filter(|t| !matches!(t.kind, TokKind::Newline | TokKind::EndMarker))
            .collect();
        let mut out = Vec::new();
        stmt_lines(&parse_simple_statement(&toks), 2, &mut out);
        assert_eq!(out, vec!["        a, b = 1, 2"]);
    }
}
