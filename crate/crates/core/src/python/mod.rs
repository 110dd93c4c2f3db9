//! Front end for the subject language: tokenizer, parser and emitter for
//! the parts of Python 3 that test amplification rewrites.

pub mod ast;
pub mod literal;
pub mod parser;
pub mod token;
pub mod unparse;

use std::fmt;

pub use ast::{Arg, Constant, DictItem, Expr, RawCode, Stmt, WithItem};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for SyntaxError {}

fn logical_tokens(src: &str) -> Result<Vec<token::Token>, SyntaxError> {
    Ok(token::tokenize(src)?
        .into_iter()
        .filter(|t| !matches!(t.kind, token::TokKind::Newline | token::TokKind::EndMarker))
        .collect())
}

/// Parses a single expression.
pub fn parse_expr(src: &str) -> Result<Expr, SyntaxError> {
    let toks = logical_tokens(src)?;
    parser::ExprParser::parse_all(&toks)
}

/// Parses a single simple statement (falls back to raw code).
pub fn parse_stmt(src: &str) -> Result<Stmt, SyntaxError> {
    let toks = logical_tokens(src)?;
    if toks.is_empty() {
        return Err(SyntaxError { line: 1, message: "empty statement".into() });
    }
    Ok(parser::parse_simple_statement(&toks))
}

pub fn expr_to_source(e: &Expr) -> String {
    unparse::expr(e)
}

const BUILTINS: &[&str] = &["ArithmeticError", "AssertionError", "AttributeError", "BaseException", "BlockingIOError", "BrokenPipeError", "BufferError", "BytesWarning", "ChildProcessError", "ConnectionAbortedError", "ConnectionError", "ConnectionRefusedError", "ConnectionResetError", "DeprecationWarning", "EOFError", "Ellipsis", "EncodingWarning", "EnvironmentError", "Exception", "False", "FileExistsError", "FileNotFoundError", "FloatingPointError", "FutureWarning", "GeneratorExit", "IOError", "ImportError", "ImportWarning", "IndentationError", "IndexError", "InterruptedError", "IsADirectoryError", "KeyError", "KeyboardInterrupt", "LookupError", "MemoryError", "ModuleNotFoundError", "NameError", "None", "NotADirectoryError", "NotImplemented", "NotImplementedError", "OSError", "OverflowError", "PendingDeprecationWarning", "PermissionError", "ProcessLookupError", "RecursionError", "ReferenceError", "ResourceWarning", "RuntimeError", "RuntimeWarning", "StopAsyncIteration", "StopIteration", "SyntaxError", "SyntaxWarning", "SystemError", "SystemExit", "TabError", "TimeoutError", "True", "TypeError", "UnboundLocalError", "UnicodeDecodeError", "UnicodeEncodeError", "UnicodeError", "UnicodeTranslateError", "UnicodeWarning", "UserWarning", "ValueError", "Warning", "ZeroDivisionError", "abs", "aiter", "all", "anext", "any", "ascii", "bin", "bool", "breakpoint", "bytearray", "bytes", "callable", "chr", "classmethod", "compile", "complex", "copyright", "credits", "delattr", "dict", "dir", "divmod", "enumerate", "eval", "exec", "exit", "filter", "float", "format", "frozenset", "getattr", "globals", "hasattr", "hash", "help", "hex", "id", "input", "int", "isinstance", "issubclass", "iter", "len", "license", "list", "locals", "map", "max", "memoryview", "min", "next", "object", "oct", "open", "ord", "pow", "print", "property", "quit", "range", "repr", "reversed", "round", "set", "setattr", "slice", "sorted", "staticmethod", "str", "sum", "super", "tuple", "type", "vars", "zip"];

/// Whether `name` is a builtin of the interpreter.
pub fn is_builtin(name: &str) -> bool {
    BUILTINS.contains(&name)
}
