//! Conversions between Python literal spellings and Rust values.

use super::ast::Constant;

/// Renders a string the way Python's `repr()` does.
pub fn repr_str(s: &str) -> String {
    let quote = if s.contains('\'') && !s.contains('"') { '"' } else { '\'' };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(quote);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c if (c as u32) < 0x20 || c as u32 == 0x7f => {
                out.push_str(&format!("\\x{:02x}", c as u32));
            }
            c if c.is_control() => {
                let v = c as u32;
                if v <= 0xff {
                    out.push_str(&format!("\\x{v:02x}"));
                } else if v <= 0xffff {
                    out.push_str(&format!("\\u{v:04x}"));
                } else {
                    out.push_str(&format!("\\U{v:08x}"));
                }
            }
            c => out.push(c),
        }
    }
    out.push(quote);
    out
}

/// Renders a float the way Python's `repr()` does: shortest round-trip
/// digits, positional notation for decimal exponents in `[-4, 16)`.
pub fn repr_float(v: f64) -> String {
    if v.is_nan() {
        return "float('nan')".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "float('inf')".into() } else { "-float('inf')".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{:e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("`{:e}` always has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    if (-4..16).contains(&exp) {
        let point = exp + 1;
        let body = if point <= 0 {
            format!("0.{}{}", "0".repeat((-point) as usize), digits)
        } else if point as usize >= digits.len() {
            format!("{}{}.0", digits, "0".repeat(point as usize - digits.len()))
        } else {
            let (a, b) = digits.split_at(point as usize);
            format!("{a}.{b}")
        };
        format!("{sign}{body}")
    } else {
        let (first, rest) = digits.split_at(1);
        let frac = if rest.is_empty() { String::new() } else { format!(".{rest}") };
        let esign = if exp < 0 { '-' } else { '+' };
        format!("{sign}{first}{frac}e{esign}{:02}", exp.abs())
    }
}

/// Parses a NUMBER token.
pub fn parse_number(text: &str) -> Constant {
    let clean: String = text.chars().filter(|c| *c != '_').collect();
    let lower = clean.to_ascii_lowercase();
    if lower.ends_with('j') {
        return Constant::Verbatim(text.to_string());
    }
    let radix = if lower.starts_with("0x") {
        Some(16)
    } else if lower.starts_with("0o") {
        Some(8)
    } else if lower.starts_with("0b") {
        Some(2)
    } else {
        None
    };
    if let Some(radix) = radix {
        return match i128::from_str_radix(&lower[2..], radix) {
            Ok(v) if v.unsigned_abs() <= i64::MAX as u128 => Constant::Int(v),
            _ => Constant::Verbatim(text.to_string()),
        };
    }
    if lower.contains('.') || lower.contains('e') {
        return match lower.parse::<f64>() {
            Ok(v) if v.is_finite() => Constant::Float(v),
            _ => Constant::Verbatim(text.to_string()),
        };
    }
    match lower.parse::<i128>() {
        Ok(v) if v.unsigned_abs() <= i64::MAX as u128 => Constant::Int(v),
        _ => Constant::Verbatim(text.to_string()),
    }
}

/// Outcome of decoding one STRING token.
pub enum StrToken {
    Str(String),
    Bytes,
    FString,
}

/// Decodes a (non-f, non-bytes) string token into its value.
pub fn decode_string_token(tok: &str) -> Result<StrToken, String> {
    let prefix_len = tok.find(['\'', '"']).ok_or("not a string token")?;
    let prefix = tok[..prefix_len].to_ascii_lowercase();
    if prefix.contains('f') {
        return Ok(StrToken::FString);
    }
    if prefix.contains('b') {
        return Ok(StrToken::Bytes);
    }
    let raw = prefix.contains('r');
    let body = &tok[prefix_len..];
    let q = if body.starts_with("\"\"\"") || body.starts_with("'''") { 3 } else { 1 };
    if body.len() < 2 * q {
        return Err("malformed string token".into());
    }
    let inner = &body[q..body.len() - q];
    if raw {
        return Ok(StrToken::Str(inner.to_string()));
    }
    unescape(inner).map(StrToken::Str)
}

fn unescape(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut it = s.chars().peekable();
    while let Some(c) = it.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        let Some(e) = it.next() else {
            out.push('\\');
            break;
        };
        match e {
            '\n' => {}
            '\\' => out.push('\\'),
            '\'' => out.push('\''),
            '"' => out.push('"'),
            'a' => out.push('\x07'),
            'b' => out.push('\x08'),
            'f' => out.push('\x0c'),
            'n' => out.push('\n'),
            'r' => out.push('\r'),
            't' => out.push('\t'),
            'v' => out.push('\x0b'),
            '0'..='7' => {
                let mut v = e.to_digit(8).unwrap();
                for _ in 0..2 {
                    match it.peek().and_then(|c| c.to_digit(8)) {
                        Some(d) => {
                            v = v * 8 + d;
                            it.next();
                        }
                        None => break,
                    }
                }
                out.push(char::from_u32(v).ok_or("bad octal escape")?);
            }
            'x' | 'u' | 'U' => {
                let n = match e {
                    'x' => 2,
                    'u' => 4,
                    _ => 8,
                };
                let hex: String = (0..n).filter_map(|_| it.next()).collect();
                let v = u32::from_str_radix(&hex, 16).map_err(|_| "bad hex escape")?;
                out.push(char::from_u32(v).ok_or("bad unicode escape")?);
            }
            'N' => return Err("named unicode escapes are not decoded".into()),
            other => {
                out.push('\\');
                out.push(other);
            }
        }
    }
    Ok(out)
}
