use std::collections::{BTreeMap, HashMap};

use super::ast::{is_ident, key_type, Circuit, GateKind, KeyType, Kind, Statement, Unit, Value};
use super::ParseError;

struct Token<'a> {
    text: &'a str,
    /// 1-based, in characters.
    col: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    let mut col = 0;
    for (byte, c) in line.char_indices() {
        col += 1;
        if c == '#' {
            if let Some((b, cc)) = start.take() {
                out.push(Token {
                    text: &line[b..byte],
                    col: cc,
                });
            }
            return out;
        }
        if c.is_whitespace() {
            if let Some((b, cc)) = start.take() {
                out.push(Token {
                    text: &line[b..byte],
                    col: cc,
                });
            }
        } else if start.is_none() {
            start = Some((byte, col));
        }
    }
    if let Some((b, cc)) = start {
        out.push(Token {
            text: &line[b..],
            col: cc,
        });
    }
    out
}

/// Splits a leading decimal number from its unit suffix.
fn split_number(s: &str) -> Option<(f64, &str)> {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return None;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut j = i + 1;
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        let exp_start = j;
        while j < b.len() && b[j].is_ascii_digit() {
            j += 1;
        }
        if j > exp_start {
            i = j;
        }
    }
    let value: f64 = s[..i].parse().ok()?;
    Some((value, &s[i..]))
}

/// Parses the text of a value for `key` on a statement of `kind`.
pub(crate) fn parse_value(
    kind: Kind,
    key: &str,
    ty: KeyType,
    text: &str,
    line: usize,
    col: usize,
) -> Result<Value, ParseError> {
    let syntax = |msg: String| ParseError::Syntax { line, col, msg };
    if text.is_empty() {
        return Err(syntax(format!("missing value for `{key}`")));
    }
    match ty {
        KeyType::Quantity(_) | KeyType::Bare | KeyType::Count => {
            let (value, unit) = split_number(text)
                .ok_or_else(|| syntax(format!("expected a number for `{key}`, found `{text}`")))?;
            if !value.is_finite() {
                return Err(syntax(format!("`{text}` is not finite")));
            }
            let ucol = col + text.len() - unit.len();
            if unit.is_empty() {
                if ty == KeyType::Count && (value < 0.0 || value.fract() != 0.0) {
                    return Err(syntax(format!(
                        "`{key}` takes a non-negative integer, found `{text}`"
                    )));
                }
                return Ok(Value::Number(value));
            }
            if !unit.starts_with(|c: char| c.is_ascii_alphabetic()) {
                return Err(ParseError::Syntax {
                    line,
                    col: ucol,
                    msg: format!("unexpected `{unit}` after number"),
                });
            }
            let Some(u) = Unit::from_symbol(unit) else {
                return Err(ParseError::UnknownUnit {
                    line,
                    col: ucol,
                    unit: unit.to_string(),
                    detail: "expected one of kPa, mL, cm, mm, m, s".into(),
                });
            };
            let factor = ty.factor(u).ok_or_else(|| ParseError::UnknownUnit {
                line,
                col: ucol,
                unit: unit.to_string(),
                detail: match ty {
                    KeyType::Quantity(c) => format!("`{key}` on {} takes {c}", kind.keyword()),
                    _ => format!("`{key}` on {} takes a bare number", kind.keyword()),
                },
            })?;
            Ok(Value::Number(value * factor))
        }
        KeyType::Name => {
            if !is_ident(text) {
                return Err(syntax(format!("expected an identifier for `{key}`, found `{text}`")));
            }
            Ok(Value::Name(text.to_string()))
        }
        KeyType::List => {
            let items: Vec<String> = text.split(',').map(str::to_string).collect();
            if let Some(bad) = items.iter().find(|s| !is_ident(s)) {
                return Err(syntax(format!("bad list entry `{bad}` in `{key}`")));
            }
            Ok(Value::List(items))
        }
        KeyType::Choice(options) => {
            if options.contains(&text) {
                Ok(Value::Name(text.to_string()))
            } else {
                Err(ParseError::UnknownKeyword {
                    line,
                    col,
                    word: text.to_string(),
                    expected: options.join("|"),
                })
            }
        }
    }
}

pub fn parse(text: &str) -> Result<Circuit, ParseError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut statements = Vec::new();
    let mut seen: HashMap<(&'static str, String), usize> = HashMap::new();

    for (i, raw) in text.split('\n').enumerate() {
        let line = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let tokens = tokenize(raw);
        let Some(first) = tokens.first() else {
            continue;
        };
        let mut kind = Kind::from_keyword(first.text).ok_or_else(|| ParseError::UnknownKeyword {
            line,
            col: first.col,
            word: first.text.to_string(),
            expected: "source|atm|tube|balloon|valve|gate|ring|probe".into(),
        })?;
        let mut rest = &tokens[1..];
        if let Kind::Gate(_) = kind {
            let Some(t) = rest.first() else {
                return Err(ParseError::Syntax {
                    line,
                    col: raw.chars().count() + 1,
                    msg: "expected gate type after `gate`".into(),
                });
            };
            let g = GateKind::from_keyword(t.text).ok_or_else(|| ParseError::UnknownKeyword {
                line,
                col: t.col,
                word: t.text.to_string(),
                expected: "NOT|NOR|NAND|AND|OR".into(),
            })?;
            kind = Kind::Gate(g);
            rest = &rest[1..];
        }
        let Some(id_tok) = rest.first() else {
            return Err(ParseError::Syntax {
                line,
                col: raw.chars().count() + 1,
                msg: format!("expected an identifier after `{}`", kind.keyword()),
            });
        };
        if !is_ident(id_tok.text) {
            return Err(ParseError::Syntax {
                line,
                col: id_tok.col,
                msg: format!("expected an identifier, found `{}`", id_tok.text),
            });
        }
        let id = id_tok.text.to_string();
        if let Some(&first_line) = seen.get(&(kind.namespace(), id.clone())) {
            return Err(ParseError::DuplicateId {
                line,
                col: id_tok.col,
                id,
                first_line,
            });
        }
        seen.insert((kind.namespace(), id.clone()), line);

        let mut params = BTreeMap::new();
        for tok in &rest[1..] {
            let Some((key, value)) = tok.text.split_once('=') else {
                return Err(ParseError::Syntax {
                    line,
                    col: tok.col,
                    msg: format!("expected key=value, found `{}`", tok.text),
                });
            };
            if key.is_empty() {
                return Err(ParseError::Syntax {
                    line,
                    col: tok.col,
                    msg: "missing key before `=`".into(),
                });
            }
            let ty = key_type(kind, key).ok_or_else(|| ParseError::UnknownKeyword {
                line,
                col: tok.col,
                word: key.to_string(),
                expected: format!("a {} parameter", kind.keyword()),
            })?;
            if params.contains_key(key) {
                return Err(ParseError::Syntax {
                    line,
                    col: tok.col,
                    msg: format!("duplicate key `{key}`"),
                });
            }
            let vcol = tok.col + key.chars().count() + 1;
            let v = parse_value(kind, key, ty, value, line, vcol)?;
            params.insert(key.to_string(), v);
        }
        statements.push(Statement {
            kind,
            id,
            params,
            line,
        });
    }
    Ok(Circuit { statements })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_statement_example() {
        let c = parse("source SUP pressure=145kPa\ngate NOT g1 in=a out=q supply=SUP\nprobe q").unwrap();
        assert_eq!(c.statements.len(), 3);
        assert_eq!(c.statements[1].kind, Kind::Gate(GateKind::Not));
        assert_eq!(c.statements[1].list("in"), Some(&["a".to_string()][..]));
        assert_eq!(c.statements[0].number("pressure"), Some(145.0));
        assert_eq!(c.statements[2].line, 3);
    }

    #[test]
    fn units_convert_on_read() {
        let c = parse("tube t1 from=a to=b length=0.075m id=0.1cm").unwrap();
        let t = &c.statements[0];
        assert!((t.number("length").unwrap() - 7.5).abs() < 1e-12);
        assert!((t.number("id").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_key() {
        let e = parse("gate NOT g1 in=a in=b").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { line: 1, col: 18, .. }), "{e:?}");
        assert!(e.to_string().contains("duplicate key `in`"));
    }

    #[test]
    fn unknown_unit_names_token() {
        let e = parse("source S pressure=20psi").unwrap_err();
        match e {
            ParseError::UnknownUnit { line, col, unit, .. } => {
                assert_eq!((line, col, unit.as_str()), (1, 21, "psi"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("tube t from=a to=b length=3mL").unwrap_err(),
            ParseError::UnknownUnit { .. }
        ));
    }

    #[test]
    fn unknown_keywords() {
        assert!(matches!(
            parse("\n\nwire w").unwrap_err(),
            ParseError::UnknownKeyword { line: 3, col: 1, .. }
        ));
        assert!(matches!(
            parse("gate XOR g").unwrap_err(),
            ParseError::UnknownKeyword { col: 6, .. }
        ));
        assert!(matches!(
            parse("tube t colour=red").unwrap_err(),
            ParseError::UnknownKeyword { col: 8, .. }
        ));
        assert!(matches!(
            parse("ring r pulldown=sideways").unwrap_err(),
            ParseError::UnknownKeyword { .. }
        ));
    }

    #[test]
    fn duplicate_ids_per_kind() {
        let e = parse("atm A\ntube t from=a to=b r=1\n tube t from=b to=c r=1").unwrap_err();
        assert_eq!(
            e,
            ParseError::DuplicateId {
                line: 3,
                col: 7,
                id: "t".into(),
                first_line: 2
            }
        );
        // same id in different namespaces is fine
        parse("source q pressure=1kPa\nprobe q").unwrap();
        assert!(parse("gate NOT g in=a\ngate NOR g in=a,b").is_err());
    }

    #[test]
    fn comments_blank_lines_and_crlf() {
        let c = parse("# header\r\n\r\nsource S pressure=1kPa # trailing\r\natm ATM\r\n").unwrap();
        assert_eq!(c.statements.len(), 2);
        assert_eq!(c.statements[1].line, 4);
    }

    #[test]
    fn syntax_errors_carry_position() {
        for (text, line) in [
            ("source", 1),
            ("atm A\ngate", 2),
            ("atm A\n\ngate NOT", 3),
            ("tube 9t", 1),
            ("tube t from", 1),
            ("tube t =a", 1),
            ("tube t length=", 1),
            ("tube t length=abc", 1),
            ("ring r n=2.5", 1),
            ("ring r n=-1", 1),
            ("gate NOR g in=a,,b", 1),
            ("tube t length=3cm!", 1),
        ] {
            let e = parse(text).unwrap_err();
            assert_eq!(e.line(), line, "{text:?} -> {e}");
            assert!(e.column() >= 1);
        }
    }

    #[test]
    fn number_forms() {
        assert_eq!(split_number("1e-3m"), Some((1e-3, "m")));
        assert_eq!(split_number("-.5"), Some((-0.5, "")));
        assert_eq!(split_number("2e"), Some((2.0, "e")));
        assert_eq!(split_number("+3.kPa"), Some((3.0, "kPa")));
        assert_eq!(split_number("kPa"), None);
        assert_eq!(split_number("."), None);
    }
}
