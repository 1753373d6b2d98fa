//! The canonical key–value tree syntax shared by system descriptions,
//! traces, search reports and persisted stores.
//!
//! ```text
//! # comment
//! {
//!   name: "demo",
//!   sizes: [1, 2.5],
//!   nested: {a: "x"},
//! }
//! ```
//!
//! Objects use `{ key: value, ... }`, lists `[ value, ... ]`; entries are
//! comma-separated and a trailing comma is allowed. Keys are bare
//! identifiers or quoted strings. Scalars are double-quoted strings and
//! decimal numbers (kept as raw text so callers decide their precision).

use std::fmt::Write as _;

/// 1-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub const START: Pos = Pos { line: 1, col: 1 };
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spanned {
    pub pos: Pos,
    pub node: Node,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Object(Vec<Entry>),
    List(Vec<Spanned>),
    Str(String),
    Num(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub key_pos: Pos,
    pub value: Spanned,
}

impl Node {
    pub fn type_name(&self) -> &'static str {
        match self {
            Node::Object(_) => "object",
            Node::List(_) => "list",
            Node::Str(_) => "string",
            Node::Num(_) => "number",
        }
    }
}

impl Spanned {
    /// Drops positions.
    pub fn to_value(&self) -> Value {
        match &self.node {
            Node::Object(entries) => Value::Object(
                entries
                    .iter()
                    .map(|e| (e.key.clone(), e.value.to_value()))
                    .collect(),
            ),
            Node::List(items) => Value::List(items.iter().map(Spanned::to_value).collect()),
            Node::Str(s) => Value::Str(s.clone()),
            Node::Num(n) => Value::Num(n.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Colon,
    Comma,
    Str(String),
    Num(String),
    Ident(String),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Str(_) => "string".into(),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Ident(i) => format!("identifier `{i}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.'
}

fn lex(text: &str, errors: &mut Vec<SyntaxError>) -> Vec<(Pos, Tok)> {
    let mut toks = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! bump {
        () => {{
            let c = chars.next();
            match c {
                Some('\n') => {
                    line += 1;
                    col = 1;
                }
                Some(_) => col += 1,
                None => {}
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        match c {
            '\n' | ' ' | '\t' | '\r' | '\u{feff}' => {
                bump!();
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
            }
            '{' | '}' | '[' | ']' | ':' | ',' => {
                bump!();
                toks.push((
                    pos,
                    match c {
                        '{' => Tok::LBrace,
                        '}' => Tok::RBrace,
                        '[' => Tok::LBracket,
                        ']' => Tok::RBracket,
                        ':' => Tok::Colon,
                        _ => Tok::Comma,
                    },
                ));
            }
            '"' => {
                bump!();
                let mut s = String::new();
                let mut closed = false;
                while let Some(c) = bump!() {
                    match c {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\n' => break,
                        '\\' => {
                            let esc_pos = Pos { line, col: col - 1 };
                            match bump!() {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                Some('n') => s.push('\n'),
                                Some('t') => s.push('\t'),
                                Some('r') => s.push('\r'),
                                Some('u') => {
                                    let mut hex = String::new();
                                    for _ in 0..4 {
                                        if let Some(h) = bump!() {
                                            hex.push(h);
                                        }
                                    }
                                    match u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32) {
                                        Some(ch) => s.push(ch),
                                        None => errors.push(SyntaxError {
                                            pos: esc_pos,
                                            message: format!("invalid unicode escape `\\u{hex}`"),
                                        }),
                                    }
                                }
                                other => errors.push(SyntaxError {
                                    pos: esc_pos,
                                    message: format!(
                                        "invalid escape `\\{}`",
                                        other.map(String::from).unwrap_or_default()
                                    ),
                                }),
                            }
                        }
                        c => s.push(c),
                    }
                }
                if !closed {
                    errors.push(SyntaxError { pos, message: "unterminated string".into() });
                }
                toks.push((pos, Tok::Str(s)));
            }
            c if c == '-' || c == '+' || c.is_ascii_digit() => {
                let mut raw = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '+' {
                        raw.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                toks.push((pos, Tok::Num(raw)));
            }
            c if is_ident_start(c) => {
                let mut raw = String::new();
                while let Some(&c) = chars.peek() {
                    if is_ident_char(c) {
                        raw.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                toks.push((pos, Tok::Ident(raw)));
            }
            other => {
                bump!();
                errors.push(SyntaxError { pos, message: format!("unexpected character `{other}`") });
            }
        }
    }
    toks.push((Pos { line, col }, Tok::Eof));
    toks
}

struct Parser {
    toks: Vec<(Pos, Tok)>,
    at: usize,
    errors: Vec<SyntaxError>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].0
    }

    fn advance(&mut self) -> (Pos, Tok) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error(&mut self, pos: Pos, message: String) {
        self.errors.push(SyntaxError { pos, message });
    }

    /// Skips to the next `,` or unmatched closer at the current depth.
    fn recover(&mut self) {
        let mut depth = 0usize;
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::LBrace | Tok::LBracket => depth += 1,
                Tok::RBrace | Tok::RBracket => {
                    if depth == 0 {
                        return;
                    }
                    depth -= 1;
                }
                Tok::Comma if depth == 0 => return,
                _ => {}
            }
            self.advance();
        }
    }

    fn value(&mut self) -> Option<Spanned> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::LBrace => {
                self.advance();
                Some(Spanned { pos, node: Node::Object(self.object_body()) })
            }
            Tok::LBracket => {
                self.advance();
                Some(Spanned { pos, node: Node::List(self.list_body()) })
            }
            Tok::Str(s) => {
                self.advance();
                Some(Spanned { pos, node: Node::Str(s) })
            }
            Tok::Num(n) => {
                self.advance();
                Some(Spanned { pos, node: Node::Num(n) })
            }
            other => {
                self.error(pos, format!("expected a value, found {}", other.describe()));
                None
            }
        }
    }

    /// After a value inside a container: accept `,` or leave the closer.
    fn separator(&mut self, closer: &Tok) -> bool {
        match self.peek() {
            Tok::Comma => {
                self.advance();
                true
            }
            t if t == closer => true,
            other => {
                let msg = format!("expected `,` or {}, found {}", closer.describe(), other.describe());
                let pos = self.pos();
                self.error(pos, msg);
                self.recover();
                if matches!(self.peek(), Tok::Comma) {
                    self.advance();
                }
                !matches!(self.peek(), Tok::Eof)
            }
        }
    }

    fn object_body(&mut self) -> Vec<Entry> {
        let mut entries = Vec::new();
        loop {
            let key_pos = self.pos();
            let key = match self.peek().clone() {
                Tok::RBrace => {
                    self.advance();
                    return entries;
                }
                Tok::Eof => {
                    self.error(key_pos, "unclosed object, expected `}`".into());
                    return entries;
                }
                Tok::Ident(k) | Tok::Str(k) => {
                    self.advance();
                    k
                }
                other => {
                    self.error(key_pos, format!("expected a key, found {}", other.describe()));
                    self.recover();
                    if matches!(self.peek(), Tok::Comma) {
                        self.advance();
                    } else if matches!(self.peek(), Tok::RBracket) {
                        // stray closer from an enclosing list
                        self.advance();
                    }
                    continue;
                }
            };
            if !matches!(self.peek(), Tok::Colon) {
                let pos = self.pos();
                let found = self.peek().describe();
                self.error(pos, format!("expected `:` after key `{key}`, found {found}"));
                self.recover();
                if matches!(self.peek(), Tok::Comma) {
                    self.advance();
                }
                continue;
            }
            self.advance();
            match self.value() {
                Some(value) => entries.push(Entry { key, key_pos, value }),
                None => self.recover(),
            }
            if !self.separator(&Tok::RBrace) {
                return entries;
            }
        }
    }

    fn list_body(&mut self) -> Vec<Spanned> {
        let mut items = Vec::new();
        loop {
            match self.peek() {
                Tok::RBracket => {
                    self.advance();
                    return items;
                }
                Tok::Eof => {
                    let pos = self.pos();
                    self.error(pos, "unclosed list, expected `]`".into());
                    return items;
                }
                _ => {}
            }
            match self.value() {
                Some(v) => items.push(v),
                None => {
                    self.recover();
                    if matches!(self.peek(), Tok::RBrace) {
                        self.advance();
                    }
                }
            }
            if !self.separator(&Tok::RBracket) {
                return items;
            }
        }
    }
}

/// Parses a single top-level value. Returns whatever could be recovered
/// along with every syntax error found.
pub fn parse(text: &str) -> (Option<Spanned>, Vec<SyntaxError>) {
    let mut errors = Vec::new();
    let toks = lex(text, &mut errors);
    let mut p = Parser { toks, at: 0, errors };
    let root = p.value();
    if root.is_some() && !matches!(p.peek(), Tok::Eof) {
        let pos = p.pos();
        let found = p.peek().describe();
        p.error(pos, format!("unexpected {found} after the top-level value"));
    }
    let mut errors = p.errors;
    errors.sort_by_key(|e| e.pos);
    (root, errors)
}

/// Position-free tree used for rendering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Object(Vec<(String, Value)>),
    List(Vec<Value>),
    Str(String),
    Num(String),
}

impl Value {
    pub fn str(s: impl Into<String>) -> Value {
        Value::Str(s.into())
    }

    pub fn num(n: impl ToString) -> Value {
        Value::Num(n.to_string())
    }

    pub fn object<K: Into<String>>(entries: impl IntoIterator<Item = (K, Value)>) -> Value {
        Value::Object(entries.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        match self {
            Value::Object(entries) => entries.iter().find(|(k, _)| k == key).map(|(_, v)| v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_num(&self) -> Option<&str> {
        match self {
            Value::Num(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(items) => Some(items),
            _ => None,
        }
    }

    fn is_scalar(&self) -> bool {
        matches!(self, Value::Str(_) | Value::Num(_))
    }

    /// Canonical multi-line rendering, with a trailing newline.
    pub fn to_pretty(&self) -> String {
        let mut out = String::new();
        self.write_pretty(&mut out, 0, true);
        out.push('\n');
        out
    }

    /// Single-line rendering.
    pub fn to_compact(&self) -> String {
        let mut out = String::new();
        self.write_compact(&mut out);
        out
    }

    fn write_compact(&self, out: &mut String) {
        match self {
            Value::Str(s) => write_string(out, s),
            Value::Num(n) => out.push_str(n),
            Value::List(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    item.write_compact(out);
                }
                out.push(']');
            }
            Value::Object(entries) => {
                out.push('{');
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_key(out, k);
                    out.push_str(": ");
                    v.write_compact(out);
                }
                out.push('}');
            }
        }
    }

    fn inline_ok(&self) -> bool {
        match self {
            Value::List(items) => items.iter().all(Value::is_scalar),
            Value::Object(entries) => entries.iter().all(|(_, v)| v.is_scalar()),
            _ => true,
        }
    }

    fn write_pretty(&self, out: &mut String, indent: usize, top: bool) {
        let empty = matches!(self, Value::List(v) if v.is_empty())
            || matches!(self, Value::Object(v) if v.is_empty());
        if self.is_scalar() || empty || (!top && self.inline_ok() && self.to_compact().len() <= 72) {
            self.write_compact(out);
            return;
        }
        let pad = "  ".repeat(indent + 1);
        match self {
            Value::List(items) => {
                out.push_str("[\n");
                for item in items {
                    out.push_str(&pad);
                    item.write_pretty(out, indent + 1, false);
                    out.push_str(",\n");
                }
                out.push_str(&"  ".repeat(indent));
                out.push(']');
            }
            Value::Object(entries) => {
                out.push_str("{\n");
                for (k, v) in entries {
                    out.push_str(&pad);
                    write_key(out, k);
                    out.push_str(": ");
                    v.write_pretty(out, indent + 1, false);
                    out.push_str(",\n");
                }
                out.push_str(&"  ".repeat(indent));
                out.push('}');
            }
            _ => unreachable!(),
        }
    }
}

pub fn is_bare_key(key: &str) -> bool {
    let mut chars = key.chars();
    matches!(chars.next(), Some(c) if is_ident_start(c)) && chars.all(is_ident_char)
}

fn write_key(out: &mut String, key: &str) {
    if is_bare_key(key) {
        out.push_str(key);
    } else {
        write_string(out, key);
    }
}

pub fn write_string(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 || c == '\u{7f}' => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}
