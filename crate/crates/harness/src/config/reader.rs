//! Span-aware walk over a parsed TOML document. Every accessor marks the key
//! as consumed; `finish` reports whatever was left over, so no key is ever
//! silently ignored.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use toml::de::{DeArray, DeTable, DeValue};
use toml::Spanned;

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Issue {
    pub path: String,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: `{}`: {}", self.line, self.path, self.message)
    }
}

pub struct Issues<'s> {
    src: &'s str,
    pub list: Vec<Issue>,
}

impl<'s> Issues<'s> {
    pub fn new(src: &'s str) -> Self {
        Self { src, list: Vec::new() }
    }

    pub fn line_of(&self, span: &Range<usize>) -> usize {
        let end = span.start.min(self.src.len());
        self.src.as_bytes()[..end].iter().filter(|b| **b == b'\n').count() + 1
    }

    pub fn push(&mut self, path: &str, span: &Range<usize>, message: impl Into<String>) {
        let line = self.line_of(span);
        self.list.push(Issue { path: path.to_string(), line, message: message.into() });
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

/// One value together with where it came from.
#[derive(Clone, Copy)]
pub struct Val<'a, 'i> {
    pub path: &'a str,
    pub node: &'a Spanned<DeValue<'i>>,
}

pub struct Tbl<'a, 'i> {
    pub path: String,
    pub span: Range<usize>,
    table: &'a DeTable<'i>,
    seen: RefCell<BTreeSet<String>>,
}

impl<'a, 'i> Tbl<'a, 'i> {
    pub fn new(path: String, span: Range<usize>, table: &'a DeTable<'i>) -> Self {
        Self { path, span, table, seen: RefCell::new(BTreeSet::new()) }
    }

    pub fn has(&self, key: &str) -> bool {
        self.table.iter().any(|(k, _)| k.get_ref() == key)
    }

    pub fn raw(&self, key: &str) -> Option<&'a Spanned<DeValue<'i>>> {
        let hit = self.table.iter().find(|(k, _)| k.get_ref() == key).map(|(_, v)| v);
        if hit.is_some() {
            self.seen.borrow_mut().insert(key.to_string());
        }
        hit
    }

    pub fn key_path(&self, key: &str) -> String {
        join(&self.path, key)
    }

    pub fn span_of(&self, key: &str) -> Range<usize> {
        self.table
            .iter()
            .find(|(k, _)| k.get_ref() == key)
            .map_or(self.span.clone(), |(_, v)| v.span())
    }

    /// Required key; a missing key is reported against the table.
    pub fn req<T: FromToml>(&self, is: &mut Issues, key: &str) -> Option<T> {
        let path = self.key_path(key);
        match self.raw(key) {
            Some(node) => T::from_toml(Val { path: &path, node }, is),
            None => {
                is.push(&path, &self.span, "missing required key");
                None
            }
        }
    }

    pub fn opt<T: FromToml>(&self, is: &mut Issues, key: &str) -> Option<T> {
        let path = self.key_path(key);
        self.raw(key).and_then(|node| T::from_toml(Val { path: &path, node }, is))
    }

    /// Optional key with a default. A present but malformed value still
    /// yields the default after reporting, so parsing can carry on.
    pub fn or<T: FromToml>(&self, is: &mut Issues, key: &str, default: T) -> T {
        self.opt(is, key).unwrap_or(default)
    }

    pub fn table(&self, is: &mut Issues, key: &str) -> Option<Tbl<'a, 'i>> {
        let node = self.raw(key)?;
        let path = self.key_path(key);
        match node.get_ref() {
            DeValue::Table(t) => Some(Tbl::new(path, node.span(), t)),
            other => {
                is.push(&path, &node.span(), format!("expected a table, found {}", other.type_str()));
                None
            }
        }
    }

    /// Array of tables (`[[key]]` or an inline array of inline tables).
    pub fn tables(&self, is: &mut Issues, key: &str) -> Vec<Tbl<'a, 'i>> {
        let Some(node) = self.raw(key) else { return Vec::new() };
        let path = self.key_path(key);
        let Some(arr) = node.get_ref().as_array() else {
            is.push(&path, &node.span(), format!("expected an array of tables, found {}", node.get_ref().type_str()));
            return Vec::new();
        };
        arr.iter()
            .enumerate()
            .filter_map(|(i, item)| {
                let p = format!("{path}[{i}]");
                match item.get_ref() {
                    DeValue::Table(t) => Some(Tbl::new(p, item.span(), t)),
                    other => {
                        is.push(&p, &item.span(), format!("expected a table, found {}", other.type_str()));
                        None
                    }
                }
            })
            .collect()
    }

    /// Reports keys nobody asked for.
    pub fn finish(self, is: &mut Issues) {
        let seen = self.seen.into_inner();
        for (k, v) in self.table.iter() {
            if !seen.contains(k.get_ref().as_ref()) {
                is.push(&join(&self.path, k.get_ref()), &v.span(), "unknown key");
            }
        }
    }
}

pub trait FromToml: Sized {
    fn from_toml(v: Val<'_, '_>, is: &mut Issues) -> Option<Self>;
}

fn mismatch(v: Val<'_, '_>, is: &mut Issues, want: &str) {
    is.push(v.path, &v.node.span(), format!("expected {want}, found {}", v.node.get_ref().type_str()));
}

impl FromToml for f64 {
    fn from_toml(v: Val<'_, '_>, is: &mut Issues) -> Option<Self> {
        let parsed = match v.node.get_ref() {
            DeValue::Float(f) => f.as_str().parse::<f64>().ok(),
            DeValue::Integer(i) => i64::from_str_radix(i.as_str(), i.radix()).ok().map(|n| n as f64),
            _ => {
                mismatch(v, is, "a number");
                return None;
            }
        };
        match parsed {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                is.push(v.path, &v.node.span(), "number must be finite");
                None
            }
        }
    }
}

impl FromToml for i64 {
    fn from_toml(v: Val<'_, '_>, is: &mut Issues) -> Option<Self> {
        match v.node.get_ref() {
            DeValue::Integer(i) => i64::from_str_radix(i.as_str(), i.radix()).ok().or_else(|| {
                is.push(v.path, &v.node.span(), "integer out of range");
                None
            }),
            _ => {
                mismatch(v, is, "an integer");
                None
            }
        }
    }
}

impl FromToml for u64 {
    fn from_toml(v: Val<'_, '_>, is: &mut Issues) -> Option<Self> {
        match v.node.get_ref() {
            DeValue::Integer(i) => u64::from_str_radix(i.as_str(), i.radix()).ok().or_else(|| {
                is.push(v.path, &v.node.span(), "expected a nonnegative 64-bit integer");
                None
            }),
            _ => {
                mismatch(v, is, "an integer");
                None
            }
        }
    }
}

impl FromToml for usize {
    fn from_toml(v: Val<'_, '_>, is: &mut Issues) -> Option<Self> {
        let n = u64::from_toml(v, is)?;
        usize::try_from(n).ok()
    }
}

impl FromToml for u32 {
    fn from_toml(v: Val<'_, '_>, is: &mut Issues) -> Option<Self> {
        let n = u64::from_toml(v, is)?;
        u32::try_from(n).ok().or_else(|| {
            is.push(v.path, &v.node.span(), "integer too large");
            None
        })
    }
}

impl FromToml for bool {
    fn from_toml(v: Val<'_, '_>, is: &mut Issues) -> Option<Self> {
        v.node.get_ref().as_bool().or_else(|| {
            mismatch(v, is, "a boolean");
            None
        })
    }
}

impl FromToml for String {
    fn from_toml(v: Val<'_, '_>, is: &mut Issues) -> Option<Self> {
        v.node.get_ref().as_str().map(str::to_string).or_else(|| {
            mismatch(v, is, "a string");
            None
        })
    }
}

impl<T: FromToml> FromToml for Vec<T> {
    fn from_toml(v: Val<'_, '_>, is: &mut Issues) -> Option<Self> {
        let Some(arr) = v.node.get_ref().as_array() else {
            mismatch(v, is, "an array");
            return None;
        };
        collect(v.path, arr, is)
    }
}

fn collect<T: FromToml>(path: &str, arr: &DeArray<'_>, is: &mut Issues) -> Option<Vec<T>> {
    let mut out = Vec::with_capacity(arr.len());
    let mut ok = true;
    for (i, item) in arr.iter().enumerate() {
        let p = format!("{path}[{i}]");
        match T::from_toml(Val { path: &p, node: item }, is) {
            Some(x) => out.push(x),
            None => ok = false,
        }
    }
    ok.then_some(out)
}

/// A square matrix given as nested rows, or a scalar meaning `s·I`.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSpec {
    Scalar(f64),
    Rows(Vec<Vec<f64>>),
}

impl FromToml for MatrixSpec {
    fn from_toml(v: Val<'_, '_>, is: &mut Issues) -> Option<Self> {
        match v.node.get_ref() {
            DeValue::Float(_) | DeValue::Integer(_) => f64::from_toml(v, is).map(MatrixSpec::Scalar),
            DeValue::Array(_) => Vec::<Vec<f64>>::from_toml(v, is).map(MatrixSpec::Rows),
            _ => {
                mismatch(v, is, "a number or an array of rows");
                None
            }
        }
    }
}

/// Raw value copied out for sweep overrides and reporting.
pub fn render(v: &DeValue<'_>) -> String {
    match v {
        DeValue::String(s) => format!("{s:?}"),
        DeValue::Integer(i) => i.to_string(),
        DeValue::Float(f) => f.as_str().to_string(),
        DeValue::Boolean(b) => b.to_string(),
        DeValue::Datetime(d) => d.to_string(),
        DeValue::Array(a) => format!("[{}]", a.iter().map(|x| render(x.get_ref())).collect::<Vec<_>>().join(", ")),
        DeValue::Table(t) => format!(
            "{{{}}}",
            t.iter().map(|(k, x)| format!("{} = {}", k.get_ref(), render(x.get_ref()))).collect::<Vec<_>>().join(", ")
        ),
    }
}
