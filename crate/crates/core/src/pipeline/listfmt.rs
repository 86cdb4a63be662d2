//! Bracketed, single-quoted list fields: `['a', 'b']` and `[['a', 'loc b'], ['c']]`.
//! The reader also accepts double quotes and whitespace-only separators
//! (`['C0034069' 'C0742362']`).

use std::fmt::Write;

fn quote(s: &str, out: &mut String) {
    out.push('\'');
    for c in s.chars() {
        if c == '\'' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('\'');
}

pub fn format_list<S: AsRef<str>>(items: &[S]) -> String {
    let mut out = String::from("[");
    for (i, s) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        quote(s.as_ref(), &mut out);
    }
    out.push(']');
    out
}

pub fn format_nested<S: AsRef<str>>(groups: &[Vec<S>]) -> String {
    let mut out = String::from("[");
    for (i, g) in groups.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{}", format_list(g));
    }
    out.push(']');
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Item {
    Str(String),
    List(Vec<Item>),
}

struct Parser<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
}

impl Parser<'_> {
    fn skip_separators(&mut self) {
        while matches!(self.chars.peek(), Some(c) if c.is_whitespace() || *c == ',') {
            self.chars.next();
        }
    }

    fn item(&mut self) -> Result<Item, String> {
        self.skip_separators();
        match self.chars.next() {
            Some('[') => {
                let mut items = Vec::new();
                loop {
                    self.skip_separators();
                    if self.chars.peek() == Some(&']') {
                        self.chars.next();
                        return Ok(Item::List(items));
                    }
                    if self.chars.peek().is_none() {
                        return Err("unterminated list".into());
                    }
                    items.push(self.item()?);
                }
            }
            Some(q @ ('\'' | '"')) => {
                let mut s = String::new();
                loop {
                    match self.chars.next() {
                        None => return Err("unterminated string".into()),
                        Some('\\') => s.push(self.chars.next().ok_or("dangling escape")?),
                        Some(c) if c == q => return Ok(Item::Str(s)),
                        Some(c) => s.push(c),
                    }
                }
            }
            Some(c) => Err(format!("unexpected `{c}`")),
            None => Err("empty value".into()),
        }
    }

    fn finish(mut self, item: Item) -> Result<Item, String> {
        self.skip_separators();
        match self.chars.next() {
            None => Ok(item),
            Some(c) => Err(format!("trailing `{c}`")),
        }
    }
}

fn parse_item(text: &str) -> Result<Item, String> {
    let mut p = Parser { chars: text.chars().peekable() };
    let item = p.item()?;
    p.finish(item)
}

fn strings(items: Vec<Item>) -> Result<Vec<String>, String> {
    items
        .into_iter()
        .map(|i| match i {
            Item::Str(s) => Ok(s),
            Item::List(_) => Err("expected a string, found a list".to_string()),
        })
        .collect()
}

/// Parse a flat list of quoted strings.
pub fn parse_list(text: &str) -> Result<Vec<String>, String> {
    match parse_item(text)? {
        Item::List(items) => strings(items),
        Item::Str(_) => Err("expected a list".into()),
    }
}

/// Parse a list of lists of quoted strings.
pub fn parse_nested(text: &str) -> Result<Vec<Vec<String>>, String> {
    match parse_item(text)? {
        Item::List(items) => items
            .into_iter()
            .map(|i| match i {
                Item::List(inner) => strings(inner),
                Item::Str(_) => Err("expected a list of lists".to_string()),
            })
            .collect(),
        Item::Str(_) => Err("expected a list".into()),
    }
}
