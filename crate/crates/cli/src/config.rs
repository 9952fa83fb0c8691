//! Line-oriented `key = value` files with `[section]` headers.
//!
//! `#` starts a comment anywhere on a line. Keys before the first header
//! belong to the unnamed top section. A section name may repeat, and each
//! occurrence is kept as its own block.

use std::fmt;

use crate::error::CliError;

/// A value together with where it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
    /// 1-based column of the first character of `value`.
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    /// Empty for the top section.
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub sections: Vec<Section>,
}

fn is_key_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.'
}

fn column_of(line: &str, byte: usize) -> usize {
    line[..byte].chars().count() + 1
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut sections = vec![Section {
            name: String::new(),
            line: 0,
            entries: Vec::new(),
        }];
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw.find('#') {
                Some(k) => &raw[..k],
                None => raw,
            };
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let lead = line.len() - line.trim_start().len();
            if let Some(rest) = trimmed.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return Err(CliError::parse(line_no, column_of(line, lead + trimmed.len()), "expected ']' to close the section header"));
                };
                let name = name.trim();
                if name.is_empty() || !name.chars().all(is_key_char) {
                    return Err(CliError::parse(line_no, column_of(line, lead + 1), format!("invalid section name '{name}'")));
                }
                sections.push(Section {
                    name: name.to_string(),
                    line: line_no,
                    entries: Vec::new(),
                });
                continue;
            }
            let Some(eq) = line.find('=') else {
                let end = lead + trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
                return Err(CliError::parse(line_no, column_of(line, end), "expected '=' after the key"));
            };
            let key = line[..eq].trim();
            if key.is_empty() {
                return Err(CliError::parse(line_no, column_of(line, eq), "missing key before '='"));
            }
            if let Some((k, _)) = key.char_indices().find(|&(_, c)| !is_key_char(c)) {
                return Err(CliError::parse(line_no, column_of(line, lead + k), format!("invalid character in key '{key}'")));
            }
            let after = &line[eq + 1..];
            let value = after.trim();
            if value.is_empty() {
                return Err(CliError::parse(line_no, column_of(line, eq + 1) + 1, format!("missing value for '{key}'")));
            }
            let start = eq + 1 + (after.len() - after.trim_start().len());
            let section = sections.last_mut().expect("top section");
            if let Some(prev) = section.get(key) {
                return Err(CliError::parse(
                    line_no,
                    column_of(line, lead),
                    format!("duplicate key '{key}', first set on line {}", prev.line),
                ));
            }
            section.entries.push(Entry {
                key: key.to_string(),
                value: value.to_string(),
                line: line_no,
                column: column_of(line, start),
            });
        }
        Ok(Self { sections })
    }

    pub fn top(&self) -> &Section {
        &self.sections[0]
    }

    pub fn sections_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Section> + 'a {
        self.sections.iter().filter(move |s| s.name == name)
    }

    pub fn section(&self, name: &str) -> Result<Option<&Section>, CliError> {
        let mut it = self.sections.iter().filter(|s| s.name == name);
        let first = it.next();
        if let Some(dup) = it.next() {
            return Err(CliError::parse(dup.line, 1, format!("section [{name}] may appear only once")));
        }
        Ok(first)
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for s in &self.sections {
            if s.name.is_empty() && s.entries.is_empty() {
                continue;
            }
            if !first {
                writeln!(f)?;
            }
            first = false;
            if !s.name.is_empty() {
                writeln!(f, "[{}]", s.name)?;
            }
            for e in &s.entries {
                writeln!(f, "{} = {}", e.key, e.value)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let c = Config::parse("task = eigen # trailing\n\n[eigen]\n  rho = 2\n[piece]\npsi = r\n[piece]\npsi = sinh(r)\n").unwrap();
        assert_eq!(c.top().get("task").unwrap().value, "eigen");
        assert_eq!(c.section("eigen").unwrap().unwrap().get("rho").unwrap().column, 9);
        assert_eq!(c.sections_named("piece").count(), 2);
        assert!(c.section("piece").is_err());
    }

    #[test]
    fn errors_carry_positions() {
        let e = Config::parse("task = eigen\nsigma 3\n").unwrap_err();
        assert_eq!(e.to_string(), "config:2:6: expected '=' after the key");
        let e = Config::parse("[eigen\n").unwrap_err();
        assert!(e.to_string().starts_with("config:1:"));
        let e = Config::parse("a = 1\na = 2\n").unwrap_err();
        assert!(e.to_string().contains("duplicate key 'a'"));
        let e = Config::parse("p =\n").unwrap_err();
        assert!(e.to_string().contains("missing value"));
    }

    #[test]
    fn display_round_trips() {
        let c = Config::parse("task = eigen\n[eigen]\nrho = 2\n").unwrap();
        let again = Config::parse(&c.to_string()).unwrap();
        assert_eq!(again.to_string(), c.to_string());
    }
}
