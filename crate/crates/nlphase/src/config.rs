//! Plain-text configuration: `key = value` lines grouped under `[section]`
//! headers, `#` comments. Entries before the first header form the
//! unnamed top-level section.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct ConfigError {
    pub line: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Document {
    pub sections: Vec<Section>,
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

pub fn parse(text: &str) -> Result<Document, ConfigError> {
    let mut doc = Document { sections: vec![Section { name: String::new(), line: 0, entries: Vec::new() }] };
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError { line, msg: format!("unterminated section header '{content}'") })?
                .trim();
            if !valid_name(name) {
                return Err(ConfigError { line, msg: format!("invalid section name '{name}'") });
            }
            if let Some(prev) = doc.sections.iter().find(|s| s.name == name) {
                return Err(ConfigError { line, msg: format!("section [{name}] already opened on line {}", prev.line) });
            }
            doc.sections.push(Section { name: name.to_string(), line, entries: Vec::new() });
            continue;
        }
        let (k, v) = content.split_once('=').ok_or_else(|| ConfigError { line, msg: format!("expected key = value, got '{content}'") })?;
        let (k, v) = (k.trim(), v.trim());
        if !valid_name(k) {
            return Err(ConfigError { line, msg: format!("invalid key '{k}'") });
        }
        let sec = doc.sections.last_mut().expect("top-level section");
        if let Some(prev) = sec.get(k) {
            return Err(ConfigError { line, msg: format!("duplicate key '{k}' (first on line {})", prev.line) });
        }
        sec.entries.push(Entry { key: k.to_string(), value: v.to_string(), line });
    }
    Ok(doc)
}

impl Document {
    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn top(&self) -> &Section {
        &self.sections[0]
    }

    /// Canonical text form; parsing it yields the same document up to line numbers.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.sections {
            if !s.name.is_empty() {
                if !out.is_empty() {
                    out.push('\n');
                }
                out.push_str(&format!("[{}]\n", s.name));
            }
            for e in &s.entries {
                out.push_str(&format!("{} = {}\n", e.key, e.value));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let d = parse("command = energy # trailing\n\n[kernel]\nkind = fractional\ns=0.75\n[potential]\nname = quartic\n").unwrap();
        assert_eq!(d.top().get("command").unwrap().value, "energy");
        let k = d.section("kernel").unwrap();
        assert_eq!((k.entries.len(), k.get("s").unwrap().line), (2, 5));
        assert_eq!(parse(&d.to_text()).unwrap().to_text(), d.to_text());
    }

    #[test]
    fn diagnostics_carry_lines() {
        assert_eq!(parse("a = 1\na = 2").unwrap_err().line, 2);
        assert_eq!(parse("[x]\n[x]").unwrap_err().line, 2);
        assert_eq!(parse("\n\nnot a pair").unwrap_err().line, 3);
        assert!(parse("[open").is_err());
        assert!(parse("[]").is_err());
        assert!(parse("bad key = 1").is_err());
    }
}
