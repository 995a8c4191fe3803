use clap::ValueEnum;
use serde_json::Value;

#[derive(Clone, Copy, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

/// A finished command: a JSON report, its human-readable lines and the
/// exit status.
pub struct Output {
    pub json: Value,
    pub lines: Vec<String>,
    pub exit: u8,
}

impl Output {
    pub fn new(json: Value) -> Self {
        Output { json, lines: Vec::new(), exit: 0 }
    }

    pub fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    /// `label  value` rows with aligned values.
    pub fn rows(&mut self, rows: &[(String, String)]) {
        let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
        for (l, v) in rows {
            self.lines.push(format!("  {l:<width$}  {v}"));
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            // Object keys are sorted, so equal reports print equal bytes.
            Format::Json => serde_json::to_string_pretty(&self.json).expect("serializable") + "\n",
            Format::Table => self.lines.iter().map(|l| format!("{l}\n")).collect(),
        }
    }
}

/// `(a, b, c)`.
pub fn tuple(values: &[(String, String)]) -> String {
    let inner: Vec<&str> = values.iter().map(|(_, v)| v.as_str()).collect();
    format!("({})", inner.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn tuples_and_rows() {
        let rows = vec![("A".to_string(), "5/2".to_string()), ("B".to_string(), "0".to_string())];
        assert_eq!(tuple(&rows), "(5/2, 0)");
        let mut out = Output::new(json!({}));
        out.rows(&[("root".to_string(), "1".to_string()), ("A".to_string(), "2".to_string())]);
        assert_eq!(out.render(Format::Table), "  root  1\n  A     2\n");
    }

    #[test]
    fn json_keys_are_sorted() {
        let out = Output::new(json!({ "b": 1, "a": "3/4" }));
        assert_eq!(out.render(Format::Json), "{\n  \"a\": \"3/4\",\n  \"b\": 1\n}\n");
    }
}
