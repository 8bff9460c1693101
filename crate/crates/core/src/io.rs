//! File helpers for the on-disk formats: plain CSV (no quoting; field
//! values never contain commas) and pretty-printed JSON manifests.
//!
//! Floats are written through `Display`, i.e. the shortest decimal that
//! round-trips, which keeps serialized artifacts byte-stable.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

pub(crate) fn write_text(path: &Path, content: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut file = fs::File::create(path)?;
    file.write_all(content.as_bytes())
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable manifest");
    text.push('\n');
    write_text(path, &text)
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

pub(crate) fn csv_line(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

/// Split a CSV file into non-empty rows of fields.
pub(crate) fn read_csv(path: &Path) -> std::io::Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path)?;
    Ok(parse_csv(&text))
}

pub(crate) fn parse_csv(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|line| !line.trim().is_empty())
        .map(|line| line.split(',').map(|f| f.trim().to_string()).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let line = csv_line(&["a".into(), "0.5".into(), "1".into()]);
        assert_eq!(line, "a,0.5,1\n");
        let rows = parse_csv(&line);
        assert_eq!(rows, vec![vec!["a".to_string(), "0.5".into(), "1".into()]]);
    }

    #[test]
    fn float_display_round_trips() {
        for v in [0.1f64, 1.0 / 3.0, -2.5e-7, 123456.789] {
            let s = format!("{v}");
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }
}
