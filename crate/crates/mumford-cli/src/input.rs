//! Config ingestion: JSON or TOML from a file, an inline string or stdin.

use std::io::Read;
use std::path::Path;

use serde_json::Value;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Syntax {
    Json,
    Toml,
}

fn sniff(text: &str) -> Syntax {
    match text.trim_start().chars().next() {
        Some('{') | Some('[') | None => Syntax::Json,
        _ => Syntax::Toml,
    }
}

pub fn parse_text(text: &str, origin: &str, hint: Option<Syntax>) -> Result<Value, CliError> {
    match hint.unwrap_or_else(|| sniff(text)) {
        Syntax::Json => serde_json::from_str(text).map_err(|e| {
            CliError::Validation(format!("{origin}: invalid JSON: {e}"))
        }),
        Syntax::Toml => {
            let t: toml::Value =
                toml::from_str(text).map_err(|e| CliError::Validation(format!("{origin}: invalid TOML: {e}")))?;
            serde_json::to_value(t).map_err(|e| CliError::Validation(format!("{origin}: {e}")))
        }
    }
}

/// Inline text wins over a path; `-` or no path reads stdin.
pub fn load(inline: Option<&str>, path: Option<&Path>, stdin: &mut dyn Read) -> Result<Value, CliError> {
    if let Some(s) = inline {
        return parse_text(s, "--data", None);
    }
    match path {
        Some(p) if p.as_os_str() != "-" => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", p.display())))?;
            let hint = match p.extension().and_then(|e| e.to_str()) {
                Some("toml") => Some(Syntax::Toml),
                Some("json") => Some(Syntax::Json),
                _ => None,
            };
            parse_text(&text, &p.display().to_string(), hint)
        }
        _ => {
            let mut text = String::new();
            stdin
                .read_to_string(&mut text)
                .map_err(|e| CliError::Validation(format!("cannot read stdin: {e}")))?;
            if text.trim().is_empty() {
                return Err(CliError::Validation("no input: pass --input, --data or pipe a config on stdin".into()));
            }
            parse_text(&text, "stdin", None)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_error_has_location() {
        let e = parse_text("{\n  \"g\": 1,\n  oops\n}", "x", None).unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
    }

    #[test]
    fn toml_becomes_json() {
        let v = parse_text("g = 1\nname = \"t\"\n[[sections]]\nnormal = [1]\noffsets = [\"0\"]\n", "x", None).unwrap();
        assert_eq!(v["g"], 1);
        assert_eq!(v["sections"][0]["offsets"][0], "0");
    }
}
