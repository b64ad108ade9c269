//! Flat plain-text configuration: one `key = value` per line, `#` starts a
//! comment (whole-line or trailing), blank lines ignored. No sections, no
//! nesting. Parse errors and typed-value errors carry the line number;
//! missing required keys are reported by name.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::{Error, Result};

/// Parsed key/value file with line numbers kept for diagnostics.
#[derive(Debug, Clone, Default)]
pub struct FlatConfig {
    entries: HashMap<String, (String, usize)>,
}

impl FlatConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: HashMap<String, (String, usize)> = HashMap::new();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::ConfigSyntax {
                line,
                message: format!("expected 'key = value', found '{content}'"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(Error::ConfigSyntax {
                    line,
                    message: "empty key".into(),
                });
            }
            if value.is_empty() {
                return Err(Error::ConfigSyntax {
                    line,
                    message: format!("key '{key}' has an empty value"),
                });
            }
            if let Some((_, first_line)) = entries.get(key) {
                return Err(Error::ConfigSyntax {
                    line,
                    message: format!("key '{key}' already set at line {first_line}"),
                });
            }
            entries.insert(key.to_string(), (value.to_string(), line));
        }
        Ok(FlatConfig { entries })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config '{}': {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(value, _)| value.as_str())
    }

    /// The raw value of a required key; a missing key is a configuration
    /// error naming it.
    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
    }

    /// Typed value of a required key.
    pub fn require_parsed<T>(&self, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        let (value, line) = self
            .entries
            .get(key)
            .ok_or_else(|| Error::Config(format!("missing required key '{key}'")))?;
        value.parse().map_err(|e| Error::ConfigSyntax {
            line: *line,
            message: format!("invalid value '{value}' for key '{key}': {e}"),
        })
    }

    /// Typed value of an optional key, or the default when absent.
    pub fn parsed_or<T>(&self, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.entries.get(key) {
            None => Ok(default),
            Some(_) => self.require_parsed(key),
        }
    }

    /// Comma-separated list of floats (required key).
    pub fn require_float_list(&self, key: &str) -> Result<Vec<f64>> {
        let (value, line) = self
            .entries
            .get(key)
            .ok_or_else(|| Error::Config(format!("missing required key '{key}'")))?;
        value
            .split(',')
            .map(|item| {
                let item = item.trim();
                item.parse::<f64>().map_err(|_| Error::ConfigSyntax {
                    line: *line,
                    message: format!("invalid number '{item}' in list key '{key}'"),
                })
            })
            .collect()
    }

    /// Errors on any key outside the supported set, naming key and line.
    pub fn check_known(&self, known: &[&str]) -> Result<()> {
        let mut offenders: Vec<(usize, &str)> = self
            .entries
            .iter()
            .filter(|(key, _)| !known.contains(&key.as_str()))
            .map(|(key, (_, line))| (*line, key.as_str()))
            .collect();
        offenders.sort_unstable();
        if let Some(&(line, key)) = offenders.first() {
            return Err(Error::ConfigSyntax {
                line,
                message: format!("unknown key '{key}' (supported: {})", known.join(", ")),
            });
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_comments_and_blank_lines() {
        let config = FlatConfig::parse(
            "# run setup\nL = 33\n\ntau=0.1   # transient length\n  sigma =  0.5\n",
        )
        .unwrap();
        assert_eq!(config.get("L"), Some("33"));
        assert_eq!(config.require_parsed::<f64>("tau").unwrap(), 0.1);
        assert_eq!(config.require_parsed::<f64>("sigma").unwrap(), 0.5);
        assert_eq!(config.get("missing"), None);
    }

    #[test]
    fn missing_required_key_is_named() {
        let config = FlatConfig::parse("tau = 0.1\n").unwrap();
        let err = config.require("L").unwrap_err();
        assert!(err.to_string().contains("'L'"), "{err}");
        let err = config.require_parsed::<usize>("L").unwrap_err();
        assert!(err.to_string().contains("'L'"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = FlatConfig::parse("L = 33\nnot a pair\n").unwrap_err();
        assert!(matches!(err, Error::ConfigSyntax { line: 2, .. }), "{err}");

        let err = FlatConfig::parse("= 5\n").unwrap_err();
        assert!(matches!(err, Error::ConfigSyntax { line: 1, .. }), "{err}");

        let err = FlatConfig::parse("L =   # nothing\n").unwrap_err();
        assert!(matches!(err, Error::ConfigSyntax { line: 1, .. }), "{err}");
    }

    #[test]
    fn duplicate_keys_report_both_lines() {
        let err = FlatConfig::parse("L = 33\ntau = 0\nL = 5\n").unwrap_err();
        match err {
            Error::ConfigSyntax { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("line 1"), "{message}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn typed_errors_name_key_and_line() {
        let config = FlatConfig::parse("L = 33\ntau = fast\n").unwrap();
        let err = config.require_parsed::<f64>("tau").unwrap_err();
        match err {
            Error::ConfigSyntax { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("'tau'"), "{message}");
                assert!(message.contains("'fast'"), "{message}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn defaults_apply_only_when_absent() {
        let config = FlatConfig::parse("generations = 128\n").unwrap();
        assert_eq!(config.parsed_or("generations", 4096usize).unwrap(), 128);
        assert_eq!(config.parsed_or("seed", 7u64).unwrap(), 7);
        assert!(config.parsed_or::<u64>("generations", 0).is_ok());
    }

    #[test]
    fn float_lists_split_on_commas() {
        let config = FlatConfig::parse("tau_grid = 0, 0.01,0.25 , 1\n").unwrap();
        assert_eq!(
            config.require_float_list("tau_grid").unwrap(),
            vec![0.0, 0.01, 0.25, 1.0]
        );
        let bad = FlatConfig::parse("tau_grid = 0, x\n").unwrap();
        assert!(matches!(
            bad.require_float_list("tau_grid"),
            Err(Error::ConfigSyntax { line: 1, .. })
        ));
    }

    #[test]
    fn unknown_keys_are_rejected_with_the_supported_list() {
        let config = FlatConfig::parse("L = 33\ntyop = 1\n").unwrap();
        let err = config.check_known(&["L", "tau", "sigma"]).unwrap_err();
        match err {
            Error::ConfigSyntax { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("'tyop'"), "{message}");
                assert!(message.contains("tau"), "{message}");
            }
            other => panic!("unexpected error {other}"),
        }
        config.check_known(&["L", "tyop"]).unwrap();
    }

    #[test]
    fn file_loading_reports_path_on_failure() {
        let err = FlatConfig::from_file(Path::new("/nonexistent/run.conf")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/run.conf"), "{err}");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "L = 5\n").unwrap();
        let config = FlatConfig::from_file(&path).unwrap();
        assert_eq!(config.require_parsed::<usize>("L").unwrap(), 5);
    }
}
