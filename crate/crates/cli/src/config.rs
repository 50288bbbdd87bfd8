//! INI run configuration with line-aware error messages.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;

/// Error in the configuration file; maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub type ConfigResult<T> = std::result::Result<T, ConfigError>;

/// How bare frequency keys (`lambda`, `gamma_phi`) are read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Units {
    /// rad/s
    Angular,
    /// Hz, multiplied by 2π on load
    Cyclic,
}

impl Units {
    pub fn to_angular(self, v: f64) -> f64 {
        match self {
            Self::Angular => v,
            Self::Cyclic => 2.0 * std::f64::consts::PI * v,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Angular => "angular",
            Self::Cyclic => "cyclic",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub path: PathBuf,
    ini: Ini,
    lines: HashMap<(String, String), usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> ConfigResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: cannot read config: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> ConfigResult<Self> {
        let ini = Ini::load_from_str_noescape(text).map_err(|e| {
            ConfigError(format!("{}:{}: {}", path.display(), e.line, e.msg))
        })?;
        Ok(Self {
            path: path.to_path_buf(),
            ini,
            lines: index_lines(text),
        })
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.ini.section(Some(section)).is_some()
    }

    fn location(&self, section: &str, key: &str) -> String {
        match self.lines.get(&(section.to_owned(), key.to_owned())) {
            Some(line) => format!("{}:{line}", self.path.display()),
            None => self.path.display().to_string(),
        }
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.ini
            .section(Some(section))
            .and_then(|p| p.get(key))
            .map(strip_comment)
    }

    pub fn has(&self, section: &str, key: &str) -> bool {
        self.raw(section, key).is_some()
    }

    /// Typed value; `Ok(None)` when absent, a line-tagged error when unparsable.
    pub fn get<T: FromStr>(&self, section: &str, key: &str) -> ConfigResult<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.raw(section, key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| {
                ConfigError(format!(
                    "{}: [{section}] {key} = {v}: {e}",
                    self.location(section, key)
                ))
            }),
        }
    }

    /// Comma-separated list of floats.
    pub fn get_list(&self, section: &str, key: &str) -> ConfigResult<Option<Vec<f64>>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some(v) => parse_list(v).map(Some).map_err(|e| {
                ConfigError(format!("{}: [{section}] {key} = {v}: {e}", self.location(section, key)))
            }),
        }
    }

    pub fn invalid(&self, section: &str, key: &str, msg: &str) -> ConfigError {
        ConfigError(format!("{}: [{section}] {key}: {msg}", self.location(section, key)))
    }

    pub fn units(&self) -> ConfigResult<Option<Units>> {
        match self.raw("sim", "units") {
            None => Ok(None),
            Some("angular") => Ok(Some(Units::Angular)),
            Some("cyclic") => Ok(Some(Units::Cyclic)),
            Some(other) => Err(self.invalid(
                "sim",
                "units",
                &format!("expected `angular` or `cyclic`, got `{other}`"),
            )),
        }
    }

    /// Every `section.key = value` pair in file order.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (section, props) in self.ini.iter() {
            for (k, v) in props.iter() {
                let name = match section {
                    Some(s) => format!("{s}.{k}"),
                    None => k.to_owned(),
                };
                out.push((name, strip_comment(v).to_owned()));
            }
        }
        out
    }
}

fn strip_comment(v: &str) -> &str {
    v.split('#').next().unwrap_or("").trim()
}

pub fn parse_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| format!("`{s}`: {e}")))
        .collect()
}

fn index_lines(text: &str) -> HashMap<(String, String), usize> {
    let mut out = HashMap::new();
    let mut section = String::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.starts_with('#') || t.starts_with(';') || t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('[') {
            section = rest.trim_end_matches(']').trim().to_owned();
            continue;
        }
        if let Some((k, _)) = t.split_once('=') {
            out.entry((section.clone(), k.trim().to_owned())).or_insert(i + 1);
        }
    }
    out
}
