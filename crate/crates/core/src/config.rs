//! Typed flat run configuration.
//!
//! One entry per line, `key: type = value`, with `#` starting a comment line.
//! Types are `bool`, `int`, `float`, `str`, `path`, `float[]`, `int[]` and
//! `str[]`; list items are comma separated. Every command declares a schema,
//! unknown keys are rejected, and the resolved configuration renders to a
//! canonical text whose SHA-256 identifies the run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueType {
    Bool,
    Int,
    Float,
    Str,
    Path,
    FloatList,
    IntList,
    StrList,
}

impl ValueType {
    fn name(self) -> &'static str {
        match self {
            ValueType::Bool => "bool",
            ValueType::Int => "int",
            ValueType::Float => "float",
            ValueType::Str => "str",
            ValueType::Path => "path",
            ValueType::FloatList => "float[]",
            ValueType::IntList => "int[]",
            ValueType::StrList => "str[]",
        }
    }
}

impl FromStr for ValueType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "bool" => ValueType::Bool,
            "int" => ValueType::Int,
            "float" => ValueType::Float,
            "str" => ValueType::Str,
            "path" => ValueType::Path,
            "float[]" => ValueType::FloatList,
            "int[]" => ValueType::IntList,
            "str[]" => ValueType::StrList,
            other => return Err(Error::Config(format!("unknown type `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Path(String),
    FloatList(Vec<f64>),
    IntList(Vec<i64>),
    StrList(Vec<String>),
}

fn items(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl Value {
    pub fn parse(ty: ValueType, text: &str) -> Result<Value> {
        let text = text.trim();
        let bad = |what: &str| Error::Config(format!("`{text}` is not a valid {what}"));
        Ok(match ty {
            ValueType::Bool => Value::Bool(text.parse().map_err(|_| bad("bool"))?),
            ValueType::Int => Value::Int(text.parse().map_err(|_| bad("int"))?),
            ValueType::Float => Value::Float(parse_float(text).ok_or_else(|| bad("float"))?),
            ValueType::Str => Value::Str(text.to_string()),
            ValueType::Path => Value::Path(text.to_string()),
            ValueType::FloatList => Value::FloatList(
                items(text)
                    .map(|s| parse_float(s).ok_or_else(|| bad("float[]")))
                    .collect::<Result<_>>()?,
            ),
            ValueType::IntList => Value::IntList(
                items(text)
                    .map(|s| s.parse().map_err(|_| bad("int[]")))
                    .collect::<Result<_>>()?,
            ),
            ValueType::StrList => Value::StrList(items(text).map(String::from).collect()),
        })
    }

    pub fn value_type(&self) -> ValueType {
        match self {
            Value::Bool(_) => ValueType::Bool,
            Value::Int(_) => ValueType::Int,
            Value::Float(_) => ValueType::Float,
            Value::Str(_) => ValueType::Str,
            Value::Path(_) => ValueType::Path,
            Value::FloatList(_) => ValueType::FloatList,
            Value::IntList(_) => ValueType::IntList,
            Value::StrList(_) => ValueType::StrList,
        }
    }
}

fn parse_float(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x}"),
            Value::Str(s) | Value::Path(s) => f.write_str(s),
            Value::FloatList(xs) => f.write_str(&join(xs)),
            Value::IntList(xs) => f.write_str(&join(xs)),
            Value::StrList(xs) => f.write_str(&join(xs)),
        }
    }
}

/// One schema entry: key, type, default (in file syntax) and a help line.
#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub key: &'static str,
    pub ty: ValueType,
    pub default: &'static str,
    pub help: &'static str,
}

pub const fn key(key: &'static str, ty: ValueType, default: &'static str, help: &'static str) -> KeySpec {
    KeySpec { key, ty, default, help }
}

/// A fully resolved configuration for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    command: String,
    values: BTreeMap<String, Value>,
}

impl RunConfig {
    /// Defaults, then the file (if any), then `overrides` in order.
    pub fn resolve(
        command: &str,
        schema: &[KeySpec],
        file: Option<&Path>,
        overrides: &[(String, String)],
    ) -> Result<RunConfig> {
        let lookup = |k: &str| {
            schema.iter().find(|s| s.key == k).ok_or_else(|| {
                Error::Config(format!(
                    "unknown key `{k}` for `{command}` (known: {})",
                    schema.iter().map(|s| s.key).collect::<Vec<_>>().join(", ")
                ))
            })
        };
        let mut values = BTreeMap::new();
        for s in schema {
            values.insert(s.key.to_string(), Value::parse(s.ty, s.default)?);
        }
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let mut seen = BTreeMap::new();
            for (no, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let at = |msg: String| Error::parse(path, format!("line {}: {msg}", no + 1));
                let (k, rest) = line
                    .split_once(':')
                    .ok_or_else(|| at("expected `key: type = value`".into()))?;
                let (ty, value) = rest
                    .split_once('=')
                    .ok_or_else(|| at("expected `key: type = value`".into()))?;
                let k = k.trim();
                let spec = lookup(k).map_err(|e| at(e.to_string()))?;
                let ty: ValueType = ty.trim().parse().map_err(|e: Error| at(e.to_string()))?;
                if ty != spec.ty {
                    return Err(at(format!("`{k}` has type {}, not {}", spec.ty.name(), ty.name())));
                }
                if seen.insert(k.to_string(), ()).is_some() {
                    return Err(at(format!("duplicate key `{k}`")));
                }
                values.insert(k.to_string(), Value::parse(ty, value).map_err(|e| at(e.to_string()))?);
            }
        }
        for (k, v) in overrides {
            let spec = lookup(k)?;
            values.insert(k.clone(), Value::parse(spec.ty, v)?);
        }
        Ok(RunConfig {
            command: command.to_string(),
            values,
        })
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    /// Sorted `key: type = value` lines, loadable as a config file.
    pub fn canonical(&self) -> String {
        let mut out = format!("# mmicp {}\n", self.command);
        for (k, v) in &self.values {
            out.push_str(&format!("{k}: {} = {v}\n", v.value_type().name()));
        }
        out
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    /// Comment line placed at the top of every CSV output.
    pub fn header_line(&self) -> String {
        format!("# config-sha256: {}", self.sha256())
    }

    fn get(&self, k: &str) -> &Value {
        self.values
            .get(k)
            .unwrap_or_else(|| panic!("key `{k}` missing from the `{}` schema", self.command))
    }

    fn wrong(&self, k: &str, want: &str) -> Error {
        Error::Config(format!("`{k}` must be {want}, got `{}`", self.get(k)))
    }

    pub fn bool(&self, k: &str) -> bool {
        match self.get(k) {
            Value::Bool(b) => *b,
            other => panic!("`{k}` is {other:?}, not a bool"),
        }
    }

    pub fn int(&self, k: &str) -> i64 {
        match self.get(k) {
            Value::Int(i) => *i,
            other => panic!("`{k}` is {other:?}, not an int"),
        }
    }

    pub fn usize(&self, k: &str) -> Result<usize> {
        usize::try_from(self.int(k)).map_err(|_| self.wrong(k, "nonnegative"))
    }

    pub fn u64(&self, k: &str) -> Result<u64> {
        u64::try_from(self.int(k)).map_err(|_| self.wrong(k, "nonnegative"))
    }

    pub fn float(&self, k: &str) -> f64 {
        match self.get(k) {
            Value::Float(x) => *x,
            other => panic!("`{k}` is {other:?}, not a float"),
        }
    }

    pub fn str(&self, k: &str) -> &str {
        match self.get(k) {
            Value::Str(s) => s,
            other => panic!("`{k}` is {other:?}, not a str"),
        }
    }

    /// `None` for an empty path.
    pub fn path(&self, k: &str) -> Option<PathBuf> {
        match self.get(k) {
            Value::Path(s) if s.is_empty() => None,
            Value::Path(s) => Some(PathBuf::from(s)),
            other => panic!("`{k}` is {other:?}, not a path"),
        }
    }

    pub fn required_path(&self, k: &str) -> Result<PathBuf> {
        self.path(k)
            .ok_or_else(|| Error::Config(format!("`{k}` is required for `{}`", self.command)))
    }

    pub fn floats(&self, k: &str) -> &[f64] {
        match self.get(k) {
            Value::FloatList(xs) => xs,
            other => panic!("`{k}` is {other:?}, not a float[]"),
        }
    }

    pub fn usizes(&self, k: &str) -> Result<Vec<usize>> {
        match self.get(k) {
            Value::IntList(xs) => xs
                .iter()
                .map(|&x| usize::try_from(x).map_err(|_| self.wrong(k, "a list of nonnegative ints")))
                .collect(),
            other => panic!("`{k}` is {other:?}, not an int[]"),
        }
    }

    pub fn strs(&self, k: &str) -> &[String] {
        match self.get(k) {
            Value::StrList(xs) => xs,
            other => panic!("`{k}` is {other:?}, not a str[]"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const SCHEMA: &[KeySpec] = &[
        key("seed", ValueType::Int, "0", ""),
        key("alphas", ValueType::FloatList, "0.1,0.2", ""),
        key("name", ValueType::Str, "x", ""),
        key("input", ValueType::Path, "", ""),
        key("fast", ValueType::Bool, "false", ""),
    ];

    fn file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn layering_and_canonical_form() {
        let f = file("# comment\nseed: int = 7\nalphas: float[] = 0.01, 0.05\n");
        let c = RunConfig::resolve("demo", SCHEMA, Some(f.path()), &[("name".into(), "y".into())]).unwrap();
        assert_eq!(c.int("seed"), 7);
        assert_eq!(c.floats("alphas"), &[0.01, 0.05]);
        assert_eq!(c.str("name"), "y");
        assert_eq!(c.path("input"), None);
        let text = c.canonical();
        assert_eq!(
            text,
            "# mmicp demo\nalphas: float[] = 0.01,0.05\nfast: bool = false\ninput: path = \nname: str = y\nseed: int = 7\n"
        );
        // the canonical text is itself a valid config with the same hash
        let again = RunConfig::resolve("demo", SCHEMA, Some(file(&text).path()), &[]).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.sha256(), c.sha256());
        assert_eq!(c.sha256().len(), 64);
    }

    #[test]
    fn rejections() {
        for body in [
            "unknown: int = 1\n",
            "seed: float = 1\n",
            "seed: int = x\n",
            "seed = 1\n",
            "seed: int = 1\nseed: int = 2\n",
            "alphas: float[] = 0.1,nan\n",
        ] {
            assert!(RunConfig::resolve("demo", SCHEMA, Some(file(body).path()), &[]).is_err(), "{body}");
        }
        assert!(RunConfig::resolve("demo", SCHEMA, None, &[("bogus".into(), "1".into())]).is_err());
        let missing = RunConfig::resolve("demo", SCHEMA, Some(Path::new("/nonexistent/cfg")), &[]);
        assert!(matches!(missing, Err(Error::Io { .. })));
    }

    #[test]
    fn hash_changes_with_values() {
        let a = RunConfig::resolve("demo", SCHEMA, None, &[]).unwrap();
        let b = RunConfig::resolve("demo", SCHEMA, None, &[("seed".into(), "1".into())]).unwrap();
        assert_ne!(a.sha256(), b.sha256());
        assert!(a.header_line().starts_with("# config-sha256: "));
    }
}
