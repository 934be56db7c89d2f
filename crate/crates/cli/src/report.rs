//! Report files: one TOML document per command run.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! written number carries full precision.

use crate::error::CliError;
use crate::problem::Source;
use asymlyap::matops::{Matrix, Spectrum, Vector};
use asymlyap::sdpsolve::ConstraintMargin;
use std::fs;
use std::path::Path;
use toml::{Table, Value};

/// `-0.0` prints as `-0.0`; structural zeros should read as zeros.
fn clean(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

pub fn float(x: f64) -> Value {
    Value::Float(clean(x))
}

pub fn matrix(m: &Matrix) -> Value {
    Value::Array(
        m.row_iter()
            .map(|r| Value::Array(r.iter().map(|&x| float(x)).collect()))
            .collect(),
    )
}

pub fn vector(v: &Vector) -> Value {
    Value::Array(v.iter().map(|&x| float(x)).collect())
}

pub fn spectrum(s: &Spectrum) -> Table {
    let mut t = Table::new();
    t.insert("re".into(), Value::Array(s.eigenvalues.iter().map(|z| float(z.re)).collect()));
    t.insert("im".into(), Value::Array(s.eigenvalues.iter().map(|z| float(z.im)).collect()));
    t
}

pub fn margins(ms: &[ConstraintMargin], feas_tol: f64) -> Value {
    Value::Array(
        ms.iter()
            .map(|m| {
                let mut t = Table::new();
                t.insert("name".into(), Value::String(m.name.clone()));
                t.insert("sense".into(), Value::String(format!("{:?}", m.sense)));
                t.insert("required".into(), float(m.required));
                t.insert("achieved".into(), float(m.achieved));
                t.insert("satisfied".into(), Value::Boolean(m.satisfied(feas_tol)));
                Value::Table(t)
            })
            .collect(),
    )
}

#[derive(Debug, Clone)]
pub struct Report {
    root: Table,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut meta = Table::new();
        meta.insert("command".into(), Value::String(command.into()));
        meta.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
        let mut root = Table::new();
        root.insert("meta".into(), Value::Table(meta));
        Self { root }
    }

    /// Verbatim copy of an input file.
    pub fn echo(&mut self, key: &str, source: &Source) {
        let mut t = Table::new();
        t.insert("source".into(), Value::String(source.name.clone()));
        t.insert("text".into(), Value::String(source.text.clone()));
        self.section("input").insert(key.into(), Value::Table(t));
    }

    pub fn section(&mut self, name: &str) -> &mut Table {
        let entry = self
            .root
            .entry(name.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        match entry {
            Value::Table(t) => t,
            _ => unreachable!("report sections are tables"),
        }
    }

    pub fn set(&mut self, section: &str, key: &str, value: Value) {
        self.section(section).insert(key.into(), value);
    }

    pub fn finish(&mut self, exit_code: i32, status: &str, seconds: f64) {
        let meta = self.section("meta");
        meta.insert("exit_code".into(), Value::Integer(exit_code.into()));
        meta.insert("status".into(), Value::String(status.into()));
        meta.insert("wall_clock_seconds".into(), Value::Float(seconds));
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.root).expect("report tables always serialize")
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.to_toml()).map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        })
    }
}
