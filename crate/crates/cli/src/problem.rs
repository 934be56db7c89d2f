//! Problem files: TOML with matrices as nested row arrays.
//!
//! ```toml
//! x0 = [0.1, -0.2]
//!
//! [system]
//! A = [[1, 2], [0, 2]]
//! B = [[4, 2], [0, 2]]
//!
//! [cost]
//! Q = [[10, 0], [0, 10]]
//! R = [[0.05, 0], [0, 0.05]]
//! ```
//!
//! Optional tables: `[structure]` (`y_mask`, `x_scalar`, `y_ties` with
//! 1-based indices) and `[solver]` (`epsilon`, `feas_tol`, `w_cap`,
//! `horizon`, `step`, `simulate`).

use crate::error::CliError;
use asymlyap::consensus::ConsensusProblem;
use asymlyap::lmi::StructureSpec;
use asymlyap::matops::{Matrix, Vector};
use asymlyap::{DesignProblem, LtiSystem, QuadraticCost};
use nalgebra::DMatrix;
use serde::Deserialize;
use std::fs;
use std::path::Path;

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub system: SystemSection,
    pub cost: CostSection,
    pub x0: Vec<f64>,
    pub structure: Option<StructureSection>,
    #[serde(default)]
    pub solver: SolverSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(rename = "A")]
    pub a: Rows,
    #[serde(rename = "B")]
    pub b: Rows,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    #[serde(rename = "Q")]
    pub q: Rows,
    #[serde(rename = "R")]
    pub r: Rows,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSection {
    pub y_mask: Vec<Vec<bool>>,
    #[serde(default = "default_true")]
    pub x_scalar: bool,
    #[serde(default)]
    pub y_ties: Vec<[[usize; 2]; 2]>,
}

/// A standalone `--structure` file holds the same keys at top level, or
/// under a `[structure]` table.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum StructureFile {
    Wrapped { structure: StructureSection },
    Bare(StructureSection),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub epsilon: Option<f64>,
    pub feas_tol: Option<f64>,
    pub w_cap: Option<f64>,
    pub horizon: Option<f64>,
    pub step: Option<f64>,
    pub simulate: Option<bool>,
}

/// The file for `verify`: a design matrix `P` or a gain `K`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainFile {
    #[serde(rename = "P")]
    pub p: Option<Rows>,
    #[serde(rename = "K")]
    pub k: Option<Rows>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsensusFile {
    pub consensus: ConsensusSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsensusSection {
    pub agents: usize,
    pub pole: f64,
    pub q: f64,
    pub r: f64,
    pub states: Vec<f64>,
}

fn default_true() -> bool {
    true
}

/// Raw bytes of an input file, kept for the verbatim echo.
#[derive(Debug, Clone)]
pub struct Source {
    pub name: String,
    pub text: String,
}

impl Source {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self {
            name: path.display().to_string(),
            text,
        })
    }

    pub fn parse<T: for<'de> Deserialize<'de>>(&self) -> Result<T, CliError> {
        toml::from_str(&self.text).map_err(|e| CliError::parse(&self.name, e.message().to_string()))
    }
}

pub fn matrix(name: &str, rows: &Rows) -> Result<Matrix, CliError> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(CliError::parse(name, "matrix is empty"));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(CliError::parse(
            name,
            format!("ragged rows: row 1 has {ncols} entries, row {} has {}", i + 1, rows[i].len()),
        ));
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn structure(section: &StructureSection) -> Result<StructureSpec, CliError> {
    let n = section.y_mask.len();
    if n == 0 || section.y_mask.iter().any(|r| r.len() != n) {
        return Err(CliError::parse("structure", "y_mask must be a square array of booleans"));
    }
    let mask = DMatrix::from_fn(n, n, |i, j| section.y_mask[i][j]);
    let mut ties = Vec::with_capacity(section.y_ties.len());
    for [[a, b], [c, d]] in &section.y_ties {
        if [a, b, c, d].iter().any(|&&k| k == 0) {
            return Err(CliError::parse("structure", "y_ties indices are 1-based"));
        }
        ties.push(((a - 1, b - 1), (c - 1, d - 1)));
    }
    Ok(StructureSpec::with_ties(mask, section.x_scalar, ties)?)
}

pub fn read_structure(path: &Path) -> Result<StructureSpec, CliError> {
    let section = match Source::read(path)?.parse::<StructureFile>()? {
        StructureFile::Wrapped { structure } => structure,
        StructureFile::Bare(s) => s,
    };
    structure(&section)
}

impl ProblemFile {
    pub fn system(&self) -> Result<LtiSystem, CliError> {
        Ok(LtiSystem::new(matrix("system.A", &self.system.a)?, matrix("system.B", &self.system.b)?)?)
    }

    pub fn cost(&self) -> Result<QuadraticCost, CliError> {
        Ok(QuadraticCost::new(matrix("cost.Q", &self.cost.q)?, matrix("cost.R", &self.cost.r)?)?)
    }

    /// The design problem, with `override_structure` replacing the inline table.
    pub fn design_problem(&self, override_structure: Option<StructureSpec>) -> Result<DesignProblem, CliError> {
        let x0 = Vector::from_column_slice(&self.x0);
        let mut prob = DesignProblem::new(self.system()?, self.cost()?, x0)?;
        let spec = match override_structure {
            Some(s) => Some(s),
            None => self.structure.as_ref().map(structure).transpose()?,
        };
        if let Some(spec) = spec {
            prob = prob.with_structure(spec)?;
        }
        Ok(prob)
    }
}

impl ConsensusSection {
    pub fn problem(&self) -> ConsensusProblem {
        ConsensusProblem {
            n_agents: self.agents,
            agent_pole: self.pole,
            q_weight: self.q,
            r_weight: self.r,
            initial_states: self.states.clone(),
        }
    }

    /// TOML text equivalent to the command-line arguments, used as the echo
    /// when no file was given.
    pub fn to_toml(&self) -> String {
        let mut table = toml::Table::new();
        let mut inner = toml::Table::new();
        inner.insert("agents".into(), toml::Value::Integer(self.agents as i64));
        inner.insert("pole".into(), toml::Value::Float(self.pole));
        inner.insert("q".into(), toml::Value::Float(self.q));
        inner.insert("r".into(), toml::Value::Float(self.r));
        inner.insert(
            "states".into(),
            toml::Value::Array(self.states.iter().map(|&x| toml::Value::Float(x)).collect()),
        );
        table.insert("consensus".into(), toml::Value::Table(inner));
        toml::to_string(&table).expect("plain table serializes")
    }
}
