//! JSON problem files.
//!
//! ```json
//! {
//!   "alpha": 1.0,
//!   "delays": [0.0, 1.0],
//!   "A": [[[-1.0]], [[0.5]]],
//!   "A_tilde": [[[0.0]], {"times": [0, 5], "values": [[[0]], [[0.1]]], "interp": "linear"}],
//!   "B": [[1.0]],
//!   "phi": [{"times": [-1, 0], "values": [[1.0], [1.0]], "interp": "const"}],
//!   "control": {"type": "feedback", "gains": [{"matrix": [[0.1]], "bound": 0.1}, {"matrix": [[0]]}]}
//! }
//! ```
//!
//! Matrices are row-major arrays of rows; vectors may also be written as a
//! flat array. `A_tilde` and `B` default to zero and `control` to none.
//! A gain without `bound` gets the sup-norm of its samples.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::NormP;
use crate::model::{
    validate_system, ControlInput, FractionalDelaySystem, Gain, InitialConditionSet, Interp,
    MatrixFunction, TimeFunctionTable, ValidatedProblem,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixJson {
    Rows(Vec<Vec<f64>>),
    Column(Vec<f64>),
}

impl MatrixJson {
    fn to_matrix(&self, what: &str) -> Result<DMatrix<f64>> {
        match self {
            MatrixJson::Column(v) => Ok(DMatrix::from_column_slice(v.len(), 1, v)),
            MatrixJson::Rows(rows) => {
                let cols = rows.first().map_or(0, Vec::len);
                if rows.iter().any(|r| r.len() != cols) {
                    return Err(Error::ConfigParse(format!("{what}: ragged matrix rows")));
                }
                Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
            }
        }
    }

    fn from_matrix(m: &DMatrix<f64>, column: bool) -> Self {
        if column && m.ncols() == 1 {
            MatrixJson::Column(m.iter().copied().collect())
        } else {
            MatrixJson::Rows(
                (0..m.nrows())
                    .map(|i| m.row(i).iter().copied().collect())
                    .collect(),
            )
        }
    }
}

fn default_interp() -> Interp {
    Interp::Linear
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableJson {
    pub times: Vec<f64>,
    pub values: Vec<MatrixJson>,
    #[serde(default = "default_interp")]
    pub interp: Interp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionJson {
    Table(TableJson),
    Constant(MatrixJson),
}

impl FunctionJson {
    fn to_function(&self, what: &str) -> Result<MatrixFunction> {
        match self {
            FunctionJson::Constant(m) => Ok(MatrixFunction::Constant(m.to_matrix(what)?)),
            FunctionJson::Table(t) => {
                let values = t
                    .values
                    .iter()
                    .map(|v| v.to_matrix(what))
                    .collect::<Result<Vec<_>>>()?;
                let tbl = TimeFunctionTable::new(t.times.clone(), values, t.interp, t.sup_norm)?;
                Ok(MatrixFunction::Table(tbl))
            }
        }
    }

    fn from_function(f: &MatrixFunction, column: bool) -> Self {
        match f {
            MatrixFunction::Constant(m) => {
                FunctionJson::Constant(MatrixJson::from_matrix(m, column))
            }
            MatrixFunction::Table(t) => FunctionJson::Table(TableJson {
                times: t.times().to_vec(),
                values: t
                    .values()
                    .iter()
                    .map(|m| MatrixJson::from_matrix(m, column))
                    .collect(),
                interp: t.interp(),
                sup_norm: t.declared_sup_norm(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainJson {
    pub matrix: FunctionJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ControlJson {
    #[default]
    None,
    OpenLoop {
        u: FunctionJson,
    },
    Feedback {
        gains: Vec<GainJson>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub alpha: f64,
    pub delays: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<MatrixJson>,
    #[serde(rename = "A_tilde", default, skip_serializing_if = "Option::is_none")]
    pub a_tilde: Option<Vec<FunctionJson>>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<FunctionJson>,
    pub phi: Vec<FunctionJson>,
    #[serde(default)]
    pub control: ControlJson,
}

impl ProblemFile {
    /// Builds and validates the problem.
    pub fn into_problem(&self) -> Result<ValidatedProblem> {
        let a = self
            .a
            .iter()
            .enumerate()
            .map(|(i, m)| m.to_matrix(&format!("A[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let n = a.first().map_or(0, |m| m.nrows());
        let a_tilde = match &self.a_tilde {
            Some(v) => v
                .iter()
                .enumerate()
                .map(|(i, f)| f.to_function(&format!("A_tilde[{i}]")))
                .collect::<Result<Vec<_>>>()?,
            None => vec![MatrixFunction::zeros(n, n); a.len()],
        };
        let b = match &self.b {
            Some(f) => f.to_function("B")?,
            None => MatrixFunction::zeros(n, 1),
        };
        let phi = self
            .phi
            .iter()
            .enumerate()
            .map(|(j, f)| f.to_function(&format!("phi[{j}]")))
            .collect::<Result<Vec<_>>>()?;
        let ctrl = match &self.control {
            ControlJson::None => ControlInput::None,
            ControlJson::OpenLoop { u } => ControlInput::OpenLoop {
                u: u.to_function("u")?,
            },
            ControlJson::Feedback { gains } => {
                let gains = gains
                    .iter()
                    .enumerate()
                    .map(|(i, g)| {
                        let matrix = g.matrix.to_function(&format!("gains[{i}]"))?;
                        let bound = g.bound.unwrap_or_else(|| match &matrix {
                            MatrixFunction::Table(t) => t.sample_sup_norm(NormP::Two),
                            m => m.sup_norm(NormP::Two),
                        });
                        Ok(Gain { matrix, bound })
                    })
                    .collect::<Result<Vec<_>>>()?;
                ControlInput::Feedback { gains }
            }
        };
        let sys = FractionalDelaySystem {
            alpha: self.alpha,
            delays: self.delays.clone(),
            a,
            a_tilde,
            b,
        };
        validate_system(sys, InitialConditionSet::from_phi(phi), ctrl)
    }

    /// The fully explicit file for a validated problem: every default is
    /// written out and every gain carries its bound.
    pub fn from_problem(p: &ValidatedProblem) -> Self {
        let sys = &p.sys;
        let control = match &p.ctrl {
            ControlInput::None => ControlJson::None,
            ControlInput::OpenLoop { u } => ControlJson::OpenLoop {
                u: FunctionJson::from_function(u, true),
            },
            ControlInput::Feedback { gains } => ControlJson::Feedback {
                gains: gains
                    .iter()
                    .map(|g| GainJson {
                        matrix: FunctionJson::from_function(&g.matrix, false),
                        bound: Some(g.bound),
                    })
                    .collect(),
            },
        };
        Self {
            alpha: sys.alpha,
            delays: sys.delays.clone(),
            a: sys
                .a
                .iter()
                .map(|m| MatrixJson::from_matrix(m, false))
                .collect(),
            a_tilde: Some(
                sys.a_tilde
                    .iter()
                    .map(|f| FunctionJson::from_function(f, false))
                    .collect(),
            ),
            b: Some(FunctionJson::from_function(&sys.b, false)),
            phi: p
                .ics
                .phi
                .iter()
                .map(|f| FunctionJson::from_function(f, true))
                .collect(),
            control,
        }
    }
}

/// Parses and validates a problem from JSON text.
pub fn parse_problem(text: &str) -> Result<ValidatedProblem> {
    let file: ProblemFile =
        serde_json::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    file.into_problem()
}

/// Pretty-printed normalized JSON for a validated problem.
pub fn dump_normalized(p: &ValidatedProblem) -> String {
    // only finite numbers reach here, so serialisation cannot fail
    serde_json::to_string_pretty(&ProblemFile::from_problem(p)).expect("finite problem data")
}
