use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{total_dim, CMatrix, SystemLabel, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockSpec {
    pub name: String,
    pub labels: Vec<SystemLabel>,
}

impl BlockSpec {
    pub fn side(&self) -> usize {
        total_dim(&self.labels)
    }
}

/// Hermitian matrix stored as a list of entries. Both triangles are stored
/// explicitly; repeated coordinates add up.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseHermitian {
    pub entries: Vec<(usize, usize, C64)>,
}

impl SparseHermitian {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: (0..n).map(|i| (i, i, C64::new(1.0, 0.0))).collect(),
        }
    }

    pub fn from_dense(m: &CMatrix) -> Self {
        let mut entries = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let v = m[(r, c)];
                if v.re != 0.0 || v.im != 0.0 {
                    entries.push((r, c, v));
                }
            }
        }
        Self { entries }
    }

    pub fn to_dense(&self, n: usize) -> CMatrix {
        let mut m = CMatrix::zeros(n, n);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|&(r, c, v)| (r, c, v * s))
                .collect(),
        }
    }

    /// Merges duplicate coordinates and drops exact zeros.
    pub fn compress(&mut self) {
        self.entries.sort_by_key(|&(r, c, _)| (c, r));
        let mut out: Vec<(usize, usize, C64)> = Vec::with_capacity(self.entries.len());
        for &(r, c, v) in &self.entries {
            match out.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => out.push((r, c, v)),
            }
        }
        out.retain(|e| e.2.re != 0.0 || e.2.im != 0.0);
        self.entries = out;
    }

    /// Real tr(self · x) for Hermitian `x`.
    pub fn dot_dense(&self, x: &CMatrix) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| (v.conj() * x[(r, c)]).re)
            .sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm_sqr()).sum()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.iter().map(|&(r, c, _)| r.max(c)).max()
    }

    pub fn hermitian_deviation(&self, n: usize) -> f64 {
        let d = self.to_dense(n);
        crate::tensor::max_abs(&(&d - d.adjoint()))
    }
}

/// One equality constraint Σ_b tr(A_b X_b) = rhs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, SparseHermitian)>,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(rhs: f64) -> Self {
        Self {
            terms: Vec::new(),
            rhs,
        }
    }

    pub fn with_term(mut self, block: usize, coef: SparseHermitian) -> Self {
        self.terms.push((block, coef));
        self
    }

    pub fn evaluate(&self, blocks: &[CMatrix]) -> f64 {
        self.terms
            .iter()
            .map(|(b, a)| a.dot_dense(&blocks[*b]))
            .sum()
    }
}

/// Conic program over Hermitian PSD blocks:
///
/// optimize Σ_b tr(C_b X_b) subject to the equality constraints, X_b ⪰ 0.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    pub sense: Sense,
    pub blocks: Vec<BlockSpec>,
    pub objective: Vec<SparseHermitian>,
    pub constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            blocks: Vec::new(),
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_block(&mut self, name: impl Into<String>, labels: Vec<SystemLabel>) -> usize {
        self.blocks.push(BlockSpec {
            name: name.into(),
            labels,
        });
        self.objective.push(SparseHermitian::new());
        self.blocks.len() - 1
    }

    /// Block without subsystem structure.
    pub fn add_plain_block(&mut self, name: impl Into<String>, side: usize) -> usize {
        let name = name.into();
        let label = SystemLabel::new(name.clone(), side);
        self.add_block(name, vec![label])
    }

    pub fn set_objective(&mut self, block: usize, c: SparseHermitian) {
        self.objective[block] = c;
    }

    pub fn set_objective_dense(&mut self, block: usize, c: &CMatrix) {
        self.objective[block] = SparseHermitian::from_dense(c);
    }

    pub fn add_constraint(&mut self, c: Constraint) -> usize {
        self.constraints.push(c);
        self.constraints.len() - 1
    }

    pub fn block_index(&self, name: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.name == name)
    }

    pub fn sides(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.side()).collect()
    }

    pub fn objective_value(&self, x: &[CMatrix]) -> f64 {
        self.objective
            .iter()
            .zip(x)
            .map(|(c, xb)| c.dot_dense(xb))
            .sum()
    }

    /// Checks shapes, block indices and Hermiticity of all coefficients.
    pub fn validate(&self) -> Result<()> {
        let sides = self.sides();
        let check = |what: &str, block: usize, a: &SparseHermitian| -> Result<()> {
            let n = *sides.get(block).ok_or_else(|| {
                Error::DimensionMismatch(format!("{what} refers to missing block {block}"))
            })?;
            if let Some(m) = a.max_index() {
                if m >= n {
                    return Err(Error::DimensionMismatch(format!(
                        "{what} has index {m} outside block {block} of side {n}"
                    )));
                }
            }
            let dev = a.hermitian_deviation(n);
            if dev > 1e-12 * (1.0 + a.frobenius_sq().sqrt()) {
                return Err(Error::NotHermitian(dev));
            }
            Ok(())
        };
        if self.objective.len() != self.blocks.len() {
            return Err(Error::DimensionMismatch(
                "objective must have one entry per block".into(),
            ));
        }
        for (b, c) in self.objective.iter().enumerate() {
            check("objective", b, c)?;
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(Error::Precondition(format!(
                    "constraint {i} has non-finite rhs"
                )));
            }
            for (b, a) in &row.terms {
                check(&format!("constraint {i}"), *b, a)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

/// Result of a solve.
///
/// Dual conventions: for a maximization the dual is
/// min bᵀy s.t. Z = Σ y_i A_i − C ⪰ 0; for a minimization it is
/// max bᵀy s.t. Z = C − Σ y_i A_i ⪰ 0. `multipliers` holds y, `slacks` holds Z.
#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub primal_value: f64,
    pub dual_value: f64,
    /// |primal_value − dual_value|
    pub gap: f64,
    /// max |Σ tr(A_b X_b) − rhs| over all constraints
    pub primal_residual: f64,
    /// largest entry of C − Aᵀy + Z (sign per sense), relative to 1 + max|C|
    pub dual_residual: f64,
    pub iterations: usize,
    pub blocks: Vec<CMatrix>,
    pub slacks: Vec<CMatrix>,
    pub multipliers: Vec<f64>,
    /// constraints dropped as linearly dependent during presolve
    pub dropped_rows: Vec<usize>,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn residual(&self) -> f64 {
        self.primal_residual.max(self.dual_residual)
    }

    pub fn objective(&self) -> f64 {
        0.5 * (self.primal_value + self.dual_value)
    }

    pub fn into_error(&self) -> Error {
        Error::Solver {
            status: self.status,
            gap: self.gap,
            residual: self.residual(),
        }
    }
}
