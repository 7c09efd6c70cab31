//! MatrixFile: a labelled complex matrix as JSON with separate real and
//! imaginary row-major arrays.
//!
//! ```json
//! {"dims": [{"name": "AI", "dim": 2}, ...], "re": [[...], ...], "im": [[...], ...]}
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{
    symmetrize, CMatrix, HermitianOperator, LabelledOperator, SystemLabel, C64, HERMITIAN_TOL,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimEntry {
    pub name: String,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub dims: Vec<DimEntry>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixFile {
    pub fn from_operator(x: &LabelledOperator) -> Self {
        let m = x.data();
        let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            dims: x
                .labels()
                .iter()
                .map(|l| DimEntry {
                    name: l.name.clone(),
                    dim: l.dim,
                })
                .collect(),
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    /// Shape checks only; no Hermiticity requirement.
    pub fn to_operator(&self) -> Result<LabelledOperator> {
        let labels: Vec<SystemLabel> = self
            .dims
            .iter()
            .map(|d| SystemLabel::new(d.name.clone(), d.dim))
            .collect();
        if labels.iter().any(|l| l.dim == 0) {
            return Err(Error::Parse("zero dimension in dims".into()));
        }
        let side = labels
            .iter()
            .try_fold(1usize, |acc, l| acc.checked_mul(l.dim))
            .ok_or_else(|| Error::Parse("dimension product overflows".into()))?;
        let shape_ok = |a: &Vec<Vec<f64>>| a.len() == side && a.iter().all(|r| r.len() == side);
        if !shape_ok(&self.re) || !shape_ok(&self.im) {
            return Err(Error::Parse(format!(
                "re and im must both be {side}x{side} to match dims"
            )));
        }
        let m = CMatrix::from_fn(side, side, |i, j| C64::new(self.re[i][j], self.im[i][j]));
        LabelledOperator::new(labels, m).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Requires Hermiticity within [`HERMITIAN_TOL`] and removes the residual.
    pub fn to_hermitian(&self) -> Result<HermitianOperator> {
        let op = self.to_operator()?;
        let dev = op.hermitian_deviation();
        if !dev.is_finite() || dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let data = symmetrize(op.data());
        HermitianOperator::from_parts(op.labels().to_vec(), data)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        serde_json::from_reader(r).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Canonical formatting: pretty-printed, shortest round-trip floats,
    /// trailing newline.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self).map_err(|e| Error::Parse(e.to_string()))?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn to_canonical_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("serde_json writes UTF-8")
    }
}

pub fn load_matrix_file(path: &Path) -> Result<MatrixFile> {
    MatrixFile::read_from(BufReader::new(File::open(path)?))
}

/// Reads a Hermitian operator.
pub fn load_hermitian(path: &Path) -> Result<HermitianOperator> {
    load_matrix_file(path)?.to_hermitian()
}

pub fn save_operator(path: &Path, x: &LabelledOperator) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    MatrixFile::from_operator(x).write_to(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn save_hermitian(path: &Path, x: &HermitianOperator) -> Result<()> {
    save_operator(path, x.as_operator())
}
