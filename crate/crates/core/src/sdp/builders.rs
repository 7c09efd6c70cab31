//! Constraint-row generators for linear conditions on labelled operators.
//!
//! Rows are expressed in a product basis: each system carries the factor
//! basis {1, traceless elements}, and a row is the tensor product of one
//! factor per system. Conditions of the form "partial trace equals identity
//! times something" then select subsets of product indices, which keeps the
//! rows sparse and linearly independent by construction.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tensor::{total_dim, LabelledOperator, SystemLabel, C64};

use super::problem::SparseHermitian;

/// Orthonormal basis of n×n Hermitian matrices for the Hilbert–Schmidt
/// inner product: E_kk, (E_jk + E_kj)/√2, (−iE_jk + iE_kj)/√2.
pub fn hermitian_basis(n: usize) -> Vec<SparseHermitian> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for k in 0..n {
        out.push(SparseHermitian {
            entries: vec![(k, k, C64::new(1.0, 0.0))],
        });
    }
    for j in 0..n {
        for k in j + 1..n {
            out.push(SparseHermitian {
                entries: vec![(j, k, C64::new(h, 0.0)), (k, j, C64::new(h, 0.0))],
            });
            out.push(SparseHermitian {
                entries: vec![(j, k, C64::new(0.0, -h)), (k, j, C64::new(0.0, h))],
            });
        }
    }
    out
}

/// Factor basis of Herm(C^n): the identity first, then n² − 1 sparse
/// traceless elements E_00 − E_kk, E_jk + E_kj, −iE_jk + iE_kj.
pub fn factor_basis(n: usize) -> Vec<SparseHermitian> {
    let one = C64::new(1.0, 0.0);
    let mut out = vec![SparseHermitian::identity(n)];
    for k in 1..n {
        out.push(SparseHermitian {
            entries: vec![(0, 0, one), (k, k, -one)],
        });
    }
    for j in 0..n {
        for k in j + 1..n {
            out.push(SparseHermitian {
                entries: vec![(j, k, one), (k, j, one)],
            });
            out.push(SparseHermitian {
                entries: vec![(j, k, C64::new(0.0, -1.0)), (k, j, C64::new(0.0, 1.0))],
            });
        }
    }
    out
}

/// Kronecker product of sparse matrices of sides `na` (implicit) and `nb`.
pub fn kron_sparse(a: &SparseHermitian, b: &SparseHermitian, nb: usize) -> SparseHermitian {
    let mut entries = Vec::with_capacity(a.nnz() * b.nnz());
    for &(ra, ca, va) in &a.entries {
        for &(rb, cb, vb) in &b.entries {
            entries.push((ra * nb + rb, ca * nb + cb, va * vb));
        }
    }
    SparseHermitian { entries }
}

/// Product basis over an ordered label list.
#[derive(Clone, Debug)]
pub struct ProductBasis {
    labels: Vec<SystemLabel>,
    factors: Vec<Vec<SparseHermitian>>,
}

impl ProductBasis {
    pub fn new(labels: &[SystemLabel]) -> Self {
        Self {
            labels: labels.to_vec(),
            factors: labels.iter().map(|l| factor_basis(l.dim)).collect(),
        }
    }

    pub fn labels(&self) -> &[SystemLabel] {
        &self.labels
    }

    pub fn side(&self) -> usize {
        total_dim(&self.labels)
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l.name == name)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    /// Tensor product of the chosen factor elements, in label order.
    pub fn element(&self, ks: &[usize]) -> SparseHermitian {
        self.element_on(ks, &(0..self.labels.len()).collect::<Vec<_>>())
    }

    /// Product over a subset of positions (given in label order).
    fn element_on(&self, ks: &[usize], positions: &[usize]) -> SparseHermitian {
        let mut acc = SparseHermitian {
            entries: vec![(0, 0, C64::new(1.0, 0.0))],
        };
        for &p in positions {
            acc = kron_sparse(&acc, &self.factors[p][ks[p]], self.labels[p].dim);
        }
        acc
    }

    /// Every multi-index, last label fastest.
    pub fn indices(&self) -> Vec<Vec<usize>> {
        let sizes: Vec<usize> = self.labels.iter().map(|l| l.dim * l.dim).collect();
        let total: usize = sizes.iter().product();
        let mut out = Vec::with_capacity(total);
        let mut cur = vec![0usize; sizes.len()];
        for _ in 0..total {
            out.push(cur.clone());
            for p in (0..sizes.len()).rev() {
                cur[p] += 1;
                if cur[p] < sizes[p] {
                    break;
                }
                cur[p] = 0;
            }
        }
        out
    }

    fn positions(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut out = names
            .iter()
            .map(|n| self.position(n))
            .collect::<Result<Vec<_>>>()?;
        out.sort_unstable();
        Ok(out)
    }
}

/// Set of product-basis rows with right-hand sides, deduplicated by index.
#[derive(Clone, Debug, Default)]
pub struct RowSet {
    rows: BTreeMap<Vec<usize>, f64>,
}

impl RowSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, ks: Vec<usize>, rhs: f64) -> Result<()> {
        if let Some(&old) = self.rows.get(&ks) {
            if (old - rhs).abs() > 1e-12 * (1.0 + old.abs()) {
                return Err(Error::Precondition(format!(
                    "conflicting right-hand sides {old} and {rhs} for the same row"
                )));
            }
            return Ok(());
        }
        self.rows.insert(ks, rhs);
        Ok(())
    }

    pub fn extend(&mut self, rows: impl IntoIterator<Item = (Vec<usize>, f64)>) -> Result<()> {
        for (k, r) in rows {
            self.insert(k, r)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<usize>, &f64)> {
        self.rows.iter()
    }

    /// Materializes rows as (coefficient, rhs) pairs.
    pub fn materialize(&self, basis: &ProductBasis) -> Vec<(SparseHermitian, f64)> {
        self.rows
            .iter()
            .map(|(k, &r)| (basis.element(k), r))
            .collect()
    }
}

/// Rows expressing tr_traced X ∈ 1_mixed ⊗ Herm(rest): product elements with
/// the identity on every traced system and a traceless part on the mixed
/// systems. All right-hand sides are zero.
pub fn identity_factor_rows(
    basis: &ProductBasis,
    traced: &[&str],
    mixed: &[&str],
) -> Result<Vec<(Vec<usize>, f64)>> {
    let t = basis.positions(traced)?;
    let m = basis.positions(mixed)?;
    if t.iter().any(|p| m.contains(p)) {
        return Err(Error::Precondition(
            "traced and mixed systems must be disjoint".into(),
        ));
    }
    Ok(basis
        .indices()
        .into_iter()
        .filter(|ks| t.iter().all(|&p| ks[p] == 0) && m.iter().any(|&p| ks[p] != 0))
        .map(|ks| (ks, 0.0))
        .collect())
}

/// Rows fixing the marginal tr_traced X = target, where `target` lives on the
/// remaining systems.
pub fn marginal_rows(
    basis: &ProductBasis,
    traced: &[&str],
    target: &LabelledOperator,
) -> Result<Vec<(Vec<usize>, f64)>> {
    let t = basis.positions(traced)?;
    let kept: Vec<usize> = (0..basis.labels.len()).filter(|p| !t.contains(p)).collect();
    let kept_labels: Vec<SystemLabel> = kept.iter().map(|&p| basis.labels[p].clone()).collect();
    let order: Vec<&str> = kept_labels.iter().map(|l| l.name.as_str()).collect();
    if target.labels().len() != kept_labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "marginal target has labels {:?}, expected {:?}",
            target.label_names(),
            order
        )));
    }
    let target = crate::tensor::permute_systems(target, &order)?;
    if target.labels() != kept_labels.as_slice() {
        return Err(Error::DimensionMismatch(
            "marginal target dimensions differ from the block".into(),
        ));
    }
    let td = target.data();
    let mut out = Vec::new();
    for ks in basis.indices() {
        if t.iter().any(|&p| ks[p] != 0) {
            continue;
        }
        let e = basis.element_on(&ks, &kept);
        // tr(E T) = Σ E_rc T_cr
        let v: C64 = e.entries.iter().map(|&(r, c, a)| a * td[(c, r)]).sum();
        out.push((ks, v.re));
    }
    Ok(out)
}

/// Single row tr(X) = value.
pub fn trace_row(basis: &ProductBasis, value: f64) -> (Vec<usize>, f64) {
    (vec![0; basis.labels.len()], value)
}
