//! Dense complex linear algebra over labelled tensor-product spaces.
//!
//! Every operator carries an ordered list of [`SystemLabel`]s; the label order
//! is the storage order of the tensor factors, with the first label being the
//! most significant digit of a basis index. Operations address subsystems by
//! name, never by position.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Eigenvalues below this are rejected by PSD-only routines; those in
/// `[PSD_CLAMP, 0)` are clamped to zero.
pub const PSD_CLAMP: f64 = -1e-10;

/// Construction-time Hermiticity tolerance (relative to the largest entry).
pub const HERMITIAN_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemLabel {
    pub name: String,
    pub dim: usize,
}

impl SystemLabel {
    pub fn new(name: impl Into<String>, dim: usize) -> Self {
        Self {
            name: name.into(),
            dim,
        }
    }
}

pub fn total_dim(labels: &[SystemLabel]) -> usize {
    labels.iter().map(|l| l.dim).product()
}

fn check_labels(labels: &[SystemLabel]) -> Result<()> {
    let mut seen = HashSet::new();
    for l in labels {
        if l.dim == 0 {
            return Err(Error::DimensionMismatch(format!(
                "system `{}` has dimension 0",
                l.name
            )));
        }
        if !seen.insert(l.name.as_str()) {
            return Err(Error::DuplicateLabel(l.name.clone()));
        }
    }
    Ok(())
}

/// Splits every basis index of `dims` into (index over unmarked factors,
/// index over marked factors), both in original relative order.
pub(crate) struct IndexSplit {
    pub kept: Vec<usize>,
    pub traced: Vec<usize>,
    pub kept_dim: usize,
    pub traced_dim: usize,
    /// full index for (kept, traced), laid out as `kept * traced_dim + traced`
    pub compose: Vec<usize>,
}

impl IndexSplit {
    pub fn new(dims: &[usize], marked: &[bool]) -> Self {
        let n: usize = dims.iter().product();
        let kept_dim: usize = dims
            .iter()
            .zip(marked)
            .filter(|(_, &m)| !m)
            .map(|(d, _)| d)
            .product();
        let traced_dim = n / kept_dim;
        let mut kept = vec![0; n];
        let mut traced = vec![0; n];
        let mut compose = vec![0; n];
        let mut digits = vec![0usize; dims.len()];
        for i in 0..n {
            let (mut k, mut t) = (0, 0);
            for (pos, &d) in digits.iter().enumerate() {
                if marked[pos] {
                    t = t * dims[pos] + d;
                } else {
                    k = k * dims[pos] + d;
                }
            }
            kept[i] = k;
            traced[i] = t;
            compose[k * traced_dim + t] = i;
            // increment mixed-radix counter (last factor fastest)
            for pos in (0..dims.len()).rev() {
                digits[pos] += 1;
                if digits[pos] < dims[pos] {
                    break;
                }
                digits[pos] = 0;
            }
        }
        Self {
            kept,
            traced,
            kept_dim,
            traced_dim,
            compose,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabelledOperator {
    labels: Vec<SystemLabel>,
    data: CMatrix,
}

impl LabelledOperator {
    pub fn new(labels: Vec<SystemLabel>, data: CMatrix) -> Result<Self> {
        check_labels(&labels)?;
        let side = total_dim(&labels);
        if data.nrows() != side || data.ncols() != side {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{} but labels require side {}",
                data.nrows(),
                data.ncols(),
                side
            )));
        }
        Ok(Self { labels, data })
    }

    pub fn identity(labels: Vec<SystemLabel>) -> Result<Self> {
        let n = total_dim(&labels);
        Self::new(labels, CMatrix::identity(n, n))
    }

    pub fn zeros(labels: Vec<SystemLabel>) -> Result<Self> {
        let n = total_dim(&labels);
        Self::new(labels, CMatrix::zeros(n, n))
    }

    pub fn labels(&self) -> &[SystemLabel] {
        &self.labels
    }

    pub fn label_names(&self) -> Vec<&str> {
        self.labels.iter().map(|l| l.name.as_str()).collect()
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_data(self) -> CMatrix {
        self.data
    }

    pub fn side(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim_of(&self, name: &str) -> Option<usize> {
        self.labels.iter().find(|l| l.name == name).map(|l| l.dim)
    }

    fn position(&self, name: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l.name == name)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            labels: self.labels.clone(),
            data: self.data.scale(s),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            labels: self.labels.clone(),
            data: self.data.adjoint(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            labels: self.labels.clone(),
            data: self.data.transpose(),
        }
    }

    pub fn map_data(&self, f: impl FnOnce(&CMatrix) -> CMatrix) -> Result<Self> {
        Self::new(self.labels.clone(), f(&self.data))
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if self.labels != other.labels {
            return Err(Error::DimensionMismatch(format!(
                "label lists differ: {:?} vs {:?}",
                self.label_names(),
                other.label_names()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self {
            labels: self.labels.clone(),
            data: &self.data + &other.data,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self {
            labels: self.labels.clone(),
            data: &self.data - &other.data,
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self {
            labels: self.labels.clone(),
            data: &self.data * &other.data,
        })
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.same_space(other)?;
        Ok(max_abs(&(&self.data - &other.data)))
    }

    pub fn hermitian_deviation(&self) -> f64 {
        max_abs(&(&self.data - self.data.adjoint()))
    }
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Hilbert–Schmidt inner product tr(a† b).
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Real part of tr(a b) for Hermitian a, b without forming the product.
pub fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    // tr(ab) = sum_ij a_ij b_ji; for Hermitian b, b_ji = conj(b_ij)
    a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum()
}

pub fn tensor(a: &LabelledOperator, b: &LabelledOperator) -> Result<LabelledOperator> {
    let mut labels = a.labels.clone();
    labels.extend(b.labels.iter().cloned());
    LabelledOperator::new(labels, a.data.kronecker(&b.data))
}

fn mark(x: &LabelledOperator, over: &[&str]) -> Result<Vec<bool>> {
    let mut marked = vec![false; x.labels.len()];
    for name in over {
        marked[x.position(name)?] = true;
    }
    Ok(marked)
}

pub fn partial_trace(x: &LabelledOperator, over: &[&str]) -> Result<LabelledOperator> {
    let marked = mark(x, over)?;
    let dims: Vec<usize> = x.labels.iter().map(|l| l.dim).collect();
    let split = IndexSplit::new(&dims, &marked);
    let labels: Vec<SystemLabel> = x
        .labels
        .iter()
        .zip(&marked)
        .filter(|(_, &m)| !m)
        .map(|(l, _)| l.clone())
        .collect();
    let nk = split.kept_dim;
    let nt = split.traced_dim;
    let mut out = CMatrix::zeros(nk, nk);
    for t in 0..nt {
        for kc in 0..nk {
            let j = split.compose[kc * nt + t];
            for kr in 0..nk {
                let i = split.compose[kr * nt + t];
                out[(kr, kc)] += x.data[(i, j)];
            }
        }
    }
    LabelledOperator::new(labels, out)
}

pub fn partial_transpose(x: &LabelledOperator, over: &[&str]) -> Result<LabelledOperator> {
    let marked = mark(x, over)?;
    let dims: Vec<usize> = x.labels.iter().map(|l| l.dim).collect();
    let split = IndexSplit::new(&dims, &marked);
    let n = x.side();
    let nt = split.traced_dim;
    let mut out = CMatrix::zeros(n, n);
    for j in 0..n {
        let (kj, tj) = (split.kept[j], split.traced[j]);
        for i in 0..n {
            let (ki, ti) = (split.kept[i], split.traced[i]);
            let r = split.compose[ki * nt + tj];
            let c = split.compose[kj * nt + ti];
            out[(r, c)] = x.data[(i, j)];
        }
    }
    LabelledOperator::new(x.labels.clone(), out)
}

/// Index map from the current label order to `new_order`.
fn permutation_map(labels: &[SystemLabel], order: &[usize]) -> Vec<usize> {
    let dims: Vec<usize> = labels.iter().map(|l| l.dim).collect();
    let n: usize = dims.iter().product();
    let new_dims: Vec<usize> = order.iter().map(|&p| dims[p]).collect();
    let mut new_strides = vec![1usize; dims.len()];
    for m in (0..dims.len().saturating_sub(1)).rev() {
        new_strides[m] = new_strides[m + 1] * new_dims[m + 1];
    }
    // stride (in the new layout) of each old position
    let mut stride_of_old = vec![0usize; dims.len()];
    for (m, &p) in order.iter().enumerate() {
        stride_of_old[p] = new_strides[m];
    }
    let mut map = vec![0usize; n];
    let mut digits = vec![0usize; dims.len()];
    for slot in map.iter_mut() {
        *slot = digits.iter().zip(&stride_of_old).map(|(d, s)| d * s).sum();
        for pos in (0..dims.len()).rev() {
            digits[pos] += 1;
            if digits[pos] < dims[pos] {
                break;
            }
            digits[pos] = 0;
        }
    }
    map
}

pub fn permute_systems(x: &LabelledOperator, new_order: &[&str]) -> Result<LabelledOperator> {
    let not_perm = || Error::NotPermutation(new_order.iter().map(|s| s.to_string()).collect());
    if new_order.len() != x.labels.len() {
        return Err(not_perm());
    }
    let mut order = Vec::with_capacity(new_order.len());
    for name in new_order {
        let p = x.position(name).map_err(|_| not_perm())?;
        if order.contains(&p) {
            return Err(not_perm());
        }
        order.push(p);
    }
    if order.iter().enumerate().all(|(i, &p)| i == p) {
        return Ok(x.clone());
    }
    let map = permutation_map(&x.labels, &order);
    let n = x.side();
    let mut out = CMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            out[(map[i], map[j])] = x.data[(i, j)];
        }
    }
    let labels = order.iter().map(|&p| x.labels[p].clone()).collect();
    LabelledOperator::new(labels, out)
}

/// `x ⊗ 1` on the labels of `full` that `x` lacks, reordered to `full`.
/// Identity factors carry weight 1.
pub fn embed(x: &LabelledOperator, full: &[SystemLabel]) -> Result<LabelledOperator> {
    check_labels(full)?;
    for l in &x.labels {
        match full.iter().find(|f| f.name == l.name) {
            None => return Err(Error::UnknownLabel(l.name.clone())),
            Some(f) if f.dim != l.dim => {
                return Err(Error::DimensionMismatch(format!(
                    "system `{}` has dimension {} but target expects {}",
                    l.name, l.dim, f.dim
                )))
            }
            _ => {}
        }
    }
    let missing: Vec<SystemLabel> = full
        .iter()
        .filter(|f| x.dim_of(&f.name).is_none())
        .cloned()
        .collect();
    let widened = if missing.is_empty() {
        x.clone()
    } else {
        tensor(x, &LabelledOperator::identity(missing)?)?
    };
    let order: Vec<&str> = full.iter().map(|l| l.name.as_str()).collect();
    permute_systems(&widened, &order)
}

/// ₍X₎W = 1_X/d_X ⊗ tr_X W, kept in the label order of `x`.
pub fn trace_and_replace(x: &LabelledOperator, over: &[&str]) -> Result<LabelledOperator> {
    let reduced = partial_trace(x, over)?;
    let d: usize = over.iter().map(|n| x.dim_of(n).unwrap_or(1)).product();
    Ok(embed(&reduced, &x.labels)?.scale(1.0 / d as f64))
}

/// |X⟩⟩ = Σ_i (X|i⟩) ⊗ |i⟩, i.e. component `r * n + c` holds `X[r, c]`.
pub fn vectorize(x: &CMatrix) -> DVector<C64> {
    let (nr, nc) = x.shape();
    DVector::from_fn(nr * nc, |k, _| x[(k / nc, k % nc)])
}

#[derive(Clone, Debug)]
pub struct Eigen {
    /// ascending
    pub values: Vec<f64>,
    /// columns are eigenvectors, first non-negligible component real positive
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn reconstruct(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let s = f(self.values[k]);
            scaled.column_mut(k).scale_mut(s);
        }
        let m = &scaled * self.vectors.adjoint();
        symmetrize(&m)
    }
}

pub fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn hermitian_eig(x: &CMatrix) -> Result<Eigen> {
    let n = x.nrows();
    if n == 0 {
        return Ok(Eigen {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::try_new(symmetrize(x), 1e-15, 10_000).ok_or(Error::Convergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let scale = col.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        if let Some(lead) = col.iter().find(|z| z.norm() > 1e-10 * scale).copied() {
            let phase = lead.conj() / lead.norm();
            col.scale_mut(1.0);
            for z in col.iter_mut() {
                *z *= phase;
            }
        }
        vectors.set_column(dst, &col);
    }
    Ok(Eigen { values, vectors })
}

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator(LabelledOperator);

impl HermitianOperator {
    /// Checks Hermiticity within [`HERMITIAN_TOL`] (relative) and symmetrizes.
    pub fn new(op: LabelledOperator) -> Result<Self> {
        let dev = op.hermitian_deviation();
        let scale = max_abs(&op.data).max(1.0);
        if dev > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self::symmetrized(op))
    }

    pub fn from_parts(labels: Vec<SystemLabel>, data: CMatrix) -> Result<Self> {
        Self::new(LabelledOperator::new(labels, data)?)
    }

    /// Replaces the data with (X + X†)/2 without checking.
    pub fn symmetrized(op: LabelledOperator) -> Self {
        let data = symmetrize(&op.data);
        Self(LabelledOperator {
            labels: op.labels,
            data,
        })
    }

    pub fn identity(labels: Vec<SystemLabel>) -> Result<Self> {
        Ok(Self(LabelledOperator::identity(labels)?))
    }

    pub fn zeros(labels: Vec<SystemLabel>) -> Result<Self> {
        Ok(Self(LabelledOperator::zeros(labels)?))
    }

    pub fn as_operator(&self) -> &LabelledOperator {
        &self.0
    }

    pub fn into_operator(self) -> LabelledOperator {
        self.0
    }

    pub fn labels(&self) -> &[SystemLabel] {
        self.0.labels()
    }

    pub fn data(&self) -> &CMatrix {
        self.0.data()
    }

    pub fn side(&self) -> usize {
        self.0.side()
    }

    pub fn dim_of(&self, name: &str) -> Option<usize> {
        self.0.dim_of(name)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self(self.0.add(&other.0)?))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(Self(self.0.sub(&other.0)?))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.0.max_abs_diff(&other.0)
    }

    /// Real tr(self · other).
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.0.same_space(&other.0)?;
        Ok(trace_product_re(self.data(), other.data()))
    }

    pub fn partial_trace(&self, over: &[&str]) -> Result<Self> {
        Ok(Self::symmetrized(partial_trace(&self.0, over)?))
    }

    pub fn trace_and_replace(&self, over: &[&str]) -> Result<Self> {
        Ok(Self::symmetrized(trace_and_replace(&self.0, over)?))
    }

    pub fn partial_transpose(&self, over: &[&str]) -> Result<Self> {
        Ok(Self::symmetrized(partial_transpose(&self.0, over)?))
    }

    pub fn permute(&self, new_order: &[&str]) -> Result<Self> {
        Ok(Self(permute_systems(&self.0, new_order)?))
    }

    pub fn embed(&self, full: &[SystemLabel]) -> Result<Self> {
        Ok(Self(embed(&self.0, full)?))
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(Self(tensor(&self.0, &other.0)?))
    }

    pub fn conjugate_by(&self, u: &CMatrix) -> Result<Self> {
        Ok(Self::symmetrized(self.0.map_data(|d| u * d * u.adjoint())?))
    }

    pub fn eig(&self) -> Result<Eigen> {
        hermitian_eig(self.data())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eig()?.values.first().copied().unwrap_or(0.0))
    }

    pub fn trace_norm(&self) -> Result<f64> {
        trace_norm(self)
    }

    fn with_data(&self, data: CMatrix) -> Self {
        Self(LabelledOperator {
            labels: self.0.labels.clone(),
            data,
        })
    }
}

pub fn trace_norm(x: &HermitianOperator) -> Result<f64> {
    Ok(x.eig()?.values.iter().map(|v| v.abs()).sum())
}

fn psd_eig(x: &HermitianOperator) -> Result<Eigen> {
    let mut eig = x.eig()?;
    if let Some(&min) = eig.values.first() {
        let scale = eig.values.last().copied().unwrap_or(0.0).abs().max(1.0);
        if min < PSD_CLAMP * scale {
            return Err(Error::NegativeEigenvalue(min));
        }
    }
    for v in eig.values.iter_mut() {
        *v = v.max(0.0);
    }
    Ok(eig)
}

pub fn sqrt_psd(x: &HermitianOperator) -> Result<HermitianOperator> {
    let eig = psd_eig(x)?;
    Ok(x.with_data(eig.reconstruct(f64::sqrt)))
}

/// Returns (√x⁻, Π_im(x)): the pseudo-inverse square root on the support of
/// `x` and the projector onto that support.
pub fn pseudo_inverse_sqrt(
    x: &HermitianOperator,
) -> Result<(HermitianOperator, HermitianOperator)> {
    let eig = psd_eig(x)?;
    let top = eig.values.last().copied().unwrap_or(0.0);
    let cut = (1e-10 * top).max(1e-14);
    let inv = eig.reconstruct(|v| if v > cut { 1.0 / v.sqrt() } else { 0.0 });
    let proj = eig.reconstruct(|v| if v > cut { 1.0 } else { 0.0 });
    Ok((x.with_data(inv), x.with_data(proj)))
}
