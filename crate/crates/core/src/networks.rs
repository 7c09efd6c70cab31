//! Choi-matrix calculus: channels, instruments, link products,
//! non-signalling channels, combs and testers.
//!
//! Choi convention: M = Σ_ij Φ(|i⟩⟨j|) ⊗ |i⟩⟨j|, output systems first. With
//! the vectorization |K⟩⟩ = Σ K|i⟩ ⊗ |i⟩ a Kraus set gives M = Σ_k |K_k⟩⟩⟨⟨K_k|.

use crate::error::{Error, Result};
use crate::tensor::{
    embed, max_abs, partial_trace, partial_transpose, total_dim, trace_and_replace, vectorize,
    CMatrix, HermitianOperator, LabelledOperator, SystemLabel, C64,
};

pub const AI: &str = "AI";
pub const AO: &str = "AO";
pub const BI: &str = "BI";
pub const BO: &str = "BO";

/// Default tolerance for membership checks.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    op: HermitianOperator,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

impl ChoiMatrix {
    /// Wraps an operator; `inputs` and `outputs` must partition its labels.
    /// Positivity is checked with a tolerance relative to the largest entry.
    pub fn new(op: HermitianOperator, inputs: Vec<String>, outputs: Vec<String>) -> Result<Self> {
        let names: Vec<&str> = op.as_operator().label_names();
        let mut all: Vec<&str> = inputs.iter().chain(&outputs).map(|s| s.as_str()).collect();
        all.sort_unstable();
        let mut have = names.clone();
        have.sort_unstable();
        if all != have {
            return Err(Error::DimensionMismatch(format!(
                "inputs {inputs:?} and outputs {outputs:?} do not partition labels {names:?}"
            )));
        }
        let min = op.min_eigenvalue()?;
        let scale = max_abs(op.data()).max(1.0);
        if min < -1e-9 * scale {
            return Err(Error::NegativeEigenvalue(min));
        }
        Ok(Self {
            op,
            inputs,
            outputs,
        })
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn into_op(self) -> HermitianOperator {
        self.op
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    fn labels_of(&self, names: &[String]) -> Vec<SystemLabel> {
        self.op
            .labels()
            .iter()
            .filter(|l| names.contains(&l.name))
            .cloned()
            .collect()
    }

    pub fn input_labels(&self) -> Vec<SystemLabel> {
        self.labels_of(&self.inputs)
    }

    pub fn output_labels(&self) -> Vec<SystemLabel> {
        self.labels_of(&self.outputs)
    }

    /// max |tr_out M − 1_in|.
    pub fn trace_preservation_residual(&self) -> Result<f64> {
        let outs: Vec<&str> = self.outputs.iter().map(|s| s.as_str()).collect();
        let red = partial_trace(self.op.as_operator(), &outs)?;
        let id = LabelledOperator::identity(red.labels().to_vec())?;
        red.max_abs_diff(&id)
    }

    pub fn is_channel(&self, tol: f64) -> Result<bool> {
        Ok(self.trace_preservation_residual()? <= tol)
    }

    /// Φ(ρ) = tr_in[(1_out ⊗ ρᵀ) M] for ρ on (a permutation of) the inputs.
    pub fn apply(&self, rho: &LabelledOperator) -> Result<LabelledOperator> {
        let ins: Vec<&str> = self.inputs.iter().map(|s| s.as_str()).collect();
        let mut names: Vec<&str> = rho.label_names();
        names.sort_unstable();
        let mut want = ins.clone();
        want.sort_unstable();
        if names != want {
            return Err(Error::DimensionMismatch(format!(
                "state on {:?} does not match channel inputs {:?}",
                rho.label_names(),
                ins
            )));
        }
        let rt = embed(&rho.transpose(), self.op.labels())?;
        let prod = self.op.as_operator().mul(&rt)?;
        partial_trace(&prod, &ins)
    }
}

fn check_kraus(kraus: &[CMatrix], din: usize, dout: usize) -> Result<()> {
    if kraus.is_empty() {
        return Err(Error::Precondition("empty Kraus set".into()));
    }
    for k in kraus {
        if k.nrows() != dout || k.ncols() != din {
            return Err(Error::DimensionMismatch(format!(
                "Kraus operator is {}x{}, expected {dout}x{din}",
                k.nrows(),
                k.ncols()
            )));
        }
    }
    Ok(())
}

/// Choi matrix Σ_k |K_k⟩⟩⟨⟨K_k| of the CP map with the given Kraus operators,
/// on labels `outputs ++ inputs`. Trace preservation is not required.
pub fn choi_of_kraus(
    kraus: &[CMatrix],
    inputs: Vec<SystemLabel>,
    outputs: Vec<SystemLabel>,
) -> Result<ChoiMatrix> {
    let din = total_dim(&inputs);
    let dout = total_dim(&outputs);
    check_kraus(kraus, din, dout)?;
    let n = din * dout;
    let mut m = CMatrix::zeros(n, n);
    for k in kraus {
        let v = vectorize(k);
        m += &v * v.adjoint();
    }
    let in_names = inputs.iter().map(|l| l.name.clone()).collect();
    let out_names = outputs.iter().map(|l| l.name.clone()).collect();
    let mut labels = outputs;
    labels.extend(inputs);
    ChoiMatrix::new(
        HermitianOperator::from_parts(labels, m)?,
        in_names,
        out_names,
    )
}

/// |U⟩⟩⟨⟨U|, the Choi matrix of ρ ↦ UρU†.
pub fn choi_of_unitary(
    u: &CMatrix,
    inputs: Vec<SystemLabel>,
    outputs: Vec<SystemLabel>,
) -> Result<ChoiMatrix> {
    choi_of_kraus(std::slice::from_ref(u), inputs, outputs)
}

/// Σ_ij f(|i⟩⟨j|) ⊗ |i⟩⟨j| for an arbitrary linear map given as a closure.
pub fn choi_of_map(
    f: impl Fn(&CMatrix) -> CMatrix,
    inputs: Vec<SystemLabel>,
    outputs: Vec<SystemLabel>,
) -> Result<LabelledOperator> {
    let din = total_dim(&inputs);
    let dout = total_dim(&outputs);
    let mut m = CMatrix::zeros(dout * din, dout * din);
    for i in 0..din {
        for j in 0..din {
            let mut e = CMatrix::zeros(din, din);
            e[(i, j)] = C64::new(1.0, 0.0);
            let img = f(&e);
            if img.nrows() != dout || img.ncols() != dout {
                return Err(Error::DimensionMismatch("map output has wrong side".into()));
            }
            for r in 0..dout {
                for c in 0..dout {
                    m[(r * din + i, c * din + j)] += img[(r, c)];
                }
            }
        }
    }
    let mut labels = outputs;
    labels.extend(inputs);
    LabelledOperator::new(labels, m)
}

/// Completely depolarizing channel ρ ↦ tr(ρ) 1/d_out.
pub fn depolarizing_choi(
    inputs: Vec<SystemLabel>,
    outputs: Vec<SystemLabel>,
) -> Result<ChoiMatrix> {
    let dout = total_dim(&outputs);
    let in_names = inputs.iter().map(|l| l.name.clone()).collect();
    let out_names = outputs.iter().map(|l| l.name.clone()).collect();
    let mut labels = outputs;
    labels.extend(inputs);
    let op = HermitianOperator::identity(labels)?.scale(1.0 / dout as f64);
    ChoiMatrix::new(op, in_names, out_names)
}

/// N * M = tr_Z[(1 ⊗ M^{T_Z})(N ⊗ 1)] with Z the labels shared by name.
/// The result carries N's remaining labels followed by M's.
pub fn link_product(n: &LabelledOperator, m: &LabelledOperator) -> Result<LabelledOperator> {
    let mut shared: Vec<&str> = Vec::new();
    for l in m.labels() {
        if let Some(d) = n.dim_of(&l.name) {
            if d != l.dim {
                return Err(Error::DimensionMismatch(format!(
                    "shared system `{}` has dimensions {d} and {}",
                    l.name, l.dim
                )));
            }
            shared.push(l.name.as_str());
        }
    }
    let mut union: Vec<SystemLabel> = n.labels().to_vec();
    union.extend(
        m.labels()
            .iter()
            .filter(|l| !shared.contains(&l.name.as_str()))
            .cloned(),
    );
    let mt = partial_transpose(m, &shared)?;
    let big_m = embed(&mt, &union)?;
    let big_n = embed(n, &union)?;
    let prod = big_m.mul(&big_n)?;
    partial_trace(&prod, &shared)
}

/// Composition of channels: the Choi matrix of Φ_n ∘ Φ_m, contracting the
/// outputs of `m` with the matching inputs of `n`.
pub fn compose(n: &ChoiMatrix, m: &ChoiMatrix) -> Result<ChoiMatrix> {
    let linked = link_product(n.op.as_operator(), m.op.as_operator())?;
    let shared: Vec<&String> = m.outputs.iter().filter(|o| n.inputs.contains(o)).collect();
    let inputs: Vec<String> = m
        .inputs
        .iter()
        .chain(n.inputs.iter().filter(|i| !shared.contains(i)))
        .cloned()
        .collect();
    let outputs: Vec<String> = n
        .outputs
        .iter()
        .chain(m.outputs.iter().filter(|o| !shared.contains(o)))
        .cloned()
        .collect();
    ChoiMatrix::new(HermitianOperator::symmetrized(linked), inputs, outputs)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct NsReport {
    pub min_eigenvalue: f64,
    /// max |tr_{AO BO} N − 1_{AI BI}|
    pub trace_preservation: f64,
    /// max |tr_AO N − 1_AI/d_AI ⊗ tr_{AO AI} N|
    pub alice_marginal: f64,
    /// max |tr_BO N − 1_BI/d_BI ⊗ tr_{BO BI} N|
    pub bob_marginal: f64,
    pub nonsignalling: bool,
}

impl NsReport {
    pub fn max_residual(&self) -> f64 {
        self.trace_preservation
            .max(self.alice_marginal)
            .max(self.bob_marginal)
            .max(-self.min_eigenvalue)
    }
}

pub(crate) fn require_party_labels(x: &LabelledOperator) -> Result<()> {
    let mut names = x.label_names();
    names.sort_unstable();
    if names != [AI, AO, BI, BO] {
        return Err(Error::DimensionMismatch(format!(
            "expected labels {{AI, AO, BI, BO}}, got {:?}",
            x.label_names()
        )));
    }
    Ok(())
}

/// Linear part of the non-signalling conditions (no positivity).
pub fn ns_residuals(n: &LabelledOperator) -> Result<(f64, f64, f64)> {
    require_party_labels(n)?;
    let red = partial_trace(n, &[AO, BO])?;
    let tp = red.max_abs_diff(&LabelledOperator::identity(red.labels().to_vec())?)?;
    let ta = partial_trace(n, &[AO])?;
    let a = ta.max_abs_diff(&trace_and_replace(&ta, &[AI])?)?;
    let tb = partial_trace(n, &[BO])?;
    let b = tb.max_abs_diff(&trace_and_replace(&tb, &[BI])?)?;
    Ok((tp, a, b))
}

/// Checks that N on {AI, AO, BI, BO} is the Choi matrix of a non-signalling
/// channel AI ⊗ BI → AO ⊗ BO.
pub fn is_nonsignalling(n: &HermitianOperator, tol: f64) -> Result<NsReport> {
    let (tp, a, b) = ns_residuals(n.as_operator())?;
    let min = n.min_eigenvalue()?;
    Ok(NsReport {
        min_eigenvalue: min,
        trace_preservation: tp,
        alice_marginal: a,
        bob_marginal: b,
        nonsignalling: tp <= tol && a <= tol && b <= tol && min >= -tol,
    })
}

/// One tooth of a comb: input and output system names; `None` marks a
/// trivial (dimension one) system.
#[derive(Clone, Debug, PartialEq)]
pub struct Tooth {
    pub input: Option<String>,
    pub output: Option<String>,
}

impl Tooth {
    pub fn new(input: Option<&str>, output: Option<&str>) -> Self {
        Self {
            input: input.map(str::to_string),
            output: output.map(str::to_string),
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct CombReport {
    pub min_eigenvalue: f64,
    /// residual of tr_{X_{2k−1}} R^(k) = 1_{X_{2k−2}} ⊗ R^(k−1), last tooth first
    pub levels: Vec<f64>,
    /// |R^(0) − 1|
    pub normalization: f64,
    pub is_comb: bool,
}

/// Checks the recursive comb conditions for the given tooth structure.
pub fn is_comb(c: &HermitianOperator, teeth: &[Tooth], tol: f64) -> Result<CombReport> {
    let mut names: Vec<&str> = teeth
        .iter()
        .flat_map(|t| [t.input.as_deref(), t.output.as_deref()])
        .flatten()
        .collect();
    names.sort_unstable();
    let mut have = c.as_operator().label_names();
    have.sort_unstable();
    if names != have {
        return Err(Error::DimensionMismatch(format!(
            "teeth {names:?} do not match labels {have:?}"
        )));
    }
    let mut r = c.as_operator().clone();
    let mut levels = Vec::with_capacity(teeth.len());
    for tooth in teeth.iter().rev() {
        let t = match &tooth.output {
            Some(o) => partial_trace(&r, &[o.as_str()])?,
            None => r.clone(),
        };
        let (next, rebuilt) = match &tooth.input {
            Some(i) => {
                let d = t.dim_of(i).unwrap_or(1) as f64;
                let next = partial_trace(&t, &[i.as_str()])?.scale(1.0 / d);
                let rebuilt = embed(&next, t.labels())?;
                (next, rebuilt)
            }
            None => (t.clone(), t.clone()),
        };
        levels.push(t.max_abs_diff(&rebuilt)?);
        r = next;
    }
    let normalization = (r.data()[(0, 0)] - C64::new(1.0, 0.0)).norm();
    let min = c.min_eigenvalue()?;
    let is_comb = min >= -tol && normalization <= tol && levels.iter().all(|&v| v <= tol);
    Ok(CombReport {
        min_eigenvalue: min,
        levels,
        normalization,
        is_comb,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comb {
    op: HermitianOperator,
    teeth: Vec<Tooth>,
}

impl Comb {
    pub fn new(op: HermitianOperator, teeth: Vec<Tooth>, tol: f64) -> Result<Self> {
        let rep = is_comb(&op, &teeth, tol)?;
        if !rep.is_comb {
            return Err(Error::Precondition(format!(
                "not a comb: level residuals {:?}, normalization {:.3e}, min eigenvalue {:.3e}",
                rep.levels, rep.normalization, rep.min_eigenvalue
            )));
        }
        Ok(Self { op, teeth })
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn teeth(&self) -> &[Tooth] {
        &self.teeth
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instrument {
    pub elements: Vec<ChoiMatrix>,
}

/// Every element PSD and the sum trace preserving.
pub fn validate_instrument(elements: &[ChoiMatrix], tol: f64) -> bool {
    let Some(first) = elements.first() else {
        return false;
    };
    let mut sum = first.op().clone();
    for e in &elements[1..] {
        if e.inputs() != first.inputs() || e.outputs() != first.outputs() {
            return false;
        }
        match e.op().permute(&first.op().as_operator().label_names()) {
            Ok(p) => match sum.add(&p) {
                Ok(s) => sum = s,
                Err(_) => return false,
            },
            Err(_) => return false,
        }
    }
    for e in elements {
        match e.op().min_eigenvalue() {
            Ok(v) if v >= -tol => {}
            _ => return false,
        }
    }
    match ChoiMatrix::new(sum, first.inputs.clone(), first.outputs.clone()) {
        Ok(total) => total
            .trace_preservation_residual()
            .map(|r| r <= tol)
            .unwrap_or(false),
        Err(_) => false,
    }
}

impl Instrument {
    pub fn new(elements: Vec<ChoiMatrix>, tol: f64) -> Result<Self> {
        if !validate_instrument(&elements, tol) {
            return Err(Error::Precondition(
                "elements do not form an instrument".into(),
            ));
        }
        Ok(Self { elements })
    }
}

/// Tester: PSD elements summing to a comb whose first input and last output
/// are trivial.
#[derive(Clone, Debug, PartialEq)]
pub struct Tester {
    pub elements: Vec<HermitianOperator>,
    pub comb: Comb,
}

impl Tester {
    pub fn new(elements: Vec<HermitianOperator>, teeth: Vec<Tooth>, tol: f64) -> Result<Self> {
        let (Some(first), Some(last)) = (teeth.first(), teeth.last()) else {
            return Err(Error::Precondition(
                "tester needs at least one tooth".into(),
            ));
        };
        if first.input.is_some() || last.output.is_some() {
            return Err(Error::Precondition(
                "tester combs start with a trivial input and end with a trivial output".into(),
            ));
        }
        let mut sum = elements
            .first()
            .cloned()
            .ok_or_else(|| Error::Precondition("empty tester".into()))?;
        for e in &elements[1..] {
            sum = sum.add(e)?;
        }
        for e in &elements {
            let v = e.min_eigenvalue()?;
            if v < -tol {
                return Err(Error::NegativeEigenvalue(v));
            }
        }
        Ok(Self {
            elements,
            comb: Comb::new(sum, teeth, tol)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::tensor::{permute_systems, tensor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn l(name: &str, d: usize) -> Vec<SystemLabel> {
        vec![SystemLabel::new(name, d)]
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn identity_channel_choi() {
        let c = choi_of_unitary(&CMatrix::identity(2, 2), l("X", 2), l("Y", 2)).unwrap();
        let mut expect = CMatrix::zeros(4, 4);
        for &(i, j) in &[(0, 0), (0, 3), (3, 0), (3, 3)] {
            expect[(i, j)] = C64::new(1.0, 0.0);
        }
        assert_eq!(c.op().data(), &expect);
        assert!(c.is_channel(1e-12).unwrap());
    }

    #[test]
    fn depolarizing_choi_is_half_identity() {
        let c = depolarizing_choi(l("X", 2), l("Y", 2)).unwrap();
        assert!(max_abs(&(c.op().data() - CMatrix::identity(4, 4).scale(0.5))) < 1e-15);
        // matches the generic map construction
        let m = choi_of_map(
            |x| {
                CMatrix::identity(2, 2).scale(x.trace().re * 0.5)
                    + CMatrix::identity(2, 2) * C64::new(0.0, x.trace().im * 0.5)
            },
            l("X", 2),
            l("Y", 2),
        )
        .unwrap();
        assert!(max_abs(&(m.data() - c.op().data())) < 1e-15);
    }

    #[test]
    fn unitary_choi_matches_generic_map() {
        let mut r = rng(30);
        let u = random::unitary(3, &mut r);
        let a = choi_of_unitary(&u, l("X", 3), l("Y", 3)).unwrap();
        let b = choi_of_map(|x| &u * x * u.adjoint(), l("X", 3), l("Y", 3)).unwrap();
        assert!(max_abs(&(a.op().data() - b.data())) < 1e-13);
    }

    #[test]
    fn link_with_identity_is_neutral() {
        let mut r = rng(31);
        let ks = random::channel_kraus(2, 3, 2, &mut r);
        let phi = choi_of_kraus(&ks, l("X", 2), l("Y", 3)).unwrap();
        let id = choi_of_unitary(&CMatrix::identity(3, 3), l("Y", 3), l("Z", 3)).unwrap();
        let out = compose(&id, &phi).unwrap();
        // relabel Y → Z on the original
        let renamed = LabelledOperator::new(
            vec![SystemLabel::new("Z", 3), SystemLabel::new("X", 2)],
            phi.op().data().clone(),
        )
        .unwrap();
        let got = permute_systems(out.op().as_operator(), &["Z", "X"]).unwrap();
        assert!(got.max_abs_diff(&renamed).unwrap() < 1e-13);
    }

    #[test]
    fn link_of_unitaries_composes() {
        let mut r = rng(32);
        let u = random::unitary(2, &mut r);
        let v = random::unitary(2, &mut r);
        let cu = choi_of_unitary(&u, l("X", 2), l("Y", 2)).unwrap();
        let cv = choi_of_unitary(&v, l("Y", 2), l("Z", 2)).unwrap();
        let cvu = choi_of_unitary(&(&v * &u), l("X", 2), l("Z", 2)).unwrap();
        let out = compose(&cv, &cu).unwrap();
        let got = permute_systems(out.op().as_operator(), &["Z", "X"]).unwrap();
        assert!(got.max_abs_diff(cvu.op().as_operator()).unwrap() < 1e-12);
    }

    #[test]
    fn link_with_state_applies_channel() {
        let mut r = rng(33);
        let rho = LabelledOperator::new(l("X", 3), random::state(3, &mut r)).unwrap();
        // measurement in the computational basis, written to register R
        let kraus: Vec<CMatrix> = (0..3)
            .map(|k| {
                let mut m = CMatrix::zeros(3, 3);
                m[(k, k)] = C64::new(1.0, 0.0);
                m
            })
            .collect();
        let meas = choi_of_kraus(&kraus, l("X", 3), l("R", 3)).unwrap();
        let linked = link_product(meas.op().as_operator(), &rho).unwrap();
        let direct = meas.apply(&rho).unwrap();
        assert!(linked.max_abs_diff(&direct).unwrap() < 1e-13);
        for k in 0..3 {
            assert!((direct.data()[(k, k)] - rho.data()[(k, k)]).norm() < 1e-13);
        }
    }

    #[test]
    fn link_is_commutative_up_to_order() {
        let mut r = rng(34);
        let a = LabelledOperator::new(
            vec![SystemLabel::new("X", 2), SystemLabel::new("Y", 3)],
            random::hermitian(6, &mut r),
        )
        .unwrap();
        let b = LabelledOperator::new(
            vec![SystemLabel::new("Y", 3), SystemLabel::new("Z", 2)],
            random::hermitian(6, &mut r),
        )
        .unwrap();
        let ab = link_product(&a, &b).unwrap();
        let ba = permute_systems(&link_product(&b, &a).unwrap(), &["X", "Z"]).unwrap();
        assert!(ab.max_abs_diff(&ba).unwrap() < 1e-12);
    }

    #[test]
    fn channel_composition_matches_kraus_product() {
        let mut r = rng(35);
        for _ in 0..5 {
            let k1 = random::channel_kraus(2, 2, 2, &mut r);
            let k2 = random::channel_kraus(2, 2, 3, &mut r);
            let c1 = choi_of_kraus(&k1, l("X", 2), l("Y", 2)).unwrap();
            let c2 = choi_of_kraus(&k2, l("Y", 2), l("Z", 2)).unwrap();
            let prod: Vec<CMatrix> = k2
                .iter()
                .flat_map(|b| k1.iter().map(move |a| b * a))
                .collect();
            let direct = choi_of_kraus(&prod, l("X", 2), l("Z", 2)).unwrap();
            let linked = compose(&c2, &c1).unwrap();
            let got = permute_systems(linked.op().as_operator(), &["Z", "X"]).unwrap();
            assert!(got.max_abs_diff(direct.op().as_operator()).unwrap() < 1e-10);
        }
    }

    fn product_ns(r: &mut ChaCha8Rng) -> HermitianOperator {
        let ka = random::channel_kraus(2, 2, 2, r);
        let kb = random::channel_kraus(2, 2, 2, r);
        let a = choi_of_kraus(&ka, l(AI, 2), l(AO, 2)).unwrap();
        let b = choi_of_kraus(&kb, l(BI, 2), l(BO, 2)).unwrap();
        let t = tensor(a.op().as_operator(), b.op().as_operator()).unwrap();
        HermitianOperator::symmetrized(permute_systems(&t, &[AI, AO, BI, BO]).unwrap())
    }

    #[test]
    fn product_channels_are_nonsignalling() {
        let mut r = rng(36);
        for _ in 0..5 {
            let n = product_ns(&mut r);
            let rep = is_nonsignalling(&n, 1e-10).unwrap();
            assert!(rep.nonsignalling, "{rep:?}");
        }
    }

    #[test]
    fn swap_channel_signals() {
        // SWAP: AI → BO and BI → AO
        let mut swap = CMatrix::zeros(4, 4);
        for a in 0..2 {
            for b in 0..2 {
                // input |a⟩_AI |b⟩_BI  ↦  output |b⟩_AO |a⟩_BO
                swap[(b * 2 + a, a * 2 + b)] = C64::new(1.0, 0.0);
            }
        }
        let inputs = vec![SystemLabel::new(AI, 2), SystemLabel::new(BI, 2)];
        let outputs = vec![SystemLabel::new(AO, 2), SystemLabel::new(BO, 2)];
        let c = choi_of_unitary(&swap, inputs, outputs).unwrap();
        let n = c.op().permute(&[AI, AO, BI, BO]).unwrap();
        let rep = is_nonsignalling(&n, 1e-8).unwrap();
        assert!(!rep.nonsignalling);
        assert!(rep.trace_preservation < 1e-12);
        assert!(rep.alice_marginal > 0.1 && rep.bob_marginal > 0.1);
    }

    #[test]
    fn normalized_identity_is_nonsignalling() {
        let labels: Vec<SystemLabel> = [AI, AO, BI, BO]
            .iter()
            .map(|n| SystemLabel::new(*n, 2))
            .collect();
        // depolarizing product: 1 / (d_AO d_BO)
        let n = HermitianOperator::identity(labels).unwrap().scale(0.25);
        assert!(is_nonsignalling(&n, 1e-12).unwrap().nonsignalling);
    }

    #[test]
    fn comb_examples() {
        let mut r = rng(37);
        let ks = random::channel_kraus(2, 3, 2, &mut r);
        let c = choi_of_kraus(&ks, l("X0", 2), l("X1", 3)).unwrap();
        let teeth1 = vec![Tooth::new(Some("X0"), Some("X1"))];
        assert!(is_comb(c.op(), &teeth1, 1e-10).unwrap().is_comb);

        let ks2 = random::channel_kraus(2, 2, 2, &mut r);
        let c2 = choi_of_kraus(&ks2, l("X2", 2), l("X3", 2)).unwrap();
        let t = HermitianOperator::symmetrized(
            tensor(c.op().as_operator(), c2.op().as_operator()).unwrap(),
        );
        let teeth2 = vec![
            Tooth::new(Some("X0"), Some("X1")),
            Tooth::new(Some("X2"), Some("X3")),
        ];
        let rep = is_comb(&t, &teeth2, 1e-10).unwrap();
        assert!(rep.is_comb, "{rep:?}");

        // generic PSD with the right trace fails
        let labels = t.labels().to_vec();
        let mut g = random::psd(24, 24, &mut r);
        let tr = g.trace().re;
        g = g.scale(4.0 / tr);
        let g = HermitianOperator::from_parts(labels, g).unwrap();
        let rep = is_comb(&g, &teeth2, 1e-8).unwrap();
        assert!(!rep.is_comb);
        assert!(rep.levels.iter().cloned().fold(0.0, f64::max) > 1e-4);
    }

    #[test]
    fn instrument_examples() {
        let mut r = rng(38);
        let ks = random::channel_kraus(2, 2, 2, &mut r);
        let c = choi_of_kraus(&ks, l("X", 2), l("Y", 2)).unwrap();
        assert!(validate_instrument(std::slice::from_ref(&c), 1e-10));

        // measure-and-prepare: outcome k prepares σ_k
        let s0 = random::state(2, &mut r);
        let s1 = random::state(2, &mut r);
        let mk = |k: usize, s: &CMatrix| {
            let mut p = CMatrix::zeros(2, 2);
            p[(k, k)] = C64::new(1.0, 0.0);
            // Choi of ρ ↦ ⟨k|ρ|k⟩ σ is σ ⊗ |k⟩⟨k|ᵀ
            let op = s.kronecker(&p);
            ChoiMatrix::new(
                HermitianOperator::from_parts(
                    vec![SystemLabel::new("Y", 2), SystemLabel::new("X", 2)],
                    op,
                )
                .unwrap(),
                vec!["X".into()],
                vec!["Y".into()],
            )
            .unwrap()
        };
        let inst = vec![mk(0, &s0), mk(1, &s1)];
        assert!(validate_instrument(&inst, 1e-10));

        let double =
            ChoiMatrix::new(c.op().scale(2.0), vec!["X".into()], vec!["Y".into()]).unwrap();
        assert!(!validate_instrument(&[double], 1e-8));
    }

    #[test]
    fn tester_from_state_and_measurement() {
        let mut r = rng(39);
        // single-tooth tester: prepare ρ on X1, measure X2 ... here a state
        // preparation followed by a POVM on the returned system
        let rho = random::state(2, &mut r);
        let e0 = random::psd(2, 2, &mut r);
        let norm = crate::tensor::hermitian_eig(&e0).unwrap().values[1] * 1.5;
        let e0 = e0.unscale(norm);
        let e1 = CMatrix::identity(2, 2) - &e0;
        let labels = vec![SystemLabel::new("X1", 2), SystemLabel::new("X2", 2)];
        let el =
            |e: &CMatrix| HermitianOperator::from_parts(labels.clone(), rho.kronecker(e)).unwrap();
        let teeth = vec![Tooth::new(None, Some("X1")), Tooth::new(Some("X2"), None)];
        let t = Tester::new(vec![el(&e0), el(&e1)], teeth, 1e-10);
        assert!(t.is_ok(), "{t:?}");
        assert!(crate::tensor::hermitian_eig(&e1).unwrap().values[0] > 0.0);
    }
}
