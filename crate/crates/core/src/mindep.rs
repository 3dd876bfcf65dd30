//! Mutual independence of bipartite states.
//!
//! A state has exact mutual independence in its key systems when the key
//! part is exactly product with the purifying reference `R` while still being
//! correlated. This module checks that condition, extracts the twisting
//! isometry that brings such a state to the normal form `psi_ABC ⊗ rho_D`,
//! builds private states, and assembles lower and upper bounds for general
//! inputs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{coherent_info, entropy, mutual_info};
use crate::error::{Error, Result};
use crate::measures::{esq_upper, rel_ent_ppt, Cut, PptOptions};
use crate::states;
use crate::tensor::io::MatrixFile;
use crate::tensor::linalg::{self, c, cr, CMat, CVec, RANK_CUTOFF};
use crate::tensor::{Isometry, MultipartiteState, RngSeed, Subsystem};

/// Trace-norm tolerance for "key part is product with `R`".
pub const EXACT_MI_TOL: f64 = 1e-8;
/// Minimum `I(A:B)` for the key part to count as correlated.
pub const CORRELATION_TOL: f64 = 1e-8;
/// Required accuracy of the twisting reconstruction.
pub const TWIST_TOL: f64 = 1e-7;
/// Trace-norm feasibility tolerance for single-copy splits.
pub const SPLIT_TOL: f64 = 1e-6;

/// Labels of the four factors produced by a [`SubsystemSplit`].
pub const SPLIT_LABELS: [&str; 4] = ["alpha", "a", "beta", "b"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactMiCheck {
    pub is_exact: bool,
    /// `||rho_KR - rho_K ⊗ rho_R||_1` for the key systems `K`.
    pub residual: f64,
    /// `I(A:B) / 2` of the key systems.
    pub mi_half: f64,
}

fn free_label(s: &MultipartiteState, base: &str) -> String {
    let mut l = base.to_string();
    while s.has_label(&l) {
        l.push('_');
    }
    l
}

/// Exact check on the conventional labels `A, B` (key) and `A', B'` (shields).
pub fn check_exact_mi(s: &MultipartiteState) -> Result<ExactMiCheck> {
    for l in ["A", "B", "A'", "B'"] {
        s.dim_of(l)?;
    }
    check_exact_mi_on(s, &Cut::new(&["A"], &["B"]))
}

/// Exact check with arbitrary key labels; every other label is a shield.
pub fn check_exact_mi_on(s: &MultipartiteState, key: &Cut) -> Result<ExactMiCheck> {
    let keys: Vec<&str> = key.a_refs().into_iter().chain(key.b_refs()).collect();
    if key.a.is_empty() || key.b.is_empty() {
        return Err(Error::InvalidArgument("both key sides need at least one label".into()));
    }
    for (i, l) in keys.iter().enumerate() {
        s.dim_of(l)?;
        if keys[..i].contains(l) {
            return Err(Error::InvalidArgument(format!("label {l} on both key sides")));
        }
    }
    let r = free_label(s, "R");
    let psi = s.purify(&r)?;
    let mut keep = keys.clone();
    keep.push(&r);
    let rho_kr = psi.partial_trace(&keep)?;
    let prod = psi
        .partial_trace(&keys)?
        .tensor(&psi.partial_trace(&[r.as_str()])?)?;
    let residual = linalg::trace_norm(&(rho_kr.matrix() - prod.matrix()));
    let mi = mutual_info(&psi, &key.a_refs(), &key.b_refs())?;
    Ok(ExactMiCheck {
        is_exact: residual <= EXACT_MI_TOL && mi > CORRELATION_TOL,
        residual,
        mi_half: 0.5 * mi,
    })
}

/// Output of [`extract_twisting`].
#[derive(Clone, Debug)]
pub struct Twisting {
    /// Isometry from the shield systems onto `C ⊗ D`.
    pub u: Isometry,
    /// Purification of the key part on `keys ⊗ C`.
    pub psi_abc: MultipartiteState,
    pub rho_d: MultipartiteState,
    /// Trace distance between the twisted input and `psi_abc ⊗ rho_d`.
    pub reconstruction_error: f64,
    /// Exact-MI residual of the input.
    pub residual: f64,
}

/// Twisting for the conventional labels `A, B, A', B'`.
pub fn extract_twisting(s: &MultipartiteState) -> Result<Twisting> {
    for l in ["A", "B", "A'", "B'"] {
        s.dim_of(l)?;
    }
    extract_twisting_on(s, &Cut::new(&["A"], &["B"]))
}

/// Orthonormal completion of `vecs` to `n` vectors by Gram-Schmidt on the standard basis.
fn complete_basis(vecs: &mut Vec<CVec>, n: usize) {
    for j in 0..n {
        if vecs.len() >= n {
            break;
        }
        let mut v = CVec::zeros(n);
        v[j] = cr(1.0);
        for _ in 0..2 {
            for u in vecs.iter() {
                let p = u.dotc(&v);
                v -= u * p;
            }
        }
        let nv = v.norm();
        if nv > 1e-6 {
            vecs.push(v / cr(nv));
        }
    }
}

/// Embed the last subsystem of a pure state into a larger dimension.
fn pad_last(psi: &MultipartiteState, dim: usize) -> Result<MultipartiteState> {
    let v = psi.vector().expect("pure");
    let mut dims = psi.subsystems().to_vec();
    let last = dims.last_mut().expect("at least one subsystem");
    let old = last.dim;
    if dim == old {
        return Ok(psi.clone());
    }
    last.dim = dim;
    let head = v.len() / old;
    let mut out = CVec::zeros(head * dim);
    for h in 0..head {
        for k in 0..old {
            out[h * dim + k] = v[h * old + k];
        }
    }
    MultipartiteState::pure(out, dims)
}

/// Isometry `U` on the shields with `(1 ⊗ U) rho (1 ⊗ U)† = psi_ABC ⊗ rho_D`.
///
/// Both `psi ⊗ phi_RD` and the purification of the input purify `rho_KR`;
/// `U` is the polar part of `M† N` for their coefficient matrices across the
/// `KR : rest` cut, completed to a full isometry. `D` is padded so that the
/// output space is at least as large as the shields.
pub fn extract_twisting_on(s: &MultipartiteState, key: &Cut) -> Result<Twisting> {
    let check = check_exact_mi_on(s, key)?;
    if check.residual > EXACT_MI_TOL {
        return Err(Error::Precondition(format!(
            "key part is not product with the reference: residual {:.3e} > {EXACT_MI_TOL:e}",
            check.residual
        )));
    }
    let keys: Vec<&str> = key.a_refs().into_iter().chain(key.b_refs()).collect();
    let shields: Vec<&str> = s.labels().into_iter().filter(|l| !keys.contains(l)).collect();
    if shields.is_empty() {
        return Err(Error::Precondition("state has no shield subsystems".into()));
    }
    let order: Vec<&str> = keys.iter().chain(&shields).copied().collect();
    let sp = s.permute(&order)?;
    let r = free_label(&sp, "R");
    let cl = free_label(&sp, "C");
    let dl = free_label(&sp, "D");
    let psi = sp.purify(&r)?;
    let mut rows = keys.clone();
    rows.push(&r);
    let m_mat = psi.coefficient_matrix(&rows)?;
    let m = m_mat.ncols();

    let psi_abc = psi.partial_trace(&keys)?.purify(&cl)?;
    let dc = psi_abc.dim_of(&cl)?;
    let phi = psi.partial_trace(&[r.as_str()])?.purify(&dl)?;
    let dd = phi.dim_of(&dl)?.max(m.div_ceil(dc));
    let phi = pad_last(&phi, dd)?;
    let mut target_order = keys.clone();
    target_order.extend([r.as_str(), cl.as_str(), dl.as_str()]);
    let target = psi_abc.tensor(&phi)?.permute(&target_order)?;
    let n_mat = target.coefficient_matrix(&rows)?;
    let k = dc * dd;

    let svd = (m_mat.adjoint() * &n_mat).svd(true, true);
    let su = svd.u.expect("requested");
    let svt = svd.v_t.expect("requested");
    let mut ins: Vec<CVec> = Vec::new();
    let mut outs: Vec<CVec> = Vec::new();
    for (i, &sv) in svd.singular_values.iter().enumerate() {
        if sv > RANK_CUTOFF {
            ins.push(su.column(i).map(|z| z.conj()));
            outs.push(svt.row(i).transpose());
        }
    }
    complete_basis(&mut ins, m);
    complete_basis(&mut outs, k);
    let mut umat = CMat::zeros(k, m);
    for (o, i) in outs.iter().zip(&ins) {
        umat += o * i.adjoint();
    }
    let in_dims: Vec<Subsystem> = sp.subsystems()[keys.len()..].to_vec();
    let u = Isometry::new(
        umat,
        in_dims,
        vec![Subsystem::new(&cl, dc), Subsystem::new(&dl, dd)],
    )?;
    let rho_d = phi.partial_trace(&[dl.as_str()])?;
    let twisted = sp.apply_isometry(&u)?;
    let normal = psi_abc.tensor(&rho_d)?;
    let reconstruction_error = linalg::trace_distance(&twisted.matrix(), &normal.matrix());
    Ok(Twisting {
        u,
        psi_abc,
        rho_d,
        reconstruction_error,
        residual: check.residual,
    })
}

/// Block-diagonal `sum_i |i><i|_C ⊗ U_i`.
pub fn controlled_twist(unitaries: &[CMat]) -> Result<CMat> {
    let dd = unitaries
        .first()
        .map(|u| u.nrows())
        .ok_or_else(|| Error::InvalidArgument("need at least one block".into()))?;
    let n = dd * unitaries.len();
    let mut out = CMat::zeros(n, n);
    for (i, u) in unitaries.iter().enumerate() {
        if u.nrows() != dd || u.ncols() != dd {
            return Err(Error::DimensionMismatch(format!(
                "block {i} is {}x{}, expected {dd}x{dd}",
                u.nrows(),
                u.ncols()
            )));
        }
        out.view_mut((i * dd, i * dd), (dd, dd)).copy_from(u);
    }
    Ok(out)
}

/// `psi_ABC ⊗ rho_D` with the inverse twist applied on `C ⊗ D`.
///
/// `key` is a pure state on three subsystems (Alice's key, Bob's key, `C`)
/// and `noise` a one-subsystem state `D`. The output has labels
/// `A, B, A', B'`; the shields default to `A' = C`, `B' = D` and may be
/// regrouped with `shield_dims`. By construction `twist` is the twisting
/// unitary of the result.
pub fn plant_exact_mi(
    key: &MultipartiteState,
    noise: &MultipartiteState,
    twist: Option<&CMat>,
    shield_dims: Option<(usize, usize)>,
) -> Result<MultipartiteState> {
    let kd = key.local_dims();
    if kd.len() != 3 || noise.subsystems().len() != 1 {
        return Err(Error::InvalidArgument(
            "key needs three subsystems and noise exactly one".into(),
        ));
    }
    let key = key.regroup(vec![
        Subsystem::new("A", kd[0]),
        Subsystem::new("B", kd[1]),
        Subsystem::new("C", kd[2]),
    ])?;
    let dd = noise.total_dim();
    let noise = noise.regroup(vec![Subsystem::new("D", dd)])?;
    let mut st = key.tensor(&noise)?;
    let n = kd[2] * dd;
    if let Some(t) = twist {
        if t.nrows() != n || t.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "twist must act on C ⊗ D of dimension {n}, got {}x{}",
                t.nrows(),
                t.ncols()
            )));
        }
        let inv = Isometry::unitary(
            t.adjoint(),
            vec![Subsystem::new("C", kd[2]), Subsystem::new("D", dd)],
        )?;
        st = st.apply_isometry(&inv)?;
    }
    let (sa, sb) = shield_dims.unwrap_or((kd[2], dd));
    if sa * sb != n {
        return Err(Error::DimensionMismatch(format!(
            "shield dims {sa}x{sb} do not multiply to {n}"
        )));
    }
    st.to_density().regroup(vec![
        Subsystem::new("A", kd[0]),
        Subsystem::new("B", kd[1]),
        Subsystem::new("A'", sa),
        Subsystem::new("B'", sb),
    ])
}

/// Private dit: GHZ key on `A, B, C` (`C` becomes `A'`), noise on `B'`, inverse twist.
///
/// Without noise, `B'` is one-dimensional.
pub fn make_pdit(
    d: usize,
    twist: Option<&CMat>,
    noise: Option<&MultipartiteState>,
) -> Result<MultipartiteState> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("key dimension must be at least 2, got {d}")));
    }
    let key = states::ghz(&["A", "B", "C"], d);
    let trivial = MultipartiteState::basis("D", 1, 0);
    plant_exact_mi(&key, noise.unwrap_or(&trivial), twist, None)
}

pub fn make_pbit(twist: Option<&CMat>, noise: Option<&MultipartiteState>) -> Result<MultipartiteState> {
    make_pdit(2, twist, noise)
}

/// `Phi+_AB ⊗ |0>_C` as a key state for [`plant_exact_mi`].
pub fn ebit_key() -> MultipartiteState {
    let c = MultipartiteState::pure(CVec::from_element(1, cr(1.0)), vec![Subsystem::new("C", 1)])
        .expect("normalized");
    states::max_entangled_vector("A", "B", 2).tensor(&c).expect("disjoint labels")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HashingBound {
    /// `max(0, I(A>B)) / 2`.
    pub value: f64,
    /// `I(A>B) = S(B) - S(AB)`.
    pub coherent_info: f64,
    /// `I(A:B) - I(A:R)` of the doubly dephased purification.
    pub audit: f64,
}

/// Does the two-label state have the `sum a_ij |ii><jj|` structure (within 1e-10)?
pub fn is_maximally_correlated(s: &MultipartiteState) -> bool {
    let d = s.local_dims();
    if d.len() != 2 || d[0] != d[1] {
        return false;
    }
    let d = d[0];
    let m = s.matrix();
    for i in 0..d * d {
        for j in 0..d * d {
            let diag_pair = i / d == i % d && j / d == j % d;
            if !diag_pair && m[(i, j)].norm() > 1e-10 {
                return false;
            }
        }
    }
    true
}

/// Hashing lower bound `I(A>B)/2` for maximally correlated states, with the
/// key-rate audit `I(A:B) - I(A:R)` computed on the ccq state.
pub fn maxcorr_hashing_bound(s: &MultipartiteState) -> Result<HashingBound> {
    let cut = Cut::of_pair(s)?;
    if !is_maximally_correlated(s) {
        return Err(Error::Precondition(
            "input is not maximally correlated within 1e-10".into(),
        ));
    }
    let (a, b) = (cut.a_refs(), cut.b_refs());
    let ci = coherent_info(s, &a, &b)?;
    let r = free_label(s, "R");
    let ccq = s.purify(&r)?.to_density().dephase(&[a[0], b[0]])?;
    let audit = mutual_info(&ccq, &a, &b)? - mutual_info(&ccq, &a, &[r.as_str()])?;
    Ok(HashingBound {
        value: 0.5 * ci.max(0.0),
        coherent_info: ci,
        audit,
    })
}

/// Factor dimensions of a split: `dim A = alpha * a`, `dim B = beta * b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitDims {
    pub alpha: usize,
    pub beta: usize,
}

/// Local unitaries followed by the factorizations `A -> alpha ⊗ a`,
/// `B -> beta ⊗ b` (`alpha` and `beta` first).
///
/// Alice's side may consist of several labels; they are merged in the order
/// given by `cut.a` (likewise for Bob).
#[derive(Clone, Debug, PartialEq)]
pub struct SubsystemSplit {
    pub cut: Cut,
    pub u_a: CMat,
    pub u_b: CMat,
    pub dims: [usize; 4],
}

/// JSON form of a [`SubsystemSplit`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFile {
    pub alice: Vec<String>,
    pub bob: Vec<String>,
    /// `alpha, a, beta, b` with their dimensions.
    pub dims: Vec<Subsystem>,
    #[serde(rename = "U_A")]
    pub u_a: MatrixFile,
    #[serde(rename = "U_B")]
    pub u_b: MatrixFile,
}

fn is_unitary(u: &CMat) -> bool {
    u.is_square() && linalg::max_abs(&(u.adjoint() * u - CMat::identity(u.nrows(), u.nrows()))) <= 1e-10
}

impl SubsystemSplit {
    pub fn new(cut: Cut, u_a: CMat, u_b: CMat, split: SplitDims) -> Result<Self> {
        if !is_unitary(&u_a) || !is_unitary(&u_b) {
            return Err(Error::invariant("unitarity", "split unitaries must satisfy U†U = 1 within 1e-10"));
        }
        let (da, db) = (u_a.nrows(), u_b.nrows());
        if split.alpha == 0 || split.beta == 0 || da % split.alpha != 0 || db % split.beta != 0 {
            return Err(Error::invariant(
                "declared dims multiply to local dims",
                format!(
                    "alpha={} must divide {da} and beta={} must divide {db}",
                    split.alpha, split.beta
                ),
            ));
        }
        Ok(SubsystemSplit {
            cut,
            u_a,
            u_b,
            dims: [split.alpha, da / split.alpha, split.beta, db / split.beta],
        })
    }

    /// The split with identity unitaries.
    pub fn identity(s: &MultipartiteState, cut: Cut, split: SplitDims) -> Result<Self> {
        cut.check(s)?;
        let da = cut.a_refs().iter().map(|l| s.dim_of(l)).product::<Result<usize>>()?;
        let db = cut.b_refs().iter().map(|l| s.dim_of(l)).product::<Result<usize>>()?;
        Self::new(cut, CMat::identity(da, da), CMat::identity(db, db), split)
    }

    pub fn alpha_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn beta_dim(&self) -> usize {
        self.dims[2]
    }

    fn labels(&self) -> Vec<Subsystem> {
        SPLIT_LABELS
            .iter()
            .zip(self.dims)
            .map(|(l, d)| Subsystem::new(*l, d))
            .collect()
    }

    /// The state on `alpha, a, beta, b`.
    pub fn apply(&self, s: &MultipartiteState) -> Result<MultipartiteState> {
        self.cut.check(s)?;
        let order: Vec<&str> = self.cut.a_refs().into_iter().chain(self.cut.b_refs()).collect();
        let p = s.permute(&order)?;
        let da: usize = self.cut.a_refs().iter().map(|l| s.dim_of(l)).product::<Result<usize>>()?;
        if da != self.u_a.nrows() || p.total_dim() != da * self.u_b.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "split unitaries {}x{} do not match local dims of the state",
                self.u_a.nrows(),
                self.u_b.nrows()
            )));
        }
        let w = self.u_a.kronecker(&self.u_b);
        match p.vector() {
            Some(v) => MultipartiteState::pure(&w * v, self.labels()),
            None => MultipartiteState::density_unchecked(&w * p.matrix() * w.adjoint(), self.labels()),
        }
    }

    /// Exact-MI check of `alpha:beta` against the purifier.
    pub fn check(&self, s: &MultipartiteState) -> Result<ExactMiCheck> {
        check_exact_mi_on(&self.apply(s)?, &Cut::new(&["alpha"], &["beta"]))
    }

    pub fn to_file(&self) -> SplitFile {
        SplitFile {
            alice: self.cut.a.clone(),
            bob: self.cut.b.clone(),
            dims: self.labels(),
            u_a: MatrixFile::from_matrix(&self.u_a),
            u_b: MatrixFile::from_matrix(&self.u_b),
        }
    }

    pub fn from_file(f: &SplitFile) -> Result<Self> {
        let names: Vec<&str> = f.dims.iter().map(|s| s.label.as_str()).collect();
        if names != SPLIT_LABELS {
            return Err(Error::Parse(format!(
                "field `dims`: expected labels {SPLIT_LABELS:?}, found {names:?}"
            )));
        }
        let alice: Vec<&str> = f.alice.iter().map(String::as_str).collect();
        let bob: Vec<&str> = f.bob.iter().map(String::as_str).collect();
        let split = Self::new(
            Cut::new(&alice, &bob),
            f.u_a.to_matrix()?,
            f.u_b.to_matrix()?,
            SplitDims {
                alpha: f.dims[0].dim,
                beta: f.dims[2].dim,
            },
        )?;
        if split.dims[1] != f.dims[1].dim || split.dims[3] != f.dims[3].dim {
            return Err(Error::invariant(
                "declared dims multiply to local dims",
                format!("dims {:?} do not factor the unitaries", f.dims),
            ));
        }
        Ok(split)
    }
}

/// Unitary `diag(e^{i delta}) * prod_{p<q} G_pq(theta, phi)` from `n^2` parameters.
///
/// Layout: `n(n-1)/2` angles, then `n(n-1)/2` phases, then `n` diagonal phases.
/// The zero vector maps to the identity.
pub fn givens_unitary(n: usize, params: &[f64]) -> CMat {
    assert_eq!(params.len(), n * n, "parameter vector must have n^2 entries");
    let pairs = n * (n - 1) / 2;
    let mut u = CMat::identity(n, n);
    let mut k = 0;
    for p in 0..n {
        for q in p + 1..n {
            let (s, co) = params[k].sin_cos();
            let ph = c(params[pairs + k].cos(), params[pairs + k].sin());
            // Left-multiply by the rotation on rows p, q.
            for col in 0..n {
                let up = u[(p, col)];
                let uq = u[(q, col)];
                u[(p, col)] = up * cr(co) - ph.conj() * uq * cr(s);
                u[(q, col)] = ph * up * cr(s) + uq * cr(co);
            }
            k += 1;
        }
    }
    for p in 0..n {
        let d = params[2 * pairs + p];
        let ph = c(d.cos(), d.sin());
        for col in 0..n {
            u[(p, col)] *= ph;
        }
    }
    u
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSearchOptions {
    pub seed: RngSeed,
    /// Random starts in addition to the identity start.
    pub restarts: usize,
    /// Initial penalty weight; start `k` uses `mu * 2^k`.
    pub mu: f64,
    /// Trace-norm feasibility tolerance.
    pub tol: f64,
    /// Objective evaluations per start.
    pub max_evals: usize,
}

impl Default for SplitSearchOptions {
    fn default() -> Self {
        SplitSearchOptions {
            seed: RngSeed(0),
            restarts: 3,
            mu: 10.0,
            tol: SPLIT_TOL,
            max_evals: 4000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SplitSearchOutcome {
    pub best: SubsystemSplit,
    /// `I(alpha:beta)/2` if the best split is feasible, else 0.
    pub lower_bound: f64,
    pub feasible: bool,
    pub mi_half: f64,
    /// `I(alpha beta : R)` at the reported split.
    pub residual_independence: f64,
    /// `||rho_{alpha beta R} - rho_{alpha beta} ⊗ rho_R||_1` at the reported split.
    pub residual_trace_norm: f64,
    pub evaluations: usize,
    /// Set when no feasible split was found.
    pub near_miss: Option<String>,
}

struct SplitObjective {
    rho: CMat,
    da: usize,
    db: usize,
    labels: Vec<Subsystem>,
    s_ab: f64,
}

impl SplitObjective {
    /// `(I(alpha:beta)/2, I(alpha beta:R))` using `S(R) = S(AB)`, `S(alpha beta R) = S(ab)`.
    fn eval(&self, x: &[f64]) -> (f64, f64) {
        let na = self.da * self.da;
        let w = givens_unitary(self.da, &x[..na]).kronecker(&givens_unitary(self.db, &x[na..]));
        let m = &w * &self.rho * w.adjoint();
        let st = MultipartiteState::density_unchecked(m, self.labels.clone()).expect("shape");
        let s = |l: &[&str]| entropy(&st, l).expect("labels exist");
        let sab = s(&["alpha", "beta"]);
        let half = 0.5 * (s(&["alpha"]) + s(&["beta"]) - sab);
        let resid = sab + self.s_ab - s(&["a", "b"]);
        (half, resid.max(0.0))
    }
}

struct StartResult {
    /// Points whose `I(alpha beta:R)` passed the cheap prefilter, best first.
    candidates: Vec<(f64, f64, Vec<f64>)>,
    best_x: Vec<f64>,
    best_obj: f64,
    best_half: f64,
    best_resid: f64,
    evals: usize,
}

// I(alpha beta:R) scales like the squared trace-norm residual.
const PREFILTER: f64 = 1e-12;
const MAX_CANDIDATES: usize = 6;

fn push_candidate(cands: &mut Vec<(f64, f64, Vec<f64>)>, half: f64, resid: f64, x: &[f64]) {
    if resid > PREFILTER {
        return;
    }
    if cands.iter().any(|(h, r, _)| (h - half).abs() < 1e-12 && *r <= resid) {
        return;
    }
    cands.push((half, resid, x.to_vec()));
    cands.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
    });
    cands.truncate(MAX_CANDIDATES);
}

/// Compass search maximizing `half - mu * resid`.
fn compass(obj: &SplitObjective, x0: Vec<f64>, mu: f64, max_evals: usize) -> StartResult {
    let mut x = x0;
    let (h, r) = obj.eval(&x);
    let mut fx = h - mu * r;
    let (mut best_half, mut best_resid) = (h, r);
    let mut candidates = Vec::new();
    push_candidate(&mut candidates, h, r, &x);
    let mut evals = 1;
    let mut step = 0.4;
    while step > 1e-8 && evals < max_evals {
        let mut improved = false;
        'coords: for i in 0..x.len() {
            for sign in [1.0, -1.0] {
                let old = x[i];
                x[i] = old + sign * step;
                let (h, r) = obj.eval(&x);
                evals += 1;
                push_candidate(&mut candidates, h, r, &x);
                let f = h - mu * r;
                if f > fx + 1e-15 {
                    fx = f;
                    best_half = h;
                    best_resid = r;
                    improved = true;
                    break 'coords;
                }
                x[i] = old;
                if evals >= max_evals {
                    break 'coords;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    StartResult {
        candidates,
        best_x: x,
        best_obj: fx,
        best_half,
        best_resid,
        evals,
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Single-copy lower bound on mutual independence by searching local splits.
///
/// Maximizes `I(alpha:beta)/2 - mu I(alpha beta:R)` over the two local
/// unitaries (Givens parameterization, compass search) from the identity and
/// `opts.restarts` seeded random starts. A split counts as feasible when
/// `||rho_{alpha beta R} - rho_{alpha beta} ⊗ rho_R||_1 <= opts.tol`; the best
/// feasible split wins (ties: smaller residual, then smaller parameters).
pub fn split_search_lower(
    s: &MultipartiteState,
    cut: &Cut,
    split: SplitDims,
    opts: &SplitSearchOptions,
) -> Result<SplitSearchOutcome> {
    let ident = SubsystemSplit::identity(s, cut.clone(), split)?;
    let (da, db) = (ident.u_a.nrows(), ident.u_b.nrows());
    let order: Vec<&str> = cut.a_refs().into_iter().chain(cut.b_refs()).collect();
    let rho = s.permute(&order)?.matrix();
    let obj = SplitObjective {
        rho,
        da,
        db,
        labels: ident.labels(),
        s_ab: crate::entropy::vn_entropy(s),
    };
    let np = da * da + db * db;
    let mut starts = vec![vec![0.0; np]];
    for k in 0..opts.restarts {
        use rand::Rng;
        let mut rng = opts.seed.derive(k as u64).rng();
        starts.push(
            (0..np)
                .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                .collect(),
        );
    }
    let results: Vec<StartResult> = starts
        .into_par_iter()
        .enumerate()
        .map(|(k, x0)| compass(&obj, x0, opts.mu * 2f64.powi(k as i32), opts.max_evals))
        .collect();
    let evaluations = results.iter().map(|r| r.evals).sum();

    let make = |x: &[f64]| -> Result<SubsystemSplit> {
        SubsystemSplit::new(
            cut.clone(),
            givens_unitary(da, &x[..da * da]),
            givens_unitary(db, &x[da * da..]),
            split,
        )
    };

    // Verify candidates in trace norm; keep the best feasible one.
    let mut pool: Vec<(f64, f64, Vec<f64>)> =
        results.iter().flat_map(|r| r.candidates.iter().cloned()).collect();
    pool.extend(results.iter().map(|r| (r.best_half, r.best_resid, r.best_x.clone())));
    pool.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
            .then(lex_cmp(&a.2, &b.2))
    });
    let mut best: Option<(SubsystemSplit, f64, f64, f64)> = None;
    for (half, resid, x) in &pool {
        if let Some((_, bh, _, _)) = &best {
            if *half < bh - 1e-12 {
                break;
            }
        }
        let sp = make(x)?;
        let tn = sp.check(s)?.residual;
        if tn <= opts.tol {
            let better = match &best {
                None => true,
                Some((_, bh, br, _)) => *half > bh + 1e-12 || (*half >= bh - 1e-12 && *resid < *br),
            };
            if better {
                best = Some((sp, *half, *resid, tn));
            }
        }
    }
    if let Some((sp, half, resid, tn)) = best {
        return Ok(SplitSearchOutcome {
            best: sp,
            lower_bound: half.max(0.0),
            feasible: true,
            mi_half: half,
            residual_independence: resid,
            residual_trace_norm: tn,
            evaluations,
            near_miss: None,
        });
    }
    let top = results
        .iter()
        .max_by(|a, b| {
            a.best_obj
                .partial_cmp(&b.best_obj)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(b.best_resid.partial_cmp(&a.best_resid).unwrap_or(std::cmp::Ordering::Equal))
        })
        .expect("at least one start");
    let sp = make(&top.best_x)?;
    let tn = sp.check(s)?.residual;
    Ok(SplitSearchOutcome {
        best: sp,
        lower_bound: 0.0,
        feasible: false,
        mi_half: top.best_half,
        residual_independence: top.best_resid,
        residual_trace_norm: tn,
        evaluations,
        near_miss: Some(format!(
            "best split has I(alpha:beta)/2 = {:.6}, I(alpha beta:R) = {:.3e}, trace-norm residual {:.3e} > {:e}",
            top.best_half, top.best_resid, tn, opts.tol
        )),
    })
}

/// One lower-bound route with its value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRoute {
    pub name: String,
    pub value: f64,
    /// Whether the route produced a certified bound.
    pub valid: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub lower_bound: f64,
    pub lower_method: String,
    /// `I(alpha beta:R)` at the reporting split.
    pub residual_independence: f64,
    /// `I(alpha:beta)/2` at the reporting split.
    pub mi_half: f64,
    pub upper_esq: f64,
    /// PPT relative entropy; an upper bound only if the no-locking conjecture holds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_er_ppt_conjectural: Option<f64>,
    pub er_ppt_flag: String,
    pub routes: Vec<BoundRoute>,
}

pub const ER_PPT_FLAG: &str =
    "conjectural: upper bound valid only if log-negativity cannot be locked by product-marginal extensions";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiBoundsOptions {
    /// Alice | Bob; defaults to the two labels of a bipartite state.
    pub cut: Option<Cut>,
    /// Key labels to test for exact mutual independence (other labels are shields).
    pub exact_keys: Option<Cut>,
    /// Run the split search with these factor dimensions.
    pub split: Option<SplitDims>,
    pub search: SplitSearchOptions,
    pub esq_ext_dim: usize,
    pub esq_trials: usize,
    pub seed: RngSeed,
    /// Compute the conjectural PPT relative-entropy bound.
    pub ppt: Option<PptOptions>,
}

impl Default for MiBoundsOptions {
    fn default() -> Self {
        MiBoundsOptions {
            cut: None,
            exact_keys: None,
            split: None,
            search: SplitSearchOptions::default(),
            esq_ext_dim: 2,
            esq_trials: 32,
            seed: RngSeed(0),
            ppt: Some(PptOptions::default()),
        }
    }
}

/// Lower bounds from every applicable route, the sampled `E_sq` upper bound,
/// and the conjectural PPT relative-entropy bound.
pub fn mi_bounds(s: &MultipartiteState, opts: &MiBoundsOptions) -> Result<IndependenceReport> {
    let cut = match &opts.cut {
        Some(c) => c.clone(),
        None => Cut::of_pair(s)?,
    };
    cut.check(s)?;
    let mut routes = Vec::new();
    // (value, method, residual I, mi_half)
    let mut best: (f64, String, f64, f64);

    // Trivial split alpha = A, beta = B.
    let whole = check_exact_mi_on(s, &cut)?;
    let s_ab = crate::entropy::vn_entropy(s);
    let whole_valid = whole.residual <= EXACT_MI_TOL;
    routes.push(BoundRoute {
        name: "exact: whole state".into(),
        value: if whole_valid { whole.mi_half } else { 0.0 },
        valid: whole_valid,
        detail: format!("residual {:.3e}", whole.residual),
    });
    best = (
        if whole_valid { whole.mi_half } else { 0.0 },
        if whole_valid { "exact: whole state" } else { "none" }.to_string(),
        2.0 * s_ab,
        whole.mi_half,
    );

    if let Some(keys) = &opts.exact_keys {
        let chk = check_exact_mi_on(s, keys)?;
        let valid = chk.residual <= EXACT_MI_TOL;
        routes.push(BoundRoute {
            name: "exact: declared keys".into(),
            value: if valid { chk.mi_half } else { 0.0 },
            valid,
            detail: format!("keys {:?}|{:?}, residual {:.3e}", keys.a, keys.b, chk.residual),
        });
        if valid && chk.mi_half > best.0 {
            best = (chk.mi_half, "exact: declared keys".into(), 0.0, chk.mi_half);
        }
    }

    if s.subsystems().len() == 2 && is_maximally_correlated(s) {
        let h = maxcorr_hashing_bound(s)?;
        routes.push(BoundRoute {
            name: "hashing (maximally correlated)".into(),
            value: h.value,
            valid: true,
            detail: format!("I(A>B) = {:.12}, audit {:.12}", h.coherent_info, h.audit),
        });
        if h.value > best.0 {
            best = (h.value, "hashing (maximally correlated)".into(), best.2, best.3);
        }
    }

    if let Some(split) = opts.split {
        let out = split_search_lower(s, &cut, split, &opts.search)?;
        routes.push(BoundRoute {
            name: "split search".into(),
            value: out.lower_bound,
            valid: out.feasible,
            detail: out.near_miss.clone().unwrap_or_else(|| {
                format!("trace-norm residual {:.3e}", out.residual_trace_norm)
            }),
        });
        if out.feasible && out.lower_bound > best.0 {
            best = (
                out.lower_bound,
                "split search".into(),
                out.residual_independence,
                out.mi_half,
            );
        }
    }

    let esq = esq_upper(s, &cut, opts.esq_ext_dim, opts.esq_trials, opts.seed)?;
    let er = match &opts.ppt {
        Some(p) if s.total_dim() <= 36 => Some(rel_ent_ppt(s, &cut, p)?.value),
        _ => None,
    };
    Ok(IndependenceReport {
        lower_bound: best.0,
        lower_method: best.1,
        residual_independence: best.2.max(0.0),
        mi_half: best.3,
        upper_esq: esq.value,
        upper_er_ppt_conjectural: er,
        er_ppt_flag: ER_PPT_FLAG.into(),
        routes,
    })
}
