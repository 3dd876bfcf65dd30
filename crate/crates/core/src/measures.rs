//! Entanglement measures and the isotropic family.
//!
//! * logarithmic negativity `log2 ||rho^Gamma||_1`
//! * isotropic states `F Phi_d + (1 - F)(1 - Phi_d)/(d^2 - 1)` and the exact `U ⊗ U*` twirl
//! * relative entropy of entanglement relaxed to the PPT set (labeled "E_r-PPT")
//! * a sampled upper bound on squashed entanglement

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{cond_mutual_info, mutual_info, relative_entropy_matrices};
use crate::error::{Error, Result};
use crate::tensor::io::StateFile;
use crate::tensor::linalg::{self, cr, herm_eigh, CMat, RANK_CUTOFF};
use crate::tensor::random::{ginibre, haar_isometry_matrix, random_pure_vector};
use crate::tensor::{Isometry, MultipartiteState, RngSeed, Subsystem};

pub const METHOD_LOG_NEG: &str = "E_N";
pub const METHOD_ER_PPT: &str = "E_r-PPT (lower bounds E_r beyond 2x3)";
pub const METHOD_ESQ: &str = "E_sq-heuristic (min over sampled extensions)";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Optimizer state: the minimizing PPT state or the best extension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<StateFile>,
    pub iterations: usize,
    /// Method-specific residual: PPT violation of the witness, or spread across restarts.
    pub residual: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub restart_values: Vec<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureResult {
    pub value: f64,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
}

/// A bipartition of all labels of a state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cut {
    pub a: Vec<String>,
    pub b: Vec<String>,
}

impl Cut {
    pub fn new(a: &[&str], b: &[&str]) -> Self {
        Cut {
            a: a.iter().map(|s| s.to_string()).collect(),
            b: b.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// `A|B` style cut for a two-label state.
    pub fn of_pair(s: &MultipartiteState) -> Result<Self> {
        let l = s.labels();
        if l.len() != 2 {
            return Err(Error::InvalidArgument(format!(
                "expected a two-label state, found labels {l:?}"
            )));
        }
        Ok(Cut::new(&[l[0]], &[l[1]]))
    }

    pub fn a_refs(&self) -> Vec<&str> {
        self.a.iter().map(String::as_str).collect()
    }

    pub fn b_refs(&self) -> Vec<&str> {
        self.b.iter().map(String::as_str).collect()
    }

    /// Verify the cut is a bipartition of the state's labels.
    pub fn check(&self, s: &MultipartiteState) -> Result<()> {
        let labels = s.labels();
        let mut seen: Vec<&str> = Vec::new();
        for l in self.a.iter().chain(&self.b) {
            if !labels.contains(&l.as_str()) {
                return Err(Error::UnknownLabel(l.clone()));
            }
            if seen.contains(&l.as_str()) {
                return Err(Error::InvalidArgument(format!("label {l} on both sides of the cut")));
            }
            seen.push(l);
        }
        if seen.len() != labels.len() || self.a.is_empty() || self.b.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "cut {:?}|{:?} is not a bipartition of {:?}",
                self.a, self.b, labels
            )));
        }
        Ok(())
    }

    /// State reordered as `a-labels, b-labels` with the dimensions of each side.
    fn ordered(&self, s: &MultipartiteState) -> Result<(MultipartiteState, usize, usize)> {
        self.check(s)?;
        let order: Vec<&str> = self.a.iter().chain(&self.b).map(String::as_str).collect();
        let p = s.permute(&order)?;
        let da = self.a.iter().map(|l| s.dim_of(l)).product::<Result<usize>>()?;
        let db = self.b.iter().map(|l| s.dim_of(l)).product::<Result<usize>>()?;
        Ok((p, da, db))
    }
}

/// Partial transpose of a `da x db` bipartite matrix on the second factor.
pub fn transpose_second(m: &CMat, da: usize, db: usize) -> CMat {
    let n = da * db;
    CMat::from_fn(n, n, |i, j| {
        let (ia, ib) = (i / db, i % db);
        let (ja, jb) = (j / db, j % db);
        m[(ia * db + jb, ja * db + ib)]
    })
}

/// `E_N = log2 ||rho^Gamma||_1` across the cut (the `b` side is transposed).
pub fn log_negativity(s: &MultipartiteState, cut: &Cut) -> Result<f64> {
    cut.check(s)?;
    let rho = s.to_density();
    let g = rho.partial_transpose(&cut.b_refs())?;
    let norm: f64 = linalg::herm_eigenvalues(&g.matrix()).iter().map(|x| x.abs()).sum();
    Ok(norm.log2())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotropicParams {
    pub f: f64,
    pub d: usize,
}

impl IsotropicParams {
    pub fn new(f: f64, d: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&f) || d < 2 {
            return Err(Error::InvalidArgument(format!(
                "isotropic parameters need F in [0,1] and d >= 2, got F={f}, d={d}"
            )));
        }
        Ok(IsotropicParams { f, d })
    }
}

/// `F Phi_d + (1 - F)(1 - Phi_d)/(d^2 - 1)` on labels `A`, `B`.
pub fn isotropic_state(p: IsotropicParams) -> MultipartiteState {
    isotropic_on("A", "B", p)
}

pub fn isotropic_on(a: &str, b: &str, p: IsotropicParams) -> MultipartiteState {
    let d = p.d;
    let n = d * d;
    let phi = crate::states::max_entangled(a, b, d).matrix();
    let rest = (CMat::identity(n, n) - &phi) * cr((1.0 - p.f) / (n as f64 - 1.0));
    let m = phi * cr(p.f) + rest;
    MultipartiteState::density(m, vec![Subsystem::new(a, d), Subsystem::new(b, d)])
        .expect("isotropic states are valid")
}

/// `<Phi_d| rho |Phi_d>` for a two-label `d x d` state.
pub fn phi_fidelity(s: &MultipartiteState) -> Result<f64> {
    let dims = s.local_dims();
    if dims.len() != 2 || dims[0] != dims[1] {
        return Err(Error::DimensionMismatch(format!(
            "needs a d x d bipartite state, got dims {dims:?}"
        )));
    }
    let d = dims[0];
    let m = s.matrix();
    let mut acc = cr(0.0);
    for i in 0..d {
        for j in 0..d {
            acc += m[(i * d + i, j * d + j)];
        }
    }
    Ok(acc.re / d as f64)
}

/// Exact `U ⊗ U*` twirl: the isotropic state with the input's `Phi_d` fidelity.
pub fn uu_twirl(s: &MultipartiteState) -> Result<MultipartiteState> {
    let f = phi_fidelity(s)?.clamp(0.0, 1.0);
    let labels = s.labels();
    let d = s.local_dims()[0];
    Ok(isotropic_on(labels[0], labels[1], IsotropicParams { f, d }))
}

/// Options for [`rel_ent_ppt`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PptOptions {
    /// Random PPT starting points besides the maximally mixed state.
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop when the relative objective change drops below this.
    pub rel_tol: f64,
    pub seed: RngSeed,
}

impl Default for PptOptions {
    fn default() -> Self {
        PptOptions {
            restarts: 8,
            max_iters: 5000,
            rel_tol: 1e-9,
            seed: RngSeed(0),
        }
    }
}

/// Projection of a Hermitian matrix onto `{sigma >= 0, tr sigma = 1}`.
fn project_density(m: &CMat) -> CMat {
    let e = herm_eigh(m);
    let lam = project_simplex(&e.values);
    let n = m.nrows();
    let mut out = CMat::zeros(n, n);
    for (k, &l) in lam.iter().enumerate() {
        if l > 0.0 {
            let v = e.vectors.column(k);
            out += (&v * v.adjoint()) * cr(l);
        }
    }
    out
}

/// Euclidean projection of a vector onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        css += x;
        let t = (css - 1.0) / (k as f64 + 1.0);
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Projection onto `{sigma : sigma^Gamma >= 0}`; the partial transpose is a Frobenius isometry.
fn project_ppt_cone(m: &CMat, da: usize, db: usize) -> CMat {
    let g = transpose_second(m, da, db);
    let e = herm_eigh(&g);
    let clipped = e.map(|x| x.max(0.0));
    transpose_second(&clipped, da, db)
}

/// Inner iterations per projection; the descent tolerates inexact steps and
/// the final point is repaired to exact PPT.
const DYKSTRA_ITERS: usize = 300;

/// Dykstra's alternating projection onto density matrices with PPT.
fn project_ppt_states(m: &CMat, da: usize, db: usize) -> CMat {
    let n = m.nrows();
    let mut x = linalg::hermitian_part(m);
    let mut p = CMat::zeros(n, n);
    let mut q = CMat::zeros(n, n);
    for _ in 0..DYKSTRA_ITERS {
        let y = project_density(&(&x + &p));
        p = &x + &p - &y;
        let x_new = project_ppt_cone(&(&y + &q), da, db);
        q = &y + &q - &x_new;
        let change = linalg::frobenius(&(&x_new - &x));
        let gap = linalg::frobenius(&(&x_new - &y));
        x = x_new;
        if change < 1e-12 && gap < 1e-11 {
            break;
        }
    }
    // finish on the density set; the PPT violation left over is at the Dykstra tolerance
    project_density(&x)
}

fn min_ppt_eigenvalue(m: &CMat, da: usize, db: usize) -> f64 {
    linalg::herm_eigenvalues(&transpose_second(m, da, db))
        .last()
        .copied()
        .unwrap_or(0.0)
}

/// Gradient of `sigma -> S(rho || sigma)` (bits) via the Daleckii–Krein formula.
fn rel_ent_gradient(rho: &CMat, sigma: &CMat) -> CMat {
    let e = herm_eigh(sigma);
    let v = &e.vectors;
    let r = v.adjoint() * rho * v;
    let n = sigma.nrows();
    let lam: Vec<f64> = e.values.iter().map(|&x| x.max(1e-300)).collect();
    let mut d = CMat::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            let (a, b) = (lam[k], lam[l]);
            let f1 = if (a - b).abs() <= 1e-12 * a.max(b) {
                1.0 / a.max(b)
            } else {
                (a.ln() - b.ln()) / (a - b)
            };
            d[(k, l)] = r[(k, l)] * cr(f1);
        }
    }
    (v * d * v.adjoint()) * cr(-1.0 / std::f64::consts::LN_2)
}

fn inner_re(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

struct DescentOutcome {
    sigma: CMat,
    value: f64,
    iterations: usize,
    converged: bool,
}

/// Mixing weight of the maximally mixed state in each continuation stage.
///
/// Optimizing over `(1 - delta) sigma + delta 1/n` keeps the gradient bounded;
/// every such point is itself PPT, so each stage returns a feasible value.
const CONTINUATION: [f64; 5] = [1e-2, 1e-4, 1e-6, 1e-8, 0.0];

fn blend(sigma: &CMat, delta: f64) -> CMat {
    let n = sigma.nrows();
    sigma * cr(1.0 - delta) + CMat::identity(n, n) * cr(delta / n as f64)
}

fn ppt_descent(rho: &CMat, start: CMat, da: usize, db: usize, opts: &PptOptions) -> DescentOutcome {
    let mut sigma = start;
    let mut iterations = 0;
    let mut converged = false;
    let per_stage = (opts.max_iters / CONTINUATION.len()).max(1);
    for &delta in &CONTINUATION {
        let budget = per_stage.min(opts.max_iters - iterations);
        let (s, its, conv) = descent_stage(rho, sigma, delta, da, db, budget, opts.rel_tol);
        sigma = s;
        iterations += its;
        converged = conv;
    }
    // Mix in the least weight of 1/n that clears any leftover PPT violation.
    let n = sigma.nrows() as f64;
    let lam = min_ppt_eigenvalue(&sigma, da, db);
    if lam < 0.0 {
        let eps = -lam * n / (1.0 - lam * n);
        sigma = blend(&sigma, eps);
    }
    let value = relative_entropy_matrices(rho, &sigma);
    DescentOutcome {
        sigma,
        value,
        iterations,
        converged,
    }
}

/// Projected gradient with backtracking on `sigma -> S(rho || blend(sigma, delta))`.
fn descent_stage(
    rho: &CMat,
    start: CMat,
    delta: f64,
    da: usize,
    db: usize,
    max_iters: usize,
    rel_tol: f64,
) -> (CMat, usize, bool) {
    let objective = |s: &CMat| relative_entropy_matrices(rho, &blend(s, delta));
    let mut sigma = start;
    let mut value = objective(&sigma);
    let mut step = 1.0;
    let mut stalls = 0;
    for it in 0..max_iters {
        let grad = rel_ent_gradient(rho, &blend(&sigma, delta)) * cr(1.0 - delta);
        let target = project_ppt_states(&(&sigma - &grad * cr(step)), da, db);
        let dir = &target - &sigma;
        let slope = inner_re(&grad, &dir);
        if slope > -1e-16 {
            return (sigma, it + 1, true);
        }
        // backtracking along the feasible segment
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = &sigma + &dir * cr(t);
            let v = objective(&cand);
            if v.is_finite() && v <= value + 1e-4 * t * slope {
                accepted = Some((cand, v));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, v)) = accepted else {
            return (sigma, it + 1, true);
        };
        let change = (value - v).abs();
        sigma = cand;
        value = v;
        step = if t == 1.0 { step * 2.0 } else { (step * 0.5).max(1e-8) };
        step = step.min(1e6);
        if change <= rel_tol * value.abs().max(1.0) {
            stalls += 1;
            if stalls >= 5 {
                return (sigma, it + 1, true);
            }
        } else {
            stalls = 0;
        }
    }
    (sigma, max_iters, false)
}

/// Random separable (hence PPT) starting point: a mixture of product pure states
/// blended with the maximally mixed state.
fn random_ppt_start(da: usize, db: usize, seed: RngSeed) -> CMat {
    let mut rng = seed.rng();
    let n = da * db;
    let mut m = CMat::identity(n, n) * cr(0.5 / n as f64);
    let terms = 4;
    for _ in 0..terms {
        let a = random_pure_vector(da, &mut rng);
        let b = random_pure_vector(db, &mut rng);
        let ab = a.kronecker(&b);
        m += (&ab * ab.adjoint()) * cr(0.5 / terms as f64);
    }
    m
}

/// `min_{sigma PPT} S(rho || sigma)` by projected gradient descent from the
/// maximally mixed state and `opts.restarts` random separable starts.
///
/// The PPT set contains the separable set, so the value lower-bounds the
/// separable relative entropy of entanglement (and equals it for 2x2 and 2x3).
pub fn rel_ent_ppt(s: &MultipartiteState, cut: &Cut, opts: &PptOptions) -> Result<MeasureResult> {
    let (ordered, da, db) = cut.ordered(s)?;
    let rho = ordered.matrix();
    let n = da * db;
    let mut starts = vec![CMat::identity(n, n) * cr(1.0 / n as f64)];
    for k in 0..opts.restarts {
        starts.push(random_ppt_start(da, db, opts.seed.derive(k as u64)));
    }
    let outcomes: Vec<DescentOutcome> = starts
        .into_par_iter()
        .map(|st| ppt_descent(&rho, st, da, db, opts))
        .collect();
    let values: Vec<f64> = outcomes.iter().map(|o| o.value).collect();
    let best = outcomes
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.value.partial_cmp(&b.value).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(i, _)| i)
        .expect("at least one start");
    let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - values.iter().cloned().fold(f64::INFINITY, f64::min);
    let out = &outcomes[best];
    let ppt_violation = (-min_ppt_eigenvalue(&out.sigma, da, db)).max(0.0);
    let witness = MultipartiteState::density_unchecked(
        out.sigma.clone(),
        ordered.subsystems().to_vec(),
    )?;
    Ok(MeasureResult {
        value: out.value.max(0.0),
        method: METHOD_ER_PPT.to_string(),
        certificate: Some(Certificate {
            witness: Some(StateFile::from_state(&witness)),
            iterations: out.iterations,
            residual: ppt_violation,
            restart_values: values,
            converged: outcomes.iter().all(|o| o.converged) && spread <= 1e-4,
        }),
    })
}

/// Minimum PPT violation (negative eigenvalue of the partial transpose) of a state across a cut.
pub fn ppt_min_eigenvalue(s: &MultipartiteState, cut: &Cut) -> Result<f64> {
    let (ordered, da, db) = cut.ordered(s)?;
    Ok(min_ppt_eigenvalue(&ordered.matrix(), da, db))
}

/// Is every off-diagonal entry (computational basis) negligible?
pub fn is_diagonal(s: &MultipartiteState) -> bool {
    let m = s.matrix();
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)].norm() <= RANK_CUTOFF))
}

/// `rho_ABE = sum p_ab |ab><ab| ⊗ |a><a|_E` for a state diagonal in the product basis.
fn copying_extension(ordered: &MultipartiteState, da: usize, db: usize) -> Result<MultipartiteState> {
    let m = ordered.matrix();
    let n = da * db;
    let mut out = CMat::zeros(n * da, n * da);
    for i in 0..n {
        let a = i / db;
        let idx = i * da + a;
        out[(idx, idx)] = m[(i, i)];
    }
    let mut dims = ordered.subsystems().to_vec();
    dims.push(Subsystem::new("__E", da));
    MultipartiteState::density_unchecked(out, dims)
}

/// `min_E (1/2) I(A:B|E)` over the trivial extension, the classical copying
/// extension (diagonal inputs only) and `trials` Haar-random extensions with
/// `dim E = ext_dim`, each obtained from an isometry on the purifier.
///
/// Trial `k` uses seed `seed.derive(k)`, so more trials can only lower the value.
pub fn esq_upper(
    s: &MultipartiteState,
    cut: &Cut,
    ext_dim: usize,
    trials: usize,
    seed: RngSeed,
) -> Result<MeasureResult> {
    if ext_dim < 1 {
        return Err(Error::InvalidArgument("ext_dim must be at least 1".into()));
    }
    let (ordered, da, db) = cut.ordered(s)?;
    let a = cut.a_refs();
    let b = cut.b_refs();
    let half_i = 0.5 * mutual_info(&ordered, &a, &b)?;
    let mut best = half_i;
    let mut best_label = "trivial extension".to_string();
    if is_diagonal(&ordered) {
        let ext = copying_extension(&ordered, da, db)?;
        let v = 0.5 * cond_mutual_info(&ext, &a, &b, &["__E"])?;
        if v < best {
            best = v;
            best_label = "copying extension".into();
        }
    }
    let psi = ordered.purify("__P")?;
    let r = psi.dim_of("__P")?;
    let g = r;
    let trial_values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let mut rng = seed.derive(k as u64).rng();
            let w = haar_isometry_matrix(r, ext_dim * g, &mut rng);
            let iso = Isometry::new(
                w,
                vec![Subsystem::new("__P", r)],
                vec![Subsystem::new("__E", ext_dim), Subsystem::new("__G", g)],
            )?;
            let ext = psi.apply_isometry(&iso)?;
            Ok(0.5 * cond_mutual_info(&ext, &a, &b, &["__E"])?)
        })
        .collect::<Result<Vec<_>>>()?;
    for (k, &v) in trial_values.iter().enumerate() {
        if v < best {
            best = v;
            best_label = format!("haar trial {k}");
        }
    }
    Ok(MeasureResult {
        value: best.max(0.0),
        method: format!("{METHOD_ESQ}; best: {best_label}"),
        certificate: Some(Certificate {
            witness: None,
            iterations: trials,
            residual: half_i - best,
            restart_values: vec![],
            converged: true,
        }),
    })
}

/// Random Hermitian matrix, used by tests and harnesses.
pub fn random_hermitian(n: usize, seed: RngSeed) -> CMat {
    let g = ginibre(n, n, &mut seed.rng());
    linalg::hermitian_part(&g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states;
    use crate::tensor::random::random_density;

    fn cut_ab() -> Cut {
        Cut::new(&["A"], &["B"])
    }

    #[test]
    fn log_negativity_examples() {
        let phi = states::phi_plus("A", "B");
        assert!((log_negativity(&phi, &cut_ab()).unwrap() - 1.0).abs() < 1e-12);
        let prod = random_density(2, 2, RngSeed(1))
            .unwrap()
            .tensor(&random_density(3, 3, RngSeed(2)).unwrap().relabel("A", "B").unwrap())
            .unwrap();
        assert!(log_negativity(&prod, &cut_ab()).unwrap().abs() < 1e-12);
        assert!(log_negativity(&phi, &Cut::new(&["A"], &["C"])).is_err());
        assert!(log_negativity(&phi, &Cut::new(&["A"], &[])).is_err());
    }

    #[test]
    fn isotropic_examples() {
        let one = isotropic_state(IsotropicParams::new(1.0, 3).unwrap());
        let phi = states::max_entangled("A", "B", 3);
        assert!(linalg::max_abs(&(one.matrix() - phi.matrix())) < 1e-15);
        // F = 1/d^2 gives the maximally mixed state: tr rho^2 = 1/d^2
        let d = 3usize;
        let mm = isotropic_state(IsotropicParams::new(1.0 / (d * d) as f64, d).unwrap());
        let purity = linalg::trace(&(mm.matrix() * mm.matrix())).re;
        assert!((purity - 1.0 / 9.0).abs() < 1e-12);
        for f in [0.0, 0.3, 0.77, 1.0] {
            let s = isotropic_state(IsotropicParams::new(f, 2).unwrap());
            s.validate().unwrap();
            assert!((phi_fidelity(&s).unwrap() - f).abs() < 1e-12);
        }
        let boundary = isotropic_state(IsotropicParams::new(1.0 / 3.0, 3).unwrap());
        assert!(log_negativity(&boundary, &cut_ab()).unwrap().abs() < 1e-12);
        assert!(IsotropicParams::new(1.1, 2).is_err());
        assert!(IsotropicParams::new(0.5, 1).is_err());
    }

    #[test]
    fn twirl_examples() {
        let iso = isotropic_state(IsotropicParams::new(0.6, 3).unwrap());
        let t = uu_twirl(&iso).unwrap();
        assert!(linalg::max_abs(&(t.matrix() - iso.matrix())) < 1e-12);
        let phi = states::phi_plus("A", "B");
        assert!(linalg::max_abs(&(uu_twirl(&phi).unwrap().matrix() - phi.matrix())) < 1e-12);
        let rho = crate::tensor::random::random_state_with(
            &[("A", 3), ("B", 3)],
            9,
            &mut RngSeed(5).rng(),
        )
        .unwrap();
        let f_in = phi_fidelity(&rho).unwrap();
        assert!((phi_fidelity(&uu_twirl(&rho).unwrap()).unwrap() - f_in).abs() < 1e-12);
        let bad = crate::tensor::random::random_state_with(
            &[("A", 2), ("B", 3)],
            6,
            &mut RngSeed(5).rng(),
        )
        .unwrap();
        assert!(uu_twirl(&bad).is_err());
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.5, 0.5, 0.5]);
        assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        let p = project_simplex(&[2.0, 0.0]);
        assert_eq!(p, vec![1.0, 0.0]);
    }

    #[test]
    fn esq_examples() {
        let prod = MultipartiteState::maximally_mixed("A", 2)
            .tensor(&MultipartiteState::basis("B", 2, 0))
            .unwrap();
        let r = esq_upper(&prod, &cut_ab(), 2, 8, RngSeed(1)).unwrap();
        assert!(r.value.abs() < 1e-12);
        let phi = states::phi_plus("A", "B");
        let r = esq_upper(&phi, &cut_ab(), 2, 8, RngSeed(1)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        let cc = states::classically_correlated("A", "B", 2);
        let r = esq_upper(&cc, &cut_ab(), 2, 8, RngSeed(1)).unwrap();
        assert!(r.value < 1e-9, "{}", r.value);
        assert!(esq_upper(&cc, &cut_ab(), 0, 8, RngSeed(1)).is_err());
    }
}

#[cfg(test)]
mod ppt_tests {
    use super::*;
    use crate::states;

    /// Twirled oracle: `min_{F' <= 1/d} D({F, 1-F} || {F', 1-F'})` by golden-section search.
    fn isotropic_oracle(f: f64, d: usize) -> f64 {
        let obj = |g: f64| {
            let mut v = 0.0;
            if f > 0.0 {
                v += f * (f / g).log2();
            }
            if f < 1.0 {
                v += (1.0 - f) * ((1.0 - f) / (1.0 - g)).log2();
            }
            v
        };
        let (mut lo, mut hi) = (1e-12, 1.0 / d as f64);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let x1 = hi - r * (hi - lo);
            let x2 = lo + r * (hi - lo);
            if obj(x1) < obj(x2) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        obj(0.5 * (lo + hi))
    }

    #[test]
    fn phi_plus_and_isotropic_match_oracle() {
        let t = std::time::Instant::now();
        let opts = PptOptions::default();
        let phi = states::phi_plus("A", "B");
        let r = rel_ent_ppt(&phi, &Cut::new(&["A"], &["B"]), &opts).unwrap();
        let c = r.certificate.as_ref().unwrap();
        eprintln!("phi+ {} {:?} {:?}", r.value, c.restart_values, t.elapsed());
        assert!((r.value - 1.0).abs() < 1e-4);
        let iso = isotropic_state(IsotropicParams::new(0.9, 2).unwrap());
        let r = rel_ent_ppt(&iso, &Cut::new(&["A"], &["B"]), &opts).unwrap();
        let oracle = isotropic_oracle(0.9, 2);
        eprintln!("iso {} oracle {} {:?}", r.value, oracle, t.elapsed());
        assert!((r.value - oracle).abs() < 1e-4);
    }
}
