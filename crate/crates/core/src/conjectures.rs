//! Falsification harnesses.
//!
//! * No locking from product marginals: for every extension `rho_XAB` of a
//!   product state `rho_A ⊗ rho_B`, `E_N(XA:B) <= log2 |X|`. Trials sample
//!   extensions as Haar isometries on the purifier and optionally climb `E_N`.
//! * Constant-expectation product operators: non-trivial `A`, `B` with
//!   `Pi (A ⊗ B) Pi = c Pi` on the support of `rho_AB`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{log_negativity, Cut};
use crate::states;
use crate::tensor::io::{MatrixFile, StateFile};
use crate::tensor::linalg::{self, c, cr, CMat, CVec};
use crate::tensor::random::{haar_isometry_matrix, haar_unitary_with, random_density_with};
use crate::tensor::{MultipartiteState, RngSeed, Subsystem};

/// Slack below which a trial is reported as a violation.
pub const VIOLATION_TOL: f64 = -1e-7;
/// Maximum entry deviation of the generated `AB` marginal from `rho_A ⊗ rho_B`.
pub const MARGINAL_TOL: f64 = 1e-10;

/// Extension of `rho_A ⊗ rho_B` on `X, A, B`: purify on `P`, apply a Haar
/// isometry `P -> X ⊗ G`, trace out `G`.
pub fn gen_product_extension(
    rho_a: &MultipartiteState,
    rho_b: &MultipartiteState,
    dim_x: usize,
    dim_g: usize,
    seed: RngSeed,
) -> Result<MultipartiteState> {
    let mut rng = seed.rng();
    extension_with(rho_a, rho_b, dim_x, dim_g, &mut rng).map(|(s, _, _)| s)
}

fn product_ab(rho_a: &MultipartiteState, rho_b: &MultipartiteState) -> Result<MultipartiteState> {
    let a = rho_a.regroup(vec![Subsystem::new("A", rho_a.total_dim())])?;
    let b = rho_b.regroup(vec![Subsystem::new("B", rho_b.total_dim())])?;
    a.tensor(&b)
}

/// The extension, its generator data, and the sampled isometry.
fn extension_with<R: Rng + ?Sized>(
    rho_a: &MultipartiteState,
    rho_b: &MultipartiteState,
    dim_x: usize,
    dim_g: usize,
    rng: &mut R,
) -> Result<(MultipartiteState, Extension, CMat)> {
    let prod = product_ab(rho_a, rho_b)?;
    let psi = prod.purify("P")?;
    let r = psi.dim_of("P")?;
    if dim_x == 0 || dim_g == 0 || dim_x * dim_g < r {
        return Err(Error::InvalidArgument(format!(
            "need dim_x * dim_g >= rank(rho_A ⊗ rho_B) = {r}, got {dim_x} * {dim_g}"
        )));
    }
    let w0 = haar_isometry_matrix(r, dim_x * dim_g, rng);
    let ext = Extension {
        psi,
        target: prod,
        dim_x,
        dim_g,
    };
    let s = ext.state(&w0)?;
    Ok((s, ext, w0))
}

/// Purification data from which extensions are generated for a given isometry.
struct Extension {
    psi: MultipartiteState,
    target: MultipartiteState,
    dim_x: usize,
    dim_g: usize,
}

impl Extension {
    /// `rho_XAB` for isometry `w`; checks the `AB` marginal.
    fn state(&self, w: &CMat) -> Result<MultipartiteState> {
        let (da, db) = (self.target.dim_of("A")?, self.target.dim_of("B")?);
        let r = self.psi.dim_of("P")?;
        let v = self.psi.vector().expect("pure");
        let k = self.dim_x * self.dim_g;
        // out[(a b), (x g)] = sum_p psi[(a b), p] w[(x g), p]
        let coeff = CMat::from_fn(da * db, r, |i, p| v[i * r + p]);
        let out = &coeff * w.transpose();
        let flat = CVec::from_fn(da * db * k, |i, _| out[(i / k, i % k)]);
        let st = MultipartiteState::pure(
            flat,
            vec![
                Subsystem::new("A", da),
                Subsystem::new("B", db),
                Subsystem::new("X", self.dim_x),
                Subsystem::new("G", self.dim_g),
            ],
        )?;
        let rho = st.partial_trace(&["A", "B", "X"])?.permute(&["X", "A", "B"])?;
        let marg = rho.partial_trace(&["A", "B"])?;
        let err = linalg::max_abs(&(marg.matrix() - self.target.matrix()));
        if err > MARGINAL_TOL {
            return Err(Error::invariant(
                "generated AB marginal equals rho_A ⊗ rho_B",
                format!("max deviation {err:e}"),
            ));
        }
        Ok(rho)
    }
}

/// What produces `rho_XAB` in a trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// Haar extensions of random product states (the experiment).
    ProductExtension,
    /// Flagged mixture of twisted maximally entangled states; its `AB`
    /// marginal is not product and `E_N(XA:B) = log2 d` exceeds `log2 |X|`
    /// whenever `d > |X|`. Validates the detector.
    LockingControl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conj5Params {
    pub dim_x: usize,
    pub dim_a: usize,
    pub dim_b: usize,
    /// Environment dimension; defaults to the rank of `rho_A ⊗ rho_B` rounded up to fit.
    pub dim_g: Option<usize>,
    pub generator: Generator,
    /// Objective evaluations for the optional ascent.
    pub ascent_evals: usize,
}

impl Conj5Params {
    pub fn new(dim_x: usize, dim_a: usize, dim_b: usize) -> Self {
        Conj5Params {
            dim_x,
            dim_a,
            dim_b,
            dim_g: None,
            generator: Generator::ProductExtension,
            ascent_evals: 300,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: RngSeed,
    /// `|X|, |A|, |B|, |G|`.
    pub dims: [usize; 4],
    pub e_n: f64,
    /// `log2 |X| - E_N`.
    pub slack: f64,
    pub optimized: bool,
    pub evaluations: usize,
    /// `E_N` at the random start (before ascent).
    pub start_e_n: f64,
}

struct TrialOutput {
    record: TrialRecord,
    state: MultipartiteState,
}

fn xa_b() -> Cut {
    Cut::new(&["X", "A"], &["B"])
}

/// Control state `1/|X| sum_t |t><t|_X ⊗ (1 ⊗ U_t) Phi_d (1 ⊗ U_t)†` on `X, A, B`.
pub fn locking_control(dim_x: usize, d: usize, seed: RngSeed) -> Result<MultipartiteState> {
    let mut rng = seed.rng();
    control_with(dim_x, d, &mut rng)
}

fn control_with<R: Rng + ?Sized>(dim_x: usize, d: usize, rng: &mut R) -> Result<MultipartiteState> {
    if dim_x == 0 || d < 2 {
        return Err(Error::InvalidArgument("control needs |X| >= 1 and d >= 2".into()));
    }
    let phi = states::max_entangled("A", "B", d).matrix();
    let n = d * d;
    let mut m = CMat::zeros(dim_x * n, dim_x * n);
    for t in 0..dim_x {
        let u = if t == 0 {
            CMat::identity(d, d)
        } else {
            haar_unitary_with(d, rng)
        };
        let w = CMat::identity(d, d).kronecker(&u);
        let block = &w * &phi * w.adjoint() * cr(1.0 / dim_x as f64);
        m.view_mut((t * n, t * n), (n, n)).copy_from(&block);
    }
    MultipartiteState::density(
        m,
        vec![
            Subsystem::new("X", dim_x),
            Subsystem::new("A", d),
            Subsystem::new("B", d),
        ],
    )
}

fn random_local<R: Rng + ?Sized>(label: &str, dim: usize, rng: &mut R) -> Result<MultipartiteState> {
    let rank = rng.random_range(1..=dim);
    random_density_with(label, dim, rank, rng)
}

/// Stochastic Givens ascent on `U` in `W = U W0`, maximizing `E_N(XA:B)`.
fn ascend(ext: &Extension, w0: &CMat, budget: usize, rng: &mut impl Rng) -> Result<(f64, CMat, usize)> {
    let k = w0.nrows();
    let mut w = w0.clone();
    let mut best = log_negativity(&ext.state(&w)?, &xa_b())?;
    let mut step = 0.5;
    let mut evals = 1;
    let mut fails = 0;
    while evals < budget && k >= 2 {
        let p = rng.random_range(0..k);
        let mut q = rng.random_range(0..k - 1);
        if q >= p {
            q += 1;
        }
        let theta = step * rng.random_range(-1.0..1.0);
        let phase: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let (s, co) = f64::sin_cos(theta);
        let ph = c(phase.cos(), phase.sin());
        let mut cand = w.clone();
        for col in 0..cand.ncols() {
            let wp = w[(p, col)];
            let wq = w[(q, col)];
            cand[(p, col)] = wp * cr(co) - ph.conj() * wq * cr(s);
            cand[(q, col)] = ph * wp * cr(s) + wq * cr(co);
        }
        let v = log_negativity(&ext.state(&cand)?, &xa_b())?;
        evals += 1;
        if v > best + 1e-13 {
            best = v;
            w = cand;
            fails = 0;
        } else {
            fails += 1;
            if fails >= 2 * k {
                step *= 0.5;
                fails = 0;
                if step < 1e-6 {
                    break;
                }
            }
        }
    }
    Ok((best, w, evals))
}

fn run_trial(params: &Conj5Params, trial: u64, seed: RngSeed, optimize: bool) -> Result<TrialOutput> {
    let mut rng = seed.rng();
    let log_x = (params.dim_x as f64).log2();
    match params.generator {
        Generator::LockingControl => {
            let st = control_with(params.dim_x, params.dim_a.max(params.dim_b), &mut rng)?;
            let e_n = log_negativity(&st, &xa_b())?;
            let d = st.dim_of("A")?;
            Ok(TrialOutput {
                record: TrialRecord {
                    trial,
                    seed,
                    dims: [params.dim_x, d, d, 1],
                    e_n,
                    slack: log_x - e_n,
                    optimized: false,
                    evaluations: 1,
                    start_e_n: e_n,
                },
                state: st,
            })
        }
        Generator::ProductExtension => {
            let ra = random_local("A", params.dim_a, &mut rng)?;
            let rb = random_local("B", params.dim_b, &mut rng)?;
            let rank = ra.rank() * rb.rank();
            let dim_g = params.dim_g.unwrap_or_else(|| rank.max(rank.div_ceil(params.dim_x)));
            let (st, ext, w0) = extension_with(&ra, &rb, params.dim_x, dim_g, &mut rng)?;
            let start = log_negativity(&st, &xa_b())?;
            let (e_n, state, evals) = if optimize {
                let (v, w, ev) = ascend(&ext, &w0, params.ascent_evals, &mut rng)?;
                (v, ext.state(&w)?, ev)
            } else {
                (start, st, 1)
            };
            Ok(TrialOutput {
                record: TrialRecord {
                    trial,
                    seed,
                    dims: [params.dim_x, params.dim_a, params.dim_b, dim_g],
                    e_n,
                    slack: log_x - e_n,
                    optimized: optimize,
                    evaluations: evals,
                    start_e_n: start,
                },
                state,
            })
        }
    }
}

/// One trial from an explicit seed. Recomputing with the same inputs reproduces the record.
pub fn conj5_trial(params: &Conj5Params, seed: RngSeed, optimize: bool) -> Result<TrialRecord> {
    run_trial(params, 0, seed, optimize).map(|o| o.record)
}

/// As [`conj5_trial`], also returning `rho_XAB`.
pub fn conj5_trial_state(
    params: &Conj5Params,
    seed: RngSeed,
    optimize: bool,
) -> Result<(TrialRecord, MultipartiteState)> {
    run_trial(params, 0, seed, optimize).map(|o| (o.record, o.state))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub record: TrialRecord,
    pub state: StateFile,
    /// Command line that replays the trial.
    pub reproduce: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conj5Summary {
    pub params: Conj5Params,
    pub seed: RngSeed,
    pub trials: usize,
    pub optimize: bool,
    pub min_slack: f64,
    pub argmin: TrialRecord,
    pub histogram: Vec<HistogramBin>,
    pub violations: Vec<Violation>,
}

impl Conj5Summary {
    /// `lo,hi,count` rows.
    pub fn histogram_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(["lo", "hi", "count"]).expect("in-memory write");
        for b in &self.histogram {
            w.write_record([b.lo.to_string(), b.hi.to_string(), b.count.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

const HIST_BINS: usize = 20;

fn histogram(slacks: &[f64], hi: f64) -> Vec<HistogramBin> {
    let lo = slacks.iter().cloned().fold(0.0f64, f64::min);
    let hi = if hi > lo { hi } else { lo + 1.0 };
    let width = (hi - lo) / HIST_BINS as f64;
    let mut bins: Vec<HistogramBin> = (0..HIST_BINS)
        .map(|i| HistogramBin {
            lo: lo + i as f64 * width,
            hi: lo + (i + 1) as f64 * width,
            count: 0,
        })
        .collect();
    for &s in slacks {
        let i = (((s - lo) / width).floor().max(0.0) as usize).min(HIST_BINS - 1);
        bins[i].count += 1;
    }
    bins
}

/// Command line replaying one trial of a campaign.
pub fn replay_command(params: &Conj5Params, record: &TrialRecord) -> String {
    let mut cmd = format!(
        "mutind conj5 --dims {},{},{} --trial-seed {}",
        params.dim_x, params.dim_a, params.dim_b, record.seed.0
    );
    if let Some(g) = params.dim_g {
        cmd.push_str(&format!(" --dim-g {g}"));
    }
    if record.optimized {
        cmd.push_str(&format!(" --optimize --ascent-evals {}", params.ascent_evals));
    }
    if params.generator == Generator::LockingControl {
        cmd.push_str(" --control");
    }
    cmd
}

/// Run `trials` trials; trial `k` uses `seed.derive(k)`.
///
/// A generator failure (marginal not product) aborts the campaign with an
/// error instead of being counted as a violation.
pub fn conj5_search(params: &Conj5Params, trials: usize, seed: RngSeed, optimize: bool) -> Result<Conj5Summary> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let outputs: Vec<TrialOutput> = (0..trials as u64)
        .into_par_iter()
        .map(|k| run_trial(params, k, seed.derive(k), optimize))
        .collect::<Result<Vec<_>>>()?;
    let slacks: Vec<f64> = outputs.iter().map(|o| o.record.slack).collect();
    let argmin = outputs
        .iter()
        .min_by(|a, b| {
            a.record
                .slack
                .partial_cmp(&b.record.slack)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.record.trial.cmp(&b.record.trial))
        })
        .expect("nonempty")
        .record
        .clone();
    let violations = outputs
        .iter()
        .filter(|o| o.record.slack < VIOLATION_TOL)
        .map(|o| Violation {
            record: o.record.clone(),
            state: StateFile::from_state(&o.state),
            reproduce: replay_command(params, &o.record),
        })
        .collect();
    Ok(Conj5Summary {
        params: params.clone(),
        seed,
        trials,
        optimize,
        min_slack: argmin.slack,
        argmin,
        histogram: histogram(&slacks, (params.dim_x as f64).log2()),
        violations,
    })
}

/// Minimum identity-distance `||A0||_F / ||A||_F` for a non-trivial operator.
pub const NONTRIVIAL_MARGIN: f64 = 1e-6;
/// Acceptance threshold for the search.
pub const CONJ4_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conj4Check {
    pub holds: bool,
    pub c: f64,
    pub residual: f64,
    pub margin_a: f64,
    pub margin_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorPair {
    pub a_op: MatrixFile,
    pub b_op: MatrixFile,
    pub c: f64,
    pub residual: f64,
    pub margin_a: f64,
    pub margin_b: f64,
}

/// Traceless part normalized to unit Frobenius norm, plus the margin `||A0|| / ||A||`.
fn normalize_traceless(a: &CMat) -> (CMat, f64) {
    let n = a.nrows();
    let tr = linalg::trace(a) / cr(n as f64);
    let a0 = a - CMat::identity(n, n) * tr;
    let na = linalg::frobenius(a);
    let n0 = linalg::frobenius(&a0);
    if na == 0.0 || n0 == 0.0 {
        return (a0, 0.0);
    }
    (a0 / cr(n0), n0 / na)
}

/// `(c, ||Pi X Pi - c Pi||_F)` with `c = Tr(Pi X Pi) / rank(Pi)`.
fn constancy(pi: &CMat, x: &CMat) -> (f64, f64) {
    let r = linalg::trace(pi).re.round().max(1.0);
    let px = pi * x * pi;
    let cval = linalg::trace(&px) / cr(r);
    let res = linalg::frobenius(&(px - pi * cval));
    (cval.re, res)
}

fn ordered_support(rho: &MultipartiteState, cut: &Cut) -> Result<(CMat, usize, usize)> {
    cut.check(rho)?;
    let order: Vec<&str> = cut.a_refs().into_iter().chain(cut.b_refs()).collect();
    let p = rho.permute(&order)?;
    let da = cut.a_refs().iter().map(|l| rho.dim_of(l)).product::<Result<usize>>()?;
    let db = p.total_dim() / da;
    Ok((p.to_density().support_projector(), da, db))
}

/// Does `Pi (A0 ⊗ B0) Pi = c Pi` hold for the identity-free, normalized parts?
///
/// Invariant under `A -> uA + v1`, `B -> wB + x1`; operators whose identity
/// distance is below [`NONTRIVIAL_MARGIN`] are rejected as trivial.
pub fn conj4_check(rho: &MultipartiteState, cut: &Cut, a: &CMat, b: &CMat, tol: f64) -> Result<Conj4Check> {
    let (pi, da, db) = ordered_support(rho, cut)?;
    if a.nrows() != da || !a.is_square() || b.nrows() != db || !b.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "operators must be {da}x{da} and {db}x{db}"
        )));
    }
    let (a0, ma) = normalize_traceless(a);
    let (b0, mb) = normalize_traceless(b);
    let (cval, residual) = constancy(&pi, &a0.kronecker(&b0));
    Ok(Conj4Check {
        holds: residual <= tol && ma >= NONTRIVIAL_MARGIN && mb >= NONTRIVIAL_MARGIN,
        c: cval,
        residual,
        margin_a: ma,
        margin_b: mb,
    })
}

/// Orthonormal (Hilbert-Schmidt) basis of traceless Hermitian `n x n` matrices.
fn traceless_basis(n: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(n * n - 1);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for p in 0..n {
        for q in p + 1..n {
            let mut s = CMat::zeros(n, n);
            s[(p, q)] = cr(h);
            s[(q, p)] = cr(h);
            out.push(s);
            let mut a = CMat::zeros(n, n);
            a[(p, q)] = c(0.0, -h);
            a[(q, p)] = c(0.0, h);
            out.push(a);
        }
    }
    for k in 1..n {
        let norm = ((k * (k + 1)) as f64).sqrt();
        let mut d = CMat::zeros(n, n);
        for i in 0..k {
            d[(i, i)] = cr(1.0 / norm);
        }
        d[(k, k)] = cr(-(k as f64) / norm);
        out.push(d);
    }
    out
}

/// Smallest right singular vector of the real stacking of the linear map
/// `x -> P_perp(Pi (sum_k x_k G_k ⊗ B) Pi)` (or with the roles swapped).
fn best_side(pi: &CMat, basis: &[CMat], other: &CMat, left: bool) -> (CMat, f64) {
    let r = linalg::trace(pi).re.round().max(1.0);
    let n = pi.nrows();
    let cols: Vec<CMat> = basis
        .iter()
        .map(|g| {
            let x = if left { g.kronecker(other) } else { other.kronecker(g) };
            let px = pi * x * pi;
            let cval = linalg::trace(&px) / cr(r);
            px - pi * cval
        })
        .collect();
    let m = basis.len();
    let mut real = nalgebra::DMatrix::<f64>::zeros(2 * n * n, m);
    for (k, col) in cols.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            real[(i, k)] = z.re;
            real[(n * n + i, k)] = z.im;
        }
    }
    let gram = real.transpose() * &real;
    let eig = gram.symmetric_eigen();
    let (idx, val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(i, v)| (i, *v))
        .expect("nonempty basis");
    let x = eig.eigenvectors.column(idx);
    let mut op = CMat::zeros(basis[0].nrows(), basis[0].ncols());
    for (k, g) in basis.iter().enumerate() {
        op += g * cr(x[k]);
    }
    (op, val.max(0.0).sqrt())
}

/// Alternating least squares for a non-trivial pair with `Pi (A ⊗ B) Pi = c Pi`.
///
/// `A` and `B` range over unit-norm traceless Hermitian operators; each half
/// step minimizes the residual exactly over one side. Start `k` draws its
/// initial `B` from `seed.derive(k)`. Returns the first pair with residual at
/// most [`CONJ4_TOL`].
pub fn conj4_search(rho: &MultipartiteState, cut: &Cut, seed: RngSeed, restarts: usize) -> Result<Option<OperatorPair>> {
    let (pi, da, db) = ordered_support(rho, cut)?;
    if da < 2 || db < 2 {
        return Err(Error::InvalidArgument("both sides need dimension at least 2".into()));
    }
    let basis_a = traceless_basis(da);
    let basis_b = traceless_basis(db);
    let found: Vec<Option<OperatorPair>> = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed.derive(k).rng();
            let mut b = CMat::zeros(db, db);
            for g in &basis_b {
                let x: f64 = rng.random_range(-1.0..1.0);
                b += g * cr(x);
            }
            b /= cr(linalg::frobenius(&b));
            let mut a = CMat::zeros(da, da);
            let mut res = f64::INFINITY;
            for _ in 0..400 {
                let (na, _) = best_side(&pi, &basis_a, &b, true);
                a = na;
                let (nb, r) = best_side(&pi, &basis_b, &a, false);
                b = nb;
                let prev = res;
                res = r;
                if res <= CONJ4_TOL * 1e-2 || (prev - res).abs() <= 1e-14 {
                    break;
                }
            }
            let (cval, residual) = constancy(&pi, &a.kronecker(&b));
            (residual <= CONJ4_TOL).then(|| OperatorPair {
                a_op: MatrixFile::from_matrix(&a),
                b_op: MatrixFile::from_matrix(&b),
                c: cval,
                residual,
                margin_a: 1.0,
                margin_b: 1.0,
            })
        })
        .collect();
    Ok(found.into_iter().flatten().next())
}

fn check_pmatrix(p_matrix: &[Vec<f64>]) -> Result<usize> {
    let d = p_matrix.len();
    if d == 0 || p_matrix.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidArgument("p_ij must be a nonempty square table".into()));
    }
    let total: f64 = p_matrix.iter().flatten().sum();
    if p_matrix.iter().flatten().any(|&x| x < 0.0) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::invariant(
            "probabilities nonnegative and summing to 1",
            format!("p_ij sums to {total}"),
        ));
    }
    Ok(d)
}

/// `sum_ij p_ij |ij><ij| ⊗ ((1-p) 1/d + p|i><i|)_E1 ⊗ ((1-p) 1/d + p|j><j|)_E2`.
pub fn build_local_eve_state(p_matrix: &[Vec<f64>], p: f64) -> Result<MultipartiteState> {
    let d = check_pmatrix(p_matrix)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p must lie in [0,1], got {p}")));
    }
    let n = d.pow(4);
    let mut m = CMat::zeros(n, n);
    let noisy = |i: usize, k: usize| (1.0 - p) / d as f64 + if i == k { p } else { 0.0 };
    for i in 0..d {
        for j in 0..d {
            for e1 in 0..d {
                for e2 in 0..d {
                    let idx = ((i * d + j) * d + e1) * d + e2;
                    m[(idx, idx)] = cr(p_matrix[i][j] * noisy(i, e1) * noisy(j, e2));
                }
            }
        }
    }
    MultipartiteState::density(
        m,
        ["A", "B", "E1", "E2"].iter().map(|l| Subsystem::new(*l, d)).collect(),
    )
}

/// The local-Eve state purified with the purification handed to Alice and Bob.
///
/// Alice holds `A` and `A' = (copy of i, purifier of E1's noise)`, Bob likewise;
/// Eve's `E1 E2` is traced out. Labels `A, A', B, B'` with `dim A' = d^2`.
pub fn local_eve_shared_state(p_matrix: &[Vec<f64>], p: f64) -> Result<MultipartiteState> {
    let d = check_pmatrix(p_matrix)?;
    let lam = |i: usize, k: usize| (1.0 - p) / d as f64 + if i == k { p } else { 0.0 };
    // Order: A, A1, A2, B, B1, B2, E1, E2.
    let dims = [d; 8];
    let total = d.pow(8);
    let mut v = CVec::zeros(total);
    for i in 0..d {
        for j in 0..d {
            if p_matrix[i][j] == 0.0 {
                continue;
            }
            for k in 0..d {
                for l in 0..d {
                    let digits = [i, i, k, j, j, l, k, l];
                    let idx = linalg::linear(&digits, &dims);
                    v[idx] = cr((p_matrix[i][j] * lam(i, k) * lam(j, l)).sqrt());
                }
            }
        }
    }
    let psi = MultipartiteState::pure(
        v,
        vec![
            Subsystem::new("A", d),
            Subsystem::new("A'", d * d),
            Subsystem::new("B", d),
            Subsystem::new("B'", d * d),
            Subsystem::new("E", d * d),
        ],
    )?;
    psi.partial_trace(&["A", "A'", "B", "B'"])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::mutual_info;
    use crate::tensor::random::random_density;

    #[test]
    fn extension_marginal_is_product() {
        let ra = random_density(2, 2, RngSeed(1)).unwrap();
        let rb = random_density(2, 2, RngSeed(2)).unwrap();
        let s = gen_product_extension(&ra, &rb, 2, 2, RngSeed(3)).unwrap();
        let m = s.partial_trace(&["A", "B"]).unwrap();
        let target = product_ab(&ra, &rb).unwrap();
        assert!(linalg::max_abs(&(m.matrix() - target.matrix())) < 1e-10);
        assert!(gen_product_extension(&ra, &rb, 1, 2, RngSeed(3)).is_err());
    }

    #[test]
    fn trivial_x_has_zero_slack() {
        let p = Conj5Params::new(1, 2, 2);
        let sum = conj5_search(&p, 20, RngSeed(5), false).unwrap();
        assert!(sum.min_slack >= -1e-12, "{}", sum.min_slack);
    }

    #[test]
    fn trials_reproduce_from_seed() {
        let p = Conj5Params::new(2, 2, 3);
        let sum = conj5_search(&p, 8, RngSeed(7), true).unwrap();
        let again = conj5_trial(&p, sum.argmin.seed, true).unwrap();
        assert_eq!(again.e_n.to_bits(), sum.argmin.e_n.to_bits());
    }

    #[test]
    fn control_is_flagged() {
        let mut p = Conj5Params::new(2, 4, 4);
        p.generator = Generator::LockingControl;
        let sum = conj5_search(&p, 3, RngSeed(1), false).unwrap();
        assert_eq!(sum.violations.len(), 3);
        assert!((sum.min_slack + 1.0).abs() < 1e-9);
    }

    #[test]
    fn sigma_z_pair_on_maximally_correlated() {
        let s = states::bell_mixture("A", "B", 0.3).unwrap();
        let cut = Cut::new(&["A"], &["B"]);
        let z = CMat::from_diagonal(&CVec::from_vec(vec![cr(1.0), cr(-1.0)]));
        let chk = conj4_check(&s, &cut, &z, &z, 1e-10).unwrap();
        assert!(chk.holds && chk.residual <= 1e-10);
        let id = CMat::identity(2, 2);
        assert!(!conj4_check(&s, &cut, &id, &id, 1e-10).unwrap().holds);
        let found = conj4_search(&s, &cut, RngSeed(2), 4).unwrap().expect("pair exists");
        assert!(found.residual <= CONJ4_TOL);
    }

    #[test]
    fn local_eve_examples() {
        let d = 2;
        let uniform = vec![vec![0.25; d]; d];
        let s = build_local_eve_state(&uniform, 0.0).unwrap();
        assert!(mutual_info(&s, &["A", "B"], &["E1", "E2"]).unwrap().abs() < 1e-12);
        let s = build_local_eve_state(&uniform, 1.0).unwrap();
        assert!((mutual_info(&s, &["A"], &["E1"]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shared_local_eve_admits_diagonal_pair() {
        let corr = vec![vec![0.5, 0.0], vec![0.0, 0.5]];
        let s = local_eve_shared_state(&corr, 0.3).unwrap();
        s.validate().unwrap();
        let cut = Cut::new(&["A", "A'"], &["B", "B'"]);
        let z = CMat::from_diagonal(&CVec::from_vec(vec![cr(1.0), cr(-1.0)]));
        let za = z.kronecker(&CMat::identity(4, 4));
        let chk = conj4_check(&s, &cut, &za, &za, 1e-10).unwrap();
        assert!(chk.holds, "{chk:?}");
    }
}
