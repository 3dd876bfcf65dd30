//! Labeled multipartite states and the index arithmetic behind them.
//!
//! Subsystems are ordered; every reshape uses row-major linearization, so the
//! first label is the most significant digit of a basis index.

use serde::{Deserialize, Serialize};

use super::linalg::{
    self, cr, herm_eigh, herm_eigenvalues, hermiticity_defect, outer, trace, CMat, CVec,
    HermEigen, HERMITIAN_TOL, RANK_CUTOFF,
};
use crate::error::{Error, Result};

/// Tolerance on trace, normalization and negative eigenvalues for a valid state.
pub const STATE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subsystem {
    pub label: String,
    pub dim: usize,
}

impl Subsystem {
    pub fn new(label: impl Into<String>, dim: usize) -> Self {
        Subsystem {
            label: label.into(),
            dim,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    Density,
    PureVector,
}

#[derive(Clone, Debug, PartialEq)]
enum Data {
    Density(CMat),
    Pure(CVec),
}

/// A density operator or pure vector on an ordered list of labeled subsystems.
#[derive(Clone, Debug, PartialEq)]
pub struct MultipartiteState {
    data: Data,
    dims: Vec<Subsystem>,
}

fn check_dims(dims: &[Subsystem]) -> Result<usize> {
    let mut seen = std::collections::HashSet::new();
    for s in dims {
        if s.dim == 0 {
            return Err(Error::invariant(
                "positive dims",
                format!("subsystem {} has dimension 0", s.label),
            ));
        }
        if !seen.insert(s.label.as_str()) {
            return Err(Error::LabelCollision(s.label.clone()));
        }
    }
    Ok(dims.iter().map(|s| s.dim).product())
}

impl MultipartiteState {
    /// Wrap a density matrix, checking every invariant.
    pub fn density(matrix: CMat, dims: Vec<Subsystem>) -> Result<Self> {
        let s = Self::density_unchecked(matrix, dims)?;
        s.validate()?;
        Ok(s)
    }

    /// Wrap a density matrix checking only shape and labels.
    ///
    /// Used for intermediate operators (e.g. partial transposes) that are not states.
    pub fn density_unchecked(matrix: CMat, dims: Vec<Subsystem>) -> Result<Self> {
        let total = check_dims(&dims)?;
        if !matrix.is_square() || matrix.nrows() != total {
            return Err(Error::invariant(
                "product of dims equals matrix side",
                format!(
                    "matrix is {}x{}, dims multiply to {}",
                    matrix.nrows(),
                    matrix.ncols(),
                    total
                ),
            ));
        }
        Ok(MultipartiteState {
            data: Data::Density(matrix),
            dims,
        })
    }

    /// Wrap a pure state vector. The vector must have unit norm.
    pub fn pure(vector: CVec, dims: Vec<Subsystem>) -> Result<Self> {
        let total = check_dims(&dims)?;
        if vector.len() != total {
            return Err(Error::invariant(
                "product of dims equals vector length",
                format!("vector has length {}, dims multiply to {}", vector.len(), total),
            ));
        }
        let n = vector.norm();
        if (n - 1.0).abs() > STATE_TOL {
            return Err(Error::invariant("unit norm", format!("norm is {n}")));
        }
        Ok(MultipartiteState {
            data: Data::Pure(vector),
            dims,
        })
    }

    /// The one-dimensional state with no subsystems.
    pub fn trivial() -> Self {
        MultipartiteState {
            data: Data::Density(CMat::from_element(1, 1, cr(1.0))),
            dims: vec![],
        }
    }

    /// Maximally mixed state `1/d` on a single labeled subsystem.
    pub fn maximally_mixed(label: &str, dim: usize) -> Self {
        MultipartiteState {
            data: Data::Density(CMat::identity(dim, dim) * cr(1.0 / dim as f64)),
            dims: vec![Subsystem::new(label, dim)],
        }
    }

    /// Computational basis projector `|k><k|` on one subsystem.
    pub fn basis(label: &str, dim: usize, k: usize) -> Self {
        let mut v = CVec::zeros(dim);
        v[k] = cr(1.0);
        MultipartiteState {
            data: Data::Density(outer(&v)),
            dims: vec![Subsystem::new(label, dim)],
        }
    }

    /// Check Hermiticity, positivity and unit trace (density) or unit norm (pure).
    pub fn validate(&self) -> Result<()> {
        check_dims(&self.dims)?;
        match &self.data {
            Data::Pure(v) => {
                let n = v.norm();
                if (n - 1.0).abs() > STATE_TOL {
                    return Err(Error::invariant("unit norm", format!("norm is {n}")));
                }
            }
            Data::Density(m) => {
                let h = hermiticity_defect(m);
                if h > HERMITIAN_TOL {
                    return Err(Error::invariant(
                        "Hermitian",
                        format!("max |M - M^dagger| entry is {h:e}"),
                    ));
                }
                let tr = trace(m);
                if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
                    return Err(Error::invariant("unit trace", format!("trace is {tr}")));
                }
                let min = herm_eigenvalues(m).last().copied().unwrap_or(0.0);
                if min < -STATE_TOL {
                    return Err(Error::invariant(
                        "positive semidefinite",
                        format!("minimum eigenvalue is {min:e}"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> StateKind {
        match self.data {
            Data::Density(_) => StateKind::Density,
            Data::Pure(_) => StateKind::PureVector,
        }
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.dims
    }

    pub fn labels(&self) -> Vec<&str> {
        self.dims.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn local_dims(&self) -> Vec<usize> {
        self.dims.iter().map(|s| s.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().map(|s| s.dim).product()
    }

    pub fn has_label(&self, label: &str) -> bool {
        self.dims.iter().any(|s| s.label == label)
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        self.dims
            .iter()
            .find(|s| s.label == label)
            .map(|s| s.dim)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub(crate) fn position(&self, label: &str) -> Result<usize> {
        self.dims
            .iter()
            .position(|s| s.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// The density matrix (computed as `|v><v|` for pure vectors).
    pub fn matrix(&self) -> CMat {
        match &self.data {
            Data::Density(m) => m.clone(),
            Data::Pure(v) => outer(v),
        }
    }

    /// Borrow the density matrix when the state is stored as one.
    pub fn as_matrix(&self) -> Option<&CMat> {
        match &self.data {
            Data::Density(m) => Some(m),
            Data::Pure(_) => None,
        }
    }

    pub fn vector(&self) -> Option<&CVec> {
        match &self.data {
            Data::Pure(v) => Some(v),
            Data::Density(_) => None,
        }
    }

    /// Convert to density kind.
    pub fn to_density(&self) -> Self {
        MultipartiteState {
            data: Data::Density(self.matrix()),
            dims: self.dims.clone(),
        }
    }

    pub fn eigen(&self) -> HermEigen {
        herm_eigh(&self.matrix())
    }

    /// Spectrum, descending. Pure vectors give `[1, 0, ...]` without diagonalizing.
    pub fn spectrum(&self) -> Vec<f64> {
        match &self.data {
            Data::Density(m) => herm_eigenvalues(m),
            Data::Pure(v) => {
                let mut s = vec![0.0; v.len()];
                s[0] = v.norm_squared();
                s
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.spectrum().iter().filter(|&&v| v > RANK_CUTOFF).count()
    }

    pub fn relabel(mut self, from: &str, to: &str) -> Result<Self> {
        if from != to && self.has_label(to) {
            return Err(Error::LabelCollision(to.to_string()));
        }
        let p = self.position(from)?;
        self.dims[p].label = to.to_string();
        Ok(self)
    }

    fn resolve(&self, labels: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(labels.len());
        for l in labels {
            let p = self.position(l)?;
            if out.contains(&p) {
                return Err(Error::LabelCollision(l.to_string()));
            }
            out.push(p);
        }
        Ok(out)
    }

    /// `self ⊗ other`, subsystems concatenated in order.
    pub fn tensor(&self, other: &MultipartiteState) -> Result<Self> {
        for s in &other.dims {
            if self.has_label(&s.label) {
                return Err(Error::LabelCollision(s.label.clone()));
            }
        }
        let mut dims = self.dims.clone();
        dims.extend(other.dims.iter().cloned());
        let data = match (&self.data, &other.data) {
            (Data::Pure(a), Data::Pure(b)) => Data::Pure(a.kronecker(b)),
            _ => Data::Density(self.matrix().kronecker(&other.matrix())),
        };
        Ok(MultipartiteState { data, dims })
    }

    /// Reorder subsystems. `order` must be a permutation of the labels.
    pub fn permute(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "permutation lists {} labels, state has {}",
                order.len(),
                self.dims.len()
            )));
        }
        let perm = self.resolve(order)?;
        let old_dims = self.local_dims();
        let new_dims: Vec<usize> = perm.iter().map(|&p| old_dims[p]).collect();
        let n = self.total_dim();
        // map[new_index] = old_index
        let mut map = vec![0usize; n];
        let mut nd = vec![0usize; new_dims.len()];
        let mut od = vec![0usize; old_dims.len()];
        for (i, slot) in map.iter_mut().enumerate() {
            linalg::digits(i, &new_dims, &mut nd);
            for (k, &p) in perm.iter().enumerate() {
                od[p] = nd[k];
            }
            *slot = linalg::linear(&od, &old_dims);
        }
        let data = match &self.data {
            Data::Pure(v) => Data::Pure(CVec::from_fn(n, |i, _| v[map[i]])),
            Data::Density(m) => Data::Density(CMat::from_fn(n, n, |i, j| m[(map[i], map[j])])),
        };
        let dims = perm.iter().map(|&p| self.dims[p].clone()).collect();
        Ok(MultipartiteState { data, dims })
    }

    /// Index table: `table[kept][traced]` is the full index.
    fn split_indices(&self, keep: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<Vec<usize>>) {
        let all = self.local_dims();
        let traced: Vec<usize> = (0..all.len()).filter(|p| !keep.contains(p)).collect();
        let kd: Vec<usize> = keep.iter().map(|&p| all[p]).collect();
        let td: Vec<usize> = traced.iter().map(|&p| all[p]).collect();
        let nk: usize = kd.iter().product();
        let nt: usize = td.iter().product();
        let mut table = vec![vec![0usize; nt]; nk];
        let mut kdig = vec![0usize; kd.len()];
        let mut tdig = vec![0usize; td.len()];
        let mut full = vec![0usize; all.len()];
        for (a, row) in table.iter_mut().enumerate() {
            linalg::digits(a, &kd, &mut kdig);
            for (k, &p) in keep.iter().enumerate() {
                full[p] = kdig[k];
            }
            for (t, slot) in row.iter_mut().enumerate() {
                linalg::digits(t, &td, &mut tdig);
                for (k, &p) in traced.iter().enumerate() {
                    full[p] = tdig[k];
                }
                *slot = linalg::linear(&full, &all);
            }
        }
        (kd, td, table)
    }

    /// Reshape a pure vector into the `kept x traced` coefficient matrix.
    pub fn coefficient_matrix(&self, keep: &[&str]) -> Result<CMat> {
        let v = self.vector().ok_or_else(|| {
            Error::Precondition("coefficient matrix needs a pure vector".into())
        })?;
        let keep_pos = self.resolve(keep)?;
        let (_, _, table) = self.split_indices(&keep_pos);
        let nt = table.first().map_or(1, |r| r.len());
        Ok(CMat::from_fn(table.len(), nt, |a, t| v[table[a][t]]))
    }

    /// Reduced state on `keep`, which keeps its original relative order.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<Self> {
        let mut keep_pos = self.resolve(keep)?;
        keep_pos.sort_unstable();
        let (_, _, table) = self.split_indices(&keep_pos);
        let nk = table.len();
        let nt = table.first().map_or(1, |r| r.len());
        let out = match &self.data {
            Data::Pure(v) => {
                let psi = CMat::from_fn(nk, nt, |a, t| v[table[a][t]]);
                &psi * psi.adjoint()
            }
            Data::Density(m) => CMat::from_fn(nk, nk, |a, b| {
                let mut acc = cr(0.0);
                for t in 0..nt {
                    acc += m[(table[a][t], table[b][t])];
                }
                acc
            }),
        };
        let dims = keep_pos.iter().map(|&p| self.dims[p].clone()).collect();
        Ok(MultipartiteState {
            data: Data::Density(out),
            dims,
        })
    }

    /// Trace out the listed labels.
    pub fn trace_out(&self, labels: &[&str]) -> Result<Self> {
        self.resolve(labels)?;
        let keep: Vec<&str> = self
            .labels()
            .into_iter()
            .filter(|l| !labels.contains(l))
            .collect();
        self.partial_trace(&keep)
    }

    /// Transpose the listed subsystems. Output is a Hermitian operator that need not be PSD.
    pub fn partial_transpose(&self, flip: &[&str]) -> Result<Self> {
        let m = self.as_matrix().ok_or_else(|| {
            Error::Precondition("partial transpose needs a density operator".into())
        })?;
        let flip_pos = self.resolve(flip)?;
        let dims = self.local_dims();
        let n = self.total_dim();
        let mut out = CMat::zeros(n, n);
        let mut di = vec![0usize; dims.len()];
        let mut dj = vec![0usize; dims.len()];
        for i in 0..n {
            for j in 0..n {
                linalg::digits(i, &dims, &mut di);
                linalg::digits(j, &dims, &mut dj);
                for &p in &flip_pos {
                    std::mem::swap(&mut di[p], &mut dj[p]);
                }
                out[(i, j)] = m[(linalg::linear(&di, &dims), linalg::linear(&dj, &dims))];
            }
        }
        Ok(MultipartiteState {
            data: Data::Density(out),
            dims: self.dims.clone(),
        })
    }
}
