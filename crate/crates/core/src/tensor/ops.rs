use super::linalg::{self, cr, CMat, CVec, RANK_CUTOFF};
use super::state::{MultipartiteState, Subsystem, STATE_TOL};
use crate::error::{Error, Result};

/// Tolerance on `V^dagger V = 1`.
pub const ISOMETRY_TOL: f64 = 1e-10;

/// An isometry between labeled spaces, stored as a `dout x din` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Isometry {
    matrix: CMat,
    in_dims: Vec<Subsystem>,
    out_dims: Vec<Subsystem>,
}

impl Isometry {
    pub fn new(matrix: CMat, in_dims: Vec<Subsystem>, out_dims: Vec<Subsystem>) -> Result<Self> {
        let din: usize = in_dims.iter().map(|s| s.dim).product();
        let dout: usize = out_dims.iter().map(|s| s.dim).product();
        if matrix.nrows() != dout || matrix.ncols() != din {
            return Err(Error::DimensionMismatch(format!(
                "isometry matrix is {}x{}, labeled dims give {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                dout,
                din
            )));
        }
        if dout < din {
            return Err(Error::invariant(
                "output dim >= input dim",
                format!("{dout} < {din}"),
            ));
        }
        let defect = linalg::max_abs(&(matrix.adjoint() * &matrix - CMat::identity(din, din)));
        if defect > ISOMETRY_TOL {
            return Err(Error::invariant(
                "V^dagger V = 1",
                format!("max deviation {defect:e}"),
            ));
        }
        Ok(Isometry {
            matrix,
            in_dims,
            out_dims,
        })
    }

    /// A unitary acting on `dims` (same labels in and out).
    pub fn unitary(matrix: CMat, dims: Vec<Subsystem>) -> Result<Self> {
        Self::new(matrix, dims.clone(), dims)
    }

    pub fn identity(dims: Vec<Subsystem>) -> Self {
        let n = dims.iter().map(|s| s.dim).product();
        Isometry {
            matrix: CMat::identity(n, n),
            in_dims: dims.clone(),
            out_dims: dims,
        }
    }

    /// Exchange two adjacent subsystems: `|i>_A |j>_B -> |j>_B |i>_A`.
    pub fn swap(a: Subsystem, b: Subsystem) -> Self {
        let (da, db) = (a.dim, b.dim);
        let n = da * db;
        let mut m = CMat::zeros(n, n);
        for i in 0..da {
            for j in 0..db {
                m[(j * da + i, i * db + j)] = cr(1.0);
            }
        }
        Isometry {
            matrix: m,
            in_dims: vec![a.clone(), b.clone()],
            out_dims: vec![b, a],
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn in_dims(&self) -> &[Subsystem] {
        &self.in_dims
    }

    pub fn out_dims(&self) -> &[Subsystem] {
        &self.out_dims
    }

    pub fn adjoint_matrix(&self) -> CMat {
        self.matrix.adjoint()
    }
}

impl MultipartiteState {
    /// Apply `v` to the contiguous block of subsystems named by `v.in_dims()`.
    pub fn apply_isometry(&self, v: &Isometry) -> Result<Self> {
        let labels = self.labels();
        let first = v
            .in_dims
            .first()
            .ok_or_else(|| Error::DimensionMismatch("isometry has no input subsystems".into()))?;
        let start = self.position(&first.label)?;
        for (k, sub) in v.in_dims.iter().enumerate() {
            let here = self.subsystems().get(start + k);
            if here != Some(sub) {
                return Err(Error::DimensionMismatch(format!(
                    "isometry input {}({}) does not match subsystem {} of the state ({:?})",
                    sub.label,
                    sub.dim,
                    start + k,
                    here.map(|s| (&s.label, s.dim))
                )));
            }
        }
        let end = start + v.in_dims.len();
        for sub in &v.out_dims {
            let clash = labels[..start].contains(&sub.label.as_str())
                || labels[end..].contains(&sub.label.as_str());
            if clash {
                return Err(Error::LabelCollision(sub.label.clone()));
            }
        }
        let dims = self.local_dims();
        let left: usize = dims[..start].iter().product();
        let right: usize = dims[end..].iter().product();
        let w = CMat::identity(left, left)
            .kronecker(&v.matrix)
            .kronecker(&CMat::identity(right, right));
        let mut out_dims: Vec<Subsystem> = self.subsystems()[..start].to_vec();
        out_dims.extend(v.out_dims.iter().cloned());
        out_dims.extend(self.subsystems()[end..].iter().cloned());
        match self.vector() {
            Some(psi) => MultipartiteState::pure(&w * psi, out_dims),
            None => {
                let m = self.as_matrix().expect("density");
                MultipartiteState::density_unchecked(&w * m * w.adjoint(), out_dims)
            }
        }
    }

    /// Purification on `self ⊗ purifier`, with purifier dimension equal to the numerical rank.
    ///
    /// Built as `sum_i sqrt(lambda_i) |v_i>|i>` over eigenpairs sorted descending.
    pub fn purify(&self, purifier_label: &str) -> Result<MultipartiteState> {
        if self.has_label(purifier_label) {
            return Err(Error::LabelCollision(purifier_label.to_string()));
        }
        let mut dims = self.subsystems().to_vec();
        if let Some(v) = self.vector() {
            dims.push(Subsystem::new(purifier_label, 1));
            return MultipartiteState::pure(v.clone(), dims);
        }
        let eig = self.eigen();
        if let Some(&min) = eig.values.last() {
            if min < -STATE_TOL {
                return Err(Error::invariant(
                    "positive semidefinite",
                    format!("cannot purify: minimum eigenvalue {min:e}"),
                ));
            }
        }
        let rank = eig.rank().max(1);
        let n = self.total_dim();
        let mut psi = CVec::zeros(n * rank);
        for k in 0..rank {
            let w = eig.values[k].max(0.0).sqrt();
            for i in 0..n {
                psi[i * rank + k] = eig.vectors[(i, k)] * cr(w);
            }
        }
        let norm = psi.norm();
        if norm > 0.0 {
            psi /= cr(norm);
        }
        dims.push(Subsystem::new(purifier_label, rank));
        MultipartiteState::pure(psi, dims)
    }

    /// Numerical support projector of the density matrix (cutoff 1e-12).
    pub fn support_projector(&self) -> CMat {
        self.eigen().support_projector()
    }

    /// Dephase the listed subsystems in their computational bases.
    pub fn dephase(&self, labels: &[&str]) -> Result<Self> {
        let pos = labels
            .iter()
            .map(|l| self.position(l))
            .collect::<Result<Vec<_>>>()?;
        let m = self.matrix();
        let dims = self.local_dims();
        let n = self.total_dim();
        let mut di = vec![0usize; dims.len()];
        let mut dj = vec![0usize; dims.len()];
        let out = CMat::from_fn(n, n, |i, j| {
            linalg::digits(i, &dims, &mut di);
            linalg::digits(j, &dims, &mut dj);
            if pos.iter().all(|&p| di[p] == dj[p]) {
                m[(i, j)]
            } else {
                cr(0.0)
            }
        });
        MultipartiteState::density_unchecked(out, self.subsystems().to_vec())
    }

    /// Reinterpret the subsystem list without touching the amplitudes.
    ///
    /// `dims` must multiply to the same total; useful for merging adjacent
    /// subsystems into one or splitting one into a product.
    pub fn regroup(&self, dims: Vec<Subsystem>) -> Result<Self> {
        let total: usize = dims.iter().map(|s| s.dim).product();
        if total != self.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "regrouping into dimension {total}, state has {}",
                self.total_dim()
            )));
        }
        match self.vector() {
            Some(v) => MultipartiteState::pure(v.clone(), dims),
            None => MultipartiteState::density_unchecked(self.matrix(), dims),
        }
    }
}

/// `||a - b||_1 / 2` between two states on identical subsystems.
pub fn trace_distance(a: &MultipartiteState, b: &MultipartiteState) -> Result<f64> {
    if a.subsystems() != b.subsystems() {
        return Err(Error::DimensionMismatch(
            "trace distance needs identical subsystem lists".into(),
        ));
    }
    Ok(linalg::trace_distance(&a.matrix(), &b.matrix()))
}

/// `tensor_product(a, b)`; alias of [`MultipartiteState::tensor`].
pub fn tensor_product(a: &MultipartiteState, b: &MultipartiteState) -> Result<MultipartiteState> {
    a.tensor(b)
}

/// Rank of a density matrix at the shared cutoff.
pub fn numerical_rank(m: &CMat) -> usize {
    linalg::herm_eigenvalues(m)
        .iter()
        .filter(|&&v| v > RANK_CUTOFF)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::linalg::CVec;

    #[test]
    fn purify_pure_input_has_trivial_purifier() {
        let s = MultipartiteState::basis("A", 3, 1);
        let p = s.purify("R").unwrap();
        assert_eq!(p.dim_of("R").unwrap(), 1);
        let back = p.partial_trace(&["A"]).unwrap();
        assert!(linalg::max_abs(&(back.matrix() - s.matrix())) < 1e-12);
    }

    #[test]
    fn purify_maximally_mixed_qubit_gives_bell_schmidt() {
        let s = MultipartiteState::maximally_mixed("A", 2);
        let p = s.purify("R").unwrap();
        assert_eq!(p.dim_of("R").unwrap(), 2);
        let a = p.partial_trace(&["A"]).unwrap();
        let sch = a.spectrum();
        assert!((sch[0] - 0.5).abs() < 1e-12 && (sch[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn purify_rejects_non_psd() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![cr(1.5), cr(-0.5)]));
        let s = MultipartiteState::density_unchecked(m, vec![Subsystem::new("A", 2)]).unwrap();
        assert!(s.purify("R").is_err());
    }

    #[test]
    fn swap_isometry_exchanges_factors() {
        let a = MultipartiteState::basis("A", 2, 1);
        let b = MultipartiteState::basis("B", 3, 2);
        let ab = a.tensor(&b).unwrap();
        let sw = Isometry::swap(Subsystem::new("A", 2), Subsystem::new("B", 3));
        let out = ab.apply_isometry(&sw).unwrap();
        assert_eq!(out.labels(), vec!["B", "A"]);
        assert_eq!(out.matrix(), b.tensor(&a).unwrap().matrix());
    }

    #[test]
    fn identity_isometry_is_noop_and_mismatch_is_rejected() {
        let s = MultipartiteState::maximally_mixed("A", 2)
            .tensor(&MultipartiteState::basis("B", 2, 0))
            .unwrap();
        let id = Isometry::identity(vec![Subsystem::new("B", 2)]);
        assert_eq!(s.apply_isometry(&id).unwrap(), s);
        let bad = Isometry::identity(vec![Subsystem::new("B", 3)]);
        assert!(matches!(
            s.apply_isometry(&bad),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn non_isometry_is_rejected() {
        let m = CMat::from_element(2, 2, cr(1.0));
        assert!(Isometry::unitary(m, vec![Subsystem::new("A", 2)]).is_err());
    }
}
