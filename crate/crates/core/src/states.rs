//! Named states used across the toolkit and its examples.

use crate::error::{Error, Result};
use crate::tensor::linalg::{cr, outer, CMat, CVec};
use crate::tensor::{MultipartiteState, Subsystem};

/// `|Phi_d> = d^{-1/2} sum_i |ii>` as a pure vector.
pub fn max_entangled_vector(a: &str, b: &str, d: usize) -> MultipartiteState {
    let mut v = CVec::zeros(d * d);
    let amp = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        v[i * d + i] = cr(amp);
    }
    MultipartiteState::pure(v, vec![Subsystem::new(a, d), Subsystem::new(b, d)])
        .expect("normalized")
}

/// `Phi_d` as a density matrix.
pub fn max_entangled(a: &str, b: &str, d: usize) -> MultipartiteState {
    max_entangled_vector(a, b, d).to_density()
}

/// Two-qubit `Phi+` as a density matrix.
pub fn phi_plus(a: &str, b: &str) -> MultipartiteState {
    max_entangled(a, b, 2)
}

/// Bell state density matrices `Phi+`, `Phi-`, `Psi+`, `Psi-`.
pub fn bell(a: &str, b: &str, which: Bell) -> MultipartiteState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CVec::zeros(4);
    match which {
        Bell::PhiPlus => {
            v[0] = cr(h);
            v[3] = cr(h);
        }
        Bell::PhiMinus => {
            v[0] = cr(h);
            v[3] = cr(-h);
        }
        Bell::PsiPlus => {
            v[1] = cr(h);
            v[2] = cr(h);
        }
        Bell::PsiMinus => {
            v[1] = cr(h);
            v[2] = cr(-h);
        }
    }
    MultipartiteState::density(outer(&v), vec![Subsystem::new(a, 2), Subsystem::new(b, 2)])
        .expect("valid")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bell {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

/// `(1 - eps) Phi+ + eps Phi-`.
pub fn bell_mixture(a: &str, b: &str, eps: f64) -> Result<MultipartiteState> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("eps must lie in [0,1], got {eps}")));
    }
    let m = bell(a, b, Bell::PhiPlus).matrix() * cr(1.0 - eps)
        + bell(a, b, Bell::PhiMinus).matrix() * cr(eps);
    MultipartiteState::density(m, vec![Subsystem::new(a, 2), Subsystem::new(b, 2)])
}

/// `d^{-1} sum_i |ii><ii|`.
pub fn classically_correlated(a: &str, b: &str, d: usize) -> MultipartiteState {
    let mut m = CMat::zeros(d * d, d * d);
    for i in 0..d {
        m[(i * d + i, i * d + i)] = cr(1.0 / d as f64);
    }
    MultipartiteState::density(m, vec![Subsystem::new(a, d), Subsystem::new(b, d)])
        .expect("valid")
}

/// `d^{-1/2} sum_i |i...i>` on the given labels, as a pure vector.
pub fn ghz(labels: &[&str], d: usize) -> MultipartiteState {
    let n = labels.len() as u32;
    let total = d.pow(n);
    let mut v = CVec::zeros(total);
    let amp = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        let idx = (0..n).fold(0, |acc, _| acc * d + i);
        v[idx] = cr(amp);
    }
    MultipartiteState::pure(v, labels.iter().map(|l| Subsystem::new(*l, d)).collect())
        .expect("normalized")
}

/// Maximally correlated state `sum_ij a_ij |ii><jj|` from the `d x d` coefficient matrix.
pub fn maximally_correlated(a: &str, b: &str, coeffs: &CMat) -> Result<MultipartiteState> {
    let d = coeffs.nrows();
    if !coeffs.is_square() {
        return Err(Error::DimensionMismatch("coefficient matrix must be square".into()));
    }
    let mut m = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + i, j * d + j)] = coeffs[(i, j)];
        }
    }
    MultipartiteState::density(m, vec![Subsystem::new(a, d), Subsystem::new(b, d)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_states_are_valid() {
        for s in [
            phi_plus("A", "B"),
            max_entangled("A", "B", 3),
            classically_correlated("A", "B", 3),
            bell_mixture("A", "B", 0.3).unwrap(),
        ] {
            s.validate().unwrap();
        }
        ghz(&["A", "B", "C"], 2).validate().unwrap();
        assert!(bell_mixture("A", "B", 1.2).is_err());
    }
}
