//! Entropic functionals in bits.
//!
//! All logarithms are base 2 and eigenvalues at or below `1e-12` count as zero.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::linalg::{entropy_of, herm_eigh, CMat, RANK_CUTOFF};
use crate::tensor::MultipartiteState;

/// Named entropic quantities of one state.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntropicReport(pub BTreeMap<String, f64>);

impl EntropicReport {
    pub fn insert(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }
}

pub fn binary_entropy(p: f64) -> f64 {
    entropy_of(&[p, 1.0 - p])
}

/// `-sum lambda log lambda` of the whole state.
pub fn vn_entropy(s: &MultipartiteState) -> f64 {
    if s.vector().is_some() {
        return 0.0;
    }
    entropy_of(&s.spectrum())
}

/// Entropy of the marginal on `labels` (empty set gives 0).
///
/// For pure vectors the smaller side of the cut is used.
pub fn entropy(s: &MultipartiteState, labels: &[&str]) -> Result<f64> {
    if labels.is_empty() {
        return Ok(0.0);
    }
    if s.vector().is_some() {
        let rest: Vec<&str> = s
            .labels()
            .into_iter()
            .filter(|l| !labels.contains(l))
            .collect();
        for l in labels {
            s.dim_of(l)?;
        }
        if rest.is_empty() {
            return Ok(0.0);
        }
        let coeff = s.coefficient_matrix(labels)?;
        let sv = coeff.singular_values();
        let probs: Vec<f64> = sv.iter().map(|x| x * x).collect();
        return Ok(entropy_of(&probs));
    }
    Ok(vn_entropy(&s.partial_trace(labels)?))
}

fn union<'a>(parts: &[&[&'a str]]) -> Vec<&'a str> {
    let mut out = Vec::new();
    for p in parts {
        out.extend_from_slice(p);
    }
    out
}

fn check_disjoint(parts: &[&[&str]]) -> Result<()> {
    let all = union(parts);
    for (i, l) in all.iter().enumerate() {
        if all[..i].contains(l) {
            return Err(Error::InvalidArgument(format!(
                "label {l} appears in more than one part"
            )));
        }
    }
    Ok(())
}

/// `I(A:B) = S(A) + S(B) - S(AB)`.
pub fn mutual_info(s: &MultipartiteState, a: &[&str], b: &[&str]) -> Result<f64> {
    check_disjoint(&[a, b])?;
    Ok(entropy(s, a)? + entropy(s, b)? - entropy(s, &union(&[a, b]))?)
}

/// `I(A_1:...:A_N) = sum S(A_i) - S(A_1...A_N)`.
pub fn multi_info(s: &MultipartiteState, parts: &[&[&str]]) -> Result<f64> {
    check_disjoint(parts)?;
    let mut acc = 0.0;
    for p in parts {
        acc += entropy(s, p)?;
    }
    Ok(acc - entropy(s, &union(parts))?)
}

/// `I(A:B|E) = S(AE) + S(BE) - S(ABE) - S(E)`.
pub fn cond_mutual_info(s: &MultipartiteState, a: &[&str], b: &[&str], e: &[&str]) -> Result<f64> {
    check_disjoint(&[a, b, e])?;
    Ok(entropy(s, &union(&[a, e]))? + entropy(s, &union(&[b, e]))?
        - entropy(s, &union(&[a, b, e]))?
        - entropy(s, e)?)
}

/// `I(A>B) = S(B) - S(AB)`.
pub fn coherent_info(s: &MultipartiteState, a: &[&str], b: &[&str]) -> Result<f64> {
    check_disjoint(&[a, b])?;
    Ok(entropy(s, b)? - entropy(s, &union(&[a, b]))?)
}

/// `J(A_1:...:A_N) = sum S(A_i) + S(A_1...A_N)`.
pub fn j_quantity(s: &MultipartiteState, parts: &[&[&str]]) -> Result<f64> {
    check_disjoint(parts)?;
    let mut acc = 0.0;
    for p in parts {
        acc += entropy(s, p)?;
    }
    Ok(acc + entropy(s, &union(parts))?)
}

/// `S(rho || sigma)` in bits; `+inf` when `supp(rho)` is not inside `supp(sigma)`.
pub fn relative_entropy(rho: &MultipartiteState, sigma: &MultipartiteState) -> Result<f64> {
    if rho.subsystems() != sigma.subsystems() {
        return Err(Error::DimensionMismatch(
            "relative entropy needs identical subsystem lists".into(),
        ));
    }
    Ok(relative_entropy_matrices(&rho.matrix(), &sigma.matrix()))
}

/// Matrix form of [`relative_entropy`], shared with the optimizers.
pub fn relative_entropy_matrices(rho: &CMat, sigma: &CMat) -> f64 {
    let es = herm_eigh(sigma);
    let mut cross = 0.0;
    let mut outside = 0.0;
    for (k, &lam) in es.values.iter().enumerate() {
        let v = es.vectors.column(k);
        let w = (v.adjoint() * rho * v)[(0, 0)].re;
        if lam > RANK_CUTOFF {
            cross += w * lam.log2();
        } else {
            outside += w;
        }
    }
    if outside > RANK_CUTOFF {
        return f64::INFINITY;
    }
    let s_rho = entropy_of(&herm_eigh(rho).values);
    -s_rho - cross
}

/// Alicki–Fannes continuity bound `2 eps log dA + (1 + eps) h(eps / (1 + eps))`.
pub fn af_bound(epsilon: f64, dim_a: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in [0, 1], got {epsilon}"
        )));
    }
    if dim_a == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    Ok(2.0 * epsilon * (dim_a as f64).log2()
        + (1.0 + epsilon) * binary_entropy(epsilon / (1.0 + epsilon)))
}

/// Single-label entropies, total entropy and every pairwise mutual information.
/// Bipartite states also get `I(A>B)`, `I(B>A)` and `J(A:B)`.
pub fn entropic_report(s: &MultipartiteState) -> Result<EntropicReport> {
    let labels = s.labels();
    let mut r = EntropicReport::default();
    for l in &labels {
        r.insert(format!("S({l})"), entropy(s, &[l])?);
    }
    r.insert(format!("S({})", labels.concat()), vn_entropy(s));
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            r.insert(
                format!("I({}:{})", labels[i], labels[j]),
                mutual_info(s, &[labels[i]], &[labels[j]])?,
            );
        }
    }
    if labels.len() == 2 {
        let (a, b) = (labels[0], labels[1]);
        r.insert(format!("I({a}>{b})"), coherent_info(s, &[a], &[b])?);
        r.insert(format!("I({b}>{a})"), coherent_info(s, &[b], &[a])?);
        r.insert(format!("J({a}:{b})"), j_quantity(s, &[&[a], &[b]])?);
    }
    if labels.len() > 2 {
        let parts: Vec<&[&str]> = labels.iter().map(std::slice::from_ref).collect();
        r.insert(format!("I({})", labels.join(":")), multi_info(s, &parts)?);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states;
    use crate::tensor::linalg::{cr, CVec};
    use crate::tensor::Subsystem;

    const TOL: f64 = 1e-12;

    fn diag(label: &str, p: &[f64]) -> MultipartiteState {
        let m = CMat::from_diagonal(&CVec::from_iterator(p.len(), p.iter().map(|&x| cr(x))));
        MultipartiteState::density(m, vec![Subsystem::new(label, p.len())]).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert!(vn_entropy(&MultipartiteState::basis("A", 2, 0)).abs() < TOL);
        assert!((vn_entropy(&MultipartiteState::maximally_mixed("A", 2)) - 1.0).abs() < TOL);
        // h(1/4) = 2 - (3/4) log2 3
        let h = 2.0 - 0.75 * 3f64.log2();
        assert!((vn_entropy(&diag("A", &[0.75, 0.25])) - h).abs() < TOL);
        assert!((h - 0.811_278_124_459_132_9).abs() < 1e-15);
    }

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
        assert!((binary_entropy(0.25) - 0.811_278_124_459_132_9).abs() < 1e-15);
    }

    #[test]
    fn relative_entropy_examples() {
        let rho = diag("A", &[0.7, 0.3]);
        assert!(relative_entropy(&rho, &rho).unwrap().abs() < TOL);
        let zero = MultipartiteState::basis("A", 2, 0);
        let one = MultipartiteState::basis("A", 2, 1);
        let mm = MultipartiteState::maximally_mixed("A", 2);
        assert!((relative_entropy(&zero, &mm).unwrap() - 1.0).abs() < TOL);
        assert_eq!(relative_entropy(&zero, &one).unwrap(), f64::INFINITY);
        let b = MultipartiteState::maximally_mixed("B", 2);
        assert!(matches!(
            relative_entropy(&zero, &b),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn mutual_information_examples() {
        let phi = states::phi_plus("A", "B");
        assert!((mutual_info(&phi, &["A"], &["B"]).unwrap() - 2.0).abs() < TOL);
        let prod = diag("A", &[0.6, 0.4])
            .tensor(&diag("B", &[0.1, 0.9]))
            .unwrap();
        assert!(mutual_info(&prod, &["A"], &["B"]).unwrap().abs() < TOL);
        let cc = states::classically_correlated("A", "B", 2);
        assert!((mutual_info(&cc, &["A"], &["B"]).unwrap() - 1.0).abs() < TOL);
    }

    #[test]
    fn multi_information_examples() {
        let ghz = states::ghz(&["A", "B", "C"], 2);
        let mi = multi_info(&ghz, &[&["A"], &["B"], &["C"]]).unwrap();
        assert!((mi - 3.0).abs() < TOL);
        let prod = diag("A", &[0.6, 0.4])
            .tensor(&diag("B", &[0.1, 0.9]))
            .unwrap()
            .tensor(&diag("C", &[0.5, 0.5]))
            .unwrap();
        assert!(multi_info(&prod, &[&["A"], &["B"], &["C"]]).unwrap().abs() < TOL);
        let cc = states::classically_correlated("A", "B", 2);
        let two = multi_info(&cc, &[&["A"], &["B"]]).unwrap();
        assert!((two - mutual_info(&cc, &["A"], &["B"]).unwrap()).abs() < TOL);
        assert!(multi_info(&cc, &[&["A"], &["A"]]).is_err());
    }

    #[test]
    fn conditional_mutual_information_examples() {
        let cc = states::classically_correlated("A", "B", 2);
        let e = MultipartiteState::maximally_mixed("E", 2);
        let abe = cc.tensor(&e).unwrap();
        let i_ab = mutual_info(&cc, &["A"], &["B"]).unwrap();
        assert!((cond_mutual_info(&cc, &["A"], &["B"], &[]).unwrap() - i_ab).abs() < TOL);
        assert!((cond_mutual_info(&abe, &["A"], &["B"], &["E"]).unwrap() - i_ab).abs() < TOL);
        // GHZ: S(AE)=1, S(BE)=1, S(ABE)=0, S(E)=1 -> 1
        let ghz = states::ghz(&["A", "B", "E"], 2);
        assert!((cond_mutual_info(&ghz, &["A"], &["B"], &["E"]).unwrap() - 1.0).abs() < TOL);
    }

    #[test]
    fn coherent_information_examples() {
        let phi = states::phi_plus("A", "B");
        assert!((coherent_info(&phi, &["A"], &["B"]).unwrap() - 1.0).abs() < TOL);
        let prod = diag("A", &[0.6, 0.4])
            .tensor(&diag("B", &[0.1, 0.9]))
            .unwrap();
        let sa = vn_entropy(&diag("A", &[0.6, 0.4]));
        assert!((coherent_info(&prod, &["A"], &["B"]).unwrap() + sa).abs() < TOL);
        let pure_a = MultipartiteState::basis("A", 2, 0)
            .tensor(&diag("B", &[0.1, 0.9]))
            .unwrap();
        assert!(coherent_info(&pure_a, &["A"], &["B"]).unwrap().abs() < TOL);
        let cc = states::classically_correlated("A", "B", 2);
        assert!(coherent_info(&cc, &["A"], &["B"]).unwrap().abs() < TOL);
    }

    #[test]
    fn j_quantity_examples() {
        let phi = states::phi_plus("A", "B");
        assert!((j_quantity(&phi, &[&["A"], &["B"]]).unwrap() - 2.0).abs() < TOL);
        let mm = MultipartiteState::maximally_mixed("A", 2)
            .tensor(&MultipartiteState::maximally_mixed("B", 2))
            .unwrap();
        assert!((j_quantity(&mm, &[&["A"], &["B"]]).unwrap() - 4.0).abs() < TOL);
        let pp = MultipartiteState::basis("A", 2, 0)
            .tensor(&MultipartiteState::basis("B", 2, 1))
            .unwrap();
        assert!(j_quantity(&pp, &[&["A"], &["B"]]).unwrap().abs() < TOL);
    }

    #[test]
    fn af_bound_examples() {
        assert_eq!(af_bound(0.0, 2).unwrap(), 0.0);
        assert!((af_bound(1.0, 2).unwrap() - 4.0).abs() < 1e-12);
        let grid: Vec<f64> = (0..=10).map(|k| af_bound(k as f64 / 10.0, 3).unwrap()).collect();
        assert!(grid.windows(2).all(|w| w[1] >= w[0]));
        assert!(af_bound(1.5, 2).is_err());
    }

    #[test]
    fn pure_state_entropy_uses_either_side() {
        let ghz = states::ghz(&["A", "B", "C"], 3);
        let via_vec = entropy(&ghz, &["A", "B"]).unwrap();
        let via_rho = entropy(&ghz.to_density(), &["A", "B"]).unwrap();
        assert!((via_vec - via_rho).abs() < 1e-12);
        assert!((via_vec - 3f64.log2()).abs() < 1e-12);
    }
}
