//! Rate accounting for entanglement-assisted distributed compression.
//!
//! All rates are per copy, in qubits. Mutual independence enters only as an
//! explicit input value; this module never estimates it.

use serde::{Deserialize, Serialize};

use crate::entropy::{entropy, j_quantity, multi_info, mutual_info};
use crate::error::{Error, Result};
use crate::measures::Cut;
use crate::mindep::{check_exact_mi_on, SubsystemSplit, EXACT_MI_TOL};
use crate::tensor::MultipartiteState;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    #[serde(rename = "R_A")]
    pub r_a: f64,
    #[serde(rename = "R_B")]
    pub r_b: f64,
    pub formula: String,
    pub assumptions: String,
}

impl RatePoint {
    pub fn sum(&self) -> f64 {
        self.r_a + self.r_b
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConverseBounds {
    #[serde(rename = "R_A_min")]
    pub r_a_min: f64,
    #[serde(rename = "R_B_min")]
    pub r_b_min: f64,
    pub sum_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    /// `R_A + R_B` of the exact rate pair.
    pub lhs: f64,
    /// `J(A:B)/2 - I(alpha:beta)/2`.
    pub rhs: f64,
    pub gap: f64,
}

/// Which sender goes first in the redistribution schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SendOrder {
    AFirst,
    BFirst,
}

fn sides(cut: &Cut) -> (Vec<&str>, Vec<&str>) {
    (cut.a_refs(), cut.b_refs())
}

fn half_j(s: &MultipartiteState, cut: &Cut) -> Result<f64> {
    let (a, b) = sides(cut);
    Ok(0.5 * j_quantity(s, &[&a, &b])?)
}

/// Optimal rate sum `J(A:B)/2 - I_ind` for a supplied value of `I_ind`.
pub fn rate_sum_theorem(s: &MultipartiteState, cut: &Cut, iind_value: f64) -> Result<f64> {
    cut.check(s)?;
    let (a, b) = sides(cut);
    let half_i = 0.5 * mutual_info(s, &a, &b)?;
    if !(iind_value >= 0.0 && iind_value <= half_i + 1e-9) {
        return Err(Error::InvalidArgument(format!(
            "I_ind value {iind_value} outside [0, I(A:B)/2 = {half_i}]"
        )));
    }
    Ok(half_j(s, cut)? - iind_value)
}

/// Rate pair from redistributing `a` then `b` (or `b` then `a`) given a split
/// whose `alpha beta` part is exactly product with the reference.
pub fn rate_pair_exact(s: &MultipartiteState, split: &SubsystemSplit) -> Result<RatePoint> {
    rate_pair_ordered(s, split, SendOrder::AFirst)
}

pub fn rate_pair_ordered(
    s: &MultipartiteState,
    split: &SubsystemSplit,
    order: SendOrder,
) -> Result<RatePoint> {
    let st = split.apply(s)?;
    let chk = check_exact_mi_on(&st, &Cut::new(&["alpha"], &["beta"]))?;
    if chk.residual > EXACT_MI_TOL {
        return Err(Error::Precondition(format!(
            "split is not exactly product with the reference: residual {:.3e} > {EXACT_MI_TOL:e}",
            chk.residual
        )));
    }
    let e = |l: &[&str]| entropy(&st, l);
    let (sa, sb) = (e(&["alpha", "a"])?, e(&["beta", "b"])?);
    let (s_alpha, s_beta) = (e(&["alpha"])?, e(&["beta"])?);
    let (s_a, s_b, s_ab) = (e(&["a"])?, e(&["b"])?, e(&["a", "b"])?);
    // Purity of the global state gives S(R a alpha) = S(B), S(R b beta) = S(A).
    Ok(match order {
        SendOrder::AFirst => RatePoint {
            r_a: 0.5 * (s_a + sa - s_alpha),
            r_b: 0.5 * (s_ab + sb - s_beta - s_a),
            formula: "R_A = I(a:R b beta)/2, R_B = I(b:R alpha|a)/2".into(),
            assumptions: "sends a first".into(),
        },
        SendOrder::BFirst => RatePoint {
            r_a: 0.5 * (s_ab + sa - s_alpha - s_b),
            r_b: 0.5 * (s_b + sb - s_beta),
            formula: "R_B = I(b:R a alpha)/2, R_A = I(a:R beta|b)/2".into(),
            assumptions: "sends b first".into(),
        },
    })
}

/// Compare the exact rate pair's sum against `J/2 - I(alpha:beta)/2`.
pub fn rate_sum_identity_check(s: &MultipartiteState, split: &SubsystemSplit) -> Result<IdentityCheck> {
    let p = rate_pair_exact(s, split)?;
    let st = split.apply(s)?;
    let half_i = 0.5 * mutual_info(&st, &["alpha"], &["beta"])?;
    let lhs = p.sum();
    let rhs = half_j(s, &split.cut)? - half_i;
    Ok(IdentityCheck {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    })
}

/// `(I(A:R)/2, S(B))` and `(S(A), I(B:R)/2)`.
///
/// Both sum to `J/2`; subtracting `I_ind` from either corner is not known to be achievable.
pub fn corner_points(s: &MultipartiteState, cut: &Cut) -> Result<Vec<RatePoint>> {
    cut.check(s)?;
    let (a, b) = sides(cut);
    let (sa, sb) = (entropy(s, &a)?, entropy(s, &b)?);
    let sab = crate::entropy::vn_entropy(s);
    // I(A:R) = S(A) + S(R) - S(AR) = S(A) + S(AB) - S(B) for a purification R.
    let i_ar = sa + sab - sb;
    let i_br = sb + sab - sa;
    let flag = "unassisted corner; achievability with I_ind subtracted is open";
    Ok(vec![
        RatePoint {
            r_a: 0.5 * i_ar,
            r_b: sb,
            formula: "R_A = I(A:R)/2, R_B = S(B)".into(),
            assumptions: flag.into(),
        },
        RatePoint {
            r_a: sa,
            r_b: 0.5 * i_br,
            formula: "R_A = S(A), R_B = I(B:R)/2".into(),
            assumptions: flag.into(),
        },
    ])
}

/// `R_A >= I(A:R)/2`, `R_B >= I(B:R)/2`, `R_A + R_B >= J/2 - E_sq`.
pub fn converse_bounds(s: &MultipartiteState, cut: &Cut, esq_value: f64) -> Result<ConverseBounds> {
    let pts = corner_points(s, cut)?;
    Ok(ConverseBounds {
        r_a_min: pts[0].r_a,
        r_b_min: pts[1].r_b,
        sum_min: half_j(s, cut)? - esq_value,
    })
}

/// `J(A_1:...:A_N)/2 - I_ind`.
pub fn multipartite_rate_sum(s: &MultipartiteState, parts: &[&[&str]], iind_value: f64) -> Result<f64> {
    if iind_value < 0.0 {
        return Err(Error::InvalidArgument(format!("I_ind value {iind_value} is negative")));
    }
    Ok(0.5 * j_quantity(s, parts)? - iind_value)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultipartiteDecomposition {
    #[serde(rename = "S_total")]
    pub s_total: f64,
    /// `[I(A_1:...:A_N) - I(alpha_1:...:alpha_N)] / 2`.
    pub quantum_correction: f64,
    /// `S_total + quantum_correction`.
    pub rate_sum: f64,
    /// `|rate_sum - (J/2 - I(alpha_1:...:alpha_N)/2)|`.
    pub gap: f64,
    /// Trace-norm distance of `rho_{alpha_1...alpha_N R}` from product.
    pub residual: f64,
}

/// Rate sum split into the total entropy and the quantum correction, given
/// private parts `alphas[i]` (a subset of `parts[i]`) that are exactly product
/// with the reference.
pub fn multipartite_decomposed(
    s: &MultipartiteState,
    parts: &[&[&str]],
    alphas: &[&[&str]],
) -> Result<MultipartiteDecomposition> {
    if parts.len() != alphas.len() || parts.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two parties and one private part per party".into(),
        ));
    }
    for (p, al) in parts.iter().zip(alphas) {
        if al.is_empty() || al.iter().any(|l| !p.contains(l)) {
            return Err(Error::InvalidArgument(format!(
                "private part {al:?} is not a nonempty subset of party {p:?}"
            )));
        }
    }
    let first: Vec<&str> = alphas[0].to_vec();
    let rest: Vec<&str> = alphas[1..].iter().flat_map(|a| a.iter().copied()).collect();
    let residual = check_exact_mi_on(s, &Cut::new(&first, &rest))?.residual;
    if residual > EXACT_MI_TOL {
        return Err(Error::Precondition(format!(
            "private parts are not product with the reference: residual {residual:.3e}"
        )));
    }
    let all: Vec<&str> = parts.iter().flat_map(|p| p.iter().copied()).collect();
    let s_total = entropy(s, &all)?;
    let i_parts = multi_info(s, parts)?;
    let i_alpha = multi_info(s, alphas)?;
    let quantum_correction = 0.5 * (i_parts - i_alpha);
    let rate_sum = s_total + quantum_correction;
    let direct = 0.5 * j_quantity(s, parts)? - 0.5 * i_alpha;
    Ok(MultipartiteDecomposition {
        s_total,
        quantum_correction,
        rate_sum,
        gap: (rate_sum - direct).abs(),
        residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRegionReport {
    pub achievable: Vec<RatePoint>,
    pub converse: ConverseBounds,
    /// `J/2 - I_ind` for the supplied value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimal_sum: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iind_value: Option<f64>,
    pub iind_provenance: String,
    pub esq_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity_check: Option<IdentityCheck>,
}

impl RateRegionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per achievable point: `R_A,R_B,formula,assumptions`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(["R_A", "R_B", "formula", "assumptions"]).expect("in-memory write");
        for p in &self.achievable {
            w.write_record([
                p.r_a.to_string(),
                p.r_b.to_string(),
                p.formula.clone(),
                p.assumptions.clone(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

/// Inputs for [`rate_region`] beyond the state itself.
#[derive(Clone, Debug, Default)]
pub struct RateInputs<'a> {
    pub split: Option<&'a SubsystemSplit>,
    /// A certified value of `I_ind` and where it came from.
    pub iind: Option<(f64, String)>,
    /// Upper bound on squashed entanglement for the converse sum.
    pub esq_value: f64,
}

pub fn rate_region(s: &MultipartiteState, cut: &Cut, inputs: &RateInputs) -> Result<RateRegionReport> {
    let mut achievable = corner_points(s, cut)?;
    let mut identity_check = None;
    if let Some(sp) = inputs.split {
        achievable.push(rate_pair_ordered(s, sp, SendOrder::AFirst)?);
        achievable.push(rate_pair_ordered(s, sp, SendOrder::BFirst)?);
        identity_check = Some(rate_sum_identity_check(s, sp)?);
    }
    let optimal_sum = match &inputs.iind {
        Some((v, _)) => Some(rate_sum_theorem(s, cut, *v)?),
        None => None,
    };
    Ok(RateRegionReport {
        achievable,
        converse: converse_bounds(s, cut, inputs.esq_value)?,
        optimal_sum,
        iind_value: inputs.iind.as_ref().map(|x| x.0),
        iind_provenance: inputs
            .iind
            .as_ref()
            .map_or_else(|| "not supplied".to_string(), |x| x.1.clone()),
        esq_value: inputs.esq_value,
        identity_check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mindep::{make_pbit, SplitDims};
    use crate::states;
    use crate::tensor::{random_density, RngSeed, Subsystem};

    fn ab() -> Cut {
        Cut::new(&["A"], &["B"])
    }

    #[test]
    fn theorem_examples() {
        let phi = states::phi_plus("A", "B");
        assert!(rate_sum_theorem(&phi, &ab(), 1.0).unwrap().abs() < 1e-12);
        let mixed = MultipartiteState::maximally_mixed("A", 2)
            .tensor(&MultipartiteState::maximally_mixed("B", 2))
            .unwrap();
        assert!((rate_sum_theorem(&mixed, &ab(), 0.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(rate_sum_theorem(&mixed, &ab(), 0.5).is_err());
    }

    #[test]
    fn corners_of_phi_plus() {
        let pts = corner_points(&states::phi_plus("A", "B"), &ab()).unwrap();
        assert!((pts[0].r_a).abs() < 1e-12 && (pts[0].r_b - 1.0).abs() < 1e-12);
        assert!((pts[1].r_a - 1.0).abs() < 1e-12 && (pts[1].r_b).abs() < 1e-12);
    }

    #[test]
    fn pbit_identity_and_order_invariance() {
        let s = make_pbit(None, Some(&random_density(2, 2, RngSeed(4)).unwrap())).unwrap();
        let cut = Cut::new(&["A", "A'"], &["B", "B'"]);
        let sp = SubsystemSplit::identity(&s, cut.clone(), SplitDims { alpha: 2, beta: 2 }).unwrap();
        let chk = rate_sum_identity_check(&s, &sp).unwrap();
        assert!(chk.gap <= 1e-8, "{chk:?}");
        let a = rate_pair_ordered(&s, &sp, SendOrder::AFirst).unwrap();
        let b = rate_pair_ordered(&s, &sp, SendOrder::BFirst).unwrap();
        assert!((a.sum() - b.sum()).abs() < 1e-9);
        assert!((a.sum() - (half_j(&s, &cut).unwrap() - 0.5)).abs() < 1e-9);
    }

    #[test]
    fn trivial_split_gives_half_j() {
        let s = random_density(4, 4, RngSeed(8))
            .unwrap()
            .regroup(vec![Subsystem::new("A", 2), Subsystem::new("B", 2)])
            .unwrap();
        // alpha, beta one-dimensional: trivially product with R.
        let sp = SubsystemSplit::identity(&s, ab(), SplitDims { alpha: 1, beta: 1 }).unwrap();
        let p = rate_pair_exact(&s, &sp).unwrap();
        assert!((p.sum() - half_j(&s, &ab()).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn ghz_multipartite() {
        let g = states::ghz(&["A", "B", "C"], 2);
        let parts: [&[&str]; 3] = [&["A"], &["B"], &["C"]];
        let v = multipartite_rate_sum(&g, &parts, 1.5).unwrap();
        assert!(v.abs() < 1e-12);
        let d = multipartite_decomposed(&g, &parts, &parts).unwrap();
        assert!(d.gap < 1e-9 && d.quantum_correction.abs() < 1e-12);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let r = rate_region(&states::phi_plus("A", "B"), &ab(), &RateInputs::default()).unwrap();
        let text = r.to_csv();
        assert!(text.starts_with("R_A,R_B,formula,assumptions\n"));
        assert_eq!(text.lines().count(), 3);
        let back: RateRegionReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
