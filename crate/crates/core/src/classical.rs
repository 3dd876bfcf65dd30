//! Classical tripartite sources `P_XYZ`: Slepian-Wolf sums, the redundant
//! decomposition of `P_{XY|Z}`, mutual-independence rates of explicit local
//! functions, and a finite-n local hashing simulation.
//!
//! Rate functions expect alphabets labeled `X`, `Y` (the senders) and `Z`
//! (the reference). Use [`JointDistribution::relabel`] and
//! [`JointDistribution::group`] to bring other sources into that shape.
//! Entropies are in bits.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::EntropicReport;
use crate::error::{Error, Result};
use crate::tensor::{MultipartiteState, RngSeed};

/// Probabilities below this are structural zeros in ratio tests.
pub const STRUCTURAL_ZERO: f64 = 1e-12;
/// Log-ratio tolerance deciding proportionality of conditional profiles.
pub const LOG_RATIO_TOL: f64 = 1e-9;
pub const RECONSTRUCTION_TOL: f64 = 1e-9;
pub const INDEPENDENCE_TOL: f64 = 1e-9;
const SUM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    pub label: String,
    pub size: usize,
}

impl Alphabet {
    pub fn new(label: impl Into<String>, size: usize) -> Self {
        Alphabet {
            label: label.into(),
            size,
        }
    }
}

/// Nonnegative tensor over labeled alphabets, row-major in the listed order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    alphabets: Vec<Alphabet>,
    probs: Vec<f64>,
}

/// `-sum p log2 p` over strictly positive entries.
pub fn shannon(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

impl JointDistribution {
    pub fn new(alphabets: Vec<Alphabet>, probs: Vec<f64>) -> Result<Self> {
        let d = JointDistribution { alphabets, probs };
        d.validate()?;
        Ok(d)
    }

    /// Build from a function of the multi-index.
    pub fn from_fn(alphabets: Vec<Alphabet>, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let sizes: Vec<usize> = alphabets.iter().map(|a| a.size).collect();
        let n: usize = sizes.iter().product();
        let probs = (0..n).map(|i| f(&digits(i, &sizes))).collect();
        Self::new(alphabets, probs)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for a in &self.alphabets {
            if !seen.insert(a.label.as_str()) {
                return Err(Error::LabelCollision(a.label.clone()));
            }
            if a.size == 0 {
                return Err(Error::invariant(
                    "alphabet sizes are positive",
                    format!("alphabet `{}` has size 0", a.label),
                ));
            }
        }
        let n: usize = self.sizes().iter().product();
        if self.probs.len() != n {
            return Err(Error::invariant(
                "product of alphabet sizes equals probs length",
                format!("field `probs` has {} entries, alphabets require {n}", self.probs.len()),
            ));
        }
        if let Some((k, p)) = self
            .probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::invariant(
                "entries are nonnegative",
                format!("field `probs` entry {k} is {p}"),
            ));
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::invariant(
                "probabilities sum to 1",
                format!("field `probs` sums to {total}"),
            ));
        }
        Ok(())
    }

    pub fn alphabets(&self) -> &[Alphabet] {
        &self.alphabets
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.alphabets.iter().map(|a| a.size).collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.alphabets.iter().map(|a| a.label.as_str()).collect()
    }

    fn position(&self, label: &str) -> Result<usize> {
        self.alphabets
            .iter()
            .position(|a| a.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn size_of(&self, label: &str) -> Result<usize> {
        Ok(self.alphabets[self.position(label)?].size)
    }

    /// Probability of a full multi-index.
    pub fn prob(&self, index: &[usize]) -> f64 {
        self.probs[linear(index, &self.sizes())]
    }

    /// Marginal on `keep`, alphabets in the order given.
    pub fn marginal(&self, keep: &[&str]) -> Result<JointDistribution> {
        let pos: Vec<usize> = keep
            .iter()
            .map(|l| self.position(l))
            .collect::<Result<_>>()?;
        if pos.iter().collect::<BTreeSet<_>>().len() != pos.len() {
            return Err(Error::InvalidArgument(format!("repeated label in {keep:?}")));
        }
        let sizes = self.sizes();
        let out: Vec<Alphabet> = pos.iter().map(|&p| self.alphabets[p].clone()).collect();
        let out_sizes: Vec<usize> = out.iter().map(|a| a.size).collect();
        let mut probs = vec![0.0; out_sizes.iter().product()];
        for (i, &p) in self.probs.iter().enumerate() {
            let d = digits(i, &sizes);
            let sub: Vec<usize> = pos.iter().map(|&q| d[q]).collect();
            probs[linear(&sub, &out_sizes)] += p;
        }
        Ok(JointDistribution {
            alphabets: out,
            probs,
        })
    }

    /// Shannon entropy of the marginal on `labels` (0 for the empty set).
    pub fn entropy(&self, labels: &[&str]) -> Result<f64> {
        if labels.is_empty() {
            return Ok(0.0);
        }
        Ok(shannon(self.marginal(labels)?.probs))
    }

    pub fn relabel(&self, from: &str, to: &str) -> Result<JointDistribution> {
        let p = self.position(from)?;
        let mut out = self.clone();
        out.alphabets[p].label = to.to_string();
        out.validate()?;
        Ok(out)
    }

    /// Merge `members` into one leading alphabet `label`, row-major in the
    /// order given; the remaining alphabets keep their order.
    pub fn group(&self, members: &[&str], label: &str) -> Result<JointDistribution> {
        let rest: Vec<&str> = self
            .labels()
            .into_iter()
            .filter(|l| !members.contains(l))
            .collect();
        let mut order = members.to_vec();
        order.extend(&rest);
        let m = self.marginal(&order)?;
        let size: usize = members
            .iter()
            .map(|l| self.size_of(l))
            .product::<Result<usize>>()?;
        let mut alphabets = vec![Alphabet::new(label, size)];
        alphabets.extend(m.alphabets[members.len()..].iter().cloned());
        JointDistribution::new(alphabets, m.probs)
    }

    /// The diagonal of a density matrix diagonal in the product basis.
    pub fn from_diagonal_state(s: &MultipartiteState) -> Result<JointDistribution> {
        let m = s.matrix();
        let n = m.nrows();
        for i in 0..n {
            for j in 0..n {
                if i != j && m[(i, j)].norm() > 1e-10 {
                    return Err(Error::Precondition(format!(
                        "state is not diagonal in the product basis: entry ({i},{j}) = {}",
                        m[(i, j)]
                    )));
                }
            }
        }
        let alphabets = s
            .subsystems()
            .iter()
            .map(|sub| Alphabet::new(sub.label.clone(), sub.dim))
            .collect();
        let probs = (0..n).map(|i| m[(i, i)].re.max(0.0)).collect::<Vec<_>>();
        let total: f64 = probs.iter().sum();
        JointDistribution::new(alphabets, probs.into_iter().map(|p| p / total).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("distribution serializes")
    }

    pub fn from_json(text: &str) -> Result<JointDistribution> {
        let d: JointDistribution = serde_json::from_str(text)?;
        d.validate()?;
        Ok(d)
    }

    pub fn read(path: &Path) -> Result<JointDistribution> {
        let text = std::fs::read_to_string(path)?;
        let d: JointDistribution = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        d.validate()?;
        Ok(d)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    fn require_xyz(&self) -> Result<()> {
        if self.alphabets.len() != 3 {
            return Err(Error::Precondition(format!(
                "expected alphabets X, Y, Z, found {:?}",
                self.labels()
            )));
        }
        for l in ["X", "Y", "Z"] {
            self.position(l)?;
        }
        Ok(())
    }

    /// `P(x, y, z)` as a dense `[x][y][z]` table.
    fn xyz_table(&self) -> Result<Vec<Vec<Vec<f64>>>> {
        self.require_xyz()?;
        let m = self.marginal(&["X", "Y", "Z"])?;
        let (nx, ny, nz) = (m.alphabets[0].size, m.alphabets[1].size, m.alphabets[2].size);
        Ok((0..nx)
            .map(|x| {
                (0..ny)
                    .map(|y| (0..nz).map(|z| m.probs[(x * ny + y) * nz + z]).collect())
                    .collect()
            })
            .collect())
    }
}

fn digits(mut i: usize, sizes: &[usize]) -> Vec<usize> {
    let mut d = vec![0; sizes.len()];
    for k in (0..sizes.len()).rev() {
        d[k] = i % sizes[k];
        i /= sizes[k];
    }
    d
}

fn linear(index: &[usize], sizes: &[usize]) -> usize {
    index.iter().zip(sizes).fold(0, |acc, (&i, &s)| acc * s + i)
}

/// Entropy of every listed part, keyed `H(XY)` style.
pub fn shannon_entropies(p: &JointDistribution, parts: &[&[&str]]) -> Result<EntropicReport> {
    let mut r = EntropicReport::default();
    for part in parts {
        r.insert(format!("H({})", part.concat()), p.entropy(part)?);
    }
    Ok(r)
}

pub fn classical_mi(p: &JointDistribution, a: &[&str], b: &[&str]) -> Result<f64> {
    let ab: Vec<&str> = a.iter().chain(b).copied().collect();
    Ok(p.entropy(a)? + p.entropy(b)? - p.entropy(&ab)?)
}

pub fn classical_cmi(p: &JointDistribution, a: &[&str], b: &[&str], z: &[&str]) -> Result<f64> {
    let az: Vec<&str> = a.iter().chain(z).copied().collect();
    let bz: Vec<&str> = b.iter().chain(z).copied().collect();
    let abz: Vec<&str> = a.iter().chain(b).chain(z).copied().collect();
    Ok(p.entropy(&az)? + p.entropy(&bz)? - p.entropy(&abz)? - p.entropy(z)?)
}

/// Rate sum reachable with the source fully known to the reference: `H(XY)`.
pub fn slepian_wolf_sum(p: &JointDistribution) -> Result<f64> {
    p.require_xyz()?;
    p.entropy(&["X", "Y"])
}

/// Source with correlated bits when `Z = c` (index 0) and anticorrelated bits
/// when `Z = a` (index 1); `p` is the probability of `c`.
pub fn make_corr_anticorr(p: f64) -> Result<JointDistribution> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p must lie in [0,1], got {p}")));
    }
    JointDistribution::from_fn(
        vec![Alphabet::new("X", 2), Alphabet::new("Y", 2), Alphabet::new("Z", 2)],
        |d| match (d[0] == d[1], d[2]) {
            (true, 0) => p / 2.0,
            (false, 1) => (1.0 - p) / 2.0,
            _ => 0.0,
        },
    )
}

/// Row of the bijection `tau: (x, y) -> (block, j, k)` on the support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauEntry {
    pub x: usize,
    pub y: usize,
    pub block: usize,
    pub j: usize,
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub j_size: usize,
    /// `P_{K|L}` for this block, sorted descending.
    pub p_k: Vec<f64>,
}

/// `P_{XY|Z=z}(xy) = q(l|z) P_{J|Z=z,L=l}(j) P_{K|L=l}(k)` for `tau(xy) = (l, j, k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RedundantDecomposition {
    pub tau: Vec<TauEntry>,
    pub blocks: Vec<Block>,
    /// `q[z][l]`; rows for `P(z) = 0` are zero.
    pub q: Vec<Vec<f64>>,
    /// `p_j[z][l][j]`; uniform where `q(l|z) = 0`.
    pub p_j: Vec<Vec<Vec<f64>>>,
    /// Marginal of the `(L, J)` pair, one entry per class, in `(l, j)` order.
    pub p_lj: Vec<f64>,
    pub h_lj: f64,
    pub h_xy: f64,
    pub reconstruction_error: f64,
}

impl RedundantDecomposition {
    /// True if some block carries a nontrivial removable factor.
    pub fn has_redundancy(&self) -> bool {
        self.blocks.iter().any(|b| b.p_k.len() > 1)
    }

    fn class_index(&self, l: usize, j: usize) -> usize {
        self.blocks[..l].iter().map(|b| b.j_size).sum::<usize>() + j
    }

    /// `(L, J)` jointly as `X`, a trivial `Y`, and the reference `Z`.
    pub fn lj_marginal(&self, source: &JointDistribution) -> Result<JointDistribution> {
        let t = source.xyz_table()?;
        let nz = self.q.len();
        let classes = self.p_lj.len();
        let mut probs = vec![0.0; classes * nz];
        for e in &self.tau {
            let c = self.class_index(e.block, e.j);
            for z in 0..nz {
                probs[c * nz + z] += t[e.x][e.y][z];
            }
        }
        JointDistribution::new(
            vec![
                Alphabet::new("X", classes),
                Alphabet::new("Y", 1),
                Alphabet::new("Z", nz),
            ],
            probs,
        )
    }

    /// Header `x,y,block,j,k`.
    pub fn tau_csv(&self) -> String {
        let mut s = String::from("x,y,block,j,k\n");
        for e in &self.tau {
            let _ = writeln!(s, "{},{},{},{},{}", e.x, e.y, e.block, e.j, e.k);
        }
        s
    }

    /// Long format `factor,z,block,index,value` with factor one of `q`, `p_j`, `p_k`.
    pub fn factors_csv(&self) -> String {
        let mut s = String::from("factor,z,block,index,value\n");
        for (z, row) in self.q.iter().enumerate() {
            for (l, v) in row.iter().enumerate() {
                let _ = writeln!(s, "q,{z},{l},,{v}");
            }
        }
        for (z, per_block) in self.p_j.iter().enumerate() {
            for (l, row) in per_block.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let _ = writeln!(s, "p_j,{z},{l},{j},{v}");
                }
            }
        }
        for (l, b) in self.blocks.iter().enumerate() {
            for (k, v) in b.p_k.iter().enumerate() {
                let _ = writeln!(s, "p_k,,{l},{k},{v}");
            }
        }
        s
    }
}

/// Whether the `z`-profiles of two support points are proportional.
fn proportional(a: &[f64], b: &[f64], pz: &[f64]) -> bool {
    let mut reference: Option<f64> = None;
    for z in 0..pz.len() {
        if pz[z] <= 0.0 {
            continue;
        }
        let (u, v) = (a[z] / pz[z], b[z] / pz[z]);
        match (u > STRUCTURAL_ZERO, v > STRUCTURAL_ZERO) {
            (false, false) => continue,
            (true, true) => {
                let r = u.ln() - v.ln();
                match reference {
                    None => reference = Some(r),
                    Some(r0) if (r - r0).abs() > LOG_RATIO_TOL => return false,
                    _ => {}
                }
            }
            _ => return false,
        }
    }
    true
}

/// Finest split of `P_{XY|Z}` into a `Z`-dependent part `(L, J)` and a
/// removable part `K` whose law depends on `L` only.
pub fn ki_decompose(p: &JointDistribution) -> Result<RedundantDecomposition> {
    let t = p.xyz_table()?;
    let (nx, ny, nz) = (t.len(), t[0].len(), t[0][0].len());
    let pz: Vec<f64> = (0..nz)
        .map(|z| (0..nx).flat_map(|x| (0..ny).map(move |y| (x, y))).map(|(x, y)| t[x][y][z]).sum())
        .collect();
    let support: Vec<(usize, usize)> = (0..nx)
        .flat_map(|x| (0..ny).map(move |y| (x, y)))
        .filter(|&(x, y)| t[x][y].iter().sum::<f64>() > STRUCTURAL_ZERO)
        .collect();

    // Refine from the single class until every class is proportional to its first member.
    let mut classes: Vec<Vec<(usize, usize)>> = vec![support];
    loop {
        let mut next = Vec::with_capacity(classes.len());
        let mut changed = false;
        for class in classes {
            let rep = class[0];
            let (same, rest): (Vec<_>, Vec<_>) = class
                .into_iter()
                .partition(|&(x, y)| proportional(&t[x][y], &t[rep.0][rep.1], &pz));
            next.push(same);
            if !rest.is_empty() {
                changed = true;
                next.push(rest);
            }
        }
        classes = next;
        if !changed {
            break;
        }
    }
    classes.sort_by_key(|c| c[0]);

    // Within a class P(s|z) = P(class|z) r(s); r is read off at the heaviest z.
    struct ClassInfo {
        members: Vec<(usize, usize)>,
        r: Vec<f64>,
        mass_z: Vec<f64>,
    }
    let infos: Vec<ClassInfo> = classes
        .into_iter()
        .map(|members| {
            let mass_z: Vec<f64> = (0..nz)
                .map(|z| members.iter().map(|&(x, y)| t[x][y][z]).sum())
                .collect();
            let zbest = (0..nz)
                .max_by(|&a, &b| mass_z[a].total_cmp(&mass_z[b]))
                .unwrap_or(0);
            let mut order: Vec<((usize, usize), f64)> = members
                .iter()
                .map(|&(x, y)| ((x, y), t[x][y][zbest] / mass_z[zbest]))
                .collect();
            order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            ClassInfo {
                members: order.iter().map(|o| o.0).collect(),
                r: order.iter().map(|o| o.1).collect(),
                mass_z,
            }
        })
        .collect();

    // Classes with the same sorted profile share a block.
    let mut blocks: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
    for (ci, info) in infos.iter().enumerate() {
        let hit = blocks.iter_mut().find(|(pk, _)| {
            pk.len() == info.r.len()
                && pk.iter().zip(&info.r).all(|(a, b)| (a - b).abs() <= RECONSTRUCTION_TOL)
        });
        match hit {
            Some((_, list)) => list.push(ci),
            None => blocks.push((info.r.clone(), vec![ci])),
        }
    }

    let mut tau = Vec::new();
    let mut q = vec![vec![0.0; blocks.len()]; nz];
    let mut p_j = vec![Vec::with_capacity(blocks.len()); nz];
    let mut p_lj = Vec::new();
    for (l, (_, list)) in blocks.iter().enumerate() {
        for (j, &ci) in list.iter().enumerate() {
            for (k, &(x, y)) in infos[ci].members.iter().enumerate() {
                tau.push(TauEntry { x, y, block: l, j, k });
            }
            p_lj.push(infos[ci].mass_z.iter().sum::<f64>());
        }
        for z in 0..nz {
            let masses: Vec<f64> = list.iter().map(|&ci| infos[ci].mass_z[z]).collect();
            let total: f64 = masses.iter().sum();
            if pz[z] > 0.0 {
                q[z][l] = total / pz[z];
            }
            p_j[z].push(if total > 0.0 {
                masses.iter().map(|m| m / total).collect()
            } else {
                vec![1.0 / list.len() as f64; list.len()]
            });
        }
    }
    tau.sort_by_key(|e| (e.x, e.y));
    let blocks: Vec<Block> = blocks
        .into_iter()
        .map(|(p_k, list)| Block {
            j_size: list.len(),
            p_k,
        })
        .collect();

    let mut err: f64 = 0.0;
    let mut assigned = vec![vec![None; ny]; nx];
    for e in &tau {
        assigned[e.x][e.y] = Some(e);
    }
    for z in (0..nz).filter(|&z| pz[z] > 0.0) {
        for x in 0..nx {
            for y in 0..ny {
                let model = match assigned[x][y] {
                    Some(e) => q[z][e.block] * p_j[z][e.block][e.j] * blocks[e.block].p_k[e.k],
                    None => 0.0,
                };
                err = err.max((t[x][y][z] / pz[z] - model).abs());
            }
        }
    }

    Ok(RedundantDecomposition {
        tau,
        blocks,
        q,
        p_j,
        h_lj: shannon(p_lj.iter().copied()),
        p_lj,
        h_xy: p.entropy(&["X", "Y"])?,
        reconstruction_error: err,
    })
}

/// Optimal compression rate with the senders together: `H(LJ)`.
pub fn optimal_rate_hlj(p: &JointDistribution) -> Result<f64> {
    let d = ki_decompose(p)?;
    if d.reconstruction_error > RECONSTRUCTION_TOL {
        return Err(Error::invariant(
            "decomposition reproduces P_{XY|Z}",
            format!("reconstruction error {:e}", d.reconstruction_error),
        ));
    }
    Ok(d.h_lj)
}

/// Row-stochastic table `rows[input][output]` of a randomized function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StochasticMap {
    pub rows: Vec<Vec<f64>>,
}

impl StochasticMap {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = StochasticMap { rows };
        let width = m.rows.first().map_or(0, |r| r.len());
        for (i, r) in m.rows.iter().enumerate() {
            if r.len() != width || width == 0 {
                return Err(Error::invariant(
                    "rows of a stochastic map share a positive width",
                    format!("row {i} has {} entries, expected {width}", r.len()),
                ));
            }
            if r.iter().any(|v| !v.is_finite() || *v < 0.0)
                || (r.iter().sum::<f64>() - 1.0).abs() > 1e-10
            {
                return Err(Error::invariant(
                    "rows of a stochastic map are distributions",
                    format!("row {i} = {r:?}"),
                ));
            }
        }
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        StochasticMap {
            rows: (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    /// Deterministic function `x -> f[x]` into `outputs` symbols.
    pub fn deterministic(f: &[usize], outputs: usize) -> Result<Self> {
        Self::new(
            f.iter()
                .map(|&o| (0..outputs).map(|j| if j == o { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    pub fn inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn outputs(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalMindep {
    /// `I(F:G)`.
    pub mi_fg: f64,
    /// `I(FG:Z)`; the outputs count as independent of the reference when this is at most 1e-9.
    pub residual: f64,
    /// `I(F:G)` when the residual passes, otherwise absent.
    pub rate: Option<f64>,
    pub i_fz: f64,
    pub i_gz: f64,
    /// `max(0, I(F:G) - I(F:Z) - I(G:Z))`, the local privacy amplification rate.
    pub protocol_value: f64,
}

/// Push `P_XYZ` through local maps and audit independence from `Z`.
pub fn classical_mindep_rate(
    p: &JointDistribution,
    f: &StochasticMap,
    g: &StochasticMap,
) -> Result<ClassicalMindep> {
    let t = p.xyz_table()?;
    let (nx, ny, nz) = (t.len(), t[0].len(), t[0][0].len());
    if f.inputs() != nx || g.inputs() != ny {
        return Err(Error::DimensionMismatch(format!(
            "maps take {} and {} inputs, alphabets X, Y have sizes {nx}, {ny}",
            f.inputs(),
            g.inputs()
        )));
    }
    let (nf, ng) = (f.outputs(), g.outputs());
    let mut probs = vec![0.0; nf * ng * nz];
    for x in 0..nx {
        for y in 0..ny {
            for z in 0..nz {
                let w = t[x][y][z];
                if w == 0.0 {
                    continue;
                }
                for a in 0..nf {
                    for b in 0..ng {
                        probs[(a * ng + b) * nz + z] += w * f.rows[x][a] * g.rows[y][b];
                    }
                }
            }
        }
    }
    // Rows are stochastic only to 1e-10; renormalize before validating.
    let total: f64 = probs.iter().sum();
    let out = JointDistribution::new(
        vec![Alphabet::new("F", nf), Alphabet::new("G", ng), Alphabet::new("Z", nz)],
        probs.into_iter().map(|v| v / total).collect(),
    )?;
    let mi_fg = classical_mi(&out, &["F"], &["G"])?.max(0.0);
    let residual = classical_mi(&out, &["F", "G"], &["Z"])?.max(0.0);
    let i_fz = classical_mi(&out, &["F"], &["Z"])?.max(0.0);
    let i_gz = classical_mi(&out, &["G"], &["Z"])?.max(0.0);
    Ok(ClassicalMindep {
        mi_fg,
        residual,
        rate: (residual <= INDEPENDENCE_TOL).then_some(mi_fg),
        i_fz,
        i_gz,
        protocol_value: (mi_fg - i_fz - i_gz).max(0.0),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HashSimReport {
    pub n: usize,
    pub out_bits: usize,
    pub trials: usize,
    /// Mean over hash draws and reference strings of the distance of
    /// `(h(X^n), h(Y^n))` given `Z^n` from its unconditional law.
    pub empirical_tv_from_product_with_z: f64,
    pub standard_error: f64,
    pub empirical_rate: f64,
}

/// Largest total syndrome width handled exactly.
pub const HASH_SIM_MAX_BITS: usize = 20;

fn bits_for(size: usize) -> usize {
    (usize::BITS - (size.max(2) - 1).leading_zeros()) as usize
}

/// Random binary matrix with `out_bits` rows acting on `n` symbols of `b`
/// bits each; returns the syndrome of each symbol at each position.
fn random_hash(n: usize, size: usize, out_bits: usize, rng: &mut impl Rng) -> Vec<Vec<u32>> {
    let b = bits_for(size);
    let cols: Vec<u32> = (0..n * b)
        .map(|_| if out_bits == 0 { 0 } else { rng.random_range(0..1u32 << out_bits) })
        .collect();
    (0..n)
        .map(|i| {
            (0..size)
                .map(|s| {
                    (0..b)
                        .filter(|k| (s >> k) & 1 == 1)
                        .fold(0, |acc, k| acc ^ cols[i * b + k])
                })
                .collect()
        })
        .collect()
}

/// Exact law of the joint syndrome given per-position weights `w[i][x][y]`.
fn syndrome_law(
    weights: &[&[Vec<f64>]],
    ha: &[Vec<u32>],
    hb: &[Vec<u32>],
    out_bits: usize,
) -> Vec<f64> {
    let states = 1usize << (2 * out_bits);
    let mut cur = vec![0.0; states];
    cur[0] = 1.0;
    let mut next = vec![0.0; states];
    for (i, w) in weights.iter().enumerate() {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (x, row) in w.iter().enumerate() {
            for (y, &pxy) in row.iter().enumerate() {
                if pxy == 0.0 {
                    continue;
                }
                let shift = ((ha[i][x] as usize) << out_bits) | hb[i][y] as usize;
                for (s, &v) in cur.iter().enumerate() {
                    if v != 0.0 {
                        next[s ^ shift] += v * pxy;
                    }
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// Finite-n local hashing: both senders apply a random linear hash of
/// `out_bits` bits to their strings. Each trial draws a fresh hash and a
/// reference string `z^n`; the hash-output laws are computed exactly.
/// When `X` and `Y` share an alphabet size both use the same hash.
pub fn hash_sim(
    p: &JointDistribution,
    n: usize,
    out_bits: usize,
    trials: usize,
    seed: RngSeed,
) -> Result<HashSimReport> {
    let t = p.xyz_table()?;
    let (nx, ny, nz) = (t.len(), t[0].len(), t[0][0].len());
    if n == 0 || trials == 0 {
        return Err(Error::InvalidArgument("n and trials must be positive".into()));
    }
    if out_bits as f64 > n as f64 * (nx as f64).log2() + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "out_bits = {out_bits} exceeds n log|X| = {:.6}",
            n as f64 * (nx as f64).log2()
        )));
    }
    if 2 * out_bits > HASH_SIM_MAX_BITS {
        return Err(Error::InvalidArgument(format!(
            "out_bits = {out_bits} exceeds the simulator limit of {}",
            HASH_SIM_MAX_BITS / 2
        )));
    }
    let pxy: Vec<Vec<f64>> = (0..nx)
        .map(|x| (0..ny).map(|y| t[x][y].iter().sum()).collect())
        .collect();
    let pz: Vec<f64> = (0..nz)
        .map(|z| (0..nx).map(|x| (0..ny).map(|y| t[x][y][z]).sum::<f64>()).sum())
        .collect();
    let cond: Vec<Vec<Vec<f64>>> = (0..nz)
        .map(|z| {
            (0..nx)
                .map(|x| {
                    (0..ny)
                        .map(|y| if pz[z] > 0.0 { t[x][y][z] / pz[z] } else { 0.0 })
                        .collect()
                })
                .collect()
        })
        .collect();

    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = seed.derive(trial as u64).rng();
            let ha = random_hash(n, nx, out_bits, &mut rng);
            let hb = if ny == nx {
                ha.clone()
            } else {
                random_hash(n, ny, out_bits, &mut rng)
            };
            let zs: Vec<usize> = (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    for (z, &w) in pz.iter().enumerate() {
                        acc += w;
                        if u < acc {
                            return z;
                        }
                    }
                    pz.iter().rposition(|&w| w > 0.0).unwrap_or(0)
                })
                .collect();
            let uncond: Vec<&[Vec<f64>]> = (0..n).map(|_| pxy.as_slice()).collect();
            let given: Vec<&[Vec<f64>]> = zs.iter().map(|&z| cond[z].as_slice()).collect();
            let a = syndrome_law(&uncond, &ha, &hb, out_bits);
            let b = syndrome_law(&given, &ha, &hb, out_bits);
            0.5 * a.iter().zip(&b).map(|(u, v)| (u - v).abs()).sum::<f64>()
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let var = if trials > 1 {
        samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (trials - 1) as f64
    } else {
        0.0
    };
    Ok(HashSimReport {
        n,
        out_bits,
        trials,
        empirical_tv_from_product_with_z: mean,
        standard_error: (var / trials as f64).sqrt(),
        empirical_rate: out_bits as f64 / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conjectures::build_local_eve_state;
    use crate::entropy::{binary_entropy, mutual_info};

    fn xyz(nx: usize, ny: usize, nz: usize, f: impl Fn(&[usize]) -> f64) -> JointDistribution {
        JointDistribution::from_fn(
            vec![Alphabet::new("X", nx), Alphabet::new("Y", ny), Alphabet::new("Z", nz)],
            f,
        )
        .unwrap()
    }

    #[test]
    fn basic_entropies() {
        let bit = xyz(2, 1, 1, |_| 0.5);
        assert!((bit.entropy(&["X"]).unwrap() - 1.0).abs() < 1e-12);
        let det = xyz(2, 1, 1, |d| if d[0] == 0 { 1.0 } else { 0.0 });
        assert_eq!(det.entropy(&["X"]).unwrap(), 0.0);
        let copy = xyz(2, 2, 1, |d| if d[0] == d[1] { 0.5 } else { 0.0 });
        assert!((copy.entropy(&["X", "Y"]).unwrap() - 1.0).abs() < 1e-12);
        assert!((slepian_wolf_sum(&copy).unwrap() - 1.0).abs() < 1e-12);
        let indep = xyz(2, 2, 1, |_| 0.25);
        assert!((slepian_wolf_sum(&indep).unwrap() - 2.0).abs() < 1e-12);
        assert!(classical_mi(&indep, &["X"], &["Y"]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn validation_names_invariant() {
        let bad = JointDistribution::new(vec![Alphabet::new("X", 2)], vec![0.7, 0.7]);
        assert!(bad.unwrap_err().to_string().contains("sum to 1"));
        let bad = JointDistribution::new(vec![Alphabet::new("X", 2)], vec![1.5, -0.5]);
        assert!(bad.unwrap_err().to_string().contains("nonnegative"));
        let text = r#"{"alphabets":[{"label":"X","size":2}],"probs":[1.0]}"#;
        assert!(JointDistribution::from_json(text)
            .unwrap_err()
            .to_string()
            .contains("probs length"));
    }

    #[test]
    fn corr_anticorr_decomposition() {
        for p in [0.5, 0.75, 0.9] {
            let d = make_corr_anticorr(p).unwrap();
            let h2 = binary_entropy(p);
            assert!((slepian_wolf_sum(&d).unwrap() - 1.0 - h2).abs() < 1e-9);
            let k = ki_decompose(&d).unwrap();
            assert!(k.reconstruction_error <= 1e-9);
            assert!((k.h_lj - h2).abs() < 1e-9);
            assert!(k.has_redundancy());
            // Parity is the relevant part, one uniform bit is redundant.
            let parity = |x: usize, y: usize| k.tau.iter().find(|e| e.x == x && e.y == y).unwrap();
            assert_eq!(parity(0, 0).j, parity(1, 1).j);
            assert_ne!(parity(0, 0).j, parity(0, 1).j);
            assert_eq!(k.blocks.len(), 1);
            assert_eq!(k.blocks[0].p_k, vec![0.5, 0.5]);
            let again = ki_decompose(&k.lj_marginal(&d).unwrap()).unwrap();
            assert!(!again.has_redundancy());
            assert!((again.h_lj - k.h_lj).abs() < 1e-12);
        }
    }

    #[test]
    fn full_information_and_no_information() {
        let probs = [0.1, 0.2, 0.3, 0.4];
        let full = xyz(2, 2, 4, |d| if d[2] == d[0] * 2 + d[1] { probs[d[2]] } else { 0.0 });
        let k = ki_decompose(&full).unwrap();
        assert!(!k.has_redundancy());
        assert!((k.h_lj - k.h_xy).abs() < 1e-12);
        let none = xyz(2, 2, 3, |d| [0.2, 0.3, 0.5][d[2]] / 4.0);
        let k = ki_decompose(&none).unwrap();
        assert!(k.h_lj.abs() < 1e-12);
        assert!(k.reconstruction_error < 1e-12);
    }

    #[test]
    fn same_function_hashing_rate() {
        // X = Y, Z a noisy copy: X itself is not independent of Z, the parity
        // of two independent positions would be; single-letter identity maps
        // give no rate but report the protocol value.
        let eps = 0.2;
        let d = xyz(2, 2, 2, |d| {
            if d[0] != d[1] {
                0.0
            } else if d[2] == d[0] {
                0.5 * (1.0 - eps)
            } else {
                0.5 * eps
            }
        });
        let r = classical_mindep_rate(&d, &StochasticMap::identity(2), &StochasticMap::identity(2))
            .unwrap();
        assert!(r.rate.is_none());
        assert!((r.mi_fg - 1.0).abs() < 1e-12);
        let constant = StochasticMap::deterministic(&[0, 0], 1).unwrap();
        let r = classical_mindep_rate(&d, &constant, &constant).unwrap();
        assert_eq!(r.rate, Some(0.0));
    }

    #[test]
    fn local_eve_cross_check() {
        let pm = vec![vec![0.4, 0.1], vec![0.1, 0.4]];
        let p = 0.3;
        let s = build_local_eve_state(&pm, p).unwrap();
        let dist = JointDistribution::from_diagonal_state(&s)
            .unwrap()
            .relabel("A", "X")
            .unwrap()
            .relabel("B", "Y")
            .unwrap()
            .group(&["E1", "E2"], "Z")
            .unwrap();
        let r = classical_mindep_rate(&dist, &StochasticMap::identity(2), &StochasticMap::identity(2))
            .unwrap();
        // X, Y uniform with I(X:Y) = 1 - H2(0.2); Eve's terms come from the
        // quantum entropies of the same state.
        let i_xy = 1.0 - binary_entropy(0.2);
        let i_xe = mutual_info(&s, &["A"], &["E1", "E2"]).unwrap();
        let i_ye = mutual_info(&s, &["B"], &["E1", "E2"]).unwrap();
        assert!((r.mi_fg - i_xy).abs() < 1e-12);
        assert!((r.i_fz - i_xe).abs() < 1e-10);
        assert!((r.i_gz - i_ye).abs() < 1e-10);
        assert!((r.protocol_value - (i_xy - i_xe - i_ye).max(0.0)).abs() < 1e-10);
    }

    #[test]
    fn hash_sim_examples() {
        let d = make_corr_anticorr(1.0).unwrap();
        let r = hash_sim(&d, 6, 0, 10, RngSeed(1)).unwrap();
        assert!(r.empirical_tv_from_product_with_z.abs() < 1e-12);
        let r = hash_sim(&d, 6, 6, 10, RngSeed(1)).unwrap();
        assert!(r.empirical_tv_from_product_with_z.abs() < 1e-12);
        assert_eq!(r.empirical_rate, 1.0);
        assert!(hash_sim(&d, 4, 5, 10, RngSeed(1)).is_err());
    }

    #[test]
    fn hash_sim_distance_decreases_with_n() {
        // X = Y uniform, Z flips it with probability 0.25: H(X|Z) = 0.811.
        let d = xyz(2, 2, 2, |d| {
            if d[0] != d[1] {
                0.0
            } else if d[2] == d[0] {
                0.375
            } else {
                0.125
            }
        });
        let tv: Vec<f64> = [8, 12, 16]
            .iter()
            .map(|&n| {
                hash_sim(&d, n, n / 4, 2000, RngSeed(5))
                    .unwrap()
                    .empirical_tv_from_product_with_z
            })
            .collect();
        assert!(tv[0] > tv[1] && tv[1] > tv[2], "{tv:?}");
    }
}
