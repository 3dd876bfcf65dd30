//! Seeded sampling of Haar unitaries, isometries and random density matrices.
//!
//! Every stream is a ChaCha20 generator keyed by a `u64`. Independent jobs
//! (restarts, trials, workers) get their own stream through [`RngSeed::derive`],
//! so results never depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::linalg::{c, cr, CMat, CVec};
use super::ops::Isometry;
use super::state::{MultipartiteState, Subsystem};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngSeed {
    pub fn rng(self) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(self.0)
    }

    /// Child seed for job `index`: `splitmix64(seed ^ splitmix64(index))`.
    pub fn derive(self, index: u64) -> RngSeed {
        RngSeed(splitmix64(self.0 ^ splitmix64(index)))
    }
}

impl From<u64> for RngSeed {
    fn from(v: u64) -> Self {
        RngSeed(v)
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Complex Ginibre matrix with i.i.d. standard normal real and imaginary parts.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    // Fill row-major so the stream order matches the documented file layout.
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = c(gaussian(rng), gaussian(rng));
        }
    }
    m
}

/// Haar-random unitary: QR of a Ginibre matrix with `R`'s diagonal made positive.
pub fn haar_unitary_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = ginibre(dim, dim, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..dim {
        let d = r[(k, k)];
        let n = d.norm();
        let phase = if n > 0.0 { d / n } else { cr(1.0) };
        for i in 0..dim {
            q[(i, k)] *= phase;
        }
    }
    q
}

pub fn haar_unitary(dim: usize, seed: RngSeed) -> Result<CMat> {
    if dim == 0 {
        return Err(Error::InvalidArgument("unitary dimension must be positive".into()));
    }
    Ok(haar_unitary_with(dim, &mut seed.rng()))
}

/// First `din` columns of a Haar unitary on `dout`.
pub fn haar_isometry_matrix<R: Rng + ?Sized>(din: usize, dout: usize, rng: &mut R) -> CMat {
    let u = haar_unitary_with(dout, rng);
    u.columns(0, din).into_owned()
}

pub fn haar_isometry(
    in_dims: Vec<Subsystem>,
    out_dims: Vec<Subsystem>,
    seed: RngSeed,
) -> Result<Isometry> {
    let din: usize = in_dims.iter().map(|s| s.dim).product();
    let dout: usize = out_dims.iter().map(|s| s.dim).product();
    if din == 0 || din > dout {
        return Err(Error::InvalidArgument(format!(
            "isometry needs 0 < din <= dout, got {din} -> {dout}"
        )));
    }
    Isometry::new(
        haar_isometry_matrix(din, dout, &mut seed.rng()),
        in_dims,
        out_dims,
    )
}

/// Haar-random unit vector.
pub fn random_pure_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVec {
    let g = ginibre(dim, 1, rng);
    let v: CVec = g.column(0).into_owned();
    let n = v.norm();
    v / cr(n)
}

/// Random density matrix of the given rank: the `dim` marginal of a Haar pure
/// state on `dim x rank`.
pub fn random_density_with<R: Rng + ?Sized>(
    label: &str,
    dim: usize,
    rank: usize,
    rng: &mut R,
) -> Result<MultipartiteState> {
    if dim == 0 || rank == 0 || rank > dim {
        return Err(Error::InvalidArgument(format!(
            "random density needs 0 < rank <= dim, got rank {rank}, dim {dim}"
        )));
    }
    let v = random_pure_vector(dim * rank, rng);
    let psi = MultipartiteState::pure(
        v,
        vec![Subsystem::new(label, dim), Subsystem::new("__env", rank)],
    )?;
    psi.partial_trace(&[label])
}

pub fn random_density(dim: usize, rank: usize, seed: RngSeed) -> Result<MultipartiteState> {
    random_density_with("A", dim, rank, &mut seed.rng())
}

/// Random full-rank state on several labeled subsystems.
pub fn random_state_with<R: Rng + ?Sized>(
    dims: &[(&str, usize)],
    rank: usize,
    rng: &mut R,
) -> Result<MultipartiteState> {
    let total: usize = dims.iter().map(|d| d.1).product();
    let s = random_density_with("__joint", total, rank, rng)?;
    MultipartiteState::density_unchecked(
        s.matrix(),
        dims.iter().map(|(l, d)| Subsystem::new(*l, *d)).collect(),
    )
}
