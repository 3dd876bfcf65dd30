//! JSON state files.
//!
//! ```json
//! {"dims":[{"label":"A","dim":2},{"label":"B","dim":2}],
//!  "kind":"density",
//!  "matrix":[[0.5,0.0],[0.0,0.0], ...]}
//! ```
//!
//! `matrix` is the row-major flattening of the density matrix as `[re, im]`
//! pairs; for `"kind":"pure-vector"` it holds the amplitudes instead. An
//! optional `expected` map records reference values used by `selftest`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::linalg::{c, CMat, CVec};
use super::ops::Isometry;
use super::state::{MultipartiteState, StateKind, Subsystem};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub dims: Vec<Subsystem>,
    pub kind: StateKind,
    pub matrix: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub expected: BTreeMap<String, f64>,
}

/// A labeled matrix in the same `[re, im]` row-major layout (used for unitaries and isometries).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixFile {
    pub fn from_matrix(m: &CMat) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        MatrixFile {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Parse(format!(
                "field `data`: expected {} entries for a {}x{} matrix, found {}",
                self.rows * self.cols,
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(CMat::from_fn(self.rows, self.cols, |i, j| {
            let [re, im] = self.data[i * self.cols + j];
            c(re, im)
        }))
    }
}

impl StateFile {
    pub fn from_state(s: &MultipartiteState) -> Self {
        let matrix = match s.vector() {
            Some(v) => v.iter().map(|z| [z.re, z.im]).collect(),
            None => MatrixFile::from_matrix(&s.matrix()).data,
        };
        StateFile {
            dims: s.subsystems().to_vec(),
            kind: s.kind(),
            matrix,
            expected: BTreeMap::new(),
        }
    }

    /// Build and validate the state; errors name the violated invariant.
    pub fn to_state(&self) -> Result<MultipartiteState> {
        let n: usize = self.dims.iter().map(|s| s.dim).product();
        for (k, z) in self.matrix.iter().enumerate() {
            if !z[0].is_finite() || !z[1].is_finite() {
                return Err(Error::Parse(format!("field `matrix`: entry {k} is not finite")));
            }
        }
        match self.kind {
            StateKind::Density => {
                if self.matrix.len() != n * n {
                    return Err(Error::invariant(
                        "product of dims equals matrix side",
                        format!(
                            "field `matrix` has {} entries, dims require {}",
                            self.matrix.len(),
                            n * n
                        ),
                    ));
                }
                let m = CMat::from_fn(n, n, |i, j| {
                    let [re, im] = self.matrix[i * n + j];
                    c(re, im)
                });
                MultipartiteState::density(m, self.dims.clone())
            }
            StateKind::PureVector => {
                if self.matrix.len() != n {
                    return Err(Error::invariant(
                        "product of dims equals vector length",
                        format!(
                            "field `matrix` has {} entries, dims require {}",
                            self.matrix.len(),
                            n
                        ),
                    ));
                }
                let v = CVec::from_iterator(n, self.matrix.iter().map(|z| c(z[0], z[1])));
                MultipartiteState::pure(v, self.dims.clone())
            }
        }
    }
}

pub fn state_to_json(s: &MultipartiteState) -> String {
    serde_json::to_string(&StateFile::from_state(s)).expect("state serializes")
}

pub fn state_from_json(text: &str) -> Result<MultipartiteState> {
    let f: StateFile = serde_json::from_str(text)?;
    f.to_state()
}

pub fn read_state_file(path: &Path) -> Result<(MultipartiteState, StateFile)> {
    let text = std::fs::read_to_string(path)?;
    let f: StateFile = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let s = f.to_state()?;
    Ok((s, f))
}

pub fn write_state_file(path: &Path, s: &MultipartiteState) -> Result<()> {
    let text = serde_json::to_string_pretty(&StateFile::from_state(s))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Serialized form of an [`Isometry`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IsometryFile {
    pub in_dims: Vec<Subsystem>,
    pub out_dims: Vec<Subsystem>,
    pub matrix: MatrixFile,
}

impl IsometryFile {
    pub fn from_isometry(v: &Isometry) -> Self {
        IsometryFile {
            in_dims: v.in_dims().to_vec(),
            out_dims: v.out_dims().to_vec(),
            matrix: MatrixFile::from_matrix(v.matrix()),
        }
    }

    pub fn to_isometry(&self) -> Result<Isometry> {
        Isometry::new(
            self.matrix.to_matrix()?,
            self.in_dims.clone(),
            self.out_dims.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::random::{random_density, RngSeed};

    #[test]
    fn density_roundtrip_is_exact() {
        let s = random_density(3, 2, RngSeed(3)).unwrap();
        let back = state_from_json(&state_to_json(&s)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn reader_names_failed_invariant() {
        let text = r#"{"dims":[{"label":"A","dim":2}],"kind":"density",
            "matrix":[[1.0,0.0],[0.0,0.0],[0.0,0.0],[1.0,0.0]]}"#;
        let err = state_from_json(text).unwrap_err().to_string();
        assert!(err.contains("unit trace"), "{err}");
        let text = r#"{"dims":[{"label":"A","dim":2},{"label":"A","dim":1}],"kind":"density",
            "matrix":[[0.5,0.0],[0.0,0.0],[0.0,0.0],[0.5,0.0]]}"#;
        assert!(state_from_json(text).unwrap_err().to_string().contains("label"));
        let text = r#"{"dims":[{"label":"A","dim":2}],"kind":"density","matrix":[[1.0,0.0]]}"#;
        let err = state_from_json(text).unwrap_err().to_string();
        assert!(err.contains("product of dims"), "{err}");
    }

    #[test]
    fn pure_vector_kind_parses() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let text = format!(
            r#"{{"dims":[{{"label":"A","dim":2}}],"kind":"pure-vector","matrix":[[{h},0.0],[0.0,{h}]]}}"#
        );
        let s = state_from_json(&text).unwrap();
        assert_eq!(s.kind(), StateKind::PureVector);
    }
}
