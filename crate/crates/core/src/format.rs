//! JSON wire types. Complex scalars are `[re, im]` pairs and matrices are
//! lists of rows.

use serde::{Deserialize, Serialize};

use crate::linalg::{CMatrix, CVector, C64};

pub type WireScalar = [f64; 2];
pub type WireVector = Vec<WireScalar>;
pub type WireMatrix = Vec<Vec<WireScalar>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleFile {
    pub dim: usize,
    pub states: Vec<StateEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    pub prior: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<WireVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<WireMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementFile {
    pub operators: Vec<WireMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vectors: Option<Vec<WireVector>>,
}

pub fn scalar_to_wire(z: C64) -> WireScalar {
    [z.re, z.im]
}

pub fn vector_to_wire(v: &CVector) -> WireVector {
    v.iter().copied().map(scalar_to_wire).collect()
}

pub fn matrix_to_wire(m: &CMatrix) -> WireMatrix {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| scalar_to_wire(m[(r, c)])).collect())
        .collect()
}

pub fn vector_from_wire(v: &[WireScalar]) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(|p| C64::new(p[0], p[1])))
}

/// Returns `None` for ragged rows.
pub fn matrix_from_wire(m: &[Vec<WireScalar>]) -> Option<CMatrix> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if m.iter().any(|row| row.len() != cols) {
        return None;
    }
    Some(CMatrix::from_row_iterator(
        rows,
        cols,
        m.iter().flatten().map(|p| C64::new(p[0], p[1])),
    ))
}
