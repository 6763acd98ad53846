use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::RealMatrix;

use super::assemble::DynamicDetectorDesign;

/// Design artifact: the generator matrices together with the numbers they
/// were accepted on. Stored as TOML with matrices as lists of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRecord {
    pub n_zeta: usize,
    pub delta: f64,
    pub rho_delta: f64,
    pub j_tilde: f64,
    pub a: Vec<Vec<f64>>,
    pub m: Vec<Vec<f64>>,
    pub k: Vec<Vec<f64>>,
}

pub(crate) fn to_rows(m: &RealMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub(crate) fn from_rows(rows: &[Vec<f64>], cols: usize, name: &str) -> Result<RealMatrix> {
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Dimension(format!("every row of {name} must have {cols} entries")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(RealMatrix::from_row_slice(rows.len(), cols, &flat))
}

impl DesignRecord {
    pub fn new(design: &DynamicDetectorDesign, delta: f64, rho_delta: f64, j_tilde: f64) -> Self {
        Self {
            n_zeta: design.n_zeta(),
            delta,
            rho_delta,
            j_tilde,
            a: to_rows(&design.a),
            m: to_rows(&design.m),
            k: to_rows(&design.k),
        }
    }

    pub fn design(&self) -> Result<DynamicDetectorDesign> {
        let nz = self.n_zeta;
        if self.a.len() != nz || self.m.len() != nz {
            return Err(Error::Dimension(format!("Ã and M̃ must have {nz} rows")));
        }
        let p = self.m.first().map_or(0, Vec::len);
        let a = from_rows(&self.a, nz, "Ã")?;
        let m = from_rows(&self.m, p, "M̃")?;
        let k = from_rows(&self.k, nz, "K̃")?;
        DynamicDetectorDesign::new(a, m, k)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Argument(format!("cannot serialise design: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("design", e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn toml_round_trip() {
        let design = DynamicDetectorDesign::new(
            dmatrix![0.48, -0.81; 0.01, 0.61],
            dmatrix![-0.84; -0.49],
            dmatrix![0.9, -0.1],
        )
        .unwrap();
        let rec = DesignRecord::new(&design, 1.03, 1.0412345678901234, 2.5);
        let text = rec.to_toml().unwrap();
        let back = DesignRecord::from_toml(&text).unwrap();
        assert_eq!(back, rec);
        assert_eq!(back.design().unwrap(), design);
    }

    #[test]
    fn ragged_rows_rejected() {
        let mut rec = DesignRecord::new(&DynamicDetectorDesign::zero(2, 1, 1), 1.1, 0.0, 0.0);
        rec.a[1].pop();
        assert!(rec.design().is_err());
    }
}
