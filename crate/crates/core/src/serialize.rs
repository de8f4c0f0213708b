//! JSON document holding the value-function and feedback coefficients.
//!
//! Each `v_k` is stored as its flat tensor layout and each `k_j` as the
//! column-major vectorization of the `m × n^j` matrix. Floats are written in
//! shortest round-trip form, so a reload reproduces every bit.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::albrekht::{FeedbackLaw, ValueFunction};
use crate::error::{PqrError, Result};
use crate::kron::LAYOUT;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CoefficientFile {
    pub n: usize,
    pub m: usize,
    /// Highest feedback degree; the value function goes one degree higher.
    pub max_degree: usize,
    pub layout: String,
    pub v: BTreeMap<usize, Vec<f64>>,
    pub k: BTreeMap<usize, Vec<f64>>,
}

impl CoefficientFile {
    pub fn from_solution(vf: &ValueFunction, law: &FeedbackLaw) -> Self {
        let v = (2..=vf.max_degree()).map(|k| (k, vf.coeff(k).unwrap().to_vec())).collect();
        let k = (1..=law.max_degree()).map(|j| (j, law.gain(j).unwrap().as_slice().to_vec())).collect();
        Self { n: law.n(), m: law.m(), max_degree: law.max_degree(), layout: LAYOUT.to_string(), v, k }
    }

    pub fn into_solution(self) -> Result<(ValueFunction, FeedbackLaw)> {
        if self.layout != LAYOUT {
            return Err(PqrError::InvalidParameter(format!("unsupported layout {:?}", self.layout)));
        }
        let take = |map: &BTreeMap<usize, Vec<f64>>, range: std::ops::RangeInclusive<usize>, name: &str| {
            range
                .map(|d| map.get(&d).cloned().ok_or_else(|| PqrError::MissingCoefficient(format!("{name}_{d}"))))
                .collect::<Result<Vec<_>>>()
        };
        if self.v.len() != self.max_degree || self.k.len() != self.max_degree {
            return Err(PqrError::InvalidParameter("coefficient count does not match maxDegree".into()));
        }
        let values = take(&self.v, 2..=self.max_degree + 1, "v")?;
        let gains = take(&self.k, 1..=self.max_degree, "k")?
            .into_iter()
            .enumerate()
            .map(|(i, data)| {
                let cols = self.n.checked_pow(i as u32 + 1).unwrap_or(usize::MAX);
                if data.len() != self.m.saturating_mul(cols) {
                    return Err(PqrError::LengthMismatch { expected: self.m.saturating_mul(cols), actual: data.len() });
                }
                Ok(DMatrix::from_vec(self.m, cols, data))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((ValueFunction::new(self.n, values)?, FeedbackLaw::new(self.n, self.m, gains)?))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("coefficients serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| PqrError::InvalidParameter(format!("coefficient file: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::albrekht::pqr;
    use crate::models;

    #[test]
    fn round_trip_is_exact() {
        let inst = models::lorenz();
        let (vf, law) = pqr(&inst.system, &inst.cost, 4).unwrap();
        let file = CoefficientFile::from_solution(&vf, &law);
        let text = file.to_json();
        assert!(text.contains("\"maxDegree\": 4"));
        assert!(text.contains("column-major-mode1-slowest"));
        let back = CoefficientFile::from_json(&text).unwrap();
        assert_eq!(back, file);
        let (vf2, law2) = back.into_solution().unwrap();
        assert_eq!(vf2, vf);
        assert_eq!(law2, law);
    }

    #[test]
    fn rejects_inconsistent_documents() {
        let inst = models::lorenz();
        let (vf, law) = pqr(&inst.system, &inst.cost, 2).unwrap();
        let mut file = CoefficientFile::from_solution(&vf, &law);
        file.k.get_mut(&2).unwrap().pop();
        assert!(file.clone().into_solution().is_err());
        file.k.remove(&2);
        assert!(file.into_solution().is_err());
        assert!(CoefficientFile::from_json("{\"n\": 1, \"extra\": 0}").is_err());
    }
}
