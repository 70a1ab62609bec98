//! JSON scheme-description files, schema in `schemas/qbc_scheme.schema.json`.

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::open::OpenOperation;
use super::scheme::{binding_analysis, concealing_defect, uhlmann_overlap, QbcScheme};
use super::state::{HilbertDims, PureState, DEFAULT_DIM_CAP};
use super::{CMatrix, QbcError, Result};
use crate::scalar::Scalar;

pub const SCHEME_FORMAT: &str = "qbc-scheme/1";

/// A complex number as `[re, im]`.
pub type ComplexPair = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeFile {
    pub format: String,
    pub dim_a: usize,
    pub dim_b: usize,
    /// Amplitudes of the bit-0 commitment, row-major over `(a, b)`.
    pub c0: Vec<ComplexPair>,
    pub c1: Vec<ComplexPair>,
    /// Kraus operators of the opening channel, each a list of rows. The
    /// identity channel is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open: Option<Vec<Vec<Vec<ComplexPair>>>>,
    /// Rescale `c0` and `c1` to unit norm instead of rejecting them.
    #[serde(default)]
    pub normalize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_cap: Option<usize>,
}

fn to_complex<T: Scalar>(p: &ComplexPair) -> Complex<T> {
    Complex::new(T::lit(p[0]), T::lit(p[1]))
}

fn to_pair<T: Scalar>(z: &Complex<T>) -> ComplexPair {
    [z.re.as_f64(), z.im.as_f64()]
}

pub(crate) fn matrix_to_rows<T: Scalar>(m: &CMatrix<T>) -> Vec<Vec<ComplexPair>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| to_pair(&m[(r, c)])).collect()).collect()
}

impl SchemeFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(text).map_err(|e| QbcError::File(e.to_string()))?;
        if f.format != SCHEME_FORMAT {
            return Err(QbcError::File(format!("unsupported format {:?}, expected {SCHEME_FORMAT:?}", f.format)));
        }
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scheme file serializes")
    }

    pub fn to_scheme<T: Scalar>(&self) -> Result<QbcScheme<T>> {
        let dims = HilbertDims::with_cap(self.dim_a, self.dim_b, self.dim_cap.unwrap_or(DEFAULT_DIM_CAP))?;
        let state = |amps: &[ComplexPair]| {
            let v = amps.iter().map(to_complex).collect();
            if self.normalize {
                PureState::normalized(dims, v)
            } else {
                PureState::new(dims, v)
            }
        };
        let c0 = state(&self.c0)?;
        let c1 = state(&self.c1)?;
        let open = match &self.open {
            None => OpenOperation::identity(dims.total()),
            Some(ops) => {
                let mut kraus = Vec::with_capacity(ops.len());
                for rows in ops {
                    let n = rows.len();
                    if rows.iter().any(|r| r.len() != n) {
                        return Err(QbcError::File("Kraus operator is not square".into()));
                    }
                    kraus.push(DMatrix::from_fn(n, n, |r, c| to_complex(&rows[r][c])));
                }
                OpenOperation::new(kraus)?
            }
        };
        QbcScheme::new(c0, c1, open)
    }

    pub fn from_scheme<T: Scalar>(scheme: &QbcScheme<T>) -> Self {
        Self {
            format: SCHEME_FORMAT.to_string(),
            dim_a: scheme.dims().dim_a(),
            dim_b: scheme.dims().dim_b(),
            c0: scheme.c0().amplitudes().iter().map(to_pair).collect(),
            c1: scheme.c1().amplitudes().iter().map(to_pair).collect(),
            open: Some(scheme.open_op().kraus().iter().map(matrix_to_rows).collect()),
            normalize: false,
            dim_cap: None,
        }
    }
}

/// Summary produced by `qbc analyze`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeAnalysis {
    pub dim_a: usize,
    pub dim_b: usize,
    pub concealing_defect: f64,
    pub binding_strength: f64,
    /// Fidelity of the reduced states; must equal `1 - binding_strength`.
    pub marginal_fidelity: f64,
    pub open_distance: f64,
    pub concealing: bool,
    pub binding: bool,
    /// Unitary on `A` mapping `c0` to `c1`, present when not binding.
    pub cheating_unitary: Option<Vec<Vec<ComplexPair>>>,
    /// False only if the scheme were both concealing and binding.
    pub no_go_consistent: bool,
}

/// Concealing holds when the defect is within the operator tolerance; binding
/// holds when the strength exceeds `1e-6`.
pub fn analyze<T: Scalar>(scheme: &QbcScheme<T>) -> SchemeAnalysis {
    const BINDING_TOL: f64 = 1e-6;
    let defect = concealing_defect(scheme).as_f64();
    let b = binding_analysis(scheme);
    let concealing = defect <= T::OP_TOL;
    let binding = b.strength.as_f64() > BINDING_TOL;
    SchemeAnalysis {
        dim_a: scheme.dims().dim_a(),
        dim_b: scheme.dims().dim_b(),
        concealing_defect: defect,
        binding_strength: b.strength.as_f64(),
        marginal_fidelity: uhlmann_overlap(scheme).as_f64(),
        open_distance: scheme.open_distance().as_f64(),
        concealing,
        binding,
        cheating_unitary: b.witness(BINDING_TOL).map(matrix_to_rows),
        no_go_consistent: !(concealing && binding),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BELL: &str = r#"{
        "format": "qbc-scheme/1",
        "dim_a": 2, "dim_b": 2,
        "c0": [[1,0],[0,0],[0,0],[1,0]],
        "c1": [[0,0],[1,0],[1,0],[0,0]],
        "normalize": true
    }"#;

    #[test]
    fn parses_and_analyzes_bell_scheme() {
        let f = SchemeFile::from_json(BELL).unwrap();
        let a = analyze(&f.to_scheme::<f64>().unwrap());
        assert!(a.concealing && !a.binding && a.no_go_consistent);
        assert!(a.cheating_unitary.is_some());
        let a32 = analyze(&f.to_scheme::<f32>().unwrap());
        assert!(a32.concealing && !a32.binding);
    }

    #[test]
    fn unnormalized_states_rejected_without_flag() {
        let text = BELL.replace("\"normalize\": true", "\"normalize\": false");
        let f = SchemeFile::from_json(&text).unwrap();
        assert!(matches!(f.to_scheme::<f64>(), Err(QbcError::NotNormalized { .. })));
    }

    #[test]
    fn wrong_format_and_unknown_fields_rejected() {
        assert!(SchemeFile::from_json(&BELL.replace("qbc-scheme/1", "qbc-scheme/9")).is_err());
        assert!(SchemeFile::from_json(&BELL.replace("\"normalize\"", "\"extra\": 1, \"normalize\"")).is_err());
    }

    #[test]
    fn roundtrips_through_json() {
        let s = SchemeFile::from_json(BELL).unwrap().to_scheme::<f64>().unwrap();
        let f = SchemeFile::from_scheme(&s);
        let back = SchemeFile::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
        let s2 = back.to_scheme::<f64>().unwrap();
        assert_eq!(s2.c0(), s.c0());
    }
}
