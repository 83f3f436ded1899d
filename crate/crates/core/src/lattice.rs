//! Rotated planar surface codes over GF(2).
//!
//! Data qubit `(r, c)` for `r, c in 0..d` has index `r * d + c`. A plaquette is
//! named by the data qubit at its top-left corner `(i, j)` with
//! `i, j in -1..d`; it touches the in-range corners of the unit square
//! `(i, j)..(i + 1, j + 1)`. Bulk plaquettes alternate type by `(i + j)`
//! parity: even is X-type, odd is Z-type. Weight-2 X checks sit on the top and
//! bottom edges, weight-2 Z checks on the left and right edges.
//!
//! Z-type checks (`h_z`) detect X errors and X-type checks (`h_x`) detect Z
//! errors. The X-logical runs down a column and the Z-logical along a row.

use serde::{Deserialize, Serialize};

use crate::bits::{BitMatrix, BitVec};
use crate::error::{check_len, Error, Result};

/// Check type of a stabilizer generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CheckKind {
    X,
    Z,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodeLayout {
    pub distance: usize,
    pub n_data: usize,
    pub h_x: BitMatrix,
    pub h_z: BitMatrix,
    /// Support tested against X residuals (the Z-logical row).
    pub l_x_test: BitVec,
    /// Support tested against Z residuals (the X-logical column).
    pub l_z_test: BitVec,
    /// Plaquette centres `(row, col)` of the X-type checks, in `h_x` row order.
    pub x_check_coords: Vec<(f64, f64)>,
    /// Plaquette centres of the Z-type checks, in `h_z` row order.
    pub z_check_coords: Vec<(f64, f64)>,
}

impl CodeLayout {
    pub fn m_x(&self) -> usize {
        self.h_x.n_rows()
    }

    pub fn m_z(&self) -> usize {
        self.h_z.n_rows()
    }

    pub fn qubit_coord(&self, q: usize) -> (usize, usize) {
        (q / self.distance, q % self.distance)
    }

    /// The matrix whose syndrome flags errors of the given Pauli type:
    /// X errors are seen by `h_z`, Z errors by `h_x`.
    pub fn detector_matrix(&self, error: CheckKind) -> &BitMatrix {
        match error {
            CheckKind::X => &self.h_z,
            CheckKind::Z => &self.h_x,
        }
    }

    pub fn check_coords(&self, kind: CheckKind) -> &[(f64, f64)] {
        match kind {
            CheckKind::X => &self.x_check_coords,
            CheckKind::Z => &self.z_check_coords,
        }
    }

    /// Serializable dump with bitstring rows for cross-implementation diffing.
    pub fn dump(&self) -> LayoutDump {
        LayoutDump {
            distance: self.distance,
            n_data: self.n_data,
            h_x: self.h_x.rows().iter().map(BitVec::to_bit_string).collect(),
            h_z: self.h_z.rows().iter().map(BitVec::to_bit_string).collect(),
            l_x_test: self.l_x_test.to_bit_string(),
            l_z_test: self.l_z_test.to_bit_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutDump {
    pub distance: usize,
    pub n_data: usize,
    pub h_x: Vec<String>,
    pub h_z: Vec<String>,
    pub l_x_test: String,
    pub l_z_test: String,
}

/// Per-trial Pauli frame on the data qubits plus loss flags.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ErrorState {
    pub e_x: BitVec,
    pub e_z: BitVec,
    pub erased: BitVec,
}

impl ErrorState {
    pub fn zeros(n: usize) -> Self {
        ErrorState { e_x: BitVec::zeros(n), e_z: BitVec::zeros(n), erased: BitVec::zeros(n) }
    }

    pub fn len(&self) -> usize {
        self.e_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e_x.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.e_x.weight() + self.e_z.weight()
    }

    fn check_against(&self, n: usize) -> Result<()> {
        check_len("e_x", self.e_x.len(), n)?;
        check_len("e_z", self.e_z.len(), n)?;
        check_len("erased", self.erased.len(), n)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Syndrome {
    /// Z-check outcomes (`h_z · e_x`).
    pub s_z: BitVec,
    /// X-check outcomes (`h_x · e_z`).
    pub s_x: BitVec,
}

impl Syndrome {
    pub fn zeros(layout: &CodeLayout) -> Self {
        Syndrome { s_z: BitVec::zeros(layout.m_z()), s_x: BitVec::zeros(layout.m_x()) }
    }

    pub fn defect_count(&self) -> usize {
        self.s_z.weight() + self.s_x.weight()
    }

    pub fn is_trivial(&self) -> bool {
        self.s_z.is_zero() && self.s_x.is_zero()
    }

    /// Syndrome bits for the checks that detect errors of type `error`.
    pub fn for_error(&self, error: CheckKind) -> &BitVec {
        match error {
            CheckKind::X => &self.s_z,
            CheckKind::Z => &self.s_x,
        }
    }
}

pub fn build_code(distance: usize) -> Result<CodeLayout> {
    if distance < 3 || distance % 2 == 0 {
        return Err(Error::InvalidDistance(distance));
    }
    let d = distance as i64;
    let n = distance * distance;
    let mut x_rows = Vec::new();
    let mut z_rows = Vec::new();
    let mut x_coords = Vec::new();
    let mut z_coords = Vec::new();

    for i in -1..d {
        for j in -1..d {
            let corners: Vec<usize> = [(i, j), (i, j + 1), (i + 1, j), (i + 1, j + 1)]
                .into_iter()
                .filter(|&(r, c)| (0..d).contains(&r) && (0..d).contains(&c))
                .map(|(r, c)| (r * d + c) as usize)
                .collect();
            let x_type = (i + j).rem_euclid(2) == 0;
            let top_bottom = i == -1 || i == d - 1;
            let left_right = j == -1 || j == d - 1;
            let keep = match corners.len() {
                4 => true,
                2 => (x_type && top_bottom && !left_right) || (!x_type && left_right && !top_bottom),
                _ => false,
            };
            if !keep {
                continue;
            }
            let row = BitVec::from_support(n, &corners);
            let centre = (i as f64 + 0.5, j as f64 + 0.5);
            if x_type {
                x_rows.push(row);
                x_coords.push(centre);
            } else {
                z_rows.push(row);
                z_coords.push(centre);
            }
        }
    }

    let row0: Vec<usize> = (0..distance).collect();
    let col0: Vec<usize> = (0..distance).map(|r| r * distance).collect();
    Ok(CodeLayout {
        distance,
        n_data: n,
        h_x: BitMatrix::from_rows(x_rows),
        h_z: BitMatrix::from_rows(z_rows),
        l_x_test: BitVec::from_support(n, &row0),
        l_z_test: BitVec::from_support(n, &col0),
        x_check_coords: x_coords,
        z_check_coords: z_coords,
    })
}

pub fn extract_syndrome(layout: &CodeLayout, err: &ErrorState) -> Result<Syndrome> {
    err.check_against(layout.n_data)?;
    Ok(Syndrome { s_z: layout.h_z.mul_vec(&err.e_x), s_x: layout.h_x.mul_vec(&err.e_z) })
}

/// Componentwise XOR of the Pauli frames; loss flags come from `err`.
pub fn residual(err: &ErrorState, correction: &ErrorState) -> Result<ErrorState> {
    check_len("correction.e_x", correction.e_x.len(), err.e_x.len())?;
    check_len("correction.e_z", correction.e_z.len(), err.e_z.len())?;
    Ok(ErrorState {
        e_x: err.e_x.xor(&correction.e_x),
        e_z: err.e_z.xor(&correction.e_z),
        erased: err.erased.clone(),
    })
}

pub fn logical_failure(layout: &CodeLayout, res: &ErrorState) -> Result<bool> {
    check_len("residual.e_x", res.e_x.len(), layout.n_data)?;
    check_len("residual.e_z", res.e_z.len(), layout.n_data)?;
    Ok(res.e_x.dot(&layout.l_x_test) || res.e_z.dot(&layout.l_z_test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_distances() {
        for d in [0, 1, 2, 4, 6] {
            assert!(matches!(build_code(d), Err(Error::InvalidDistance(_))));
        }
    }

    #[test]
    fn check_counts() {
        for (d, m) in [(3, 4), (5, 12), (7, 24)] {
            let code = build_code(d).unwrap();
            assert_eq!(code.n_data, d * d);
            assert_eq!(code.m_x(), m);
            assert_eq!(code.m_z(), m);
            assert_eq!(code.x_check_coords.len(), m);
        }
    }

    #[test]
    fn every_qubit_is_covered_by_one_or_two_checks_of_each_type() {
        let code = build_code(5).unwrap();
        for h in [&code.h_x, &code.h_z] {
            for q in 0..code.n_data {
                let c = h.column(q).weight();
                assert!(c == 1 || c == 2, "qubit {q} in {c} checks");
            }
        }
    }

    #[test]
    fn deterministic_construction() {
        assert_eq!(build_code(7).unwrap(), build_code(7).unwrap());
    }

    #[test]
    fn test_vectors_sit_in_the_right_normalizer() {
        for d in [3, 5, 7] {
            let code = build_code(d).unwrap();
            assert!(code.h_x.mul_vec(&code.l_x_test).is_zero());
            assert!(code.h_z.mul_vec(&code.l_z_test).is_zero());
            assert!(code.l_x_test.weight() >= d);
            assert!(code.l_z_test.weight() >= d);
        }
    }

    #[test]
    fn residual_cases() {
        let n = 3;
        let e = ErrorState {
            e_x: BitVec::parse("101").unwrap(),
            e_z: BitVec::parse("011").unwrap(),
            erased: BitVec::parse("100").unwrap(),
        };
        let c = ErrorState { e_x: BitVec::parse("110").unwrap(), ..ErrorState::zeros(n) };
        let r = residual(&e, &c).unwrap();
        assert_eq!(r.e_x.to_bit_string(), "011");
        assert_eq!(r.e_z, e.e_z);
        assert_eq!(r.erased, e.erased);
        assert!(residual(&e, &e).unwrap().e_x.is_zero());
        assert_eq!(residual(&e, &ErrorState::zeros(n)).unwrap(), e);
        assert!(residual(&e, &ErrorState::zeros(4)).is_err());
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let code = build_code(3).unwrap();
        assert!(extract_syndrome(&code, &ErrorState::zeros(8)).is_err());
        assert!(logical_failure(&code, &ErrorState::zeros(10)).is_err());
    }

    #[test]
    fn unit_error_lights_its_column() {
        let code = build_code(3).unwrap();
        for q in 0..code.n_data {
            let mut e = ErrorState::zeros(code.n_data);
            e.e_x.set(q, true);
            let s = extract_syndrome(&code, &e).unwrap();
            assert_eq!(s.s_z, code.h_z.column(q));
            assert!(s.s_x.is_zero());
        }
    }
}
