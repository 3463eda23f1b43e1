use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::shifter::{AnalogMatrix, PhaseShifterSet};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

/// Square analog block used by the receive design.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiveBlock {
    /// Rows `omega_k^(l-1)` with `omega_k = exp(j 2 pi n_k / 2^I)`.
    Vandermonde(Vec<usize>),
    /// Sylvester Hadamard block; used when `2^I < K_r` leaves too few distinct exponents.
    Hadamard,
}

/// Transmit exponents `(0, n2)` with `n2 = round(2^I / K_t)`, which spreads the
/// second row over the unit circle.
pub fn default_transmit_exponents(shifter: &PhaseShifterSet, k_t: usize) -> (usize, usize) {
    let levels = shifter.levels() as f64;
    let n2 = ((levels / k_t.max(1) as f64).round() as usize).max(1) % shifter.levels();
    (0, n2.max(1))
}

/// `n_k = floor(k 2^I / K_r)`; falls back to a Hadamard block when the phase set is
/// too coarse and `K_r` is a power of two.
pub fn default_receive_block(shifter: &PhaseShifterSet, k_r: usize) -> Result<ReceiveBlock> {
    let levels = shifter.levels();
    if k_r <= levels {
        return Ok(ReceiveBlock::Vandermonde(
            (0..k_r).map(|k| k * levels / k_r).collect(),
        ));
    }
    if k_r.is_power_of_two() {
        return Ok(ReceiveBlock::Hadamard);
    }
    Err(Error::Infeasible(format!(
        "{k_r} receive RF chains need {k_r} distinct phases but {}-bit shifters offer {levels}",
        shifter.bits
    )))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmitStageDesign {
    /// `N_t x K_t` analog precoder.
    pub g: AnalogMatrix,
    /// `K_t` digital precoder.
    pub b: CVector,
    /// 0-based column selected by `G b`.
    pub target_column: usize,
}

impl TransmitStageDesign {
    pub fn realized(&self) -> CVector {
        self.g.to_matrix() * &self.b
    }
}

/// Builds `G, b` with `G b = e_j` for 0-based `target`.
pub fn design_transmit_stage(
    target: usize,
    n_t: usize,
    k_t: usize,
    shifter: &PhaseShifterSet,
    n1: usize,
    n2: usize,
) -> Result<TransmitStageDesign> {
    if k_t < 2 {
        return Err(Error::Infeasible(
            "a single transmit RF chain cannot synthesize a unit vector".into(),
        ));
    }
    if target >= n_t || n_t < 2 {
        return Err(Error::InvalidParameter(format!(
            "target column {target} outside 0..{n_t}"
        )));
    }
    let levels = shifter.levels();
    if n1 % levels == n2 % levels {
        return Err(Error::RankDeficient(format!(
            "transmit exponents {n1} and {n2} coincide modulo {levels}"
        )));
    }
    let row = |n: usize| -> Vec<usize> { (0..k_t).map(|l| (n * l) % levels).collect() };
    let (r1, r2) = (row(n1), row(n2));
    let scale = 1.0 / (k_t as f64).sqrt();

    let g1 = CMatrix::from_fn(2, k_t, |i, l| {
        let idx = if i == 0 { r1[l] } else { r2[l] };
        shifter.value(idx) * scale
    });
    let gram = &g1 * g1.adjoint();
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient("transmit Vandermonde block is singular".into()))?;
    let b = g1.adjoint() * inv.column(0);

    let mut indices = Vec::with_capacity(n_t * k_t);
    indices.extend_from_slice(&r1);
    for _ in 1..n_t {
        indices.extend_from_slice(&r2);
    }
    let mut g = AnalogMatrix {
        rows: n_t,
        cols: k_t,
        indices,
        scale,
        shifter: *shifter,
    };
    g.swap_rows(0, target);
    Ok(TransmitStageDesign {
        g,
        b,
        target_column: target,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiveStepDesign {
    /// `N_r x K_r` analog combiner.
    pub q: AnalogMatrix,
    /// `K_r x |row_set|` digital combiner.
    pub d: CMatrix,
    /// 0-based rows selected, in column order.
    pub row_set: Vec<usize>,
}

impl ReceiveStepDesign {
    pub fn realized(&self) -> CMatrix {
        self.q.to_matrix() * &self.d
    }
}

/// 0/1 matrix with a single one per column at the given rows.
pub fn selection_matrix(row_set: &[usize], n_r: usize) -> CMatrix {
    let mut w = CMatrix::zeros(n_r, row_set.len());
    for (c, &r) in row_set.iter().enumerate() {
        w[(r, c)] = Complex64::new(1.0, 0.0);
    }
    w
}

fn block_indices(block: &ReceiveBlock, k_r: usize, shifter: &PhaseShifterSet) -> Result<Vec<usize>> {
    let levels = shifter.levels();
    match block {
        ReceiveBlock::Vandermonde(exps) => {
            if exps.len() != k_r {
                return Err(Error::InvalidParameter(format!(
                    "{} receive exponents supplied for {k_r} RF chains",
                    exps.len()
                )));
            }
            let mut seen: Vec<usize> = exps.iter().map(|n| n % levels).collect();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != k_r {
                return Err(Error::RankDeficient(format!(
                    "receive exponents {exps:?} repeat modulo {levels}"
                )));
            }
            let mut out = Vec::with_capacity(k_r * k_r);
            for &n in exps {
                out.extend((0..k_r).map(|l| (n * l) % levels));
            }
            Ok(out)
        }
        ReceiveBlock::Hadamard => {
            if !k_r.is_power_of_two() {
                return Err(Error::Infeasible(format!(
                    "Hadamard block needs a power-of-two size, got {k_r}"
                )));
            }
            let half = levels / 2;
            let mut out = Vec::with_capacity(k_r * k_r);
            for k in 0..k_r {
                out.extend((0..k_r).map(|l| if (k & l).count_ones() % 2 == 0 { 0 } else { half }));
            }
            Ok(out)
        }
    }
}

/// Builds `Q, D` with `Q D` equal to the selection matrix of `row_set` (0-based rows).
pub fn design_receive_step(
    row_set: &[usize],
    n_r: usize,
    k_r: usize,
    shifter: &PhaseShifterSet,
    block: &ReceiveBlock,
) -> Result<ReceiveStepDesign> {
    if k_r < 2 {
        return Err(Error::Infeasible("need at least two receive RF chains".into()));
    }
    if row_set.len() >= k_r {
        return Err(Error::Infeasible(format!(
            "{} rows per step exceed K_r - 1 = {}",
            row_set.len(),
            k_r - 1
        )));
    }
    if k_r > n_r {
        return Err(Error::InvalidParameter(format!(
            "K_r = {k_r} exceeds N_r = {n_r}"
        )));
    }
    let mut used = vec![false; n_r];
    for &r in row_set {
        if r >= n_r || used[r] {
            return Err(Error::InvalidParameter(format!(
                "row set {row_set:?} has an out-of-range or repeated row"
            )));
        }
        used[r] = true;
    }

    let q1_idx = block_indices(block, k_r, shifter)?;
    let scale = 1.0 / (k_r as f64).sqrt();
    let q1 = CMatrix::from_fn(k_r, k_r, |k, l| shifter.value(q1_idx[k * k_r + l]) * scale);
    let w1 = selection_matrix(&(0..row_set.len()).collect::<Vec<_>>(), k_r);
    let d = q1
        .lu()
        .solve(&w1)
        .ok_or_else(|| Error::RankDeficient("receive analog block is singular".into()))?;

    // logical row u < |row_set| lands on row_set[u]; the rest fill the free rows in order
    let mut physical = Vec::with_capacity(n_r);
    physical.extend_from_slice(row_set);
    physical.extend((0..n_r).filter(|r| !used[*r]));
    let mut indices = vec![0usize; n_r * k_r];
    for (u, &p) in physical.iter().enumerate() {
        let src = u.min(k_r - 1);
        indices[p * k_r..(p + 1) * k_r].copy_from_slice(&q1_idx[src * k_r..(src + 1) * k_r]);
    }
    Ok(ReceiveStepDesign {
        q: AnalogMatrix {
            rows: n_r,
            cols: k_r,
            indices,
            scale,
            shifter: *shifter,
        },
        d,
        row_set: row_set.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn unit(n: usize, j: usize) -> CVector {
        let mut e = CVector::zeros(n);
        e[j] = Complex64::new(1.0, 0.0);
        e
    }

    #[test]
    fn one_bit_two_chain_transmit() {
        let s = PhaseShifterSet::new(1).unwrap();
        let d = design_transmit_stage(0, 8, 2, &s, 0, 1).unwrap();
        let unscaled = d.g.unscaled();
        assert_eq!(unscaled[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(unscaled[(0, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(unscaled[(1, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(unscaled[(1, 1)], Complex64::new(-1.0, 0.0));
        // with the 1/sqrt(2) analog scale, b = sqrt(2) * [1/2, 1/2]
        let b = &d.b / Complex64::new(2f64.sqrt(), 0.0);
        assert!((b[0] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((b[1] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn transmit_selects_target() {
        let s = PhaseShifterSet::new(6).unwrap();
        let (n1, n2) = default_transmit_exponents(&s, 16);
        for j in [0usize, 7, 127] {
            let d = design_transmit_stage(j, 128, 16, &s, n1, n2).unwrap();
            let f = d.realized();
            assert!((&f - unit(128, j)).camax() < 1e-12);
        }
    }

    #[test]
    fn target_change_is_row_swap() {
        let s = PhaseShifterSet::new(3).unwrap();
        let a = design_transmit_stage(0, 16, 4, &s, 0, 1).unwrap();
        let b = design_transmit_stage(4, 16, 4, &s, 0, 1).unwrap();
        assert_eq!(a.b, b.b);
        let mut swapped = a.g.clone();
        swapped.swap_rows(0, 4);
        assert_eq!(swapped, b.g);
    }

    #[test]
    fn transmit_errors() {
        let s = PhaseShifterSet::new(2).unwrap();
        assert!(matches!(
            design_transmit_stage(0, 8, 1, &s, 0, 1),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            design_transmit_stage(0, 8, 4, &s, 1, 5),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn receive_identity_block() {
        let s = PhaseShifterSet::new(2).unwrap();
        let block = default_receive_block(&s, 4).unwrap();
        let d = design_receive_step(&[0, 1, 2], 32, 4, &s, &block).unwrap();
        assert!(max_abs_diff(&d.realized(), &selection_matrix(&[0, 1, 2], 32)) < 1e-12);
    }

    #[test]
    fn receive_permuted_rows() {
        let s = PhaseShifterSet::new(6).unwrap();
        let block = default_receive_block(&s, 4).unwrap();
        let rows = [0, 31, 2];
        let d = design_receive_step(&rows, 32, 4, &s, &block).unwrap();
        let qd = d.realized();
        let w = selection_matrix(&rows, 32);
        assert!(max_abs_diff(&qd, &w) < 1e-12);
        assert!((qd[(31, 1)] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn two_chain_receive_reduces_to_unit_vector() {
        let s = PhaseShifterSet::new(1).unwrap();
        let block = default_receive_block(&s, 2).unwrap();
        let d = design_receive_step(&[4], 16, 2, &s, &block).unwrap();
        let col: CVector = d.realized().column(0).into();
        assert!((&col - unit(16, 4)).camax() < 1e-12);
    }

    #[test]
    fn coarse_shifter_uses_hadamard() {
        let s = PhaseShifterSet::new(1).unwrap();
        let block = default_receive_block(&s, 4).unwrap();
        assert_eq!(block, ReceiveBlock::Hadamard);
        let d = design_receive_step(&[9, 3, 5], 12, 4, &s, &block).unwrap();
        assert!(max_abs_diff(&d.realized(), &selection_matrix(&[9, 3, 5], 12)) < 1e-12);
        assert!(default_receive_block(&s, 3).is_err());
    }

    #[test]
    fn receive_errors() {
        let s = PhaseShifterSet::new(3).unwrap();
        let block = ReceiveBlock::Vandermonde(vec![0, 1, 9, 3]);
        assert!(matches!(
            design_receive_step(&[0], 8, 4, &s, &block),
            Err(Error::RankDeficient(_))
        ));
        let ok = default_receive_block(&s, 4).unwrap();
        assert!(matches!(
            design_receive_step(&[0, 1, 2, 3], 8, 4, &s, &ok),
            Err(Error::Infeasible(_))
        ));
    }
}
