use crate::error::{Error, Result};
use crate::linalg::{singular_values, CMatrix};

// Guards against cumulative sums landing a few ulps under an exact threshold.
const SLACK: f64 = 1e-12;

/// Smallest `r` whose leading `r` singular values hold at least `p_e` of the energy.
pub fn energy_capture_rank(h: &CMatrix, p_e: f64) -> Result<usize> {
    if !(p_e > 0.0 && p_e <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "energy fraction must lie in (0, 1], got {p_e}"
        )));
    }
    let s = singular_values(h);
    let total: f64 = s.iter().map(|x| x * x).sum();
    if !(total > 0.0) {
        return Err(Error::UndefinedRank);
    }
    let mut acc = 0.0;
    for (r, x) in s.iter().enumerate() {
        acc += x * x;
        if acc / total >= p_e - SLACK {
            return Ok(r + 1);
        }
    }
    Ok(s.len())
}
