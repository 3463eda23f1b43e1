use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sampled::SampledMatrix;
use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian_matrix, frobenius_sq, sorted_svd, CMatrix, CVector};

/// Extra subspace steps allowed beyond `q` while the top Ritz value settles.
const MAX_EXTRA_STEPS: usize = 100;
const RITZ_TOL: f64 = 1e-13;

/// Linear operator seen through products with dense blocks.
pub trait BlockOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &CMatrix) -> CMatrix;
    fn apply_adjoint(&self, y: &CMatrix) -> CMatrix;
    fn to_dense(&self) -> CMatrix;
    fn norm_sq(&self) -> f64;
}

impl BlockOperator for CMatrix {
    fn nrows(&self) -> usize {
        self.nrows()
    }
    fn ncols(&self) -> usize {
        self.ncols()
    }
    fn apply(&self, x: &CMatrix) -> CMatrix {
        self * x
    }
    fn apply_adjoint(&self, y: &CMatrix) -> CMatrix {
        self.adjoint() * y
    }
    fn to_dense(&self) -> CMatrix {
        self.clone()
    }
    fn norm_sq(&self) -> f64 {
        frobenius_sq(self)
    }
}

impl BlockOperator for SampledMatrix {
    fn nrows(&self) -> usize {
        self.n_r
    }
    fn ncols(&self) -> usize {
        self.n_t
    }
    fn apply(&self, x: &CMatrix) -> CMatrix {
        self.mul(x)
    }
    fn apply_adjoint(&self, y: &CMatrix) -> CMatrix {
        self.mul_adjoint(y)
    }
    fn to_dense(&self) -> CMatrix {
        SampledMatrix::to_dense(self)
    }
    fn norm_sq(&self) -> f64 {
        SampledMatrix::norm_sq(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularPair {
    pub u: CVector,
    pub sigma: f64,
    pub v: CVector,
}

fn orthonormal_basis(y: CMatrix) -> CMatrix {
    y.qr().q()
}

fn top_of_small(q: &CMatrix, b: &CMatrix) -> (CVector, f64, CVector) {
    let svd = sorted_svd(b);
    let u = q * svd.u.column(0);
    (u, svd.singular_values[0], svd.v.column(0).into())
}

/// Top singular triplet by randomized subspace iteration with `q` power steps and
/// `g` oversampling columns. Iteration continues past `q` until the top Ritz value
/// stops moving; small operators use a dense SVD instead.
pub fn top_singular_pair_op<R: Rng + ?Sized>(
    op: &dyn BlockOperator,
    q: usize,
    g: usize,
    rng: &mut R,
) -> Result<SingularPair> {
    if !(op.norm_sq() > 0.0) {
        return Err(Error::DegenerateInput("top singular pair of a zero matrix".into()));
    }
    let (rows, cols) = (op.nrows(), op.ncols());
    let width = g + 1;

    let (mut u, sigma, v) = if rows.min(cols) <= 2 * width {
        let svd = sorted_svd(&op.to_dense());
        (
            svd.u.column(0).into_owned(),
            svd.singular_values[0],
            svd.v.column(0).into_owned(),
        )
    } else {
        let omega = complex_gaussian_matrix(rng, cols, width, 1.0);
        let mut basis = orthonormal_basis(op.apply(&omega));
        let mut last = f64::NAN;
        let mut best = None;
        for step in 0..=(q + MAX_EXTRA_STEPS) {
            if step > 0 {
                let z = orthonormal_basis(op.apply_adjoint(&basis));
                basis = orthonormal_basis(op.apply(&z));
            }
            if step < q {
                continue;
            }
            let b = op.apply_adjoint(&basis).adjoint();
            let (u, s, v) = top_of_small(&basis, &b);
            let settled = (s - last).abs() <= RITZ_TOL * s;
            last = s;
            best = Some((u, s, v));
            if settled {
                break;
            }
        }
        best.expect("at least one Ritz estimate")
    };

    // align phases so u^H M v is real and positive
    let mv = op.apply(&CMatrix::from_column_slice(cols, 1, v.as_slice()));
    let c: Complex64 = u.iter().zip(mv.iter()).map(|(a, b)| a.conj() * b).sum();
    if c.norm() > 0.0 {
        u *= c / c.norm();
    }
    let un = u.norm();
    let vn = v.norm();
    Ok(SingularPair {
        u: u / Complex64::new(un, 0.0),
        sigma,
        v: v / Complex64::new(vn, 0.0),
    })
}

/// Top singular triplet of a dense matrix.
pub fn top_singular_pair(m: &CMatrix, q: usize, g: usize, seed: u64) -> Result<SingularPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    top_singular_pair_op(m, q, g, &mut rng)
}
