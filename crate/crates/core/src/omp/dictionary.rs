use serde::{Deserialize, Serialize};

use crate::channel::{isqrt, linear_steering, planar_steering, ArrayGeometry, ArrayKind};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// One dictionary atom location. ULA points use `y_freq = sin(phi)` only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub y_freq: f64,
    pub z_freq: f64,
}

impl GridPoint {
    /// Whether the direction cosines correspond to a physical direction.
    pub fn visible(&self) -> bool {
        self.y_freq * self.y_freq + self.z_freq * self.z_freq <= 1.0 + 1e-12
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    pub a_r: CMatrix,
    pub a_t: CMatrix,
    pub grid_r: Vec<GridPoint>,
    pub grid_t: Vec<GridPoint>,
}

/// `G` points uniform over `[-1, 1)`.
fn frequencies(g: usize) -> Vec<f64> {
    (0..g).map(|k| -1.0 + 2.0 * k as f64 / g as f64).collect()
}

fn side_dictionary(geom: &ArrayGeometry, g: usize) -> Result<(CMatrix, Vec<GridPoint>)> {
    geom.validate()?;
    if g < geom.num_antennas {
        return Err(Error::Config(format!(
            "{g} grid points cannot cover {} antennas",
            geom.num_antennas
        )));
    }
    match geom.kind {
        ArrayKind::Ula => {
            let grid: Vec<GridPoint> = frequencies(g)
                .into_iter()
                .map(|s| GridPoint { y_freq: s, z_freq: 0.0 })
                .collect();
            let mut a = CMatrix::zeros(geom.num_antennas, g);
            for (k, p) in grid.iter().enumerate() {
                a.set_column(k, &linear_steering(geom.num_antennas, geom.element_spacing, p.y_freq));
            }
            Ok((a, grid))
        }
        ArrayKind::Uspa => {
            let g_side = isqrt(g);
            if g_side * g_side != g {
                return Err(Error::Config(format!(
                    "planar grid size {g} must be a perfect square"
                )));
            }
            let f = frequencies(g_side);
            let side = geom.side();
            let mut grid = Vec::with_capacity(g);
            let mut a = CMatrix::zeros(geom.num_antennas, g);
            for &y in &f {
                for &z in &f {
                    a.set_column(grid.len(), &planar_steering(side, geom.element_spacing, y, z));
                    grid.push(GridPoint { y_freq: y, z_freq: z });
                }
            }
            Ok((a, grid))
        }
    }
}

/// Array-response dictionaries on grids uniform in spatial frequency.
pub fn build_dictionary(tx: &ArrayGeometry, rx: &ArrayGeometry, g_t: usize, g_r: usize) -> Result<Dictionary> {
    let (a_t, grid_t) = side_dictionary(tx, g_t)?;
    let (a_r, grid_r) = side_dictionary(rx, g_r)?;
    Ok(Dictionary { a_r, a_t, grid_r, grid_t })
}
