use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron, CVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayKind {
    /// Uniform linear array along the y axis.
    Ula,
    /// Uniform square planar array in the yz plane.
    Uspa,
}

impl ArrayKind {
    pub fn name(self) -> &'static str {
        match self {
            ArrayKind::Ula => "ULA",
            ArrayKind::Uspa => "USPA",
        }
    }

    pub fn axis(self) -> &'static str {
        match self {
            ArrayKind::Ula => "y",
            ArrayKind::Uspa => "yz",
        }
    }
}

/// Array layout. `element_spacing` is measured in carrier wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub kind: ArrayKind,
    pub num_antennas: usize,
    pub element_spacing: f64,
}

impl ArrayGeometry {
    pub fn new(kind: ArrayKind, num_antennas: usize, element_spacing: f64) -> Result<Self> {
        let g = Self {
            kind,
            num_antennas,
            element_spacing,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn ula(num_antennas: usize, element_spacing: f64) -> Result<Self> {
        Self::new(ArrayKind::Ula, num_antennas, element_spacing)
    }

    pub fn uspa(num_antennas: usize, element_spacing: f64) -> Result<Self> {
        Self::new(ArrayKind::Uspa, num_antennas, element_spacing)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_antennas == 0 {
            return Err(Error::InvalidGeometry("array needs at least one antenna".into()));
        }
        if !(self.element_spacing > 0.0) || !self.element_spacing.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "element spacing must be positive, got {}",
                self.element_spacing
            )));
        }
        if self.kind == ArrayKind::Uspa {
            let side = isqrt(self.num_antennas);
            if side * side != self.num_antennas {
                return Err(Error::InvalidGeometry(format!(
                    "USPA needs a perfect-square antenna count, got {}",
                    self.num_antennas
                )));
            }
        }
        Ok(())
    }

    /// Elements per side: `N` for a ULA, `sqrt(N)` for a USPA.
    pub fn side(&self) -> usize {
        match self.kind {
            ArrayKind::Ula => self.num_antennas,
            ArrayKind::Uspa => isqrt(self.num_antennas),
        }
    }

    /// Response for any geometry; the elevation is ignored by a ULA.
    pub fn response(&self, azimuth: f64, elevation: f64) -> CVector {
        match self.kind {
            ArrayKind::Ula => linear_steering(self.num_antennas, self.element_spacing, azimuth.sin()),
            ArrayKind::Uspa => planar_steering(
                self.side(),
                self.element_spacing,
                azimuth.sin() * elevation.sin(),
                elevation.cos(),
            ),
        }
    }
}

pub(crate) fn isqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Unit-norm ULA steering vector for spatial frequency `sine` (= sin of the angle).
pub(crate) fn linear_steering(n: usize, spacing: f64, sine: f64) -> CVector {
    let scale = 1.0 / (n as f64).sqrt();
    let step = 2.0 * PI * spacing * sine;
    CVector::from_iterator(n, (0..n).map(|k| Complex64::from_polar(scale, step * k as f64)))
}

/// Per-axis factor with the `N^{-1/4}` normalization; `side` elements.
fn planar_axis(side: usize, spacing: f64, freq: f64) -> CVector {
    let scale = 1.0 / (side as f64).sqrt();
    let step = 2.0 * PI * spacing * freq;
    CVector::from_iterator(
        side,
        (0..side).map(|k| Complex64::from_polar(scale, step * k as f64)),
    )
}

/// USPA response from its two direction cosines: `y_freq = sin(phi) sin(theta)`,
/// `z_freq = cos(theta)`. Index layout is `y_index * side + z_index`.
pub(crate) fn planar_steering(side: usize, spacing: f64, y_freq: f64, z_freq: f64) -> CVector {
    kron(
        &planar_axis(side, spacing, y_freq),
        &planar_axis(side, spacing, z_freq),
    )
}

pub fn ula_response(phi: f64, geometry: &ArrayGeometry) -> Result<CVector> {
    if geometry.kind != ArrayKind::Ula {
        return Err(Error::GeometryMismatch {
            expected: ArrayKind::Ula.name(),
            actual: geometry.kind.name(),
        });
    }
    Ok(linear_steering(
        geometry.num_antennas,
        geometry.element_spacing,
        phi.sin(),
    ))
}

pub fn uspa_response(phi: f64, theta: f64, geometry: &ArrayGeometry) -> Result<CVector> {
    if geometry.kind != ArrayKind::Uspa {
        return Err(Error::GeometryMismatch {
            expected: ArrayKind::Uspa.name(),
            actual: geometry.kind.name(),
        });
    }
    Ok(planar_steering(
        geometry.side(),
        geometry.element_spacing,
        phi.sin() * theta.sin(),
        theta.cos(),
    ))
}

/// The y-axis factor of a USPA response, exposed for cross-checks.
pub fn uspa_y_factor(phi: f64, theta: f64, geometry: &ArrayGeometry) -> CVector {
    planar_axis(geometry.side(), geometry.element_spacing, phi.sin() * theta.sin())
}

/// The z-axis factor of a USPA response.
pub fn uspa_z_factor(theta: f64, geometry: &ArrayGeometry) -> CVector {
    planar_axis(geometry.side(), geometry.element_spacing, theta.cos())
}
