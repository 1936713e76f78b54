use super::DensityMatrix;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{c, CMatrix};

const RADIUS_TOL: f64 = 1e-12;

/// Bloch-ball coordinates of a qubit state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const ORIGIN: Self = Self {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn radius(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }
}

/// ½(I + x X + y Y + z Z).
pub fn bloch_to_density(v: BlochVector) -> Result<DensityMatrix> {
    let r = v.radius();
    if !(r <= 1.0 + RADIUS_TOL) {
        return Err(Error::InvalidState(format!(
            "Bloch radius {r} lies outside the unit ball"
        )));
    }
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            c(0.5 * (1.0 + v.z), 0.0),
            c(0.5 * v.x, -0.5 * v.y),
            c(0.5 * v.x, 0.5 * v.y),
            c(0.5 * (1.0 - v.z), 0.0),
        ],
    );
    Ok(DensityMatrix::from_trusted(m))
}

/// Inverse of [`bloch_to_density`]: x = 2 Re ρ₁₀, y = 2 Im ρ₁₀, z = ρ₀₀ − ρ₁₁.
pub fn density_to_bloch(rho: &DensityMatrix) -> Result<BlochVector> {
    check_dim(2, rho.dim())?;
    let m = rho.matrix();
    Ok(BlochVector::new(
        2.0 * m[(1, 0)].re,
        2.0 * m[(1, 0)].im,
        (m[(0, 0)] - m[(1, 1)]).re,
    ))
}
