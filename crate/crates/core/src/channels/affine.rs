use super::KrausChannel;
use crate::error::{check_dim, Error, Result};
use crate::qstate::{bloch_to_density, density_to_bloch, BlochVector, DensityMatrix};

/// Number of sphere points used to check that a map keeps the Bloch ball.
const SPHERE_SAMPLES: usize = 10_000;

/// A qubit channel in Bloch form: v ↦ linear·v + shift.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineQubitMap {
    linear: [[f64; 3]; 3],
    shift: [f64; 3],
}

impl AffineQubitMap {
    /// Rejects maps that send some sampled unit vector outside the ball.
    pub fn new(linear: [[f64; 3]; 3], shift: [f64; 3]) -> Result<Self> {
        let map = Self { linear, shift };
        let worst = map.max_image_radius();
        if worst > 1.0 + 1e-9 {
            return Err(Error::Parameter(format!(
                "affine map leaves the Bloch ball (image radius {worst})"
            )));
        }
        Ok(map)
    }

    /// Reads the affine action off a qubit-to-qubit channel.
    pub fn from_channel(ch: &KrausChannel) -> Result<Self> {
        check_dim(2, ch.dim_in())?;
        check_dim(2, ch.dim_out())?;
        let image = |v: BlochVector| -> Result<[f64; 3]> {
            let out = ch.apply(&bloch_to_density(v)?)?;
            Ok(density_to_bloch(&out)?.to_array())
        };
        let shift = image(BlochVector::ORIGIN)?;
        let mut linear = [[0.0; 3]; 3];
        for j in 0..3 {
            let mut e = [0.0; 3];
            e[j] = 1.0;
            let col = image(BlochVector::from_array(e))?;
            for i in 0..3 {
                linear[i][j] = col[i] - shift[i];
            }
        }
        Ok(Self { linear, shift })
    }

    pub fn linear(&self) -> [[f64; 3]; 3] {
        self.linear
    }

    pub fn shift(&self) -> [f64; 3] {
        self.shift
    }

    pub fn apply(&self, v: BlochVector) -> BlochVector {
        let v = v.to_array();
        let mut out = self.shift;
        for (i, row) in self.linear.iter().enumerate() {
            out[i] += row.iter().zip(v.iter()).map(|(a, b)| a * b).sum::<f64>();
        }
        BlochVector::from_array(out)
    }

    pub fn apply_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        bloch_to_density(self.apply(density_to_bloch(rho)?))
    }

    /// Largest image radius over a Fibonacci lattice on the unit sphere.
    pub fn max_image_radius(&self) -> f64 {
        fibonacci_sphere(SPHERE_SAMPLES)
            .map(|v| self.apply(v).radius())
            .fold(0.0, f64::max)
    }
}

fn fibonacci_sphere(n: usize) -> impl Iterator<Item = BlochVector> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n).map(move |i| {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
        let r = (1.0 - z * z).sqrt();
        let phi = golden * i as f64;
        BlochVector::new(r * phi.cos(), r * phi.sin(), z)
    })
}
