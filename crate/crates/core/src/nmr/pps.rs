use crate::error::{Error, Result};
use crate::quantum::{c, CMatrix, DensityMatrix};

/// `ε|000⟩⟨000| + (1−ε)/8·I`.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoPureState {
    epsilon: f64,
    rho: DensityMatrix,
}

pub const DEFAULT_EPSILON: f64 = 1e-5;

impl PseudoPureState {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn into_rho(self) -> DensityMatrix {
        self.rho
    }
}

pub fn pseudo_pure(epsilon: f64) -> Result<PseudoPureState> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    let mut m = CMatrix::identity(8, 8).scale((1.0 - epsilon) / 8.0);
    m[(0, 0)] += c(epsilon, 0.0);
    Ok(PseudoPureState {
        epsilon,
        rho: DensityMatrix::new(3, m)?,
    })
}
