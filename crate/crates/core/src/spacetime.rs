//! Discrete space-time scattering model.
//!
//! A uniform linear array of M antennas transmits over N time slots. The
//! steering vector collapses each slot's M-vector to the scalar incident
//! sample at the target, the banded Toeplitz response matrix convolves the
//! incident samples with the multilayer taps, and the resulting quadratic
//! form maps a transmit covariance to backscattered signal power.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::hermitian_part;
use crate::multilayer::MultilayerResponse;

/// Uniform linear array description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    /// Number of antennas M.
    pub num_antennas: usize,
    /// Element spacing over wavelength D/λ.
    pub spacing_over_wavelength: f64,
}

impl ArrayGeometry {
    /// Half-wavelength spaced array of `num_antennas` elements.
    pub fn half_wavelength(num_antennas: usize) -> Self {
        Self {
            num_antennas,
            spacing_over_wavelength: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_antennas == 0 {
            return Err(Error::InvalidMatrix(
                "array must have at least one antenna".to_string(),
            ));
        }
        if !(self.spacing_over_wavelength > 0.0) || !self.spacing_over_wavelength.is_finite() {
            return Err(Error::InvalidMatrix(
                "antenna spacing over wavelength must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// Array phase profile toward one observation angle. The first antenna is
/// the phase reference, so the first entry is always 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    entries: DVector<Complex64>,
}

impl SteeringVector {
    pub fn entries(&self) -> &DVector<Complex64> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Banded lower-triangular Toeplitz matrix that convolves N incident
/// samples with the L multilayer taps.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    matrix: DMatrix<Complex64>,
    horizon: usize,
}

impl ResponseMatrix {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// The Gram matrix of the response, an N×N Hermitian PSD matrix whose
    /// largest eigenvalue controls the best achievable backscatter gain.
    pub fn gram(&self) -> DMatrix<Complex64> {
        hermitian_part(&(self.matrix.adjoint() * &self.matrix))
    }
}

/// Hermitian PSD quadratic form: Re Tr(matrix · C) is the backscattered
/// (or, for clutter forms, incident) power obtained with covariance C.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    matrix: DMatrix<Complex64>,
    angle_deg: f64,
}

impl QuadraticForm {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn angle_deg(&self) -> f64 {
        self.angle_deg
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Power achieved by covariance `c`: Re Tr(matrix · c).
    pub fn power(&self, c: &DMatrix<Complex64>) -> f64 {
        crate::linalg::trace_product(&self.matrix, c)
    }
}

/// Steering vector of the array toward `theta_deg` degrees:
/// entry m is exp(−j·2π·m·(D/λ)·sin θ).
pub fn steering_vector(geometry: &ArrayGeometry, theta_deg: f64) -> Result<SteeringVector> {
    geometry.validate()?;
    if !(-90.0..=90.0).contains(&theta_deg) || !theta_deg.is_finite() {
        return Err(Error::AngleOutOfRange(theta_deg));
    }
    let phase_step =
        -2.0 * std::f64::consts::PI * geometry.spacing_over_wavelength * theta_deg.to_radians().sin();
    let entries = DVector::from_fn(geometry.num_antennas, |m, _| {
        Complex64::from_polar(1.0, phase_step * m as f64)
    });
    Ok(SteeringVector { entries })
}

/// Block steering operator I_N ⊗ aᴴ, an N×MN matrix: row n applies aᴴ to
/// the M-antenna block of time slot n.
pub fn block_steering(sv: &SteeringVector, horizon: usize) -> DMatrix<Complex64> {
    let m = sv.len();
    let mut a = DMatrix::zeros(horizon, horizon * m);
    for n in 0..horizon {
        for k in 0..m {
            a[(n, n * m + k)] = sv.entries[k].conj();
        }
    }
    a
}

/// Builds the N×N banded Toeplitz convolution matrix of the multilayer
/// taps. Requires the horizon to fit the band, N ≥ L.
pub fn response_matrix(response: &MultilayerResponse, horizon: usize) -> Result<ResponseMatrix> {
    let l = response.num_layers();
    if horizon < l || l == 0 {
        return Err(Error::HorizonTooShort { horizon, layers: l });
    }
    let mut z = DMatrix::zeros(horizon, horizon);
    for i in 0..horizon {
        for j in 0..=i {
            let tap = i - j;
            if tap < l {
                z[(i, j)] = response.coefficients[tap];
            }
        }
    }
    Ok(ResponseMatrix { matrix: z, horizon })
}

/// Backscatter quadratic form Aᴴ ZᴴZ A at the given angle, explicitly
/// Hermitian-symmetrized so downstream PSD machinery sees exact symmetry.
pub fn quadratic_form(
    rm: &ResponseMatrix,
    block: &DMatrix<Complex64>,
    theta_deg: f64,
) -> QuadraticForm {
    debug_assert_eq!(block.nrows(), rm.horizon);
    let za = rm.matrix() * block;
    QuadraticForm {
        matrix: hermitian_part(&(za.adjoint() * za)),
        angle_deg: theta_deg,
    }
}

/// Incident-power form Aᴴ A at a clutter angle. Clutter suppression bounds
/// the power arriving at the clutter, so no material response enters.
pub fn clutter_form(block: &DMatrix<Complex64>, phi_deg: f64) -> QuadraticForm {
    QuadraticForm {
        matrix: hermitian_part(&(block.adjoint() * block)),
        angle_deg: phi_deg,
    }
}
