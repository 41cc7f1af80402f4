//! Electromagnetic response of an L-layer material.
//!
//! Each layer is characterized by its magnetic permeability, dielectric
//! permittivity, electrical conductivity, an attenuation rate and a physical
//! depth. The stack as a whole produces one composite reflection coefficient
//! per boundary: the boundary reflection scaled by the accumulated power
//! attenuation of all shallower layers. Under the equal travel-time
//! assumption the stack acts as a finite impulse response of length L with
//! those coefficients as taps.
//!
//! Multiple internal reflections between boundaries are ignored.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Free-space wave impedance in ohms, the default ambient medium.
pub const FREE_SPACE_IMPEDANCE: f64 = 376.730_313_668;

/// Below this value of `rate * depth` the attenuation integral is replaced
/// by its analytic limit `depth` to avoid 0/0.
const ATTENUATION_LIMIT_THRESHOLD: f64 = 1e-12;

/// One stratum of the target material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Magnetic permeability (H/m).
    #[serde(rename = "mu")]
    pub permeability: f64,
    /// Dielectric permittivity (F/m).
    #[serde(rename = "epsilon")]
    pub permittivity: f64,
    /// Electrical conductivity (S/m).
    #[serde(rename = "sigma")]
    pub conductivity: f64,
    /// Signal attenuation rate (1/m); carried as a primitive, never derived
    /// from the other constants.
    #[serde(rename = "beta")]
    pub attenuation_rate: f64,
    /// Physical thickness of the layer (m).
    #[serde(rename = "depth")]
    pub depth: f64,
}

impl Layer {
    /// Checks the material invariants, reporting `index` on failure.
    pub fn validate(&self, index: usize) -> Result<()> {
        let fail = |reason: &str| Error::InvalidLayer {
            index,
            reason: reason.to_string(),
        };
        if !(self.permeability > 0.0) || !self.permeability.is_finite() {
            return Err(fail("permeability must be positive and finite"));
        }
        if !(self.permittivity > 0.0) || !self.permittivity.is_finite() {
            return Err(fail("permittivity must be positive and finite"));
        }
        if !(self.conductivity >= 0.0) || !self.conductivity.is_finite() {
            return Err(fail("conductivity must be nonnegative and finite"));
        }
        if !(self.attenuation_rate >= 0.0) || !self.attenuation_rate.is_finite() {
            return Err(fail("attenuation rate must be nonnegative and finite"));
        }
        if !(self.depth > 0.0) || !self.depth.is_finite() {
            return Err(fail("depth must be positive and finite"));
        }
        Ok(())
    }
}

/// An ordered stack of layers plus the medium in front of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialStack {
    /// Layers ordered from the surface inward; at least one.
    pub layers: Vec<Layer>,
    /// Complex impedance of the medium in front of the first layer (Ω).
    pub ambient_impedance: Complex64,
    /// Angular frequency of the incident signal (rad/s) used when
    /// evaluating layer impedances.
    pub angular_frequency: f64,
}

impl MaterialStack {
    /// Builds a stack in free space at the given angular frequency.
    pub fn in_free_space(layers: Vec<Layer>, angular_frequency: f64) -> Result<Self> {
        Self::new(
            layers,
            Complex64::new(FREE_SPACE_IMPEDANCE, 0.0),
            angular_frequency,
        )
    }

    pub fn new(
        layers: Vec<Layer>,
        ambient_impedance: Complex64,
        angular_frequency: f64,
    ) -> Result<Self> {
        let stack = Self {
            layers,
            ambient_impedance,
            angular_frequency,
        };
        stack.validate()?;
        Ok(stack)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidLayer {
                index: 0,
                reason: "stack must contain at least one layer".to_string(),
            });
        }
        if !(self.angular_frequency > 0.0) || !self.angular_frequency.is_finite() {
            return Err(Error::InvalidLayer {
                index: 0,
                reason: "angular frequency must be positive and finite".to_string(),
            });
        }
        for (i, layer) in self.layers.iter().enumerate() {
            layer.validate(i)?;
        }
        Ok(())
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }
}

/// Composite reflection coefficients of a stack: tap `i` combines the
/// boundary reflection at depth `i` with the accumulated power attenuation
/// of all shallower layers. Tap 0 is the bare surface reflection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultilayerResponse {
    /// One complex coefficient per layer boundary, surface first.
    pub coefficients: Vec<Complex64>,
    /// Sample period T (s); one layer of depth corresponds to one sample of
    /// delay under the equal travel-time assumption.
    pub sample_period: f64,
}

impl MultilayerResponse {
    pub fn num_layers(&self) -> usize {
        self.coefficients.len()
    }

    pub fn with_sample_period(mut self, sample_period: f64) -> Self {
        self.sample_period = sample_period;
        self
    }
}

/// Complex impedance of a layer at angular frequency `angular_frequency`:
/// sqrt(mu/epsilon) · (1 − j·sigma·w/epsilon)^(−1/2), principal branches.
pub fn layer_impedance(layer: &Layer, angular_frequency: f64) -> Result<Complex64> {
    layer_impedance_indexed(layer, angular_frequency, 0)
}

fn layer_impedance_indexed(
    layer: &Layer,
    angular_frequency: f64,
    index: usize,
) -> Result<Complex64> {
    let ratio = (layer.permeability / layer.permittivity).sqrt();
    let loss = layer.conductivity * angular_frequency / layer.permittivity;
    let eta = Complex64::new(1.0, -loss).powf(-0.5) * ratio;
    if eta.re.is_finite() && eta.im.is_finite() {
        Ok(eta)
    } else {
        Err(Error::NonFiniteImpedance { index })
    }
}

/// Reflection coefficient at the boundary between media of impedance
/// `eta_prev` (shallower) and `eta_cur` (deeper):
/// (eta_cur − eta_prev) / (eta_cur + eta_prev).
pub fn reflection_coefficient(eta_prev: Complex64, eta_cur: Complex64) -> Result<Complex64> {
    reflection_coefficient_indexed(eta_prev, eta_cur, 0)
}

fn reflection_coefficient_indexed(
    eta_prev: Complex64,
    eta_cur: Complex64,
    index: usize,
) -> Result<Complex64> {
    let denom = eta_cur + eta_prev;
    if denom.norm() == 0.0 {
        return Err(Error::DegenerateBoundary { index });
    }
    Ok((eta_cur - eta_prev) / denom)
}

/// Integrated power attenuation of one layer:
/// (1 − exp(−rate·depth)) / rate, with the analytic limit `depth` as
/// rate·depth → 0.
///
/// The value is not clamped; when it exceeds 1 a diagnostic warning is
/// logged and the formula value is returned unchanged.
pub fn layer_attenuation(layer: &Layer) -> f64 {
    let rate = layer.attenuation_rate;
    let depth = layer.depth;
    let product = rate * depth;
    let alpha = if product < ATTENUATION_LIMIT_THRESHOLD {
        depth
    } else {
        // exp_m1 avoids the 1 - exp(-x) cancellation for small x.
        -(-product).exp_m1() / rate
    };
    if alpha > 1.0 {
        log::warn!(
            "layer attenuation alpha = {alpha:.6} exceeds 1 (rate = {rate}, depth = {depth})"
        );
    }
    alpha
}

/// Composite reflection coefficients of a stack: coefficient `i` (0-based)
/// is the boundary reflection between layers `i-1` and `i` times the
/// product of the attenuations of layers `0..i`. The first coefficient is
/// the bare surface reflection against the ambient medium.
pub fn transfer_coefficients(stack: &MaterialStack) -> Result<MultilayerResponse> {
    stack.validate()?;
    let w = stack.angular_frequency;
    let mut coefficients = Vec::with_capacity(stack.layers.len());
    let mut eta_prev = stack.ambient_impedance;
    let mut attenuation_product = 1.0;
    for (i, layer) in stack.layers.iter().enumerate() {
        let eta = layer_impedance_indexed(layer, w, i)?;
        let rho = reflection_coefficient_indexed(eta_prev, eta, i)?;
        coefficients.push(rho * attenuation_product);
        attenuation_product *= layer_attenuation(layer);
        eta_prev = eta;
    }
    Ok(MultilayerResponse {
        coefficients,
        sample_period: 1.0,
    })
}

/// Rescales every coefficient by the magnitude of the surface coefficient,
/// leaving the surface tap with unit magnitude and all phases intact.
pub fn normalize_to_surface(response: &MultilayerResponse) -> Result<MultilayerResponse> {
    let surface = response
        .coefficients
        .first()
        .ok_or(Error::ZeroSurfaceReflection)?
        .norm();
    if surface < f64::MIN_POSITIVE {
        return Err(Error::ZeroSurfaceReflection);
    }
    Ok(MultilayerResponse {
        coefficients: response
            .coefficients
            .iter()
            .map(|z| z / surface)
            .collect(),
        sample_period: response.sample_period,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dielectric(mu: f64, eps: f64) -> Layer {
        Layer {
            permeability: mu,
            permittivity: eps,
            conductivity: 0.0,
            attenuation_rate: 1.0,
            depth: 0.1,
        }
    }

    #[test]
    fn impedance_ideal_dielectric() {
        let eta = layer_impedance(&dielectric(4.0, 1.0), 123.0).unwrap();
        assert_relative_eq!(eta.re, 2.0, epsilon = 1e-14);
        assert_relative_eq!(eta.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn impedance_unit_loss_tangent() {
        // mu = eps = 1, sigma*w/eps = 1: eta = (1 - j)^(-1/2)
        //   = 2^(-1/4) * exp(j*pi/8) = 0.77688 + 0.32179j.
        let layer = Layer {
            conductivity: 1.0,
            ..dielectric(1.0, 1.0)
        };
        let eta = layer_impedance(&layer, 1.0).unwrap();
        let expected_re = 2.0_f64.powf(-0.25) * (std::f64::consts::PI / 8.0).cos();
        let expected_im = 2.0_f64.powf(-0.25) * (std::f64::consts::PI / 8.0).sin();
        assert_relative_eq!(eta.re, expected_re, epsilon = 1e-12);
        assert_relative_eq!(eta.im, expected_im, epsilon = 1e-12);
        // Hand-evaluated values from the principal branch.
        assert_relative_eq!(eta.re, 0.7769, epsilon = 1e-4);
        assert_relative_eq!(eta.im, 0.3218, epsilon = 1e-4);
    }

    #[test]
    fn impedance_matched_constants_is_unity() {
        for v in [0.5, 1.0, 7.25] {
            let eta = layer_impedance(&dielectric(v, v), 10.0).unwrap();
            assert_relative_eq!(eta.re, 1.0, epsilon = 1e-14);
            assert_relative_eq!(eta.im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn reflection_matched_impedance_is_zero() {
        let eta = Complex64::new(2.0, -0.3);
        let rho = reflection_coefficient(eta, eta).unwrap();
        assert!(rho.norm() < 1e-15);
    }

    #[test]
    fn reflection_one_to_three() {
        let rho =
            reflection_coefficient(Complex64::new(1.0, 0.0), Complex64::new(3.0, 0.0)).unwrap();
        assert_relative_eq!(rho.re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(rho.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn reflection_short_circuit_limit() {
        let rho =
            reflection_coefficient(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        assert_relative_eq!(rho.re, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn reflection_degenerate_pair_errors() {
        let err = reflection_coefficient(Complex64::new(1.0, 2.0), Complex64::new(-1.0, -2.0));
        assert!(matches!(err, Err(Error::DegenerateBoundary { .. })));
    }

    #[test]
    fn reflection_bounded_for_physical_impedances() {
        // Impedances produced by the principal-branch formula have phases
        // within [0, 45) degrees, which keeps every boundary reflection
        // inside the unit disk.
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(42);
        let mut etas: Vec<Complex64> = (0..24)
            .map(|_| {
                let layer = Layer {
                    permeability: rng.gen_range(0.05..20.0),
                    permittivity: rng.gen_range(0.05..20.0),
                    conductivity: rng.gen_range(0.0..50.0),
                    attenuation_rate: 1.0,
                    depth: 1.0,
                };
                layer_impedance(&layer, rng.gen_range(0.01..100.0)).unwrap()
            })
            .collect();
        etas.push(Complex64::new(FREE_SPACE_IMPEDANCE, 0.0));
        for &a in &etas {
            assert!(a.re > 0.0);
            for &b in &etas {
                let rho = reflection_coefficient(a, b).unwrap();
                assert!(rho.norm() <= 1.0 + 1e-12, "rho = {rho} for {a}, {b}");
            }
        }
    }

    #[test]
    fn attenuation_small_rate_limit() {
        let layer = Layer {
            attenuation_rate: 0.0,
            depth: 0.3,
            ..dielectric(1.0, 1.0)
        };
        assert_relative_eq!(layer_attenuation(&layer), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn attenuation_full_absorption_limit() {
        let layer = Layer {
            attenuation_rate: 1.0,
            depth: 1e6,
            ..dielectric(1.0, 1.0)
        };
        assert_relative_eq!(layer_attenuation(&layer), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn attenuation_direct_formula() {
        let layer = Layer {
            attenuation_rate: 2.0,
            depth: 1.0,
            ..dielectric(1.0, 1.0)
        };
        let expected = (1.0 - (-2.0_f64).exp()) / 2.0;
        assert_relative_eq!(layer_attenuation(&layer), expected, epsilon = 1e-15);
        assert_relative_eq!(layer_attenuation(&layer), 0.43233, epsilon = 1e-5);
    }

    #[test]
    fn attenuation_taylor_bound_near_zero_rate() {
        // |alpha - depth| <= depth^2 * rate / 2 for rate*depth <= 1e-6.
        for &(rate, depth) in &[(1e-6, 0.9), (3e-7, 2.0), (1e-9, 0.5), (2e-6, 0.4)] {
            let layer = Layer {
                attenuation_rate: rate,
                depth,
                ..dielectric(1.0, 1.0)
            };
            let alpha = layer_attenuation(&layer);
            assert!(
                (alpha - depth).abs() <= depth * depth * rate / 2.0 + 1e-15 * depth,
                "rate={rate} depth={depth} alpha={alpha}"
            );
        }
    }

    fn stack_from(layers: Vec<Layer>, ambient: f64) -> MaterialStack {
        MaterialStack::new(layers, Complex64::new(ambient, 0.0), 1.0).unwrap()
    }

    #[test]
    fn transfer_single_layer_is_surface_reflection() {
        let stack = stack_from(vec![dielectric(4.0, 1.0)], 1.0);
        let resp = transfer_coefficients(&stack).unwrap();
        assert_eq!(resp.num_layers(), 1);
        // rho_1 = (2 - 1) / (2 + 1) = 1/3.
        assert_relative_eq!(resp.coefficients[0].re, 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn transfer_two_layers_direct_product() {
        // Constructed so rho_1 = 0.2, alpha_1 = 0.5, rho_2 = 0.4:
        //   eta_0 = 1, eta_1 = 1.5 (mu = 2.25), eta_2 = 3.5 (mu = 12.25),
        //   rate = 1, depth = ln 2 gives alpha = 1 - exp(-ln 2) = 0.5.
        let l1 = Layer {
            permeability: 2.25,
            permittivity: 1.0,
            conductivity: 0.0,
            attenuation_rate: 1.0,
            depth: std::f64::consts::LN_2,
        };
        let l2 = Layer {
            permeability: 12.25,
            ..l1
        };
        let stack = stack_from(vec![l1, l2], 1.0);
        let resp = transfer_coefficients(&stack).unwrap();
        assert_relative_eq!(resp.coefficients[0].re, 0.2, epsilon = 1e-14);
        // zeta_2 = alpha_1 * rho_2 = 0.5 * 0.4 = 0.2.
        assert_relative_eq!(resp.coefficients[1].re, 0.2, epsilon = 1e-14);
    }

    #[test]
    fn transfer_lossless_equal_ratio_layers() {
        // alpha_i = 1 (rate -> 0, depth = 1) and impedances in geometric
        // progression with ratio (1 + r)/(1 - r) give equal rho at every
        // boundary, so all coefficients equal rho.
        let r = 0.25;
        let gain = (1.0 + r) / (1.0 - r);
        let mut layers = Vec::new();
        let mut eta = 1.0;
        for _ in 0..3 {
            eta *= gain;
            layers.push(Layer {
                permeability: eta * eta,
                permittivity: 1.0,
                conductivity: 0.0,
                attenuation_rate: 0.0,
                depth: 1.0,
            });
        }
        let stack = stack_from(layers, 1.0);
        let resp = transfer_coefficients(&stack).unwrap();
        for z in &resp.coefficients {
            assert_relative_eq!(z.re, r, epsilon = 1e-13);
            assert_relative_eq!(z.im, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn transfer_identical_layers_reflect_only_at_surface() {
        let layer = dielectric(4.0, 1.0);
        let stack = stack_from(vec![layer, layer, layer], 1.0);
        let resp = transfer_coefficients(&stack).unwrap();
        assert!(resp.coefficients[0].norm() > 0.0);
        for z in &resp.coefficients[1..] {
            assert!(z.norm() < 1e-15, "interior boundaries must not reflect");
        }
    }

    #[test]
    fn transfer_depth_scaling_touches_only_attenuation() {
        let l1 = Layer {
            conductivity: 0.4,
            ..dielectric(3.0, 1.2)
        };
        let l2 = Layer {
            conductivity: 0.1,
            attenuation_rate: 2.0,
            ..dielectric(0.8, 2.0)
        };
        let base = stack_from(vec![l1, l2], 1.0);
        let mut scaled = base.clone();
        for layer in &mut scaled.layers {
            layer.depth *= 3.0;
        }
        let r0 = transfer_coefficients(&base).unwrap();
        let r1 = transfer_coefficients(&scaled).unwrap();
        // Surface tap has no attenuation factor, so it is unchanged.
        assert_relative_eq!(
            (r0.coefficients[0] - r1.coefficients[0]).norm(),
            0.0,
            epsilon = 1e-15
        );
        // Deeper taps change only by the real attenuation ratio: the phase
        // (reflection part) is preserved.
        let ratio = r1.coefficients[1] / r0.coefficients[1];
        assert_relative_eq!(ratio.im, 0.0, epsilon = 1e-13);
        assert!(ratio.re > 0.0);
    }

    #[test]
    fn normalize_scales_by_surface_magnitude() {
        let resp = MultilayerResponse {
            coefficients: vec![Complex64::new(0.5, 0.0), Complex64::new(0.25, 0.0)],
            sample_period: 1.0,
        };
        let n = normalize_to_surface(&resp).unwrap();
        assert_relative_eq!(n.coefficients[0].re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(n.coefficients[1].re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn normalize_preserves_phase() {
        let resp = MultilayerResponse {
            coefficients: vec![Complex64::new(0.0, 0.5), Complex64::new(0.25, 0.0)],
            sample_period: 1.0,
        };
        let n = normalize_to_surface(&resp).unwrap();
        assert_relative_eq!(n.coefficients[0].im, 1.0, epsilon = 1e-15);
        assert_relative_eq!(n.coefficients[0].re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(n.coefficients[1].re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn normalize_is_idempotent() {
        let resp = MultilayerResponse {
            coefficients: vec![Complex64::new(0.3, -0.4), Complex64::new(0.1, 0.2)],
            sample_period: 1.0,
        };
        let once = normalize_to_surface(&resp).unwrap();
        let twice = normalize_to_surface(&once).unwrap();
        for (a, b) in once.coefficients.iter().zip(&twice.coefficients) {
            assert!((a - b).norm() < 1e-15);
        }
        assert_relative_eq!(once.coefficients[0].norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn normalize_zero_surface_errors() {
        let resp = MultilayerResponse {
            coefficients: vec![Complex64::new(0.0, 0.0), Complex64::new(0.25, 0.0)],
            sample_period: 1.0,
        };
        assert!(matches!(
            normalize_to_surface(&resp),
            Err(Error::ZeroSurfaceReflection)
        ));
    }

    #[test]
    fn invalid_layers_are_rejected() {
        let bad = Layer {
            permittivity: 0.0,
            ..dielectric(1.0, 1.0)
        };
        assert!(bad.validate(3).is_err());
        let stack = MaterialStack::new(vec![], Complex64::new(1.0, 0.0), 1.0);
        assert!(stack.is_err());
        let neg_freq =
            MaterialStack::new(vec![dielectric(1.0, 1.0)], Complex64::new(1.0, 0.0), 0.0);
        assert!(neg_freq.is_err());
    }
}
