//! Scenario files: the TOML experiment description consumed by the CLI.
//!
//! A scenario mirrors the model quantities one-to-one: `[array]` holds the
//! antenna count and spacing, `[model]` the temporal horizon and medium,
//! `[[layers]]` the default target material stack, `[[targets]]` and
//! `[[clutters]]` the angles (points or uncertainty intervals, optionally
//! with their own layer stacks), `[solver]` the budgets and tolerances,
//! `[sweep]`, `[simulation]` and `[output]` the experiment knobs.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::designs::UncertaintyGrid;
use crate::error::{Error, Result};
use crate::multilayer::{
    normalize_to_surface, transfer_coefficients, Layer, MaterialStack, MultilayerResponse,
    FREE_SPACE_IMPEDANCE,
};
use crate::sdp::Tolerances;
use crate::simulator::SymbolDistribution;
use crate::spacetime::{
    block_steering, clutter_form, quadratic_form, response_matrix, steering_vector, ArrayGeometry,
    QuadraticForm, SteeringVector,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub array: ArraySection,
    pub model: ModelSection,
    /// Default material stack, shared by entries without their own layers.
    #[serde(default)]
    pub layers: Vec<Layer>,
    pub targets: Vec<TargetSpec>,
    #[serde(default)]
    pub clutters: Vec<ClutterSpec>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArraySection {
    /// Number of antennas M.
    pub antennas: usize,
    #[serde(default = "default_spacing")]
    pub spacing_over_wavelength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    /// Number of time slots N.
    pub horizon: usize,
    /// Angular frequency entering the impedance evaluation (rad/s).
    #[serde(default = "default_one")]
    pub angular_frequency: f64,
    /// Impedance of the medium in front of the targets; a number or a
    /// `[re, im]` pair. Defaults to free space.
    #[serde(default)]
    pub ambient_impedance: AmbientImpedance,
    #[serde(default = "default_one")]
    pub sample_period: f64,
    /// Rescale every stack's coefficients by the surface reflection
    /// magnitude before building response matrices.
    #[serde(default)]
    pub normalize_to_surface: bool,
}

/// Real or complex ambient impedance as written in the file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AmbientImpedance {
    Real(f64),
    Complex([f64; 2]),
}

impl Default for AmbientImpedance {
    fn default() -> Self {
        Self::Real(FREE_SPACE_IMPEDANCE)
    }
}

impl AmbientImpedance {
    pub fn value(&self) -> Complex64 {
        match self {
            Self::Real(re) => Complex64::new(*re, 0.0),
            Self::Complex([re, im]) => Complex64::new(*re, *im),
        }
    }
}

/// Angles of one target or clutter: either a point angle or one or more
/// uncertainty intervals gridded at the solver's resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<Vec<[f64; 2]>>,
}

impl AngleSpec {
    fn validate(&self, what: &str) -> Result<()> {
        match (&self.angle, &self.intervals) {
            (Some(a), None) => {
                if !(-90.0..=90.0).contains(a) {
                    return Err(Error::Scenario(format!(
                        "{what}.angle = {a} outside [-90, 90]"
                    )));
                }
                Ok(())
            }
            (None, Some(list)) => {
                if list.is_empty() {
                    return Err(Error::Scenario(format!("{what}.intervals is empty")));
                }
                for [low, high] in list {
                    if !(low < high) {
                        return Err(Error::Scenario(format!(
                            "{what}.intervals entry [{low}, {high}] needs low < high"
                        )));
                    }
                    if !(-90.0..=90.0).contains(low) || !(-90.0..=90.0).contains(high) {
                        return Err(Error::Scenario(format!(
                            "{what}.intervals entry [{low}, {high}] outside [-90, 90]"
                        )));
                    }
                }
                Ok(())
            }
            _ => Err(Error::Scenario(format!(
                "{what} must set exactly one of `angle` or `intervals`"
            ))),
        }
    }

    /// Grid angles: the point itself, or every interval gridded with
    /// `resolution` points.
    pub fn grid_angles(&self, resolution: usize) -> Result<Vec<f64>> {
        match (&self.angle, &self.intervals) {
            (Some(a), None) => Ok(vec![*a]),
            (None, Some(list)) => {
                let pairs: Vec<(f64, f64)> = list.iter().map(|[l, h]| (*l, *h)).collect();
                Ok(UncertaintyGrid::from_intervals(&pairs, resolution)?
                    .points()
                    .to_vec())
            }
            _ => Err(Error::Scenario(
                "angle spec must set exactly one of `angle` or `intervals`".into(),
            )),
        }
    }

    pub fn is_point(&self) -> bool {
        self.angle.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    #[serde(flatten)]
    pub angles: AngleSpec,
    /// Per-target material stack overriding the scenario default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<Layer>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClutterSpec {
    #[serde(flatten)]
    pub angles: AngleSpec,
    /// Clutters are incident-power constraints unless they declare a
    /// material stack, in which case the full backscatter form is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<Layer>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSection {
    /// Transmit power budget P.
    #[serde(default = "default_one")]
    pub power_budget: f64,
    /// Per-angle clutter power bound for the robust design; defaults to
    /// 1e-6 times the power budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clutter_bound: Option<f64>,
    /// Total clutter power bound for the Pareto design.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clutter_sum_bound: Option<f64>,
    /// Weight vector for a single Pareto point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Number of weight samples per Pareto sweep.
    #[serde(default = "default_weight_count")]
    pub weight_count: usize,
    /// Grid points per uncertainty interval.
    #[serde(default = "default_grid_resolution")]
    pub grid_resolution: usize,
    #[serde(default = "default_gap_tol")]
    pub gap_tolerance: f64,
    #[serde(default = "default_gap_tol")]
    pub feasibility_tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            power_budget: 1.0,
            clutter_bound: None,
            clutter_sum_bound: None,
            weights: None,
            weight_count: default_weight_count(),
            grid_resolution: default_grid_resolution(),
            gap_tolerance: default_gap_tol(),
            feasibility_tolerance: default_gap_tol(),
            max_iterations: default_max_iterations(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepSection {
    /// Antenna counts for the `single` sweep; defaults to the array size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antennas: Option<Vec<usize>>,
    /// Horizons for the `single` sweep; defaults to the model horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizons: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSection {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub distribution: SymbolDistribution,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            trials: default_trials(),
            seed: 0,
            distribution: SymbolDistribution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    /// Reference power for dB columns.
    #[serde(default = "default_one")]
    pub db_reference: f64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { db_reference: 1.0 }
    }
}

fn default_spacing() -> f64 {
    0.5
}
fn default_one() -> f64 {
    1.0
}
fn default_weight_count() -> usize {
    25
}
fn default_grid_resolution() -> usize {
    16
}
fn default_gap_tol() -> f64 {
    1e-8
}
fn default_max_iterations() -> usize {
    200
}
fn default_trials() -> usize {
    100_000
}

/// Reads and validates a scenario file.
pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    Scenario::from_toml_str(&text)
}

impl Scenario {
    /// Parses a scenario from TOML text and validates every invariant.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let scenario: Scenario =
            toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.array.antennas == 0 {
            return Err(Error::Scenario("array.antennas must be at least 1".into()));
        }
        if !(self.array.spacing_over_wavelength > 0.0) {
            return Err(Error::Scenario(
                "array.spacing_over_wavelength must be positive".into(),
            ));
        }
        if self.model.horizon == 0 {
            return Err(Error::Scenario("model.horizon must be at least 1".into()));
        }
        if !(self.model.angular_frequency > 0.0) {
            return Err(Error::Scenario(
                "model.angular_frequency must be positive".into(),
            ));
        }
        if !(self.model.sample_period > 0.0) {
            return Err(Error::Scenario("model.sample_period must be positive".into()));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            layer
                .validate(i)
                .map_err(|e| Error::Scenario(format!("layers: {e}")))?;
        }
        if self.targets.is_empty() {
            return Err(Error::Scenario("at least one [[targets]] required".into()));
        }
        for (t, target) in self.targets.iter().enumerate() {
            target.angles.validate(&format!("targets[{t}]"))?;
            let stack = target.layers.as_ref().unwrap_or(&self.layers);
            if stack.is_empty() {
                return Err(Error::Scenario(format!(
                    "targets[{t}] has no layers and no default [[layers]] stack exists"
                )));
            }
            for (i, layer) in stack.iter().enumerate() {
                layer
                    .validate(i)
                    .map_err(|e| Error::Scenario(format!("targets[{t}].layers: {e}")))?;
            }
            if self.model.horizon < stack.len() {
                return Err(Error::Scenario(format!(
                    "model.horizon = {} is shorter than targets[{t}]'s {} layers",
                    self.model.horizon,
                    stack.len()
                )));
            }
        }
        for (k, clutter) in self.clutters.iter().enumerate() {
            clutter.angles.validate(&format!("clutters[{k}]"))?;
            if let Some(stack) = &clutter.layers {
                if stack.is_empty() {
                    return Err(Error::Scenario(format!(
                        "clutters[{k}].layers must not be empty when present"
                    )));
                }
                for (i, layer) in stack.iter().enumerate() {
                    layer
                        .validate(i)
                        .map_err(|e| Error::Scenario(format!("clutters[{k}].layers: {e}")))?;
                }
                if self.model.horizon < stack.len() {
                    return Err(Error::Scenario(format!(
                        "model.horizon = {} is shorter than clutters[{k}]'s {} layers",
                        self.model.horizon,
                        stack.len()
                    )));
                }
            }
        }
        let s = &self.solver;
        if !(s.power_budget > 0.0) {
            return Err(Error::Scenario(format!(
                "solver.power_budget must be positive, got {}",
                s.power_budget
            )));
        }
        if let Some(xi) = s.clutter_bound {
            if !(xi > 0.0) {
                return Err(Error::Scenario(format!(
                    "solver.clutter_bound must be positive, got {xi}"
                )));
            }
        }
        if let Some(psi) = s.clutter_sum_bound {
            if !(psi > 0.0) {
                return Err(Error::Scenario(format!(
                    "solver.clutter_sum_bound must be positive, got {psi}"
                )));
            }
        }
        if let Some(weights) = &s.weights {
            if weights.len() != self.targets.len() {
                return Err(Error::Scenario(format!(
                    "solver.weights has {} entries for {} targets",
                    weights.len(),
                    self.targets.len()
                )));
            }
            let sum: f64 = weights.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Scenario(format!(
                    "solver.weights must sum to 1, got {sum}"
                )));
            }
            for w in weights {
                if !(*w > 0.0 && *w < 1.0) {
                    return Err(Error::Scenario(format!(
                        "solver.weights entries must lie strictly inside (0, 1), got {w}"
                    )));
                }
            }
        }
        if s.weight_count == 0 {
            return Err(Error::Scenario("solver.weight_count must be at least 1".into()));
        }
        if s.grid_resolution < 2 {
            return Err(Error::Scenario(
                "solver.grid_resolution must be at least 2".into(),
            ));
        }
        if !(s.gap_tolerance > 0.0) || !(s.feasibility_tolerance > 0.0) {
            return Err(Error::Scenario("solver tolerances must be positive".into()));
        }
        if let Some(list) = &self.sweep.antennas {
            if list.is_empty() || list.iter().any(|&m| m == 0) {
                return Err(Error::Scenario(
                    "sweep.antennas must be a nonempty list of positive counts".into(),
                ));
            }
        }
        if let Some(list) = &self.sweep.horizons {
            let max_layers = self.max_layer_count();
            if list.is_empty() {
                return Err(Error::Scenario("sweep.horizons must be nonempty".into()));
            }
            if let Some(&bad) = list.iter().find(|&&n| n < max_layers) {
                return Err(Error::Scenario(format!(
                    "sweep.horizons entry {bad} is shorter than the deepest stack ({max_layers} layers)"
                )));
            }
        }
        if self.simulation.trials == 0 {
            return Err(Error::Scenario("simulation.trials must be at least 1".into()));
        }
        if !(self.output.db_reference > 0.0) {
            return Err(Error::Scenario("output.db_reference must be positive".into()));
        }
        Ok(())
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            gap: self.solver.gap_tolerance,
            feasibility: self.solver.feasibility_tolerance,
            max_iterations: self.solver.max_iterations,
        }
    }

    /// Per-angle clutter bound for the robust design; "vanishingly small"
    /// is realized as 1e-6 times the power budget so the feasible set keeps
    /// a strict interior.
    pub fn clutter_bound(&self) -> f64 {
        self.solver
            .clutter_bound
            .unwrap_or(1e-6 * self.solver.power_budget)
    }

    pub fn geometry(&self) -> ArrayGeometry {
        self.geometry_with(self.array.antennas)
    }

    pub fn geometry_with(&self, antennas: usize) -> ArrayGeometry {
        ArrayGeometry {
            num_antennas: antennas,
            spacing_over_wavelength: self.array.spacing_over_wavelength,
        }
    }

    pub fn num_targets(&self) -> usize {
        self.targets.len()
    }

    /// Deepest stack referenced anywhere in the scenario.
    pub fn max_layer_count(&self) -> usize {
        let mut max = 0;
        for target in &self.targets {
            max = max.max(target.layers.as_ref().unwrap_or(&self.layers).len());
        }
        for clutter in &self.clutters {
            if let Some(layers) = &clutter.layers {
                max = max.max(layers.len());
            }
        }
        max
    }

    fn stack_from(&self, layers: &[Layer]) -> Result<MaterialStack> {
        MaterialStack::new(
            layers.to_vec(),
            self.model.ambient_impedance.value(),
            self.model.angular_frequency,
        )
    }

    fn response_from(&self, layers: &[Layer]) -> Result<MultilayerResponse> {
        let stack = self.stack_from(layers)?;
        let response = transfer_coefficients(&stack)?;
        let response = if self.model.normalize_to_surface {
            normalize_to_surface(&response)?
        } else {
            response
        };
        Ok(response.with_sample_period(self.model.sample_period))
    }

    /// Multilayer response of a target, honoring its private stack if any.
    pub fn target_response(&self, target: usize) -> Result<MultilayerResponse> {
        let spec = self.targets.get(target).ok_or_else(|| {
            Error::Scenario(format!("target index {target} out of range"))
        })?;
        self.response_from(spec.layers.as_ref().unwrap_or(&self.layers))
    }

    /// Multilayer response of a clutter, if it declares a material stack.
    pub fn clutter_response(&self, clutter: usize) -> Result<Option<MultilayerResponse>> {
        let spec = self.clutters.get(clutter).ok_or_else(|| {
            Error::Scenario(format!("clutter index {clutter} out of range"))
        })?;
        spec.layers
            .as_ref()
            .map(|layers| self.response_from(layers))
            .transpose()
    }

    pub fn steering(&self, antennas: usize, angle_deg: f64) -> Result<SteeringVector> {
        steering_vector(&self.geometry_with(antennas), angle_deg)
    }

    /// Backscatter quadratic form of `target` at `angle_deg` for an
    /// arbitrary array size and horizon.
    pub fn target_form_at(
        &self,
        antennas: usize,
        horizon: usize,
        target: usize,
        angle_deg: f64,
    ) -> Result<QuadraticForm> {
        let response = self.target_response(target)?;
        let rm = response_matrix(&response, horizon)?;
        let sv = self.steering(antennas, angle_deg)?;
        let block = block_steering(&sv, horizon);
        Ok(quadratic_form(&rm, &block, angle_deg))
    }

    /// Backscatter form of `target` at the scenario's own array and horizon.
    pub fn target_form(&self, target: usize, angle_deg: f64) -> Result<QuadraticForm> {
        self.target_form_at(self.array.antennas, self.model.horizon, target, angle_deg)
    }

    /// Constraint form of `clutter` at `angle_deg`: incident power unless
    /// the clutter declares its own material stack.
    pub fn clutter_constraint_form(&self, clutter: usize, angle_deg: f64) -> Result<QuadraticForm> {
        let sv = self.steering(self.array.antennas, angle_deg)?;
        let block = block_steering(&sv, self.model.horizon);
        match self.clutter_response(clutter)? {
            Some(response) => {
                let rm = response_matrix(&response, self.model.horizon)?;
                Ok(quadratic_form(&rm, &block, angle_deg))
            }
            None => Ok(clutter_form(&block, angle_deg)),
        }
    }
}
