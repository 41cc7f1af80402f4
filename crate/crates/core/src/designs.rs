//! Transmit covariance designs.
//!
//! Four entry points, all maximizing backscattered signal power under a
//! transmit power budget:
//!
//! * [`solve_single_target_analytic`] — the closed-form rank-1 design: all
//!   power on the top eigenvector of the backscatter form.
//! * [`solve_robust`] — max-min power over a target uncertainty grid while
//!   capping incident power on every clutter grid angle.
//! * [`solve_pareto_point`] / [`sweep_pareto`] — weighted-sum designs over
//!   multiple targets under a total clutter power bound, swept over the
//!   weight simplex to trace the Pareto boundary.
//! * [`baseline_no_response`] — the material-blind reference design that
//!   maximizes incident power only.
//!
//! [`extract_precoder`] factors a designed covariance into the square-root
//! precoder the simulator feeds with unit-variance symbols.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::hermitian_eigen;
use crate::scenario::Scenario;
use crate::sdp::{
    solve_max, solve_maxmin, HermitianCovariance, SdpConstraint, SdpProblem, SolveReport,
    SolveStatus, Tolerances, WeightedObjective,
};
use crate::spacetime::{
    block_steering, clutter_form, quadratic_form, response_matrix, QuadraticForm, SteeringVector,
};

/// Relative eigenvalue threshold below which a covariance direction is
/// treated as unused when counting rank.
const RANK_THRESHOLD: f64 = 1e-8;

/// Relative spread under which the top eigenvalue counts as tied.
const EIGENVALUE_TIE_THRESHOLD: f64 = 1e-10;

/// Uniform angle samples over one or more uncertainty intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyGrid {
    points: Vec<f64>,
    resolution: usize,
}

impl UncertaintyGrid {
    /// Grids `[low, high]` with `resolution` uniformly spaced points,
    /// endpoints included.
    pub fn from_interval(low: f64, high: f64, resolution: usize) -> Result<Self> {
        Self::from_intervals(&[(low, high)], resolution)
    }

    /// Concatenates per-interval grids; `resolution` applies to each
    /// connected interval separately.
    pub fn from_intervals(intervals: &[(f64, f64)], resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::Scenario(format!(
                "grid resolution must be at least 2, got {resolution}"
            )));
        }
        if intervals.is_empty() {
            return Err(Error::Scenario("uncertainty grid needs at least one interval".into()));
        }
        let mut points = Vec::with_capacity(intervals.len() * resolution);
        for &(low, high) in intervals {
            if !(low < high) {
                return Err(Error::Scenario(format!(
                    "uncertainty interval [{low}, {high}] needs low < high"
                )));
            }
            let step = (high - low) / (resolution - 1) as f64;
            for k in 0..resolution {
                // Hit the endpoints exactly.
                let angle = if k + 1 == resolution {
                    high
                } else {
                    low + step * k as f64
                };
                points.push(angle);
            }
        }
        Ok(Self { points, resolution })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }
}

/// Closed-form single-target design.
#[derive(Debug, Clone)]
pub struct AnalyticDesign {
    pub covariance: HermitianCovariance,
    /// Backscattered power of the design: P_max times the top eigenvalue.
    pub backscattered_power: f64,
    /// Set when the top eigenvalue is degenerate, in which case any unit
    /// vector of the top eigenspace was returned.
    pub eigenvalue_tie: bool,
}

/// Puts the whole power budget on the top eigenvector of the backscatter
/// form. The returned covariance has rank one and trace `p_max`.
pub fn solve_single_target_analytic(qf: &QuadraticForm, p_max: f64) -> Result<AnalyticDesign> {
    if !(p_max >= 0.0) || !p_max.is_finite() {
        return Err(Error::InvalidProblem(format!(
            "power budget must be nonnegative and finite, got {p_max}"
        )));
    }
    let n = qf.dim();
    let (vals, vecs) = hermitian_eigen(qf.matrix());
    let lam_max = vals[n - 1];
    let eigenvalue_tie = n > 1 && (lam_max - vals[n - 2]) <= EIGENVALUE_TIE_THRESHOLD * lam_max.abs().max(1e-300);
    if eigenvalue_tie {
        log::debug!(
            "top eigenvalue {lam_max} is degenerate; returning one vector of the top eigenspace"
        );
    }
    let v = vecs.column(n - 1).clone_owned();
    let covariance = HermitianCovariance::new((&v * v.adjoint()).scale(p_max))?;
    Ok(AnalyticDesign {
        covariance,
        backscattered_power: p_max * lam_max,
        eigenvalue_tie,
    })
}

/// Optimal budget split across eigendirections: everything on the largest
/// eigenvalue, ties broken toward the highest index.
pub fn lp_power_allocation(eigenvalues: &[f64], p_max: f64) -> Vec<f64> {
    let mut allocation = vec![0.0; eigenvalues.len()];
    if eigenvalues.is_empty() {
        return allocation;
    }
    let mut best = 0;
    for (i, v) in eigenvalues.iter().enumerate() {
        if *v >= eigenvalues[best] {
            best = i;
        }
    }
    allocation[best] = p_max;
    allocation
}

/// Power achieved at one grid angle, with the bound that applies to it.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct GridPower {
    pub angle_deg: f64,
    pub power: f64,
    pub bound: f64,
}

/// Robust max-min design outcome.
#[derive(Debug, Clone)]
pub struct RobustDesign {
    pub report: SolveReport,
    /// Guaranteed backscattered power over the target grid.
    pub worst_target_power: f64,
    /// Achieved backscattered power per target grid angle (bound column
    /// carries the guaranteed level).
    pub target_rows: Vec<GridPower>,
    /// Achieved incident (or material) power per clutter grid angle against
    /// the per-angle bound.
    pub clutter_rows: Vec<GridPower>,
}

/// Maximizes the worst-case backscattered power over every target grid
/// angle subject to the per-angle clutter bound and the power budget, then
/// re-verifies every grid constraint on the returned covariance.
pub fn solve_robust(scenario: &Scenario) -> Result<RobustDesign> {
    let tol = scenario.tolerances();
    let resolution = scenario.solver.grid_resolution;
    let horizon = scenario.model.horizon;
    let antennas = scenario.array.antennas;
    let dimension = antennas * horizon;
    let p_max = scenario.solver.power_budget;
    let xi = scenario.clutter_bound();

    // Target forms across all grid angles, one response matrix per target.
    let mut target_angles = Vec::new();
    let mut objectives = Vec::new();
    for (t, target) in scenario.targets.iter().enumerate() {
        let response = scenario.target_response(t)?;
        let rm = response_matrix(&response, horizon)?;
        for angle in target.angles.grid_angles(resolution)? {
            let sv = scenario.steering(antennas, angle)?;
            let block = block_steering(&sv, horizon);
            objectives.push(WeightedObjective::unit(
                quadratic_form(&rm, &block, angle).matrix().clone(),
            ));
            target_angles.push(angle);
        }
    }

    let mut constraints = Vec::new();
    let mut clutter_angles = Vec::new();
    for (k, clutter) in scenario.clutters.iter().enumerate() {
        for angle in clutter.angles.grid_angles(resolution)? {
            let form = scenario.clutter_constraint_form(k, angle)?;
            constraints.push(SdpConstraint {
                matrix: form.matrix().clone(),
                bound: xi,
            });
            clutter_angles.push(angle);
        }
    }
    let num_clutter = constraints.len();
    constraints.push(SdpConstraint {
        matrix: DMatrix::identity(dimension, dimension),
        bound: p_max,
    });

    let problem = SdpProblem::new(dimension, objectives, constraints)?;
    let report = if problem.objectives.len() == 1 {
        solve_max(&problem, &tol)?
    } else {
        solve_maxmin(&problem, &tol)?
    };

    let mut report = report;
    if report.status == SolveStatus::MaxIterations && xi <= 10.0 * tol.feasibility * p_max {
        // The clutter bound is below what the solver can resolve against
        // its feasibility tolerance; surface that as infeasibility.
        report.status = SolveStatus::Infeasible;
    }

    let c = report.solution.matrix();
    let mut target_rows = Vec::with_capacity(target_angles.len());
    for (j, angle) in target_angles.iter().enumerate() {
        let power = crate::linalg::trace_product(&problem.objectives[j].matrix, c);
        target_rows.push(GridPower {
            angle_deg: *angle,
            power,
            bound: report.objective,
        });
    }
    let mut clutter_rows = Vec::with_capacity(num_clutter);
    for (i, angle) in clutter_angles.iter().enumerate() {
        let power = crate::linalg::trace_product(&problem.constraints[i].matrix, c);
        clutter_rows.push(GridPower {
            angle_deg: *angle,
            power,
            bound: xi,
        });
    }

    if report.status == SolveStatus::Optimal {
        for row in &clutter_rows {
            if row.power > xi + 1e-8 * xi {
                return Err(Error::SolverFailure(format!(
                    "clutter bound violated after solve: {} > {xi} at {} deg",
                    row.power, row.angle_deg
                )));
            }
        }
        let budget_slack = p_max - report.solution.power();
        if budget_slack < -1e-8 * p_max.max(1.0) {
            return Err(Error::SolverFailure(format!(
                "power budget violated after solve: trace exceeds {p_max} by {}",
                -budget_slack
            )));
        }
    }

    Ok(RobustDesign {
        worst_target_power: report.objective,
        target_rows,
        clutter_rows,
        report,
    })
}

/// One weighted-sum design for a fixed weight vector.
#[derive(Debug, Clone)]
pub struct ParetoPoint {
    pub gamma: Vec<f64>,
    /// Backscattered power per target at the optimum.
    pub target_powers: Vec<f64>,
    /// Total clutter power bound in force.
    pub psi: f64,
    /// The weighted-sum objective value.
    pub weighted_objective: f64,
    /// Numerical rank of the returned covariance.
    pub rank: usize,
    pub report: SolveReport,
}

/// A weight failure recorded during a sweep.
#[derive(Debug, Clone)]
pub struct ParetoFailure {
    pub gamma: Vec<f64>,
    pub message: String,
}

/// Sweep outcome: the boundary points plus any per-weight failures.
#[derive(Debug, Clone)]
pub struct ParetoSweep {
    pub points: Vec<ParetoPoint>,
    pub failures: Vec<ParetoFailure>,
}

/// Maximizes the gamma-weighted sum of target backscattered powers under
/// the total clutter power bound `psi` and the transmit power budget.
/// Targets and clutters must be point angles here.
pub fn solve_pareto_point(scenario: &Scenario, gamma: &[f64], psi: f64) -> Result<ParetoPoint> {
    let tol = scenario.tolerances();
    let dimension = scenario.array.antennas * scenario.model.horizon;
    let targets = point_angles(scenario, true)?;
    if gamma.len() != targets.len() {
        return Err(Error::InvalidProblem(format!(
            "gamma has {} entries for {} targets",
            gamma.len(),
            targets.len()
        )));
    }
    let sum: f64 = gamma.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || gamma.iter().any(|g| !(*g > 0.0 && *g < 1.0)) {
        return Err(Error::InvalidProblem(format!(
            "gamma must lie strictly inside the simplex, got {gamma:?}"
        )));
    }
    if !(psi > 0.0) {
        return Err(Error::InvalidProblem(format!(
            "clutter sum bound must be positive, got {psi}"
        )));
    }

    let target_forms: Vec<QuadraticForm> = targets
        .iter()
        .enumerate()
        .map(|(t, angle)| scenario.target_form(t, *angle))
        .collect::<Result<_>>()?;
    let mut combined = DMatrix::zeros(dimension, dimension);
    for (g, form) in gamma.iter().zip(&target_forms) {
        combined += form.matrix().scale(*g);
    }

    let mut constraints = Vec::new();
    let clutters = point_angles(scenario, false)?;
    if !clutters.is_empty() {
        let mut total = DMatrix::zeros(dimension, dimension);
        for (k, angle) in clutters.iter().enumerate() {
            total += scenario.clutter_constraint_form(k, *angle)?.matrix();
        }
        constraints.push(SdpConstraint {
            matrix: total,
            bound: psi,
        });
    }
    constraints.push(SdpConstraint {
        matrix: DMatrix::identity(dimension, dimension),
        bound: scenario.solver.power_budget,
    });

    let problem = SdpProblem::new(
        dimension,
        vec![WeightedObjective::unit(combined)],
        constraints,
    )?;
    let report = solve_max(&problem, &tol)?;

    let c = report.solution.matrix();
    let target_powers: Vec<f64> = target_forms.iter().map(|f| f.power(c)).collect();
    let rank = covariance_rank(&report.solution);
    if rank > 1 {
        log::debug!(
            "pareto point at gamma {gamma:?} returned covariance of rank {rank} (expected 1)"
        );
    }
    Ok(ParetoPoint {
        gamma: gamma.to_vec(),
        target_powers,
        psi,
        weighted_objective: report.objective,
        rank,
        report,
    })
}

/// Traces the Pareto boundary by sweeping the open weight simplex with
/// `weight_count` samples per run (a uniform grid for two targets, a
/// simplex lattice beyond). Failed weights are recorded and skipped;
/// duplicate power points are deduplicated.
pub fn sweep_pareto(scenario: &Scenario, weight_count: usize, psi: f64) -> Result<ParetoSweep> {
    let num_targets = point_angles(scenario, true)?.len();
    if num_targets < 2 {
        return Err(Error::InvalidProblem(
            "pareto sweep needs at least two targets".into(),
        ));
    }
    if weight_count == 0 {
        return Err(Error::InvalidProblem("weight_count must be at least 1".into()));
    }
    let gammas = simplex_lattice(num_targets, weight_count);

    let results = exec::map_range(gammas.len(), |i| {
        solve_pareto_point(scenario, &gammas[i], psi).map_err(|e| e.to_string())
    });

    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (gamma, result) in gammas.into_iter().zip(results) {
        match result {
            Ok(point) => points.push(point),
            Err(message) => failures.push(ParetoFailure { gamma, message }),
        }
    }
    points.sort_by(|a, b| a.gamma.partial_cmp(&b.gamma).unwrap());
    points.dedup_by(|b, a| {
        a.target_powers
            .iter()
            .zip(&b.target_powers)
            .all(|(x, y)| (x - y).abs() <= 1e-9)
    });
    Ok(ParetoSweep { points, failures })
}

/// Weight vectors gamma = k / (weight_count + 1) with positive integer k
/// summing to weight_count + 1; for two targets this is the uniform open
/// grid with spacing 1 / (weight_count + 1).
fn simplex_lattice(num_targets: usize, weight_count: usize) -> Vec<Vec<f64>> {
    let denom = weight_count + 1;
    let mut out = Vec::new();
    let mut current = vec![0usize; num_targets];
    fill_lattice(num_targets, denom, 0, denom, &mut current, &mut out);
    out
}

fn fill_lattice(
    num_targets: usize,
    denom: usize,
    index: usize,
    remaining: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<f64>>,
) {
    if index + 1 == num_targets {
        if remaining >= 1 {
            current[index] = remaining;
            out.push(current.iter().map(|&k| k as f64 / denom as f64).collect());
        }
        return;
    }
    let max_here = remaining.saturating_sub(num_targets - index - 1);
    for k in 1..=max_here {
        current[index] = k;
        fill_lattice(num_targets, denom, index + 1, remaining - k, current, out);
    }
}

fn point_angles(scenario: &Scenario, targets: bool) -> Result<Vec<f64>> {
    let specs: Vec<&crate::scenario::AngleSpec> = if targets {
        scenario.targets.iter().map(|t| &t.angles).collect()
    } else {
        scenario.clutters.iter().map(|c| &c.angles).collect()
    };
    specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            spec.angle.ok_or_else(|| {
                Error::InvalidProblem(format!(
                    "{}[{i}] must be a point angle for the pareto design",
                    if targets { "targets" } else { "clutters" }
                ))
            })
        })
        .collect()
}

/// Material-blind reference design and what it actually achieves.
#[derive(Debug, Clone)]
pub struct BaselineDesign {
    pub covariance: HermitianCovariance,
    /// Backscattered power the incident-only design achieves through the
    /// material it ignored.
    pub backscattered_power: f64,
    /// Incident power at the target, which this design maximizes.
    pub incident_power: f64,
}

/// Maximizes incident power only: power split evenly over the time slots,
/// each slot beamformed at the target. Among the maximizers of incident
/// power this is the time-isotropic choice, which makes the design
/// deterministic. The achieved backscattered power is evaluated through
/// `target_form` afterwards.
pub fn baseline_no_response(
    sv: &SteeringVector,
    target_form: &QuadraticForm,
    horizon: usize,
    p_max: f64,
) -> Result<BaselineDesign> {
    if !(p_max >= 0.0) || !p_max.is_finite() {
        return Err(Error::InvalidProblem(format!(
            "power budget must be nonnegative and finite, got {p_max}"
        )));
    }
    let m = sv.len();
    let dimension = m * horizon;
    if target_form.dim() != dimension {
        return Err(Error::InvalidProblem(format!(
            "target form dimension {} does not match M*N = {dimension}",
            target_form.dim()
        )));
    }
    let scale = p_max / (horizon as f64 * m as f64);
    let mut c = DMatrix::zeros(dimension, dimension);
    for n in 0..horizon {
        for i in 0..m {
            for j in 0..m {
                c[(n * m + i, n * m + j)] = sv.entries()[i] * sv.entries()[j].conj() * scale;
            }
        }
    }
    let covariance = HermitianCovariance::new(c)?;
    let incident = clutter_form(&block_steering(sv, horizon), target_form.angle_deg())
        .power(covariance.matrix());
    let backscattered = target_form.power(covariance.matrix());
    Ok(BaselineDesign {
        covariance,
        backscattered_power: backscattered,
        incident_power: incident,
    })
}

/// Square-root factor of a covariance: columns are eigenvectors scaled by
/// root eigenvalues, strongest first.
#[derive(Debug, Clone)]
pub struct Precoder {
    matrix: DMatrix<Complex64>,
    rank: usize,
}

impl Precoder {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// The covariance this precoder reproduces: U Uᴴ.
    pub fn covariance_matrix(&self) -> DMatrix<Complex64> {
        crate::linalg::hermitian_part(&(&self.matrix * self.matrix.adjoint()))
    }
}

/// Factors C = U Uᴴ through the eigendecomposition, clamping negative
/// eigenvalues within the covariance tolerance to zero.
pub fn extract_precoder(cov: &HermitianCovariance) -> Result<Precoder> {
    let n = cov.dim();
    let trace = cov.power();
    let (vals, vecs) = hermitian_eigen(cov.matrix());
    if vals[0] < -1e-9 * trace.abs().max(1e-300) {
        return Err(Error::InvalidMatrix(format!(
            "matrix is not a covariance: eigenvalue {} below -1e-9 * trace",
            vals[0]
        )));
    }
    let lam_max = vals[n - 1].max(0.0);
    let mut matrix = DMatrix::zeros(n, n);
    let mut rank = 0;
    for k in 0..n {
        // Strongest direction first.
        let src = n - 1 - k;
        let lam = vals[src].max(0.0);
        if lam > RANK_THRESHOLD * lam_max {
            rank += 1;
        }
        let col = vecs.column(src).clone_owned() * Complex64::new(lam.sqrt(), 0.0);
        matrix.set_column(k, &col);
    }
    let precoder = Precoder { matrix, rank };
    let rebuilt = precoder.covariance_matrix();
    let err_num = (&rebuilt - cov.matrix()).norm();
    let err_den = cov.matrix().norm().max(1e-300);
    if trace > 0.0 && err_num / err_den > 1e-8 {
        return Err(Error::SolverFailure(format!(
            "precoder reconstruction error {} exceeds tolerance",
            err_num / err_den
        )));
    }
    Ok(precoder)
}

fn covariance_rank(cov: &HermitianCovariance) -> usize {
    let (vals, _) = hermitian_eigen(cov.matrix());
    let lam_max = vals[vals.len() - 1].max(0.0);
    if lam_max == 0.0 {
        return 0;
    }
    vals.iter().filter(|&&v| v > RANK_THRESHOLD * lam_max).count()
}
