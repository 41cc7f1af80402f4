//! Dense semidefinite programming over Hermitian covariance matrices.
//!
//! The solver handles the family
//!
//! ```text
//! max  Tr(F C)            or    max  min_j Tr(F_j C)
//! s.t. Tr(G_i C) <= b_i,  C Hermitian PSD
//! ```
//!
//! with at least one constraint bounding the trace. Problems are embedded
//! into real symmetric matrices, solved with a primal-dual path-following
//! method ([`ipm`]), and the solution is mapped back to a Hermitian
//! covariance. The factor-2 trace distortion of the embedding is
//! compensated here, so callers never see it.

mod ipm;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_defect, hermitian_eigen, hermitian_part, trace_product};

pub use ipm::IterationStats;

/// A Hermitian positive semidefinite transmit covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianCovariance {
    matrix: DMatrix<Complex64>,
}

impl HermitianCovariance {
    /// Validates Hermitian symmetry (to 1e-12 relative) and numerical
    /// positive semidefiniteness (eigenvalues above -1e-9 times the trace).
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidMatrix(
                "covariance must be square".to_string(),
            ));
        }
        let scale = matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if hermitian_defect(&matrix) > 1e-12 * scale.max(1.0) {
            return Err(Error::InvalidMatrix(
                "covariance is not Hermitian".to_string(),
            ));
        }
        let matrix = hermitian_part(&matrix);
        let trace = matrix.trace().re;
        let (vals, _) = hermitian_eigen(&matrix);
        if vals[0] < -1e-9 * trace.abs().max(1e-300) {
            return Err(Error::InvalidMatrix(format!(
                "covariance has eigenvalue {} below -1e-9 * trace {}",
                vals[0], trace
            )));
        }
        Ok(Self { matrix })
    }

    /// The all-zero covariance of the given dimension.
    pub fn zero(dimension: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(dimension, dimension),
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Total transmit power Tr(C).
    pub fn power(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// One objective matrix with its scalar weight.
#[derive(Debug, Clone)]
pub struct WeightedObjective {
    pub matrix: DMatrix<Complex64>,
    pub weight: f64,
}

impl WeightedObjective {
    pub fn unit(matrix: DMatrix<Complex64>) -> Self {
        Self {
            matrix,
            weight: 1.0,
        }
    }
}

/// One trace inequality Tr(matrix · C) <= bound.
#[derive(Debug, Clone)]
pub struct SdpConstraint {
    pub matrix: DMatrix<Complex64>,
    pub bound: f64,
}

/// The problem family of this crate: one or more weighted Hermitian
/// objectives, trace inequality constraints, and the PSD cone.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub dimension: usize,
    pub objectives: Vec<WeightedObjective>,
    pub constraints: Vec<SdpConstraint>,
}

impl SdpProblem {
    pub fn new(
        dimension: usize,
        objectives: Vec<WeightedObjective>,
        constraints: Vec<SdpConstraint>,
    ) -> Result<Self> {
        let problem = Self {
            dimension,
            objectives,
            constraints,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::InvalidProblem("dimension must be positive".into()));
        }
        if self.objectives.is_empty() {
            return Err(Error::InvalidProblem(
                "at least one objective required".into(),
            ));
        }
        for (j, obj) in self.objectives.iter().enumerate() {
            check_hermitian(&obj.matrix, self.dimension, &format!("objective {j}"))?;
            if !obj.weight.is_finite() || obj.weight <= 0.0 {
                return Err(Error::InvalidProblem(format!(
                    "objective {j} weight must be positive, got {}",
                    obj.weight
                )));
            }
        }
        if self.constraints.is_empty() {
            return Err(Error::InvalidProblem(
                "at least one constraint required".into(),
            ));
        }
        let mut compact = false;
        for (i, con) in self.constraints.iter().enumerate() {
            check_hermitian(&con.matrix, self.dimension, &format!("constraint {i}"))?;
            if !con.bound.is_finite() || con.bound < 0.0 {
                return Err(Error::InvalidProblem(format!(
                    "constraint {i} bound must be finite and nonnegative, got {}",
                    con.bound
                )));
            }
            if !compact {
                let (vals, _) = hermitian_eigen(&con.matrix);
                if vals[0] > 0.0 {
                    compact = true;
                }
            }
        }
        if !compact {
            return Err(Error::InvalidProblem(
                "no constraint bounds the trace (need a positive definite constraint matrix)"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Solver tolerances and iteration budget.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative duality gap at which a solve is declared optimal.
    pub gap: f64,
    /// Relative primal/dual feasibility tolerance.
    pub feasibility: f64,
    pub max_iterations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gap: 1e-8,
            feasibility: 1e-8,
            max_iterations: 200,
        }
    }
}

/// Outcome classification of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

/// Everything a solve returns: the covariance, the certified objective, and
/// per-constraint diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Optimal value: Tr(F C*) for a plain max, the min-power level for a
    /// max-min solve.
    pub objective: f64,
    /// Relative duality gap at termination.
    pub duality_gap: f64,
    pub iterations: usize,
    pub solution: HermitianCovariance,
    /// b_i - Tr(G_i C*) per constraint, in problem order.
    pub constraint_slacks: Vec<f64>,
    /// Max-min only: Tr(F_j C*) - objective per objective, in order.
    pub objective_slacks: Vec<f64>,
    /// Per-iteration convergence trace of the interior-point engine.
    pub history: Vec<IterationStats>,
}

fn check_hermitian(m: &DMatrix<Complex64>, dimension: usize, what: &str) -> Result<()> {
    if m.nrows() != dimension || m.ncols() != dimension {
        return Err(Error::InvalidProblem(format!(
            "{what}: expected {dimension}x{dimension}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if hermitian_defect(m) > 1e-12 * scale.max(1.0) {
        return Err(Error::InvalidProblem(format!("{what} is not Hermitian")));
    }
    Ok(())
}

/// Real symmetric embedding of a complex Hermitian matrix:
/// [[Re H, -Im H], [Im H, Re H]].
///
/// The embedding has the eigenvalues of H, each with multiplicity two, and
/// Tr(embed(F) embed(C)) = 2 Tr(F C) for Hermitian F, C.
pub fn embed_real(h: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = h.nrows();
    assert_eq!(n, h.ncols(), "embed_real expects a square matrix");
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            // Symmetrize on the fly so the output is exactly symmetric.
            let re = 0.5 * (h[(i, j)].re + h[(j, i)].re);
            let im = 0.5 * (h[(i, j)].im - h[(j, i)].im);
            out[(i, j)] = re;
            out[(n + i, n + j)] = re;
            out[(i, n + j)] = -im;
            out[(n + i, j)] = im;
        }
    }
    out
}

/// Inverse of [`embed_real`] for (near-)embedded symmetric matrices: the
/// real part is the average of the two diagonal blocks, the imaginary part
/// the skew-average of the off-diagonal blocks, and the result is exactly
/// Hermitian by construction.
pub fn unembed_real(x: &DMatrix<f64>) -> DMatrix<Complex64> {
    let n2 = x.nrows();
    assert!(n2 % 2 == 0 && n2 == x.ncols(), "expected 2n x 2n matrix");
    let n = n2 / 2;
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re = 0.5 * (x[(i, j)] + x[(n + i, n + j)]);
            let im = 0.5 * (x[(n + i, j)] - x[(i, n + j)]);
            out[(i, j)] = Complex64::new(re, im);
        }
    }
    hermitian_part(&out)
}

/// Maximizes Tr(F C) subject to the problem's trace inequalities over the
/// Hermitian PSD cone. Requires exactly one objective.
pub fn solve_max(problem: &SdpProblem, tol: &Tolerances) -> Result<SolveReport> {
    problem.validate()?;
    if problem.objectives.len() != 1 {
        return Err(Error::InvalidProblem(format!(
            "solve_max expects exactly one objective, got {}",
            problem.objectives.len()
        )));
    }
    let obj = &problem.objectives[0];
    let f = hermitian_part(&obj.matrix).scale(obj.weight);
    let f_scale = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if f_scale == 0.0 {
        // Degenerate objective: C = 0 is optimal.
        return Ok(zero_report(problem, 0));
    }

    let engine_problem = ipm::ConeProblem {
        psd_dim: 2 * problem.dimension,
        aux_dim: 0,
        obj_mat: embed_real(&f),
        obj_lin: nalgebra::DVector::zeros(0),
        constraints: problem
            .constraints
            .iter()
            .map(|c| ipm::ConeConstraint {
                mat: embed_real(&hermitian_part(&c.matrix)),
                lin: nalgebra::DVector::zeros(0),
                bound: 2.0 * c.bound,
            })
            .collect(),
    };
    let eng = ipm::solve(&engine_problem, tol)?;
    finish_report(problem, eng, false)
}

/// Maximizes min_j over weighted objectives Tr(w_j F_j C) via the auxiliary
/// level variable: max gamma s.t. gamma <= Tr(w_j F_j C) for every j, plus
/// the problem's constraints.
pub fn solve_maxmin(problem: &SdpProblem, tol: &Tolerances) -> Result<SolveReport> {
    problem.validate()?;
    let weighted: Vec<DMatrix<Complex64>> = problem
        .objectives
        .iter()
        .map(|o| hermitian_part(&o.matrix).scale(o.weight))
        .collect();
    if weighted
        .iter()
        .any(|f| f.iter().map(|z| z.norm()).fold(0.0, f64::max) == 0.0)
    {
        // Some objective is identically zero, so the min power level is 0
        // and the zero covariance attains it.
        return Ok(zero_report(problem, problem.objectives.len()));
    }

    let mn = problem.dimension;
    let mut constraints = Vec::with_capacity(problem.objectives.len() + problem.constraints.len());
    for f in &weighted {
        // gamma - Tr(F_j C) <= 0
        constraints.push(ipm::ConeConstraint {
            mat: -embed_real(f),
            lin: nalgebra::DVector::from_element(1, 1.0),
            bound: 0.0,
        });
    }
    for c in &problem.constraints {
        constraints.push(ipm::ConeConstraint {
            mat: embed_real(&hermitian_part(&c.matrix)),
            lin: nalgebra::DVector::zeros(1),
            bound: 2.0 * c.bound,
        });
    }
    let engine_problem = ipm::ConeProblem {
        psd_dim: 2 * mn,
        aux_dim: 1,
        obj_mat: DMatrix::zeros(2 * mn, 2 * mn),
        obj_lin: nalgebra::DVector::from_element(1, 1.0),
        constraints,
    };
    let eng = ipm::solve(&engine_problem, tol)?;
    finish_report(problem, eng, true)
}

fn zero_report(problem: &SdpProblem, num_objective_slacks: usize) -> SolveReport {
    SolveReport {
        status: SolveStatus::Optimal,
        objective: 0.0,
        duality_gap: 0.0,
        iterations: 0,
        solution: HermitianCovariance::zero(problem.dimension),
        constraint_slacks: problem.constraints.iter().map(|c| c.bound).collect(),
        objective_slacks: vec![0.0; num_objective_slacks],
        history: Vec::new(),
    }
}

fn finish_report(
    problem: &SdpProblem,
    eng: ipm::EngineResult,
    maxmin: bool,
) -> Result<SolveReport> {
    let c = unembed_real(&eng.x);
    let solution = HermitianCovariance::new(c)?;
    // Undo the factor-2 trace distortion of the embedding.
    let objective = 0.5 * eng.objective;
    let mut constraint_slacks = Vec::with_capacity(problem.constraints.len());
    let mut objective_slacks = Vec::new();
    for con in &problem.constraints {
        constraint_slacks.push(con.bound - trace_product(&con.matrix, solution.matrix()));
    }
    if maxmin {
        for obj in &problem.objectives {
            let power = obj.weight * trace_product(&obj.matrix, solution.matrix());
            objective_slacks.push(power - objective);
        }
    }
    Ok(SolveReport {
        status: eng.status,
        objective,
        duality_gap: eng.relative_gap,
        iterations: eng.iterations,
        solution,
        constraint_slacks,
        objective_slacks,
        history: eng.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cdiag(values: &[f64]) -> DMatrix<Complex64> {
        DMatrix::from_fn(values.len(), values.len(), |i, j| {
            if i == j {
                c(values[i], 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
    }

    fn trace_constraint(n: usize, bound: f64) -> SdpConstraint {
        SdpConstraint {
            matrix: DMatrix::identity(n, n),
            bound,
        }
    }

    pub(crate) fn random_hermitian(rng: &mut StdRng, n: usize) -> DMatrix<Complex64> {
        let raw = DMatrix::from_fn(n, n, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        hermitian_part(&raw)
    }

    pub(crate) fn random_psd(rng: &mut StdRng, n: usize) -> DMatrix<Complex64> {
        let raw = DMatrix::from_fn(n, n, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        hermitian_part(&(&raw * raw.adjoint()))
    }

    #[test]
    fn embed_identity() {
        let h = DMatrix::identity(3, 3);
        assert_eq!(embed_real(&h), DMatrix::<f64>::identity(6, 6));
    }

    #[test]
    fn embed_antisymmetric_imaginary_example() {
        let h = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let e = embed_real(&h);
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 0.0, 0.0, 1.0, //
                0.0, 0.0, -1.0, 0.0, //
                0.0, -1.0, 0.0, 0.0, //
                1.0, 0.0, 0.0, 0.0,
            ],
        );
        assert_eq!(e, expected);
        let mut eig = e.symmetric_eigenvalues().as_slice().to_vec();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in eig.iter().zip(&[-1.0, -1.0, 1.0, 1.0]) {
            assert_relative_eq!(got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn embed_doubles_eigenvalues_multiplicity() {
        let mut rng = StdRng::seed_from_u64(5);
        let h = random_hermitian(&mut rng, 4);
        let (hvals, _) = hermitian_eigen(&h);
        let mut evals = embed_real(&h).symmetric_eigenvalues().as_slice().to_vec();
        evals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for k in 0..4 {
            assert_relative_eq!(evals[2 * k], hvals[k], epsilon = 1e-10);
            assert_relative_eq!(evals[2 * k + 1], hvals[k], epsilon = 1e-10);
        }
    }

    #[test]
    fn embed_trace_pairing_factor_two() {
        let mut rng = StdRng::seed_from_u64(6);
        for _ in 0..10 {
            let f = random_hermitian(&mut rng, 3);
            let g = random_hermitian(&mut rng, 3);
            let direct = trace_product(&f, &g);
            let embedded = crate::linalg::frob_inner(&embed_real(&f), &embed_real(&g));
            assert_relative_eq!(embedded, 2.0 * direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn unembed_inverts_embed() {
        let mut rng = StdRng::seed_from_u64(7);
        let h = random_hermitian(&mut rng, 5);
        let back = unembed_real(&embed_real(&h));
        assert!((back - h).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn solve_max_trace_objective_saturates_budget() {
        // F = I: any direction works, objective equals the trace bound.
        let n = 3;
        let problem = SdpProblem::new(
            n,
            vec![WeightedObjective::unit(DMatrix::identity(n, n))],
            vec![trace_constraint(n, 2.5)],
        )
        .unwrap();
        let report = solve_max(&problem, &Tolerances::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert_relative_eq!(report.objective, 2.5, epsilon = 1e-6);
        assert!(report.solution.power() <= 2.5 + 1e-6);
    }

    #[test]
    fn solve_max_diagonal_two_by_two_matches_brute_force() {
        // Brute-force oracle over C = diag(p, 1 - p).
        let problem = SdpProblem::new(
            2,
            vec![WeightedObjective::unit(cdiag(&[2.0, 1.0]))],
            vec![trace_constraint(2, 1.0)],
        )
        .unwrap();
        let mut best = f64::NEG_INFINITY;
        let mut best_p = 0.0;
        for k in 0..=1000 {
            let p = k as f64 / 1000.0;
            let value = 2.0 * p + (1.0 - p);
            if value > best {
                best = value;
                best_p = p;
            }
        }
        assert_relative_eq!(best, 2.0, epsilon = 1e-12);
        assert_relative_eq!(best_p, 1.0, epsilon = 1e-12);

        let report = solve_max(&problem, &Tolerances::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert_relative_eq!(report.objective, best, epsilon = 1e-6);
        let sol = report.solution.matrix();
        assert_relative_eq!(sol[(0, 0)].re, 1.0, epsilon = 1e-5);
        assert!(sol[(1, 1)].re.abs() < 1e-5);
    }

    #[test]
    fn solve_max_zero_objective_returns_zero() {
        let problem = SdpProblem::new(
            2,
            vec![WeightedObjective::unit(DMatrix::zeros(2, 2))],
            vec![trace_constraint(2, 1.0)],
        )
        .unwrap();
        let report = solve_max(&problem, &Tolerances::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert_eq!(report.objective, 0.0);
        assert_eq!(report.solution.power(), 0.0);
    }

    #[test]
    fn solve_max_matches_eigenvalue_bound_on_random_instances() {
        // For a single PSD objective under one trace bound the optimum is
        // P * lambda_max(F); the eigensolver is the oracle.
        let mut rng = StdRng::seed_from_u64(11);
        for trial in 0..8 {
            let n = rng.gen_range(2..5);
            let f = random_psd(&mut rng, n);
            let p = rng.gen_range(0.25..4.0);
            let problem = SdpProblem::new(
                n,
                vec![WeightedObjective::unit(f.clone())],
                vec![trace_constraint(n, p)],
            )
            .unwrap();
            let report = solve_max(&problem, &Tolerances::default()).unwrap();
            let (vals, _) = hermitian_eigen(&f);
            let expected = p * vals[n - 1];
            assert_eq!(report.status, SolveStatus::Optimal, "trial {trial}");
            assert!(
                (report.objective - expected).abs() <= 1e-6 * expected.abs().max(1e-12),
                "trial {trial}: {} vs {}",
                report.objective,
                expected
            );
        }
    }

    #[test]
    fn solve_max_objective_monotone_in_power_budget() {
        let mut rng = StdRng::seed_from_u64(13);
        let f = random_psd(&mut rng, 3);
        let solve_at = |p: f64| {
            let problem = SdpProblem::new(
                3,
                vec![WeightedObjective::unit(f.clone())],
                vec![trace_constraint(3, p)],
            )
            .unwrap();
            solve_max(&problem, &Tolerances::default()).unwrap().objective
        };
        let at_one = solve_at(1.0);
        let at_two = solve_at(2.0);
        assert!(at_two >= at_one - 1e-9);
        assert_relative_eq!(at_two, 2.0 * at_one, epsilon = 1e-5);
    }

    #[test]
    fn solve_max_respects_extra_constraints() {
        // Suppress the dominant direction with a second constraint.
        let f = cdiag(&[3.0, 1.0]);
        let suppress = SdpConstraint {
            matrix: cdiag(&[1.0, 0.0]),
            bound: 0.1,
        };
        let problem = SdpProblem::new(
            2,
            vec![WeightedObjective::unit(f)],
            vec![trace_constraint(2, 1.0), suppress],
        )
        .unwrap();
        let report = solve_max(&problem, &Tolerances::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        // Best split: 0.1 power on direction 1 (gain 3), 0.9 on direction 2.
        assert_relative_eq!(report.objective, 3.0 * 0.1 + 0.9, epsilon = 1e-5);
        for slack in &report.constraint_slacks {
            assert!(*slack >= -1e-8);
        }
    }

    #[test]
    fn solve_maxmin_identical_objectives_reduces_to_max() {
        let mut rng = StdRng::seed_from_u64(17);
        let f = random_psd(&mut rng, 3);
        let problem_min = SdpProblem::new(
            3,
            vec![
                WeightedObjective::unit(f.clone()),
                WeightedObjective::unit(f.clone()),
                WeightedObjective::unit(f.clone()),
            ],
            vec![trace_constraint(3, 1.0)],
        )
        .unwrap();
        let problem_max = SdpProblem::new(
            3,
            vec![WeightedObjective::unit(f)],
            vec![trace_constraint(3, 1.0)],
        )
        .unwrap();
        let r_min = solve_maxmin(&problem_min, &Tolerances::default()).unwrap();
        let r_max = solve_max(&problem_max, &Tolerances::default()).unwrap();
        assert_eq!(r_min.status, SolveStatus::Optimal);
        assert!(
            (r_min.objective - r_max.objective).abs() <= 1e-6 * r_max.objective.abs().max(1e-9)
        );
    }

    #[test]
    fn solve_maxmin_orthogonal_pair_splits_power() {
        // Brute-force oracle over diagonal C = diag(p, 1 - p): the min of
        // (p, 1-p) peaks at p = 1/2 with value 1/2.
        let problem = SdpProblem::new(
            2,
            vec![
                WeightedObjective::unit(cdiag(&[1.0, 0.0])),
                WeightedObjective::unit(cdiag(&[0.0, 1.0])),
            ],
            vec![trace_constraint(2, 1.0)],
        )
        .unwrap();
        let mut best = f64::NEG_INFINITY;
        for k in 0..=1000 {
            let p = k as f64 / 1000.0;
            best = best.max(p.min(1.0 - p));
        }
        assert_relative_eq!(best, 0.5, epsilon = 1e-3);

        let report = solve_maxmin(&problem, &Tolerances::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert_relative_eq!(report.objective, 0.5, epsilon = 1e-6);
        let sol = report.solution.matrix();
        assert_relative_eq!(sol[(0, 0)].re, 0.5, epsilon = 1e-5);
        assert_relative_eq!(sol[(1, 1)].re, 0.5, epsilon = 1e-5);
    }

    #[test]
    fn solve_maxmin_level_below_every_objective() {
        let mut rng = StdRng::seed_from_u64(19);
        for _ in 0..5 {
            let n = rng.gen_range(2..4);
            let objectives: Vec<WeightedObjective> = (0..rng.gen_range(2..4))
                .map(|_| WeightedObjective::unit(random_psd(&mut rng, n)))
                .collect();
            let problem =
                SdpProblem::new(n, objectives, vec![trace_constraint(n, 1.0)]).unwrap();
            let report = solve_maxmin(&problem, &Tolerances::default()).unwrap();
            for slack in &report.objective_slacks {
                assert!(*slack >= -1e-8, "objective slack {slack} negative");
            }
        }
    }

    #[test]
    fn weak_duality_holds_at_every_iterate() {
        let mut rng = StdRng::seed_from_u64(23);
        let f = random_psd(&mut rng, 3);
        let problem = SdpProblem::new(
            3,
            vec![WeightedObjective::unit(f)],
            vec![trace_constraint(3, 1.0)],
        )
        .unwrap();
        let report = solve_max(&problem, &Tolerances::default()).unwrap();
        assert!(!report.history.is_empty());
        for stats in &report.history {
            let scale = stats.primal_objective.abs().max(stats.dual_objective.abs()).max(1.0);
            assert!(
                stats.primal_objective <= stats.dual_objective + 1e-12 * scale,
                "weak duality violated: {} > {}",
                stats.primal_objective,
                stats.dual_objective
            );
        }
    }

    #[test]
    fn solution_is_exactly_hermitian() {
        let mut rng = StdRng::seed_from_u64(29);
        let f = random_psd(&mut rng, 3);
        let problem = SdpProblem::new(
            3,
            vec![WeightedObjective::unit(f)],
            vec![trace_constraint(3, 1.0)],
        )
        .unwrap();
        let report = solve_max(&problem, &Tolerances::default()).unwrap();
        let c = report.solution.matrix();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(c[(i, j)], c[(j, i)].conj());
            }
        }
    }

    #[test]
    fn problem_validation_rejects_bad_input() {
        // Non-Hermitian objective.
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(SdpProblem::new(
            2,
            vec![WeightedObjective::unit(m)],
            vec![trace_constraint(2, 1.0)]
        )
        .is_err());
        // No compact constraint.
        assert!(SdpProblem::new(
            2,
            vec![WeightedObjective::unit(DMatrix::identity(2, 2))],
            vec![SdpConstraint {
                matrix: cdiag(&[1.0, 0.0]),
                bound: 1.0
            }]
        )
        .is_err());
        // Negative bound.
        assert!(SdpProblem::new(
            2,
            vec![WeightedObjective::unit(DMatrix::identity(2, 2))],
            vec![trace_constraint(2, -1.0)]
        )
        .is_err());
    }

    #[test]
    fn covariance_constructor_enforces_invariants() {
        let ok = HermitianCovariance::new(cdiag(&[1.0, 0.5])).unwrap();
        assert_relative_eq!(ok.power(), 1.5, epsilon = 1e-14);
        assert!(HermitianCovariance::new(cdiag(&[1.0, -0.5])).is_err());
        let mut non_herm = DMatrix::zeros(2, 2);
        non_herm[(0, 1)] = c(1.0, 0.0);
        assert!(HermitianCovariance::new(non_herm).is_err());
    }
}
