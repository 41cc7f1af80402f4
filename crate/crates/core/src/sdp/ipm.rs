//! Primal-dual path-following engine on the real symmetric cone.
//!
//! Solves, over a PSD block X and a nonnegative auxiliary vector u,
//!
//! ```text
//! max  <F, X> + f'u
//! s.t. <G_i, X> + g_i'u + s_i = b_i,   s_i >= 0,  i = 1..m
//!      X PSD, u >= 0
//! ```
//!
//! using Nesterov-Todd scaling with a Mehrotra predictor-corrector. Every
//! search direction reduces to an m x m Schur complement solve, which keeps
//! the per-iteration cost at a few dense matrix products of the PSD block
//! size. Both primal and dual are started strictly feasible whenever the
//! data admits it, so weak duality holds along the whole iterate sequence.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frob_inner, symmetric_part};
use crate::sdp::{SolveStatus, Tolerances};

/// One inequality `<mat, X> + lin'u <= bound`.
pub(crate) struct ConeConstraint {
    pub mat: DMatrix<f64>,
    pub lin: DVector<f64>,
    pub bound: f64,
}

/// The engine-level problem in real symmetric form.
pub(crate) struct ConeProblem {
    pub psd_dim: usize,
    pub aux_dim: usize,
    pub obj_mat: DMatrix<f64>,
    pub obj_lin: DVector<f64>,
    pub constraints: Vec<ConeConstraint>,
}

/// Convergence trace entry, in the caller's (complex-space) units.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IterationStats {
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Complementarity inner product; nonnegative by construction.
    pub gap: f64,
    pub relative_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
}

pub(crate) struct EngineResult {
    pub status: SolveStatus,
    pub x: DMatrix<f64>,
    #[allow(dead_code)]
    pub aux: DVector<f64>,
    pub objective: f64,
    pub relative_gap: f64,
    pub iterations: usize,
    pub history: Vec<IterationStats>,
}

#[derive(Clone)]
struct State {
    x: DMatrix<f64>,
    u: DVector<f64>,
    s: DVector<f64>,
    y: DVector<f64>,
    big_s: DMatrix<f64>,
    w: DVector<f64>,
}

struct Direction {
    dx: DMatrix<f64>,
    du: DVector<f64>,
    ds: DVector<f64>,
    dy: DVector<f64>,
    dbig_s: DMatrix<f64>,
    dw: DVector<f64>,
    dx_hat: DMatrix<f64>,
    dbig_s_hat: DMatrix<f64>,
}

/// Fraction of the distance to the cone boundary taken per update.
const STEP_FRACTION: f64 = 0.98;

pub(crate) fn solve(problem: &ConeProblem, tol: &Tolerances) -> Result<EngineResult> {
    let n = problem.psd_dim;
    let p = problem.aux_dim;
    let m = problem.constraints.len();
    let nu = (n + p + m) as f64;

    let scale_b = problem
        .constraints
        .iter()
        .map(|c| c.bound.abs())
        .fold(1.0, f64::max);
    let scale_c = problem
        .obj_mat
        .iter()
        .map(|v| v.abs())
        .chain(problem.obj_lin.iter().map(|v| v.abs()))
        .fold(1.0, f64::max);

    let mut state = initialize(problem)?;
    let mut history = Vec::new();
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    let mut best_score = f64::INFINITY;
    let mut best_state: Option<(State, IterationStats)> = None;
    let mut last_improvement = 0usize;

    for iter in 0..tol.max_iterations {
        iterations = iter;

        // Slacks are determined by the inequality residuals: snap them back
        // whenever that keeps them strictly positive, so float drift in the
        // equality system never accumulates across iterations.
        let applied = apply_constraints(problem, &state.x, &state.u);
        for i in 0..m {
            let candidate = problem.constraints[i].bound - applied[i];
            if candidate > 0.0 {
                state.s[i] = candidate;
            }
        }
        let r_p = DVector::from_fn(m, |i, _| {
            problem.constraints[i].bound - applied[i] - state.s[i]
        });
        let mut r_d = -&problem.obj_mat - &state.big_s;
        for (i, con) in problem.constraints.iter().enumerate() {
            r_d += con.mat.scale(state.y[i]);
        }
        let mut r_du = -&problem.obj_lin - &state.w;
        for (i, con) in problem.constraints.iter().enumerate() {
            r_du += con.lin.scale(state.y[i]);
        }

        let gap = frob_inner(&state.x, &state.big_s)
            + state.u.dot(&state.w)
            + state.s.dot(&state.y);
        let mu = gap / nu;

        let pobj = frob_inner(&problem.obj_mat, &state.x) + problem.obj_lin.dot(&state.u);
        let dobj: f64 = problem
            .constraints
            .iter()
            .zip(state.y.iter())
            .map(|(c, yi)| c.bound * yi)
            .sum();
        let obj_scale = pobj.abs().max(dobj.abs()).max(1.0);
        let relative_gap = gap / obj_scale;
        let pinf = r_p.amax() / scale_b;
        let dinf = r_d
            .iter()
            .map(|v| v.abs())
            .chain(r_du.iter().map(|v| v.abs()))
            .fold(0.0, f64::max)
            / scale_c;

        let stats = IterationStats {
            primal_objective: pobj,
            dual_objective: dobj,
            gap,
            relative_gap,
            primal_infeasibility: pinf,
            dual_infeasibility: dinf,
        };
        history.push(stats);

        if relative_gap <= tol.gap && pinf <= tol.feasibility && dinf <= 100.0 * tol.feasibility {
            status = SolveStatus::Optimal;
            break;
        }

        let score = relative_gap.abs().max(pinf).max(dinf);
        if score < 0.9 * best_score {
            best_score = score;
            best_state = Some((state.clone(), stats));
            last_improvement = iter;
        } else if iter - last_improvement > 30 {
            // No progress on gap or feasibility for a long stretch.
            break;
        }

        // Nesterov-Todd scaling point.
        let Some(chol_x) = cholesky_with_retry(&state.x) else {
            break;
        };
        let Some(chol_s) = cholesky_with_retry(&state.big_s) else {
            break;
        };
        let lx = chol_x.l();
        let ls = chol_s.l();
        let svd = (ls.transpose() * &lx).svd(true, true);
        let (Some(svd_u), Some(svd_vt)) = (svd.u.as_ref(), svd.v_t.as_ref()) else {
            break;
        };
        let gamma: DVector<f64> = svd.singular_values.map(|v| v.max(1e-300));
        let inv_sqrt = DVector::from_fn(n, |i, _| 1.0 / gamma[i].sqrt());
        // W = R R' with R = Lx V Gamma^(-1/2); R^{-1} = Gamma^(-1/2) U' Ls'.
        let mut r_mat = &lx * svd_vt.transpose();
        for j in 0..n {
            r_mat.column_mut(j).scale_mut(inv_sqrt[j]);
        }
        let mut r_inv = svd_u.transpose() * ls.transpose();
        for i in 0..n {
            r_inv.row_mut(i).scale_mut(inv_sqrt[i]);
        }

        let d2u = DVector::from_fn(p, |k, _| state.u[k] / state.w[k]);
        let d2s = DVector::from_fn(m, |i, _| state.s[i] / state.y[i]);

        // Schur complement M_ij = <P_i, P_j> + g_i' D_u g_j + delta_ij D_s,i.
        let p_mats: Vec<DMatrix<f64>> = problem
            .constraints
            .iter()
            .map(|c| symmetric_part(&(r_mat.transpose() * &c.mat * &r_mat)))
            .collect();
        let mut schur = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let mut v = frob_inner(&p_mats[i], &p_mats[j]);
                for k in 0..p {
                    v += d2u[k] * problem.constraints[i].lin[k] * problem.constraints[j].lin[k];
                }
                if i == j {
                    v += d2s[i];
                }
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        let Some(schur_chol) = cholesky_with_retry(&schur) else {
            break;
        };
        // Iterative refinement keeps the equality residuals from leaking
        // into the iterates when the Schur complement is ill-conditioned
        // near a degenerate optimum.
        let refined_solve = |rhs: &DVector<f64>| -> DVector<f64> {
            let mut sol = schur_chol.solve(rhs);
            for _ in 0..2 {
                let resid = rhs - &schur * &sol;
                sol += schur_chol.solve(&resid);
            }
            sol
        };

        let r_d_hat = symmetric_part(&(r_mat.transpose() * &r_d * &r_mat));

        let solve_direction = |c_hat: &DMatrix<f64>,
                               r_cu: &DVector<f64>,
                               r_cs: &DVector<f64>|
         -> Direction {
            let mut rhs = DVector::zeros(m);
            for i in 0..m {
                let mut v = frob_inner(&p_mats[i], c_hat) - frob_inner(&p_mats[i], &r_d_hat);
                for k in 0..p {
                    v += problem.constraints[i].lin[k] * (r_cu[k] - d2u[k] * r_du[k]);
                }
                v += r_cs[i];
                v -= r_p[i];
                rhs[i] = v;
            }
            let dy = refined_solve(&rhs);
            let mut dbig_s = r_d.clone();
            for (i, con) in problem.constraints.iter().enumerate() {
                dbig_s += con.mat.scale(dy[i]);
            }
            let dbig_s = symmetric_part(&dbig_s);
            let dbig_s_hat = symmetric_part(&(r_mat.transpose() * &dbig_s * &r_mat));
            let dx_hat = c_hat - &dbig_s_hat;
            let dx = symmetric_part(&(&r_mat * &dx_hat * r_mat.transpose()));
            let mut dw = r_du.clone();
            for (i, con) in problem.constraints.iter().enumerate() {
                dw += con.lin.scale(dy[i]);
            }
            let du = DVector::from_fn(p, |k, _| r_cu[k] - d2u[k] * dw[k]);
            let ds = DVector::from_fn(m, |i, _| r_cs[i] - d2s[i] * dy[i]);
            Direction {
                dx,
                du,
                ds,
                dy,
                dbig_s,
                dw,
                dx_hat,
                dbig_s_hat,
            }
        };

        // Predictor (affine scaling) direction.
        let c_hat_aff = DMatrix::from_fn(n, n, |i, j| if i == j { -gamma[i] } else { 0.0 });
        let r_cu_aff = -&state.u;
        let r_cs_aff = -&state.s;
        let aff = solve_direction(&c_hat_aff, &r_cu_aff, &r_cs_aff);

        let alpha_p_aff = primal_max_step(&state, &aff, &chol_x).min(1.0);
        let alpha_d_aff = dual_max_step(&state, &aff, &chol_s).min(1.0);
        let mu_aff = (frob_inner(
            &(&state.x + aff.dx.scale(alpha_p_aff)),
            &(&state.big_s + aff.dbig_s.scale(alpha_d_aff)),
        ) + (&state.u + aff.du.scale(alpha_p_aff)).dot(&(&state.w + aff.dw.scale(alpha_d_aff)))
            + (&state.s + aff.ds.scale(alpha_p_aff)).dot(&(&state.y + aff.dy.scale(alpha_d_aff))))
            / nu;
        let sigma = (mu_aff / mu).powi(3).clamp(1e-10, 1.0 - 1e-12);

        // Corrector: second-order term evaluated in the scaled space.
        let cross = symmetric_part(&(&aff.dx_hat * &aff.dbig_s_hat));
        let mut c_hat = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { sigma * mu - gamma[i] * gamma[i] } else { 0.0 };
                c_hat[(i, j)] = 2.0 * (target - cross[(i, j)]) / (gamma[i] + gamma[j]);
            }
        }
        let r_cu = DVector::from_fn(p, |k, _| {
            (sigma * mu - state.u[k] * state.w[k] - aff.du[k] * aff.dw[k]) / state.w[k]
                - state.u[k]
        });
        let r_cs = DVector::from_fn(m, |i, _| {
            (sigma * mu - state.s[i] * state.y[i] - aff.ds[i] * aff.dy[i]) / state.y[i]
                - state.s[i]
        });
        let dir = solve_direction(&c_hat, &r_cu, &r_cs);

        let alpha_p = (STEP_FRACTION * primal_max_step(&state, &dir, &chol_x)).min(1.0);
        let alpha_d = (STEP_FRACTION * dual_max_step(&state, &dir, &chol_s)).min(1.0);

        state.x = symmetric_part(&(&state.x + dir.dx.scale(alpha_p)));
        state.u += dir.du.scale(alpha_p);
        state.s += dir.ds.scale(alpha_p);
        state.y += dir.dy.scale(alpha_d);
        state.big_s = symmetric_part(&(&state.big_s + dir.dbig_s.scale(alpha_d)));
        state.w += dir.dw.scale(alpha_d);

        if state.x.iter().any(|v| !v.is_finite())
            || state.big_s.iter().any(|v| !v.is_finite())
        {
            return Err(Error::SolverFailure(
                "interior-point iterate became non-finite".to_string(),
            ));
        }
    }

    let mut last = history.last().copied().unwrap_or(IterationStats {
        primal_objective: 0.0,
        dual_objective: 0.0,
        gap: 0.0,
        relative_gap: 0.0,
        primal_infeasibility: 0.0,
        dual_infeasibility: 0.0,
    });
    if status != SolveStatus::Optimal {
        // Fall back to the best iterate seen.
        if let Some((snapshot, stats)) = best_state {
            if stats.relative_gap.abs().max(stats.primal_infeasibility)
                < last.relative_gap.abs().max(last.primal_infeasibility)
            {
                state = snapshot;
                last = stats;
            }
        }
        if last.primal_infeasibility > 100.0 * tol.feasibility && last.gap <= tol.gap * scale_b {
            // Complementarity collapsed without restoring feasibility: no
            // strictly feasible point within tolerance exists.
            status = SolveStatus::Infeasible;
        }
    }

    let pobj = frob_inner(&problem.obj_mat, &state.x) + problem.obj_lin.dot(&state.u);
    Ok(EngineResult {
        status,
        x: state.x,
        aux: state.u,
        objective: pobj,
        relative_gap: last.relative_gap,
        iterations: iterations + 1,
        history,
    })
}

fn apply_constraints(problem: &ConeProblem, x: &DMatrix<f64>, u: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(problem.constraints.len(), |i, _| {
        let con = &problem.constraints[i];
        frob_inner(&con.mat, x) + con.lin.dot(u)
    })
}

/// Strictly feasible primal and dual starting point for the trace-bounded
/// family. The primal follows the scaled-identity rule; the dual weights
/// non-PSD constraint matrices down until the dual slack is positive
/// definite. If the data defeats the construction, the point is clamped
/// into the cone and the residual terms absorb the infeasibility.
fn initialize(problem: &ConeProblem) -> Result<State> {
    let n = problem.psd_dim;
    let p = problem.aux_dim;
    let m = problem.constraints.len();
    if m == 0 {
        return Err(Error::InvalidProblem(
            "engine requires at least one constraint".to_string(),
        ));
    }

    // Primal PSD block: scaled identity sized by the tightest trace-type
    // constraint, then shrunk if any other bound is violated.
    let mut c0 = f64::INFINITY;
    for con in &problem.constraints {
        let tr = con.mat.trace();
        if con.bound > 0.0 && tr > 0.0 {
            c0 = c0.min(con.bound / (2.0 * tr));
        }
    }
    if !c0.is_finite() {
        c0 = 1.0;
    }
    let mut x = DMatrix::identity(n, n) * c0;
    let mut ratio = f64::INFINITY;
    for con in &problem.constraints {
        let q = frob_inner(&con.mat, &x);
        if con.bound > 0.0 && q > 0.0 {
            ratio = ratio.min(con.bound / q);
        }
    }
    if ratio <= 1.0 {
        x *= 0.9 * ratio;
    }

    // Auxiliary nonnegative variables: half the headroom left by x.
    let mut u = DVector::zeros(p);
    for k in 0..p {
        let mut cap = f64::INFINITY;
        for con in &problem.constraints {
            if con.lin[k] > 0.0 {
                cap = cap.min((con.bound - frob_inner(&con.mat, &x)) / con.lin[k]);
            }
        }
        u[k] = if cap.is_finite() && cap > 0.0 { 0.5 * cap } else { 1.0 };
    }

    let applied = apply_constraints(problem, &x, &u);
    let s = DVector::from_fn(m, |i, _| {
        let v = problem.constraints[i].bound - applied[i];
        if v > 0.0 {
            v
        } else {
            1e-3 * problem.constraints[i].bound.abs().max(1.0)
        }
    });

    // Dual: y = alpha on PSD-matrix constraints, alpha * tau on the rest,
    // with tau keeping the weighted sum positive definite and alpha sized
    // so S = sum y_i G_i - F and w = sum y_i g_i - f are strictly positive.
    let psd_like: Vec<bool> = problem
        .constraints
        .iter()
        .map(|con| {
            let eigs = con.mat.clone().symmetric_eigenvalues();
            let max = eigs.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
            eigs.iter().all(|&v| v >= -1e-12 * max.max(1.0))
        })
        .collect();
    let mut sum_a = DMatrix::zeros(n, n);
    let mut sum_b = DMatrix::zeros(n, n);
    for (i, con) in problem.constraints.iter().enumerate() {
        if psd_like[i] {
            sum_a += &con.mat;
        } else {
            sum_b += &con.mat;
        }
    }
    let tau = {
        let has_b = psd_like.iter().any(|v| !v);
        if !has_b {
            1.0
        } else {
            match Cholesky::new(sum_a.clone()) {
                Some(chol) => {
                    let sb_scaled = whiten(&chol, &sum_b);
                    let lam_min = sb_scaled
                        .symmetric_eigenvalues()
                        .iter()
                        .fold(f64::INFINITY, |a, &b| a.min(b));
                    if lam_min >= 0.0 {
                        1.0
                    } else {
                        (0.5 / (-lam_min)).min(1.0)
                    }
                }
                None => 0.0,
            }
        }
    };
    let weights: Vec<f64> = psd_like
        .iter()
        .map(|&a| if a { 1.0 } else { tau })
        .collect();
    let mut t_mat = DMatrix::zeros(n, n);
    let mut t_lin = DVector::zeros(p);
    for (i, con) in problem.constraints.iter().enumerate() {
        t_mat += con.mat.scale(weights[i]);
        t_lin += con.lin.scale(weights[i]);
    }
    let mut alpha: f64 = 1.0;
    if let Some(chol_t) = Cholesky::new(t_mat.clone()) {
        let f_scaled = whiten(&chol_t, &problem.obj_mat);
        let lam_max = f_scaled
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        alpha = alpha.max(2.0 * lam_max.max(0.0) + 1.0);
    }
    for k in 0..p {
        if t_lin[k] > 0.0 {
            alpha = alpha.max(2.0 * problem.obj_lin[k].max(0.0) / t_lin[k] + 1.0 / t_lin[k]);
        }
    }
    let y = DVector::from_fn(m, |i, _| alpha * weights[i]);
    let mut big_s = -problem.obj_mat.clone();
    for (i, con) in problem.constraints.iter().enumerate() {
        big_s += con.mat.scale(y[i]);
    }
    big_s = symmetric_part(&big_s);
    let lam_min = big_s
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    if lam_min <= 0.0 {
        big_s += DMatrix::identity(n, n) * (-lam_min + 1.0);
    }
    let mut w = -problem.obj_lin.clone();
    for (i, con) in problem.constraints.iter().enumerate() {
        w += con.lin.scale(y[i]);
    }
    for k in 0..p {
        if w[k] <= 0.0 {
            w[k] = 1.0;
        }
    }

    Ok(State {
        x,
        u,
        s,
        y,
        big_s,
        w,
    })
}

/// L^{-1} A L^{-T} for the Cholesky factor L of a positive definite base.
fn whiten(chol: &Cholesky<f64, Dyn>, a: &DMatrix<f64>) -> DMatrix<f64> {
    let l = chol.l();
    let step = l
        .solve_lower_triangular(a)
        .expect("Cholesky factor is invertible");
    let full = l
        .solve_lower_triangular(&step.transpose())
        .expect("Cholesky factor is invertible");
    symmetric_part(&full.transpose())
}

fn cholesky_with_retry(mat: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(mat.clone()) {
        return Some(c);
    }
    let n = mat.nrows();
    let scale = mat.diagonal().amax().max(1e-300);
    for jitter in [1e-14, 1e-12, 1e-10] {
        let bumped = mat + DMatrix::identity(n, n) * (jitter * scale);
        if let Some(c) = Cholesky::new(bumped) {
            return Some(c);
        }
    }
    None
}

/// Largest step keeping the PSD block and the linear blocks in the cone.
fn primal_max_step(state: &State, dir: &Direction, chol_x: &Cholesky<f64, Dyn>) -> f64 {
    psd_max_step(chol_x, &dir.dx)
        .min(lp_max_step(&state.u, &dir.du))
        .min(lp_max_step(&state.s, &dir.ds))
}

fn dual_max_step(state: &State, dir: &Direction, chol_s: &Cholesky<f64, Dyn>) -> f64 {
    psd_max_step(chol_s, &dir.dbig_s)
        .min(lp_max_step(&state.w, &dir.dw))
        .min(lp_max_step(&state.y, &dir.dy))
}

fn psd_max_step(chol: &Cholesky<f64, Dyn>, delta: &DMatrix<f64>) -> f64 {
    let scaled = whiten(chol, delta);
    let lam_min = scaled
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    if lam_min >= -1e-300 {
        f64::INFINITY
    } else {
        -1.0 / lam_min
    }
}

fn lp_max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    let mut alpha = f64::INFINITY;
    for (vi, di) in v.iter().zip(dv.iter()) {
        if *di < 0.0 {
            alpha = alpha.min(-vi / di);
        }
    }
    alpha
}
