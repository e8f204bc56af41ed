//! Damped Newton solver for the truncated range equation at fixed (ε, c),
//! plus sequential continuation in ε.
//!
//! Each Newton step solves J δ = −R with J δ = D δ + K δ, where
//! D_ν = iω·ν(1 + iεω·ν) + ε g′(c) is diagonal and K δ = ε[(g′(c+X) − g′(c)) δ]
//! is the convolution part. The linear system is solved by fixed-point
//! iteration preconditioned with D.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{compose_polynomial_with, product_with, FourierSeries, TaylorPolynomial};
use crate::index::MultiIndex;
use crate::model::{operator_symbol, range_residual, Problem};

/// Symmetry defect tolerated on an iterate before it is rejected.
const SYMMETRY_TOL: f64 = 1e-12;

/// A solution X(·; ε, c) of the range equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseSolution {
    pub eps: f64,
    pub c: f64,
    pub x: FourierSeries,
    /// Σ_ν |R_ν| at the returned iterate.
    pub residual_norm: f64,
    /// min |ω·ν| over the active modes of X and f.
    pub min_divisor: f64,
    pub iterations: usize,
    /// Set when |D_ν| < |ω·ν|/2 on some active mode.
    pub near_singular: bool,
}

/// The JSON sidecar written next to a solution CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub eps: f64,
    pub c: f64,
    pub residual: f64,
    pub min_divisor: f64,
    pub iterations: usize,
}

impl ResponseSolution {
    pub fn summary(&self) -> SolutionSummary {
        SolutionSummary {
            eps: self.eps,
            c: self.c,
            residual: self.residual_norm,
            min_divisor: self.min_divisor,
            iterations: self.iterations,
        }
    }

    /// x(t) = c + X(ωt).
    pub fn position(&self, omega: &[f64], t: f64) -> f64 {
        let psi: Vec<f64> = omega.iter().map(|w| w * t).collect();
        self.c + self.x.evaluate(&psi).re
    }

    /// ẋ(t) = Σ_ν iω·ν X_ν e^{iν·ωt}.
    pub fn velocity(&self, omega: &[f64], t: f64) -> f64 {
        let psi: Vec<f64> = omega.iter().map(|w| w * t).collect();
        self.x
            .iter()
            .map(|(nu, c)| {
                Complex64::new(0.0, nu.dot(omega)) * c * Complex64::from_polar(1.0, nu.dot(&psi))
            })
            .sum::<Complex64>()
            .re
    }
}

/// Solves the range equation with the tolerances stored in `p.settings`.
pub fn solve_range(
    p: &Problem,
    eps: f64,
    c: f64,
    x0: Option<&FourierSeries>,
) -> Result<ResponseSolution> {
    solve_range_with(p, eps, c, x0, p.settings.tol, p.settings.max_iter)
}

pub fn solve_range_with(
    p: &Problem,
    eps: f64,
    c: f64,
    x0: Option<&FourierSeries>,
    tol: f64,
    max_iter: usize,
) -> Result<ResponseSolution> {
    let s = &p.settings;
    if !eps.is_finite() || eps.abs() > s.eps_cap {
        return Err(Error::Precondition(format!(
            "|eps| = {} exceeds the solver cap {}",
            eps.abs(),
            s.eps_cap
        )));
    }
    let zero = MultiIndex::zero(p.dim());
    let mut x = match x0 {
        Some(x0) => x0.retruncated(p.trunc),
        None => p.zero_series(),
    };
    x.remove(&zero);
    x.symmetrize();

    let g1 = p.taylor(c).coeff(1);
    let dg = TaylorPolynomial::at(&p.g.derivative(), c);
    let diag = |nu: &MultiIndex| -> Result<Complex64> {
        let w = p.omega.divisor(nu);
        if w == 0.0 {
            return Err(Error::ZeroDivisor {
                nu: nu.components().to_vec(),
            });
        }
        Ok(operator_symbol(w, eps) + eps * g1)
    };

    let mut residual = range_residual(p, &x, c, eps)?;
    let mut rnorm = residual.weighted_norm(0.0);
    let mut history = vec![rnorm];
    let mut iterations = 0;

    while rnorm > tol {
        if iterations >= max_iter {
            return Err(Error::NoConvergence {
                iterations,
                residual: rnorm,
            });
        }
        iterations += 1;

        // off-diagonal multiplier ε(g′(c+X) − g′(c))
        let mut h = compose_polynomial_with(&dg, &x, p.trunc, s.drop_tol)?.add_constant(-g1);
        h = h.scale_real(eps);
        let delta = linear_solve(
            p,
            &residual,
            &h,
            &diag,
            s.linear_tol_factor * tol,
            s.linear_max_iter,
        )?;

        let mut step = 1.0;
        let mut candidate;
        let mut cand_res;
        let mut cand_norm;
        let mut halvings = 0;
        loop {
            candidate = x.add(&delta.scale_real(step))?;
            candidate.remove(&zero);
            cand_res = range_residual(p, &candidate, c, eps)?;
            cand_norm = cand_res.weighted_norm(0.0);
            if cand_norm <= rnorm || halvings >= s.max_halvings {
                break;
            }
            step *= 0.5;
            halvings += 1;
        }

        let defect = candidate.symmetry_defect();
        if defect > SYMMETRY_TOL * candidate.max_abs().max(1.0) {
            return Err(Error::SymmetryViolation(format!(
                "Newton iterate {iterations} has defect {defect:e}"
            )));
        }
        candidate.symmetrize();
        x = candidate;
        residual = cand_res;
        rnorm = cand_norm;
        history.push(rnorm);

        let n = history.len();
        if n >= 4 {
            let w = &history[n - 4..];
            let rising = w.windows(2).all(|p| p[1] > p[0]);
            if rising && w[3] > 10.0 * w[0] {
                return Err(Error::Divergence {
                    iteration: iterations,
                    residual: rnorm,
                });
            }
        }
        if !rnorm.is_finite() {
            return Err(Error::Divergence {
                iteration: iterations,
                residual: rnorm,
            });
        }
    }

    let mut min_divisor = f64::INFINITY;
    let mut near_singular = false;
    for nu in x.modes().chain(p.f.modes()).filter(|nu| !nu.is_zero()) {
        let w = p.omega.divisor(nu).abs();
        min_divisor = min_divisor.min(w);
        if diag(nu)?.norm() < 0.5 * w {
            near_singular = true;
        }
    }
    if near_singular {
        log::warn!("diagonal |D_nu| < |omega.nu|/2 on an active mode (eps = {eps}, c = {c})");
    }

    Ok(ResponseSolution {
        eps,
        c,
        x,
        residual_norm: rnorm,
        min_divisor,
        iterations,
        near_singular,
    })
}

/// Solves D δ + [h δ]_{ν≠0} = −R by preconditioned fixed-point iteration.
fn linear_solve<F>(
    p: &Problem,
    rhs: &FourierSeries,
    h: &FourierSeries,
    diag: &F,
    tol: f64,
    max_iter: usize,
) -> Result<FourierSeries>
where
    F: Fn(&MultiIndex) -> Result<Complex64>,
{
    let zero = MultiIndex::zero(p.dim());
    let precondition = |r: &FourierSeries| -> Result<FourierSeries> {
        let mut out = p.zero_series();
        for (nu, v) in r.iter() {
            if nu.is_zero() {
                continue;
            }
            out.set(nu.clone(), -v / diag(nu)?)?;
        }
        Ok(out)
    };
    let apply = |delta: &FourierSeries| -> Result<FourierSeries> {
        // residual of the linear system: R + Dδ + [hδ]
        let mut out = rhs.clone();
        let conv = product_with(h, delta, p.trunc, p.settings.drop_tol)?;
        for (nu, v) in delta.iter() {
            out.add_to(nu.clone(), diag(nu)? * v)?;
        }
        for (nu, v) in conv.iter() {
            out.add_to(nu.clone(), *v)?;
        }
        out.remove(&zero);
        Ok(out)
    };

    let mut delta = precondition(rhs)?;
    if h.is_empty() {
        return Ok(delta);
    }
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..max_iter {
        let lin = apply(&delta)?;
        let norm = lin.weighted_norm(0.0);
        if norm <= tol {
            break;
        }
        if norm < 0.9 * best {
            best = norm;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 5 {
                break;
            }
        }
        let corr = precondition(&lin)?;
        delta = delta.add(&corr)?;
    }
    delta.symmetrize();
    Ok(delta)
}

/// Solutions along an ascending ε grid, warm-started from the previous one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationReport {
    pub solutions: Vec<ResponseSolution>,
    pub failures: Vec<(f64, String)>,
}

pub fn continue_in_epsilon(p: &Problem, eps_grid: &[f64], c: f64) -> ContinuationReport {
    let mut solutions: Vec<ResponseSolution> = Vec::new();
    let mut failures = Vec::new();
    for &eps in eps_grid {
        if let Some(last) = solutions.last() {
            if eps <= last.eps {
                failures.push((eps, "grid not strictly ascending".to_string()));
                continue;
            }
        }
        let warm = solutions.last().map(|s| &s.x);
        match solve_range(p, eps, c, warm) {
            Ok(sol) => solutions.push(sol),
            Err(e) => failures.push((eps, e.to_string())),
        }
    }
    ContinuationReport {
        solutions,
        failures,
    }
}
