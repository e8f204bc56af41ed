//! Time-domain integration of ε ẍ + ẋ + ε g(x) = ε f(ωt) as the first-order
//! system ẋ = v, v̇ = −v/ε − g(x) + f(ωt).
//!
//! The default scheme is TR-BDF2 (a trapezoidal stage followed by a BDF2
//! stage, γ = 2 − √2): second order and L-stable, so the fast variable v
//! is damped for any step. Plain trapezoidal is available for h ≤ ε/4.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::float;
use crate::model::Problem;
use crate::poly::Polynomial;
use crate::solver::ResponseSolution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    TrBdf2,
    Trapezoidal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSettings {
    pub scheme: Scheme,
    /// Per-stage Newton tolerance on max(|Δx|, |Δv|).
    pub newton_tol: f64,
    pub max_newton: usize,
    /// |x| above this aborts the run.
    pub blowup: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            scheme: Scheme::TrBdf2,
            newton_tol: 1e-12,
            max_newton: 25,
            blowup: 1e6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub h: f64,
    pub scheme: Scheme,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// CSV `t,x,v`, keeping every `stride`-th sample and the last one.
    pub fn to_csv(&self, stride: usize) -> String {
        let stride = stride.max(1);
        let mut out = String::from("t,x,v\n");
        let last = self.len().saturating_sub(1);
        for i in (0..self.len()).filter(|&i| i % stride == 0 || i == last) {
            out += &format!(
                "{},{},{}\n",
                float(self.t[i]),
                float(self.x[i]),
                float(self.v[i])
            );
        }
        out
    }
}

/// The right-hand side with f pre-split into (ω·ν, f_ν) pairs.
struct System<'a> {
    eps: f64,
    g: &'a Polynomial,
    dg: Polynomial,
    forcing: Vec<(f64, Complex64)>,
}

impl System<'_> {
    fn force(&self, t: f64) -> f64 {
        self.forcing
            .iter()
            .map(|(w, c)| (c * Complex64::from_polar(1.0, w * t)).re)
            .sum()
    }

    fn rhs(&self, t: f64, x: f64, v: f64) -> (f64, f64) {
        (v, -v / self.eps - self.g.eval(x) + self.force(t))
    }

    /// Solves y = a + β F(t, y) by Newton from the guess y0.
    fn implicit(
        &self,
        t: f64,
        a: (f64, f64),
        beta: f64,
        y0: (f64, f64),
        s: &IntegratorSettings,
    ) -> Result<(f64, f64)> {
        let (mut x, mut v) = y0;
        let ft = self.force(t);
        for _ in 0..s.max_newton {
            let r0 = x - a.0 - beta * v;
            let r1 = v - a.1 - beta * (-v / self.eps - self.g.eval(x) + ft);
            // J = I − β [[0, 1], [−g′(x), −1/ε]]
            let (j00, j01) = (1.0, -beta);
            let (j10, j11) = (beta * self.dg.eval(x), 1.0 + beta / self.eps);
            let det = j00 * j11 - j01 * j10;
            if det == 0.0 || !det.is_finite() {
                return Err(Error::StepRejected { t });
            }
            let dx = (r0 * j11 - j01 * r1) / det;
            let dv = (j00 * r1 - j10 * r0) / det;
            x -= dx;
            v -= dv;
            if !x.is_finite() || !v.is_finite() {
                return Err(Error::StepRejected { t });
            }
            if dx.abs().max(dv.abs()) <= s.newton_tol * (1.0 + x.abs().max(v.abs())) {
                return Ok((x, v));
            }
        }
        Err(Error::StepRejected { t })
    }
}

/// Integrates from (x0, v0) at t = 0 to t = T with the default settings.
pub fn integrate(
    p: &Problem,
    eps: f64,
    x0: f64,
    v0: f64,
    t_end: f64,
    h: f64,
) -> Result<Trajectory> {
    integrate_with(p, eps, x0, v0, t_end, h, &IntegratorSettings::default())
}

/// Integrates with ⌈T/h⌉ uniform steps of size T/⌈T/h⌉.
pub fn integrate_with(
    p: &Problem,
    eps: f64,
    x0: f64,
    v0: f64,
    t_end: f64,
    h: f64,
    s: &IntegratorSettings,
) -> Result<Trajectory> {
    if eps == 0.0 || !eps.is_finite() {
        return Err(Error::Precondition("integration needs eps != 0".into()));
    }
    if h.is_nan() || h <= 0.0 || t_end.is_nan() || t_end < 0.0 {
        return Err(Error::Precondition(
            "step and horizon must be positive".into(),
        ));
    }
    if s.scheme == Scheme::Trapezoidal && h > eps.abs() / 4.0 {
        return Err(Error::Precondition(format!(
            "trapezoidal scheme needs h <= eps/4 (h = {h}, eps = {eps})"
        )));
    }
    let steps = (t_end / h).ceil().max(0.0) as usize;
    let h = if steps > 0 { t_end / steps as f64 } else { h };
    let sys = System {
        eps,
        g: &p.g,
        dg: p.g.derivative(),
        forcing: p
            .f
            .iter()
            .map(|(nu, c)| (p.omega.divisor(nu), *c))
            .collect(),
    };

    let mut traj = Trajectory {
        t: Vec::with_capacity(steps + 1),
        x: Vec::with_capacity(steps + 1),
        v: Vec::with_capacity(steps + 1),
        h,
        scheme: s.scheme,
    };
    let (mut x, mut v) = (x0, v0);
    traj.t.push(0.0);
    traj.x.push(x);
    traj.v.push(v);

    let gamma = 2.0 - 2f64.sqrt();
    for k in 0..steps {
        let t = k as f64 * h;
        let t1 = (k + 1) as f64 * h;
        let (fx, fv) = sys.rhs(t, x, v);
        let next = match s.scheme {
            Scheme::Trapezoidal => {
                let b = 0.5 * h;
                sys.implicit(t1, (x + b * fx, v + b * fv), b, (x, v), s)?
            }
            Scheme::TrBdf2 => {
                let b = 0.5 * gamma * h;
                let tg = t + gamma * h;
                let (xg, vg) = sys.implicit(tg, (x + b * fx, v + b * fv), b, (x, v), s)?;
                // (1/w) y_γ − ((1−γ)²/w) y_n with w = γ(2−γ), whose weights sum to 1
                let c1 = 1.0 / (gamma * (2.0 - gamma));
                let beta = (1.0 - gamma) / (2.0 - gamma) * h;
                sys.implicit(
                    t1,
                    (x + c1 * (xg - x), v + c1 * (vg - v)),
                    beta,
                    (xg, vg),
                    s,
                )?
            }
        };
        x = next.0;
        v = next.1;
        if !x.is_finite() || x.abs() > s.blowup {
            return Err(Error::Blowup { t: t1, x });
        }
        traj.t.push(t1);
        traj.x.push(x);
        traj.v.push(v);
    }
    Ok(traj)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttractionReport {
    /// sup over the window of |x(t) − c − X(ωt)|.
    pub sup_discrepancy: f64,
    pub window: (f64, f64),
    pub converged: bool,
    pub tol: f64,
    pub delta: f64,
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttractionSettings {
    /// Step; `None` uses ε/2.
    pub h: Option<f64>,
    pub tol: f64,
    /// Start of the window as a fraction of T; 0.5 gives [T/2, T].
    pub window_start: f64,
    pub integrator: IntegratorSettings,
}

impl Default for AttractionSettings {
    fn default() -> Self {
        AttractionSettings {
            h: None,
            tol: 1e-4,
            window_start: 0.5,
            integrator: IntegratorSettings::default(),
        }
    }
}

/// Integrates from x(0) = c + X(0) + δ with the velocity of the spectral
/// solution, and measures the distance to c + X(ωt) on [T/2, T].
pub fn attraction_check(
    p: &Problem,
    eps: f64,
    sol: &ResponseSolution,
    delta: f64,
    t_end: f64,
) -> Result<(AttractionReport, Trajectory)> {
    attraction_check_with(p, eps, sol, delta, t_end, &AttractionSettings::default())
}

pub fn attraction_check_with(
    p: &Problem,
    eps: f64,
    sol: &ResponseSolution,
    delta: f64,
    t_end: f64,
    s: &AttractionSettings,
) -> Result<(AttractionReport, Trajectory)> {
    let omega = p.omega.components();
    let h = s.h.unwrap_or(eps.abs() / 2.0);
    let x0 = sol.position(omega, 0.0) + delta;
    let v0 = sol.velocity(omega, 0.0);
    let traj = integrate_with(p, eps, x0, v0, t_end, h, &s.integrator)?;
    let start = s.window_start * t_end;
    let sup = traj
        .t
        .iter()
        .zip(&traj.x)
        .filter(|(t, _)| **t >= start)
        .map(|(&t, &x)| (x - sol.position(omega, t)).abs())
        .fold(0.0, f64::max);
    let report = AttractionReport {
        sup_discrepancy: sup,
        window: (start, t_end),
        converged: sup <= s.tol,
        tol: s.tol,
        delta,
        h: traj.h,
    };
    Ok((report, traj))
}
