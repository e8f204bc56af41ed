//! The bifurcation equation Γ(ε, c) = ⟨g(c + X(·; ε, c))⟩ − f_0: root finding by
//! bisection around an odd-order zero, the curve c(ε), and the sign probe for
//! even-order zeros.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::float;
use crate::fourier::FourierSeries;
use crate::model::{bifurcation_residual, classify_zeros_in, Problem, Zero, DEFAULT_ROOT_INTERVAL};
use crate::solver::{solve_range, ResponseSolution};

/// Relative distance within which an anchor is identified with a zero of g − f_0.
const ANCHOR_TOL: f64 = 1e-6;

/// Γ(ε, c) on a freshly solved X.
pub fn gamma(p: &Problem, eps: f64, c: f64) -> Result<f64> {
    gamma_warm(p, eps, c, None).map(|(g, _)| g)
}

/// Γ(ε, c) with the range solve warm-started from `x0`.
pub fn gamma_warm(
    p: &Problem,
    eps: f64,
    c: f64,
    x0: Option<&FourierSeries>,
) -> Result<(f64, ResponseSolution)> {
    let sol = solve_range(p, eps, c, x0)?;
    let g = bifurcation_residual(p, &sol.x, c)?;
    Ok((g, sol))
}

/// The zero of g − f_0 that `c0` refers to.
pub fn anchor_zero(p: &Problem, c0: f64) -> Result<Zero> {
    let interval = (
        DEFAULT_ROOT_INTERVAL.0.min(c0 - 1.0),
        DEFAULT_ROOT_INTERVAL.1.max(c0 + 1.0),
    );
    let zc = classify_zeros_in(&p.g, p.f0(), interval)?;
    zc.zeros
        .into_iter()
        .filter(|z| (z.c0 - c0).abs() <= ANCHOR_TOL * c0.abs().max(1.0))
        .min_by(|a, b| (a.c0 - c0).abs().total_cmp(&(b.c0 - c0).abs()))
        .ok_or_else(|| Error::Precondition(format!("c0 = {c0} is not a zero of g - f0")))
}

/// Bisection for Γ(ε, c) = 0 on [c0 − half_width, c0 + half_width].
///
/// The bracket must satisfy σ₀Γ(V₋) < 0 < σ₀Γ(V₊) with σ₀ the sign of the
/// leading derivative of g at c0. Even-order anchors never pass this check.
pub fn solve_bifurcation(p: &Problem, eps: f64, c0: f64, half_width: f64, tol: f64) -> Result<f64> {
    let zero = anchor_zero(p, c0)?;
    solve_bracketed(p, eps, c0, half_width, tol, &zero).map(|(c, _, _)| c)
}

fn solve_bracketed(
    p: &Problem,
    eps: f64,
    center: f64,
    half_width: f64,
    tol: f64,
    zero: &Zero,
) -> Result<(f64, f64, ResponseSolution)> {
    if half_width.is_nan() || half_width <= 0.0 {
        return Err(Error::Precondition(
            "bracket half-width must be positive".into(),
        ));
    }
    let sigma = zero.leading.signum();
    let (mut lo, mut hi) = (center - half_width, center + half_width);
    let (g_lo, s_lo) = gamma_warm(p, eps, lo, None)?;
    let (g_hi, s_hi) = gamma_warm(p, eps, hi, Some(&s_lo.x))?;
    if !zero.is_odd()
        || !(sigma * g_lo <= 0.0 && sigma * g_hi >= 0.0)
        || (g_lo == 0.0 && g_hi == 0.0)
    {
        return Err(Error::NoSignChange {
            lo,
            hi,
            gamma_lo: g_lo,
            gamma_hi: g_hi,
        });
    }
    if g_lo == 0.0 {
        return Ok((lo, g_lo, s_lo));
    }
    if g_hi == 0.0 {
        return Ok((hi, g_hi, s_hi));
    }

    let mut warm = s_hi.x;
    loop {
        let mid = 0.5 * (lo + hi);
        let (g_mid, s_mid) = gamma_warm(p, eps, mid, Some(&warm))?;
        if g_mid.abs() <= tol {
            return Ok((mid, g_mid, s_mid));
        }
        if mid <= lo || mid >= hi {
            return Err(Error::NoConvergence {
                iterations: 0,
                residual: g_mid.abs(),
            });
        }
        if sigma * g_mid < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        warm = s_mid.x;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub eps: f64,
    pub c: f64,
    pub gamma: f64,
}

/// The curve c(ε) along an ascending grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BifurcationCurve {
    pub points: Vec<CurvePoint>,
    pub c0: f64,
    pub order: usize,
    /// The first point that could not be solved; the curve stops there.
    pub failure: Option<(f64, String)>,
}

impl BifurcationCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,c,gamma\n");
        for pt in &self.points {
            out += &format!("{},{},{}\n", float(pt.eps), float(pt.c), float(pt.gamma));
        }
        out
    }

    /// (c_{k+1} − c_k)/(ε_{k+1} − ε_k) between consecutive points.
    pub fn divided_differences(&self) -> Vec<f64> {
        self.points
            .windows(2)
            .map(|w| (w[1].c - w[0].c) / (w[1].eps - w[0].eps))
            .collect()
    }
}

/// Runs the bisection at each ε, centering each bracket on the previous c.
pub fn sweep_curve(
    p: &Problem,
    eps_grid: &[f64],
    c0: f64,
    half_width: f64,
) -> Result<BifurcationCurve> {
    let zero = anchor_zero(p, c0)?;
    let mut curve = BifurcationCurve {
        points: Vec::with_capacity(eps_grid.len()),
        c0,
        order: zero.order,
        failure: None,
    };
    let mut center = c0;
    for &eps in eps_grid {
        if let Some(last) = curve.points.last() {
            if eps <= last.eps {
                curve.failure = Some((eps, "grid not strictly ascending".into()));
                break;
            }
        }
        match solve_bracketed(p, eps, center, half_width, p.settings.gamma_tol, &zero) {
            Ok((c, g, _)) => {
                if (c - center).abs() > half_width {
                    log::warn!("c jumped by {} at eps = {eps}", (c - center).abs());
                }
                curve.points.push(CurvePoint { eps, c, gamma: g });
                center = c;
            }
            Err(e) => {
                curve.failure = Some((eps, e.to_string()));
                break;
            }
        }
    }
    Ok(curve)
}

/// The c values scanned by [`even_order_probe`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeGrid {
    /// The same c values at every ε.
    Absolute(Vec<f64>),
    /// c = c0 + ε·offset, so the grid half-width is proportional to ε.
    Scaled { c0: f64, offsets: Vec<f64> },
}

impl ProbeGrid {
    /// `points` equally spaced offsets on [−1, 1] around c0.
    pub fn scaled(c0: f64, points: usize) -> ProbeGrid {
        let offsets = if points <= 1 {
            vec![0.0]
        } else {
            (0..points)
                .map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64)
                .collect()
        };
        ProbeGrid::Scaled { c0, offsets }
    }

    pub fn values(&self, eps: f64) -> Vec<f64> {
        match self {
            ProbeGrid::Absolute(cs) => cs.clone(),
            ProbeGrid::Scaled { c0, offsets } => offsets.iter().map(|o| c0 + eps * o).collect(),
        }
    }

    fn center(&self) -> Option<f64> {
        match self {
            ProbeGrid::Absolute(cs) => {
                let lo = cs.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = cs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo <= hi).then_some(0.5 * (lo + hi))
            }
            ProbeGrid::Scaled { c0, .. } => Some(*c0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonexistenceReport {
    pub eps_list: Vec<f64>,
    pub min_abs_gamma: Vec<f64>,
    /// min over the grid of σ₀Γ at each ε.
    pub min_signed_gamma: Vec<f64>,
    /// +1 or −1 when σ₀Γ has that sign at every scanned point, else 0.
    pub sign: i32,
    /// Slope of log min|Γ| against log ε.
    pub fitted_exponent: Option<f64>,
    pub c0: f64,
    pub order: usize,
    /// ε values dropped because a solve failed.
    pub excluded: Vec<(f64, String)>,
}

impl NonexistenceReport {
    pub fn claims_nonexistence(&self) -> bool {
        self.sign != 0 && !self.eps_list.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,min_abs_gamma,min_signed_gamma\n");
        for i in 0..self.eps_list.len() {
            out += &format!(
                "{},{},{}\n",
                float(self.eps_list[i]),
                float(self.min_abs_gamma[i]),
                float(self.min_signed_gamma[i])
            );
        }
        out
    }
}

/// Scans Γ over the grid at each ε for an even-order anchor and fits the
/// decay exponent of min|Γ|.
pub fn even_order_probe(
    p: &Problem,
    eps_list: &[f64],
    grid: &ProbeGrid,
) -> Result<NonexistenceReport> {
    let center = grid
        .center()
        .ok_or_else(|| Error::Precondition("empty probe grid".into()))?;
    let zero = anchor_zero(p, center)?;
    if zero.is_odd() {
        return Err(Error::Precondition(format!(
            "zero at {} has odd order {}; the probe applies to even orders",
            zero.c0, zero.order
        )));
    }
    let sigma = zero.leading.signum();

    let rows: Vec<(f64, Result<(f64, f64, i32)>)> = eps_list
        .par_iter()
        .map(|&eps| (eps, scan(p, eps, &grid.values(eps), sigma)))
        .collect();

    let mut report = NonexistenceReport {
        eps_list: Vec::new(),
        min_abs_gamma: Vec::new(),
        min_signed_gamma: Vec::new(),
        sign: 0,
        fitted_exponent: None,
        c0: zero.c0,
        order: zero.order,
        excluded: Vec::new(),
    };
    let mut signs = Vec::new();
    for (eps, row) in rows {
        match row {
            Ok((abs_min, signed_min, sign)) => {
                report.eps_list.push(eps);
                report.min_abs_gamma.push(abs_min);
                report.min_signed_gamma.push(signed_min);
                signs.push(sign);
            }
            Err(e) => {
                log::warn!("probe point eps = {eps} excluded: {e}");
                report.excluded.push((eps, e.to_string()));
            }
        }
    }
    if let Some(&first) = signs.first() {
        if signs.iter().all(|&s| s == first) {
            report.sign = first;
        }
    }
    let fit: Vec<(f64, f64)> = report
        .eps_list
        .iter()
        .zip(&report.min_abs_gamma)
        .filter(|(e, g)| **e > 0.0 && **g > 0.0)
        .map(|(e, g)| (e.ln(), g.ln()))
        .collect();
    report.fitted_exponent = slope(&fit);
    Ok(report)
}

/// (min|Γ|, min σ₀Γ, common sign of σ₀Γ or 0) over the c values.
fn scan(p: &Problem, eps: f64, cs: &[f64], sigma: f64) -> Result<(f64, f64, i32)> {
    let mut abs_min = f64::INFINITY;
    let mut signed_min = f64::INFINITY;
    let (mut pos, mut neg) = (true, true);
    let mut warm: Option<FourierSeries> = None;
    for &c in cs {
        let (g, sol) = gamma_warm(p, eps, c, warm.as_ref())?;
        let sg = sigma * g;
        abs_min = abs_min.min(g.abs());
        signed_min = signed_min.min(sg);
        pos &= sg > 0.0;
        neg &= sg < 0.0;
        warm = Some(sol.x);
    }
    let sign = if pos {
        1
    } else if neg {
        -1
    } else {
        0
    };
    Ok((abs_min, signed_min, sign))
}

/// Least-squares slope, None with fewer than two points.
pub fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
