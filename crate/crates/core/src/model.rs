//! Problem definition for ε ẍ + ẋ + ε g(x) = ε f(ωt), the Fourier-space
//! residuals of its range and bifurcation equations, and the classifier for
//! zeros of g(x) − f_0.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{compose_polynomial_with, FourierSeries, TaylorPolynomial, DEFAULT_DROP_TOL};
use crate::freq::{standard_frequency, FrequencyVector};
use crate::index::MultiIndex;
use crate::poly::Polynomial;

/// Threshold on Im⟨g(c+X)⟩ before a series is rejected as non-real.
pub const IMAG_TOL: f64 = 1e-13;

/// Newton solver settings carried by a [`Problem`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Target for Σ_ν |R_ν|.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest |ε| the solver accepts.
    pub eps_cap: f64,
    pub drop_tol: f64,
    /// Linear solve tolerance as a fraction of `tol`.
    pub linear_tol_factor: f64,
    pub linear_max_iter: usize,
    pub max_halvings: usize,
    /// Target for |Γ| in the bifurcation sweep.
    pub gamma_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-12,
            max_iter: 50,
            eps_cap: 0.25,
            drop_tol: DEFAULT_DROP_TOL,
            linear_tol_factor: 0.01,
            linear_max_iter: 500,
            max_halvings: 8,
            gamma_tol: 1e-10,
        }
    }
}

/// The forced oscillator: force g, forcing f, frequencies ω and cutoff N.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub omega: FrequencyVector,
    pub g: Polynomial,
    pub f: FourierSeries,
    pub trunc: u64,
    pub settings: SolverSettings,
}

impl Problem {
    pub fn new(
        omega: FrequencyVector,
        g: Polynomial,
        f: FourierSeries,
        trunc: u64,
    ) -> Result<Self> {
        Self::with_settings(omega, g, f, trunc, SolverSettings::default())
    }

    pub fn with_settings(
        omega: FrequencyVector,
        g: Polynomial,
        f: FourierSeries,
        trunc: u64,
        settings: SolverSettings,
    ) -> Result<Self> {
        if f.dim() != omega.dim() {
            return Err(Error::DimensionMismatch {
                left: omega.dim(),
                right: f.dim(),
            });
        }
        if g.degree() == 0 {
            return Err(Error::Precondition(
                "g needs a nonzero coefficient of degree >= 1".into(),
            ));
        }
        let defect = f.symmetry_defect();
        if defect > 1e-14 * f.max_abs().max(1.0) {
            return Err(Error::SymmetryViolation(format!(
                "forcing is not real (defect {defect:e})"
            )));
        }
        if let Some(nu) = f.modes().find(|nu| nu.l1() > trunc) {
            return Err(Error::Precondition(format!(
                "forcing mode {nu} lies outside the cutoff {trunc}"
            )));
        }
        let f = f.retruncated(trunc);
        Ok(Problem {
            omega,
            g,
            f,
            trunc,
            settings,
        })
    }

    pub fn dim(&self) -> usize {
        self.omega.dim()
    }

    /// f_0 = ⟨f⟩.
    pub fn f0(&self) -> f64 {
        self.f.average().re
    }

    /// The zero series in this problem's dimension and cutoff.
    pub fn zero_series(&self) -> FourierSeries {
        FourierSeries::new(self.dim(), self.trunc)
    }

    pub fn taylor(&self, c: f64) -> TaylorPolynomial {
        TaylorPolynomial::at(&self.g, c)
    }

    /// [g(c + X)] as a Fourier series truncated at N.
    pub fn compose(&self, x: &FourierSeries, c: f64) -> Result<FourierSeries> {
        compose_polynomial_with(&self.taylor(c), x, self.trunc, self.settings.drop_tol)
    }

    /// Parses the JSON problem file.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ProblemConfig =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.build()
    }
}

/// iω·ν(1 + iεω·ν), the linear part of the range equation at divisor x = ω·ν.
pub fn operator_symbol(x: f64, eps: f64) -> Complex64 {
    Complex64::new(0.0, x) * Complex64::new(1.0, eps * x)
}

/// R_ν = iω·ν(1+iεω·ν) X_ν + ε[g(c+X)]_ν − ε f_ν for 0 < |ν|₁ ≤ N; R_0 = 0.
pub fn range_residual(p: &Problem, x: &FourierSeries, c: f64, eps: f64) -> Result<FourierSeries> {
    let composed = p.compose(x, c)?;
    let mut modes: Vec<&MultiIndex> = x
        .modes()
        .chain(composed.modes())
        .chain(p.f.modes())
        .filter(|nu| !nu.is_zero() && nu.l1() <= p.trunc)
        .collect();
    modes.sort();
    modes.dedup();
    let mut out = p.zero_series();
    for nu in modes {
        let d = p.omega.divisor(nu);
        let r = operator_symbol(d, eps) * x.get(nu) + eps * composed.get(nu) - eps * p.f.get(nu);
        out.set(nu.clone(), r)?;
    }
    out.set_real(x.is_real());
    Ok(out)
}

/// Γ = ⟨g(c + X)⟩ − f_0.
pub fn bifurcation_residual(p: &Problem, x: &FourierSeries, c: f64) -> Result<f64> {
    let avg = p.compose(x, c)?.average();
    if avg.im.abs() > IMAG_TOL {
        return Err(Error::SymmetryViolation(format!(
            "Im <g(c+X)> = {:e}",
            avg.im
        )));
    }
    Ok(avg.re - p.f0())
}

/// Closed-form response for g(x) = g₁x + g₀:
/// c = (f_0 − g₀)/g₁ and X_ν = ε f_ν / (iω·ν(1+iεω·ν) + ε g₁).
pub fn linear_exact(p: &Problem, eps: f64) -> Result<(f64, FourierSeries)> {
    if p.g.degree() != 1 {
        return Err(Error::Precondition("linear_exact needs deg g = 1".into()));
    }
    let (g0, g1) = (p.g.coeffs()[0], p.g.coeffs()[1]);
    let c = (p.f0() - g0) / g1;
    let mut x = p.zero_series();
    for (nu, f_nu) in p.f.iter() {
        if nu.is_zero() {
            continue;
        }
        let denom = operator_symbol(p.omega.divisor(nu), eps) + eps * g1;
        if denom.norm() == 0.0 {
            return Err(Error::VanishingDenominator {
                nu: nu.components().to_vec(),
            });
        }
        x.set(nu.clone(), eps * f_nu / denom)?;
    }
    x.set_real(true);
    Ok((c, x))
}

/// A real zero of g(x) − f_0 with its multiplicity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub c0: f64,
    pub order: usize,
    /// d^order g / dx^order at c0.
    pub leading: f64,
}

impl Zero {
    pub fn is_odd(&self) -> bool {
        self.order % 2 == 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroClassification {
    pub zeros: Vec<Zero>,
    /// Set when the Cauchy root bound exceeds the search interval.
    pub may_be_incomplete: bool,
}

/// Default search interval for [`classify_zeros`].
pub const DEFAULT_ROOT_INTERVAL: (f64, f64) = (-10.0, 10.0);

/// All real zeros of g(x) − f_0 on the default interval.
pub fn classify_zeros(g: &Polynomial, f0: f64) -> Result<ZeroClassification> {
    classify_zeros_in(g, f0, DEFAULT_ROOT_INTERVAL)
}

/// Real zeros of g(x) − f_0 in `interval`, found by sign bracketing between
/// consecutive critical points (recursively on derivatives) and refined by
/// bisection. Multiplicity is the order of the first derivative that does not
/// vanish at the root.
pub fn classify_zeros_in(
    g: &Polynomial,
    f0: f64,
    interval: (f64, f64),
) -> Result<ZeroClassification> {
    let p = g.shifted(f0);
    if p.is_zero() {
        return Err(Error::Precondition("g - f0 vanishes identically".into()));
    }
    let (lo, hi) = interval;
    let roots = real_roots(&p, lo, hi);
    let mut zeros = Vec::with_capacity(roots.len());
    for r in roots {
        let mut order = 0;
        let mut leading = 0.0;
        for k in 1..=p.degree() {
            let dk = p.derivative_at(k, r);
            if dk.abs() > 1e-8 * derivative_scale(&p, k, r) {
                order = k;
                leading = dk;
                break;
            }
        }
        if order == 0 {
            // only possible for numerically degenerate input
            order = p.degree();
            leading = p.derivative_at(order, r);
        }
        zeros.push(Zero {
            c0: r,
            order,
            leading,
        });
    }
    let lead = *p.coeffs().last().unwrap();
    let bound = 1.0
        + p.coeffs()[..p.degree()]
            .iter()
            .map(|a| (a / lead).abs())
            .fold(0.0, f64::max);
    let may_be_incomplete = p.degree() > 0 && (lo > -bound || hi < bound);
    if may_be_incomplete {
        log::warn!("root search interval [{lo}, {hi}] may miss roots (Cauchy bound {bound})");
    }
    Ok(ZeroClassification {
        zeros,
        may_be_incomplete,
    })
}

/// Σ_j |a_j| j!/(j−k)! max(1,|x|)^{j−k}, the natural size of p^{(k)}(x).
fn derivative_scale(p: &Polynomial, k: usize, x: f64) -> f64 {
    let m = x.abs().max(1.0);
    let s: f64 = p
        .coeffs()
        .iter()
        .enumerate()
        .skip(k)
        .map(|(j, a)| {
            let falling: f64 = ((j - k + 1)..=j).map(|i| i as f64).product();
            a.abs() * falling * m.powi((j - k) as i32)
        })
        .sum();
    s.max(f64::MIN_POSITIVE)
}

fn real_roots(p: &Polynomial, lo: f64, hi: f64) -> Vec<f64> {
    match p.degree() {
        0 => Vec::new(),
        1 => {
            let r = -p.coeffs()[0] / p.coeffs()[1];
            if (lo..=hi).contains(&r) {
                vec![r]
            } else {
                Vec::new()
            }
        }
        _ => {
            let critical = real_roots(&p.derivative(), lo, hi);
            let mut knots = Vec::with_capacity(critical.len() + 2);
            knots.push(lo);
            knots.extend(critical.iter().copied().filter(|&x| x > lo && x < hi));
            knots.push(hi);
            let touch = |x: f64| p.eval(x).abs() <= 1e-12 * derivative_scale(p, 0, x);
            let mut roots = Vec::new();
            for w in knots.windows(2) {
                let (a, b) = (w[0], w[1]);
                if touch(a) {
                    roots.push(a);
                }
                let (pa, pb) = (p.eval(a), p.eval(b));
                if pa * pb < 0.0 && !touch(a) && !touch(b) {
                    roots.push(bisect(p, a, b));
                }
            }
            if touch(hi) {
                roots.push(hi);
            }
            roots.sort_by(f64::total_cmp);
            roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * a.abs().max(1.0));
            roots
        }
    }
}

fn bisect(p: &Polynomial, mut a: f64, mut b: f64) -> f64 {
    let mut pa = p.eval(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b || (b - a) <= 1e-15 * m.abs().max(1.0) {
            break;
        }
        let pm = p.eval(m);
        if pm == 0.0 {
            return m;
        }
        if (pm < 0.0) == (pa < 0.0) {
            a = m;
            pa = pm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

// --- problem file -----------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OmegaConfig {
    Named { name: String },
    Components { components: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialConfig {
    pub coeffs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub nu: Vec<i32>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    pub modes: Vec<ModeConfig>,
}

/// `{"omega": …, "g": {"coeffs": […]}, "f": {"modes": […]}, "trunc": N, "tol": {…}}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub omega: OmegaConfig,
    pub g: PolynomialConfig,
    pub f: ForcingConfig,
    pub trunc: u64,
    #[serde(default)]
    pub tol: SolverSettings,
}

impl ProblemConfig {
    pub fn build(&self) -> Result<Problem> {
        let omega = match &self.omega {
            OmegaConfig::Named { name } => standard_frequency(name)?,
            OmegaConfig::Components { components } => FrequencyVector::new(components.clone())?,
        };
        let modes = self
            .f
            .modes
            .iter()
            .map(|m| (MultiIndex::new(m.nu.clone()), Complex64::new(m.re, m.im)));
        let f = FourierSeries::from_modes(omega.dim(), self.trunc, modes)?;
        Problem::with_settings(
            omega,
            Polynomial::new(self.g.coeffs.clone()),
            f,
            self.trunc,
            self.tol.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::standard_frequency;
    use approx::assert_abs_diff_eq;

    fn mi<const D: usize>(v: [i32; D]) -> MultiIndex {
        MultiIndex::from(v)
    }

    fn problem(g: Vec<f64>) -> Problem {
        let omega = standard_frequency("golden").unwrap();
        let f = FourierSeries::cosine(2, 8, &mi([1, 0]), 1.0).unwrap();
        Problem::new(omega, Polynomial::new(g), f, 8).unwrap()
    }

    #[test]
    fn classify_examples() {
        let z = classify_zeros(&Polynomial::new(vec![0.0, -1.0, 0.0, 1.0]), 0.0).unwrap();
        let cs: Vec<f64> = z.zeros.iter().map(|z| z.c0).collect();
        assert_eq!(z.zeros.len(), 3);
        assert_abs_diff_eq!(cs[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cs[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cs[2], 1.0, epsilon = 1e-12);
        assert!(z.zeros.iter().all(|z| z.order == 1));
        assert!(!z.may_be_incomplete);

        let z = classify_zeros(&Polynomial::monomial(3, 1.0), 0.0).unwrap();
        assert_eq!(z.zeros.len(), 1);
        assert_eq!(
            (z.zeros[0].c0, z.zeros[0].order, z.zeros[0].leading),
            (0.0, 3, 6.0)
        );
        assert!(z.zeros[0].is_odd());

        let z = classify_zeros(&Polynomial::monomial(2, 1.0), 0.0).unwrap();
        assert_eq!(z.zeros.len(), 1);
        assert_eq!(z.zeros[0].order, 2);
        assert!(!z.zeros[0].is_odd());
    }

    #[test]
    fn classify_shifted_and_empty() {
        // (x-2)^2 (x+1) = x^3 - 3x^2 + 4
        let z = classify_zeros(&Polynomial::new(vec![4.0, 0.0, -3.0, 1.0]), 0.0).unwrap();
        assert_eq!(z.zeros.len(), 2);
        assert_abs_diff_eq!(z.zeros[0].c0, -1.0, epsilon = 1e-12);
        assert_eq!(z.zeros[0].order, 1);
        assert_abs_diff_eq!(z.zeros[1].c0, 2.0, epsilon = 1e-7);
        assert_eq!(z.zeros[1].order, 2);

        // x^2 + 1: no real root
        let z = classify_zeros(&Polynomial::new(vec![1.0, 0.0, 1.0]), 0.0).unwrap();
        assert!(z.zeros.is_empty());

        // f0 shifts the equation: x^3 = 8
        let z = classify_zeros(&Polynomial::monomial(3, 1.0), 8.0).unwrap();
        assert_abs_diff_eq!(z.zeros[0].c0, 2.0, epsilon = 1e-12);

        // root at 50 is outside [-10, 10]
        let z = classify_zeros(&Polynomial::new(vec![-50.0, 1.0]), 0.0).unwrap();
        assert!(z.zeros.is_empty());
        assert!(z.may_be_incomplete);

        assert!(classify_zeros(&Polynomial::new(vec![3.0]), 3.0).is_err());
    }

    #[test]
    fn range_residual_examples() {
        let p = problem(vec![0.0, 0.0, 0.0, 1.0]);
        let zero = p.zero_series();
        assert!(range_residual(&p, &zero, 0.7, 0.0).unwrap().is_empty());

        let omega = standard_frequency("golden").unwrap();
        let f = FourierSeries::cosine(2, 8, &mi([1, 0]), 1.0).unwrap();
        // g = 0 is rejected by Problem::new, so use g(x) = x and X = 0, c = 0
        let p = Problem::new(omega, Polynomial::new(vec![0.0, 1.0]), f, 8).unwrap();
        let r = range_residual(&p, &p.zero_series(), 0.0, 0.1).unwrap();
        assert_eq!(r.len(), 2);
        assert_abs_diff_eq!((r.get(&mi([1, 0])) + 0.1).norm(), 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!((r.get(&mi([-1, 0])) + 0.1).norm(), 0.0, epsilon = 1e-16);
    }

    #[test]
    fn linear_exact_examples() {
        let p = problem(vec![0.0, 1.0]);
        let (c, x) = linear_exact(&p, 0.1).unwrap();
        assert_eq!(c, 0.0);
        assert_abs_diff_eq!(
            (x.get(&mi([1, 0])) - Complex64::new(0.0, -0.1)).norm(),
            0.0,
            epsilon = 1e-16
        );
        let r = range_residual(&p, &x, c, 0.1).unwrap();
        assert!(r.weighted_norm(0.0) <= 1e-12);
        assert_abs_diff_eq!(
            bifurcation_residual(&p, &x, c).unwrap(),
            0.0,
            epsilon = 1e-15
        );

        let p = problem(vec![0.5, 2.0]);
        let (c, x) = linear_exact(&p, 0.0).unwrap();
        assert!(x.is_empty());
        assert_eq!(c, -0.25);

        assert!(linear_exact(&problem(vec![0.0, 0.0, 1.0]), 0.1).is_err());
    }

    #[test]
    fn bifurcation_residual_examples() {
        let p = problem(vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(
            bifurcation_residual(&p, &p.zero_series(), 0.5).unwrap(),
            0.125
        );

        let p = problem(vec![0.0, -1.0, 0.0, 1.0]);
        for z in classify_zeros(&p.g, p.f0()).unwrap().zeros {
            assert!(
                bifurcation_residual(&p, &p.zero_series(), z.c0)
                    .unwrap()
                    .abs()
                    <= 1e-12
            );
        }

        let p = problem(vec![0.0, 0.0, 1.0]);
        let x = FourierSeries::cosine(2, 8, &mi([1, 0]), 1.0).unwrap();
        assert_eq!(bifurcation_residual(&p, &x, 0.0).unwrap(), 2.0);

        let mut bad = p.zero_series();
        bad.set(mi([1, 0]), Complex64::new(1.0, 0.0)).unwrap();
        bad.set(mi([-1, 0]), Complex64::new(0.0, 1.0)).unwrap();
        assert!(matches!(
            bifurcation_residual(&p, &bad, 0.0),
            Err(Error::SymmetryViolation(_))
        ));
    }

    #[test]
    fn residual_linear_in_forcing_and_real() {
        let p = problem(vec![0.0, 0.0, 0.0, 1.0]);
        let mut x = p.zero_series();
        x.set(mi([1, 0]), Complex64::new(0.01, -0.02)).unwrap();
        x.set(mi([-1, 0]), Complex64::new(0.01, 0.02)).unwrap();
        x.set(mi([1, 1]), Complex64::new(-0.003, 0.001)).unwrap();
        x.set(mi([-1, -1]), Complex64::new(-0.003, -0.001)).unwrap();
        let r = range_residual(&p, &x, 0.2, 0.05).unwrap();
        assert!(r.symmetry_defect() <= 1e-17);

        // with X = 0 only the forcing term survives off the zero mode
        let mut doubled = p.clone();
        doubled.f = p.f.scale_real(2.0);
        let r1 = range_residual(&p, &p.zero_series(), 0.0, 0.05).unwrap();
        let r2 = range_residual(&doubled, &p.zero_series(), 0.0, 0.05).unwrap();
        assert!(r2.max_abs_diff(&r1.scale_real(2.0)) == 0.0);
    }

    #[test]
    fn bifurcation_at_zero_is_exact() {
        let p = problem(vec![0.3, -1.0, 0.5, 1.0]);
        for i in 0..20 {
            let c = -1.0 + 0.1 * i as f64;
            assert_eq!(
                bifurcation_residual(&p, &p.zero_series(), c).unwrap(),
                p.g.eval(c) - p.f0()
            );
        }
    }

    #[test]
    fn config_parsing() {
        let text = r#"{
            "omega": {"name": "golden"},
            "g": {"coeffs": [0, 0, 0, 1]},
            "f": {"modes": [{"nu": [1, 0], "re": 1, "im": 0}, {"nu": [-1, 0], "re": 1, "im": 0}]},
            "trunc": 8,
            "tol": {"tol": 1e-11}
        }"#;
        let p = Problem::from_json(text).unwrap();
        assert_eq!(p.g.degree(), 3);
        assert_eq!(p.settings.tol, 1e-11);
        assert_eq!(p.settings.max_iter, 50);

        let explicit = text.replace(
            r#"{"name": "golden"}"#,
            r#"{"components": [1.0, 1.4142135623730951]}"#,
        );
        assert_eq!(
            Problem::from_json(&explicit).unwrap().omega.components()[1],
            2f64.sqrt()
        );

        let unknown = text.replace("\"trunc\"", "\"bogus\": 1, \"trunc\"");
        assert!(matches!(Problem::from_json(&unknown), Err(Error::Parse(_))));
        let complex_f = text.replace(r#""re": 1, "im": 0}]"#, r#""re": 1, "im": 0.5}]"#);
        assert!(matches!(
            Problem::from_json(&complex_f),
            Err(Error::SymmetryViolation(_))
        ));
    }
}
