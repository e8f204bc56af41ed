use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{FourierSeries, TaylorPolynomial};
use crate::index::MultiIndex;
use crate::model::{operator_symbol, Problem};

use super::enumerate::{EnumerationOptions, TreeCatalogue};
use super::tree::Tree;

/// Node factors: −g_s(c)·σ_v for internal nodes, f_ν for end nodes.
fn node_product(theta: &Tree, taylor: &TaylorPolynomial, f: &FourierSeries) -> Complex64 {
    theta
        .nodes()
        .iter()
        .map(|n| match &n.mode {
            Some(nu) => f.get(nu),
            None => Complex64::from(-taylor.coeff(n.branching()) * n.sigma as f64),
        })
        .product()
}

fn divisors(theta: &Tree, p: &Problem) -> Result<Vec<f64>> {
    theta
        .nodes()
        .iter()
        .map(|n| {
            let x = p.omega.divisor(&n.momentum);
            if x == 0.0 {
                Err(Error::ZeroDivisor {
                    nu: n.momentum.components().to_vec(),
                })
            } else {
                Ok(x)
            }
        })
        .collect()
}

/// Val(θ; ε, c) = Π_ℓ G(ω·ν_ℓ; ε) Π_v F_v with G(x; ε) = 1/(ix(1+iεx)).
pub fn tree_value(theta: &Tree, eps: f64, c: f64, p: &Problem) -> Result<Complex64> {
    let xs = divisors(theta, p)?;
    let props: Complex64 = xs.iter().map(|&x| operator_symbol(x, eps).inv()).product();
    Ok(props * node_product(theta, &p.taylor(c), &p.f))
}

/// The coefficients [ε^m] Val(θ; ε, c) for m = 0..=order.
///
/// G(x; ε) = (1/ix) Σ_m (−iεx)^m, so the ε^m coefficient of the propagator
/// product is Π(1/ix_ℓ) times the complete homogeneous polynomial h_m(−ix_ℓ).
pub fn tree_jet(theta: &Tree, c: f64, p: &Problem, order: usize) -> Result<Vec<Complex64>> {
    let xs = divisors(theta, p)?;
    let base: Complex64 = xs
        .iter()
        .map(|&x| Complex64::new(0.0, x).inv())
        .product::<Complex64>()
        * node_product(theta, &p.taylor(c), &p.f);
    let mut h = vec![Complex64::new(0.0, 0.0); order + 1];
    h[0] = Complex64::new(1.0, 0.0);
    for &x in &xs {
        let y = Complex64::new(0.0, -x);
        for m in 1..=order {
            let prev = h[m - 1];
            h[m] += y * prev;
        }
    }
    Ok(h.into_iter().map(|v| v * base).collect())
}

/// X^[k] assembled from trees: Σ_{j≤k} Σ_{θ of order j} [ε^{k−j}] Val(θ).
/// End-node modes are the modes of f and branching runs up to deg g; line
/// momenta are capped at the problem's cutoff.
pub fn series_from_trees(p: &Problem, c: f64, k: usize) -> Result<FourierSeries> {
    let support: Vec<MultiIndex> = p.f.modes().filter(|nu| !nu.is_zero()).cloned().collect();
    let mut opts = EnumerationOptions::new(p.g.degree());
    opts.max_momentum = Some(p.trunc);
    let cat = TreeCatalogue::build(k, &support, &opts)?;
    let mut out = p.zero_series();
    for j in 1..=k {
        for theta in cat.trees_of_order(j)? {
            let jet = tree_jet(&theta, c, p, k - j)?;
            out.add_to(theta.root_momentum().clone(), jet[k - j])?;
        }
    }
    Ok(out)
}
