//! Real polynomials in ascending-degree coefficient form.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// `coeffs[j]` multiplies x^j. Trailing zeros are trimmed.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn monomial(degree: usize, scale: f64) -> Self {
        let mut c = vec![0.0; degree + 1];
        c[degree] = scale;
        Polynomial::new(c)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::new(vec![0.0]);
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &c)| j as f64 * c)
                .collect(),
        )
    }

    /// p(x) − shift.
    pub fn shifted(&self, shift: f64) -> Polynomial {
        let mut c = self.coeffs.clone();
        c[0] -= shift;
        Polynomial::new(c)
    }

    /// Taylor coefficients p_s(c) = p^{(s)}(c)/s!, s = 0..=degree, by repeated
    /// synthetic division.
    pub fn taylor_at(&self, c: f64) -> Vec<f64> {
        let mut work = self.coeffs.clone();
        let n = work.len();
        for s in 0..n {
            for j in (s..n - 1).rev() {
                work[j] += c * work[j + 1];
            }
        }
        work
    }

    /// The k-th derivative at x.
    pub fn derivative_at(&self, k: usize, x: f64) -> f64 {
        let t = self.taylor_at(x);
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        t.get(k).copied().unwrap_or(0.0) * fact
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taylor_shift() {
        // x^3 - x around 1: (y+1)^3 - (y+1) = y^3 + 3y^2 + 2y
        let p = Polynomial::new(vec![0.0, -1.0, 0.0, 1.0]);
        assert_eq!(p.taylor_at(1.0), vec![0.0, 2.0, 3.0, 1.0]);
        assert_eq!(p.derivative_at(2, 1.0), 6.0);
        assert_eq!(p.derivative().coeffs(), &[-1.0, 0.0, 3.0]);
        assert_eq!(p.eval(2.0), 6.0);
    }

    #[test]
    fn trims() {
        assert_eq!(Polynomial::new(vec![1.0, 0.0, 0.0]).degree(), 0);
        assert!(Polynomial::new(vec![]).is_zero());
    }
}
