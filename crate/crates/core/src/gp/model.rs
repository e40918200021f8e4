use std::ops::{Add, Mul};

use crate::error::{Error, Result};

/// `coefficient * prod_i x_i^{exponents[i]}` with a positive coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coefficient: f64,
    pub exponents: Vec<f64>,
}

impl Monomial {
    pub fn new(coefficient: f64, exponents: Vec<f64>) -> Self {
        debug_assert!(coefficient > 0.0, "monomial coefficient must be positive");
        Self { coefficient, exponents }
    }

    pub fn constant(num_vars: usize, value: f64) -> Self {
        Self::new(value, vec![0.0; num_vars])
    }

    /// The single variable `x_index`.
    pub fn var(num_vars: usize, index: usize) -> Self {
        let mut exponents = vec![0.0; num_vars];
        exponents[index] = 1.0;
        Self::new(1.0, exponents)
    }

    /// `coefficient * prod x_i^e` for the listed `(i, e)` pairs.
    pub fn term(num_vars: usize, coefficient: f64, powers: &[(usize, f64)]) -> Self {
        let mut exponents = vec![0.0; num_vars];
        for &(i, e) in powers {
            exponents[i] += e;
        }
        Self::new(coefficient, exponents)
    }

    pub fn num_vars(&self) -> usize {
        self.exponents.len()
    }

    pub fn scale(mut self, k: f64) -> Self {
        self.coefficient *= k;
        self
    }

    pub fn powf(&self, e: f64) -> Self {
        Self::new(self.coefficient.powf(e), self.exponents.iter().map(|a| a * e).collect())
    }

    pub fn inv(&self) -> Self {
        self.powf(-1.0)
    }

    pub fn div(&self, other: &Monomial) -> Self {
        self * &other.inv()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(x)
            .fold(self.coefficient, |acc, (a, xi)| if *a == 0.0 { acc } else { acc * xi.powf(*a) })
    }

    fn is_valid(&self) -> bool {
        self.coefficient > 0.0
            && self.coefficient.is_finite()
            && self.exponents.iter().all(|a| a.is_finite())
    }
}

impl Mul<&Monomial> for &Monomial {
    type Output = Monomial;
    fn mul(self, rhs: &Monomial) -> Monomial {
        assert_eq!(self.num_vars(), rhs.num_vars());
        Monomial::new(
            self.coefficient * rhs.coefficient,
            self.exponents.iter().zip(&rhs.exponents).map(|(a, b)| a + b).collect(),
        )
    }
}

/// A nonempty sum of monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct Posynomial {
    terms: Vec<Monomial>,
}

impl Posynomial {
    pub fn new(terms: Vec<Monomial>) -> Self {
        assert!(!terms.is_empty(), "posynomial needs at least one term");
        let n = terms[0].num_vars();
        assert!(terms.iter().all(|t| t.num_vars() == n), "inconsistent variable count");
        Self { terms }
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn num_vars(&self) -> usize {
        self.terms[0].num_vars()
    }

    /// Divide every term by a monomial.
    pub fn div_monomial(&self, m: &Monomial) -> Posynomial {
        let inv = m.inv();
        Posynomial::new(self.terms.iter().map(|t| t * &inv).collect())
    }

    pub fn scale(&self, k: f64) -> Posynomial {
        Posynomial::new(self.terms.iter().cloned().map(|t| t.scale(k)).collect())
    }

    /// Sum of term values at a strictly positive point.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        evaluate(self, x)
    }

    fn is_valid(&self) -> bool {
        self.terms.iter().all(Monomial::is_valid)
    }
}

impl From<Monomial> for Posynomial {
    fn from(m: Monomial) -> Self {
        Posynomial::new(vec![m])
    }
}

impl Add<&Posynomial> for &Posynomial {
    type Output = Posynomial;
    fn add(self, rhs: &Posynomial) -> Posynomial {
        let mut terms = self.terms.clone();
        terms.extend(rhs.terms.iter().cloned());
        Posynomial::new(terms)
    }
}

impl Add<Monomial> for Posynomial {
    type Output = Posynomial;
    fn add(mut self, rhs: Monomial) -> Posynomial {
        assert_eq!(self.num_vars(), rhs.num_vars());
        self.terms.push(rhs);
        self
    }
}

impl Mul<&Posynomial> for &Posynomial {
    type Output = Posynomial;
    fn mul(self, rhs: &Posynomial) -> Posynomial {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                terms.push(a * b);
            }
        }
        Posynomial::new(terms)
    }
}

impl Mul<&Monomial> for &Posynomial {
    type Output = Posynomial;
    fn mul(self, rhs: &Monomial) -> Posynomial {
        Posynomial::new(self.terms.iter().map(|t| t * rhs).collect())
    }
}

/// Rewrites `lhs <= rhs` into the normalized form `lhs / rhs <= 1`.
pub fn normalize(constraint_lhs: &Posynomial, constraint_rhs: &Monomial) -> Posynomial {
    constraint_lhs.div_monomial(constraint_rhs)
}

/// Evaluates a posynomial at a strictly positive point.
pub fn evaluate(p: &Posynomial, x: &[f64]) -> Result<f64> {
    if x.len() != p.num_vars() {
        return Err(Error::DimensionMismatch(format!(
            "point has {} entries, posynomial has {} variables",
            x.len(),
            p.num_vars()
        )));
    }
    if x.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Gp("evaluation point must be strictly positive".into()));
    }
    Ok(p.terms.iter().map(|t| t.evaluate(x)).sum())
}

/// A geometric program in standard form:
/// minimize a monomial subject to `posynomial <= 1` constraints.
#[derive(Debug, Clone)]
pub struct GpProblem {
    pub num_vars: usize,
    pub objective: Monomial,
    pub constraints: Vec<Posynomial>,
    pub names: Vec<String>,
}

impl GpProblem {
    pub fn new(names: Vec<String>, objective: Monomial) -> Self {
        Self { num_vars: names.len(), objective, constraints: Vec::new(), names }
    }

    /// Minimize a posynomial objective by adding an epigraph variable `t`
    /// (appended as the last variable) with the extra constraint `objective <= t`.
    ///
    /// The input posynomial is expressed over `names`; it is widened by one
    /// variable internally.
    pub fn minimize_posynomial(mut names: Vec<String>, objective: &Posynomial) -> Self {
        let n = names.len();
        assert_eq!(objective.num_vars(), n);
        names.push("t".to_string());
        let widened = widen(objective, n + 1);
        let t = Monomial::var(n + 1, n);
        let mut prob = Self::new(names, t.clone());
        prob.constraints.push(normalize(&widened, &t));
        prob
    }

    /// Add `posynomial <= 1`.
    pub fn push(&mut self, p: Posynomial) {
        assert_eq!(p.num_vars(), self.num_vars);
        self.constraints.push(p);
    }

    /// Add `lhs <= rhs`.
    pub fn push_le(&mut self, lhs: &Posynomial, rhs: &Monomial) {
        self.push(normalize(lhs, rhs));
    }

    pub fn validate(&self) -> Result<()> {
        if self.names.len() != self.num_vars {
            return Err(Error::Gp("names do not match variable count".into()));
        }
        if self.objective.num_vars() != self.num_vars || !self.objective.is_valid() {
            return Err(Error::Gp("objective is malformed".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.num_vars() != self.num_vars || !c.is_valid() {
                return Err(Error::Gp(format!("constraint {i} is malformed")));
            }
        }
        Ok(())
    }
}

/// Pads a posynomial with zero exponents up to `num_vars` variables.
pub fn widen(p: &Posynomial, num_vars: usize) -> Posynomial {
    Posynomial::new(
        p.terms
            .iter()
            .map(|t| {
                let mut e = t.exponents.clone();
                e.resize(num_vars, 0.0);
                Monomial::new(t.coefficient, e)
            })
            .collect(),
    )
}
