//! Sparse multivariate polynomials with exact symbolic differentiation.
//!
//! The group product of a step ≤ 3 Carnot group is polynomial in the
//! exponential coordinates of both factors, and the coefficient matrices of
//! the horizontal vector fields are polynomial in the base point. Everything
//! downstream (jets, kernels, perturbations) differentiates those
//! polynomials, so they are kept in a canonical sparse form instead of being
//! re-derived per group by hand.

use crate::expr::Expr;

/// One monomial: `coeff * prod(vars)`, `vars` sorted with multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub vars: Vec<u32>,
}

impl Term {
    fn degree(&self) -> usize {
        self.vars.len()
    }
}

/// Polynomial over variables `0..nvars` in canonical form: terms sorted by
/// (degree, variable list), like terms combined, zero terms dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    pub nvars: usize,
    pub terms: Vec<Term>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: Vec::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Poly { nvars, terms: vec![Term { coeff: c, vars: Vec::new() }] }.canonical()
    }

    pub fn var(nvars: usize, v: usize) -> Self {
        assert!(v < nvars);
        Poly { nvars, terms: vec![Term { coeff: 1.0, vars: vec![v as u32] }] }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn canonical(mut self) -> Self {
        for t in &mut self.terms {
            t.vars.sort_unstable();
        }
        self.terms.sort_by(|a, b| (a.degree(), &a.vars).cmp(&(b.degree(), &b.vars)));
        let mut out: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in self.terms {
            match out.last_mut() {
                Some(last) if last.vars == t.vars => last.coeff += t.coeff,
                _ => out.push(t),
            }
        }
        out.retain(|t| t.coeff != 0.0);
        Poly { nvars: self.nvars, terms: out }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Poly { nvars: self.nvars, terms }.canonical()
    }

    pub fn scale(&self, c: f64) -> Poly {
        let terms = self
            .terms
            .iter()
            .map(|t| Term { coeff: c * t.coeff, vars: t.vars.clone() })
            .collect();
        Poly { nvars: self.nvars, terms }.canonical()
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut vars = a.vars.clone();
                vars.extend_from_slice(&b.vars);
                terms.push(Term { coeff: a.coeff * b.coeff, vars });
            }
        }
        Poly { nvars: self.nvars, terms }.canonical()
    }

    /// Exact partial derivative with respect to variable `v`.
    pub fn derivative(&self, v: usize) -> Poly {
        let v = v as u32;
        let mut terms = Vec::new();
        for t in &self.terms {
            let mult = t.vars.iter().filter(|&&w| w == v).count();
            if mult == 0 {
                continue;
            }
            let mut vars = t.vars.clone();
            let pos = vars.iter().position(|&w| w == v).unwrap();
            vars.remove(pos);
            terms.push(Term { coeff: t.coeff * mult as f64, vars });
        }
        Poly { nvars: self.nvars, terms }.canonical()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        let mut acc = 0.0;
        for t in &self.terms {
            let mut m = t.coeff;
            for &v in &t.vars {
                m *= x[v as usize];
            }
            acc += m;
        }
        acc
    }

    /// Drops every term containing a variable in `[lo, hi)` — i.e. restricts
    /// the polynomial to the subspace where those variables vanish.
    pub fn without_vars(&self, lo: usize, hi: usize) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter(|t| !t.vars.iter().any(|&v| (v as usize) >= lo && (v as usize) < hi))
            .cloned()
            .collect();
        Poly { nvars: self.nvars, terms }
    }

    /// Reinterprets the polynomial over a smaller variable set via the index
    /// map `keep[new] = old`. Panics if a term uses a dropped variable.
    pub fn rename_vars(&self, nvars: usize, map: &dyn Fn(u32) -> u32) -> Poly {
        let terms = self
            .terms
            .iter()
            .map(|t| Term { coeff: t.coeff, vars: t.vars.iter().map(|&v| map(v)).collect() })
            .collect();
        Poly { nvars, terms }.canonical()
    }

    /// Substitutes values for the first `vals.len()` variables and renames
    /// the remaining variables down to `0..(nvars - vals.len())`.
    pub fn eval_prefix(&self, vals: &[f64]) -> Poly {
        let k = vals.len();
        let mut terms = Vec::new();
        for t in &self.terms {
            let mut coeff = t.coeff;
            let mut vars = Vec::new();
            for &v in &t.vars {
                if (v as usize) < k {
                    coeff *= vals[v as usize];
                } else {
                    vars.push(v - k as u32);
                }
            }
            terms.push(Term { coeff, vars });
        }
        Poly { nvars: self.nvars - k, terms }.canonical()
    }

    /// Converts to an expression tree (variables keep their indices).
    pub fn to_expr(&self) -> Expr {
        if self.terms.is_empty() {
            return Expr::Num(0.0);
        }
        let mut acc: Option<Expr> = None;
        for t in &self.terms {
            let mut factor: Option<Expr> = None;
            let mut i = 0;
            while i < t.vars.len() {
                let v = t.vars[i];
                let mut count = 1;
                while i + count < t.vars.len() && t.vars[i + count] == v {
                    count += 1;
                }
                let base = Expr::Var(v as usize);
                let pow = if count == 1 { base } else { Expr::Pow(Box::new(base), count as i32) };
                factor = Some(match factor {
                    None => pow,
                    Some(f) => Expr::Mul(Box::new(f), Box::new(pow)),
                });
                i += count;
            }
            let term_expr = match factor {
                None => Expr::Num(t.coeff),
                Some(f) if t.coeff == 1.0 => f,
                Some(f) => Expr::Mul(Box::new(Expr::Num(t.coeff)), Box::new(f)),
            };
            acc = Some(match acc {
                None => term_expr,
                Some(a) => Expr::Add(Box::new(a), Box::new(term_expr)),
            });
        }
        acc.unwrap()
    }
}
