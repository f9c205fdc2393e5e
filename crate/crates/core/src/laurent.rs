//! Sparse Laurent polynomials in n variables with complex coefficients, and
//! determinants of small matrices over the ring. This is the exact algebra
//! carrying the dispersion determinant; coefficients are floats, so "zero"
//! means below a relative prune threshold.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

type C = Complex64;

/// Coefficients below `PRUNE_REL` times the largest coefficient are dropped
/// during normalization.
pub const PRUNE_REL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct LaurentPoly {
    nvars: usize,
    terms: BTreeMap<Vec<i32>, C>,
}

impl LaurentPoly {
    pub fn zero(nvars: usize) -> Self {
        LaurentPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, value: C) -> Self {
        Self::monomial(nvars, vec![0; nvars], value)
    }

    pub fn monomial(nvars: usize, exponents: Vec<i32>, coeff: C) -> Self {
        assert_eq!(exponents.len(), nvars, "exponent vector length must equal nvars");
        let mut terms = BTreeMap::new();
        if coeff.norm() > 0.0 {
            terms.insert(exponents, coeff);
        }
        LaurentPoly { nvars, terms }
    }

    /// Single variable z_i (zero-based).
    pub fn variable(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(nvars, e, C::new(1.0, 0.0))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i32>, &C)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exponents: &[i32]) -> C {
        self.terms.get(exponents).copied().unwrap_or(C::new(0.0, 0.0))
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drop coefficients below the relative prune threshold.
    pub fn normalize(mut self) -> Self {
        let cut = PRUNE_REL * self.max_coeff_norm();
        self.terms.retain(|_, c| c.norm() > cut);
        self
    }

    fn check_nvars(&self, other: &LaurentPoly) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::Precondition(format!(
                "variable count mismatch: {} vs {}",
                self.nvars, other.nvars
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &LaurentPoly) -> Result<LaurentPoly> {
        self.check_nvars(other)?;
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            *terms.entry(e.clone()).or_insert(C::new(0.0, 0.0)) += c;
        }
        Ok(LaurentPoly { nvars: self.nvars, terms }.normalize())
    }

    pub fn sub(&self, other: &LaurentPoly) -> Result<LaurentPoly> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> LaurentPoly {
        LaurentPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, k: C) -> LaurentPoly {
        LaurentPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect(),
        }
        .normalize()
    }

    pub fn mul(&self, other: &LaurentPoly) -> Result<LaurentPoly> {
        self.check_nvars(other)?;
        let mut terms: BTreeMap<Vec<i32>, C> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<i32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                *terms.entry(e).or_insert(C::new(0.0, 0.0)) += ca * cb;
            }
        }
        Ok(LaurentPoly { nvars: self.nvars, terms }.normalize())
    }

    /// Evaluate at a point with all components nonzero.
    pub fn eval(&self, z: &[C]) -> Result<C> {
        if z.len() != self.nvars {
            return Err(Error::Precondition(format!(
                "evaluation point has {} components, expected {}",
                z.len(),
                self.nvars
            )));
        }
        if z.iter().any(|zi| zi.norm() == 0.0) {
            return Err(Error::Domain("Laurent evaluation requires nonzero components".into()));
        }
        let mut acc = C::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut term = *c;
            for (zi, &k) in z.iter().zip(e) {
                term *= zi.powi(k);
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Max coefficient magnitude of (a - b), relative to a's largest
    /// coefficient; 0 when both are zero.
    pub fn residual(&self, other: &LaurentPoly) -> f64 {
        let scale = self.max_coeff_norm();
        let mut diff: BTreeMap<&Vec<i32>, C> = BTreeMap::new();
        for (e, c) in &self.terms {
            *diff.entry(e).or_insert(C::new(0.0, 0.0)) += c;
        }
        for (e, c) in &other.terms {
            *diff.entry(e).or_insert(C::new(0.0, 0.0)) -= c;
        }
        let worst = diff.values().map(|c| c.norm()).fold(0.0, f64::max);
        if worst == 0.0 {
            0.0
        } else if scale == 0.0 {
            f64::INFINITY
        } else {
            worst / scale
        }
    }

    /// True when some term with a nonzero exponent vector survives the given
    /// relative threshold.
    pub fn depends_on_z(&self, rel_threshold: f64) -> bool {
        let cut = rel_threshold * self.max_coeff_norm();
        self.terms
            .iter()
            .any(|(e, c)| e.iter().any(|&k| k != 0) && c.norm() > cut)
    }

    /// Deterministic serialized form: terms sorted by exponent vector.
    pub fn serial_terms(&self) -> Vec<SerialTerm> {
        self.terms
            .iter()
            .map(|(e, c)| SerialTerm { exponents: e.clone(), re: c.re, im: c.im })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SerialTerm {
    pub exponents: Vec<i32>,
    pub re: f64,
    pub im: f64,
}

/// Square matrix over the Laurent ring.
#[derive(Debug, Clone)]
pub struct LaurentMatrix {
    m: usize,
    nvars: usize,
    entries: Vec<LaurentPoly>,
}

impl LaurentMatrix {
    pub fn zero(m: usize, nvars: usize) -> Self {
        LaurentMatrix {
            m,
            nvars,
            entries: vec![LaurentPoly::zero(nvars); m * m],
        }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn entry(&self, i: usize, j: usize) -> &LaurentPoly {
        &self.entries[i * self.m + j]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut LaurentPoly {
        &mut self.entries[i * self.m + j]
    }

    pub fn set(&mut self, i: usize, j: usize, p: LaurentPoly) {
        assert_eq!(p.nvars(), self.nvars);
        self.entries[i * self.m + j] = p;
    }

    /// Add a constant to a diagonal entry.
    pub fn add_diag(&mut self, i: usize, value: C) -> Result<()> {
        let cur = self.entry(i, i).clone();
        let c = LaurentPoly::constant(self.nvars, value);
        self.set(i, i, cur.add(&c)?);
        Ok(())
    }

    /// Numeric evaluation at a point.
    pub fn eval(&self, z: &[C]) -> Result<Vec<Vec<C>>> {
        let mut out = vec![vec![C::new(0.0, 0.0); self.m]; self.m];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = self.entry(i, j).eval(z)?;
            }
        }
        Ok(out)
    }

    /// Determinant by cofactor expansion along the sparsest row. Matrices in
    /// this toolkit are tiny (m <= 4 for the builtin models); m > 10 is
    /// refused.
    pub fn det(&self) -> Result<LaurentPoly> {
        if self.m > 10 {
            return Err(Error::Precondition(format!(
                "determinant dimension {} exceeds the supported bound 10",
                self.m
            )));
        }
        let idx: Vec<usize> = (0..self.m).collect();
        Ok(self.det_minor(&idx, &idx))
    }

    fn det_minor(&self, rows: &[usize], cols: &[usize]) -> LaurentPoly {
        let n = rows.len();
        if n == 0 {
            return LaurentPoly::constant(self.nvars, C::new(1.0, 0.0));
        }
        if n == 1 {
            return self.entry(rows[0], cols[0]).clone();
        }
        // pick the sparsest row
        let (pivot, _) = rows
            .iter()
            .enumerate()
            .map(|(k, &r)| {
                let nonzero: usize = cols.iter().filter(|&&c| !self.entry(r, c).is_zero()).count();
                (k, nonzero)
            })
            .min_by_key(|&(_, n)| n)
            .unwrap();
        let r = rows[pivot];
        let sub_rows: Vec<usize> = rows.iter().copied().filter(|&x| x != r).collect();
        let mut acc = LaurentPoly::zero(self.nvars);
        for (j, &c) in cols.iter().enumerate() {
            let e = self.entry(r, c);
            if e.is_zero() {
                continue;
            }
            let sub_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
            let minor = self.det_minor(&sub_rows, &sub_cols);
            let sign = if (pivot + j) % 2 == 0 { 1.0 } else { -1.0 };
            let term = e.mul(&minor).expect("same nvars").scale(C::new(sign, 0.0));
            acc = acc.add(&term).expect("same nvars");
        }
        acc
    }
}
