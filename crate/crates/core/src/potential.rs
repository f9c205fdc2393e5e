//! Real potentials q(x) on an edge of length L, with exact reflection,
//! even/odd decomposition and half-edge restriction.
//!
//! Only a handful of shapes are supported (all dense in L2): the table kinds
//! (piecewise-constant, sample tables) make reflection and decomposition
//! exact, and the trigonometric kind stays closed under both because the
//! series keeps its own fundamental period when an edge is cut in half.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of a potential, as it appears in graph-spec files. Lengths live on
/// the edges; a `PotentialKind` is instantiated at a given length to obtain a
/// [`Potential`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PotentialKind {
    Zero,
    Constant {
        value: f64,
    },
    /// Piecewise-constant: `values[i]` on `[breaks[i-1], breaks[i])`, with
    /// `breaks` the strictly increasing interior breakpoints.
    Piecewise {
        breaks: Vec<f64>,
        values: Vec<f64>,
    },
    /// Finite series `sum_k cos[k-1] cos(2 pi k x / P) + sin[k-1] sin(2 pi k x / P)`.
    /// `period` defaults to the instantiation length.
    Trig {
        cos: Vec<f64>,
        sin: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        period: Option<f64>,
    },
    /// Sample table, read as piecewise-constant on a uniform grid.
    Samples {
        values: Vec<f64>,
    },
}

/// A potential together with the edge length it lives on.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    kind: PotentialKind,
    length: f64,
}

impl Potential {
    pub fn new(kind: PotentialKind, length: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Domain(format!("edge length must be positive, got {length}")));
        }
        match &kind {
            PotentialKind::Zero => {}
            PotentialKind::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::Domain("constant potential value must be finite".into()));
                }
            }
            PotentialKind::Piecewise { breaks, values } => {
                if values.len() != breaks.len() + 1 {
                    return Err(Error::Domain(format!(
                        "piecewise potential needs {} values for {} breaks, got {}",
                        breaks.len() + 1,
                        breaks.len(),
                        values.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Domain("piecewise potential values must be finite".into()));
                }
                let mut prev = 0.0;
                for &b in breaks {
                    if !(b.is_finite() && b > prev && b < length) {
                        return Err(Error::Domain(format!(
                            "piecewise breakpoints must be strictly increasing inside (0, {length}), got {b}"
                        )));
                    }
                    prev = b;
                }
            }
            PotentialKind::Trig { cos, sin, period } => {
                if cos.iter().chain(sin.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::Domain("trig coefficients must be finite".into()));
                }
                if let Some(p) = period {
                    if !(p.is_finite() && *p > 0.0) {
                        return Err(Error::Domain("trig period must be positive".into()));
                    }
                }
            }
            PotentialKind::Samples { values } => {
                if values.is_empty() {
                    return Err(Error::Domain("sample table must be non-empty".into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Domain("sample values must be finite".into()));
                }
            }
        }
        Ok(Potential { kind, length })
    }

    pub fn zero(length: f64) -> Self {
        Potential::new(PotentialKind::Zero, length).expect("valid")
    }

    pub fn constant(value: f64, length: f64) -> Self {
        Potential::new(PotentialKind::Constant { value }, length).expect("finite value")
    }

    /// The recurring asymmetric example: height `h` on `[0, x0)`, zero after.
    pub fn step(h: f64, x0: f64, length: f64) -> Self {
        Potential::new(
            PotentialKind::Piecewise { breaks: vec![x0], values: vec![h, 0.0] },
            length,
        )
        .expect("valid step")
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    fn trig_period(&self) -> f64 {
        match &self.kind {
            PotentialKind::Trig { period, .. } => period.unwrap_or(self.length),
            _ => self.length,
        }
    }

    /// q(x) for x in [0, L].
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !(x.is_finite() && x >= 0.0 && x <= self.length) {
            return Err(Error::Domain(format!(
                "x = {x} outside the edge [0, {}]",
                self.length
            )));
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: f64) -> f64 {
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Constant { value } => *value,
            PotentialKind::Piecewise { breaks, values } => {
                let i = breaks.partition_point(|&b| b <= x);
                values[i]
            }
            PotentialKind::Trig { cos, sin, .. } => {
                let omega = 2.0 * std::f64::consts::PI / self.trig_period();
                let mut q = 0.0;
                for (k, a) in cos.iter().enumerate() {
                    q += a * (omega * (k + 1) as f64 * x).cos();
                }
                for (k, b) in sin.iter().enumerate() {
                    q += b * (omega * (k + 1) as f64 * x).sin();
                }
                q
            }
            PotentialKind::Samples { values } => {
                let n = values.len();
                let i = ((x / self.length * n as f64).floor() as usize).min(n - 1);
                values[i]
            }
        }
    }

    /// Reflection about the edge center: returns q~ with q~(x) = q(L - x).
    pub fn reflect(&self) -> Potential {
        let length = self.length;
        let kind = match &self.kind {
            PotentialKind::Zero => PotentialKind::Zero,
            PotentialKind::Constant { value } => PotentialKind::Constant { value: *value },
            PotentialKind::Piecewise { breaks, values } => {
                let rb: Vec<f64> = breaks.iter().rev().map(|&b| length - b).collect();
                let rv: Vec<f64> = values.iter().rev().copied().collect();
                PotentialKind::Piecewise { breaks: rb, values: rv }
            }
            PotentialKind::Trig { cos, sin, .. } => {
                // cos(w k (L-x)) and sin(w k (L-x)) expand back into the same
                // basis through the rotation by theta_k = w k L.
                let period = self.trig_period();
                let omega = 2.0 * std::f64::consts::PI / period;
                let n = cos.len().max(sin.len());
                let mut rc = vec![0.0; n];
                let mut rs = vec![0.0; n];
                for k in 0..n {
                    let a = cos.get(k).copied().unwrap_or(0.0);
                    let b = sin.get(k).copied().unwrap_or(0.0);
                    let theta = omega * (k + 1) as f64 * length;
                    rc[k] = a * theta.cos() + b * theta.sin();
                    rs[k] = a * theta.sin() - b * theta.cos();
                }
                PotentialKind::Trig { cos: rc, sin: rs, period: Some(period) }
            }
            PotentialKind::Samples { values } => {
                PotentialKind::Samples { values: values.iter().rev().copied().collect() }
            }
        };
        Potential { kind, length }
    }

    /// Even/odd decomposition about the edge center:
    /// q+ = (q + q~)/2, q- = (q - q~)/2, so q = q+ + q- pointwise.
    pub fn even_odd_parts(&self) -> (Potential, Potential) {
        let length = self.length;
        match &self.kind {
            PotentialKind::Zero => (Potential::zero(length), Potential::zero(length)),
            PotentialKind::Constant { value } => {
                (Potential::constant(*value, length), Potential::zero(length))
            }
            PotentialKind::Piecewise { .. } => {
                let refl = self.reflect();
                let merged = merge_breaks(self.interior_breakpoints(), refl.interior_breakpoints(), length);
                let mut even = Vec::with_capacity(merged.len() + 1);
                let mut odd = Vec::with_capacity(merged.len() + 1);
                let mut lo = 0.0;
                for i in 0..=merged.len() {
                    let hi = if i < merged.len() { merged[i] } else { length };
                    let mid = 0.5 * (lo + hi);
                    let q = self.eval_unchecked(mid);
                    let qr = refl.eval_unchecked(mid);
                    even.push(0.5 * (q + qr));
                    odd.push(0.5 * (q - qr));
                    lo = hi;
                }
                (
                    Potential::new(PotentialKind::Piecewise { breaks: merged.clone(), values: even }, length)
                        .expect("valid merged table"),
                    Potential::new(PotentialKind::Piecewise { breaks: merged, values: odd }, length)
                        .expect("valid merged table"),
                )
            }
            PotentialKind::Trig { cos, sin, .. } => {
                let refl = self.reflect();
                let (rc, rs) = match refl.kind {
                    PotentialKind::Trig { cos, sin, .. } => (cos, sin),
                    _ => unreachable!(),
                };
                let period = Some(self.trig_period());
                let half = |a: &[f64], b: &[f64], sgn: f64| -> Vec<f64> {
                    let n = a.len().max(b.len());
                    (0..n)
                        .map(|k| {
                            0.5 * (a.get(k).copied().unwrap_or(0.0)
                                + sgn * b.get(k).copied().unwrap_or(0.0))
                        })
                        .collect()
                };
                let even = PotentialKind::Trig {
                    cos: half(cos, &rc, 1.0),
                    sin: half(sin, &rs, 1.0),
                    period,
                };
                let odd = PotentialKind::Trig {
                    cos: half(cos, &rc, -1.0),
                    sin: half(sin, &rs, -1.0),
                    period,
                };
                (
                    Potential { kind: even, length },
                    Potential { kind: odd, length },
                )
            }
            PotentialKind::Samples { values } => {
                let n = values.len();
                let even: Vec<f64> = (0..n).map(|i| 0.5 * (values[i] + values[n - 1 - i])).collect();
                let odd: Vec<f64> = (0..n).map(|i| 0.5 * (values[i] - values[n - 1 - i])).collect();
                (
                    Potential { kind: PotentialKind::Samples { values: even }, length },
                    Potential { kind: PotentialKind::Samples { values: odd }, length },
                )
            }
        }
    }

    /// Restriction to the first half of the edge, used when a unit coupling
    /// edge is folded into a dangling edge of length L/2.
    pub fn first_half(&self) -> Result<Potential> {
        let half = 0.5 * self.length;
        let kind = match &self.kind {
            PotentialKind::Zero => PotentialKind::Zero,
            PotentialKind::Constant { value } => PotentialKind::Constant { value: *value },
            PotentialKind::Piecewise { breaks, values } => {
                let keep = breaks.partition_point(|&b| b < half - 1e-12 * self.length);
                PotentialKind::Piecewise {
                    breaks: breaks[..keep].to_vec(),
                    values: values[..=keep].to_vec(),
                }
            }
            PotentialKind::Trig { cos, sin, .. } => PotentialKind::Trig {
                cos: cos.clone(),
                sin: sin.clone(),
                period: Some(self.trig_period()),
            },
            PotentialKind::Samples { values } => {
                if values.len() % 2 != 0 {
                    return Err(Error::Precondition(
                        "sample table needs an even number of cells to halve exactly".into(),
                    ));
                }
                PotentialKind::Samples { values: values[..values.len() / 2].to_vec() }
            }
        };
        Potential::new(kind, half)
    }

    /// Interior discontinuity points, in (0, L).
    pub fn interior_breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            PotentialKind::Piecewise { breaks, .. } => breaks.clone(),
            PotentialKind::Samples { values } => {
                let n = values.len();
                (1..n).map(|i| self.length * i as f64 / n as f64).collect()
            }
            _ => Vec::new(),
        }
    }
}

/// Merge two sorted breakpoint lists, deduplicating within 1e-12 * L so that
/// a point and its reflected image collapse to one breakpoint.
fn merge_breaks(a: Vec<f64>, b: Vec<f64>, length: f64) -> Vec<f64> {
    let mut all = a;
    all.extend(b);
    all.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let tol = 1e-12 * length;
    let mut merged: Vec<f64> = Vec::with_capacity(all.len());
    for x in all {
        if merged.last().is_none_or(|&m| x - m > tol) {
            merged.push(x);
        }
    }
    merged
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_basic_kinds() {
        assert_eq!(Potential::zero(1.0).evaluate(0.3).unwrap(), 0.0);
        assert_eq!(Potential::constant(2.0, 1.0).evaluate(0.9).unwrap(), 2.0);
        let step = Potential::step(5.0, 0.5, 1.0);
        assert_eq!(step.evaluate(0.25).unwrap(), 5.0);
        assert_eq!(step.evaluate(0.75).unwrap(), 0.0);
        assert_eq!(step.evaluate(0.5).unwrap(), 0.0);
    }

    #[test]
    fn evaluate_rejects_out_of_range() {
        let p = Potential::zero(1.0);
        assert!(p.evaluate(-0.1).is_err());
        assert!(p.evaluate(1.1).is_err());
    }

    #[test]
    fn reflect_table_kinds_is_exact() {
        let step = Potential::step(5.0, 0.5, 1.0);
        let r = step.reflect();
        assert_eq!(r.evaluate(0.25).unwrap(), 0.0);
        assert_eq!(r.evaluate(0.75).unwrap(), 5.0);
        // involution
        let rr = r.reflect();
        for &x in &[0.1, 0.25, 0.4, 0.6, 0.9] {
            assert_eq!(rr.evaluate(x).unwrap(), step.evaluate(x).unwrap());
        }
        assert_eq!(Potential::zero(1.0).reflect().evaluate(0.3).unwrap(), 0.0);
        assert_eq!(Potential::constant(2.0, 1.0).reflect().evaluate(0.3).unwrap(), 2.0);
    }

    #[test]
    fn reflect_trig_matches_pointwise() {
        let p = Potential::new(
            PotentialKind::Trig { cos: vec![1.0, -0.3], sin: vec![0.5], period: None },
            1.0,
        )
        .unwrap();
        let r = p.reflect();
        for i in 0..23 {
            let x = i as f64 / 22.0;
            let want = p.evaluate(1.0 - x).unwrap();
            let got = r.evaluate(x).unwrap();
            assert!((want - got).abs() < 1e-14, "x={x}: {want} vs {got}");
        }
        // involution within rounding
        let rr = r.reflect();
        for i in 0..7 {
            let x = i as f64 / 6.0;
            assert!((rr.evaluate(x).unwrap() - p.evaluate(x).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn even_odd_parts_reconstruct_and_alternate() {
        let cases = vec![
            Potential::zero(1.0),
            Potential::constant(4.0, 1.0),
            Potential::step(5.0, 0.5, 1.0),
            Potential::new(
                PotentialKind::Trig { cos: vec![1.0], sin: vec![0.5, 0.25], period: None },
                1.0,
            )
            .unwrap(),
            Potential::new(PotentialKind::Samples { values: vec![1.0, 3.0, -2.0, 0.5] }, 1.0)
                .unwrap(),
        ];
        for p in cases {
            let (even, odd) = p.even_odd_parts();
            // sample off the table breakpoints, where the half-open lookup
            // convention makes the pointwise identities ill-posed
            for i in 0..=40 {
                let x = i as f64 * 0.024975;
                let q = p.evaluate(x).unwrap();
                let qp = even.evaluate(x).unwrap();
                let qm = odd.evaluate(x).unwrap();
                assert!((qp + qm - q).abs() < 1e-13, "sum at {x}");
                let xr = 1.0 - x;
                assert!((qp - even.evaluate(xr).unwrap()).abs() < 1e-13, "even at {x}");
                assert!((qm + odd.evaluate(xr).unwrap()).abs() < 1e-13, "odd at {x}");
            }
        }
    }

    #[test]
    fn even_odd_of_step_is_the_expected_table() {
        let (even, odd) = Potential::step(5.0, 0.5, 1.0).even_odd_parts();
        assert_eq!(even.evaluate(0.2).unwrap(), 2.5);
        assert_eq!(even.evaluate(0.8).unwrap(), 2.5);
        assert_eq!(odd.evaluate(0.2).unwrap(), 2.5);
        assert_eq!(odd.evaluate(0.8).unwrap(), -2.5);
    }

    #[test]
    fn first_half_restricts() {
        let step = Potential::step(5.0, 0.5, 1.0);
        let h = step.first_half().unwrap();
        assert_eq!(h.length(), 0.5);
        assert_eq!(h.evaluate(0.2).unwrap(), 5.0);
        assert_eq!(h.evaluate(0.49).unwrap(), 5.0);

        let trig = Potential::new(
            PotentialKind::Trig { cos: vec![1.0], sin: vec![0.5], period: None },
            1.0,
        )
        .unwrap();
        let th = trig.first_half().unwrap();
        for i in 0..11 {
            let x = 0.5 * i as f64 / 10.0;
            assert!((th.evaluate(x).unwrap() - trig.evaluate(x).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(Potential::new(
            PotentialKind::Piecewise { breaks: vec![0.7, 0.3], values: vec![1.0, 2.0, 3.0] },
            1.0
        )
        .is_err());
        assert!(Potential::new(
            PotentialKind::Piecewise { breaks: vec![0.5], values: vec![1.0] },
            1.0
        )
        .is_err());
        assert!(Potential::new(PotentialKind::Constant { value: f64::NAN }, 1.0).is_err());
    }

    #[test]
    fn file_form_round_trips() {
        let kinds = vec![
            PotentialKind::Zero,
            PotentialKind::Constant { value: 3.0 },
            PotentialKind::Piecewise { breaks: vec![0.5], values: vec![5.0, 0.0] },
            PotentialKind::Trig { cos: vec![1.0], sin: vec![0.5], period: None },
            PotentialKind::Samples { values: vec![1.0, 2.0] },
        ];
        for k in kinds {
            let text = serde_json::to_string(&k).unwrap();
            let back: PotentialKind = serde_json::from_str(&text).unwrap();
            assert_eq!(k, back);
        }
        let parsed: PotentialKind = serde_json::from_str(r#"{"kind":"constant","value":2.5}"#).unwrap();
        assert_eq!(parsed, PotentialKind::Constant { value: 2.5 });
    }
}
