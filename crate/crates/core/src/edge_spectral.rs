//! Single-edge spectral data at complex energy: the fundamental pair c, s,
//! their endpoint derivatives, the asymmetry function a = (c - c~)/2, the
//! transfer and Dirichlet-to-Neumann matrices, Dirichlet eigenvalues, and the
//! identity checks tying them together.
//!
//! Integration scheme: the edge is partitioned so that every discontinuity of
//! q and of its reflection falls on a slice boundary, then each slice is
//! crossed with the fourth-order two-point Gauss Magnus propagator. Each step
//! matrix is exp of a traceless 2x2, evaluated through cos(sqrt z) and
//! sinc(sqrt z) so the result is entire in lambda, and the scheme is exact on
//! slices where q is constant. The partition is mirror-symmetric, which makes
//! a(lambda) vanish to rounding for symmetric potentials (palindromic step
//! products have equal diagonal entries).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{c64, cos_sqrt, newton_roots, sinc_sqrt, Matrix2, Region};
use crate::potential::Potential;

type C = Complex64;

/// Refuse 1/s(lambda) when |s| is at or below this.
pub const DIRICHLET_GUARD: f64 = 1e-8;

/// Endpoint spectral data of one edge at one energy.
#[derive(Debug, Clone, Copy)]
pub struct EdgeSpectral {
    pub lambda: C,
    pub c: C,
    pub s: C,
    pub c_prime: C,
    pub s_prime: C,
    /// a = (c - c~)/2 = (c - s')/2, the spectral asymmetry.
    pub a: C,
    /// b = (c + c~)/2.
    pub b: C,
}

impl EdgeSpectral {
    /// c~ = c of the reflected potential; equals s' of the forward run.
    pub fn c_tilde(&self) -> C {
        self.s_prime
    }
}

/// Interior values of the fundamental solutions along the slice grid.
#[derive(Debug, Clone)]
pub struct SolutionTrace {
    pub grid: SliceGrid,
    pub c_values: Vec<C>,
    pub s_values: Vec<C>,
    /// c of the reflected potential, integrated independently on the same grid.
    pub c_tilde_values: Vec<C>,
    pub psi_values: Option<Vec<C>>,
}

/// Slice partition of [0, L]: `points` are the propagation nodes and
/// `piece_ends` marks the indices of the smooth-piece boundaries (every piece
/// holds an even number of uniform panels, so composite Simpson applies
/// piece by piece).
#[derive(Debug, Clone)]
pub struct SliceGrid {
    pub points: Vec<f64>,
    pub piece_ends: Vec<usize>,
}

impl SliceGrid {
    /// Build the mirror-symmetric partition for `p` with roughly `slices`
    /// subintervals. Breakpoints of q and of its reflection are forced onto
    /// piece boundaries; mirrored pieces receive identical panel counts.
    pub fn build(p: &Potential, slices: usize) -> SliceGrid {
        let length = p.length();
        let slices = slices.max(1);
        let mut base = vec![0.0, length];
        for b in p.interior_breakpoints() {
            base.push(b);
            base.push(length - b);
        }
        base.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let tol = 1e-12 * length;
        base.dedup_by(|x, y| *x - *y <= tol);

        let npieces = base.len() - 1;
        // panel count per piece, even, mirrored pairs forced equal
        let mut counts = vec![0usize; npieces];
        for j in 0..npieces {
            let mirror = npieces - 1 - j;
            if counts[mirror] != 0 {
                counts[j] = counts[mirror];
                continue;
            }
            let len = base[j + 1] - base[j];
            let k = (slices as f64 * len / length / 2.0).round().max(1.0) as usize;
            counts[j] = 2 * k;
        }

        let mut points = vec![0.0];
        let mut piece_ends = vec![0usize];
        for j in 0..npieces {
            let (lo, hi) = (base[j], base[j + 1]);
            let k = counts[j];
            for i in 1..=k {
                let x = if i == k { hi } else { lo + (hi - lo) * i as f64 / k as f64 };
                points.push(x);
            }
            piece_ends.push(points.len() - 1);
        }
        SliceGrid { points, piece_ends }
    }

    /// Composite Simpson of tabulated values over the piece structure.
    pub fn simpson(&self, values: &[C]) -> C {
        assert_eq!(values.len(), self.points.len());
        let mut total = c64(0.0, 0.0);
        for w in self.piece_ends.windows(2) {
            let (i0, i1) = (w[0], w[1]);
            let n = i1 - i0; // even by construction
            let h = (self.points[i1] - self.points[i0]) / n as f64;
            let mut acc = values[i0] + values[i1];
            for (off, v) in values[i0 + 1..i1].iter().enumerate() {
                acc += *v * if off % 2 == 0 { 4.0 } else { 2.0 };
            }
            total += acc * (h / 3.0);
        }
        total
    }
}

/// One Magnus step across [x0, x0+h]: exp of the traceless matrix
/// [[d, h], [h(qbar - lambda), -d]] with q sampled at the two Gauss points.
fn step_matrix(p: &Potential, x0: f64, h: f64, lambda: C) -> Result<Matrix2> {
    let half = 0.5 * h;
    let offset = h * 0.5 / 3f64.sqrt();
    let q1 = p.evaluate(x0 + half - offset)?;
    let q2 = p.evaluate(x0 + half + offset)?;
    let w = c64(0.5 * (q1 + q2), 0.0) - lambda;
    let d = c64(3f64.sqrt() / 12.0 * h * h * (q1 - q2), 0.0);
    let zeta = -d * d - h * h * w;
    let cv = cos_sqrt(zeta);
    let sv = sinc_sqrt(zeta);
    Ok(Matrix2([
        [cv + sv * d, sv * h],
        [sv * h * w, cv - sv * d],
    ]))
}

/// Propagate the fundamental matrix [[c, s], [c', s']] across the grid,
/// recording the first row (and its x-derivatives) at every node.
fn propagate(p: &Potential, lambda: C, grid: &SliceGrid) -> Result<(Matrix2, Vec<C>, Vec<C>)> {
    let mut f = Matrix2::identity();
    let n = grid.points.len();
    let mut c_vals = Vec::with_capacity(n);
    let mut s_vals = Vec::with_capacity(n);
    c_vals.push(f.0[0][0]);
    s_vals.push(f.0[0][1]);
    for i in 0..n - 1 {
        let x0 = grid.points[i];
        let h = grid.points[i + 1] - x0;
        let m = step_matrix(p, x0, h, lambda)?;
        f = m.mul(&f);
        if !f.is_finite() {
            return Err(Error::Numeric(format!(
                "propagation overflow at x = {:.6}, lambda = {lambda}",
                grid.points[i + 1]
            )));
        }
        c_vals.push(f.0[0][0]);
        s_vals.push(f.0[0][1]);
    }
    Ok((f, c_vals, s_vals))
}

fn spectral_from_matrix(lambda: C, f: &Matrix2) -> EdgeSpectral {
    let (c, s, c_prime, s_prime) = (f.0[0][0], f.0[0][1], f.0[1][0], f.0[1][1]);
    EdgeSpectral {
        lambda,
        c,
        s,
        c_prime,
        s_prime,
        a: (c - s_prime) / 2.0,
        b: (c + s_prime) / 2.0,
    }
}

/// Endpoint data only (single forward propagation, no trace).
pub fn endpoint_data(p: &Potential, lambda: C, slices: usize) -> Result<EdgeSpectral> {
    let grid = SliceGrid::build(p, slices);
    let (f, _, _) = propagate(p, lambda, &grid)?;
    Ok(spectral_from_matrix(lambda, &f))
}

/// Fundamental solutions with interior traces; the c~ trace comes from an
/// independent integration of the reflected potential on the same grid.
pub fn fundamental_solutions(
    p: &Potential,
    lambda: C,
    slices: usize,
) -> Result<(EdgeSpectral, SolutionTrace)> {
    if slices < 1 {
        return Err(Error::Precondition("slices must be >= 1".into()));
    }
    let grid = SliceGrid::build(p, slices);
    let (f, c_values, s_values) = propagate(p, lambda, &grid)?;
    let refl = p.reflect();
    let (_, c_tilde_values, _) = propagate(&refl, lambda, &grid)?;
    let es = spectral_from_matrix(lambda, &f);
    Ok((
        es,
        SolutionTrace { grid, c_values, s_values, c_tilde_values, psi_values: None },
    ))
}

/// Transfer matrix in the inward-derivative convention:
/// (u(v), u'(v)) -> (u(w), u'(w)), equal to [[c, s], [-c', -c~]]; det = -1.
pub fn transfer_matrix(p: &Potential, lambda: C, slices: usize) -> Result<Matrix2> {
    let es = endpoint_data(p, lambda, slices)?;
    Ok(Matrix2([[es.c, es.s], [-es.c_prime, -es.s_prime]]))
}

/// DtN matrix (u(v), u(w)) -> (u'(v), u'(w)) with inward derivatives:
/// (1/s) [[-c, 1], [1, -c~]]. Refuses lambda inside the Dirichlet guard.
pub fn dtn_matrix(p: &Potential, lambda: C, slices: usize) -> Result<Matrix2> {
    let es = endpoint_data(p, lambda, slices)?;
    dtn_from_spectral(&es)
}

pub fn dtn_from_spectral(es: &EdgeSpectral) -> Result<Matrix2> {
    let abs_s = es.s.norm();
    if abs_s <= DIRICHLET_GUARD {
        return Err(Error::Pole { abs_s, edge: "edge".into() });
    }
    let inv_s = 1.0 / es.s;
    Ok(Matrix2([
        [-es.c * inv_s, inv_s],
        [inv_s, -es.s_prime * inv_s],
    ]))
}

/// Spectral asymmetry a(lambda) = (c - c~)/2 = tr T / 2.
pub fn a_function(p: &Potential, lambda: C, slices: usize) -> Result<C> {
    Ok(endpoint_data(p, lambda, slices)?.a)
}

pub fn b_function(p: &Potential, lambda: C, slices: usize) -> Result<C> {
    Ok(endpoint_data(p, lambda, slices)?.b)
}

/// All real roots of s(lambda) up to `lambda_max`, bracketed on a scan grid
/// and refined by bisection. Real lambda with a real potential keeps every
/// intermediate quantity real, so sign changes are reliable.
pub fn dirichlet_eigenvalues(p: &Potential, lambda_max: f64, slices: usize) -> Result<Vec<f64>> {
    if !lambda_max.is_finite() {
        return Err(Error::Domain("lambda_max must be finite".into()));
    }
    let length = p.length();
    let q_min = (0..=400)
        .map(|i| p.evaluate(length * i as f64 / 400.0).unwrap_or(f64::INFINITY))
        .fold(f64::INFINITY, f64::min);
    let lo = q_min;
    if lo >= lambda_max {
        return Ok(Vec::new());
    }
    let s_at = |lam: f64| -> Result<f64> {
        Ok(endpoint_data(p, c64(lam, 0.0), slices)?.s.re)
    };
    let dstep = ((std::f64::consts::PI / length).powi(2) / 4.0).clamp(1e-3, 1.0);
    let n = ((lambda_max - lo) / dstep).ceil() as usize + 1;
    let mut roots = Vec::new();
    let mut prev_lam = lo;
    let mut prev_s = s_at(prev_lam)?;
    for i in 1..=n {
        let lam = lo + (lambda_max - lo) * i as f64 / n as f64;
        let s = s_at(lam)?;
        if prev_s == 0.0 {
            roots.push(prev_lam);
        } else if prev_s * s < 0.0 {
            // bisection to ~1e-12 relative
            let (mut a, mut b) = (prev_lam, lam);
            let (mut fa, _) = (prev_s, s);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                let fm = s_at(m)?;
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if fa * fm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
                if (b - a).abs() < 1e-13 * m.abs().max(1.0) {
                    break;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev_lam = lam;
        prev_s = s;
    }
    if prev_s == 0.0 {
        roots.push(prev_lam);
    }
    Ok(roots)
}

/// Numerical surrogate for identity of the entire asymmetry functions:
/// true iff max over the grid of |a1 - a2| <= tol.
pub fn same_asymmetry_class(
    p1: &Potential,
    p2: &Potential,
    lambda_grid: &[C],
    tol: f64,
    slices: usize,
) -> Result<bool> {
    Ok(class_deviation(p1, p2, lambda_grid, slices)? <= tol)
}

pub fn class_deviation(p1: &Potential, p2: &Potential, lambda_grid: &[C], slices: usize) -> Result<f64> {
    if lambda_grid.is_empty() {
        return Err(Error::Precondition("lambda grid must be non-empty".into()));
    }
    let mut dev: f64 = 0.0;
    for &lam in lambda_grid {
        let a1 = a_function(p1, lam, slices)?;
        let a2 = a_function(p2, lam, slices)?;
        dev = dev.max((a1 - a2).norm());
    }
    Ok(dev)
}

/// Fixed grid used for symmetry / same-class preconditions.
pub fn default_class_grid() -> Vec<C> {
    vec![
        c64(-7.3, 0.0),
        c64(-2.1, 0.0),
        c64(1.7, 0.0),
        c64(6.9, 0.0),
        c64(13.1, 0.0),
        c64(25.9, 0.0),
        c64(4.2, 1.5),
        c64(9.4, -2.2),
        c64(18.6, 0.8),
    ]
}

/// A potential is treated as symmetric when its asymmetry function vanishes
/// on the default grid within `tol`.
pub fn is_symmetric(p: &Potential, tol: f64, slices: usize) -> Result<bool> {
    let zero = Potential::zero(p.length());
    // a of the zero potential is identically 0, so this measures max |a_p|.
    Ok(class_deviation(p, &zero, &default_class_grid(), slices)? <= tol)
}

/// Residuals of the direction-reversal relations, from independent
/// integrations of q and its reflection.
#[derive(Debug, Clone, Copy)]
pub struct CsRelationsReport {
    /// |s - s~|
    pub s_residual: f64,
    /// |c' - c~'|
    pub c_prime_residual: f64,
    /// |c - s~'|
    pub c_residual: f64,
    /// |s' - c~|
    pub s_prime_residual: f64,
}

impl CsRelationsReport {
    pub fn max(&self) -> f64 {
        self.s_residual
            .max(self.c_prime_residual)
            .max(self.c_residual)
            .max(self.s_prime_residual)
    }
}

pub fn check_csrelations(p: &Potential, lambda: C, slices: usize) -> Result<CsRelationsReport> {
    let fwd = endpoint_data(p, lambda, slices)?;
    let rev = endpoint_data(&p.reflect(), lambda, slices)?;
    Ok(CsRelationsReport {
        s_residual: (fwd.s - rev.s).norm(),
        c_prime_residual: (fwd.c_prime - rev.c_prime).norm(),
        c_residual: (fwd.c - rev.s_prime).norm(),
        s_prime_residual: (fwd.s_prime - rev.c).norm(),
    })
}

/// Residual of the odd-part integral identity
/// |c'(lambda) a(lambda) + int q_-(x) c(x) c~(x) dx|, quadrature on the trace.
pub fn check_intqcc(p: &Potential, lambda: C, slices: usize) -> Result<f64> {
    let (es, tr) = fundamental_solutions(p, lambda, slices)?;
    let length = p.length();
    let values: Vec<C> = tr
        .grid
        .points
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let q_minus = 0.5 * (p.evaluate(x).unwrap() - p.evaluate(length - x).unwrap());
            tr.c_values[i] * tr.c_tilde_values[i] * q_minus
        })
        .collect();
    let integral = tr.grid.simpson(&values);
    Ok((es.c_prime * es.a + integral).norm())
}

/// The eigen-solution at a ramification point, normalized by psi(0) = 1,
/// psi'(0) = -b/s, attached to the trace, plus its squared integral.
fn psi_data(p: &Potential, lambda0: C, slices: usize) -> Result<(EdgeSpectral, SolutionTrace, C)> {
    let (es, mut tr) = fundamental_solutions(p, lambda0, slices)?;
    if es.s.norm() <= DIRICHLET_GUARD {
        return Err(Error::Pole { abs_s: es.s.norm(), edge: "edge".into() });
    }
    let slope = -es.b / es.s;
    let psi: Vec<C> = tr
        .c_values
        .iter()
        .zip(&tr.s_values)
        .map(|(&cv, &sv)| cv + slope * sv)
        .collect();
    let sq: Vec<C> = psi.iter().map(|&v| v * v).collect();
    let integral = tr.grid.simpson(&sq);
    tr.psi_values = Some(psi);
    Ok((es, tr, integral))
}

/// Trace of the defective-DtN eigenfunction at a ramification point.
pub fn branch_eigenfunction(p: &Potential, lambda0: C, slices: usize) -> Result<SolutionTrace> {
    let a0 = a_function(p, lambda0, slices)?;
    let residual = (a0 * a0 + 1.0).norm();
    if residual >= 1e-8 {
        return Err(Error::NotBranchPoint { residual });
    }
    let (_, tr, _) = psi_data(p, lambda0, slices)?;
    Ok(tr)
}

/// At a ramification point (a(lambda0)^2 = -1), the derivative of the
/// asymmetry function equals -(s/2) int psi^2. Returns (formula value,
/// central finite difference of a with step 1e-5).
pub fn a_derivative_at_branch(p: &Potential, lambda0: C, slices: usize) -> Result<(C, C)> {
    let a0 = a_function(p, lambda0, slices)?;
    let residual = (a0 * a0 + 1.0).norm();
    if residual >= 1e-8 {
        return Err(Error::NotBranchPoint { residual });
    }
    let (es, _, integral) = psi_data(p, lambda0, slices)?;
    let formula = -es.s / 2.0 * integral;
    let h = 1e-5;
    let ap = a_function(p, lambda0 + c64(h, 0.0), slices)?;
    let am = a_function(p, lambda0 - c64(h, 0.0), slices)?;
    let fd = (ap - am) / (2.0 * h);
    Ok((formula, fd))
}

/// Roots of a(lambda)^2 + 1 in the region, paired with the residual at full
/// resolution. The multi-start Newton search runs on a coarse slicing (the
/// propagator is exact for table potentials at any slicing), then each root
/// is polished at the requested resolution.
pub fn asym_square_roots(p: &Potential, region: &Region, slices: usize) -> Vec<(C, f64)> {
    let coarse = slices.min(64);
    let f_coarse = |lam: C| a_function(p, lam, coarse).ok().map(|a| a * a + 1.0);
    let candidates = newton_roots(f_coarse, region, (20, 20), 1e-9);

    let f_full = |lam: C| a_function(p, lam, slices).ok().map(|a| a * a + 1.0);
    let mut out: Vec<(C, f64)> = Vec::new();
    'cand: for (start, _) in candidates {
        let mut z = start;
        let mut fz = match f_full(z) {
            Some(v) => v,
            None => continue,
        };
        for _ in 0..10 {
            if fz.norm() < 1e-11 {
                break;
            }
            let h = 1e-5 * z.norm().max(1.0);
            let (fp, fm) = match (f_full(z + c64(h, 0.0)), f_full(z - c64(h, 0.0))) {
                (Some(a), Some(b)) => (a, b),
                _ => continue 'cand,
            };
            let df = (fp - fm) / (2.0 * h);
            if df.norm() < 1e-300 {
                break;
            }
            z -= fz / df;
            fz = match f_full(z) {
                Some(v) => v,
                None => continue 'cand,
            };
        }
        // a^2 + 1 >= 1 on the real axis, so real "roots" are artifacts
        if fz.norm() > 1e-8 || !region.contains(z) || z.im.abs() < 1e-8 {
            continue;
        }
        match out.iter_mut().find(|(r, _)| (*r - z).norm() < 1e-6) {
            Some(entry) => {
                if fz.norm() < entry.1 {
                    *entry = (z, fz.norm());
                }
            }
            None => out.push((z, fz.norm())),
        }
    }
    out.sort_by(|a, b| {
        (a.0.re, a.0.im)
            .partial_cmp(&(b.0.re, b.0.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

/// Roots of a(lambda)^2 + 1 in the region together with int psi^2 at each.
/// The genericity condition holds when some entry has a nonzero integral.
pub fn genericity_check(p: &Potential, region: &Region, slices: usize) -> Result<Vec<(C, C)>> {
    let mut out = Vec::new();
    for (lam0, _res) in asym_square_roots(p, region, slices) {
        let (_, _, integral) = psi_data(p, lam0, slices)?;
        out.push((lam0, integral));
    }
    Ok(out)
}
