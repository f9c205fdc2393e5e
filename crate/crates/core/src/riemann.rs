//! The two-sheeted structure mu^2 = a(lambda)^2 + 1: branch values,
//! eigenprojections of the traceless coupling matrix, ramification points,
//! and continuation of mu along paths in the lambda plane.

use num_complex::Complex64;

use crate::edge_spectral::a_function;
use crate::error::{Error, Result};
use crate::numerics::{c64, Matrix2, Region};
use crate::potential::Potential;

type C = Complex64;

/// A ramification point lambda0 with a(lambda0) = +i or -i.
#[derive(Debug, Clone, Copy)]
pub struct BranchPoint {
    pub lambda0: C,
    /// +1 for a(lambda0) = i, -1 for a(lambda0) = -i.
    pub sign: i8,
    pub newton_residual: f64,
}

/// The two square roots of a^2 + 1, principal branch first (nonnegative real
/// part; nonnegative imaginary part on the cut).
pub fn mu_branches(a_value: C) -> (C, C) {
    let mu = (a_value * a_value + 1.0).sqrt();
    (mu, -mu)
}

/// Eigenprojection of N = [[-a, 1], [1, a]] for eigenvalue mu:
/// P = (1/2mu) [[mu - a, 1], [1, mu + a]]. Undefined at ramification points.
pub fn eigenprojection(a_value: C, mu: C) -> Result<Matrix2> {
    if mu.norm() <= 1e-12 {
        return Err(Error::Precondition(
            "eigenprojection is singular at a ramification point (mu ~ 0)".into(),
        ));
    }
    if (mu * mu - (a_value * a_value + 1.0)).norm() > 1e-10 {
        return Err(Error::Precondition("mu^2 != a^2 + 1".into()));
    }
    let k = 1.0 / (2.0 * mu);
    Ok(Matrix2([
        [(mu - a_value) * k, k],
        [k, (mu + a_value) * k],
    ]))
}

/// All ramification points in the region: roots of a(lambda)^2 + 1 located by
/// multi-start Newton, classified by the sign of a there.
pub fn branch_points(p: &Potential, region: &Region, slices: usize) -> Result<Vec<BranchPoint>> {
    let mut out = Vec::new();
    for (lam0, residual) in crate::edge_spectral::asym_square_roots(p, region, slices) {
        let a0 = a_function(p, lam0, slices)?;
        let sign = if (a0 - c64(0.0, 1.0)).norm() <= (a0 + c64(0.0, 1.0)).norm() { 1 } else { -1 };
        out.push(BranchPoint { lambda0: lam0, sign, newton_residual: residual });
    }
    Ok(out)
}

/// Continue mu = sqrt(a^2 + 1) along a lambda path, starting from
/// start_sign times the principal root and picking, at every step, the square
/// root closer to the previous value. Errors out when the two choices are
/// equally close (the step straddled a branch point or is too large).
pub fn continue_mu(p: &Potential, path: &[C], start_sign: i8, slices: usize) -> Result<Vec<C>> {
    if path.is_empty() {
        return Err(Error::Precondition("path must be non-empty".into()));
    }
    let sgn = match start_sign {
        1 => 1.0,
        -1 => -1.0,
        _ => return Err(Error::Precondition("start_sign must be +1 or -1".into())),
    };
    let mut out = Vec::with_capacity(path.len());
    let a0 = a_function(p, path[0], slices)?;
    let mut prev = mu_branches(a0).0 * sgn;
    out.push(prev);
    for (step, &lam) in path.iter().enumerate().skip(1) {
        let a = a_function(p, lam, slices)?;
        let (mu, mu_neg) = mu_branches(a);
        let (d_pos, d_neg) = ((mu - prev).norm(), (mu_neg - prev).norm());
        let chosen = if d_pos < d_neg { mu } else { mu_neg };
        let (d_min, d_max) = (d_pos.min(d_neg), d_pos.max(d_neg));
        // ambiguous when the rejected branch is about as close as the chosen one
        if d_max - d_min <= 1e-9 * (1.0 + d_max) && d_min > 1e-12 {
            return Err(Error::ContinuationAmbiguity { step });
        }
        prev = chosen;
        out.push(prev);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn mu_branch_values() {
        let (m1, m2) = mu_branches(c64(0.0, 0.0));
        assert!((m1 - c64(1.0, 0.0)).norm() < 1e-15);
        assert!((m2 + c64(1.0, 0.0)).norm() < 1e-15);
        let (m1, _) = mu_branches(c64(0.0, 1.0));
        assert!(m1.norm() < 1e-15);
        let (m1, m2) = mu_branches(c64(1.0, 0.0));
        assert!((m1 - c64(2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!((m2 + c64(2f64.sqrt(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn mu_squares_back() {
        for &(re, im) in &[(0.3, -1.2), (2.0, 0.0), (-0.5, 0.9), (0.0, 2.0)] {
            let a = c64(re, im);
            let (mu, mu_neg) = mu_branches(a);
            assert!((mu * mu - (a * a + 1.0)).norm() < 1e-14);
            assert!((mu_neg * mu_neg - (a * a + 1.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn projection_values_and_algebra() {
        let p = eigenprojection(c64(0.0, 0.0), c64(1.0, 0.0)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((p.0[i][j] - c64(0.5, 0.0)).norm() < 1e-15);
            }
        }
        let p = eigenprojection(c64(0.0, 0.0), c64(-1.0, 0.0)).unwrap();
        assert!((p.0[0][0] - c64(0.5, 0.0)).norm() < 1e-15);
        assert!((p.0[0][1] + c64(0.5, 0.0)).norm() < 1e-15);

        for &(re, im) in &[(1.0, 0.0), (0.4, -0.8), (-1.3, 2.0)] {
            let a = c64(re, im);
            let (mu, mu_neg) = mu_branches(a);
            let p_pos = eigenprojection(a, mu).unwrap();
            let p_neg = eigenprojection(a, mu_neg).unwrap();
            // idempotent
            assert!(p_pos.mul(&p_pos).sub(&p_pos).norm_max() < 1e-10);
            // complementary
            let sum = p_pos.add(&p_neg);
            assert!(sum.sub(&Matrix2::identity()).norm_max() < 1e-10);
            // N P = mu P
            let n = Matrix2([[-a, c64(1.0, 0.0)], [c64(1.0, 0.0), a]]);
            assert!(n.mul(&p_pos).sub(&p_pos.scale(mu)).norm_max() < 1e-10);
            assert!(n.mul(&p_neg).sub(&p_neg.scale(mu_neg)).norm_max() < 1e-10);
        }
    }

    #[test]
    fn projection_rejects_ramification() {
        assert!(eigenprojection(c64(0.0, 1.0), c64(0.0, 0.0)).is_err());
        assert!(eigenprojection(c64(0.0, 0.0), c64(2.0, 0.0)).is_err());
    }

    #[test]
    fn branch_points_of_symmetric_potential_absent() {
        let region = Region::new(-20.0, 20.0, -20.0, 20.0);
        let pts = branch_points(&Potential::constant(3.0, 1.0), &region, 256).unwrap();
        assert!(pts.is_empty());
    }

    #[test]
    fn branch_points_of_step_and_conjugation_pairing() {
        let p = Potential::step(5.0, 0.5, 1.0);
        let region = Region::new(-10.0, 40.0, -30.0, 30.0);
        let pts = branch_points(&p, &region, 512).unwrap();
        assert!(pts.len() >= 2, "found {}", pts.len());
        for bp in &pts {
            let a0 = a_function(&p, bp.lambda0, 1024).unwrap();
            let target = c64(0.0, bp.sign as f64);
            assert!((a0 - target).norm() < 1e-8, "sign check at {}", bp.lambda0);
            // conjugate partner with the opposite sign
            let partner = pts.iter().find(|q| {
                (q.lambda0 - bp.lambda0.conj()).norm() < 1e-5 && q.sign == -bp.sign
            });
            assert!(partner.is_some(), "missing conjugate of {}", bp.lambda0);
        }
    }

    fn circle(center: C, radius: f64, n: usize) -> Vec<C> {
        (0..=n)
            .map(|k| center + C::from_polar(radius, 2.0 * PI * k as f64 / n as f64))
            .collect()
    }

    #[test]
    fn continuation_constant_for_symmetric() {
        let path = circle(c64(5.0, 0.0), 2.0, 64);
        let mus = continue_mu(&Potential::zero(1.0), &path, 1, 128).unwrap();
        for mu in mus {
            assert!((mu - c64(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn monodromy_flips_branch_around_ramification_point() {
        let p = Potential::step(5.0, 0.5, 1.0);
        let region = Region::new(-10.0, 40.0, 0.5, 40.0);
        let pts = branch_points(&p, &region, 512).unwrap();
        assert!(!pts.is_empty());
        let bp = pts[0];
        // radius small enough to enclose only this point
        let mut radius: f64 = 0.5;
        for other in &pts[1..] {
            radius = radius.min(0.4 * (other.lambda0 - bp.lambda0).norm());
        }
        let path = circle(bp.lambda0, radius, 400);
        let mus = continue_mu(&p, &path, 1, 512).unwrap();
        let (first, last) = (mus[0], *mus.last().unwrap());
        assert!(
            (last + first).norm() < 1e-6,
            "monodromy: start {first}, end {last}, radius {radius}"
        );

        // empty loop: branch returns to itself
        let path = circle(bp.lambda0 + c64(3.0 * radius, 0.0), 0.3 * radius, 200);
        let mus = continue_mu(&p, &path, 1, 512).unwrap();
        assert!((mus[0] - mus.last().unwrap()).norm() < 1e-8);
    }
}
