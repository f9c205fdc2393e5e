//! Small shared numerics: entire cos/sinc kernels, 2x2 complex matrices,
//! rectangular search regions and a damped multi-start Newton solver.

use num_complex::Complex64;

pub type C64 = Complex64;

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// cos(sqrt(z)), evaluated as an entire function of z (no branch issue: the
/// series has only integer powers of z).
pub fn cos_sqrt(z: C64) -> C64 {
    if z.norm() < 0.25 {
        // sum (-z)^k / (2k)!
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..=16 {
            term *= -z / ((2 * k - 1) as f64 * (2 * k) as f64);
            sum += term;
            if term.norm() < 1e-20 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        z.sqrt().cos()
    }
}

/// sin(sqrt(z))/sqrt(z), entire in z.
pub fn sinc_sqrt(z: C64) -> C64 {
    if z.norm() < 0.25 {
        // sum (-z)^k / (2k+1)!
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..=16 {
            term *= -z / ((2 * k) as f64 * (2 * k + 1) as f64);
            sum += term;
            if term.norm() < 1e-20 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        let w = z.sqrt();
        w.sin() / w
    }
}

/// Row-major 2x2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2(pub [[C64; 2]; 2]);

impl Matrix2 {
    pub fn identity() -> Self {
        Matrix2([[c64(1.0, 0.0), c64(0.0, 0.0)], [c64(0.0, 0.0), c64(1.0, 0.0)]])
    }

    pub fn mul(&self, other: &Matrix2) -> Matrix2 {
        let a = &self.0;
        let b = &other.0;
        Matrix2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn sub(&self, other: &Matrix2) -> Matrix2 {
        Matrix2([
            [self.0[0][0] - other.0[0][0], self.0[0][1] - other.0[0][1]],
            [self.0[1][0] - other.0[1][0], self.0[1][1] - other.0[1][1]],
        ])
    }

    pub fn add(&self, other: &Matrix2) -> Matrix2 {
        Matrix2([
            [self.0[0][0] + other.0[0][0], self.0[0][1] + other.0[0][1]],
            [self.0[1][0] + other.0[1][0], self.0[1][1] + other.0[1][1]],
        ])
    }

    pub fn scale(&self, k: C64) -> Matrix2 {
        Matrix2([
            [self.0[0][0] * k, self.0[0][1] * k],
            [self.0[1][0] * k, self.0[1][1] * k],
        ])
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn commutator(&self, other: &Matrix2) -> Matrix2 {
        self.mul(other).sub(&other.mul(self))
    }

    /// Max entry magnitude.
    pub fn norm_max(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|e| e.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|e| e.re.is_finite() && e.im.is_finite())
    }

    /// Eigenvalues from the characteristic quadratic.
    pub fn eigenvalues(&self) -> (C64, C64) {
        let t = self.trace();
        let d = self.det();
        let disc = (t * t - 4.0 * d).sqrt();
        ((t + disc) / 2.0, (t - disc) / 2.0)
    }
}

/// Bounded axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Region {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        Region { re_min, re_max, im_min, im_max }
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    pub fn diameter(&self) -> f64 {
        ((self.re_max - self.re_min).powi(2) + (self.im_max - self.im_min).powi(2)).sqrt()
    }
}

/// All roots of an analytic function found by damped Newton from a grid of
/// starting points, deduplicated and sorted by (re, im). Returns pairs
/// (root, |f(root)|). Starting points whose iteration diverges, leaves the
/// doubled region or stalls are silently dropped.
pub fn newton_roots<F>(f: F, region: &Region, starts: (usize, usize), f_tol: f64) -> Vec<(C64, f64)>
where
    F: Fn(C64) -> Option<C64>,
{
    let (nx, ny) = starts;
    let max_step = region.diameter() * 0.25;
    let wide = Region::new(
        2.0 * region.re_min - region.re_max,
        2.0 * region.re_max - region.re_min,
        2.0 * region.im_min - region.im_max,
        2.0 * region.im_max - region.im_min,
    );
    let mut found: Vec<(C64, f64)> = Vec::new();

    for i in 0..nx {
        for j in 0..ny {
            let mut z = c64(
                region.re_min + (i as f64 + 0.5) * (region.re_max - region.re_min) / nx as f64,
                region.im_min + (j as f64 + 0.5) * (region.im_max - region.im_min) / ny as f64,
            );
            let mut fz = match f(z) {
                Some(v) if v.is_finite() => v,
                _ => continue,
            };
            let mut converged = false;
            for _ in 0..60 {
                if fz.norm() < f_tol {
                    converged = true;
                    break;
                }
                let h = 1e-5 * z.norm().max(1.0);
                let (fp, fm) = match (f(z + c64(h, 0.0)), f(z - c64(h, 0.0))) {
                    (Some(a), Some(b)) if a.is_finite() && b.is_finite() => (a, b),
                    _ => break,
                };
                let df = (fp - fm) / (2.0 * h);
                if df.norm() < 1e-300 {
                    break;
                }
                let mut step = -fz / df;
                if step.norm() > max_step {
                    step *= max_step / step.norm();
                }
                // damping: halve the step until the residual stops growing
                let mut t = 1.0;
                let mut accepted = false;
                for _ in 0..8 {
                    let zn = z + step * t;
                    if let Some(fn_) = f(zn) {
                        if fn_.is_finite() && (fn_.norm() < fz.norm() || t < 0.02) {
                            z = zn;
                            fz = fn_;
                            accepted = true;
                            break;
                        }
                    }
                    t *= 0.5;
                }
                if !accepted || !wide.contains(z) {
                    break;
                }
            }
            if converged && region.contains(z) {
                let res = fz.norm();
                match found.iter_mut().find(|(r, _)| (*r - z).norm() < 1e-6) {
                    Some(entry) => {
                        if res < entry.1 {
                            *entry = (z, res);
                        }
                    }
                    None => found.push((z, res)),
                }
            }
        }
    }
    found.sort_by(|a, b| {
        (a.0.re, a.0.im)
            .partial_cmp(&(b.0.re, b.0.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    found
}

pub trait IsFiniteC {
    fn is_finite(&self) -> bool;
}

impl IsFiniteC for C64 {
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels_match_closed_forms() {
        for &(re, im) in &[(4.0, 0.0), (-9.0, 0.0), (0.1, -0.2), (25.0, 13.0), (1e-8, 1e-9), (0.0, 0.0)] {
            let z = c64(re, im);
            let w = z.sqrt();
            let want_cos = w.cos();
            let got_cos = cos_sqrt(z);
            assert!((want_cos - got_cos).norm() <= 1e-14 * want_cos.norm().max(1.0), "cos at {z}");
            let want_sinc = if w.norm() < 1e-12 { c64(1.0, 0.0) } else { w.sin() / w };
            let got_sinc = sinc_sqrt(z);
            assert!(
                (want_sinc - got_sinc).norm() <= 1e-14 * want_sinc.norm().max(1.0),
                "sinc at {z}"
            );
        }
    }

    #[test]
    fn newton_finds_quadratic_roots() {
        let region = Region::new(-3.0, 3.0, -3.0, 3.0);
        let roots = newton_roots(|z| Some(z * z + 1.0), &region, (8, 8), 1e-12);
        assert_eq!(roots.len(), 2);
        assert!((roots[0].0 - c64(0.0, -1.0)).norm() < 1e-9);
        assert!((roots[1].0 - c64(0.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn matrix2_eigenvalues() {
        let m = Matrix2([[c64(2.0, 0.0), c64(1.0, 0.0)], [c64(1.0, 0.0), c64(2.0, 0.0)]]);
        let (e1, e2) = m.eigenvalues();
        assert!((e1 - c64(3.0, 0.0)).norm() < 1e-12);
        assert!((e2 - c64(1.0, 0.0)).norm() < 1e-12);
    }
}
