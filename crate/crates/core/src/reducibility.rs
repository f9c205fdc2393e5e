//! Reducibility mechanisms for bilayer Floquet surfaces: the same-class
//! factorization D = D+ D-, its decorated-graph realization for symmetric
//! couplers, the bipartite composite-variable reduction, and the
//! double-square irreducibility discriminant.

use num_complex::Complex64;

use crate::edge_spectral::{self, DIRICHLET_GUARD};
use crate::error::{Error, Result};
use crate::floquet::{dispersion_poly, reduced_matrix};
use crate::graph_model::{
    build_bilayer, build_decorated_layer, BilayerSpec, EndCondition, PeriodicGraph,
};
use crate::laurent::LaurentPoly;
use crate::numerics::{c64, Matrix2};
use crate::potential::Potential;
use crate::riemann::mu_branches;

type C = Complex64;

/// Result of the same-class factorization at one energy.
#[derive(Debug, Clone)]
pub struct FactorReport {
    pub lambda: C,
    pub mu: C,
    pub d_plus: LaurentPoly,
    pub d_minus: LaurentPoly,
    /// Relative coefficient residual of D against d_plus * d_minus.
    pub product_residual: f64,
    pub components_distinct: bool,
    pub components_nonempty: (bool, bool),
}

/// det(A_layer + diag((-b_v + mu)/s_v)) as a Laurent polynomial.
fn component_det(
    layer_matrix: &crate::floquet::FloquetMatrix,
    spec: &BilayerSpec,
    lambda: C,
    mu: C,
    slices: usize,
) -> Result<LaurentPoly> {
    let mut m = layer_matrix.matrix.clone();
    for (v, &pi) in spec.connectors.iter().enumerate() {
        let es = edge_spectral::endpoint_data(&spec.layer.potentials[pi], lambda, slices)?;
        if es.s.norm() <= DIRICHLET_GUARD {
            return Err(Error::Pole {
                abs_s: es.s.norm(),
                edge: format!("connector@{}", spec.layer.vertices[v].id),
            });
        }
        m.add_diag(v, (-es.b + mu) / es.s)?;
    }
    m.det()
}

/// Factor the bilayer dispersion polynomial through the common asymmetry
/// function of the connectors. Requires all connectors to be in the same
/// class (checked on the default grid).
pub fn factor_same_class(
    spec: &BilayerSpec,
    lambda: C,
    slices: usize,
    class_tol: f64,
) -> Result<FactorReport> {
    spec.validate()?;
    let grid = edge_spectral::default_class_grid();
    let first = spec.connector_potential(0);
    for v in 1..spec.connectors.len() {
        let dev = edge_spectral::class_deviation(first, spec.connector_potential(v), &grid, slices)?;
        if dev > class_tol {
            return Err(Error::ClassMismatch { deviation: dev });
        }
    }

    let a = edge_spectral::a_function(first, lambda, slices)?;
    let (mu, _) = mu_branches(a);

    let layer_matrix = reduced_matrix(&spec.layer, lambda, slices)?;
    let d_plus = component_det(&layer_matrix, spec, lambda, mu, slices)?;
    let d_minus = component_det(&layer_matrix, spec, lambda, -mu, slices)?;

    let bilayer = build_bilayer(spec)?;
    let full = dispersion_poly(&bilayer, lambda, slices)?;
    let product = d_plus.mul(&d_minus)?;
    let product_residual = full.residual(&product);

    Ok(FactorReport {
        lambda,
        mu,
        components_distinct: d_plus.residual(&d_minus) > 1e-6,
        components_nonempty: (d_plus.depends_on_z(1e-10), d_minus.depends_on_z(1e-10)),
        d_plus,
        d_minus,
        product_residual,
    })
}

/// Compare the two decorated-layer dispersion polynomials (Neumann and
/// Dirichlet free ends on half-connector dangling edges) to the two factors
/// of the symmetric-connector bilayer; the pairing minimizing the residual
/// sum is reported as (neumann_residual, dirichlet_residual).
pub fn decorated_equivalence(
    layer: &PeriodicGraph,
    connector: &Potential,
    lambda: C,
    slices: usize,
) -> Result<(f64, f64)> {
    let connectors = {
        let mut l = layer.clone();
        let pi = l.potentials.len();
        l.potentials.push(connector.clone());
        l.potential_ids.push("connector".into());
        BilayerSpec::new(l, vec![pi; layer.vertices.len()])?
    };
    let report = factor_same_class(&connectors, lambda, slices, 1e-10)?;

    let neumann = build_decorated_layer(layer, connector, EndCondition::Neumann, slices)?;
    let dirichlet = build_decorated_layer(layer, connector, EndCondition::Dirichlet, slices)?;
    let d_n = dispersion_poly(&neumann, lambda, slices)?;
    let d_d = dispersion_poly(&dirichlet, lambda, slices)?;

    let straight = (d_n.residual(&report.d_plus), d_d.residual(&report.d_minus));
    let crossed = (d_n.residual(&report.d_minus), d_d.residual(&report.d_plus));
    if straight.0 + straight.1 <= crossed.0 + crossed.1 {
        Ok(straight)
    } else {
        Ok(crossed)
    }
}

/// Result of the bipartite (graphene-type) reduction at one energy.
#[derive(Debug, Clone)]
pub struct GrapheneReport {
    pub lambda: C,
    pub b1: Matrix2,
    pub b2: Matrix2,
    /// R = B1 B2; the dispersion polynomial is the characteristic polynomial
    /// of R evaluated at the composite variable w w'.
    pub r: Matrix2,
    pub zeta_eigs: (C, C),
    pub quad_residual: f64,
    /// Per eigenvalue: basis of the mode subspace in the vertex-major basis
    /// ((v1,1),(v1,2),(v2,1),(v2,2)); two vectors for zeta != 0, one for
    /// zeta = 0.
    pub mode_subspaces: Vec<Vec<[C; 4]>>,
    /// Off-diagonal entries of the layer matrix: (w poly, w' poly).
    pub w: LaurentPoly,
    pub w_prime: LaurentPoly,
}

fn bipartite_two_vertex_check(layer: &PeriodicGraph) -> Result<()> {
    if layer.vertices.len() != 2 {
        return Err(Error::Shape(format!(
            "bipartite reduction needs a 2-vertex layer, got {}",
            layer.vertices.len()
        )));
    }
    if layer.edges.iter().any(|e| e.tail == e.head) {
        return Err(Error::Shape("layer is not bipartite: found a self-edge".into()));
    }
    Ok(())
}

/// Coupler block at one vertex: m I + G for the connector's DtN matrix.
fn coupler_block(m: C, s: C, c_fwd: C, c_rev: C) -> Matrix2 {
    let inv_s = 1.0 / s;
    Matrix2([
        [m - c_fwd * inv_s, inv_s],
        [inv_s, m - c_rev * inv_s],
    ])
}

/// The composite-variable reduction for a bilayer over a bipartite 2-vertex
/// layer. Connectors may be in different asymmetry classes.
pub fn graphene_reduction(spec: &BilayerSpec, lambda: C, slices: usize) -> Result<GrapheneReport> {
    spec.validate()?;
    bipartite_two_vertex_check(&spec.layer)?;

    let layer_matrix = reduced_matrix(&spec.layer, lambda, slices)?;
    let m1_poly = layer_matrix.matrix.entry(0, 0);
    let m2_poly = layer_matrix.matrix.entry(1, 1);
    if m1_poly.depends_on_z(1e-10) || m2_poly.depends_on_z(1e-10) {
        return Err(Error::Shape("layer diagonal depends on z; layer is not bipartite".into()));
    }
    let m1 = m1_poly.coeff(&vec![0; spec.layer.rank]);
    let m2 = m2_poly.coeff(&vec![0; spec.layer.rank]);
    let w_prime = layer_matrix.matrix.entry(0, 1).clone();
    let w = layer_matrix.matrix.entry(1, 0).clone();

    let mut blocks = Vec::with_capacity(2);
    for (v, &pi) in spec.connectors.iter().enumerate() {
        let es = edge_spectral::endpoint_data(&spec.layer.potentials[pi], lambda, slices)?;
        if es.s.norm() <= DIRICHLET_GUARD {
            return Err(Error::Pole {
                abs_s: es.s.norm(),
                edge: format!("connector@{}", spec.layer.vertices[v].id),
            });
        }
        let m = if v == 0 { m1 } else { m2 };
        blocks.push(coupler_block(m, es.s, es.c, es.s_prime));
    }
    let (b1, b2) = (blocks[0], blocks[1]);
    let r = b1.mul(&b2);
    let zeta_eigs = r.eigenvalues();

    // quadratic in the composite variable, expanded back into z
    let ww = w.mul(&w_prime)?;
    let quad = ww
        .mul(&ww)?
        .sub(&ww.scale(r.trace()))?
        .add(&LaurentPoly::constant(w.nvars(), r.det()))?;
    let bilayer = build_bilayer(spec)?;
    let full = dispersion_poly(&bilayer, lambda, slices)?;
    let quad_residual = full.residual(&quad);

    let mut mode_subspaces = Vec::new();
    for &zeta in &[zeta_eigs.0, zeta_eigs.1] {
        if zeta.norm() > 1e-10 * r.norm_max().max(1.0) {
            let phi2 = null_vector(&r.sub(&Matrix2([[zeta, c64(0.0, 0.0)], [c64(0.0, 0.0), zeta]])));
            let phi1 = b2.apply(phi2).map(|x| -x);
            mode_subspaces.push(vec![
                [phi1[0], phi1[1], c64(0.0, 0.0), c64(0.0, 0.0)],
                [c64(0.0, 0.0), c64(0.0, 0.0), phi2[0], phi2[1]],
            ]);
        } else {
            let psi1 = null_vector(&b1);
            let psi2 = null_vector(&b2);
            mode_subspaces.push(vec![[psi1[0], psi1[1], psi2[0], psi2[1]]]);
        }
    }

    Ok(GrapheneReport {
        lambda,
        b1,
        b2,
        r,
        zeta_eigs,
        quad_residual,
        mode_subspaces,
        w,
        w_prime,
    })
}

/// Approximate null vector of a (near-singular) 2x2 matrix.
fn null_vector(m: &Matrix2) -> [C; 2] {
    let r0 = (m.0[0][0].norm(), m.0[0][1].norm());
    let r1 = (m.0[1][0].norm(), m.0[1][1].norm());
    let v = if r0.0.max(r0.1) >= r1.0.max(r1.1) {
        [m.0[0][1], -m.0[0][0]]
    } else {
        [m.0[1][1], -m.0[1][0]]
    };
    let n = (v[0].norm().powi(2) + v[1].norm().powi(2)).sqrt();
    if n < 1e-300 {
        [c64(1.0, 0.0), c64(0.0, 0.0)]
    } else {
        [v[0] / n, v[1] / n]
    }
}

/// Solve (w w')(z) = zeta for z2 at a fixed z1 (needs z2-degree 1 in w).
/// Returns the full points (z1, z2).
pub fn composite_level_points(
    w: &LaurentPoly,
    w_prime: &LaurentPoly,
    zeta: C,
    z1: C,
) -> Result<Vec<[C; 2]>> {
    let prod = w.mul(w_prime)?;
    // collect the z2-quadratic a z2^2 + b z2 + c from z2-exponents {1, 0, -1}
    let mut abc = [c64(0.0, 0.0); 3];
    for (e, &coeff) in prod.terms() {
        let p2 = e[1];
        if !(-1..=1).contains(&p2) {
            return Err(Error::Shape("composite solve needs |z2 exponent| <= 1 in w w'".into()));
        }
        abc[(1 - p2) as usize] += coeff * z1.powi(e[0]);
    }
    abc[1] -= zeta;
    let (a, b, c) = (abc[0], abc[1], abc[2]);
    if a.norm() < 1e-14 {
        if b.norm() < 1e-14 {
            return Ok(Vec::new());
        }
        return Ok(vec![[z1, -c / b]]);
    }
    let disc = (b * b - 4.0 * a * c).sqrt();
    Ok(vec![[z1, (-b + disc) / (2.0 * a)], [z1, (-b - disc) / (2.0 * a)]])
}

/// Residual of the constructed 4-vector in the kernel of the evaluated
/// bilayer matrix at a point z with w(z) w'(z) = zeta.
pub fn kernel_residual(report: &GrapheneReport, z: &[C; 2]) -> Result<f64> {
    let wv = report.w.eval(z)?;
    let wpv = report.w_prime.eval(z)?;
    let zeta = wv * wpv;
    // pick the eigenvalue this zeta realizes
    let (z1d, z2d) = (
        (zeta - report.zeta_eigs.0).norm(),
        (zeta - report.zeta_eigs.1).norm(),
    );
    let idx = if z1d <= z2d { 0 } else { 1 };
    let basis = &report.mode_subspaces[idx];
    let four = if basis.len() == 2 {
        let phi1 = [basis[0][0], basis[0][1]];
        let phi2 = [basis[1][2], basis[1][3]];
        [phi1[0], phi1[1], wv * phi2[0], wv * phi2[1]]
    } else {
        basis[0]
    };
    // assemble the 4x4 [[B1, w' I], [w I, B2]] and apply
    let mut out = [c64(0.0, 0.0); 4];
    for i in 0..2 {
        for j in 0..2 {
            out[i] += report.b1.0[i][j] * four[j];
            out[i + 2] += report.b2.0[i][j] * four[j + 2];
        }
        out[i] += wpv * four[i + 2];
        out[i + 2] += wv * four[i];
    }
    let scale = report.b1.norm_max().max(report.b2.norm_max()).max(wv.norm()).max(wpv.norm());
    let vnorm = four.iter().map(|x| x.norm().powi(2)).sum::<f64>().sqrt();
    let rnorm = out.iter().map(|x| x.norm().powi(2)).sum::<f64>().sqrt();
    Ok(rnorm / (scale * vnorm).max(1e-300))
}

/// Points of the level curve w w' = zeta for the equal-potential hexagonal
/// layer, in the scaling w = 1 + z1 + z2. One (z1, z2) pair per admissible
/// sample w (both orderings); for zeta = 0 the samples parameterize the two
/// line components instead.
pub fn f_zeta_points(zeta: C, s_values: (C, C, C), w_samples: &[C]) -> Result<Vec<(C, C)>> {
    let (sa, sb, sc) = s_values;
    let scale = sa.norm().max(sb.norm()).max(sc.norm()).max(1e-300);
    if (sa - sb).norm() > 1e-9 * scale || (sa - sc).norm() > 1e-9 * scale {
        return Err(Error::Precondition(
            "this parameterization needs equal s-values on the three layer edges".into(),
        ));
    }
    let mut out = Vec::new();
    if zeta.norm() < 1e-14 {
        // components 1 + z1 + z2 = 0 and 1 + 1/z1 + 1/z2 = 0
        for &t in w_samples {
            if t.norm() < 1e-12 || (t + 1.0).norm() < 1e-12 {
                continue;
            }
            out.push((t, -1.0 - t));
            out.push((1.0 / t, 1.0 / (-1.0 - t)));
        }
        return Ok(out);
    }
    for &wv in w_samples {
        // degenerate parameters have no quadratic
        if wv.norm() < 1e-12 || (wv - 1.0).norm() < 1e-12 || (wv - zeta).norm() < 1e-12 {
            continue;
        }
        // roots of z^2 - (w-1) z + w(w-1)/(zeta-w)
        let b = -(wv - 1.0);
        let c = wv * (wv - 1.0) / (zeta - wv);
        let disc = (b * b - 4.0 * c).sqrt();
        let z1 = (-b + disc) / 2.0;
        let z2 = (-b - disc) / 2.0;
        if z1.norm() < 1e-12 || z2.norm() < 1e-12 {
            continue;
        }
        out.push((z1, z2));
        out.push((z2, z1));
    }
    Ok(out)
}

/// The two intersection points of the zeta = 0 components: solutions of
/// 1 + z1 + z2 = 0 with z1 z2 = 1, i.e. the roots of z^2 + z + 1.
pub fn f0_intersection() -> [(C, C); 2] {
    let disc = (c64(1.0, 0.0) - 4.0).sqrt();
    let z_plus = (-1.0 + disc) / 2.0;
    let z_minus = (-1.0 - disc) / 2.0;
    [(z_plus, z_minus), (z_minus, z_plus)]
}

/// Double-square reducibility data at one energy.
#[derive(Debug, Clone)]
pub struct Square7Report {
    pub lambda: C,
    /// (Omega1+, Omega1-, Omega2+, Omega2-).
    pub omega: [C; 4],
    pub r_squared: C,
    pub discriminant_d2: C,
    pub reducible: bool,
    /// The scale |Omega|_max^4 used for the verdict threshold.
    pub scale: f64,
}

fn is_double_square(layer: &PeriodicGraph) -> bool {
    if layer.rank != 2 || layer.vertices.len() != 2 || layer.edges.len() != 4 {
        return false;
    }
    let pat: Vec<(usize, usize, &[i32])> = layer
        .edges
        .iter()
        .map(|e| (e.tail, e.head, e.shift.as_slice()))
        .collect();
    let want: [(usize, usize, &[i32]); 4] = [
        (0, 1, &[0, 0]),
        (1, 0, &[1, 0]),
        (0, 0, &[0, 1]),
        (1, 1, &[0, 1]),
    ];
    want.iter().all(|w| pat.contains(w))
        && layer.edges.iter().all(|e| e.potential == layer.edges[0].potential)
        && (layer.vertices[0].alpha - layer.vertices[1].alpha).abs() < 1e-14
        && layer.edges.iter().all(|e| (e.length - 1.0).abs() < 1e-14)
}

/// Reducibility criterion for the double-square bilayer: the block form of
/// the coupled operator in the eigenbasis of the first connector yields the
/// four diagonal values Omega_j^{+/-} and the cross-coupling r^2; the
/// surface is reducible iff the zeta2-discriminant D2 of the
/// zeta1-discriminant vanishes.
///
/// Conjugating N2 by the mu1-eigenbasis gives diagonal +/- (1 + a1 a2)/mu1
/// and off-diagonal product (a1 - a2)^2 / mu1^2, so
///   nu2 = (1 + a1 a2)/mu1,
///   r^2 = s^2 (a1 - a2)^2 / (mu1^2 s2^2),
/// which reduces to the same-class diagonal form when a1 = a2 (r = 0).
pub fn square7_discriminant(spec: &BilayerSpec, lambda: C, slices: usize) -> Result<Square7Report> {
    spec.validate()?;
    if !is_double_square(&spec.layer) {
        return Err(Error::Shape(
            "this criterion applies to the double-square layer (2 vertices, 4 equal unit edges)".into(),
        ));
    }
    let layer_pot = &spec.layer.potentials[spec.layer.edges[0].potential];
    if !edge_spectral::is_symmetric(layer_pot, 1e-12, slices)? {
        return Err(Error::Precondition("layer potential must be symmetric".into()));
    }
    let alpha = spec.layer.vertices[0].alpha;

    let ring = edge_spectral::endpoint_data(layer_pot, lambda, slices)?;
    if ring.s.norm() <= DIRICHLET_GUARD {
        return Err(Error::Pole { abs_s: ring.s.norm(), edge: "layer edge".into() });
    }
    let e1 = edge_spectral::endpoint_data(spec.connector_potential(0), lambda, slices)?;
    let e2 = edge_spectral::endpoint_data(spec.connector_potential(1), lambda, slices)?;
    for (es, v) in [(&e1, 0), (&e2, 1)] {
        if es.s.norm() <= DIRICHLET_GUARD {
            return Err(Error::Pole {
                abs_s: es.s.norm(),
                edge: format!("connector@{}", spec.layer.vertices[v].id),
            });
        }
    }

    let (mu1, _) = mu_branches(e1.a);
    if mu1.norm() < 1e-8 {
        return Err(Error::Precondition(
            "lambda is a ramification point of the first connector".into(),
        ));
    }
    let nu2 = (1.0 + e1.a * e2.a) / mu1;
    let r_squared = ring.s * ring.s * (e1.a - e2.a) * (e1.a - e2.a) / (mu1 * mu1 * e2.s * e2.s);

    let base = -4.0 * ring.c - alpha * ring.s;
    let omega = [
        base + ring.s / e1.s * (-e1.b + mu1),
        base + ring.s / e1.s * (-e1.b - mu1),
        base + ring.s / e2.s * (-e2.b + nu2),
        base + ring.s / e2.s * (-e2.b - nu2),
    ];
    let (o1p, o1m, o2p, o2m) = (omega[0], omega[1], omega[2], omega[3]);

    // zeta1-discriminant D1(zeta2) = (p+ - p-)^2 + 4 r^2 q(zeta2) is the
    // quadratic (c z + d)^2 + 4 r^2 (z^2 + S z + P); D2 is its discriminant.
    let cc = (o1m + o2m) - (o1p + o2p);
    let dd = o1m * o2m - o1p * o2p;
    let s_sum = o1p + o1m;
    let p_prod = o1p * o1m;
    let qa = cc * cc + 4.0 * r_squared;
    let qb = 2.0 * cc * dd + 4.0 * r_squared * s_sum;
    let qc = dd * dd + 4.0 * r_squared * p_prod;
    let discriminant_d2 = qb * qb - 4.0 * qa * qc;

    let scale = omega
        .iter()
        .map(|o| o.norm())
        .fold(0.0f64, f64::max)
        .max(1.0)
        .powi(4);
    Ok(Square7Report {
        lambda,
        omega,
        r_squared,
        discriminant_d2,
        reducible: discriminant_d2.norm() < 1e-8 * scale,
        scale,
    })
}

/// Bivariate polynomial in (zeta1, zeta2) with coefficients `coeffs[i][j]`
/// multiplying zeta1^i zeta2^j.
#[derive(Debug, Clone)]
pub struct ZetaPoly {
    pub coeffs: Vec<Vec<C>>,
    /// Worst deviation among coefficients that must agree under
    /// z -> 1/z inversion, relative to the largest coefficient.
    pub inversion_residual: f64,
}

/// Rewrite a 2-variable Laurent polynomial invariant under z1 -> 1/z1 and
/// z2 -> 1/z2 in the variables zeta_i = z_i + 1/z_i.
pub fn to_zeta_poly(p: &LaurentPoly) -> Result<ZetaPoly> {
    if p.nvars() != 2 {
        return Err(Error::Precondition("zeta rewrite needs exactly 2 variables".into()));
    }
    let scale = p.max_coeff_norm().max(1e-300);
    let (mut n1, mut n2) = (0i32, 0i32);
    for (e, _) in p.terms() {
        n1 = n1.max(e[0].abs());
        n2 = n2.max(e[1].abs());
    }
    // symmetrized coefficients d[a][b] on the orbit {(+/-a, +/-b)}
    let mut d = vec![vec![c64(0.0, 0.0); (n2 + 1) as usize]; (n1 + 1) as usize];
    let mut worst: f64 = 0.0;
    for a in 0..=n1 {
        for b in 0..=n2 {
            let mut orbit = vec![(a, b)];
            if a > 0 {
                orbit.push((-a, b));
            }
            if b > 0 {
                orbit.push((a, -b));
            }
            if a > 0 && b > 0 {
                orbit.push((-a, -b));
            }
            let vals: Vec<C> = orbit.iter().map(|&(x, y)| p.coeff(&[x, y])).collect();
            let mean = vals.iter().sum::<C>() / vals.len() as f64;
            for v in &vals {
                worst = worst.max((v - mean).norm() / scale);
            }
            d[a as usize][b as usize] = mean;
        }
    }

    // T-hat_n(zeta) = z^n + z^{-n}: T0 = 2, T1 = zeta, Tn = zeta T(n-1) - T(n-2)
    let tpolys = |n: i32| -> Vec<Vec<C>> {
        let mut t: Vec<Vec<C>> = vec![vec![c64(2.0, 0.0)], vec![c64(0.0, 0.0), c64(1.0, 0.0)]];
        for k in 2..=n.max(1) {
            let prev = &t[(k - 1) as usize];
            let mut next = vec![c64(0.0, 0.0); prev.len() + 1];
            for (i, &c) in prev.iter().enumerate() {
                next[i + 1] += c;
            }
            for (i, &c) in t[(k - 2) as usize].iter().enumerate() {
                next[i] -= c;
            }
            t.push(next);
        }
        t
    };
    let t1 = tpolys(n1);
    let t2 = tpolys(n2);
    let basis = |t: &[Vec<C>], n: usize| -> Vec<C> {
        if n == 0 {
            vec![c64(1.0, 0.0)]
        } else {
            t[n].clone()
        }
    };

    let mut coeffs = vec![vec![c64(0.0, 0.0); (n2 + 1) as usize]; (n1 + 1) as usize];
    for (a, row) in d.iter().enumerate() {
        let pa = basis(&t1, a);
        for (b, &w) in row.iter().enumerate() {
            let pb = basis(&t2, b);
            if w.norm() == 0.0 {
                continue;
            }
            for (i, &ci) in pa.iter().enumerate() {
                for (j, &cj) in pb.iter().enumerate() {
                    coeffs[i][j] += w * ci * cj;
                }
            }
        }
    }
    Ok(ZetaPoly { coeffs, inversion_residual: worst })
}

/// Independent square-test for the double-square criterion: rewrite the
/// bilayer determinant (scaled by s_layer^4) in (zeta1, zeta2), extract the
/// zeta1-discriminant D1(zeta2) and return its own discriminant, which
/// vanishes exactly when D1 is the square of a polynomial.
pub struct Square7CrossCheck {
    pub d2_independent: C,
    pub inversion_residual: f64,
    /// Relative weight of the zeta2^3 and zeta2^4 terms of D1, which must
    /// cancel for the criterion to apply.
    pub degree_residual: f64,
}

pub fn square7_crosscheck(spec: &BilayerSpec, lambda: C, slices: usize) -> Result<Square7CrossCheck> {
    let layer_pot = &spec.layer.potentials[spec.layer.edges[0].potential];
    let ring = edge_spectral::endpoint_data(layer_pot, lambda, slices)?;
    let bilayer = build_bilayer(spec)?;
    let full = dispersion_poly(&bilayer, lambda, slices)?;
    let scaled = full.scale(ring.s.powi(4));
    let zp = to_zeta_poly(&scaled)?;

    // quadratic in zeta1
    let deg1 = zp.coeffs.len() - 1;
    if deg1 > 2 {
        let tail: f64 = zp.coeffs[3..]
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        let scale = zp.coeffs.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
        if tail > 1e-9 * scale {
            return Err(Error::Shape("determinant is not quadratic in zeta1".into()));
        }
    }
    let row = |i: usize| -> Vec<C> {
        zp.coeffs.get(i).cloned().unwrap_or_default()
    };
    let (q0, q1, q2) = (row(0), row(1), row(2));

    let mul = |a: &[C], b: &[C]| -> Vec<C> {
        let mut out = vec![c64(0.0, 0.0); a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    };
    let mut d1 = mul(&q1, &q1);
    let q20 = mul(&q2, &q0);
    for (i, &v) in q20.iter().enumerate() {
        if i >= d1.len() {
            d1.resize(i + 1, c64(0.0, 0.0));
        }
        d1[i] -= 4.0 * v;
    }
    let d1_scale = d1.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
    let degree_residual = d1
        .iter()
        .skip(3)
        .map(|c| c.norm())
        .fold(0.0, f64::max)
        / d1_scale;
    let coeff = |i: usize| d1.get(i).copied().unwrap_or(c64(0.0, 0.0));
    let (a, b, c) = (coeff(2), coeff(1), coeff(0));
    Ok(Square7CrossCheck {
        d2_independent: b * b - 4.0 * a * c,
        inversion_residual: zp.inversion_residual,
        degree_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_model::builtin;
    use crate::potential::Potential;
    use std::f64::consts::PI;

    #[test]
    fn factor_square_bilayer_zero_connector() {
        let spec = builtin::square_bilayer(Potential::zero(1.0), 0.0, Potential::zero(1.0));
        let lambda = c64(1.0, 0.0);
        let report = factor_same_class(&spec, lambda, 256, 1e-10).unwrap();
        assert!(report.product_residual < 1e-8, "residual {}", report.product_residual);
        // mu = 1 branch: diagonal shifts (-cos sqrt(l) +/- 1)/(sin sqrt(l)/sqrt(l))
        let sl = lambda.sqrt();
        let (b, s) = (sl.cos(), sl.sin() / sl);
        let shift_plus = (-b + 1.0) / s;
        let shift_minus = (-b - 1.0) / s;
        // 1x1 layer: d_plus = (1/s)(z1 + 1/z1 + z2 + 1/z2) + (-c/s * 4) + shift
        let diag = report.d_plus.coeff(&[0, 0]);
        let diag_minus = report.d_minus.coeff(&[0, 0]);
        assert!(((diag - diag_minus) - (shift_plus - shift_minus)).norm() < 1e-10);
        assert!(report.components_nonempty.0 && report.components_nonempty.1);
        assert!(report.components_distinct);
    }

    #[test]
    fn factor_square_bilayer_step_connector_complex_energy() {
        let spec = builtin::square_bilayer(Potential::zero(1.0), 0.0, Potential::step(5.0, 0.5, 1.0));
        let report = factor_same_class(&spec, c64(2.0, 1.0), 512, 1e-10).unwrap();
        assert!(report.product_residual < 1e-7, "residual {}", report.product_residual);
    }

    #[test]
    fn factor_graphene_two_symmetric_connectors() {
        let spec = builtin::graphene_bilayer(
            Potential::zero(1.0),
            Potential::zero(1.0),
            Potential::zero(1.0),
            0.0,
            0.0,
            Potential::zero(1.0),
            Potential::constant(3.0, 1.0),
        );
        let report = factor_same_class(&spec, c64(1.0, 0.0), 256, 1e-10).unwrap();
        assert!(report.product_residual < 1e-8, "residual {}", report.product_residual);
    }

    #[test]
    fn factor_rejects_mixed_classes() {
        let spec = builtin::graphene_bilayer(
            Potential::zero(1.0),
            Potential::zero(1.0),
            Potential::zero(1.0),
            0.0,
            0.0,
            Potential::step(5.0, 0.5, 1.0),
            Potential::zero(1.0),
        );
        match factor_same_class(&spec, c64(1.0, 0.0), 256, 1e-10) {
            Err(Error::ClassMismatch { .. }) => {}
            other => panic!("expected class mismatch, got {other:?}"),
        }
    }

    #[test]
    fn branch_swap_symmetry() {
        let spec = builtin::square_bilayer(Potential::zero(1.0), 0.3, Potential::step(5.0, 0.5, 1.0));
        let lambda = c64(3.1, 0.7);
        let report = factor_same_class(&spec, lambda, 512, 1e-10).unwrap();
        // rebuilding with the opposite branch swaps the factors exactly
        let layer_matrix = reduced_matrix(&spec.layer, lambda, 512).unwrap();
        let d_plus_swapped = component_det(&layer_matrix, &spec, lambda, -report.mu, 512).unwrap();
        assert!(d_plus_swapped.residual(&report.d_minus) < 1e-12);
    }

    #[test]
    fn decorated_equivalence_square_and_graphene() {
        let layer = builtin::square_lattice(Potential::zero(1.0), 0.0);
        let (rn, rd) = decorated_equivalence(&layer, &Potential::zero(1.0), c64(1.0, 0.0), 256).unwrap();
        assert!(rn < 1e-8 && rd < 1e-8, "residuals {rn} {rd}");

        let layer = builtin::graphene_layer(
            Potential::zero(1.0),
            Potential::zero(1.0),
            Potential::zero(1.0),
            0.0,
            0.0,
        );
        let (rn, rd) =
            decorated_equivalence(&layer, &Potential::constant(2.0, 1.0), c64(0.5, 0.0), 256).unwrap();
        assert!(rn < 1e-8 && rd < 1e-8, "residuals {rn} {rd}");
    }

    #[test]
    fn decorated_equivalence_rejects_asymmetric_connector() {
        let layer = builtin::square_lattice(Potential::zero(1.0), 0.0);
        let err = decorated_equivalence(&layer, &Potential::step(5.0, 0.5, 1.0), c64(1.0, 0.0), 256);
        assert!(err.is_err());
    }

    #[test]
    fn graphene_reduction_mixed_classes() {
        let spec = builtin::graphene_bilayer(
            Potential::zero(1.0),
            Potential::zero(1.0),
            Potential::zero(1.0),
            0.0,
            0.0,
            Potential::step(5.0, 0.5, 1.0),
            Potential::zero(1.0),
        );
        let report = graphene_reduction(&spec, c64(1.0, 0.0), 512).unwrap();
        assert!(report.quad_residual < 1e-8, "residual {}", report.quad_residual);

        // composite-variable invariance: same zeta, different z
        let zeta = (report.zeta_eigs.0 + report.zeta_eigs.1) / 2.0 + c64(0.31, 0.17);
        let bilayer = build_bilayer(&spec).unwrap();
        let full = dispersion_poly(&bilayer, c64(1.0, 0.0), 512).unwrap();
        let pts_a = composite_level_points(&report.w, &report.w_prime, zeta, c64(0.6, 0.4)).unwrap();
        let pts_b = composite_level_points(&report.w, &report.w_prime, zeta, c64(-0.2, 1.1)).unwrap();
        let da = full.eval(&pts_a[0]).unwrap();
        let db = full.eval(&pts_b[1]).unwrap();
        let scale = full.max_coeff_norm();
        assert!((da - db).norm() <= 1e-8 * scale, "collapse {} vs {}", da, db);

        // kernel vectors at points realizing each eigenvalue
        for &zeta in &[report.zeta_eigs.0, report.zeta_eigs.1] {
            let pts = composite_level_points(&report.w, &report.w_prime, zeta, c64(0.83, -0.29)).unwrap();
            assert!(!pts.is_empty());
            let res = kernel_residual(&report, &pts[0]).unwrap();
            assert!(res < 1e-7, "kernel residual {res}");
        }
    }

    #[test]
    fn graphene_reduction_rejects_non_bipartite() {
        let spec = builtin::double_square_bilayer(
            Potential::zero(1.0),
            0.0,
            Potential::zero(1.0),
            Potential::zero(1.0),
        );
        assert!(matches!(
            graphene_reduction(&spec, c64(1.0, 0.0), 128),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn f_zeta_point_properties() {
        // zeta = 0, z1 = 1 lies on 1 + z1 + z2 = 0 with z2 = -2
        let s = (c64(1.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0));
        let pts = f_zeta_points(c64(0.0, 0.0), s, &[c64(1.0, 0.0)]).unwrap();
        assert!(pts.iter().any(|(z1, z2)| (z1 - 1.0).norm() < 1e-12 && (z2 + 2.0).norm() < 1e-12));

        // general zeta: every point satisfies w w' = zeta
        let zeta = c64(1.7, 0.9);
        let samples: Vec<C> = (0..7).map(|k| c64(0.4 + 0.3 * k as f64, 0.2 - 0.1 * k as f64)).collect();
        let pts = f_zeta_points(zeta, s, &samples).unwrap();
        assert!(!pts.is_empty());
        for (z1, z2) in pts {
            let w = 1.0 + z1 + z2;
            let wp = 1.0 + 1.0 / z1 + 1.0 / z2;
            assert!((w * wp - zeta).norm() < 1e-8, "point ({z1}, {z2})");
        }

        // unequal s-values are refused
        assert!(f_zeta_points(zeta, (c64(1.0, 0.0), c64(2.0, 0.0), c64(1.0, 0.0)), &samples).is_err());
    }

    #[test]
    fn f0_intersection_points() {
        let pts = f0_intersection();
        let want = C::from_polar(1.0, 2.0 * PI / 3.0);
        assert!((pts[0].0 - want).norm() < 1e-14);
        assert!((pts[0].1 - want.conj()).norm() < 1e-14);
        for (z1, z2) in pts {
            assert!((1.0 + z1 + z2).norm() < 1e-14);
            assert!((1.0 + 1.0 / z1 + 1.0 / z2).norm() < 1e-14);
        }
    }

    #[test]
    fn square7_same_connectors_reducible() {
        let spec = builtin::double_square_bilayer(
            Potential::zero(1.0),
            0.0,
            Potential::step(5.0, 0.5, 1.0),
            Potential::step(5.0, 0.5, 1.0),
        );
        let report = square7_discriminant(&spec, c64(1.3, 0.0), 512).unwrap();
        assert!(report.r_squared.norm() < 1e-20);
        assert!(report.discriminant_d2.norm() < 1e-8 * report.scale);
        assert!(report.reducible);
    }

    #[test]
    fn square7_mixed_connectors_irreducible_and_crosschecked() {
        let spec = builtin::double_square_bilayer(
            Potential::zero(1.0),
            0.0,
            Potential::step(5.0, 0.5, 1.0),
            Potential::zero(1.0),
        );
        let lambda = c64(1.3, 0.0);
        let report = square7_discriminant(&spec, lambda, 512).unwrap();
        assert!(!report.reducible);
        assert!(report.discriminant_d2.norm() > 1e-4 * report.scale);

        let cross = square7_crosscheck(&spec, lambda, 512).unwrap();
        assert!(cross.inversion_residual < 1e-9, "inversion {}", cross.inversion_residual);
        assert!(cross.degree_residual < 1e-9, "degree {}", cross.degree_residual);
        let rel = (cross.d2_independent - report.discriminant_d2).norm()
            / report.discriminant_d2.norm();
        assert!(rel < 1e-6, "cross-check deviation {rel}");
    }

    #[test]
    fn square7_block_determinant_identity() {
        // the closed-form quadratic in (zeta1, zeta2) built from Omega and
        // r^2 reproduces the scaled 4x4 determinant at torus points
        let spec = builtin::double_square_bilayer(
            Potential::constant(1.0, 1.0),
            0.2,
            Potential::step(5.0, 0.5, 1.0),
            Potential::constant(2.0, 1.0),
        );
        let lambda = c64(0.9, 0.0);
        let report = square7_discriminant(&spec, lambda, 512).unwrap();
        let [o1p, o1m, o2p, o2m] = report.omega;
        let r2 = report.r_squared;

        let layer_pot = &spec.layer.potentials[0];
        let ring = edge_spectral::endpoint_data(layer_pot, lambda, 512).unwrap();
        let bilayer = build_bilayer(&spec).unwrap();
        let full = dispersion_poly(&bilayer, lambda, 512).unwrap();

        for th in [0.3, -1.2, 2.4] {
            let z = [C::from_polar(1.0, th), C::from_polar(1.0, 0.7 * th + 0.2)];
            let zeta1 = z[0] + 1.0 / z[0];
            let zeta2 = z[1] + 1.0 / z[1];
            let pp = 2.0 - (o1p + zeta2) * (o2p + zeta2);
            let pm = 2.0 - (o1m + zeta2) * (o2m + zeta2);
            let q = (o1p + zeta2) * (o1m + zeta2);
            let want = zeta1 * zeta1 + zeta1 * (pp + pm) + pp * pm - r2 * q;
            let got = full.eval(&z).unwrap() * ring.s.powi(4);
            assert!(
                (want - got).norm() <= 1e-9 * want.norm().max(1.0),
                "at {z:?}: {want} vs {got}"
            );
        }
    }

    #[test]
    fn square7_closed_form_matches_product_formula() {
        let spec = builtin::double_square_bilayer(
            Potential::zero(1.0),
            0.0,
            Potential::step(5.0, 0.5, 1.0),
            Potential::zero(1.0),
        );
        let report = square7_discriminant(&spec, c64(2.2, 0.0), 512).unwrap();
        let [o1p, o1m, o2p, o2m] = report.omega;
        let r2 = report.r_squared;
        let product = 16.0 * r2 * (o1p - o1m) * (o1p - o1m)
            * (r2 - (o2m - o1p) * (o2p - o1m));
        let rel = (product - report.discriminant_d2).norm() / report.discriminant_d2.norm();
        assert!(rel < 1e-10, "product form deviation {rel}");
    }

    #[test]
    fn square7_rejects_wrong_layer() {
        let spec = builtin::graphene_bilayer(
            Potential::zero(1.0),
            Potential::zero(1.0),
            Potential::zero(1.0),
            0.0,
            0.0,
            Potential::zero(1.0),
            Potential::zero(1.0),
        );
        assert!(matches!(
            square7_discriminant(&spec, c64(1.0, 0.0), 128),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn bilayer_swap_with_reflected_connectors_is_equivalent() {
        // swapping layers while reflecting every connector leaves |D| intact
        let spec = builtin::graphene_bilayer(
            Potential::zero(1.0),
            Potential::constant(2.0, 1.0),
            Potential::zero(1.0),
            0.1,
            -0.2,
            Potential::step(5.0, 0.5, 1.0),
            Potential::zero(1.0),
        );
        let mut reflected = spec.clone();
        for &pi in &reflected.connectors.clone() {
            reflected.layer.potentials[pi] = reflected.layer.potentials[pi].reflect();
        }
        let lambda = c64(1.9, 0.4);
        let d1 = dispersion_poly(&build_bilayer(&spec).unwrap(), lambda, 512).unwrap();
        let d2 = dispersion_poly(&build_bilayer(&reflected).unwrap(), lambda, 512).unwrap();
        assert!(d1.residual(&d2) < 1e-8, "swap residual {}", d1.residual(&d2));
    }
}
