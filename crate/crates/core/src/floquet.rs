//! The Floquet-transformed vertex reduction of a periodic quantum graph:
//! the m x m matrix of Laurent polynomials in the Floquet multipliers,
//! its determinant (the dispersion polynomial), and Fermi-slice sampling.
//!
//! Entry (v, w) collects one term z^g / s_e per stored edge from v to the
//! g-translate of w (and z^{-g} / s_e for the reverse direction); the
//! diagonal carries -(alpha_v + sum over directed edges of c_e / s_e), where
//! the c-value of a reversed edge is s' of the forward integration. Dangling
//! edges shift the diagonal by -c/s (Dirichlet free end) or -c'/s'
//! (Neumann free end).

use std::collections::HashMap;

use num_complex::Complex64;

use crate::edge_spectral::{self, EdgeSpectral, DIRICHLET_GUARD};
use crate::error::{Error, Result};
use crate::graph_model::{EndCondition, PeriodicGraph};
use crate::laurent::{LaurentMatrix, LaurentPoly};

type C = Complex64;

#[derive(Debug, Clone)]
pub struct FloquetMatrix {
    pub lambda: C,
    pub vertex_order: Vec<String>,
    pub matrix: LaurentMatrix,
}

/// Edge spectral data for every distinct (potential, length) pair in the
/// graph, computed once per energy.
fn edge_data(g: &PeriodicGraph, lambda: C, slices: usize) -> Result<HashMap<usize, EdgeSpectral>> {
    let mut cache: HashMap<usize, EdgeSpectral> = HashMap::new();
    for pi in g
        .edges
        .iter()
        .map(|e| e.potential)
        .chain(g.dangling.iter().map(|d| d.potential))
    {
        if let std::collections::hash_map::Entry::Vacant(slot) = cache.entry(pi) {
            slot.insert(edge_spectral::endpoint_data(&g.potentials[pi], lambda, slices)?);
        }
    }
    Ok(cache)
}

/// Assemble the reduced operator at a guarded energy.
pub fn reduced_matrix(g: &PeriodicGraph, lambda: C, slices: usize) -> Result<FloquetMatrix> {
    g.validate()?;
    let data = edge_data(g, lambda, slices)?;
    let m = g.vertices.len();
    let mut matrix = LaurentMatrix::zero(m, g.rank);

    for e in &g.edges {
        let es = &data[&e.potential];
        if es.s.norm() <= DIRICHLET_GUARD {
            return Err(Error::Pole {
                abs_s: es.s.norm(),
                edge: format!("{}->{}", g.vertices[e.tail].id, g.vertices[e.head].id),
            });
        }
        let inv_s = 1.0 / es.s;
        let fwd = LaurentPoly::monomial(g.rank, e.shift.clone(), inv_s);
        let rev = LaurentPoly::monomial(g.rank, e.shift.iter().map(|&k| -k).collect(), inv_s);
        let cur = matrix.entry(e.tail, e.head).add(&fwd)?;
        matrix.set(e.tail, e.head, cur);
        let cur = matrix.entry(e.head, e.tail).add(&rev)?;
        matrix.set(e.head, e.tail, cur);
        // diagonal: c of the direction pointing away from each endpoint
        matrix.add_diag(e.tail, -es.c * inv_s)?;
        matrix.add_diag(e.head, -es.s_prime * inv_s)?;
    }
    for (v, vert) in g.vertices.iter().enumerate() {
        matrix.add_diag(v, C::new(-vert.alpha, 0.0))?;
    }
    for d in &g.dangling {
        let es = &data[&d.potential];
        let shift = match d.end {
            EndCondition::Dirichlet => {
                if es.s.norm() <= DIRICHLET_GUARD {
                    return Err(Error::Pole {
                        abs_s: es.s.norm(),
                        edge: format!("dangling@{}", g.vertices[d.vertex].id),
                    });
                }
                -es.c / es.s
            }
            EndCondition::Neumann => {
                if es.s_prime.norm() <= DIRICHLET_GUARD {
                    return Err(Error::Pole {
                        abs_s: es.s_prime.norm(),
                        edge: format!("dangling@{}", g.vertices[d.vertex].id),
                    });
                }
                -es.c_prime / es.s_prime
            }
        };
        matrix.add_diag(d.vertex, shift)?;
    }

    Ok(FloquetMatrix {
        lambda,
        vertex_order: g.vertices.iter().map(|v| v.id.clone()).collect(),
        matrix,
    })
}

/// Dispersion polynomial D(lambda, .) = det of the reduced matrix.
pub fn dispersion_poly(g: &PeriodicGraph, lambda: C, slices: usize) -> Result<LaurentPoly> {
    reduced_matrix(g, lambda, slices)?.matrix.det()
}

#[derive(Debug, Clone, Copy)]
pub struct FermiRow {
    pub k1: f64,
    pub k2: f64,
    pub abs_d: f64,
    pub log10_abs_d: f64,
}

/// Sample |D(lambda, e^{ik})| on the closed uniform grid over [-pi, pi]^2,
/// row-major in (k1, k2).
pub fn fermi_slice(g: &PeriodicGraph, lambda: f64, n1: usize, n2: usize, slices: usize) -> Result<Vec<FermiRow>> {
    if g.rank != 2 {
        return Err(Error::Shape(format!("fermi slices need rank 2, got {}", g.rank)));
    }
    if n1 < 2 || n2 < 2 {
        return Err(Error::Precondition("grid sizes must be >= 2".into()));
    }
    let d = dispersion_poly(g, C::new(lambda, 0.0), slices)?;
    let pi = std::f64::consts::PI;
    let mut rows = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        let k1 = -pi + 2.0 * pi * i as f64 / (n1 - 1) as f64;
        for j in 0..n2 {
            let k2 = -pi + 2.0 * pi * j as f64 / (n2 - 1) as f64;
            let z = [C::from_polar(1.0, k1), C::from_polar(1.0, k2)];
            let abs_d = d.eval(&z)?.norm();
            rows.push(FermiRow { k1, k2, abs_d, log10_abs_d: abs_d.log10() });
        }
    }
    Ok(rows)
}

/// CSV emission with the documented header, 17 significant digits.
pub fn fermi_csv(rows: &[FermiRow]) -> String {
    let mut out = String::from("k1,k2,absD,log10absD\n");
    for r in rows {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.k1, r.k2, r.abs_d, r.log10_abs_d
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_model::builtin;
    use crate::numerics::c64;
    use crate::potential::Potential;
    use rand::prelude::*;

    #[test]
    fn square_lattice_closed_form() {
        let g = builtin::square_lattice(Potential::zero(1.0), 0.0);
        let lambda = c64(std::f64::consts::PI.powi(2) / 4.0, 0.0);
        let fm = reduced_matrix(&g, lambda, 128).unwrap();
        assert_eq!(fm.matrix.dim(), 1);
        let p = fm.matrix.entry(0, 0);
        // (pi/2)(z1 + 1/z1 + z2 + 1/z2): c = 0 kills the diagonal constant
        let half_pi = std::f64::consts::PI / 2.0;
        for e in [[1, 0], [-1, 0], [0, 1], [0, -1]] {
            assert!((p.coeff(&e) - c64(half_pi, 0.0)).norm() < 1e-12, "coeff {e:?}");
        }
        assert!(p.coeff(&[0, 0]).norm() < 1e-12);

        let d = dispersion_poly(&g, lambda, 128).unwrap();
        assert!(d.residual(p) < 1e-14);
    }

    #[test]
    fn graphene_entries_match_displayed_form() {
        let qa = Potential::zero(1.0);
        let qb = Potential::constant(2.0, 1.0);
        let qc = Potential::step(5.0, 0.5, 1.0);
        let (a1, a2) = (0.3, -0.7);
        let g = builtin::graphene_layer(qa.clone(), qb.clone(), qc.clone(), a1, a2);
        let lambda = c64(1.6, 0.4);
        let fm = reduced_matrix(&g, lambda, 512).unwrap();

        let ea = edge_spectral::endpoint_data(&qa, lambda, 512).unwrap();
        let eb = edge_spectral::endpoint_data(&qb, lambda, 512).unwrap();
        let ec = edge_spectral::endpoint_data(&qc, lambda, 512).unwrap();

        // off-diagonal: w-form at (v1, v2) with +shift powers, reciprocal at (v2, v1)
        let w12 = fm.matrix.entry(0, 1);
        assert!((w12.coeff(&[0, 0]) - 1.0 / ea.s).norm() < 1e-12);
        assert!((w12.coeff(&[1, 0]) - 1.0 / eb.s).norm() < 1e-12);
        assert!((w12.coeff(&[0, 1]) - 1.0 / ec.s).norm() < 1e-12);
        let w21 = fm.matrix.entry(1, 0);
        assert!((w21.coeff(&[0, 0]) - 1.0 / ea.s).norm() < 1e-12);
        assert!((w21.coeff(&[-1, 0]) - 1.0 / eb.s).norm() < 1e-12);
        assert!((w21.coeff(&[0, -1]) - 1.0 / ec.s).norm() < 1e-12);

        // diagonals: c-values away from each vertex (c forward, s' reversed)
        let m1 = fm.matrix.entry(0, 0).coeff(&[0, 0]);
        let m1_want = -(ea.c / ea.s + eb.c / eb.s + ec.c / ec.s) - a1;
        assert!((m1 - m1_want).norm() < 1e-12);
        let m2 = fm.matrix.entry(1, 1).coeff(&[0, 0]);
        let m2_want = -(ea.s_prime / ea.s + eb.s_prime / eb.s + ec.s_prime / ec.s) - a2;
        assert!((m2 - m2_want).norm() < 1e-12);

        // determinant: m1 m2 - w w'
        let d = dispersion_poly(&g, lambda, 512).unwrap();
        let want = fm
            .matrix
            .entry(0, 0)
            .mul(fm.matrix.entry(1, 1))
            .unwrap()
            .sub(&w12.mul(w21).unwrap())
            .unwrap();
        assert!(d.residual(&want) < 1e-13);
    }

    #[test]
    fn hermitian_on_torus_at_real_energy() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let graphs = vec![
            builtin::square_lattice(Potential::step(5.0, 0.5, 1.0), 0.4),
            builtin::graphene_layer(
                Potential::zero(1.0),
                Potential::constant(2.0, 1.0),
                Potential::step(5.0, 0.5, 1.0),
                0.1,
                0.7,
            ),
            builtin::double_square(Potential::constant(1.5, 1.0), -0.3),
        ];
        for g in graphs {
            let mut lambda = 1.3;
            while !g.dirichlet_guard_check(c64(lambda, 0.0), 256).unwrap() {
                lambda += 0.17;
            }
            let fm = reduced_matrix(&g, c64(lambda, 0.0), 256).unwrap();
            for _ in 0..8 {
                let z: Vec<C> = (0..2)
                    .map(|_| C::from_polar(1.0, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)))
                    .collect();
                let a = fm.matrix.eval(&z).unwrap();
                let m = fm.matrix.dim();
                #[allow(clippy::needless_range_loop)]
                for i in 0..m {
                    for j in 0..m {
                        let delta = (a[i][j] - a[j][i].conj()).norm();
                        assert!(delta < 1e-9, "hermitian defect {delta} at ({i},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn determinant_matches_numeric_at_torus_points() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let spec = builtin::graphene_bilayer(
            Potential::zero(1.0),
            Potential::zero(1.0),
            Potential::zero(1.0),
            0.0,
            0.0,
            Potential::step(5.0, 0.5, 1.0),
            Potential::zero(1.0),
        );
        let g = crate::graph_model::build_bilayer(&spec).unwrap();
        let lambda = c64(1.9, 0.0);
        let fm = reduced_matrix(&g, lambda, 512).unwrap();
        let d = fm.matrix.det().unwrap();
        for _ in 0..32 {
            let z: Vec<C> = (0..2)
                .map(|_| C::from_polar(1.0, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)))
                .collect();
            let sym = d.eval(&z).unwrap();
            let a = fm.matrix.eval(&z).unwrap();
            let num = det4(&a);
            assert!(
                (sym - num).norm() <= 1e-8 * num.norm().max(1e-12),
                "at z = {z:?}: {sym} vs {num}"
            );
        }
    }

    fn det4(a: &[Vec<C>]) -> C {
        // Laplace expansion, fine for 4x4 test use
        fn det_n(a: &[Vec<C>], rows: &[usize], cols: &[usize]) -> C {
            if rows.len() == 1 {
                return a[rows[0]][cols[0]];
            }
            let mut acc = C::new(0.0, 0.0);
            let sub_rows = &rows[1..];
            for (j, &c) in cols.iter().enumerate() {
                let sub_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
                let minor = det_n(a, sub_rows, &sub_cols);
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                acc += a[rows[0]][c] * minor * sign;
            }
            acc
        }
        let idx: Vec<usize> = (0..a.len()).collect();
        det_n(a, &idx, &idx)
    }

    #[test]
    fn vertex_permutation_leaves_abs_det_invariant() {
        let layer = builtin::graphene_layer(
            Potential::zero(1.0),
            Potential::constant(2.0, 1.0),
            Potential::step(5.0, 0.5, 1.0),
            0.1,
            0.7,
        );
        let mut permuted = layer.clone();
        permuted.vertices.swap(0, 1);
        for e in &mut permuted.edges {
            e.tail = 1 - e.tail;
            e.head = 1 - e.head;
        }
        let lambda = c64(1.1, 0.3);
        let d1 = dispersion_poly(&layer, lambda, 256).unwrap();
        let d2 = dispersion_poly(&permuted, lambda, 256).unwrap();
        for th in [0.3, 1.1, -2.0] {
            let z = [C::from_polar(1.0, th), C::from_polar(1.0, -0.4 * th)];
            let a = d1.eval(&z).unwrap().norm();
            let b = d2.eval(&z).unwrap().norm();
            assert!((a - b).abs() <= 1e-10 * a.max(1.0));
        }
    }

    #[test]
    fn fermi_slice_zero_set_and_symmetry() {
        let g = builtin::square_lattice(Potential::zero(1.0), 0.0);
        let lambda = std::f64::consts::PI.powi(2) / 4.0;
        let rows = fermi_slice(&g, lambda, 5, 5, 128).unwrap();
        assert_eq!(rows.len(), 25);
        // (k1, k2) = (pi/2, pi/2) lies on cos k1 + cos k2 = 0
        let hit = rows
            .iter()
            .find(|r| (r.k1 - std::f64::consts::PI / 2.0).abs() < 1e-12 && (r.k2 - std::f64::consts::PI / 2.0).abs() < 1e-12)
            .expect("grid point present");
        assert!(hit.abs_d < 1e-12, "determinant at the zero set: {}", hit.abs_d);
        // k -> -k symmetry
        for r in &rows {
            let mirror = rows
                .iter()
                .find(|m| (m.k1 + r.k1).abs() < 1e-12 && (m.k2 + r.k2).abs() < 1e-12)
                .unwrap();
            assert!((mirror.abs_d - r.abs_d).abs() <= 1e-10 * r.abs_d.max(1.0));
        }
    }

    #[test]
    fn pole_error_identifies_edge() {
        let g = builtin::square_lattice(Potential::zero(1.0), 0.0);
        let pi2 = std::f64::consts::PI.powi(2);
        match reduced_matrix(&g, c64(pi2, 0.0), 128) {
            Err(Error::Pole { edge, .. }) => assert!(edge.contains('v')),
            other => panic!("expected pole, got {other:?}"),
        }
    }
}
