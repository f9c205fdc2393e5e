//! Python bindings for the core types and operations: potentials, edge
//! spectral data, ramification points, graph models, dispersion polynomials
//! and the reducibility reports.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qgraph::edge_spectral;
use qgraph::floquet;
use qgraph::graph_model::{self, ParsedGraph};
use qgraph::laurent::LaurentPoly;
use qgraph::numerics::{Matrix2, Region};
use qgraph::reducibility;
use qgraph::riemann;

type C = Complex64;

fn err(e: qgraph::Error) -> PyErr {
    match &e {
        qgraph::Error::Numeric(_) | qgraph::Error::ContinuationAmbiguity { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn mat2(m: &Matrix2) -> Vec<Vec<C>> {
    vec![
        vec![m.0[0][0], m.0[0][1]],
        vec![m.0[1][0], m.0[1][1]],
    ]
}

fn poly_terms(p: &LaurentPoly) -> Vec<(Vec<i32>, C)> {
    p.terms().map(|(e, &c)| (e.clone(), c)).collect()
}

/// A potential on an edge.
#[pyclass(name = "Potential", skip_from_py_object)]
#[derive(Clone)]
struct PyPotential {
    inner: qgraph::Potential,
}

#[pymethods]
impl PyPotential {
    #[staticmethod]
    #[pyo3(signature = (length=1.0))]
    fn zero(length: f64) -> Self {
        PyPotential { inner: qgraph::Potential::zero(length) }
    }

    #[staticmethod]
    #[pyo3(signature = (value, length=1.0))]
    fn constant(value: f64, length: f64) -> Self {
        PyPotential { inner: qgraph::Potential::constant(value, length) }
    }

    #[staticmethod]
    #[pyo3(signature = (height=5.0, breakpoint=0.5, length=1.0))]
    fn step(height: f64, breakpoint: f64, length: f64) -> Self {
        PyPotential { inner: qgraph::Potential::step(height, breakpoint, length) }
    }

    #[staticmethod]
    #[pyo3(signature = (breaks, values, length=1.0))]
    fn piecewise(breaks: Vec<f64>, values: Vec<f64>, length: f64) -> PyResult<Self> {
        qgraph::Potential::new(qgraph::PotentialKind::Piecewise { breaks, values }, length)
            .map(|inner| PyPotential { inner })
            .map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (cos, sin, length=1.0))]
    fn trig(cos: Vec<f64>, sin: Vec<f64>, length: f64) -> PyResult<Self> {
        qgraph::Potential::new(qgraph::PotentialKind::Trig { cos, sin, period: None }, length)
            .map(|inner| PyPotential { inner })
            .map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (values, length=1.0))]
    fn samples(values: Vec<f64>, length: f64) -> PyResult<Self> {
        qgraph::Potential::new(qgraph::PotentialKind::Samples { values }, length)
            .map(|inner| PyPotential { inner })
            .map_err(err)
    }

    fn evaluate(&self, x: f64) -> PyResult<f64> {
        self.inner.evaluate(x).map_err(err)
    }

    fn reflect(&self) -> Self {
        PyPotential { inner: self.inner.reflect() }
    }

    fn even_odd_parts(&self) -> (Self, Self) {
        let (even, odd) = self.inner.even_odd_parts();
        (PyPotential { inner: even }, PyPotential { inner: odd })
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.length()
    }

    fn __repr__(&self) -> String {
        format!("Potential({:?}, length={})", self.inner.kind(), self.inner.length())
    }
}

/// Endpoint spectral data (c, s, c', s', a, b) at one energy.
#[pyfunction]
#[pyo3(signature = (potential, lam, slices=1024))]
fn edge_data<'py>(
    py: Python<'py>,
    potential: &PyPotential,
    lam: C,
    slices: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let es = edge_spectral::endpoint_data(&potential.inner, lam, slices).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("lambda", es.lambda)?;
    d.set_item("c", es.c)?;
    d.set_item("s", es.s)?;
    d.set_item("c_prime", es.c_prime)?;
    d.set_item("s_prime", es.s_prime)?;
    d.set_item("a", es.a)?;
    d.set_item("b", es.b)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (potential, lam, slices=1024))]
fn transfer_matrix(potential: &PyPotential, lam: C, slices: usize) -> PyResult<Vec<Vec<C>>> {
    edge_spectral::transfer_matrix(&potential.inner, lam, slices)
        .map(|m| mat2(&m))
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (potential, lam, slices=1024))]
fn dtn_matrix(potential: &PyPotential, lam: C, slices: usize) -> PyResult<Vec<Vec<C>>> {
    edge_spectral::dtn_matrix(&potential.inner, lam, slices)
        .map(|m| mat2(&m))
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (potential, lam, slices=1024))]
fn a_function(potential: &PyPotential, lam: C, slices: usize) -> PyResult<C> {
    edge_spectral::a_function(&potential.inner, lam, slices).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (potential, lambda_max, slices=1024))]
fn dirichlet_eigenvalues(potential: &PyPotential, lambda_max: f64, slices: usize) -> PyResult<Vec<f64>> {
    edge_spectral::dirichlet_eigenvalues(&potential.inner, lambda_max, slices).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (p1, p2, tol=1e-8, slices=1024))]
fn same_asymmetry_class(p1: &PyPotential, p2: &PyPotential, tol: f64, slices: usize) -> PyResult<bool> {
    let grid = edge_spectral::default_class_grid();
    edge_spectral::same_asymmetry_class(&p1.inner, &p2.inner, &grid, tol, slices).map_err(err)
}

#[pyfunction]
fn mu_branches(a_value: C) -> (C, C) {
    riemann::mu_branches(a_value)
}

#[pyfunction]
#[pyo3(signature = (potential, re_min, re_max, im_min, im_max, slices=1024))]
fn branch_points<'py>(
    py: Python<'py>,
    potential: &PyPotential,
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    slices: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let region = Region::new(re_min, re_max, im_min, im_max);
    let points = riemann::branch_points(&potential.inner, &region, slices).map_err(err)?;
    points
        .iter()
        .map(|bp| {
            let d = PyDict::new(py);
            d.set_item("lambda0", bp.lambda0)?;
            d.set_item("sign", bp.sign as i32)?;
            d.set_item("newton_residual", bp.newton_residual)?;
            Ok(d)
        })
        .collect()
}

#[pyfunction]
#[pyo3(signature = (potential, path, start_sign=1, slices=1024))]
fn continue_mu(potential: &PyPotential, path: Vec<C>, start_sign: i8, slices: usize) -> PyResult<Vec<C>> {
    riemann::continue_mu(&potential.inner, &path, start_sign, slices).map_err(err)
}

/// A periodic graph or bilayer blueprint.
#[pyclass(name = "Graph", skip_from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: ParsedGraph,
}

#[pymethods]
impl PyGraph {
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        qgraph::cli::builtin_graph(name)
            .map(|inner| PyGraph { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        graph_model::parse_graph_file(std::path::Path::new(path))
            .map(|inner| PyGraph { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        graph_model::parse_graph_spec(text)
            .map(|inner| PyGraph { inner })
            .map_err(err)
    }

    /// Dispersion polynomial terms [(exponents, coefficient)] of the full
    /// graph (bilayers are assembled first).
    #[pyo3(signature = (lam, slices=1024))]
    fn dispersion(&self, lam: C, slices: usize) -> PyResult<Vec<(Vec<i32>, C)>> {
        let g = self.inner.clone().as_graph().map_err(err)?;
        let d = floquet::dispersion_poly(&g, lam, slices).map_err(err)?;
        Ok(poly_terms(&d))
    }

    /// |D| on the closed uniform grid over [-pi, pi]^2.
    #[pyo3(signature = (lam, grid=32, slices=1024))]
    fn fermi_slice(&self, lam: f64, grid: usize, slices: usize) -> PyResult<Vec<(f64, f64, f64)>> {
        let g = self.inner.clone().as_graph().map_err(err)?;
        let rows = floquet::fermi_slice(&g, lam, grid, grid, slices).map_err(err)?;
        Ok(rows.iter().map(|r| (r.k1, r.k2, r.abs_d)).collect())
    }

    fn is_bilayer(&self) -> bool {
        matches!(self.inner, ParsedGraph::Bilayer(_))
    }

    fn __repr__(&self) -> String {
        let layer = self.inner.layer();
        format!(
            "Graph(rank={}, vertices={}, edges={}, bilayer={})",
            layer.rank,
            layer.vertices.len(),
            layer.edges.len(),
            self.is_bilayer()
        )
    }
}

fn bilayer_of(graph: &PyGraph) -> PyResult<graph_model::BilayerSpec> {
    graph.inner.clone().as_bilayer().map_err(err)
}

#[pyfunction]
#[pyo3(signature = (graph, lam, slices=1024, class_tol=1e-8))]
fn factor_same_class<'py>(
    py: Python<'py>,
    graph: &PyGraph,
    lam: C,
    slices: usize,
    class_tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = bilayer_of(graph)?;
    let rep = reducibility::factor_same_class(&spec, lam, slices, class_tol).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("lambda", rep.lambda)?;
    d.set_item("mu", rep.mu)?;
    d.set_item("d_plus", poly_terms(&rep.d_plus))?;
    d.set_item("d_minus", poly_terms(&rep.d_minus))?;
    d.set_item("product_residual", rep.product_residual)?;
    d.set_item("components_distinct", rep.components_distinct)?;
    d.set_item("components_nonempty", rep.components_nonempty)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (graph, lam, slices=1024))]
fn graphene_reduction<'py>(
    py: Python<'py>,
    graph: &PyGraph,
    lam: C,
    slices: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = bilayer_of(graph)?;
    let rep = reducibility::graphene_reduction(&spec, lam, slices).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("lambda", rep.lambda)?;
    d.set_item("b1", mat2(&rep.b1))?;
    d.set_item("b2", mat2(&rep.b2))?;
    d.set_item("r", mat2(&rep.r))?;
    d.set_item("zeta_eigs", rep.zeta_eigs)?;
    d.set_item("quad_residual", rep.quad_residual)?;
    let subspaces: Vec<Vec<Vec<C>>> = rep
        .mode_subspaces
        .iter()
        .map(|basis| basis.iter().map(|v| v.to_vec()).collect())
        .collect();
    d.set_item("mode_subspaces", subspaces)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (graph, lam, slices=1024))]
fn square7_discriminant<'py>(
    py: Python<'py>,
    graph: &PyGraph,
    lam: C,
    slices: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = bilayer_of(graph)?;
    let rep = reducibility::square7_discriminant(&spec, lam, slices).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("lambda", rep.lambda)?;
    d.set_item("omega", rep.omega.to_vec())?;
    d.set_item("r_squared", rep.r_squared)?;
    d.set_item("discriminant_d2", rep.discriminant_d2)?;
    d.set_item("scale", rep.scale)?;
    d.set_item("reducible", rep.reducible)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (graph, connector, lam, slices=1024))]
fn decorated_equivalence(
    graph: &PyGraph,
    connector: &PyPotential,
    lam: C,
    slices: usize,
) -> PyResult<(f64, f64)> {
    let layer = graph.inner.layer().clone();
    reducibility::decorated_equivalence(&layer, &connector.inner, lam, slices).map_err(err)
}

#[pyfunction]
fn f0_intersection() -> Vec<(C, C)> {
    reducibility::f0_intersection().to_vec()
}

/// Points on the level curve w w' = zeta of the equal-potential hexagonal
/// layer, parameterized by sample values of w (scaled to w = 1 + z1 + z2).
#[pyfunction]
fn f_zeta_points(zeta: C, s_values: (C, C, C), w_samples: Vec<C>) -> PyResult<Vec<(C, C)>> {
    reducibility::f_zeta_points(zeta, s_values, &w_samples).map_err(err)
}

#[pymodule]
fn qgraph_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPotential>()?;
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(edge_data, m)?)?;
    m.add_function(wrap_pyfunction!(transfer_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(dtn_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(a_function, m)?)?;
    m.add_function(wrap_pyfunction!(dirichlet_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(same_asymmetry_class, m)?)?;
    m.add_function(wrap_pyfunction!(mu_branches, m)?)?;
    m.add_function(wrap_pyfunction!(branch_points, m)?)?;
    m.add_function(wrap_pyfunction!(continue_mu, m)?)?;
    m.add_function(wrap_pyfunction!(factor_same_class, m)?)?;
    m.add_function(wrap_pyfunction!(graphene_reduction, m)?)?;
    m.add_function(wrap_pyfunction!(square7_discriminant, m)?)?;
    m.add_function(wrap_pyfunction!(decorated_equivalence, m)?)?;
    m.add_function(wrap_pyfunction!(f0_intersection, m)?)?;
    m.add_function(wrap_pyfunction!(f_zeta_points, m)?)?;
    Ok(())
}
