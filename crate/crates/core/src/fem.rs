//! Classical finite-element ground truth: elementary link matrices, direct
//! stiffness assembly, loads, Dirichlet handling, linear solves and the
//! classical fracture observables.
//!
//! Everything here is plain dense linear algebra; the quantum-side modules
//! are validated against these results.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::{BcDescriptor, Model, ProblemSpec};
use crate::tensor::{materialize_sum, OperatorSum, MAX_DENSE_QUBITS};

/// Local corner of a Quad4 element, counterclockwise from the bottom left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    A,
    B,
    C,
    D,
}

pub const CORNERS: [Corner; 4] = [Corner::A, Corner::B, Corner::C, Corner::D];

impl Corner {
    /// Local node coordinates on the unit element.
    pub fn coords(self) -> (usize, usize) {
        match self {
            Corner::A => (0, 0),
            Corner::B => (1, 0),
            Corner::C => (1, 1),
            Corner::D => (0, 1),
        }
    }

    fn index(self) -> usize {
        match self {
            Corner::A => 0,
            Corner::B => 1,
            Corner::C => 2,
            Corner::D => 3,
        }
    }
}

fn transpose2(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

/// Plane-strain link matrix between two local corners of the unit Quad4
/// element. The entries carry no mesh-size dependence.
pub fn elementary_link(nu: f64, i: Corner, j: Corner) -> [[f64; 2]; 2] {
    use Corner::*;
    let diag = 0.5 - 2.0 * nu / 3.0;
    let kaa = [[diag, 0.125], [0.125, diag]];
    let kbb = [[diag, -0.125], [-0.125, diag]];
    let kab = [[-0.25 + nu / 6.0, -0.125 + nu / 2.0], [0.125 - nu / 2.0, nu / 6.0]];
    let kad = [[nu / 6.0, 0.125 - nu / 2.0], [-0.125 + nu / 2.0, -0.25 + nu / 6.0]];
    let kac = [[-0.25 + nu / 3.0, -0.125], [-0.125, -0.25 + nu / 3.0]];
    let kbd = [[-0.25 + nu / 3.0, 0.125], [0.125, -0.25 + nu / 3.0]];
    match (i, j) {
        (A, A) | (C, C) => kaa,
        (B, B) | (D, D) => kbb,
        (A, B) | (C, D) => kab,
        (B, A) | (D, C) => transpose2(kab),
        (A, D) | (C, B) => kad,
        (D, A) | (B, C) => transpose2(kad),
        (A, C) | (C, A) => kac,
        (B, D) | (D, B) => kbd,
    }
}

/// Scalar-model flavor: bilinear FEM couplings or nearest-neighbor FDM.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarKind {
    PoissonFem,
    LaplaceFdm,
}

impl ScalarKind {
    pub fn from_model(model: Model) -> Option<Self> {
        match model {
            Model::ScalarPoisson => Some(ScalarKind::PoissonFem),
            Model::ScalarFdm => Some(ScalarKind::LaplaceFdm),
            _ => None,
        }
    }
}

/// The 4x4 corner-coupling table of the scalar models, indexed (a, b, c, d).
pub fn scalar_link(kind: ScalarKind) -> [[f64; 4]; 4] {
    match kind {
        ScalarKind::PoissonFem => [
            [4.0, -1.0, -2.0, -1.0],
            [-1.0, 4.0, -1.0, -2.0],
            [-2.0, -1.0, 4.0, -1.0],
            [-1.0, -2.0, -1.0, 4.0],
        ],
        ScalarKind::LaplaceFdm => [
            [2.0, -1.0, 0.0, -1.0],
            [-1.0, 2.0, -1.0, 0.0],
            [0.0, -1.0, 2.0, -1.0],
            [-1.0, 0.0, -1.0, 2.0],
        ],
    }
}

/// Direct element-by-element assembly of the stiffness matrix.
pub fn assemble_k(spec: &ProblemSpec) -> Result<DMatrix<f64>> {
    let n = spec.n();
    if n > MAX_DENSE_QUBITS {
        return Err(Error::DimensionOverflow { requested: n, cap: MAX_DENSE_QUBITS });
    }
    let dim = 1usize << n;
    let mut k = DMatrix::zeros(dim, dim);
    let scalar = ScalarKind::from_model(spec.model);
    for ey in 0..spec.nodes_y() - 1 {
        for ex in 0..spec.nodes_x() - 1 {
            for ci in CORNERS {
                let (dxi, dyi) = ci.coords();
                for cj in CORNERS {
                    let (dxj, dyj) = cj.coords();
                    let (xi, yi) = (ex + dxi, ey + dyi);
                    let (xj, yj) = (ex + dxj, ey + dyj);
                    match scalar {
                        Some(kind) => {
                            let v = scalar_link(kind)[ci.index()][cj.index()];
                            k[(spec.dof_index(xi, yi, 0), spec.dof_index(xj, yj, 0))] += v;
                        }
                        None => {
                            let link = elementary_link(spec.nu, ci, cj);
                            for (alpha, row) in link.iter().enumerate() {
                                for (beta, v) in row.iter().enumerate() {
                                    k[(
                                        spec.dof_index(xi, yi, alpha),
                                        spec.dof_index(xj, yj, beta),
                                    )] += v;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(k)
}

/// Uniform top-edge traction as consistent nodal forces: the total load is
/// spread over the 2^{n_x} top-row vertical DoFs.
pub fn force_vector(spec: &ProblemSpec) -> DVector<f64> {
    let dim = 1usize << spec.n();
    let mut f = DVector::zeros(dim);
    if spec.model.is_scalar() || spec.load_density == 0.0 {
        return f;
    }
    let top = spec.nodes_y() - 1;
    for x in 0..spec.nodes_x() {
        f[spec.dof_index(x, top, 1)] = spec.nodal_load();
    }
    f
}

/// Dense real projector from Dirichlet selectors (diagonal 0/1 matrix).
pub fn bc_projector_matrix(n: usize, bcs: &[BcDescriptor]) -> Result<DMatrix<f64>> {
    let dim = 1usize << n;
    let mut p = DMatrix::zeros(dim, dim);
    for (a, bc) in bcs.iter().enumerate() {
        if bc.n() != n {
            return Err(Error::LengthMismatch { expected: n, got: bc.n() });
        }
        for (b, other) in bcs.iter().enumerate() {
            if a < b && bc.overlaps(other) {
                return Err(Error::OverlappingSelectors(format!(
                    "selectors {a} and {b} share basis indices"
                )));
            }
        }
        for i in bc.indices() {
            p[(i, i)] = 1.0;
        }
    }
    Ok(p)
}

/// Replaces constrained DoFs: returns (I−P)·K·(I−P) + P.
///
/// `p_op` must materialize to a hermitian idempotent (checked to 1e-12).
pub fn apply_dirichlet(k: &DMatrix<f64>, p_op: &OperatorSum) -> Result<DMatrix<f64>> {
    let dense = materialize_sum(p_op)?;
    let dim = dense.nrows();
    let mut p = DMatrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            if dense[(r, c)].im.abs() > 1e-12 {
                return Err(Error::NotAProjector("imaginary entries".into()));
            }
            p[(r, c)] = dense[(r, c)].re;
        }
    }
    if (&p - p.transpose()).amax() > 1e-12 {
        return Err(Error::NotAProjector("not hermitian".into()));
    }
    if (&p * &p - &p).amax() > 1e-12 {
        return Err(Error::NotAProjector("not idempotent".into()));
    }
    apply_dirichlet_dense(k, &p)
}

/// Same restriction with an already-validated dense projector.
pub fn apply_dirichlet_dense(k: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dim = k.nrows();
    if p.nrows() != dim {
        return Err(Error::LengthMismatch { expected: dim, got: p.nrows() });
    }
    let free = DMatrix::identity(dim, dim) - p;
    Ok(&free * k * &free + p)
}

/// Direct SPD solve via Cholesky factorization.
pub fn classical_solve(k: &DMatrix<f64>, f: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = k.clone().cholesky().ok_or(Error::SingularMatrix)?;
    Ok(chol.solve(f))
}

/// Conjugate gradients on a matrix-free operator; for references beyond the
/// dense cap.
pub fn solve_cg<F>(apply: F, f: &DVector<f64>, tol: f64, max_iter: usize) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut x = DVector::zeros(f.len());
    let mut r = f.clone();
    let mut p = r.clone();
    let mut rs = r.dot(&r);
    let fnorm = f.norm().max(f64::MIN_POSITIVE);
    for _ in 0..max_iter {
        if rs.sqrt() / fnorm <= tol {
            return Ok(x);
        }
        let ap = apply(&p);
        let denom = p.dot(&ap);
        if denom <= 0.0 {
            return Err(Error::SingularMatrix);
        }
        let alpha = rs / denom;
        x += alpha * &p;
        r -= alpha * &ap;
        let rs_new = r.dot(&r);
        p = &r + (rs_new / rs) * p;
        rs = rs_new;
    }
    if rs.sqrt() / fnorm <= tol {
        Ok(x)
    } else {
        Err(Error::SingularMatrix)
    }
}

/// Assembles, restricts and solves the full problem in one call.
pub fn solve_problem(spec: &ProblemSpec) -> Result<DVector<f64>> {
    spec.validate()?;
    let k = assemble_k(spec)?;
    let p = bc_projector_matrix(spec.n(), &spec.boundary_conditions())?;
    let kt = apply_dirichlet_dense(&k, &p)?;
    let f = force_vector(spec);
    if f.norm() == 0.0 {
        return Ok(DVector::zeros(f.len()));
    }
    classical_solve(&kt, &f)
}

/// Classical fracture observables extracted from a nodal solution.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClassicalObservables {
    /// Crack-mouth vertical displacement.
    pub cod: f64,
    /// Least-squares fit of the near-tip square-root profile.
    pub sif_fit: f64,
    /// Lip-integrated estimate (full lip).
    pub sif_integral: f64,
}

/// Discrete lip-integral SIF over the DoFs selected by `sel`:
/// √(π · Σ u_i²) · 2^{−n_x/2} / ((1−ν²) √W).
///
/// The sum approximates the lip integral of u_y² with node spacing W/2^{n_x},
/// making the estimate mesh-size independent at fixed physical solution.
pub fn sif_integral_on(u: &DVector<f64>, spec: &ProblemSpec, sel: &BcDescriptor) -> f64 {
    let sum: f64 = sel.indices().iter().map(|&i| u[i] * u[i]).sum();
    (std::f64::consts::PI * sum).sqrt() / ((1.0 - spec.nu * spec.nu) * spec.width.sqrt())
        / ((1usize << spec.n_x) as f64).sqrt()
}

/// Least-squares SIF from u_y(r) = SIF · 2(1−ν²)√(2r/π) over the inner half
/// of the lip (nearest the tip, tip node excluded).
pub fn sif_fit(u: &DVector<f64>, spec: &ProblemSpec) -> f64 {
    let tip = spec.nodes_x() / 2;
    let h = spec.width / (spec.nodes_x() - 1) as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in spec.nodes_x() / 4..tip {
        let r = (tip - i) as f64 * h;
        let g = 2.0 * (1.0 - spec.nu * spec.nu)
            * (2.0 * r / std::f64::consts::PI).sqrt();
        num += u[spec.dof_index(i, 0, 1)] * g;
        den += g * g;
    }
    num / den
}

pub fn classical_observables(u: &DVector<f64>, spec: &ProblemSpec) -> Result<ClassicalObservables> {
    if spec.model != Model::HalfPlateCrack {
        return Err(Error::InvalidProblem(
            "fracture observables require the half_plate_crack model".into(),
        ));
    }
    Ok(ClassicalObservables {
        cod: u[spec.dof_index(0, 0, 1)],
        sif_fit: sif_fit(u, spec),
        sif_integral: sif_integral_on(u, spec, &spec.full_lip_selector()),
    })
}
