//! Plate geometry, mesh encoding and boundary-condition selectors.
//!
//! Nodal displacements live on a regular `2^{n_x} × 2^{n_y}` grid and are
//! encoded as basis states |y, x, d⟩: the `n_y` most significant qubits hold
//! the row, the next `n_x` the column, and the last qubit selects the
//! horizontal (d = 0) or vertical (d = 1) displacement component. Scalar
//! models drop the d qubit.

use crate::error::{Error, Result};
use crate::tensor::Elementary2x2;

/// Physical model realized on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Upper half of a center-cracked plate under uniform top traction:
    /// crack lip {y=0, x < N_x/2} free, ligament {y=0, x ≥ N_x/2} with
    /// u_y = 0, crack-tip node x = N_x/2 with u_x = 0.
    HalfPlateCrack,
    /// Pure-Neumann plate: no Dirichlet conditions, rigid modes in the kernel.
    FreePlate,
    /// Scalar Poisson equation with bilinear elements.
    ScalarPoisson,
    /// Scalar Laplacian, finite-difference couplings.
    ScalarFdm,
}

impl Model {
    pub fn is_scalar(self) -> bool {
        matches!(self, Model::ScalarPoisson | Model::ScalarFdm)
    }
}

/// Full description of one discretized problem instance.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProblemSpec {
    /// Mesh exponent along x: the grid has `2^{n_x}` node columns.
    pub n_x: usize,
    /// Mesh exponent along y.
    pub n_y: usize,
    /// Poisson ratio, in [0, 0.5).
    pub nu: f64,
    /// Physical plate width; enters only the fracture observables.
    pub width: f64,
    /// Physical plate height.
    pub height: f64,
    /// Total force applied uniformly along the top edge.
    pub load_density: f64,
    pub model: Model,
}

impl ProblemSpec {
    /// A square half-plate with unit load, the default study case.
    pub fn half_plate(n_x: usize, n_y: usize, nu: f64) -> Self {
        Self {
            n_x,
            n_y,
            nu,
            width: 1.0,
            height: 1.0,
            load_density: 1.0,
            model: Model::HalfPlateCrack,
        }
    }

    pub fn free_plate(n_x: usize, n_y: usize, nu: f64) -> Self {
        Self { model: Model::FreePlate, ..Self::half_plate(n_x, n_y, nu) }
    }

    pub fn scalar(n_x: usize, n_y: usize, model: Model) -> Self {
        Self {
            n_x,
            n_y,
            nu: 0.0,
            width: 1.0,
            height: 1.0,
            load_density: 0.0,
            model,
        }
    }

    /// Total qubit count: `n_x + n_y + 1` for elasticity, `n_x + n_y` scalar.
    pub fn n(&self) -> usize {
        self.n_x + self.n_y + if self.model.is_scalar() { 0 } else { 1 }
    }

    pub fn nodes_x(&self) -> usize {
        1 << self.n_x
    }

    pub fn nodes_y(&self) -> usize {
        1 << self.n_y
    }

    /// Basis index of DoF (x, y, d). Scalar models must pass d = 0.
    pub fn dof_index(&self, x: usize, y: usize, d: usize) -> usize {
        let node = (y << self.n_x) | x;
        if self.model.is_scalar() {
            debug_assert_eq!(d, 0);
            node
        } else {
            node << 1 | d
        }
    }

    /// Per-node force at a top-edge vertical DoF: the total load spread over
    /// the `2^{n_x}` top nodes.
    pub fn nodal_load(&self) -> f64 {
        self.load_density / self.nodes_x() as f64
    }

    /// Physical grid spacing along x.
    pub fn dx(&self) -> f64 {
        self.width / (self.nodes_x() - 1) as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_x < 1 || self.n_y < 1 {
            return Err(Error::InvalidProblem(
                "mesh exponents n_x, n_y must be at least 1".into(),
            ));
        }
        if !(0.0..0.5).contains(&self.nu) {
            return Err(Error::InvalidProblem(format!(
                "Poisson ratio {} outside [0, 0.5)",
                self.nu
            )));
        }
        if self.width <= 0.0 || self.height <= 0.0 {
            return Err(Error::InvalidProblem("plate dimensions must be positive".into()));
        }
        if self.model == Model::HalfPlateCrack && self.n_x < 2 {
            // With a single ligament node the in-plane rotation about the tip
            // is unconstrained and the restricted stiffness stays singular.
            return Err(Error::InvalidProblem(
                "half_plate_crack requires n_x >= 2 so the ligament pins all rigid modes".into(),
            ));
        }
        Ok(())
    }

    /// Dirichlet selectors for the model.
    pub fn boundary_conditions(&self) -> Vec<BcDescriptor> {
        match self.model {
            Model::HalfPlateCrack => vec![self.centerline_bc(), self.crack_tip_bc()],
            _ => Vec::new(),
        }
    }

    /// u_y = 0 on the ligament: y = 0, x ≥ N_x/2, d = 1.
    pub fn centerline_bc(&self) -> BcDescriptor {
        let mut bits = vec![Some(false); self.n_y];
        bits.push(Some(true));
        bits.extend(std::iter::repeat(None).take(self.n_x - 1));
        bits.push(Some(true));
        BcDescriptor { bits }
    }

    /// u_x = 0 at the crack tip: y = 0, x = N_x/2, d = 0.
    pub fn crack_tip_bc(&self) -> BcDescriptor {
        let mut bits = vec![Some(false); self.n_y];
        bits.push(Some(true));
        bits.extend(std::iter::repeat(Some(false)).take(self.n_x - 1));
        bits.push(Some(false));
        BcDescriptor { bits }
    }

    /// Selector for the whole crack lip's vertical DoFs: y = 0, x < N_x/2,
    /// d = 1.
    pub fn full_lip_selector(&self) -> BcDescriptor {
        let mut bits = vec![Some(false); self.n_y];
        bits.push(Some(false));
        bits.extend(std::iter::repeat(None).take(self.n_x - 1));
        bits.push(Some(true));
        BcDescriptor { bits }
    }

    /// Selector for the quarter of the lip nearest the tip:
    /// x ∈ [3·N_x/8, N_x/2). Needs n_x ≥ 3 to resolve the sub-interval.
    pub fn inner_quarter_selector(&self) -> Result<BcDescriptor> {
        if self.n_x < 3 {
            return Err(Error::InvalidProblem(format!(
                "inner-quarter lip selector needs n_x >= 3, got {}",
                self.n_x
            )));
        }
        let mut bits = vec![Some(false); self.n_y];
        bits.push(Some(false));
        bits.push(Some(true));
        bits.push(Some(true));
        bits.extend(std::iter::repeat(None).take(self.n_x - 3));
        bits.push(Some(true));
        Ok(BcDescriptor { bits })
    }
}

/// A per-qubit bit pattern with wildcards, materializing to one p±/I string.
///
/// `Some(false)` selects bit 0 (a p₊ factor), `Some(true)` bit 1 (p₋), and
/// `None` is a wildcard (identity factor).
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BcDescriptor {
    pub bits: Vec<Option<bool>>,
}

impl BcDescriptor {
    pub fn n(&self) -> usize {
        self.bits.len()
    }

    /// The projector as a single tensor factor string.
    pub fn factors(&self) -> Vec<Elementary2x2> {
        self.bits
            .iter()
            .map(|b| match b {
                None => Elementary2x2::Identity,
                Some(false) => Elementary2x2::PPlus,
                Some(true) => Elementary2x2::PMinus,
            })
            .collect()
    }

    /// True when the selected index sets intersect.
    pub fn overlaps(&self, other: &BcDescriptor) -> bool {
        self.bits
            .iter()
            .zip(&other.bits)
            .all(|(a, b)| match (a, b) {
                (Some(x), Some(y)) => x == y,
                _ => true,
            })
    }

    /// True when `index` falls inside the selected set.
    pub fn matches(&self, index: usize) -> bool {
        let n = self.bits.len();
        self.bits.iter().enumerate().all(|(q, b)| match b {
            None => true,
            Some(bit) => ((index >> (n - 1 - q)) & 1 == 1) == *bit,
        })
    }

    /// Enumerates all selected basis indices in increasing order.
    pub fn indices(&self) -> Vec<usize> {
        let n = self.bits.len();
        (0..1usize << n).filter(|&i| self.matches(i)).collect()
    }
}
