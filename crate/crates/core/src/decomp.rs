//! Tensor-product decomposition of the stiffness matrix and measurement
//! planning.
//!
//! The assembled stiffness of the regular grid factors into 16 routes of the
//! form (y-part) ⊗ (x-part) ⊗ K_ij, where the parts are the deficient
//! identities 𝔻(m) = I^⊗m − p₋^⊗m and 𝕌(m) = I^⊗m − p₊^⊗m and the ladder
//! 𝕋(m) = Σ_k I^⊗k ⊗ σ₊ ⊗ σ₋^⊗(m−k−1), and K_ij is expanded in the
//! {I, X, iY, Z} basis. The whole operator carries O(n_x·n_y) terms.
//!
//! Expectations are measured by grouping terms that one CNOT chain plus a
//! trailing H or N rotation makes simultaneously diagonal.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fem::{elementary_link, scalar_link, Corner, ScalarKind};
use crate::problem::{BcDescriptor, ProblemSpec};
use crate::qsim::{apply_program, sample_distribution, Gate, GateProgram, ShotConfig, Shots};
use crate::tensor::{Elementary2x2, OperatorSum, StateVector, TensorTerm};

/// Generic Poisson ratio used to freeze the term structure of the operator,
/// so that coefficients that happen to vanish at the physical ν (for example
/// the iY parts at ν = 1/4) still appear as zero-weighted terms and the group
/// count stays ν-independent.
const STRUCTURE_PROBE_NU: f64 = 0.123456789;

/// Coefficients of a 2x2 link matrix over the basis {I, X, iY, Z}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliCoeffs {
    pub i: f64,
    pub x: f64,
    /// Multiplies iY = [[0, 1], [−1, 0]]; real for real link matrices.
    pub iy: f64,
    pub z: f64,
}

/// Basis coefficients of `elementary_link(nu, i, j)` by trace projection.
///
/// Computed numerically from the matrices rather than transcribed from their
/// printed closed forms, which disagree with the matrices in the sign of the
/// identity part (e.g. (3+4ν)/6 against the matrix diagonal (3−4ν)/6 for the
/// on-site link); the matrices integrate the element form directly and win.
pub fn link_pauli_coeffs(nu: f64, i: Corner, j: Corner) -> PauliCoeffs {
    let m = elementary_link(nu, i, j);
    PauliCoeffs {
        i: (m[0][0] + m[1][1]) / 2.0,
        x: (m[0][1] + m[1][0]) / 2.0,
        iy: (m[0][1] - m[1][0]) / 2.0,
        z: (m[0][0] - m[1][1]) / 2.0,
    }
}

/// Measurement-group count of the plate stiffness.
pub fn term_count(n_x: usize, n_y: usize) -> usize {
    2 * n_x * n_y + 2 * n_x + 2 * n_y + 2
}

type Part = Vec<(f64, Vec<Elementary2x2>)>;

/// 𝔻(m) = I^⊗m − p₋^⊗m: identity with the last diagonal entry removed.
fn part_d(m: usize) -> Part {
    vec![
        (1.0, vec![Elementary2x2::Identity; m]),
        (-1.0, vec![Elementary2x2::PMinus; m]),
    ]
}

/// 𝕌(m) = I^⊗m − p₊^⊗m: identity with the first diagonal entry removed.
fn part_u(m: usize) -> Part {
    vec![
        (1.0, vec![Elementary2x2::Identity; m]),
        (-1.0, vec![Elementary2x2::PPlus; m]),
    ]
}

/// 𝕋(m) = Σ_k I^⊗k ⊗ σ₊ ⊗ σ₋^⊗(m−k−1): superdiagonal Toeplitz ladder.
fn part_t(m: usize) -> Part {
    (0..m)
        .map(|k| {
            let mut f = vec![Elementary2x2::Identity; k];
            f.push(Elementary2x2::SigmaPlus);
            f.extend(vec![Elementary2x2::SigmaMinus; m - k - 1]);
            (1.0, f)
        })
        .collect()
}

fn part_t_dag(m: usize) -> Part {
    part_t(m)
        .into_iter()
        .map(|(c, f)| (c, f.into_iter().map(|e| e.dagger()).collect()))
        .collect()
}

/// 𝔻(m) as an operator sum, for inspection and tests.
pub fn d_operator(m: usize) -> OperatorSum {
    OperatorSum {
        n: m,
        terms: part_d(m).into_iter().map(|(c, f)| TensorTerm::real(c, f)).collect(),
    }
}

/// 𝕌(m) as an operator sum.
pub fn u_operator(m: usize) -> OperatorSum {
    OperatorSum {
        n: m,
        terms: part_u(m).into_iter().map(|(c, f)| TensorTerm::real(c, f)).collect(),
    }
}

/// 𝕋(m) as an operator sum.
pub fn toeplitz_operator(m: usize) -> OperatorSum {
    OperatorSum {
        n: m,
        terms: part_t(m).into_iter().map(|(c, f)| TensorTerm::real(c, f)).collect(),
    }
}

#[derive(Clone, Copy)]
enum Route {
    D,
    U,
    T,
    Td,
}

impl Route {
    fn part(self, m: usize) -> Part {
        match self {
            Route::D => part_d(m),
            Route::U => part_u(m),
            Route::T => part_t(m),
            Route::Td => part_t_dag(m),
        }
    }
}

/// The 16 (y-route, x-route, link) triples of the plate decomposition. Each
/// corner pair (i, j) is placed on the sub/superdiagonal structure implied by
/// the grid offsets between corners i and j.
const ROUTES: [(Route, Route, Corner, Corner); 16] = [
    (Route::D, Route::D, Corner::A, Corner::A),
    (Route::D, Route::U, Corner::B, Corner::B),
    (Route::U, Route::U, Corner::C, Corner::C),
    (Route::U, Route::D, Corner::D, Corner::D),
    (Route::D, Route::T, Corner::A, Corner::B),
    (Route::D, Route::Td, Corner::B, Corner::A),
    (Route::T, Route::D, Corner::A, Corner::D),
    (Route::Td, Route::D, Corner::D, Corner::A),
    (Route::T, Route::U, Corner::B, Corner::C),
    (Route::Td, Route::U, Corner::C, Corner::B),
    (Route::U, Route::T, Corner::D, Corner::C),
    (Route::U, Route::Td, Corner::C, Corner::D),
    (Route::T, Route::T, Corner::A, Corner::C),
    (Route::Td, Route::Td, Corner::C, Corner::A),
    (Route::T, Route::Td, Corner::B, Corner::D),
    (Route::Td, Route::T, Corner::D, Corner::B),
];

/// Builds the stiffness matrix as an O(n_x·n_y)-term operator sum.
pub fn build_operator(spec: &ProblemSpec) -> Result<OperatorSum> {
    spec.validate()?;
    let mut op = OperatorSum::new(spec.n());
    let scalar = ScalarKind::from_model(spec.model);
    for (ry, rx, ci, cj) in ROUTES {
        let yp = ry.part(spec.n_y);
        let xp = rx.part(spec.n_x);
        match scalar {
            Some(kind) => {
                let v = scalar_link(kind)[corner_idx(ci)][corner_idx(cj)];
                if v == 0.0 {
                    continue;
                }
                for (cy, fy) in &yp {
                    for (cx, fx) in &xp {
                        let mut f = fy.clone();
                        f.extend_from_slice(fx);
                        op.push(TensorTerm::real(cy * cx * v, f))?;
                    }
                }
            }
            None => {
                let coeffs = link_pauli_coeffs(spec.nu, ci, cj);
                let probe = link_pauli_coeffs(STRUCTURE_PROBE_NU, ci, cj);
                let components: [(f64, f64, Elementary2x2, bool); 4] = [
                    (coeffs.i, probe.i, Elementary2x2::Identity, false),
                    (coeffs.x, probe.x, Elementary2x2::PauliX, false),
                    (coeffs.iy, probe.iy, Elementary2x2::PauliY, true),
                    (coeffs.z, probe.z, Elementary2x2::PauliZ, false),
                ];
                for (val, probe_val, fd, imaginary) in components {
                    if probe_val == 0.0 && val == 0.0 {
                        continue;
                    }
                    let coeff = if imaginary {
                        C64::new(0.0, val)
                    } else {
                        C64::new(val, 0.0)
                    };
                    for (cy, fy) in &yp {
                        for (cx, fx) in &xp {
                            let mut f = fy.clone();
                            f.extend_from_slice(fx);
                            f.push(fd);
                            op.push(TensorTerm::new(coeff * (cy * cx), f))?;
                        }
                    }
                }
            }
        }
    }
    Ok(op)
}

fn corner_idx(c: Corner) -> usize {
    match c {
        Corner::A => 0,
        Corner::B => 1,
        Corner::C => 2,
        Corner::D => 3,
    }
}

/// Sum of the selector projectors as p±/I tensor strings.
pub fn dirichlet_projector_terms(n: usize, bcs: &[BcDescriptor]) -> Result<OperatorSum> {
    let mut op = OperatorSum::new(n);
    for (a, bc) in bcs.iter().enumerate() {
        if bc.n() != n {
            return Err(Error::LengthMismatch { expected: n, got: bc.n() });
        }
        for (b, other) in bcs.iter().enumerate() {
            if a < b && bc.overlaps(other) {
                return Err(Error::OverlappingSelectors(format!(
                    "selectors {a} and {b} share basis indices, the sum is not a projector"
                )));
            }
        }
        op.push(TensorTerm::real(1.0, bc.factors()))?;
    }
    Ok(op)
}

/// Per-qubit role of a term inside a measurement group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Label {
    Diag,
    Sigma,
    UnitX,
    UnitY,
}

fn term_labels(term: &TensorTerm) -> Vec<Label> {
    term.factors
        .iter()
        .map(|f| match f {
            Elementary2x2::SigmaPlus | Elementary2x2::SigmaMinus => Label::Sigma,
            Elementary2x2::PauliX => Label::UnitX,
            Elementary2x2::PauliY => Label::UnitY,
            _ => Label::Diag,
        })
        .collect()
}

/// One simultaneously measurable bundle of terms: a diagonalizing rotation,
/// the original terms, and the rotated diagonal weights.
#[derive(Debug, Clone)]
pub struct MeasurementGroup {
    /// Gate program applied to the state before a computational-basis read.
    pub rotation: GateProgram,
    /// The grouped tensor terms (in the original, unrotated frame).
    pub terms: Vec<TensorTerm>,
    /// Diagonal of rotation · (Σ terms) · rotation†, one weight per outcome.
    pub diag: Vec<f64>,
}

impl MeasurementGroup {
    /// Exact expectation: rotate, then average the diagonal weights.
    pub fn expectation_exact(&self, state: &StateVector) -> Result<f64> {
        let rotated = apply_program(state, &self.rotation)?;
        Ok(rotated
            .amps
            .iter()
            .zip(&self.diag)
            .map(|(a, d)| a.norm_sqr() * d)
            .sum())
    }
}

/// Partitions an operator's terms into CNOT-chain measurement groups.
///
/// Every term must be a p±/I/Z-diagonal string, optionally carrying single
/// X or Y factors and σ± runs; σ-carrying terms must appear together with
/// their hermitian partners so the group sum is diagonalizable.
pub fn measurement_groups(op: &OperatorSum) -> Result<Vec<MeasurementGroup>> {
    use std::collections::HashMap;
    let mut buckets: HashMap<Vec<Label>, Vec<TensorTerm>> = HashMap::new();
    let mut order: Vec<Vec<Label>> = Vec::new();
    for t in &op.terms {
        if t.n() != op.n {
            return Err(Error::LengthMismatch { expected: op.n, got: t.n() });
        }
        let key = term_labels(t);
        if !buckets.contains_key(&key) {
            order.push(key.clone());
        }
        buckets.entry(key).or_default().push(t.clone());
    }
    let mut groups = Vec::with_capacity(order.len());
    for key in order {
        let terms = buckets.remove(&key).expect("bucket exists");
        check_hermitian_pairs(&key, &terms)?;
        let rotation = rotation_for(&key, &terms);
        let diag = rotated_diagonal(op.n, &terms, &rotation);
        groups.push(MeasurementGroup { rotation, terms, diag });
    }
    Ok(groups)
}

/// σ-carrying terms must close under hermitian conjugation inside the group.
fn check_hermitian_pairs(key: &[Label], terms: &[TensorTerm]) -> Result<()> {
    if !key.contains(&Label::Sigma) {
        return Ok(());
    }
    for t in terms {
        let dag = t.dagger();
        let found = terms.iter().any(|u| {
            u.factors == dag.factors && (u.coeff - dag.coeff).norm() <= 1e-10
        });
        if !found {
            return Err(Error::UnsupportedTermShape(format!(
                "term {:?} has no hermitian partner in its group",
                t.factors
            )));
        }
    }
    Ok(())
}

/// CNOT chain over the σ positions (bottom pair first) followed by the
/// trailing single-qubit rotations: H for X-type heads and units, N for
/// Y-type ones.
fn rotation_for(key: &[Label], terms: &[TensorTerm]) -> GateProgram {
    let sigma: Vec<usize> = key
        .iter()
        .enumerate()
        .filter(|(_, l)| **l == Label::Sigma)
        .map(|(q, _)| q)
        .collect();
    let mut program = GateProgram::new();
    for w in (0..sigma.len().saturating_sub(1)).rev() {
        program.push(Gate::Cnot { control: sigma[w], target: sigma[w + 1] });
    }
    if let Some(&head) = sigma.first() {
        // The paired sum at the head is c·σ₊ + c̄·σ₋ = Re(c)·X − Im(c)·Y;
        // real coefficients need H, imaginary ones N.
        let c = terms
            .iter()
            .map(|t| t.coeff)
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(C64::new(1.0, 0.0));
        if c.im.abs() > c.re.abs() {
            program.push(Gate::N(head));
        } else {
            program.push(Gate::H(head));
        }
    }
    for (q, l) in key.iter().enumerate() {
        match l {
            Label::UnitX => program.push(Gate::H(q)),
            Label::UnitY => program.push(Gate::N(q)),
            _ => {}
        }
    }
    program
}

type Mat2 = [[C64; 2]; 2];

fn mat_of(e: Elementary2x2) -> Mat2 {
    e.matrix()
}

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

fn mat_adj(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

fn mat_zero(a: &Mat2) -> bool {
    a.iter().flatten().all(|v| v.norm_sqr() == 0.0)
}

fn gate_matrix(g: &Gate) -> Option<Mat2> {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let s = 1.0 / f64::sqrt(2.0);
    match *g {
        Gate::H(_) => Some([[s * l, s * l], [s * l, -s * l]]),
        Gate::X(_) => Some([[o, l], [l, o]]),
        Gate::Y(_) => Some([[o, -i], [i, o]]),
        Gate::Z(_) => Some([[l, o], [o, -l]]),
        Gate::Ry(_, th) => {
            let (c, sn) = ((th / 2.0).cos(), (th / 2.0).sin());
            Some([[c * l, -sn * l], [sn * l, c * l]])
        }
        Gate::N(_) => Some([[-s * l, -s * i], [s * i, s * l]]),
        Gate::Cnot { .. } | Gate::Swap(..) => None,
    }
}

/// Diagonal of rotation · (Σ terms) · rotation†, computed by conjugating each
/// term's tensor factors through the program. CNOT conjugation splits a term
/// into up to four tensor components via the control's p± decomposition.
fn rotated_diagonal(n: usize, terms: &[TensorTerm], rotation: &[Gate]) -> Vec<f64> {
    let x = mat_of(Elementary2x2::PauliX);
    let pp = mat_of(Elementary2x2::PPlus);
    let pm = mat_of(Elementary2x2::PMinus);
    let mut diag = vec![C64::new(0.0, 0.0); 1 << n];
    for t in terms {
        let mut comps: Vec<(C64, Vec<Mat2>)> =
            vec![(t.coeff, t.factors.iter().map(|f| mat_of(*f)).collect())];
        for g in rotation {
            match *g {
                Gate::Cnot { control, target } => {
                    let mut next = Vec::with_capacity(comps.len());
                    for (c, mats) in comps {
                        let a = mats[control];
                        let b = mats[target];
                        let pieces = [
                            (mat_mul(&mat_mul(&pp, &a), &pp), b),
                            (mat_mul(&mat_mul(&pp, &a), &pm), mat_mul(&b, &x)),
                            (mat_mul(&mat_mul(&pm, &a), &pp), mat_mul(&x, &b)),
                            (mat_mul(&mat_mul(&pm, &a), &pm), mat_mul(&mat_mul(&x, &b), &x)),
                        ];
                        for (ctrl, tgt) in pieces {
                            if mat_zero(&ctrl) {
                                continue;
                            }
                            let mut m = mats.clone();
                            m[control] = ctrl;
                            m[target] = tgt;
                            next.push((c, m));
                        }
                    }
                    comps = next;
                }
                Gate::Swap(a, b) => {
                    for (_, mats) in &mut comps {
                        mats.swap(a, b);
                    }
                }
                _ => {
                    let u = gate_matrix(g).expect("single-qubit gate");
                    let q = match *g {
                        Gate::H(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) | Gate::Ry(q, _)
                        | Gate::N(q) => q,
                        _ => unreachable!(),
                    };
                    for (_, mats) in &mut comps {
                        mats[q] = mat_mul(&mat_mul(&u, &mats[q]), &mat_adj(&u));
                    }
                }
            }
        }
        for (c, mats) in comps {
            // outer product of factor diagonals
            let mut acc = vec![c];
            for m in mats {
                let mut next = Vec::with_capacity(acc.len() * 2);
                for v in acc {
                    next.push(v * m[0][0]);
                    next.push(v * m[1][1]);
                }
                acc = next;
            }
            for (d, v) in diag.iter_mut().zip(acc) {
                *d += v;
            }
        }
    }
    diag.into_iter().map(|d| d.re).collect()
}

/// Grouped expectation of a hermitian operator sum with optional shot noise.
///
/// Returns the estimate and its standard error (zero in exact mode).
pub fn expectation_grouped(
    state: &StateVector,
    groups: &[MeasurementGroup],
    cfg: &ShotConfig,
) -> Result<(f64, f64)> {
    if groups.is_empty() {
        return Err(Error::InvalidProblem("no measurement groups to evaluate".into()));
    }
    let mut total = 0.0;
    let mut var = 0.0;
    for (gi, g) in groups.iter().enumerate() {
        match cfg.shots {
            Shots::Exact => total += g.expectation_exact(state)?,
            Shots::Count(shots) => {
                if shots == 0 {
                    return Err(Error::InvalidProblem("shot count must be positive".into()));
                }
                let rotated = apply_program(state, &g.rotation)?;
                let probs: Vec<f64> = rotated.amps.iter().map(|a| a.norm_sqr()).collect();
                let seed = cfg
                    .seed
                    .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(gi as u64 + 1));
                let counts = sample_distribution(&probs, shots, seed);
                let mut dist: std::collections::BTreeMap<usize, f64> = counts
                    .into_iter()
                    .map(|(k, v)| (k, v as f64 / shots as f64))
                    .collect();
                if let Some(tau) = cfg.mitigation_threshold {
                    dist = crate::qsim::mitigate_threshold(&dist, tau)?;
                }
                let mut mean = 0.0;
                let mut second = 0.0;
                for (&k, &p) in &dist {
                    mean += p * g.diag[k];
                    second += p * g.diag[k] * g.diag[k];
                }
                total += mean;
                var += (second - mean * mean).max(0.0) / shots as f64;
            }
        }
    }
    Ok((total, var.sqrt()))
}
