//! Elementary 2x2 matrix algebra, tensor-product terms and statevectors.
//!
//! The stiffness matrix, the boundary projectors and the fracture observables
//! are all expressed as scalar-weighted tensor products of 2x2 matrices drawn
//! from {p+, p-, sigma+, sigma-, I} plus the Paulis. Qubit 0 is the most
//! significant bit of the basis-state index; every module in the crate shares
//! this convention.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Largest register for which dense materialization is allowed.
pub const MAX_DENSE_QUBITS: usize = 14;

/// The 2x2 building blocks of every operator in the crate.
///
/// `p± = (I ± Z)/2` and `σ± = (X ± iY)/2`, so `σ+ = |0⟩⟨1|` and `σ- = |1⟩⟨0|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Elementary2x2 {
    PPlus,
    PMinus,
    SigmaPlus,
    SigmaMinus,
    Identity,
    PauliX,
    PauliY,
    PauliZ,
}

impl Elementary2x2 {
    /// Numeric realization of the element.
    pub fn matrix(self) -> [[C64; 2]; 2] {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Elementary2x2::PPlus => [[l, o], [o, o]],
            Elementary2x2::PMinus => [[o, o], [o, l]],
            Elementary2x2::SigmaPlus => [[o, l], [o, o]],
            Elementary2x2::SigmaMinus => [[o, o], [l, o]],
            Elementary2x2::Identity => [[l, o], [o, l]],
            Elementary2x2::PauliX => [[o, l], [l, o]],
            Elementary2x2::PauliY => [[o, -i], [i, o]],
            Elementary2x2::PauliZ => [[l, o], [o, -l]],
        }
    }

    /// True when the element has no off-diagonal entries.
    pub fn is_diagonal(self) -> bool {
        matches!(
            self,
            Elementary2x2::PPlus
                | Elementary2x2::PMinus
                | Elementary2x2::Identity
                | Elementary2x2::PauliZ
        )
    }

    /// Hermitian adjoint. Only `σ±` are non-hermitian and they swap.
    pub fn dagger(self) -> Self {
        match self {
            Elementary2x2::SigmaPlus => Elementary2x2::SigmaMinus,
            Elementary2x2::SigmaMinus => Elementary2x2::SigmaPlus,
            e => e,
        }
    }

    /// One-letter label used by the JSON term dump.
    pub fn label(self) -> &'static str {
        match self {
            Elementary2x2::PPlus => "p+",
            Elementary2x2::PMinus => "p-",
            Elementary2x2::SigmaPlus => "s+",
            Elementary2x2::SigmaMinus => "s-",
            Elementary2x2::Identity => "I",
            Elementary2x2::PauliX => "X",
            Elementary2x2::PauliY => "Y",
            Elementary2x2::PauliZ => "Z",
        }
    }
}

/// A scalar-weighted tensor product of elementary 2x2 matrices.
///
/// `factors[0]` acts on qubit 0, the most significant bit of the index.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TensorTerm {
    pub coeff: C64,
    pub factors: Vec<Elementary2x2>,
}

impl TensorTerm {
    pub fn new(coeff: C64, factors: Vec<Elementary2x2>) -> Self {
        Self { coeff, factors }
    }

    pub fn real(coeff: f64, factors: Vec<Elementary2x2>) -> Self {
        Self::new(C64::new(coeff, 0.0), factors)
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn dagger(&self) -> Self {
        Self {
            coeff: self.coeff.conj(),
            factors: self.factors.iter().map(|f| f.dagger()).collect(),
        }
    }

    /// Visits every structurally nonzero entry of the materialized term.
    ///
    /// The walk follows the Kronecker structure, so the cost is the product of
    /// the factor sparsities rather than `4^n`.
    pub fn for_each_entry<F: FnMut(usize, usize, C64)>(&self, f: &mut F) {
        fn walk<F: FnMut(usize, usize, C64)>(
            mats: &[[[C64; 2]; 2]],
            row: usize,
            col: usize,
            val: C64,
            f: &mut F,
        ) {
            match mats.split_first() {
                None => f(row, col, val),
                Some((m, rest)) => {
                    for r in 0..2 {
                        for c in 0..2 {
                            let v = m[r][c];
                            if v != C64::new(0.0, 0.0) {
                                walk(rest, row << 1 | r, col << 1 | c, val * v, f);
                            }
                        }
                    }
                }
            }
        }
        if self.coeff == C64::new(0.0, 0.0) {
            return;
        }
        let mats: Vec<[[C64; 2]; 2]> = self.factors.iter().map(|e| e.matrix()).collect();
        walk(&mats, 0, 0, self.coeff, f);
    }
}

/// A linear combination of [`TensorTerm`]s on a fixed number of qubits.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OperatorSum {
    pub n: usize,
    pub terms: Vec<TensorTerm>,
}

impl OperatorSum {
    pub fn new(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    pub fn from_terms(n: usize, terms: Vec<TensorTerm>) -> Result<Self> {
        for t in &terms {
            if t.n() != n {
                return Err(Error::LengthMismatch { expected: n, got: t.n() });
            }
        }
        Ok(Self { n, terms })
    }

    pub fn push(&mut self, term: TensorTerm) -> Result<()> {
        if term.n() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: term.n() });
        }
        self.terms.push(term);
        Ok(())
    }

    pub fn dagger(&self) -> Self {
        Self {
            n: self.n,
            terms: self.terms.iter().map(|t| t.dagger()).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|t| TensorTerm::new(t.coeff * s, t.factors.clone()))
                .collect(),
        }
    }

    /// Identity on `n` qubits.
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            terms: vec![TensorTerm::real(1.0, vec![Elementary2x2::Identity; n])],
        }
    }
}

fn check_dense(n: usize) -> Result<()> {
    if n > MAX_DENSE_QUBITS {
        return Err(Error::DimensionOverflow { requested: n, cap: MAX_DENSE_QUBITS });
    }
    Ok(())
}

/// Dense verification oracle: `coeff * (f_0 ⊗ f_1 ⊗ … ⊗ f_{n-1})`.
pub fn materialize_term(term: &TensorTerm) -> Result<DMatrix<C64>> {
    check_dense(term.n())?;
    let dim = 1usize << term.n();
    let mut m = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    term.for_each_entry(&mut |r, c, v| m[(r, c)] += v);
    Ok(m)
}

/// Entrywise sum of the materialized terms.
pub fn materialize_sum(op: &OperatorSum) -> Result<DMatrix<C64>> {
    check_dense(op.n)?;
    let dim = 1usize << op.n;
    let mut m = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    for t in &op.terms {
        t.for_each_entry(&mut |r, c, v| m[(r, c)] += v);
    }
    Ok(m)
}

/// A complex amplitude vector on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub n: usize,
    pub amps: Vec<C64>,
}

impl StateVector {
    /// The all-zeros computational basis state.
    pub fn zero(n: usize) -> Self {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[index] = C64::new(1.0, 0.0);
        Self { n, amps }
    }

    pub fn from_amplitudes(n: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 1 << n {
            return Err(Error::LengthMismatch { expected: 1 << n, got: amps.len() });
        }
        Ok(Self { n, amps })
    }

    pub fn from_real(n: usize, amps: &[f64]) -> Result<Self> {
        Self::from_amplitudes(n, amps.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let nrm = self.norm();
        let mut s = self.clone();
        if nrm > 0.0 {
            for a in &mut s.amps {
                *a /= nrm;
            }
        }
        s
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.n != other.n {
            return Err(Error::LengthMismatch { expected: self.n, got: other.n });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// Applies a single-qubit 2x2 operator in place. The operator need not be
/// unitary; projectors and ladder operators go through the same kernel.
pub(crate) fn apply_single_qubit(amps: &mut [C64], n: usize, qubit: usize, m: &[[C64; 2]; 2]) {
    let mask = 1usize << (n - 1 - qubit);
    let dim = amps.len();
    let mut base = 0;
    while base < dim {
        for off in 0..mask {
            let i0 = base + off;
            let i1 = i0 | mask;
            let a0 = amps[i0];
            let a1 = amps[i1];
            amps[i0] = m[0][0] * a0 + m[0][1] * a1;
            amps[i1] = m[1][0] * a0 + m[1][1] * a1;
        }
        base += mask << 1;
    }
}

/// Matrix-free action of a tensor term on a state.
///
/// Agrees with `materialize_term(term) · state` but never builds anything
/// larger than a 2x2 matrix.
pub fn apply_term(state: &StateVector, term: &TensorTerm) -> Result<StateVector> {
    if state.n != term.n() {
        return Err(Error::LengthMismatch { expected: term.n(), got: state.n });
    }
    let mut out = state.clone();
    for (q, e) in term.factors.iter().enumerate() {
        if *e == Elementary2x2::Identity {
            continue;
        }
        apply_single_qubit(&mut out.amps, state.n, q, &e.matrix());
    }
    for a in &mut out.amps {
        *a *= term.coeff;
    }
    Ok(out)
}

/// Matrix-free action of an operator sum.
pub fn apply_sum(state: &StateVector, op: &OperatorSum) -> Result<StateVector> {
    if state.n != op.n {
        return Err(Error::LengthMismatch { expected: op.n, got: state.n });
    }
    let mut out = StateVector {
        n: state.n,
        amps: vec![C64::new(0.0, 0.0); 1 << state.n],
    };
    for t in &op.terms {
        let applied = apply_term(state, t)?;
        for (o, a) in out.amps.iter_mut().zip(applied.amps) {
            *o += a;
        }
    }
    Ok(out)
}

/// `Σ_k μ_k ⟨ψ|M_k|ψ⟩`, computed matrix-free term by term.
pub fn expectation_direct(state: &StateVector, op: &OperatorSum) -> Result<C64> {
    if state.n != op.n {
        return Err(Error::LengthMismatch { expected: op.n, got: state.n });
    }
    let mut acc = C64::new(0.0, 0.0);
    for t in &op.terms {
        let applied = apply_term(state, t)?;
        acc += state.inner(&applied)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Elementary2x2::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn elementary_definitions_match() {
        // p± = (I ± Z)/2, σ± = (X ± iY)/2
        for (p, sign) in [(PPlus, 1.0), (PMinus, -1.0)] {
            let m = p.matrix();
            let i = Identity.matrix();
            let z = PauliZ.matrix();
            for r in 0..2 {
                for col in 0..2 {
                    assert_eq!(m[r][col], (i[r][col] + sign * z[r][col]) / 2.0);
                }
            }
        }
        for (s, sign) in [(SigmaPlus, 1.0), (SigmaMinus, -1.0)] {
            let m = s.matrix();
            let x = PauliX.matrix();
            let y = PauliY.matrix();
            for r in 0..2 {
                for col in 0..2 {
                    assert_eq!(m[r][col], (x[r][col] + c(0.0, sign) * y[r][col]) / 2.0);
                }
            }
        }
    }

    #[test]
    fn projector_and_ladder_identities() {
        assert_eq!(SigmaPlus.dagger(), SigmaMinus);
        assert_eq!(SigmaMinus.dagger(), SigmaPlus);
        for p in [PPlus, PMinus] {
            assert_eq!(p.dagger(), p);
            // p² = p
            let m = p.matrix();
            for r in 0..2 {
                for col in 0..2 {
                    let sq: C64 = (0..2).map(|k| m[r][k] * m[k][col]).sum();
                    assert_eq!(sq, m[r][col]);
                }
            }
        }
    }

    #[test]
    fn materialize_projector_term() {
        // p+ ⊗ p- projects onto |01⟩
        let t = TensorTerm::real(1.0, vec![PPlus, PMinus]);
        let m = materialize_term(&t).unwrap();
        for r in 0..4 {
            for col in 0..4 {
                let want = if r == 1 && col == 1 { 1.0 } else { 0.0 };
                assert_eq!(m[(r, col)], c(want, 0.0));
            }
        }
    }

    #[test]
    fn materialize_sigma_plus_pair() {
        // σ+ ⊗ σ+ has a single 1 at row 0, col 3
        let t = TensorTerm::real(1.0, vec![SigmaPlus, SigmaPlus]);
        let m = materialize_term(&t).unwrap();
        for r in 0..4 {
            for col in 0..4 {
                let want = if r == 0 && col == 3 { 1.0 } else { 0.0 };
                assert_eq!(m[(r, col)], c(want, 0.0));
            }
        }
    }

    #[test]
    fn materialize_identity_scaling() {
        let t = TensorTerm::new(c(2.5, -1.0), vec![Identity; 3]);
        let m = materialize_term(&t).unwrap();
        for r in 0..8 {
            for col in 0..8 {
                let want = if r == col { c(2.5, -1.0) } else { c(0.0, 0.0) };
                assert_eq!(m[(r, col)], want);
            }
        }
    }

    #[test]
    fn sum_resolution_of_identity() {
        let op = OperatorSum::from_terms(
            1,
            vec![
                TensorTerm::real(1.0, vec![PPlus]),
                TensorTerm::real(1.0, vec![PMinus]),
            ],
        )
        .unwrap();
        let m = materialize_sum(&op).unwrap();
        assert_eq!(m, DMatrix::identity(2, 2).map(|v: f64| c(v, 0.0)));
    }

    #[test]
    fn sum_toeplitz_superdiagonal() {
        // T(2) = I ⊗ σ+ + σ+ ⊗ σ- has ones on the superdiagonal.
        let op = OperatorSum::from_terms(
            2,
            vec![
                TensorTerm::real(1.0, vec![Identity, SigmaPlus]),
                TensorTerm::real(1.0, vec![SigmaPlus, SigmaMinus]),
            ],
        )
        .unwrap();
        let m = materialize_sum(&op).unwrap();
        for r in 0..4 {
            for col in 0..4 {
                let want = if col == r + 1 { 1.0 } else { 0.0 };
                assert_eq!(m[(r, col)], c(want, 0.0));
            }
        }
    }

    #[test]
    fn empty_sum_is_zero() {
        let m = materialize_sum(&OperatorSum::new(2)).unwrap();
        assert!(m.iter().all(|v| *v == c(0.0, 0.0)));
    }

    #[test]
    fn dense_cap_enforced() {
        let t = TensorTerm::real(1.0, vec![Identity; MAX_DENSE_QUBITS + 1]);
        assert!(matches!(
            materialize_term(&t),
            Err(Error::DimensionOverflow { .. })
        ));
    }

    #[test]
    fn apply_sigma_moves_basis_states() {
        // σ+⊗σ+ |11⟩ = |00⟩
        let t = TensorTerm::real(1.0, vec![SigmaPlus, SigmaPlus]);
        let out = apply_term(&StateVector::basis(2, 3), &t).unwrap();
        assert_eq!(out.amps[0], c(1.0, 0.0));
        assert!(out.amps[1..].iter().all(|a| *a == c(0.0, 0.0)));
    }

    #[test]
    fn apply_projector_selects() {
        // p+⊗I on (|00⟩+|10⟩)/√2 keeps only |00⟩/√2
        let s = StateVector::from_real(2, &[1.0 / f64::sqrt(2.0), 0.0, 1.0 / f64::sqrt(2.0), 0.0])
            .unwrap();
        let t = TensorTerm::real(1.0, vec![PPlus, Identity]);
        let out = apply_term(&s, &t).unwrap();
        assert!((out.amps[0].re - 1.0 / f64::sqrt(2.0)).abs() < 1e-15);
        assert!(out.amps[1..].iter().all(|a| a.norm() < 1e-15));
    }

    #[test]
    fn apply_term_matches_dense_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let all = [PPlus, PMinus, SigmaPlus, SigmaMinus, Identity, PauliX, PauliY, PauliZ];
        for _ in 0..50 {
            let n = 6;
            let factors: Vec<_> = (0..n).map(|_| all[rng.gen_range(0..all.len())]).collect();
            let term = TensorTerm::new(c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5), factors);
            let amps: Vec<C64> = (0..1 << n)
                .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let state = StateVector::from_amplitudes(n, amps).unwrap();
            let fast = apply_term(&state, &term).unwrap();
            let dense = materialize_term(&term).unwrap();
            let sv = nalgebra::DVector::from_vec(state.amps.clone());
            let want = &dense * sv;
            for (i, a) in fast.amps.iter().enumerate() {
                assert!((a - want[i]).norm() <= 1e-12, "entry {i} differs");
            }
        }
    }

    #[test]
    fn expectation_direct_examples() {
        // ⟨00| Z⊗I |00⟩ = 1
        let op = OperatorSum::from_terms(2, vec![TensorTerm::real(1.0, vec![PauliZ, Identity])])
            .unwrap();
        let e = expectation_direct(&StateVector::zero(2), &op).unwrap();
        assert!((e - c(1.0, 0.0)).norm() < 1e-14);

        // Bell state through σ+⊗σ+ + σ-⊗σ-
        let bell =
            StateVector::from_real(2, &[1.0 / f64::sqrt(2.0), 0.0, 0.0, 1.0 / f64::sqrt(2.0)])
                .unwrap();
        let op = OperatorSum::from_terms(
            2,
            vec![
                TensorTerm::real(1.0, vec![SigmaPlus, SigmaPlus]),
                TensorTerm::real(1.0, vec![SigmaMinus, SigmaMinus]),
            ],
        )
        .unwrap();
        let e = expectation_direct(&bell, &op).unwrap();
        assert!((e - c(1.0, 0.0)).norm() < 1e-12);

        // zero-scaled operator
        let e = expectation_direct(&bell, &op.scaled(0.0)).unwrap();
        assert!(e.norm() < 1e-15);
    }
}
