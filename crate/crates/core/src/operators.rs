//! Pauli-string operator algebra and its realization as complex matrices.
//!
//! Basis ordering is `|q_0 q_1 ... q_{n-1}>` with qubit 0 the most significant
//! tensor factor and `|0>` the `+1` eigenstate of `sigma^z`, so the state
//! `|1001>` on four qubits has index `0b1001 = 9`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::scalar::ComplexOps;
use crate::{Error, Real, Result};

pub type StateVector<T> = DVector<Complex<T>>;

/// Default cap on the number of qubits an operator may be realized on.
pub const DEFAULT_MAX_QUBITS: usize = 14;
/// Dense realizations above this size are refused; use [`SparseOperator`].
pub const MAX_DENSE_QUBITS: usize = 10;

/// Hilbert-space size limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_qubits: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self { max_qubits: DEFAULT_MAX_QUBITS }
    }
}

impl Limits {
    pub fn check(&self, qubits: usize) -> Result<()> {
        if qubits > self.max_qubits {
            return Err(Error::Capacity { requested: qubits, limit: self.max_qubits });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// `sigma^a sigma^b = i^k sigma^c`; returns `(k, c)` with `c = None` for the identity.
    fn product(self, other: Axis) -> (u8, Option<Axis>) {
        use Axis::*;
        match (self, other) {
            (a, b) if a == b => (0, None),
            (X, Y) => (1, Some(Z)),
            (Y, Z) => (1, Some(X)),
            (Z, X) => (1, Some(Y)),
            (Y, X) => (3, Some(Z)),
            (Z, Y) => (3, Some(X)),
            (X, Z) => (3, Some(Y)),
            _ => unreachable!(),
        }
    }
}

fn i_power<T: Real>(k: u8) -> Complex<T> {
    match k % 4 {
        0 => Complex::new(T::one(), T::zero()),
        1 => Complex::new(T::zero(), T::one()),
        2 => Complex::new(-T::one(), T::zero()),
        _ => Complex::new(T::zero(), -T::one()),
    }
}

/// `coefficient * prod_i sigma_i^{axis_i}`; an empty factor map is a multiple of the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm<T: Real> {
    pub coeff: Complex<T>,
    factors: BTreeMap<usize, Axis>,
}

impl<T: Real> PauliTerm<T> {
    pub fn new(coeff: Complex<T>, factors: impl IntoIterator<Item = (usize, Axis)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (site, axis) in factors {
            if map.insert(site, axis).is_some() {
                return Err(Error::RepeatedSite(site));
            }
        }
        Ok(Self { coeff, factors: map })
    }

    pub fn identity(coeff: Complex<T>) -> Self {
        Self { coeff, factors: BTreeMap::new() }
    }

    pub fn single(site: usize, axis: Axis) -> Self {
        Self { coeff: Complex::new(T::one(), T::zero()), factors: BTreeMap::from([(site, axis)]) }
    }

    pub fn factors(&self) -> &BTreeMap<usize, Axis> {
        &self.factors
    }

    pub fn max_site(&self) -> Option<usize> {
        self.factors.keys().next_back().copied()
    }

    pub fn scaled(&self, c: Complex<T>) -> Self {
        Self { coeff: self.coeff * c, factors: self.factors.clone() }
    }

    /// Image of basis state `basis` on `n` qubits: `term |basis> = amp |target>`.
    fn act(&self, basis: usize, n: usize) -> (usize, Complex<T>) {
        let mut target = basis;
        let mut k = 0u8;
        for (&site, &axis) in &self.factors {
            let shift = n - 1 - site;
            let bit = (basis >> shift) & 1;
            match axis {
                Axis::X => target ^= 1 << shift,
                Axis::Y => {
                    target ^= 1 << shift;
                    k += if bit == 0 { 1 } else { 3 };
                }
                Axis::Z => k += 2 * bit as u8,
            }
        }
        (target, self.coeff * i_power::<T>(k))
    }
}

impl<T: Real> Mul for &PauliTerm<T> {
    type Output = PauliTerm<T>;

    fn mul(self, rhs: &PauliTerm<T>) -> PauliTerm<T> {
        let mut factors = self.factors.clone();
        let mut k = 0u8;
        for (&site, &b) in &rhs.factors {
            match factors.get(&site).copied() {
                None => {
                    factors.insert(site, b);
                }
                Some(a) => {
                    let (p, c) = a.product(b);
                    k += p;
                    match c {
                        Some(c) => factors.insert(site, c),
                        None => factors.remove(&site),
                    };
                }
            }
        }
        PauliTerm { coeff: self.coeff * rhs.coeff * i_power::<T>(k), factors }
    }
}

/// Symbolic sum of Pauli strings.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorExpr<T: Real> {
    terms: Vec<PauliTerm<T>>,
}

impl<T: Real> Default for OperatorExpr<T> {
    fn default() -> Self {
        Self { terms: Vec::new() }
    }
}

impl<T: Real> From<PauliTerm<T>> for OperatorExpr<T> {
    fn from(term: PauliTerm<T>) -> Self {
        Self { terms: vec![term] }
    }
}

impl<T: Real> FromIterator<PauliTerm<T>> for OperatorExpr<T> {
    fn from_iter<I: IntoIterator<Item = PauliTerm<T>>>(iter: I) -> Self {
        Self { terms: iter.into_iter().collect() }
    }
}

impl<T: Real> OperatorExpr<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn terms(&self) -> &[PauliTerm<T>] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, term: PauliTerm<T>) {
        self.terms.push(term);
    }

    pub fn scaled(&self, c: T) -> Self {
        self.scaled_complex(Complex::new(c, T::zero()))
    }

    pub fn scaled_complex(&self, c: Complex<T>) -> Self {
        self.terms.iter().map(|t| t.scaled(c)).collect()
    }

    pub fn max_site(&self) -> Option<usize> {
        self.terms.iter().filter_map(PauliTerm::max_site).max()
    }

    pub fn realize(&self, n: usize) -> Result<MatrixOperator<T>> {
        self.realize_with(n, &Limits::default())
    }

    pub fn realize_with(&self, n: usize, limits: &Limits) -> Result<MatrixOperator<T>> {
        limits.check(n)?;
        if n > MAX_DENSE_QUBITS {
            return Err(Error::Capacity { requested: n, limit: MAX_DENSE_QUBITS });
        }
        self.realize_sparse_with(n, limits)?.to_dense()
    }

    pub fn realize_sparse(&self, n: usize) -> Result<SparseOperator<T>> {
        self.realize_sparse_with(n, &Limits::default())
    }

    pub fn realize_sparse_with(&self, n: usize, limits: &Limits) -> Result<SparseOperator<T>> {
        limits.check(n)?;
        if let Some(site) = self.max_site().filter(|&s| s >= n) {
            return Err(Error::SiteOutOfRange { site, qubits: n });
        }
        let dim = 1usize << n;
        let mut acc: BTreeMap<(usize, usize), Complex<T>> = BTreeMap::new();
        for term in &self.terms {
            for col in 0..dim {
                let (row, amp) = term.act(col, n);
                *acc.entry((row, col)).or_insert_with(Complex::default) += amp;
            }
        }
        let mut op = SparseOperator::zeros(dim);
        for ((r, c), v) in acc {
            if v.re == T::zero() && v.im == T::zero() {
                continue;
            }
            if r == c {
                op.diag[r] = v;
            } else {
                op.off.push((r, c, v));
            }
        }
        Ok(op)
    }
}

impl<T: Real> Add for OperatorExpr<T> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self.terms.extend(rhs.terms);
        self
    }
}

impl<T: Real> AddAssign for OperatorExpr<T> {
    fn add_assign(&mut self, rhs: Self) {
        self.terms.extend(rhs.terms);
    }
}

impl<T: Real> Mul for &OperatorExpr<T> {
    type Output = OperatorExpr<T>;
    fn mul(self, rhs: &OperatorExpr<T>) -> OperatorExpr<T> {
        self.terms.iter().flat_map(|a| rhs.terms.iter().map(move |b| a * b)).collect()
    }
}

/// Unweighted sum of single-site Pauli operators along `axis`.
pub fn collective_operator<T: Real>(axis: Axis, sites: &[usize]) -> Result<OperatorExpr<T>> {
    if sites.is_empty() {
        return Err(Error::EmptySiteSet);
    }
    Ok(sites.iter().map(|&s| PauliTerm::single(s, axis)).collect())
}

/// Computational basis state `|bits>` where `bits[0]` is qubit 0.
pub fn ket<T: Real>(bits: &str) -> StateVector<T> {
    let n = bits.len();
    basis_state(n, basis_index(bits))
}

pub fn basis_index(bits: &str) -> usize {
    bits.bytes().fold(0, |acc, b| (acc << 1) | usize::from(b == b'1'))
}

pub fn basis_state<T: Real>(n: usize, index: usize) -> StateVector<T> {
    let mut v = DVector::zeros(1 << n);
    v[index] = Complex::new(T::one(), T::zero());
    v
}

/// Diagonal plus off-diagonal triplets; the storage used by the time evolver.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator<T: Real> {
    pub diag: Vec<Complex<T>>,
    pub off: Vec<(usize, usize, Complex<T>)>,
}

impl<T: Real> SparseOperator<T> {
    pub fn zeros(dim: usize) -> Self {
        Self { diag: vec![Complex::default(); dim], off: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> Result<MatrixOperator<T>> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (i, d) in self.diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        for &(r, c, v) in &self.off {
            m[(r, c)] += v;
        }
        MatrixOperator::from_matrix(m)
    }

    pub fn apply(&self, v: &StateVector<T>) -> StateVector<T> {
        let mut out = DVector::from_iterator(v.len(), self.diag.iter().zip(v.iter()).map(|(d, x)| *d * *x));
        for &(r, c, a) in &self.off {
            out[r] += a * v[c];
        }
        out
    }

    /// Connected components of the off-diagonal coupling graph.
    pub fn components(&self) -> Vec<Vec<usize>> {
        components_of(self.dim(), self.off.iter().map(|&(r, c, _)| (r, c)))
    }

    pub fn max_abs(&self) -> T {
        self.diag.iter().chain(self.off.iter().map(|(_, _, v)| v)).fold(T::zero(), |m, v| m.max(v.norm()))
    }
}

pub(crate) fn components_of(dim: usize, edges: impl Iterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..dim).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..dim {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

fn dense_components<T: Real>(m: &DMatrix<Complex<T>>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let zero = Complex::default();
    let edges = (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).filter(|&(r, c)| r != c && m[(r, c)] != zero);
    components_of(n, edges)
}

/// Square complex matrix of power-of-two dimension.
///
/// The `hermitian` and `unitary` flags are only ever set after a numerical
/// check at tolerance `1e-12` (scaled by the largest entry).
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixOperator<T: Real> {
    matrix: DMatrix<Complex<T>>,
    hermitian: bool,
    unitary: bool,
}

impl<T: Real> MatrixOperator<T> {
    pub fn from_matrix(matrix: DMatrix<Complex<T>>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n || !n.is_power_of_two() {
            return Err(Error::BadShape(n.max(matrix.ncols())));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut op = Self { matrix, hermitian: false, unitary: false };
        op.hermitian = op.hermitian_defect() <= T::tol(1e-12) * T::one().max(op.max_abs());
        Ok(op)
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: DMatrix::identity(dim, dim), hermitian: true, unitary: true }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { matrix: DMatrix::zeros(dim, dim), hermitian: true, unitary: false }
    }

    pub fn diagonal(entries: &[Complex<T>]) -> Result<Self> {
        Self::from_matrix(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex<T>> {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn max_abs(&self) -> T {
        self.matrix.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn hermitian_defect(&self) -> T {
        max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }

    pub fn unitarity_defect(&self) -> T {
        let n = self.dim();
        let id = DMatrix::<Complex<T>>::identity(n, n);
        let a = max_abs_diff(&(self.matrix.adjoint() * &self.matrix), &id);
        let b = max_abs_diff(&(&self.matrix * self.matrix.adjoint()), &id);
        a.max(b)
    }

    /// Runs the unitarity check and sets the flag accordingly.
    pub fn verify_unitary(mut self) -> Self {
        self.unitary = self.unitarity_defect() <= T::tol(1e-12);
        self
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint(), hermitian: self.hermitian, unitary: self.unitary }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Self::from_matrix(&self.matrix * &other.matrix)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Self::from_matrix(&self.matrix + &other.matrix)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Self::from_matrix(&self.matrix - &other.matrix)
    }

    pub fn scale(&self, c: Complex<T>) -> Result<Self> {
        Self::from_matrix(&self.matrix * c)
    }

    pub fn apply(&self, v: &StateVector<T>) -> StateVector<T> {
        &self.matrix * v
    }

    pub fn trace(&self) -> Complex<T> {
        self.matrix.trace()
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        // [D, B]_ij = (d_i - d_j) b_ij for diagonal D; projectors onto coordinate subspaces hit this
        let (a, b) = (&self.matrix, &other.matrix);
        if is_diagonal(a) {
            return Self::from_matrix(DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, i)] - a[(j, j)]) * b[(i, j)]));
        }
        if is_diagonal(b) {
            return Self::from_matrix(DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * (b[(j, j)] - b[(i, i)])));
        }
        Self::from_matrix(a * b - b * a)
    }

    /// `<a|M|b>`.
    pub fn element(&self, a: &StateVector<T>, b: &StateVector<T>) -> Complex<T> {
        a.dotc(&(&self.matrix * b))
    }

    /// Matrix of the operator in the span of `basis`: `V^dagger M V`.
    pub fn restrict(&self, basis: &[StateVector<T>]) -> DMatrix<Complex<T>> {
        let k = basis.len();
        DMatrix::from_fn(k, k, |i, j| self.element(&basis[i], &basis[j]))
    }

    pub fn frobenius_norm(&self) -> T {
        self.matrix.norm()
    }

    pub fn spectral_norm(&self) -> T {
        spectral_norm(&self.matrix)
    }
}

pub(crate) fn max_abs_diff<T: Real>(a: &DMatrix<Complex<T>>, b: &DMatrix<Complex<T>>) -> T {
    a.iter().zip(b.iter()).fold(T::zero(), |m, (x, y)| m.max((*x - *y).norm()))
}

/// Eigendecomposition of a Hermitian matrix, exploiting block structure.
///
/// Returns eigenvalues and the unitary whose columns are the eigenvectors.
/// Eigenvalues are grouped by connected component of the off-diagonal
/// pattern, not sorted.
pub fn hermitian_eigen<T: Real>(m: &DMatrix<Complex<T>>) -> (Vec<T>, DMatrix<Complex<T>>) {
    let n = m.nrows();
    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    let mut col = 0;
    for comp in dense_components(m) {
        if comp.len() == 1 {
            let i = comp[0];
            values.push(m[(i, i)].re);
            vectors[(i, col)] = Complex::new(T::one(), T::zero());
            col += 1;
            continue;
        }
        let k = comp.len();
        let sub = DMatrix::from_fn(k, k, |a, b| m[(comp[a], comp[b])]);
        let eig = SymmetricEigen::new(sub);
        for j in 0..k {
            values.push(eig.eigenvalues[j]);
            for a in 0..k {
                vectors[(comp[a], col)] = eig.eigenvectors[(a, j)];
            }
            col += 1;
        }
    }
    (values, vectors)
}

fn is_diagonal<T: Real>(m: &DMatrix<Complex<T>>) -> bool {
    let zero = Complex::default();
    (0..m.nrows()).all(|r| (0..m.ncols()).all(|c| r == c || m[(r, c)] == zero))
}

pub fn spectral_norm<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    let n = m.nrows();
    if is_diagonal(m) {
        return (0..n.min(m.ncols())).fold(T::zero(), |acc, i| acc.max(m[(i, i)].norm()));
    }
    let gram = m.adjoint() * m;
    let (values, _) = hermitian_eigen(&gram);
    values.into_iter().fold(T::zero(), |a, v| a.max(v)).sqrt()
}

/// `exp(scale * H)`.
///
/// Hermitian inputs with a purely real or purely imaginary scale go through a
/// block-wise eigendecomposition; anything else uses Taylor scaling and squaring.
pub fn matrix_exponential<T: Real>(h: &MatrixOperator<T>, scale: Complex<T>) -> Result<MatrixOperator<T>> {
    if !scale.re.is_finite() || !scale.im.is_finite() {
        return Err(Error::NonFinite);
    }
    let zero = T::zero();
    if h.is_hermitian() && (scale.re == zero || scale.im == zero) {
        let m = h.matrix();
        let n = m.nrows();
        let mut out = DMatrix::zeros(n, n);
        for comp in dense_components(m) {
            if comp.len() == 1 {
                let i = comp[0];
                out[(i, i)] = (scale * Complex::new(m[(i, i)].re, zero)).exp();
                continue;
            }
            let k = comp.len();
            let sub = DMatrix::from_fn(k, k, |a, b| m[(comp[a], comp[b])]);
            let eig = SymmetricEigen::new(sub);
            let phases = eig.eigenvalues.map(|l| (scale * Complex::new(l, zero)).exp());
            let u = &eig.eigenvectors * DMatrix::from_diagonal(&phases) * eig.eigenvectors.adjoint();
            for a in 0..k {
                for b in 0..k {
                    out[(comp[a], comp[b])] = u[(a, b)];
                }
            }
        }
        let op = MatrixOperator::from_matrix(out)?;
        return Ok(if scale.re == zero { op.verify_unitary() } else { op });
    }
    MatrixOperator::from_matrix(taylor_exp(&(h.matrix() * scale)))
}

fn taylor_exp<T: Real>(a: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    let n = a.nrows();
    let norm1 = (0..n).map(|c| a.column(c).iter().fold(T::zero(), |s, z| s + z.norm())).fold(T::zero(), |m, x| m.max(x));
    let half = T::of(0.5);
    let mut squarings = 0u32;
    let mut scaled_norm = norm1;
    while scaled_norm > half {
        scaled_norm *= half;
        squarings += 1;
    }
    let a = a * Complex::new(T::of(0.5f64.powi(squarings as i32)), T::zero());
    let mut result = DMatrix::<Complex<T>>::identity(n, n);
    let mut term = DMatrix::<Complex<T>>::identity(n, n);
    for k in 1..=30 {
        term = &term * &a * Complex::new(T::one() / T::of(k as f64), T::zero());
        result += &term;
        if term.norm() <= T::of(T::EPSILON) * result.norm() {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Spectral norm of `AB - BA`.
pub fn commutator_norm<T: Real>(a: &MatrixOperator<T>, b: &MatrixOperator<T>) -> Result<T> {
    Ok(a.commutator(b)?.spectral_norm())
}
