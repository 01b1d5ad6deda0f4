//! Decoherence-free and interaction-free subspaces: joint eigenspaces of
//! commuting collective generators, their one-parameter stabilizers and
//! projectors, intersections, and the invariance test `[P, H] = 0`.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::operators::{commutator_norm, hermitian_eigen, matrix_exponential, max_abs_diff, MatrixOperator, StateVector};
use crate::scalar::ComplexOps;
use crate::{Error, Real, Result};

/// Eigenvalues within this distance of 1 count as fixed points of a projector product.
pub const FIXED_POINT_THRESHOLD: f64 = 1e-8;
/// Default commutator threshold for [`is_invariant`].
pub const DEFAULT_INVARIANCE_TOL: f64 = 1e-10;

/// A Hermitian generator and the eigenvalue demanded of subspace states.
#[derive(Clone, Debug)]
pub struct GeneratorConstraint<T: Real> {
    operator: MatrixOperator<T>,
    eigenvalue: T,
}

impl<T: Real> GeneratorConstraint<T> {
    pub fn new(operator: MatrixOperator<T>, eigenvalue: T) -> Result<Self> {
        if !operator.is_hermitian() {
            return Err(Error::NotHermitian(operator.hermitian_defect().as_f64()));
        }
        Ok(Self { operator, eigenvalue })
    }

    pub fn operator(&self) -> &MatrixOperator<T> {
        &self.operator
    }

    pub fn eigenvalue(&self) -> T {
        self.eigenvalue
    }

    /// `(A - c I)^2`
    fn squared_deviation(&self) -> Result<MatrixOperator<T>> {
        let n = self.operator.dim();
        let shift = DMatrix::<Complex<T>>::identity(n, n) * Complex::new(self.eigenvalue, T::zero());
        let dev = self.operator.matrix() - shift;
        MatrixOperator::from_matrix(&dev * &dev)
    }
}

/// Orthonormal basis of a subspace of a `dim`-dimensional space. May be empty.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis<T: Real> {
    dim: usize,
    vectors: Vec<StateVector<T>>,
}

impl<T: Real> SubspaceBasis<T> {
    pub fn new(dim: usize, vectors: Vec<StateVector<T>>) -> Result<Self> {
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch { left: dim, right: v.len() });
        }
        let defect = orthonormality_defect(&vectors);
        if defect > T::tol(1e-12) {
            return Err(Error::NotOrthonormal(defect.as_f64()));
        }
        Ok(Self { dim, vectors })
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, vectors: Vec::new() }
    }

    /// Dimension of the ambient space.
    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    /// Dimension of the subspace.
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[StateVector<T>] {
        &self.vectors
    }

    /// Indices of the computational basis states spanning this subspace, if
    /// every basis vector is (numerically) a single computational state.
    pub fn computational_support(&self, tol: T) -> Option<Vec<usize>> {
        self.vectors
            .iter()
            .map(|v| {
                let (idx, amp) = v.iter().enumerate().fold((0, T::zero()), |best, (i, z)| if z.norm() > best.1 { (i, z.norm()) } else { best });
                ((T::one() - amp).abs() <= tol).then_some(idx)
            })
            .collect()
    }
}

fn orthonormality_defect<T: Real>(vectors: &[StateVector<T>]) -> T {
    let mut worst = T::zero();
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in vectors.iter().enumerate().skip(i) {
            let target = if i == j { T::one() } else { T::zero() };
            let ip = a.dotc(b);
            worst = worst.max((ip - Complex::new(target, T::zero())).norm());
        }
    }
    worst
}

/// Hermitian idempotent matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector<T: Real> {
    matrix: MatrixOperator<T>,
}

impl<T: Real> Projector<T> {
    /// Validates `P = P^dagger`, `P^2 = P` and an integral trace.
    pub fn from_operator(matrix: MatrixOperator<T>) -> Result<Self> {
        let herm = matrix.hermitian_defect();
        if herm > T::tol(1e-12) {
            return Err(Error::NotProjector(herm.as_f64()));
        }
        let idem = max_abs_diff(&(matrix.matrix() * matrix.matrix()), matrix.matrix());
        if idem > T::tol(1e-10) {
            return Err(Error::NotProjector(idem.as_f64()));
        }
        let tr = matrix.trace().re;
        if (tr - tr.round()).abs() > T::tol(1e-8) {
            return Err(Error::NotProjector((tr - tr.round()).abs().as_f64()));
        }
        Ok(Self { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: MatrixOperator::identity(dim) }
    }

    pub fn operator(&self) -> &MatrixOperator<T> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `Tr P`, rounded.
    pub fn rank(&self) -> usize {
        self.matrix.trace().re.round().as_f64() as usize
    }

    /// Projector onto the span of the given computational basis states.
    pub fn from_basis_states(dim: usize, indices: &[usize]) -> Result<Self> {
        let mut m = DMatrix::zeros(dim, dim);
        for &i in indices {
            if i >= dim {
                return Err(Error::DimensionMismatch { left: dim, right: i + 1 });
            }
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        Self::from_operator(MatrixOperator::from_matrix(m)?)
    }

    /// `self (x) other`, with `self` on the more significant qubits.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let m = self.matrix.matrix().kronecker(other.matrix.matrix());
        Ok(Self { matrix: MatrixOperator::from_matrix(m)? })
    }

    /// `||(I - P) v||^2`
    pub fn leakage(&self, v: &StateVector<T>) -> T {
        let inside = self.matrix.apply(v);
        (v - inside).norm_squared()
    }

    /// Orthonormal basis of the range, canonicalized (see [`canonical_basis`]).
    pub fn range(&self) -> SubspaceBasis<T> {
        canonical_basis(self.matrix.matrix(), self.rank())
    }
}

/// Deterministic orthonormal basis of the range of projector `p`.
///
/// Pivoted Gram-Schmidt over the columns `P e_j`, taking at each step the
/// column with the largest residual (ties to the lowest index). Subspaces
/// spanned by computational basis states come back as exactly those states
/// in increasing index order.
pub fn canonical_basis<T: Real>(p: &DMatrix<Complex<T>>, rank: usize) -> SubspaceBasis<T> {
    let n = p.nrows();
    let mut basis: Vec<StateVector<T>> = Vec::with_capacity(rank);
    let mut residuals: Vec<StateVector<T>> = (0..n).map(|j| p.column(j).into_owned()).collect();
    for _ in 0..rank {
        let (best, norm) = residuals.iter().enumerate().fold((0, T::zero()), |acc, (j, r)| {
            let nr = r.norm();
            if nr > acc.1 { (j, nr) } else { acc }
        });
        if norm <= T::tol(1e-8) {
            break;
        }
        let mut v = residuals[best].clone();
        // second pass of Gram-Schmidt for stability
        for u in &basis {
            let c = u.dotc(&v);
            v -= u * c;
        }
        let nv = v.norm();
        v.unscale_mut(nv);
        for r in residuals.iter_mut() {
            let c = v.dotc(r);
            *r -= &v * c;
        }
        basis.push(v);
    }
    SubspaceBasis { dim: n, vectors: basis }
}

fn check_same_dims<T: Real>(constraints: &[GeneratorConstraint<T>]) -> Result<usize> {
    let first = constraints.first().ok_or_else(|| Error::InvalidParameter("no generator constraints".into()))?;
    let dim = first.operator.dim();
    for c in constraints {
        if c.operator.dim() != dim {
            return Err(Error::DimensionMismatch { left: dim, right: c.operator.dim() });
        }
    }
    for (i, a) in constraints.iter().enumerate() {
        for b in &constraints[i + 1..] {
            let n = commutator_norm(&a.operator, &b.operator)?;
            if n > T::tol(1e-10) {
                return Err(Error::NonCommuting(n.as_f64()));
            }
        }
    }
    Ok(dim)
}

/// Orthonormal basis of `{v : A_k v = c_k v for every constraint k}`.
pub fn simultaneous_eigenspace<T: Real>(constraints: &[GeneratorConstraint<T>]) -> Result<SubspaceBasis<T>> {
    let dim = check_same_dims(constraints)?;
    let mut frame: DMatrix<Complex<T>> = DMatrix::identity(dim, dim);
    for c in constraints {
        if frame.ncols() == 0 {
            break;
        }
        let reduced = frame.adjoint() * c.operator.matrix() * &frame;
        let (values, vectors) = hermitian_eigen(&reduced);
        let tol = T::tol(FIXED_POINT_THRESHOLD) * T::one().max(c.eigenvalue.abs());
        let keep: Vec<usize> = (0..values.len()).filter(|&i| (values[i] - c.eigenvalue).abs() <= tol).collect();
        let selected = DMatrix::from_fn(vectors.nrows(), keep.len(), |r, k| vectors[(r, keep[k])]);
        frame = &frame * selected;
    }
    let rank = frame.ncols();
    let p = &frame * frame.adjoint();
    Ok(canonical_basis(&p, rank))
}

/// `prod_k exp[-gamma (A_k - c_k I)^2]`, the identity exactly on the joint eigenspace.
pub fn gamma_stabilizer<T: Real>(constraints: &[GeneratorConstraint<T>], gamma: T) -> Result<MatrixOperator<T>> {
    if !(gamma > T::zero()) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("stabilizer parameter must be positive, got {}", gamma.as_f64())));
    }
    let dim = check_same_dims(constraints)?;
    let mut out = MatrixOperator::identity(dim);
    for c in constraints {
        let factor = matrix_exponential(&c.squared_deviation()?, Complex::new(-gamma, T::zero()))?;
        out = out.mul(&factor)?;
    }
    Ok(out)
}

/// `P = sum_k v_k v_k^dagger`.
pub fn projector_of<T: Real>(basis: &SubspaceBasis<T>) -> Result<Projector<T>> {
    let n = basis.dim;
    let mut m = DMatrix::zeros(n, n);
    for v in &basis.vectors {
        m += v * v.adjoint();
    }
    Projector::from_operator(MatrixOperator::from_matrix(m)?)
}

/// Basis of the common fixed space of two projectors.
///
/// Commuting projectors use the eigenvalue-1 eigenspace of `P1 P2`; otherwise
/// the eigenvalue-1 eigenspace of `(P1 + P2)/2`, which is exactly the
/// intersection of the ranges.
pub fn intersect<T: Real>(p1: &Projector<T>, p2: &Projector<T>) -> Result<SubspaceBasis<T>> {
    let (a, b) = (p1.matrix.matrix(), p2.matrix.matrix());
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch { left: a.nrows(), right: b.nrows() });
    }
    let commuting = commutator_norm(&p1.matrix, &p2.matrix)? <= T::tol(1e-10);
    let m = if commuting {
        let prod = a * b;
        // symmetrize away rounding so the Hermitian solver sees a Hermitian input
        (&prod + prod.adjoint()) * Complex::new(T::of(0.5), T::zero())
    } else {
        (a + b) * Complex::new(T::of(0.5), T::zero())
    };
    let (values, vectors) = hermitian_eigen(&m);
    let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i] > T::one() - T::tol(FIXED_POINT_THRESHOLD)).collect();
    let frame = DMatrix::from_fn(vectors.nrows(), keep.len(), |r, k| vectors[(r, keep[k])]);
    let p = &frame * frame.adjoint();
    Ok(canonical_basis(&p, keep.len()))
}

/// Dimension `binom(m, (m - l)/2)` of the `S^z = l` eigenspace of `m` qubits;
/// 0 when `l` is not an eigenvalue.
pub fn dfs_dimension(m: u32, l: i64) -> u64 {
    let m64 = i64::from(m);
    if l.abs() > m64 || (m64 - l).rem_euclid(2) != 0 {
        return 0;
    }
    let k = ((m64 - l) / 2) as u64;
    let k = k.min(u64::from(m) - k);
    (0..k).fold(1u64, |acc, i| acc * (u64::from(m) - i) / (i + 1))
}

/// Whether `H` keeps `range(P)` invariant: `||[P, H]|| < tol`.
pub fn is_invariant<T: Real>(p: &Projector<T>, h: &MatrixOperator<T>, tol: T) -> Result<bool> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(h.hermitian_defect().as_f64()));
    }
    Ok(commutator_norm(&p.matrix, h)? < tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{basis_index, collective_operator, ket, Axis, OperatorExpr, PauliTerm};

    type C = Complex<f64>;

    fn sz(sites: &[usize]) -> MatrixOperator<f64> {
        collective_operator(Axis::Z, sites).unwrap().realize(4).unwrap()
    }

    fn dfs_constraint() -> GeneratorConstraint<f64> {
        GeneratorConstraint::new(sz(&[0, 1, 2, 3]), 0.0).unwrap()
    }

    fn ifs_constraints() -> Vec<GeneratorConstraint<f64>> {
        vec![GeneratorConstraint::new(sz(&[0, 1]), 0.0).unwrap(), GeneratorConstraint::new(sz(&[2, 3]), 0.0).unwrap()]
    }

    fn support(b: &SubspaceBasis<f64>) -> Vec<usize> {
        b.computational_support(1e-12).expect("coordinate subspace")
    }

    #[test]
    fn dfs_is_six_dimensional() {
        let b = simultaneous_eigenspace(&[dfs_constraint()]).unwrap();
        assert_eq!(b.len(), 6);
        let expected: Vec<usize> = ["0011", "0101", "0110", "1001", "1010", "1100"].iter().map(|s| basis_index(s)).collect();
        assert_eq!(support(&b), expected);
    }

    #[test]
    fn intersection_is_four_dimensional() {
        let mut cs = vec![dfs_constraint()];
        cs.extend(ifs_constraints());
        let b = simultaneous_eigenspace(&cs).unwrap();
        let expected: Vec<usize> = ["0101", "0110", "1001", "1010"].iter().map(|s| basis_index(s)).collect();
        assert_eq!(support(&b), expected);
    }

    #[test]
    fn maximal_weight_state() {
        let b = simultaneous_eigenspace(&[GeneratorConstraint::new(sz(&[0, 1, 2, 3]), 4.0).unwrap()]).unwrap();
        assert_eq!(support(&b), vec![0]);
    }

    #[test]
    fn non_commuting_and_non_hermitian_rejected() {
        let x = OperatorExpr::<f64>::from(PauliTerm::single(0, Axis::X)).realize(4).unwrap();
        let z = OperatorExpr::<f64>::from(PauliTerm::single(0, Axis::Z)).realize(4).unwrap();
        let cs = vec![GeneratorConstraint::new(x, 1.0).unwrap(), GeneratorConstraint::new(z, 1.0).unwrap()];
        assert!(matches!(simultaneous_eigenspace(&cs), Err(Error::NonCommuting(_))));
        let y = OperatorExpr::<f64>::from(PauliTerm::single(0, Axis::Y)).realize(1).unwrap();
        let not_herm = y.scale(C::new(0.0, 1.0)).unwrap();
        assert!(matches!(GeneratorConstraint::new(not_herm, 0.0), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn stabilizer_fixes_dfs_states() {
        let d = gamma_stabilizer(&[dfs_constraint()], 0.7).unwrap();
        let v = ket::<f64>("1001");
        assert!((d.apply(&v) - &v).norm() < 1e-15);
        assert!(matches!(gamma_stabilizer(&[dfs_constraint()], 0.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(gamma_stabilizer(&[dfs_constraint()], -1.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn stabilizer_convergence_bound() {
        let p = projector_of(&simultaneous_eigenspace(&[dfs_constraint()]).unwrap()).unwrap();
        let mut last = f64::INFINITY;
        for gamma in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let d = gamma_stabilizer(&[dfs_constraint()], gamma).unwrap();
            let dist = d.sub(p.operator()).unwrap().spectral_norm();
            assert!(dist <= (-4.0 * gamma).exp(), "gamma {gamma}: {dist}");
            assert!(dist <= last);
            last = dist;
        }
    }

    #[test]
    fn stabilizer_vanishes_for_missing_eigenvalue() {
        let c = GeneratorConstraint::new(sz(&[0, 1, 2, 3]), 1.0).unwrap();
        let d = gamma_stabilizer(&[c.clone()], 30.0).unwrap();
        assert!(d.spectral_norm() < 1e-12);
        assert!(simultaneous_eigenspace(&[c]).unwrap().is_empty());
    }

    #[test]
    fn projector_traces() {
        let empty = projector_of(&SubspaceBasis::<f64>::empty(16)).unwrap();
        assert_eq!(empty.rank(), 0);
        assert_eq!(empty.operator().max_abs(), 0.0);
        let dfs = projector_of(&simultaneous_eigenspace(&[dfs_constraint()]).unwrap()).unwrap();
        assert_eq!(dfs.rank(), 6);
        let ifs = projector_of(&simultaneous_eigenspace(&ifs_constraints()).unwrap()).unwrap();
        let mut all = vec![dfs_constraint()];
        all.extend(ifs_constraints());
        let both = projector_of(&simultaneous_eigenspace(&all).unwrap()).unwrap();
        let product = ifs.operator().mul(dfs.operator()).unwrap();
        assert!(max_abs_diff(product.matrix(), both.operator().matrix()) < 1e-12);
    }

    #[test]
    fn intersections() {
        let dfs = projector_of(&simultaneous_eigenspace(&[dfs_constraint()]).unwrap()).unwrap();
        assert_eq!(intersect(&dfs, &dfs).unwrap().len(), 6);
        let ifs = projector_of(&simultaneous_eigenspace(&ifs_constraints()).unwrap()).unwrap();
        let b = intersect(&dfs, &ifs).unwrap();
        assert_eq!(b.len(), 4);
        let p1 = Projector::<f64>::from_basis_states(16, &[3]).unwrap();
        let p2 = Projector::<f64>::from_basis_states(16, &[5]).unwrap();
        assert!(intersect(&p1, &p2).unwrap().is_empty());
        let small = Projector::<f64>::identity(4);
        assert!(matches!(intersect(&p1, &small), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn intersection_of_non_commuting_projectors() {
        // span{e0, e1} and span{e0, (e1 + e2)/sqrt2} meet in span{e0}
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = nalgebra::DVector::<C>::zeros(4);
        v[1] = C::new(s, 0.0);
        v[2] = C::new(s, 0.0);
        let b2 = SubspaceBasis::new(4, vec![crate::operators::basis_state(2, 0), v]).unwrap();
        let p1 = Projector::<f64>::from_basis_states(4, &[0, 1]).unwrap();
        let p2 = projector_of(&b2).unwrap();
        let meet = intersect(&p1, &p2).unwrap();
        assert_eq!(meet.computational_support(1e-10), Some(vec![0]));
    }

    #[test]
    fn dfs_dimension_examples() {
        assert_eq!(dfs_dimension(4, 0), 6);
        assert_eq!(dfs_dimension(4, 4), 1);
        assert_eq!(dfs_dimension(4, 1), 0);
        assert_eq!(dfs_dimension(4, 6), 0);
        // oracle: count weight-2 strings of length 6
        let brute = (0u32..64).filter(|b| b.count_ones() == 2).count() as u64;
        assert_eq!(dfs_dimension(6, 2), brute);
        for m in 0..=10u32 {
            let total: u64 = (-(m as i64)..=m as i64).map(|l| dfs_dimension(m, l)).sum();
            assert_eq!(total, 1 << m);
        }
    }

    #[test]
    fn invariance_checks() {
        let h = sz(&[0, 2]);
        assert!(is_invariant(&Projector::identity(16), &h, 1e-10).unwrap());
        let logical = Projector::<f64>::from_basis_states(16, &[basis_index("1001"), basis_index("0101")]).unwrap();
        let k23 = OperatorExpr::<f64>::from_iter([
            PauliTerm::new(C::new(1.0, 0.0), [(1, Axis::X), (2, Axis::X)]).unwrap(),
            PauliTerm::new(C::new(1.0, 0.0), [(1, Axis::Y), (2, Axis::Y)]).unwrap(),
        ])
        .realize(4)
        .unwrap();
        assert!(!is_invariant(&logical, &k23, 1e-10).unwrap());
    }

    #[test]
    fn projector_validation() {
        let m = MatrixOperator::<f64>::identity(4).scale(C::new(0.5, 0.0)).unwrap();
        assert!(matches!(Projector::from_operator(m), Err(Error::NotProjector(_))));
        let bad = SubspaceBasis::<f64>::new(2, vec![ket("0"), ket("0")]);
        assert!(matches!(bad, Err(Error::NotOrthonormal(_))));
    }

    #[test]
    fn f32_reproduces_dimensions() {
        let s = collective_operator::<f32>(Axis::Z, &[0, 1, 2, 3]).unwrap().realize(4).unwrap();
        let b = simultaneous_eigenspace(&[GeneratorConstraint::new(s, 0.0f32).unwrap()]).unwrap();
        assert_eq!(b.len(), 6);
    }
}
