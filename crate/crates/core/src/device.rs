//! Hardware model: 4-qubit rectangular blocks with fixed Ising couplings and
//! tunable flip-flop couplings, open chains of blocks joined by collective zz
//! couplings, and the logical frame `{|1001>, |0101>, |0011>}` of each block.
//!
//! Qubit labels inside a block are 1-based (`1..=4`), matching the edge names
//! `K12`, `K23`; the global qubit index of label `q` in block `L` is
//! `4 L + q - 1`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::operators::{collective_operator, Axis, MatrixOperator, OperatorExpr, PauliTerm, SparseOperator, StateVector};
use crate::schedule::EdgeKey;
use crate::subspace::{self, Projector};
use crate::scalar::ComplexOps;
use crate::{Error, Real, Result};

pub const BLOCK_QUBITS: usize = 4;

/// Edges of the complete graph on the four block qubits.
pub const BLOCK_EDGES: [(u8, u8); 6] = [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)];
/// Edges whose flip-flop coupling `K` can be switched on.
pub const TUNABLE_EDGES: [(u8, u8); 2] = [(1, 2), (2, 3)];
/// Edges carrying `J'` in the standard block; the other four carry `J`.
pub const STANDARD_JPRIME_EDGES: [(u8, u8); 2] = [(1, 2), (3, 4)];

/// Local basis indices of the block states spanning the intersection space.
pub const INTERSECTION_STATES: [&str; 4] = ["0101", "0110", "1001", "1010"];

/// `K (xx + yy) + J zz` between two qubits of a block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingEdge<T: Real> {
    pub endpoints: (u8, u8),
    pub zz_strength: T,
    pub xy_strength: T,
    pub tunable: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockSpec<T: Real> {
    edges: Vec<CouplingEdge<T>>,
    j: T,
    jp: T,
}

fn normalize(edge: (u8, u8)) -> (u8, u8) {
    (edge.0.min(edge.1), edge.0.max(edge.1))
}

impl<T: Real> BlockSpec<T> {
    /// Block whose `J'` couplings sit on `jprime_edges`; every other edge of
    /// the complete graph carries `J`.
    pub fn with_jprime_edges(j: T, jp: T, jprime_edges: &[(u8, u8)]) -> Result<Self> {
        let jpe: Vec<(u8, u8)> = jprime_edges.iter().copied().map(normalize).collect();
        if let Some(e) = jpe.iter().find(|e| !BLOCK_EDGES.contains(e)) {
            return Err(Error::Model(format!("{}-{} is not a block edge", e.0, e.1)));
        }
        let edges = BLOCK_EDGES
            .iter()
            .map(|&e| CouplingEdge {
                endpoints: e,
                zz_strength: if jpe.contains(&e) { jp } else { j },
                xy_strength: T::zero(),
                tunable: TUNABLE_EDGES.contains(&e),
            })
            .collect();
        Ok(Self { edges, j, jp })
    }

    pub fn j(&self) -> T {
        self.j
    }

    pub fn jp(&self) -> T {
        self.jp
    }

    pub fn edges(&self) -> &[CouplingEdge<T>] {
        &self.edges
    }

    pub fn edge(&self, endpoints: (u8, u8)) -> Option<&CouplingEdge<T>> {
        let e = normalize(endpoints);
        self.edges.iter().find(|c| c.endpoints == e)
    }

    /// Checks that every key names a tunable edge of this block.
    pub fn check_tunable(&self, endpoints: (u8, u8)) -> Result<()> {
        match self.edge(endpoints) {
            Some(e) if e.tunable => Ok(()),
            Some(_) => Err(Error::Model(format!("edge {}-{} is not tunable", endpoints.0, endpoints.1))),
            None => Err(Error::Model(format!("edge {}-{} does not exist", endpoints.0, endpoints.1))),
        }
    }

    /// Fixed zz part, with qubit label `q` placed at global index `offset + q - 1`.
    pub fn ising_expr(&self, offset: usize) -> OperatorExpr<T> {
        self.edges
            .iter()
            .map(|e| zz_term(offset + e.endpoints.0 as usize - 1, offset + e.endpoints.1 as usize - 1, e.zz_strength))
            .collect()
    }

    /// Full block Hamiltonian with flip-flop strengths `k` on tunable edges.
    pub fn expr(&self, offset: usize, k: &BTreeMap<(u8, u8), T>) -> Result<OperatorExpr<T>> {
        let mut expr = self.ising_expr(offset);
        for (&edge, &value) in k {
            self.check_tunable(edge)?;
            expr += flip_flop_expr(offset + edge.0 as usize - 1, offset + edge.1 as usize - 1, value);
        }
        Ok(expr)
    }
}

fn zz_term<T: Real>(a: usize, b: usize, strength: T) -> PauliTerm<T> {
    PauliTerm::new(Complex::new(strength, T::zero()), [(a, Axis::Z), (b, Axis::Z)]).expect("distinct sites")
}

/// `k (sigma_a^x sigma_b^x + sigma_a^y sigma_b^y)`
pub fn flip_flop_expr<T: Real>(a: usize, b: usize, k: T) -> OperatorExpr<T> {
    let c = Complex::new(k, T::zero());
    [Axis::X, Axis::Y].into_iter().map(|ax| PauliTerm::new(c, [(a, ax), (b, ax)]).expect("distinct sites")).collect()
}

/// The rectangular block: `J'` on the two vertical edges (1,2), (3,4), `J`
/// on horizontals and diagonals, tunable flip-flop on (1,2) and (2,3).
pub fn standard_block<T: Real>(j: T, jp: T) -> Result<BlockSpec<T>> {
    if !j.is_finite() || !jp.is_finite() || j == T::zero() || jp == T::zero() {
        return Err(Error::InvalidParameter(format!("J and J' must be finite and nonzero (J={}, J'={})", j.as_f64(), jp.as_f64())));
    }
    BlockSpec::with_jprime_edges(j, jp, &STANDARD_JPRIME_EDGES)
}

/// 16x16 block Hamiltonian for the given tunable couplings.
pub fn block_hamiltonian<T: Real>(spec: &BlockSpec<T>, k: &BTreeMap<(u8, u8), T>) -> Result<MatrixOperator<T>> {
    spec.expr(0, k)?.realize(BLOCK_QUBITS)
}

/// Open chain of blocks; block `L` couples to `L+1` through
/// `J (sigma_1^z + sigma_2^z)_L (x) (sigma_3^z + sigma_4^z)_{L+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSpec<T: Real> {
    pub blocks: Vec<BlockSpec<T>>,
    pub interblock_strength: T,
}

impl<T: Real> ChainSpec<T> {
    /// `n` standard blocks with interblock strength `J`.
    pub fn uniform(n: usize, j: T, jp: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("a chain needs at least one block".into()));
        }
        let block = standard_block(j, jp)?;
        Ok(Self { blocks: vec![block; n], interblock_strength: j })
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn qubits(&self) -> usize {
        BLOCK_QUBITS * self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits()
    }

    pub fn interblock_expr(&self, l: usize) -> Result<OperatorExpr<T>> {
        if l + 1 >= self.blocks.len() {
            return Err(Error::InvalidParameter(format!("no block pair ({l}, {}) in a chain of {}", l + 1, self.blocks.len())));
        }
        let left = collective_operator(Axis::Z, &[4 * l, 4 * l + 1])?;
        let right = collective_operator(Axis::Z, &[4 * (l + 1) + 2, 4 * (l + 1) + 3])?;
        Ok((&left * &right).scaled(self.interblock_strength))
    }

    /// Idle Hamiltonian: all intra-block zz plus all interblock couplings.
    pub fn idle_expr(&self) -> OperatorExpr<T> {
        let mut expr = OperatorExpr::new();
        for (l, b) in self.blocks.iter().enumerate() {
            expr += b.ising_expr(BLOCK_QUBITS * l);
        }
        for l in 0..self.blocks.len().saturating_sub(1) {
            expr += self.interblock_expr(l).expect("pair exists");
        }
        expr
    }

    pub fn check_edge(&self, edge: &EdgeKey) -> Result<()> {
        let block = self.blocks.get(edge.block).ok_or_else(|| Error::Model(format!("edge {edge} refers to a missing block")))?;
        block.check_tunable((edge.a, edge.b))
    }

    /// Flip-flop operator (without strength) of a tunable edge.
    pub fn edge_expr(&self, edge: &EdgeKey) -> Result<OperatorExpr<T>> {
        self.check_edge(edge)?;
        let base = BLOCK_QUBITS * edge.block;
        Ok(flip_flop_expr(base + edge.a as usize - 1, base + edge.b as usize - 1, T::one()))
    }

    pub fn hamiltonian_expr(&self, k: &BTreeMap<EdgeKey, T>) -> Result<OperatorExpr<T>> {
        let mut expr = self.idle_expr();
        for (edge, &value) in k {
            expr += self.edge_expr(edge)?.scaled(value);
        }
        Ok(expr)
    }

    pub fn hamiltonian(&self, k: &BTreeMap<EdgeKey, T>) -> Result<MatrixOperator<T>> {
        self.hamiltonian_expr(k)?.realize(self.qubits())
    }

    pub fn hamiltonian_sparse(&self, k: &BTreeMap<EdgeKey, T>) -> Result<SparseOperator<T>> {
        self.hamiltonian_expr(k)?.realize_sparse(self.qubits())
    }

    /// Projector onto `S^z_L = 0` for block `l` (identity on the other blocks).
    pub fn dfs_projector(&self, l: usize) -> Result<Projector<T>> {
        self.block_projector(l, |local| local.count_ones() == 2)
    }

    /// Projector onto the product of every block's `S^z = 0` space.
    pub fn full_dfs_projector(&self) -> Result<Projector<T>> {
        let idx: Vec<usize> = (0..self.dim()).filter(|&i| in_full_dfs(i, self.len())).collect();
        Projector::from_basis_states(self.dim(), &idx)
    }

    fn block_projector(&self, l: usize, keep: impl Fn(usize) -> bool) -> Result<Projector<T>> {
        if l >= self.len() {
            return Err(Error::InvalidParameter(format!("block {l} out of range")));
        }
        let idx: Vec<usize> = (0..self.dim()).filter(|&i| keep(local_bits(i, l, self.len()))).collect();
        Projector::from_basis_states(self.dim(), &idx)
    }
}

/// Four-bit pattern of block `l` inside chain basis index `i`.
pub fn local_bits(i: usize, l: usize, blocks: usize) -> usize {
    (i >> (BLOCK_QUBITS * (blocks - 1 - l))) & 0xF
}

pub fn in_full_dfs(i: usize, blocks: usize) -> bool {
    (0..blocks).all(|l| local_bits(i, l, blocks).count_ones() == 2)
}

/// Squared norm of the component outside every block's `S^z = 0` space.
pub fn dfs_leakage<T: Real>(state: &StateVector<T>, blocks: usize) -> T {
    state.iter().enumerate().filter(|(i, _)| !in_full_dfs(*i, blocks)).fold(T::zero(), |acc, (_, z)| acc + z.norm_sqr())
}

/// Operator for `H_{L,L+1}` on the whole chain space.
pub fn interblock_hamiltonian<T: Real>(chain: &ChainSpec<T>, l: usize) -> Result<MatrixOperator<T>> {
    chain.interblock_expr(l)?.realize(chain.qubits())
}

/// Logical frame of one block: `|0_L> = |1001>`, `|1_L> = |0101>`, ancilla `|2_L> = |0011>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LogicalFrame {
    pub block: usize,
}

impl LogicalFrame {
    pub const LEVELS: [&'static str; 3] = ["1001", "0101", "0011"];

    pub fn new(block: usize) -> Self {
        Self { block }
    }

    /// Local 4-bit index of frame level 0, 1 or 2.
    pub fn local_index(level: usize) -> usize {
        crate::operators::basis_index(Self::LEVELS[level])
    }
}

/// Chain basis index of the product state with block `l` in local pattern `locals[l]`.
pub fn product_index(locals: &[usize]) -> usize {
    locals.iter().fold(0, |acc, &b| (acc << BLOCK_QUBITS) | b)
}

/// Chain basis index with every block in a frame level.
pub fn frame_index(levels: &[usize]) -> usize {
    product_index(&levels.iter().map(|&k| LogicalFrame::local_index(k)).collect::<Vec<_>>())
}

/// Indices of the `3^k` framed product states, block 0 most significant.
pub fn frame_indices(blocks: usize) -> Vec<usize> {
    let total = 3usize.pow(blocks as u32);
    (0..total)
        .map(|mut code| {
            let mut levels = vec![0; blocks];
            for slot in levels.iter_mut().rev() {
                *slot = code % 3;
                code /= 3;
            }
            frame_index(&levels)
        })
        .collect()
}

/// Restriction of `h` to the tensor product of computational frames.
///
/// `frames` must list every block of the space of `h` in order. Fails with a
/// leakage error when `h` does not keep the framed space invariant.
pub fn effective_hamiltonian<T: Real>(h: &MatrixOperator<T>, frames: &[LogicalFrame]) -> Result<DMatrix<Complex<T>>> {
    let blocks = frames.len();
    if BLOCK_QUBITS * blocks != h.qubits() || frames.iter().enumerate().any(|(i, f)| f.block != i) {
        return Err(Error::InvalidParameter("frames must cover every block of the operator, in order".into()));
    }
    let idx = frame_indices(blocks);
    let p = Projector::from_basis_states(h.dim(), &idx)?;
    let norm = crate::operators::commutator_norm(p.operator(), h)?;
    if norm >= T::tol(subspace::DEFAULT_INVARIANCE_TOL) {
        return Err(Error::Leakage(norm.as_f64()));
    }
    let m = h.matrix();
    Ok(DMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])]))
}

/// Outcome of scoring one placement of the two `J'` edges.
#[derive(Clone, Debug, PartialEq)]
pub struct TopologyCandidate {
    pub jprime_edges: [(u8, u8); 2],
    /// Largest entrywise deviation of the idle frame restriction from
    /// `diag(-2J', -2J', 2J' - 4J)`.
    pub deviation: f64,
    pub matches: bool,
}

/// Scores all 15 ways of placing two `J'` edges on the complete graph of a block.
pub fn topology_search<T: Real>(j: T, jp: T) -> Result<Vec<TopologyCandidate>> {
    let two = T::of(2.0);
    let target = [-two * jp, -two * jp, two * jp - T::of(4.0) * j];
    let mut out = Vec::with_capacity(15);
    for (a, &e1) in BLOCK_EDGES.iter().enumerate() {
        for &e2 in &BLOCK_EDGES[a + 1..] {
            let block = BlockSpec::with_jprime_edges(j, jp, &[e1, e2])?;
            let h = block_hamiltonian(&block, &BTreeMap::new())?;
            let deviation = (0..3).fold(T::zero(), |m, level| {
                let i = LogicalFrame::local_index(level);
                let off = (0..3).filter(|&o| o != level).fold(T::zero(), |acc, o| acc.max(h.matrix()[(i, LogicalFrame::local_index(o))].norm()));
                m.max((h.matrix()[(i, i)].re - target[level]).abs()).max(off)
            });
            out.push(TopologyCandidate { jprime_edges: [e1, e2], deviation: deviation.as_f64(), matches: deviation <= T::tol(1e-12) });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    fn frame3(h: &MatrixOperator<f64>) -> DMatrix<C> {
        effective_hamiltonian(h, &[LogicalFrame::new(0)]).unwrap()
    }

    fn assert_close(a: &DMatrix<C>, b: &DMatrix<C>, tol: f64) {
        let d = crate::operators::max_abs_diff(a, b);
        assert!(d < tol, "deviation {d:e}\n{a}\n{b}");
    }

    fn real(rows: usize, data: &[f64]) -> DMatrix<C> {
        DMatrix::from_row_iterator(rows, rows, data.iter().map(|&x| C::new(x, 0.0)))
    }

    #[test]
    fn idle_restriction() {
        let (j, jp) = (1.3, 0.4);
        let b = standard_block(j, jp).unwrap();
        let h = block_hamiltonian(&b, &BTreeMap::new()).unwrap();
        assert_close(&frame3(&h), &real(3, &[-2.0 * jp, 0.0, 0.0, 0.0, -2.0 * jp, 0.0, 0.0, 0.0, 2.0 * jp - 4.0 * j]), 1e-12);
        // idle Hamiltonian is diagonal
        assert!(h.matrix().iter().enumerate().all(|(k, z)| k % 17 == 0 || *z == C::new(0.0, 0.0)));
    }

    #[test]
    fn degenerate_frame_when_couplings_equal() {
        let b = standard_block(0.8, 0.8).unwrap();
        let h = block_hamiltonian(&b, &BTreeMap::new()).unwrap();
        assert_close(&frame3(&h), &real(3, &[-1.6, 0.0, 0.0, 0.0, -1.6, 0.0, 0.0, 0.0, -1.6]), 1e-12);
    }

    #[test]
    fn tunable_restrictions() {
        let (j, jp, mu, nu) = (1.0, 0.5, 0.3, -0.7);
        let b = standard_block(j, jp).unwrap();
        let ha = block_hamiltonian(&b, &BTreeMap::from([((1, 2), mu)])).unwrap();
        assert_close(&frame3(&ha), &real(3, &[-2.0 * jp, 2.0 * mu, 0.0, 2.0 * mu, -2.0 * jp, 0.0, 0.0, 0.0, 2.0 * jp - 4.0 * j]), 1e-12);
        let hb = block_hamiltonian(&b, &BTreeMap::from([((2, 3), nu)])).unwrap();
        assert_close(&frame3(&hb), &real(3, &[-2.0 * jp, 0.0, 0.0, 0.0, -2.0 * jp, 2.0 * nu, 0.0, 2.0 * nu, 2.0 * jp - 4.0 * j]), 1e-12);
    }

    #[test]
    fn non_tunable_edge_rejected() {
        let b = standard_block(1.0, 0.5).unwrap();
        assert!(matches!(block_hamiltonian(&b, &BTreeMap::from([((3, 4), 1.0)])), Err(Error::Model(_))));
        assert!(matches!(block_hamiltonian(&b, &BTreeMap::from([((1, 1), 1.0)])), Err(Error::Model(_))));
        assert!(standard_block(0.0, 1.0).is_err());
        assert!(standard_block(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn interblock_restriction() {
        let j = 0.9;
        let chain = ChainSpec::uniform(2, j, 0.4).unwrap();
        let h = interblock_hamiltonian(&chain, 0).unwrap();
        let eff = effective_hamiltonian(&h, &[LogicalFrame::new(0), LogicalFrame::new(1)]).unwrap();
        let mut expected = DMatrix::zeros(9, 9);
        expected[(8, 8)] = C::new(-4.0 * j, 0.0);
        assert_close(&eff, &expected, 1e-12);
        let v = crate::operators::basis_state::<f64>(8, frame_index(&[2, 2]));
        assert!((h.element(&v, &v).re + 4.0 * j).abs() < 1e-12);
        assert!(interblock_hamiltonian(&chain, 1).is_err());
    }

    #[test]
    fn interblock_silent_on_logical_block() {
        let chain = ChainSpec::uniform(2, 1.0, 0.5).unwrap();
        let h = interblock_hamiltonian(&chain, 0).unwrap();
        for level in 0..2 {
            for other in 0..16 {
                let v = crate::operators::basis_state::<f64>(8, product_index(&[LogicalFrame::local_index(level), other]));
                assert!(h.apply(&v).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn case_i_idle_identity() {
        let (j, jp) = (1.1, 0.35);
        let chain = ChainSpec::uniform(2, j, jp).unwrap();
        let h = chain.hamiltonian(&BTreeMap::new()).unwrap();
        let eff = effective_hamiltonian(&h, &[LogicalFrame::new(0), LogicalFrame::new(1)]).unwrap();
        // Z^{12} = +1 on |1>, -1 on |2>
        for (a, za) in [(1usize, 1.0f64), (2, -1.0)] {
            for (b, zb) in [(1usize, 1.0), (2, -1.0)] {
                let expected = -5.0 * j + (3.0 * j - 2.0 * jp) * (za + zb) - j * za * zb;
                let k = 3 * a + b;
                assert!((eff[(k, k)].re - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn leakage_error_reports_commutator() {
        let chain = ChainSpec::uniform(1, 1.0, 0.5).unwrap();
        let h = chain.hamiltonian_expr(&BTreeMap::new()).unwrap() + flip_flop_expr(2, 3, 0.2);
        let m = h.realize(4).unwrap();
        assert!(matches!(effective_hamiltonian(&m, &[LogicalFrame::new(0)]), Err(Error::Leakage(_))));
        let zero = MatrixOperator::<f64>::zeros(16);
        assert_eq!(effective_hamiltonian(&zero, &[LogicalFrame::new(0)]).unwrap(), DMatrix::<C>::zeros(3, 3));
    }

    #[test]
    fn topology_is_unique() {
        for (j, jp) in [(1.0, 0.371), (0.7, -1.9)] {
            let found: Vec<_> = topology_search(j, jp).unwrap().into_iter().filter(|c| c.matches).collect();
            assert_eq!(found.len(), 1);
            assert_eq!(found[0].jprime_edges, STANDARD_JPRIME_EDGES);
        }
        assert_eq!(topology_search(1.0, 0.5).unwrap().len(), 15);
    }

    #[test]
    fn embedding_adds_constant() {
        let (j, jp) = (1.0, 0.6);
        let nu = 0.45;
        let chain = ChainSpec::uniform(3, j, jp).unwrap();
        let k = BTreeMap::from([(EdgeKey::new(1, 2, 3), nu)]);
        let h = chain.hamiltonian_sparse(&k).unwrap();
        let isolated = block_hamiltonian(&chain.blocks[1], &BTreeMap::from([((2, 3), nu)])).unwrap();
        let iso = frame3(&isolated);
        for (left, right) in [("0101", "1010"), ("1001", "0110")] {
            let locals = |lvl: usize| product_index(&[crate::operators::basis_index(left), LogicalFrame::local_index(lvl), crate::operators::basis_index(right)]);
            let dense = h.to_dense().unwrap();
            let emb = DMatrix::from_fn(3, 3, |a, b| dense.matrix()[(locals(a), locals(b))]);
            let shift = emb[(0, 0)] - iso[(0, 0)];
            let shifted = iso.clone() + DMatrix::<C>::identity(3, 3) * shift;
            assert_close(&emb, &shifted, 1e-12);
        }
    }

    #[test]
    fn dfs_projectors_commute_with_chain() {
        let chain = ChainSpec::uniform(2, 1.0, 0.5).unwrap();
        let k = BTreeMap::from([(EdgeKey::new(0, 1, 2), 0.3), (EdgeKey::new(1, 2, 3), -0.8)]);
        let h = chain.hamiltonian(&k).unwrap();
        for l in 0..2 {
            let p = chain.dfs_projector(l).unwrap();
            assert!(crate::operators::commutator_norm(p.operator(), &h).unwrap() < 1e-12);
            let hi = interblock_hamiltonian(&chain, 0).unwrap();
            assert!(crate::operators::commutator_norm(p.operator(), &hi).unwrap() < 1e-12);
        }
        assert_eq!(chain.full_dfs_projector().unwrap().rank(), 36);
    }

    #[test]
    fn frame_ordering() {
        assert_eq!(frame_indices(1), vec![9, 5, 3]);
        assert_eq!(frame_indices(2)[4], product_index(&[5, 5]));
    }
}
