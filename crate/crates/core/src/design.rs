//! Block designs: complete designs, incidence matrices, `(c,d)`-valued
//! design mechanisms, dual-pair partitioning, and resolution into a uniform
//! shared-randomness variable plus one two-output mechanism per realization.

use crate::mechanism::{Mechanism, MechanismError};
use crate::rational::Rat;
use num::{Signed, Zero};
use std::collections::HashMap;
use thiserror::Error;

/// Largest edge count a complete design is allowed to materialize by default.
pub const DEFAULT_EDGE_CAP: usize = 200_000;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("edge size k={k} out of range for v={v} (need 1 <= k <= v-1)")]
    EdgeSizeOutOfRange { v: usize, k: usize },
    #[error("C({v},{k}) = {edges} exceeds the edge cap {cap}")]
    EdgeCapExceeded { v: usize, k: usize, edges: u128, cap: usize },
    #[error("designs have different vertex sets ({left} vs {right} vertices)")]
    VertexSetMismatch { left: usize, right: usize },
    #[error("design symmetry violated: {0}")]
    InvalidDesign(DesignViolation),
    #[error("normalizer c*r + d*(b-r) is zero")]
    ZeroNormalizer,
    #[error("mechanism has an odd number of columns ({0})")]
    OddColumnCount(usize),
    #[error("no dual pairing: column {0} has no partner with a constant pair sum")]
    NoDualPairing(usize),
    #[error("dual pairs have inconsistent scales; not resolvable with uniform shared randomness")]
    InconsistentPairScale,
    #[error("pair list does not cover every column exactly once")]
    BadPairCover,
    #[error("column pair ({0},{1}) does not sum to a constant vector")]
    PairNotConstant(usize, usize),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
}

/// First violated design symmetry, with a counterexample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DesignViolation {
    EmptyDesign,
    VertexOutOfRange { edge: usize, vertex: usize },
    NotRegular { vertex: usize, degree: usize, expected: usize },
    NotBalanced { pair: (usize, usize), count: usize, expected: usize },
}

impl std::fmt::Display for DesignViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::EmptyDesign => write!(f, "design has no vertices or no edges"),
            Self::VertexOutOfRange { edge, vertex } => {
                write!(f, "edge {edge} references vertex {vertex} outside the vertex set")
            }
            Self::NotRegular { vertex, degree, expected } => {
                write!(f, "vertex {vertex} has degree {degree}, expected {expected}")
            }
            Self::NotBalanced { pair, count, expected } => write!(
                f,
                "vertex pair ({},{}) lies in {count} edges, expected {expected}",
                pair.0, pair.1
            ),
        }
    }
}

/// A hypergraph on `[v]` given as an ordered edge list. Vertices are
/// 0-based internally; the text serialization is 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockDesign {
    num_vertices: usize,
    edges: Vec<Vec<usize>>,
}

/// Verified symmetry parameters of a design: `b` edges, degree `r`, uniform
/// edge size `k` (absent for a merely regular pairwise-balanced design), and
/// pairwise balance `lambda`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DesignParams {
    pub num_edges: usize,
    pub degree: usize,
    pub edge_size: Option<usize>,
    pub pair_balance: usize,
}

impl BlockDesign {
    pub fn new(num_vertices: usize, edges: Vec<Vec<usize>>) -> Self {
        let edges = edges
            .into_iter()
            .map(|mut e| {
                e.sort_unstable();
                e.dedup();
                e
            })
            .collect();
        Self { num_vertices, edges }
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    /// One edge per line, space-separated 1-based vertex indices.
    pub fn to_edge_list_string(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let line: Vec<String> = e.iter().map(|x| (x + 1).to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses the [`BlockDesign::to_edge_list_string`] format.
    pub fn from_edge_list_str(num_vertices: usize, s: &str) -> Result<Self, DesignError> {
        let mut edges = Vec::new();
        for line in s.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut edge = Vec::new();
            for tok in line.split_whitespace() {
                let idx: usize = tok.parse().map_err(|_| {
                    DesignError::InvalidDesign(DesignViolation::VertexOutOfRange {
                        edge: edges.len(),
                        vertex: usize::MAX,
                    })
                })?;
                if idx == 0 || idx > num_vertices {
                    return Err(DesignError::InvalidDesign(DesignViolation::VertexOutOfRange {
                        edge: edges.len(),
                        vertex: idx,
                    }));
                }
                edge.push(idx - 1);
            }
            edges.push(edge);
        }
        Ok(Self::new(num_vertices, edges))
    }
}

fn binomial(n: usize, k: isize) -> u128 {
    if k < 0 || k as usize > n {
        return 0;
    }
    let k = (k as usize).min(n - k as usize);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// All `k`-subsets of `[v]` in lexicographic order.
fn k_subsets(v: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // advance to the lexicographic successor
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + v - k {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// The complete `k`-uniform design on `v` vertices: every `k`-subset as an
/// edge, lexicographically ordered. Parameters are
/// `(C(v,k), C(v-1,k-1), k, C(v-2,k-2))`.
pub fn complete_block_design(v: usize, k: usize) -> Result<BlockDesign, DesignError> {
    complete_block_design_capped(v, k, DEFAULT_EDGE_CAP)
}

pub fn complete_block_design_capped(
    v: usize,
    k: usize,
    cap: usize,
) -> Result<BlockDesign, DesignError> {
    if k == 0 || k >= v {
        return Err(DesignError::EdgeSizeOutOfRange { v, k });
    }
    let edges = binomial(v, k as isize);
    if edges > cap as u128 {
        return Err(DesignError::EdgeCapExceeded { v, k, edges, cap });
    }
    let design = BlockDesign { num_vertices: v, edges: k_subsets(v, k) };
    let params = verify_design(&design).map_err(DesignError::InvalidDesign)?;
    debug_assert_eq!(params.num_edges as u128, edges);
    debug_assert_eq!(params.degree as u128, binomial(v - 1, k as isize - 1));
    debug_assert_eq!(params.pair_balance as u128, binomial(v - 2, k as isize - 2));
    Ok(design)
}

/// Recomputes regularity, uniformity and pairwise balance by exhaustive
/// counting. Fails with the first violated symmetry and a counterexample.
pub fn verify_design(g: &BlockDesign) -> Result<DesignParams, DesignViolation> {
    let v = g.num_vertices;
    if v == 0 || g.edges.is_empty() {
        return Err(DesignViolation::EmptyDesign);
    }
    for (i, e) in g.edges.iter().enumerate() {
        if let Some(&bad) = e.iter().find(|&&x| x >= v) {
            return Err(DesignViolation::VertexOutOfRange { edge: i, vertex: bad });
        }
    }
    let mut degree = vec![0usize; v];
    for e in &g.edges {
        for &x in e {
            degree[x] += 1;
        }
    }
    let r = degree[0];
    for (x, &d) in degree.iter().enumerate() {
        if d != r {
            return Err(DesignViolation::NotRegular { vertex: x, degree: d, expected: r });
        }
    }
    let k0 = g.edges[0].len();
    let uniform = g.edges.iter().all(|e| e.len() == k0);
    let mut balance = vec![0usize; v * v];
    for e in &g.edges {
        for (a, &x) in e.iter().enumerate() {
            for &y in &e[a + 1..] {
                balance[x * v + y] += 1;
            }
        }
    }
    let lambda = if v >= 2 { balance[1] } else { 0 };
    for x in 0..v {
        for y in x + 1..v {
            if balance[x * v + y] != lambda {
                return Err(DesignViolation::NotBalanced {
                    pair: (x, y),
                    count: balance[x * v + y],
                    expected: lambda,
                });
            }
        }
    }
    Ok(DesignParams {
        num_edges: g.edges.len(),
        degree: r,
        edge_size: uniform.then_some(k0),
        pair_balance: lambda,
    })
}

/// 0/1 incidence matrix: `A[i][j] = 1` iff vertex `i` lies in edge `j`.
pub fn incidence_matrix(g: &BlockDesign) -> Vec<Vec<u8>> {
    let mut a = vec![vec![0u8; g.edges.len()]; g.num_vertices];
    for (j, e) in g.edges.iter().enumerate() {
        for &x in e {
            a[x][j] = 1;
        }
    }
    a
}

/// The `(c,d)`-valued design mechanism: map incidence `1 -> c`, `0 -> d`,
/// then normalize rows by `c*r + d*(b-r)`.
pub fn bd_mechanism(g: &BlockDesign, c: &Rat, d: &Rat) -> Result<Mechanism, DesignError> {
    if c.is_negative() || d.is_negative() {
        return Err(DesignError::Mechanism(MechanismError::InvalidParameter(
            "c and d must be nonnegative".into(),
        )));
    }
    let params = verify_design(g).map_err(DesignError::InvalidDesign)?;
    let b = params.num_edges;
    let r = params.degree;
    let normalizer = c * Rat::from_integer((r as i64).into())
        + d * Rat::from_integer(((b - r) as i64).into());
    if normalizer.is_zero() {
        return Err(DesignError::ZeroNormalizer);
    }
    let a = incidence_matrix(g);
    let rows: Vec<Vec<Rat>> = a
        .iter()
        .map(|row| {
            row.iter()
                .map(|&bit| if bit == 1 { c / &normalizer } else { d / &normalizer })
                .collect()
        })
        .collect();
    Ok(Mechanism::from_rationals(rows)?)
}

/// Concatenates the edge lists of two designs over the same vertex set.
pub fn concat_designs(g1: &BlockDesign, g2: &BlockDesign) -> Result<BlockDesign, DesignError> {
    if g1.num_vertices != g2.num_vertices {
        return Err(DesignError::VertexSetMismatch {
            left: g1.num_vertices,
            right: g2.num_vertices,
        });
    }
    let mut edges = g1.edges.clone();
    edges.extend(g2.edges.iter().cloned());
    Ok(BlockDesign { num_vertices: g1.num_vertices, edges })
}

/// A perfect matching of a mechanism's columns into dual pairs, each summing
/// to `pair_scale * 1`. Pairs hold the smaller index first and are sorted by
/// first index.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPairPartition {
    pub pairs: Vec<(usize, usize)>,
    pub pair_scale: Rat,
}

/// Pairs each edge with its set complement, using only the edge structure.
pub fn complement_pairing(g: &BlockDesign) -> Result<Vec<(usize, usize)>, DesignError> {
    let mut index: HashMap<&[usize], usize> = HashMap::new();
    for (j, e) in g.edges.iter().enumerate() {
        index.insert(e.as_slice(), j);
    }
    let mut paired = vec![false; g.edges.len()];
    let mut pairs = Vec::with_capacity(g.edges.len() / 2);
    for (i, e) in g.edges.iter().enumerate() {
        if paired[i] {
            continue;
        }
        let complement: Vec<usize> = (0..g.num_vertices).filter(|x| !e.contains(x)).collect();
        let &j = index
            .get(complement.as_slice())
            .ok_or(DesignError::NoDualPairing(i))?;
        if j == i || paired[j] {
            return Err(DesignError::NoDualPairing(i));
        }
        paired[i] = true;
        paired[j] = true;
        pairs.push((i.min(j), i.max(j)));
    }
    pairs.sort_unstable();
    Ok(pairs)
}

/// Validates a proposed pairing against `q` and computes the common scale.
pub fn partition_from_pairs(
    q: &Mechanism,
    pairs: Vec<(usize, usize)>,
) -> Result<DualPairPartition, DesignError> {
    let m = q.num_outputs();
    let mut seen = vec![false; m];
    for &(i, j) in &pairs {
        if i >= m || j >= m || i == j || seen[i] || seen[j] {
            return Err(DesignError::BadPairCover);
        }
        seen[i] = true;
        seen[j] = true;
    }
    if !seen.iter().all(|&s| s) {
        return Err(DesignError::BadPairCover);
    }
    let mut scale: Option<Rat> = None;
    for &(i, j) in &pairs {
        let s = q.entry(0, i) + q.entry(0, j);
        for x in 1..q.num_inputs() {
            if q.entry(x, i) + q.entry(x, j) != s {
                return Err(DesignError::PairNotConstant(i, j));
            }
        }
        match &scale {
            None => scale = Some(s),
            Some(prev) if *prev != s => return Err(DesignError::InconsistentPairScale),
            _ => {}
        }
    }
    Ok(DualPairPartition { pairs, pair_scale: scale.expect("nonempty pairing") })
}

/// Matches the columns of `q` into dual pairs by exact column comparison.
///
/// Two columns can pair iff their deviations from a constant vector are
/// exact negatives; within each deviation bucket, candidates are paired
/// smallest base against largest so that a common scale is found whenever one
/// exists.
pub fn dual_pair_partition(q: &Mechanism) -> Result<DualPairPartition, DesignError> {
    let m = q.num_outputs();
    if m % 2 != 0 {
        return Err(DesignError::OddColumnCount(m));
    }
    let columns: Vec<Vec<Rat>> = (0..m).map(|j| q.column(j)).collect();
    let deviation = |col: &[Rat]| -> Vec<Rat> {
        col.iter().map(|e| e - &col[0]).collect::<Vec<_>>()
    };
    let mut buckets: HashMap<Vec<Rat>, Vec<usize>> = HashMap::new();
    for (j, col) in columns.iter().enumerate() {
        buckets.entry(deviation(col)).or_default().push(j);
    }
    // Sort each bucket by (first entry, index); pairing ascending against
    // descending between opposite buckets keeps pair sums constant whenever a
    // constant-scale matching exists.
    for bucket in buckets.values_mut() {
        bucket.sort_by(|&a, &b| columns[a][0].cmp(&columns[b][0]).then(a.cmp(&b)));
    }
    let mut matched = vec![usize::MAX; m];
    for (dev, bucket) in &buckets {
        let negated: Vec<Rat> = dev.iter().map(|e| -e).collect();
        let partner_bucket = buckets.get(&negated).ok_or_else(|| {
            DesignError::NoDualPairing(bucket[0])
        })?;
        for (pos, &i) in bucket.iter().enumerate() {
            let j = partner_bucket[partner_bucket.len() - 1 - pos];
            if i == j {
                return Err(DesignError::NoDualPairing(i));
            }
            matched[i] = j;
        }
    }
    let mut pairs = Vec::with_capacity(m / 2);
    let mut used = vec![false; m];
    for i in 0..m {
        if used[i] {
            continue;
        }
        let j = matched[i];
        if j == usize::MAX || used[j] || matched[j] != i {
            return Err(DesignError::NoDualPairing(i));
        }
        used[i] = true;
        used[j] = true;
        pairs.push((i.min(j), i.max(j)));
    }
    pairs.sort_unstable();
    partition_from_pairs(q, pairs)
}

/// A mechanism resolved into uniform shared randomness over `[u_count]` and
/// one two-output mechanism per realization.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolution {
    pub u_count: usize,
    pub per_u: Vec<Mechanism>,
}

/// Rescales each dual pair of `q` into a row-stochastic two-output mechanism.
///
/// With `P_U` uniform over the pairs, `P_U(u) * Qu(z|x)` reproduces the
/// corresponding column entry of `q` exactly.
pub fn resolve(q: &Mechanism, partition: &DualPairPartition) -> Result<Resolution, DesignError> {
    // re-validate the pairing against this mechanism
    let partition = partition_from_pairs(q, partition.pairs.clone())?;
    let s = &partition.pair_scale;
    let per_u: Vec<Mechanism> = partition
        .pairs
        .iter()
        .map(|&(i, j)| {
            let rows: Vec<Vec<Rat>> = (0..q.num_inputs())
                .map(|x| vec![q.entry(x, i) / s, q.entry(x, j) / s])
                .collect();
            Mechanism::from_rationals(rows).map_err(DesignError::from)
        })
        .collect::<Result<_, _>>()?;
    Ok(Resolution { u_count: partition.pairs.len(), per_u })
}

impl Resolution {
    /// Reassembles the pre-designed mechanism from the resolution: column
    /// `pairs[u].0` gets `P_U(u) * Qu(0|.)` and `pairs[u].1` gets
    /// `P_U(u) * Qu(1|.)`.
    pub fn reassemble(&self, pairs: &[(usize, usize)]) -> Result<Mechanism, DesignError> {
        let v = self.per_u[0].num_inputs();
        let m = 2 * self.u_count;
        let c_rat = Rat::from_integer((self.u_count as i64).into());
        let mut rows = vec![vec![Rat::zero(); m]; v];
        for (u, &(i, j)) in pairs.iter().enumerate() {
            for (x, row) in rows.iter_mut().enumerate() {
                row[i] = self.per_u[u].entry(x, 0) / &c_rat;
                row[j] = self.per_u[u].entry(x, 1) / &c_rat;
            }
        }
        Ok(Mechanism::from_rationals(rows)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat_from_int, rat_one, rat_zero};
    use num::Signed;

    #[test]
    fn complete_design_4_2_matches_printed_matrix() {
        let g = complete_block_design(4, 2).unwrap();
        let params = verify_design(&g).unwrap();
        assert_eq!(params, DesignParams {
            num_edges: 6,
            degree: 3,
            edge_size: Some(2),
            pair_balance: 1,
        });
        let expected = [
            [1, 1, 1, 0, 0, 0],
            [1, 0, 0, 1, 1, 0],
            [0, 1, 0, 1, 0, 1],
            [0, 0, 1, 0, 1, 1],
        ];
        assert_eq!(incidence_matrix(&g), expected.map(|r| r.to_vec()).to_vec());
    }

    #[test]
    fn complete_design_edge_cases() {
        let g = complete_block_design(2, 1).unwrap();
        let params = verify_design(&g).unwrap();
        assert_eq!((params.num_edges, params.degree, params.pair_balance), (2, 1, 0));
        assert_eq!(incidence_matrix(&g), vec![vec![1, 0], vec![0, 1]]);

        let g = complete_block_design(5, 2).unwrap();
        let params = verify_design(&g).unwrap();
        assert_eq!((params.num_edges, params.degree, params.pair_balance), (10, 4, 1));
    }

    #[test]
    fn complete_design_params_match_counting_exhaustively() {
        for v in 2..=12 {
            for k in 1..v {
                let g = complete_block_design(v, k).unwrap();
                let p = verify_design(&g).unwrap();
                assert_eq!(p.num_edges as u128, binomial(v, k as isize));
                assert_eq!(p.degree as u128, binomial(v - 1, k as isize - 1));
                assert_eq!(p.edge_size, Some(k));
                assert_eq!(p.pair_balance as u128, binomial(v - 2, k as isize - 2));
                let a = incidence_matrix(&g);
                for row in &a {
                    assert_eq!(row.iter().map(|&x| x as usize).sum::<usize>(), p.degree);
                }
            }
        }
    }

    #[test]
    fn cap_error_names_the_binomial() {
        let err = complete_block_design(30, 15).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("C(30,15)") && msg.contains("155117520"), "{msg}");
    }

    #[test]
    fn union_of_complete_designs_is_rpbd() {
        let g = concat_designs(
            &complete_block_design(5, 2).unwrap(),
            &complete_block_design(5, 3).unwrap(),
        )
        .unwrap();
        let p = verify_design(&g).unwrap();
        assert_eq!(p.num_edges, 20);
        assert_eq!(p.degree, 10);
        assert_eq!(p.pair_balance, 4);
        assert_eq!(p.edge_size, None);

        let g3 = concat_designs(
            &complete_block_design(3, 1).unwrap(),
            &complete_block_design(3, 2).unwrap(),
        )
        .unwrap();
        let p3 = verify_design(&g3).unwrap();
        assert_eq!((p3.num_edges, p3.degree, p3.pair_balance), (6, 3, 1));
    }

    #[test]
    fn deleting_an_edge_breaks_regularity() {
        let g = complete_block_design(4, 2).unwrap();
        let mut edges = g.edges().to_vec();
        edges.pop();
        let broken = BlockDesign::new(4, edges);
        assert!(matches!(
            verify_design(&broken),
            Err(DesignViolation::NotRegular { .. })
        ));
    }

    #[test]
    fn vertex_set_mismatch_rejected() {
        let a = complete_block_design(4, 2).unwrap();
        let b = complete_block_design(5, 2).unwrap();
        assert!(matches!(
            concat_designs(&a, &b),
            Err(DesignError::VertexSetMismatch { .. })
        ));
    }

    #[test]
    fn design_mechanism_matches_hand_normalization() {
        let g = complete_block_design(4, 2).unwrap();
        let (c, d) = (rat_from_int(2), rat_from_int(1));
        let q = bd_mechanism(&g, &c, &d).unwrap();
        // normalizer = 2*3 + 1*3 = 9
        assert_eq!(*q.entry(0, 0), Rat::new(2.into(), 9.into()));
        assert_eq!(*q.entry(0, 3), Rat::new(1.into(), 9.into()));
        for x in 0..4 {
            let sum: Rat = q.row(x).iter().sum();
            assert_eq!(sum, rat_one());
        }
    }

    #[test]
    fn equal_values_give_uniform_rows() {
        let g = complete_block_design(4, 2).unwrap();
        let q = bd_mechanism(&g, &rat_from_int(3), &rat_from_int(3)).unwrap();
        for x in 0..4 {
            for j in 0..6 {
                assert_eq!(*q.entry(x, j), Rat::new(1.into(), 6.into()));
            }
        }
    }

    #[test]
    fn zero_normalizer_rejected() {
        let g = complete_block_design(4, 2).unwrap();
        assert!(matches!(
            bd_mechanism(&g, &rat_zero(), &rat_zero()),
            Err(DesignError::ZeroNormalizer)
        ));
    }

    #[test]
    fn example_pairing_by_complement_and_by_columns() {
        let g = complete_block_design(4, 2).unwrap();
        let pairs = complement_pairing(&g).unwrap();
        assert_eq!(pairs, vec![(0, 5), (1, 4), (2, 3)]);

        let q = bd_mechanism(&g, &rat_from_int(2), &rat_from_int(1)).unwrap();
        let partition = dual_pair_partition(&q).unwrap();
        assert_eq!(partition.pairs, pairs);
        assert_eq!(partition.pair_scale, Rat::new(1.into(), 3.into()));
    }

    #[test]
    fn diagonal_mechanism_pairs_i_with_i_plus_v() {
        let v = 3;
        let c = Rat::new(3.into(), 10.into());
        let v_rat = rat_from_int(v as i64);
        let rows: Vec<Vec<Rat>> = (0..v)
            .map(|x| {
                let mut row = vec![rat_zero(); 2 * v];
                for j in 0..v {
                    if j == x {
                        row[j] = &c / &v_rat;
                    }
                    row[v + j] = if j == x {
                        (rat_one() - &c) / &v_rat
                    } else {
                        rat_one() / &v_rat
                    };
                }
                row
            })
            .collect();
        let q = Mechanism::from_rationals(rows).unwrap();
        let partition = dual_pair_partition(&q).unwrap();
        assert_eq!(partition.pairs, vec![(0, 3), (1, 4), (2, 5)]);
        assert_eq!(partition.pair_scale, Rat::new(1.into(), 3.into()));
    }

    #[test]
    fn two_column_mechanism_is_a_single_pair() {
        let q = Mechanism::from_floats(&[vec![0.75, 0.25], vec![0.5, 0.5]]).unwrap();
        let p = dual_pair_partition(&q).unwrap();
        assert_eq!(p.pairs, vec![(0, 1)]);
        assert_eq!(p.pair_scale, rat_one());
    }

    #[test]
    fn pairing_is_stable_under_repetition() {
        let g = concat_designs(
            &complete_block_design(5, 2).unwrap(),
            &complete_block_design(5, 3).unwrap(),
        )
        .unwrap();
        let q = bd_mechanism(&g, &rat_from_int(4), &rat_from_int(1)).unwrap();
        let p1 = dual_pair_partition(&q).unwrap();
        let p2 = dual_pair_partition(&q).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(p1.pairs, complement_pairing(&g).unwrap());
    }

    #[test]
    fn unresolvable_mechanism_reports_an_error() {
        // 3 distinct columns, none summing to a constant with another
        let q = Mechanism::from_floats(&[
            vec![0.5, 0.3, 0.1, 0.1],
            vec![0.1, 0.2, 0.3, 0.4],
            vec![0.25, 0.25, 0.25, 0.25],
        ])
        .unwrap();
        assert!(dual_pair_partition(&q).is_err());
    }

    #[test]
    fn resolution_reproduces_example_exactly() {
        let g = complete_block_design(4, 2).unwrap();
        let (c, d) = (Rat::new(5.into(), 7.into()), Rat::new(2.into(), 7.into()));
        let q = bd_mechanism(&g, &c, &d).unwrap();
        let partition = dual_pair_partition(&q).unwrap();
        let res = resolve(&q, &partition).unwrap();
        assert_eq!(res.u_count, 3);
        // per-u mechanisms are b/2 = 3 times the column pairs
        for (u, &(i, j)) in partition.pairs.iter().enumerate() {
            for x in 0..4 {
                assert_eq!(*res.per_u[u].entry(x, 0), q.entry(x, i) * rat_from_int(3));
                assert_eq!(*res.per_u[u].entry(x, 1), q.entry(x, j) * rat_from_int(3));
            }
        }
        assert_eq!(res.reassemble(&partition.pairs).unwrap(), q);
    }

    #[test]
    fn edge_list_roundtrip() {
        let g = concat_designs(
            &complete_block_design(5, 2).unwrap(),
            &complete_block_design(5, 3).unwrap(),
        )
        .unwrap();
        let text = g.to_edge_list_string();
        assert!(text.starts_with("1 2\n"));
        let parsed = BlockDesign::from_edge_list_str(5, &text).unwrap();
        assert_eq!(parsed, g);
    }

    #[test]
    fn resolution_identity_for_union_design() {
        let g = concat_designs(
            &complete_block_design(5, 2).unwrap(),
            &complete_block_design(5, 3).unwrap(),
        )
        .unwrap();
        let (c, d) = (Rat::new(3.into(), 4.into()), Rat::new(1.into(), 4.into()));
        let q = bd_mechanism(&g, &c, &d).unwrap();
        let partition = dual_pair_partition(&q).unwrap();
        let res = resolve(&q, &partition).unwrap();
        assert_eq!(res.u_count, 10);
        for m in &res.per_u {
            assert!(m.is_exact());
            assert!(!m.row(0).iter().any(|e| e.is_negative()));
        }
        assert_eq!(res.reassemble(&partition.pairs).unwrap(), q);
    }
}
