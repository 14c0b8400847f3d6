//! The four optimal shared-randomness schemes (privacy mechanism plus
//! calibrated unbiased estimator) and their conversion to plain schemes
//! without shared randomness.
//!
//! Every scheme is derived from a pre-designed stochastic matrix `Q` whose
//! columns split into dual pairs: a uniform shared variable `U` selects a
//! pair and the client releases one bit `Z` from the rescaled pair. The
//! estimator averages the normalized-likelihood vector `eta(U, Z)` and
//! removes the affine bias `E[eta(W)] = c1 theta + c2 1`.

use crate::bounds::{zeta, BoundsError};
use crate::design::{
    bd_mechanism, complement_pairing, complete_block_design, concat_designs, dual_pair_partition,
    partition_from_pairs, resolve, BlockDesign, DesignError, DualPairPartition,
};
use crate::mechanism::{check_one_bit, Mechanism, MechanismError, PrivacyConstraint};
use crate::rational::{exp_rat, rat_from_f64, rat_one, rat_to_f64, rat_zero, Rat};
use num::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("alphabet size must be >= 2, got {0}")]
    AlphabetTooSmall(usize),
    #[error("degenerate construction: c1 = 0 (estimator undefined); {0}")]
    Degenerate(String),
    #[error("eta is undefined on all-zero output column {0}")]
    ZeroColumnEta(usize),
    #[error("E[eta(W)] is not affine in theta across basis vectors (max violation {0:e})")]
    NotAffine(f64),
    #[error("input lists must have equal nonzero length (got {us} and {zs})")]
    LengthMismatch { us: usize, zs: usize },
    #[error("shared-randomness index {u} out of range (u_count = {c})")]
    SharedIndexOutOfRange { u: usize, c: usize },
    #[error("report {z} is not a bit")]
    NotABit { z: usize },
    #[error("plain scheme needs n > u_count ({c}), got n = {n}")]
    PlainTooFewClients { n: usize, c: usize },
    #[error("construction invariant violated: {0}")]
    ConstructionInvariant(String),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
}

/// Which of the four constructions a scheme uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    /// Even alphabet above the threshold: resolved half-size complete design.
    EvenCbd,
    /// Odd alphabet above the threshold: resolved union of the two
    /// middle-size complete designs.
    OddRpbd,
    /// Below the threshold: resolved diagonal matrix with level `delta`.
    DiagLdp,
    /// Maximal leakage: resolved diagonal matrix with level `e^gamma - 1`.
    DiagMl,
}

/// The normalized-likelihood vector of output `w`:
/// `eta_x(w) = Q(w|x) / sum_x' Q(w|x')`. Its components sum to one.
pub fn eta(q: &Mechanism, w: usize) -> Result<Vec<Rat>, SchemeError> {
    let sum = q.column_sum(w);
    if sum.is_zero() {
        return Err(SchemeError::ZeroColumnEta(w));
    }
    Ok((0..q.num_inputs()).map(|x| q.entry(x, w) / &sum).collect())
}

/// Closed-form calibration constants of the governing construction.
///
/// Even design: `c1 = (c-d)^2 / ((v-1)(c+d)^2)`. Odd union design with
/// `v = 2a+1`: `c1 = (c-d)^2 (a+1) / (2((a+1)c+ad)(ac+(a+1)d))`. Diagonal:
/// `c1 = c/(v-c)`, `c2 = (v-2c)/(v(v-c))` (the `d` argument is ignored).
pub fn calibration_closed_form(
    case: CaseTag,
    v: usize,
    c: &Rat,
    d: &Rat,
) -> Result<(Rat, Rat), SchemeError> {
    let v_rat = Rat::from_integer((v as i64).into());
    match case {
        CaseTag::EvenCbd => {
            if c == d {
                return Err(SchemeError::Degenerate("c = d in the even design".into()));
            }
            let diff = c - d;
            let sum = c + d;
            let v1 = &v_rat - rat_one();
            let c1 = &diff * &diff / (&v1 * &sum * &sum);
            let c2 = (&v_rat * &sum * &sum
                - Rat::from_integer(2.into()) * (c * c + d * d))
                / (&v_rat * &v1 * &sum * &sum);
            Ok((c1, c2))
        }
        CaseTag::OddRpbd => {
            if c == d {
                return Err(SchemeError::Degenerate("c = d in the union design".into()));
            }
            let alpha = Rat::from_integer((((v - 1) / 2) as i64).into());
            let alpha1 = &alpha + rat_one();
            let a_norm = &alpha1 * c + &alpha * d;
            let b_norm = &alpha * c + &alpha1 * d;
            let diff = c - d;
            let sum = c + d;
            let two = Rat::from_integer(2.into());
            let c1 = &diff * &diff * &alpha1 / (&two * &a_norm * &b_norm);
            let c2 = (&v_rat * (&alpha * &sum * &sum + &two * c * d) - &diff * &diff)
                / (&two * &v_rat * &a_norm * &b_norm);
            Ok((c1, c2))
        }
        CaseTag::DiagLdp | CaseTag::DiagMl => {
            if c.is_zero() {
                return Err(SchemeError::Degenerate("diagonal level c = 0".into()));
            }
            let two = Rat::from_integer(2.into());
            let c1 = c / (&v_rat - c);
            let c2 = (&v_rat - &two * c) / (&v_rat * (&v_rat - c));
            Ok((c1, c2))
        }
    }
}

/// Independent calibration oracle: computes `E[eta(W)]` exactly at the basis
/// distributions, solves the affine relation `E[eta(W)] = c1 theta + c2 1`,
/// and verifies consistency across every basis vector.
pub fn calibration_numeric(per_u: &[Mechanism]) -> Result<(Rat, Rat), SchemeError> {
    let c = per_u.len();
    let v = per_u[0].num_inputs();
    let c_rat = Rat::from_integer((c as i64).into());
    let tables: Vec<Vec<Vec<Rat>>> = per_u
        .iter()
        .map(|m| (0..m.num_outputs()).map(|z| eta(m, z)).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;
    // mean[x][y] = E[eta_y(W)] when theta = e_x
    let mean: Vec<Vec<Rat>> = (0..v)
        .map(|x| {
            let mut acc = vec![rat_zero(); v];
            for (m, table) in per_u.iter().zip(&tables) {
                for (z, eta_z) in table.iter().enumerate() {
                    let weight = m.entry(x, z) / &c_rat;
                    for (a, e) in acc.iter_mut().zip(eta_z) {
                        *a += &weight * e;
                    }
                }
            }
            acc
        })
        .collect();
    let c2 = mean[0][1].clone();
    let c1 = &mean[0][0] - &c2;
    let mut worst = rat_zero();
    for (x, row) in mean.iter().enumerate() {
        for (y, m) in row.iter().enumerate() {
            let expected = if y == x { &c1 + &c2 } else { c2.clone() };
            let dev = (m - expected).abs();
            if dev > worst {
                worst = dev;
            }
        }
    }
    if !worst.is_zero() {
        return Err(SchemeError::NotAffine(rat_to_f64(&worst)));
    }
    if c1.is_zero() {
        return Err(SchemeError::Degenerate("numeric calibration found c1 = 0".into()));
    }
    Ok((c1, c2))
}

/// A fully calibrated shared-randomness scheme: uniform `U` over
/// `[u_count]`, one two-output mechanism per `u`, the normalized-likelihood
/// table, and the calibration constants.
#[derive(Clone, Debug)]
pub struct SrScheme {
    v: usize,
    constraint: PrivacyConstraint,
    case: CaseTag,
    per_u: Vec<Mechanism>,
    eta_exact: Vec<[Vec<Rat>; 2]>,
    eta_sq_exact: Vec<[Vec<Rat>; 2]>,
    eta_f64: Vec<[Vec<f64>; 2]>,
    c1: Rat,
    c2: Rat,
    c1_f64: f64,
    c2_f64: f64,
    pre_designed: Mechanism,
    partition: DualPairPartition,
    design: Option<BlockDesign>,
}

/// JSON-facing summary of a scheme. Calibration constants are exported as
/// exact `p/q` strings.
#[derive(Clone, Debug, Serialize)]
pub struct SchemeDescriptor {
    pub case: CaseTag,
    pub v: usize,
    pub constraint: PrivacyConstraint,
    pub u_count: usize,
    pub c1: String,
    pub c2: String,
}

fn diagonal_matrix(v: usize, level: &Rat) -> Result<Mechanism, SchemeError> {
    let v_rat = Rat::from_integer((v as i64).into());
    let rows: Vec<Vec<Rat>> = (0..v)
        .map(|x| {
            let mut row = vec![rat_zero(); 2 * v];
            for j in 0..v {
                if j == x {
                    row[j] = level / &v_rat;
                    row[v + j] = (rat_one() - level) / &v_rat;
                } else {
                    row[v + j] = rat_one() / &v_rat;
                }
            }
            row
        })
        .collect();
    Ok(Mechanism::from_rationals(rows)?)
}

/// Builds the optimal shared-randomness scheme for the constraint.
///
/// LDP picks the diagonal construction below the threshold `zeta(v, delta)`
/// and the (parity-matched) design construction at or above it; ML always
/// uses the diagonal construction with level `e^gamma - 1`.
pub fn build_optimal_sr_scheme(
    constraint: &PrivacyConstraint,
    v: usize,
) -> Result<SrScheme, SchemeError> {
    if v < 2 {
        return Err(SchemeError::AlphabetTooSmall(v));
    }
    let (case, pre_designed, design, c_level, d_level) = match *constraint {
        PrivacyConstraint::Ml { gamma } => {
            if !(gamma > 0.0) || gamma > std::f64::consts::LN_2 {
                return Err(SchemeError::Bounds(BoundsError::GammaOutOfRange(gamma)));
            }
            let mut level = exp_rat(gamma) - rat_one();
            // gamma <= log 2 bounds the level by one; clamp a possible final
            // ulp of the exponential at the boundary.
            if level > rat_one() {
                level = rat_one();
            }
            let q = diagonal_matrix(v, &level)?;
            (CaseTag::DiagMl, q, None, level, rat_zero())
        }
        PrivacyConstraint::Ldp { eps, delta } => {
            if eps < zeta(v, delta)? {
                let level = rat_from_f64(delta);
                let q = diagonal_matrix(v, &level)?;
                (CaseTag::DiagLdp, q, None, level, rat_zero())
            } else {
                let e_eps = exp_rat(eps);
                let delta_rat = rat_from_f64(delta);
                let c = (&e_eps + &delta_rat) / (&e_eps + rat_one());
                let d = (rat_one() - &delta_rat) / (&e_eps + rat_one());
                let (case, g) = if v % 2 == 0 {
                    (CaseTag::EvenCbd, complete_block_design(v, v / 2)?)
                } else {
                    let alpha = (v - 1) / 2;
                    let g = concat_designs(
                        &complete_block_design(v, alpha)?,
                        &complete_block_design(v, alpha + 1)?,
                    )?;
                    (CaseTag::OddRpbd, g)
                };
                let q = bd_mechanism(&g, &c, &d)?;
                (case, q, Some(g), c, d)
            }
        }
    };

    let partition = match &design {
        Some(g) => partition_from_pairs(&pre_designed, complement_pairing(g)?)?,
        None => dual_pair_partition(&pre_designed)?,
    };
    let resolution = resolve(&pre_designed, &partition)?;

    for (u, m) in resolution.per_u.iter().enumerate() {
        if !check_one_bit(m) || !constraint.is_satisfied_by(m)? {
            return Err(SchemeError::ConstructionInvariant(format!(
                "per-u mechanism {u} fails its privacy or one-bit check"
            )));
        }
    }

    let (c1, c2) = calibration_closed_form(case, v, &c_level, &d_level)?;

    let eta_exact: Vec<[Vec<Rat>; 2]> = resolution
        .per_u
        .iter()
        .map(|m| Ok([eta(m, 0)?, eta(m, 1)?]))
        .collect::<Result<_, SchemeError>>()?;
    let eta_sq_exact: Vec<[Vec<Rat>; 2]> = eta_exact
        .iter()
        .map(|[a, b]| {
            [a.iter().map(|e| e * e).collect(), b.iter().map(|e| e * e).collect()]
        })
        .collect();
    let eta_f64: Vec<[Vec<f64>; 2]> = eta_exact
        .iter()
        .map(|[a, b]| [a.iter().map(rat_to_f64).collect(), b.iter().map(rat_to_f64).collect()])
        .collect();

    Ok(SrScheme {
        v,
        constraint: *constraint,
        case,
        per_u: resolution.per_u,
        eta_exact,
        eta_sq_exact,
        eta_f64,
        c1_f64: rat_to_f64(&c1),
        c2_f64: rat_to_f64(&c2),
        c1,
        c2,
        pre_designed,
        partition,
        design,
    })
}

impl SrScheme {
    pub fn v(&self) -> usize {
        self.v
    }

    pub fn constraint(&self) -> &PrivacyConstraint {
        &self.constraint
    }

    pub fn case(&self) -> CaseTag {
        self.case
    }

    /// Size of the shared-randomness alphabet; `P_U` is uniform over it.
    pub fn u_count(&self) -> usize {
        self.per_u.len()
    }

    pub fn per_u(&self) -> &[Mechanism] {
        &self.per_u
    }

    pub fn c1_exact(&self) -> &Rat {
        &self.c1
    }

    pub fn c2_exact(&self) -> &Rat {
        &self.c2
    }

    pub fn c1(&self) -> f64 {
        self.c1_f64
    }

    pub fn c2(&self) -> f64 {
        self.c2_f64
    }

    pub fn pre_designed(&self) -> &Mechanism {
        &self.pre_designed
    }

    pub fn partition(&self) -> &DualPairPartition {
        &self.partition
    }

    pub fn design(&self) -> Option<&BlockDesign> {
        self.design.as_ref()
    }

    pub fn eta_exact(&self, u: usize, z: usize) -> &[Rat] {
        &self.eta_exact[u][z]
    }

    pub fn eta_f64(&self, u: usize, z: usize) -> &[f64] {
        &self.eta_f64[u][z]
    }

    pub fn descriptor(&self) -> SchemeDescriptor {
        SchemeDescriptor {
            case: self.case,
            v: self.v,
            constraint: self.constraint,
            u_count: self.u_count(),
            c1: format!("{}/{}", self.c1.numer(), self.c1.denom()),
            c2: format!("{}/{}", self.c2.numer(), self.c2.denom()),
        }
    }

    /// The unbiased estimate from observed shared values and reports:
    /// `(1/c1)((1/n) sum_i eta(u_i, z_i) - c2 1)`. Components sum to one up
    /// to rounding. The fold is sequential left-to-right, so the result is
    /// reproducible.
    pub fn estimate(&self, us: &[usize], zs: &[u8]) -> Result<Vec<f64>, SchemeError> {
        if us.is_empty() || us.len() != zs.len() {
            return Err(SchemeError::LengthMismatch { us: us.len(), zs: zs.len() });
        }
        let mut acc = vec![0.0f64; self.v];
        for (&u, &z) in us.iter().zip(zs) {
            if u >= self.u_count() {
                return Err(SchemeError::SharedIndexOutOfRange { u, c: self.u_count() });
            }
            if z > 1 {
                return Err(SchemeError::NotABit { z: z as usize });
            }
            let row = &self.eta_f64[u][z as usize];
            for (a, e) in acc.iter_mut().zip(row) {
                *a += e;
            }
        }
        let n = us.len() as f64;
        Ok(acc
            .into_iter()
            .map(|s| (s / n - self.c2_f64) / self.c1_f64)
            .collect())
    }

    /// `P(Z = 0 | U = u)` under `theta` for every `u`. The complement
    /// probability is `1 - p` since the per-u rows are stochastic.
    fn report_weights(&self, theta: &[Rat]) -> Vec<Rat> {
        self.per_u
            .iter()
            .map(|m| (0..self.v).map(|x| m.entry(x, 0) * &theta[x]).sum())
            .collect()
    }

    /// `E[eta(W)]` under `theta`, exactly: weights
    /// `P(u,z) = (1/C) sum_x Q_u(z|x) theta_x`.
    pub fn eta_mean_exact(&self, theta: &[Rat]) -> Vec<Rat> {
        let c_rat = Rat::from_integer((self.u_count() as i64).into());
        let mut acc = vec![rat_zero(); self.v];
        for (p0, table) in self.report_weights(theta).into_iter().zip(&self.eta_exact) {
            let p1 = rat_one() - &p0;
            for (p, eta_z) in [(p0, &table[0]), (p1, &table[1])] {
                for (a, e) in acc.iter_mut().zip(eta_z) {
                    *a += &p * e;
                }
            }
        }
        acc.into_iter().map(|a| a / &c_rat).collect()
    }

    /// `Var(eta_x(W))` for every `x` under `theta`, exactly.
    pub fn eta_var_exact(&self, theta: &[Rat]) -> Vec<Rat> {
        let c_rat = Rat::from_integer((self.u_count() as i64).into());
        let mut first = vec![rat_zero(); self.v];
        let mut second = vec![rat_zero(); self.v];
        let weights = self.report_weights(theta);
        for (u, p0) in weights.into_iter().enumerate() {
            let p1 = rat_one() - &p0;
            for (p, z) in [(p0, 0usize), (p1, 1usize)] {
                let eta_z = &self.eta_exact[u][z];
                let eta_sq = &self.eta_sq_exact[u][z];
                for x in 0..self.v {
                    first[x] += &p * &eta_z[x];
                    second[x] += &p * &eta_sq[x];
                }
            }
        }
        first
            .into_iter()
            .zip(second)
            .map(|(f, s)| {
                let mean = f / &c_rat;
                s / &c_rat - &mean * &mean
            })
            .collect()
    }

    /// `Var(eta_x(u, Z))` for every `x`, conditioned on a fixed `u`, exactly.
    pub fn eta_var_given_u(&self, u: usize, theta: &[Rat]) -> Vec<Rat> {
        let m = &self.per_u[u];
        let p0: Rat = (0..self.v).map(|x| m.entry(x, 0) * &theta[x]).sum();
        let p1 = rat_one() - &p0;
        let mut out = Vec::with_capacity(self.v);
        for x in 0..self.v {
            let first = &p0 * &self.eta_exact[u][0][x] + &p1 * &self.eta_exact[u][1][x];
            let second = &p0 * &self.eta_sq_exact[u][0][x] + &p1 * &self.eta_sq_exact[u][1][x];
            out.push(second - &first * &first);
        }
        out
    }

    /// Exact expectation of the estimator under `theta` (no sampling).
    /// Equals `theta` componentwise for every distribution.
    pub fn estimate_expectation_exact(&self, theta: &[Rat]) -> Vec<Rat> {
        self.eta_mean_exact(theta)
            .into_iter()
            .map(|m| (m - &self.c2) / &self.c1)
            .collect()
    }
}

/// A plain scheme: client `i` (0-based) uses the per-u mechanism
/// `i mod u_count` of the base scheme.
#[derive(Clone, Debug)]
pub struct PlainScheme<'a> {
    base: &'a SrScheme,
    n: usize,
}

/// Round-robin conversion; requires more clients than pairs.
pub fn to_plain_scheme(base: &SrScheme, n: usize) -> Result<PlainScheme<'_>, SchemeError> {
    if n <= base.u_count() {
        return Err(SchemeError::PlainTooFewClients { n, c: base.u_count() });
    }
    Ok(PlainScheme { base, n })
}

impl<'a> PlainScheme<'a> {
    pub fn base(&self) -> &'a SrScheme {
        self.base
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Mechanism index used by 0-based client `i`.
    pub fn assignment(&self, i: usize) -> usize {
        i % self.base.u_count()
    }

    /// The block estimator: with `C = u_count` and `B = floor(n/C)` full
    /// blocks, `(1/c1)((1/B) sum_i (1/C) sum_j eta(j, y_{iC+j}) - c2 1)`.
    /// Trailing `n mod C` reports are ignored.
    pub fn estimate(&self, ys: &[u8]) -> Result<Vec<f64>, SchemeError> {
        if ys.len() != self.n {
            return Err(SchemeError::LengthMismatch { us: self.n, zs: ys.len() });
        }
        let c = self.base.u_count();
        let blocks = self.n / c;
        let mut acc = vec![0.0f64; self.base.v];
        for block in 0..blocks {
            for j in 0..c {
                let z = ys[block * c + j];
                if z > 1 {
                    return Err(SchemeError::NotABit { z: z as usize });
                }
                let row = &self.base.eta_f64[j][z as usize];
                for (a, e) in acc.iter_mut().zip(row) {
                    *a += e;
                }
            }
        }
        let scale = (blocks * c) as f64;
        Ok(acc
            .into_iter()
            .map(|s| (s / scale - self.base.c2_f64) / self.base.c1_f64)
            .collect())
    }

    /// Exact expectation of the block estimator under `theta`, computed
    /// through the per-mechanism law of `Y_j`. Equals `theta`.
    pub fn estimate_expectation_exact(&self, theta: &[Rat]) -> Vec<Rat> {
        let c = self.base.u_count();
        let c_rat = Rat::from_integer((c as i64).into());
        let mut acc = vec![rat_zero(); self.base.v];
        for j in 0..c {
            let m = &self.base.per_u[j];
            for (z, eta_z) in self.base.eta_exact[j].iter().enumerate() {
                let p: Rat = (0..self.base.v).map(|x| m.entry(x, z) * &theta[x]).sum();
                for (a, e) in acc.iter_mut().zip(eta_z) {
                    *a += &p * e;
                }
            }
        }
        acc.into_iter()
            .map(|s| (s / &c_rat - &self.base.c2) / &self.base.c1)
            .collect()
    }
}
