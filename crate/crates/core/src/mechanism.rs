//! Row-stochastic privacy mechanisms, privacy-constraint checks, the F
//! functional driving the trade-off lower bound, and the extreme-point
//! families of the one-bit mechanism polytope.

use crate::rational::{exp_rat, rat_from_f64, rat_one, rat_to_f64, rat_zero, Rat};
use num::{Signed, Zero};
use serde::Serialize;
use std::fmt;
use thiserror::Error;

/// Slack allowed on checks when the matrix was built from floats whose rows
/// do not sum to exactly one.
const FLOAT_VIEW_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MechanismError {
    #[error("mechanism must be at least 2x1, got {rows}x{cols}")]
    BadShape { rows: usize, cols: usize },
    #[error("ragged matrix: row {row} has {got} entries, expected {expected}")]
    RaggedRow { row: usize, got: usize, expected: usize },
    #[error("entry ({row},{col}) is outside [0,1]")]
    EntryOutOfRange { row: usize, col: usize },
    #[error("row {row} does not sum to 1 (deviation {dev:e})")]
    RowSum { row: usize, dev: f64 },
    #[error("output column {col} is all-zero")]
    ZeroColumn { col: usize },
    #[error("invalid privacy parameter: {0}")]
    InvalidParameter(String),
    #[error("{formula} is undefined at a={a}, t={t}, v={v}")]
    FormulaDomain { formula: &'static str, a: f64, t: usize, v: usize },
}

/// A privacy mechanism: a `v x m` row-stochastic matrix over exact rationals.
///
/// Rows index private inputs, columns index released symbols. A mechanism is
/// `exact` when every row sums to exactly one; float-built matrices may carry
/// up to 1e-12 of row-sum slack and all constraint checks then allow the same
/// slack.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mechanism {
    num_inputs: usize,
    num_outputs: usize,
    rows: Vec<Vec<Rat>>,
    exact: bool,
    zero_columns_allowed: bool,
}

impl Mechanism {
    /// Builds a mechanism from exact rational rows. Rows must sum to exactly
    /// one and no output column may be all-zero.
    pub fn from_rationals(rows: Vec<Vec<Rat>>) -> Result<Self, MechanismError> {
        Self::build(rows, false)
    }

    /// Like [`Mechanism::from_rationals`] but permits all-zero output
    /// columns. The F functional treats such columns as contributing zero.
    pub fn from_rationals_allowing_zero_columns(
        rows: Vec<Vec<Rat>>,
    ) -> Result<Self, MechanismError> {
        Self::build(rows, true)
    }

    /// Builds a mechanism from float rows. Entries are converted exactly;
    /// rows must sum to one within 1e-12.
    pub fn from_floats(rows: &[Vec<f64>]) -> Result<Self, MechanismError> {
        let rational_rows: Vec<Vec<Rat>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| rat_from_f64(x)).collect())
            .collect();
        Self::build(rational_rows, false)
    }

    fn build(rows: Vec<Vec<Rat>>, zero_columns_allowed: bool) -> Result<Self, MechanismError> {
        let num_inputs = rows.len();
        let num_outputs = rows.first().map_or(0, |r| r.len());
        if num_inputs < 2 || num_outputs < 1 {
            return Err(MechanismError::BadShape { rows: num_inputs, cols: num_outputs });
        }
        let slack = rat_from_f64(FLOAT_VIEW_SLACK);
        let mut exact = true;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != num_outputs {
                return Err(MechanismError::RaggedRow {
                    row: i,
                    got: row.len(),
                    expected: num_outputs,
                });
            }
            for (j, e) in row.iter().enumerate() {
                if e.is_negative() || *e > rat_one() {
                    return Err(MechanismError::EntryOutOfRange { row: i, col: j });
                }
            }
            let sum: Rat = row.iter().sum();
            if sum != rat_one() {
                let dev = (&sum - rat_one()).abs();
                if dev > slack {
                    return Err(MechanismError::RowSum { row: i, dev: rat_to_f64(&dev) });
                }
                exact = false;
            }
        }
        if !zero_columns_allowed {
            for j in 0..num_outputs {
                if rows.iter().all(|r| r[j].is_zero()) {
                    return Err(MechanismError::ZeroColumn { col: j });
                }
            }
        }
        Ok(Self { num_inputs, num_outputs, rows, exact, zero_columns_allowed })
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.num_outputs
    }

    pub fn entry(&self, input: usize, output: usize) -> &Rat {
        &self.rows[input][output]
    }

    pub fn row(&self, input: usize) -> &[Rat] {
        &self.rows[input]
    }

    pub fn column(&self, output: usize) -> Vec<Rat> {
        self.rows.iter().map(|r| r[output].clone()).collect()
    }

    pub fn column_sum(&self, output: usize) -> Rat {
        self.rows.iter().map(|r| &r[output]).sum()
    }

    /// True when every row sums to exactly one.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn has_zero_column(&self) -> bool {
        (0..self.num_outputs).any(|j| self.rows.iter().all(|r| r[j].is_zero()))
    }

    /// Float view of the matrix, materialized on demand for sampling.
    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(rat_to_f64).collect())
            .collect()
    }

    /// Entries as `p/q` strings, row-major.
    pub fn ratio_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|e| format!("{}/{}", e.numer(), e.denom())).collect())
            .collect()
    }

    fn check_slack(&self) -> Rat {
        if self.exact {
            rat_zero()
        } else {
            rat_from_f64(FLOAT_VIEW_SLACK)
        }
    }
}

/// A privacy constraint: `(eps, delta)` local differential privacy or
/// `gamma` maximal leakage. One-bit use restricts `gamma` to `(0, log 2]`,
/// enforced at construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrivacyConstraint {
    Ldp { eps: f64, delta: f64 },
    Ml { gamma: f64 },
}

impl PrivacyConstraint {
    pub fn ldp(eps: f64, delta: f64) -> Result<Self, MechanismError> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(MechanismError::InvalidParameter(format!("eps must be > 0, got {eps}")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(MechanismError::InvalidParameter(format!(
                "delta must be in [0,1], got {delta}"
            )));
        }
        Ok(Self::Ldp { eps, delta })
    }

    pub fn ml(gamma: f64) -> Result<Self, MechanismError> {
        if !(gamma > 0.0) || gamma > std::f64::consts::LN_2 {
            return Err(MechanismError::InvalidParameter(format!(
                "gamma must be in (0, log 2], got {gamma}"
            )));
        }
        Ok(Self::Ml { gamma })
    }

    /// True iff `q` satisfies this constraint.
    pub fn is_satisfied_by(&self, q: &Mechanism) -> Result<bool, MechanismError> {
        match *self {
            Self::Ldp { eps, delta } => check_ldp(q, eps, delta),
            Self::Ml { gamma } => check_ml(q, gamma),
        }
    }
}

impl fmt::Display for PrivacyConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ldp { eps, delta } => write!(f, "({eps},{delta})-LDP"),
            Self::Ml { gamma } => write!(f, "{gamma}-ML"),
        }
    }
}

/// True iff `Q(y|x) <= e^eps Q(y|x') + delta` for every output `y` and every
/// ordered input pair. Exact when the matrix is exact, 1e-12 slack otherwise.
pub fn check_ldp(q: &Mechanism, eps: f64, delta: f64) -> Result<bool, MechanismError> {
    if !(eps > 0.0) {
        return Err(MechanismError::InvalidParameter(format!("eps must be > 0, got {eps}")));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(MechanismError::InvalidParameter(format!(
            "delta must be in [0,1], got {delta}"
        )));
    }
    let e_eps = exp_rat(eps);
    let delta = rat_from_f64(delta);
    let slack = q.check_slack();
    for j in 0..q.num_outputs() {
        let col = q.column(j);
        let max = col.iter().max().expect("nonempty column");
        let min = col.iter().min().expect("nonempty column");
        // All ordered pairs reduce to the worst one.
        if *max > &e_eps * min + &delta + &slack {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True iff the column-max sum satisfies `sum_y max_x Q(y|x) <= e^gamma`.
/// Arbitrary `gamma > 0` is accepted so any mechanism can be audited.
pub fn check_ml(q: &Mechanism, gamma: f64) -> Result<bool, MechanismError> {
    if !(gamma > 0.0) {
        return Err(MechanismError::InvalidParameter(format!("gamma must be > 0, got {gamma}")));
    }
    let bound = exp_rat(gamma) + q.check_slack();
    let mut leakage = rat_zero();
    for j in 0..q.num_outputs() {
        leakage += q.column(j).into_iter().max().expect("nonempty column");
    }
    Ok(leakage <= bound)
}

/// True iff the mechanism releases at most one bit.
pub fn check_one_bit(q: &Mechanism) -> bool {
    q.num_outputs() <= 2
}

/// The functional `F(Q) = sum_w (sum_x Q(w|x)^2) / (sum_x Q(w|x))`, exactly.
///
/// All-zero columns contribute zero by convention.
pub fn f_value_exact(q: &Mechanism) -> Rat {
    let mut total = rat_zero();
    for j in 0..q.num_outputs() {
        let col = q.column(j);
        let sum: Rat = col.iter().sum();
        if sum.is_zero() {
            continue;
        }
        let sq: Rat = col.iter().map(|e| e * e).sum();
        total += sq / sum;
    }
    total
}

/// Float view of [`f_value_exact`]. Lies in `[1, m]` for any `m`-output
/// mechanism without all-zero columns.
pub fn f_value(q: &Mechanism) -> f64 {
    rat_to_f64(&f_value_exact(q))
}

/// F of a two-output mechanism whose first column lies in `{a, 1-a}^v` with
/// `t` entries equal to `a`:
/// `1 + (2a-1)^2 / (a^2 + ((t^2+(v-t)^2)/(t(v-t))) a(1-a) + (1-a)^2)`.
pub fn f_two_level_exact(a: &Rat, t: usize, v: usize) -> Result<Rat, MechanismError> {
    if a.is_negative() || *a > rat_one() || t == 0 || t >= v {
        return Err(MechanismError::FormulaDomain {
            formula: "f_two_level",
            a: rat_to_f64(a),
            t,
            v,
        });
    }
    let one = rat_one();
    let mix = Rat::new(
        ((t * t + (v - t) * (v - t)) as i64).into(),
        ((t * (v - t)) as i64).into(),
    );
    let num = (Rat::from_integer(2.into()) * a - &one) * (Rat::from_integer(2.into()) * a - &one);
    let den = a * a + mix * a * (&one - a) + (&one - a) * (&one - a);
    Ok(one + num / den)
}

pub fn f_two_level(a: f64, t: usize, v: usize) -> Result<f64, MechanismError> {
    f_two_level_exact(&rat_from_f64(a), t, v).map(|r| rat_to_f64(&r))
}

/// F of a two-output mechanism whose first column lies in `{a, 0}^v` with
/// `t >= 1` entries equal to `a`: `2 - (1-a)v / (v - at)`.
pub fn f_level_zero_exact(a: &Rat, t: usize, v: usize) -> Result<Rat, MechanismError> {
    let v_rat = Rat::from_integer((v as i64).into());
    if a.is_negative() || *a > rat_one() || t == 0 || t > v || (&v_rat - a * rat_from_int(t)).is_zero()
    {
        return Err(MechanismError::FormulaDomain {
            formula: "f_level_zero",
            a: rat_to_f64(a),
            t,
            v,
        });
    }
    let one = rat_one();
    Ok(Rat::from_integer(2.into()) - (&one - a) * &v_rat / (&v_rat - a * rat_from_int(t)))
}

pub fn f_level_zero(a: f64, t: usize, v: usize) -> Result<f64, MechanismError> {
    f_level_zero_exact(&rat_from_f64(a), t, v).map(|r| rat_to_f64(&r))
}

fn rat_from_int(x: usize) -> Rat {
    Rat::from_integer((x as i64).into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    TwoLevel,
    LevelZero,
    ZeroColumn,
}

/// One family of extreme columns of the one-bit mechanism polytope: a column
/// value pair plus the admissible counts `t` of the high value.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtremeFamily {
    pub kind: FamilyKind,
    /// High column value `a`.
    pub high: Rat,
    /// Low column value: `1 - a` for two-level, `0` for level-zero, absent
    /// for the zero column.
    pub low: Option<Rat>,
    /// Admissible counts of the high value.
    pub t_range: std::ops::RangeInclusive<usize>,
}

impl ExtremeFamily {
    /// The `v x 2` mechanism whose first column has `t` entries equal to the
    /// family's high value (placed first) and `v - t` low entries.
    pub fn materialize(&self, t: usize, v: usize) -> Result<Mechanism, MechanismError> {
        if !self.t_range.contains(&t) {
            return Err(MechanismError::InvalidParameter(format!(
                "t={t} outside family range {:?}",
                self.t_range
            )));
        }
        let low = match self.kind {
            FamilyKind::TwoLevel => rat_one() - &self.high,
            FamilyKind::LevelZero => rat_zero(),
            FamilyKind::ZeroColumn => rat_zero(),
        };
        let rows: Vec<Vec<Rat>> = (0..v)
            .map(|x| {
                let q = if matches!(self.kind, FamilyKind::ZeroColumn) {
                    rat_zero()
                } else if x < t {
                    self.high.clone()
                } else {
                    low.clone()
                };
                let rest = rat_one() - &q;
                vec![q, rest]
            })
            .collect();
        // Extreme columns may zero out a full column (a=1 with t=v, or a=0);
        // F handles those by convention.
        Mechanism::from_rationals_allowing_zero_columns(rows)
    }
}

/// The extreme-point column families of the constraint polytope.
///
/// LDP yields a two-level family at `a = (e^eps+delta)/(e^eps+1)`, a
/// level-zero family at `a = delta`, and the zero column; ML yields a
/// level-zero family at `a = e^gamma - 1` and the zero column.
pub fn extreme_column_families(c: &PrivacyConstraint, v: usize) -> Vec<ExtremeFamily> {
    match *c {
        PrivacyConstraint::Ldp { eps, delta } => {
            let e_eps = exp_rat(eps);
            let delta = rat_from_f64(delta);
            let a = (&e_eps + &delta) / (&e_eps + rat_one());
            vec![
                ExtremeFamily {
                    kind: FamilyKind::TwoLevel,
                    low: Some(rat_one() - &a),
                    high: a,
                    t_range: 0..=v,
                },
                ExtremeFamily {
                    kind: FamilyKind::LevelZero,
                    high: delta,
                    low: Some(rat_zero()),
                    t_range: 1..=v,
                },
                ExtremeFamily {
                    kind: FamilyKind::ZeroColumn,
                    high: rat_zero(),
                    low: None,
                    t_range: 0..=0,
                },
            ]
        }
        PrivacyConstraint::Ml { gamma } => {
            let mut a = exp_rat(gamma) - rat_one();
            // gamma <= log 2 implies a <= 1; guard against the exponential
            // overshooting one ulp at the boundary.
            if a > rat_one() {
                a = rat_one();
            }
            vec![
                ExtremeFamily {
                    kind: FamilyKind::LevelZero,
                    high: a,
                    low: Some(rat_zero()),
                    t_range: 1..=v,
                },
                ExtremeFamily {
                    kind: FamilyKind::ZeroColumn,
                    high: rat_zero(),
                    low: None,
                    t_range: 0..=0,
                },
            ]
        }
    }
}

/// Where the supremum of F was attained.
#[derive(Clone, Debug)]
pub struct SupFWitness {
    pub family: ExtremeFamily,
    pub t: usize,
}

/// Brute-forces `sup F` over every extreme family and every admissible `t`
/// by materializing each candidate matrix and evaluating [`f_value_exact`].
///
/// Ties break by family order (two-level, level-zero, zero column) then by
/// the smallest `t`, so witnesses are reproducible.
pub fn sup_f_exact(
    c: &PrivacyConstraint,
    v: usize,
) -> Result<(Rat, SupFWitness), MechanismError> {
    if v < 2 {
        return Err(MechanismError::InvalidParameter(format!("v must be >= 2, got {v}")));
    }
    let mut best: Option<(Rat, SupFWitness)> = None;
    for family in extreme_column_families(c, v) {
        for t in family.t_range.clone() {
            // Constant columns (two-level t in {0, v}) give F = 1 and the
            // Lemma formula degenerates there; the zero column also gives 1.
            let f = match family.kind {
                FamilyKind::TwoLevel if t == 0 || t == v => rat_one(),
                FamilyKind::ZeroColumn => rat_one(),
                _ => f_value_exact(&family.materialize(t, v)?),
            };
            if best.as_ref().is_none_or(|(b, _)| f > *b) {
                best = Some((f, SupFWitness { family: family.clone(), t }));
            }
        }
    }
    Ok(best.expect("at least one extreme family"))
}

pub fn sup_f(c: &PrivacyConstraint, v: usize) -> Result<(f64, SupFWitness), MechanismError> {
    sup_f_exact(c, v).map(|(f, w)| (rat_to_f64(&f), w))
}

/// Closed-form `sup F`: the two-level candidate at `t = v/2` (even `v`) or
/// `t = (v-1)/2` (odd `v`) against the level-zero candidate at `t = 1`.
///
/// This is the independent route the brute force is validated against.
pub fn sup_f_closed_form(c: &PrivacyConstraint, v: usize) -> Result<f64, MechanismError> {
    if v < 2 {
        return Err(MechanismError::InvalidParameter(format!("v must be >= 2, got {v}")));
    }
    let families = extreme_column_families(c, v);
    let best = match *c {
        PrivacyConstraint::Ldp { .. } => {
            let two_level = f_two_level_exact(&families[0].high, v / 2, v)?;
            if families[1].high.is_zero() {
                two_level
            } else {
                two_level.max(f_level_zero_exact(&families[1].high, 1, v)?)
            }
        }
        PrivacyConstraint::Ml { .. } => f_level_zero_exact(&families[0].high, 1, v)?,
    };
    Ok(rat_to_f64(&best))
}
