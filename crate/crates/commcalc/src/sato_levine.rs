//! The generalized Sato-Levine invariant and the linking-determinant jump
//! calculus for multi-component analogues.
//!
//! Crossing changes are recorded as [`CrossingRecord`]s: which component
//! self-intersects, the linking numbers of the two lobes of the singular
//! component with every other component, and the linking number of the two
//! smoothed lobes. A [`HomotopyTrace`] accumulates an invariant value from a
//! base link through an ordered list of such records. Everything is exact
//! rational arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BetaError {
    #[error("trace format error: {0}")]
    Format(String),
    #[error("expected {expected} components, got {got}")]
    ComponentCount { expected: usize, got: usize },
    #[error("lobe linking numbers must split the linking matrix row: component {component}, index {index}")]
    LobeSplit { component: usize, index: usize },
    #[error("linking matrix must be symmetric with zero diagonal")]
    BadLinkingMatrix,
    #[error("all pairwise linking numbers must be nonzero")]
    ZeroLinking,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    BigRational::from(BigInt::from(n))
}

/// One crossing change on component `component` (0-based): `first_lobe[i]`
/// and `second_lobe[i]` are the linking numbers of the two lobes of the
/// singular component with component `i` (their sum is the ambient linking
/// number), `smoothed_linking` is the linking number of the two smoothed
/// lobes, and `sign` is the direction of the move.
#[derive(Clone, Debug)]
pub struct CrossingRecord {
    pub component: usize,
    pub first_lobe: Vec<i64>,
    pub second_lobe: Vec<i64>,
    pub smoothed_linking: i64,
    pub sign: i8,
}

/// An ordered list of crossing changes from a base link with the given
/// constant linking matrix.
#[derive(Clone, Debug)]
pub struct HomotopyTrace {
    pub components: usize,
    pub linking: Vec<Vec<i64>>,
    pub base_value: Rat,
    pub records: Vec<CrossingRecord>,
}

impl HomotopyTrace {
    pub fn new(
        linking: Vec<Vec<i64>>,
        base_value: Rat,
        records: Vec<CrossingRecord>,
    ) -> Result<HomotopyTrace, BetaError> {
        let m = linking.len();
        for (i, row) in linking.iter().enumerate() {
            if row.len() != m {
                return Err(BetaError::BadLinkingMatrix);
            }
            if row[i] != 0 {
                return Err(BetaError::BadLinkingMatrix);
            }
            for (j, &v) in row.iter().enumerate() {
                if v != linking[j][i] {
                    return Err(BetaError::BadLinkingMatrix);
                }
            }
        }
        for rec in &records {
            if rec.component >= m {
                return Err(BetaError::ComponentCount {
                    expected: m,
                    got: rec.component + 1,
                });
            }
            if rec.first_lobe.len() != m || rec.second_lobe.len() != m {
                return Err(BetaError::Dimension(format!(
                    "lobe vectors must have length {}",
                    m
                )));
            }
            if rec.sign != 1 && rec.sign != -1 {
                return Err(BetaError::Format("record sign must be +1 or -1".into()));
            }
            let x = rec.component;
            for i in 0..m {
                if i == x {
                    if rec.first_lobe[i] != 0 || rec.second_lobe[i] != 0 {
                        return Err(BetaError::LobeSplit {
                            component: x,
                            index: i,
                        });
                    }
                    continue;
                }
                if rec.first_lobe[i] + rec.second_lobe[i] != linking[x][i] {
                    return Err(BetaError::LobeSplit {
                        component: x,
                        index: i,
                    });
                }
            }
        }
        Ok(HomotopyTrace {
            components: m,
            linking,
            base_value,
            records,
        })
    }

    /// Parses the trace format: optional `m=`, `a=` (upper triangle of the
    /// linking matrix, comma separated), optional `base=` (rational), then
    /// one record per line `x p1,..,pm q1,..,qm lambda sign`. `#` starts a
    /// comment.
    pub fn parse(text: &str) -> Result<HomotopyTrace, BetaError> {
        let mut m: usize = 2;
        let mut upper: Option<Vec<i64>> = None;
        let mut base = Rat::zero();
        let mut records = Vec::new();
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(v) = line.strip_prefix("m=") {
                m = v
                    .trim()
                    .parse()
                    .map_err(|_| BetaError::Format(format!("bad m `{}`", v)))?;
            } else if let Some(v) = line.strip_prefix("a=") {
                upper = Some(parse_i64_list(v)?);
            } else if let Some(v) = line.strip_prefix("base=") {
                base = parse_rational(v.trim())?;
            } else {
                records.push(parse_record(line, m)?);
            }
        }
        let upper = upper.ok_or_else(|| BetaError::Format("missing a= line".into()))?;
        if upper.len() != m * (m - 1) / 2 {
            return Err(BetaError::Format(format!(
                "a= needs {} upper-triangle entries for m={}",
                m * (m - 1) / 2,
                m
            )));
        }
        let mut linking = vec![vec![0i64; m]; m];
        let mut it = upper.into_iter();
        for i in 0..m {
            for j in i + 1..m {
                let v = it.next().unwrap();
                linking[i][j] = v;
                linking[j][i] = v;
            }
        }
        HomotopyTrace::new(linking, base, records)
    }
}

fn parse_i64_list(text: &str) -> Result<Vec<i64>, BetaError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| BetaError::Format(format!("bad integer `{}`", t)))
        })
        .collect()
}

fn parse_rational(text: &str) -> Result<Rat, BetaError> {
    let parts: Vec<&str> = text.split('/').collect();
    let bad = || BetaError::Format(format!("bad rational `{}`", text));
    match parts.as_slice() {
        [n] => Ok(Rat::from(n.trim().parse::<BigInt>().map_err(|_| bad())?)),
        [n, d] => {
            let num = n.trim().parse::<BigInt>().map_err(|_| bad())?;
            let den = d.trim().parse::<BigInt>().map_err(|_| bad())?;
            if den.is_zero() {
                return Err(bad());
            }
            Ok(Rat::new(num, den))
        }
        _ => Err(bad()),
    }
}

fn parse_record(line: &str, m: usize) -> Result<CrossingRecord, BetaError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 5 {
        return Err(BetaError::Format(format!(
            "record needs `x p1,..,pm q1,..,qm lambda sign`, got `{}`",
            line
        )));
    }
    let x: usize = fields[0]
        .parse()
        .map_err(|_| BetaError::Format(format!("bad component `{}`", fields[0])))?;
    if x == 0 || x > m {
        return Err(BetaError::ComponentCount {
            expected: m,
            got: x,
        });
    }
    let p = parse_i64_list(fields[1])?;
    let q = parse_i64_list(fields[2])?;
    let lambda: i64 = fields[3]
        .parse()
        .map_err(|_| BetaError::Format(format!("bad lambda `{}`", fields[3])))?;
    let sign: i8 = match fields[4] {
        "+" | "+1" => 1,
        "-" | "-1" => -1,
        other => return Err(BetaError::Format(format!("bad sign `{}`", other))),
    };
    Ok(CrossingRecord {
        component: x - 1,
        first_lobe: p,
        second_lobe: q,
        smoothed_linking: lambda,
        sign,
    })
}

/// The generalized Sato-Levine invariant of a two-component trace:
/// `base + sum sign * n(l - n)` with `n` the first-lobe linking number and
/// `l` the ambient linking number.
pub fn beta_tilde(trace: &HomotopyTrace) -> Result<Rat, BetaError> {
    if trace.components != 2 {
        return Err(BetaError::ComponentCount {
            expected: 2,
            got: trace.components,
        });
    }
    let mut acc = trace.base_value.clone();
    for rec in &trace.records {
        let other = 1 - rec.component;
        let n = rec.first_lobe[other];
        let l = trace.linking[rec.component][other];
        acc += rat(rec.sign as i64) * rat(n) * rat(l - n);
    }
    Ok(acc)
}

/// The crossing-change jump of `beta(L, s)`: the determinant of the linking
/// matrix with diagonal `s`, except that row `x` carries the first-lobe
/// numbers, column `x` the second-lobe numbers, and the `(x,x)` entry the
/// smoothed-lobe linking number.
pub fn beta_jump(s: &[Rat], linking: &[Vec<i64>], rec: &CrossingRecord) -> Result<Rat, BetaError> {
    let m = linking.len();
    if s.len() != m || rec.first_lobe.len() != m || rec.second_lobe.len() != m {
        return Err(BetaError::Dimension(format!("need {} entries", m)));
    }
    let x = rec.component;
    if x >= m {
        return Err(BetaError::ComponentCount {
            expected: m,
            got: x + 1,
        });
    }
    let mut mat = vec![vec![Rat::zero(); m]; m];
    for i in 0..m {
        for j in 0..m {
            mat[i][j] = if i == x && j == x {
                rat(rec.smoothed_linking)
            } else if i == x {
                rat(rec.first_lobe[j])
            } else if j == x {
                rat(rec.second_lobe[i])
            } else if i == j {
                s[i].clone()
            } else {
                rat(linking[i][j])
            };
        }
    }
    Ok(det(mat))
}

/// `base + sum sign * jump` over the trace, for the given diagonal `s`.
pub fn beta_accumulate(trace: &HomotopyTrace, s: &[Rat]) -> Result<Rat, BetaError> {
    let mut acc = trace.base_value.clone();
    for rec in &trace.records {
        acc += rat(rec.sign as i64) * beta_jump(s, &trace.linking, rec)?;
    }
    Ok(acc)
}

/// For each component `i`, whether the principal minor of the surgery-style
/// matrix (diagonal `s`, off-diagonal linking numbers) obtained by deleting
/// row and column `i` vanishes — the invariance condition.
pub fn invariance_condition(s: &[Rat], linking: &[Vec<i64>]) -> Result<Vec<bool>, BetaError> {
    let m = linking.len();
    if s.len() != m {
        return Err(BetaError::Dimension(format!("need {} diagonal entries", m)));
    }
    let mut out = Vec::with_capacity(m);
    for skip in 0..m {
        let mut minor = Vec::new();
        for i in (0..m).filter(|&i| i != skip) {
            let mut row = Vec::new();
            for j in (0..m).filter(|&j| j != skip) {
                row.push(if i == j {
                    s[i].clone()
                } else {
                    rat(linking[i][j])
                });
            }
            minor.push(row);
        }
        out.push(det(minor).is_zero());
    }
    Ok(out)
}

/// Determinant of the full matrix with diagonal `s`.
pub fn surgery_determinant(s: &[Rat], linking: &[Vec<i64>]) -> Result<Rat, BetaError> {
    let m = linking.len();
    if s.len() != m {
        return Err(BetaError::Dimension(format!("need {} diagonal entries", m)));
    }
    let mat: Vec<Vec<Rat>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    if i == j {
                        s[i].clone()
                    } else {
                        rat(linking[i][j])
                    }
                })
                .collect()
        })
        .collect();
    Ok(det(mat))
}

/// The two special diagonals for three components with nonzero pairwise
/// linking numbers: `s_i = ±(a_ij a_ik) / a_jk`. Every principal minor
/// vanishes at both; the full determinant vanishes only at the positive one.
pub fn three_component_special_s(
    a12: i64,
    a13: i64,
    a23: i64,
    positive: bool,
) -> Result<[Rat; 3], BetaError> {
    if a12 == 0 || a13 == 0 || a23 == 0 {
        return Err(BetaError::ZeroLinking);
    }
    let sign = if positive { Rat::one() } else { -Rat::one() };
    Ok([
        sign.clone() * rat(a12) * rat(a13) / rat(a23),
        sign.clone() * rat(a12) * rat(a23) / rat(a13),
        sign * rat(a13) * rat(a23) / rat(a12),
    ])
}

fn det(mut mat: Vec<Vec<Rat>>) -> Rat {
    let n = mat.len();
    let mut acc = Rat::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&i| !mat[i][col].is_zero()) else {
            return Rat::zero();
        };
        if p != col {
            mat.swap(col, p);
            acc = -acc;
        }
        acc *= mat[col][col].clone();
        let inv = mat[col][col].recip();
        for i in col + 1..n {
            if mat[i][col].is_zero() {
                continue;
            }
            let f = mat[i][col].clone() * inv.clone();
            for j in col..n {
                let v = mat[col][j].clone() * f.clone();
                mat[i][j] -= v;
            }
        }
    }
    acc
}
