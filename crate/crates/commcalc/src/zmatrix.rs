//! Exact integer matrices: row Hermite normal form, rank, lattice indices,
//! and a small rational solver used for the leading-part linear systems.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Dense row-major matrix over the integers.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IntMat {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMat {
    pub fn zero(rows: usize, cols: usize) -> IntMat {
        IntMat {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn from_rows(cols: usize, rows: Vec<Vec<BigInt>>) -> IntMat {
        let mut m = IntMat::zero(rows.len(), cols);
        for (i, r) in rows.into_iter().enumerate() {
            assert_eq!(r.len(), cols);
            for (j, v) in r.into_iter().enumerate() {
                m.data[i * cols + j] = v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// row[a] -= f * row[b]
    fn sub_scaled(&mut self, a: usize, b: usize, f: &BigInt) {
        if f.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let v = &self.data[b * self.cols + j] * f;
            self.data[a * self.cols + j] -= v;
        }
    }

    fn negate_row(&mut self, a: usize) {
        for j in 0..self.cols {
            let v = &mut self.data[a * self.cols + j];
            *v = -std::mem::take(v);
        }
    }

    /// Row-style Hermite normal form: returns the canonical matrix (zero rows
    /// dropped) together with the pivot column of each remaining row. Pivots
    /// are positive and entries above each pivot lie in `[0, pivot)`.
    pub fn hermite(&self) -> (IntMat, Vec<usize>) {
        let mut m = self.clone();
        let mut pivot_cols = Vec::new();
        let mut r = 0;
        for col in 0..m.cols {
            // Euclidean elimination below row r at this column.
            loop {
                let mut best: Option<usize> = None;
                for i in r..m.rows {
                    if !m.at(i, col).is_zero() {
                        best = match best {
                            None => Some(i),
                            Some(b) if m.at(i, col).abs() < m.at(b, col).abs() => Some(i),
                            other => other,
                        };
                    }
                }
                let Some(p) = best else { break };
                m.swap_rows(r, p);
                let mut done = true;
                for i in r + 1..m.rows {
                    if !m.at(i, col).is_zero() {
                        let f = m.at(i, col) / m.at(r, col);
                        m.sub_scaled(i, r, &f);
                        if !m.at(i, col).is_zero() {
                            done = false;
                        }
                    }
                }
                if done {
                    break;
                }
            }
            if r < m.rows && !m.at(r, col).is_zero() {
                if m.at(r, col).is_negative() {
                    m.negate_row(r);
                }
                pivot_cols.push(col);
                r += 1;
                if r == m.rows {
                    break;
                }
            }
        }
        // Reduce entries above each pivot into [0, pivot); pivots are
        // positive, so floor division is the Euclidean quotient.
        for (i, &col) in pivot_cols.iter().enumerate() {
            for above in 0..i {
                let f = num_integer::Integer::div_floor(m.at(above, col), m.at(i, col));
                m.sub_scaled(above, i, &f);
            }
        }
        let rank = pivot_cols.len();
        let data = m.data[..rank * m.cols].to_vec();
        (
            IntMat {
                rows: rank,
                cols: m.cols,
                data,
            },
            pivot_cols,
        )
    }

    pub fn rank(&self) -> usize {
        self.hermite().1.len()
    }

    /// Index of the row lattice inside `Z^cols`: the product of the Hermite
    /// pivots when the lattice has full rank, `None` otherwise.
    pub fn lattice_index(&self) -> Option<BigInt> {
        let (h, pivots) = self.hermite();
        if pivots.len() != self.cols {
            return None;
        }
        let mut idx = BigInt::one();
        for (i, &c) in pivots.iter().enumerate() {
            idx *= h.at(i, c);
        }
        Some(idx)
    }
}

/// Solves `x * M = t` for integer `x` given rows `M` with independent rows.
///
/// Built once per coefficient matrix: picks pivot columns, inverts the pivot
/// submatrix over the rationals, and keeps the adjugate so each solve is
/// integer arithmetic plus exact divisions. Each solve verifies the full
/// system, so inconsistent targets are detected.
#[derive(Clone, Debug)]
pub struct RowSolver {
    rows: Vec<Vec<BigInt>>,
    pivot_cols: Vec<usize>,
    /// Adjugate of the pivot submatrix, row-major k x k.
    adj: Vec<BigInt>,
    det: BigInt,
}

impl RowSolver {
    /// `None` if the rows are linearly dependent.
    pub fn new(rows: Vec<Vec<BigInt>>) -> Option<RowSolver> {
        let k = rows.len();
        assert!(k > 0);
        let cols = rows[0].len();
        // Rational Gauss to find pivot columns.
        let mut work: Vec<Vec<BigRational>> = rows
            .iter()
            .map(|r| r.iter().map(|v| BigRational::from(v.clone())).collect())
            .collect();
        let mut pivot_cols = Vec::with_capacity(k);
        let mut row = 0;
        for col in 0..cols {
            let Some(p) = (row..k).find(|&i| !work[i][col].is_zero()) else {
                continue;
            };
            work.swap(row, p);
            let inv = work[row][col].recip();
            for i in 0..k {
                if i != row && !work[i][col].is_zero() {
                    let f = &work[i][col] * &inv;
                    for j in col..cols {
                        let v = &work[row][j] * &f;
                        work[i][j] -= v;
                    }
                }
            }
            pivot_cols.push(col);
            row += 1;
            if row == k {
                break;
            }
        }
        if pivot_cols.len() != k {
            return None;
        }
        // Invert the k x k pivot submatrix over the rationals.
        let mut a: Vec<Vec<BigRational>> = (0..k)
            .map(|i| {
                pivot_cols
                    .iter()
                    .map(|&c| BigRational::from(rows[i][c].clone()))
                    .collect()
            })
            .collect();
        let mut inv: Vec<Vec<BigRational>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        if i == j {
                            BigRational::one()
                        } else {
                            BigRational::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        let mut det = BigRational::one();
        for col in 0..k {
            let p = (col..k)
                .find(|&i| !a[i][col].is_zero())
                .expect("invertible");
            if p != col {
                a.swap(col, p);
                inv.swap(col, p);
                det = -det;
            }
            det *= &a[col][col];
            let scale = a[col][col].recip();
            for j in 0..k {
                a[col][j] *= &scale;
                inv[col][j] *= &scale;
            }
            for i in 0..k {
                if i != col && !a[i][col].is_zero() {
                    let f = a[i][col].clone();
                    for j in 0..k {
                        let va = &a[col][j] * &f;
                        a[i][j] -= va;
                        let vi = &inv[col][j] * &f;
                        inv[i][j] -= vi;
                    }
                }
            }
        }
        debug_assert!(det.is_integer());
        let det = det.to_integer();
        // adj = det * inverse, entrywise integral.
        let mut adj = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                let v = &inv[i][j] * BigRational::from(det.clone());
                debug_assert!(v.is_integer());
                adj.push(v.to_integer());
            }
        }
        Some(RowSolver {
            rows,
            pivot_cols,
            adj,
            det,
        })
    }

    pub fn pivot_cols(&self) -> &[usize] {
        &self.pivot_cols
    }

    /// Returns integer `x` with `x * M = t`, or `None` when no such integer
    /// vector exists.
    pub fn solve(&self, t: &[BigInt]) -> Option<Vec<BigInt>> {
        let k = self.rows.len();
        let cols = self.rows[0].len();
        assert_eq!(t.len(), cols);
        // x = t_J * adj(P) / det, with P the pivot submatrix.
        let mut x = Vec::with_capacity(k);
        for i in 0..k {
            let mut acc = BigInt::zero();
            for (jj, &c) in self.pivot_cols.iter().enumerate() {
                acc += &t[c] * &self.adj[jj * k + i];
            }
            let (q, r) = num_integer::Integer::div_rem(&acc, &self.det);
            if !r.is_zero() {
                return None;
            }
            x.push(q);
        }
        // Verify the full system; targets outside the row space fail here.
        for c in 0..cols {
            let mut acc = BigInt::zero();
            for i in 0..k {
                acc += &x[i] * &self.rows[i][c];
            }
            if acc != t[c] {
                return None;
            }
        }
        Some(x)
    }
}
