//! Probability tables: strictly positive distributions, joint tables and
//! row-stochastic conditional tables with per-row sample counters.

use std::fmt::Write as _;

use crate::error::{dim, Error, Result};
use crate::scalar::Scalar;

/// Lower bound kept on every entry of a learned distribution.
pub const PROB_FLOOR: f64 = 1e-6;

/// Tolerance on "sums to one". 1e-9 for `f64`, a few ulps-worth for `f32`.
pub fn sum_tolerance<T: Scalar>() -> T {
    T::of(1e-9).max(T::epsilon() * T::of(64.0))
}

/// Raises every entry below `floor` to `floor` and rescales the remaining
/// entries so the slice sums to one. Entries that the rescaling pushes below
/// the floor are pinned in turn, so on return every entry is `>= floor`.
pub fn floor_project<T: Scalar>(row: &mut [T], floor: T) {
    let n = row.len();
    if n == 0 {
        return;
    }
    let mut pinned = vec![false; n];
    loop {
        for (x, pin) in row.iter_mut().zip(pinned.iter_mut()) {
            if !*pin && !(*x >= floor) {
                *pin = true;
                *x = floor;
            }
        }
        let n_pinned = pinned.iter().filter(|p| **p).count();
        let free: T = row
            .iter()
            .zip(&pinned)
            .filter(|(_, p)| !**p)
            .map(|(x, _)| *x)
            .sum();
        let target = T::one() - T::count(n_pinned as u64) * floor;
        if n_pinned == n || free <= T::zero() || target <= T::zero() {
            let u = T::one() / T::count(n as u64);
            row.iter_mut().for_each(|x| *x = u);
            return;
        }
        let scale = target / free;
        let mut dipped = false;
        for (x, pin) in row.iter_mut().zip(&pinned) {
            if !*pin {
                *x *= scale;
                dipped |= *x < floor;
            }
        }
        if !dipped {
            return;
        }
    }
}

fn check_simplex<T: Scalar>(probs: &[T], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution(format!("{what}: empty support")));
    }
    if let Some(x) = probs.iter().find(|x| !(**x >= T::zero()) || !x.is_finite()) {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entry {x} is not a probability"
        )));
    }
    let total: T = probs.iter().copied().sum();
    if (total - T::one()).abs() > sum_tolerance::<T>() {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entries sum to {total}"
        )));
    }
    Ok(())
}

/// Strictly positive probability vector on `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution<T> {
    probs: Vec<T>,
}

impl<T: Scalar> DiscreteDistribution<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        check_simplex(&probs, "distribution")?;
        if probs.iter().any(|x| *x <= T::zero()) {
            return Err(Error::InvalidDistribution(
                "distribution must be strictly positive".into(),
            ));
        }
        Ok(Self { probs })
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0, "uniform distribution over an empty set");
        Self {
            probs: vec![T::one() / T::count(len as u64); len],
        }
    }

    /// Normalizes non-negative weights and applies the probability floor.
    pub fn from_weights(weights: &[T]) -> Result<Self> {
        let total: T = weights.iter().copied().sum();
        if weights.is_empty() || !(total > T::zero()) || weights.iter().any(|w| *w < T::zero()) {
            return Err(Error::InvalidDistribution(
                "weights must be non-negative with positive mass".into(),
            ));
        }
        let mut probs: Vec<T> = weights.iter().map(|w| *w / total).collect();
        floor_project(&mut probs, T::of(PROB_FLOOR));
        Ok(Self { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> T {
        self.probs[i]
    }

    /// Mutable access for in-crate update rules, which must restore the
    /// invariants (normally via [`floor_project`]) before returning.
    pub(crate) fn probs_mut(&mut self) -> &mut [T] {
        &mut self.probs
    }
}

/// Joint distribution `p(x, y)` stored row-major with `x` as the row index.
/// For predictive information the rows are the next sensor state `s'` and
/// the columns the current state `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable<T> {
    rows: usize,
    cols: usize,
    probs: Vec<T>,
}

impl<T: Scalar> JointTable<T> {
    pub fn new(rows: usize, cols: usize, probs: Vec<T>) -> Result<Self> {
        dim("joint table entries", rows * cols, probs.len())?;
        check_simplex(&probs, "joint table")?;
        Ok(Self { rows, cols, probs })
    }

    /// Empirical joint from co-occurrence counts (row-major, same layout).
    pub fn from_counts(rows: usize, cols: usize, counts: &[u64]) -> Result<Self> {
        dim("joint count entries", rows * cols, counts.len())?;
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidDistribution(
                "joint counts are all zero".into(),
            ));
        }
        let total = T::count(total);
        let probs = counts.iter().map(|c| T::count(*c) / total).collect();
        Ok(Self { rows, cols, probs })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.probs[row * self.cols + col]
    }

    pub fn row_marginal(&self) -> Vec<T> {
        self.probs
            .chunks(self.cols)
            .map(|r| r.iter().copied().sum())
            .collect()
    }

    pub fn col_marginal(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.cols];
        for r in self.probs.chunks(self.cols) {
            for (acc, x) in m.iter_mut().zip(r) {
                *acc += *x;
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut probs = Vec::with_capacity(self.probs.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                probs.push(self.get(r, c));
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            probs,
        }
    }
}

/// Row-stochastic table `t(outcome | condition)` with one sample counter per
/// row. Houses both the policy `α(a|s)` and the world model `δ(s'|s,a)`; the
/// world model uses the row index `s * n_actions + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
    counters: Vec<u64>,
}

impl<T: Scalar> ConditionalTable<T> {
    pub fn uniform(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty conditional table");
        Self {
            rows,
            cols,
            data: vec![T::one() / T::count(cols as u64); rows * cols],
            counters: vec![0; rows],
        }
    }

    /// Builds a table from explicit rows, checking row-stochasticity.
    /// Entries may be zero here; learners apply the floor on adoption.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n_rows = rows.len();
        if n_rows == 0 {
            return Err(Error::InvalidDistribution(
                "conditional table has no rows".into(),
            ));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(n_rows * cols);
        for r in &rows {
            dim("conditional table row width", cols, r.len())?;
            check_simplex(r, "conditional table row")?;
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: n_rows,
            cols,
            data,
            counters: vec![0; n_rows],
        })
    }

    pub fn with_counters(mut self, counters: Vec<u64>) -> Result<Self> {
        dim("counters", self.rows, counters.len())?;
        self.counters = counters;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub(crate) fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn counters(&self) -> &[u64] {
        &self.counters
    }

    pub fn counter(&self, r: usize) -> u64 {
        self.counters[r]
    }

    pub(crate) fn counter_mut(&mut self, r: usize) -> &mut u64 {
        &mut self.counters[r]
    }

    /// Applies the probability floor to every row that has an entry below it.
    /// Rows already above the floor are left bit-for-bit untouched.
    pub fn enforce_floor(&mut self) {
        let floor = T::of(PROB_FLOOR);
        for r in 0..self.rows {
            let row = self.row_mut(r);
            if row.iter().any(|x| *x < floor) {
                floor_project(row, floor);
            }
        }
    }

    /// Plain-text form: `table <rows> <cols>`, one row per line, then a
    /// `counters <rows>` header followed by the counters on one line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "table {} {}", self.rows, self.cols).unwrap();
        for r in 0..self.rows {
            let line: Vec<String> = self.row(r).iter().map(|x| format!("{:.16e}", x)).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
        writeln!(out, "counters {}", self.rows).unwrap();
        let line: Vec<String> = self.counters.iter().map(|c| c.to_string()).collect();
        writeln!(out, "{}", line.join(" ")).unwrap();
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let mut next = |expect: &str| {
            lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("unexpected end of input, expected {expect}"),
            })
        };

        let (ln, header) = next("table header")?;
        let (rows, cols) = match header.split_whitespace().collect::<Vec<_>>()[..] {
            ["table", r, c] => (parse_usize(r, ln)?, parse_usize(c, ln)?),
            _ => {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("bad table header `{header}`"),
                })
            }
        };
        let mut table_rows = Vec::with_capacity(rows);
        for _ in 0..rows {
            let (ln, line) = next("table row")?;
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<T>().map_err(|_| Error::Parse {
                        line: ln,
                        msg: format!("bad number `{tok}`"),
                    })
                })
                .collect::<Result<Vec<T>>>()?;
            if row.len() != cols {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("expected {cols} entries, found {}", row.len()),
                });
            }
            table_rows.push(row);
        }
        let (ln, header) = next("counters header")?;
        match header.split_whitespace().collect::<Vec<_>>()[..] {
            ["counters", n] if parse_usize(n, ln)? == rows => {}
            _ => {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("bad counters header `{header}`"),
                })
            }
        }
        let (ln, line) = next("counters")?;
        let counters = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<u64>().map_err(|_| Error::Parse {
                    line: ln,
                    msg: format!("bad counter `{tok}`"),
                })
            })
            .collect::<Result<Vec<u64>>>()?;
        if counters.len() != rows {
            return Err(Error::Parse {
                line: ln,
                msg: format!("expected {rows} counters, found {}", counters.len()),
            });
        }
        Self::from_rows(table_rows)?.with_counters(counters)
    }
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad count `{tok}`"),
    })
}
