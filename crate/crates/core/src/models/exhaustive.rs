//! Exact minimization of empirical 0-1 risk over affine halfspaces.
//!
//! An optimal halfspace can be moved, without changing any label, until its
//! boundary passes through a maximal affinely independent set of data points
//! (after restricting to the affine hull of the data). Points lying on that
//! boundary can then be labelled by any halfspace *within* the boundary, so the
//! search enumerates every hyperplane through `r` distinct points, adds the
//! off-plane errors for both orientations, and recurses on the on-plane points.
//! Constant classifiers are always candidates. Each returned solution classifies
//! every distinct point strictly, so the `margin >= 0` rule is unambiguous.
//!
//! Ties are broken by lower error, then the lexicographically smallest unit-norm
//! `(w, b)` vector.

use std::cmp::Ordering;
use std::collections::HashSet;

use itertools::Itertools;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Largest encoded dimension accepted.
pub const MAX_ENCODED_DIM: usize = 4;
/// Largest number of training rows accepted.
pub const MAX_ROWS: usize = 500;
/// Cap on candidate point subsets at any recursion level.
const MAX_SUBSETS: u128 = 5_000_000;

#[derive(Clone, Debug)]
pub(crate) struct Solution {
    /// `dim + 1` weights, intercept last.
    pub weights: Vec<f64>,
    pub errors: usize,
}

#[derive(Clone, Debug)]
struct Candidate {
    errors: usize,
    w: Vec<f64>,
    b: f64,
}

impl Candidate {
    fn key(&self) -> Vec<f64> {
        let norm = (self.w.iter().map(|v| v * v).sum::<f64>() + self.b * self.b).sqrt();
        self.w.iter().chain(std::iter::once(&self.b)).map(|v| v / norm).collect()
    }

    fn better_than(&self, other: &Candidate) -> bool {
        match self.errors.cmp(&other.errors) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => {
                for (a, b) in self.key().iter().zip(other.key()) {
                    match a.total_cmp(&b) {
                        Ordering::Less => return true,
                        Ordering::Greater => return false,
                        Ordering::Equal => {}
                    }
                }
                false
            }
        }
    }
}

/// Distinct points with the count of rows of each label sitting on them.
struct Points {
    coords: Vec<Vec<f64>>,
    pos: Vec<usize>,
    neg: Vec<usize>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

pub(crate) fn fit(rows: &[Vec<f64>], labels: &[i8]) -> Result<Solution> {
    let dim = rows.first().map_or(0, Vec::len);
    if dim > MAX_ENCODED_DIM {
        return Err(Error::SearchTooLarge(format!("encoded dimension {dim} exceeds {MAX_ENCODED_DIM}")));
    }
    if rows.len() > MAX_ROWS {
        return Err(Error::SearchTooLarge(format!("{} rows exceed {MAX_ROWS}", rows.len())));
    }
    let mut points = Points { coords: Vec::new(), pos: Vec::new(), neg: Vec::new() };
    let mut index = std::collections::HashMap::new();
    for (r, &y) in rows.iter().zip(labels) {
        // +0.0 normalizes -0.0 so both map to the same key.
        let key: Vec<u64> = r.iter().map(|v| (v + 0.0).to_bits()).collect();
        let i = *index.entry(key).or_insert_with(|| {
            points.coords.push(r.clone());
            points.pos.push(0);
            points.neg.push(0);
            points.coords.len() - 1
        });
        if y > 0 {
            points.pos[i] += 1;
        } else {
            points.neg[i] += 1;
        }
    }
    let best = solve(&points)?;
    let mut weights = best.w;
    weights.push(best.b);
    // Recount on the raw rows so the reported error is what the model actually does.
    let errors = rows
        .iter()
        .zip(labels)
        .filter(|(r, &y)| {
            let m = dot(&weights[..dim], r) + weights[dim];
            (m >= 0.0) != (y > 0)
        })
        .count();
    if errors != best.errors {
        log::warn!("0-1 search: constructed model makes {errors} errors, search claimed {}", best.errors);
    }
    Ok(Solution { weights, errors })
}

/// Orthonormal basis of the affine hull of `coords`, anchored at the first point.
fn affine_basis(coords: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let origin = &coords[0];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for p in &coords[1..] {
        let mut v: Vec<f64> = p.iter().zip(origin).map(|(a, b)| a - b).collect();
        for _ in 0..2 {
            for e in &basis {
                let c = dot(&v, e);
                for (vi, ei) in v.iter_mut().zip(e) {
                    *vi -= c * ei;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > tol {
            basis.push(v.into_iter().map(|x| x / norm).collect());
            if basis.len() == origin.len() {
                break;
            }
        }
    }
    basis
}

/// Unit normal to the hyperplane through `r` points in `R^r`, or `None` if degenerate.
fn normal_through(pts: &[&Vec<f64>], tol: f64) -> Option<Vec<f64>> {
    let r = pts[0].len();
    if r == 1 {
        return Some(vec![1.0]);
    }
    let diffs: Vec<Vec<f64>> = pts[1..].iter().map(|p| p.iter().zip(pts[0]).map(|(a, b)| a - b).collect()).collect();
    // Generalized cross product: signed cofactors of the (r-1) x r difference matrix.
    let mut n = Vec::with_capacity(r);
    for j in 0..r {
        let minor = DMatrix::from_fn(r - 1, r - 1, |a, b| diffs[a][if b < j { b } else { b + 1 }]);
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        n.push(sign * minor.determinant());
    }
    let norm = dot(&n, &n).sqrt();
    if norm <= tol {
        return None;
    }
    Some(n.into_iter().map(|v| v / norm).collect())
}

fn solve(points: &Points) -> Result<Candidate> {
    let k = points.coords[0].len();
    let total_pos: usize = points.pos.iter().sum();
    let total_neg: usize = points.neg.iter().sum();
    let mut best = Candidate { errors: total_pos, w: vec![0.0; k], b: -1.0 };
    let plus = Candidate { errors: total_neg, w: vec![0.0; k], b: 1.0 };
    if plus.better_than(&best) {
        best = plus;
    }
    if points.coords.len() == 1 || k == 0 {
        return Ok(best);
    }
    let scale = points.coords.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * scale;
    let basis = affine_basis(&points.coords, tol);
    let r = basis.len();
    if r == 0 {
        return Ok(best);
    }
    let origin = &points.coords[0];
    let y: Vec<Vec<f64>> = points
        .coords
        .iter()
        .map(|p| {
            let d: Vec<f64> = p.iter().zip(origin).map(|(a, b)| a - b).collect();
            basis.iter().map(|e| dot(e, &d)).collect()
        })
        .collect();
    let n = y.len();
    let subsets = binomial(n, r);
    if subsets > MAX_SUBSETS {
        return Err(Error::SearchTooLarge(format!(
            "{subsets} candidate hyperplanes ({n} distinct points, hull dimension {r})"
        )));
    }
    // Map a classifier in hull coordinates back to this level's coordinates.
    let lift = |v: &[f64], b: f64, errors: usize| {
        let mut w = vec![0.0; k];
        for (e, vi) in basis.iter().zip(v) {
            for (wj, ej) in w.iter_mut().zip(e) {
                *wj += vi * ej;
            }
        }
        let b = b - dot(&w, origin);
        Candidate { errors, w, b }
    };
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    for combo in (0..n).combinations(r) {
        let pts: Vec<&Vec<f64>> = combo.iter().map(|&i| &y[i]).collect();
        let Some(normal) = normal_through(&pts, 1e-12 * scale.powi(r as i32 - 1)) else { continue };
        let c = dot(&normal, pts[0]);
        let dist: Vec<f64> = y.iter().map(|p| dot(&normal, p) - c).collect();
        let on: Vec<usize> = (0..n).filter(|&i| dist[i].abs() <= tol).collect();
        if !seen.insert(on.clone()) {
            continue;
        }
        let (mut off_plus, mut off_minus) = (0usize, 0usize);
        for i in 0..n {
            if dist[i] > tol {
                off_plus += points.neg[i];
                off_minus += points.pos[i];
            } else if dist[i] < -tol {
                off_plus += points.pos[i];
                off_minus += points.neg[i];
            }
        }
        if off_plus.min(off_minus) > best.errors {
            continue;
        }
        let sub_points = Points {
            coords: on.iter().map(|&i| y[i].clone()).collect(),
            pos: on.iter().map(|&i| points.pos[i]).collect(),
            neg: on.iter().map(|&i| points.neg[i]).collect(),
        };
        let sub = solve(&sub_points)?;
        let (mut min_off, mut max_g) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            if dist[i].abs() > tol {
                min_off = min_off.min(dist[i].abs());
                max_g = max_g.max((dot(&sub.w, &y[i]) + sub.b).abs());
            }
        }
        let eps = if max_g > 0.0 && min_off.is_finite() { 0.5 * min_off / max_g } else { 1.0 };
        for (sigma, off) in [(1.0, off_plus), (-1.0, off_minus)] {
            let errors = off + sub.errors;
            if errors > best.errors {
                continue;
            }
            let v: Vec<f64> = normal.iter().zip(&sub.w).map(|(a, g)| sigma * a + eps * g).collect();
            let b = -sigma * c + eps * sub.b;
            let cand = lift(&v, b, errors);
            if cand.better_than(&best) {
                best = cand;
            }
        }
    }
    Ok(best)
}
