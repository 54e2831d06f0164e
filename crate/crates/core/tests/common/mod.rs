//! Independent reference implementations and fixtures shared by the
//! integration tests. Nothing here calls into the library's solvers.
#![allow(dead_code)]

use onsetml::dataset::{ExperimentRecord, ExperimentTable, Layout, Soil};

/// xorshift64* stream, kept separate from the library generator.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        self.0.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * ((self.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u = self.uniform(f64::MIN_POSITIVE, 1.0);
        let v = self.uniform(0.0, 1.0);
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

pub fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Determinant by cofactor expansion along the first row.
pub fn det(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    match n {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => (0..n)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * m[0][j] * det(&minor(m, 0, j))
            })
            .sum(),
    }
}

fn minor(m: &[Vec<f64>], r: usize, c: usize) -> Vec<Vec<f64>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != r)
        .map(|(_, row)| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, v)| *v).collect())
        .collect()
}

/// Inverse through the adjugate; `None` when the determinant vanishes.
pub fn inverse_cofactor(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let d = det(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut inv = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            inv[j][i] = sign * det(&minor(m, i, j)) / d;
        }
    }
    Some(inv)
}

/// Gaussian elimination with partial pivoting; `None` if a pivot falls
/// below `1e-12` times the largest entry.
pub fn solve_gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-12 * scale {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Least squares `[intercept, coefficients…]` from the normal equations,
/// inverting `XᵀX` by cofactors.
pub fn ols_oracle(x: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let p = x[0].len() + 1;
    let rows: Vec<Vec<f64>> = x.iter().map(|r| std::iter::once(1.0).chain(r.iter().copied()).collect()).collect();
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (r, yi) in rows.iter().zip(y) {
        for i in 0..p {
            xty[i] += r[i] * yi;
            for j in 0..p {
                xtx[i][j] += r[i] * r[j];
            }
        }
    }
    let inv = inverse_cofactor(&xtx)?;
    Some((0..p).map(|i| (0..p).map(|j| inv[i][j] * xty[j]).sum()).collect())
}

/// Mean log-likelihood of `σ(β0 + β·x)`.
pub fn logistic_ll(x: &[Vec<f64>], y: &[u8], beta: &[f64]) -> f64 {
    let n = x.len() as f64;
    x.iter()
        .zip(y)
        .map(|(r, &yi)| {
            let t = beta[0] + r.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
            let p = sigmoid(t);
            if yi == 1 {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / n
}

/// Newton–Raphson maximum likelihood `[β0, β…]`; `None` if it does not
/// settle within 100 steps (separable data).
pub fn newton_logistic(x: &[Vec<f64>], y: &[u8]) -> Option<Vec<f64>> {
    let p = x[0].len() + 1;
    let mut beta = vec![0.0; p];
    for _ in 0..100 {
        let mut h = vec![vec![0.0; p]; p];
        let mut g = vec![0.0; p];
        for (r, &yi) in x.iter().zip(y) {
            let a: Vec<f64> = std::iter::once(1.0).chain(r.iter().copied()).collect();
            let t: f64 = a.iter().zip(&beta).map(|(u, v)| u * v).sum();
            let pi = sigmoid(t);
            for i in 0..p {
                g[i] += (yi as f64 - pi) * a[i];
                for j in 0..p {
                    h[i][j] += pi * (1.0 - pi) * a[i] * a[j];
                }
            }
        }
        let step = solve_gauss(h, g)?;
        let size = step.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        for (b, s) in beta.iter_mut().zip(&step) {
            *b += s;
        }
        if !beta.iter().all(|b| b.is_finite()) || size > 1e6 {
            return None;
        }
        if size < 1e-12 {
            return Some(beta);
        }
    }
    None
}

/// Optimal value of the soft-margin dual
/// `max Σα − ½ΣΣ αᵢαⱼỹᵢỹⱼ xᵢ·xⱼ, 0 ≤ α ≤ C, Σ ỹα = 0`, found by trying
/// every assignment of points to {α = 0, free, α = C} and keeping the
/// KKT-feasible ones. Equal to the primal optimum by strong duality.
pub fn svc_dual_oracle(x: &[[f64; 2]], y: &[u8], c: f64) -> Option<f64> {
    let n = x.len();
    let s: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let q = |i: usize, j: usize| s[i] * s[j] * (x[i][0] * x[j][0] + x[i][1] * x[j][1]);
    let tol = 1e-9;
    let mut best: Option<f64> = None;
    let mut state = vec![0u8; n];
    for code in 0..3usize.pow(n as u32) {
        let mut k = code;
        for st in state.iter_mut() {
            *st = (k % 3) as u8;
            k /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 1).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&st| if st == 2 { c } else { 0.0 }).collect();
        let b_range = if free.is_empty() {
            if alpha.iter().zip(&s).map(|(a, si)| a * si).sum::<f64>().abs() > tol {
                continue;
            }
            None
        } else {
            let m = free.len();
            let mut a = vec![vec![0.0; m + 1]; m + 1];
            let mut rhs = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (cc, &j) in free.iter().enumerate() {
                    a[r][cc] = q(i, j);
                }
                a[r][m] = s[i];
                rhs[r] = 1.0 - (0..n).filter(|&j| state[j] == 2).map(|j| q(i, j) * c).sum::<f64>();
                a[m][r] = s[i];
            }
            rhs[m] = -(0..n).filter(|&j| state[j] == 2).map(|j| s[j] * c).sum::<f64>();
            let Some(sol) = solve_gauss(a, rhs) else { continue };
            if free.iter().enumerate().any(|(r, _)| sol[r] < -tol || sol[r] > c + tol) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r];
            }
            Some(sol[m])
        };
        let w = [0, 1].map(|d| (0..n).map(|j| alpha[j] * s[j] * x[j][d]).sum::<f64>());
        let wx: Vec<f64> = x.iter().map(|p| w[0] * p[0] + w[1] * p[1]).collect();
        let feasible = match b_range {
            Some(b) => (0..n).all(|i| {
                let m = s[i] * (wx[i] + b);
                match state[i] {
                    0 => m >= 1.0 - 1e-7,
                    2 => m <= 1.0 + 1e-7,
                    _ => true,
                }
            }),
            None => {
                // b is free: each point bounds it from one side.
                let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
                for i in 0..n {
                    let bound = s[i] * (1.0 - s[i] * wx[i]);
                    let need_ge = (state[i] == 0) == (s[i] > 0.0);
                    if need_ge {
                        lo = lo.max(bound);
                    } else {
                        hi = hi.min(bound);
                    }
                }
                lo <= hi + 1e-7
            }
        };
        if !feasible {
            continue;
        }
        let mut value: f64 = alpha.iter().sum();
        for i in 0..n {
            for j in 0..n {
                value -= 0.5 * alpha[i] * alpha[j] * q(i, j);
            }
        }
        best = Some(best.map_or(value, |v: f64| v.max(value)));
    }
    best
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Within-cluster sum of squares of a labelling.
pub fn inertia_of(points: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let d = points[0].len();
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<&Vec<f64>> = points.iter().zip(labels).filter(|(_, l)| **l == c).map(|(p, _)| p).collect();
        if members.is_empty() {
            continue;
        }
        let centre: Vec<f64> = (0..d).map(|j| members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64).collect();
        total += members.iter().map(|p| sq_dist(p, &centre)).sum::<f64>();
    }
    total
}

/// Minimum inertia over every split into two non-empty clusters.
pub fn best_two_partition(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    assert!(n >= 2);
    let mut best = f64::INFINITY;
    // Point 0 always sits in cluster 0, so each split is visited once.
    for mask in 1..(1u64 << (n - 1)) {
        let labels: Vec<usize> = (0..n).map(|i| if i > 0 && mask >> (i - 1) & 1 == 1 { 1 } else { 0 }).collect();
        best = best.min(inertia_of(points, &labels, 2));
    }
    best
}

/// A record with placeholder descriptors and the given drivers.
pub fn record(layout: Layout, soil: Soil, d50: f64, wev: f64, slope: f64, ri: f64, failure: Option<u8>) -> ExperimentRecord {
    ExperimentRecord {
        layout,
        soil,
        d50,
        d10: d50 / 1.35,
        cc: 1.0,
        cu: 1.5,
        contact_angle: 110.0,
        friction_angle: 32.0,
        wev,
        slope,
        rain_intensity: ri,
        td: Some(10.0),
        te: Some(100.0),
        erosion_intervals: None,
        discharge_intervals: None,
        failure,
    }
}

/// Eighteen h_sub rows, two slopes × three rains × three soils, with labels
/// from a fixed rule on the rain-gated products.
pub fn hsub_fixture() -> ExperimentTable {
    let mut records = Vec::new();
    for (soil, d50, wev) in [(Soil::Fine, 0.2, 2.0), (Soil::Medium, 0.4, 1.0), (Soil::Coarse, 0.65, 0.5)] {
        for ri in [18.0, 70.0, 120.0] {
            for slope in [20.0, 30.0] {
                let fails = slope * ri >= 2100.0 && d50 < 0.5;
                records.push(record(Layout::HSub, soil, d50, wev, slope, ri, Some(u8::from(fails))));
            }
        }
    }
    ExperimentTable::new(records, "fixture")
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (u, v)| m.max((u - v).abs()))
}
