use serde::{Deserialize, Serialize};

use super::{check_labels, ClassifyError};
use crate::numerics::{dot, norm, Matrix};

/// Slack on the margin when deciding which training points are support vectors.
pub const SV_TOL: f64 = 1e-6;

/// Floor for the pairwise curvature when two points coincide.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvcOptions {
    pub c: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    pub max_iter: usize,
}

impl SvcOptions {
    pub fn new(c: f64) -> Self {
        Self {
            c,
            tol: 1e-8,
            max_iter: 1_000_000,
        }
    }
}

/// Linear soft-margin classifier `w·x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvcModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub c: f64,
    /// Training points with `ỹ(w·x + b) ≤ 1 + 1e-6`.
    pub support_indices: Vec<usize>,
    pub margin_width: f64,
    /// Dual multipliers of the training points, in `[0, C]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dual: Vec<f64>,
    #[serde(default)]
    pub iterations: usize,
}

fn signed(label: u8) -> f64 {
    if label == 1 {
        1.0
    } else {
        -1.0
    }
}

/// SMO steps between attempts to finish exactly on the current partition.
const POLISH_EVERY: usize = 100;

fn in_up(a: f64, s: f64, c: f64) -> bool {
    (s > 0.0 && a < c) || (s < 0.0 && a > 0.0)
}

fn in_low(a: f64, s: f64, c: f64) -> bool {
    (s > 0.0 && a > 0.0) || (s < 0.0 && a < c)
}

/// Maximal KKT violation and the working pair: `i` maximises `−ỹG` over the
/// "up" set, `j` gives the largest second-order decrease among violating
/// "low" partners.
fn select_pair(q: &Matrix, ys: &[f64], alpha: &[f64], grad: &[f64], c: f64) -> (f64, Option<(usize, usize)>) {
    let n = ys.len();
    let mut g_max = f64::NEG_INFINITY;
    let mut i_sel = None;
    for t in 0..n {
        if in_up(alpha[t], ys[t], c) && -ys[t] * grad[t] > g_max {
            g_max = -ys[t] * grad[t];
            i_sel = Some(t);
        }
    }
    let Some(i) = i_sel else {
        return (f64::NEG_INFINITY, None);
    };
    let mut g_max2 = f64::NEG_INFINITY;
    let mut j_sel = None;
    let mut best = f64::INFINITY;
    for t in 0..n {
        if !in_low(alpha[t], ys[t], c) {
            continue;
        }
        let yg = ys[t] * grad[t];
        g_max2 = g_max2.max(yg);
        let b = g_max + yg;
        if b > 0.0 {
            let a = q[(i, i)] + q[(t, t)] - 2.0 * ys[i] * ys[t] * q[(i, t)];
            let obj = -(b * b) / a.max(TAU);
            if obj < best {
                best = obj;
                j_sel = Some(t);
            }
        }
    }
    (g_max + g_max2, j_sel.map(|j| (i, j)))
}

/// Where to move the free multipliers.
enum FaceStep {
    /// Displacement to a minimiser of the dual on the face.
    To(Vec<f64>),
    /// The face is unbounded below along this direction.
    Ray(Vec<f64>),
}

/// Projected conjugate gradients for the dual restricted to the free
/// multipliers, keeping `ỹ·α` fixed. The face system is singular whenever
/// there are more free multipliers than dimensions plus one, which CG
/// handles: started from zero it returns the shortest displacement.
fn face_step(q: &Matrix, ys: &[f64], alpha: &[f64], free: &[usize]) -> Option<FaceStep> {
    let n = ys.len();
    let m = free.len();
    let project = |v: &mut [f64]| {
        let s = free.iter().zip(v.iter()).map(|(&t, x)| ys[t] * x).sum::<f64>() / m as f64;
        free.iter().zip(v.iter_mut()).for_each(|(&t, x)| *x -= s * ys[t]);
    };
    let q_free = |v: &[f64]| -> Vec<f64> {
        free.iter()
            .map(|&i| free.iter().zip(v).map(|(&j, x)| q[(i, j)] * x).sum())
            .collect()
    };
    let mut r: Vec<f64> = free
        .iter()
        .map(|&i| 1.0 - (0..n).map(|t| q[(i, t)] * alpha[t]).sum::<f64>())
        .collect();
    project(&mut r);
    let scale = free.iter().map(|&i| q[(i, i)]).fold(1.0, f64::max);
    let r0 = dot(&r, &r).sqrt();
    if r0 == 0.0 {
        return None;
    }
    let mut delta = vec![0.0; m];
    let mut p = r.clone();
    let mut rr = r0 * r0;
    for _ in 0..2 * m + 2 {
        let mut qp = q_free(&p);
        let curv = dot(&p, &qp);
        let pp = dot(&p, &p);
        if curv <= 1e-13 * scale * pp {
            // flat direction: descending along it never stops inside the box
            return (dot(&r, &p) > 0.0).then_some(FaceStep::Ray(p));
        }
        let step = rr / curv;
        delta.iter_mut().zip(&p).for_each(|(d, v)| *d += step * v);
        project(&mut qp);
        r.iter_mut().zip(&qp).for_each(|(x, v)| *x -= step * v);
        let rr_next = dot(&r, &r);
        if rr_next.sqrt() <= 1e-14 * r0.max(scale) {
            break;
        }
        let beta = rr_next / rr;
        p.iter_mut().zip(&r).for_each(|(x, v)| *x = v + beta * *x);
        rr = rr_next;
    }
    Some(FaceStep::To(delta))
}

/// Active-set descent from `alpha`: step towards a minimiser of the face
/// spanned by the multipliers strictly inside `(0, C)`, stopping at the first
/// bound that gets in the way; pin that multiplier and repeat until a full
/// step fits. The dual objective never increases along the way. Returns the
/// new multipliers and their gradient, or `None` if nothing moved.
fn active_set_descent(q: &Matrix, ys: &[f64], alpha: &[f64], c: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = ys.len();
    let eps = 1e-12 * c;
    let mut a: Vec<f64> = alpha
        .iter()
        .map(|&v| if v <= eps { 0.0 } else if v >= c - eps { c } else { v })
        .collect();
    let mut moved = false;
    for _ in 0..n {
        let free: Vec<usize> = (0..n).filter(|&t| a[t] > 0.0 && a[t] < c).collect();
        if free.is_empty() {
            break;
        }
        let Some(face) = face_step(q, ys, &a, &free) else {
            break;
        };
        let (dir, mut step) = match face {
            FaceStep::To(d) => (d, 1.0),
            FaceStep::Ray(d) => (d, f64::INFINITY),
        };
        let mut blocking = None;
        for (r, &t) in free.iter().enumerate() {
            let d = dir[r];
            let room = if d < 0.0 {
                -a[t] / d
            } else if d > 0.0 {
                (c - a[t]) / d
            } else {
                f64::INFINITY
            };
            if room < step {
                step = room;
                blocking = Some((t, if d < 0.0 { 0.0 } else { c }));
            }
        }
        if !step.is_finite() {
            break;
        }
        for (r, &t) in free.iter().enumerate() {
            a[t] = (a[t] + step * dir[r]).clamp(0.0, c);
        }
        moved = true;
        match blocking {
            Some((t, bound)) => a[t] = bound,
            None => break,
        }
    }
    if !moved {
        return None;
    }
    let g = (0..n).map(|t| (0..n).map(|k| q[(t, k)] * a[k]).sum::<f64>() - 1.0).collect();
    Some((a, g))
}

/// `½αᵀQα − Σα` from the multipliers and the gradient `Qα − 1`.
fn dual_objective(alpha: &[f64], grad: &[f64]) -> f64 {
    0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>()
}

/// Fits with default tolerances (`1e-8` on KKT violations, at most 10⁶ steps).
pub fn fit_svc(x: &Matrix, y: &[u8], c: f64) -> Result<SvcModel, ClassifyError> {
    fit_svc_with(x, y, SvcOptions::new(c))
}

/// Solves the dual of `min ½‖w‖² + C Σ max(0, 1 − ỹ(w·x + b))` by
/// sequential minimal optimization with second-order working-set selection.
/// Every 100 steps, and once more before giving up, an exact active-set
/// descent over the multipliers strictly inside `(0, C)` takes over from the
/// pairwise updates, which ends the slow zig-zag SMO shows on nearly
/// degenerate problems. Ties in the selection go to the lowest index, so
/// results are deterministic. An optimum at `w = 0` is reported through
/// [`tilt`], keeping `‖w‖ > 0`.
pub fn fit_svc_with(x: &Matrix, y: &[u8], options: SvcOptions) -> Result<SvcModel, ClassifyError> {
    let c = options.c;
    if !(c > 0.0 && c.is_finite()) {
        return Err(ClassifyError::InvalidC(c));
    }
    let n = x.rows();
    if n != y.len() {
        return Err(ClassifyError::LengthMismatch(n, y.len()));
    }
    check_labels(y)?;
    let ys: Vec<f64> = y.iter().map(|&l| signed(l)).collect();

    let rows: Vec<&[f64]> = x.row_iter().collect();
    let mut q = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = ys[i] * ys[j] * dot(rows[i], rows[j]);
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
    }

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut polished_at = None;

    loop {
        let (gap, pair) = select_pair(&q, &ys, &alpha, &grad, c);
        let Some((i, j)) = pair else {
            break;
        };
        if gap < options.tol {
            break;
        }
        let due = iterations > 0 && iterations % POLISH_EVERY == 0 || iterations >= options.max_iter;
        if due && polished_at != Some(iterations) {
            polished_at = Some(iterations);
            if let Some((a, g)) = active_set_descent(&q, &ys, &alpha, c) {
                // kept only if the dual objective did not go up through rounding
                if dual_objective(&a, &g) <= dual_objective(&alpha, &grad) {
                    alpha = a;
                    grad = g;
                    if select_pair(&q, &ys, &alpha, &grad, c).0 < options.tol {
                        break;
                    }
                    continue;
                }
            }
        }
        if iterations >= options.max_iter {
            return Err(ClassifyError::NoConvergence { iterations });
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if ys[i] != ys[j] {
            let quad = (q[(i, i)] + q[(j, j)] + 2.0 * q[(i, j)]).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q[(i, i)] + q[(j, j)] - 2.0 * q[(i, j)]).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q[(t, i)] * di + q[(t, j)] * dj;
        }
    }

    let dim = x.cols();
    let mut w = vec![0.0; dim];
    for (t, row) in rows.iter().enumerate() {
        let s = alpha[t] * ys[t];
        if s != 0.0 {
            w.iter_mut().zip(*row).for_each(|(wk, v)| *wk += s * v);
        }
    }
    // cancellation noise in Σ αỹx counts as an exact zero
    let scale: f64 = rows.iter().zip(&alpha).map(|(r, a)| a * norm(r)).sum();
    if norm(&w) <= 1e-12 * scale {
        w.iter_mut().for_each(|v| *v = 0.0);
    }
    let b = bias(&rows, &ys, &alpha, &w, c);
    if norm(&w) == 0.0 {
        w = tilt(&rows, &ys, c);
    }
    let w_norm = norm(&w);

    let support_indices = (0..n)
        .filter(|&t| ys[t] * (dot(&w, rows[t]) + b) <= 1.0 + SV_TOL)
        .collect();
    Ok(SvcModel {
        w,
        b,
        c,
        support_indices,
        margin_width: 2.0 / w_norm,
        dual: alpha,
        iterations,
    })
}

/// Stand-in for an optimal `w` of exactly zero, where no direction lowers
/// the hinge loss. Points along the difference of the class means (the first
/// axis if those coincide), scaled so the primal objective rises by at most
/// `1e-9`. The margin is then very wide rather than undefined.
fn tilt(rows: &[&[f64]], ys: &[f64], c: f64) -> Vec<f64> {
    let dim = rows[0].len();
    let mut u = vec![0.0; dim];
    for (row, &s) in rows.iter().zip(ys) {
        let n_class = ys.iter().filter(|&&t| t == s).count() as f64;
        u.iter_mut().zip(*row).for_each(|(uk, v)| *uk += s * v / n_class);
    }
    let len = norm(&u);
    if len > 0.0 {
        u.iter_mut().for_each(|v| *v /= len);
    } else {
        u[0] = 1.0;
    }
    // each hinge term is 1-Lipschitz in its margin
    let lip = 1.0 + c * rows.iter().map(|r| dot(&u, r).abs()).sum::<f64>();
    let eps = 1e-9 / lip;
    u.iter().map(|v| eps * v).collect()
}

/// Average of `ỹ − w·x` over free multipliers; without any, the midpoint of
/// the interval allowed by the bound multipliers.
fn bias(rows: &[&[f64]], ys: &[f64], alpha: &[f64], w: &[f64], c: f64) -> f64 {
    let (mut free_sum, mut free_n) = (0.0, 0usize);
    let (mut lower, mut upper) = (f64::NEG_INFINITY, f64::INFINITY);
    for (t, row) in rows.iter().enumerate() {
        let r = ys[t] - dot(w, row);
        let at_zero = alpha[t] <= 0.0;
        let at_c = alpha[t] >= c;
        if !at_zero && !at_c {
            free_sum += r;
            free_n += 1;
        } else if (ys[t] > 0.0) == at_zero {
            lower = lower.max(r);
        } else {
            upper = upper.min(r);
        }
    }
    if free_n > 0 {
        free_sum / free_n as f64
    } else if lower.is_finite() && upper.is_finite() {
        0.5 * (lower + upper)
    } else if lower.is_finite() {
        lower
    } else {
        upper
    }
}

pub fn svc_decision(model: &SvcModel, point: &[f64]) -> Result<f64, ClassifyError> {
    if point.len() != model.w.len() {
        return Err(ClassifyError::DimensionMismatch {
            expected: model.w.len(),
            found: point.len(),
        });
    }
    Ok(dot(&model.w, point) + model.b)
}

/// Class 1 iff the decision value is non-negative.
pub fn svc_predict(model: &SvcModel, point: &[f64]) -> Result<u8, ClassifyError> {
    Ok(u8::from(svc_decision(model, point)? >= 0.0))
}

/// `½‖w‖² + C Σ max(0, 1 − ỹ(w·x + b))` on the given data.
pub fn svc_primal_objective(w: &[f64], b: f64, c: f64, x: &Matrix, y: &[u8]) -> f64 {
    let hinge: f64 = x
        .row_iter()
        .zip(y)
        .map(|(row, &l)| (1.0 - signed(l) * (dot(w, row) + b)).max(0.0))
        .sum();
    0.5 * dot(w, w) + c * hinge
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_max_margin() {
        let x = Matrix::from_rows(&[[-1.0], [1.0]]).unwrap();
        let m = fit_svc(&x, &[0, 1], 100.0).unwrap();
        assert!((m.w[0] - 1.0).abs() < 1e-9);
        assert!(m.b.abs() < 1e-9);
        assert!((m.margin_width - 2.0).abs() < 1e-9);
        assert_eq!(m.support_indices, vec![0, 1]);
    }

    #[test]
    fn symmetric_blobs() {
        let x = Matrix::from_rows(&[
            [-5.0, 0.0],
            [-5.5, 1.0],
            [-4.5, -1.0],
            [5.0, 0.0],
            [5.5, -1.0],
            [4.5, 1.0],
        ])
        .unwrap();
        let y = [0, 0, 0, 1, 1, 1];
        let m = fit_svc(&x, &y, 1.0).unwrap();
        for (row, &l) in x.row_iter().zip(&y) {
            assert!(signed(l) * svc_decision(&m, row).unwrap() >= 1.0 - 1e-6);
        }
        // boundary crosses y=0 at x = −b/w0
        assert!((-m.b / m.w[0]).abs() < 1e-3);
    }

    #[test]
    fn decision_rule() {
        let m = SvcModel {
            w: vec![1.0, 0.0],
            b: -2.0,
            c: 1.0,
            support_indices: vec![],
            margin_width: 2.0,
            dual: vec![],
            iterations: 0,
        };
        assert_eq!(svc_decision(&m, &[3.0, 7.0]).unwrap(), 1.0);
        assert_eq!(svc_predict(&m, &[3.0, 7.0]).unwrap(), 1);
        assert_eq!(svc_decision(&m, &[0.0, 0.0]).unwrap(), -2.0);
        assert_eq!(svc_predict(&m, &[0.0, 0.0]).unwrap(), 0);
        assert_eq!(svc_predict(&m, &[2.0, -4.0]).unwrap(), 1);
        assert!(matches!(
            svc_decision(&m, &[1.0]),
            Err(ClassifyError::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn rejects_bad_input() {
        let x = Matrix::from_rows(&[[-1.0], [1.0]]).unwrap();
        assert!(matches!(fit_svc(&x, &[0, 1], 0.0), Err(ClassifyError::InvalidC(_))));
        assert!(matches!(fit_svc(&x, &[1, 1], 1.0), Err(ClassifyError::NoClassVariation)));
    }
}
