use std::cmp::Ordering;
use std::io::Write;

use serde::Serialize;

use super::UnsupervisedError;
use crate::numerics::{derive_seed, Matrix, SplitMix64};

pub const DEFAULT_RESTARTS: usize = 10;

const SHIFT_TOL: f64 = 1e-10;
const MAX_LLOYD_ITER: usize = 1000;
const MAX_EXHAUSTIVE: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub k: usize,
    /// `k × d`; row `c` is the mean of the points assigned to cluster `c`.
    pub centroids: Matrix,
    /// Cluster id per input point, in input order.
    pub assignments: Vec<usize>,
    pub inertia: f64,
    /// Improvement passes used by the winning restart.
    pub iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Inertia of the winning restart after every pass, starting with the
    /// first assignment.
    pub inertia_history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Best of `restarts` K-means runs by inertia (lowest restart index on ties).
///
/// Points are processed in lexicographic order of their coordinates, so the
/// result does not depend on input order. Each run seeds centroids by
/// distance-weighted sampling, then alternates nearest-centroid assignment
/// (ties to the lowest centroid index) and mean updates until assignments
/// repeat or no centroid moves more than `1e-10`. A final pass moves single
/// points between clusters while that strictly lowers the inertia. When
/// there are at most 4096 labelings one extra run starts from the centroids
/// of the best partition, so tiny inputs always reach the global minimum.
pub fn kmeans(points: &Matrix, k: usize, seed: u64, restarts: usize) -> Result<KMeansResult, UnsupervisedError> {
    let n = points.rows();
    if n == 0 {
        return Err(UnsupervisedError::EmptyInput);
    }
    if k == 0 || k > n {
        return Err(UnsupervisedError::BadK { k, n });
    }
    if restarts == 0 {
        return Err(UnsupervisedError::BadRestarts);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lex_cmp(points.row(a), points.row(b)));
    let sorted = points.select_rows(&order);

    let mut best: Option<Run> = None;
    for r in 0..restarts {
        let mut rng = SplitMix64::new(derive_seed(seed, r as u64));
        let run = lloyd(&sorted, k, init_plus_plus(&sorted, k, &mut rng));
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    // tiny inputs get one more run seeded from the best partition overall
    if let Some(c) = exhaustive_seed(&sorted, k) {
        let run = lloyd(&sorted, k, c);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.expect("restarts >= 1");

    let mut assignments = vec![0; n];
    for (pos, &orig) in order.iter().enumerate() {
        assignments[orig] = best.assign[pos];
    }
    Ok(KMeansResult {
        k,
        centroids: best.centroids,
        assignments,
        inertia: best.inertia,
        iterations: best.iterations,
        restarts,
        seed,
        inertia_history: best.history,
    })
}

struct Run {
    centroids: Matrix,
    assign: Vec<usize>,
    inertia: f64,
    iterations: usize,
    history: Vec<f64>,
}

/// Centroids of the lowest-inertia partition into k non-empty clusters,
/// found by enumeration when there are at most `MAX_EXHAUSTIVE` labelings.
fn exhaustive_seed(x: &Matrix, k: usize) -> Option<Matrix> {
    let n = x.rows();
    if k < 2 || (k as f64).powi(n as i32) > MAX_EXHAUSTIVE as f64 {
        return None;
    }
    let mut label = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let (c, counts) = means(x, &label, k);
        if counts.iter().all(|&m| m > 0) {
            let v = inertia(x, &label, &c);
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, label.clone()));
            }
        }
        // next labeling in base k, point 0 fixed to cluster 0
        let Some(i) = (1..n).rev().find(|&i| label[i] + 1 < k) else {
            break;
        };
        label[i] += 1;
        label[i + 1..].iter_mut().for_each(|l| *l = 0);
    }
    best.map(|(_, label)| means(x, &label, k).0)
}

fn init_plus_plus(x: &Matrix, k: usize, rng: &mut SplitMix64) -> Matrix {
    let n = x.rows();
    let mut c = Matrix::zeros(k, x.cols());
    let first = rng.below(n as u64) as usize;
    c.row_mut(0).copy_from_slice(x.row(first));
    let mut d2: Vec<f64> = x.row_iter().map(|p| sq_dist(p, x.row(first))).collect();
    for m in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.next_f64() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > u {
                    chosen = Some(i);
                    break;
                }
            }
            // rounding can leave u at the very end
            chosen.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap_or(0))
        } else {
            rng.below(n as u64) as usize
        };
        c.row_mut(m).copy_from_slice(x.row(pick));
        for (i, p) in x.row_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, x.row(pick)));
        }
    }
    c
}

fn nearest(p: &[f64], c: &Matrix) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for j in 0..c.rows() {
        let d = sq_dist(p, c.row(j));
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

fn means(x: &Matrix, assign: &[usize], k: usize) -> (Matrix, Vec<usize>) {
    let mut c = Matrix::zeros(k, x.cols());
    let mut counts = vec![0usize; k];
    for (p, &a) in x.row_iter().zip(assign) {
        counts[a] += 1;
        c.row_mut(a).iter_mut().zip(p).for_each(|(s, v)| *s += v);
    }
    for j in 0..k {
        if counts[j] > 0 {
            let inv = counts[j] as f64;
            c.row_mut(j).iter_mut().for_each(|s| *s /= inv);
        }
    }
    (c, counts)
}

fn inertia(x: &Matrix, assign: &[usize], c: &Matrix) -> f64 {
    x.row_iter().zip(assign).map(|(p, &a)| sq_dist(p, c.row(a))).sum()
}

/// Gives every empty cluster the point farthest from its own centroid,
/// taken from a cluster that keeps at least one member.
fn repair_empty(x: &Matrix, assign: &mut [usize], k: usize) -> (Matrix, Vec<usize>) {
    let (mut c, mut counts) = means(x, assign, k);
    while let Some(empty) = counts.iter().position(|&m| m == 0) {
        let mut far = None;
        let mut far_d = f64::NEG_INFINITY;
        for (i, p) in x.row_iter().enumerate() {
            if counts[assign[i]] < 2 {
                continue;
            }
            let d = sq_dist(p, c.row(assign[i]));
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let i = far.expect("k <= n leaves a cluster with two members");
        assign[i] = empty;
        (c, counts) = means(x, assign, k);
    }
    (c, counts)
}

fn lloyd(x: &Matrix, k: usize, mut c: Matrix) -> Run {
    let mut assign: Vec<usize> = x.row_iter().map(|p| nearest(p, &c)).collect();
    let (mut centroids, mut counts) = repair_empty(x, &mut assign, k);
    let mut history = vec![inertia(x, &assign, &centroids)];
    let mut iterations = 1;

    while iterations < MAX_LLOYD_ITER {
        c = centroids.clone();
        let next: Vec<usize> = x.row_iter().map(|p| nearest(p, &c)).collect();
        if next == assign {
            break;
        }
        assign = next;
        let prev = centroids;
        (centroids, counts) = repair_empty(x, &mut assign, k);
        history.push(inertia(x, &assign, &centroids));
        iterations += 1;
        let shift = (0..k)
            .map(|j| sq_dist(prev.row(j), centroids.row(j)))
            .fold(0.0, f64::max)
            .sqrt();
        if shift < SHIFT_TOL {
            break;
        }
    }

    // single-point transfers
    loop {
        let mut moved = false;
        for i in 0..x.rows() {
            let a = assign[i];
            if counts[a] < 2 {
                continue;
            }
            let p = x.row(i);
            let na = counts[a] as f64;
            let cost_out = na / (na - 1.0) * sq_dist(p, centroids.row(a));
            let mut target = None;
            let mut best_gain = 0.0;
            for b in 0..k {
                if b == a {
                    continue;
                }
                let nb = counts[b] as f64;
                let gain = cost_out - nb / (nb + 1.0) * sq_dist(p, centroids.row(b));
                if gain > best_gain * (1.0 + 1e-12) + 1e-12 {
                    best_gain = gain;
                    target = Some(b);
                }
            }
            if let Some(b) = target {
                assign[i] = b;
                (centroids, counts) = means(x, &assign, k);
                let now = inertia(x, &assign, &centroids);
                if now < *history.last().expect("non-empty") {
                    history.push(now);
                    iterations += 1;
                    moved = true;
                } else {
                    assign[i] = a;
                    (centroids, counts) = means(x, &assign, k);
                }
            }
        }
        if !moved {
            break;
        }
    }

    Run {
        inertia: inertia(x, &assign, &centroids),
        centroids,
        assign,
        iterations,
        history,
    }
}

/// Cluster-to-label correspondence for two clusters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Alignment {
    /// `mapping[c]` is the label matched to cluster `c`.
    pub mapping: [u8; 2],
    /// Positions whose mapped cluster disagrees with the label.
    pub mismatches: Vec<usize>,
}

impl Alignment {
    pub fn mismatch_count(&self) -> usize {
        self.mismatches.len()
    }
}

/// Picks the cluster→label bijection with fewer mismatches; the identity
/// wins ties.
pub fn align_clusters_to_labels(assignments: &[usize], labels: &[u8]) -> Result<Alignment, UnsupervisedError> {
    if assignments.len() != labels.len() {
        return Err(UnsupervisedError::LengthMismatch(assignments.len(), labels.len()));
    }
    if let Some((index, &value)) = assignments.iter().enumerate().find(|(_, &a)| a > 1) {
        return Err(UnsupervisedError::NotBinary { index, value });
    }
    if let Some((index, &value)) = labels.iter().enumerate().find(|(_, &l)| l > 1) {
        return Err(UnsupervisedError::NotBinary {
            index,
            value: value as usize,
        });
    }
    let wrong = |mapping: [u8; 2]| -> Vec<usize> {
        (0..labels.len())
            .filter(|&i| mapping[assignments[i]] != labels[i])
            .collect()
    };
    let identity = wrong([0, 1]);
    let swapped = wrong([1, 0]);
    Ok(if swapped.len() < identity.len() {
        Alignment {
            mapping: [1, 0],
            mismatches: swapped,
        }
    } else {
        Alignment {
            mapping: [0, 1],
            mismatches: identity,
        }
    })
}

/// Per-point CSV: `row,z1,z2,…,cluster,label,mismatch`. Rows are 1-based;
/// label and mismatch are blank without labels.
pub fn write_cluster_csv<W: Write>(
    writer: W,
    scores: &Matrix,
    assignments: &[usize],
    labels: Option<&[u8]>,
) -> Result<(), UnsupervisedError> {
    let alignment = match labels {
        Some(l) if assignments.iter().all(|&a| a < 2) => Some(align_clusters_to_labels(assignments, l)?),
        _ => None,
    };
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["row".to_string()];
    header.extend((1..=scores.cols()).map(|j| format!("z{j}")));
    header.extend(["cluster".into(), "label".into(), "mismatch".into()]);
    w.write_record(&header)?;
    for (i, row) in scores.row_iter().enumerate() {
        let mut rec = vec![(i + 1).to_string()];
        rec.extend(row.iter().map(f64::to_string));
        rec.push(assignments[i].to_string());
        rec.push(labels.map(|l| l[i].to_string()).unwrap_or_default());
        rec.push(
            alignment
                .as_ref()
                .map(|a| u8::from(a.mismatches.binary_search(&i).is_ok()).to_string())
                .unwrap_or_default(),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
