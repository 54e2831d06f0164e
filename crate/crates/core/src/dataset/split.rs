use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DatasetError, ExperimentTable, RecordFilter};
use crate::numerics::seeded_shuffle;

/// Row selection and train/test split parameters, stored alongside fitted
/// models so the same rows can be rebuilt later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// [`RecordFilter`] text applied before splitting, e.g. `layout=h_sub`.
    #[serde(default = "all_rows")]
    pub rows: String,
    pub test_fraction: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stratify_on: Option<String>,
}

fn all_rows() -> String {
    RecordFilter::all().to_string()
}

impl SplitSpec {
    /// Filters `table` by `rows`, then splits.
    pub fn apply(&self, table: &ExperimentTable) -> Result<(ExperimentTable, ExperimentTable), DatasetError> {
        let filter: RecordFilter = if self.rows == "all" { RecordFilter::all() } else { self.rows.parse()? };
        split_train_test(&filter.apply(table), self.test_fraction, self.seed, self.stratify_on.as_deref())
    }
}

/// Test-set size `round(n · fraction)`, rounding halves up.
pub fn test_count(n: usize, fraction: f64) -> Result<usize, DatasetError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(DatasetError::DegenerateSplit(format!(
            "test fraction {fraction} is outside (0, 1)"
        )));
    }
    // the epsilon keeps exact halves such as 18 * 0.25 from rounding down
    let t = (n as f64 * fraction + 0.5 + 1e-9).floor() as usize;
    if t < 1 || t + 1 > n {
        return Err(DatasetError::DegenerateSplit(format!(
            "n={n}, fraction={fraction} gives {t} test rows (need 1..={})",
            n.saturating_sub(1)
        )));
    }
    Ok(t)
}

/// Splits into `(train, test)`. With `stratify_on`, each class receives its
/// largest-remainder share of the test rows, so per-class counts stay within
/// one record of exact proportionality. Both parts keep the input row order.
pub fn split_train_test(
    table: &ExperimentTable,
    test_fraction: f64,
    seed: u64,
    stratify_on: Option<&str>,
) -> Result<(ExperimentTable, ExperimentTable), DatasetError> {
    let n = table.len();
    let t = test_count(n, test_fraction)?;
    let perm = seeded_shuffle(n, seed);
    let mut in_test = vec![false; n];

    match stratify_on {
        None => perm[..t].iter().for_each(|&i| in_test[i] = true),
        Some(column) => {
            let values = table.column(column)?;
            let mut classes: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
            // class members in shuffled order
            for &i in &perm {
                classes.entry(order_key(values[i])).or_default().push(i);
            }
            let groups: Vec<&Vec<usize>> = classes.values().collect();
            let quotas = largest_remainder(
                &groups.iter().map(|g| g.len()).collect::<Vec<_>>(),
                t,
            );
            for (members, take) in groups.iter().zip(quotas) {
                members[..take].iter().for_each(|&i| in_test[i] = true);
            }
        }
    }

    let (test_idx, train_idx): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| in_test[i]);
    Ok((table.subset(&train_idx), table.subset(&test_idx)))
}

/// Monotone map from finite `f64` to `u64`, so classes sort by value.
fn order_key(v: f64) -> u64 {
    let bits = (v + 0.0).to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

/// Apportions `total` across groups proportionally to `sizes`.
fn largest_remainder(sizes: &[usize], total: usize) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    let mut out = Vec::with_capacity(sizes.len());
    let mut remainders = Vec::with_capacity(sizes.len());
    for (g, &size) in sizes.iter().enumerate() {
        let exact = size * total;
        out.push(exact / n);
        remainders.push((exact % n, g));
    }
    let assigned: usize = out.iter().sum();
    // larger remainder first, earlier group on ties
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, g) in remainders.iter().take(total - assigned) {
        out[g] += 1;
    }
    out
}

/// `k` disjoint folds covering `0..n`; the first `n mod k` folds hold one
/// extra index. Indices within each fold are ascending.
pub fn kfold_partition(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, DatasetError> {
    if k < 2 || k > n {
        return Err(DatasetError::BadFoldCount { n, k });
    }
    let perm = seeded_shuffle(n, seed);
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut fold = perm[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }
    Ok(folds)
}
