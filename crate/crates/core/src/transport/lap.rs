//! Dense linear assignment by the Jonker–Volgenant method: column
//! reduction, two rounds of augmenting row reduction, then shortest
//! augmenting paths with dual potentials.

const LARGE: f64 = f64::INFINITY;
/// Cap on row-reduction steps, in units of n. With real-valued costs the
/// reduction can creep by tiny decrements for O(n²) steps; the shortest-path
/// phase finishes the remaining rows far faster.
const REDUCTION_STEPS: usize = 4;

/// Dense square cost matrix, row-major.
pub struct CostMatrix<'a> {
    pub n: usize,
    pub data: &'a [f64],
}

impl CostMatrix<'_> {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// Minimum-cost perfect matching. Returns `row_to_col`.
pub fn solve(cost: &CostMatrix) -> Vec<usize> {
    let n = cost.n;
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![0];
    }
    let mut x = vec![usize::MAX; n];
    let mut y = vec![usize::MAX; n];
    let mut v = vec![0.0; n];
    let mut free_rows = vec![0usize; n];
    let mut n_free = column_reduction(cost, &mut free_rows, &mut x, &mut y, &mut v);
    let mut round = 0;
    while n_free > 0 && round < 2 {
        n_free = augmenting_row_reduction(cost, n_free, &mut free_rows, &mut x, &mut y, &mut v);
        round += 1;
    }
    if n_free > 0 {
        augment(cost, n_free, &free_rows, &mut x, &mut y, &mut v);
    }
    x
}

fn column_reduction(cost: &CostMatrix, free_rows: &mut [usize], x: &mut [usize], y: &mut [usize], v: &mut [f64]) -> usize {
    let n = cost.n;
    let mut unique = vec![true; n];
    v.iter_mut().for_each(|c| *c = LARGE);
    y.iter_mut().for_each(|c| *c = 0);
    for i in 0..n {
        for j in 0..n {
            let c = cost.at(i, j);
            if c < v[j] {
                v[j] = c;
                y[j] = i;
            }
        }
    }
    for j in (0..n).rev() {
        let i = y[j];
        if x[i] == usize::MAX {
            x[i] = j;
        } else {
            unique[i] = false;
            y[j] = usize::MAX;
        }
    }
    let mut n_free = 0;
    for i in 0..n {
        if x[i] == usize::MAX {
            free_rows[n_free] = i;
            n_free += 1;
        } else if unique[i] {
            let j = x[i];
            let mut min = LARGE;
            for j2 in 0..n {
                if j2 == j {
                    continue;
                }
                let c = cost.at(i, j2) - v[j2];
                if c < min {
                    min = c;
                }
            }
            v[j] -= min;
        }
    }
    n_free
}

fn augmenting_row_reduction(
    cost: &CostMatrix,
    n_free: usize,
    free_rows: &mut [usize],
    x: &mut [usize],
    y: &mut [usize],
    v: &mut [f64],
) -> usize {
    let n = cost.n;
    let mut current = 0;
    let mut new_free = 0;
    let mut rr_cnt = 0usize;
    while current < n_free {
        rr_cnt += 1;
        let free_i = free_rows[current];
        current += 1;
        let mut j1 = 0;
        let mut v1 = cost.at(free_i, 0) - v[0];
        let mut j2 = usize::MAX;
        let mut v2 = LARGE;
        for j in 1..n {
            let c = cost.at(free_i, j) - v[j];
            if c < v2 {
                if c >= v1 {
                    v2 = c;
                    j2 = j;
                } else {
                    v2 = v1;
                    v1 = c;
                    j2 = j1;
                    j1 = j;
                }
            }
        }
        let mut i0 = y[j1];
        let v1_new = v[j1] - (v2 - v1);
        let v1_lowers = v1_new < v[j1];
        if rr_cnt < (current * n).min(REDUCTION_STEPS * n) {
            if v1_lowers {
                v[j1] = v1_new;
            } else if i0 != usize::MAX && j2 != usize::MAX {
                j1 = j2;
                i0 = y[j2];
            }
            if i0 != usize::MAX {
                if v1_lowers {
                    current -= 1;
                    free_rows[current] = i0;
                } else {
                    free_rows[new_free] = i0;
                    new_free += 1;
                }
            }
        } else if i0 != usize::MAX {
            free_rows[new_free] = i0;
            new_free += 1;
        }
        x[free_i] = j1;
        y[j1] = free_i;
    }
    new_free
}

fn augment(cost: &CostMatrix, n_free: usize, free_rows: &[usize], x: &mut [usize], y: &mut [usize], v: &mut [f64]) {
    let n = cost.n;
    let mut pred = vec![0usize; n];
    let mut cols = vec![0usize; n];
    let mut d = vec![0.0; n];
    for &free_i in &free_rows[..n_free] {
        let mut j = find_path(cost, free_i, y, v, &mut pred, &mut cols, &mut d);
        loop {
            let i = pred[j];
            y[j] = i;
            std::mem::swap(&mut j, &mut x[i]);
            if i == free_i {
                break;
            }
        }
    }
}

fn find_path(
    cost: &CostMatrix,
    start_i: usize,
    y: &[usize],
    v: &mut [f64],
    pred: &mut [usize],
    cols: &mut [usize],
    d: &mut [f64],
) -> usize {
    let n = cost.n;
    for j in 0..n {
        cols[j] = j;
        pred[j] = start_i;
        d[j] = cost.at(start_i, j) - v[j];
    }
    let (mut lo, mut hi) = (0usize, 0usize);
    let mut n_ready = 0;
    let mut final_j = usize::MAX;
    while final_j == usize::MAX {
        if lo == hi {
            n_ready = lo;
            hi = find_min_columns(n, lo, d, cols);
            for &j in &cols[lo..hi] {
                if y[j] == usize::MAX {
                    final_j = j;
                }
            }
        }
        if final_j == usize::MAX {
            final_j = scan(cost, &mut lo, &mut hi, d, cols, pred, y, v);
        }
    }
    let mind = d[cols[lo]];
    for &j in &cols[..n_ready] {
        v[j] += d[j] - mind;
    }
    final_j
}

// the scan range is fixed on entry; `hi` only tracks the growing prefix
#[allow(clippy::mut_range_bound)]
fn find_min_columns(n: usize, lo: usize, d: &[f64], cols: &mut [usize]) -> usize {
    let mut hi = lo + 1;
    let mut mind = d[cols[lo]];
    for k in hi..n {
        let j = cols[k];
        if d[j] <= mind {
            if d[j] < mind {
                hi = lo;
                mind = d[j];
            }
            cols[k] = cols[hi];
            cols[hi] = j;
            hi += 1;
        }
    }
    hi
}

#[allow(clippy::too_many_arguments, clippy::mut_range_bound)]
fn scan(
    cost: &CostMatrix,
    plo: &mut usize,
    phi: &mut usize,
    d: &mut [f64],
    cols: &mut [usize],
    pred: &mut [usize],
    y: &[usize],
    v: &[f64],
) -> usize {
    let n = cost.n;
    let (mut lo, mut hi) = (*plo, *phi);
    while lo != hi {
        let j = cols[lo];
        lo += 1;
        let i = y[j];
        let mind = d[j];
        let h = cost.at(i, j) - v[j] - mind;
        let row = &cost.data[i * n..(i + 1) * n];
        for k in hi..n {
            let j = cols[k];
            let cred = row[j] - v[j] - h;
            if cred < d[j] {
                d[j] = cred;
                pred[j] = i;
                if cred == mind {
                    if y[j] == usize::MAX {
                        return j;
                    }
                    cols[k] = cols[hi];
                    cols[hi] = j;
                    hi += 1;
                }
            }
        }
    }
    *plo = lo;
    *phi = hi;
    usize::MAX
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(n: usize, c: &[f64]) -> f64 {
        fn rec(i: usize, n: usize, c: &[f64], used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if i == n {
                *best = best.min(acc);
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    rec(i + 1, n, c, used, acc + c[i * n + j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(0, n, c, &mut vec![false; n], 0.0, &mut best);
        best
    }

    #[test]
    fn integer_costs_match_brute_force() {
        let mut s = 12345u64;
        for n in 1..=7 {
            for _ in 0..40 {
                let c: Vec<f64> = (0..n * n)
                    .map(|_| {
                        s = crate::rng::splitmix64(s);
                        (s % 10) as f64
                    })
                    .collect();
                let x = solve(&CostMatrix { n, data: &c });
                let mut seen = vec![false; n];
                for &j in &x {
                    assert!(!seen[j]);
                    seen[j] = true;
                }
                let got: f64 = (0..n).map(|i| c[i * n + x[i]]).sum();
                assert_eq!(got, brute(n, &c));
            }
        }
    }
}
