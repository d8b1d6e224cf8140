use super::{Assignment, CostMatrix};
use crate::error::{GedError, Result};

const UNASSIGNED: usize = usize::MAX;

/// Jonker-Volgenant: column reduction, reduction transfer, augmenting row
/// reduction, then Dijkstra-style shortest augmenting paths for the rows
/// still free.
///
/// Invariant kept throughout: every assigned row sits on a column of minimum
/// reduced cost `c[i][j] - v[j]` for that row.
pub fn lap_jv(m: &CostMatrix) -> Result<Assignment> {
    let n = m.size();
    if n == 0 {
        return Ok(Assignment { perm: Vec::new(), total_cost: 0.0 });
    }
    if m.has_blocked_line() {
        return Err(GedError::Infeasible);
    }
    let c = m.with_sentinel();
    let cost = |i: usize, j: usize| c[i * n + j];

    let mut col_of = vec![UNASSIGNED; n]; // x
    let mut row_of = vec![UNASSIGNED; n]; // y
    let mut v = vec![0.0f64; n];

    // Column reduction, scanning columns in reverse as in the original method.
    let mut matches = vec![0usize; n];
    for j in (0..n).rev() {
        let mut imin = 0;
        let mut min = cost(0, j);
        for i in 1..n {
            if cost(i, j) < min {
                min = cost(i, j);
                imin = i;
            }
        }
        v[j] = min;
        matches[imin] += 1;
        if matches[imin] == 1 {
            col_of[imin] = j;
            row_of[j] = imin;
        }
    }
    // Rows that won several columns keep only the last one.
    for j in 0..n {
        let i = row_of[j];
        if i != UNASSIGNED && col_of[i] != j {
            row_of[j] = UNASSIGNED;
        }
    }

    // Reduction transfer from rows assigned exactly once.
    let mut free = Vec::with_capacity(n);
    for i in 0..n {
        if matches[i] == 0 {
            free.push(i);
        } else if matches[i] == 1 {
            let j1 = col_of[i];
            let mut min = f64::INFINITY;
            for j in 0..n {
                if j != j1 {
                    min = min.min(cost(i, j) - v[j]);
                }
            }
            if min.is_finite() {
                v[j1] -= min;
            }
        }
    }

    augmenting_row_reduction(n, &cost, &mut col_of, &mut row_of, &mut v, &mut free);
    augment(n, &cost, &mut col_of, &mut row_of, &mut v, &free);

    m.finish(col_of)
}

fn augmenting_row_reduction(
    n: usize,
    cost: &impl Fn(usize, usize) -> f64,
    col_of: &mut [usize],
    row_of: &mut [usize],
    v: &mut [f64],
    free: &mut Vec<usize>,
) {
    // A bounded amount of work; whatever is left is handled by augmentation.
    let mut budget = 8 * n * n + 64;
    for _ in 0..2 {
        let mut k = 0;
        let prev_free = std::mem::take(free);
        let mut queue = prev_free.clone();
        while k < queue.len() && budget > 0 {
            budget -= 1;
            let i = queue[k];
            k += 1;

            // Smallest and second smallest reduced cost in row i.
            let mut umin = cost(i, 0) - v[0];
            let mut j1 = 0;
            let mut usubmin = f64::INFINITY;
            let mut j2 = UNASSIGNED;
            for j in 1..n {
                let h = cost(i, j) - v[j];
                if h < usubmin {
                    if h >= umin {
                        usubmin = h;
                        j2 = j;
                    } else {
                        usubmin = umin;
                        j2 = j1;
                        umin = h;
                        j1 = j;
                    }
                }
            }

            let mut i0 = row_of[j1];
            if umin < usubmin {
                v[j1] -= usubmin - umin;
            } else if i0 != UNASSIGNED && j2 != UNASSIGNED {
                // Tie: take the second column instead to avoid ping-ponging.
                j1 = j2;
                i0 = row_of[j2];
            }

            col_of[i] = j1;
            row_of[j1] = i;
            if i0 != UNASSIGNED {
                col_of[i0] = UNASSIGNED;
                if umin < usubmin {
                    // Re-examine the displaced row right away.
                    k -= 1;
                    queue[k] = i0;
                } else {
                    free.push(i0);
                }
            }
        }
        // Rows never reached because the budget ran out stay free.
        free.extend(queue[k..].iter().copied());
        if free.is_empty() {
            break;
        }
    }
}

fn augment(
    n: usize,
    cost: &impl Fn(usize, usize) -> f64,
    col_of: &mut [usize],
    row_of: &mut [usize],
    v: &mut [f64],
    free: &[usize],
) {
    let mut d = vec![0.0f64; n];
    let mut pred = vec![0usize; n];
    let mut cols: Vec<usize> = Vec::with_capacity(n);

    for &start in free {
        if col_of[start] != UNASSIGNED {
            continue;
        }
        cols.clear();
        cols.extend(0..n);
        for j in 0..n {
            d[j] = cost(start, j) - v[j];
            pred[j] = start;
        }

        // cols[..low] scanned, cols[low..up] at current minimum, cols[up..] untouched.
        let mut low = 0;
        let mut up = 0;
        let mut min = 0.0;
        let mut last = 0;
        let end = 'search: loop {
            if up == low {
                last = low;
                min = d[cols[up]];
                up += 1;
                for k in up..n {
                    let j = cols[k];
                    let h = d[j];
                    if h <= min {
                        if h < min {
                            up = low;
                            min = h;
                        }
                        cols.swap(k, up);
                        up += 1;
                    }
                }
                // lowest free column among the current minima
                if let Some(&j) = cols[low..up].iter().filter(|&&j| row_of[j] == UNASSIGNED).min() {
                    break 'search j;
                }
            }

            let j1 = cols[low];
            low += 1;
            let i = row_of[j1];
            let u1 = cost(i, j1) - v[j1] - min;
            let mut k = up;
            while k < n {
                let j = cols[k];
                let h = cost(i, j) - v[j] - u1;
                if h < d[j] {
                    d[j] = h;
                    pred[j] = i;
                    if h == min {
                        if row_of[j] == UNASSIGNED {
                            break 'search j;
                        }
                        cols.swap(k, up);
                        up += 1;
                    }
                }
                k += 1;
            }
        };

        for &j in &cols[..last] {
            v[j] += d[j] - min;
        }

        let mut j = end;
        loop {
            let i = pred[j];
            row_of[j] = i;
            let previous = col_of[i];
            col_of[i] = j;
            if i == start {
                break;
            }
            j = previous;
        }
    }
}
