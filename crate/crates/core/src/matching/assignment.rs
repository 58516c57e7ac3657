//! Rectangular linear sum assignment by shortest augmenting paths
//! (Jonker-Volgenant style, with the Crouse variant for rectangular input).

/// Dense row-major cost matrix. Rows are reference blocks, columns are
/// candidate blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "cost matrix shape mismatch");
        assert!(data.iter().all(|c| c.is_finite()), "costs must be finite");
        CostMatrix { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    fn transposed(&self) -> CostMatrix {
        CostMatrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }
}

/// A minimum-cost one-to-one pairing with `min(rows, cols)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `(row, col)` pairs sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
}

/// Solves the assignment problem exactly. Among equal-cost candidates the
/// search prefers free columns, then the lowest column index, and rows are
/// processed in index order, so the result is deterministic.
pub fn solve_assignment(cost: &CostMatrix) -> Assignment {
    if cost.rows == 0 || cost.cols == 0 {
        return Assignment {
            pairs: Vec::new(),
            total_cost: 0.0,
        };
    }
    let pairs = if cost.rows <= cost.cols {
        solve_wide(cost)
            .into_iter()
            .enumerate()
            .collect::<Vec<_>>()
    } else {
        let t = cost.transposed();
        let mut pairs: Vec<(usize, usize)> = solve_wide(&t)
            .into_iter()
            .enumerate()
            .map(|(c, r)| (r, c))
            .collect();
        pairs.sort_unstable();
        pairs
    };
    let total_cost = pairs.iter().map(|&(r, c)| cost.get(r, c)).sum();
    Assignment { pairs, total_cost }
}

const FREE: usize = usize::MAX;

/// Requires `rows <= cols`; returns the column assigned to each row.
fn solve_wide(cost: &CostMatrix) -> Vec<usize> {
    let (nr, nc) = (cost.rows, cost.cols);
    let mut u = vec![0.0f64; nr];
    let mut v = vec![0.0f64; nc];
    let mut shortest = vec![f64::INFINITY; nc];
    let mut path = vec![FREE; nc];
    let mut col4row = vec![FREE; nr];
    let mut row4col = vec![FREE; nc];
    let mut scanned_rows = vec![false; nr];
    let mut scanned_cols = vec![false; nc];
    let mut remaining: Vec<usize> = Vec::with_capacity(nc);

    for cur_row in 0..nr {
        shortest.fill(f64::INFINITY);
        scanned_rows.fill(false);
        scanned_cols.fill(false);
        remaining.clear();
        remaining.extend(0..nc);

        let mut min_val = 0.0f64;
        let mut i = cur_row;
        let sink = loop {
            scanned_rows[i] = true;
            let mut best: Option<usize> = None;
            let mut lowest = f64::INFINITY;
            for (pos, &j) in remaining.iter().enumerate() {
                let reduced = min_val + cost.get(i, j) - u[i] - v[j];
                if reduced < shortest[j] {
                    path[j] = i;
                    shortest[j] = reduced;
                }
                let better = match best {
                    None => true,
                    Some(b) => {
                        let bj = remaining[b];
                        shortest[j] < lowest
                            || (shortest[j] == lowest
                                && tie_prefers(j, bj, &row4col))
                    }
                };
                if better {
                    lowest = shortest[j];
                    best = Some(pos);
                }
            }
            min_val = lowest;
            let pos = best.expect("finite costs always leave a reachable column");
            let j = remaining.swap_remove(pos);
            scanned_cols[j] = true;
            if row4col[j] == FREE {
                break j;
            }
            i = row4col[j];
        };

        u[cur_row] += min_val;
        for r in 0..nr {
            if scanned_rows[r] && r != cur_row {
                u[r] += min_val - shortest[col4row[r]];
            }
        }
        for c in 0..nc {
            if scanned_cols[c] {
                v[c] -= min_val - shortest[c];
            }
        }

        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            std::mem::swap(&mut col4row[r], &mut j);
            if r == cur_row {
                break;
            }
        }
    }
    col4row
}

fn tie_prefers(j: usize, incumbent: usize, row4col: &[usize]) -> bool {
    let (j_free, inc_free) = (row4col[j] == FREE, row4col[incumbent] == FREE);
    (j_free && !inc_free) || (j_free == inc_free && j < incumbent)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let a = solve_assignment(&CostMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]));
        assert_eq!(a.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(a.total_cost, 0.0);
    }

    #[test]
    fn all_equal_prefers_diagonal() {
        let a = solve_assignment(&CostMatrix::from_fn(3, 3, |_, _| 2.5));
        assert_eq!(a.pairs, vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(a.total_cost, 7.5);
    }

    #[test]
    fn duplicated_similarity_blocks_keep_identity() {
        // Two identical texts on each side: negative similarity is -1 everywhere.
        let a = solve_assignment(&CostMatrix::from_fn(4, 4, |r, c| {
            if (r < 2) == (c < 2) {
                -1.0
            } else {
                0.0
            }
        }));
        assert_eq!(a.pairs, vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
    }

    #[test]
    fn rectangular_both_ways() {
        let wide = CostMatrix::from_rows(&[vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0]]);
        let a = solve_assignment(&wide);
        assert_eq!(a.pairs.len(), 2);
        assert_eq!(a.total_cost, 3.0);
        let tall = wide.transposed();
        let b = solve_assignment(&tall);
        assert_eq!(b.total_cost, 3.0);
        assert!(b.pairs.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn empty_matrix() {
        let a = solve_assignment(&CostMatrix::new(0, 3, vec![]));
        assert!(a.pairs.is_empty());
    }
}
