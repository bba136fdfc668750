//! Square linear assignment by successive shortest augmenting paths.
//!
//! Each row is inserted with one Dijkstra-like search over reduced costs, so
//! the row and column potentials form an optimal dual once every row is
//! placed. Every optimal assignment uses only edges whose reduced cost is zero
//! under that dual, which lets [`Lap::solve`] walk the tight subgraph and
//! return the optimal assignment that is lexicographically smallest in the
//! caller's column preference order.

/// Dense square cost matrix where `None` marks a forbidden edge.
pub(crate) struct Lap {
    n: usize,
    cost: Vec<Option<f64>>,
}

impl Lap {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            cost: vec![None; n * n],
        }
    }

    pub fn set(&mut self, row: usize, col: usize, c: f64) {
        debug_assert!(c.is_finite());
        self.cost[row * self.n + col] = Some(c);
    }

    fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.cost[row * self.n + col]
    }

    /// Returns `col_of[row]` for a minimum-cost perfect matching.
    ///
    /// `rank(row, col)` orders the columns a row may take; rows are fixed in
    /// `priority` order, each to its smallest-rank column compatible with an
    /// optimal assignment. Columns sharing a rank are interchangeable.
    /// Rows not listed in `priority` are left wherever the solver put them.
    ///
    /// The caller guarantees that a perfect matching avoiding forbidden edges
    /// exists.
    pub fn solve<R>(&self, priority: &[usize], rank: R) -> Vec<usize>
    where
        R: Fn(usize, usize) -> usize,
    {
        let n = self.n;
        if n == 0 {
            return Vec::new();
        }
        let max_finite = self
            .cost
            .iter()
            .flatten()
            .fold(0.0f64, |m, c| m.max(c.abs()));
        let big = (max_finite + 1.0) * (n as f64 + 1.0) * 4.0;
        let a = |i: usize, j: usize| self.get(i, j).unwrap_or(big);

        // 1-based potentials; index 0 is the virtual column of the search.
        let mut u = vec![0.0f64; n + 1];
        let mut v = vec![0.0f64; n + 1];
        let mut owner = vec![0usize; n + 1];
        let mut way = vec![0usize; n + 1];
        for i in 1..=n {
            owner[0] = i;
            let mut j0 = 0usize;
            let mut minv = vec![f64::INFINITY; n + 1];
            let mut used = vec![false; n + 1];
            loop {
                used[j0] = true;
                let i0 = owner[j0];
                let mut delta = f64::INFINITY;
                let mut j1 = 0usize;
                for j in 1..=n {
                    if !used[j] {
                        let cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                        if cur < minv[j] {
                            minv[j] = cur;
                            way[j] = j0;
                        }
                        if minv[j] < delta {
                            delta = minv[j];
                            j1 = j;
                        }
                    }
                }
                for j in 0..=n {
                    if used[j] {
                        u[owner[j]] += delta;
                        v[j] -= delta;
                    } else {
                        minv[j] -= delta;
                    }
                }
                j0 = j1;
                if owner[j0] == 0 {
                    break;
                }
            }
            loop {
                let j1 = way[j0];
                owner[j0] = owner[j1];
                j0 = j1;
                if j0 == 0 {
                    break;
                }
            }
        }

        let mut col_of = vec![0usize; n];
        let mut row_of = vec![0usize; n];
        for j in 1..=n {
            col_of[owner[j] - 1] = j - 1;
            row_of[j - 1] = owner[j] - 1;
        }

        let eps = 1e-9 * (max_finite + 1.0);
        let tight = |i: usize, j: usize| match self.get(i, j) {
            Some(c) => c - u[i + 1] - v[j + 1] <= eps,
            None => false,
        };

        let mut fixed = vec![false; n];
        for &i in priority {
            let current = rank(i, col_of[i]);
            let mut targets: Vec<(usize, usize)> = (0..n)
                .filter(|&j| tight(i, j))
                .map(|j| (rank(i, j), j))
                .filter(|&(r, _)| r < current)
                .collect();
            targets.sort_unstable();
            let mut start = 0;
            while start < targets.len() {
                let r = targets[start].0;
                let end = start + targets[start..].iter().take_while(|t| t.0 == r).count();
                let group: Vec<usize> = targets[start..end].iter().map(|t| t.1).collect();
                if let Some(path) = self.rotation(i, &group, &col_of, &row_of, &fixed, &tight) {
                    // path: [t, x1, x2, ..., free] columns; i takes t, the
                    // owner of each column moves to the next one.
                    let mut taker = i;
                    for &col in &path {
                        let prev_owner = row_of[col];
                        col_of[taker] = col;
                        row_of[col] = taker;
                        taker = prev_owner;
                    }
                    break;
                }
                start = end;
            }
            fixed[i] = true;
        }
        col_of
    }

    /// Finds an alternating cycle moving row `i` into one of `targets` while
    /// leaving fixed rows untouched. Returns the column sequence starting at
    /// the taken target and ending at `i`'s current column.
    fn rotation<T>(
        &self,
        i: usize,
        targets: &[usize],
        col_of: &[usize],
        row_of: &[usize],
        fixed: &[bool],
        tight: &T,
    ) -> Option<Vec<usize>>
    where
        T: Fn(usize, usize) -> bool,
    {
        let n = self.n;
        let home = col_of[i];
        let mut parent = vec![usize::MAX; n];
        let mut visited = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        for &t in targets {
            if !fixed[row_of[t]] && !visited[t] {
                visited[t] = true;
                queue.push_back(t);
            }
        }
        visited[home] = true;
        while let Some(x) = queue.pop_front() {
            let mover = row_of[x];
            for y in 0..n {
                if !tight(mover, y) {
                    continue;
                }
                if y == home {
                    let mut path = vec![home];
                    let mut cur = x;
                    loop {
                        path.push(cur);
                        if parent[cur] == usize::MAX {
                            break;
                        }
                        cur = parent[cur];
                    }
                    path.reverse();
                    return Some(path);
                }
                if !visited[y] && !fixed[row_of[y]] {
                    visited[y] = true;
                    parent[y] = x;
                    queue.push_back(y);
                }
            }
        }
        None
    }
}
