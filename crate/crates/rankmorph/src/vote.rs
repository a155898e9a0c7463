//! Rank aggregation over a profile of voter orderings: margin matrices,
//! the Kemeny objective, an exhaustive exact consensus solver for small
//! candidate counts, and the Borda rule.

use std::fmt::Write as _;

use crate::color::ColorValue;
use crate::error::{Error, Result};
use crate::ordering::ReducedMapping;

/// Candidate count above which the exhaustive solver refuses to run.
pub const DEFAULT_EXACT_CAP: usize = 9;

/// A total order on `n` candidates as a 0/1 relation matrix,
/// `r[i][j] = [x_i <= x_j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TotalOrderMatrix {
    n: usize,
    rel: Vec<u8>,
}

impl TotalOrderMatrix {
    /// Builds from a permutation listing candidates least to greatest.
    pub fn from_permutation(perm: &[usize]) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &c in perm {
            if c >= n || seen[c] {
                return Err(Error::InvalidValue(format!(
                    "not a permutation of 0..{n}: {perm:?}"
                )));
            }
            seen[c] = true;
        }
        let mut pos = vec![0usize; n];
        for (p, &c) in perm.iter().enumerate() {
            pos[c] = p;
        }
        let mut rel = vec![0u8; n * n];
        for i in 0..n {
            for j in 0..n {
                rel[i * n + j] = u8::from(pos[i] <= pos[j]);
            }
        }
        Ok(Self { n, rel })
    }

    /// Builds from an explicit relation matrix, validating the total-order
    /// constraints (reflexive diagonal, antisymmetric pair identity,
    /// transitivity triangle inequality).
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        if let Some(v) = validate_total_order(rows) {
            return Err(Error::InvalidOrder(v));
        }
        let n = rows.len();
        let mut rel = vec![0u8; n * n];
        for (i, row) in rows.iter().enumerate() {
            rel[i * n..(i + 1) * n].copy_from_slice(row);
        }
        Ok(Self { n, rel })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The indicator `[x_i <= x_j]`.
    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.rel[i * self.n + j] == 1
    }

    /// The permutation listing candidates least to greatest.
    pub fn to_permutation(&self) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..self.n).collect();
        // A candidate's rank equals the number of candidates below it.
        perm.sort_by_key(|&i| (0..self.n).filter(|&j| self.leq(j, i)).count());
        perm
    }
}

/// Checks the total-order constraints; returns the first violation found.
pub fn validate_total_order(rows: &[Vec<u8>]) -> Option<String> {
    let n = rows.len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Some(format!("row {i} has length {}, expected {n}", row.len()));
        }
        for (j, &v) in row.iter().enumerate() {
            if v > 1 {
                return Some(format!("entry ({i},{j}) = {v} is not 0/1"));
            }
        }
    }
    for i in 0..n {
        if rows[i][i] != 1 {
            return Some(format!("diagonal entry ({i},{i}) must be 1 (reflexivity)"));
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && rows[i][j] + rows[j][i] != 1 {
                return Some(format!(
                    "r[{i}][{j}] + r[{j}][{i}] != 1 (antisymmetry / strong connectedness)"
                ));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i != j && j != k && k != i {
                    let lhs = rows[i][j] as i32 + rows[j][k] as i32 - rows[i][k] as i32;
                    if lhs > 1 {
                        return Some(format!(
                            "transitivity violated on ({i},{j},{k}): r[{i}][{j}]+r[{j}][{k}]-r[{i}][{k}] > 1"
                        ));
                    }
                }
            }
        }
    }
    None
}

/// Antisymmetric matrix of average vote margins,
/// `delta[i][j] = avg_k([x_i <=_k x_j] - [x_j <=_k x_i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginMatrix {
    n: usize,
    delta: Vec<f64>,
}

impl MarginMatrix {
    /// Margins of a profile of total orders.
    pub fn from_orders(orders: &[TotalOrderMatrix]) -> Result<Self> {
        let m = orders.len();
        if m == 0 {
            return Err(Error::InvalidValue("profile needs at least one voter".into()));
        }
        let n = orders[0].n;
        for o in orders {
            if o.n != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: o.n,
                });
            }
        }
        let mut delta = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut net = 0i64;
                for o in orders {
                    net += o.leq(i, j) as i64 - o.leq(j, i) as i64;
                }
                delta[i * n + j] = net as f64 / m as f64;
            }
        }
        Ok(Self { n, delta })
    }

    /// Margins induced by a family of reduced mappings on distinct values.
    /// Score ties under a mapping contribute zero.
    pub fn from_mappings(family: &[ReducedMapping], values: &[ColorValue]) -> Result<Self> {
        let m = family.len();
        if m == 0 {
            return Err(Error::InvalidValue("mapping family must be non-empty".into()));
        }
        let n = values.len();
        ensure_distinct(values)?;
        let mut scores = vec![vec![0.0; n]; m];
        for (k, h) in family.iter().enumerate() {
            for (i, v) in values.iter().enumerate() {
                scores[k][i] = h.score(v)?;
            }
        }
        let mut delta = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut net = 0i64;
                for s in &scores {
                    net += (s[i] <= s[j]) as i64 - (s[j] <= s[i]) as i64;
                }
                delta[i * n + j] = net as f64 / m as f64;
            }
        }
        Ok(Self { n, delta })
    }

    /// Builds from raw entries, validating antisymmetry and the `[-1, 1]` range.
    pub fn from_raw(n: usize, delta: Vec<f64>) -> Result<Self> {
        if delta.len() != n * n {
            return Err(Error::InvalidValue(format!(
                "margin matrix needs {} entries, got {}",
                n * n,
                delta.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let d = delta[i * n + j];
                if !d.is_finite() || d.abs() > 1.0 {
                    return Err(Error::InvalidValue(format!(
                        "margin ({i},{j}) = {d} outside [-1, 1]"
                    )));
                }
                if (d + delta[j * n + i]).abs() > 1e-12 {
                    return Err(Error::InvalidValue(format!(
                        "margins ({i},{j}) and ({j},{i}) are not antisymmetric"
                    )));
                }
            }
        }
        Ok(Self { n, delta })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.delta[i * self.n + j]
    }
}

fn ensure_distinct(values: &[ColorValue]) -> Result<()> {
    let mut sorted: Vec<&ColorValue> = values.iter().collect();
    sorted.sort_by(|a, b| a.channel_cmp(b));
    for pair in sorted.windows(2) {
        if pair[0] == pair[1] {
            return Err(Error::InvalidValue(format!(
                "candidate values must be distinct, found duplicate {:?}",
                pair[0].channels()
            )));
        }
    }
    Ok(())
}

/// Kemeny disagreement of a candidate order against the margins:
/// `sum_ij delta[i][j] * r[j][i]`, the margin weight of pairs the order
/// places against the majority. An order agreeing with a unanimous
/// profile scores `-n(n-1)/2`; each disagreeing pair raises the value.
pub fn kemeny_objective(delta: &MarginMatrix, order: &TotalOrderMatrix) -> Result<f64> {
    if delta.n != order.n {
        return Err(Error::Dimension {
            expected: delta.n,
            got: order.n,
        });
    }
    let n = delta.n;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if order.leq(j, i) {
                total += delta.get(i, j);
            }
        }
    }
    Ok(total)
}

/// Same objective evaluated directly on a least-to-greatest permutation.
pub fn kemeny_objective_of_permutation(delta: &MarginMatrix, perm: &[usize]) -> f64 {
    let mut total = 0.0;
    for (p, &a) in perm.iter().enumerate() {
        for &b in &perm[p + 1..] {
            // a is placed below b, so the pair (b, a) counts as r[b][a]=0,
            // r[a][b]=1; the disagreement term picks up delta[b][a].
            total += delta.get(b, a);
        }
    }
    // Diagonal r[i][i] = 1 contributes delta[i][i] = 0.
    total
}

/// Result of the exhaustive consensus search.
#[derive(Debug, Clone)]
pub struct CondorcetSolution {
    /// Candidates least to greatest.
    pub permutation: Vec<usize>,
    pub order: TotalOrderMatrix,
    pub objective: f64,
}

/// Exhaustive Kemeny consensus: scans all permutations in lexicographic
/// order and keeps the first one attaining the minimal disagreement, so
/// ties break toward the lexicographically smallest permutation.
pub fn exact_condorcet_order(delta: &MarginMatrix) -> Result<CondorcetSolution> {
    exact_condorcet_order_with_cap(delta, DEFAULT_EXACT_CAP)
}

pub fn exact_condorcet_order_with_cap(
    delta: &MarginMatrix,
    cap: usize,
) -> Result<CondorcetSolution> {
    let n = delta.n;
    if n > cap {
        return Err(Error::CandidateCap { n, cap });
    }
    if n == 0 {
        return Err(Error::InvalidValue("no candidates".into()));
    }

    struct Search<'a> {
        delta: &'a MarginMatrix,
        prefix: Vec<usize>,
        used: Vec<bool>,
        // pending[c] = sum over a in prefix of delta[c][a]: the cost of
        // appending c next (all prefix members sit below c).
        pending: Vec<f64>,
        best: Option<(f64, Vec<usize>)>,
    }

    impl Search<'_> {
        fn recurse(&mut self, cost: f64) {
            let n = self.delta.n();
            if self.prefix.len() == n {
                if self.best.as_ref().is_none_or(|(b, _)| cost < *b) {
                    self.best = Some((cost, self.prefix.clone()));
                }
                return;
            }
            for c in 0..n {
                if self.used[c] {
                    continue;
                }
                let step = self.pending[c];
                self.used[c] = true;
                self.prefix.push(c);
                for x in 0..n {
                    self.pending[x] += self.delta.get(x, c);
                }
                self.recurse(cost + step);
                for x in 0..n {
                    self.pending[x] -= self.delta.get(x, c);
                }
                self.prefix.pop();
                self.used[c] = false;
            }
        }
    }

    let mut search = Search {
        delta,
        prefix: Vec::with_capacity(n),
        used: vec![false; n],
        pending: vec![0.0; n],
        best: None,
    };
    search.recurse(0.0);
    let (objective, permutation) = search.best.expect("at least one permutation exists");
    let order = TotalOrderMatrix::from_permutation(&permutation)?;
    Ok(CondorcetSolution {
        permutation,
        order,
        objective,
    })
}

/// Borda scores of a profile: `score[i]` averages, over voters, the
/// fraction of other candidates ranked at or below `x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BordaScores {
    scores: Vec<f64>,
}

impl BordaScores {
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Candidates least to greatest by score, ties broken by index.
    pub fn induced_permutation(&self) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..self.scores.len()).collect();
        perm.sort_by(|&a, &b| self.scores[a].total_cmp(&self.scores[b]).then(a.cmp(&b)));
        perm
    }
}

pub fn borda_scores(orders: &[TotalOrderMatrix]) -> Result<BordaScores> {
    let m = orders.len();
    if m == 0 {
        return Err(Error::InvalidValue("profile needs at least one voter".into()));
    }
    let n = orders[0].n;
    if n < 2 {
        return Err(Error::InvalidValue(
            "Borda scores need at least two candidates".into(),
        ));
    }
    for o in orders {
        if o.n != n {
            return Err(Error::Dimension {
                expected: n,
                got: o.n,
            });
        }
    }
    let denom = (m * (n - 1)) as f64;
    let mut scores = vec![0.0; n];
    for (i, s) in scores.iter_mut().enumerate() {
        let mut count = 0u64;
        for o in orders {
            for j in 0..n {
                if j != i && o.leq(j, i) {
                    count += 1;
                }
            }
        }
        *s = count as f64 / denom;
    }
    Ok(BordaScores { scores })
}

/// Borda scores of the orderings a mapping family induces on distinct
/// values; score ties under a mapping count through the indicator on both
/// sides. The scores feed [`crate::ordering::RankLut::from_scored_colors`].
pub fn borda_scores_from_mappings(
    family: &[ReducedMapping],
    values: &[ColorValue],
) -> Result<BordaScores> {
    let m = family.len();
    if m == 0 {
        return Err(Error::InvalidValue("mapping family must be non-empty".into()));
    }
    let n = values.len();
    if n < 2 {
        return Err(Error::InvalidValue(
            "Borda scores need at least two candidates".into(),
        ));
    }
    ensure_distinct(values)?;
    let denom = (m * (n - 1)) as f64;
    let mut scores = vec![0.0; n];
    for h in family {
        let hs: Vec<f64> = values
            .iter()
            .map(|v| h.score(v))
            .collect::<Result<_>>()?;
        // Count, for each i, how many j != i have h(x_j) <= h(x_i). Sorting
        // the scores turns each count into a rank-position lookup.
        let mut sorted: Vec<f64> = hs.clone();
        sorted.sort_by(f64::total_cmp);
        for (i, &s) in hs.iter().enumerate() {
            let below_or_equal = sorted.partition_point(|&v| v <= s);
            // below_or_equal counts x_i itself exactly once.
            scores[i] += (below_or_equal - 1) as f64;
        }
    }
    for s in scores.iter_mut() {
        *s /= denom;
    }
    Ok(BordaScores { scores })
}

/// A voter profile: `m` total orders over `n` candidates.
#[derive(Debug, Clone)]
pub struct VoteProfile {
    pub n: usize,
    pub orders: Vec<TotalOrderMatrix>,
}

impl VoteProfile {
    pub fn from_permutations(perms: &[Vec<usize>]) -> Result<Self> {
        if perms.is_empty() {
            return Err(Error::InvalidValue("profile needs at least one voter".into()));
        }
        let n = perms[0].len();
        let mut orders = Vec::with_capacity(perms.len());
        for p in perms {
            if p.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: p.len(),
                });
            }
            orders.push(TotalOrderMatrix::from_permutation(p)?);
        }
        Ok(Self { n, orders })
    }

    /// Parses the profile text format: one line per voter, candidate
    /// indices least to greatest, comma-separated. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut perms = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perm: Vec<usize> = line
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<usize>().map_err(|_| Error::Format {
                        path: "<profile>".into(),
                        offset: lineno as u64 + 1,
                        message: format!("invalid candidate index '{}'", tok.trim()),
                    })
                })
                .collect::<Result<_>>()?;
            perms.push(perm);
        }
        Self::from_permutations(&perms)
    }

    pub fn margins(&self) -> Result<MarginMatrix> {
        MarginMatrix::from_orders(&self.orders)
    }
}

/// Formats a margin matrix as CSV rows.
pub fn margins_to_csv(delta: &MarginMatrix) -> String {
    let mut out = String::new();
    for i in 0..delta.n() {
        for j in 0..delta.n() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", delta.get(i, j));
        }
        out.push('\n');
    }
    out
}
