//! Pairwise Wilcoxon signed-rank tests across methods and the Hasse
//! diagram of the resulting "statistically lower" relation.
//!
//! Conventions (the usual signed-rank ones): zero differences are dropped,
//! tied absolute differences receive average ranks, the exact permutation
//! distribution is used for up to 25 effective pairs, and the normal
//! approximation with tie correction (no continuity correction) beyond
//! that.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Which sample the significant difference favors (has larger values).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    AGreater,
    BGreater,
    Tied,
}

/// Outcome of one two-sided signed-rank test.
#[derive(Debug, Clone)]
pub struct SignedRankTest {
    /// Sum of the ranks of positive differences `a - b`.
    pub statistic: f64,
    pub p_value: f64,
    pub direction: Direction,
    pub significant: bool,
    pub alpha: f64,
    /// Pairs remaining after zero differences were dropped.
    pub n_used: usize,
}

/// A signed-rank test between two named methods.
#[derive(Debug, Clone)]
pub struct PairwiseTestResult {
    pub method_a: String,
    pub method_b: String,
    pub test: SignedRankTest,
}

/// Two-sided Wilcoxon signed-rank test on paired samples.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], alpha: f64) -> Result<SignedRankTest> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 10 {
        return Err(Error::Config(format!(
            "signed-rank test needs at least 10 pairs, got {}",
            a.len()
        )));
    }
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must be in (0, 1), got {alpha}")));
    }

    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        // All pairs tied: degenerate test.
        return Ok(SignedRankTest {
            statistic: 0.0,
            p_value: 1.0,
            direction: Direction::Tied,
            significant: false,
            alpha,
            n_used: 0,
        });
    }

    let ranks = average_ranks(&diffs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    let total = n as f64 * (n as f64 + 1.0) / 2.0;
    let w_minus = total - w_plus;

    let p_value = if n <= 25 {
        exact_two_sided_p(&ranks, w_plus)
    } else {
        normal_two_sided_p(&ranks, w_plus)
    };
    let p_value = p_value.min(1.0);

    let direction = if w_plus > w_minus {
        Direction::AGreater
    } else if w_plus < w_minus {
        Direction::BGreater
    } else {
        Direction::Tied
    };
    Ok(SignedRankTest {
        statistic: w_plus,
        p_value,
        direction,
        significant: p_value < alpha && direction != Direction::Tied,
        alpha,
        n_used: n,
    })
}

/// Average ranks of the absolute differences (ties share their mean rank).
fn average_ranks(diffs: &[f64]) -> Vec<f64> {
    let n = diffs.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
    let mut ranks = vec![0.0; n];
    let mut pos = 0;
    while pos < n {
        let mut end = pos + 1;
        while end < n && diffs[idx[end]].abs() == diffs[idx[pos]].abs() {
            end += 1;
        }
        // positions pos..end (0-based) share ranks pos+1 ..= end.
        let avg = (pos + 1 + end) as f64 / 2.0;
        for &i in &idx[pos..end] {
            ranks[i] = avg;
        }
        pos = end;
    }
    ranks
}

/// Exact two-sided p-value under the sign-flip distribution conditional on
/// the observed ranks. Doubling every rank makes all values integers, so
/// the distribution of `2 W+` comes out of a subset-sum count.
fn exact_two_sided_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    // counts[s] = number of sign assignments with doubled rank sum s.
    let mut counts = vec![0.0f64; max_sum + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=max_sum).rev() {
            counts[s] += counts[s - r];
        }
    }
    let total: f64 = 2.0f64.powi(ranks.len() as i32);
    let w2 = (2.0 * w_plus).round() as usize;
    let p_le: f64 = counts[..=w2].iter().sum::<f64>() / total;
    let p_ge: f64 = counts[w2..].iter().sum::<f64>() / total;
    2.0 * p_le.min(p_ge)
}

/// Normal approximation with tie correction.
fn normal_two_sided_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    // Tie correction: subtract sum(t^3 - t) / 48 over tie groups.
    let mut sorted: Vec<f64> = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut pos = 0;
    while pos < sorted.len() {
        let mut end = pos + 1;
        while end < sorted.len() && sorted[end] == sorted[pos] {
            end += 1;
        }
        let t = (end - pos) as f64;
        tie_term += t * t * t - t;
        pos = end;
    }
    let variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if variance <= 0.0 {
        return 1.0;
    }
    let z = (w_plus - mean) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    2.0 * (1.0 - normal.cdf(z.abs()))
}

/// Runs the test for every unordered method pair.
pub fn compare_methods(
    samples: &[(String, Vec<f64>)],
    alpha: f64,
) -> Result<Vec<PairwiseTestResult>> {
    let mut results = Vec::new();
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let test = wilcoxon_signed_rank(&samples[i].1, &samples[j].1, alpha)?;
            results.push(PairwiseTestResult {
                method_a: samples[i].0.clone(),
                method_b: samples[j].0.clone(),
                test,
            });
        }
    }
    Ok(results)
}

/// DOT text of the Hasse diagram of the significant "statistically lower"
/// relation. An edge `x -> y` states that `x` scored significantly lower
/// than `y`, so lower-valued methods sit at the top of the drawing. The
/// relation is transitively reduced; should the finite-sample relation
/// contain a cycle, all significant edges are kept and a warning comment
/// is emitted instead.
pub fn hasse_from_tests(results: &[PairwiseTestResult]) -> String {
    let mut methods: BTreeSet<String> = BTreeSet::new();
    for r in results {
        methods.insert(r.method_a.clone());
        methods.insert(r.method_b.clone());
    }
    let names: Vec<String> = methods.into_iter().collect();
    let index = |name: &str| names.iter().position(|n| n == name).unwrap();

    let n = names.len();
    let mut lower = vec![vec![false; n]; n]; // lower[i][j]: i significantly below j
    for r in results {
        if !r.test.significant {
            continue;
        }
        let (a, b) = (index(&r.method_a), index(&r.method_b));
        match r.test.direction {
            Direction::AGreater => lower[b][a] = true,
            Direction::BGreater => lower[a][b] = true,
            Direction::Tied => {}
        }
    }

    let cyclic = has_cycle(&lower);
    let edges = if cyclic {
        lower.clone()
    } else {
        transitive_reduction(&lower)
    };

    let mut out = String::from("digraph hasse {\n");
    out.push_str("  rankdir=TB;\n");
    if cyclic {
        out.push_str("  // WARNING: the significance relation contains a cycle;\n");
        out.push_str("  // all significant edges are shown without reduction.\n");
    }
    for name in &names {
        let _ = writeln!(out, "  \"{name}\";");
    }
    for i in 0..n {
        for j in 0..n {
            if edges[i][j] {
                let _ = writeln!(out, "  \"{}\" -> \"{}\";", names[i], names[j]);
            }
        }
    }
    out.push_str("}\n");
    out
}

fn has_cycle(adj: &[Vec<bool>]) -> bool {
    let n = adj.len();
    // 0 = unvisited, 1 = on stack, 2 = done.
    let mut state = vec![0u8; n];
    fn visit(v: usize, adj: &[Vec<bool>], state: &mut [u8]) -> bool {
        state[v] = 1;
        for (w, &edge) in adj[v].iter().enumerate() {
            if !edge {
                continue;
            }
            if state[w] == 1 || (state[w] == 0 && visit(w, adj, state)) {
                return true;
            }
        }
        state[v] = 2;
        false
    }
    (0..n).any(|v| state[v] == 0 && visit(v, adj, &mut state))
}

/// Removes every edge implied by a longer path (input must be acyclic).
fn transitive_reduction(adj: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = adj.len();
    let mut reach = adj.to_vec();
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut reduced = adj.to_vec();
    for i in 0..n {
        for j in 0..n {
            if !adj[i][j] {
                continue;
            }
            let implied = (0..n).any(|k| k != i && k != j && adj[i][k] && reach[k][j]);
            if implied {
                reduced[i][j] = false;
            }
        }
    }
    reduced
}

#[cfg(test)]
mod tests {
    use super::*;

    fn make_result(a: &str, b: &str, direction: Direction, significant: bool) -> PairwiseTestResult {
        PairwiseTestResult {
            method_a: a.into(),
            method_b: b.into(),
            test: SignedRankTest {
                statistic: 0.0,
                p_value: if significant { 0.001 } else { 0.5 },
                direction,
                significant,
                alpha: 0.01,
                n_used: 20,
            },
        }
    }

    #[test]
    fn equal_samples_are_degenerate() {
        let a: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let t = wilcoxon_signed_rank(&a, &a, 0.01).unwrap();
        assert_eq!(t.p_value, 1.0);
        assert!(!t.significant);
        assert_eq!(t.direction, Direction::Tied);
        assert_eq!(t.n_used, 0);
    }

    #[test]
    fn constant_shift_is_detected() {
        let b: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let a: Vec<f64> = b.iter().map(|v| v + 1.0).collect();
        let t = wilcoxon_signed_rank(&a, &b, 0.01).unwrap();
        assert!(t.p_value < 0.01, "p = {}", t.p_value);
        assert_eq!(t.direction, Direction::AGreater);
        assert!(t.significant);
    }

    #[test]
    fn hand_computed_statistic() {
        // Differences a - b: 1.5 -0.5 2 -1 3 0.5 -2.5 4 1 -3.5.
        // |d| ranks: 0.5 x2 -> 1.5 each; 1 x2 -> 3.5 each; 1.5 -> 5; 2 -> 6;
        // 2.5 -> 7; 3 -> 8; 3.5 -> 9; 4 -> 10.
        // W+ = 5 + 6 + 8 + 1.5 + 10 + 3.5 = 34.
        let b = vec![0.0; 10];
        let a = vec![1.5, -0.5, 2.0, -1.0, 3.0, 0.5, -2.5, 4.0, 1.0, -3.5];
        let t = wilcoxon_signed_rank(&a, &b, 0.05).unwrap();
        assert_eq!(t.statistic, 34.0);
        assert_eq!(t.n_used, 10);
    }

    #[test]
    fn swapping_samples_flips_direction_and_keeps_p() {
        let a = vec![2.0, 5.0, 1.0, 7.0, 3.5, 9.0, 0.5, 4.0, 6.0, 8.0, 2.5, 1.5];
        let b: Vec<f64> = a.iter().map(|v| v * 0.4 + 0.3).collect();
        let t_ab = wilcoxon_signed_rank(&a, &b, 0.01).unwrap();
        let t_ba = wilcoxon_signed_rank(&b, &a, 0.01).unwrap();
        assert_eq!(t_ab.p_value, t_ba.p_value);
        match t_ab.direction {
            Direction::AGreater => assert_eq!(t_ba.direction, Direction::BGreater),
            Direction::BGreater => assert_eq!(t_ba.direction, Direction::AGreater),
            Direction::Tied => assert_eq!(t_ba.direction, Direction::Tied),
        }
    }

    #[test]
    fn exact_p_matches_full_sign_enumeration() {
        // Independent oracle: enumerate all 2^n sign assignments of the
        // observed ranks and count sums at least as extreme as W+.
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = vec![
            (
                vec![1.0, 2.2, 0.4, 3.1, 5.5, 2.0, 0.9, 4.4, 3.3, 1.1, 2.6, 0.2],
                vec![0.5, 2.9, 0.1, 2.0, 6.0, 2.8, 0.3, 3.0, 3.9, 0.6, 2.0, 0.9],
            ),
            (
                // With ties in |d|.
                vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
                vec![0.0, 3.0, 2.0, 5.0, 4.0, 7.0, 6.0, 9.0, 8.0, 11.0],
            ),
        ];
        for (a, b) in pairs {
            let t = wilcoxon_signed_rank(&a, &b, 0.05).unwrap();
            let diffs: Vec<f64> = a
                .iter()
                .zip(&b)
                .map(|(x, y)| x - y)
                .filter(|d| *d != 0.0)
                .collect();
            let ranks = average_ranks(&diffs);
            let n = ranks.len();
            let mut le = 0u64;
            let mut ge = 0u64;
            for mask in 0u64..(1 << n) {
                let w: f64 = (0..n)
                    .filter(|k| mask & (1 << k) != 0)
                    .map(|k| ranks[k])
                    .sum();
                if w <= t.statistic + 1e-12 {
                    le += 1;
                }
                if w >= t.statistic - 1e-12 {
                    ge += 1;
                }
            }
            let total = (1u64 << n) as f64;
            let expected = (2.0 * (le as f64 / total).min(ge as f64 / total)).min(1.0);
            assert!(
                (t.p_value - expected).abs() < 1e-12,
                "p = {}, enumeration = {}",
                t.p_value,
                expected
            );
        }
    }

    #[test]
    fn length_checks() {
        assert!(wilcoxon_signed_rank(&[1.0; 5], &[0.0; 5], 0.05).is_err());
        assert!(wilcoxon_signed_rank(&[1.0; 12], &[0.0; 11], 0.05).is_err());
        assert!(wilcoxon_signed_rank(&[1.0; 12], &[0.0; 12], 1.5).is_err());
    }

    #[test]
    fn hasse_star_graph() {
        let results = vec![
            make_result("best", "m1", Direction::BGreater, true),
            make_result("best", "m2", Direction::BGreater, true),
            make_result("best", "m3", Direction::BGreater, true),
            make_result("m1", "m2", Direction::AGreater, false),
            make_result("m1", "m3", Direction::Tied, false),
            make_result("m2", "m3", Direction::Tied, false),
        ];
        let dot = hasse_from_tests(&results);
        assert!(dot.contains("\"best\" -> \"m1\";"));
        assert!(dot.contains("\"best\" -> \"m2\";"));
        assert!(dot.contains("\"best\" -> \"m3\";"));
        assert!(!dot.contains("\"m1\" -> "));
        assert!(!dot.contains("WARNING"));
    }

    #[test]
    fn hasse_no_significance_is_edgeless() {
        let results = vec![
            make_result("a", "b", Direction::AGreater, false),
            make_result("a", "c", Direction::Tied, false),
            make_result("b", "c", Direction::BGreater, false),
        ];
        let dot = hasse_from_tests(&results);
        assert!(!dot.contains("->"));
        assert!(dot.contains("\"a\";"));
        assert!(dot.contains("\"c\";"));
    }

    #[test]
    fn hasse_transitive_edge_removed() {
        // a below b, b below c, a below c: the long edge disappears.
        let results = vec![
            make_result("a", "b", Direction::BGreater, true),
            make_result("b", "c", Direction::BGreater, true),
            make_result("a", "c", Direction::BGreater, true),
        ];
        let dot = hasse_from_tests(&results);
        assert!(dot.contains("\"a\" -> \"b\";"));
        assert!(dot.contains("\"b\" -> \"c\";"));
        assert!(!dot.contains("\"a\" -> \"c\";"));
    }

    #[test]
    fn hasse_cycle_gets_warning() {
        let results = vec![
            make_result("a", "b", Direction::BGreater, true),
            make_result("b", "c", Direction::BGreater, true),
            make_result("c", "a", Direction::BGreater, true),
        ];
        let dot = hasse_from_tests(&results);
        assert!(dot.contains("WARNING"));
        assert!(dot.contains("\"a\" -> \"b\";"));
        assert!(dot.contains("\"c\" -> \"a\";"));
    }
}
