//! Global irregularity of a processed image against its original.
//!
//! `phi = (D - W) / D`, where `D` sums the pixelwise L1 distances between
//! the two images and `W` is the minimum cost of transporting one image's
//! color multiset onto the other's under the L1 ground metric. The
//! identity pairing is a feasible transport plan, so `W <= D` and `phi`
//! lies in `[0, 1]`; `phi` is 0 for identical images and 1 when the
//! images are pixel permutations of each other.
//!
//! `W` is computed exactly by successive-shortest-path min-cost flow on
//! unique-color supply/demand histograms. Colors shared by both multisets
//! are matched in place first (optimal for any metric ground cost), which
//! keeps the flow problem small for morphology outputs. Images with more
//! unique colors than the configured cap are uniformly quantized to at
//! most `max_bins` bins for the transport step and flagged as such.

use std::collections::HashMap;

use crate::color::{channel_cmp_slices, l1_distance_slices, ColorImage};
use crate::error::{Error, Result};

/// Default cap on unique colors per image before quantization kicks in.
pub const DEFAULT_TRANSPORT_BINS: usize = 4096;

/// Result of the irregularity computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Irregularity {
    pub phi: f64,
    /// True when the transport step ran on quantized histograms.
    pub quantized: bool,
}

/// Global irregularity with the default color cap.
pub fn global_irregularity(original: &ColorImage, processed: &ColorImage) -> Result<f64> {
    Ok(global_irregularity_detailed(original, processed, DEFAULT_TRANSPORT_BINS)?.phi)
}

pub fn global_irregularity_detailed(
    original: &ColorImage,
    processed: &ColorImage,
    max_bins: usize,
) -> Result<Irregularity> {
    if original.width() != processed.width()
        || original.height() != processed.height()
        || original.dim() != processed.dim()
    {
        return Err(Error::Dimension {
            expected: original.dim(),
            got: processed.dim(),
        });
    }
    if max_bins < 2 {
        return Err(Error::Config("transport bin cap must be at least 2".into()));
    }

    let pixelwise: f64 = original
        .pixels()
        .zip(processed.pixels())
        .map(|(a, b)| l1_distance_slices(a, b))
        .sum();
    if pixelwise == 0.0 {
        return Ok(Irregularity {
            phi: 0.0,
            quantized: false,
        });
    }

    let dim = original.dim();
    let mut hist_a = histogram(original);
    let mut hist_b = histogram(processed);
    let quantized = hist_a.len() > max_bins || hist_b.len() > max_bins;
    if quantized {
        let side = bins_per_channel(max_bins, dim);
        hist_a = quantize_histogram(&hist_a, dim, side);
        hist_b = quantize_histogram(&hist_b, dim, side);
    }
    remove_common_mass(&mut hist_a, &mut hist_b);

    let transport = min_cost_transport(&hist_a, &hist_b, dim);
    let phi = ((pixelwise - transport) / pixelwise).clamp(0.0, 1.0);
    Ok(Irregularity { phi, quantized })
}

/// Unique colors with multiplicities, sorted channel-lexicographically so
/// the flow solver sees a deterministic layout.
fn histogram(image: &ColorImage) -> Vec<(Vec<f64>, u64)> {
    let mut counts: HashMap<Vec<u64>, (Vec<f64>, u64)> = HashMap::new();
    for px in image.pixels() {
        let key: Vec<u64> = px.iter().map(|c| c.to_bits()).collect();
        counts
            .entry(key)
            .and_modify(|(_, n)| *n += 1)
            .or_insert_with(|| (px.to_vec(), 1));
    }
    let mut hist: Vec<(Vec<f64>, u64)> = counts.into_values().collect();
    hist.sort_by(|a, b| channel_cmp_slices(&a.0, &b.0));
    hist
}

fn bins_per_channel(max_bins: usize, dim: usize) -> usize {
    let side = (max_bins as f64).powf(1.0 / dim as f64).floor() as usize;
    side.max(2)
}

fn quantize_histogram(hist: &[(Vec<f64>, u64)], dim: usize, side: usize) -> Vec<(Vec<f64>, u64)> {
    let mut counts: HashMap<Vec<u64>, (Vec<f64>, u64)> = HashMap::new();
    for (color, n) in hist {
        let center: Vec<f64> = color
            .iter()
            .map(|&c| {
                let bin = ((c * side as f64) as usize).min(side - 1);
                (bin as f64 + 0.5) / side as f64
            })
            .collect();
        let key: Vec<u64> = center.iter().map(|c| c.to_bits()).collect();
        counts
            .entry(key)
            .and_modify(|(_, m)| *m += n)
            .or_insert_with(|| (center, *n));
    }
    let mut out: Vec<(Vec<f64>, u64)> = counts.into_values().collect();
    out.sort_by(|a, b| channel_cmp_slices(&a.0, &b.0));
    debug_assert!(out.len() <= side.pow(dim as u32));
    out
}

/// Cancels mass shared by both histograms; keeping common mass in place is
/// optimal because the ground cost is a metric.
fn remove_common_mass(a: &mut Vec<(Vec<f64>, u64)>, b: &mut Vec<(Vec<f64>, u64)>) {
    let mut i = 0;
    let mut j = 0;
    while i < a.len() && j < b.len() {
        match channel_cmp_slices(&a[i].0, &b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let shared = a[i].1.min(b[j].1);
                a[i].1 -= shared;
                b[j].1 -= shared;
                i += 1;
                j += 1;
            }
        }
    }
    a.retain(|(_, n)| *n > 0);
    b.retain(|(_, n)| *n > 0);
}

/// Exact min-cost transport between two equal-mass histograms under the
/// L1 ground metric: successive shortest augmenting paths with potentials.
/// Costs are non-negative, so plain Dijkstra phases suffice.
fn min_cost_transport(
    supplies: &[(Vec<f64>, u64)],
    demands: &[(Vec<f64>, u64)],
    _dim: usize,
) -> f64 {
    let n_sup = supplies.len();
    let n_dem = demands.len();
    if n_sup == 0 || n_dem == 0 {
        debug_assert_eq!(n_sup, n_dem, "histograms must carry equal residual mass");
        return 0.0;
    }
    let mut cost = vec![0.0f64; n_sup * n_dem];
    for (i, (ca, _)) in supplies.iter().enumerate() {
        for (j, (cb, _)) in demands.iter().enumerate() {
            cost[i * n_dem + j] = l1_distance_slices(ca, cb);
        }
    }

    let mut rem_sup: Vec<u64> = supplies.iter().map(|(_, n)| *n).collect();
    let mut rem_dem: Vec<u64> = demands.iter().map(|(_, n)| *n).collect();
    // flow kept per demand as (supply, amount) pairs; stays sparse.
    let mut flow_by_dem: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n_dem];
    // Node ids: 0..n_sup supplies, n_sup..n_sup+n_dem demands.
    let n_nodes = n_sup + n_dem;
    let mut potential = vec![0.0f64; n_nodes];
    let mut remaining: u64 = rem_sup.iter().sum();
    debug_assert_eq!(remaining, rem_dem.iter().sum::<u64>());

    let mut dist = vec![0.0f64; n_nodes];
    let mut parent = vec![usize::MAX; n_nodes];
    let mut done = vec![false; n_nodes];

    while remaining > 0 {
        dist.fill(f64::INFINITY);
        parent.fill(usize::MAX);
        done.fill(false);
        for i in 0..n_sup {
            if rem_sup[i] > 0 {
                dist[i] = 0.0;
            }
        }
        let mut target = usize::MAX;
        loop {
            // Dense extract-min over unfinished nodes.
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for x in 0..n_nodes {
                if !done[x] && dist[x] < best {
                    best = dist[x];
                    u = x;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u >= n_sup && rem_dem[u - n_sup] > 0 {
                target = u;
                break;
            }
            if u < n_sup {
                // Forward arcs to every demand.
                let i = u;
                for j in 0..n_dem {
                    let v = n_sup + j;
                    if done[v] {
                        continue;
                    }
                    let reduced = cost[i * n_dem + j] + potential[i] - potential[v];
                    let nd = dist[u] + reduced;
                    if nd < dist[v] {
                        dist[v] = nd;
                        parent[v] = u;
                    }
                }
            } else {
                // Backward arcs along existing flow.
                let j = u - n_sup;
                for &(i, f) in &flow_by_dem[j] {
                    if f == 0 || done[i] {
                        continue;
                    }
                    let reduced = -cost[i * n_dem + j] + potential[u] - potential[i];
                    let nd = dist[u] + reduced;
                    if nd < dist[i] {
                        dist[i] = nd;
                        parent[i] = u;
                    }
                }
            }
        }
        assert!(target != usize::MAX, "transport network must stay connected");

        // Retrace the augmenting path and find the bottleneck.
        let sink_dem = target - n_sup;
        let mut bottleneck = rem_dem[sink_dem];
        let mut node = target;
        while parent[node] != usize::MAX {
            let prev = parent[node];
            if node < n_sup {
                // Backward arc demand(prev) -> supply(node).
                let j = prev - n_sup;
                let f = flow_by_dem[j]
                    .iter()
                    .find(|(i, _)| *i == node)
                    .map(|(_, f)| *f)
                    .unwrap_or(0);
                bottleneck = bottleneck.min(f);
            }
            node = prev;
        }
        bottleneck = bottleneck.min(rem_sup[node]);
        debug_assert!(bottleneck > 0);

        // Apply the augmentation.
        let source_sup = node;
        let mut node = target;
        while parent[node] != usize::MAX {
            let prev = parent[node];
            if node >= n_sup {
                // Forward arc supply(prev) -> demand(node).
                let j = node - n_sup;
                match flow_by_dem[j].iter_mut().find(|(i, _)| *i == prev) {
                    Some(entry) => entry.1 += bottleneck,
                    None => flow_by_dem[j].push((prev, bottleneck)),
                }
            } else {
                let j = prev - n_sup;
                let entry = flow_by_dem[j]
                    .iter_mut()
                    .find(|(i, _)| *i == node)
                    .expect("backward arc carries flow");
                entry.1 -= bottleneck;
            }
            node = prev;
        }
        rem_sup[source_sup] -= bottleneck;
        rem_dem[sink_dem] -= bottleneck;
        remaining -= bottleneck;

        // Fold distances into the potentials to keep reduced costs >= 0.
        let reach = dist[target];
        for x in 0..n_nodes {
            if dist[x].is_finite() {
                potential[x] += dist[x].min(reach);
            } else {
                potential[x] += reach;
            }
        }
        flow_by_dem
            .iter_mut()
            .for_each(|v| v.retain(|(_, f)| *f > 0));
    }

    let mut total = 0.0;
    for (j, flows) in flow_by_dem.iter().enumerate() {
        for &(i, f) in flows {
            total += f as f64 * cost[i * n_dem + j];
        }
    }
    total
}
