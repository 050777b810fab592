#![allow(dead_code)]

use rand::Rng;

use entnet::photonics::Picos;

/// Histogram of `b − a` by enumerating every pair.
pub fn brute_histogram(a: &[Picos], b: &[Picos], bin: Picos, range: Picos, center: Picos) -> Vec<u64> {
    let start = center - range / 2;
    let mut counts = vec![0u64; (range / bin) as usize];
    for &ta in a {
        for &tb in b {
            let d = tb - ta - start;
            if (0..range).contains(&d) {
                counts[(d / bin) as usize] += 1;
            }
        }
    }
    counts
}

/// Every `(i, j)` with `|b_j − a_i − offset| ≤ window/2`, by enumeration.
pub fn brute_pairs(a: &[Picos], b: &[Picos], window: Picos, offset: Picos) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, &ta) in a.iter().enumerate() {
        for (j, &tb) in b.iter().enumerate() {
            if 2 * (tb - ta - offset).abs() <= window {
                out.push((i, j));
            }
        }
    }
    out
}

/// Maximum bipartite matching size by augmenting paths.
pub fn max_matching(edges: &[(usize, usize)], n_a: usize, n_b: usize) -> usize {
    let mut adj = vec![Vec::new(); n_a];
    for &(i, j) in edges {
        adj[i].push(j);
    }
    let mut owner: Vec<Option<usize>> = vec![None; n_b];
    fn augment(i: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                if owner[j].is_none_or(|k| augment(k, adj, seen, owner)) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    (0..n_a).filter(|&i| augment(i, &adj, &mut vec![false; n_b], &mut owner)).count()
}

/// Sorted stream of `n` distinct tags with gaps of at least `min_gap`.
pub fn spaced_stream<R: Rng>(rng: &mut R, n: usize, min_gap: Picos, spread: Picos) -> Vec<Picos> {
    let mut t = rng.random_range(0..spread);
    (0..n)
        .map(|_| {
            t += min_gap + rng.random_range(0..spread);
            t
        })
        .collect()
}

/// Sorted stream of `n` tags drawn uniformly from `[0, span)`, duplicates
/// allowed.
pub fn dense_stream<R: Rng>(rng: &mut R, n: usize, span: Picos) -> Vec<Picos> {
    let mut v: Vec<Picos> = (0..n).map(|_| rng.random_range(0..span)).collect();
    v.sort_unstable();
    v
}

/// A conflict-free pair of streams: `a` is spaced at least `4·window`
/// apart; `b` holds a jittered partner for a random subset of `a` (within
/// the window around `offset`) plus noise tags halfway between partners.
pub fn conflict_free_pair<R: Rng>(rng: &mut R, n: usize, window: Picos, offset: Picos) -> (Vec<Picos>, Vec<Picos>) {
    let a = spaced_stream(rng, n, 4 * window, 10 * window);
    let half = window / 2;
    let mut b = Vec::new();
    for (i, &t) in a.iter().enumerate() {
        if rng.random_bool(0.6) {
            b.push(t + offset + rng.random_range(-half..=half));
        }
        if let Some(&next) = a.get(i + 1) {
            if rng.random_bool(0.3) {
                b.push(t + offset + (next - t) / 2);
            }
        }
    }
    b.sort_unstable();
    (a, b)
}

/// Timing spreads of the single intra link of a two-user network.
pub struct LinkSpreads {
    /// Robust spread of opposite-path delays, ps.
    pub matched_ps: f64,
    /// Robust spread of same-path delays, ps.
    pub same_sign_ps: f64,
    pub jitter_floor_ps: f64,
    pub matched_pairs: usize,
    pub same_sign_pairs: usize,
    pub resource: String,
}

/// Simulates one entanglement resource (offset `first_offset` from the
/// pump) shared by two users, and measures both spreads; the 4096 ps
/// monitor window keeps the same-path distribution untruncated.
pub fn link_spreads(bandwidth_ghz: f64, first_offset: i32, duration_s: f64, seed: u64) -> LinkSpreads {
    use entnet::doqkd::{analyze_link_key, jitter_floor_ps, QkdParams};
    use entnet::plan::{build_plan, PlanSpec, SubnetId};
    use entnet::sim::{run_scenario, Scenario};

    let plan = build_plan(&PlanSpec { first_offset, ..PlanSpec::new(1, 2) }).unwrap();
    let mut sc = Scenario::default();
    sc.source.bandwidth_ghz = bandwidth_ghz;
    sc.source.pair_rate = 4e6;
    let out = run_scenario(&plan, &sc, duration_s, seed).unwrap();
    let params = QkdParams { monitor_window_ps: 4096, ..QkdParams::default() };
    let (a, b) = (plan.user_at(SubnetId(0), 0), plan.user_at(SubnetId(0), 1));
    let r = analyze_link_key(&out, &plan, &sc, a, b, &params).unwrap();
    let pair = plan.resources()[0].pair;
    LinkSpreads {
        matched_ps: r.matched_spread_ps.unwrap(),
        same_sign_ps: r.monitor.spread_ps.unwrap(),
        jitter_floor_ps: jitter_floor_ps(&sc),
        matched_pairs: r.sifted_symbols + r.discarded.guard_band as usize + r.discarded.multi_event as usize
            + r.discarded.frame_mismatch as usize,
        same_sign_pairs: r.monitor.pairs,
        resource: format!("{}/{}", pair.signal, pair.idler),
    }
}
