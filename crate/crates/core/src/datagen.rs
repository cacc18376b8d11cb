//! Deterministic synthetic datasets.
//!
//! The real rating logs the experiments were designed around are not bundled
//! here, so the generators below produce stand-ins with matching shape: a
//! MovieLens-100k-like rating log (943 users, ~1.6k items, 100k ratings on a
//! 1..=5 scale, ~82.5% of them above 2) and Delicious-like sparse pair
//! streams. Preferences follow a latent-group model so that collaborative
//! signal actually exists and accuracy grows as training data accrues.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::EdgeEvent;

/// Shape of a synthetic rating log.
#[derive(Debug, Clone)]
pub struct RatingLogConfig {
    pub users: usize,
    pub items: usize,
    pub records: usize,
    /// Latent preference groups shared by users and items.
    pub groups: usize,
    /// Zipf-like popularity skew exponent for items.
    pub popularity_skew: f64,
    /// Probability that a rating drawn for an in-group pair lands above the
    /// binary threshold of 2.
    pub in_group_high: f64,
    /// Same for out-of-group pairs.
    pub out_group_high: f64,
    /// Fraction of items (the coldest popularity ranks) that are rated badly
    /// regardless of taste; these mostly vanish under the binary conversion,
    /// like the real catalog's tail.
    pub junk_fraction: f64,
    /// High-rating probability on junk items.
    pub junk_high: f64,
    pub seed: u64,
}

impl RatingLogConfig {
    /// Dimensions mirroring the MovieLens-100k snapshot.
    pub fn movielens_like(seed: u64) -> Self {
        RatingLogConfig {
            users: 943,
            items: 1680,
            records: 100_000,
            groups: 12,
            popularity_skew: 0.78,
            in_group_high: 0.93,
            out_group_high: 0.835,
            junk_fraction: 0.095,
            junk_high: 0.02,
            seed,
        }
    }
}

/// One line of a ratings-tsv log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingRecord {
    pub user: u32,
    pub item: u32,
    pub rating: u8,
    pub ts: i64,
}

impl RatingRecord {
    pub fn to_tsv(&self) -> String {
        format!("{}\t{}\t{}\t{}", self.user, self.item, self.rating, self.ts)
    }
}

fn zipf_weights(n: usize, skew: f64) -> Vec<f64> {
    (1..=n).map(|r| 1.0 / (r as f64).powf(skew)).collect()
}

/// Assigns group memberships: entity index -> group, round-robin shuffled so
/// groups have even sizes but scattered ids.
fn assign_groups(n: usize, groups: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut slots: Vec<usize> = (0..n).map(|i| i % groups).collect();
    // Fisher-Yates, driven by the seeded stream.
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        slots.swap(i, j);
    }
    slots
}

/// Generates a full rating log. Every user is guaranteed at least one rating
/// above 2, so the binary conversion keeps the user population intact.
pub fn rating_log(cfg: &RatingLogConfig) -> Vec<RatingRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let user_group = assign_groups(cfg.users, cfg.groups, &mut rng);
    let item_group = assign_groups(cfg.items, cfg.groups, &mut rng);

    // Item popularity: zipf over a shuffled rank order.
    let mut item_rank: Vec<usize> = (0..cfg.items).collect();
    for i in (1..cfg.items).rev() {
        let j = rng.random_range(0..=i);
        item_rank.swap(i, j);
    }
    let weights = zipf_weights(cfg.items, cfg.popularity_skew);
    let mut item_weight = vec![0.0; cfg.items];
    let mut item_junk = vec![false; cfg.items];
    let junk_from = ((1.0 - cfg.junk_fraction) * cfg.items as f64) as usize;
    for (rank, &item) in item_rank.iter().enumerate() {
        item_weight[item] = weights[rank];
        item_junk[item] = rank >= junk_from;
    }

    // User activity is mildly skewed as well.
    let user_weights = zipf_weights(cfg.users, 0.4);
    let mut user_weight = vec![0.0; cfg.users];
    let mut user_rank: Vec<usize> = (0..cfg.users).collect();
    for i in (1..cfg.users).rev() {
        let j = rng.random_range(0..=i);
        user_rank.swap(i, j);
    }
    for (rank, &user) in user_rank.iter().enumerate() {
        user_weight[user] = user_weights[rank];
    }

    let user_dist = WeightedIndex::new(&user_weight).expect("positive weights");
    let item_dist = WeightedIndex::new(&item_weight).expect("positive weights");

    let mut seen = std::collections::HashSet::with_capacity(cfg.records * 2);
    let mut records = Vec::with_capacity(cfg.records);
    let base_ts: i64 = 880_000_000;
    while records.len() < cfg.records {
        let user = user_dist.sample(&mut rng) as u32;
        // In-group pairs are favored four to one, on top of popularity.
        let item = loop {
            let candidate = item_dist.sample(&mut rng) as u32;
            let in_group = user_group[user as usize] == item_group[candidate as usize];
            if in_group || rng.random_range(0.0..1.0) < 0.25 {
                break candidate;
            }
        };
        if !seen.insert((user, item)) {
            continue;
        }
        let in_group = user_group[user as usize] == item_group[item as usize];
        let p_high = if item_junk[item as usize] {
            cfg.junk_high
        } else if in_group {
            cfg.in_group_high
        } else {
            cfg.out_group_high
        };
        let rating = if rng.random_range(0.0..1.0) < p_high {
            // 3, 4 or 5, weighted toward 4 like real logs.
            *[3u8, 4, 4, 5, 5, 4].get(rng.random_range(0..6)).unwrap()
        } else {
            if rng.random_range(0.0..1.0) < 0.35 {
                1
            } else {
                2
            }
        };
        let ts = base_ts + records.len() as i64 * 7 + rng.random_range(0..5) as i64;
        records.push(RatingRecord {
            user,
            item,
            rating,
            ts,
        });
    }

    // Repair pass: every user must survive the >2 filter.
    let mut has_high = vec![false; cfg.users];
    for r in &records {
        if r.rating > 2 {
            has_high[r.user as usize] = true;
        }
    }
    for r in &mut records {
        if !has_high[r.user as usize] {
            r.rating = 4;
            has_high[r.user as usize] = true;
        }
    }
    records
}

/// Renders a rating log as ratings-tsv text.
pub fn rating_log_tsv(cfg: &RatingLogConfig) -> String {
    let mut out = String::new();
    for r in rating_log(cfg) {
        out.push_str(&r.to_tsv());
        out.push('\n');
    }
    out
}

/// Shape of a sparse bookmarking-style pair stream (no ratings).
#[derive(Debug, Clone)]
pub struct SparseStreamConfig {
    pub users: usize,
    pub items: usize,
    /// Target average item degree; edge count is items * degree.
    pub avg_item_degree: f64,
    pub groups: usize,
    pub seed: u64,
    /// Offset added to every label, letting two streams live in disjoint
    /// id spaces.
    pub label_offset: usize,
}

impl SparseStreamConfig {
    /// Delicious-like degree profile at desk scale.
    pub fn delicious_like(seed: u64) -> Self {
        SparseStreamConfig {
            users: 600,
            items: 4200,
            avg_item_degree: 3.8,
            groups: 15,
            seed,
            label_offset: 0,
        }
    }
}

/// Generates an add-only pair stream with the configured degree profile.
pub fn sparse_stream(cfg: &SparseStreamConfig) -> Vec<EdgeEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let user_group = assign_groups(cfg.users, cfg.groups, &mut rng);
    let item_group = assign_groups(cfg.items, cfg.groups, &mut rng);
    let item_weights = zipf_weights(cfg.items, 0.9);
    let mut shuffled_weight = vec![0.0; cfg.items];
    let mut rank: Vec<usize> = (0..cfg.items).collect();
    for i in (1..cfg.items).rev() {
        let j = rng.random_range(0..=i);
        rank.swap(i, j);
    }
    for (r, &item) in rank.iter().enumerate() {
        shuffled_weight[item] = item_weights[r];
    }
    let item_dist = WeightedIndex::new(&shuffled_weight).expect("positive weights");

    let edges = (cfg.items as f64 * cfg.avg_item_degree).round() as usize;
    // Every item enters the stream at least once so the realized average
    // degree equals the target; first appearances are spread over the whole
    // stream like a growing catalog.
    let mut unseeded: Vec<usize> = (0..cfg.items).collect();
    for i in (1..cfg.items).rev() {
        let j = rng.random_range(0..=i);
        unseeded.swap(i, j);
    }
    let mut seen = std::collections::HashSet::with_capacity(edges * 2);
    let mut events = Vec::with_capacity(edges);
    let mut ts: i64 = 1_000_000;
    while events.len() < edges {
        let left = edges - events.len();
        let take_seed = !unseeded.is_empty() && rng.random_range(0..left) < unseeded.len();
        let (user, item) = if take_seed {
            let item = unseeded.pop().unwrap();
            // Prefer an in-group user for the debut edge.
            let user = loop {
                let candidate = rng.random_range(0..cfg.users);
                if user_group[candidate] == item_group[item]
                    || rng.random_range(0.0..1.0) < 0.25
                {
                    break candidate;
                }
            };
            (user, item)
        } else {
            let user = rng.random_range(0..cfg.users);
            let item = loop {
                let candidate = item_dist.sample(&mut rng);
                if user_group[user] == item_group[candidate]
                    || rng.random_range(0.0..1.0) < 0.2
                {
                    break candidate;
                }
            };
            (user, item)
        };
        if !seen.insert((user, item)) {
            if take_seed {
                // The debut pair already existed; push the item back for a
                // different user next round.
                unseeded.push(item);
            }
            continue;
        }
        ts += 3;
        events.push(EdgeEvent::add(
            format!("u{}", user + cfg.label_offset),
            format!("i{}", item + cfg.label_offset),
            ts,
        ));
    }
    events
}

/// Interleaves a stream with a disjoint copy of itself: item count doubles
/// while every per-event neighborhood (and therefore per-event update cost)
/// keeps the identical profile.
pub fn doubled_universe(base: &SparseStreamConfig) -> Vec<EdgeEvent> {
    let first = sparse_stream(base);
    let mut shifted_cfg = base.clone();
    shifted_cfg.label_offset = base.users.max(base.items) + 1_000_000;
    let second = sparse_stream(&shifted_cfg);
    let mut out = Vec::with_capacity(first.len() * 2);
    for (a, b) in first.into_iter().zip(second) {
        out.push(a);
        out.push(b);
    }
    // Restore monotone timestamps after interleaving.
    for (idx, ev) in out.iter_mut().enumerate() {
        ev.ts = 1_000_000 + idx as i64;
    }
    out
}
