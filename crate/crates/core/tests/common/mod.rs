//! Reference implementations shared by the integration tests. Nothing here
//! calls into the clustering code; inputs are plain counter tables.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Category of each attribute: 0 context, 1 action, 2 outcome.
pub struct Layout {
    pub cats: Vec<u8>,
    pub sizes: Vec<usize>,
    pub weights: Vec<f64>,
    /// Index of the attribute left out of every distance.
    pub skip: Option<usize>,
}

pub type Counts = Vec<Vec<u32>>;

/// Weighted L1 distance between value frequencies, summed over one category.
pub fn oracle_category(layout: &Layout, a: &Counts, b: &Counts, cat: u8) -> f64 {
    let mut sum = 0.0;
    for d in 0..layout.cats.len() {
        if layout.cats[d] != cat || Some(d) == layout.skip {
            continue;
        }
        let na: u32 = a[d].iter().sum();
        let nb: u32 = b[d].iter().sum();
        if na == 0 || nb == 0 {
            continue;
        }
        let mut inner = 0.0;
        for m in 0..layout.sizes[d] {
            let fa = a[d][m] as f64 / na as f64;
            let fb = b[d][m] as f64 / nb as f64;
            inner += if fa > fb { fa - fb } else { fb - fa };
        }
        sum += layout.weights[d] * inner;
    }
    sum
}

pub fn oracle_distance(layout: &Layout, a: &Counts, b: &Counts, alpha: f64, normalize: bool) -> f64 {
    let mut parts = [0.0; 3];
    for c in 0..3u8 {
        let mut d = oracle_category(layout, a, b, c);
        if normalize {
            let t: f64 = (0..layout.cats.len())
                .filter(|&i| layout.cats[i] == c && Some(i) != layout.skip)
                .map(|i| layout.weights[i])
                .sum();
            if t > 0.0 {
                d /= t;
            }
        }
        parts[c as usize] = d;
    }
    alpha * parts[0] + (1.0 - alpha) * (parts[1] + parts[2])
}

/// One recorded merge: member lists of both sides and the distance.
pub type OracleMerge = (Vec<usize>, Vec<usize>, f64);

/// Exhaustive scan: every round recomputes all pairwise distances from
/// scratch and merges the minimum (ties within 1e-9 go to the smallest pair
/// of lowest member ids).
pub fn oracle_agglomerate(
    layout: &Layout,
    leaves: &[Counts],
    alpha: f64,
    normalize: bool,
    stop: f64,
) -> Vec<OracleMerge> {
    let mut clusters: Vec<(Vec<usize>, Counts)> = leaves.iter().cloned().enumerate().map(|(i, c)| (vec![i], c)).collect();
    let mut out = Vec::new();
    while clusters.len() > 1 {
        let mut all = Vec::new();
        for i in 0..clusters.len() {
            for j in 0..clusters.len() {
                if i < j {
                    all.push((oracle_distance(layout, &clusters[i].1, &clusters[j].1, alpha, normalize), i, j));
                }
            }
        }
        let min = all.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
        if min > stop {
            break;
        }
        let (d, i, j) = all
            .into_iter()
            .filter(|x| x.0 <= min + 1e-9)
            .min_by_key(|&(_, i, j)| {
                let (a, b) = (clusters[i].0[0], clusters[j].0[0]);
                (a.min(b), a.max(b))
            })
            .unwrap();
        let (lo, hi) = if clusters[i].0[0] < clusters[j].0[0] { (i, j) } else { (j, i) };
        let b = clusters.remove(hi.max(lo));
        let a = clusters.remove(hi.min(lo));
        let (a, b) = if a.0[0] < b.0[0] { (a, b) } else { (b, a) };
        out.push((a.0.clone(), b.0.clone(), d));
        let mut members: Vec<usize> = a.0.iter().chain(&b.0).copied().collect();
        members.sort();
        let counts = a.1.iter().zip(&b.1).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect()).collect();
        clusters.push((members, counts));
    }
    out
}

/// Random counters shaped like `layout`; roughly one attribute in six is
/// left undefined.
pub fn random_counts(rng: &mut ChaCha8Rng, layout: &Layout, max: u32) -> Counts {
    layout
        .sizes
        .iter()
        .map(|&n| {
            if rng.gen_ratio(1, 6) {
                vec![0; n]
            } else {
                (0..n).map(|_| rng.gen_range(0..=max)).collect()
            }
        })
        .collect()
}
