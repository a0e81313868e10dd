//! Shared test support: a deterministic generator and random valid pairs.

use cremona::{ClusterPoint, PlanePair, PointId, WeightedCluster};

/// SplitMix64: tiny, deterministic across platforms and versions.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed)
    }

    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in 0..bound (bound >= 1).
    pub fn below(&mut self, bound: u64) -> u64 {
        self.next() % bound.max(1)
    }

    pub fn range_i64(&mut self, lo: i64, hi: i64) -> i64 {
        lo + self.below((hi - lo + 1) as u64) as i64
    }

    pub fn chance(&mut self, num: u64, den: u64) -> bool {
        self.below(den) < num
    }
}

/// A random valid plane pair: degree in [2, max_degree], at most max_points
/// cluster points, proximity inequality and genus kept non-negative by
/// construction.
pub fn random_plane_pair(rng: &mut Rng, max_degree: i64, max_points: usize) -> PlanePair {
    loop {
        let degree = rng.range_i64(2, max_degree);
        let mut genus_budget = (degree - 1) * (degree - 2) / 2;
        let mut points: Vec<ClusterPoint> = Vec::new();
        // Remaining proximity allowance per point index.
        let mut allowance: Vec<i64> = Vec::new();
        let target = rng.below(max_points as u64 + 1) as usize;
        for k in 0..target {
            // Either a new free point or a point near an existing one.
            let parent_idx = if points.is_empty() || rng.chance(1, 2) {
                None
            } else {
                Some(rng.below(points.len() as u64) as usize)
            };
            let cap = match parent_idx {
                None => degree - 1,
                Some(i) => allowance[i].min(points[i].mult),
            };
            // Largest mult whose delta fits the genus budget.
            let mut mult = cap.min(degree - 1);
            while mult >= 1 && mult * (mult - 1) / 2 > genus_budget {
                mult -= 1;
            }
            if mult < 1 {
                continue;
            }
            if mult > 1 {
                mult = rng.range_i64(1.max(mult / 2), mult);
            }
            let id = PointId::new(format!("r{k}"));
            let point = match parent_idx {
                None => ClusterPoint::free(id, mult),
                Some(i) => {
                    allowance[i] -= mult;
                    ClusterPoint::near(id, mult, points[i].id.clone())
                }
            };
            genus_budget -= mult * (mult - 1) / 2;
            allowance.push(mult);
            points.push(point);
        }
        if let Ok(pair) = PlanePair::new(degree, WeightedCluster::new(points)) {
            return pair;
        }
    }
}

/// A random rational pair (combinatorial genus exactly zero): free nodes and
/// occasional small chains partitioning the full delta budget.
pub fn random_rational_pair(rng: &mut Rng, max_degree: i64) -> PlanePair {
    loop {
        let degree = rng.range_i64(1, max_degree);
        let mut budget = (degree - 1) * (degree - 2) / 2;
        let mut points: Vec<ClusterPoint> = Vec::new();
        let mut k = 0usize;
        while budget > 0 {
            k += 1;
            let max_mult = {
                // largest m with m(m-1)/2 <= budget, capped by degree - 1
                let mut m = degree - 1;
                while m * (m - 1) / 2 > budget {
                    m -= 1;
                }
                m
            };
            let mult = rng.range_i64(2, max_mult.max(2));
            if mult * (mult - 1) / 2 > budget {
                continue;
            }
            let id = PointId::new(format!("s{k}"));
            if mult == 2 && !points.is_empty() && rng.chance(1, 3) {
                // chain a double point under an existing double point
                if let Some(host) = points
                    .iter()
                    .filter(|p| p.mult == 2)
                    .map(|p| p.id.clone())
                    .next_back()
                {
                    let child_exists = points.iter().any(|p| p.parent.as_ref() == Some(&host));
                    if !child_exists {
                        points.push(ClusterPoint::near(id, 2, host));
                        budget -= 1;
                        continue;
                    }
                }
                points.push(ClusterPoint::free(id, 2));
                budget -= 1;
            } else {
                budget -= mult * (mult - 1) / 2;
                points.push(ClusterPoint::free(id, mult));
            }
        }
        if let Ok(pair) = PlanePair::new(degree, WeightedCluster::new(points)) {
            if pair.combinatorial_genus().to_string() == "0" {
                return pair;
            }
        }
    }
}
