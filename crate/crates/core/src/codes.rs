//! Parity-set families with symmetric-difference distance, and a randomized
//! Gilbert--Varshamov style search for families of a target distance.
//!
//! A family of `k` subsets of a ground set `[ck]` generates a binary linear
//! code: the indicator vector of each set is a generator row, and the
//! symmetric difference over a nonempty index collection is the
//! corresponding codeword.  The family's distance is the minimum codeword
//! weight, which we verify exhaustively (desk-scale `k`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, DISTANCE_CAP_K};

/// `k` subsets of a ground set `{0, .., ground-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetFamily {
    ground: usize,
    sets: Vec<Vec<usize>>,
}

impl SetFamily {
    pub fn new(ground: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        if ground == 0 || sets.is_empty() {
            return Err(Error::InvalidSpec("set family needs k >= 1 sets over a nonempty ground set".into()));
        }
        for (i, s) in sets.iter().enumerate() {
            for (pos, &e) in s.iter().enumerate() {
                if e >= ground {
                    return Err(Error::InvalidSpec(format!(
                        "set {i} contains element {e} outside ground set of size {ground}"
                    )));
                }
                if s[..pos].contains(&e) {
                    return Err(Error::InvalidSpec(format!(
                        "set {i} repeats element {e}"
                    )));
                }
            }
        }
        Ok(SetFamily { ground, sets })
    }

    /// `k` pairwise disjoint blocks of `block` consecutive elements each,
    /// over a ground set of size `block * k`.
    pub fn disjoint_blocks(block: usize, k: usize) -> Self {
        let sets = (0..k)
            .map(|i| (i * block..(i + 1) * block).collect())
            .collect();
        SetFamily { ground: block * k, sets }
    }

    pub fn k(&self) -> usize {
        self.sets.len()
    }

    pub fn ground(&self) -> usize {
        self.ground
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    fn words(&self) -> usize {
        self.ground.div_ceil(64)
    }

    fn indicator(&self, i: usize) -> Vec<u64> {
        let mut w = vec![0u64; self.words()];
        for &e in &self.sets[i] {
            w[e / 64] |= 1u64 << (e % 64);
        }
        w
    }

    /// Symmetric-difference distance: the minimum, over nonempty index
    /// collections, of the size of the symmetric difference.  Enumerates all
    /// `2^k - 1` collections, recomputing each symmetric difference from the
    /// chosen indicator rows.
    pub fn distance(&self) -> Result<usize> {
        let k = self.k();
        if k > DISTANCE_CAP_K {
            return Err(Error::TooLargeK(k));
        }
        let rows: Vec<Vec<u64>> = (0..k).map(|i| self.indicator(i)).collect();
        let words = self.words();
        let mut best = usize::MAX;
        let mut acc = vec![0u64; words];
        for mask in 1usize..(1 << k) {
            acc.iter_mut().for_each(|w| *w = 0);
            for (i, row) in rows.iter().enumerate() {
                if (mask >> i) & 1 == 1 {
                    for (a, r) in acc.iter_mut().zip(row) {
                        *a ^= r;
                    }
                }
            }
            let weight: usize = acc.iter().map(|w| w.count_ones() as usize).sum();
            best = best.min(weight);
        }
        Ok(best)
    }

    /// Minimum nonzero-codeword weight of the generated code, computed by a
    /// Gray-code traversal that toggles one generator row per step.  This is
    /// an independent route to [`SetFamily::distance`].
    pub fn min_codeword_weight(&self) -> Result<usize> {
        let k = self.k();
        if k > DISTANCE_CAP_K {
            return Err(Error::TooLargeK(k));
        }
        let rows: Vec<Vec<u64>> = (0..k).map(|i| self.indicator(i)).collect();
        let mut cur = vec![0u64; self.words()];
        let mut best = usize::MAX;
        let mut prev_gray = 0usize;
        for t in 1usize..(1 << k) {
            let gray = t ^ (t >> 1);
            let toggled = (prev_gray ^ gray).trailing_zeros() as usize;
            prev_gray = gray;
            for (c, r) in cur.iter_mut().zip(&rows[toggled]) {
                *c ^= r;
            }
            let weight: usize = cur.iter().map(|w| w.count_ones() as usize).sum();
            best = best.min(weight);
        }
        Ok(best)
    }

    /// Early-exit check used by the search loop.
    fn distance_at_least(&self, d: usize) -> bool {
        let k = self.k();
        let rows: Vec<Vec<u64>> = (0..k).map(|i| self.indicator(i)).collect();
        let mut cur = vec![0u64; self.words()];
        let mut prev_gray = 0usize;
        for t in 1usize..(1 << k) {
            let gray = t ^ (t >> 1);
            let toggled = (prev_gray ^ gray).trailing_zeros() as usize;
            prev_gray = gray;
            for (c, r) in cur.iter_mut().zip(&rows[toggled]) {
                *c ^= r;
            }
            let weight: usize = cur.iter().map(|w| w.count_ones() as usize).sum();
            if weight < d {
                return false;
            }
        }
        true
    }
}

fn random_subset(ground: usize, rng: &mut impl Rng) -> Vec<usize> {
    (0..ground).filter(|_| rng.gen::<bool>()).collect()
}

fn to_words(ground: usize, set: &[usize]) -> Vec<u64> {
    let mut w = vec![0u64; ground.div_ceil(64)];
    for &e in set {
        w[e / 64] |= 1u64 << (e % 64);
    }
    w
}

/// Searches for a family of `k` subsets of `[c*k]` with distance at least
/// `d`.  Two seeded phases share the trial budget: whole random generator
/// matrices first, then greedy row-by-row extension (a candidate row is kept
/// only if every new codeword it spans has weight at least `d`), restarting
/// when a row stalls.  Every returned family is re-verified exhaustively.
/// Failure does not certify nonexistence.
pub fn gv_search(k: usize, c: usize, d: usize, seed: u64, budget: u64) -> Result<SetFamily> {
    let ground = c * k;
    if k == 0 || c == 0 {
        return Err(Error::InvalidSpec("gv_search needs k >= 1 and c >= 1".into()));
    }
    if k > DISTANCE_CAP_K {
        return Err(Error::TooLargeK(k));
    }
    if d > ground {
        return Err(Error::InvalidSpec(format!(
            "target distance {d} exceeds ground set size {ground}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials: u64 = 0;

    // Phase 1: whole random generator matrices.
    let phase1 = (budget / 4).max(1);
    while trials < phase1 {
        trials += 1;
        let sets: Vec<Vec<usize>> = (0..k).map(|_| random_subset(ground, &mut rng)).collect();
        let fam = SetFamily { ground, sets };
        if fam.distance_at_least(d) {
            debug_assert!(fam.distance()? >= d);
            return Ok(fam);
        }
    }

    // Phase 2: greedy basis extension with restarts.
    const STALL_LIMIT: u64 = 5000;
    while trials < budget {
        let mut rows: Vec<Vec<usize>> = Vec::with_capacity(k);
        let mut span: Vec<Vec<u64>> = vec![vec![0u64; ground.div_ceil(64)]];
        let mut stalled = false;
        while rows.len() < k && trials < budget {
            let mut accepted = false;
            let mut attempts: u64 = 0;
            while trials < budget && attempts < STALL_LIMIT {
                trials += 1;
                attempts += 1;
                let cand = random_subset(ground, &mut rng);
                let cand_words = to_words(ground, &cand);
                let ok = span.iter().all(|cw| {
                    let w: usize = cw
                        .iter()
                        .zip(&cand_words)
                        .map(|(a, b)| (a ^ b).count_ones() as usize)
                        .sum();
                    w >= d
                });
                if ok {
                    let new: Vec<Vec<u64>> = span
                        .iter()
                        .map(|cw| cw.iter().zip(&cand_words).map(|(a, b)| a ^ b).collect())
                        .collect();
                    span.extend(new);
                    rows.push(cand);
                    accepted = true;
                    break;
                }
            }
            if !accepted {
                stalled = true;
                break;
            }
        }
        if rows.len() == k {
            let fam = SetFamily { ground, sets: rows };
            // paranoid re-verification by the exhaustive route
            if fam.distance()? >= d {
                return Ok(fam);
            }
            return Err(Error::InvalidSpec(
                "internal: greedy span check disagreed with exhaustive distance".into(),
            ));
        }
        if !stalled {
            break; // budget ran out mid-row
        }
    }
    Err(Error::NotFound { d, trials })
}

/// Doubles `c` from `ceil(ln5 / delta)` until [`gv_search`] succeeds at the
/// target distance `ceil((ln5 / delta) * k)` (or an explicit `d`), giving
/// each level the full trial budget.  Returns the family and the `c` used.
pub fn gv_search_auto(
    k: usize,
    delta: f64,
    d: Option<usize>,
    seed: u64,
    budget: u64,
) -> Result<(SetFamily, usize)> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidSpec(format!("delta must lie in (0, 1/2], got {delta}")));
    }
    let ln5 = 5.0f64.ln();
    let d = d.unwrap_or_else(|| ((ln5 / delta) * k as f64).ceil() as usize);
    let mut c = ((ln5 / delta).ceil() as usize).max(1);
    let mut level = 0u64;
    let mut last = Error::NotFound { d, trials: 0 };
    while c * k <= 4096 {
        match gv_search(k, c, d, seed.wrapping_add(level), budget) {
            Ok(fam) => return Ok((fam, c)),
            Err(e @ Error::NotFound { .. }) => last = e,
            Err(e) => return Err(e),
        }
        c *= 2;
        level += 1;
    }
    Err(last)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_sets_have_distance_one() {
        let fam = SetFamily::new(2, vec![vec![0], vec![1]]).unwrap();
        assert_eq!(fam.distance().unwrap(), 1);
    }

    #[test]
    fn overlapping_pair() {
        // {0,1}, {1,2}: differences {0,1}, {1,2}, {0,2}, all of size 2
        let fam = SetFamily::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        assert_eq!(fam.distance().unwrap(), 2);
        assert_eq!(fam.min_codeword_weight().unwrap(), 2);
    }

    #[test]
    fn disjoint_blocks_have_block_distance() {
        for (block, k) in [(1, 3), (4, 2), (5, 4)] {
            let fam = SetFamily::disjoint_blocks(block, k);
            assert_eq!(fam.distance().unwrap(), block);
        }
    }

    #[test]
    fn dependent_rows_give_distance_zero() {
        let fam = SetFamily::new(4, vec![vec![0, 1], vec![0, 1]]).unwrap();
        assert_eq!(fam.distance().unwrap(), 0);
    }

    #[test]
    fn the_two_distance_routes_agree_on_random_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let ground = rng.gen_range(3..=24);
            let k = rng.gen_range(1..=6usize);
            let sets = (0..k).map(|_| random_subset(ground, &mut rng)).collect();
            if let Ok(fam) = SetFamily::new(ground, sets) {
                assert_eq!(fam.distance().unwrap(), fam.min_codeword_weight().unwrap());
            }
        }
    }

    #[test]
    fn gv_search_trivial_distance_one() {
        let fam = gv_search(5, 1, 1, 3, 10_000).unwrap();
        assert!(fam.distance().unwrap() >= 1);
        assert_eq!(fam.k(), 5);
        assert_eq!(fam.ground(), 5);
    }

    #[test]
    fn gv_search_k4_c6_d8() {
        let fam = gv_search(4, 6, 8, 11, 100_000).unwrap();
        assert!(fam.distance().unwrap() >= 8);
    }

    #[test]
    fn gv_search_is_deterministic() {
        let a = gv_search(4, 6, 8, 11, 100_000).unwrap();
        let b = gv_search(4, 6, 8, 11, 100_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gv_auto_scales_c() {
        // delta = 1/2, k = 6: target distance ceil(2 ln5 * 6) = 20
        let (fam, c) = gv_search_auto(6, 0.5, None, 5, 100_000).unwrap();
        assert!(fam.distance().unwrap() >= 20);
        assert_eq!(fam.ground(), c * 6);
    }

    #[test]
    fn gv_search_impossible_distance_reports_not_found() {
        // a [6, 3] binary code with distance 5 does not exist (Griesmer
        // needs length >= 5 + 3 + 2); the search must fail cleanly.
        let err = gv_search(3, 2, 5, 1, 2_000).unwrap_err();
        assert!(matches!(err, Error::NotFound { .. }));
    }
}
