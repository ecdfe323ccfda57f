//! Parity-addressed multiplexer targets and their exact address-law and
//! split-survey computations.
//!
//! A target here has `k` address bits `z_g`, each the XOR of a group of
//! addressing input bits, selecting one of `2^k` memory input bits.  The law
//! of the address under a product distribution is computed through the
//! character-sum identity
//!
//! ```text
//! Pr[z = a] = 2^-k * sum_{I subset [k]} prod_{g in I} (1 - 2 a_g) * E[prod_{g in I} (1 - 2 z_g)]
//! ```
//!
//! where `E[prod_{g in I} (1 - 2 z_g)] = prod_{j in S_I} (1 - 2 p_j)` and
//! `S_I` is the symmetric difference of the groups in `I`.  Evaluating all
//! `2^k` coefficients (Gray-code walk over subsets) and applying a fast
//! Walsh--Hadamard transform yields the full law in `O(2^k (k + |ground|))`.
//! For pairwise disjoint groups the address bits are independent and the law
//! factorizes, which is implemented as a separate route.

use serde::{Deserialize, Serialize};

use crate::codes::SetFamily;
use crate::dist::xor_bias;
use crate::{Error, Result};

/// Hard cap on the number of address bits (memory size `2^k`).
pub const MAX_K: usize = 20;

/// Shared shape of an addressing target: group definitions plus the index
/// layout (addressing bits first, then memory bits in lexicographic address
/// order).  Address bit `g` occupies integer bit `k - 1 - g`, so address
/// tuples compare lexicographically as integers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddressingLayout {
    k: usize,
    num_addressing: usize,
    groups: Vec<Vec<usize>>,
    disjoint: bool,
}

impl AddressingLayout {
    pub(crate) fn new(num_addressing: usize, groups: Vec<Vec<usize>>, disjoint: bool) -> Result<Self> {
        let k = groups.len();
        if k == 0 || k > MAX_K {
            return Err(Error::InvalidSpec(format!("k must lie in 1..={MAX_K}, got {k}")));
        }
        for (g, grp) in groups.iter().enumerate() {
            if grp.is_empty() {
                return Err(Error::InvalidSpec(format!("address group {g} is empty")));
            }
            if grp.iter().any(|&j| j >= num_addressing) {
                return Err(Error::InvalidSpec(format!(
                    "address group {g} references a bit outside the {num_addressing} addressing bits"
                )));
            }
        }
        Ok(AddressingLayout { k, num_addressing, groups, disjoint })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_addressing(&self) -> usize {
        self.num_addressing
    }

    pub fn num_addresses(&self) -> usize {
        1 << self.k
    }

    pub fn arity(&self) -> usize {
        self.num_addressing + self.num_addresses()
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn is_disjoint(&self) -> bool {
        self.disjoint
    }

    /// Index of the memory bit selected by address `a`.
    pub fn memory_index(&self, a: usize) -> usize {
        debug_assert!(a < self.num_addresses());
        self.num_addressing + a
    }

    pub fn is_memory(&self, var: usize) -> bool {
        var >= self.num_addressing
    }

    /// Computes the address selected by input `x` (full arity).
    pub fn address_of(&self, x: &[bool]) -> usize {
        let mut addr = 0usize;
        for (g, grp) in self.groups.iter().enumerate() {
            let mut z = false;
            for &j in grp {
                z ^= x[j];
            }
            if z {
                addr |= 1 << (self.k - 1 - g);
            }
        }
        addr
    }

    /// Exact law of the address under the given effective biases
    /// (point masses encode conditioned bits).
    pub fn address_pmf(&self, biases: &[f64]) -> Vec<f64> {
        if self.disjoint {
            self.pmf_disjoint(biases)
        } else {
            self.pmf_character_sum(biases)
        }
    }

    /// Factorized route for disjoint groups: the address bits are
    /// independent, so the law is the product of per-group XOR biases.
    pub(crate) fn pmf_disjoint(&self, biases: &[f64]) -> Vec<f64> {
        let q: Vec<f64> = self
            .groups
            .iter()
            .map(|grp| {
                let grp_biases: Vec<f64> = grp.iter().map(|&j| biases[j]).collect();
                xor_bias(&grp_biases).expect("groups are nonempty")
            })
            .collect();
        let mut pmf = vec![1.0f64];
        for &qg in &q {
            let mut next = vec![0.0; pmf.len() * 2];
            for (i, &p) in pmf.iter().enumerate() {
                next[2 * i] = p * (1.0 - qg);
                next[2 * i + 1] = p * qg;
            }
            pmf = next;
        }
        pmf
    }

    /// Character-sum route for general (overlapping) groups.
    pub(crate) fn pmf_character_sum(&self, biases: &[f64]) -> Vec<f64> {
        let nk = self.num_addresses();
        let words = self.num_addressing.div_ceil(64);
        let group_words: Vec<Vec<u64>> = self
            .groups
            .iter()
            .map(|grp| {
                let mut w = vec![0u64; words];
                for &j in grp {
                    w[j / 64] |= 1u64 << (j % 64);
                }
                w
            })
            .collect();

        let mut coeffs = vec![0.0f64; nk];
        coeffs[0] = 1.0; // empty product
        let mut cur = vec![0u64; words];
        let mut prev_gray = 0usize;
        for t in 1..nk {
            let gray = t ^ (t >> 1);
            let toggled_pos = (prev_gray ^ gray).trailing_zeros() as usize;
            prev_gray = gray;
            let g = self.k - 1 - toggled_pos;
            for (c, w) in cur.iter_mut().zip(&group_words[g]) {
                *c ^= w;
            }
            let mut prod = 1.0;
            for (wi, word) in cur.iter().enumerate() {
                let mut bits = *word;
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    prod *= 1.0 - 2.0 * biases[wi * 64 + b];
                    bits &= bits - 1;
                }
            }
            coeffs[gray] = prod;
        }
        wht_inplace(&mut coeffs);
        let scale = 1.0 / nk as f64;
        for v in coeffs.iter_mut() {
            *v *= scale;
            // exact values are probabilities; clip transform round-off
            if *v < 0.0 {
                debug_assert!(*v > -1e-12);
                *v = 0.0;
            }
        }
        coeffs
    }
}

/// In-place Walsh--Hadamard transform: `out[a] = sum_I (-1)^{popcount(I & a)} v[I]`.
pub(crate) fn wht_inplace(v: &mut [f64]) {
    debug_assert!(v.len().is_power_of_two());
    let mut h = 1;
    while h < v.len() {
        for chunk in v.chunks_mut(2 * h) {
            for i in 0..h {
                let a = chunk[i];
                let b = chunk[i + h];
                chunk[i] = a + b;
                chunk[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Multiplexer whose address bit `g` is the XOR of its own block of
/// `c * k` addressing bits, laid out row-major: `c*k*k` addressing bits
/// followed by `2^k` memory bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisjointParityAddressing {
    c: usize,
    k: usize,
    layout: AddressingLayout,
}

impl DisjointParityAddressing {
    pub fn new(c: usize, k: usize) -> Result<Self> {
        if c == 0 {
            return Err(Error::InvalidSpec("c must be >= 1".into()));
        }
        let block = c * k;
        let groups = (0..k).map(|g| (g * block..(g + 1) * block).collect()).collect();
        let layout = AddressingLayout::new(block * k, groups, true)?;
        Ok(DisjointParityAddressing { c, k, layout })
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn layout(&self) -> &AddressingLayout {
        &self.layout
    }

    /// Index of addressing bit `(g, j)` with `g < k`, `j < c*k`.
    pub fn addressing_index(&self, g: usize, j: usize) -> usize {
        debug_assert!(g < self.k && j < self.c * self.k);
        g * self.c * self.k + j
    }
}

/// Multiplexer whose address bits are XORs over sets from a [`SetFamily`]:
/// `c * k` addressing bits followed by `2^k` memory bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodedAddressing {
    c: usize,
    k: usize,
    family: SetFamily,
    layout: AddressingLayout,
}

impl CodedAddressing {
    pub fn new(c: usize, k: usize, family: SetFamily) -> Result<Self> {
        if c == 0 {
            return Err(Error::InvalidSpec("c must be >= 1".into()));
        }
        if family.k() != k {
            return Err(Error::InvalidSpec(format!(
                "set family has {} sets but k = {k}",
                family.k()
            )));
        }
        if family.ground() != c * k {
            return Err(Error::InvalidSpec(format!(
                "set family ground size {} != c*k = {}",
                family.ground(),
                c * k
            )));
        }
        let layout = AddressingLayout::new(c * k, family.sets().to_vec(), false)?;
        Ok(CodedAddressing { c, k, family, layout })
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn family(&self) -> &SetFamily {
        &self.family
    }

    pub fn layout(&self) -> &AddressingLayout {
        &self.layout
    }
}

/// Whether memory bits feed the output (multiplexer) or are ignored
/// (address-only predicates like the accept-set junta).
#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum MemRole {
    Multiplexed,
    Ignored,
}

/// Per-node split statistics for every free variable of an addressing
/// target, computed in one pass: the parent mean, the address law, and the
/// restricted means that result from querying each variable.
pub(crate) struct SurveyCore {
    pub parent_mean: f64,
    pub pmf: Vec<f64>,
    /// For each addressing bit (index < num_addressing): `(mean0, mean1)`
    /// of the target after fixing that bit, or `None` if it was not free.
    pub addr_means: Vec<Option<(f64, f64)>>,
}

/// `mem_means[a]` is the conditional mean of the output given address `a`
/// (the memory bit's effective bias, or an accept-set indicator).
pub(crate) fn survey_core(
    layout: &AddressingLayout,
    biases: &[f64],
    mem_means: &[f64],
    free: &[bool],
) -> SurveyCore {
    if layout.disjoint {
        survey_disjoint(layout, biases, mem_means, free)
    } else {
        survey_character_sum(layout, biases, mem_means, free)
    }
}

fn survey_disjoint(
    layout: &AddressingLayout,
    biases: &[f64],
    mem_means: &[f64],
    free: &[bool],
) -> SurveyCore {
    let k = layout.k;
    let nk = layout.num_addresses();
    let group_prods: Vec<f64> = layout
        .groups
        .iter()
        .map(|grp| grp.iter().map(|&j| 1.0 - 2.0 * biases[j]).product())
        .collect();
    let q: Vec<f64> = group_prods.iter().map(|&p| 0.5 * (1.0 - p)).collect();

    let mut pmf = vec![1.0f64];
    for &qg in &q {
        let mut next = vec![0.0; pmf.len() * 2];
        for (i, &p) in pmf.iter().enumerate() {
            next[2 * i] = p * (1.0 - qg);
            next[2 * i + 1] = p * qg;
        }
        pmf = next;
    }

    let parent_mean: f64 = pmf.iter().zip(mem_means).map(|(p, m)| p * m).sum();

    // split of the parent mean by each address bit's value
    let mut split = vec![[0.0f64; 2]; k];
    for a in 0..nk {
        let pm = pmf[a] * mem_means[a];
        for (g, s) in split.iter_mut().enumerate() {
            s[(a >> (k - 1 - g)) & 1] += pm;
        }
    }

    let mut addr_means = vec![None; layout.num_addressing];
    let mut factors: Vec<f64> = Vec::new();
    let mut prefix: Vec<f64> = Vec::new();
    let mut suffix: Vec<f64> = Vec::new();
    for (g, grp) in layout.groups.iter().enumerate() {
        if !grp.iter().any(|&j| free[j]) {
            continue;
        }
        factors.clear();
        factors.extend(grp.iter().map(|&j| 1.0 - 2.0 * biases[j]));
        prefix_suffix(&factors, &mut prefix, &mut suffix);
        let qg = q[g];
        for (idx, &j) in grp.iter().enumerate() {
            if !free[j] {
                continue;
            }
            let rest = prefix[idx] * suffix[idx + 1];
            // group bias after fixing x_j = b: (1 - (1-2b) * rest) / 2
            let q0 = 0.5 * (1.0 - rest);
            let q1 = 0.5 * (1.0 + rest);
            // a free bit keeps q_g strictly inside (0,1)
            let m0 = split[g][1] * (q0 / qg) + split[g][0] * ((1.0 - q0) / (1.0 - qg));
            let m1 = split[g][1] * (q1 / qg) + split[g][0] * ((1.0 - q1) / (1.0 - qg));
            addr_means[j] = Some((m0.clamp(0.0, 1.0), m1.clamp(0.0, 1.0)));
        }
    }
    SurveyCore { parent_mean, pmf, addr_means }
}

fn survey_character_sum(
    layout: &AddressingLayout,
    biases: &[f64],
    mem_means: &[f64],
    free: &[bool],
) -> SurveyCore {
    let k = layout.k;
    let nk = layout.num_addresses();
    let words = layout.num_addressing.div_ceil(64);
    let group_words: Vec<Vec<u64>> = layout
        .groups
        .iter()
        .map(|grp| {
            let mut w = vec![0u64; words];
            for &j in grp {
                w[j / 64] |= 1u64 << (j % 64);
            }
            w
        })
        .collect();

    let mut mem_hat = mem_means.to_vec();
    wht_inplace(&mut mem_hat);

    // Accumulators over subset collections I:
    //   total    = sum_I q_I * mem_hat[I]
    //   with_j a = sum_{I: j in S_I} (prod without j) * mem_hat[I]
    //   with_j b = sum_{I: j in S_I} q_I * mem_hat[I]
    let mut coeffs = vec![0.0f64; nk];
    coeffs[0] = 1.0;
    let mut total = mem_hat[0];
    let mut acc_without = vec![0.0f64; layout.num_addressing];
    let mut acc_with = vec![0.0f64; layout.num_addressing];

    let mut cur = vec![0u64; words];
    let mut elems: Vec<usize> = Vec::new();
    let mut factors: Vec<f64> = Vec::new();
    let mut prefix: Vec<f64> = Vec::new();
    let mut suffix: Vec<f64> = Vec::new();
    let mut prev_gray = 0usize;
    for t in 1..nk {
        let gray = t ^ (t >> 1);
        let toggled_pos = (prev_gray ^ gray).trailing_zeros() as usize;
        prev_gray = gray;
        let g = k - 1 - toggled_pos;
        for (c, w) in cur.iter_mut().zip(&group_words[g]) {
            *c ^= w;
        }
        elems.clear();
        for (wi, word) in cur.iter().enumerate() {
            let mut bits = *word;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                elems.push(wi * 64 + b);
                bits &= bits - 1;
            }
        }
        factors.clear();
        factors.extend(elems.iter().map(|&j| 1.0 - 2.0 * biases[j]));
        prefix_suffix(&factors, &mut prefix, &mut suffix);
        let q = prefix[elems.len()];
        let mh = mem_hat[gray];
        coeffs[gray] = q;
        total += q * mh;
        for (idx, &j) in elems.iter().enumerate() {
            if free[j] {
                acc_without[j] += prefix[idx] * suffix[idx + 1] * mh;
                acc_with[j] += q * mh;
            }
        }
    }

    let scale = 1.0 / nk as f64;
    let parent_mean = total * scale;

    let mut pmf = coeffs;
    wht_inplace(&mut pmf);
    for v in pmf.iter_mut() {
        *v *= scale;
        if *v < 0.0 {
            debug_assert!(*v > -1e-12);
            *v = 0.0;
        }
    }

    let mut addr_means = vec![None; layout.num_addressing];
    for j in 0..layout.num_addressing {
        if free[j] {
            // fixing x_j = b replaces its factor by (1 - 2b) in every
            // collection whose symmetric difference contains j
            let m0 = (total - acc_with[j] + acc_without[j]) * scale;
            let m1 = (total - acc_with[j] - acc_without[j]) * scale;
            addr_means[j] = Some((m0.clamp(0.0, 1.0), m1.clamp(0.0, 1.0)));
        }
    }
    SurveyCore { parent_mean, pmf, addr_means }
}

/// `prefix[i] = f_0 * .. * f_{i-1}`, `suffix[i] = f_i * .. * f_{n-1}`.
fn prefix_suffix(factors: &[f64], prefix: &mut Vec<f64>, suffix: &mut Vec<f64>) {
    let n = factors.len();
    prefix.clear();
    prefix.resize(n + 1, 1.0);
    suffix.clear();
    suffix.resize(n + 1, 1.0);
    for i in 0..n {
        prefix[i + 1] = prefix[i] * factors[i];
    }
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] * factors[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wht_matches_naive() {
        let v = vec![0.3, -1.0, 2.5, 0.0, 1.0, 4.0, -2.0, 0.25];
        let mut fast = v.clone();
        wht_inplace(&mut fast);
        for a in 0..8 {
            let naive: f64 = (0..8)
                .map(|i| {
                    let sign = if ((a & i) as u32).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    sign * v[i]
                })
                .sum();
            assert!((fast[a] - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn disjoint_and_character_sum_pmf_agree() {
        let f = DisjointParityAddressing::new(2, 3).unwrap();
        let biases: Vec<f64> = (0..f.layout().arity())
            .map(|i| 0.2 + 0.6 * ((i * 37 % 11) as f64 / 11.0))
            .collect();
        let a = f.layout().pmf_disjoint(&biases);
        let b = f.layout().pmf_character_sum(&biases);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-13);
        }
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn address_order_is_lexicographic() {
        // group 0 is the most significant address bit
        let f = DisjointParityAddressing::new(1, 2).unwrap();
        let layout = f.layout();
        let mut x = vec![false; layout.arity()];
        // set z_0 = 1 (group 0 = bits {0,1}), z_1 = 0
        x[0] = true;
        assert_eq!(layout.address_of(&x), 0b10);
        x[2] = true; // z_1 = 1
        assert_eq!(layout.address_of(&x), 0b11);
    }
}
