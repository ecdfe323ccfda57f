//! Agnostic variants: fixing most memory bits of an addressing target makes
//! it close to a junta of its addressing bits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::ProductDistribution;
use crate::restriction::Restriction;
use crate::{Error, Result, BRUTE_FORCE_CAP};

use super::addressing::AddressingLayout;
use super::{address_pmf, TargetFunction};

/// `g(x, y) = 1[z(x) in accept set]`: depends only on the addressing bits
/// but keeps the full arity of the multiplexer it approximates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AddressJunta {
    layout: AddressingLayout,
    accept: Vec<bool>,
}

impl AddressJunta {
    pub fn new(layout: AddressingLayout, accept: Vec<bool>) -> Result<Self> {
        if accept.len() != layout.num_addresses() {
            return Err(Error::InvalidSpec(format!(
                "accept mask needs {} entries, got {}",
                layout.num_addresses(),
                accept.len()
            )));
        }
        Ok(AddressJunta { layout, accept })
    }

    pub fn layout(&self) -> &AddressingLayout {
        &self.layout
    }

    pub fn accepts(&self, addr: usize) -> bool {
        self.accept[addr]
    }

    pub(crate) fn accept_means(&self) -> Vec<f64> {
        self.accept.iter().map(|&b| f64::from(u8::from(b))).collect()
    }
}

/// Partition of the address space into fixed-zero, fixed-one, and free
/// addresses, with `|A0| = |A1|` and the free block sized by `epsilon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgnosticPartition {
    pub a0: Vec<usize>,
    pub a1: Vec<usize>,
    pub afree: Vec<usize>,
    pub epsilon: f64,
    pub k: usize,
}

impl AgnosticPartition {
    pub fn validate(&self) -> Result<()> {
        let nk = 1usize << self.k;
        if self.a0.len() != self.a1.len() {
            return Err(Error::InvalidSpec(format!(
                "|A0| = {} != |A1| = {}",
                self.a0.len(),
                self.a1.len()
            )));
        }
        let mut seen = vec![false; nk];
        for &a in self.a0.iter().chain(&self.a1).chain(&self.afree) {
            if a >= nk || seen[a] {
                return Err(Error::InvalidSpec(format!("address {a} repeated or out of range")));
            }
            seen[a] = true;
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidSpec("partition does not cover the address space".into()));
        }
        let f = self.afree.len() as f64;
        let lo = self.epsilon * (nk as f64) / 4.0;
        let hi = self.epsilon * (nk as f64) / 2.0;
        if !(f >= lo - 1e-9 && f <= hi + 1e-9) {
            return Err(Error::InvalidSpec(format!(
                "|Afree| = {f} outside [{lo}, {hi}]"
            )));
        }
        Ok(())
    }
}

/// Splits the addresses of `base` (a plain addressing multiplexer) into
/// `A0 / A1 / Afree`, fixes the corresponding memory bits to `0 / 1 / free`,
/// and builds the accept-set junta `g = 1[z in A1]`.
///
/// `|Afree|` is the largest value in `[eps 2^{k-2}, eps 2^{k-1}]` whose
/// complement splits evenly.  Addresses are taken in lexicographic order
/// with the free block first; a seed requests a uniform random partition
/// instead.
pub fn make_agnostic_restriction(
    base: &TargetFunction,
    epsilon: f64,
    seed: Option<u64>,
) -> Result<(Restriction, AgnosticPartition, TargetFunction)> {
    let layout = match base {
        TargetFunction::DisjointParity(a) => a.layout().clone(),
        TargetFunction::Coded(a) => a.layout().clone(),
        _ => {
            return Err(Error::UnsupportedTarget(
                "agnostic restriction needs a plain addressing multiplexer".into(),
            ))
        }
    };
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidSpec(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    let k = layout.k();
    let nk = 1usize << k;
    let lo = epsilon * nk as f64 / 4.0;
    let hi = epsilon * nk as f64 / 2.0;
    if lo < 1.0 - 1e-12 {
        return Err(Error::InfeasibleEpsilon { epsilon, k });
    }
    let free_size = {
        let top = hi.floor() as usize;
        let bottom = lo.ceil() as usize;
        (bottom..=top.min(nk))
            .rev()
            .find(|&f| f >= 1 && (nk - f) % 2 == 0)
            .ok_or(Error::InfeasibleEpsilon { epsilon, k })?
    };

    let mut order: Vec<usize> = (0..nk).collect();
    if let Some(s) = seed {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        order.shuffle(&mut rng);
    }
    let afree: Vec<usize> = order[..free_size].to_vec();
    let rest = &order[free_size..];
    let half = rest.len() / 2;
    let a0: Vec<usize> = rest[..half].to_vec();
    let a1: Vec<usize> = rest[half..].to_vec();

    let partition = AgnosticPartition { a0, a1, afree, epsilon, k };
    partition.validate()?;

    let mut assignments = Vec::with_capacity(nk - free_size);
    for &a in &partition.a0 {
        assignments.push((layout.memory_index(a), false));
    }
    for &a in &partition.a1 {
        assignments.push((layout.memory_index(a), true));
    }
    let pi = Restriction::new(assignments)?;

    let mut accept = vec![false; nk];
    for &a in &partition.a1 {
        accept[a] = true;
    }
    let g = TargetFunction::AddressJunta(AddressJunta::new(layout, accept)?);
    Ok((pi, partition, g))
}

/// Exact disagreement probability `Pr[f(x) != g(x)]` under `d`.
///
/// When both targets are multiplexer-shaped over the same groups with the
/// same effective addressing biases, the distance is computed through the
/// address law: given `z = a`, each side outputs either the shared memory
/// bit `y_a` or a constant, so the conditional disagreement is the absolute
/// difference of the two conditional means.  Otherwise falls back to cube
/// enumeration.
pub fn junta_distance(
    f: &TargetFunction,
    g: &TargetFunction,
    d: &ProductDistribution,
) -> Result<f64> {
    if f.arity() != g.arity() {
        return Err(Error::ArityMismatch { expected: f.arity(), got: g.arity() });
    }
    if let (Some(lf), Some(lg)) = (f.addressing_layout(), g.addressing_layout()) {
        if lf == lg {
            let (bf, _, _) = f.effective(d, &Restriction::empty())?;
            let (bg, _, _) = g.effective(d, &Restriction::empty())?;
            let addr_bits_agree =
                (0..lf.num_addressing()).all(|j| bf[j] == bg[j]);
            if addr_bits_agree {
                let pmf = address_pmf(f, d, &Restriction::empty())?;
                let layout = lf.clone();
                let mf = conditional_means(f, &bf, &layout);
                let mg = conditional_means(g, &bg, &layout);
                return Ok(pmf
                    .iter()
                    .enumerate()
                    .map(|(a, p)| p * (mf[a] - mg[a]).abs())
                    .sum());
            }
        }
    }
    // enumeration fallback
    let n = f.arity();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::UnsupportedTarget(format!(
            "junta distance enumeration needs arity <= {BRUTE_FORCE_CAP}, got {n}"
        )));
    }
    let mut dist = 0.0;
    let mut x = vec![false; n];
    enumerate(d, 0, 1.0, &mut x, &mut |x, w| {
        if f.eval(x).unwrap() != g.eval(x).unwrap() {
            dist += w;
        }
    });
    Ok(dist)
}

fn conditional_means(f: &TargetFunction, biases: &[f64], layout: &AddressingLayout) -> Vec<f64> {
    match f.structural() {
        TargetFunction::AddressJunta(g) => g.accept_means(),
        _ => (0..layout.num_addresses()).map(|a| biases[layout.memory_index(a)]).collect(),
    }
}

fn enumerate(
    d: &ProductDistribution,
    i: usize,
    w: f64,
    x: &mut Vec<bool>,
    visit: &mut impl FnMut(&[bool], f64),
) {
    if i == d.n() {
        visit(x, w);
        return;
    }
    let p = d.bias(i);
    x[i] = false;
    enumerate(d, i + 1, w * (1.0 - p), x, visit);
    x[i] = true;
    enumerate(d, i + 1, w * p, x, visit);
    x[i] = false;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{CodedAddressing, DisjointParityAddressing, TruthTable};

    fn small_coded() -> TargetFunction {
        let fam = crate::codes::SetFamily::new(
            6,
            vec![vec![0, 1, 2], vec![2, 3, 4], vec![1, 4, 5]],
        )
        .unwrap();
        TargetFunction::Coded(CodedAddressing::new(2, 3, fam).unwrap())
    }

    #[test]
    fn partition_sizes_at_k4_eps_half() {
        let base = TargetFunction::DisjointParity(DisjointParityAddressing::new(1, 4).unwrap());
        let (pi, part, _) = make_agnostic_restriction(&base, 0.5, None).unwrap();
        // band [2, 4]; largest with even complement is 4
        assert_eq!(part.afree.len(), 4);
        assert_eq!(part.a0.len(), 6);
        assert_eq!(part.a1.len(), 6);
        assert_eq!(pi.len(), 12);
    }

    #[test]
    fn infeasible_band_is_a_clean_error() {
        // eps 0.9 at k = 2: band [0.9, 1.8] contains only 1, whose
        // complement 3 is odd
        let base = TargetFunction::DisjointParity(DisjointParityAddressing::new(1, 2).unwrap());
        let err = make_agnostic_restriction(&base, 0.9, None).unwrap_err();
        assert!(matches!(err, Error::InfeasibleEpsilon { .. }));
        // eps too small for the precondition eps * 2^{k-2} >= 1
        let err = make_agnostic_restriction(&base, 0.5, None).unwrap_err();
        assert!(matches!(err, Error::InfeasibleEpsilon { .. }));
    }

    #[test]
    fn f_pi_and_g_agree_off_the_free_addresses() {
        let base = small_coded(); // arity 14, enumerable
        let (pi, part, g) = make_agnostic_restriction(&base, 0.5, Some(5)).unwrap();
        let f_pi = base.restrict(pi).unwrap();
        let layout = base.addressing_layout().unwrap().clone();
        let in_free = |a: usize| part.afree.contains(&a);
        for m in 0..(1usize << 14) {
            let x: Vec<bool> = (0..14).map(|i| (m >> i) & 1 == 1).collect();
            let a = layout.address_of(&x);
            if !in_free(a) {
                assert_eq!(f_pi.eval(&x).unwrap(), g.eval(&x).unwrap());
            }
        }
    }

    #[test]
    fn distance_identities() {
        let f = TargetFunction::Table(TruthTable::parity_of(4, &[0, 2]).unwrap());
        let complement =
            TargetFunction::Table(TruthTable::from_fn(4, |m| !((m ^ (m >> 2)) & 1 == 1)).unwrap());
        let d = ProductDistribution::uniform(4);
        assert_eq!(junta_distance(&f, &f, &d).unwrap(), 0.0);
        assert_eq!(junta_distance(&f, &complement, &d).unwrap(), 1.0);
    }

    #[test]
    fn analytic_distance_matches_enumeration() {
        let base = small_coded();
        let (pi, part, g) = make_agnostic_restriction(&base, 0.5, Some(9)).unwrap();
        let f_pi = base.restrict(pi).unwrap();
        let biases: Vec<f64> =
            (0..base.arity()).map(|i| 0.2 + 0.5 * ((i * 23 % 9) as f64 / 9.0)).collect();
        let d = ProductDistribution::new(biases, 0.15).unwrap();
        let fast = junta_distance(&f_pi, &g, &d).unwrap();

        // enumeration route, forced by evaluating pointwise
        let mut slow = 0.0;
        let mut x = vec![false; base.arity()];
        enumerate(&d, 0, 1.0, &mut x, &mut |x, w| {
            if f_pi.eval(x).unwrap() != g.eval(x).unwrap() {
                slow += w;
            }
        });
        assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
        assert!(fast < part.epsilon);
    }

    #[test]
    fn seeded_partitions_are_deterministic() {
        let base = small_coded();
        let a = make_agnostic_restriction(&base, 0.5, Some(7)).unwrap();
        let b = make_agnostic_restriction(&base, 0.5, Some(7)).unwrap();
        assert_eq!(a.1, b.1);
        assert_eq!(a.0, b.0);
    }
}
