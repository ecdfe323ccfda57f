//! Target function families, restrictions, and exact expectation oracles.
//!
//! All targets are boolean functions of a fixed arity.  Restricting never
//! changes the arity: `f_pi(x) = f(x with pi's coordinates overwritten)`.
//! Under a product distribution, overwriting a coordinate and conditioning
//! on it coincide for expectations, which is what every oracle here exploits.

mod addressing;
mod agnostic;
mod table;

pub use addressing::{AddressingLayout, CodedAddressing, DisjointParityAddressing, MAX_K};
pub use agnostic::{junta_distance, make_agnostic_restriction, AddressJunta, AgnosticPartition};
pub use table::{JuntaTable, TruthTable};

use serde::{Deserialize, Serialize};

use crate::dist::ProductDistribution;
use crate::restriction::Restriction;
use crate::{Error, Result};

use addressing::{survey_core, MemRole};
use table::{cube_expectation, cube_survey};

/// Role of an input variable within its target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarClass {
    Addressing,
    Memory,
    Plain,
}

impl VarClass {
    pub fn short(&self) -> &'static str {
        match self {
            VarClass::Addressing => "addressing",
            VarClass::Memory => "memory",
            VarClass::Plain => "plain",
        }
    }
}

/// Split statistics for one variable: its marginal and the target means
/// after fixing it to each value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarStats {
    pub p: f64,
    pub mean0: f64,
    pub mean1: f64,
}

/// Per-node survey of every variable: the restricted target's mean and the
/// split statistics of each candidate.  `None` marks variables fixed by the
/// query restriction (non-candidates); variables fixed inside the target
/// itself get zero-gain statistics (`mean0 = mean1 = parent_mean`).
#[derive(Clone, Debug)]
pub struct SplitSurvey {
    pub parent_mean: f64,
    pub vars: Vec<Option<VarStats>>,
}

/// An evaluatable boolean target with exact expectation support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TargetFunction {
    Table(TruthTable),
    Junta(JuntaTable),
    DisjointParity(DisjointParityAddressing),
    Coded(CodedAddressing),
    AddressJunta(AddressJunta),
    Restricted(Box<TargetFunction>, Restriction),
}

impl TargetFunction {
    pub fn arity(&self) -> usize {
        match self {
            TargetFunction::Table(t) => t.n(),
            TargetFunction::Junta(j) => j.n(),
            TargetFunction::DisjointParity(a) => a.layout().arity(),
            TargetFunction::Coded(a) => a.layout().arity(),
            TargetFunction::AddressJunta(g) => g.layout().arity(),
            TargetFunction::Restricted(inner, _) => inner.arity(),
        }
    }

    /// Wraps the target in a restriction.  Composition follows overwrite
    /// semantics: for `(f_pi)_rho`, coordinates in both keep `pi`'s value.
    pub fn restrict(&self, pi: Restriction) -> Result<TargetFunction> {
        if let Some(max) = pi.max_index() {
            if max >= self.arity() {
                return Err(Error::ArityMismatch { expected: self.arity(), got: max + 1 });
            }
        }
        Ok(TargetFunction::Restricted(Box::new(self.clone()), pi))
    }

    pub fn eval(&self, x: &[bool]) -> Result<bool> {
        if x.len() != self.arity() {
            return Err(Error::ArityMismatch { expected: self.arity(), got: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: &[bool]) -> bool {
        match self {
            TargetFunction::Table(t) => t.eval_bits(x),
            TargetFunction::Junta(j) => j.eval_bits(x),
            TargetFunction::DisjointParity(a) => {
                let layout = a.layout();
                x[layout.memory_index(layout.address_of(x))]
            }
            TargetFunction::Coded(a) => {
                let layout = a.layout();
                x[layout.memory_index(layout.address_of(x))]
            }
            TargetFunction::AddressJunta(g) => g.accepts(g.layout().address_of(x)),
            TargetFunction::Restricted(inner, pi) => {
                let mut y = x.to_vec();
                pi.apply(&mut y);
                inner.eval_unchecked(&y)
            }
        }
    }

    /// The innermost non-restricted target.
    pub fn structural(&self) -> &TargetFunction {
        let mut cur = self;
        while let TargetFunction::Restricted(inner, _) = cur {
            cur = inner;
        }
        cur
    }

    /// Addressing layout, if this (possibly restricted) target has one.
    pub fn addressing_layout(&self) -> Option<&AddressingLayout> {
        match self.structural() {
            TargetFunction::DisjointParity(a) => Some(a.layout()),
            TargetFunction::Coded(a) => Some(a.layout()),
            TargetFunction::AddressJunta(g) => Some(g.layout()),
            _ => None,
        }
    }

    pub fn var_class(&self, i: usize) -> VarClass {
        match self.addressing_layout() {
            Some(layout) => {
                if layout.is_memory(i) {
                    VarClass::Memory
                } else {
                    VarClass::Addressing
                }
            }
            None => VarClass::Plain,
        }
    }

    /// Effective per-coordinate biases after applying the query restriction
    /// and then every restriction layer of the target (inner layers win).
    /// Also returns which coordinates the query fixed, and which are fixed
    /// by anything at all.
    pub(crate) fn effective(
        &self,
        d: &ProductDistribution,
        pi: &Restriction,
    ) -> Result<(Vec<f64>, Vec<bool>, Vec<bool>)> {
        let arity = self.arity();
        if d.n() != arity {
            return Err(Error::ArityMismatch { expected: arity, got: d.n() });
        }
        let mut biases = d.biases().to_vec();
        let mut op_fixed = vec![false; arity];
        for (i, b) in pi.iter() {
            if i >= arity {
                return Err(Error::ArityMismatch { expected: arity, got: i + 1 });
            }
            biases[i] = if b { 1.0 } else { 0.0 };
            op_fixed[i] = true;
        }
        let mut any_fixed = op_fixed.clone();
        let mut cur = self;
        while let TargetFunction::Restricted(inner, layer) = cur {
            for (i, b) in layer.iter() {
                biases[i] = if b { 1.0 } else { 0.0 };
                any_fixed[i] = true;
            }
            cur = inner;
        }
        Ok((biases, op_fixed, any_fixed))
    }

    /// Exact expectation of the restricted target under `d`.
    pub fn expectation(&self, d: &ProductDistribution, pi: &Restriction) -> Result<f64> {
        let (biases, _, _) = self.effective(d, pi)?;
        self.expectation_from_biases(&biases)
    }

    pub(crate) fn expectation_from_biases(&self, biases: &[f64]) -> Result<f64> {
        match self.structural() {
            TargetFunction::Table(t) => cube_expectation(biases, &|m| t.value(m)),
            TargetFunction::Junta(j) => {
                let rel_biases: Vec<f64> = j.relevant().iter().map(|&r| biases[r]).collect();
                cube_expectation(&rel_biases, &|m| j.value(m))
            }
            TargetFunction::DisjointParity(a) => {
                Ok(mux_mean(a.layout(), biases))
            }
            TargetFunction::Coded(a) => Ok(mux_mean(a.layout(), biases)),
            TargetFunction::AddressJunta(g) => {
                let pmf = g.layout().address_pmf(biases);
                Ok((0..pmf.len()).filter(|&a| g.accepts(a)).map(|a| pmf[a]).sum())
            }
            TargetFunction::Restricted(..) => unreachable!("structural() strips restrictions"),
        }
    }

    /// Split statistics for every variable in one pass.
    pub fn survey(&self, d: &ProductDistribution, pi: &Restriction) -> Result<SplitSurvey> {
        let (biases, op_fixed, any_fixed) = self.effective(d, pi)?;
        match self.structural() {
            TargetFunction::Table(t) => {
                let (mean, ones) = cube_survey(&biases, &|m| t.value(m))?;
                Ok(assemble_plain(d, &biases, &op_fixed, &any_fixed, mean, &ones, None))
            }
            TargetFunction::Junta(j) => {
                let rel = j.relevant();
                let rel_biases: Vec<f64> = rel.iter().map(|&r| biases[r]).collect();
                let (mean, rel_ones) = cube_survey(&rel_biases, &|m| j.value(m))?;
                let mut ones = vec![f64::NAN; self.arity()];
                for (t, &r) in rel.iter().enumerate() {
                    ones[r] = rel_ones[t];
                }
                Ok(assemble_plain(d, &biases, &op_fixed, &any_fixed, mean, &ones, Some(rel)))
            }
            TargetFunction::DisjointParity(a) => Ok(assemble_addressing(
                a.layout(),
                d,
                &biases,
                &op_fixed,
                &any_fixed,
                MemRole::Multiplexed,
                None,
            )),
            TargetFunction::Coded(a) => Ok(assemble_addressing(
                a.layout(),
                d,
                &biases,
                &op_fixed,
                &any_fixed,
                MemRole::Multiplexed,
                None,
            )),
            TargetFunction::AddressJunta(g) => Ok(assemble_addressing(
                g.layout(),
                d,
                &biases,
                &op_fixed,
                &any_fixed,
                MemRole::Ignored,
                Some(g.accept_means()),
            )),
            TargetFunction::Restricted(..) => unreachable!("structural() strips restrictions"),
        }
    }
}

fn mux_mean(layout: &AddressingLayout, biases: &[f64]) -> f64 {
    let pmf = layout.address_pmf(biases);
    pmf.iter()
        .enumerate()
        .map(|(a, p)| p * biases[layout.memory_index(a)])
        .sum()
}

fn assemble_plain(
    d: &ProductDistribution,
    biases: &[f64],
    op_fixed: &[bool],
    any_fixed: &[bool],
    mean: f64,
    ones: &[f64],
    relevant: Option<&[usize]>,
) -> SplitSurvey {
    let vars = (0..biases.len())
        .map(|i| {
            if op_fixed[i] {
                return None;
            }
            if any_fixed[i] {
                return Some(VarStats { p: d.bias(i), mean0: mean, mean1: mean });
            }
            let irrelevant = relevant.map(|rel| !rel.contains(&i)).unwrap_or(false);
            if irrelevant {
                return Some(VarStats { p: biases[i], mean0: mean, mean1: mean });
            }
            let p = biases[i];
            let mean1 = (ones[i] / p).clamp(0.0, 1.0);
            let mean0 = ((mean - ones[i]) / (1.0 - p)).clamp(0.0, 1.0);
            Some(VarStats { p, mean0, mean1 })
        })
        .collect();
    SplitSurvey { parent_mean: mean, vars }
}

fn assemble_addressing(
    layout: &AddressingLayout,
    d: &ProductDistribution,
    biases: &[f64],
    op_fixed: &[bool],
    any_fixed: &[bool],
    mem_role: MemRole,
    accept_means: Option<Vec<f64>>,
) -> SplitSurvey {
    let nk = layout.num_addresses();
    let mem_means: Vec<f64> = match &accept_means {
        Some(m) => m.clone(),
        None => (0..nk).map(|a| biases[layout.memory_index(a)]).collect(),
    };
    let free: Vec<bool> =
        (0..layout.num_addressing()).map(|j| !any_fixed[j]).collect();
    let core = survey_core(layout, biases, &mem_means, &free);
    let e = core.parent_mean;
    let vars = (0..layout.arity())
        .map(|i| {
            if op_fixed[i] {
                return None;
            }
            if any_fixed[i] {
                return Some(VarStats { p: d.bias(i), mean0: e, mean1: e });
            }
            if !layout.is_memory(i) {
                let (mean0, mean1) = core.addr_means[i].expect("free addressing bit surveyed");
                return Some(VarStats { p: biases[i], mean0, mean1 });
            }
            match mem_role {
                MemRole::Ignored => Some(VarStats { p: biases[i], mean0: e, mean1: e }),
                MemRole::Multiplexed => {
                    let a = i - layout.num_addressing();
                    let pa = core.pmf[a];
                    let ma = mem_means[a];
                    Some(VarStats {
                        p: biases[i],
                        mean0: (e - pa * ma).clamp(0.0, 1.0),
                        mean1: (e + pa * (1.0 - ma)).clamp(0.0, 1.0),
                    })
                }
            }
        })
        .collect();
    SplitSurvey { parent_mean: e, vars }
}

/// Exact law of the address `z(x)` of an addressing target under `d`
/// conditioned per `pi`; indexed by the address as an integer (bit `g` of
/// the address at position `k-1-g`).
pub fn address_pmf(
    f: &TargetFunction,
    d: &ProductDistribution,
    pi: &Restriction,
) -> Result<Vec<f64>> {
    let (biases, _, _) = f.effective(d, pi)?;
    match f.addressing_layout() {
        Some(layout) => Ok(layout.address_pmf(&biases)),
        None => Err(Error::UnsupportedTarget(
            "address pmf is defined only for addressing targets".into(),
        )),
    }
}

/// JSON-facing target description.
///
/// Families: `fck` (disjoint parity groups), `fcks` (groups from an explicit
/// set family), `restricted` (either of the above plus a restriction),
/// `junta` (the accept-set address junta induced by an agnostic partition),
/// and the plain helpers `dictator`, `parity`, `table`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sets: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restriction: Option<Restriction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indices: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits: Option<String>,
}

impl TargetSpec {
    pub fn fck(c: usize, k: usize) -> Self {
        TargetSpec { family: "fck".into(), c: Some(c), k: Some(k), ..Self::blank() }
    }

    fn blank() -> Self {
        TargetSpec {
            family: String::new(),
            c: None,
            k: None,
            sets: None,
            restriction: None,
            epsilon: None,
            seed: None,
            n: None,
            index: None,
            indices: None,
            bits: None,
        }
    }

    fn field_err(field: &str, message: impl Into<String>) -> Error {
        Error::InvalidConfig { field: format!("target.{field}"), message: message.into() }
    }

    fn addressing_base(&self) -> Result<TargetFunction> {
        let c = self.c.ok_or_else(|| Self::field_err("c", "required"))?;
        let k = self.k.ok_or_else(|| Self::field_err("k", "required"))?;
        match &self.sets {
            None => Ok(TargetFunction::DisjointParity(DisjointParityAddressing::new(c, k)?)),
            Some(sets) => {
                let family = crate::codes::SetFamily::new(c * k, sets.clone())?;
                Ok(TargetFunction::Coded(CodedAddressing::new(c, k, family)?))
            }
        }
    }

    pub fn realize(&self) -> Result<TargetFunction> {
        match self.family.as_str() {
            "fck" => {
                if self.sets.is_some() {
                    return Err(Self::field_err("sets", "not allowed for fck"));
                }
                self.addressing_base()
            }
            "fcks" => {
                if self.sets.is_none() {
                    return Err(Self::field_err("sets", "required for fcks"));
                }
                self.addressing_base()
            }
            "restricted" => {
                let base = self.addressing_base()?;
                let pi = self
                    .restriction
                    .clone()
                    .ok_or_else(|| Self::field_err("restriction", "required"))?;
                base.restrict(pi)
            }
            "junta" => {
                let base = self.addressing_base()?;
                let eps = self.epsilon.ok_or_else(|| Self::field_err("epsilon", "required"))?;
                let (_, _, g) = make_agnostic_restriction(&base, eps, self.seed)?;
                Ok(g)
            }
            "dictator" => {
                let n = self.n.ok_or_else(|| Self::field_err("n", "required"))?;
                let i = self.index.ok_or_else(|| Self::field_err("index", "required"))?;
                Ok(TargetFunction::Table(TruthTable::dictator(n, i)?))
            }
            "parity" => {
                let n = self.n.ok_or_else(|| Self::field_err("n", "required"))?;
                let coords =
                    self.indices.clone().ok_or_else(|| Self::field_err("indices", "required"))?;
                Ok(TargetFunction::Table(TruthTable::parity_of(n, &coords)?))
            }
            "table" => {
                let n = self.n.ok_or_else(|| Self::field_err("n", "required"))?;
                let bits = self.bits.as_ref().ok_or_else(|| Self::field_err("bits", "required"))?;
                let parsed = bits
                    .chars()
                    .map(|ch| match ch {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(Self::field_err("bits", format!("invalid character '{other}'"))),
                    })
                    .collect::<Result<Vec<bool>>>()?;
                Ok(TargetFunction::Table(TruthTable::new(n, parsed)?))
            }
            other => Err(Self::field_err("family", format!("unknown family '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::SetFamily;

    fn uniform_for(f: &TargetFunction) -> ProductDistribution {
        ProductDistribution::uniform(f.arity())
    }

    #[test]
    fn one_bit_address_reads_the_right_memory_cell() {
        // c = k = 1: one addressing bit, two memory cells (y_0, y_1)
        let f = TargetFunction::DisjointParity(DisjointParityAddressing::new(1, 1).unwrap());
        assert_eq!(f.arity(), 3);
        // x = 1, y = (y_0 = 0, y_1 = 1) -> reads y_1 = 1
        assert!(f.eval(&[true, false, true]).unwrap());
        assert!(!f.eval(&[false, false, true]).unwrap());
    }

    #[test]
    fn constant_memory_makes_the_output_constant() {
        let f = TargetFunction::DisjointParity(DisjointParityAddressing::new(2, 2).unwrap());
        let layout = f.addressing_layout().unwrap().clone();
        for b in [false, true] {
            let mut x = vec![false; f.arity()];
            for a in 0..layout.num_addresses() {
                x[layout.memory_index(a)] = b;
            }
            x[0] = true;
            x[5] = true;
            assert_eq!(f.eval(&x).unwrap(), b);
        }
    }

    #[test]
    fn disjoint_family_is_the_block_coded_family() {
        // the disjoint construction must agree pointwise with the coded
        // construction over disjoint index blocks
        let (c, k) = (2, 3);
        let disjoint =
            TargetFunction::DisjointParity(DisjointParityAddressing::new(c, k).unwrap());
        let family = SetFamily::disjoint_blocks(c * k, k);
        let coded =
            TargetFunction::Coded(CodedAddressing::new(c * k, k, family).unwrap());
        assert_eq!(disjoint.arity(), coded.arity());
        let mut state = 0xabcdefu64;
        for _ in 0..500 {
            let x: Vec<bool> = (0..disjoint.arity())
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                    (state >> 33) & 1 == 1
                })
                .collect();
            assert_eq!(disjoint.eval(&x).unwrap(), coded.eval(&x).unwrap());
        }
    }

    #[test]
    fn uniform_pmf_is_exactly_uniform() {
        let f = TargetFunction::DisjointParity(DisjointParityAddressing::new(2, 3).unwrap());
        let d = uniform_for(&f);
        let pmf = address_pmf(&f, &d, &Restriction::empty()).unwrap();
        for &p in &pmf {
            assert_eq!(p, 0.125);
        }
    }

    #[test]
    fn pmf_matches_enumeration_on_small_instances() {
        // disjoint (c=2, k=2: 8 addressing bits) and coded over 6 bits
        let mut cases: Vec<TargetFunction> = vec![TargetFunction::DisjointParity(
            DisjointParityAddressing::new(2, 2).unwrap(),
        )];
        let fam =
            SetFamily::new(6, vec![vec![0, 1, 2], vec![2, 3, 4], vec![0, 4, 5]]).unwrap();
        cases.push(TargetFunction::Coded(CodedAddressing::new(2, 3, fam).unwrap()));
        for f in cases {
            let layout = f.addressing_layout().unwrap().clone();
            let n_addr = layout.num_addressing();
            let arity = f.arity();
            let biases: Vec<f64> =
                (0..arity).map(|i| 0.15 + 0.7 * ((i * 29 % 13) as f64 / 13.0)).collect();
            let d = ProductDistribution::new(biases.clone(), 0.1).unwrap();
            for fixed in [None, Some((0usize, true)), Some((n_addr - 1, false))] {
                let pi = match fixed {
                    None => Restriction::empty(),
                    Some((i, b)) => Restriction::fixing(i, b),
                };
                let pmf = address_pmf(&f, &d, &pi).unwrap();
                // enumeration oracle over all addressing-bit settings
                let mut expect = vec![0.0f64; layout.num_addresses()];
                let eff = d.condition(&pi).unwrap();
                for m in 0..(1usize << n_addr) {
                    let mut x = vec![false; arity];
                    let mut w = 1.0;
                    for j in 0..n_addr {
                        let bit = (m >> j) & 1 == 1;
                        x[j] = bit;
                        w *= if bit { eff.bias(j) } else { 1.0 - eff.bias(j) };
                    }
                    if w > 0.0 {
                        expect[layout.address_of(&x)] += w;
                    }
                }
                for (a, (&got, &want)) in pmf.iter().zip(&expect).enumerate() {
                    assert!(
                        (got - want).abs() < 1e-12,
                        "address {a}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn expectation_of_half_memory_is_half() {
        let f = TargetFunction::DisjointParity(DisjointParityAddressing::new(1, 2).unwrap());
        let layout = f.addressing_layout().unwrap().clone();
        let mut biases = vec![0.3; f.arity()];
        for a in 0..layout.num_addresses() {
            biases[layout.memory_index(a)] = 0.5;
        }
        let d = ProductDistribution::new(biases, 0.25).unwrap();
        let e = f.expectation(&d, &Restriction::empty()).unwrap();
        assert!((e - 0.5).abs() < 1e-15);
    }

    #[test]
    fn expectation_with_all_memory_fixed_to_one_is_one() {
        let f = TargetFunction::DisjointParity(DisjointParityAddressing::new(1, 2).unwrap());
        let layout = f.addressing_layout().unwrap().clone();
        let pi = Restriction::new(
            (0..layout.num_addresses()).map(|a| (layout.memory_index(a), true)).collect(),
        )
        .unwrap();
        let d = ProductDistribution::constant_bias(f.arity(), 0.3, 0.25).unwrap();
        let e = f.expectation(&d, &pi).unwrap();
        assert!((e - 1.0).abs() < 1e-15);
    }

    #[test]
    fn expectation_matches_enumeration_and_monte_carlo() {
        let fam = SetFamily::new(6, vec![vec![0, 1], vec![2, 3, 5], vec![1, 4]]).unwrap();
        let f = TargetFunction::Coded(CodedAddressing::new(2, 3, fam).unwrap());
        let arity = f.arity(); // 6 + 8 = 14
        let biases: Vec<f64> =
            (0..arity).map(|i| 0.2 + 0.6 * ((i * 17 % 7) as f64 / 7.0)).collect();
        let d = ProductDistribution::new(biases.clone(), 0.1).unwrap();
        let e = f.expectation(&d, &Restriction::empty()).unwrap();

        // full enumeration over all 2^14 inputs
        let mut direct = 0.0;
        for m in 0..(1usize << arity) {
            let x: Vec<bool> = (0..arity).map(|i| (m >> i) & 1 == 1).collect();
            let mut w = 1.0;
            for i in 0..arity {
                w *= if x[i] { biases[i] } else { 1.0 - biases[i] };
            }
            if f.eval(&x).unwrap() {
                direct += w;
            }
        }
        assert!((e - direct).abs() < 1e-12);

        // Monte Carlo agreement within 4 standard errors
        let m = 1_000_000usize;
        let hits = d
            .sample_many(m, 99)
            .into_iter()
            .filter(|x| f.eval(x).unwrap())
            .count();
        let emp = hits as f64 / m as f64;
        let se = (e * (1.0 - e) / m as f64).sqrt();
        assert!((emp - e).abs() < 4.0 * se, "{emp} vs {e} (se {se})");
    }

    #[test]
    fn restriction_composition_is_pointwise_union() {
        let f = TargetFunction::Table(TruthTable::parity_of(5, &[0, 2, 4]).unwrap());
        let pi = Restriction::new(vec![(0, true), (3, false)]).unwrap();
        let rho = Restriction::new(vec![(2, true)]).unwrap();
        let both = f.restrict(pi.clone()).unwrap().restrict(rho.clone()).unwrap();
        let merged = f.restrict(pi.merged(&rho).unwrap()).unwrap();
        for m in 0..32usize {
            let x: Vec<bool> = (0..5).map(|i| (m >> i) & 1 == 1).collect();
            assert_eq!(both.eval(&x).unwrap(), merged.eval(&x).unwrap());
        }
    }

    #[test]
    fn survey_agrees_with_per_variable_expectations() {
        let fam = SetFamily::new(6, vec![vec![0, 1, 3], vec![2, 3], vec![4, 5, 0]]).unwrap();
        let targets = vec![
            TargetFunction::Coded(CodedAddressing::new(2, 3, fam).unwrap()),
            TargetFunction::DisjointParity(DisjointParityAddressing::new(1, 3).unwrap()),
            TargetFunction::Table(TruthTable::parity_of(6, &[1, 4]).unwrap()),
        ];
        for f in targets {
            let arity = f.arity();
            let biases: Vec<f64> =
                (0..arity).map(|i| 0.2 + 0.55 * ((i * 31 % 11) as f64 / 11.0)).collect();
            let d = ProductDistribution::new(biases, 0.15).unwrap();
            let pi = Restriction::fixing(arity - 1, true);
            let survey = f.survey(&d, &pi).unwrap();
            let parent = f.expectation(&d, &pi).unwrap();
            assert!((survey.parent_mean - parent).abs() < 1e-12);
            assert!(survey.vars[arity - 1].is_none());
            for i in 0..arity - 1 {
                let vs = survey.vars[i].as_ref().unwrap();
                let e0 = f.expectation(&d, &pi.extended(i, false).unwrap()).unwrap();
                let e1 = f.expectation(&d, &pi.extended(i, true).unwrap()).unwrap();
                assert!((vs.mean0 - e0).abs() < 1e-11, "var {i}: {} vs {e0}", vs.mean0);
                assert!((vs.mean1 - e1).abs() < 1e-11, "var {i}: {} vs {e1}", vs.mean1);
                assert!((vs.p - d.bias(i)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn survey_marks_internally_fixed_variables_zero_gain() {
        let base = TargetFunction::DisjointParity(DisjointParityAddressing::new(1, 2).unwrap());
        let layout = base.addressing_layout().unwrap().clone();
        let fixed_mem = layout.memory_index(0);
        let f = base.restrict(Restriction::fixing(fixed_mem, true)).unwrap();
        let d = ProductDistribution::constant_bias(f.arity(), 0.3, 0.25).unwrap();
        let survey = f.survey(&d, &Restriction::empty()).unwrap();
        let vs = survey.vars[fixed_mem].as_ref().unwrap();
        assert_eq!(vs.mean0, survey.parent_mean);
        assert_eq!(vs.mean1, survey.parent_mean);
        assert_eq!(vs.p, 0.3);
    }

    #[test]
    fn spec_realization_covers_all_families() {
        let specs = [
            r#"{"family":"fck","c":2,"k":2}"#,
            r#"{"family":"fcks","c":2,"k":2,"sets":[[0,1,2],[1,2,3]]}"#,
            r#"{"family":"restricted","c":2,"k":2,"restriction":[[8,1]]}"#,
            r#"{"family":"junta","c":2,"k":3,"epsilon":0.5}"#,
            r#"{"family":"dictator","n":4,"index":2}"#,
            r#"{"family":"parity","n":4,"indices":[0,3]}"#,
            r#"{"family":"table","n":2,"bits":"0110"}"#,
        ];
        for s in specs {
            let spec: TargetSpec = serde_json::from_str(s).unwrap();
            spec.realize().unwrap_or_else(|e| panic!("{s}: {e}"));
        }
        let bad: TargetSpec = serde_json::from_str(r#"{"family":"fck","c":0,"k":2}"#).unwrap();
        assert!(bad.realize().is_err());
    }
}
