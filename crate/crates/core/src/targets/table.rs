//! Explicit truth-table targets and juntas, with full-cube expectation and
//! split-survey scans.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, BRUTE_FORCE_CAP};

/// An arbitrary boolean function on `n <= 24` bits given by its table.
/// Input `x` indexes the table as `sum_i x_i 2^i` (`x_0` least significant).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthTable {
    n: usize,
    bits: Vec<bool>,
}

impl TruthTable {
    pub fn new(n: usize, bits: Vec<bool>) -> Result<Self> {
        if n == 0 || n > BRUTE_FORCE_CAP {
            return Err(Error::InvalidSpec(format!(
                "truth table arity must lie in 1..={BRUTE_FORCE_CAP}, got {n}"
            )));
        }
        if bits.len() != 1 << n {
            return Err(Error::InvalidSpec(format!(
                "truth table on {n} bits needs {} entries, got {}",
                1usize << n,
                bits.len()
            )));
        }
        Ok(TruthTable { n, bits })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> bool) -> Result<Self> {
        if n == 0 || n > BRUTE_FORCE_CAP {
            return Err(Error::InvalidSpec(format!(
                "truth table arity must lie in 1..={BRUTE_FORCE_CAP}, got {n}"
            )));
        }
        Ok(TruthTable { n, bits: (0..1usize << n).map(f).collect() })
    }

    /// `f(x) = x_i`.
    pub fn dictator(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::InvalidSpec(format!("dictator index {i} out of {n}")));
        }
        Self::from_fn(n, |m| (m >> i) & 1 == 1)
    }

    /// XOR of the listed coordinates.
    pub fn parity_of(n: usize, coords: &[usize]) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptySequence);
        }
        if coords.iter().any(|&i| i >= n) {
            return Err(Error::InvalidSpec("parity coordinate out of range".into()));
        }
        Self::from_fn(n, |m| coords.iter().map(|&i| (m >> i) & 1).sum::<usize>() % 2 == 1)
    }

    pub fn random(n: usize, rng: &mut impl Rng) -> Result<Self> {
        if n == 0 || n > BRUTE_FORCE_CAP {
            return Err(Error::InvalidSpec(format!(
                "truth table arity must lie in 1..={BRUTE_FORCE_CAP}, got {n}"
            )));
        }
        Ok(TruthTable { n, bits: (0..1usize << n).map(|_| rng.gen()).collect() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn eval_bits(&self, x: &[bool]) -> bool {
        let mut idx = 0usize;
        for (i, &b) in x.iter().enumerate() {
            if b {
                idx |= 1 << i;
            }
        }
        self.bits[idx]
    }
}

/// A function of `n` variables that depends only on `relevant` coordinates;
/// `table` is indexed by `sum_t x_{relevant[t]} 2^t`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JuntaTable {
    n: usize,
    relevant: Vec<usize>,
    table: Vec<bool>,
}

impl JuntaTable {
    pub fn new(n: usize, relevant: Vec<usize>, table: Vec<bool>) -> Result<Self> {
        let j = relevant.len();
        if j == 0 || j > BRUTE_FORCE_CAP {
            return Err(Error::InvalidSpec(format!(
                "junta arity must lie in 1..={BRUTE_FORCE_CAP}, got {j}"
            )));
        }
        for (pos, &r) in relevant.iter().enumerate() {
            if r >= n {
                return Err(Error::InvalidSpec(format!(
                    "relevant coordinate {r} out of {n} variables"
                )));
            }
            if relevant[..pos].contains(&r) {
                return Err(Error::InvalidSpec(format!("repeated relevant coordinate {r}")));
            }
        }
        if table.len() != 1 << j {
            return Err(Error::InvalidSpec(format!(
                "junta on {j} coordinates needs {} entries, got {}",
                1usize << j,
                table.len()
            )));
        }
        Ok(JuntaTable { n, relevant, table })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn relevant(&self) -> &[usize] {
        &self.relevant
    }

    /// Table entry for an assignment of the relevant coordinates.
    pub fn value(&self, idx: usize) -> bool {
        self.table[idx]
    }

    pub fn eval_bits(&self, x: &[bool]) -> bool {
        let mut idx = 0usize;
        for (t, &r) in self.relevant.iter().enumerate() {
            if x[r] {
                idx |= 1 << t;
            }
        }
        self.table[idx]
    }
}

/// Expected value of `value(mask)` over the product law with the given
/// per-coordinate biases (point masses allowed).  Work is `O(2^free)` via
/// zero-weight pruning and is capped at [`BRUTE_FORCE_CAP`] free bits.
pub(crate) fn cube_expectation(
    biases: &[f64],
    value: &dyn Fn(usize) -> bool,
) -> Result<f64> {
    check_free_cap(biases)?;
    let mut acc = 0.0;
    cube_scan(biases, 0, 0, 1.0, &mut |mask, w| {
        if value(mask) {
            acc += w;
        }
    });
    Ok(acc)
}

/// One pass computing the mean and, for every coordinate, the weight-share
/// of `f = 1` on the `x_i = 1` half: enough to recover both restricted
/// means of every split.
pub(crate) fn cube_survey(
    biases: &[f64],
    value: &dyn Fn(usize) -> bool,
) -> Result<(f64, Vec<f64>)> {
    check_free_cap(biases)?;
    let mut mean = 0.0;
    let mut ones = vec![0.0; biases.len()];
    cube_scan(biases, 0, 0, 1.0, &mut |mask, w| {
        if value(mask) {
            mean += w;
            let mut bits = mask;
            while bits != 0 {
                let i = bits.trailing_zeros() as usize;
                ones[i] += w;
                bits &= bits - 1;
            }
        }
    });
    Ok((mean, ones))
}

fn check_free_cap(biases: &[f64]) -> Result<()> {
    let free = biases.iter().filter(|&&p| p > 0.0 && p < 1.0).count();
    if free > BRUTE_FORCE_CAP {
        return Err(Error::UnsupportedTarget(format!(
            "{free} free bits exceed the enumeration cap of {BRUTE_FORCE_CAP}"
        )));
    }
    Ok(())
}

fn cube_scan(
    biases: &[f64],
    i: usize,
    mask: usize,
    weight: f64,
    visit: &mut impl FnMut(usize, f64),
) {
    if i == biases.len() {
        visit(mask, weight);
        return;
    }
    let p = biases[i];
    if p < 1.0 {
        cube_scan(biases, i + 1, mask, weight * (1.0 - p), visit);
    }
    if p > 0.0 {
        cube_scan(biases, i + 1, mask | (1 << i), weight * p, visit);
    }
}
