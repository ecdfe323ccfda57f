//! Delta-balanced product distributions over `{0,1}^n`, smoothed variants,
//! conditioning, and XOR bias arithmetic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::restriction::Restriction;
use crate::{Error, Result};

/// A product distribution whose coordinate biases all lie in
/// `[delta, 1 - delta]` for some `delta` in `(0, 1/2]`.
///
/// Point masses (bias exactly 0 or 1) are deliberately not constructible
/// here; they arise only as outputs of [`ProductDistribution::condition`].
#[derive(Clone, Debug, PartialEq)]
pub struct ProductDistribution {
    biases: Vec<f64>,
    delta: f64,
}

impl ProductDistribution {
    pub fn new(biases: Vec<f64>, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(Error::InvalidSpec(format!(
                "delta must lie in (0, 1/2], got {delta}"
            )));
        }
        if biases.is_empty() {
            return Err(Error::EmptySequence);
        }
        for (i, &p) in biases.iter().enumerate() {
            if !(p.is_finite() && p >= delta && p <= 1.0 - delta) {
                return Err(Error::InvalidSpec(format!(
                    "bias p_{i} = {p} outside [{delta}, {}]",
                    1.0 - delta
                )));
            }
        }
        Ok(ProductDistribution { biases, delta })
    }

    /// The uniform distribution on `{0,1}^n` (all biases 1/2, delta = 1/2).
    pub fn uniform(n: usize) -> Self {
        ProductDistribution { biases: vec![0.5; n], delta: 0.5 }
    }

    /// All coordinates share one bias.
    pub fn constant_bias(n: usize, p: f64, delta: f64) -> Result<Self> {
        ProductDistribution::new(vec![p; n], delta)
    }

    /// Seeded biases drawn uniformly from the open band `(delta, 1 - delta)`.
    pub fn random_in_band(n: usize, delta: f64, seed: u64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(Error::InvalidSpec(format!(
                "delta must lie in (0, 1/2], got {delta}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let biases = (0..n)
            .map(|_| {
                if delta == 0.5 {
                    0.5
                } else {
                    let u: f64 = rng.gen();
                    delta + u * (1.0 - 2.0 * delta)
                }
            })
            .collect();
        ProductDistribution::new(biases, delta)
    }

    pub fn n(&self) -> usize {
        self.biases.len()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn bias(&self, i: usize) -> f64 {
        self.biases[i]
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    /// Fixes the restricted coordinates to point masses; free coordinates
    /// keep their biases.  The marginal law of the free bits is unchanged.
    pub fn condition(&self, pi: &Restriction) -> Result<ConditionedDistribution> {
        let mut cond = ConditionedDistribution { biases: self.biases.clone() };
        for (i, b) in pi.iter() {
            if i >= self.n() {
                return Err(Error::ArityMismatch { expected: self.n(), got: i + 1 });
            }
            cond.biases[i] = if b { 1.0 } else { 0.0 };
        }
        Ok(cond)
    }

    /// One sample, deterministic given the seed.
    pub fn sample_one(&self, seed: u64) -> Vec<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sample_bits(&self.biases, &mut rng)
    }

    /// `m` i.i.d. samples drawn from one seeded stream (coordinate-major
    /// within each sample).
    pub fn sample_many(&self, m: usize, seed: u64) -> Vec<Vec<bool>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..m).map(|_| sample_bits(&self.biases, &mut rng)).collect()
    }
}

pub(crate) fn sample_bits(biases: &[f64], rng: &mut impl Rng) -> Vec<bool> {
    biases.iter().map(|&p| rng.gen::<f64>() < p).collect()
}

/// Bias vector with point masses allowed; produced by conditioning.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionedDistribution {
    biases: Vec<f64>,
}

impl ConditionedDistribution {
    /// Direct construction from per-coordinate biases in `[0, 1]`.
    pub fn from_biases(biases: Vec<f64>) -> Result<Self> {
        if biases.is_empty() {
            return Err(Error::EmptySequence);
        }
        for (i, &p) in biases.iter().enumerate() {
            if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                return Err(Error::InvalidSpec(format!("bias p_{i} = {p} outside [0, 1]")));
            }
        }
        Ok(ConditionedDistribution { biases })
    }

    pub fn n(&self) -> usize {
        self.biases.len()
    }

    pub fn bias(&self, i: usize) -> f64 {
        self.biases[i]
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn is_fixed(&self, i: usize) -> bool {
        self.biases[i] == 0.0 || self.biases[i] == 1.0
    }

    pub fn sample_one(&self, seed: u64) -> Vec<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sample_bits(&self.biases, &mut rng)
    }
}

/// Specification of a smoothed product distribution: each realized bias is
/// `base_i + Delta_i` with `Delta_i` i.i.d. uniform on `[-sigma, sigma]`.
///
/// The margin constraint `base_i in (delta + sigma, 1 - delta - sigma)`
/// guarantees every realized distribution is delta-balanced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothedSpec {
    base: Vec<f64>,
    sigma: f64,
    delta: f64,
}

impl SmoothedSpec {
    pub fn new(base: Vec<f64>, sigma: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(Error::InvalidSpec(format!(
                "delta must lie in (0, 1/2], got {delta}"
            )));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidSpec(format!("sigma must be >= 0, got {sigma}")));
        }
        if base.is_empty() {
            return Err(Error::EmptySequence);
        }
        for (i, &p) in base.iter().enumerate() {
            if !(p > delta + sigma && p < 1.0 - delta - sigma) {
                return Err(Error::InvalidSpec(format!(
                    "base bias p_{i} = {p} outside ({}, {})",
                    delta + sigma,
                    1.0 - delta - sigma
                )));
            }
        }
        Ok(SmoothedSpec { base, sigma, delta })
    }

    pub fn n(&self) -> usize {
        self.base.len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }
}

/// Draws one smoothed distribution.  Coordinate `i` reads its perturbation
/// from stream `i` of a ChaCha8 cipher keyed by `seed`, so per-coordinate
/// draws are independent of vector length and of each other.
pub fn sample_smoothed(spec: &SmoothedSpec, seed: u64) -> ProductDistribution {
    let biases = spec
        .base
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            if spec.sigma == 0.0 {
                p
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let delta_i = rng.gen_range(-spec.sigma..=spec.sigma);
                p + delta_i
            }
        })
        .collect();
    // The margin constraint makes the realized vector delta-balanced.
    ProductDistribution::new(biases, spec.delta)
        .expect("smoothed sample escaped the balance band")
}

/// Probability that the XOR of independent bits with the given biases is 1,
/// via the product identity `1 - 2 Pr[xor = 1] = prod_j (1 - 2 p_j)`.
pub fn xor_bias(biases: &[f64]) -> Result<f64> {
    if biases.is_empty() {
        return Err(Error::EmptySequence);
    }
    let prod: f64 = biases.iter().map(|&p| 1.0 - 2.0 * p).product();
    Ok(0.5 * (1.0 - prod))
}

/// JSON-facing distribution description.
///
/// ```json
/// {"kind": "uniform", "n": 8}
/// {"kind": "fixed", "n": 4, "delta": 0.25, "biases": [0.3, 0.5, 0.25, 0.75]}
/// {"kind": "smoothed", "n": 2, "delta": 0.1, "biases": [0.5, 0.4], "sigma": 0.05, "seed": 7}
/// ```
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub biases: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl DistributionSpec {
    pub fn uniform(n: usize) -> Self {
        DistributionSpec {
            kind: "uniform".into(),
            n: Some(n),
            delta: None,
            biases: None,
            sigma: None,
            seed: None,
        }
    }

    fn field_err(field: &str, message: impl Into<String>) -> Error {
        Error::InvalidConfig { field: format!("dist.{field}"), message: message.into() }
    }

    /// Validates and materializes the concrete product distribution.
    pub fn realize(&self) -> Result<ProductDistribution> {
        match self.kind.as_str() {
            "uniform" => {
                let n = self.n.ok_or_else(|| Self::field_err("n", "required for uniform"))?;
                if n == 0 {
                    return Err(Self::field_err("n", "must be >= 1"));
                }
                Ok(ProductDistribution::uniform(n))
            }
            "fixed" => {
                let biases = self
                    .biases
                    .clone()
                    .ok_or_else(|| Self::field_err("biases", "required for fixed"))?;
                let delta =
                    self.delta.ok_or_else(|| Self::field_err("delta", "required for fixed"))?;
                if let Some(n) = self.n {
                    if n != biases.len() {
                        return Err(Self::field_err(
                            "n",
                            format!("n = {n} disagrees with {} biases", biases.len()),
                        ));
                    }
                }
                ProductDistribution::new(biases, delta)
                    .map_err(|e| Self::field_err("biases", e.to_string()))
            }
            "smoothed" => {
                let base = self
                    .biases
                    .clone()
                    .ok_or_else(|| Self::field_err("biases", "required for smoothed"))?;
                let delta =
                    self.delta.ok_or_else(|| Self::field_err("delta", "required for smoothed"))?;
                let sigma =
                    self.sigma.ok_or_else(|| Self::field_err("sigma", "required for smoothed"))?;
                let seed =
                    self.seed.ok_or_else(|| Self::field_err("seed", "required for smoothed"))?;
                if let Some(n) = self.n {
                    if n != base.len() {
                        return Err(Self::field_err(
                            "n",
                            format!("n = {n} disagrees with {} biases", base.len()),
                        ));
                    }
                }
                let spec = SmoothedSpec::new(base, sigma, delta)
                    .map_err(|e| Self::field_err("biases", e.to_string()))?;
                Ok(sample_smoothed(&spec, seed))
            }
            other => Err(Self::field_err("kind", format!("unknown kind '{other}'"))),
        }
    }
}
