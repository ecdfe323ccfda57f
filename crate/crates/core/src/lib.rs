//! Exact analysis of greedy impurity-based decision tree induction.
//!
//! The crate grows binary decision trees over boolean targets and product
//! distributions the way CART/ID3-style heuristics do (split on the variable
//! maximizing purity gain, recurse, round leaf means), but with exact
//! expectation oracles instead of data, so that gain separations as small as
//! `(2/5)^{2k}` can be measured and audited.
//!
//! The interesting targets are parity-addressed multiplexers: `k` address
//! bits, each the XOR of a group of input bits, select one of `2^k` memory
//! bits.  On these targets the memory bits carry exponentially larger purity
//! gain than the addressing bits, which forces greedy heuristics to grow to
//! depth `2^k` or accept constant error.  The [`evaluation`] module packages
//! those claims as runnable experiments, and the `splitgain` binary exposes
//! them as CLI subcommands.
//!
//! Module map:
//!
//! * [`impurity`] — impurity criteria (gini, entropy, km), purity gain, and
//!   the gain-to-squared-difference ratio bounds.
//! * [`dist`] — delta-balanced product distributions, smoothed perturbation,
//!   conditioning, XOR bias arithmetic, sampling.
//! * [`targets`] — target function families, restrictions, address
//!   distributions, and exact expectation oracles.
//! * [`codes`] — parity-set families with symmetric-difference distance and
//!   a randomized Gilbert--Varshamov style search.
//! * [`learner`] — exact and finite-sample top-down tree induction with
//!   per-split audits.
//! * [`evaluation`] — error measurement and experiment verdicts.
//! * [`harness`] — experiment configs, run records, dataset export.

pub mod codes;
pub mod dist;
pub mod evaluation;
pub mod harness;
pub mod impurity;
pub mod learner;
pub mod restriction;
pub mod targets;

mod error;

pub use error::{Error, Result};

/// Absolute tolerance for gain comparisons and oracle agreement checks.
///
/// Gains as small as `(2/5)^{2k} ~ 1e-8` (k = 10) must stay resolvable, so
/// everything that compares gains uses this single absolute floor.
pub const GAIN_TOL: f64 = 1e-12;

/// Full-cube enumeration is permitted only up to this many free input bits.
pub const BRUTE_FORCE_CAP: usize = 24;

/// Exhaustive subset enumeration over set families is capped at this `k`.
pub const DISTANCE_CAP_K: usize = 20;

/// Derives an independent sub-seed from a master seed, a role label, and an
/// index: FNV-1a over the label mixed with a splitmix64 finalizer.  All
/// randomness in the experiment drivers flows from one master seed through
/// this function.
pub fn derive_seed(master: u64, role: &str, index: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in role.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = master
        ^ h.rotate_left(32)
        ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
