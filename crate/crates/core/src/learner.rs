//! Greedy impurity-based top-down tree induction, exact and finite-sample.
//!
//! Every internal node queries a variable maximizing the purity gain of the
//! restricted target (ties broken by a configurable rule), recursion stops
//! at the depth/node budgets or when the restricted mean is 0 or 1, and each
//! leaf is labeled `1[mean >= 1/2]`.  Each split is audited: the chosen
//! variable, its gain, the best competitor, and the margin over the best
//! variable of the other class.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::ProductDistribution;
use crate::impurity::ImpurityFunction;
use crate::restriction::Restriction;
use crate::targets::{TargetFunction, VarClass};
use crate::{Error, Result, GAIN_TOL};

/// How gain ties (within [`GAIN_TOL`]) are broken.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieRule {
    /// Lowest variable index among the tied maximizers.
    #[default]
    Lexicographic,
    /// Adversarial for memory-first claims: prefer a tied addressing bit.
    PreferAddressing,
    /// Uniform choice among the tied maximizers from the build seed.
    SeededRandom,
}

/// Which nodes get expanded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expansion {
    /// Expand every impure node within budget.
    #[default]
    Full,
    /// Expand only nodes on the paths of seeded sample inputs; off-path
    /// children become leaves labeled from their exact means.
    SampledPaths { paths: usize },
}

/// How much per-split information is retained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditDetail {
    /// Keep the node restriction and the full gain vector.
    #[default]
    Full,
    /// Keep only the chosen/runner-up/margin summary (large builds).
    Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthPolicy {
    pub depth_budget: usize,
    #[serde(default = "unlimited")]
    pub node_budget: usize,
    #[serde(default)]
    pub expansion: Expansion,
    #[serde(default)]
    pub tie_rule: TieRule,
    #[serde(default)]
    pub audit_detail: AuditDetail,
}

fn unlimited() -> usize {
    usize::MAX
}

impl GrowthPolicy {
    pub fn exact_full(depth_budget: usize) -> Self {
        GrowthPolicy {
            depth_budget,
            node_budget: usize::MAX,
            expansion: Expansion::Full,
            tie_rule: TieRule::Lexicographic,
            audit_detail: AuditDetail::Full,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Node {
    Leaf { label: u8, mean: f64 },
    Query { var: usize, lo: Box<Node>, hi: Box<Node> },
}

impl Node {
    fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Query { lo, hi, .. } => 1 + lo.depth().max(hi.depth()),
        }
    }

    fn counts(&self) -> (usize, usize) {
        match self {
            Node::Leaf { .. } => (0, 1),
            Node::Query { lo, hi, .. } => {
                let (il, ll) = lo.counts();
                let (ih, lh) = hi.counts();
                (1 + il + ih, ll + lh)
            }
        }
    }
}

/// A grown tree plus its shape statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
    pub depth: usize,
    pub internal_nodes: usize,
    pub leaves: usize,
}

impl DecisionTree {
    pub fn from_root(root: Node) -> Self {
        let depth = root.depth();
        let (internal_nodes, leaves) = root.counts();
        DecisionTree { root, depth, internal_nodes, leaves }
    }

    /// Evaluates the tree as a classifier.
    pub fn eval(&self, x: &[bool]) -> bool {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { label, .. } => return *label == 1,
                Node::Query { var, lo, hi } => node = if x[*var] { hi } else { lo },
            }
        }
    }

    /// Checks that no path queries a variable twice and that every leaf
    /// label rounds its mean.
    pub fn check_invariants(&self) -> Result<()> {
        fn walk(node: &Node, path: &mut Vec<usize>) -> Result<()> {
            match node {
                Node::Leaf { label, mean } => {
                    let want = u8::from(*mean >= 0.5);
                    if *label != want {
                        return Err(Error::InvalidSpec(format!(
                            "leaf label {label} does not round mean {mean}"
                        )));
                    }
                    Ok(())
                }
                Node::Query { var, lo, hi } => {
                    if path.contains(var) {
                        return Err(Error::InvalidSpec(format!("variable {var} queried twice")));
                    }
                    path.push(*var);
                    walk(lo, path)?;
                    walk(hi, path)?;
                    path.pop();
                    Ok(())
                }
            }
        }
        walk(&self.root, &mut Vec::new())
    }
}

/// Per-split audit record.
#[derive(Clone, Debug, Serialize)]
pub struct SplitAudit {
    pub node_id: usize,
    pub depth: usize,
    pub chosen_var: usize,
    pub chosen_class: VarClass,
    pub chosen_gain: f64,
    /// Best gain among all other candidate variables.
    pub runner_up_gain: Option<f64>,
    /// Best gain among candidates of a different class than the chosen one.
    pub best_other_class_gain: Option<f64>,
    /// `chosen_gain - best_other_class_gain`.
    pub margin: Option<f64>,
    /// Node restriction (full audit detail only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restriction: Option<Restriction>,
    /// Gains of all candidate variables, `-inf` marking non-candidates
    /// (full audit detail only; not serialized).
    #[serde(skip)]
    pub gains: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildMeta {
    pub expanded_internal: usize,
    pub node_budget_hit: bool,
    pub depth_budget_hit: bool,
}

#[derive(Clone, Debug)]
pub struct BuildResult {
    pub tree: DecisionTree,
    pub audits: Vec<SplitAudit>,
    pub meta: BuildMeta,
}

struct Chosen {
    var: usize,
    gain: f64,
    runner_up: Option<f64>,
    best_other_class: Option<f64>,
}

fn choose_split(
    gains: &[f64],
    classes: &[VarClass],
    tie_rule: TieRule,
    rng: &mut ChaCha8Rng,
) -> Option<Chosen> {
    let max_gain = gains.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max_gain == f64::NEG_INFINITY {
        return None; // no candidates left
    }
    let tied: Vec<usize> = (0..gains.len())
        .filter(|&i| gains[i] >= max_gain - GAIN_TOL)
        .collect();
    let var = match tie_rule {
        TieRule::Lexicographic => tied[0],
        TieRule::PreferAddressing => tied
            .iter()
            .copied()
            .find(|&i| classes[i] == VarClass::Addressing)
            .unwrap_or(tied[0]),
        TieRule::SeededRandom => tied[rng.gen_range(0..tied.len())],
    };
    let mut runner_up = None;
    let mut best_other_class = None;
    for i in 0..gains.len() {
        let g = gains[i];
        if g == f64::NEG_INFINITY || i == var {
            continue;
        }
        if runner_up.map_or(true, |r| g > r) {
            runner_up = Some(g);
        }
        if classes[i] != classes[var] && best_other_class.map_or(true, |r| g > r) {
            best_other_class = Some(g);
        }
    }
    Some(Chosen { var, gain: gains[var], runner_up, best_other_class })
}

fn leaf(mean: f64) -> Node {
    Node::Leaf { label: u8::from(mean >= 0.5), mean }
}

struct ExactBuilder<'a> {
    f: &'a TargetFunction,
    d: &'a ProductDistribution,
    imp: &'a ImpurityFunction,
    policy: &'a GrowthPolicy,
    classes: Vec<VarClass>,
    samples: Option<Vec<Vec<bool>>>,
    tie_rng: ChaCha8Rng,
    path: Vec<(usize, bool)>,
    audits: Vec<SplitAudit>,
    meta: BuildMeta,
}

impl<'a> ExactBuilder<'a> {
    fn expand(&mut self, depth: usize, idx: Option<Vec<usize>>) -> Result<Node> {
        let pi = Restriction::from_distinct(self.path.clone());
        let mean = self.f.expectation(self.d, &pi)?;
        if mean <= GAIN_TOL || mean >= 1.0 - GAIN_TOL {
            return Ok(leaf(mean));
        }
        if depth >= self.policy.depth_budget {
            self.meta.depth_budget_hit = true;
            return Ok(leaf(mean));
        }
        if self.meta.expanded_internal >= self.policy.node_budget {
            self.meta.node_budget_hit = true;
            return Ok(leaf(mean));
        }

        let survey = self.f.survey(self.d, &pi)?;
        let parent_impurity = self.imp.eval(survey.parent_mean);
        let gains: Vec<f64> = survey
            .vars
            .iter()
            .map(|v| match v {
                None => f64::NEG_INFINITY,
                Some(vs) => {
                    parent_impurity
                        - vs.p * self.imp.eval(vs.mean1)
                        - (1.0 - vs.p) * self.imp.eval(vs.mean0)
                }
            })
            .collect();
        let Some(chosen) = choose_split(&gains, &self.classes, self.policy.tie_rule, &mut self.tie_rng)
        else {
            return Ok(leaf(mean)); // every variable is already on the path
        };

        let node_id = self.meta.expanded_internal;
        self.meta.expanded_internal += 1;
        let full = self.policy.audit_detail == AuditDetail::Full;
        self.audits.push(SplitAudit {
            node_id,
            depth,
            chosen_var: chosen.var,
            chosen_class: self.classes[chosen.var],
            chosen_gain: chosen.gain,
            runner_up_gain: chosen.runner_up,
            best_other_class_gain: chosen.best_other_class,
            margin: chosen.best_other_class.map(|g| chosen.gain - g),
            restriction: full.then(|| pi.clone()),
            gains: full.then(|| gains.clone()),
        });

        let stats = survey.vars[chosen.var].expect("chosen variable is a candidate");
        let (lo_idx, hi_idx) = match &idx {
            None => (None, None),
            Some(rows) => {
                let samples = self.samples.as_ref().expect("sampled expansion rows");
                let (mut lo, mut hi) = (Vec::new(), Vec::new());
                for &r in rows {
                    if samples[r][chosen.var] {
                        hi.push(r);
                    } else {
                        lo.push(r);
                    }
                }
                (Some(lo), Some(hi))
            }
        };

        let lo = self.child(depth, chosen.var, false, stats.mean0, lo_idx)?;
        let hi = self.child(depth, chosen.var, true, stats.mean1, hi_idx)?;
        Ok(Node::Query { var: chosen.var, lo: Box::new(lo), hi: Box::new(hi) })
    }

    fn child(
        &mut self,
        depth: usize,
        var: usize,
        bit: bool,
        exact_mean: f64,
        idx: Option<Vec<usize>>,
    ) -> Result<Node> {
        if self.samples.is_some() && idx.as_ref().is_some_and(|v| v.is_empty()) {
            // off-path child: close with its exact mean
            return Ok(leaf(exact_mean));
        }
        self.path.push((var, bit));
        let node = self.expand(depth + 1, idx);
        self.path.pop();
        node
    }
}

/// Grows a tree with exact restricted means and branch probabilities.
/// Deterministic given the seed (which feeds path sampling and random tie
/// breaking only).
pub fn build_tree_exact(
    f: &TargetFunction,
    d: &ProductDistribution,
    imp: &ImpurityFunction,
    policy: &GrowthPolicy,
    seed: u64,
) -> Result<BuildResult> {
    if d.n() != f.arity() {
        return Err(Error::ArityMismatch { expected: f.arity(), got: d.n() });
    }
    let samples = match policy.expansion {
        Expansion::Full => None,
        Expansion::SampledPaths { paths } => {
            if paths == 0 {
                return Err(Error::InvalidSpec("sampled-paths expansion needs paths >= 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(0);
            Some((0..paths).map(|_| crate::dist::sample_bits(d.biases(), &mut rng)).collect::<Vec<_>>())
        }
    };
    let mut tie_rng = ChaCha8Rng::seed_from_u64(seed);
    tie_rng.set_stream(1);
    let root_idx = samples.as_ref().map(|s: &Vec<Vec<bool>>| (0..s.len()).collect());
    let mut builder = ExactBuilder {
        f,
        d,
        imp,
        policy,
        classes: (0..f.arity()).map(|i| f.var_class(i)).collect(),
        samples,
        tie_rng,
        path: Vec::new(),
        audits: Vec::new(),
        meta: BuildMeta::default(),
    };
    let root = builder.expand(0, root_idx)?;
    Ok(BuildResult {
        tree: DecisionTree::from_root(root),
        audits: builder.audits,
        meta: builder.meta,
    })
}

struct SampledBuilder<'a> {
    samples: &'a [Vec<bool>],
    labels: &'a [bool],
    imp: &'a ImpurityFunction,
    policy: &'a GrowthPolicy,
    classes: Vec<VarClass>,
    arity: usize,
    tie_rng: ChaCha8Rng,
    on_path: Vec<bool>,
    audits: Vec<SplitAudit>,
    meta: BuildMeta,
    path: Vec<(usize, bool)>,
}

impl<'a> SampledBuilder<'a> {
    fn expand(&mut self, depth: usize, idx: &[usize]) -> Result<Node> {
        let n = idx.len() as f64;
        let ones = idx.iter().filter(|&&r| self.labels[r]).count() as f64;
        let mean = ones / n;
        if mean == 0.0 || mean == 1.0 {
            return Ok(leaf(mean));
        }
        if depth >= self.policy.depth_budget {
            self.meta.depth_budget_hit = true;
            return Ok(leaf(mean));
        }
        if self.meta.expanded_internal >= self.policy.node_budget {
            self.meta.node_budget_hit = true;
            return Ok(leaf(mean));
        }

        let parent_impurity = self.imp.eval(mean);
        let mut gains = vec![f64::NEG_INFINITY; self.arity];
        for var in 0..self.arity {
            if self.on_path[var] {
                continue;
            }
            let mut n1 = 0.0;
            let mut s1 = 0.0;
            for &r in idx {
                if self.samples[r][var] {
                    n1 += 1.0;
                    if self.labels[r] {
                        s1 += 1.0;
                    }
                }
            }
            if n1 == 0.0 || n1 == n {
                // empty cell: the split is vacuous
                gains[var] = 0.0;
                continue;
            }
            let p = n1 / n;
            let mean1 = s1 / n1;
            let mean0 = (ones - s1) / (n - n1);
            gains[var] =
                parent_impurity - p * self.imp.eval(mean1) - (1.0 - p) * self.imp.eval(mean0);
        }
        let Some(chosen) = choose_split(&gains, &self.classes, self.policy.tie_rule, &mut self.tie_rng)
        else {
            return Ok(leaf(mean));
        };

        let node_id = self.meta.expanded_internal;
        self.meta.expanded_internal += 1;
        let full = self.policy.audit_detail == AuditDetail::Full;
        self.audits.push(SplitAudit {
            node_id,
            depth,
            chosen_var: chosen.var,
            chosen_class: self.classes[chosen.var],
            chosen_gain: chosen.gain,
            runner_up_gain: chosen.runner_up,
            best_other_class_gain: chosen.best_other_class,
            margin: chosen.best_other_class.map(|g| chosen.gain - g),
            restriction: full.then(|| Restriction::from_distinct(self.path.clone())),
            gains: full.then(|| gains.clone()),
        });

        let (lo_idx, hi_idx): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&r| !self.samples[r][chosen.var]);
        let mut children = Vec::with_capacity(2);
        for (bit, child_idx) in [(false, lo_idx), (true, hi_idx)] {
            if child_idx.is_empty() {
                // empty cell: close with the parent's majority label
                children.push(leaf(mean));
                continue;
            }
            self.on_path[chosen.var] = true;
            self.path.push((chosen.var, bit));
            let node = self.expand(depth + 1, &child_idx);
            self.path.pop();
            self.on_path[chosen.var] = false;
            children.push(node?);
        }
        let hi = children.pop().expect("two children");
        let lo = children.pop().expect("two children");
        Ok(Node::Query { var: chosen.var, lo: Box::new(lo), hi: Box::new(hi) })
    }
}

/// Grows a tree from `m` i.i.d. labeled examples `(x, f(x))` with plug-in
/// empirical estimates, same control flow as the exact build.  A child that
/// receives no samples becomes a leaf labeled by the parent majority.
pub fn build_tree_sampled(
    f: &TargetFunction,
    d: &ProductDistribution,
    imp: &ImpurityFunction,
    policy: &GrowthPolicy,
    m: usize,
    seed: u64,
) -> Result<BuildResult> {
    if d.n() != f.arity() {
        return Err(Error::ArityMismatch { expected: f.arity(), got: d.n() });
    }
    if m == 0 {
        return Err(Error::InvalidSpec("need at least one training example".into()));
    }
    let samples: Vec<Vec<bool>> = {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        (0..m).map(|_| crate::dist::sample_bits(d.biases(), &mut rng)).collect()
    };
    let labels: Vec<bool> =
        samples.iter().map(|x| f.eval(x)).collect::<Result<Vec<_>>>()?;
    let mut tie_rng = ChaCha8Rng::seed_from_u64(seed);
    tie_rng.set_stream(1);
    let mut builder = SampledBuilder {
        samples: &samples,
        labels: &labels,
        imp,
        policy,
        classes: (0..f.arity()).map(|i| f.var_class(i)).collect(),
        arity: f.arity(),
        tie_rng,
        on_path: vec![false; f.arity()],
        audits: Vec::new(),
        meta: BuildMeta::default(),
        path: Vec::new(),
    };
    let idx: Vec<usize> = (0..m).collect();
    let root = builder.expand(0, &idx)?;
    Ok(BuildResult {
        tree: DecisionTree::from_root(root),
        audits: builder.audits,
        meta: builder.meta,
    })
}

/// Summary of the split ordering of one build's audits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryOrderReport {
    /// Shallowest depth at which an addressing bit was chosen, if ever.
    pub first_addressing_depth: Option<usize>,
    /// Number of leading depths at which only memory bits were chosen.
    pub memory_prefix_length: usize,
    /// Minimum margin of a chosen memory bit over the best addressing bit.
    pub min_margin: Option<f64>,
}

pub fn audit_query_order(audits: &[SplitAudit]) -> QueryOrderReport {
    let first_addressing_depth = audits
        .iter()
        .filter(|a| a.chosen_class == VarClass::Addressing)
        .map(|a| a.depth)
        .min();
    let memory_prefix_length = match first_addressing_depth {
        Some(d) => d,
        None => audits.iter().map(|a| a.depth + 1).max().unwrap_or(0),
    };
    let min_margin = audits
        .iter()
        .filter(|a| a.chosen_class == VarClass::Memory)
        .filter_map(|a| a.margin)
        .fold(None, |acc: Option<f64>, m| Some(acc.map_or(m, |a| a.min(m))));
    QueryOrderReport { first_addressing_depth, memory_prefix_length, min_margin }
}

/// The depth-(addressing bits + 1) reference tree that queries every
/// addressing bit in index order, then the selected memory bit.  It computes
/// the target exactly and is useful as an evaluation oracle.
pub fn reference_tree(f: &TargetFunction) -> Result<DecisionTree> {
    let layout = f
        .addressing_layout()
        .ok_or_else(|| Error::UnsupportedTarget("reference tree needs an addressing target".into()))?
        .clone();
    if layout.num_addressing() > 18 {
        return Err(Error::UnsupportedTarget(format!(
            "reference tree over {} addressing bits is too large",
            layout.num_addressing()
        )));
    }
    let accepts: Option<Vec<bool>> = match f.structural() {
        TargetFunction::AddressJunta(g) => {
            Some((0..layout.num_addresses()).map(|a| g.accepts(a)).collect())
        }
        _ => None,
    };
    fn grow(
        layout: &crate::targets::AddressingLayout,
        accepts: &Option<Vec<bool>>,
        x: &mut Vec<bool>,
        var: usize,
    ) -> Node {
        if var == layout.num_addressing() {
            let addr = layout.address_of(x);
            return match accepts {
                Some(mask) => {
                    let b = mask[addr];
                    Node::Leaf { label: u8::from(b), mean: f64::from(u8::from(b)) }
                }
                None => Node::Query {
                    var: layout.memory_index(addr),
                    lo: Box::new(Node::Leaf { label: 0, mean: 0.0 }),
                    hi: Box::new(Node::Leaf { label: 1, mean: 1.0 }),
                },
            };
        }
        x[var] = false;
        let lo = grow(layout, accepts, x, var + 1);
        x[var] = true;
        let hi = grow(layout, accepts, x, var + 1);
        x[var] = false;
        Node::Query { var, lo: Box::new(lo), hi: Box::new(hi) }
    }
    let mut x = vec![false; layout.arity()];
    Ok(DecisionTree::from_root(grow(&layout, &accepts, &mut x, 0)))
}
