//! Experiment configuration, dispatch, and result persistence.
//!
//! A run is described by one JSON [`ExperimentConfig`].  All outputs are
//! written atomically (write to a sibling `.tmp`, then rename) into the run
//! directory along with a [`RunRecord`] carrying the config fingerprint,
//! crate version, wall time, status, and file manifest.  Everything the
//! harness writes it can also read back.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dist::{DistributionSpec, ProductDistribution};
use crate::evaluation::{
    junta_sanity_experiment, parity_example_gains, thm4_experiment, thm5_experiment,
    JuntaSanityParams, NodeMarginRecord, Thm4Params, Thm5Params, VerdictStatus,
};
use crate::impurity::ImpurityFunction;
use crate::learner::{
    build_tree_exact, build_tree_sampled, BuildResult, DecisionTree, GrowthPolicy, SplitAudit,
};
use crate::restriction::Restriction;
use crate::targets::{address_pmf, TargetFunction, TargetSpec, VarClass};
use crate::{Error, Result};

/// One experiment, ready to dispatch.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    Learn {
        target: TargetSpec,
        dist: DistributionSpec,
        impurity: String,
        policy: GrowthPolicy,
        /// When present, train from this many samples instead of the exact
        /// oracles.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<usize>,
        #[serde(default)]
        seed: u64,
    },
    Gains {
        target: TargetSpec,
        dist: DistributionSpec,
        impurity: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        restriction: Option<Restriction>,
    },
    VerifyThm4(Thm4Params),
    VerifyThm5(Thm5Params),
    JuntaSanity(JuntaSanityParams),
    ParityExample {
        n: usize,
        i: usize,
        j: usize,
    },
    GvSearch {
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<usize>,
        /// With no explicit `c`, auto-scale from `ceil(ln5/delta)` upward.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_budget")]
        budget: u64,
    },
    ExportDataset {
        target: TargetSpec,
        dist: DistributionSpec,
        m: usize,
        #[serde(default)]
        seed: u64,
    },
    AddressPmf {
        target: TargetSpec,
        dist: DistributionSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        restriction: Option<Restriction>,
    },
}

fn default_budget() -> u64 {
    100_000
}

impl ExperimentConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::Learn { .. } => "learn",
            ExperimentConfig::Gains { .. } => "gains",
            ExperimentConfig::VerifyThm4(_) => "verify-thm4",
            ExperimentConfig::VerifyThm5(_) => "verify-thm5",
            ExperimentConfig::JuntaSanity(_) => "junta-sanity",
            ExperimentConfig::ParityExample { .. } => "parity-example",
            ExperimentConfig::GvSearch { .. } => "gv-search",
            ExperimentConfig::ExportDataset { .. } => "export-dataset",
            ExperimentConfig::AddressPmf { .. } => "address-pmf",
        }
    }

    /// Overrides the master seed where the experiment has one.
    pub fn set_seed(&mut self, new_seed: u64) {
        match self {
            ExperimentConfig::Learn { seed, .. }
            | ExperimentConfig::GvSearch { seed, .. }
            | ExperimentConfig::ExportDataset { seed, .. } => *seed = new_seed,
            ExperimentConfig::VerifyThm4(p) => p.seed = new_seed,
            ExperimentConfig::VerifyThm5(p) => p.seed = new_seed,
            ExperimentConfig::JuntaSanity(p) => p.seed = new_seed,
            ExperimentConfig::Gains { .. }
            | ExperimentConfig::ParityExample { .. }
            | ExperimentConfig::AddressPmf { .. } => {}
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    /// All claims checked by the experiment held.
    Passed,
    /// At least one claim failed at a scale where it should hold.
    ClaimFailed,
    /// A check failed below the scale threshold of the claim.
    OutOfHypothesis,
    /// The run produced artifacts; nothing was claimed.
    Completed,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Passed | RunStatus::Completed | RunStatus::OutOfHypothesis => 0,
            RunStatus::ClaimFailed => 1,
        }
    }
}

impl From<VerdictStatus> for RunStatus {
    fn from(v: VerdictStatus) -> Self {
        match v {
            VerdictStatus::Pass => RunStatus::Passed,
            VerdictStatus::Fail => RunStatus::ClaimFailed,
            VerdictStatus::OutOfHypothesis => RunStatus::OutOfHypothesis,
        }
    }
}

/// Manifest of one run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    pub config_hash: String,
    pub version: String,
    pub wall_ms: u128,
    pub status: RunStatus,
    pub summary: String,
    pub files: Vec<String>,
    pub verdict: serde_json::Value,
}

/// FNV-1a fingerprint of the canonical config JSON.
pub fn config_hash(config: &ExperimentConfig) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    Ok(format!("{h:016x}"))
}

/// Writes bytes to `path` via a sibling temp file and rename, so partial
/// runs never masquerade as results.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Audit CSV with one row per internal node.
pub fn write_audits_csv(path: &Path, records: &[NodeMarginRecord]) -> Result<()> {
    let mut out = String::from("node_id,depth,chosen_var,class,gain,runner_up_gain,margin\n");
    for r in records {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.node_id,
            r.depth,
            r.var,
            r.class.short(),
            r.gain,
            opt(r.runner_up_gain),
            opt(r.margin),
        ));
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_audits_csv(path: &Path) -> Result<Vec<NodeMarginRecord>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "node_id,depth,chosen_var,class,gain,runner_up_gain,margin" {
        return Err(Error::InvalidSpec(format!("unexpected audit header '{header}'")));
    }
    let mut records = Vec::new();
    for (ln, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(Error::InvalidSpec(format!("audit row {ln} has {} columns", cols.len())));
        }
        let parse_f = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>()
                    .map(Some)
                    .map_err(|e| Error::InvalidSpec(format!("audit row {ln}: {e}")))
            }
        };
        let parse_u = |s: &str| -> Result<usize> {
            s.parse::<usize>().map_err(|e| Error::InvalidSpec(format!("audit row {ln}: {e}")))
        };
        let class = match cols[3] {
            "addressing" => VarClass::Addressing,
            "memory" => VarClass::Memory,
            "plain" => VarClass::Plain,
            other => return Err(Error::InvalidSpec(format!("unknown class '{other}'"))),
        };
        records.push(NodeMarginRecord {
            node_id: parse_u(cols[0])?,
            depth: parse_u(cols[1])?,
            var: parse_u(cols[2])?,
            class,
            gain: parse_f(cols[4])?
                .ok_or_else(|| Error::InvalidSpec(format!("audit row {ln}: missing gain")))?,
            runner_up_gain: parse_f(cols[5])?,
            margin: parse_f(cols[6])?,
        });
    }
    Ok(records)
}

fn audit_summaries(audits: &[SplitAudit]) -> Vec<NodeMarginRecord> {
    audits
        .iter()
        .map(|a| NodeMarginRecord {
            node_id: a.node_id,
            depth: a.depth,
            var: a.chosen_var,
            class: a.chosen_class,
            gain: a.chosen_gain,
            runner_up_gain: a.runner_up_gain,
            margin: a.margin,
        })
        .collect()
}

/// Writes `m` labeled examples as CSV (`x_1,..,x_n,label`), deterministic
/// given the seed.
pub fn export_dataset(
    f: &TargetFunction,
    d: &ProductDistribution,
    m: usize,
    seed: u64,
    path: &Path,
) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidSpec("need at least one example".into()));
    }
    if d.n() != f.arity() {
        return Err(Error::ArityMismatch { expected: f.arity(), got: d.n() });
    }
    let n = f.arity();
    let mut out = String::new();
    for i in 1..=n {
        out.push_str(&format!("x_{i},"));
    }
    out.push_str("label\n");
    for x in d.sample_many(m, seed) {
        for &b in &x {
            out.push(if b { '1' } else { '0' });
            out.push(',');
        }
        out.push(if f.eval(&x)? { '1' } else { '0' });
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Reads back a dataset written by [`export_dataset`].
pub fn read_dataset(path: &Path) -> Result<(Vec<Vec<bool>>, Vec<bool>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let n = header.split(',').count().saturating_sub(1);
    if n == 0 || !header.ends_with("label") {
        return Err(Error::InvalidSpec(format!("unexpected dataset header '{header}'")));
    }
    let mut xs = Vec::new();
    let mut labels = Vec::new();
    for (ln, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != n + 1 {
            return Err(Error::InvalidSpec(format!(
                "dataset row {ln} has {} columns",
                cols.len()
            )));
        }
        let bit = |s: &str| -> Result<bool> {
            match s {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::InvalidSpec(format!("dataset row {ln}: bad bit '{other}'"))),
            }
        };
        xs.push(cols[..n].iter().map(|s| bit(s)).collect::<Result<Vec<bool>>>()?);
        labels.push(bit(cols[n])?);
    }
    Ok((xs, labels))
}

/// Serialized tree artifact.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeFile {
    pub impurity: String,
    pub tree: DecisionTree,
}

pub fn read_tree(path: &Path) -> Result<TreeFile> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Emitted by `gv-search`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyFile {
    pub k: usize,
    pub c: usize,
    pub ground: usize,
    pub distance: usize,
    pub min_codeword_weight: usize,
    pub sets: Vec<Vec<usize>>,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        write_json(&self.dir.join(name), value)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_audits(&mut self, name: &str, records: &[NodeMarginRecord]) -> Result<()> {
        write_audits_csv(&self.dir.join(name), records)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_raw(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Runs one experiment, writing its artifacts into `out_dir`.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunRecord> {
    let start = Instant::now();
    fs::create_dir_all(out_dir)?;
    let hash = config_hash(config)?;
    let mut outputs = Outputs { dir: out_dir.to_path_buf(), files: Vec::new() };
    outputs.write_json("config.json", config)?;

    let (status, summary, verdict): (RunStatus, String, serde_json::Value) = match config {
        ExperimentConfig::Learn { target, dist, impurity, policy, samples, seed } => {
            let f = target.realize()?;
            let d = dist.realize()?;
            let imp = ImpurityFunction::by_name(impurity)?;
            let build: BuildResult = match samples {
                Some(m) => build_tree_sampled(&f, &d, &imp, policy, *m, *seed)?,
                None => build_tree_exact(&f, &d, &imp, policy, *seed)?,
            };
            outputs.write_json(
                "tree.json",
                &TreeFile { impurity: impurity.clone(), tree: build.tree.clone() },
            )?;
            outputs.write_audits("audits.csv", &audit_summaries(&build.audits))?;
            let summary = format!(
                "depth {} with {} internal nodes, {} leaves",
                build.tree.depth, build.tree.internal_nodes, build.tree.leaves
            );
            (RunStatus::Completed, summary, serde_json::to_value(build.meta)?)
        }
        ExperimentConfig::Gains { target, dist, impurity, restriction } => {
            let f = target.realize()?;
            let d = dist.realize()?;
            let imp = ImpurityFunction::by_name(impurity)?;
            let pi = restriction.clone().unwrap_or_default();
            let survey = f.survey(&d, &pi)?;
            let parent = imp.eval(survey.parent_mean);
            let mut csv = String::from("var,class,p,mean0,mean1,gain\n");
            let mut best: Option<(usize, f64)> = None;
            for (i, vs) in survey.vars.iter().enumerate() {
                let Some(vs) = vs else { continue };
                let gain = parent - vs.p * imp.eval(vs.mean1) - (1.0 - vs.p) * imp.eval(vs.mean0);
                if best.map_or(true, |(_, g)| gain > g) {
                    best = Some((i, gain));
                }
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    i,
                    f.var_class(i).short(),
                    vs.p,
                    vs.mean0,
                    vs.mean1,
                    gain
                ));
            }
            outputs.write_raw("gains.csv", csv.as_bytes())?;
            let summary = match best {
                Some((i, g)) => format!("best variable x_{i} with gain {g:.3e}"),
                None => "no candidate variables".into(),
            };
            (RunStatus::Completed, summary, serde_json::Value::Null)
        }
        ExperimentConfig::VerifyThm4(params) => {
            let verdict = thm4_experiment(params)?;
            outputs.write_json("verdict.json", &verdict)?;
            outputs.write_audits("audits.csv", &verdict.node_margins)?;
            let summary = format!(
                "k={} delta={} {:?}: addressing-free={}, error {:.4} vs floor {:.4}",
                verdict.k,
                verdict.delta,
                verdict.status,
                verdict.no_addressing_splits,
                verdict.error.error,
                verdict.error_floor
            );
            (verdict.status.into(), summary, serde_json::to_value(&verdict)?)
        }
        ExperimentConfig::VerifyThm5(params) => {
            let verdict = thm5_experiment(params)?;
            outputs.write_json("verdict.json", &verdict)?;
            outputs.write_audits("audits.csv", &verdict.node_margins)?;
            let summary = format!(
                "k={} eps={} {:?}: junta-dist {:.4}, error {:.4} vs floor {:.4}",
                verdict.k,
                verdict.epsilon,
                verdict.status,
                verdict.junta_distance,
                verdict.error.error,
                verdict.error_floor
            );
            (verdict.status.into(), summary, serde_json::to_value(&verdict)?)
        }
        ExperimentConfig::JuntaSanity(params) => {
            let report = junta_sanity_experiment(params)?;
            outputs.write_json("verdict.json", &report)?;
            let status = if report.success_rate >= params.pass_rate_floor {
                RunStatus::Passed
            } else {
                RunStatus::ClaimFailed
            };
            let summary = format!(
                "{}/{} trials reached zero error at junta depth",
                report.successes, report.trials
            );
            (status, summary, serde_json::to_value(&report)?)
        }
        ExperimentConfig::ParityExample { n, i, j } => {
            let report = parity_example_gains(*n, *i, *j)?;
            outputs.write_json("verdict.json", &report)?;
            let status = if report.all_zero { RunStatus::Passed } else { RunStatus::ClaimFailed };
            let summary = format!(
                "max |gain| over all criteria: {:.3e}",
                report.max_abs_gain.iter().map(|(_, g)| *g).fold(0.0, f64::max)
            );
            (status, summary, serde_json::to_value(&report)?)
        }
        ExperimentConfig::GvSearch { k, c, d, delta, seed, budget } => {
            let (family, c_used) = match c {
                Some(c) => {
                    let d = d.ok_or_else(|| Error::InvalidConfig {
                        field: "d".into(),
                        message: "required when c is given".into(),
                    })?;
                    (crate::codes::gv_search(*k, *c, d, *seed, *budget)?, *c)
                }
                None => {
                    let delta = delta.ok_or_else(|| Error::InvalidConfig {
                        field: "delta".into(),
                        message: "required when c is omitted (auto-scaling)".into(),
                    })?;
                    crate::codes::gv_search_auto(*k, delta, *d, *seed, *budget)?
                }
            };
            let file = FamilyFile {
                k: *k,
                c: c_used,
                ground: family.ground(),
                distance: family.distance()?,
                min_codeword_weight: family.min_codeword_weight()?,
                sets: family.sets().to_vec(),
            };
            outputs.write_json("family.json", &file)?;
            let summary = format!(
                "found k={} family over [{}] with distance {}",
                file.k, file.ground, file.distance
            );
            (RunStatus::Completed, summary, serde_json::to_value(&file)?)
        }
        ExperimentConfig::ExportDataset { target, dist, m, seed } => {
            let f = target.realize()?;
            let d = dist.realize()?;
            export_dataset(&f, &d, *m, *seed, &out_dir.join("dataset.csv"))?;
            outputs.files.push("dataset.csv".into());
            (RunStatus::Completed, format!("wrote {m} examples"), serde_json::Value::Null)
        }
        ExperimentConfig::AddressPmf { target, dist, restriction } => {
            let f = target.realize()?;
            let d = dist.realize()?;
            let pi = restriction.clone().unwrap_or_default();
            let pmf = address_pmf(&f, &d, &pi)?;
            let k = f.addressing_layout().map(|l| l.k()).unwrap_or(0);
            let uniform = (pmf.len() as f64).recip();
            let max_dev = pmf.iter().map(|p| (p - uniform).abs()).fold(0.0, f64::max);
            #[derive(Serialize)]
            struct PmfFile {
                k: usize,
                sum: f64,
                max_abs_dev_from_uniform: f64,
                pmf: Vec<f64>,
            }
            let file =
                PmfFile { k, sum: pmf.iter().sum(), max_abs_dev_from_uniform: max_dev, pmf };
            outputs.write_json("pmf.json", &file)?;
            let summary = format!("max |pmf - 2^-k| = {max_dev:.3e}");
            (RunStatus::Completed, summary, serde_json::to_value(&file)?)
        }
    };

    let record = RunRecord {
        experiment: config.kind().to_string(),
        config_hash: hash,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_ms: start.elapsed().as_millis(),
        status,
        summary,
        files: outputs.files,
        verdict,
    };
    write_json(&out_dir.join("run.json"), &record)?;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::{AuditDetail, Expansion, TieRule};

    fn tmpdir(name: &str) -> PathBuf {
        let dir =
            std::env::temp_dir().join(format!("splitgain-harness-{name}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        dir
    }

    fn minimal_learn() -> ExperimentConfig {
        ExperimentConfig::Learn {
            target: serde_json::from_str(r#"{"family":"dictator","n":4,"index":1}"#).unwrap(),
            dist: DistributionSpec::uniform(4),
            impurity: "gini".into(),
            policy: GrowthPolicy {
                depth_budget: 4,
                node_budget: usize::MAX,
                expansion: Expansion::Full,
                tie_rule: TieRule::Lexicographic,
                audit_detail: AuditDetail::Summary,
            },
            samples: None,
            seed: 7,
        }
    }

    #[test]
    fn learn_run_writes_reparseable_artifacts() {
        let dir = tmpdir("learn");
        let rec = run(&minimal_learn(), &dir).unwrap();
        assert_eq!(rec.status, RunStatus::Completed);
        assert!(rec.files.contains(&"tree.json".to_string()));
        let tree = read_tree(&dir.join("tree.json")).unwrap();
        assert_eq!(tree.tree.depth, 1);
        let audits = read_audits_csv(&dir.join("audits.csv")).unwrap();
        assert_eq!(audits.len(), 1);
        assert_eq!(audits[0].var, 1);
        // config round-trips
        let back: ExperimentConfig =
            serde_json::from_str(&fs::read_to_string(dir.join("config.json")).unwrap()).unwrap();
        assert_eq!(back, minimal_learn());
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn rerunning_produces_identical_verdicts() {
        let config = ExperimentConfig::ParityExample { n: 5, i: 0, j: 3 };
        let dir_a = tmpdir("rerun-a");
        let dir_b = tmpdir("rerun-b");
        let a = run(&config, &dir_a).unwrap();
        let b = run(&config, &dir_b).unwrap();
        assert_eq!(a.config_hash, b.config_hash);
        assert_eq!(a.status, RunStatus::Passed);
        let va = fs::read(dir_a.join("verdict.json")).unwrap();
        let vb = fs::read(dir_b.join("verdict.json")).unwrap();
        assert_eq!(va, vb);
        fs::remove_dir_all(&dir_a).ok();
        fs::remove_dir_all(&dir_b).ok();
    }

    #[test]
    fn invalid_delta_is_rejected_before_compute() {
        let config: ExperimentConfig = serde_json::from_str(
            r#"{"experiment":"learn","target":{"family":"dictator","n":2,"index":0},
                "dist":{"kind":"fixed","delta":0.6,"biases":[0.5,0.5]},
                "impurity":"gini","policy":{"depth_budget":1}}"#,
        )
        .unwrap();
        let dir = tmpdir("bad-delta");
        let err = run(&config, &dir).unwrap_err();
        assert!(err.is_invalid_input(), "{err}");
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn dataset_roundtrip_and_determinism() {
        let f: TargetSpec = serde_json::from_str(r#"{"family":"fck","c":2,"k":2}"#).unwrap();
        let f = f.realize().unwrap();
        let d = ProductDistribution::random_in_band(f.arity(), 0.25, 3).unwrap();
        let dir = tmpdir("dataset");
        fs::create_dir_all(&dir).unwrap();
        let p1 = dir.join("a.csv");
        let p2 = dir.join("b.csv");
        export_dataset(&f, &d, 10, 42, &p1).unwrap();
        export_dataset(&f, &d, 10, 42, &p2).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
        let (xs, labels) = read_dataset(&p1).unwrap();
        assert_eq!(xs.len(), 10);
        for (x, &label) in xs.iter().zip(&labels) {
            assert_eq!(f.eval(x).unwrap(), label);
        }
        assert!(export_dataset(&f, &d, 0, 1, &dir.join("c.csv")).is_err());
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn exported_label_mean_matches_expectation() {
        let f: TargetSpec = serde_json::from_str(r#"{"family":"fck","c":2,"k":2}"#).unwrap();
        let f = f.realize().unwrap();
        let d = ProductDistribution::random_in_band(f.arity(), 0.2, 9).unwrap();
        let dir = tmpdir("dataset-mean");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("d.csv");
        let m = 100_000;
        export_dataset(&f, &d, m, 5, &path).unwrap();
        let (_, labels) = read_dataset(&path).unwrap();
        let emp = labels.iter().filter(|&&b| b).count() as f64 / m as f64;
        let e = f.expectation(&d, &Restriction::empty()).unwrap();
        let sigma = (e * (1.0 - e) / m as f64).sqrt();
        assert!((emp - e).abs() <= 4.0 * sigma, "{emp} vs {e}");
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn gv_search_run_emits_verified_family() {
        let config = ExperimentConfig::GvSearch {
            k: 4,
            c: Some(6),
            d: Some(8),
            delta: None,
            seed: 11,
            budget: 100_000,
        };
        let dir = tmpdir("gv");
        let rec = run(&config, &dir).unwrap();
        assert_eq!(rec.status, RunStatus::Completed);
        let file: FamilyFile =
            serde_json::from_str(&fs::read_to_string(dir.join("family.json")).unwrap()).unwrap();
        assert!(file.distance >= 8);
        assert_eq!(file.distance, file.min_codeword_weight);
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn address_pmf_run_reports_uniform_law() {
        let config: ExperimentConfig = serde_json::from_str(
            r#"{"experiment":"address-pmf","target":{"family":"fck","c":2,"k":3},
                "dist":{"kind":"uniform","n":26}}"#,
        )
        .unwrap();
        let dir = tmpdir("pmf");
        let rec = run(&config, &dir).unwrap();
        assert_eq!(rec.status, RunStatus::Completed);
        assert!(rec.verdict["max_abs_dev_from_uniform"].as_f64().unwrap() < 1e-15);
        fs::remove_dir_all(&dir).ok();
    }
}
