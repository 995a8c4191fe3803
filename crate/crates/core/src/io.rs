//! JSON fixtures for trees, processes, densities, scenario sets and
//! functionals.
//!
//! Every fixture other than a tree names its tree in a `tree` field: either
//! a builtin (`seven_node`, `trivial`) or a path relative to the fixture's own
//! directory. Numbers are strings such as `"3/4"`, `"-2"` or `"0.5"`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::composition::{build_density, DensityMode, ScenarioSet};
use crate::error::{Error, Result};
use crate::filtration::{build_tree, FiltrationTree, NodeSpec, StoppingTime, Tree, TreeSpec};
use crate::functionals::{
    Aggregation, AggregatedProcess, EntropicProcess, PenaltyFunction, Representation, RobustProcess, TerminalBase,
    TerminalKind, WorstStoppingProcess,
};
use crate::processes::{AdaptedProcess, DensityProcess};
use crate::scalar::{int, parse_rational, render_rational, Ext, Rational};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeFixture {
    pub id: String,
    pub time: usize,
    #[serde(default)]
    pub parent: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeFixture {
    pub horizon: usize,
    pub nodes: Vec<NodeFixture>,
    pub leaf_probs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessFixture {
    pub tree: String,
    pub values: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityFixture {
    pub tree: String,
    /// Missing nodes carry no mass.
    pub increments: BTreeMap<String, String>,
}

/// A stopping time: a constant date or a list of stop nodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StopFixture {
    Constant(usize),
    Nodes(Vec<String>),
}

/// A leaf density: `"uniform"` or values per leaf.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LeafDensityFixture {
    Named(String),
    Values(BTreeMap<String, String>),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ModeFixture {
    Final,
    Stopped,
    Weighted,
}

/// One scenario: explicit increments, or a constructor from a leaf density.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioFixture {
    Increments {
        increments: BTreeMap<String, String>,
    },
    Built {
        mode: ModeFixture,
        density: LeafDensityFixture,
        #[serde(default)]
        stop: Option<StopFixture>,
        #[serde(default)]
        weights: Option<Vec<String>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSetFixture {
    pub tree: String,
    pub densities: Vec<ScenarioFixture>,
    #[serde(default)]
    pub window: Option<[StopFixture; 2]>,
}

/// Penalty of one scenario: one value for every node, or values per node
/// (missing nodes get 0).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PenaltyFixture {
    Uniform(String),
    PerNode(BTreeMap<String, String>),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum TagFixture {
    Robust,
    Entropic,
    InfTime,
    Weighted,
    WorstStopping,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum BaseFixture {
    #[default]
    Expectation,
    Entropic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalFixture {
    pub tree: String,
    pub tag: TagFixture,
    /// `[start, end]` as constant dates; defaults to `[0, T]`.
    #[serde(default)]
    pub window: Option<[usize; 2]>,
    /// Scenarios of a robust functional.
    #[serde(default)]
    pub scenarios: Option<Vec<ScenarioFixture>>,
    /// Leaf densities of the terminal families.
    #[serde(default)]
    pub densities: Option<Vec<LeafDensityFixture>>,
    #[serde(default)]
    pub penalty: Option<Vec<PenaltyFixture>>,
    #[serde(default)]
    pub weights: Option<Vec<String>>,
    #[serde(default)]
    pub base: BaseFixture,
}

fn parse_err(what: impl std::fmt::Display) -> Error {
    Error::FixtureParse(what.to_string())
}

fn parse_ext(s: &str) -> Result<Ext<Rational>> {
    match s.trim() {
        "-inf" => Ok(Ext::NegInf),
        "+inf" | "inf" => Ok(Ext::PosInf),
        other => parse_rational(other).map(Ext::Finite),
    }
}

pub fn tree_from_fixture(fx: &TreeFixture) -> Result<Tree> {
    let leaf_probs = fx
        .leaf_probs
        .iter()
        .map(|(k, v)| Ok((k.clone(), parse_rational(v)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let nodes = fx
        .nodes
        .iter()
        .map(|n| NodeSpec { id: n.id.clone(), time: n.time, parent: n.parent.clone() })
        .collect();
    build_tree(&TreeSpec { horizon: fx.horizon, nodes, leaf_probs })
}

/// The fixture describing `tree`, with nodes in breadth-first order.
pub fn tree_to_fixture(tree: &FiltrationTree) -> TreeFixture {
    TreeFixture {
        horizon: tree.horizon(),
        nodes: tree
            .node_ids()
            .map(|n| NodeFixture {
                id: tree.label(n).to_string(),
                time: tree.time(n),
                parent: tree.parent(n).map(|p| tree.label(p).to_string()),
            })
            .collect(),
        leaf_probs: tree
            .leaves()
            .iter()
            .map(|&l| (tree.label(l).to_string(), render_rational(tree.prob(l))))
            .collect(),
    }
}

pub fn builtin_tree(name: &str) -> Option<Tree> {
    match name {
        "seven_node" => Some(FiltrationTree::seven_node()),
        "trivial" => Some(FiltrationTree::trivial()),
        _ => None,
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| parse_err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| parse_err(format!("{}: {e}", path.display())))
}

/// Reads fixtures relative to their own location and shares trees between
/// fixtures that name the same one.
#[derive(Debug, Default)]
pub struct Loader {
    trees: HashMap<PathBuf, Tree>,
}

impl Loader {
    pub fn new() -> Self {
        Self::default()
    }

    /// Resolves a tree reference made from a file in `dir`.
    pub fn tree(&mut self, reference: &str, dir: &Path) -> Result<Tree> {
        if let Some(t) = builtin_tree(reference) {
            return Ok(t);
        }
        let path = dir.join(reference);
        let key = path.canonicalize().unwrap_or_else(|_| path.clone());
        if let Some(t) = self.trees.get(&key) {
            return Ok(t.clone());
        }
        let t = tree_from_fixture(&read_json(&path)?)?;
        self.trees.insert(key, t.clone());
        Ok(t)
    }

    pub fn tree_file(&mut self, path: &Path) -> Result<Tree> {
        let dir = parent_dir(path);
        let name = path.file_name().ok_or_else(|| parse_err("missing file name"))?;
        self.tree(&name.to_string_lossy(), &dir)
    }

    pub fn process(&mut self, path: &Path) -> Result<AdaptedProcess<Rational>> {
        let fx: ProcessFixture = read_json(path)?;
        let tree = self.tree(&fx.tree, &parent_dir(path))?;
        process_from_fixture(&tree, &fx)
    }

    pub fn density(&mut self, path: &Path) -> Result<DensityProcess> {
        let fx: DensityFixture = read_json(path)?;
        let tree = self.tree(&fx.tree, &parent_dir(path))?;
        density_from_map(&tree, &fx.increments)
    }

    pub fn scenario_set(&mut self, path: &Path) -> Result<ScenarioSet> {
        let fx: ScenarioSetFixture = read_json(path)?;
        let tree = self.tree(&fx.tree, &parent_dir(path))?;
        scenario_set_from_fixture(&tree, &fx)
    }

    pub fn functional(&mut self, path: &Path) -> Result<Representation> {
        let fx: FunctionalFixture = read_json(path)?;
        let tree = self.tree(&fx.tree, &parent_dir(path))?;
        functional_from_fixture(&tree, &fx)
    }
}

fn parent_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn node(tree: &FiltrationTree, id: &str) -> Result<crate::filtration::NodeId> {
    tree.find(id).ok_or_else(|| parse_err(format!("unknown node `{id}`")))
}

pub fn process_from_fixture(tree: &Tree, fx: &ProcessFixture) -> Result<AdaptedProcess<Rational>> {
    let mut values = vec![None; tree.len()];
    for (k, v) in &fx.values {
        values[node(tree, k)?.0] = Some(parse_rational(v)?);
    }
    let values = tree
        .node_ids()
        .map(|n| values[n.0].take().ok_or_else(|| parse_err(format!("no value for node `{}`", tree.label(n)))))
        .collect::<Result<Vec<_>>>()?;
    AdaptedProcess::new(tree.clone(), values)
}

pub fn process_to_fixture(tree_ref: &str, x: &AdaptedProcess<Rational>) -> ProcessFixture {
    let tree = x.tree();
    ProcessFixture {
        tree: tree_ref.to_string(),
        values: tree.node_ids().map(|n| (tree.label(n).to_string(), render_rational(x.get(n)))).collect(),
    }
}

fn density_from_map(tree: &Tree, inc: &BTreeMap<String, String>) -> Result<DensityProcess> {
    let mut values = vec![Rational::zero(); tree.len()];
    for (k, v) in inc {
        values[node(tree, k)?.0] = parse_rational(v)?;
    }
    DensityProcess::new(tree.clone(), values)
}

pub fn stopping_time_from_fixture(tree: &FiltrationTree, fx: &StopFixture) -> Result<StoppingTime> {
    match fx {
        StopFixture::Constant(t) => {
            if *t > tree.horizon() {
                return Err(parse_err(format!("date {t} beyond the horizon")));
            }
            Ok(StoppingTime::constant(tree, *t))
        }
        StopFixture::Nodes(ids) => {
            StoppingTime::new(tree, ids.iter().map(|id| node(tree, id)).collect::<Result<Vec<_>>>()?)
        }
    }
}

fn leaf_density(tree: &FiltrationTree, fx: &LeafDensityFixture) -> Result<Vec<Rational>> {
    match fx {
        LeafDensityFixture::Named(name) if name == "uniform" => Ok(vec![int(1); tree.leaf_count()]),
        LeafDensityFixture::Named(name) => Err(parse_err(format!("unknown density `{name}`"))),
        LeafDensityFixture::Values(map) => {
            let mut f = vec![None; tree.leaf_count()];
            for (k, v) in map {
                let n = node(tree, k)?;
                let i = tree.leaf_index(n).ok_or_else(|| parse_err(format!("`{k}` is not a leaf")))?;
                f[i] = Some(parse_rational(v)?);
            }
            f.into_iter()
                .enumerate()
                .map(|(i, v)| v.ok_or_else(|| parse_err(format!("no value for leaf `{}`", tree.label(tree.leaves()[i])))))
                .collect()
        }
    }
}

fn weights(ws: &[String]) -> Result<Vec<Rational>> {
    ws.iter().map(|w| parse_rational(w)).collect()
}

fn scenario(tree: &Tree, fx: &ScenarioFixture) -> Result<DensityProcess> {
    match fx {
        ScenarioFixture::Increments { increments } => density_from_map(tree, increments),
        ScenarioFixture::Built { mode, density, stop, weights: w } => {
            let f = leaf_density(tree, density)?;
            let mode = match mode {
                ModeFixture::Final => DensityMode::Final,
                ModeFixture::Stopped => {
                    let s = stop.as_ref().ok_or_else(|| parse_err("stopped scenario without `stop`"))?;
                    DensityMode::Stopped(stopping_time_from_fixture(tree, s)?)
                }
                ModeFixture::Weighted => {
                    let w = w.as_ref().ok_or_else(|| parse_err("weighted scenario without `weights`"))?;
                    DensityMode::Weighted(weights(w)?)
                }
            };
            build_density(tree, &mode, &f)
        }
    }
}

pub fn scenario_set_from_fixture(tree: &Tree, fx: &ScenarioSetFixture) -> Result<ScenarioSet> {
    let densities = fx.densities.iter().map(|d| scenario(tree, d)).collect::<Result<Vec<_>>>()?;
    match &fx.window {
        None => ScenarioSet::full(tree.clone(), densities),
        Some([a, b]) => ScenarioSet::new(
            tree.clone(),
            densities,
            stopping_time_from_fixture(tree, a)?,
            stopping_time_from_fixture(tree, b)?,
        ),
    }
}

fn penalty(tree: &FiltrationTree, fx: &[PenaltyFixture]) -> Result<PenaltyFunction> {
    let rows = fx
        .iter()
        .map(|row| match row {
            PenaltyFixture::Uniform(v) => Ok(vec![parse_ext(v)?; tree.len()]),
            PenaltyFixture::PerNode(map) => {
                let mut r = vec![Ext::zero(); tree.len()];
                for (k, v) in map {
                    r[node(tree, k)?.0] = parse_ext(v)?;
                }
                Ok(r)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    PenaltyFunction::new(rows)
}

pub fn functional_from_fixture(tree: &Tree, fx: &FunctionalFixture) -> Result<Representation> {
    let [start, end] = fx.window.unwrap_or([0, tree.horizon()]);
    if start > end || end > tree.horizon() {
        return Err(Error::WindowViolation(format!("window [{start}, {end}] on a horizon-{} tree", tree.horizon())));
    }
    let terminal_window = || {
        if end != tree.horizon() {
            return Err(Error::WindowViolation("terminal families run to the tree horizon".into()));
        }
        Ok(())
    };
    let densities = || -> Result<Vec<Vec<Rational>>> {
        let ds = fx.densities.as_ref().ok_or_else(|| parse_err("missing `densities`"))?;
        ds.iter().map(|d| leaf_density(tree, d)).collect()
    };
    Ok(match fx.tag {
        TagFixture::Robust => {
            let sc = fx.scenarios.as_ref().ok_or_else(|| parse_err("missing `scenarios`"))?;
            let ds = sc.iter().map(|s| scenario(tree, s)).collect::<Result<Vec<_>>>()?;
            let q = ScenarioSet::new(
                tree.clone(),
                ds,
                StoppingTime::constant(tree, start),
                StoppingTime::constant(tree, end),
            )?;
            let gamma = fx.penalty.as_ref().map(|p| penalty(tree, p)).transpose()?;
            Representation::Robust(RobustProcess::new(&q, gamma)?)
        }
        TagFixture::Entropic => {
            terminal_window()?;
            Representation::Entropic(EntropicProcess::new(tree.clone(), densities()?, start)?)
        }
        TagFixture::InfTime => {
            terminal_window()?;
            Representation::Aggregated(AggregatedProcess::new(tree.clone(), densities()?, Aggregation::InfTime, start)?)
        }
        TagFixture::Weighted => {
            terminal_window()?;
            let w = fx.weights.as_ref().ok_or_else(|| parse_err("missing `weights`"))?;
            Representation::Aggregated(AggregatedProcess::new(
                tree.clone(),
                densities()?,
                Aggregation::Weighted(weights(w)?),
                start,
            )?)
        }
        TagFixture::WorstStopping => {
            terminal_window()?;
            let kind = match fx.base {
                BaseFixture::Expectation => TerminalKind::Expectation,
                BaseFixture::Entropic => TerminalKind::Entropic,
            };
            let base = TerminalBase::new(tree.clone(), kind, densities()?)?;
            Representation::WorstStopping(WorstStoppingProcess::new(base, start))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn tree_round_trip() {
        let t = FiltrationTree::seven_node();
        let fx = tree_to_fixture(&t);
        let json = serde_json::to_string(&fx).unwrap();
        let back = tree_from_fixture(&serde_json::from_str(&json).unwrap()).unwrap();
        assert!(back.same_as(&t));
    }

    #[test]
    fn bad_probabilities_are_rejected() {
        let json = r#"{"horizon":1,"nodes":[{"id":"r","time":0},{"id":"a","time":1,"parent":"r"},
            {"id":"b","time":1,"parent":"r"}],"leaf_probs":{"a":"1/2","b":"1/3"}}"#;
        let fx: TreeFixture = serde_json::from_str(json).unwrap();
        assert!(matches!(tree_from_fixture(&fx), Err(Error::ProbNotNormalized(_))));
    }

    #[test]
    fn functional_fixtures() {
        let t = FiltrationTree::seven_node();
        let fx: FunctionalFixture = serde_json::from_str(
            r#"{"tree":"seven_node","tag":"robust","scenarios":[{"mode":"final","density":"uniform"},
                {"mode":"stopped","density":"uniform","stop":1},{"increments":{"root":"1"}}]}"#,
        )
        .unwrap();
        match functional_from_fixture(&t, &fx).unwrap() {
            Representation::Robust(r) => assert_eq!(r.scenarios().len(), 3),
            other => panic!("{other:?}"),
        }
        let fx: FunctionalFixture = serde_json::from_str(
            r#"{"tree":"seven_node","tag":"weighted","densities":["uniform"],"weights":["1/2","1/4","1/4"]}"#,
        )
        .unwrap();
        assert_eq!(functional_from_fixture(&t, &fx).unwrap().tag(), "weighted");
        let fx: FunctionalFixture = serde_json::from_str(
            r#"{"tree":"seven_node","tag":"robust","scenarios":[{"mode":"final","density":"uniform"}],
                "penalty":["-1"]}"#,
        )
        .unwrap();
        assert!(matches!(functional_from_fixture(&t, &fx), Err(Error::NormalizationViolation(_))));
    }

    #[test]
    fn process_fixture_needs_every_node() {
        let t = FiltrationTree::seven_node();
        let mut fx = process_to_fixture("seven_node", &AdaptedProcess::constant(t.clone(), rat(1, 2)));
        assert_eq!(process_from_fixture(&t, &fx).unwrap().get(t.root()), &rat(1, 2));
        fx.values.remove("w3");
        assert!(matches!(process_from_fixture(&t, &fx), Err(Error::FixtureParse(_))));
    }
}
