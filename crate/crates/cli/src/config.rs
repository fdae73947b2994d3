//! JSON configuration schemas for the subcommands.

use ccons_core::formation::ShapeKind;
use ccons_core::geometry::Point2;
use ccons_core::localization::LocalizationConfig;
use ccons_core::lp::LinearProgram;
use serde::Deserialize;

/// A problem instance: a planar point set for the geometric problems, or a
/// linear program given inline or generated from a stochastic model.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProblemSpec {
    Ball { points: Vec<Point2> },
    Stripe { points: Vec<Point2> },
    Annulus { points: Vec<Point2> },
    Lp {
        #[serde(default)]
        lp: Option<LinearProgram>,
        #[serde(default)]
        generate: Option<GenerateSpec>,
    },
}

#[derive(Clone, Copy, Debug, Deserialize)]
pub struct GenerateSpec {
    pub model: ccons_core::montecarlo::LpModel,
    pub n: usize,
    pub d: usize,
}

/// Communication-graph generator over as many nodes as there are constraints.
#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum GraphSpec {
    #[default]
    Line,
    ErdosRenyi {
        epsilon: f64,
    },
    Rgg,
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantSpec {
    #[default]
    Nominal,
    MultiRound {
        latency: usize,
    },
    Cycling {
        memory: usize,
    },
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltingSpec {
    #[default]
    None,
    DiameterRule,
    Fixed {
        rounds: usize,
    },
}

#[derive(Clone, Debug, Deserialize)]
pub struct ConsensusCmdConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub graph: GraphSpec,
    #[serde(default)]
    pub variant: VariantSpec,
    #[serde(default)]
    pub halting: HaltingSpec,
    #[serde(default)]
    pub max_rounds: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct LocalizeCmdConfig {
    pub n_sensors: usize,
    #[serde(default)]
    pub graph: GraphSpec,
    #[serde(flatten)]
    pub scenario: LocalizationConfig,
}

#[derive(Clone, Copy, Debug, Deserialize)]
pub struct RandomCluster {
    pub n: usize,
    pub spread: f64,
}

fn default_formation_rounds() -> usize {
    1500
}

#[derive(Clone, Debug, Deserialize)]
pub struct FormationCmdConfig {
    pub shape: ShapeKind,
    #[serde(default)]
    pub positions: Option<Vec<Point2>>,
    /// Seeded random cluster used when explicit positions are absent.
    #[serde(default)]
    pub random: Option<RandomCluster>,
    pub r_cmm: f64,
    pub r_ctr: f64,
    #[serde(default = "default_formation_rounds")]
    pub max_rounds: usize,
    pub seed: u64,
}
