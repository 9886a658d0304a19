use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

/// Finite-model audits of relative hyperbolicity.
#[derive(Parser, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[command(name = "relhyp", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Common {
    /// Seed for every sampler.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// `exhaustive`, `sample(<count>)` or `sample:<count>`; each check has its own default.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Worker thread cap (default: all cores).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub threads: Option<usize>,
    /// JSON report path (default: stdout); a CSV with the same stem is written alongside.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceArgs {
    /// Group expression: `free2`, `z2`, `surface2`, `free_product(free_abelian(2),free(1))`, ...
    #[arg(long, alias = "family", conflicts_with = "graph")]
    pub group: Option<String>,
    /// Ball radii; each radius is a separate run in one report.
    #[arg(long, value_delimiter = ',', default_value = "4")]
    pub radius: Vec<usize>,
    #[arg(long, default_value_t = 200_000)]
    pub max_vertices: usize,
    /// Graph file (`V`/`E`/`L` records) instead of a group ball.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Peripheral family file (`P` records).
    #[arg(long, conflicts_with = "subgroup")]
    pub peripherals: Option<PathBuf>,
    /// Generators of a peripheral subgroup, e.g. `a`; its cosets meeting the ball form the family. Repeatable.
    #[arg(long)]
    pub subgroup: Vec<String>,
    /// Keep only the coset of this word.
    #[arg(long, requires = "subgroup")]
    pub representative: Option<String>,
    /// Drop cosets with fewer vertices.
    #[arg(long, default_value_t = 3)]
    pub min_size: usize,
    /// Sample points at least this far inside the ball boundary (default per command).
    #[arg(long)]
    pub margin: Option<usize>,
    /// Seeded subsample of the sample pool.
    #[arg(long)]
    pub pool_size: Option<usize>,
    /// Explicit sample pool (words for groups, ids for files); overrides the margin pool.
    #[arg(long, value_delimiter = ',', conflicts_with = "pool_size")]
    pub pool_points: Vec<String>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConedArgs {
    /// Net spacing of component edges.
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    #[arg(long, default_value_t = 60)]
    pub pairs: usize,
    #[arg(long, default_value_t = 40)]
    pub member_pairs: usize,
    #[arg(long, default_value_t = 6)]
    pub perturbations: usize,
    /// Members this close to both endpoints give detour paths.
    #[arg(long, default_value_t = 1.0)]
    pub detour_mu: f64,
    /// Quasi-geodesic constants probed for bounded penetration.
    #[arg(long, value_delimiter = ',', default_value = "2,4")]
    pub l: Vec<usize>,
    /// Flag when a constant exceeds this fraction of the diameter.
    #[arg(long, default_value_t = 0.5)]
    pub fraction: f64,
    #[arg(long, default_value_t = 120)]
    pub subsample: usize,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BowArgs {
    /// Net spacing and approximation radius of the glued horoballs.
    #[arg(long, default_value_t = 2.0)]
    pub k: f64,
    #[arg(long = "r-net", default_value_t = 2.0)]
    pub r_net: f64,
    /// Fixed horoball depth (default: from each approximation graph).
    #[arg(long)]
    pub depth: Option<usize>,
}

#[derive(Subcommand, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Build Cayley balls and report their sizes.
    Gen {
        #[command(flatten)]
        space: SpaceArgs,
        /// Write the graph file here.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Build the peripheral family and its connectivity.
    Cosets {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Build the horoball-glued space.
    Bowditch {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        bow: BowArgs,
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Build the coned-off space.
    Coneoff {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Audit one characterization.
    #[command(subcommand)]
    Check(Check),
    /// Divergence function and growth class.
    Divergence {
        #[command(flatten)]
        space: SpaceArgs,
        /// Forbidden ball radius as a fraction of the distance.
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        /// Forbid the closed ball.
        #[arg(long)]
        closed: bool,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        /// Also sample this many logarithmic detours.
        #[arg(long)]
        log_detour: Option<usize>,
    },
    /// Tree-graded approximation of a configuration.
    Treeapprox {
        #[command(flatten)]
        space: SpaceArgs,
        /// Configuration points (words for groups, ids for files).
        #[arg(long, value_delimiter = ',')]
        points: Vec<String>,
        /// Configuration members (family indices).
        #[arg(long, value_delimiter = ',')]
        members: Vec<usize>,
        /// Seeded random configuration of this many pool points.
        #[arg(long, conflicts_with = "points")]
        random: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 2.0)]
        c: f64,
        #[arg(long, default_value_t = 2.0)]
        net_k: f64,
        #[arg(long, default_value_t = 3.0)]
        tolerance: f64,
        /// Write the tree-graded graph here.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Re-run a report's configuration and compare.
    Replay {
        report: PathBuf,
    },
}

#[derive(Subcommand, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case")]
pub enum Check {
    /// Bounded coarse intersection of members.
    Alpha1 {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long = "K", default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value_t = 0.5)]
        fraction: f64,
    },
    /// Geodesics between deep points of a member pass near it.
    Alpha2 {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        #[arg(long = "M", default_value_t = 1.0)]
        m: f64,
        #[arg(long, default_value_t = 3)]
        perturbations: usize,
    },
    /// Projection lemma constants.
    Proj {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long = "M", default_value_t = 1.0)]
        m: f64,
        #[arg(long, default_value_t = 2.0)]
        mu: f64,
        #[arg(long = "L", value_delimiter = ',', default_value = "1,2,3")]
        l: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        perturbations: usize,
    },
    /// Weak triangle classification.
    Rh0 {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 2.0)]
        sigma: f64,
        #[arg(long, default_value_t = 4.0)]
        delta: f64,
    },
    /// Hyperbolicity of the horoball-glued space.
    Rh1 {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        bow: BowArgs,
        #[arg(long, default_value_t = 120)]
        subsample: usize,
    },
    /// Hyperbolicity of the coned-off space plus bounded penetration.
    Rh2 {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        coned: ConedArgs,
    },
    /// Relative Rips condition and transient-set localization.
    Rh3 {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        /// Deep-point radii.
        #[arg(long = "R", value_delimiter = ',', default_value = "2,4")]
        r: Vec<f64>,
        /// Localization radius; omit to skip the second condition.
        #[arg(long = "K")]
        k: Option<f64>,
    },
    /// Bounded penetration of standard paths.
    Bcp {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        coned: ConedArgs,
    },
    /// Guessing-geodesics conditions for the transient family.
    Gg {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 2.0)]
        c: f64,
        #[arg(long, default_value_t = 10.0)]
        cap: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha1_k: f64,
        #[arg(long = "k-grid", value_delimiter = ',', default_value = "1,2")]
        k_grid: Vec<f64>,
        /// Corrupt the family by routing through this vertex.
        #[arg(long)]
        hub: Option<String>,
    },
    /// Transient sets of geodesics versus near-geodesics.
    Stability {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 2.0)]
        c: f64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Excess length allowed for the perturbed path.
        #[arg(long, default_value_t = 2.0)]
        slack: f64,
    },
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Command::Gen { .. } => "gen".into(),
            Command::Cosets { .. } => "cosets".into(),
            Command::Bowditch { .. } => "bowditch".into(),
            Command::Coneoff { .. } => "coneoff".into(),
            Command::Check(c) => format!("check {}", c.name()),
            Command::Divergence { .. } => "divergence".into(),
            Command::Treeapprox { .. } => "treeapprox".into(),
            Command::Replay { .. } => "replay".into(),
        }
    }
}

impl Check {
    pub fn name(&self) -> &'static str {
        match self {
            Check::Alpha1 { .. } => "alpha1",
            Check::Alpha2 { .. } => "alpha2",
            Check::Proj { .. } => "proj",
            Check::Rh0 { .. } => "rh0",
            Check::Rh1 { .. } => "rh1",
            Check::Rh2 { .. } => "rh2",
            Check::Rh3 { .. } => "rh3",
            Check::Bcp { .. } => "bcp",
            Check::Gg { .. } => "gg",
            Check::Stability { .. } => "stability",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_json() {
        let cli = Cli::parse_from([
            "relhyp", "check", "rh3", "--group", "z2", "--subgroup", "a", "--radius", "3,4", "--R", "2,4", "--K", "3", "--seed", "9",
            "--mode", "sample(50)", "--out", "x.json",
        ]);
        let text = serde_json::to_string(&cli).unwrap();
        let back: Cli = serde_json::from_str(&text).unwrap();
        assert_eq!(back.command, cli.command);
        assert_eq!(back.common.seed, 9);
        assert_eq!(back.common.out, None);
        assert_eq!(back.command.name(), "check rh3");
    }
}
