use std::fs;

use anyhow::{bail, Context, Result};
use relhyp::cayley::word::parse_word;
use relhyp::cayley::{build_ball_with, peripheral_cosets, BallLimits, CayleyBall, CosetSpec, GroupSpec};
use relhyp::peripherals::PeripheralFamily;
use relhyp::sampling::choose;
use relhyp::{MetricGraph, Vertex, VertexSet};

use crate::args::SpaceArgs;

/// One loaded model: the ambient graph, its family and the sample pool.
pub struct Space {
    pub radius: Option<usize>,
    pub ball: Option<CayleyBall>,
    pub graph: MetricGraph,
    pub family: PeripheralFamily,
    pub pool: VertexSet,
}

impl Space {
    /// A vertex named by a word (group balls) or a label or id (graph files).
    pub fn vertex(&self, text: &str) -> Result<Vertex> {
        match &self.ball {
            Some(ball) => ball
                .vertex_of(text)?
                .with_context(|| format!("word `{text}` is not in the ball of radius {}", ball.radius)),
            None => {
                if let Some(v) = self.graph.vertex_by_label(text) {
                    return Ok(v);
                }
                let v: Vertex = text.parse().with_context(|| format!("vertex id or label `{text}`"))?;
                self.graph.check_vertex(v)?;
                Ok(v)
            }
        }
    }

    fn override_pool(&mut self, points: &[String]) -> Result<()> {
        if !points.is_empty() {
            let vs = points.iter().map(|p| self.vertex(p)).collect::<Result<Vec<_>>>()?;
            self.pool = VertexSet::new(vs);
        }
        Ok(())
    }
}

fn read(path: &std::path::Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Loads one space per radius (a single space for graph files).
pub fn load(args: &SpaceArgs, seed: u64, default_margin: impl Fn(usize) -> usize) -> Result<Vec<Space>> {
    let mut spaces = Vec::new();
    match (&args.group, &args.graph) {
        (Some(expr), None) => {
            let spec = GroupSpec::parse(expr)?;
            if args.radius.is_empty() {
                bail!("no radius given");
            }
            for &r in &args.radius {
                let limits = BallLimits {
                    max_radius: r.max(1),
                    max_vertices: args.max_vertices,
                };
                let ball = build_ball_with(&spec, r, limits)?;
                let family = if let Some(path) = &args.peripherals {
                    PeripheralFamily::from_text(&read(path)?, ball.graph.vertex_count()).with_context(|| path.display().to_string())?
                } else if args.subgroup.is_empty() {
                    PeripheralFamily::empty()
                } else {
                    let mut specs = Vec::new();
                    for gens in &args.subgroup {
                        let mut s = CosetSpec::generated_by(gens, ball.generators())?;
                        if let Some(rep) = &args.representative {
                            s = s.with_representative(parse_word(rep, ball.generators())?);
                        }
                        specs.push(s);
                    }
                    peripheral_cosets(&ball, &specs, args.min_size)?
                };
                let margin = args.margin.unwrap_or_else(|| default_margin(r));
                let pool = subsample(ball.interior(margin), args.pool_size, seed)?;
                let mut space = Space {
                    radius: Some(r),
                    graph: ball.graph.clone(),
                    ball: Some(ball),
                    family,
                    pool,
                };
                space.override_pool(&args.pool_points)?;
                spaces.push(space);
            }
        }
        (None, Some(path)) => {
            let graph = MetricGraph::from_text(&read(path)?).with_context(|| path.display().to_string())?;
            let family = match &args.peripherals {
                Some(p) => PeripheralFamily::from_text(&read(p)?, graph.vertex_count()).with_context(|| p.display().to_string())?,
                None => PeripheralFamily::empty(),
            };
            if !args.subgroup.is_empty() {
                bail!("--subgroup needs a group ball; use --peripherals with a graph file");
            }
            let pool = subsample(graph.all_vertices(), args.pool_size, seed)?;
            let mut space = Space {
                radius: None,
                ball: None,
                graph,
                family,
                pool,
            };
            space.override_pool(&args.pool_points)?;
            spaces.push(space);
        }
        _ => bail!("give exactly one of --group and --graph"),
    }
    Ok(spaces)
}

fn subsample(pool: VertexSet, size: Option<usize>, seed: u64) -> Result<VertexSet> {
    if pool.is_empty() {
        bail!("sample pool is empty; lower --margin or raise --radius");
    }
    Ok(match size {
        Some(k) if k < pool.len() => VertexSet::new(choose(pool.as_slice(), k, seed, "pool")),
        _ => pool,
    })
}
