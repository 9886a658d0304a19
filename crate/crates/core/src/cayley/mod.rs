//! Balls in Cayley graphs of finitely presented groups with a solvable word
//! problem, and peripheral coset enumeration.
//!
//! Built-in families carry canonical normal forms. User rewriting systems
//! must be length-nonincreasing and confluent; small-cancellation
//! presentations (surface groups, one-relator C'(1/6) groups) are decided by
//! Dehn's algorithm, comparing each new word against previously found
//! elements.

mod dehn;
mod rewrite;
pub mod word;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::error::GraphError;
use crate::graph::{GraphBuilder, MetricGraph, Vertex, VertexSet};
use crate::peripherals::PeripheralFamily;

pub use dehn::Dehn;
pub use rewrite::RewritingSystem;
use word::{format_word, free_reduce, generator_of, inverse_letter, letter, parse_word, Letter, Word, MAX_GENERATORS};

/// Relator of the hyperbolic one-relator model used for detour checks.
/// It satisfies C'(1/6): length 13, longest piece 2.
pub const ONE_RELATOR_MODEL: &str = "abbAbAABABBaa";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown group family `{0}`")]
    UnknownFamily(String),
    #[error("letter `{0}` is not in the generator alphabet")]
    UnknownLetter(char),
    #[error("{0} generators exceed the alphabet limit of 25")]
    TooManyGenerators(usize),
    #[error("rule {0}->{1} does not decrease in shortlex order")]
    RuleNotReducing(String, String),
    #[error("rewriting system is not confluent: {word} reduces to both {left} and {right}")]
    NotConfluent {
        word: String,
        left: String,
        right: String,
    },
    #[error("relator `{0}` is not cyclically reduced")]
    NotCyclicallyReduced(String),
    #[error("presentation is not C'(1/6): piece `{0}` is too long")]
    NotSmallCancellation(String),
    #[error("radius {radius} exceeds the configured maximum {max}")]
    RadiusTooLarge { radius: usize, max: usize },
    #[error("ball exceeds the size cap of {cap} vertices")]
    BallTooLarge { cap: usize },
    #[error("subgroup alphabet `{0}` is not closed under inversion")]
    SubgroupNotClosed(String),
    #[error("coset representative `{0}` does not lie in the ball")]
    RepresentativeOutsideBall(String),
    #[error("unsupported construction: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A group given by a family constructor or a presentation.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupSpec {
    Free(usize),
    FreeAbelian(usize),
    FreeProduct(Box<GroupSpec>, Box<GroupSpec>),
    DirectProduct(Box<GroupSpec>, Box<GroupSpec>),
    Surface(usize),
    Rewriting(RewritingSystem),
    /// Small-cancellation presentation decided by Dehn's algorithm.
    Dehn { generators: usize, relators: Vec<Word> },
}

impl GroupSpec {
    pub fn generators(&self) -> usize {
        match self {
            GroupSpec::Free(n) | GroupSpec::FreeAbelian(n) => *n,
            GroupSpec::FreeProduct(a, b) | GroupSpec::DirectProduct(a, b) => a.generators() + b.generators(),
            GroupSpec::Surface(g) => 2 * g,
            GroupSpec::Rewriting(r) => r.generators,
            GroupSpec::Dehn { generators, .. } => *generators,
        }
    }

    pub fn one_relator_model() -> GroupSpec {
        GroupSpec::Dehn {
            generators: 2,
            relators: vec![parse_word(ONE_RELATOR_MODEL, 2).expect("valid relator")],
        }
    }

    /// Relators of the surface group of the given genus: `[a,b][c,d]...`.
    fn surface_relator(genus: usize) -> Word {
        let mut r = Vec::new();
        for i in 0..genus {
            let (x, y) = (2 * i, 2 * i + 1);
            r.extend([letter(x, false), letter(y, false), letter(x, true), letter(y, true)]);
        }
        r
    }

    /// Parses an expression such as `free_product(free_abelian(2),free(1))`,
    /// `surface(2)`, `one_relator(abbAbAABABBaa)` or `rewriting(2;ba->ab)`.
    /// Shorthands `freeN`, `zN` and `surfaceN` are accepted.
    pub fn parse(expr: &str) -> Result<GroupSpec, GroupError> {
        let compact: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
        let mut p = ExprParser { s: compact.as_bytes(), pos: 0 };
        let spec = p.spec()?;
        if p.pos != p.s.len() {
            return Err(GroupError::Parse {
                line: 1,
                msg: format!("trailing input in `{expr}`"),
            });
        }
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), GroupError> {
        let n = self.generators();
        if n > MAX_GENERATORS {
            return Err(GroupError::TooManyGenerators(n));
        }
        if n == 0 {
            return Err(GroupError::Unsupported("group with no generators".into()));
        }
        match self {
            GroupSpec::Surface(g) if *g < 2 => Err(GroupError::Unsupported(format!("surface genus {g} < 2"))),
            GroupSpec::FreeProduct(a, b) | GroupSpec::DirectProduct(a, b) => {
                for f in [a, b] {
                    if matches!(**f, GroupSpec::Surface(_) | GroupSpec::Dehn { .. }) {
                        return Err(GroupError::Unsupported(
                            "products of small-cancellation factors".into(),
                        ));
                    }
                    f.validate()?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Declarative key=value config: `family=<expr>` on one line, or
    /// `family=surface` with `genus=`, `family=rewriting` with `generators=`
    /// and `rules=` (one `lhs->rhs` per following line), or `family=dehn`
    /// with `generators=` and `relators=`.
    pub fn from_config(text: &str) -> Result<GroupSpec, GroupError> {
        let mut family: Option<(usize, String)> = None;
        let mut values: HashMap<String, (usize, String)> = HashMap::new();
        let mut rules: Vec<(usize, String)> = Vec::new();
        let mut relators: Vec<(usize, String)> = Vec::new();
        let mut section: Option<&str> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = match line.split_once('=') {
                Some((k, v)) if !k.contains("->") => (k.trim(), v.trim()),
                _ => {
                    match section {
                        Some("rules") if line.contains("->") => rules.push((line_no, line.to_string())),
                        Some("relators") => relators.push((line_no, line.to_string())),
                        _ => {
                            return Err(GroupError::Parse {
                                line: line_no,
                                msg: format!("expected key=value, got `{line}`"),
                            })
                        }
                    }
                    continue;
                }
            };
            section = None;
            match key {
                "family" => family = Some((line_no, value.to_string())),
                "rules" => {
                    section = Some("rules");
                    rules.extend(value.split(',').filter(|r| !r.trim().is_empty()).map(|r| (line_no, r.trim().to_string())));
                }
                "relators" => {
                    section = Some("relators");
                    relators.extend(value.split(',').filter(|r| !r.trim().is_empty()).map(|r| (line_no, r.trim().to_string())));
                }
                "genus" | "generators" => {
                    values.insert(key.to_string(), (line_no, value.to_string()));
                }
                other => {
                    return Err(GroupError::Parse {
                        line: line_no,
                        msg: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        let (fline, fam) = family.ok_or(GroupError::Parse {
            line: 0,
            msg: "missing `family=`".into(),
        })?;
        let int = |key: &str| -> Result<usize, GroupError> {
            let (line, v) = values.get(key).ok_or(GroupError::Parse {
                line: fline,
                msg: format!("family `{fam}` needs `{key}=`"),
            })?;
            v.parse().map_err(|_| GroupError::Parse {
                line: *line,
                msg: format!("`{key}` must be a nonnegative integer"),
            })
        };
        let spec = match fam.as_str() {
            "surface" => GroupSpec::Surface(int("genus")?),
            "rewriting" => {
                let n = int("generators")?;
                let mut parsed = Vec::new();
                for (line, r) in &rules {
                    let (l, rhs) = r.split_once("->").ok_or(GroupError::Parse {
                        line: *line,
                        msg: format!("rule `{r}` lacks `->`"),
                    })?;
                    parsed.push((parse_word(l, n)?, parse_word(rhs, n)?));
                }
                GroupSpec::Rewriting(RewritingSystem::new(n, parsed)?)
            }
            "dehn" => {
                let n = int("generators")?;
                let rels = relators
                    .iter()
                    .map(|(_, r)| parse_word(r, n))
                    .collect::<Result<Vec<_>, _>>()?;
                GroupSpec::Dehn {
                    generators: n,
                    relators: rels,
                }
            }
            expr => GroupSpec::parse(expr).map_err(|e| match e {
                GroupError::Parse { msg, .. } => GroupError::Parse { line: fline, msg },
                other => other,
            })?,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds the word-problem solver for this group.
    pub fn solver(&self) -> Result<Solver, GroupError> {
        self.validate()?;
        match self {
            GroupSpec::Surface(g) => Ok(Solver::Dehn(DehnSolver::new(
                2 * g,
                &[GroupSpec::surface_relator(*g)],
            )?)),
            GroupSpec::Dehn { generators, relators } => {
                Ok(Solver::Dehn(DehnSolver::new(*generators, relators)?))
            }
            other => Ok(Solver::NormalForm(other.clone())),
        }
    }

    /// Canonical normal form for families that have one.
    pub fn normal_form(&self, w: &[Letter]) -> Option<Word> {
        match self {
            GroupSpec::Free(_) => Some(free_reduce(w)),
            GroupSpec::FreeAbelian(n) => {
                let mut exp = vec![0i64; *n];
                for &l in w {
                    exp[generator_of(l)] += if l & 1 == 1 { -1 } else { 1 };
                }
                let mut out = Vec::new();
                for (g, &e) in exp.iter().enumerate() {
                    out.extend(std::iter::repeat_n(letter(g, e < 0), e.unsigned_abs() as usize));
                }
                Some(out)
            }
            GroupSpec::FreeProduct(a, b) => {
                let split = 2 * a.generators() as Letter;
                let mut syllables: Vec<(bool, Word)> = Vec::new();
                for &l in w {
                    let right = l >= split;
                    match syllables.last_mut() {
                        Some((f, syl)) if *f == right => {
                            syl.push(l);
                            let nf = factor_nf(if right { b } else { a }, syl, if right { split } else { 0 })?;
                            if nf.is_empty() {
                                syllables.pop();
                            } else {
                                *syl = nf;
                            }
                        }
                        _ => {
                            let nf = factor_nf(if right { b } else { a }, &[l], if right { split } else { 0 })?;
                            if !nf.is_empty() {
                                syllables.push((right, nf));
                            }
                        }
                    }
                }
                Some(syllables.into_iter().flat_map(|(_, s)| s).collect())
            }
            GroupSpec::DirectProduct(a, b) => {
                let split = 2 * a.generators() as Letter;
                let left: Word = w.iter().copied().filter(|&l| l < split).collect();
                let right: Word = w.iter().copied().filter(|&l| l >= split).collect();
                let mut out = factor_nf(a, &left, 0)?;
                out.extend(factor_nf(b, &right, split)?);
                Some(out)
            }
            GroupSpec::Rewriting(r) => Some(r.normal_form(w)),
            GroupSpec::Surface(_) | GroupSpec::Dehn { .. } => None,
        }
    }
}

fn factor_nf(spec: &GroupSpec, w: &[Letter], offset: Letter) -> Option<Word> {
    let local: Word = w.iter().map(|&l| l - offset).collect();
    Some(spec.normal_form(&local)?.into_iter().map(|l| l + offset).collect())
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::Free(n) => write!(f, "free({n})"),
            GroupSpec::FreeAbelian(n) => write!(f, "free_abelian({n})"),
            GroupSpec::FreeProduct(a, b) => write!(f, "free_product({a},{b})"),
            GroupSpec::DirectProduct(a, b) => write!(f, "direct_product({a},{b})"),
            GroupSpec::Surface(g) => write!(f, "surface({g})"),
            GroupSpec::Rewriting(r) => {
                write!(f, "rewriting({}", r.generators)?;
                for (l, rhs) in &r.rules {
                    write!(f, ";{}->{}", format_word(l), format_word(rhs))?;
                }
                write!(f, ")")
            }
            GroupSpec::Dehn { generators, relators } => {
                write!(f, "dehn({generators}")?;
                for r in relators {
                    write!(f, ";{}", format_word(r))?;
                }
                write!(f, ")")
            }
        }
    }
}

struct ExprParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl ExprParser<'_> {
    fn err(&self, msg: &str) -> GroupError {
        GroupError::Parse {
            line: 1,
            msg: format!("{msg} at offset {}", self.pos),
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphabetic() || self.s[self.pos] == b'_') {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.s[start..self.pos]).into_owned()
    }

    fn number(&mut self) -> Option<usize> {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos]).ok()?.parse().ok()
    }

    fn expect(&mut self, c: u8) -> Result<(), GroupError> {
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    /// Raw text up to the matching close parenthesis.
    fn raw_args(&mut self) -> Result<String, GroupError> {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos] != b')' {
            self.pos += 1;
        }
        let text = String::from_utf8_lossy(&self.s[start..self.pos]).into_owned();
        self.expect(b')')?;
        Ok(text)
    }

    fn spec(&mut self) -> Result<GroupSpec, GroupError> {
        let name = self.ident();
        if self.s.get(self.pos) != Some(&b'(') {
            let n = self.number();
            return match (name.as_str(), n) {
                ("free", Some(n)) => Ok(GroupSpec::Free(n)),
                ("z", Some(n)) => Ok(GroupSpec::FreeAbelian(n)),
                ("surface", Some(g)) => Ok(GroupSpec::Surface(g)),
                ("z", None) => Ok(GroupSpec::FreeAbelian(1)),
                _ => Err(GroupError::UnknownFamily(name)),
            };
        }
        self.expect(b'(')?;
        match name.as_str() {
            "free" | "free_abelian" | "surface" => {
                let n = self.number().ok_or_else(|| self.err("expected integer"))?;
                self.expect(b')')?;
                Ok(match name.as_str() {
                    "free" => GroupSpec::Free(n),
                    "free_abelian" => GroupSpec::FreeAbelian(n),
                    _ => GroupSpec::Surface(n),
                })
            }
            "free_product" | "direct_product" => {
                let a = self.spec()?;
                self.expect(b',')?;
                let b = self.spec()?;
                self.expect(b')')?;
                Ok(if name == "free_product" {
                    GroupSpec::FreeProduct(Box::new(a), Box::new(b))
                } else {
                    GroupSpec::DirectProduct(Box::new(a), Box::new(b))
                })
            }
            "one_relator" => {
                let text = self.raw_args()?;
                let n = text
                    .chars()
                    .filter_map(|c| word::generator_index(c).map(|g| g + 1))
                    .max()
                    .unwrap_or(0)
                    .max(2);
                Ok(GroupSpec::Dehn {
                    generators: n,
                    relators: vec![parse_word(&text, n)?],
                })
            }
            "rewriting" | "dehn" => {
                let text = self.raw_args()?;
                let mut parts = text.split(';');
                let n: usize = parts
                    .next()
                    .and_then(|p| p.parse().ok())
                    .ok_or_else(|| self.err("expected generator count"))?;
                if name == "dehn" {
                    let rels = parts.map(|r| parse_word(r, n)).collect::<Result<Vec<_>, _>>()?;
                    return Ok(GroupSpec::Dehn {
                        generators: n,
                        relators: rels,
                    });
                }
                let mut rules = Vec::new();
                for r in parts {
                    let (l, rhs) = r.split_once("->").ok_or_else(|| self.err("rule lacks `->`"))?;
                    rules.push((parse_word(l, n)?, parse_word(rhs, n)?));
                }
                Ok(GroupSpec::Rewriting(RewritingSystem::new(n, rules)?))
            }
            _ => Err(GroupError::UnknownFamily(name)),
        }
    }
}

/// Word-problem oracle for ball construction.
#[derive(Clone, Debug)]
pub enum Solver {
    NormalForm(GroupSpec),
    Dehn(DehnSolver),
}

/// Dehn's algorithm plus the exponent-sum coordinates that are invariants of
/// the group (generators with zero exponent sum in every relator).
#[derive(Clone, Debug)]
pub struct DehnSolver {
    pub dehn: Dehn,
    invariant: Vec<usize>,
}

impl DehnSolver {
    fn new(generators: usize, relators: &[Word]) -> Result<Self, GroupError> {
        let dehn = Dehn::new(relators)?;
        let invariant = (0..generators)
            .filter(|&g| relators.iter().all(|r| exponent_sum(r, g) == 0))
            .collect();
        Ok(DehnSolver { dehn, invariant })
    }

    fn key(&self, w: &[Letter]) -> Vec<i64> {
        self.invariant.iter().map(|&g| exponent_sum(w, g)).collect()
    }
}

fn exponent_sum(w: &[Letter], g: usize) -> i64 {
    w.iter()
        .filter(|&&l| generator_of(l) == g)
        .map(|&l| if l & 1 == 1 { -1 } else { 1 })
        .sum()
}

/// Limits on ball construction.
#[derive(Clone, Copy, Debug)]
pub struct BallLimits {
    pub max_radius: usize,
    pub max_vertices: usize,
}

impl Default for BallLimits {
    fn default() -> Self {
        BallLimits {
            max_radius: 8,
            max_vertices: 200_000,
        }
    }
}

/// A ball in a Cayley graph: unit edges, word labels, vertex 0 the identity.
#[derive(Clone, Debug)]
pub struct CayleyBall {
    pub spec: GroupSpec,
    pub graph: MetricGraph,
    pub radius: usize,
    /// Normal form (or a geodesic word, for Dehn groups) of each vertex.
    pub words: Vec<Word>,
    /// Word length of each vertex.
    pub depth: Vec<usize>,
    letters: usize,
    step: Vec<Vertex>,
}

impl CayleyBall {
    /// Right multiplication by a letter, when the product lies in the ball.
    pub fn step(&self, v: Vertex, l: Letter) -> Option<Vertex> {
        let w = self.step[v * self.letters + l as usize];
        (w != usize::MAX).then_some(w)
    }

    /// Follows `word` from the identity; `None` if the walk leaves the ball.
    pub fn walk(&self, word: &[Letter]) -> Option<Vertex> {
        self.walk_from(0, word)
    }

    pub fn walk_from(&self, start: Vertex, word: &[Letter]) -> Option<Vertex> {
        word.iter().try_fold(start, |v, &l| self.step(v, l))
    }

    /// Vertex whose label (word) is `text`.
    pub fn vertex_of(&self, text: &str) -> Result<Option<Vertex>, GroupError> {
        let w = parse_word(text, self.spec.generators())?;
        let w = match self.spec.normal_form(&w) {
            Some(nf) => nf,
            None => free_reduce(&w),
        };
        Ok(self.walk(&w))
    }

    pub fn generators(&self) -> usize {
        self.letters / 2
    }

    /// Vertices of word length at most `radius - margin`.
    pub fn interior(&self, margin: usize) -> VertexSet {
        let r = self.radius.saturating_sub(margin);
        VertexSet::new((0..self.depth.len()).filter(|&v| self.depth[v] <= r).collect())
    }
}

/// Builds the radius-`radius` ball with default limits.
pub fn build_ball(spec: &GroupSpec, radius: usize) -> Result<CayleyBall, GroupError> {
    build_ball_with(spec, radius, BallLimits::default())
}

pub fn build_ball_with(spec: &GroupSpec, radius: usize, limits: BallLimits) -> Result<CayleyBall, GroupError> {
    if radius == 0 || radius > limits.max_radius {
        return Err(GroupError::RadiusTooLarge {
            radius,
            max: limits.max_radius,
        });
    }
    let solver = spec.solver()?;
    if let GroupSpec::Rewriting(r) = spec {
        r.check_confluence(2 * radius + 2)?;
    }
    let letters = 2 * spec.generators();
    let mut words: Vec<Word> = vec![Vec::new()];
    let mut depth = vec![0usize];
    let mut step: Vec<Vertex> = Vec::new();
    let mut index: HashMap<Word, Vertex> = HashMap::new();
    let mut buckets: HashMap<(Vec<i64>, usize), Vec<Vertex>> = HashMap::new();
    match &solver {
        Solver::NormalForm(_) => {
            index.insert(Vec::new(), 0);
        }
        Solver::Dehn(d) => {
            buckets.entry((d.key(&[]), 0)).or_default().push(0);
        }
    }
    let mut u = 0;
    while u < words.len() {
        let d = depth[u];
        for l in 0..letters as Letter {
            let mut cand = words[u].clone();
            cand.push(l);
            let found = match &solver {
                Solver::NormalForm(s) => {
                    let nf = s.normal_form(&cand).expect("normal-form family");
                    match index.get(&nf) {
                        Some(&v) => Some(v),
                        None if d < radius => {
                            let v = words.len();
                            index.insert(nf.clone(), v);
                            words.push(nf);
                            depth.push(d + 1);
                            Some(v)
                        }
                        None => None,
                    }
                }
                Solver::Dehn(ds) => {
                    let cand = free_reduce(&cand);
                    let key = ds.key(&cand);
                    let lo = d.saturating_sub(1);
                    let existing = (lo..=d + 1).find_map(|dd| {
                        buckets
                            .get(&(key.clone(), dd))
                            .and_then(|b| b.iter().copied().find(|&v| ds.dehn.equal(&cand, &words[v])))
                    });
                    match existing {
                        Some(v) => Some(v),
                        None if d < radius => {
                            let v = words.len();
                            buckets.entry((key, d + 1)).or_default().push(v);
                            words.push(cand);
                            depth.push(d + 1);
                            Some(v)
                        }
                        None => None,
                    }
                }
            };
            step.push(found.unwrap_or(usize::MAX));
            if words.len() > limits.max_vertices {
                return Err(GroupError::BallTooLarge {
                    cap: limits.max_vertices,
                });
            }
        }
        u += 1;
    }
    let n = words.len();
    let mut b = GraphBuilder::new(n);
    for v in 0..n {
        for l in 0..letters {
            let w = step[v * letters + l];
            if w != usize::MAX && w != v {
                b.add_edge(v, w, 1.0)?;
            }
        }
    }
    b.set_labels(words.iter().map(|w| format_word(w)).collect());
    Ok(CayleyBall {
        spec: spec.clone(),
        graph: b.build()?,
        radius,
        words,
        depth,
        letters,
        step,
    })
}

/// A subgroup generated by a sub-alphabet, with an optional coset
/// representative (`None` selects every coset meeting the ball).
#[derive(Clone, Debug, PartialEq)]
pub struct CosetSpec {
    pub subgroup: Vec<Letter>,
    pub representative: Option<Word>,
}

impl CosetSpec {
    /// Validates closure under inversion.
    pub fn new(subgroup: Vec<Letter>, representative: Option<Word>) -> Result<Self, GroupError> {
        for &l in &subgroup {
            if !subgroup.contains(&inverse_letter(l)) {
                return Err(GroupError::SubgroupNotClosed(format_word(&subgroup)));
            }
        }
        Ok(CosetSpec {
            subgroup,
            representative,
        })
    }

    /// Subgroup generated by the named generators, e.g. `ab` for `<a,b>`.
    pub fn generated_by(generators: &str, group_generators: usize) -> Result<Self, GroupError> {
        let mut letters = Vec::new();
        for l in parse_word(&generators.to_ascii_lowercase(), group_generators)? {
            letters.push(l);
            letters.push(inverse_letter(l));
        }
        letters.sort_unstable();
        letters.dedup();
        CosetSpec::new(letters, None)
    }

    pub fn with_representative(mut self, rep: Word) -> Self {
        self.representative = Some(rep);
        self
    }
}

/// Cosets of sub-alphabet subgroups, intersected with the ball.
///
/// A coset is identified with a connected component of the subgroup-letter
/// edges inside the ball. Members smaller than `min_size` are dropped and
/// duplicates (from overlapping specs) are kept once.
pub fn peripheral_cosets(
    ball: &CayleyBall,
    specs: &[CosetSpec],
    min_size: usize,
) -> Result<PeripheralFamily, GroupError> {
    let n = ball.graph.vertex_count();
    let mut members: Vec<VertexSet> = Vec::new();
    for spec in specs {
        for &l in &spec.subgroup {
            if !spec.subgroup.contains(&inverse_letter(l)) {
                return Err(GroupError::SubgroupNotClosed(format_word(&spec.subgroup)));
            }
            if l as usize >= ball.letters {
                return Err(GroupError::UnknownLetter(word::letter_char(l)));
            }
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for v in 0..n {
            for &l in &spec.subgroup {
                if let Some(w) = ball.step(v, l) {
                    let (a, b) = (find(&mut parent, v), find(&mut parent, w));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let only = match &spec.representative {
            Some(rep) => {
                let nf = ball.spec.normal_form(rep).unwrap_or_else(|| free_reduce(rep));
                let v = ball
                    .walk(&nf)
                    .ok_or_else(|| GroupError::RepresentativeOutsideBall(format_word(rep)))?;
                Some(find(&mut parent, v))
            }
            None => None,
        };
        let mut groups: HashMap<usize, Vec<Vertex>> = HashMap::new();
        for v in 0..n {
            let r = find(&mut parent, v);
            if only.is_none_or(|o| o == r) {
                groups.entry(r).or_default().push(v);
            }
        }
        let mut sets: Vec<VertexSet> = groups
            .into_values()
            .filter(|g| g.len() >= min_size)
            .map(VertexSet::new)
            .collect();
        sets.sort_by_key(|s| s.as_slice()[0]);
        for s in sets {
            if !members.contains(&s) {
                members.push(s);
            }
        }
    }
    Ok(PeripheralFamily::new(members, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_sizes_match_counting_formulas() {
        assert_eq!(build_ball(&GroupSpec::FreeAbelian(2), 2).unwrap().graph.vertex_count(), 13);
        assert_eq!(build_ball(&GroupSpec::Free(2), 2).unwrap().graph.vertex_count(), 17);
        for n in 1..=3usize {
            for r in 1..=4u32 {
                let expected = if n == 1 {
                    1 + 2 * r as usize
                } else {
                    1 + 2 * n * ((2 * n - 1).pow(r) - 1) / (2 * n - 2)
                };
                let ball = build_ball(&GroupSpec::Free(n), r as usize).unwrap();
                assert_eq!(ball.graph.vertex_count(), expected, "free({n}) radius {r}");
            }
        }
    }

    #[test]
    fn identity_is_vertex_zero_and_labels_are_words() {
        let ball = build_ball(&GroupSpec::parse("free_product(free_abelian(2),free(1))").unwrap(), 3).unwrap();
        assert_eq!(ball.graph.label(0), Some("e"));
        assert_eq!(ball.vertex_of("ba").unwrap(), ball.vertex_of("ab").unwrap());
        assert_ne!(ball.vertex_of("ca").unwrap(), ball.vertex_of("ac").unwrap());
    }

    #[test]
    fn edges_differ_by_one_generator() {
        for spec in ["free(2)", "z2", "free_product(free_abelian(2),free(1))", "direct_product(free(1),free(2))", "surface(2)"] {
            let spec = GroupSpec::parse(spec).unwrap();
            let ball = build_ball(&spec, 3).unwrap();
            let solver = spec.solver().unwrap();
            for (u, v, _) in ball.graph.edges() {
                let (wu, wv) = (&ball.words[u], &ball.words[v]);
                let mut q = word::inverse(wu);
                q.extend_from_slice(wv);
                let ok = match &solver {
                    Solver::NormalForm(s) => s.normal_form(&q).unwrap().len() == 1,
                    Solver::Dehn(d) => (0..ball.letters as Letter).any(|l| d.dehn.equal(&q, &[l])),
                };
                assert!(ok, "{spec}: {} - {}", format_word(wu), format_word(wv));
            }
        }
    }

    #[test]
    fn parse_and_display_roundtrip() {
        for text in [
            "free(2)",
            "free_abelian(3)",
            "free_product(free_abelian(2),free(1))",
            "direct_product(free(2),free_abelian(1))",
            "surface(2)",
            "rewriting(2;ba->ab;bA->Ab;Ba->aB;BA->AB)",
            "dehn(2;abbAbAABABBaa)",
        ] {
            let spec = GroupSpec::parse(text).unwrap();
            assert_eq!(spec.to_string(), text);
            assert_eq!(GroupSpec::parse(&spec.to_string()).unwrap(), spec);
        }
        assert_eq!(GroupSpec::parse("free2").unwrap(), GroupSpec::Free(2));
        assert!(matches!(GroupSpec::parse("heisenberg(3)"), Err(GroupError::UnknownFamily(_))));
    }

    #[test]
    fn config_files() {
        let s = GroupSpec::from_config("family=surface\ngenus=2\n").unwrap();
        assert_eq!(s, GroupSpec::Surface(2));
        let r = GroupSpec::from_config("# z^2 by rewriting\nfamily=rewriting\ngenerators=2\nrules=\nba->ab\nbA->Ab\nBa->aB\nBA->AB\n").unwrap();
        let ball = build_ball(&r, 2).unwrap();
        assert_eq!(ball.graph.vertex_count(), 13);
        let e = GroupSpec::from_config("family=free(2)\nbogus=1\n").unwrap_err();
        assert_eq!(e, GroupError::Parse { line: 2, msg: "unknown key `bogus`".into() });
    }

    #[test]
    fn non_confluent_rewriting_rejected_at_build() {
        let r = GroupSpec::from_config("family=rewriting\ngenerators=2\nrules=aa->e,ab->e\n").unwrap();
        assert!(matches!(build_ball(&r, 3), Err(GroupError::NotConfluent { .. })));
    }

    #[test]
    fn limits_enforced() {
        assert!(matches!(build_ball(&GroupSpec::Free(2), 9), Err(GroupError::RadiusTooLarge { .. })));
        let tight = BallLimits {
            max_radius: 8,
            max_vertices: 100,
        };
        assert!(matches!(
            build_ball_with(&GroupSpec::Free(2), 5, tight),
            Err(GroupError::BallTooLarge { cap: 100 })
        ));
    }

    #[test]
    fn axis_coset_in_free_group() {
        let ball = build_ball(&GroupSpec::Free(2), 4).unwrap();
        let spec = CosetSpec::generated_by("a", 2).unwrap().with_representative(Vec::new());
        let fam = peripheral_cosets(&ball, &[spec], 3).unwrap();
        assert_eq!(fam.members.len(), 1);
        assert_eq!(fam.members[0].len(), 9);
    }

    #[test]
    fn horizontal_lines_in_grid_ball() {
        let ball = build_ball(&GroupSpec::FreeAbelian(2), 3).unwrap();
        let spec = CosetSpec::generated_by("a", 2).unwrap();
        let fam = peripheral_cosets(&ball, &[spec.clone()], 1).unwrap();
        assert_eq!(fam.members.len(), 7);
        let sizes: Vec<usize> = fam.members.iter().map(|m| m.len()).collect();
        let mut sorted = sizes.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![1, 1, 3, 3, 5, 5, 7]);
        assert_eq!(peripheral_cosets(&ball, &[spec], 3).unwrap().members.len(), 5);
    }

    #[test]
    fn subgroup_must_be_closed() {
        assert!(matches!(CosetSpec::new(vec![0], None), Err(GroupError::SubgroupNotClosed(_))));
    }
}
