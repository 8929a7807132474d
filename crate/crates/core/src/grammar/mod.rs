//! Stochastic generative grammar over feature-extraction programs.
//!
//! Productions are data: each nonterminal maps to alternative right-hand
//! sides built from argument references, nested nonterminals and operator
//! terminals. The sampler expands `Feature(I)` with a uniform choice per
//! production; [`Grammar::derives`] recognizes whether a program could have
//! been produced, without going through the sampler.

mod program;
mod text;

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub use program::{EvalCache, FeatureProgram, Node, Op};
pub use text::{parse_program, serialize_program};

use crate::error::{Error, Result};
use crate::ops::{
    BinaryKind, FilterSpec, GaborEnvelope, GaborParams, LawsVector, MorphOp, ViolaJonesKernel, SIGMA_RANGE,
    SIGMOID_LAMBDAS,
};
use crate::raster::StructuringElement;

/// Default bound on nested `Compound` recursion.
pub const DEFAULT_MAX_DEPTH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NonTerminal {
    Feature,
    Binary,
    NlBinary,
    Unary,
    Compound,
    Morph,
    NlUnary,
    LUnary,
}

impl NonTerminal {
    pub fn arity(self) -> usize {
        match self {
            NonTerminal::Binary | NonTerminal::NlBinary => 2,
            _ => 1,
        }
    }
}

/// Operator families that terminate a derivation. Parameters are sampled
/// when the terminal is instantiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Terminal {
    Binary(BinaryKind),
    Sigmoid,
    Morph(MorphOp),
    Ptile,
    Ggm,
    Laws,
    Laplace,
    Gabor,
    Convolve,
}

impl Terminal {
    pub fn arity(self) -> usize {
        match self {
            Terminal::Binary(_) => 2,
            _ => 1,
        }
    }

    /// Whether a concrete operator belongs to this family.
    pub fn admits(self, op: &Op) -> bool {
        match (self, op) {
            (Terminal::Binary(k), Op::Binary(b)) => k == *b,
            (Terminal::Sigmoid, Op::Unary(FilterSpec::Sigmoid { .. })) => true,
            (Terminal::Morph(m), Op::Unary(FilterSpec::Morph { op, .. })) => m == *op,
            (Terminal::Ptile, Op::Unary(FilterSpec::Ptile { .. })) => true,
            (Terminal::Ggm, Op::Unary(FilterSpec::Ggm { .. })) => true,
            (Terminal::Laws, Op::Unary(FilterSpec::Laws { .. })) => true,
            (Terminal::Laplace, Op::Unary(FilterSpec::Laplace { .. })) => true,
            (Terminal::Gabor, Op::Unary(FilterSpec::Gabor(_))) => true,
            (Terminal::Convolve, Op::Unary(FilterSpec::Convolve(_))) => true,
            _ => false,
        }
    }

    fn sample_filter<R: Rng + ?Sized>(self, rng: &mut R) -> FilterSpec {
        match self {
            Terminal::Binary(_) => unreachable!("binary terminals carry no filter"),
            Terminal::Sigmoid => FilterSpec::Sigmoid {
                theta: snorm(rng),
                lambda: SIGMOID_LAMBDAS[rng.random_range(0..SIGMOID_LAMBDAS.len())],
            },
            Terminal::Morph(op) => FilterSpec::Morph { op, se: random_se(rng) },
            Terminal::Ptile => FilterSpec::Ptile {
                p: rng.random_range(0.0..=100.0),
                se: random_se(rng),
            },
            Terminal::Ggm => FilterSpec::Ggm {
                sigma: random_sigma(rng),
            },
            Terminal::Laplace => FilterSpec::Laplace {
                sigma: random_sigma(rng),
            },
            Terminal::Laws => FilterSpec::Laws {
                u: LawsVector::ALL[rng.random_range(0..5)],
                v: LawsVector::ALL[rng.random_range(0..5)],
            },
            Terminal::Gabor => FilterSpec::Gabor(GaborParams {
                theta: rng.random_range(0.0..=PI),
                size: rng.random_range(1.0..=31.0),
                ratio: log_ratio(rng),
                wavelength: 10.0 * rng.random_range(0.0..=1.0) + 2.0,
                envelope: GaborEnvelope::ALL[rng.random_range(0..3)],
            }),
            Terminal::Convolve => FilterSpec::Convolve(ViolaJonesKernel::sample(rng)),
        }
    }
}

fn snorm<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// `3·|N(0,1)|` clamped to the admissible scale range.
fn random_sigma<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    (3.0 * snorm(rng).abs()).clamp(SIGMA_RANGE.0, SIGMA_RANGE.1)
}

/// `10^(2s-1)` for uniform `s ∈ [0, 1]`.
fn log_ratio<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    10f64.powf(2.0 * rng.random_range(0.0..=1.0) - 1.0)
}

fn random_se<R: Rng + ?Sized>(rng: &mut R) -> StructuringElement {
    StructuringElement::ellipse(rng.random_range(0.0..=TAU), rng.random_range(1..=7), log_ratio(rng))
        .expect("sampled parameters are in range")
}

/// Right-hand side of a production.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// The i-th argument of the production being expanded.
    Arg(usize),
    Call(NonTerminal, Vec<Expr>),
    Term(Terminal, Vec<Expr>),
}

fn x() -> Expr {
    Expr::Arg(0)
}

fn call(nt: NonTerminal, args: Vec<Expr>) -> Expr {
    Expr::Call(nt, args)
}

fn term(t: Terminal, args: Vec<Expr>) -> Expr {
    Expr::Term(t, args)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GrammarVariant {
    Full,
    HaarOnly,
    NoMorphology,
    NoHaar,
}

impl GrammarVariant {
    pub const ALL: [GrammarVariant; 4] = [
        GrammarVariant::Full,
        GrammarVariant::HaarOnly,
        GrammarVariant::NoMorphology,
        GrammarVariant::NoHaar,
    ];

    /// Name used on the command line and in model files.
    pub fn as_str(self) -> &'static str {
        match self {
            GrammarVariant::Full => "full",
            GrammarVariant::HaarOnly => "haar",
            GrammarVariant::NoMorphology => "no-morph",
            GrammarVariant::NoHaar => "no-haar",
        }
    }
}

impl fmt::Display for GrammarVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GrammarVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown feature set {s:?} (full|haar|no-morph|no-haar)")))
    }
}

#[derive(Debug, Clone)]
pub struct Grammar {
    variant: GrammarVariant,
    productions: BTreeMap<NonTerminal, Vec<Expr>>,
}

impl Grammar {
    pub fn new(variant: GrammarVariant) -> Self {
        use NonTerminal as N;
        let mut p = BTreeMap::new();
        if variant == GrammarVariant::HaarOnly {
            p.insert(N::Feature, vec![term(Terminal::Convolve, vec![x()])]);
            return Grammar {
                variant,
                productions: p,
            };
        }
        let unary = || call(N::Unary, vec![x()]);
        p.insert(
            N::Feature,
            vec![
                call(N::Binary, vec![unary(), unary()]),
                call(N::NlUnary, vec![unary()]),
                call(N::NlBinary, vec![unary(), unary()]),
                call(N::Compound, vec![x()]),
            ],
        );
        let two = || vec![Expr::Arg(0), Expr::Arg(1)];
        p.insert(
            N::Binary,
            BinaryKind::ALL
                .iter()
                .map(|&k| term(Terminal::Binary(k), two()))
                .collect(),
        );
        p.insert(
            N::NlBinary,
            vec![
                term(Terminal::Binary(BinaryKind::Mult), two()),
                term(Terminal::Binary(BinaryKind::NormDiff), two()),
            ],
        );
        p.insert(N::Unary, vec![call(N::LUnary, vec![x()]), call(N::NlUnary, vec![x()])]);
        p.insert(
            N::Compound,
            vec![
                call(N::Unary, vec![x()]),
                call(N::Binary, vec![x(), call(N::Compound, vec![x()])]),
            ],
        );
        let mut nl = vec![term(Terminal::Sigmoid, vec![x()])];
        if variant != GrammarVariant::NoMorphology {
            p.insert(
                N::Morph,
                MorphOp::ALL
                    .iter()
                    .map(|&m| term(Terminal::Morph(m), vec![x()]))
                    .collect(),
            );
            nl.push(call(N::Morph, vec![x()]));
            nl.push(term(Terminal::Ptile, vec![x()]));
        }
        nl.push(term(Terminal::Ggm, vec![x()]));
        p.insert(N::NlUnary, nl);
        let mut lu = vec![
            term(Terminal::Laws, vec![x()]),
            term(Terminal::Laplace, vec![x()]),
            term(Terminal::Gabor, vec![x()]),
        ];
        if variant != GrammarVariant::NoHaar {
            lu.push(term(Terminal::Convolve, vec![x()]));
        }
        p.insert(N::LUnary, lu);
        Grammar {
            variant,
            productions: p,
        }
    }

    pub fn variant(&self) -> GrammarVariant {
        self.variant
    }

    pub fn productions(&self) -> &BTreeMap<NonTerminal, Vec<Expr>> {
        &self.productions
    }

    /// Every referenced nonterminal is defined with matching arity, no
    /// production is empty, and argument references are in range.
    pub fn check(&self) -> Result<()> {
        fn walk(g: &Grammar, e: &Expr, arity: usize) -> Result<()> {
            match e {
                Expr::Arg(i) if *i < arity => Ok(()),
                Expr::Arg(i) => Err(Error::InvalidProgram(format!("argument {i} out of range"))),
                Expr::Call(nt, args) => {
                    if !g.productions.contains_key(nt) {
                        return Err(Error::InvalidProgram(format!("undefined nonterminal {nt:?}")));
                    }
                    if args.len() != nt.arity() {
                        return Err(Error::InvalidProgram(format!("{nt:?} called with {} args", args.len())));
                    }
                    args.iter().try_for_each(|a| walk(g, a, arity))
                }
                Expr::Term(t, args) => {
                    if args.len() != t.arity() {
                        return Err(Error::InvalidProgram(format!("{t:?} called with {} args", args.len())));
                    }
                    args.iter().try_for_each(|a| walk(g, a, arity))
                }
            }
        }
        if !self.productions.contains_key(&NonTerminal::Feature) {
            return Err(Error::InvalidProgram("no Feature production".into()));
        }
        for (nt, alts) in &self.productions {
            if alts.is_empty() {
                return Err(Error::InvalidProgram(format!("{nt:?} has no alternatives")));
            }
            for alt in alts {
                walk(self, alt, nt.arity())?;
            }
        }
        Ok(())
    }

    /// Terminals reachable in this grammar.
    pub fn terminals(&self) -> Vec<Terminal> {
        fn walk(e: &Expr, out: &mut Vec<Terminal>) {
            match e {
                Expr::Arg(_) => {}
                Expr::Call(_, a) => a.iter().for_each(|e| walk(e, out)),
                Expr::Term(t, a) => {
                    if !out.contains(t) {
                        out.push(*t);
                    }
                    a.iter().for_each(|e| walk(e, out));
                }
            }
        }
        let mut out = Vec::new();
        self.productions.values().flatten().for_each(|e| walk(e, &mut out));
        out
    }

    /// Expands `Feature(I)`. Nested `Compound` beyond `max_depth` is forced
    /// onto its first (`Unary`) alternative. Every leaf refers to the single
    /// image-variable node.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, max_depth: usize) -> FeatureProgram {
        let mut s = Sampler {
            grammar: self,
            rng,
            nodes: vec![Node {
                op: Op::Input,
                inputs: vec![],
            }],
            max_depth: max_depth.max(1),
        };
        let root = s.expand(&call(NonTerminal::Feature, vec![x()]), &[0], 0);
        FeatureProgram::from_nodes(s.nodes, root).expect("sampler builds well-formed programs")
    }

    /// Whether `prog` is derivable from `Feature(I)` under this grammar and
    /// every operator's parameters are in range.
    pub fn derives(&self, prog: &FeatureProgram) -> bool {
        if prog.validate().is_err() {
            return false;
        }
        let top = call(NonTerminal::Feature, vec![x()]);
        self.matches(prog, &top, &[Binding::Node(0)], prog.root())
    }

    fn matches(&self, prog: &FeatureProgram, e: &Expr, env: &[Binding<'_>], node: usize) -> bool {
        match e {
            Expr::Arg(i) => match env[*i] {
                Binding::Node(n) => n == node,
                Binding::Pattern(p, outer) => self.matches(prog, p, outer, node),
            },
            Expr::Term(t, args) => {
                let n = &prog.nodes()[node];
                t.admits(&n.op)
                    && n.inputs.len() == args.len()
                    && args.iter().zip(&n.inputs).all(|(a, &i)| self.matches(prog, a, env, i))
            }
            Expr::Call(nt, args) => {
                let bindings: Vec<Binding<'_>> = args.iter().map(|a| Binding::Pattern(a, env)).collect();
                self.productions[nt]
                    .iter()
                    .any(|alt| self.matches(prog, alt, &bindings, node))
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Binding<'a> {
    Node(usize),
    Pattern(&'a Expr, &'a [Binding<'a>]),
}

struct Sampler<'g, 'r, R: Rng + ?Sized> {
    grammar: &'g Grammar,
    rng: &'r mut R,
    nodes: Vec<Node>,
    max_depth: usize,
}

impl<R: Rng + ?Sized> Sampler<'_, '_, R> {
    fn expand(&mut self, e: &Expr, env: &[usize], depth: usize) -> usize {
        match e {
            Expr::Arg(i) => env[*i],
            Expr::Call(nt, args) => {
                let bound: Vec<usize> = args.iter().map(|a| self.expand(a, env, depth)).collect();
                let alts = &self.grammar.productions[nt];
                let (choice, depth) = if *nt == NonTerminal::Compound {
                    let d = depth + 1;
                    if d >= self.max_depth {
                        (0, d)
                    } else {
                        (self.rng.random_range(0..alts.len()), d)
                    }
                } else {
                    (self.rng.random_range(0..alts.len()), depth)
                };
                let alt = alts[choice].clone();
                self.expand(&alt, &bound, depth)
            }
            Expr::Term(t, args) => {
                let inputs: Vec<usize> = args.iter().map(|a| self.expand(a, env, depth)).collect();
                let op = match t {
                    Terminal::Binary(k) => Op::Binary(*k),
                    other => Op::Unary(other.sample_filter(self.rng)),
                };
                self.nodes.push(Node { op, inputs });
                self.nodes.len() - 1
            }
        }
    }
}

/// Samples a program for `variant`; see [`Grammar::sample`].
pub fn sample_program<R: Rng + ?Sized>(grammar: &Grammar, rng: &mut R, max_depth: usize) -> FeatureProgram {
    grammar.sample(rng, max_depth)
}

#[cfg(test)]
mod tests;
