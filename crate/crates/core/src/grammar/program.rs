use std::borrow::Cow;

use crate::error::{Error, Result};
use crate::ops::{apply_binary, BinaryKind, FilterSpec};
use crate::raster::GreyImage;

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    /// The image variable `I`.
    Input,
    Unary(FilterSpec),
    Binary(BinaryKind),
}

impl Op {
    pub fn arity(&self) -> usize {
        match self {
            Op::Input => 0,
            Op::Unary(_) => 1,
            Op::Binary(_) => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Op::Input => "I",
            Op::Unary(f) => f.name(),
            Op::Binary(b) => b.name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub op: Op,
    pub inputs: Vec<usize>,
}

/// A feature-extraction program: a DAG of operators over one image variable.
///
/// Nodes are kept in canonical order: a depth-first post-order walk from the
/// root, inputs left to right, each node listed at its first visit. Node 0 is
/// therefore always the image variable and the last node is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureProgram {
    nodes: Vec<Node>,
}

impl FeatureProgram {
    /// Builds a program rooted at `root` from arbitrary node storage,
    /// dropping unreachable nodes and renumbering into canonical order.
    pub fn from_nodes(nodes: Vec<Node>, root: usize) -> Result<Self> {
        if root >= nodes.len() {
            return Err(Error::InvalidProgram(format!("root {root} out of range")));
        }
        for (i, n) in nodes.iter().enumerate() {
            if n.inputs.len() != n.op.arity() {
                return Err(Error::InvalidProgram(format!(
                    "node {i} ({}) has {} inputs, expected {}",
                    n.op.name(),
                    n.inputs.len(),
                    n.op.arity()
                )));
            }
            if let Some(&bad) = n.inputs.iter().find(|&&j| j >= nodes.len()) {
                return Err(Error::InvalidProgram(format!("node {i} references missing node {bad}")));
            }
        }
        let mut order = Vec::with_capacity(nodes.len());
        let mut new_index = vec![usize::MAX; nodes.len()];
        let mut on_stack = vec![false; nodes.len()];
        // iterative post-order; (node, next input to visit)
        let mut stack = vec![(root, 0usize)];
        on_stack[root] = true;
        while let Some(&mut (n, ref mut next)) = stack.last_mut() {
            if *next < nodes[n].inputs.len() {
                let child = nodes[n].inputs[*next];
                *next += 1;
                if new_index[child] != usize::MAX {
                    continue;
                }
                if on_stack[child] {
                    return Err(Error::InvalidProgram(format!("cycle through node {child}")));
                }
                on_stack[child] = true;
                stack.push((child, 0));
            } else {
                stack.pop();
                on_stack[n] = false;
                new_index[n] = order.len();
                order.push(n);
            }
        }
        let canonical = order
            .iter()
            .map(|&old| Node {
                op: nodes[old].op.clone(),
                inputs: nodes[old].inputs.iter().map(|&j| new_index[j]).collect(),
            })
            .collect();
        let prog = FeatureProgram { nodes: canonical };
        prog.check_structure()?;
        Ok(prog)
    }

    /// The program that returns its input unchanged.
    pub fn identity() -> Self {
        FeatureProgram {
            nodes: vec![Node {
                op: Op::Input,
                inputs: vec![],
            }],
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of parent edges into each node.
    pub fn fan_out(&self) -> Vec<usize> {
        let mut uses = vec![0; self.nodes.len()];
        for n in &self.nodes {
            for &i in &n.inputs {
                uses[i] += 1;
            }
        }
        uses
    }

    fn check_structure(&self) -> Result<()> {
        let err = |m: String| Err(Error::InvalidProgram(m));
        match self.nodes.first() {
            Some(Node { op: Op::Input, .. }) => {}
            _ => return err("node 0 must be the image variable".into()),
        }
        for (i, n) in self.nodes.iter().enumerate().skip(1) {
            if n.op == Op::Input {
                return err(format!("node {i} is a second image variable"));
            }
            if n.inputs.iter().any(|&j| j >= i) {
                return err(format!("node {i} is not in topological order"));
            }
        }
        let uses = self.fan_out();
        if let Some(i) = (0..self.root()).find(|&i| uses[i] == 0) {
            return err(format!("node {i} is unreachable from the root"));
        }
        Ok(())
    }

    /// Structural invariants plus every operator's parameter ranges.
    pub fn validate(&self) -> Result<()> {
        self.check_structure()?;
        for (i, n) in self.nodes.iter().enumerate() {
            if let Op::Unary(spec) = &n.op {
                spec.validate().map_err(|e| Error::Eval {
                    node: i,
                    source: Box::new(e),
                })?;
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, img: &GreyImage) -> Result<GreyImage> {
        self.evaluate_with(img, &mut EvalCache::default())
    }

    /// Evaluates every node once in topological order. Intermediate images
    /// are released as soon as their last consumer has run.
    pub fn evaluate_with(&self, img: &GreyImage, cache: &mut EvalCache) -> Result<GreyImage> {
        let mut remaining = self.fan_out();
        let root = self.root();
        let mut values: Vec<Option<Cow<'_, GreyImage>>> = vec![None; self.nodes.len()];
        values[0] = Some(Cow::Borrowed(img));
        for (i, node) in self.nodes.iter().enumerate().skip(1) {
            let input = |k: usize| -> &GreyImage { values[node.inputs[k]].as_deref().expect("input evaluated") };
            let wrap = |e: Error| Error::Eval {
                node: i,
                source: Box::new(e),
            };
            let out = match &node.op {
                Op::Input => unreachable!("checked by structure validation"),
                Op::Unary(spec) => {
                    spec.validate().map_err(wrap)?;
                    spec.apply(input(0))
                }
                Op::Binary(kind) => apply_binary(*kind, input(0), input(1)).map_err(wrap)?,
            };
            cache.invocations += 1;
            for &j in &node.inputs {
                remaining[j] -= 1;
                if remaining[j] == 0 && j != root {
                    values[j] = None;
                }
            }
            values[i] = Some(Cow::Owned(out));
        }
        Ok(values[root].take().expect("root evaluated").into_owned())
    }
}

/// Per-call evaluation bookkeeping.
#[derive(Debug, Default, Clone)]
pub struct EvalCache {
    /// Operator applications performed (the image variable is free).
    pub invocations: usize,
}
