//! Program text format.
//!
//! ```text
//! expr   := "I" | "$" N | "$" N ":" call | call
//! call   := name "(" expr { "," arg } ")"
//! arg    := expr | number | word | "ellipse(" θ "," k "," ratio ")"
//!         | "haar(" kind "," cell_w "," cell_h "," off_x "," off_y ")"
//! ```
//!
//! Operator signatures:
//! `mult|blend|normDiff|scaledSub(a, b)`, `sigmoid(x, θ, λ)`, `ggm(x, σ)`,
//! `laplace(x, σ)`, `laws(x, U, V)`, `gabor(x, θ, size, ratio, wavelength,
//! sin|cos|both)`, `erode|dilate|open|close(x, ellipse(..))`,
//! `ptile(x, p, ellipse(..))`, `convolve(x, haar(..))`.
//!
//! A node consumed by more than one parent is written once as `$N:call` and
//! referenced afterwards as `$N`, where `N` is its canonical node index.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::program::{FeatureProgram, Node, Op};
use crate::error::{Error, Result};
use crate::ops::{BinaryKind, FilterSpec, GaborEnvelope, GaborParams, HaarKind, LawsVector, MorphOp, ViolaJonesKernel};
use crate::raster::StructuringElement;

pub fn serialize_program(prog: &FeatureProgram) -> String {
    let uses = prog.fan_out();
    let mut written = vec![false; prog.len()];
    let mut out = String::new();
    write_node(prog, prog.root(), &uses, &mut written, &mut out);
    out
}

fn num(out: &mut String, v: f64) {
    write!(out, "{v:?}").unwrap();
}

fn write_se(out: &mut String, se: &StructuringElement) {
    out.push_str("ellipse(");
    num(out, se.orientation());
    write!(out, ", {}, ", se.radius()).unwrap();
    num(out, se.ratio());
    out.push(')');
}

fn write_node(prog: &FeatureProgram, i: usize, uses: &[usize], written: &mut [bool], out: &mut String) {
    let node = &prog.nodes()[i];
    if node.op == Op::Input {
        out.push('I');
        return;
    }
    let shared = uses[i] > 1;
    if shared && written[i] {
        write!(out, "${i}").unwrap();
        return;
    }
    if shared {
        write!(out, "${i}:").unwrap();
    }
    written[i] = true;
    out.push_str(node.op.name());
    out.push('(');
    for (k, &inp) in node.inputs.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        write_node(prog, inp, uses, written, out);
    }
    if let Op::Unary(spec) = &node.op {
        out.push_str(", ");
        match spec {
            FilterSpec::Sigmoid { theta, lambda } => {
                num(out, *theta);
                out.push_str(", ");
                num(out, *lambda);
            }
            FilterSpec::Ggm { sigma } | FilterSpec::Laplace { sigma } => num(out, *sigma),
            FilterSpec::Laws { u, v } => write!(out, "{}, {}", u.name(), v.name()).unwrap(),
            FilterSpec::Gabor(g) => {
                for v in [g.theta, g.size, g.ratio, g.wavelength] {
                    num(out, v);
                    out.push_str(", ");
                }
                out.push_str(g.envelope.name());
            }
            FilterSpec::Morph { se, .. } => write_se(out, se),
            FilterSpec::Ptile { p, se } => {
                num(out, *p);
                out.push_str(", ");
                write_se(out, se);
            }
            FilterSpec::Convolve(k) => write!(
                out,
                "haar({}, {}, {}, {}, {})",
                k.kind.name(),
                k.cell_width,
                k.cell_height,
                k.offset_x,
                k.offset_y
            )
            .unwrap(),
        }
    }
    out.push(')');
}

pub fn parse_program(text: &str) -> Result<FeatureProgram> {
    let mut p = Parser {
        src: text.as_bytes(),
        text,
        pos: 0,
        nodes: vec![Node {
            op: Op::Input,
            inputs: vec![],
        }],
        labels: HashMap::new(),
    };
    let root = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("trailing input"));
    }
    let prog = FeatureProgram::from_nodes(p.nodes, root)?;
    prog.validate()?;
    Ok(prog)
}

struct Parser<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
    nodes: Vec<Node>,
    labels: HashMap<usize, usize>,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> Error {
        let before = &self.text[..self.pos.min(self.text.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            let found = self
                .src
                .get(self.pos)
                .map_or("end of input".to_string(), |&b| format!("{:?}", b as char));
            Err(self.error(format!("expected {:?}, found {found}", c as char)))
        }
    }

    fn word(&mut self) -> Result<&str> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected identifier"));
        }
        Ok(&self.text[start..self.pos])
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && matches!(self.src[self.pos], b'0'..=b'9' | b'.' | b'-' | b'+' | b'e' | b'E')
        {
            self.pos += 1;
        }
        let tok = &self.text[start..self.pos];
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = start;
                Err(self.error(format!("expected number, found {tok:?}")))
            }
        }
    }

    fn integer(&mut self) -> Result<usize> {
        let at = self.pos;
        let v = self.number()?;
        if v < 0.0 || v.fract() != 0.0 {
            self.pos = at;
            return Err(self.error(format!("expected non-negative integer, found {v}")));
        }
        Ok(v as usize)
    }

    fn comma(&mut self) -> Result<()> {
        self.expect(b',')
    }

    fn push(&mut self, op: Op, inputs: Vec<usize>) -> usize {
        self.nodes.push(Node { op, inputs });
        self.nodes.len() - 1
    }

    fn expr(&mut self) -> Result<usize> {
        match self.peek() {
            Some(b'$') => {
                self.pos += 1;
                let at = self.pos;
                let label = self.integer()?;
                if self.peek() == Some(b':') {
                    self.pos += 1;
                    if self.labels.contains_key(&label) {
                        self.pos = at;
                        return Err(self.error(format!("label ${label} defined twice")));
                    }
                    let node = self.call()?;
                    self.labels.insert(label, node);
                    Ok(node)
                } else {
                    self.labels.get(&label).copied().ok_or_else(|| {
                        self.pos = at;
                        self.error(format!("undefined label ${label}"))
                    })
                }
            }
            Some(_) => self.call(),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn se(&mut self) -> Result<StructuringElement> {
        let at = self.pos;
        if self.word()? != "ellipse" {
            self.pos = at;
            return Err(self.error("expected ellipse(..)"));
        }
        self.expect(b'(')?;
        let theta = self.number()?;
        self.comma()?;
        let k = self.integer()?;
        self.comma()?;
        let ratio = self.number()?;
        self.expect(b')')?;
        StructuringElement::ellipse(theta, k, ratio).map_err(|e| {
            self.pos = at;
            self.error(e.to_string())
        })
    }

    fn enum_word<T>(&mut self, what: &str, f: impl Fn(&str) -> Option<T>) -> Result<T> {
        let at = self.pos;
        let w = self.word()?.to_string();
        f(&w).ok_or_else(|| {
            self.pos = at;
            self.error(format!("unknown {what} {w:?}"))
        })
    }

    fn call(&mut self) -> Result<usize> {
        self.skip_ws();
        let at = self.pos;
        let name = self.word()?.to_string();
        if name == "I" {
            return Ok(0);
        }
        self.expect(b'(')?;
        let first = self.expr()?;
        if let Some(kind) = BinaryKind::from_name(&name) {
            self.comma()?;
            let second = self.expr()?;
            self.expect(b')')?;
            return Ok(self.push(Op::Binary(kind), vec![first, second]));
        }
        self.comma()?;
        let spec = match name.as_str() {
            "sigmoid" => {
                let theta = self.number()?;
                self.comma()?;
                let lambda = self.number()?;
                FilterSpec::Sigmoid { theta, lambda }
            }
            "ggm" => FilterSpec::Ggm { sigma: self.number()? },
            "laplace" => FilterSpec::Laplace { sigma: self.number()? },
            "laws" => {
                let u = self.enum_word("Laws vector", LawsVector::from_name)?;
                self.comma()?;
                let v = self.enum_word("Laws vector", LawsVector::from_name)?;
                FilterSpec::Laws { u, v }
            }
            "gabor" => {
                let mut vals = [0.0; 4];
                for v in &mut vals {
                    *v = self.number()?;
                    self.comma()?;
                }
                let envelope = self.enum_word("gabor envelope", GaborEnvelope::from_name)?;
                FilterSpec::Gabor(GaborParams {
                    theta: vals[0],
                    size: vals[1],
                    ratio: vals[2],
                    wavelength: vals[3],
                    envelope,
                })
            }
            "ptile" => {
                let p = self.number()?;
                self.comma()?;
                FilterSpec::Ptile { p, se: self.se()? }
            }
            "convolve" => {
                let kat = self.pos;
                if self.word()? != "haar" {
                    self.pos = kat;
                    return Err(self.error("expected haar(..)"));
                }
                self.expect(b'(')?;
                let kind = self.enum_word("haar kind", HaarKind::from_name)?;
                let mut v = [0usize; 4];
                for slot in &mut v {
                    self.comma()?;
                    *slot = self.integer()?;
                }
                self.expect(b')')?;
                FilterSpec::Convolve(ViolaJonesKernel {
                    kind,
                    cell_width: v[0],
                    cell_height: v[1],
                    offset_x: v[2],
                    offset_y: v[3],
                })
            }
            other => match MorphOp::from_name(other) {
                Some(op) => FilterSpec::Morph { op, se: self.se()? },
                None => {
                    self.pos = at;
                    return Err(self.error(format!("unknown operator {other:?}")));
                }
            },
        };
        self.expect(b')')?;
        if let Err(e) = spec.validate() {
            self.pos = at;
            return Err(self.error(e.to_string()));
        }
        Ok(self.push(Op::Unary(spec), vec![first]))
    }
}
