//! Grid-search configuration and its flat `key = value` text form.

use std::path::Path;

use crate::boost::{expand_filter_families, PostFilterSpec, FILTER_RADII, MAX_THRESHOLDS, REGION_SIZES};
use crate::detect::{DetectorSpec, SIGMA_KDE_MAX, SIGMA_MAX};
use crate::eval::{Criterion, DEFAULT_TRACKING_RADIUS, DEFAULT_U};
use crate::grammar::{GrammarVariant, DEFAULT_MAX_DEPTH};
use crate::{Error, Result};

pub const ITERATION_CHOICES: [usize; 5] = [10, 25, 50, 75, 100];
pub const FILTER_SETS: [&str; 5] = ["R", "ED", "EDM", "REDM", "N"];

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchConfig {
    pub seed: u64,
    pub iterations: Vec<usize>,
    pub pool_size: usize,
    pub variants: Vec<GrammarVariant>,
    /// Post-filter family combinations such as `REDM` or `N`.
    pub filter_sets: Vec<String>,
    pub region_sizes: Vec<usize>,
    pub radii: Vec<usize>,
    pub sigma_cc: Vec<f64>,
    pub sigma_llm: Vec<f64>,
    pub sigma_kde: Vec<f64>,
    pub llm_threshold: f64,
    pub metrics: Vec<Criterion>,
    pub u: f64,
    pub tracking_radius: f64,
    pub max_depth: usize,
    pub max_thresholds: usize,
    /// Background pixels kept per training image; all when `None`.
    pub background_cap: Option<usize>,
}

/// `k / div` for `k` in `1..limit*div`, skipping multiples not divisible by
/// `every`. Division keeps decimal grid values exact to the nearest double.
fn grid_values(div: u32, limit: u32, every: u32) -> Vec<f64> {
    (1..limit * div)
        .filter(|k| k % every == 0)
        .map(|k| k as f64 / div as f64)
        .collect()
}

impl Default for GridSearchConfig {
    /// Coarse grid: the full parameter ranges, with sigma steps five times wider.
    fn default() -> Self {
        GridSearchConfig {
            seed: 0,
            iterations: ITERATION_CHOICES.to_vec(),
            pool_size: 100,
            variants: GrammarVariant::ALL.to_vec(),
            filter_sets: FILTER_SETS.iter().map(|s| s.to_string()).collect(),
            region_sizes: REGION_SIZES.to_vec(),
            radii: FILTER_RADII.to_vec(),
            sigma_cc: grid_values(5, 20, 5),
            sigma_llm: grid_values(5, 20, 5),
            sigma_kde: grid_values(10, 10, 5),
            llm_threshold: 0.0,
            metrics: Criterion::ALL.to_vec(),
            u: DEFAULT_U,
            tracking_radius: DEFAULT_TRACKING_RADIUS,
            max_depth: DEFAULT_MAX_DEPTH,
            max_thresholds: MAX_THRESHOLDS,
            background_cap: None,
        }
    }
}

impl GridSearchConfig {
    /// The full grid: sigma steps of 0.2 (CC, LLM) and 0.1 (KDE).
    pub fn full() -> Self {
        GridSearchConfig {
            sigma_cc: grid_values(5, 20, 1),
            sigma_llm: grid_values(5, 20, 1),
            sigma_kde: grid_values(10, 10, 1),
            ..Self::default()
        }
    }

    pub fn max_iterations(&self) -> usize {
        self.iterations.iter().copied().max().unwrap_or(0)
    }

    pub fn filters_for(&self, set: &str) -> Result<Vec<PostFilterSpec>> {
        expand_filter_families(set, &self.region_sizes, &self.radii)
    }

    /// Every detector cell in canonical order: CC, then LLM, then KDE.
    pub fn detectors(&self) -> Vec<DetectorSpec> {
        let mut out: Vec<DetectorSpec> = self.sigma_cc.iter().map(|&sigma| DetectorSpec::Cc { sigma }).collect();
        out.extend(self.sigma_llm.iter().map(|&sigma| DetectorSpec::Llm {
            sigma,
            threshold: self.llm_threshold,
        }));
        for &sigma_llm in &self.sigma_llm {
            for &sigma_kde in &self.sigma_kde {
                out.push(DetectorSpec::Kde {
                    sigma_llm,
                    sigma_kde,
                    threshold: self.llm_threshold,
                });
            }
        }
        out
    }

    /// Metrics with the configured tracking radius.
    pub fn criteria(&self) -> Vec<Criterion> {
        self.metrics
            .iter()
            .map(|m| match m {
                Criterion::Tracking { .. } => Criterion::Tracking {
                    radius: self.tracking_radius,
                },
                other => *other,
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.iterations.is_empty() || self.iterations.contains(&0) {
            return bad("iterations must be a non-empty list of positive counts".into());
        }
        if self.pool_size == 0 {
            return bad("pool_size must be positive".into());
        }
        if self.variants.is_empty() || self.filter_sets.is_empty() || self.metrics.is_empty() {
            return bad("variants, filter_sets and metrics must be non-empty".into());
        }
        for set in &self.filter_sets {
            self.filters_for(set)
                .map_err(|e| Error::Config(format!("filter set {set:?}: {e}")))?;
        }
        if self.sigma_cc.is_empty() && self.sigma_llm.is_empty() {
            return bad("no detector parameters".into());
        }
        if self.sigma_cc.iter().any(|&s| !(s > 0.0 && s < SIGMA_MAX))
            || self.sigma_llm.iter().any(|&s| !(0.0..SIGMA_MAX).contains(&s))
            || self.sigma_kde.iter().any(|&s| !(s > 0.0 && s < SIGMA_KDE_MAX))
        {
            return bad("sigma value outside its range".into());
        }
        if !(self.u > 0.0) || !(self.tracking_radius > 0.0) || !self.llm_threshold.is_finite() {
            return bad("u and tracking_radius must be positive, llm_threshold finite".into());
        }
        if !(1..u16::MAX as usize).contains(&self.max_thresholds) {
            return bad(format!("max_thresholds {} out of range", self.max_thresholds));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Starts from the coarse defaults (or the full grid with
    /// `full_grid = true`, which must come first) and overrides each key.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = GridSearchConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "full_grid" => {
                if parse_bool(value)? {
                    let keep = self.clone();
                    *self = GridSearchConfig {
                        sigma_cc: GridSearchConfig::full().sigma_cc,
                        sigma_llm: GridSearchConfig::full().sigma_llm,
                        sigma_kde: GridSearchConfig::full().sigma_kde,
                        ..keep
                    };
                }
            }
            "seed" => self.seed = parse_num(value)?,
            "iterations" => self.iterations = parse_list(value)?,
            "pool_size" => self.pool_size = parse_num(value)?,
            "variants" => self.variants = split_list(value).map(str::parse).collect::<Result<_>>()?,
            "filter_sets" => {
                self.filter_sets = split_list(value)
                    .map(|s| s.replace(',', "").to_ascii_uppercase())
                    .collect()
            }
            "region_sizes" => self.region_sizes = parse_list(value)?,
            "radii" => self.radii = parse_list(value)?,
            "sigma_cc" => self.sigma_cc = parse_reals(value)?,
            "sigma_llm" => self.sigma_llm = parse_reals(value)?,
            "sigma_kde" => self.sigma_kde = parse_reals(value)?,
            "llm_threshold" => self.llm_threshold = parse_num(value)?,
            "metrics" => self.metrics = split_list(value).map(str::parse).collect::<Result<_>>()?,
            "u" => self.u = parse_num(value)?,
            "tracking_radius" => self.tracking_radius = parse_num(value)?,
            "max_depth" => self.max_depth = parse_num(value)?,
            "max_thresholds" => self.max_thresholds = parse_num(value)?,
            "background_cap" => {
                self.background_cap = match value {
                    "" | "none" | "all" => None,
                    v => Some(parse_num(v)?),
                }
            }
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Flat text form that [`GridSearchConfig::parse`] reads back.
    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(", ");
        let reals = |v: &[f64]| join(v.iter().map(|x| format!("{x:?}")).collect());
        let ints = |v: &[usize]| join(v.iter().map(|x| x.to_string()).collect());
        let mut s = String::new();
        s += &format!("seed = {}\n", self.seed);
        s += &format!("iterations = {}\n", ints(&self.iterations));
        s += &format!("pool_size = {}\n", self.pool_size);
        s += &format!(
            "variants = {}\n",
            join(self.variants.iter().map(|v| v.to_string()).collect())
        );
        s += &format!("filter_sets = {}\n", self.filter_sets.join("; "));
        s += &format!("region_sizes = {}\n", ints(&self.region_sizes));
        s += &format!("radii = {}\n", ints(&self.radii));
        s += &format!("sigma_cc = {}\n", reals(&self.sigma_cc));
        s += &format!("sigma_llm = {}\n", reals(&self.sigma_llm));
        s += &format!("sigma_kde = {}\n", reals(&self.sigma_kde));
        s += &format!("llm_threshold = {:?}\n", self.llm_threshold);
        s += &format!(
            "metrics = {}\n",
            join(self.metrics.iter().map(|m| m.name().to_string()).collect())
        );
        s += &format!("u = {:?}\n", self.u);
        s += &format!("tracking_radius = {:?}\n", self.tracking_radius);
        s += &format!("max_depth = {}\n", self.max_depth);
        s += &format!("max_thresholds = {}\n", self.max_thresholds);
        s += &format!(
            "background_cap = {}\n",
            self.background_cap.map_or("none".to_string(), |c| c.to_string())
        );
        s
    }
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    let sep: &[char] = if value.contains(';') { &[';'] } else { &[',', ' '] };
    value.split(sep).map(str::trim).filter(|s| !s.is_empty())
}

fn parse_num<T: std::str::FromStr>(value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {value:?}")))
}

fn parse_bool(value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("expected a boolean, got {value:?}"))),
    }
}

fn parse_list<T: std::str::FromStr>(value: &str) -> Result<Vec<T>> {
    split_list(value).map(parse_num).collect()
}

/// A list of reals, or `start:step:stop` with `stop` included when hit.
fn parse_reals(value: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = value.split(':').collect();
    if parts.len() != 3 {
        return parse_list(value);
    }
    let (start, step, stop): (f64, f64, f64) = (parse_num(parts[0])?, parse_num(parts[1])?, parse_num(parts[2])?);
    if !(step > 0.0) || stop < start {
        return Err(Error::Config(format!("bad range {value:?}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| start + i as f64 * step)
        .map(|v| (v * 1e9).round() / 1e9)
        .collect())
}
