//! Post-processing of weak-hypothesis sign maps into ternary predictions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::components::{label_components, Connectivity};
use crate::ops::nearest_rank;
use crate::{Error, Result, StructuringElement};

/// Region sizes tried for `RegionGrow` when the search is not narrowed.
pub const REGION_SIZES: [usize; 9] = [1000, 1500, 2000, 2500, 3000, 3500, 4000, 4500, 5000];
/// Disk radii tried for erode, dilate and median.
pub const FILTER_RADII: [usize; 5] = [1, 2, 3, 4, 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PostFilterSpec {
    None,
    /// 4-connected positive regions with more than `k` pixels abstain.
    RegionGrow(usize),
    Erode(usize),
    Dilate(usize),
    Median(usize),
}

impl PostFilterSpec {
    pub fn validate(self) -> Result<()> {
        match self {
            PostFilterSpec::None => Ok(()),
            PostFilterSpec::RegionGrow(k) if k >= 1 => Ok(()),
            PostFilterSpec::Erode(r) | PostFilterSpec::Dilate(r) | PostFilterSpec::Median(r)
                if FILTER_RADII.contains(&r) =>
            {
                Ok(())
            }
            other => Err(Error::InvalidParameter(format!("post-filter {other} out of range"))),
        }
    }

    /// Family letter: `N`, `R`, `E`, `D` or `M`.
    pub fn family(self) -> char {
        match self {
            PostFilterSpec::None => 'N',
            PostFilterSpec::RegionGrow(_) => 'R',
            PostFilterSpec::Erode(_) => 'E',
            PostFilterSpec::Dilate(_) => 'D',
            PostFilterSpec::Median(_) => 'M',
        }
    }
}

impl fmt::Display for PostFilterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PostFilterSpec::None => write!(f, "N"),
            PostFilterSpec::RegionGrow(k) => write!(f, "R{k}"),
            PostFilterSpec::Erode(r) => write!(f, "E{r}"),
            PostFilterSpec::Dilate(r) => write!(f, "D{r}"),
            PostFilterSpec::Median(r) => write!(f, "M{r}"),
        }
    }
}

impl FromStr for PostFilterSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown post-filter {s:?}"));
        let s = s.trim();
        if s == "N" {
            return Ok(PostFilterSpec::None);
        }
        let (head, tail) = s.split_at(s.chars().next().ok_or_else(bad)?.len_utf8());
        let n: usize = tail.parse().map_err(|_| bad())?;
        let spec = match head {
            "R" => PostFilterSpec::RegionGrow(n),
            "E" => PostFilterSpec::Erode(n),
            "D" => PostFilterSpec::Dilate(n),
            "M" => PostFilterSpec::Median(n),
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl TryFrom<String> for PostFilterSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PostFilterSpec> for String {
    fn from(p: PostFilterSpec) -> String {
        p.to_string()
    }
}

/// Expands a family combination such as `"R,E,D,M"`, `"ED"` or `"N"` into
/// concrete filters using the given parameter lists.
pub fn expand_filter_families(families: &str, region_sizes: &[usize], radii: &[usize]) -> Result<Vec<PostFilterSpec>> {
    let mut out = Vec::new();
    let mut seen = Vec::new();
    for c in families.chars().filter(|c| !matches!(c, ',' | ' ' | '{' | '}')) {
        let c = c.to_ascii_uppercase();
        if seen.contains(&c) {
            continue;
        }
        seen.push(c);
        match c {
            'N' => out.push(PostFilterSpec::None),
            'R' => out.extend(region_sizes.iter().map(|&k| PostFilterSpec::RegionGrow(k))),
            'E' => out.extend(radii.iter().map(|&r| PostFilterSpec::Erode(r))),
            'D' => out.extend(radii.iter().map(|&r| PostFilterSpec::Dilate(r))),
            'M' => out.extend(radii.iter().map(|&r| PostFilterSpec::Median(r))),
            _ => return Err(Error::InvalidParameter(format!("unknown post-filter family {c:?}"))),
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidParameter("empty post-filter set".into()));
    }
    for f in &out {
        f.validate()?;
    }
    Ok(out)
}

/// Turns a binary positive mask into a ternary prediction map.
///
/// `RegionGrow` zeroes oversized 4-connected positive regions. Erode, dilate
/// and median filter the mask with a clipped disk; pixels set in both the
/// original and the filtered mask are `+1`, pixels unset in both are `-1`,
/// and pixels the filter changed abstain.
pub fn apply_post_filter(positive: &[bool], width: usize, height: usize, filter: PostFilterSpec) -> Vec<i8> {
    assert_eq!(positive.len(), width * height, "mask size");
    let sign = |p: bool| if p { 1 } else { -1 };
    match filter {
        PostFilterSpec::None => positive.iter().map(|&p| sign(p)).collect(),
        PostFilterSpec::RegionGrow(k) => {
            let comps = label_components(positive, width, height, Connectivity::Four);
            positive
                .iter()
                .zip(&comps.labels)
                .map(|(&p, &l)| match p {
                    false => -1,
                    true if comps.sizes[l as usize - 1] > k => 0,
                    true => 1,
                })
                .collect()
        }
        PostFilterSpec::Erode(r) | PostFilterSpec::Dilate(r) | PostFilterSpec::Median(r) => {
            let se = StructuringElement::disk(r);
            let mut out = Vec::with_capacity(positive.len());
            for y in 0..height as isize {
                for x in 0..width as isize {
                    let (mut n, mut set) = (0usize, 0usize);
                    for &(dx, dy) in se.offsets() {
                        let (sx, sy) = (x + dx, y + dy);
                        if sx < 0 || sy < 0 || sx >= width as isize || sy >= height as isize {
                            continue;
                        }
                        n += 1;
                        set += positive[sy as usize * width + sx as usize] as usize;
                    }
                    let filtered = match filter {
                        PostFilterSpec::Erode(_) => set == n,
                        PostFilterSpec::Dilate(_) => set > 0,
                        // the sorted footprint holds n - set zeros first
                        _ => nearest_rank(50.0, n) >= n - set,
                    };
                    let orig = positive[y as usize * width + x as usize];
                    out.push(match (orig, filtered) {
                        (true, true) => 1,
                        (false, false) => -1,
                        _ => 0,
                    });
                }
            }
            out
        }
    }
}
