//! Detection files: `image_id,x,y,confidence` with a header row.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use locboost_core::detect::Detection;

pub fn image_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn to_csv(rows: &[(String, Detection)]) -> String {
    let mut s = String::from("image_id,x,y,confidence\n");
    for (id, d) in rows {
        s += &format!("{id},{:?},{:?},{:?}\n", d.x, d.y, d.confidence);
    }
    s
}

pub fn parse_csv(text: &str) -> Result<BTreeMap<String, Vec<Detection>>> {
    let mut out: BTreeMap<String, Vec<Detection>> = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (n == 0 && line.starts_with("image_id")) {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            bail!("detections line {}: expected image_id,x,y,confidence", n + 1);
        }
        let num = |s: &str| -> Result<f64> {
            let v: f64 = s
                .parse()
                .with_context(|| format!("detections line {}: bad number {s:?}", n + 1))?;
            if !v.is_finite() {
                bail!("detections line {}: non-finite value", n + 1);
            }
            Ok(v)
        };
        out.entry(cols[0].to_string()).or_default().push(Detection {
            x: num(cols[1])?,
            y: num(cols[2])?,
            confidence: num(cols[3])?,
        });
    }
    Ok(out)
}
