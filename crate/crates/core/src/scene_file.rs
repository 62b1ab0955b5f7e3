//! JSON scene documents.
//!
//! ```json
//! {"dimension": 2, "coordinates": ["t", "x"],
//!  "metric": [["-1", "0"], [null, "1"]], "flow": ["1", "0"],
//!  "parameters": {}, "domain": {"min": [-1, -1], "max": [1, 1]}}
//! ```
//!
//! Metric rows may list all `n` entries or only those from the diagonal on.
//! The upper triangle is authoritative; a lower entry is `null` or repeats
//! the mirrored text exactly.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expr::Params;
use crate::geometry::{DomainBox, Scene};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDocument {
    #[serde(default)]
    name: Option<String>,
    dimension: usize,
    coordinates: Vec<String>,
    metric: Vec<Vec<Option<String>>>,
    flow: Vec<String>,
    #[serde(default)]
    parameters: Params,
    #[serde(default)]
    kappa: Option<f64>,
    #[serde(default)]
    domain: Option<DomainBox>,
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let fallback = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scene").to_string();
    parse_scene(&text, &fallback)
}

/// Parses a scene document; `fallback_name` is used when it has no `name`.
pub fn parse_scene(text: &str, fallback_name: &str) -> Result<Scene> {
    let doc: SceneDocument = serde_json::from_str(text).map_err(|e| Error::schema("document", e.to_string()))?;
    let n = doc.dimension;
    if doc.coordinates.len() != n {
        return Err(Error::schema(
            "coordinates",
            format!("dimension is {n} but {} coordinates are listed", doc.coordinates.len()),
        ));
    }
    if doc.flow.len() != n {
        return Err(Error::schema("flow", format!("expected {n} components, found {}", doc.flow.len())));
    }
    if doc.metric.len() != n {
        return Err(Error::schema("metric", format!("expected {n} rows, found {}", doc.metric.len())));
    }
    let upper = upper_triangle(&doc.metric, n)?;
    Scene::new(
        doc.name.unwrap_or_else(|| fallback_name.to_string()),
        doc.coordinates,
        &upper,
        &doc.flow,
        doc.parameters,
        doc.kappa,
        doc.domain,
    )
}

fn upper_triangle(rows: &[Vec<Option<String>>], n: usize) -> Result<Vec<Vec<String>>> {
    let entry = |m: usize, nu: usize| -> Option<&Option<String>> {
        let row = &rows[m];
        if row.len() == n {
            row.get(nu)
        } else {
            nu.checked_sub(m).and_then(|k| row.get(k))
        }
    };
    for (m, row) in rows.iter().enumerate() {
        if row.len() != n && row.len() != n - m {
            return Err(Error::schema(
                format!("metric[{m}]"),
                format!("expected {n} or {} entries, found {}", n - m, row.len()),
            ));
        }
    }
    let mut upper = Vec::with_capacity(n);
    for m in 0..n {
        let mut row = Vec::with_capacity(n - m);
        for nu in m..n {
            match entry(m, nu) {
                Some(Some(text)) => row.push(text.clone()),
                _ => return Err(Error::schema(format!("metric[{m}][{nu}]"), "upper-triangle entry is missing")),
            }
        }
        upper.push(row);
    }
    for m in 0..n {
        if rows[m].len() != n {
            continue;
        }
        for nu in 0..m {
            if let Some(Some(text)) = entry(m, nu) {
                if *text != upper[nu][m - nu] {
                    return Err(Error::schema(
                        format!("metric[{m}][{nu}]"),
                        format!("`{text}` differs from metric[{nu}][{m}] = `{}`", upper[nu][m - nu]),
                    ));
                }
            }
        }
    }
    Ok(upper)
}
