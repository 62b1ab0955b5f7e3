//! Deterministic sample point sets over a coordinate box.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DomainBox;

/// Generator identifier recorded in reports.
pub const RNG_ALGORITHM: &str = "chacha8-rand_chacha-0.3/seed_from_u64; u = (next_u64 >> 11) * 2^-53";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "size")]
pub enum PlanKind {
    /// `count` uniform points.
    Random(usize),
    /// `resolution` points per axis, endpoints included.
    Grid(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub kind: PlanKind,
    pub domain: DomainBox,
    pub seed: u64,
}

impl PlanKind {
    /// Parses `random:N` or `grid:R`.
    pub fn parse(text: &str) -> Result<PlanKind> {
        let bad = || Error::schema("points", format!("expected random:N or grid:R, found `{text}`"));
        let (kind, size) = text.split_once(':').ok_or_else(bad)?;
        let size: usize = size.trim().parse().map_err(|_| bad())?;
        match kind.trim() {
            "random" => Ok(PlanKind::Random(size)),
            "grid" => Ok(PlanKind::Grid(size)),
            _ => Err(bad()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            PlanKind::Random(n) => format!("random:{n}"),
            PlanKind::Grid(r) => format!("grid:{r}"),
        }
    }
}

/// Uniform in `[0, 1)` with 53 random bits.
pub fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl SamplePlan {
    pub fn new(kind: PlanKind, domain: DomainBox, seed: u64) -> SamplePlan {
        SamplePlan { kind, domain, seed }
    }

    /// The point sequence; identical for identical plans.
    pub fn points(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.domain.dim();
        let (lo, hi) = (&self.domain.min, &self.domain.max);
        match self.kind {
            PlanKind::Random(count) => {
                if count == 0 {
                    return Err(Error::schema("points", "sample plan is empty"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                Ok((0..count)
                    .map(|_| (0..n).map(|a| lo[a] + (hi[a] - lo[a]) * unit_f64(&mut rng)).collect())
                    .collect())
            }
            PlanKind::Grid(res) => {
                if res == 0 {
                    return Err(Error::schema("points", "sample plan is empty"));
                }
                let total = res
                    .checked_pow(n as u32)
                    .filter(|t| *t <= 1_000_000)
                    .ok_or_else(|| Error::schema("points", format!("grid:{res} in {n} dimensions is too large")))?;
                let axis = |a: usize, k: usize| {
                    if res == 1 {
                        0.5 * (lo[a] + hi[a])
                    } else {
                        lo[a] + (hi[a] - lo[a]) * k as f64 / (res - 1) as f64
                    }
                };
                Ok((0..total)
                    .map(|mut idx| {
                        let mut p = vec![0.0; n];
                        for a in (0..n).rev() {
                            p[a] = axis(a, idx % res);
                            idx /= res;
                        }
                        p
                    })
                    .collect())
            }
        }
    }
}
