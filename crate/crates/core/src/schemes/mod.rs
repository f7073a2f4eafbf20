//! Placement, delivery and decoding for every constructive scheme.
//!
//! Users are indexed from zero. A user `k` belongs to residue class `k mod g`
//! for part 1 and `k mod (g+1)` for part 2; consecutive batches `k / g` drive
//! the first step of the two-step delivery.

mod decode;
mod deliver;
mod layout;
mod multicast;
mod regime;
mod transform;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use decode::{decode, decode_all};
pub use deliver::{
    deliver, deliver_baseline, deliver_corner_grouped, deliver_rho1, deliver_rho2, deliver_rho3,
    BaselineKind,
};
pub use layout::{LayoutKind, PartitionLayout};
pub use regime::{ceil_div, choose_regime, group_of, peers, residue_groups, Regime};
pub use transform::{build_transforms, UserTransform};

use crate::error::{Error, Result};
use crate::model::{CacheContents, Library, SystemConfig, UserCache};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    BaselineUnicast,
    BaselineFull,
    /// Grouped corner scheme with the given number of groups.
    Corner(usize),
    Rho1,
    Rho2,
    Rho3,
}

impl Variant {
    /// Short name without parameters.
    pub fn name(&self) -> &'static str {
        match self {
            Variant::BaselineUnicast => "baseline-unicast",
            Variant::BaselineFull => "baseline-full",
            Variant::Corner(_) => "corner",
            Variant::Rho1 => "rho1",
            Variant::Rho2 => "rho2",
            Variant::Rho3 => "rho3",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Corner(g) => write!(f, "corner:{g}"),
            v => f.write_str(v.name()),
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "baseline-unicast" => Variant::BaselineUnicast,
            "baseline-full" => Variant::BaselineFull,
            "rho1" => Variant::Rho1,
            "rho2" => Variant::Rho2,
            "rho3" => Variant::Rho3,
            _ => {
                let g = s
                    .strip_prefix("corner:")
                    .and_then(|g| g.parse::<usize>().ok())
                    .ok_or_else(|| Error::Domain(format!("unknown variant `{s}`")))?;
                Variant::Corner(g)
            }
        })
    }
}

impl Serialize for Variant {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Variant {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// A variant bound to a concrete configuration and column layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemePlan {
    pub variant: Variant,
    pub users: usize,
    pub layout: PartitionLayout,
}

impl SchemePlan {
    /// Checks feasibility of `variant` for `config` and fixes the layout.
    pub fn new(config: &SystemConfig, variant: Variant) -> Result<Self> {
        let users = config.users;
        let f = config.symbols;
        let layout = match variant {
            Variant::BaselineUnicast => PartitionLayout::prefix(0, f)?,
            Variant::BaselineFull => PartitionLayout::prefix(config.cache_size, f)?,
            Variant::Corner(g) => {
                if g == 0 || g > users {
                    return Err(Error::Configuration(format!(
                        "corner scheme needs 1 <= g <= K, got g = {g}"
                    )));
                }
                if !f.is_multiple_of(g) {
                    return Err(Error::Configuration(format!(
                        "corner scheme with g = {g} needs g | F, F = {f}"
                    )));
                }
                if (g - 1) * (f / g) > config.cache_size {
                    return Err(Error::Configuration(format!(
                        "corner scheme with g = {g} stores {} symbols, M = {}",
                        (g - 1) * (f / g),
                        config.cache_size
                    )));
                }
                PartitionLayout::interpolate(g, num_traits::One::one(), f)?
            }
            Variant::Rho1 | Variant::Rho2 => match choose_regime(users, config.mu())? {
                Regime::Interpolate { g, alpha } => PartitionLayout::interpolate(g, alpha, f)?,
                r @ Regime::Top { .. } => {
                    return Err(Error::Configuration(format!(
                        "{variant} needs the interpolation regime, mu = {} is in {r}",
                        config.mu()
                    )))
                }
            },
            Variant::Rho3 => match choose_regime(users, config.mu())? {
                Regime::Top { alpha } => PartitionLayout::top(users, alpha, f)?,
                r @ Regime::Interpolate { .. } => {
                    return Err(Error::Configuration(format!(
                        "rho3 needs the top regime, mu = {} is in {r}",
                        config.mu()
                    )))
                }
            },
        };
        Ok(Self {
            variant,
            users,
            layout,
        })
    }

    /// `g` of the interpolation layout, if any.
    pub fn g(&self) -> Option<usize> {
        match self.layout.kind {
            LayoutKind::Interpolate { g } => Some(g),
            _ => None,
        }
    }
}

/// Uncoded placement: each user copies the coordinates its layout assigns it.
pub fn place(plan: &SchemePlan, config: &SystemConfig, library: &Library) -> Result<CacheContents> {
    if library.len() != config.symbols || plan.layout.symbols != config.symbols {
        return Err(Error::Configuration(format!(
            "library has {} symbols, layout {}, config {}",
            library.len(),
            plan.layout.symbols,
            config.symbols
        )));
    }
    let users = (0..config.users)
        .map(|k| {
            let indices = if plan.variant == Variant::BaselineUnicast {
                Vec::new()
            } else {
                plan.layout.cached_by(k)
            };
            let values = indices.iter().map(|&i| library.symbols[i]).collect();
            UserCache { indices, values }
        })
        .collect();
    let caches = CacheContents { users };
    if caches.max_usage() > config.cache_size {
        return Err(Error::Configuration(format!(
            "placement stores {} symbols, M = {}",
            caches.max_usage(),
            config.cache_size
        )));
    }
    Ok(caches)
}
