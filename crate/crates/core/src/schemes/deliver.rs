use std::ops::Range;

use super::layout::{LayoutKind, PartitionLayout};
use super::multicast::GroupMulticast;
use super::regime::{ceil_div, group_of, residue_groups};
use super::transform::{build_transforms, UserTransform};
use super::{SchemePlan, Variant};
use crate::error::{Error, Result};
use crate::field::FieldMatrix;
use crate::model::{DemandSet, Library, SystemConfig, Transcript};

pub const LABEL_UNICAST: &str = "unicast";
pub const LABEL_FULL: &str = "full-library";
pub const LABEL_CORNER: &str = "corner-multicast";
pub const LABEL_PART1: &str = "part1-multicast";
pub const LABEL_VIRTUAL: &str = "virtual-step";
pub const LABEL_STEP1: &str = "rho2-step1";
pub const LABEL_TOP: &str = "top-multicast";

pub(crate) fn unicast_label(user: usize) -> String {
    format!("{LABEL_UNICAST}:{user}")
}

pub(crate) fn step1_label(batch: usize) -> String {
    format!("{LABEL_STEP1}:{batch}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Unicast,
    FullLibrary,
}

type Blocks = Vec<(String, Vec<Vec<u64>>)>;

fn columns(d: &FieldMatrix, range: &Range<usize>) -> FieldMatrix {
    d.block(0..d.rows(), range.clone())
}

/// `user`'s demand columns on the part-1 subfile it misses.
pub(crate) fn part1_block(demands: &DemandSet, layout: &PartitionLayout, g: usize, user: usize) -> FieldMatrix {
    columns(demands.matrix(user), &layout.part1[group_of(user, g)])
}

/// `user`'s demand columns on the part-2 subfile it misses.
pub(crate) fn part2_block(demands: &DemandSet, layout: &PartitionLayout, g: usize, user: usize) -> FieldMatrix {
    columns(demands.matrix(user), &layout.part2[group_of(user, g + 1)])
}

/// Multicast over the `g` part-1 subfiles, users grouped by `k mod g`.
pub(crate) fn part1_multicast(layout: &PartitionLayout, g: usize, users: usize, rows: usize, force_raw: bool) -> GroupMulticast<'_> {
    GroupMulticast {
        subfiles: &layout.part1,
        groups: residue_groups(users, g),
        slots: ceil_div(users, g),
        rows_per_user: rows,
        force_raw,
    }
}

/// Virtual-user multicast over the `g + 1` part-2 subfiles, users grouped by `k mod (g+1)`.
pub(crate) fn virtual_multicast(layout: &PartitionLayout, g: usize, users: usize, rows: usize) -> GroupMulticast<'_> {
    GroupMulticast {
        subfiles: &layout.part2,
        groups: residue_groups(users, g + 1),
        slots: ceil_div(users, g + 1),
        rows_per_user: rows,
        force_raw: false,
    }
}

/// Multicast over the `K` top-branch subfiles, one user per group.
pub(crate) fn top_multicast(layout: &PartitionLayout, users: usize, rows: usize) -> GroupMulticast<'_> {
    GroupMulticast {
        subfiles: &layout.part1,
        groups: (0..users).map(|u| vec![u]).collect(),
        slots: 1,
        rows_per_user: rows,
        force_raw: false,
    }
}

fn check_inputs(config: &SystemConfig, demands: &DemandSet, library: &Library) -> Result<()> {
    demands.check(config)?;
    if library.len() != config.symbols {
        return Err(Error::Shape(format!(
            "library has {} symbols, F = {}",
            library.len(),
            config.symbols
        )));
    }
    Ok(())
}

fn interpolation_g(plan: &SchemePlan) -> Result<usize> {
    match plan.layout.kind {
        LayoutKind::Interpolate { g } => Ok(g),
        _ => Err(Error::Configuration(format!(
            "{} needs the interpolation layout",
            plan.variant
        ))),
    }
}

fn expect_variant(plan: &SchemePlan, ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Configuration(format!(
            "plan for {} used with the wrong delivery",
            plan.variant
        )))
    }
}

/// Delivery for any plan.
pub fn deliver(
    plan: &SchemePlan,
    config: &SystemConfig,
    demands: &DemandSet,
    library: &Library,
) -> Result<Transcript> {
    match plan.variant {
        Variant::BaselineUnicast => deliver_baseline(config, demands, library, BaselineKind::Unicast),
        Variant::BaselineFull => deliver_baseline(config, demands, library, BaselineKind::FullLibrary),
        Variant::Corner(_) => corner_with_plan(plan, config, demands, library),
        Variant::Rho1 => deliver_rho1(plan, config, demands, library),
        Variant::Rho2 => deliver_rho2(plan, config, demands, library),
        Variant::Rho3 => deliver_rho3(config, demands, library),
    }
}

/// Unicast of every `D_k w`, or the uncached tail of the library.
pub fn deliver_baseline(
    config: &SystemConfig,
    demands: &DemandSet,
    library: &Library,
    kind: BaselineKind,
) -> Result<Transcript> {
    check_inputs(config, demands, library)?;
    let blocks: Blocks = match kind {
        BaselineKind::Unicast => demands
            .matrices()
            .iter()
            .enumerate()
            .map(|(k, d)| (unicast_label(k), d.to_rows()))
            .collect(),
        BaselineKind::FullLibrary => {
            let rows = (config.cache_size..config.symbols)
                .map(|c| {
                    let mut row = vec![0; config.symbols];
                    row[c] = 1;
                    row
                })
                .collect();
            vec![(LABEL_FULL.to_string(), rows)]
        }
    };
    Transcript::encode(config.field(), library, blocks)
}

/// Single multicast for the corner point `mu = 1 - 1/g`.
pub fn deliver_corner_grouped(
    config: &SystemConfig,
    demands: &DemandSet,
    library: &Library,
    g: usize,
) -> Result<Transcript> {
    let plan = SchemePlan::new(config, Variant::Corner(g))?;
    corner_with_plan(&plan, config, demands, library)
}

fn corner_with_plan(
    plan: &SchemePlan,
    config: &SystemConfig,
    demands: &DemandSet,
    library: &Library,
) -> Result<Transcript> {
    expect_variant(plan, matches!(plan.variant, Variant::Corner(_)))?;
    check_inputs(config, demands, library)?;
    let g = interpolation_g(plan)?;
    let mc = part1_multicast(&plan.layout, g, config.users, config.demand_rows, false);
    let rows = mc.encode(config.symbols, |u| part1_block(demands, &plan.layout, g, u));
    Transcript::encode(config.field(), library, vec![(LABEL_CORNER.into(), rows)])
}

/// Part 1 recovered raw by every user, part 2 through virtual users.
pub fn deliver_rho1(
    plan: &SchemePlan,
    config: &SystemConfig,
    demands: &DemandSet,
    library: &Library,
) -> Result<Transcript> {
    expect_variant(plan, plan.variant == Variant::Rho1)?;
    check_inputs(config, demands, library)?;
    let g = interpolation_g(plan)?;
    let layout = &plan.layout;
    let users = config.users;

    let part1 = part1_multicast(layout, g, users, config.demand_rows, true);
    let part1_rows = part1.encode(config.symbols, |u| part1_block(demands, layout, g, u));
    let virt = virtual_multicast(layout, g, users, config.demand_rows);
    let virt_rows = virt.encode(config.symbols, |u| part2_block(demands, layout, g, u));

    Transcript::encode(
        config.field(),
        library,
        vec![
            (LABEL_PART1.into(), part1_rows),
            (LABEL_VIRTUAL.into(), virt_rows),
        ],
    )
}

/// Top `min(alpha F/g, L)` rows of `T_k [A | C]` written over the full library.
pub(crate) fn step1_rows(layout: &PartitionLayout, g: usize, user: usize, t: &UserTransform) -> Vec<Vec<u64>> {
    let r1 = &layout.part1[group_of(user, g)];
    let r2 = &layout.part2[group_of(user, g + 1)];
    (0..t.top)
        .map(|r| {
            let src = t.transformed.row(r);
            let mut row = vec![0; layout.symbols];
            row[r1.clone()].copy_from_slice(&src[..t.part1_width]);
            row[r2.clone()].copy_from_slice(&src[t.part1_width..]);
            row
        })
        .collect()
}

/// Two-step delivery on transformed demands.
pub fn deliver_rho2(
    plan: &SchemePlan,
    config: &SystemConfig,
    demands: &DemandSet,
    library: &Library,
) -> Result<Transcript> {
    expect_variant(plan, plan.variant == Variant::Rho2)?;
    check_inputs(config, demands, library)?;
    let g = interpolation_g(plan)?;
    let layout = &plan.layout;
    let users = config.users;
    let f = config.field();
    let transforms = build_transforms(layout, demands)?;
    let top = transforms[0].top;
    let bottom = transforms[0].bottom;

    let mut blocks: Blocks = Vec::new();
    for batch in 0..ceil_div(users, g) {
        let mut sum = vec![vec![0u64; config.symbols]; top];
        for user in (batch * g..(batch + 1) * g).filter(|&u| u < users) {
            for (acc, row) in sum.iter_mut().zip(step1_rows(layout, g, user, &transforms[user])) {
                for (a, x) in acc.iter_mut().zip(row) {
                    *a = f.add(*a, x);
                }
            }
        }
        blocks.push((step1_label(batch), sum));
    }

    let virt = virtual_multicast(layout, g, users, bottom);
    blocks.push((
        LABEL_VIRTUAL.into(),
        virt.encode(config.symbols, |u| transforms[u].bottom_block()),
    ));
    Transcript::encode(f, library, blocks)
}

/// Corner-`K` multicast with an extra part cached by everyone.
pub fn deliver_rho3(config: &SystemConfig, demands: &DemandSet, library: &Library) -> Result<Transcript> {
    let plan = SchemePlan::new(config, Variant::Rho3)?;
    check_inputs(config, demands, library)?;
    let layout = &plan.layout;
    let mc = top_multicast(layout, config.users, config.demand_rows);
    let rows = mc.encode(config.symbols, |u| columns(demands.matrix(u), &layout.part1[u]));
    Transcript::encode(config.field(), library, vec![(LABEL_TOP.into(), rows)])
}
