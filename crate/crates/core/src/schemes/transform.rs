use serde::Serialize;

use super::layout::{LayoutKind, PartitionLayout};
use super::regime::group_of;
use crate::error::{Error, Result};
use crate::field::FieldMatrix;
use crate::model::DemandSet;

/// Invertible `L x L` row transform of one user's residual demand.
///
/// Applied to `[A | C]`, where `A` and `C` are the user's demand columns on
/// its missing part-1 and part-2 subfiles, the last `bottom` rows have an
/// all-zero `A` part.
#[derive(Debug, Clone, Serialize)]
pub struct UserTransform {
    pub transform: FieldMatrix,
    pub inverse: FieldMatrix,
    /// `min(alpha F / g, L)`
    pub top: usize,
    /// `L - top`
    pub bottom: usize,
    /// `transform * [A | C]`; the first `part1_width` columns are the `A` part.
    pub transformed: FieldMatrix,
    pub part1_width: usize,
}

impl UserTransform {
    /// Rows `top..L` restricted to the part-2 columns.
    pub fn bottom_block(&self) -> FieldMatrix {
        let l = self.transformed.rows();
        self.transformed
            .block(self.top..l, self.part1_width..self.transformed.cols())
    }
}

/// `[A | C]` for `user`: demand columns on the two subfiles it does not cache.
pub(crate) fn residual_demand(
    layout: &PartitionLayout,
    demands: &DemandSet,
    user: usize,
) -> Result<FieldMatrix> {
    let LayoutKind::Interpolate { g } = layout.kind else {
        return Err(Error::Configuration(
            "demand transforms need the interpolation layout".into(),
        ));
    };
    let d = demands.matrix(user);
    let a = d.block(0..d.rows(), layout.part1[group_of(user, g)].clone());
    let c = d.block(0..d.rows(), layout.part2[group_of(user, g + 1)].clone());
    a.hstack(&c)
}

/// One transform per user, from the RREF of the user's part-1 demand block.
///
/// RREF places the `L - rank(A)` zero rows of `T A` at the bottom, and
/// `rank(A) <= min(alpha F/g, L)`, so the fixed split always holds.
pub fn build_transforms(layout: &PartitionLayout, demands: &DemandSet) -> Result<Vec<UserTransform>> {
    (0..demands.users())
        .map(|user| {
            let residual = residual_demand(layout, demands, user)?;
            let l = residual.rows();
            let part1_width = layout.part1_size();
            let a = residual.block(0..l, 0..part1_width);
            let rref = a.rref_with_transform();
            let transform = rref.transform;
            let inverse = transform.invert()?;
            let top = part1_width.min(l);
            let transformed = transform.mat_mul(&residual)?;
            Ok(UserTransform {
                transform,
                inverse,
                top,
                bottom: l - top,
                transformed,
                part1_width,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{random_instance, Rational, SystemConfig};

    #[test]
    fn example_one_split() {
        let config = SystemConfig::new(6, 72, 6, 2, 47).unwrap();
        let layout = PartitionLayout::interpolate(2, Rational::new(1, 12), 72).unwrap();
        let (_, d) = random_instance(&config, 11);
        for t in build_transforms(&layout, &d).unwrap() {
            assert_eq!((t.top, t.bottom), (3, 3));
            assert_eq!(t.transform.rows(), 6);
            let a_part = t.transformed.block(3..6, 0..3);
            assert!(a_part.is_zero());
            assert_eq!(
                t.transform.mat_mul(&t.inverse).unwrap(),
                FieldMatrix::identity(d.field(), 6)
            );
        }
    }

    #[test]
    fn wide_part1_has_empty_bottom() {
        // alpha F / g = 6 >= L = 2
        let config = SystemConfig::new(3, 12, 2, 3, 6).unwrap();
        let layout = PartitionLayout::interpolate(2, Rational::new(1, 1), 12).unwrap();
        let (_, d) = random_instance(&config, 1);
        for t in build_transforms(&layout, &d).unwrap() {
            assert_eq!((t.top, t.bottom), (2, 0));
            assert_eq!(t.bottom_block().rows(), 0);
        }
    }

    #[test]
    fn zero_part1_demand_gives_identity() {
        let config = SystemConfig::new(2, 6, 2, 2, 1).unwrap();
        let layout = PartitionLayout::interpolate(1, Rational::new(1, 3), 6).unwrap();
        let d = DemandSet::new(config.field(), vec![FieldMatrix::zeros(config.field(), 2, 6); 2])
            .unwrap();
        for t in build_transforms(&layout, &d).unwrap() {
            assert_eq!(t.transform, FieldMatrix::identity(config.field(), 2));
            assert_eq!((t.top, t.bottom), (2, 0));
        }
    }

    #[test]
    fn rejects_other_layouts() {
        let config = SystemConfig::new(2, 4, 1, 2, 2).unwrap();
        let layout = PartitionLayout::prefix(2, 4).unwrap();
        let (_, d) = random_instance(&config, 1);
        assert!(build_transforms(&layout, &d).is_err());
    }
}
