// part1/part2 are families of ranges; some layouts have a single member
#![allow(clippy::single_range_in_vec_init)]

use std::ops::Range;

use num_traits::One;
use serde::{Deserialize, Serialize};

use super::regime::group_of;
use crate::error::{Error, Result};
use crate::model::{rational_str, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LayoutKind {
    /// `g` part-1 subfiles (subfile `i` missed by users with `k mod g = i`)
    /// followed by `g + 1` part-2 subfiles (missed by `k mod (g+1) = i`).
    Interpolate { g: usize },
    /// `K` part-1 subfiles (subfile `k` missed only by user `k`) followed by
    /// one part cached by everyone.
    Top,
    /// Every user caches the leading `cached` coordinates.
    Prefix { cached: usize },
}

/// Column ranges of every subfile of `w`.
///
/// Ranges are consecutive, disjoint and cover `0..F`. Part 1 comes first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionLayout {
    pub kind: LayoutKind,
    #[serde(with = "rational_str")]
    pub alpha: Rational,
    pub symbols: usize,
    pub part1: Vec<Range<usize>>,
    pub part2: Vec<Range<usize>>,
}

fn exact_size(fraction: Rational, symbols: usize, what: &str) -> Result<usize> {
    let size = fraction * symbols as i64;
    if !size.is_integer() {
        return Err(Error::Configuration(format!(
            "{what} = {fraction} * F is not an integer for F = {symbols}"
        )));
    }
    Ok(size.to_integer() as usize)
}

fn consecutive(start: usize, count: usize, size: usize) -> Vec<Range<usize>> {
    (0..count)
        .map(|i| start + i * size..start + (i + 1) * size)
        .collect()
}

impl PartitionLayout {
    pub fn interpolate(g: usize, alpha: Rational, symbols: usize) -> Result<Self> {
        if g == 0 {
            return Err(Error::Configuration("g must be positive".into()));
        }
        let gi = g as i64;
        let s1 = exact_size(alpha / gi, symbols, "alpha/g")?;
        let s2 = exact_size((Rational::one() - alpha) / (gi + 1), symbols, "(1-alpha)/(g+1)")?;
        let part1 = consecutive(0, g, s1);
        let part2 = consecutive(g * s1, g + 1, s2);
        Ok(Self {
            kind: LayoutKind::Interpolate { g },
            alpha,
            symbols,
            part1,
            part2,
        })
    }

    pub fn top(users: usize, alpha: Rational, symbols: usize) -> Result<Self> {
        let s1 = exact_size(alpha / users as i64, symbols, "alpha/K")?;
        let s2 = exact_size(Rational::one() - alpha, symbols, "1-alpha")?;
        let part1 = consecutive(0, users, s1);
        let part2 = vec![users * s1..users * s1 + s2];
        Ok(Self {
            kind: LayoutKind::Top,
            alpha,
            symbols,
            part1,
            part2,
        })
    }

    pub fn prefix(cached: usize, symbols: usize) -> Result<Self> {
        if cached > symbols {
            return Err(Error::Configuration(format!(
                "cannot cache {cached} of {symbols} symbols"
            )));
        }
        Ok(Self {
            kind: LayoutKind::Prefix { cached },
            alpha: Rational::one(),
            symbols,
            part1: vec![cached..symbols],
            part2: vec![0..cached],
        })
    }

    /// Part-1 subfile size (`alpha F / g`, `alpha F / K`, or the uncached tail).
    pub fn part1_size(&self) -> usize {
        self.part1.first().map_or(0, Range::len)
    }

    pub fn part2_size(&self) -> usize {
        self.part2.first().map_or(0, Range::len)
    }

    /// Library coordinates stored by `user`, in increasing order.
    pub fn cached_by(&self, user: usize) -> Vec<usize> {
        let ranges: Vec<&Range<usize>> = match self.kind {
            LayoutKind::Interpolate { g } => self
                .part1
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != group_of(user, g))
                .map(|(_, r)| r)
                .chain(
                    self.part2
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != group_of(user, g + 1))
                        .map(|(_, r)| r),
                )
                .collect(),
            LayoutKind::Top => self
                .part1
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != user)
                .map(|(_, r)| r)
                .chain(self.part2.iter())
                .collect(),
            LayoutKind::Prefix { .. } => self.part2.iter().collect(),
        };
        let mut idx: Vec<usize> = ranges.into_iter().flat_map(Clone::clone).collect();
        idx.sort_unstable();
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn covers(layout: &PartitionLayout) -> bool {
        let mut all: Vec<&Range<usize>> = layout.part1.iter().chain(&layout.part2).collect();
        all.sort_by_key(|r| r.start);
        let mut next = 0;
        for r in all {
            if r.start != next {
                return false;
            }
            next = r.end;
        }
        next == layout.symbols
    }

    #[test]
    fn example_one_layout() {
        let l = PartitionLayout::interpolate(2, Rational::new(1, 12), 72).unwrap();
        assert_eq!(l.part1, vec![0..3, 3..6]);
        assert_eq!(l.part2, vec![6..28, 28..50, 50..72]);
        assert!(covers(&l));
        // user 1 (0-based 0) caches w1_{1} and w2_{1,2}, w2_{1,3}: 3 + 44 = 47
        let c = l.cached_by(0);
        assert_eq!(c.len(), 47);
        assert!(c.contains(&3) && !c.contains(&0));
        assert!(!c.contains(&6) && c.contains(&28) && c.contains(&50));
    }

    #[test]
    fn rejects_non_integral_sizes() {
        assert!(PartitionLayout::interpolate(2, Rational::new(1, 12), 36).is_err());
        assert!(PartitionLayout::top(6, Rational::new(1, 2), 6).is_err());
        assert!(PartitionLayout::prefix(5, 4).is_err());
    }

    #[test]
    fn top_and_prefix() {
        let t = PartitionLayout::top(3, Rational::new(1, 2), 12).unwrap();
        assert_eq!(t.part1, vec![0..2, 2..4, 4..6]);
        assert_eq!(t.part2, vec![6..12]);
        assert!(covers(&t));
        assert_eq!(t.cached_by(1), vec![0, 1, 4, 5, 6, 7, 8, 9, 10, 11]);
        let p = PartitionLayout::prefix(3, 5).unwrap();
        assert!(covers(&p));
        assert_eq!(p.cached_by(4), vec![0, 1, 2]);
    }

    #[test]
    fn g_one_caches_no_part1() {
        let l = PartitionLayout::interpolate(1, Rational::new(1, 1), 4).unwrap();
        assert!(l.cached_by(0).is_empty());
        assert_eq!(l.part2_size(), 0);
    }
}
