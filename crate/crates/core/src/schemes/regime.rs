use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{rational_str, Rational};

/// Memory-sharing regime of a cache fraction.
///
/// `Interpolate { g, alpha }` covers `mu = alpha (g-1)/g + (1-alpha) g/(g+1)` with
/// `g` in `1..K`; `Top { alpha }` covers `mu = alpha (K-1)/K + (1-alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "branch", rename_all = "kebab-case")]
pub enum Regime {
    Interpolate {
        g: usize,
        #[serde(with = "rational_str")]
        alpha: Rational,
    },
    Top {
        #[serde(with = "rational_str")]
        alpha: Rational,
    },
}

impl Regime {
    pub fn alpha(&self) -> Rational {
        match *self {
            Regime::Interpolate { alpha, .. } | Regime::Top { alpha } => alpha,
        }
    }

    /// Group parameter; the top branch reports `K`.
    pub fn groups(&self, users: usize) -> usize {
        match *self {
            Regime::Interpolate { g, .. } => g,
            Regime::Top { .. } => users,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Interpolate { g, alpha } => write!(f, "interpolate(g={g}, alpha={alpha})"),
            Regime::Top { alpha } => write!(f, "top(alpha={alpha})"),
        }
    }
}

/// Locates `mu` between consecutive corner points.
///
/// On a shared boundary `mu = (g-1)/g` the larger `g` is chosen (with
/// `alpha = 1`), and `mu = (K-1)/K` goes to the top branch.
pub fn choose_regime(users: usize, mu: Rational) -> Result<Regime> {
    if users == 0 {
        return Err(Error::Domain("at least one user is required".into()));
    }
    if mu < Rational::zero() || mu > Rational::one() {
        return Err(Error::Domain(format!("mu = {mu} is outside [0, 1]")));
    }
    let k = users as i64;
    let top_start = Rational::new(k - 1, k);
    if mu >= top_start {
        return Ok(Regime::Top {
            alpha: (Rational::one() - mu) * k,
        });
    }
    // largest g in [K-1] with (g-1)/g <= mu
    let g = (1..users as i64)
        .rev()
        .find(|&g| Rational::new(g - 1, g) <= mu)
        .expect("g = 1 always qualifies");
    let alpha = Rational::from_integer(g * g) - mu * (g * (g + 1));
    debug_assert!(alpha >= Rational::zero() && alpha <= Rational::one());
    Ok(Regime::Interpolate {
        g: g as usize,
        alpha,
    })
}

/// Zero-based `Mod(k, n) - 1` for a zero-based user index.
#[inline]
pub fn group_of(user: usize, n: usize) -> usize {
    user % n
}

#[inline]
pub fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// Users in the same consecutive batch of `g` as `user` whose residue mod `g`
/// differs; each of them caches both subfiles `user` is missing.
pub fn peers(user: usize, g: usize, users: usize) -> Vec<usize> {
    let batch = user / g;
    (0..g)
        .filter(|&j| j != group_of(user, g))
        .map(|j| batch * g + j)
        .filter(|&p| p < users)
        .collect()
}

/// Members of each residue class mod `n`, in increasing order.
pub fn residue_groups(users: usize, n: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); n];
    for u in 0..users {
        groups[group_of(u, n)].push(u);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn example_one_regime() {
        assert_eq!(
            choose_regime(6, r(47, 72)).unwrap(),
            Regime::Interpolate { g: 2, alpha: r(1, 12) }
        );
    }

    #[test]
    fn endpoints() {
        assert_eq!(
            choose_regime(6, r(0, 1)).unwrap(),
            Regime::Interpolate { g: 1, alpha: r(1, 1) }
        );
        assert_eq!(choose_regime(6, r(1, 1)).unwrap(), Regime::Top { alpha: r(0, 1) });
        assert_eq!(choose_regime(6, r(5, 6)).unwrap(), Regime::Top { alpha: r(1, 1) });
        assert_eq!(choose_regime(6, r(11, 12)).unwrap(), Regime::Top { alpha: r(1, 2) });
        assert_eq!(choose_regime(1, r(1, 3)).unwrap(), Regime::Top { alpha: r(2, 3) });
        assert!(matches!(choose_regime(6, r(-1, 2)), Err(Error::Domain(_))));
        assert!(matches!(choose_regime(6, r(3, 2)), Err(Error::Domain(_))));
    }

    #[test]
    fn boundary_picks_larger_g() {
        assert_eq!(
            choose_regime(10, r(1, 2)).unwrap(),
            Regime::Interpolate { g: 2, alpha: r(1, 1) }
        );
        assert_eq!(
            choose_regime(10, r(2, 3)).unwrap(),
            Regime::Interpolate { g: 3, alpha: r(1, 1) }
        );
    }

    #[test]
    fn regime_reconstructs_mu() {
        for users in 1..=12usize {
            for num in 0..=60 {
                let mu = r(num, 60);
                let regime = choose_regime(users, mu).unwrap();
                let alpha = regime.alpha();
                assert!(alpha >= r(0, 1) && alpha <= r(1, 1));
                let back = match regime {
                    Regime::Interpolate { g, alpha } => {
                        let g = g as i64;
                        assert!(g >= 1 && g < users as i64);
                        alpha * r(g - 1, g) + (r(1, 1) - alpha) * r(g, g + 1)
                    }
                    Regime::Top { alpha } => {
                        let k = users as i64;
                        alpha * r(k - 1, k) + (r(1, 1) - alpha)
                    }
                };
                assert_eq!(back, mu);
            }
        }
    }

    #[test]
    fn peer_examples() {
        // 1-based: K=6, g=2, k=1 -> {2}
        assert_eq!(peers(0, 2, 6), vec![1]);
        // 1-based: K=6, g=3, k=5 -> {4, 6}
        assert_eq!(peers(4, 3, 6), vec![3, 5]);
        assert!(peers(3, 1, 6).is_empty());
        // truncated last batch: K=5, g=3, k=4 -> {5}
        assert_eq!(peers(3, 3, 5), vec![4]);
    }

    #[test]
    fn residue_grouping() {
        assert_eq!(residue_groups(6, 3), vec![vec![0, 3], vec![1, 4], vec![2, 5]]);
        assert_eq!(residue_groups(3, 4)[3], Vec::<usize>::new());
    }
}
