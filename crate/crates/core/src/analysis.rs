//! Exact-rational load formulas and memory-load sweeps.
//!
//! Nothing here touches floating point; decimal strings in the CSV output are
//! produced by exact long division.

use std::io::Write;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{format_rational, rational_str, Rational};
use crate::schemes::{ceil_div, choose_regime, Regime, Variant};

/// One point of a memory-load curve.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadPoint {
    #[serde(with = "rational_str")]
    pub mu: Rational,
    #[serde(with = "rational_str")]
    pub rho_proposed: Rational,
    #[serde(with = "rational_str")]
    pub rho_baseline: Rational,
    #[serde(with = "rational_str::option")]
    pub rho_scalar: Option<Rational>,
    pub regime: Regime,
    /// Scheme attaining `rho_proposed`: `corner:g`, `rho1`, `rho2` or `rho3`.
    pub chosen_variant: Variant,
}

fn check_unit(name: &str, x: Rational) -> Result<()> {
    if x < Rational::zero() || x > Rational::one() {
        return Err(Error::Domain(format!("{name} = {x} is outside [0, 1]")));
    }
    Ok(())
}

fn positive_part(x: Rational) -> Rational {
    if x < Rational::zero() {
        Rational::zero()
    } else {
        x
    }
}

fn ceil_ratio(users: usize, g: usize) -> i64 {
    ceil_div(users, g) as i64
}

/// `min(K lambda, 1 - mu)`
pub fn baseline_load(users: usize, mu: Rational, lambda: Rational) -> Rational {
    (lambda * users as i64).min(Rational::one() - mu)
}

/// `(rho_1, rho_2)` of the interpolation between corners `g` and `g + 1`.
pub fn interpolation_loads(users: usize, g: usize, alpha: Rational, lambda: Rational) -> (Rational, Rational) {
    let gi = g as i64;
    let per_group = alpha / gi;
    let part2 = (Rational::one() - alpha) / (gi + 1);
    let up = ceil_ratio(users, g);
    let up_next = ceil_ratio(users, g + 1);
    let rho1 = per_group + (lambda * up_next).min(part2);
    let rho2 = per_group.min(lambda) * up + (positive_part(lambda - per_group) * up_next).min(part2);
    (rho1, rho2)
}

/// Load of the grouped corner scheme: `min(ceil(K/g) lambda, 1/g)`.
pub fn corner_load(users: usize, g: usize, lambda: Rational) -> Rational {
    (lambda * ceil_ratio(users, g)).min(Rational::new(1, g as i64))
}

/// Achievable load at `mu` and the scheme attaining it.
///
/// Ties between `rho_1` and `rho_2` report `rho1`; the boundary case
/// `alpha/g = ceil(K/g) lambda` reports the corner scheme.
pub fn proposed_load(users: usize, mu: Rational, lambda: Rational) -> Result<(Rational, Regime, Variant)> {
    check_unit("mu", mu)?;
    check_unit("lambda", lambda)?;
    let regime = choose_regime(users, mu)?;
    Ok(match regime {
        Regime::Interpolate { g, alpha } => {
            let corner = lambda * ceil_ratio(users, g);
            if alpha / g as i64 >= corner {
                (corner, regime, Variant::Corner(g))
            } else {
                let (rho1, rho2) = interpolation_loads(users, g, alpha, lambda);
                if rho1 <= rho2 {
                    (rho1, regime, Variant::Rho1)
                } else {
                    (rho2, regime, Variant::Rho2)
                }
            }
        }
        Regime::Top { alpha } => ((alpha / users as i64).min(lambda), regime, Variant::Rho3),
    })
}

/// Full curve point at `mu`, including the scalar comparison curve when `1/lambda` is integral.
pub fn theorem_load(users: usize, mu: Rational, lambda: Rational) -> Result<LoadPoint> {
    if lambda.is_zero() {
        return Err(Error::Domain("lambda must be positive".into()));
    }
    let (rho_proposed, regime, chosen_variant) = proposed_load(users, mu, lambda)?;
    Ok(LoadPoint {
        mu,
        rho_proposed,
        rho_baseline: baseline_load(users, mu, lambda),
        rho_scalar: scalar_lfr_curve(users, lambda, mu)?,
        regime,
        chosen_variant,
    })
}

/// Closed-form normalized load of `variant` at `(mu, lambda)`.
pub fn variant_load(users: usize, mu: Rational, lambda: Rational, variant: Variant) -> Result<Rational> {
    check_unit("mu", mu)?;
    check_unit("lambda", lambda)?;
    let regime = choose_regime(users, mu)?;
    match (variant, regime) {
        (Variant::BaselineUnicast, _) => Ok(lambda * users as i64),
        (Variant::BaselineFull, _) => Ok(Rational::one() - mu),
        (Variant::Corner(g), _) if (1..=users).contains(&g) => Ok(corner_load(users, g, lambda)),
        (Variant::Rho1, Regime::Interpolate { g, alpha }) => Ok(interpolation_loads(users, g, alpha, lambda).0),
        (Variant::Rho2, Regime::Interpolate { g, alpha }) => Ok(interpolation_loads(users, g, alpha, lambda).1),
        (Variant::Rho3, Regime::Top { alpha }) => Ok((alpha / users as i64).min(lambda)),
        (v, r) => Err(Error::Configuration(format!("{v} is not defined in {r}"))),
    }
}

/// Binomial coefficient with `C(x, y) = 0` whenever `x < 0`, `y < 0` or `x < y`.
pub fn binomial(x: i64, y: i64) -> i64 {
    if x < 0 || y < 0 || x < y {
        return 0;
    }
    let y = y.min(x - y);
    let mut acc: i128 = 1;
    for i in 0..y {
        acc = acc * (x - i) as i128 / (i + 1) as i128;
    }
    acc as i64
}

fn files_of(lambda: Rational) -> Result<i64> {
    if lambda <= Rational::zero() || !lambda.recip().is_integer() {
        return Err(Error::Domain(format!("1/lambda = 1/({lambda}) is not a positive integer")));
    }
    Ok(lambda.recip().to_integer())
}

/// Scalar linear function retrieval corner `t` (memory `t/K`).
pub fn scalar_lfr_load(users: usize, lambda: Rational, t: usize) -> Result<Rational> {
    let files = files_of(lambda)?;
    if t > users {
        return Err(Error::Domain(format!("t = {t} exceeds K = {users}")));
    }
    let k = users as i64;
    let t = t as i64;
    let num = binomial(k, t + 1) - binomial(k - k.min(files), t + 1);
    Ok(lambda * Rational::new(num, binomial(k, t)))
}

/// Piecewise-linear interpolation of the scalar corners at `mu`; `None` when `1/lambda` is not integral.
pub fn scalar_lfr_curve(users: usize, lambda: Rational, mu: Rational) -> Result<Option<Rational>> {
    if files_of(lambda).is_err() {
        return Ok(None);
    }
    check_unit("mu", mu)?;
    let k = users as i64;
    let scaled = mu * k;
    let t = scaled.floor().to_integer().min(k - 1).max(0) as usize;
    let left = scalar_lfr_load(users, lambda, t)?;
    if scaled == Rational::from_integer(t as i64) {
        return Ok(Some(left));
    }
    let right = scalar_lfr_load(users, lambda, t + 1)?;
    let frac = scaled - t as i64;
    Ok(Some(left + (right - left) * frac))
}

/// Grouped scalar scheme at `mu = t/g`: `lambda ceil(K/g) C(g, t+1)`.
pub fn grouped_scalar_load(users: usize, lambda: Rational, g: usize, t: usize) -> Rational {
    lambda * ceil_ratio(users, g) * binomial(g as i64, t as i64 + 1)
}

/// Whether the grouped scalar point is no better than the baseline at the same memory.
pub fn grouped_scalar_inferior(users: usize, lambda: Rational, g: usize, t: usize) -> bool {
    let mu = Rational::new(t as i64, g as i64);
    grouped_scalar_load(users, lambda, g, t) >= baseline_load(users, mu, lambda)
}

/// `n` equally spaced points from 0 to 1 inclusive.
pub fn uniform_grid(n: usize) -> Vec<Rational> {
    match n {
        0 => Vec::new(),
        1 => vec![Rational::zero()],
        _ => (0..n)
            .map(|i| Rational::new(i as i64, n as i64 - 1))
            .collect(),
    }
}

/// One [`LoadPoint`] per grid value, sorted by `mu`.
pub fn sweep_curve(users: usize, lambda: Rational, grid: &[Rational]) -> Result<Vec<LoadPoint>> {
    let mut points = grid
        .iter()
        .map(|&mu| theorem_load(users, mu, lambda))
        .collect::<Result<Vec<_>>>()?;
    points.sort_by_key(|p| p.mu);
    Ok(points)
}

/// `r` with 15 significant digits, trailing zeros stripped (like `%.15g` for moderate exponents).
pub fn decimal(r: &Rational) -> String {
    const SIG: usize = 15;
    let negative = *r < Rational::zero();
    let (n, d) = (r.numer().unsigned_abs() as u128, *r.denom() as u128);
    if n == 0 {
        return "0".into();
    }
    // digits of the integer part, then fractional digits by long division
    let int_part = n / d;
    let mut rem = n % d;
    let mut digits: Vec<u8> = if int_part > 0 {
        int_part.to_string().bytes().map(|b| b - b'0').collect()
    } else {
        Vec::new()
    };
    let int_len = digits.len();
    let mut leading_zeros = 0usize;
    while digits.len() < SIG + 1 {
        rem *= 10;
        let digit = (rem / d) as u8;
        rem %= d;
        if digits.is_empty() && digit == 0 {
            leading_zeros += 1;
            continue;
        }
        digits.push(digit);
    }
    // round half up at SIG digits
    let round_up = digits[SIG] >= 5;
    digits.truncate(SIG);
    let mut int_len = int_len;
    if round_up {
        let mut i = SIG;
        loop {
            if i == 0 {
                digits.insert(0, 1);
                digits.pop();
                if int_len > 0 {
                    int_len += 1;
                } else if leading_zeros > 0 {
                    leading_zeros -= 1;
                } else {
                    int_len = 1;
                }
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let to_str = |ds: &[u8]| ds.iter().map(|d| (b'0' + d) as char).collect::<String>();
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if int_len > 0 {
        if int_len >= digits.len() {
            out.push_str(&to_str(&digits));
            out.push_str(&"0".repeat(int_len - digits.len()));
        } else {
            let frac = to_str(&digits[int_len..]);
            let frac = frac.trim_end_matches('0');
            out.push_str(&to_str(&digits[..int_len]));
            if !frac.is_empty() {
                out.push('.');
                out.push_str(frac);
            }
        }
    } else {
        let frac = to_str(&digits);
        out.push_str("0.");
        out.push_str(&"0".repeat(leading_zeros));
        out.push_str(frac.trim_end_matches('0'));
    }
    out
}

/// `p/q (decimal)`
pub fn rational_cell(r: &Rational) -> String {
    format!("{} ({})", format_rational(r), decimal(r))
}

pub const CSV_HEADER: [&str; 7] = [
    "mu",
    "rho_proposed",
    "rho_baseline",
    "rho_scalar",
    "variant",
    "g",
    "alpha",
];

/// Writes the curve as CSV. Rational cells hold `p/q (decimal)`; `g` is `K` on the top branch.
pub fn write_csv<W: Write>(users: usize, points: &[LoadPoint], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Domain(format!("csv output failed: {e}"));
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER).map_err(io)?;
    for p in points {
        writer
            .write_record([
                rational_cell(&p.mu),
                rational_cell(&p.rho_proposed),
                rational_cell(&p.rho_baseline),
                p.rho_scalar.as_ref().map(rational_cell).unwrap_or_default(),
                p.chosen_variant.name().to_string(),
                p.regime.groups(users).to_string(),
                rational_cell(&p.regime.alpha()),
            ])
            .map_err(io)?;
    }
    writer.flush().map_err(|e| Error::Domain(format!("csv output failed: {e}")))?;
    Ok(())
}
