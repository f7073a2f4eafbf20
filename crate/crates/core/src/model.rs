//! System-model types: configuration, library, demands, caches and delivery
//! transcripts, plus seeded instance generation.

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldMatrix, PrimeField};
use crate::schemes::Regime;

/// Exact rational in lowest terms with a positive denominator.
pub type Rational = Ratio<i64>;

/// Parses `p/q` or an integer. Decimal notation is rejected.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if s.contains('.') || s.contains('e') || s.contains('E') {
        return Err(Error::Domain(format!("`{s}` is not of the form p/q")));
    }
    s.parse::<Rational>()
        .map_err(|e| Error::Domain(format!("`{s}` is not a rational: {e}")))
}

/// Always `p/q`, including integers (`1/1`, `0/1`).
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Serde adapter writing rationals as `p/q` strings.
pub mod rational_str {
    use super::{format_rational, parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
            match r {
                Some(r) => s.serialize_some(&format_rational(r)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|s| parse_rational(&s).map_err(serde::de::Error::custom))
                .transpose()
        }
    }
}

/// `(K, F, L, q, M)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SystemConfigRepr")]
pub struct SystemConfig {
    pub users: usize,
    pub symbols: usize,
    pub demand_rows: usize,
    pub field_order: u64,
    pub cache_size: usize,
}

#[derive(Deserialize)]
struct SystemConfigRepr {
    users: usize,
    symbols: usize,
    demand_rows: usize,
    field_order: u64,
    cache_size: usize,
}

impl TryFrom<SystemConfigRepr> for SystemConfig {
    type Error = Error;

    fn try_from(r: SystemConfigRepr) -> Result<Self> {
        Self::new(r.users, r.symbols, r.demand_rows, r.field_order, r.cache_size)
    }
}

impl SystemConfig {
    pub fn new(
        users: usize,
        symbols: usize,
        demand_rows: usize,
        field_order: u64,
        cache_size: usize,
    ) -> Result<Self> {
        if users == 0 {
            return Err(Error::Configuration("at least one user is required".into()));
        }
        if demand_rows == 0 || demand_rows > symbols {
            return Err(Error::Configuration(format!(
                "demand rows L={demand_rows} must lie in [1, F={symbols}]"
            )));
        }
        if cache_size > symbols {
            return Err(Error::Configuration(format!(
                "cache size M={cache_size} exceeds F={symbols}"
            )));
        }
        PrimeField::new(field_order)?;
        Ok(Self {
            users,
            symbols,
            demand_rows,
            field_order,
            cache_size,
        })
    }

    /// Builds the configuration with `F = scale * base_symbols`, `M = mu F`, `L = lambda F`.
    pub fn from_fractions(
        users: usize,
        mu: Rational,
        lambda: Rational,
        field_order: u64,
        symbols: usize,
    ) -> Result<Self> {
        let f = Rational::from_integer(symbols as i64);
        let m = mu * f;
        let l = lambda * f;
        if !m.is_integer() || !l.is_integer() {
            return Err(Error::Configuration(format!(
                "F={symbols} does not make mu F and lambda F integral"
            )));
        }
        if m < Rational::zero() || l < Rational::zero() {
            return Err(Error::Domain("fractions must be nonnegative".into()));
        }
        Self::new(
            users,
            symbols,
            l.to_integer() as usize,
            field_order,
            m.to_integer() as usize,
        )
    }

    pub fn field(&self) -> PrimeField {
        PrimeField::new(self.field_order).expect("validated at construction")
    }

    /// `mu = M / F`
    pub fn mu(&self) -> Rational {
        Rational::new(self.cache_size as i64, self.symbols as i64)
    }

    /// `lambda = L / F`
    pub fn lambda(&self) -> Rational {
        Rational::new(self.demand_rows as i64, self.symbols as i64)
    }
}

/// The library vector `w`, a flat column of `F` field elements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Library {
    pub symbols: Vec<u64>,
}

impl Library {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// One `L x F` demand matrix per user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "DemandSetRepr", try_from = "DemandSetRepr")]
pub struct DemandSet {
    field: PrimeField,
    matrices: Vec<FieldMatrix>,
}

#[derive(Serialize, Deserialize)]
struct DemandSetRepr {
    q: u64,
    matrices: Vec<Vec<Vec<u64>>>,
}

impl From<DemandSet> for DemandSetRepr {
    fn from(d: DemandSet) -> Self {
        Self {
            q: d.field.modulus(),
            matrices: d.matrices.iter().map(FieldMatrix::to_rows).collect(),
        }
    }
}

impl TryFrom<DemandSetRepr> for DemandSet {
    type Error = Error;

    fn try_from(r: DemandSetRepr) -> Result<Self> {
        let field = PrimeField::new(r.q)?;
        let matrices = r
            .matrices
            .iter()
            .map(|m| FieldMatrix::from_rows(field, m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(field, matrices)
    }
}

impl DemandSet {
    pub fn new(field: PrimeField, matrices: Vec<FieldMatrix>) -> Result<Self> {
        if let Some(first) = matrices.first() {
            let (l, f) = (first.rows(), first.cols());
            for (k, m) in matrices.iter().enumerate() {
                if m.rows() != l || m.cols() != f {
                    return Err(Error::Shape(format!(
                        "demand of user {k} is {}x{}, expected {l}x{f}",
                        m.rows(),
                        m.cols()
                    )));
                }
                if m.field() != field {
                    return Err(Error::FieldMismatch {
                        left: field.modulus(),
                        right: m.field().modulus(),
                    });
                }
            }
        }
        Ok(Self { field, matrices })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn users(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrix(&self, user: usize) -> &FieldMatrix {
        &self.matrices[user]
    }

    pub fn matrices(&self) -> &[FieldMatrix] {
        &self.matrices
    }

    /// `D_k w` for every user.
    pub fn evaluate(&self, library: &Library) -> Result<Vec<Vec<u64>>> {
        self.matrices
            .iter()
            .map(|d| d.mul_vec(&library.symbols))
            .collect()
    }

    /// Checks that this demand set fits `config`.
    pub fn check(&self, config: &SystemConfig) -> Result<()> {
        if self.field.modulus() != config.field_order {
            return Err(Error::FieldMismatch {
                left: config.field_order,
                right: self.field.modulus(),
            });
        }
        if self.users() != config.users {
            return Err(Error::Shape(format!(
                "{} demand matrices for {} users",
                self.users(),
                config.users
            )));
        }
        if let Some(m) = self.matrices.first() {
            if m.rows() != config.demand_rows || m.cols() != config.symbols {
                return Err(Error::Shape(format!(
                    "demands are {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    config.demand_rows,
                    config.symbols
                )));
            }
        }
        Ok(())
    }
}

/// Uncoded cache of one user: the library coordinates it stores and their values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserCache {
    pub indices: Vec<usize>,
    pub values: Vec<u64>,
}

impl UserCache {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Selection matrix `P_k` (one standard basis row per cached coordinate).
    pub fn placement_matrix(&self, field: PrimeField, symbols: usize) -> FieldMatrix {
        let mut p = FieldMatrix::zeros(field, self.indices.len(), symbols);
        for (r, &c) in self.indices.iter().enumerate() {
            p.set(r, c, 1);
        }
        p
    }

    /// Dense view indexed by library coordinate.
    pub fn lookup(&self, symbols: usize) -> Vec<Option<u64>> {
        let mut known = vec![None; symbols];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            known[i] = Some(v);
        }
        known
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheContents {
    pub users: Vec<UserCache>,
}

impl CacheContents {
    pub fn user(&self, k: usize) -> &UserCache {
        &self.users[k]
    }

    /// Largest number of symbols stored by any user.
    pub fn max_usage(&self) -> usize {
        self.users.iter().map(UserCache::len).max().unwrap_or(0)
    }
}

/// A labeled run of consecutive transcript rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub label: String,
    pub start: usize,
    pub len: usize,
}

/// Delivery output: coefficient rows `E` over `w` and the broadcast values `E w`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "TranscriptRepr", try_from = "TranscriptRepr")]
pub struct Transcript {
    coeff: FieldMatrix,
    values: Vec<u64>,
    segments: Vec<Segment>,
}

#[derive(Serialize, Deserialize)]
struct TranscriptRepr {
    q: u64,
    symbols: usize,
    coeff: Vec<Vec<u64>>,
    values: Vec<u64>,
    segments: Vec<Segment>,
}

impl From<Transcript> for TranscriptRepr {
    fn from(t: Transcript) -> Self {
        Self {
            q: t.coeff.field().modulus(),
            symbols: t.coeff.cols(),
            coeff: t.coeff.to_rows(),
            values: t.values,
            segments: t.segments,
        }
    }
}

impl TryFrom<TranscriptRepr> for Transcript {
    type Error = Error;

    fn try_from(r: TranscriptRepr) -> Result<Self> {
        let field = PrimeField::new(r.q)?;
        if r.coeff.iter().any(|row| row.len() != r.symbols) {
            return Err(Error::Shape("coefficient row length differs from F".into()));
        }
        let data = r.coeff.iter().flatten().copied().collect();
        let coeff = FieldMatrix::from_vec(field, r.coeff.len(), r.symbols, data)?;
        Self::from_parts(coeff, r.values, r.segments)
    }
}

impl Transcript {
    /// Assembles a transcript from labeled blocks of coefficient rows, computing `values = E w`.
    pub fn encode(
        field: PrimeField,
        library: &Library,
        blocks: Vec<(String, Vec<Vec<u64>>)>,
    ) -> Result<Self> {
        let symbols = library.len();
        let mut data = Vec::new();
        let mut segments = Vec::with_capacity(blocks.len());
        let mut start = 0;
        for (label, rows) in blocks {
            for row in &rows {
                if row.len() != symbols {
                    return Err(Error::Shape(format!(
                        "segment `{label}` has a row of length {} over F={symbols}",
                        row.len()
                    )));
                }
                data.extend_from_slice(row);
            }
            segments.push(Segment {
                label,
                start,
                len: rows.len(),
            });
            start += rows.len();
        }
        let coeff = FieldMatrix::from_vec(field, start, symbols, data)?;
        let values = coeff.mul_vec(&library.symbols)?;
        Ok(Self {
            coeff,
            values,
            segments,
        })
    }

    /// Shape-checked constructor; does not check `values == E w`.
    pub fn from_parts(coeff: FieldMatrix, values: Vec<u64>, segments: Vec<Segment>) -> Result<Self> {
        if values.len() != coeff.rows() {
            return Err(Error::Shape(format!(
                "{} values for {} coefficient rows",
                values.len(),
                coeff.rows()
            )));
        }
        let mut next = 0;
        for s in &segments {
            if s.start != next {
                return Err(Error::Shape(format!("segment `{}` is not contiguous", s.label)));
            }
            next += s.len;
        }
        if next != coeff.rows() {
            return Err(Error::Shape("segments do not cover the transcript".into()));
        }
        let field = coeff.field();
        let values = values.into_iter().map(|v| field.reduce(v)).collect();
        Ok(Self {
            coeff,
            values,
            segments,
        })
    }

    /// Number of transmitted symbols `R`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn coeff(&self) -> &FieldMatrix {
        &self.coeff
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment(&self, label: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.label == label)
    }

    pub fn segment_values(&self, label: &str) -> Option<&[u64]> {
        self.segment(label)
            .map(|s| &self.values[s.start..s.start + s.len])
    }

    /// `values == E w`.
    pub fn is_consistent(&self, library: &Library) -> bool {
        self.coeff
            .mul_vec(&library.symbols)
            .is_ok_and(|v| v == self.values)
    }
}

fn lcm_of_denominators(values: &[Rational]) -> u64 {
    values
        .iter()
        .fold(1i64, |acc, r| acc.lcm(r.denom()))
        .unsigned_abs()
}

/// Least `F` making every subfile size of the regime integral, together with `mu F` and `lambda F`.
pub fn validate_divisibility(users: usize, mu: Rational, lambda: Rational, regime: &Regime) -> u64 {
    let one = Rational::one();
    let mut parts = vec![mu, lambda];
    match *regime {
        Regime::Interpolate { g, alpha } => {
            let g = g as i64;
            parts.push(alpha / g);
            parts.push((one - alpha) / (g + 1));
        }
        Regime::Top { alpha } => {
            parts.push(alpha / users as i64);
            parts.push(one - alpha);
        }
    }
    lcm_of_denominators(&parts)
}

/// Uniform library and demands from a ChaCha8 stream seeded with `seed`.
pub fn random_instance(config: &SystemConfig, seed: u64) -> (Library, DemandSet) {
    let field = config.field();
    let q = field.modulus();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols = (0..config.symbols).map(|_| rng.gen_range(0..q)).collect();
    let matrices = (0..config.users)
        .map(|_| {
            let data = (0..config.demand_rows * config.symbols)
                .map(|_| rng.gen_range(0..q))
                .collect();
            FieldMatrix::from_vec(field, config.demand_rows, config.symbols, data)
                .expect("sizes match")
        })
        .collect();
    (
        Library { symbols },
        DemandSet::new(field, matrices).expect("uniform shapes"),
    )
}

/// Scalar-function demands `D_k = [y_k1 I_L, ..., y_kN I_L]` with `F = N L`.
pub fn structured_scalar_demands(
    config: &SystemConfig,
    files: usize,
    coefficients: &[Vec<u64>],
) -> Result<DemandSet> {
    let l = config.demand_rows;
    if !config.symbols.is_multiple_of(l) || config.symbols / l != files {
        return Err(Error::Shape(format!(
            "F={} is not N*L with N={files}, L={l}",
            config.symbols
        )));
    }
    if coefficients.len() != config.users {
        return Err(Error::Shape(format!(
            "{} coefficient vectors for {} users",
            coefficients.len(),
            config.users
        )));
    }
    let field = config.field();
    let matrices = coefficients
        .iter()
        .map(|y| {
            if y.len() != files {
                return Err(Error::Shape(format!(
                    "coefficient vector of length {} for N={files}",
                    y.len()
                )));
            }
            let mut d = FieldMatrix::zeros(field, l, config.symbols);
            for (n, &c) in y.iter().enumerate() {
                for r in 0..l {
                    d.set(r, n * l + r, c);
                }
            }
            Ok(d)
        })
        .collect::<Result<Vec<_>>>()?;
    DemandSet::new(field, matrices)
}
