use super::deliver::{
    part1_block, part1_multicast, part2_block, step1_label, step1_rows, top_multicast,
    unicast_label, virtual_multicast, LABEL_CORNER, LABEL_FULL, LABEL_PART1, LABEL_TOP,
    LABEL_VIRTUAL,
};
use super::layout::LayoutKind;
use super::transform::{build_transforms, UserTransform};
use super::{SchemePlan, Variant};
use crate::error::{Error, Result};
use crate::field::{FieldMatrix, PrimeField};
use crate::model::{CacheContents, DemandSet, Transcript, UserCache};

/// Per-instance receiver state derived from public information (plan and demands).
struct Receiver<'a> {
    plan: &'a SchemePlan,
    demands: &'a DemandSet,
    field: PrimeField,
    transforms: Option<Vec<UserTransform>>,
}

impl<'a> Receiver<'a> {
    fn new(plan: &'a SchemePlan, demands: &'a DemandSet) -> Result<Self> {
        let transforms = match plan.variant {
            Variant::Rho2 => Some(build_transforms(&plan.layout, demands)?),
            _ => None,
        };
        Ok(Self {
            plan,
            demands,
            field: demands.field(),
            transforms,
        })
    }

    fn decode(&self, user: usize, cache: &UserCache, transcript: &Transcript) -> Result<Vec<u64>> {
        let fail = |reason: String| Error::DecodeFailure { user, reason };
        let symbols = self.plan.layout.symbols;
        if user >= self.demands.users() {
            return Err(fail("no such user".into()));
        }
        if transcript.coeff().cols() != symbols {
            return Err(fail(format!(
                "transcript spans {} symbols, F = {symbols}",
                transcript.coeff().cols()
            )));
        }
        let segment = |label: &str| {
            transcript
                .segment_values(label)
                .ok_or_else(|| fail(format!("missing segment `{label}`")))
        };
        let known = cache.lookup(symbols);
        let d = self.demands.matrix(user);
        let layout = &self.plan.layout;
        let rows = d.rows();
        let f = self.field;

        let missing: Vec<u64> = match self.plan.variant {
            Variant::BaselineUnicast => {
                let v = segment(&unicast_label(user))?;
                if v.len() != rows {
                    return Err(fail(format!("unicast carries {} symbols, L = {rows}", v.len())));
                }
                return Ok(v.to_vec());
            }
            Variant::BaselineFull => {
                let LayoutKind::Prefix { cached } = layout.kind else {
                    return Err(fail("full-library baseline needs a prefix layout".into()));
                };
                let v = segment(LABEL_FULL)?;
                if v.len() != symbols - cached {
                    return Err(fail(format!(
                        "{} symbols received, {} uncached",
                        v.len(),
                        symbols - cached
                    )));
                }
                let mut w = Vec::with_capacity(symbols);
                for (c, k) in known.iter().enumerate().take(cached) {
                    w.push(k.ok_or_else(|| fail(format!("symbol {c} is not cached")))?);
                }
                w.extend_from_slice(v);
                return d.mul_vec(&w);
            }
            Variant::Corner(_) => {
                let g = self.g()?;
                let mc = part1_multicast(layout, g, self.demands.users(), rows, false);
                mc.decode(f, user, segment(LABEL_CORNER)?, &known, |u| {
                    part1_block(self.demands, layout, g, u)
                })?
            }
            Variant::Rho1 => {
                let g = self.g()?;
                let users = self.demands.users();
                let p1 = part1_multicast(layout, g, users, rows, true).decode(
                    f,
                    user,
                    segment(LABEL_PART1)?,
                    &known,
                    |u| part1_block(self.demands, layout, g, u),
                )?;
                let p2 = virtual_multicast(layout, g, users, rows).decode(
                    f,
                    user,
                    segment(LABEL_VIRTUAL)?,
                    &known,
                    |u| part2_block(self.demands, layout, g, u),
                )?;
                p1.iter().zip(&p2).map(|(&a, &b)| f.add(a, b)).collect()
            }
            Variant::Rho2 => {
                let g = self.g()?;
                let users = self.demands.users();
                let transforms = self.transforms.as_ref().expect("built for rho2");
                let own = &transforms[user];

                let batch = user / g;
                let received = segment(&step1_label(batch))?;
                if received.len() != own.top {
                    return Err(fail(format!(
                        "step 1 carries {} symbols, expected {}",
                        received.len(),
                        own.top
                    )));
                }
                let mut first = received.to_vec();
                for peer in (batch * g..(batch + 1) * g).filter(|&p| p < users && p != user) {
                    for (acc, row) in first.iter_mut().zip(step1_rows(layout, g, peer, &transforms[peer])) {
                        let mut v = 0;
                        for (c, &x) in row.iter().enumerate() {
                            if x != 0 {
                                let w = known[c].ok_or_else(|| {
                                    fail(format!("symbol {c} needed to cancel user {peer} is not cached"))
                                })?;
                                v = f.add(v, f.mul(x, w));
                            }
                        }
                        *acc = f.sub(*acc, v);
                    }
                }

                let second = virtual_multicast(layout, g, users, own.bottom).decode(
                    f,
                    user,
                    segment(LABEL_VIRTUAL)?,
                    &known,
                    |u| transforms[u].bottom_block(),
                )?;
                first.extend(second);
                own.inverse.mul_vec(&first)?
            }
            Variant::Rho3 => {
                let users = self.demands.users();
                top_multicast(layout, users, rows).decode(f, user, segment(LABEL_TOP)?, &known, |u| {
                    let d = self.demands.matrix(u);
                    d.block(0..d.rows(), layout.part1[u].clone())
                })?
            }
        };

        let cached = cached_contribution(d, &known);
        Ok(cached.iter().zip(&missing).map(|(&a, &b)| f.add(a, b)).collect())
    }

    fn g(&self) -> Result<usize> {
        self.plan.g().ok_or_else(|| {
            Error::Configuration(format!("{} needs the interpolation layout", self.plan.variant))
        })
    }
}

/// `sum over cached c of D[:, c] w_c`.
fn cached_contribution(d: &FieldMatrix, known: &[Option<u64>]) -> Vec<u64> {
    let f = d.field();
    (0..d.rows())
        .map(|r| {
            d.row(r)
                .iter()
                .zip(known)
                .filter_map(|(&x, k)| k.map(|w| f.mul(x, w)))
                .fold(0, |acc, v| f.add(acc, v))
        })
        .collect()
}

/// Recovers `D_user w` from the user's cache, the broadcast and the public demands.
pub fn decode(
    user: usize,
    plan: &SchemePlan,
    cache: &UserCache,
    transcript: &Transcript,
    demands: &DemandSet,
) -> Result<Vec<u64>> {
    Receiver::new(plan, demands)?.decode(user, cache, transcript)
}

/// Decodes every user, sharing the demand transforms.
pub fn decode_all(
    plan: &SchemePlan,
    caches: &CacheContents,
    transcript: &Transcript,
    demands: &DemandSet,
) -> Vec<Result<Vec<u64>>> {
    match Receiver::new(plan, demands) {
        Ok(rx) => caches
            .users
            .iter()
            .enumerate()
            .map(|(k, c)| rx.decode(k, c, transcript))
            .collect(),
        Err(e) => vec![Err(e); caches.users.len()],
    }
}
