//! Single-message multicast shared by every coded scheme.
//!
//! Group `i` consists of users that miss subfile `i` and know every other
//! subfile in the family. Each user contributes a demand block on its missing
//! subfile; the blocks of a group are stacked (zero-padded to `slots` users)
//! and the stacks of all groups are summed. When the stacked size is not
//! smaller than the subfile itself the subfiles are summed raw instead.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::field::{FieldMatrix, PrimeField};

pub(crate) struct GroupMulticast<'a> {
    pub subfiles: &'a [Range<usize>],
    pub groups: Vec<Vec<usize>>,
    pub slots: usize,
    pub rows_per_user: usize,
    /// Always sum the raw subfiles.
    pub force_raw: bool,
}

impl GroupMulticast<'_> {
    fn subfile_len(&self) -> usize {
        self.subfiles.first().map_or(0, Range::len)
    }

    pub fn stacked(&self) -> bool {
        !self.force_raw && self.slots * self.rows_per_user < self.subfile_len()
    }

    pub fn len(&self) -> usize {
        if self.stacked() {
            self.slots * self.rows_per_user
        } else {
            self.subfile_len()
        }
    }

    /// Coefficient rows over the whole library (`symbols` columns).
    pub fn encode<B>(&self, symbols: usize, block: B) -> Vec<Vec<u64>>
    where
        B: Fn(usize) -> FieldMatrix,
    {
        let len = self.len();
        let mut rows = vec![vec![0u64; symbols]; len];
        if self.stacked() {
            for (range, members) in self.subfiles.iter().zip(&self.groups) {
                for (slot, &user) in members.iter().enumerate() {
                    let b = block(user);
                    let f = b.field();
                    for r in 0..self.rows_per_user {
                        let row = &mut rows[slot * self.rows_per_user + r];
                        for (c, &x) in range.clone().zip(b.row(r)) {
                            row[c] = f.add(row[c], x);
                        }
                    }
                }
            }
        } else {
            for range in self.subfiles {
                for (s, c) in range.clone().enumerate() {
                    rows[s][c] = 1;
                }
            }
        }
        rows
    }

    /// Recovers `block(user) * w_i` for the subfile `i` that `user` misses.
    pub fn decode<B>(
        &self,
        field: PrimeField,
        user: usize,
        received: &[u64],
        known: &[Option<u64>],
        block: B,
    ) -> Result<Vec<u64>>
    where
        B: Fn(usize) -> FieldMatrix,
    {
        let fail = |reason: String| Error::DecodeFailure { user, reason };
        if received.len() != self.len() {
            return Err(fail(format!(
                "multicast carries {} symbols, expected {}",
                received.len(),
                self.len()
            )));
        }
        let (own, slot) = self
            .groups
            .iter()
            .enumerate()
            .find_map(|(i, m)| m.iter().position(|&u| u == user).map(|s| (i, s)))
            .ok_or_else(|| fail("user belongs to no group".into()))?;

        let lookup = |c: usize| known[c].ok_or_else(|| fail(format!("symbol {c} is not cached")));
        let mut residual = received.to_vec();

        if self.stacked() {
            for (i, (range, members)) in self.subfiles.iter().zip(&self.groups).enumerate() {
                if i == own {
                    continue;
                }
                let w_other = range.clone().map(lookup).collect::<Result<Vec<_>>>()?;
                for (s, &other) in members.iter().enumerate() {
                    let contrib = block(other).mul_vec(&w_other)?;
                    for (r, v) in contrib.into_iter().enumerate() {
                        let idx = s * self.rows_per_user + r;
                        residual[idx] = field.sub(residual[idx], v);
                    }
                }
            }
            Ok(residual[slot * self.rows_per_user..(slot + 1) * self.rows_per_user].to_vec())
        } else {
            for (i, range) in self.subfiles.iter().enumerate() {
                if i == own {
                    continue;
                }
                for (s, c) in range.clone().enumerate() {
                    residual[s] = field.sub(residual[s], lookup(c)?);
                }
            }
            block(user).mul_vec(&residual)
        }
    }
}
