//! Exhaustive enumeration in Gray-code order.

use std::sync::OnceLock;

use super::anneal::Csr;
use super::{Restarter, SolveParams, Solver};
use crate::error::{Error, Result};
use crate::model::QuboModel;

pub const BRUTE_FORCE_CAP: usize = 24;

#[derive(Debug, Clone, Copy, Default)]
pub struct BruteForce;

impl Solver for BruteForce {
    fn name(&self) -> &'static str {
        "bruteforce"
    }

    fn prepare<'a>(
        &self,
        model: &'a QuboModel,
        _params: &SolveParams,
    ) -> Result<Box<dyn Restarter + 'a>> {
        if model.n > BRUTE_FORCE_CAP {
            return Err(Error::BruteForceCap {
                n: model.n,
                cap: BRUTE_FORCE_CAP,
            });
        }
        Ok(Box::new(Enumerator {
            model,
            result: OnceLock::new(),
        }))
    }
}

struct Enumerator<'a> {
    model: &'a QuboModel,
    result: OnceLock<(Vec<u8>, u64)>,
}

/// Bit vector of a mask, variable 0 in the lowest bit.
fn bits(mask: u32, n: usize) -> Vec<u8> {
    (0..n).map(|k| ((mask >> k) & 1) as u8).collect()
}

/// Lexicographic order on bit vectors (variable 0 most significant).
fn lex_key(mask: u32, n: usize) -> u32 {
    mask.reverse_bits() >> (32 - n.max(1))
}

impl Enumerator<'_> {
    /// Global minimum (lexicographically smallest optimum) and its multiplicity.
    fn enumerate(&self) -> (Vec<u8>, u64) {
        let m = self.model;
        let n = m.n;
        let csr = Csr::new(&m.neighbor_lists());
        let mut field = m.linear_vec();
        // incremental sums only drift by rounding; compare within a scale-aware band
        let scale = m.offset.abs()
            + m.linear.values().map(|v| v.abs()).sum::<f64>()
            + m.quadratic.values().map(|v| v.abs()).sum::<f64>();
        let tol = 1e-9 * scale.max(1.0);

        let mut mask: u32 = 0;
        let mut energy = m.offset;
        let mut best = energy;
        let mut best_mask = 0u32;
        let mut count = 1u64;
        for k in 1u64..(1u64 << n) {
            let i = k.trailing_zeros() as usize;
            let on = mask & (1 << i) == 0;
            let delta = if on { field[i] } else { -field[i] };
            let sign = if on { 1.0 } else { -1.0 };
            mask ^= 1 << i;
            energy += delta;
            for (j, q) in csr.row(i) {
                field[j] += sign * q;
            }
            if energy < best - tol {
                best = energy;
                best_mask = mask;
                count = 1;
            } else if energy <= best + tol {
                count += 1;
                if lex_key(mask, n) < lex_key(best_mask, n) {
                    best_mask = mask;
                }
                best = best.min(energy);
            }
        }
        (bits(best_mask, n), count)
    }
}

impl Restarter for Enumerator<'_> {
    fn run(&self, _index: u64) -> Vec<u8> {
        self.result.get_or_init(|| self.enumerate()).0.clone()
    }

    fn max_restarts(&self) -> Option<usize> {
        Some(1)
    }

    fn optimum_count(&self) -> Option<u64> {
        Some(self.result.get_or_init(|| self.enumerate()).1)
    }
}
