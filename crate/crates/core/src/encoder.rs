//! Penalty QUBO for the reloading rules.
//!
//! Variables are laid out level-major: `z = (x⁰₀..x⁰ₙ₋₁, x¹₀..x¹ₙ₋₁, x²₀..x²ₙ₋₁)`
//! where `xᵇᵢ = 1` iff cell `i` holds fuel of burn level `b`. The energy is
//! `Σ λₖ·Hₖ` over five non-negative penalty terms:
//!
//! 1. one level per cell, `Σᵢ (x⁰ᵢ + x¹ᵢ + x²ᵢ − 1)²`
//! 2. level counts, `Σ_b (Σᵢ xᵇᵢ − Nᵇ)²`
//! 3. no twice-burnt fuel on the border and no fresh fuel in the inner
//!    region, `(Σ_{ℬ} x²)² + (Σ_{ℐ} x⁰)²` (or the plain sums)
//! 4. adjacency, `Σᵢ Σ_{k∈nb(i), k∉ℬ} x⁰ᵢx⁰ₖ + Σᵢ Σ_{k∈nb(i)} x²ᵢx²ₖ`
//!    over ordered pairs
//! 5. symmetry, `Σ_orbits Σ_b Σ_{j≠rep} (xᵇ_rep − xᵇⱼ)²`

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CoreLayout, SymmetryGroup};
use crate::model::{QuboBuilder, QuboModel};

pub const LEVELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FuelCounts {
    pub fresh: usize,
    pub once: usize,
    pub twice: usize,
}

impl FuelCounts {
    pub const fn new(fresh: usize, once: usize, twice: usize) -> Self {
        FuelCounts { fresh, once, twice }
    }

    pub fn total(&self) -> usize {
        self.fresh + self.once + self.twice
    }

    pub fn by_level(&self) -> [usize; LEVELS] {
        [self.fresh, self.once, self.twice]
    }

    pub fn check_total(&self, cells: usize) -> Result<()> {
        if self.total() == cells {
            Ok(())
        } else {
            Err(Error::CountsMismatch {
                sum: self.total(),
                cells,
            })
        }
    }
}

impl fmt::Display for FuelCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.fresh, self.once, self.twice)
    }
}

impl FromStr for FuelCounts {
    type Err = Error;

    /// Parses `fresh,once,twice`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::InvalidConfig(format!("counts must look like `8,4,1`, got `{s}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let v: Vec<usize> = parts
            .iter()
            .map(|p| p.parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        Ok(FuelCounts::new(v[0], v[1], v[2]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyWeights(pub [f64; 5]);

impl Default for PenaltyWeights {
    fn default() -> Self {
        PenaltyWeights([1.0; 5])
    }
}

impl PenaltyWeights {
    pub fn validate(&self) -> Result<()> {
        for (k, &w) in self.0.iter().enumerate() {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidWeight {
                    index: k + 1,
                    value: w,
                });
            }
        }
        Ok(())
    }
}

impl FromStr for PenaltyWeights {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("bad weight `{p}`")))
            })
            .collect::<Result<_>>()?;
        let arr: [f64; 5] = v
            .try_into()
            .map_err(|_| Error::InvalidConfig("expected five weights λ1..λ5".into()))?;
        let w = PenaltyWeights(arr);
        w.validate()?;
        Ok(w)
    }
}

/// How the border/inner prohibition enters the energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionPenalty {
    /// `(Σ x)²`, including cross terms.
    #[default]
    Squared,
    /// `Σ x`.
    Linear,
}

/// Which adjacent fresh pairs are forbidden.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FreshAdjacency {
    /// Ordered pairs `(i, k)` with `k` off the border: an unordered pair is
    /// penalized unless both cells are on the border.
    #[default]
    Formula,
    /// A pair is allowed when either cell touches a border cell.
    Prose,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EncodeOptions {
    #[serde(default)]
    pub rotational_symmetry: bool,
    #[serde(default)]
    pub mirror_symmetry: bool,
    #[serde(default)]
    pub weights: PenaltyWeights,
    #[serde(default)]
    pub region_penalty: RegionPenalty,
    #[serde(default)]
    pub fresh_adjacency: FreshAdjacency,
}

impl EncodeOptions {
    pub fn with_symmetry(rotational: bool, mirror: bool) -> Self {
        EncodeOptions {
            rotational_symmetry: rotational,
            mirror_symmetry: mirror,
            ..Default::default()
        }
    }

    pub fn symmetry_group(&self) -> SymmetryGroup {
        SymmetryGroup::from_flags(self.rotational_symmetry, self.mirror_symmetry)
    }
}

/// Index of `xᵇᵢ` in the bit vector of a core with `cells` cells.
#[inline]
pub fn var_index(cells: usize, level: usize, cell: usize) -> usize {
    level * cells + cell
}

/// Multiplicity with which an adjacent fresh pair `{i, k}` is penalized.
pub fn fresh_pair_weight(layout: &CoreLayout, i: usize, k: usize, rule: FreshAdjacency) -> u32 {
    match rule {
        FreshAdjacency::Formula => {
            u32::from(!layout.is_border(i)) + u32::from(!layout.is_border(k))
        }
        FreshAdjacency::Prose => {
            let touches_border = |c: usize| {
                layout
                    .neighbors(c)
                    .map(|nb| nb.iter().any(|&j| layout.is_border(j)))
                    .unwrap_or(false)
            };
            if touches_border(i) || touches_border(k) {
                0
            } else {
                2
            }
        }
    }
}

/// Builds the penalty QUBO over `3N` variables.
pub fn encode(layout: &CoreLayout, counts: FuelCounts, options: &EncodeOptions) -> Result<QuboModel> {
    let n = layout.len();
    counts.check_total(n)?;
    options.weights.validate()?;
    let orbits = layout.symmetry_orbits(options.symmetry_group())?;
    let [w1, w2, w3, w4, w5] = options.weights.0;
    let var = |b: usize, i: usize| var_index(n, b, i);
    let mut q = QuboBuilder::new(LEVELS * n);

    for i in 0..n {
        let terms: Vec<(usize, f64)> = (0..LEVELS).map(|b| (var(b, i), 1.0)).collect();
        q.add_squared(&terms, -1.0, w1);
    }

    for (b, &target) in counts.by_level().iter().enumerate() {
        let terms: Vec<(usize, f64)> = (0..n).map(|i| (var(b, i), 1.0)).collect();
        q.add_squared(&terms, -(target as f64), w2);
    }

    let border: Vec<(usize, f64)> = layout
        .cells_in(crate::geometry::Region::Border)
        .map(|i| (var(2, i), 1.0))
        .collect();
    let inner: Vec<(usize, f64)> = layout
        .cells_in(crate::geometry::Region::Inner)
        .map(|i| (var(0, i), 1.0))
        .collect();
    for group in [&border, &inner] {
        match options.region_penalty {
            RegionPenalty::Squared => q.add_squared(group, 0.0, w3),
            RegionPenalty::Linear => {
                for &(v, c) in group.iter() {
                    q.add_linear(v, w3 * c);
                }
            }
        }
    }

    if w4 != 0.0 {
        for (i, k) in layout.edges() {
            let fresh = fresh_pair_weight(layout, i, k, options.fresh_adjacency);
            if fresh > 0 {
                q.add_quadratic(var(0, i), var(0, k), w4 * f64::from(fresh));
            }
            q.add_quadratic(var(2, i), var(2, k), w4 * 2.0);
        }
    }

    if w5 != 0.0 {
        for orbit in &orbits.orbits {
            let rep = orbit[0];
            for &j in &orbit[1..] {
                for b in 0..LEVELS {
                    // (x_rep − x_j)² = x_rep + x_j − 2·x_rep·x_j
                    q.add_linear(var(b, rep), w5);
                    q.add_linear(var(b, j), w5);
                    q.add_quadratic(var(b, rep), var(b, j), -2.0 * w5);
                }
            }
        }
    }

    Ok(q.build())
}
