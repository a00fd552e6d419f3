//! Built-in cores and their reference fuel counts.

use crate::encoder::FuelCounts;
use crate::error::{Error, Result};
use crate::geometry::{build_disc_core, build_square_core, CoreLayout};

#[derive(Debug, Clone, Copy)]
pub enum Shape {
    Disc { radius_sq: u32 },
    Square { side: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub shape: Shape,
    pub cells: usize,
    pub counts: FuelCounts,
    /// Boundary distance at which the inner region starts.
    pub inner_depth: usize,
}

/// The seven benchmark cores with their published (fresh, once, twice)
/// counts. Each core's inner depth is the smallest one (largest inner
/// region) at which its counts admit a feasible pattern; at depth 2 the
/// 69-, 97- and 193-cell rows have none. The 121- and 241-cell rows do not sum to the cell count
/// (130 and 240); they are kept as published and rejected at encode time.
pub const TABLE1: [Preset; 7] = [
    Preset {
        name: "core13",
        shape: Shape::Disc { radius_sq: 4 },
        cells: 13,
        counts: FuelCounts::new(8, 4, 1),
        inner_depth: 2,
    },
    Preset {
        name: "core37",
        shape: Shape::Disc { radius_sq: 10 },
        cells: 37,
        counts: FuelCounts::new(16, 17, 4),
        inner_depth: 2,
    },
    Preset {
        name: "core69",
        shape: Shape::Disc { radius_sq: 20 },
        cells: 69,
        counts: FuelCounts::new(33, 21, 15),
        inner_depth: 4,
    },
    Preset {
        name: "core97",
        shape: Shape::Disc { radius_sq: 29 },
        cells: 97,
        counts: FuelCounts::new(36, 36, 25),
        inner_depth: 3,
    },
    Preset {
        name: "core121",
        shape: Shape::Square { side: 11 },
        cells: 121,
        counts: FuelCounts::new(49, 45, 36),
        inner_depth: 2,
    },
    Preset {
        name: "pwr193",
        shape: Shape::Disc { radius_sq: 61 },
        cells: 193,
        counts: FuelCounts::new(64, 80, 49),
        inner_depth: 3,
    },
    Preset {
        name: "core241",
        shape: Shape::Disc { radius_sq: 74 },
        cells: 241,
        counts: FuelCounts::new(75, 100, 65),
        inner_depth: 2,
    },
];

/// Small cores used for exhaustive checks; not part of the benchmark table.
pub const EXTRA: [(&str, Shape); 2] = [
    ("plus5", Shape::Disc { radius_sq: 1 }),
    ("single", Shape::Disc { radius_sq: 0 }),
];

impl Preset {
    /// True when the reference counts add up to the cell count.
    pub fn consistent(&self) -> bool {
        self.counts.total() == self.cells
    }
}

pub fn preset(name: &str) -> Option<&'static Preset> {
    TABLE1.iter().find(|p| p.name == name)
}

pub fn names() -> Vec<&'static str> {
    TABLE1
        .iter()
        .map(|p| p.name)
        .chain(EXTRA.iter().map(|(n, _)| *n))
        .collect()
}

fn build(shape: Shape) -> CoreLayout {
    match shape {
        Shape::Disc { radius_sq } => build_disc_core(radius_sq),
        Shape::Square { side } => build_square_core(side).expect("preset sides are odd"),
    }
}

/// Builds a named core; table presets are checked against their cell count.
pub fn builtin_core(name: &str) -> Result<CoreLayout> {
    if let Some(p) = preset(name) {
        let layout = build(p.shape)
            .with_name(p.name)
            .classify_regions(p.inner_depth)?;
        assert_eq!(layout.len(), p.cells, "preset {} drifted", p.name);
        return Ok(layout);
    }
    EXTRA
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, s)| build(*s).with_name(*n))
        .ok_or_else(|| Error::UnknownCore(name.to_string()))
}

/// Reference counts for a core of `cells` cells, if it is a table row.
pub fn table1_counts(cells: usize) -> Option<FuelCounts> {
    TABLE1.iter().find(|p| p.cells == cells).map(|p| p.counts)
}
