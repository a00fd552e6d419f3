//! Decoding bit assignments into loading patterns and checking the
//! placement rules directly on the pattern, independently of the QUBO.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoder::{fresh_pair_weight, var_index, EncodeOptions, FuelCounts, LEVELS};
use crate::error::{Error, Result};
use crate::geometry::{CoreLayout, LatticeMap, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum BurnLevel {
    Fresh = 0,
    Once = 1,
    Twice = 2,
}

impl BurnLevel {
    pub const ALL: [BurnLevel; 3] = [BurnLevel::Fresh, BurnLevel::Once, BurnLevel::Twice];

    pub fn glyph(self) -> char {
        match self {
            BurnLevel::Fresh => 'F',
            BurnLevel::Once => 'O',
            BurnLevel::Twice => 'T',
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl From<BurnLevel> for u8 {
    fn from(b: BurnLevel) -> u8 {
        b as u8
    }
}

impl TryFrom<u8> for BurnLevel {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(BurnLevel::Fresh),
            1 => Ok(BurnLevel::Once),
            2 => Ok(BurnLevel::Twice),
            _ => Err(Error::OutOfAlphabet {
                index: 0,
                value: v.into(),
                alphabet: "burn level",
            }),
        }
    }
}

/// Burn level of every cell, indexed by cell id.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LoadingPattern {
    pub levels: Vec<BurnLevel>,
}

impl LoadingPattern {
    pub fn new(levels: Vec<BurnLevel>) -> Self {
        LoadingPattern { levels }
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn counts(&self) -> FuelCounts {
        let mut c = [0usize; LEVELS];
        for l in &self.levels {
            c[l.index()] += 1;
        }
        FuelCounts::new(c[0], c[1], c[2])
    }

    /// One-hot bit vector in level-major order.
    pub fn to_bits(&self) -> Vec<u8> {
        let n = self.levels.len();
        let mut z = vec![0u8; LEVELS * n];
        for (i, l) in self.levels.iter().enumerate() {
            z[var_index(n, l.index(), i)] = 1;
        }
        z
    }

    /// Rows of `F`/`O`/`T` glyphs laid out on the lattice.
    pub fn render(&self, layout: &CoreLayout) -> String {
        layout.render(|i| self.levels[i].glyph())
    }

    pub fn to_file(&self, layout_name: &str) -> PatternFile {
        PatternFile {
            layout: layout_name.to_string(),
            levels: self
                .levels
                .iter()
                .enumerate()
                .map(|(i, &l)| (i, l))
                .collect(),
        }
    }

    pub fn from_file(file: &PatternFile) -> Result<Self> {
        let n = file.levels.len();
        if let Some((&id, _)) = file.levels.iter().find(|(&id, _)| id >= n) {
            return Err(Error::PatternMismatch(format!(
                "cell id {id} outside 0..{n}"
            )));
        }
        Ok(LoadingPattern::new(file.levels.values().copied().collect()))
    }

    pub fn save(&self, layout_name: &str, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&self.to_file(layout_name))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(String, Self)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: PatternFile = serde_json::from_str(&text)?;
        Ok((file.layout.clone(), Self::from_file(&file)?))
    }
}

/// On-disk pattern: layout name and a map `cell id → 0|1|2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternFile {
    pub layout: String,
    pub levels: BTreeMap<usize, BurnLevel>,
}

/// Reads the pattern out of a one-hot assignment.
pub fn decode(z: &[u8], layout: &CoreLayout) -> Result<LoadingPattern> {
    let n = layout.len();
    if z.len() != LEVELS * n {
        return Err(Error::LengthMismatch {
            expected: LEVELS * n,
            got: z.len(),
        });
    }
    let mut bad = Vec::new();
    let mut levels = Vec::with_capacity(n);
    for i in 0..n {
        let set: Vec<BurnLevel> = BurnLevel::ALL
            .into_iter()
            .filter(|l| z[var_index(n, l.index(), i)] != 0)
            .collect();
        match set.as_slice() {
            [l] => levels.push(*l),
            _ => {
                bad.push(i);
                levels.push(BurnLevel::Fresh);
            }
        }
    }
    if bad.is_empty() {
        Ok(LoadingPattern::new(levels))
    } else {
        Err(Error::Decode { cells: bad })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    CellLoading,
    Counts,
    BorderTwice,
    InnerFresh,
    FreshAdjacency,
    TwiceAdjacency,
    RotSymmetry,
    MirrorSymmetry,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::CellLoading => "cell_loading",
            Rule::Counts => "counts",
            Rule::BorderTwice => "border_twice",
            Rule::InnerFresh => "inner_fresh",
            Rule::FreshAdjacency => "fresh_adjacency",
            Rule::TwiceAdjacency => "twice_adjacency",
            Rule::RotSymmetry => "rot_symmetry",
            Rule::MirrorSymmetry => "mirror_symmetry",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub cells: Vec<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        FeasibilityReport {
            feasible: violations.is_empty(),
            violations,
        }
    }

    pub fn rules(&self) -> Vec<Rule> {
        let mut r: Vec<Rule> = self.violations.iter().map(|v| v.rule).collect();
        r.sort_unstable();
        r.dedup();
        r
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    pub fn to_table(&self) -> String {
        if self.feasible {
            return "feasible\n".to_string();
        }
        let mut out = format!("infeasible: {} violation(s)\n", self.violations.len());
        out.push_str(&format!("{:<16} {:<16} message\n", "rule", "cells"));
        for v in &self.violations {
            let cells = v
                .cells
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(",");
            out.push_str(&format!("{:<16} {:<16} {}\n", v.rule.to_string(), cells, v.message));
        }
        out
    }
}

fn at(layout: &CoreLayout, i: usize) -> String {
    let c = layout.cells()[i];
    format!("{i}@({},{})", c.x, c.y)
}

/// Checks every placement rule on a decoded pattern.
pub fn check(
    pattern: &LoadingPattern,
    layout: &CoreLayout,
    counts: FuelCounts,
    options: &EncodeOptions,
) -> Result<FeasibilityReport> {
    let n = layout.len();
    if pattern.len() != n {
        return Err(Error::PatternMismatch(format!(
            "pattern has {} cells, layout `{}` has {n}",
            pattern.len(),
            layout.name()
        )));
    }
    let lv = &pattern.levels;
    let mut violations = Vec::new();

    let got = pattern.counts();
    if got != counts {
        violations.push(Violation {
            rule: Rule::Counts,
            cells: Vec::new(),
            message: format!("levels (fresh,once,twice) = ({got}), required ({counts})"),
        });
    }

    for i in 0..n {
        match (layout.region(i), lv[i]) {
            (Region::Border, BurnLevel::Twice) => violations.push(Violation {
                rule: Rule::BorderTwice,
                cells: vec![i],
                message: format!("twice-burnt fuel on border cell {}", at(layout, i)),
            }),
            (Region::Inner, BurnLevel::Fresh) => violations.push(Violation {
                rule: Rule::InnerFresh,
                cells: vec![i],
                message: format!("fresh fuel on inner cell {}", at(layout, i)),
            }),
            _ => {}
        }
    }

    for (i, k) in layout.edges() {
        match (lv[i], lv[k]) {
            (BurnLevel::Fresh, BurnLevel::Fresh)
                if fresh_pair_weight(layout, i, k, options.fresh_adjacency) > 0 =>
            {
                violations.push(Violation {
                    rule: Rule::FreshAdjacency,
                    cells: vec![i, k],
                    message: format!(
                        "adjacent fresh cells {} and {}",
                        at(layout, i),
                        at(layout, k)
                    ),
                })
            }
            (BurnLevel::Twice, BurnLevel::Twice) => violations.push(Violation {
                rule: Rule::TwiceAdjacency,
                cells: vec![i, k],
                message: format!(
                    "adjacent twice-burnt cells {} and {}",
                    at(layout, i),
                    at(layout, k)
                ),
            }),
            _ => {}
        }
    }

    let mut symmetry = Vec::new();
    if options.rotational_symmetry {
        symmetry.push((Rule::RotSymmetry, vec![LatticeMap::Rotate(1)]));
    }
    if options.mirror_symmetry {
        symmetry.push((Rule::MirrorSymmetry, vec![LatticeMap::MirrorV, LatticeMap::MirrorH]));
    }
    for (rule, maps) in symmetry {
        let mut flagged = std::collections::BTreeSet::new();
        for map in maps {
            let perm = layout.permutation(map).map_err(|id| {
                let c = layout.cells()[id];
                Error::AsymmetricLayout {
                    group: rule.to_string(),
                    id,
                    x: c.x,
                    y: c.y,
                }
            })?;
            for (i, &j) in perm.iter().enumerate() {
                let pair = (i.min(j), i.max(j));
                if lv[i] != lv[j] && flagged.insert(pair) {
                    violations.push(Violation {
                        rule,
                        cells: vec![pair.0, pair.1],
                        message: format!(
                            "{} is {:?} but its image {} is {:?}",
                            at(layout, pair.0),
                            lv[pair.0],
                            at(layout, pair.1),
                            lv[pair.1]
                        ),
                    });
                }
            }
        }
    }

    Ok(FeasibilityReport::from_violations(violations))
}

/// Decodes and checks a raw assignment; a decode failure is reported as
/// a `cell_loading` violation.
pub fn check_bits(
    z: &[u8],
    layout: &CoreLayout,
    counts: FuelCounts,
    options: &EncodeOptions,
) -> Result<FeasibilityReport> {
    match decode(z, layout) {
        Ok(p) => check(&p, layout, counts, options),
        Err(Error::Decode { cells }) => Ok(FeasibilityReport::from_violations(vec![Violation {
            message: format!("cells {cells:?} do not hold exactly one burn level"),
            rule: Rule::CellLoading,
            cells,
        }])),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_disc_core;

    fn reference_13() -> (CoreLayout, LoadingPattern) {
        let l = build_disc_core(4);
        let levels = (0..l.len())
            .map(|i| match l.region(i) {
                Region::Border => BurnLevel::Fresh,
                Region::Middle => BurnLevel::Once,
                Region::Inner => BurnLevel::Twice,
            })
            .collect();
        (l, LoadingPattern::new(levels))
    }

    #[test]
    fn decode_cases() {
        let l = build_disc_core(0);
        assert_eq!(
            decode(&[1, 0, 0], &l).unwrap().levels,
            vec![BurnLevel::Fresh]
        );
        assert!(matches!(
            decode(&[1, 1, 0], &l),
            Err(Error::Decode { cells }) if cells == vec![0]
        ));
        assert!(matches!(
            decode(&[0, 0, 0, 0], &l),
            Err(Error::LengthMismatch { .. })
        ));
        let two = CoreLayout::from_points("two", &[(0, 0), (1, 0)]).unwrap();
        // x⁰ block first: cell 0 fresh, cell 1 twice.
        let p = decode(&[1, 0, 0, 0, 0, 1], &two).unwrap();
        assert_eq!(p.levels, vec![BurnLevel::Fresh, BurnLevel::Twice]);
        assert_eq!(p.to_bits(), vec![1, 0, 0, 0, 0, 1]);
    }

    #[test]
    fn reference_pattern_is_feasible() {
        let (l, p) = reference_13();
        let all = EncodeOptions::with_symmetry(true, true);
        let r = check(&p, &l, FuelCounts::new(8, 4, 1), &all).unwrap();
        assert!(r.feasible, "{}", r.to_table());
        assert_eq!(r.to_table(), "feasible\n");
    }

    #[test]
    fn fresh_in_center_breaks_inner_and_counts() {
        let (l, mut p) = reference_13();
        let c = l.at(0, 0).unwrap();
        p.levels[c] = BurnLevel::Fresh;
        let r = check(&p, &l, FuelCounts::new(8, 4, 1), &EncodeOptions::default()).unwrap();
        assert_eq!(r.rules(), vec![Rule::Counts, Rule::InnerFresh]);
        assert!(!r.feasible);
    }

    #[test]
    fn adjacent_twice_pair_names_both_cells() {
        let (l, mut p) = reference_13();
        let c = l.at(0, 0).unwrap();
        let right = l.at(1, 0).unwrap();
        p.levels[right] = BurnLevel::Twice;
        let r = check(&p, &l, p.counts(), &EncodeOptions::default()).unwrap();
        assert_eq!(r.rules(), vec![Rule::TwiceAdjacency]);
        let mut cells = r.violations[0].cells.clone();
        cells.sort_unstable();
        let mut expected = vec![c, right];
        expected.sort_unstable();
        assert_eq!(cells, expected);
        assert!(r.violations[0].message.contains("(1,0)"));
    }

    #[test]
    fn fresh_pairs_on_the_border_are_allowed() {
        let (l, mut p) = reference_13();
        let top = l.at(0, 1).unwrap();
        let top_tip = l.at(0, 2).unwrap();
        assert!(l.is_border(top_tip) && !l.is_border(top));
        // border-border fresh pairs exist in the reference pattern already
        p.levels[top] = BurnLevel::Fresh;
        let r = check(&p, &l, p.counts(), &EncodeOptions::default()).unwrap();
        assert!(r.has(Rule::FreshAdjacency));
        assert!(r.violations.iter().all(|v| v.rule == Rule::FreshAdjacency));
    }

    #[test]
    fn symmetry_rules() {
        let (l, mut p) = reference_13();
        let tip = l.at(2, 0).unwrap();
        p.levels[tip] = BurnLevel::Once;
        let counts = p.counts();
        let none = check(&p, &l, counts, &EncodeOptions::default()).unwrap();
        assert!(none.feasible);
        let rot = check(&p, &l, counts, &EncodeOptions::with_symmetry(true, false)).unwrap();
        assert_eq!(rot.rules(), vec![Rule::RotSymmetry]);
        let mir = check(&p, &l, counts, &EncodeOptions::with_symmetry(false, true)).unwrap();
        assert_eq!(mir.rules(), vec![Rule::MirrorSymmetry]);
        let both = check(&p, &l, counts, &EncodeOptions::with_symmetry(true, true)).unwrap();
        assert_eq!(both.rules(), vec![Rule::RotSymmetry, Rule::MirrorSymmetry]);
    }

    #[test]
    fn check_bits_reports_cell_loading() {
        let l = build_disc_core(0);
        let r = check_bits(&[0, 1, 1], &l, FuelCounts::new(1, 0, 0), &EncodeOptions::default())
            .unwrap();
        assert_eq!(r.rules(), vec![Rule::CellLoading]);
    }

    #[test]
    fn pattern_mismatch_and_file_round_trip() {
        let (l, p) = reference_13();
        let short = LoadingPattern::new(p.levels[..5].to_vec());
        assert!(matches!(
            check(&short, &l, FuelCounts::new(8, 4, 1), &EncodeOptions::default()),
            Err(Error::PatternMismatch(_))
        ));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        p.save("core13", &path).unwrap();
        let (name, back) = LoadingPattern::load(&path).unwrap();
        assert_eq!(name, "core13");
        assert_eq!(back, p);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"0\": 0"));
    }

    #[test]
    fn render_glyphs() {
        let (l, p) = reference_13();
        assert_eq!(p.render(&l), "    F\n  F O F\nF O T O F\n  F O F\n    F\n");
    }

    #[test]
    fn check_is_pure() {
        let (l, mut p) = reference_13();
        p.levels[0] = BurnLevel::Twice;
        let o = EncodeOptions::with_symmetry(true, true);
        let a = check(&p, &l, FuelCounts::new(8, 4, 1), &o).unwrap();
        let b = check(&p, &l, FuelCounts::new(8, 4, 1), &o).unwrap();
        assert_eq!(a, b);
    }
}
