//! Square-lattice reactor cores: cells, von Neumann adjacency, region
//! classes and symmetry orbits.
//!
//! Coordinates put the core center at the origin with `y` pointing up.
//! Cell ids are row-major, top row first, left to right within a row.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_INNER_DEPTH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub id: usize,
    pub x: i32,
    pub y: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Border,
    Middle,
    Inner,
}

impl Region {
    pub fn marker(self) -> char {
        match self {
            Region::Border => 'P',
            Region::Middle => 'M',
            Region::Inner => 'I',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Left,
    Right,
    Top,
    Bottom,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Left,
        Direction::Right,
        Direction::Top,
        Direction::Bottom,
    ];

    fn offset(self) -> (i32, i32) {
        match self {
            Direction::Left => (-1, 0),
            Direction::Right => (1, 0),
            Direction::Top => (0, 1),
            Direction::Bottom => (0, -1),
        }
    }
}

/// A reactor core on the square lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreLayout {
    name: String,
    cells: Vec<Cell>,
    adjacency: Vec<Vec<usize>>,
    regions: Vec<Region>,
    inner_depth: usize,
    overrides: BTreeMap<usize, Region>,
    index: HashMap<(i32, i32), usize>,
}

impl CoreLayout {
    /// Builds a layout from cells whose ids are already `0..n` in order.
    fn from_cells(
        name: impl Into<String>,
        cells: Vec<Cell>,
        inner_depth: usize,
        overrides: BTreeMap<usize, Region>,
    ) -> Self {
        let index: HashMap<(i32, i32), usize> =
            cells.iter().map(|c| ((c.x, c.y), c.id)).collect();
        let adjacency = cells
            .iter()
            .map(|c| {
                Direction::ALL
                    .iter()
                    .filter_map(|d| {
                        let (dx, dy) = d.offset();
                        index.get(&(c.x + dx, c.y + dy)).copied()
                    })
                    .collect()
            })
            .collect();
        let mut layout = CoreLayout {
            name: name.into(),
            cells,
            adjacency,
            regions: Vec::new(),
            inner_depth,
            overrides,
            index,
        };
        layout.regions = layout.compute_regions();
        layout
    }

    /// Builds a layout from arbitrary lattice points, assigning row-major ids.
    pub fn from_points(name: impl Into<String>, points: &[(i32, i32)]) -> Result<Self> {
        let mut sorted: Vec<(i32, i32)> = points.to_vec();
        sorted.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::MalformedLayout(format!(
                "duplicate coordinates ({}, {})",
                w[0].0, w[0].1
            )));
        }
        let cells = sorted
            .into_iter()
            .enumerate()
            .map(|(id, (x, y))| Cell { id, x, y })
            .collect();
        Ok(Self::from_cells(
            name,
            cells,
            DEFAULT_INNER_DEPTH,
            BTreeMap::new(),
        ))
    }

    fn compute_regions(&self) -> Vec<Region> {
        let n = self.cells.len();
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for (i, nb) in self.adjacency.iter().enumerate() {
            if nb.len() < 4 {
                dist[i] = 0;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            for &j in &self.adjacency[i] {
                if dist[j] == usize::MAX {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        (0..n)
            .map(|i| {
                if let Some(&r) = self.overrides.get(&i) {
                    r
                } else if dist[i] == 0 {
                    Region::Border
                } else if dist[i] >= self.inner_depth {
                    Region::Inner
                } else {
                    Region::Middle
                }
            })
            .collect()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, id: usize) -> Result<&Cell> {
        self.cells.get(id).ok_or(Error::InvalidCell {
            id,
            len: self.cells.len(),
        })
    }

    pub fn inner_depth(&self) -> usize {
        self.inner_depth
    }

    pub fn region_overrides(&self) -> &BTreeMap<usize, Region> {
        &self.overrides
    }

    pub fn region(&self, id: usize) -> Region {
        self.regions[id]
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn is_border(&self, id: usize) -> bool {
        self.regions[id] == Region::Border
    }

    pub fn cells_in(&self, region: Region) -> impl Iterator<Item = usize> + '_ {
        self.regions
            .iter()
            .enumerate()
            .filter(move |(_, r)| **r == region)
            .map(|(i, _)| i)
    }

    /// Counts of (border, middle, inner) cells.
    pub fn region_tally(&self) -> (usize, usize, usize) {
        self.regions
            .iter()
            .fold((0, 0, 0), |(b, m, i), r| match r {
                Region::Border => (b + 1, m, i),
                Region::Middle => (b, m + 1, i),
                Region::Inner => (b, m, i + 1),
            })
    }

    /// In-core von Neumann neighbors in left, right, top, bottom order.
    pub fn neighbors(&self, id: usize) -> Result<&[usize]> {
        self.cell(id)?;
        Ok(&self.adjacency[id])
    }

    pub fn neighbor(&self, id: usize, dir: Direction) -> Option<usize> {
        let c = self.cells.get(id)?;
        let (dx, dy) = dir.offset();
        self.at(c.x + dx, c.y + dy)
    }

    pub fn at(&self, x: i32, y: i32) -> Option<usize> {
        self.index.get(&(x, y)).copied()
    }

    /// Unordered adjacent pairs `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |&&j| i < j).map(move |&j| (i, j)))
            .collect();
        edges.sort_unstable();
        edges
    }

    /// Reclassifies regions with a new inner depth, keeping explicit overrides.
    pub fn classify_regions(&self, inner_depth: usize) -> Result<CoreLayout> {
        if inner_depth == 0 {
            return Err(Error::InvalidInnerDepth);
        }
        let mut out = self.clone();
        out.inner_depth = inner_depth;
        out.regions = out.compute_regions();
        Ok(out)
    }

    /// Pins `id` to `region` regardless of its boundary distance.
    pub fn with_override(mut self, id: usize, region: Region) -> Result<CoreLayout> {
        self.cell(id)?;
        self.overrides.insert(id, region);
        self.regions = self.compute_regions();
        Ok(self)
    }

    pub fn symmetry_orbits(&self, group: SymmetryGroup) -> Result<SymmetryOrbits> {
        SymmetryOrbits::compute(self, group)
    }

    /// Maps every cell through a lattice transform; `None` if some image is off-core.
    pub fn permutation(&self, map: LatticeMap) -> std::result::Result<Vec<usize>, usize> {
        self.cells
            .iter()
            .map(|c| {
                let (x, y) = map.apply(c.x, c.y);
                self.at(x, y).ok_or(c.id)
            })
            .collect()
    }

    pub fn to_file(&self) -> LayoutFile {
        LayoutFile {
            name: self.name.clone(),
            cells: self.cells.clone(),
            region_overrides: if self.overrides.is_empty() {
                None
            } else {
                Some(self.overrides.clone())
            },
            inner_depth: Some(self.inner_depth),
        }
    }

    pub fn from_file(file: LayoutFile) -> Result<CoreLayout> {
        let n = file.cells.len();
        let mut slots: Vec<Option<Cell>> = vec![None; n];
        let mut seen = BTreeSet::new();
        for c in &file.cells {
            if c.id >= n {
                return Err(Error::MalformedLayout(format!(
                    "cell id {} is outside 0..{}",
                    c.id, n
                )));
            }
            if slots[c.id].is_some() {
                return Err(Error::MalformedLayout(format!("duplicate cell id {}", c.id)));
            }
            if !seen.insert((c.x, c.y)) {
                return Err(Error::MalformedLayout(format!(
                    "duplicate coordinates ({}, {})",
                    c.x, c.y
                )));
            }
            slots[c.id] = Some(*c);
        }
        let cells: Vec<Cell> = slots.into_iter().map(|c| c.expect("ids checked")).collect();
        let inner_depth = file.inner_depth.unwrap_or(DEFAULT_INNER_DEPTH);
        if inner_depth == 0 {
            return Err(Error::InvalidInnerDepth);
        }
        let overrides = file.region_overrides.unwrap_or_default();
        if let Some(&id) = overrides.keys().find(|&&id| id >= n) {
            return Err(Error::MalformedLayout(format!(
                "region override for unknown cell {id}"
            )));
        }
        Ok(Self::from_cells(file.name, cells, inner_depth, overrides))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&self.to_file())?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<CoreLayout> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: LayoutFile = serde_json::from_str(&text)
            .map_err(|e| Error::MalformedLayout(e.to_string()))?;
        Self::from_file(file)
    }

    /// Renders one character per cell, rows top to bottom, blanks off-core.
    pub fn render<F: Fn(usize) -> char>(&self, glyph: F) -> String {
        if self.cells.is_empty() {
            return String::new();
        }
        let (min_x, max_x) = self
            .cells
            .iter()
            .fold((i32::MAX, i32::MIN), |(lo, hi), c| (lo.min(c.x), hi.max(c.x)));
        let (min_y, max_y) = self
            .cells
            .iter()
            .fold((i32::MAX, i32::MIN), |(lo, hi), c| (lo.min(c.y), hi.max(c.y)));
        let mut out = String::new();
        for y in (min_y..=max_y).rev() {
            let row: Vec<String> = (min_x..=max_x)
                .map(|x| match self.at(x, y) {
                    Some(id) => glyph(id).to_string(),
                    None => " ".to_string(),
                })
                .collect();
            out.push_str(row.join(" ").trim_end());
            out.push('\n');
        }
        out
    }
}

/// On-disk layout document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutFile {
    pub name: String,
    pub cells: Vec<Cell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_overrides: Option<BTreeMap<usize, Region>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_depth: Option<usize>,
}

/// All lattice points with `x² + y² <= radius_sq`.
pub fn build_disc_core(radius_sq: u32) -> CoreLayout {
    let r = (radius_sq as f64).sqrt().floor() as i32;
    let points: Vec<(i32, i32)> = (-r..=r)
        .flat_map(|y| (-r..=r).map(move |x| (x, y)))
        .filter(|&(x, y)| (x * x + y * y) as u32 <= radius_sq)
        .collect();
    CoreLayout::from_points(format!("disc{radius_sq}"), &points).expect("lattice points are unique")
}

/// Full `n × n` lattice centered at the origin; `n` must be odd.
pub fn build_square_core(n: usize) -> Result<CoreLayout> {
    if n % 2 == 0 {
        return Err(Error::EvenSquareCore(n));
    }
    let h = (n / 2) as i32;
    let points: Vec<(i32, i32)> = (-h..=h)
        .flat_map(|y| (-h..=h).map(move |x| (x, y)))
        .collect();
    CoreLayout::from_points(format!("square{n}"), &points)
}

/// Point maps of the square lattice about the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeMap {
    Identity,
    /// Counterclockwise rotation by `quarter_turns × 90°`.
    Rotate(u8),
    /// Reflection across the vertical axis, `(x, y) → (−x, y)`.
    MirrorV,
    /// Reflection across the horizontal axis, `(x, y) → (x, −y)`.
    MirrorH,
    /// Reflection across `y = x`.
    Diagonal,
    /// Reflection across `y = −x`.
    AntiDiagonal,
}

impl LatticeMap {
    pub fn apply(self, x: i32, y: i32) -> (i32, i32) {
        match self {
            LatticeMap::Identity => (x, y),
            LatticeMap::Rotate(k) => (0..k % 4).fold((x, y), |(x, y), _| (-y, x)),
            LatticeMap::MirrorV => (-x, y),
            LatticeMap::MirrorH => (x, -y),
            LatticeMap::Diagonal => (y, x),
            LatticeMap::AntiDiagonal => (-y, -x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryGroup {
    Identity,
    /// C4: rotations by multiples of 90°.
    Rotational,
    /// Reflections across the vertical and horizontal axes and their product.
    Mirror,
    /// D4: rotations and reflections.
    Full,
}

impl SymmetryGroup {
    pub fn elements(self) -> Vec<LatticeMap> {
        use LatticeMap::*;
        match self {
            SymmetryGroup::Identity => vec![Identity],
            SymmetryGroup::Rotational => vec![Identity, Rotate(1), Rotate(2), Rotate(3)],
            SymmetryGroup::Mirror => vec![Identity, MirrorV, MirrorH, Rotate(2)],
            SymmetryGroup::Full => vec![
                Identity,
                Rotate(1),
                Rotate(2),
                Rotate(3),
                MirrorV,
                MirrorH,
                Diagonal,
                AntiDiagonal,
            ],
        }
    }

    pub fn order(self) -> usize {
        self.elements().len()
    }

    /// Group generated by the enabled symmetry constraints.
    pub fn from_flags(rotational: bool, mirror: bool) -> Self {
        match (rotational, mirror) {
            (false, false) => SymmetryGroup::Identity,
            (true, false) => SymmetryGroup::Rotational,
            (false, true) => SymmetryGroup::Mirror,
            (true, true) => SymmetryGroup::Full,
        }
    }
}

impl fmt::Display for SymmetryGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SymmetryGroup::Identity => "identity",
            SymmetryGroup::Rotational => "rotational",
            SymmetryGroup::Mirror => "mirror",
            SymmetryGroup::Full => "full",
        };
        f.write_str(s)
    }
}

/// Equivalence classes of cells under a symmetry group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetryOrbits {
    pub group: SymmetryGroup,
    /// Each orbit sorted ascending; orbits sorted by their smallest id.
    pub orbits: Vec<Vec<usize>>,
}

impl SymmetryOrbits {
    fn compute(layout: &CoreLayout, group: SymmetryGroup) -> Result<Self> {
        let perms = group
            .elements()
            .into_iter()
            .map(|m| {
                layout.permutation(m).map_err(|id| {
                    let c = layout.cells[id];
                    Error::AsymmetricLayout {
                        group: group.to_string(),
                        id,
                        x: c.x,
                        y: c.y,
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut assigned = vec![false; layout.len()];
        let mut orbits = Vec::new();
        for start in 0..layout.len() {
            if assigned[start] {
                continue;
            }
            let orbit: BTreeSet<usize> = perms.iter().map(|p| p[start]).collect();
            for &i in &orbit {
                assigned[i] = true;
            }
            orbits.push(orbit.into_iter().collect());
        }
        Ok(SymmetryOrbits { group, orbits })
    }

    /// Orbit index of every cell.
    pub fn membership(&self, n: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; n];
        for (k, orbit) in self.orbits.iter().enumerate() {
            for &i in orbit {
                out[i] = k;
            }
        }
        out
    }
}
