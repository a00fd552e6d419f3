//! Sparse QUBO and Ising models with a constant offset, the `s = 2z − 1`
//! mapping between them, and their text file formats.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accumulates QUBO terms in any order; `build` drops zero coefficients.
#[derive(Debug, Clone, Default)]
pub struct QuboBuilder {
    n: usize,
    linear: BTreeMap<usize, f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    offset: f64,
}

impl QuboBuilder {
    pub fn new(n: usize) -> Self {
        QuboBuilder {
            n,
            ..Default::default()
        }
    }

    pub fn add_offset(&mut self, value: f64) {
        self.offset += value;
    }

    pub fn add_linear(&mut self, i: usize, value: f64) {
        assert!(i < self.n, "variable {i} out of range");
        *self.linear.entry(i).or_insert(0.0) += value;
    }

    /// `value · z_i · z_j`; a diagonal pair folds into the linear term.
    pub fn add_quadratic(&mut self, i: usize, j: usize, value: f64) {
        assert!(i < self.n && j < self.n, "pair ({i}, {j}) out of range");
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => self.add_linear(i, value),
            std::cmp::Ordering::Less => *self.quadratic.entry((i, j)).or_insert(0.0) += value,
            std::cmp::Ordering::Greater => *self.quadratic.entry((j, i)).or_insert(0.0) += value,
        }
    }

    /// Adds `weight · (Σ cᵢ zᵢ + constant)²`, expanded with `zᵢ² = zᵢ`.
    pub fn add_squared(&mut self, terms: &[(usize, f64)], constant: f64, weight: f64) {
        if weight == 0.0 {
            return;
        }
        self.add_offset(weight * constant * constant);
        for (a, &(i, ci)) in terms.iter().enumerate() {
            self.add_linear(i, weight * (ci * ci + 2.0 * ci * constant));
            for &(j, cj) in &terms[a + 1..] {
                self.add_quadratic(i, j, weight * 2.0 * ci * cj);
            }
        }
    }

    pub fn build(self) -> QuboModel {
        QuboModel {
            n: self.n,
            linear: self.linear.into_iter().filter(|(_, v)| *v != 0.0).collect(),
            quadratic: self
                .quadratic
                .into_iter()
                .filter(|(_, v)| *v != 0.0)
                .collect(),
            offset: self.offset,
        }
    }
}

/// `E(z) = offset + Σ linear[i]·zᵢ + Σ_{i<j} quadratic[(i, j)]·zᵢ·zⱼ`, `z ∈ {0, 1}ⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboModel {
    pub n: usize,
    pub linear: BTreeMap<usize, f64>,
    pub quadratic: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
}

impl QuboModel {
    pub fn empty(n: usize) -> Self {
        QuboBuilder::new(n).build()
    }

    /// Checks the structural invariants: indices in range, strictly upper
    /// triangular pairs, no stored zeros.
    pub fn validate(&self) -> Result<()> {
        for (&i, &v) in &self.linear {
            if i >= self.n || v == 0.0 || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("bad linear term {i}: {v}")));
            }
        }
        for (&(i, j), &v) in &self.quadratic {
            if i >= j || j >= self.n || v == 0.0 || !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "bad quadratic term ({i}, {j}): {v}"
                )));
            }
        }
        Ok(())
    }

    /// Sums offset, then linear terms, then quadratic terms, each in key order.
    pub fn energy(&self, z: &[u8]) -> Result<f64> {
        if z.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: z.len(),
            });
        }
        Ok(self.energy_unchecked(z))
    }

    pub(crate) fn energy_unchecked(&self, z: &[u8]) -> f64 {
        let mut e = self.offset;
        for (&i, &v) in &self.linear {
            if z[i] != 0 {
                e += v;
            }
        }
        for (&(i, j), &v) in &self.quadratic {
            if z[i] != 0 && z[j] != 0 {
                e += v;
            }
        }
        e
    }

    /// Symmetric neighbor lists: for each variable, `(other, coefficient)`.
    pub fn neighbor_lists(&self) -> Vec<Vec<(usize, f64)>> {
        let mut out = vec![Vec::new(); self.n];
        for (&(i, j), &v) in &self.quadratic {
            out[i].push((j, v));
            out[j].push((i, v));
        }
        out
    }

    pub fn linear_vec(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (&i, &v) in &self.linear {
            out[i] = v;
        }
        out
    }

    /// Substitutes `zᵢ = (sᵢ + 1) / 2`; energies agree for every assignment.
    pub fn to_ising(&self) -> IsingModel {
        let mut h: BTreeMap<usize, f64> = BTreeMap::new();
        let mut j: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut offset = self.offset;
        for (&i, &q) in &self.linear {
            *h.entry(i).or_insert(0.0) += q / 2.0;
            offset += q / 2.0;
        }
        for (&(a, b), &q) in &self.quadratic {
            let quarter = q / 4.0;
            *j.entry((a, b)).or_insert(0.0) += quarter;
            *h.entry(a).or_insert(0.0) += quarter;
            *h.entry(b).or_insert(0.0) += quarter;
            offset += quarter;
        }
        IsingModel {
            n: self.n,
            h: h.into_iter().filter(|(_, v)| *v != 0.0).collect(),
            j: j.into_iter().filter(|(_, v)| *v != 0.0).collect(),
            offset,
        }
    }

    pub fn to_text(&self) -> String {
        write_model("qubo", self.n, &self.linear, &self.quadratic, self.offset)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (n, linear, quadratic, offset) = parse_model("qubo", text)?;
        Ok(QuboModel {
            n,
            linear,
            quadratic,
            offset,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// `E(s) = offset + Σ h[i]·sᵢ + Σ_{i<j} j[(i, j)]·sᵢ·sⱼ`, `s ∈ {−1, +1}ⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingModel {
    pub n: usize,
    pub h: BTreeMap<usize, f64>,
    pub j: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
}

impl IsingModel {
    pub fn energy(&self, s: &[i8]) -> Result<f64> {
        if s.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: s.len(),
            });
        }
        let mut e = self.offset;
        for (&i, &v) in &self.h {
            e += v * f64::from(s[i]);
        }
        for (&(a, b), &v) in &self.j {
            e += v * f64::from(s[a] * s[b]);
        }
        Ok(e)
    }

    pub fn field_vec(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (&i, &v) in &self.h {
            out[i] = v;
        }
        out
    }

    pub fn coupling_lists(&self) -> Vec<Vec<(usize, f64)>> {
        let mut out = vec![Vec::new(); self.n];
        for (&(a, b), &v) in &self.j {
            out[a].push((b, v));
            out[b].push((a, v));
        }
        out
    }

    pub fn to_text(&self) -> String {
        write_model("ising", self.n, &self.h, &self.j, self.offset)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (n, h, j, offset) = parse_model("ising", text)?;
        Ok(IsingModel { n, h, j, offset })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// `−1 → 0`, `+1 → 1`.
pub fn spins_to_bits(s: &[i8]) -> Result<Vec<u8>> {
    s.iter()
        .enumerate()
        .map(|(index, &v)| match v {
            1 => Ok(1),
            -1 => Ok(0),
            _ => Err(Error::OutOfAlphabet {
                index,
                value: v.into(),
                alphabet: "spin",
            }),
        })
        .collect()
}

/// `0 → −1`, `1 → +1`.
pub fn bits_to_spins(z: &[u8]) -> Result<Vec<i8>> {
    z.iter()
        .enumerate()
        .map(|(index, &v)| match v {
            1 => Ok(1),
            0 => Ok(-1),
            _ => Err(Error::OutOfAlphabet {
                index,
                value: v.into(),
                alphabet: "bit",
            }),
        })
        .collect()
}

// `{}` on f64 prints the shortest string that parses back to the same value.
fn write_model(
    tag: &str,
    n: usize,
    linear: &BTreeMap<usize, f64>,
    quadratic: &BTreeMap<(usize, usize), f64>,
    offset: f64,
) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{tag} {n} {} {} {offset}",
        linear.len(),
        quadratic.len()
    );
    for (i, v) in linear {
        let _ = writeln!(out, "{i} {v}");
    }
    for ((i, j), v) in quadratic {
        let _ = writeln!(out, "{i} {j} {v}");
    }
    out
}

type ParsedModel = (
    usize,
    BTreeMap<usize, f64>,
    BTreeMap<(usize, usize), f64>,
    f64,
);

fn parse_model(tag: &str, text: &str) -> Result<ParsedModel> {
    fn err(line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
    fn num<T: std::str::FromStr>(line: usize, tok: &str) -> Result<T> {
        tok.parse()
            .map_err(|_| err(line, format!("cannot parse `{tok}`")))
    }
    fn coeff(line: usize, tok: &str) -> Result<f64> {
        let v: f64 = num(line, tok)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(err(line, format!("non-finite coefficient `{tok}`")))
        }
    }

    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| err(0, "missing header"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 5 || toks[0] != tag {
        return Err(err(
            hline,
            format!("expected `{tag} <n_vars> <n_linear> <n_quadratic> <offset>`"),
        ));
    }
    let n: usize = num(hline, toks[1])?;
    let n_lin: usize = num(hline, toks[2])?;
    let n_quad: usize = num(hline, toks[3])?;
    let offset = coeff(hline, toks[4])?;

    let mut linear = BTreeMap::new();
    let mut quadratic = BTreeMap::new();
    let mut last_lin: Option<usize> = None;
    let mut last_quad: Option<(usize, usize)> = None;
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.len() {
            2 => {
                if !quadratic.is_empty() {
                    return Err(err(ln, "linear term after quadratic terms"));
                }
                let i: usize = num(ln, toks[0])?;
                if i >= n {
                    return Err(err(ln, format!("index {i} out of range")));
                }
                if last_lin.is_some_and(|p| p >= i) {
                    return Err(err(ln, "linear terms not strictly ascending"));
                }
                last_lin = Some(i);
                linear.insert(i, coeff(ln, toks[1])?);
            }
            3 => {
                let i: usize = num(ln, toks[0])?;
                let j: usize = num(ln, toks[1])?;
                if i >= j || j >= n {
                    return Err(err(ln, format!("pair ({i}, {j}) must satisfy i < j < n")));
                }
                if last_quad.is_some_and(|p| p >= (i, j)) {
                    return Err(err(ln, "quadratic terms not strictly ascending"));
                }
                last_quad = Some((i, j));
                quadratic.insert((i, j), coeff(ln, toks[2])?);
            }
            _ => return Err(err(ln, "expected `<i> <coeff>` or `<i> <j> <coeff>`")),
        }
    }
    if linear.len() != n_lin || quadratic.len() != n_quad {
        return Err(err(
            hline,
            format!(
                "header announces {n_lin} linear / {n_quad} quadratic terms, found {} / {}",
                linear.len(),
                quadratic.len()
            ),
        ));
    }
    Ok((n, linear, quadratic, offset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn energy_basics() {
        let m = QuboModel::empty(3);
        assert_eq!(m.energy(&[1, 0, 1]).unwrap(), 0.0);
        let mut b = QuboBuilder::new(1);
        b.add_linear(0, 2.0);
        b.add_offset(-1.0);
        assert_eq!(b.build().energy(&[1]).unwrap(), 1.0);
        assert!(matches!(
            m.energy(&[1]),
            Err(Error::LengthMismatch { expected: 3, got: 1 })
        ));
    }

    #[test]
    fn builder_folds_and_drops_zeros() {
        let mut b = QuboBuilder::new(3);
        b.add_quadratic(2, 0, 1.5);
        b.add_quadratic(0, 2, -1.5);
        b.add_quadratic(1, 1, 4.0);
        let m = b.build();
        assert!(m.quadratic.is_empty());
        assert_eq!(m.linear, BTreeMap::from([(1, 4.0)]));
        m.validate().unwrap();
    }

    #[test]
    fn squared_expansion_matches_direct_evaluation() {
        let terms = [(0, 1.0), (1, 1.0), (2, 1.0)];
        let mut b = QuboBuilder::new(3);
        b.add_squared(&terms, -2.0, 1.0);
        let m = b.build();
        for mask in 0..8u8 {
            let z: Vec<u8> = (0..3).map(|k| (mask >> k) & 1).collect();
            let s: f64 = z.iter().map(|&v| f64::from(v)).sum::<f64>() - 2.0;
            assert_eq!(m.energy(&z).unwrap(), s * s);
        }
    }

    #[test]
    fn ising_single_variable_and_pair() {
        let mut b = QuboBuilder::new(1);
        b.add_linear(0, 3.0);
        let is = b.build().to_ising();
        assert_eq!(is.h, BTreeMap::from([(0, 1.5)]));
        assert_eq!(is.offset, 1.5);

        let mut b = QuboBuilder::new(2);
        b.add_quadratic(0, 1, 2.0);
        let is = b.build().to_ising();
        assert_eq!(is.j, BTreeMap::from([((0, 1), 0.5)]));
        assert_eq!(is.h, BTreeMap::from([(0, 0.5), (1, 0.5)]));
        assert_eq!(is.offset, 0.5);
    }

    #[test]
    fn spin_bit_conversion() {
        assert_eq!(spins_to_bits(&[1, -1, 1]).unwrap(), vec![1, 0, 1]);
        assert_eq!(bits_to_spins(&[1, 0, 1]).unwrap(), vec![1, -1, 1]);
        assert!(matches!(
            spins_to_bits(&[1, 0]),
            Err(Error::OutOfAlphabet { index: 1, value: 0, .. })
        ));
        assert!(bits_to_spins(&[2]).is_err());
    }

    #[test]
    fn text_format_layout() {
        let mut b = QuboBuilder::new(3);
        b.add_linear(2, -0.1);
        b.add_linear(0, 1.0);
        b.add_quadratic(1, 2, 3.0);
        b.add_offset(0.5);
        let m = b.build();
        assert_eq!(m.to_text(), "qubo 3 2 1 0.5\n0 1\n2 -0.1\n1 2 3\n");
        let with_comment = format!("# generated\n{}", m.to_text());
        assert_eq!(QuboModel::from_text(&with_comment).unwrap(), m);
        let is = m.to_ising();
        assert!(is.to_text().starts_with("ising 3 "));
        assert_eq!(IsingModel::from_text(&is.to_text()).unwrap(), is);
    }

    #[test]
    fn text_format_rejects_bad_input() {
        let bad = [
            "",
            "ising 2 0 0 0\n",
            "qubo 2 1 0 0\n",
            "qubo 2 1 0 0\n5 1\n",
            "qubo 2 0 1 0\n1 0 1\n",
            "qubo 3 2 0 0\n1 1\n0 1\n",
            "qubo 3 0 2 0\n0 2 1\n0 1 1\n",
            "qubo 2 1 1 0\n0 1 1\n0 1\n",
            "qubo 2 1 0 0\n0 NaN\n",
            "qubo 2 1 0 0\n0 1 2 3\n",
        ];
        for text in bad {
            assert!(QuboModel::from_text(text).is_err(), "{text:?}");
        }
    }

    fn arb_model() -> impl Strategy<Value = QuboModel> {
        (1usize..12).prop_flat_map(|n| {
            (
                proptest::collection::vec((0..n, -5.0f64..5.0), 0..20),
                proptest::collection::vec((0..n, 0..n, -5.0f64..5.0), 0..40),
                -5.0f64..5.0,
            )
                .prop_map(move |(lin, quad, off)| {
                    let mut b = QuboBuilder::new(n);
                    for (i, v) in lin {
                        b.add_linear(i, v);
                    }
                    for (i, j, v) in quad {
                        b.add_quadratic(i, j, v);
                    }
                    b.add_offset(off);
                    b.build()
                })
        })
    }

    proptest! {
        #[test]
        fn text_round_trip_is_exact(m in arb_model()) {
            prop_assert_eq!(QuboModel::from_text(&m.to_text()).unwrap(), m.clone());
            let is = m.to_ising();
            prop_assert_eq!(IsingModel::from_text(&is.to_text()).unwrap(), is);
        }

        #[test]
        fn ising_energy_matches_qubo(m in arb_model(), seed in any::<u64>()) {
            let is = m.to_ising();
            let z: Vec<u8> = (0..m.n).map(|k| ((seed >> (k % 64)) & 1) as u8).collect();
            let s = bits_to_spins(&z).unwrap();
            let eq = m.energy(&z).unwrap();
            let es = is.energy(&s).unwrap();
            prop_assert!((eq - es).abs() <= 1e-9 * eq.abs().max(1.0));
            prop_assert_eq!(spins_to_bits(&s).unwrap(), z);
        }
    }
}
