//! Single-bit-flip Metropolis annealing with geometric cooling.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Restarter, SolveParams, Solver};
use crate::error::Result;
use crate::model::QuboModel;
use crate::rng::stream;

/// Stream index reserved for the start-temperature probe.
const PROBE_STREAM: u64 = u64::MAX;
const FINAL_TO_INITIAL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, Default)]
pub struct SimulatedAnnealing;

impl Solver for SimulatedAnnealing {
    fn name(&self) -> &'static str {
        "sa"
    }

    fn prepare<'a>(
        &self,
        model: &'a QuboModel,
        params: &SolveParams,
    ) -> Result<Box<dyn Restarter + 'a>> {
        Ok(Box::new(Annealer::new(model, params)))
    }
}

/// Compressed neighbor lists of a QUBO.
pub(crate) struct Csr {
    pub start: Vec<usize>,
    pub index: Vec<usize>,
    pub coeff: Vec<f64>,
}

impl Csr {
    pub fn new(lists: &[Vec<(usize, f64)>]) -> Self {
        let mut start = Vec::with_capacity(lists.len() + 1);
        let mut index = Vec::new();
        let mut coeff = Vec::new();
        start.push(0);
        for row in lists {
            for &(j, q) in row {
                index.push(j);
                coeff.push(q);
            }
            start.push(index.len());
        }
        Csr {
            start,
            index,
            coeff,
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.start[i]..self.start[i + 1];
        self.index[r.clone()]
            .iter()
            .copied()
            .zip(self.coeff[r].iter().copied())
    }
}

struct Annealer<'a> {
    model: &'a QuboModel,
    linear: Vec<f64>,
    csr: Csr,
    sweeps: usize,
    seed: u64,
    t_initial: f64,
    ratio: f64,
}

/// `linear_i + Σ_j Q_ij z_j` for every variable.
fn local_fields(linear: &[f64], csr: &Csr, z: &[u8]) -> Vec<f64> {
    (0..linear.len())
        .map(|i| {
            linear[i]
                + csr
                    .row(i)
                    .filter(|&(j, _)| z[j] != 0)
                    .map(|(_, q)| q)
                    .sum::<f64>()
        })
        .collect()
}

impl<'a> Annealer<'a> {
    fn new(model: &'a QuboModel, params: &SolveParams) -> Self {
        let linear = model.linear_vec();
        let csr = Csr::new(&model.neighbor_lists());
        let t_initial = params
            .t_initial
            .unwrap_or_else(|| probe_temperature(&linear, &csr, params.seed));
        let span = params.sweeps.saturating_sub(1).max(1) as f64;
        let ratio = match params.ratio {
            Some(r) => r,
            None => {
                let t_final = params.t_final.unwrap_or(FINAL_TO_INITIAL * t_initial);
                (t_final / t_initial).powf(1.0 / span)
            }
        };
        Annealer {
            model,
            linear,
            csr,
            sweeps: params.sweeps,
            seed: params.seed,
            t_initial,
            ratio,
        }
    }
}

/// Largest single-flip |ΔE| from a random assignment; 1 for a flat model.
fn probe_temperature(linear: &[f64], csr: &Csr, seed: u64) -> f64 {
    let mut rng = stream(seed, PROBE_STREAM);
    let z: Vec<u8> = (0..linear.len()).map(|_| rng.gen_range(0..2)).collect();
    let field = local_fields(linear, csr, &z);
    let t = field.iter().fold(0.0f64, |m, f| m.max(f.abs()));
    if t > 0.0 {
        t
    } else {
        1.0
    }
}

impl Restarter for Annealer<'_> {
    fn run(&self, index: u64) -> Vec<u8> {
        let n = self.linear.len();
        let mut rng = stream(self.seed, index);
        let mut z: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let mut field = local_fields(&self.linear, &self.csr, &z);
        let mut energy = self.model.energy_unchecked(&z);
        let mut best = z.clone();
        let mut best_energy = energy;
        let mut order: Vec<usize> = (0..n).collect();
        let mut t = self.t_initial;

        for _ in 0..self.sweeps {
            order.shuffle(&mut rng);
            let beta = 1.0 / t;
            for &i in &order {
                // ΔE of flipping i: +field when turning on, −field when turning off
                let delta = if z[i] == 0 { field[i] } else { -field[i] };
                if delta <= 0.0 || rng.gen::<f64>() < (-delta * beta).exp() {
                    let sign = if z[i] == 0 { 1.0 } else { -1.0 };
                    z[i] ^= 1;
                    for (j, q) in self.csr.row(i) {
                        field[j] += sign * q;
                    }
                    energy += delta;
                    if energy < best_energy {
                        best_energy = energy;
                        best.copy_from_slice(&z);
                    }
                }
            }
            if cfg!(debug_assertions) {
                let exact = self.model.energy_unchecked(&z);
                debug_assert!(
                    (exact - energy).abs() <= 1e-6 * exact.abs().max(1.0),
                    "incremental energy {energy} drifted from {exact}"
                );
            }
            t *= self.ratio;
        }
        best
    }
}
