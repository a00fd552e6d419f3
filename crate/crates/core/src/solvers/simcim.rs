//! Coherent-Ising-machine emulation: continuous amplitudes driven by a
//! pump ramp, the Ising mean field and Gaussian noise, read out by sign.
//!
//! Each step updates every amplitude synchronously:
//!
//! `a ← clamp(a + Δt·[(p(t) − 1)·a − ζ·(J·a + h)] + σ·ξ)`
//!
//! with `p` ramped linearly from `pump_start` to `pump_end`.

use rand::Rng;
use rand_distr::StandardNormal;

use super::anneal::Csr;
use super::{Restarter, SolveParams, Solver};
use crate::error::Result;
use crate::model::{spins_to_bits, IsingModel, QuboModel};
use crate::rng::stream;

const POWER_ITERATIONS: usize = 20;
const PROBE_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, Copy, Default)]
pub struct SimCim;

impl Solver for SimCim {
    fn name(&self) -> &'static str {
        "simcim"
    }

    fn prepare<'a>(
        &self,
        model: &'a QuboModel,
        params: &SolveParams,
    ) -> Result<Box<dyn Restarter + 'a>> {
        Ok(Box::new(SimCimRestarter::new(model.to_ising(), params)))
    }
}

pub(crate) struct SimCimRestarter {
    field: Vec<f64>,
    coupling: Csr,
    zeta: f64,
    steps: usize,
    seed: u64,
    pump_start: f64,
    pump_end: f64,
    noise: f64,
    dt: f64,
    clamp: f64,
}

/// Estimates the largest |eigenvalue| of the symmetric coupling matrix.
fn spectral_scale(coupling: &Csr, n: usize, seed: u64) -> f64 {
    let mut rng = stream(seed, PROBE_STREAM);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut scale = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        let w: Vec<f64> = (0..n)
            .map(|i| coupling.row(i).map(|(j, q)| q * v[j]).sum())
            .collect();
        scale = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w;
    }
    scale
}

impl SimCimRestarter {
    pub(crate) fn new(model: IsingModel, params: &SolveParams) -> Self {
        let coupling = Csr::new(&model.coupling_lists());
        let field = model.field_vec();
        let zeta = params.zeta.unwrap_or_else(|| {
            let s = spectral_scale(&coupling, model.n, params.seed);
            // one step moves the dominant mode by O(1) of its amplitude
            if s > 0.0 {
                1.0 / (params.dt * s)
            } else {
                // no couplings: scale by the strongest field instead
                let h = field.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if h > 0.0 {
                    1.0 / (params.dt * h)
                } else {
                    1.0
                }
            }
        });
        SimCimRestarter {
            field,
            coupling,
            zeta,
            steps: params.steps,
            seed: params.seed,
            pump_start: params.pump_start,
            pump_end: params.pump_end,
            noise: params.noise,
            dt: params.dt,
            clamp: params.clamp,
        }
    }

    pub(crate) fn spins(&self, index: u64) -> Vec<i8> {
        let n = self.field.len();
        let mut rng = stream(self.seed, index);
        let mut a = vec![0.0f64; n];
        let mut next = vec![0.0f64; n];
        let span = self.steps.saturating_sub(1).max(1) as f64;
        for step in 0..self.steps {
            let p = self.pump_start + (self.pump_end - self.pump_start) * step as f64 / span;
            for i in 0..n {
                let mean_field: f64 =
                    self.coupling.row(i).map(|(j, q)| q * a[j]).sum::<f64>() + self.field[i];
                let xi: f64 = rng.sample(StandardNormal);
                let v = a[i] + self.dt * ((p - 1.0) * a[i] - self.zeta * mean_field)
                    + self.noise * xi;
                next[i] = v.clamp(-self.clamp, self.clamp);
            }
            std::mem::swap(&mut a, &mut next);
        }
        a.iter().map(|&x| if x >= 0.0 { 1 } else { -1 }).collect()
    }
}

impl Restarter for SimCimRestarter {
    fn run(&self, index: u64) -> Vec<u8> {
        spins_to_bits(&self.spins(index)).expect("signs are ±1")
    }
}
