//! Sampling oracle for the aggregate quantities.
//!
//! Draws are split over a fixed number of shards, each with its own ChaCha
//! stream derived from the seed, and merged in shard order. Estimates are
//! therefore bit-identical whatever the number of worker threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::mechanisms::{Instance, Pricer, Tolerances};

pub const SHARDS: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
    pub seed: u64,
}

impl Estimate {
    /// `|mean - value|` in units of the standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        let d = (self.mean - value).abs();
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn agrees(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error + 1e-12
    }
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    fn estimate(&self, seed: u64) -> Estimate {
        let std_error = if self.n > 1 {
            (self.m2 / (self.n - 1) as f64).sqrt() / (self.n as f64).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean: self.mean,
            std_error,
            n: self.n,
            seed,
        }
    }
}

fn shard_len(n: u64, shard: u64) -> u64 {
    n / SHARDS + u64::from(shard < n % SHARDS)
}

fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

/// Uniform on `(0, 1)`: the midpoint of one of `2^53` equal cells.
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// `n` draws from `d` by inverse transform.
pub fn sample(d: &Distribution, n: u64, seed: u64) -> Vec<f64> {
    (0..SHARDS)
        .into_par_iter()
        .map(|s| {
            let mut rng = shard_rng(seed, s);
            (0..shard_len(n, s))
                .map(|_| d.quantile(open_unit(&mut rng)))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat()
}

/// Runs `per_draw` on `n` independent `(v, c)` pairs and returns one
/// estimate per output slot.
fn simulate<const K: usize, P>(
    inst: &Instance,
    n: u64,
    seed: u64,
    per_draw: P,
) -> Result<[Estimate; K]>
where
    P: Fn(f64, f64, &mut [f64; K]) -> Result<()> + Sync,
{
    if n == 0 {
        return Err(Error::InvalidParams("Monte Carlo needs n >= 1".into()));
    }
    let shards: Vec<[Moments; K]> = (0..SHARDS)
        .into_par_iter()
        .map(|s| {
            let mut rng = shard_rng(seed, s);
            let mut acc = [Moments::default(); K];
            let mut out = [0.0; K];
            for _ in 0..shard_len(n, s) {
                let v = inst.f.quantile(open_unit(&mut rng));
                let c = inst.g.quantile(open_unit(&mut rng));
                per_draw(v, c, &mut out)?;
                for (m, x) in acc.iter_mut().zip(out) {
                    m.push(x);
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = [Moments::default(); K];
    for shard in &shards {
        for (t, m) in total.iter_mut().zip(shard) {
            t.merge(m);
        }
    }
    Ok(total.map(|m| m.estimate(seed)))
}

/// Prices at the atoms of one side, computed once.
struct AtomPrices {
    table: Vec<(f64, (f64, f64, f64))>,
}

impl AtomPrices {
    fn new(d: &Distribution, pricer: &Pricer) -> Result<Self> {
        let table = d
            .atoms()
            .iter()
            .map(|a| Ok((a.x, pricer.evaluate(a.x)?)))
            .collect::<Result<_>>()?;
        Ok(AtomPrices { table })
    }

    /// `(price, payoff, gft)` at `x`.
    fn get(&self, x: f64, pricer: &Pricer) -> Result<(f64, f64, f64)> {
        match self.table.iter().find(|(a, _)| *a == x) {
            Some((_, r)) => Ok(*r),
            None => pricer.evaluate(x),
        }
    }
}

pub fn mc_fb(inst: &Instance, n: u64, seed: u64) -> Result<Estimate> {
    let [e] = simulate(inst, n, seed, |v, c, out: &mut [f64; 1]| {
        out[0] = if v >= c { v - c } else { 0.0 };
        Ok(())
    })?;
    Ok(e)
}

/// Seller pricing with the price recomputed for every sampled cost.
pub fn mc_sellerp(inst: &Instance, n: u64, seed: u64, tol: &Tolerances) -> Result<Estimate> {
    let pricer = Pricer::seller(&inst.f, tol).without_cross_check();
    let atoms = AtomPrices::new(&inst.g, &pricer)?;
    let [e] = simulate(inst, n, seed, |v, c, out: &mut [f64; 1]| {
        let (p, _, _) = atoms.get(c, &pricer)?;
        out[0] = if v >= p { v - c } else { 0.0 };
        Ok(())
    })?;
    Ok(e)
}

pub fn mc_buyerp(inst: &Instance, n: u64, seed: u64, tol: &Tolerances) -> Result<Estimate> {
    let pricer = Pricer::buyer(&inst.g, tol);
    let atoms = AtomPrices::new(&inst.f, &pricer)?;
    let [e] = simulate(inst, n, seed, |v, c, out: &mut [f64; 1]| {
        let (p, _, _) = atoms.get(v, &pricer)?;
        out[0] = if c <= p { v - c } else { 0.0 };
        Ok(())
    })?;
    Ok(e)
}

/// The buyer's maximum utility `max_p (v - p) G(p)` averaged over sampled `v`.
pub fn mc_bprofit(inst: &Instance, n: u64, seed: u64, tol: &Tolerances) -> Result<Estimate> {
    let pricer = Pricer::buyer(&inst.g, tol);
    let atoms = AtomPrices::new(&inst.f, &pricer)?;
    let [e] = simulate(inst, n, seed, |v, _c, out: &mut [f64; 1]| {
        out[0] = atoms.get(v, &pricer)?.1;
        Ok(())
    })?;
    Ok(e)
}

/// Gains from trade of the fixed price `p`.
pub fn mc_fixed_price(inst: &Instance, p: f64, n: u64, seed: u64) -> Result<Estimate> {
    let [e] = simulate(inst, n, seed, |v, c, out: &mut [f64; 1]| {
        out[0] = if c <= p && p <= v { v - c } else { 0.0 };
        Ok(())
    })?;
    Ok(e)
}

/// All estimates from one set of draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub fb: Estimate,
    pub sellerp: Estimate,
    pub buyerp: Estimate,
    pub randoff: Estimate,
    pub bprofit: Estimate,
}

pub fn mc_report(inst: &Instance, n: u64, seed: u64, tol: &Tolerances) -> Result<McReport> {
    let seller = Pricer::seller(&inst.f, tol).without_cross_check();
    let seller_atoms = AtomPrices::new(&inst.g, &seller)?;
    let buyer = Pricer::buyer(&inst.g, tol);
    let buyer_atoms = AtomPrices::new(&inst.f, &buyer)?;
    let [fb, sellerp, buyerp, randoff, bprofit] =
        simulate(inst, n, seed, |v, c, out: &mut [f64; 5]| {
            let gain = v - c;
            let (ps, _, _) = seller_atoms.get(c, &seller)?;
            let (pb, utility, _) = buyer_atoms.get(v, &buyer)?;
            let s = if v >= ps { gain } else { 0.0 };
            let b = if c <= pb { gain } else { 0.0 };
            *out = [gain.max(0.0), s, b, 0.5 * (s + b), utility];
            Ok(())
        })?;
    Ok(McReport {
        fb,
        sellerp,
        buyerp,
        randoff,
        bprofit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{hard_instance_f, point_mass, uniform};

    #[test]
    fn sample_examples() {
        assert!(sample(&point_mass(0.0).unwrap(), 1000, 1)
            .iter()
            .all(|&x| x == 0.0));
        let xs = sample(&uniform(), 100_000, 7);
        assert_eq!(xs.len(), 100_000);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let se = (1.0f64 / 12.0).sqrt() / (xs.len() as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se);
        let h = hard_instance_f(0.1).unwrap();
        let xs = sample(&h, 200_000, 3);
        let ecdf = xs.iter().filter(|&&x| x <= 0.9).count() as f64 / xs.len() as f64;
        assert!((ecdf - (1.0 - (-0.9f64).exp())).abs() < 0.004);
    }

    #[test]
    fn merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut parts = Moments::default();
        for chunk in xs.chunks(97) {
            let mut m = Moments::default();
            chunk.iter().for_each(|&x| m.push(x));
            parts.merge(&m);
        }
        assert_eq!(whole.n, parts.n);
        assert!((whole.mean - parts.mean).abs() < 1e-12);
        assert!((whole.m2 - parts.m2).abs() < 1e-9 * whole.m2);
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let inst = Instance::new(uniform(), uniform());
        let tol = Tolerances::default();
        let a = mc_report(&inst, 20_000, 11, &tol).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let b = pool.install(|| mc_report(&inst, 20_000, 11, &tol).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, mc_report(&inst, 20_000, 12, &tol).unwrap());
    }

    #[test]
    fn closed_form_instance() {
        let inst = Instance::new(uniform(), point_mass(0.0).unwrap());
        let tol = Tolerances::default();
        let r = mc_report(&inst, 100_000, 5, &tol).unwrap();
        assert!(r.fb.agrees(0.5, 4.0));
        assert!(r.sellerp.agrees(0.375, 4.0));
        assert!(r.buyerp.agrees(0.5, 4.0));
        let none = Instance::new(uniform(), point_mass(1.0).unwrap());
        assert_eq!(mc_sellerp(&none, 1000, 1, &tol).unwrap().mean, 0.0);
        assert!(mc_fb(&inst, 0, 1).is_err());
    }
}
