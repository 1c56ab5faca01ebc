//! Gains from trade of the posted-price mechanisms and of the first-best
//! benchmark, pointwise in the other side's type and in expectation.
//!
//! Seller pricing at cost `c` posts `p_c in argmax_p (p - c) P(v >= p)` and
//! trades when `v >= p_c`. Buyer pricing at value `v` posts
//! `p_v in argmax_p (v - p) P(c <= p)` and trades when `c <= p_v`.

use std::borrow::Cow;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dist::{Distribution, QuantileMap, TailGrid};
use crate::error::{domain, Error, Result};
use crate::quadrature::{
    golden_max, illinois, try_integrate_stieltjes_with, try_integrate_with_breaks, Interval,
    MaximizeResult, DEFAULT_SEED_GRID,
};

/// Buyer value law `F` and seller cost law `G`, independent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(rename = "F")]
    pub f: Distribution,
    #[serde(rename = "G")]
    pub g: Distribution,
}

impl Instance {
    pub fn new(f: Distribution, g: Distribution) -> Self {
        Instance { f, g }
    }

    /// The mirrored instance: value law `reverse(G)`, cost law `reverse(F)`.
    /// Seller pricing on `self` is buyer pricing on the mirror.
    pub fn mirrored(&self) -> Instance {
        Instance {
            f: self.g.reverse(),
            g: self.f.reverse(),
        }
    }
}

/// Accuracy targets shared by every computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute tolerance of integrals over one variable.
    pub inner: f64,
    /// Absolute tolerance of expectations over the other side's type.
    pub outer: f64,
    /// Width to which optimal prices are located.
    pub price: f64,
    pub seed_grid: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            inner: 1e-10,
            outer: 1e-8,
            price: 1e-9,
            seed_grid: DEFAULT_SEED_GRID,
        }
    }
}

impl Tolerances {
    /// Same settings with both integration tolerances set to `tol`, the inner
    /// one a hundred times tighter.
    pub fn with_outer(tol: f64) -> Self {
        Tolerances {
            inner: tol * 1e-2,
            outer: tol,
            ..Tolerances::default()
        }
    }
}

fn check_unit(what: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(domain(what, x, "[0, 1]"))
    }
}

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= 8.0 * f64::EPSILON * a.abs().max(b.abs())
}

/// Profit-maximizing posted prices for one side of the market.
///
/// The seller's problem at cost `c` is solved directly on `F`; the buyer's
/// problem at value `v` against `G` is the seller's problem at cost `1 - v`
/// against `reverse(G)`, with price `1 - q`. Smallest optimal price wins ties
/// for the seller, hence largest for the buyer.
#[derive(Debug, Clone)]
pub struct Pricer<'a> {
    law: Cow<'a, Distribution>,
    grid: Arc<TailGrid>,
    reflected: bool,
    /// `(1 - b, b)` for the breakpoints `b` of the buyer's `G`, sorted, so
    /// prices at atoms map back exactly rather than to `1 - (1 - b)`.
    origin: Vec<(f64, f64)>,
    cross_check: bool,
    tol: Tolerances,
}

impl<'a> Pricer<'a> {
    /// Seller facing buyer law `f`. When `f` is MHR every price is checked
    /// against the inverse virtual value.
    pub fn seller(f: &'a Distribution, tol: &Tolerances) -> Self {
        Pricer {
            grid: f.tail_grid(tol.seed_grid),
            cross_check: f.is_atomless_full_support() && f.is_mhr_default(),
            law: Cow::Borrowed(f),
            reflected: false,
            origin: Vec::new(),
            tol: *tol,
        }
    }

    /// Buyer facing seller law `g`.
    pub fn buyer(g: &Distribution, tol: &Tolerances) -> Pricer<'static> {
        let law = g.reverse();
        let mut origin: Vec<(f64, f64)> =
            g.breakpoints().into_iter().map(|b| (1.0 - b, b)).collect();
        origin.sort_by(|a, b| a.0.total_cmp(&b.0));
        Pricer {
            grid: law.tail_grid(tol.seed_grid),
            law: Cow::Owned(law),
            reflected: true,
            origin,
            cross_check: false,
            tol: *tol,
        }
    }

    /// Skips the inverse-virtual-value comparison.
    pub fn without_cross_check(mut self) -> Self {
        self.cross_check = false;
        self
    }

    fn to_local(&self, x: f64) -> f64 {
        if self.reflected {
            1.0 - x
        } else {
            x
        }
    }

    /// Optimal price and the poster's expected payoff, for cost `c` (seller)
    /// or value `v` (buyer).
    pub fn price(&self, x: f64) -> Result<MaximizeResult> {
        check_unit(if self.reflected { "v" } else { "c" }, x)?;
        let c = self.to_local(x);
        let (q, value) = self.solve(c);
        if self.cross_check {
            let expected = self.law.inverse_virtual_value(c, 1e-15)?;
            if (expected - q).abs() > 10.0 * self.tol.price {
                return Err(Error::CrossCheck(format!(
                    "seller price {q} at cost {c} differs from the inverse virtual value {expected}"
                )));
            }
        }
        let argmax = match self.origin.binary_search_by(|o| o.0.total_cmp(&q)) {
            Ok(i) => self.origin[i].1,
            Err(_) => self.to_local(q),
        };
        Ok(MaximizeResult {
            argmax,
            max_value: value,
            tol: self.tol.price,
        })
    }

    /// Gains from trade realized at `x`: `int_{[p_c, 1]} (v - c) dF(v)` for
    /// the seller, `int_{[0, p_v]} (v - c) dG(c)` for the buyer.
    pub fn gft(&self, x: f64) -> Result<f64> {
        let r = self.price(x)?;
        Ok(self.gft_at_price(x, r.argmax))
    }

    /// Price, payoff and realized gains from trade at `x`.
    pub fn evaluate(&self, x: f64) -> Result<(f64, f64, f64)> {
        let r = self.price(x)?;
        Ok((r.argmax, r.max_value, self.gft_at_price(x, r.argmax)))
    }

    fn gft_at_price(&self, x: f64, price: f64) -> f64 {
        let c = self.to_local(x);
        let q = self.to_local(price);
        (self.law.upper_moment(q, true) - c * self.law.sf_left(q)).max(0.0)
    }

    /// Seller problem on `law` at cost `c`: `max_{q in [c, 1]} (q - c) P(X >= q)`.
    fn solve(&self, c: f64) -> (f64, f64) {
        let grid = &*self.grid;
        let start = grid.xs.partition_point(|&x| x <= c);
        let n = grid.xs.len() - start + 1;
        let x_at = |j: usize| if j == 0 { c } else { grid.xs[start + j - 1] };
        let v_at = |j: usize| {
            if j == 0 {
                0.0
            } else {
                (grid.xs[start + j - 1] - c) * grid.tail[start + j - 1]
            }
        };
        let mut best_j = 0;
        let mut best_v = 0.0;
        for j in 1..n {
            let v = v_at(j);
            if v > best_v {
                best_j = j;
                best_v = v;
            }
        }
        let mut best = (x_at(best_j), best_v);
        // Open intervals between neighbouring candidates hold no breakpoint,
        // so the objective is smooth there.
        let mut sides = Vec::with_capacity(2);
        if best_j > 0 {
            sides.push((x_at(best_j - 1), x_at(best_j)));
        }
        if best_j + 1 < n {
            sides.push((x_at(best_j), x_at(best_j + 1)));
        }
        for (a, b) in sides {
            if let Some((p, v)) = self.stationary(c, a, b) {
                let take = if ties(v, best.1) {
                    (p - best.0).abs() < 1e-6 || p < best.0
                } else {
                    v > best.1
                };
                if take {
                    best = (p, v);
                }
            }
        }
        best
    }

    /// Interior maximum of `(q - c) P(X > q)` on the smooth interval `(a, b)`,
    /// located as the root of its derivative.
    fn stationary(&self, c: f64, a: f64, b: f64) -> Option<(f64, f64)> {
        if !(b > a) {
            return None;
        }
        let law = &*self.law;
        let seg = law.segment_at(0.5 * (a + b))?;
        let slope = |q: f64| law.sf(q) - (q - c) * seg.density(q);
        let sa = slope(a);
        let sb = law.sf_left(b) - (b - c) * seg.density(b);
        if !(sa > 0.0 && sb < 0.0) {
            return None;
        }
        let q = illinois(slope, a, b, sa, sb);
        Some((q, (q - c) * law.sf(q)))
    }
}

/// `FB(c) = int_c^1 (1 - F(v)) dv`, cross-checked against the Stieltjes form
/// `int_{(c, 1]} (v - c) dF(v)`.
pub fn fb_at(f: &Distribution, c: f64, tol: &Tolerances) -> Result<f64> {
    check_unit("c", c)?;
    let breaks = f.breakpoints();
    let survival = try_integrate_with_breaks(|v| Ok(f.sf(v)), c, 1.0, &breaks, tol.inner)?;
    let direct =
        try_integrate_stieltjes_with(|v| Ok(v - c), f, c, 1.0, Interval::LeftOpen, &[], tol.inner)?;
    if (survival.value - direct.value).abs() > 2.0 * tol.inner {
        return Err(Error::CrossCheck(format!(
            "FB({c}): survival form {} vs Stieltjes form {}",
            survival.value, direct.value
        )));
    }
    Ok(survival.value)
}

/// `E_G[h(c)]` over `[0, 1]`, atoms at 0 included.
fn expect<H: FnMut(f64) -> Result<f64>>(
    h: H,
    d: &Distribution,
    breaks: &[f64],
    tol: f64,
) -> Result<f64> {
    try_integrate_stieltjes_with(h, d, 0.0, 1.0, Interval::Closed, breaks, tol).map(|r| r.value)
}

/// First-best gains from trade `E[(v - c) 1{v >= c}]`.
pub fn fb(inst: &Instance, tol: &Tolerances) -> Result<f64> {
    let breaks = inst.f.breakpoints();
    expect(|c| fb_at(&inst.f, c, tol), &inst.g, &breaks, tol.outer)
}

/// The same quantity as the single integral `int_0^1 G(x) (1 - F(x)) dx`.
pub fn fb_single_integral(inst: &Instance, tol: &Tolerances) -> Result<f64> {
    let mut breaks = inst.f.breakpoints();
    breaks.extend(inst.g.breakpoints());
    try_integrate_with_breaks(
        |x| Ok(inst.g.cdf(x) * inst.f.sf(x)),
        0.0,
        1.0,
        &breaks,
        tol.inner,
    )
    .map(|r| r.value)
}

pub fn seller_price(f: &Distribution, c: f64, tol: &Tolerances) -> Result<MaximizeResult> {
    Pricer::seller(f, tol).price(c)
}

/// `SProfit(c) = max_p (p - c)(1 - F(p^-))`.
pub fn sprofit_at(f: &Distribution, c: f64, tol: &Tolerances) -> Result<f64> {
    Ok(seller_price(f, c, tol)?.max_value)
}

pub fn sprofit(inst: &Instance, tol: &Tolerances) -> Result<f64> {
    let pricer = Pricer::seller(&inst.f, tol);
    let breaks = inst.f.breakpoints();
    expect(
        |c| Ok(pricer.price(c)?.max_value),
        &inst.g,
        &breaks,
        tol.outer,
    )
}

/// `SellerP(c) = int_{[p_c, 1]} (v - c) dF(v)`.
pub fn sellerp_at(f: &Distribution, c: f64, tol: &Tolerances) -> Result<f64> {
    Pricer::seller(f, tol).gft(c)
}

pub fn sellerp(inst: &Instance, tol: &Tolerances) -> Result<f64> {
    let pricer = Pricer::seller(&inst.f, tol);
    let breaks = inst.f.breakpoints();
    expect(|c| pricer.gft(c), &inst.g, &breaks, tol.outer)
}

pub fn buyer_price(g: &Distribution, v: f64, tol: &Tolerances) -> Result<MaximizeResult> {
    Pricer::buyer(g, tol).price(v)
}

/// `int_{[0, p_v]} (v - c) dG(c)`.
pub fn buyerp_at(g: &Distribution, v: f64, tol: &Tolerances) -> Result<f64> {
    Pricer::buyer(g, tol).gft(v)
}

pub fn buyerp(inst: &Instance, tol: &Tolerances) -> Result<f64> {
    let pricer = Pricer::buyer(&inst.g, tol);
    let breaks: Vec<f64> = inst.g.breakpoints();
    expect(|v| pricer.gft(v), &inst.f, &breaks, tol.outer)
}

/// The buyer's maximum utility `BProfit = E_F[max_p (v - p) G(p)]`.
pub fn bprofit(inst: &Instance, tol: &Tolerances) -> Result<f64> {
    let pricer = Pricer::buyer(&inst.g, tol);
    let breaks = inst.g.breakpoints();
    expect(
        |v| Ok(pricer.price(v)?.max_value),
        &inst.f,
        &breaks,
        tol.outer,
    )
}

/// Seller pricing and buyer pricing with equal probability.
pub fn randoff(inst: &Instance, tol: &Tolerances) -> Result<f64> {
    Ok(0.5 * (sellerp(inst, tol)? + buyerp(inst, tol)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPrice {
    pub price: f64,
    pub gft: f64,
}

/// Gains from trade of the fixed price `p`: trade iff `c <= p <= v`.
/// `G(p) int_{[p, 1]} v dF - (1 - F(p^-)) int_{[0, p]} c dG`.
pub fn fixed_price_gft(inst: &Instance, p: f64) -> Result<f64> {
    check_unit("p", p)?;
    Ok(fixed_price_raw(inst, p))
}

fn fixed_price_raw(inst: &Instance, p: f64) -> f64 {
    let (f, g) = (&inst.f, &inst.g);
    (g.cdf(p) * f.upper_moment(p, true) - f.sf_left(p) * g.lower_moment(p, true)).max(0.0)
}

/// Best fixed price on `[0, 1]`; the smallest maximizer wins ties.
pub fn fixedp(inst: &Instance, tol: &Tolerances) -> Result<FixedPrice> {
    let n = tol.seed_grid.max(2);
    let mut xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    xs.extend(inst.f.breakpoints());
    xs.extend(inst.g.breakpoints());
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let obj = |p: f64| fixed_price_raw(inst, p);
    let mut best_i = 0;
    let mut best_v = obj(xs[0]);
    for (i, &x) in xs.iter().enumerate().skip(1) {
        let v = obj(x);
        if v > best_v {
            best_i = i;
            best_v = v;
        }
    }
    let mut best = (xs[best_i], best_v);
    let lo = xs[best_i.saturating_sub(1)];
    let hi = xs[(best_i + 1).min(xs.len() - 1)];
    for (a, b) in [(lo, xs[best_i]), (xs[best_i], hi)] {
        if b > a {
            let (p, v) = golden_max(&obj, a, b, tol.price);
            if v > best.1 && !ties(v, best.1) {
                best = (p, v);
            }
        }
    }
    Ok(FixedPrice {
        price: best.0,
        gft: best.1,
    })
}

/// `BProfit(c) = int_{mu(c)}^1 (s - mu^{-1}(s)) dF(s)`; needs an atomless
/// `F` with positive density on `[0, 1]`.
pub fn bprofit_at(f: &Distribution, lambda: f64, c: f64, tol: &Tolerances) -> Result<f64> {
    check_unit("c", c)?;
    let mu = QuantileMap::new(f, lambda)?;
    let start = mu.forward_raw(c);
    let mut breaks = f.breakpoints();
    breaks.extend(f.breakpoints().into_iter().map(|b| mu.forward_raw(b)));
    try_integrate_stieltjes_with(
        |s| Ok(s - mu.inverse_raw(s)),
        f,
        start,
        1.0,
        Interval::LeftOpen,
        &breaks,
        tol.inner,
    )
    .map(|r| r.value)
}

/// `int_0^1 BProfit(c) dG(c)`, a lower bound on the buyer's maximum utility.
pub fn bprofit_lb(inst: &Instance, lambda: f64, tol: &Tolerances) -> Result<f64> {
    let mu = QuantileMap::new(&inst.f, lambda)?;
    let mut breaks = inst.f.breakpoints();
    breaks.extend(inst.f.breakpoints().into_iter().map(|b| mu.inverse_raw(b)));
    expect(
        |c| bprofit_at(&inst.f, lambda, c, tol),
        &inst.g,
        &breaks,
        tol.outer,
    )
}

/// `int_{(c, mu(c)]} (v - c) dF(v)`, in closed form.
pub fn gft_below_quantile(f: &Distribution, lambda: f64, c: f64) -> Result<f64> {
    check_unit("c", c)?;
    let mu = QuantileMap::new(f, lambda)?;
    let m = mu.forward_raw(c);
    let moment = f.upper_moment(c, false) - f.upper_moment(m, false);
    let mass = f.sf(c) - f.sf(m);
    Ok((moment - c * mass).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismReport {
    pub fb: f64,
    pub fixedp: f64,
    pub fixed_price: f64,
    pub sellerp: f64,
    pub buyerp: f64,
    pub randoff: f64,
    /// Expected seller profit, a lower bound on `sellerp`.
    pub sprofit_lb: f64,
    /// Expected buyer utility, a lower bound on `buyerp`.
    pub bprofit: f64,
    pub lambda: f64,
    /// `int BProfit(c) dG(c)` at `lambda`; absent when `F` has atoms or gaps.
    pub bprofit_lb: Option<f64>,
    pub randoff_over_fb: Option<f64>,
    pub sellerp_over_fb: Option<f64>,
    pub buyerp_over_fb: Option<f64>,
    pub fixedp_over_fb: Option<f64>,
}

pub fn report(inst: &Instance, lambda: f64, tol: &Tolerances) -> Result<MechanismReport> {
    let fb = fb(inst, tol)?;
    let sellerp = sellerp(inst, tol)?;
    let buyerp = buyerp(inst, tol)?;
    let randoff = 0.5 * (sellerp + buyerp);
    let fixed = fixedp(inst, tol)?;
    let bprofit_lb = if inst.f.is_atomless_full_support() {
        Some(bprofit_lb(inst, lambda, tol)?)
    } else {
        None
    };
    let ratio = |x: f64| (fb > 0.0).then(|| x / fb);
    Ok(MechanismReport {
        fb,
        fixedp: fixed.gft,
        fixed_price: fixed.price,
        sellerp,
        buyerp,
        randoff,
        sprofit_lb: sprofit(inst, tol)?,
        bprofit: bprofit(inst, tol)?,
        lambda,
        bprofit_lb,
        randoff_over_fb: ratio(randoff),
        sellerp_over_fb: ratio(sellerp),
        buyerp_over_fb: ratio(buyerp),
        fixedp_over_fb: ratio(fixed.gft),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{equal_revenue_like, hard_instance_f, point_mass, uniform};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn close(a: f64, b: f64, eps: f64) {
        assert!((a - b).abs() <= eps, "{a} vs {b}");
    }

    #[test]
    fn fb_at_examples() {
        let u = uniform();
        close(fb_at(&u, 0.0, &tol()).unwrap(), 0.5, 1e-12);
        close(fb_at(&u, 0.5, &tol()).unwrap(), 0.125, 1e-12);
        assert_eq!(fb_at(&u, 1.0, &tol()).unwrap(), 0.0);
        assert!(fb_at(&u, 1.5, &tol()).is_err());
    }

    #[test]
    fn fb_examples() {
        let u = uniform();
        let a0 = point_mass(0.0).unwrap();
        let a1 = point_mass(1.0).unwrap();
        close(
            fb(&Instance::new(u.clone(), a0), &tol()).unwrap(),
            0.5,
            1e-10,
        );
        close(
            fb(&Instance::new(u.clone(), u.clone()), &tol()).unwrap(),
            1.0 / 6.0,
            1e-9,
        );
        assert_eq!(fb(&Instance::new(u, a1), &tol()).unwrap(), 0.0);
    }

    #[test]
    fn seller_price_examples() {
        let u = uniform();
        let r = seller_price(&u, 0.0, &tol()).unwrap();
        close(r.argmax, 0.5, 1e-12);
        close(r.max_value, 0.25, 1e-15);
        let r = seller_price(&u, 0.5, &tol()).unwrap();
        close(r.argmax, 0.75, 1e-12);
        close(r.max_value, 0.0625, 1e-15);
        let h = hard_instance_f(0.1).unwrap();
        assert!(seller_price(&h, 0.0, &tol()).unwrap().argmax > 0.9);
        assert_eq!(seller_price(&u, 1.0, &tol()).unwrap().max_value, 0.0);
    }

    #[test]
    fn sprofit_and_sellerp_examples() {
        let u = uniform();
        close(sprofit_at(&u, 0.0, &tol()).unwrap(), 0.25, 1e-15);
        close(sprofit_at(&u, 0.5, &tol()).unwrap(), 0.0625, 1e-15);
        assert_eq!(
            sprofit_at(&hard_instance_f(0.1).unwrap(), 1.0, &tol()).unwrap(),
            0.0
        );
        close(sellerp_at(&u, 0.0, &tol()).unwrap(), 0.375, 1e-12);
        let inst = Instance::new(u, point_mass(0.0).unwrap());
        close(sellerp(&inst, &tol()).unwrap(), 0.375, 1e-12);
        let h = Instance::new(hard_instance_f(0.1).unwrap(), point_mass(0.0).unwrap());
        assert!(sellerp(&h, &tol()).unwrap() <= (-0.9f64).exp());
    }

    #[test]
    fn buyer_examples() {
        let u = uniform();
        let a0 = point_mass(0.0).unwrap();
        for v in [0.0, 0.3, 1.0] {
            let r = buyer_price(&a0, v, &tol()).unwrap();
            assert!(r.argmax.abs() < 1e-15);
            close(r.max_value, v, 1e-15);
        }
        let inst = Instance::new(u.clone(), a0);
        close(buyerp(&inst, &tol()).unwrap(), 0.5, 1e-12);
        close(bprofit(&inst, &tol()).unwrap(), 0.5, 1e-12);
        let a1 = point_mass(1.0).unwrap();
        assert_eq!(buyerp_at(&a1, 0.7, &tol()).unwrap(), 0.0);
        // uniform seller: p_v = v / 2
        let r = buyer_price(&u, 0.8, &tol()).unwrap();
        close(r.argmax, 0.4, 1e-12);
        close(r.max_value, 0.16, 1e-15);
    }

    #[test]
    fn randoff_examples() {
        let u = uniform();
        let inst = Instance::new(u.clone(), point_mass(0.0).unwrap());
        close(randoff(&inst, &tol()).unwrap(), 0.4375, 1e-12);
        let inst = Instance::new(u, point_mass(1.0).unwrap());
        assert_eq!(randoff(&inst, &tol()).unwrap(), 0.0);
    }

    #[test]
    fn randoff_is_mirror_symmetric() {
        let f = hard_instance_f(0.1).unwrap();
        let inst = Instance::new(
            f.clone(),
            crate::dist::piecewise_linear_cdf(&[1.0, 3.0, 2.0]).unwrap(),
        );
        let a = randoff(&inst, &tol()).unwrap();
        let b = randoff(&inst.mirrored(), &tol()).unwrap();
        close(a, b, 2e-8);
    }

    #[test]
    fn fixedp_examples() {
        let u = uniform();
        let r = fixedp(&Instance::new(u.clone(), u.clone()), &tol()).unwrap();
        close(r.gft, 0.125, 1e-12);
        close(r.price, 0.5, 1e-6);
        // p = 0 trades on every draw and collects all of E[v]
        let r = fixedp(&Instance::new(u.clone(), point_mass(0.0).unwrap()), &tol()).unwrap();
        close(r.gft, 0.5, 1e-12);
        assert_eq!(r.price, 0.0);
        close(
            fixed_price_gft(&Instance::new(u, point_mass(0.0).unwrap()), 0.5).unwrap(),
            0.375,
            1e-15,
        );
    }

    #[test]
    fn bprofit_at_examples() {
        let u = uniform();
        close(bprofit_at(&u, 0.5, 0.0, &tol()).unwrap(), 0.125, 1e-12);
        let h = hard_instance_f(0.1).unwrap();
        assert_eq!(bprofit_at(&h, 0.3, 1.0, &tol()).unwrap(), 0.0);
        let rhs = 0.5 * fb_at(&u, 0.0, &tol()).unwrap() - gft_below_quantile(&u, 0.5, 0.0).unwrap();
        close(rhs, 0.125, 1e-12);
        assert!(matches!(
            bprofit_at(&point_mass(0.0).unwrap(), 0.5, 0.0, &tol()),
            Err(Error::UnsupportedShape(_))
        ));
    }

    #[test]
    fn non_mhr_prices_skip_the_cross_check() {
        let er = equal_revenue_like(0.05, 64).unwrap();
        let r = seller_price(&er, 0.0, &tol()).unwrap();
        assert!(r.max_value > 0.0);
        // the grid never beats the refined answer
        for i in 0..=1000 {
            let p = i as f64 / 1000.0;
            assert!(p * er.sf_left(p) <= r.max_value + 1e-15);
        }
    }

    #[test]
    fn report_ratios() {
        let u = uniform();
        let rep = report(&Instance::new(u.clone(), u), 0.5, &tol()).unwrap();
        close(rep.fixedp_over_fb.unwrap(), 0.75, 1e-8);
        assert!(rep.bprofit_lb.unwrap() <= rep.bprofit);
        let rep = report(
            &Instance::new(uniform(), point_mass(1.0).unwrap()),
            0.5,
            &tol(),
        )
        .unwrap();
        assert!(rep.randoff_over_fb.is_none());
    }

    #[test]
    fn buyer_price_lands_exactly_on_seller_atom() {
        let g = crate::dist::atom_plus_uniform(0.2, 0.3).unwrap();
        for v in [0.5, 0.7] {
            let p = buyer_price(&g, v, &tol()).unwrap();
            assert_eq!(p.argmax, 0.2);
        }
    }
}
