//! One-dimensional numerics: globally adaptive Gauss-Kronrod integration,
//! Lebesgue-Stieltjes integration against mixed distributions, bracketed
//! maximization and bisection root finding.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::dist::Distribution;
use crate::error::{Error, Result};

/// Panel budget for one adaptive integration.
pub const MAX_PANELS: usize = 4000;
pub const DEFAULT_SEED_GRID: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

impl IntegralResult {
    const ZERO: IntegralResult = IntegralResult {
        value: 0.0,
        abs_error_estimate: 0.0,
        evaluations: 0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximizeResult {
    pub argmax: f64,
    pub max_value: f64,
    pub tol: f64,
}

// Kronrod abscissae on [0, 1); odd indices are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// G7-K15 on one panel: `(kronrod, |kronrod - gauss|)`.
fn gk15<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx)? + f(center + dx)?;
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Sorted panel ends: `a`, the breaks strictly inside `(a, b)`, `b`.
fn panel_ends(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let mut ends = vec![a];
    let mut inner: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|x| *x > a && *x < b)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    ends.extend(inner);
    ends.push(b);
    ends
}

/// Globally adaptive integration of a fallible integrand: the panel with the
/// largest error estimate is bisected until the summed estimate is below
/// `tol`. Panels always split at `breaks`.
pub fn try_integrate_with_breaks<F>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<IntegralResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a <= b) {
        return Err(crate::error::domain("b - a", b - a, "[0, inf)"));
    }
    if a == b {
        return Ok(IntegralResult::ZERO);
    }
    let mut heap = BinaryHeap::new();
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    let mut evaluations = 0;
    for w in panel_ends(a, b, breaks).windows(2) {
        let (value, error) = gk15(&mut f, w[0], w[1])?;
        evaluations += 15;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    let mut total_error: f64 = heap.iter().map(|p| p.error).sum();
    loop {
        if total_error <= tol {
            // confirm against drift in the running sum
            total_error = frozen_error + heap.iter().map(|p| p.error).sum::<f64>();
            if total_error <= tol {
                break;
            }
        }
        if heap.len() >= MAX_PANELS {
            let value = frozen_value + heap.iter().map(|p| p.value).sum::<f64>();
            return Err(Error::Accuracy {
                estimate: value,
                error: total_error,
                tol,
            });
        }
        let Some(worst) = heap.pop() else {
            return Err(Error::Accuracy {
                estimate: frozen_value,
                error: total_error,
                tol,
            });
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            frozen_value += worst.value;
            frozen_error += worst.error;
            continue;
        }
        total_error -= worst.error;
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk15(&mut f, lo, hi)?;
            evaluations += 15;
            total_error += error;
            heap.push(Panel {
                a: lo,
                b: hi,
                value,
                error,
            });
        }
    }
    // Sum in position order so the result does not depend on heap layout.
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    Ok(IntegralResult {
        value: frozen_value + panels.iter().map(|p| p.value).sum::<f64>(),
        abs_error_estimate: frozen_error + panels.iter().map(|p| p.error).sum::<f64>(),
        evaluations,
    })
}

pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<IntegralResult> {
    try_integrate_with_breaks(|x| Ok(f(x)), a, b, breaks, tol)
}

/// `int_a^b f(x) dx` to absolute accuracy `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<IntegralResult> {
    integrate_with_breaks(f, a, b, &[], tol)
}

/// Which end of the integration range collects atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interval {
    /// `(a, b]`, the default.
    LeftOpen,
    /// `[a, b]`.
    Closed,
}

/// `int f dF` over `(a, b]` or `[a, b]`: atoms contribute `f(x_i) m_i`, the
/// absolutely continuous part is integrated with panels split at segment
/// ends, atoms and the caller's `breaks`.
pub fn try_integrate_stieltjes_with<F>(
    mut f: F,
    d: &Distribution,
    a: f64,
    b: f64,
    interval: Interval,
    breaks: &[f64],
    tol: f64,
) -> Result<IntegralResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a <= b) {
        return Err(crate::error::domain("b - a", b - a, "[0, inf)"));
    }
    let mut atom_sum = 0.0;
    let mut atom_evals = 0;
    for atom in d.atoms() {
        let inside = match interval {
            Interval::LeftOpen => atom.x > a && atom.x <= b,
            Interval::Closed => atom.x >= a && atom.x <= b,
        };
        if inside {
            atom_sum += f(atom.x)? * atom.mass;
            atom_evals += 1;
        }
    }
    let lo = a.max(d.segments().first().map_or(b, |s| s.lo));
    let hi = b.min(d.segments().last().map_or(a, |s| s.hi));
    let mut all_breaks = d.breakpoints();
    all_breaks.extend_from_slice(breaks);
    let cont = if lo < hi {
        try_integrate_with_breaks(
            |x| {
                let dens = d.density_ac(x);
                if dens == 0.0 {
                    Ok(0.0)
                } else {
                    Ok(f(x)? * dens)
                }
            },
            lo,
            hi,
            &all_breaks,
            tol,
        )?
    } else {
        IntegralResult::ZERO
    };
    Ok(IntegralResult {
        value: atom_sum + cont.value,
        abs_error_estimate: cont.abs_error_estimate,
        evaluations: cont.evaluations + atom_evals,
    })
}

/// `int_{(a, b]} f dF`.
pub fn integrate_stieltjes<F: Fn(f64) -> f64>(
    f: F,
    d: &Distribution,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<IntegralResult> {
    try_integrate_stieltjes_with(|x| Ok(f(x)), d, a, b, Interval::LeftOpen, &[], tol)
}

/// `int_{[a, b]} f dF`, which picks up an atom sitting at `a`.
pub fn integrate_stieltjes_closed<F: Fn(f64) -> f64>(
    f: F,
    d: &Distribution,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<IntegralResult> {
    try_integrate_stieltjes_with(|x| Ok(f(x)), d, a, b, Interval::Closed, &[], tol)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn score(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Golden-section refinement of a maximum inside `[a, b]`; keeps the left
/// section on ties.
pub(crate) fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = score(f(x1));
    let mut f2 = score(f(x2));
    let width = tol.max(4.0 * f64::EPSILON * (a.abs() + b.abs()));
    for _ in 0..200 {
        if b - a <= width {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = score(f(x1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = score(f(x2));
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximizes `f` on `[a, b]`: an equispaced seed grid picks the best basin
/// (first maximum wins ties), then golden-section search narrows it to width
/// `tol`. Never returns less than the seed-grid maximum.
pub fn maximize<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    seed_grid_n: usize,
) -> MaximizeResult {
    if !(b > a) {
        return MaximizeResult {
            argmax: a,
            max_value: f(a),
            tol,
        };
    }
    let n = seed_grid_n.max(2);
    let step = (b - a) / (n - 1) as f64;
    let at = |i: usize| if i + 1 == n { b } else { a + step * i as f64 };
    let mut best_i = 0;
    let mut best_v = score(f(a));
    for i in 1..n {
        let v = score(f(at(i)));
        if v > best_v {
            best_i = i;
            best_v = v;
        }
    }
    let lo = at(best_i.saturating_sub(1));
    let hi = at((best_i + 1).min(n - 1));
    let (x, v) = golden_max(&f, lo, hi, tol);
    if v > best_v {
        MaximizeResult {
            argmax: x,
            max_value: v,
            tol,
        }
    } else {
        MaximizeResult {
            argmax: at(best_i),
            max_value: best_v,
            tol,
        }
    }
}

/// Bisection for a root of a monotone `f` with `f(a) f(b) <= 0`; returns the
/// midpoint of the final bracket of width `<= tol`.
pub fn find_root<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(Error::Bracket {
            a: lo,
            b: hi,
            fa: flo,
            fb: fhi,
        });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Illinois (modified regula falsi) root of `f` on `[a, b]` given
/// `fa = f(a)` and `fb = f(b)` of opposite signs. Runs until the bracket
/// stops shrinking.
pub(crate) fn illinois<F: Fn(f64) -> f64>(
    f: F,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
) -> f64 {
    let mut side = 0i8;
    for _ in 0..200 {
        if b - a <= 2.0 * f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        let mut x = (a * fb - b * fa) / (fb - fa);
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx.signum() == fb.signum() {
            b = x;
            fb = fx;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = x;
            fa = fx;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    if fa.abs() < fb.abs() {
        a
    } else {
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{hard_instance_f, point_mass, uniform};

    #[test]
    fn integrate_examples() {
        assert!((integrate(|x| x, 0.0, 1.0, 1e-12).unwrap().value - 0.5).abs() < 1e-15);
        let e = integrate(|x| (-x).exp(), 0.0, 1.0, 1e-12).unwrap();
        assert!((e.value - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
        assert!(e.abs_error_estimate <= 1e-12);
        assert_eq!(integrate(|x| x, 0.3, 0.3, 1e-12).unwrap().value, 0.0);
        assert!(integrate(|x| x, 1.0, 0.0, 1e-12).is_err());
    }

    #[test]
    fn exact_for_polynomials_on_one_panel() {
        // K15 is exact through degree 22
        for deg in 0..=22 {
            let r = integrate(|x: f64| x.powi(deg), 0.0, 1.0, 1e-3).unwrap();
            assert_eq!(r.evaluations, 15);
            assert!(
                (r.value - 1.0 / (deg + 1) as f64).abs() <= 1e-12,
                "degree {deg}"
            );
        }
    }

    #[test]
    fn jump_needs_break_or_refinement() {
        let step = |x: f64| if x < 0.3 { 1.0 } else { 0.0 };
        let with = integrate_with_breaks(step, 0.0, 1.0, &[0.3], 1e-12).unwrap();
        assert!((with.value - 0.3).abs() < 1e-15);
        assert_eq!(with.evaluations, 30);
        let without = integrate(step, 0.0, 1.0, 1e-10).unwrap();
        assert!((without.value - 0.3).abs() < 1e-10);
    }

    #[test]
    fn unreachable_tolerance_is_an_accuracy_error() {
        let noisy = |x: f64| (1e6 * x).sin().signum();
        match integrate(noisy, 0.0, 1.0, 1e-300) {
            Err(Error::Accuracy { estimate, .. }) => assert!(estimate.is_finite()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stieltjes_examples() {
        let u = uniform();
        let mean = integrate_stieltjes(|v| v, &u, 0.0, 1.0, 1e-12).unwrap();
        assert!((mean.value - 0.5).abs() < 1e-15);

        let p0 = point_mass(0.0).unwrap();
        let open = integrate_stieltjes(|_| 1.0, &p0, 0.0, 1.0, 1e-12).unwrap();
        assert_eq!(open.value, 0.0);
        let closed = integrate_stieltjes_closed(|_| 1.0, &p0, 0.0, 1.0, 1e-12).unwrap();
        assert_eq!(closed.value, 1.0);

        let h = hard_instance_f(0.1).unwrap();
        let tail = integrate_stieltjes(|v| v, &h, 0.9, 1.0, 1e-12).unwrap();
        assert!(tail.value <= (-0.9f64).exp());
        let mass = integrate_stieltjes(|_| 1.0, &h, 0.9, 1.0, 1e-12).unwrap();
        assert!((mass.value - (-0.9f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn maximize_examples() {
        let r = maximize(|p| p * (1.0 - p), 0.0, 1.0, 1e-10, 512);
        assert!((r.argmax - 0.5).abs() < 1e-7);
        assert!((r.max_value - 0.25).abs() < 1e-15);
        let c = maximize(|_| 3.0, 0.2, 0.9, 1e-10, 512);
        assert_eq!(c.argmax, 0.2);
        let r = maximize(|p| (p - 0.2) * (1.0 - p), 0.2, 1.0, 1e-10, 512);
        assert!((r.argmax - 0.6).abs() < 1e-7);
        assert!((r.max_value - 0.16).abs() < 1e-14);
        let d = maximize(|p| p, 0.4, 0.4, 1e-10, 512);
        assert_eq!(d.argmax, 0.4);
    }

    #[test]
    fn maximize_beats_its_grid_on_multimodal() {
        let f = |x: f64| (13.0 * x).sin() + 0.3 * (41.0 * x).cos();
        let r = maximize(f, 0.0, 1.0, 1e-10, 64);
        let grid_best = (0..64)
            .map(|i| f(i as f64 / 63.0))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(r.max_value >= grid_best);
    }

    #[test]
    fn illinois_converges() {
        let f = |x: f64| x - (-x).exp();
        let r = illinois(f, 0.0, 1.0, f(0.0), f(1.0));
        assert!((r - 0.567_143_290_409_783_8).abs() < 1e-15);
        let g = |x: f64| (x - 0.3).powi(3);
        let r = illinois(g, 0.0, 1.0, g(0.0), g(1.0));
        assert!((r - 0.3).abs() < 1e-5);
    }

    #[test]
    fn find_root_examples() {
        let r = find_root(|x| 2.0 * x - 1.0, 0.0, 1.0, 1e-14).unwrap();
        assert!((r - 0.5).abs() < 1e-14);
        let r = find_root(|x| x - (-x).exp(), 0.0, 1.0, 1e-14).unwrap();
        assert!((r - 0.567_143_290_409_783_8).abs() < 1e-13);
        let stationarity = |l: f64| 1.0 + (1.0 / l).ln() - (1.0 - l) / l;
        let l = find_root(stationarity, 0.05, 0.9, 1e-14).unwrap();
        // oracle: scipy brentq on the same equation
        assert!((l - 0.317_844_432_899_372_6).abs() < 1e-12);
        assert!(matches!(
            find_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12),
            Err(Error::Bracket { .. })
        ));
    }
}
