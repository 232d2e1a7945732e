//! Adaptive Gauss–Kronrod (G7/K15) quadrature.
//!
//! The integrator is vector-valued so that several functionals of the same
//! integrand (for example all the moments of a retained loss) are evaluated on
//! one shared set of nodes. The scalar entry points are thin wrappers.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

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

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_553,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the abscissae XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for the adaptive integrator.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-13,
            max_intervals: 4000,
        }
    }
}

struct Panel<const K: usize> {
    a: f64,
    b: f64,
    value: [f64; K],
    error: [f64; K],
    key: f64,
}

impl<const K: usize> PartialEq for Panel<K> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl<const K: usize> Eq for Panel<K> {}
impl<const K: usize> PartialOrd for Panel<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const K: usize> Ord for Panel<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key)
    }
}

fn gk15<const K: usize, F: FnMut(f64) -> [f64; K]>(f: &mut F, a: f64, b: f64) -> Panel<K> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kron = [0.0; K];
    let mut gauss = [0.0; K];
    let fc = f(center);
    for k in 0..K {
        kron[k] = WGK[7] * fc[k];
        gauss[k] = WG[3] * fc[k];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for k in 0..K {
            let s = f1[k] + f2[k];
            kron[k] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * s;
            }
        }
    }
    let mut value = [0.0; K];
    let mut error = [0.0; K];
    let mut key = 0.0_f64;
    for k in 0..K {
        value[k] = kron[k] * half;
        error[k] = ((kron[k] - gauss[k]) * half).abs();
        key = key.max(error[k]);
    }
    Panel {
        a,
        b,
        value,
        error,
        key,
    }
}

impl Quadrature {
    pub fn with_tolerance(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    fn converged<const K: usize>(&self, total: &[f64; K], err: &[f64; K]) -> bool {
        (0..K).all(|k| err[k] <= self.abs_tol.max(self.rel_tol * total[k].abs()))
    }

    /// Integrates a vector-valued function over the finite interval `[a, b]`.
    pub fn integrate_vec<const K: usize, F: FnMut(f64) -> [f64; K]>(
        &self,
        f: &mut F,
        a: f64,
        b: f64,
    ) -> [f64; K] {
        if !(b > a) {
            return [0.0; K];
        }
        let first = gk15(f, a, b);
        let mut total = first.value;
        let mut err = first.error;
        let mut heap = BinaryHeap::new();
        heap.push(first);
        while !self.converged(&total, &err) && heap.len() < self.max_intervals {
            let worst = match heap.pop() {
                Some(p) => p,
                None => break,
            };
            let mid = 0.5 * (worst.a + worst.b);
            if !(mid > worst.a && mid < worst.b) {
                heap.push(worst);
                break;
            }
            let left = gk15(f, worst.a, mid);
            let right = gk15(f, mid, worst.b);
            for k in 0..K {
                total[k] += left.value[k] + right.value[k] - worst.value[k];
                err[k] += left.error[k] + right.error[k] - worst.error[k];
            }
            heap.push(left);
            heap.push(right);
        }
        // Re-sum to shed the drift of the running updates.
        let mut sum = [0.0; K];
        for p in heap.iter() {
            for (s, v) in sum.iter_mut().zip(p.value) {
                *s += v;
            }
        }
        sum
    }

    /// Integrates over consecutive pieces `[p0, p1], [p1, p2], ...`.
    pub fn integrate_pieces_vec<const K: usize, F: FnMut(f64) -> [f64; K]>(
        &self,
        f: &mut F,
        points: &[f64],
    ) -> [f64; K] {
        let mut total = [0.0; K];
        for w in points.windows(2) {
            let part = self.integrate_vec(f, w[0], w[1]);
            for k in 0..K {
                total[k] += part[k];
            }
        }
        total
    }

    /// Integrates over `[a, ∞)` with geometrically widening panels.
    ///
    /// `width` is the first panel width; at least the region up to `horizon`
    /// is always covered, after which panels are added until their
    /// contribution is negligible against the running total.
    pub fn integrate_tail_vec<const K: usize, F: FnMut(f64) -> [f64; K]>(
        &self,
        f: &mut F,
        a: f64,
        width: f64,
        horizon: f64,
    ) -> [f64; K] {
        let mut total = [0.0; K];
        let mut lo = a;
        let mut w = width.max(1e-3);
        for _ in 0..200 {
            let hi = lo + w;
            let part = self.integrate_vec(f, lo, hi);
            let mut negligible = true;
            for k in 0..K {
                total[k] += part[k];
            }
            for k in 0..K {
                if part[k].abs() > 1e-17 * total[k].abs().max(1e-300) && part[k] != 0.0 {
                    negligible = false;
                }
            }
            lo = hi;
            if lo >= horizon && negligible {
                break;
            }
            w *= 1.5;
        }
        total
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        self.integrate_vec(&mut |x| [f(x)], a, b)[0]
    }

    pub fn integrate_pieces<F: FnMut(f64) -> f64>(&self, mut f: F, points: &[f64]) -> f64 {
        self.integrate_pieces_vec(&mut |x| [f(x)], points)[0]
    }
}

/// Sorted, de-duplicated breakpoints restricted to the open interval `(lo, hi)`,
/// framed by `lo` and `hi`.
pub fn pieces(lo: f64, hi: f64, interior: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = interior
        .iter()
        .copied()
        .filter(|p| p.is_finite() && *p > lo && *p < hi)
        .collect();
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup();
    let mut out = Vec::with_capacity(pts.len() + 2);
    out.push(lo);
    out.extend(pts);
    out.push(hi);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = Quadrature::default();
        let v = q.integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0);
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn kinked_integrand_converges_with_breakpoint() {
        let q = Quadrature::default();
        let v = q.integrate_pieces(|x| (x - 0.3).abs(), &pieces(0.0, 1.0, &[0.3]));
        assert!((v - (0.045 + 0.245)).abs() < 1e-14);
        let w = q.integrate(|x| (x - 0.3).abs(), 0.0, 1.0);
        assert!((w - 0.29).abs() < 1e-11);
    }

    #[test]
    fn tail_integral_of_slow_exponential() {
        let q = Quadrature::default();
        // ∫_0^∞ e^{-0.1 x} dx = 10
        let v = q.integrate_tail_vec(&mut |x| [(-0.1 * x).exp()], 0.0, 1.0, 40.0)[0];
        assert!((v - 10.0).abs() < 1e-11, "{v}");
    }

    #[test]
    fn vector_components_share_nodes() {
        let q = Quadrature::default();
        let v = q.integrate_vec(&mut |x| [1.0, x, x.sin()], 0.0, std::f64::consts::PI);
        assert!((v[0] - std::f64::consts::PI).abs() < 1e-14);
        assert!((v[1] - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-13);
        assert!((v[2] - 2.0).abs() < 1e-13);
    }
}
