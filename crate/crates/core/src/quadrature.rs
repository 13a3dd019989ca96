//! Numerical integration engine.
//!
//! Two rule families cover every integrand in the crate:
//!
//! * smooth 2π-periodic integrands (the angular integrals of the continuous
//!   model) use the uniform trapezoid rule with node doubling, which converges
//!   spectrally;
//! * general finite intervals use globally adaptive Gauss–Kronrod (7/15)
//!   bisection. Plane integrals nest two of these.
//!
//! All reductions run in a fixed order, so results are bit-reproducible.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Tolerances and refinement budget for one integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Node doublings for periodic rules, interval bisections for adaptive ones.
    pub max_refinements: usize,
}

impl QuadSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_refinements: usize) -> Result<Self> {
        let spec = QuadSpec {
            abs_tol,
            rel_tol,
            max_refinements,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.abs_tol.is_nan() || self.abs_tol <= 0.0 || self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return Err(Error::invalid("quadrature tolerances must be positive"));
        }
        if self.max_refinements < 1 {
            return Err(Error::invalid("max_refinements must be at least 1"));
        }
        Ok(())
    }

    #[inline]
    pub fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            abs_tol: 1e-9,
            rel_tol: 1e-8,
            max_refinements: 2000,
        }
    }
}

/// Value and error estimate of a converged integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub err_est: f64,
}

/// Axis-aligned integration window, with optional interior breakpoints per
/// axis where the integrand has kinks or sharp features.
#[derive(Debug, Clone, PartialEq)]
pub struct Rect {
    pub z: (f64, f64),
    pub x: (f64, f64),
    pub z_breaks: Vec<f64>,
    pub x_breaks: Vec<f64>,
}

impl Rect {
    pub fn new(z: (f64, f64), x: (f64, f64)) -> Self {
        Rect {
            z,
            x,
            z_breaks: Vec::new(),
            x_breaks: Vec::new(),
        }
    }

    /// Square `[-half, half]^2`.
    pub fn centered(half: f64) -> Self {
        Rect::new((-half, half), (-half, half))
    }

    pub fn with_breaks(mut self, z_breaks: Vec<f64>, x_breaks: Vec<f64>) -> Self {
        self.z_breaks = z_breaks;
        self.x_breaks = x_breaks;
        self
    }
}

const PERIODIC_MIN_NODES: usize = 32;

/// Integrates a smooth 2π-periodic function over `[0, 2π]`.
pub fn integrate_periodic<F>(f: F, spec: &QuadSpec) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    let [e] = integrate_periodic_vec(|phi| [f(phi)], PERIODIC_MIN_NODES, spec)?;
    Ok(e)
}

/// Vector-valued periodic trapezoid rule on `[0, 2π]`: every component shares
/// the same nodes, and refinement continues until all components meet their
/// tolerance. Starts from `min_nodes` (rounded up to a power of two), doubles
/// at most `spec.max_refinements` times, and always doubles at least twice so
/// a feature missed by the coarsest mesh cannot fake convergence.
pub fn integrate_periodic_vec<F, const N: usize>(
    f: F,
    min_nodes: usize,
    spec: &QuadSpec,
) -> Result<[Estimate; N]>
where
    F: Fn(f64) -> [f64; N],
{
    spec.validate()?;
    let mut n = min_nodes.max(4).next_power_of_two();
    let mut sum = [0.0; N];
    for k in 0..n {
        let v = f(2.0 * PI * k as f64 / n as f64);
        for c in 0..N {
            sum[c] += v[c];
        }
    }
    let mut prev = sum.map(|s| s * 2.0 * PI / n as f64);
    let mut err = [f64::INFINITY; N];

    for level in 1..=spec.max_refinements {
        // New nodes are the midpoints of the current mesh.
        let mut odd = [0.0; N];
        for k in 0..n {
            let v = f(2.0 * PI * (2 * k + 1) as f64 / (2 * n) as f64);
            for c in 0..N {
                odd[c] += v[c];
            }
        }
        for c in 0..N {
            sum[c] += odd[c];
        }
        n *= 2;
        let cur = sum.map(|s| s * 2.0 * PI / n as f64);
        let mut done = true;
        for c in 0..N {
            err[c] = (cur[c] - prev[c]).abs();
            if err[c] > spec.target(cur[c]) {
                done = false;
            }
        }
        prev = cur;
        if done && level >= 2 {
            return Ok(std::array::from_fn(|c| Estimate {
                value: prev[c],
                err_est: err[c],
            }));
        }
    }
    let worst = (0..N)
        .max_by(|&a, &b| {
            (err[a] / spec.target(prev[a]))
                .partial_cmp(&(err[b] / spec.target(prev[b])))
                .unwrap_or(Ordering::Equal)
        })
        .unwrap_or(0);
    Err(Error::Quadrature {
        value: prev[worst],
        err_est: err[worst],
        target: spec.target(prev[worst]),
    })
}

// Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One application of the 15-point Kronrod rule on `[a, b]`; returns the
/// Kronrod value and `|K15 - G7|`.
pub fn gauss_kronrod_15<F>(f: &F, a: f64, b: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    // Largest error first; ties broken by position so the order is total.
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Globally adaptive Gauss–Kronrod integration over `[a, b]`, starting from
/// the subdivision given by `breaks` (points outside `(a, b)` are ignored).
pub fn integrate_interval<F>(f: F, a: f64, b: f64, breaks: &[f64], spec: &QuadSpec) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::invalid(format!("bad interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            err_est: 0.0,
        });
    }
    let mut edges = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&p| p > a && p < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    edges.extend(inner);
    edges.push(b);

    let mut heap = BinaryHeap::new();
    for w in edges.windows(2) {
        let (value, err) = gauss_kronrod_15(&f, w[0], w[1]);
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value,
            err,
        });
    }

    let totals = |heap: &BinaryHeap<Segment>| {
        // Sum in position order, independent of heap layout.
        let mut segs: Vec<&Segment> = heap.iter().collect();
        segs.sort_by(|p, q| p.a.total_cmp(&q.a));
        segs.iter().fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.err))
    };

    let mut value: f64 = heap.iter().map(|s| s.value).sum();
    let mut err: f64 = heap.iter().map(|s| s.err).sum();
    let mut splits = 0;
    while err > spec.target(value) {
        if splits >= spec.max_refinements {
            let (value, err_est) = totals(&heap);
            return Err(Error::Quadrature {
                value,
                err_est,
                target: spec.target(value),
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval exhausted at machine precision; keep its estimate.
            heap.push(Segment { err: 0.0, ..worst });
        } else {
            for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
                let (v, e) = gauss_kronrod_15(&f, lo, hi);
                heap.push(Segment {
                    a: lo,
                    b: hi,
                    value: v,
                    err: e,
                });
            }
        }
        splits += 1;
        value = heap.iter().map(|s| s.value).sum();
        err = heap.iter().map(|s| s.err).sum();
    }
    let (value, err_est) = totals(&heap);
    Ok(Estimate { value, err_est })
}

/// Nested adaptive integration of `f(z, x)` over a rectangle: the outer
/// adaptive rule in `z` calls an inner adaptive rule in `x` at every node.
///
/// The reported error is the outer estimate plus a bound on the accumulated
/// inner errors.
pub fn integrate_plane<F>(f: F, window: &Rect, spec: &QuadSpec) -> Result<Estimate>
where
    F: Fn(f64, f64) -> f64,
{
    spec.validate()?;
    let (z0, z1) = window.z;
    let (x0, x1) = window.x;
    let z_len = (z1 - z0).abs();
    // Inner integrals are held tighter so their noise does not stall the
    // outer refinement.
    let inner_spec = QuadSpec {
        abs_tol: spec.abs_tol / (10.0 * z_len.max(1e-300)),
        rel_tol: spec.rel_tol / 10.0,
        max_refinements: spec.max_refinements,
    };
    let inner_err = std::cell::Cell::new(0.0f64);
    let inner_fail = std::cell::Cell::new(None::<Error>);
    let outer = integrate_interval(
        |z| match integrate_interval(|x| f(z, x), x0, x1, &window.x_breaks, &inner_spec) {
            Ok(e) => {
                inner_err.set(inner_err.get().max(e.err_est));
                e.value
            }
            Err(err) => {
                let value = match &err {
                    Error::Quadrature { value, .. } => *value,
                    _ => f64::NAN,
                };
                let slot = inner_fail.take();
                inner_fail.set(slot.or(Some(err)));
                value
            }
        },
        z0,
        z1,
        &window.z_breaks,
        spec,
    );
    if let Some(err) = inner_fail.take() {
        return Err(err);
    }
    let outer = outer?;
    Ok(Estimate {
        value: outer.value,
        err_est: outer.err_est + z_len * inner_err.get(),
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(x), p0 = P_{n-1}(x)
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Cached 16-point Gauss–Legendre rule.
pub(crate) fn gauss_legendre_16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(tol: f64) -> QuadSpec {
        QuadSpec::new(tol, tol, 200).unwrap()
    }

    // 2 pi I_0(1) by its power series sum_k 1/(k!)^2 4^{-k}.
    fn two_pi_bessel_i0_at_one() -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..30 {
            term /= 4.0 * (k * k) as f64;
            sum += term;
        }
        2.0 * PI * sum
    }

    #[test]
    fn periodic_examples() {
        let s = spec(1e-13);
        let c = integrate_periodic(f64::cos, &s).unwrap();
        assert!(c.value.abs() < 1e-14);
        let c2 = integrate_periodic(|p| p.cos().powi(2), &s).unwrap();
        assert!((c2.value - PI).abs() < 1e-13);
        let e = integrate_periodic(|p| p.sin().exp(), &s).unwrap();
        let reference = two_pi_bessel_i0_at_one();
        assert!((reference - 7.954_926_521_012_845).abs() < 1e-12);
        assert!((e.value - reference).abs() < 1e-12);
    }

    #[test]
    fn periodic_budget_exhaustion_reports_best_value() {
        let s = QuadSpec::new(1e-15, 1e-15, 1).unwrap();
        // A sharp periodic bump cannot converge in one doubling.
        let err = integrate_periodic(|p| 1.0 / (1.001 - p.cos()), &s).unwrap_err();
        match err {
            Error::Quadrature { value, err_est, .. } => {
                assert!(value.is_finite() && err_est > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn kronrod_is_exact_for_polynomials() {
        // Degree 22 is below the K15 exactness order of 23.
        let f = |x: f64| x.powi(22) + 3.0 * x.powi(5) - 1.0;
        let (v, _) = gauss_kronrod_15(&f, -1.0, 2.0);
        let exact = (2f64.powi(23) + 1.0) / 23.0 + 3.0 * (64.0 - 1.0) / 6.0 - 3.0;
        assert!((v - exact).abs() < 1e-9 * exact.abs());
    }

    #[test]
    fn legendre_rules_integrate_polynomials() {
        for n in [1, 2, 5, 16, 31] {
            let (x, w) = gauss_legendre(n);
            let deg = 2 * n - 1;
            let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((v - exact).abs() < 1e-13, "n={n}");
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn interval_with_breakpoint_kink() {
        let e = integrate_interval(|x: f64| x.abs(), -1.0, 2.0, &[0.0], &spec(1e-12)).unwrap();
        assert!((e.value - 2.5).abs() < 1e-13);
        let e = integrate_interval(|x: f64| x.abs().sqrt(), 0.0, 1.0, &[], &spec(1e-10)).unwrap();
        assert!((e.value - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn plane_examples() {
        use crate::specfun::gaussian_amp;
        let g2 = |u: f64| gaussian_amp(u, 1.0).unwrap().powi(2);
        let w = Rect::centered(12.0);
        let s = spec(1e-12);
        let e = integrate_plane(|z, x| g2(z) * g2(x), &w, &s).unwrap();
        assert!((e.value - 1.0).abs() < 1e-10);
        let e = integrate_plane(|z, x| z * g2(z) * g2(x), &w, &s).unwrap();
        assert!(e.value.abs() < 1e-12);
    }

    #[test]
    fn plane_is_deterministic() {
        let f = |z: f64, x: f64| (-(z * z + 2.0 * x * x)).exp() * (1.0 + (z * x).sin());
        let w = Rect::centered(6.0).with_breaks(vec![0.0], vec![0.0]);
        let a = integrate_plane(f, &w, &spec(1e-10)).unwrap();
        let b = integrate_plane(f, &w, &spec(1e-10)).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.err_est.to_bits(), b.err_est.to_bits());
    }

    #[test]
    fn error_estimates_are_sound() {
        // (integrand, a, b, exact)
        type Case = (Box<dyn Fn(f64) -> f64>, f64, f64, f64);
        let cases: Vec<Case> = vec![
            (Box::new(|x: f64| x.exp()), 0.0, 1.0, 1f64.exp() - 1.0),
            (Box::new(|x: f64| 1.0 / (1.0 + x * x)), -5.0, 5.0, 2.0 * 5f64.atan()),
            (Box::new(|x: f64| x.sqrt()), 0.0, 1.0, 2.0 / 3.0),
            (Box::new(|x: f64| (10.0 * x).sin()), 0.0, PI, (1.0 - (10.0 * PI).cos()) / 10.0),
            (Box::new(|x: f64| (-x * x).exp()), -8.0, 8.0, PI.sqrt()),
            (Box::new(|x: f64| x.ln()), 1e-12, 1.0, -1.0 - (1e-12f64.ln() * 1e-12 - 1e-12)),
            (Box::new(|x: f64| 1.0 / (1e-2 + x * x)), -1.0, 1.0, 20.0 * 10f64.atan()),
            (Box::new(|x: f64| x.abs().powf(0.25)), -1.0, 1.0, 1.6),
            (Box::new(|x: f64| (50.0 * x).cos().powi(2)), 0.0, 1.0, 0.5 + (100f64).sin() / 200.0),
        ];
        let mut sound = 0;
        let mut total = 0;
        for tol in [1e-4, 1e-6, 1e-8, 1e-10] {
            for (f, a, b, exact) in &cases {
                let s = QuadSpec::new(tol, 1e-15, 5000).unwrap();
                if let Ok(e) = integrate_interval(f, *a, *b, &[], &s) {
                    total += 1;
                    if e.err_est >= (e.value - exact).abs() {
                        sound += 1;
                    }
                }
            }
        }
        assert!(total >= 30);
        assert!(sound as f64 >= 0.95 * total as f64, "{sound}/{total}");
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(QuadSpec::new(0.0, 1e-8, 10).is_err());
        assert!(QuadSpec::new(1e-8, -1.0, 10).is_err());
        assert!(QuadSpec::new(1e-8, 1e-8, 0).is_err());
        assert!(integrate_interval(|x| x, 1.0, 0.0, &[], &QuadSpec::default()).is_err());
    }
}
