//! Small numerical helpers shared by the other modules: deterministic
//! summation, Gauss–Legendre rules and the Riemann zeta function used by the
//! singular-quadrature corrections.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Base block for [`pairwise_sum`]; below this size a plain left-to-right loop
/// is used.
const PAIRWISE_BLOCK: usize = 32;

/// Pairwise (cascade) summation.
///
/// The split point is always `len / 2`, so the association order depends only
/// on the slice length. Error growth is `O(ε log n)`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let (lo, hi) = xs.split_at(xs.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}

/// Pairwise summation of complex values, same association order as
/// [`pairwise_sum`].
pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= PAIRWISE_BLOCK {
        let mut acc = Complex64::new(0.0, 0.0);
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let (lo, hi) = xs.split_at(xs.len() / 2);
    pairwise_sum_complex(lo) + pairwise_sum_complex(hi)
}

/// Sums `term(0) + … + term(n−1)` in fixed blocks of 256 consecutive terms,
/// then combines the block partials pairwise. Deterministic for a given `n`.
pub fn blocked_sum<F: FnMut(usize) -> f64>(n: usize, mut term: F) -> f64 {
    const BLOCK: usize = 256;
    let mut partials = Vec::with_capacity(n / BLOCK + 1);
    let mut start = 0;
    while start < n {
        let end = (start + BLOCK).min(n);
        let mut acc = 0.0;
        for k in start..end {
            acc += term(k);
        }
        partials.push(acc);
        start = end;
    }
    pairwise_sum(&partials)
}

/// Mean of a slice using [`pairwise_sum`]. Returns 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        pairwise_sum(xs) / xs.len() as f64
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integral of `f` over `[0, x]` for integrands that may be singular or have
/// a sharp transition at the origin.
///
/// Uses geometrically graded panels `[x q^{k+1}, x q^k]` (q = 1/4) down to
/// `x · 4^{-levels}`, each with a 16-point Gauss–Legendre rule; the innermost
/// `[0, x 4^{-levels}]` panel is also integrated with Gauss–Legendre. This is
/// accurate for integrands like `log(1/t)`, `t^p` (p > -1) and
/// `log(t^β + ε)`.
pub fn integrate_graded<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    const LEVELS: usize = 40;
    if x <= 0.0 {
        return 0.0;
    }
    let (nodes, weights) = gauss_legendre(16);
    let panel = |a: f64, b: f64| -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let terms: Vec<f64> = nodes
            .iter()
            .zip(&weights)
            .map(|(&t, &w)| w * f(mid + half * t))
            .collect();
        half * pairwise_sum(&terms)
    };
    let mut parts = Vec::with_capacity(LEVELS + 1);
    let mut hi = x;
    for _ in 0..LEVELS {
        let lo = hi * 0.25;
        parts.push(panel(lo, hi));
        hi = lo;
    }
    parts.push(panel(0.0, hi));
    pairwise_sum(&parts)
}

/// Riemann zeta function for real `s > 0`, `s ≠ 1`, via Euler–Maclaurin
/// summation (relative accuracy around 1e-13 on `(0, 4]`).
pub fn zeta(s: f64) -> f64 {
    assert!(s > 0.0 && (s - 1.0).abs() > 1e-12, "zeta defined here for s > 0, s != 1");
    const N: usize = 12;
    // B_{2k} / (2k)!
    const B2K_OVER_FACT: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
        1.0 / 74724249600.0,
    ];
    let nf = N as f64;
    let mut sum = 0.0;
    for n in 1..N {
        sum += (n as f64).powf(-s);
    }
    sum += nf.powf(1.0 - s) / (s - 1.0) + 0.5 * nf.powf(-s);
    // rising factorial s (s+1) ... (s+2k-2), times N^{-s-2k+1}
    let mut rising = s;
    let mut power = nf.powf(-s - 1.0);
    for (k, c) in B2K_OVER_FACT.iter().enumerate() {
        sum += c * rising * power;
        let j = 2 * k as u32 + 1;
        rising *= (s + j as f64) * (s + j as f64 + 1.0);
        power /= nf * nf;
    }
    sum
}
