//! Complex functions on the unit circle: equispaced samples, truncated Fourier
//! series, conversions between the two, pointwise algebra and Hölder
//! diagnostics.
//!
//! Sample `k` of an `M`-point grid sits at angle `θ_k = 2πk/M`. Distances
//! between circle points are chordal, `|e^{iθ} − e^{iθ'}| = 2|sin((θ−θ')/2)|`.

use crate::error::{Error, Result};
use crate::numeric::{pairwise_sum, pairwise_sum_complex};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::TAU;

/// Chordal distance between two circle points separated by angle `delta`.
#[inline]
pub fn chord(delta: f64) -> f64 {
    2.0 * (0.5 * delta).sin().abs()
}

/// Angle of sample `k` on an `m`-point grid.
#[inline]
pub fn grid_angle(k: usize, m: usize) -> f64 {
    TAU * k as f64 / m as f64
}

fn check_grid_size(m: usize) -> Result<()> {
    if m < 4 || !m.is_power_of_two() {
        return Err(Error::invalid(format!(
            "grid size M must be a power of two with M ≥ 4 (got {m})"
        )));
    }
    Ok(())
}

/// Boundary samples of a function on 𝕋 at `M` equispaced angles.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    samples: Vec<Complex64>,
}

impl GridFunction {
    /// Wraps samples, checking `M ≥ 4`, `M` a power of two and finiteness.
    pub fn new(samples: Vec<Complex64>) -> Result<Self> {
        check_grid_size(samples.len())?;
        if let Some(k) = samples.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid(format!("sample {k} is not finite")));
        }
        Ok(GridFunction { samples })
    }

    pub fn from_real(values: Vec<f64>) -> Result<Self> {
        Self::new(values.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
    }

    /// Samples `f(θ_k)`.
    pub fn from_fn(m: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        check_grid_size(m)?;
        Self::new((0..m).map(|k| f(grid_angle(k, m))).collect())
    }

    pub fn from_real_fn(m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(m, |t| Complex64::new(f(t), 0.0))
    }

    pub fn constant(m: usize, c: Complex64) -> Result<Self> {
        Self::from_fn(m, |_| c)
    }

    /// Number of samples `M`.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn angle(&self, k: usize) -> f64 {
        grid_angle(k, self.len())
    }

    /// Grid spacing `2π/M`.
    pub fn spacing(&self) -> f64 {
        TAU / self.len() as f64
    }

    /// True when every imaginary part is at most `tol` in modulus.
    pub fn is_real(&self, tol: f64) -> bool {
        self.samples.iter().all(|z| z.im.abs() <= tol)
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.re).collect()
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.norm()).collect()
    }

    /// Grid mean `(1/M) Σ g(θ_k)`, i.e. the trapezoidal value of
    /// `∫ g |dζ|/2π`.
    pub fn mean(&self) -> Complex64 {
        pairwise_sum_complex(&self.samples) / self.len() as f64
    }

    /// `(1/M) Σ |g(θ_k)|²`.
    pub fn mean_sq_modulus(&self) -> f64 {
        let sq: Vec<f64> = self.samples.iter().map(|z| z.norm_sqr()).collect();
        pairwise_sum(&sq) / self.len() as f64
    }

    /// Pointwise map; the result is re-validated.
    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Result<Self> {
        Self::new(self.samples.iter().map(|&z| f(z)).collect())
    }

    /// Every second sample, i.e. the same function on the `M/2` grid.
    pub fn decimate(&self) -> Result<Self> {
        Self::new(self.samples.iter().step_by(2).copied().collect())
    }

    /// Angular derivative `dg/dθ` of the grid's trigonometric interpolant
    /// (the Nyquist mode is dropped).
    pub fn derivative(&self) -> GridFunction {
        let m = self.len();
        let mut buf = self.samples.clone();
        fft_forward(&mut buf);
        let half = m / 2;
        for (k, c) in buf.iter_mut().enumerate() {
            let n = signed_frequency(k, m);
            if k == half {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c *= Complex64::new(0.0, n as f64);
            }
        }
        fft_inverse(&mut buf);
        let scale = 1.0 / m as f64;
        for c in &mut buf {
            *c *= scale;
        }
        GridFunction { samples: buf }
    }
}

/// Frequency carried by FFT bin `k` of an `m`-point transform, in
/// `(-m/2, m/2]`.
pub(crate) fn signed_frequency(k: usize, m: usize) -> i64 {
    if k <= m / 2 {
        k as i64
    } else {
        k as i64 - m as i64
    }
}

pub(crate) fn fft_forward(buf: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(buf.len()).process(buf);
}

pub(crate) fn fft_inverse(buf: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(buf.len()).process(buf);
}

/// Fourier coefficients `c_n`, `n ∈ [−N, N]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSeries {
    bandwidth: usize,
    coeffs: Vec<Complex64>,
    truncated: bool,
}

impl FourierSeries {
    /// `coeffs[i]` holds `c_{i − N}`; the length must be `2N + 1`.
    pub fn new(bandwidth: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * bandwidth + 1 {
            return Err(Error::invalid(format!(
                "series of bandwidth {bandwidth} needs {} coefficients (got {})",
                2 * bandwidth + 1,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("series coefficients must be finite"));
        }
        Ok(FourierSeries { bandwidth, coeffs, truncated: false })
    }

    pub fn zeros(bandwidth: usize) -> Self {
        FourierSeries {
            bandwidth,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * bandwidth + 1],
            truncated: false,
        }
    }

    /// Series with `c_n = f(n)` for `|n| ≤ N`.
    pub fn from_fn(bandwidth: usize, f: impl Fn(i64) -> Complex64) -> Self {
        let n = bandwidth as i64;
        FourierSeries {
            bandwidth,
            coeffs: (-n..=n).map(f).collect(),
            truncated: false,
        }
    }

    /// A single harmonic `c ζ^k`.
    pub fn monomial(k: i64, c: Complex64) -> Self {
        let mut s = Self::zeros(k.unsigned_abs() as usize);
        s.set(k, c);
        s
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Whether the series was obtained by truncating sampled data rather
    /// than being band-limited by construction.
    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    /// `c_n`, zero outside the stored band.
    pub fn coeff(&self, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.bandwidth {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(n + self.bandwidth as i64) as usize]
        }
    }

    /// Sets `c_n`; panics when `|n|` exceeds the bandwidth.
    pub fn set(&mut self, n: i64, c: Complex64) {
        assert!(n.unsigned_abs() as usize <= self.bandwidth, "index outside band");
        self.coeffs[(n + self.bandwidth as i64) as usize] = c;
    }

    /// Iterates `(n, c_n)` from `n = −N` up to `N`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let b = self.bandwidth as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - b, c))
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
}

/// Discrete Fourier analysis: `c_n = (1/M) Σ_k g(θ_k) e^{−inθ_k}`, `|n| ≤ N`.
///
/// Exact for trigonometric polynomials of degree ≤ N when `M > 2N`.
pub fn analyze(g: &GridFunction, bandwidth: usize) -> Result<FourierSeries> {
    let m = g.len();
    if 2 * bandwidth + 1 > m {
        return Err(Error::invalid(format!(
            "bandwidth N = {bandwidth} exceeds the Nyquist limit of an M = {m} grid (need 2N + 1 ≤ M)"
        )));
    }
    let mut buf = g.samples.clone();
    fft_forward(&mut buf);
    let scale = 1.0 / m as f64;
    let b = bandwidth as i64;
    let coeffs = (-b..=b)
        .map(|n| buf[n.rem_euclid(m as i64) as usize] * scale)
        .collect();
    Ok(FourierSeries { bandwidth, coeffs, truncated: true })
}

/// Largest bandwidth the grid supports, `M/2 − 1`.
pub fn max_bandwidth(m: usize) -> usize {
    m / 2 - 1
}

/// Discrete Fourier synthesis `g(θ_k) = Σ_n c_n e^{inθ_k}` on an `M`-point
/// grid.
pub fn synthesize(s: &FourierSeries, m: usize) -> Result<GridFunction> {
    check_grid_size(m)?;
    if m <= 2 * s.bandwidth {
        return Err(Error::invalid(format!(
            "grid size M = {m} must exceed 2N = {}",
            2 * s.bandwidth
        )));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (n, c) in s.iter() {
        buf[n.rem_euclid(m as i64) as usize] += c;
    }
    fft_inverse(&mut buf);
    GridFunction::new(buf)
}

/// Pointwise product on a common grid.
///
/// When the product of two band-limited functions is analyzed again, both
/// factors must be sampled on a grid of at least twice their combined
/// bandwidth or the result aliases.
pub fn pointwise_mul(g: &GridFunction, h: &GridFunction) -> Result<GridFunction> {
    if g.len() != h.len() {
        return Err(Error::invalid(format!(
            "cannot multiply grid functions of sizes {} and {}",
            g.len(),
            h.len()
        )));
    }
    GridFunction::new(g.samples.iter().zip(&h.samples).map(|(a, b)| a * b).collect())
}

/// Multiplication by `ζ^k`: `c_n ↦ c_{n−k}`. The bandwidth grows to `N + |k|`.
pub fn shift(s: &FourierSeries, k: i64) -> FourierSeries {
    let bandwidth = s.bandwidth + k.unsigned_abs() as usize;
    let mut out = FourierSeries::zeros(bandwidth);
    out.truncated = s.truncated;
    for (n, c) in s.iter() {
        out.set(n + k, c);
    }
    out
}

/// Discrete Hölder seminorm: `max_{j≠k} |g_j − g_k| / |ζ_j − ζ_k|^β`.
///
/// A lower bound for the `Lip_β` seminorm; grid doubling can only increase it
/// since the refined grid contains the coarse one.
pub fn lip_seminorm(g: &GridFunction, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::invalid(format!("Hölder exponent β must lie in (0, 1] (got {beta})")));
    }
    let m = g.len();
    let inv: Vec<f64> = (0..m)
        .map(|o| if o == 0 { 0.0 } else { chord(grid_angle(o, m)).powf(-beta) })
        .collect();
    let s = &g.samples;
    let best = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut row: f64 = 0.0;
            for k in j + 1..m {
                row = row.max((s[j] - s[k]).norm() * inv[k - j]);
            }
            row
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

#[derive(Serialize, Deserialize)]
struct WireFunction {
    kind: String,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    re: Vec<f64>,
    im: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truncated: Option<bool>,
}

impl Serialize for GridFunction {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        WireFunction {
            kind: "grid".into(),
            m: Some(self.len()),
            n: None,
            re: self.samples.iter().map(|z| z.re).collect(),
            im: self.samples.iter().map(|z| z.im).collect(),
            truncated: None,
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for GridFunction {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = WireFunction::deserialize(de)?;
        if w.kind != "grid" {
            return Err(D::Error::custom(format!("expected kind \"grid\", got {:?}", w.kind)));
        }
        if w.re.len() != w.im.len() || w.m.is_some_and(|m| m != w.re.len()) {
            return Err(D::Error::custom("grid function: M, re and im lengths disagree"));
        }
        let samples = w.re.iter().zip(&w.im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        GridFunction::new(samples).map_err(D::Error::custom)
    }
}

impl Serialize for FourierSeries {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        WireFunction {
            kind: "series".into(),
            m: None,
            n: Some(self.bandwidth),
            re: self.coeffs.iter().map(|z| z.re).collect(),
            im: self.coeffs.iter().map(|z| z.im).collect(),
            truncated: Some(self.truncated),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for FourierSeries {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = WireFunction::deserialize(de)?;
        if w.kind != "series" {
            return Err(D::Error::custom(format!("expected kind \"series\", got {:?}", w.kind)));
        }
        if w.re.len() != w.im.len() {
            return Err(D::Error::custom("series: re and im lengths disagree"));
        }
        let n = w.n.unwrap_or(w.re.len().saturating_sub(1) / 2);
        let coeffs = w.re.iter().zip(&w.im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let mut s = FourierSeries::new(n, coeffs).map_err(D::Error::custom)?;
        s.truncated = w.truncated.unwrap_or(false);
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn grid_validation() {
        assert!(GridFunction::new(vec![c(0.0, 0.0); 6]).is_err());
        assert!(GridFunction::new(vec![c(0.0, 0.0); 2]).is_err());
        assert!(GridFunction::new(vec![c(f64::NAN, 0.0); 4]).is_err());
        assert!(GridFunction::new(vec![c(0.0, 0.0); 8]).is_ok());
    }

    #[test]
    fn analyze_single_harmonic() {
        let g = GridFunction::from_fn(16, |t| Complex64::from_polar(1.0, t)).unwrap();
        let s = analyze(&g, 4).unwrap();
        for (n, cn) in s.iter() {
            let want = if n == 1 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(cn.re, want, epsilon = 1e-14);
            assert_abs_diff_eq!(cn.im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn analyze_constant_and_cosine() {
        let g = GridFunction::constant(8, c(3.0, 0.0)).unwrap();
        let s = analyze(&g, 3).unwrap();
        assert_abs_diff_eq!(s.coeff(0).re, 3.0, epsilon = 1e-14);
        assert!(s.iter().filter(|(n, _)| *n != 0).all(|(_, z)| z.norm() < 1e-14));

        let g = GridFunction::from_real_fn(32, f64::cos).unwrap();
        let s = analyze(&g, 5).unwrap();
        assert_abs_diff_eq!(s.coeff(1).re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(s.coeff(-1).re, 0.5, epsilon = 1e-14);
        assert!(s.is_truncated());
    }

    #[test]
    fn analyze_rejects_bandwidth_above_nyquist() {
        let g = GridFunction::constant(8, c(1.0, 0.0)).unwrap();
        assert!(analyze(&g, 4).is_err());
        assert!(analyze(&g, 3).is_ok());
    }

    #[test]
    fn synthesize_examples_and_errors() {
        let s = FourierSeries::monomial(1, c(1.0, 0.0));
        let g = synthesize(&s, 8).unwrap();
        for (k, z) in g.samples().iter().enumerate() {
            let w = Complex64::from_polar(1.0, grid_angle(k, 8));
            assert_abs_diff_eq!((z - w).norm(), 0.0, epsilon = 1e-14);
        }
        let z = synthesize(&FourierSeries::zeros(3), 8).unwrap();
        assert!(z.samples().iter().all(|v| v.norm() == 0.0));
        assert!(synthesize(&FourierSeries::zeros(4), 8).is_err());
        assert!(synthesize(&FourierSeries::zeros(1), 12).is_err());
    }

    #[test]
    fn product_of_cosines() {
        let g = GridFunction::from_real_fn(16, f64::cos).unwrap();
        let p = pointwise_mul(&g, &g).unwrap();
        let s = analyze(&p, 4).unwrap();
        assert_abs_diff_eq!(s.coeff(0).re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(s.coeff(2).re, 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(s.coeff(-2).re, 0.25, epsilon = 1e-14);

        let e = GridFunction::from_fn(8, |t| Complex64::from_polar(1.0, t)).unwrap();
        let e2 = pointwise_mul(&e, &e).unwrap();
        for (k, z) in e2.samples().iter().enumerate() {
            assert_abs_diff_eq!((z - Complex64::from_polar(1.0, 2.0 * grid_angle(k, 8))).norm(), 0.0, epsilon = 1e-14);
        }
        let one = GridFunction::constant(8, c(1.0, 0.0)).unwrap();
        assert_eq!(pointwise_mul(&e, &one).unwrap(), e);
        assert!(pointwise_mul(&e, &GridFunction::constant(16, c(1.0, 0.0)).unwrap()).is_err());
    }

    #[test]
    fn shift_examples() {
        let s = FourierSeries::monomial(0, c(1.0, 0.0));
        let t = shift(&s, 1);
        assert_eq!(t.bandwidth(), 1);
        assert_eq!(t.coeff(1), c(1.0, 0.0));
        assert_eq!(t.coeff(0), c(0.0, 0.0));
        assert_eq!(shift(&s, 0), s);
        let twice = shift(&shift(&s, 1), 1);
        let once = shift(&s, 2);
        for n in -3..=3 {
            assert_eq!(twice.coeff(n), once.coeff(n));
        }
    }

    #[test]
    fn lip_seminorm_examples() {
        let g = GridFunction::constant(32, c(2.0, 1.0)).unwrap();
        assert_eq!(lip_seminorm(&g, 0.5).unwrap(), 0.0);
        let id = GridFunction::from_fn(64, |t| Complex64::from_polar(1.0, t)).unwrap();
        assert_abs_diff_eq!(lip_seminorm(&id, 1.0).unwrap(), 1.0, epsilon = 1e-12);
        assert!(lip_seminorm(&id, 0.0).is_err());
        assert!(lip_seminorm(&id, 1.5).is_err());
    }

    #[test]
    fn derivative_of_trig_polynomial() {
        let g = GridFunction::from_real_fn(32, |t| (3.0 * t).sin()).unwrap();
        let d = g.derivative();
        for (k, z) in d.samples().iter().enumerate() {
            assert_abs_diff_eq!(z.re, 3.0 * (3.0 * grid_angle(k, 32)).cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn json_shape() {
        let g = GridFunction::from_real_fn(4, |t| t).unwrap();
        let v: serde_json::Value = serde_json::to_value(&g).unwrap();
        assert_eq!(v["kind"], "grid");
        assert_eq!(v["M"], 4);
        assert_eq!(v["re"].as_array().unwrap().len(), 4);
        let back: GridFunction = serde_json::from_value(v).unwrap();
        assert_eq!(back, g);

        let s = FourierSeries::monomial(-2, c(0.5, -1.0));
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["kind"], "series");
        assert_eq!(v["N"], 2);
        let back: FourierSeries = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<GridFunction>(r#"{"kind":"series","re":[1],"im":[0]}"#).is_err());
    }

    fn series_strategy(max_n: usize) -> impl Strategy<Value = FourierSeries> {
        (1..=max_n).prop_flat_map(|n| {
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2 * n + 1).prop_map(move |v| {
                FourierSeries::new(n, v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn analyze_inverts_synthesize(s in series_strategy(32)) {
            let g = synthesize(&s, 128).unwrap();
            let back = analyze(&g, s.bandwidth()).unwrap();
            for (n, cn) in s.iter() {
                prop_assert!((back.coeff(n) - cn).norm() <= 1e-12);
            }
        }

        #[test]
        fn parseval(s in series_strategy(20)) {
            let g = synthesize(&s, 64).unwrap();
            let energy: f64 = s.iter().map(|(_, c)| c.norm_sqr()).sum();
            let grid = g.mean_sq_modulus();
            prop_assert!((grid - energy).abs() <= 1e-10 * energy.max(1e-300));
        }

        #[test]
        fn shift_round_trip(s in series_strategy(10), k in -6i64..6) {
            let back = shift(&shift(&s, k), -k);
            for (n, cn) in s.iter() {
                prop_assert_eq!(back.coeff(n), cn);
            }
        }

        #[test]
        fn lip_seminorm_monotone_under_refinement(s in series_strategy(4), beta in 0.1f64..1.0) {
            let fine = synthesize(&s, 64).unwrap();
            let coarse = fine.decimate().unwrap();
            prop_assert!(lip_seminorm(&fine, beta).unwrap() >= lip_seminorm(&coarse, beta).unwrap());
        }
    }
}
