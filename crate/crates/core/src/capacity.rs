//! Logarithmic and α-energies of probability measures on the circle,
//! equilibrium measures and capacities.
//!
//! Measures are piecewise uniform on disjoint cells. The logarithmic energy
//! uses the kernel `log(1/|ζ − ζ'|)` averaged over pairs of cells; the
//! α-energy is the Fourier-side form `Σ_{n≥1} |μ̂(n)|²/n^{1−α}`.

use crate::circle_fn::chord;
use crate::error::{Error, Result};
use crate::geometry::CircleSet;
use crate::numeric::{blocked_sum, pairwise_sum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const TAU: f64 = 2.0 * PI;

/// Probability measure with uniform density on each cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub centers: Vec<f64>,
    pub widths: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(centers: Vec<f64>, widths: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let m = DiscreteMeasure { centers, widths, weights };
        m.validate()?;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.centers.len();
        if n == 0 || self.widths.len() != n || self.weights.len() != n {
            return Err(Error::invalid("measure needs matching nonempty center, width and weight lists"));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::invalid("weights must be ≥ 0"));
        }
        let total = pairwise_sum(&self.weights);
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("weights must sum to 1 (got {total})")));
        }
        if self.widths.iter().any(|&h| !(h > 0.0 && h <= TAU)) {
            return Err(Error::invalid("cell widths must lie in (0, 2π]"));
        }
        self.check_disjoint()
    }

    fn check_disjoint(&self) -> Result<()> {
        let mut cells: Vec<(f64, f64)> = self
            .centers
            .iter()
            .zip(&self.widths)
            .map(|(&c, &h)| (c.rem_euclid(TAU), h))
            .collect();
        cells.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairwise_sum(&self.widths);
        if total > TAU * (1.0 + 1e-12) {
            return Err(Error::invalid("overlapping cells"));
        }
        let n = cells.len();
        for i in 0..n {
            let (c0, h0) = cells[i];
            let (c1, h1) = if i + 1 < n { cells[i + 1] } else { (cells[0].0 + TAU, cells[0].1) };
            if n > 1 && c1 - c0 < 0.5 * (h0 + h1) * (1.0 - 1e-9) {
                return Err(Error::invalid("overlapping cells"));
            }
        }
        Ok(())
    }

    /// Uniform cells on the stored support of `e` (see [`cells_for_set`]),
    /// weighted by width.
    pub fn uniform_on(e: &CircleSet, resolution: usize) -> Result<Self> {
        let (centers, widths) = cells_for_set(e, resolution)?;
        let total = pairwise_sum(&widths);
        let weights = widths.iter().map(|h| h / total).collect();
        Ok(DiscreteMeasure { centers, widths, weights })
    }

    /// `μ̂(n) = ∫ e^{−inθ} dμ(θ)` with the exact cell average.
    pub fn fourier_coeff(&self, n: i64) -> Complex64 {
        let terms: Vec<Complex64> = self
            .centers
            .iter()
            .zip(&self.widths)
            .zip(&self.weights)
            .map(|((&c, &h), &w)| Complex64::from_polar(w * sinc(0.5 * n as f64 * h), -(n as f64) * c))
            .collect();
        crate::numeric::pairwise_sum_complex(&terms)
    }

    /// CSV rows `center,width,weight`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["center", "width", "weight"])?;
        for i in 0..self.len() {
            w.serialize((self.centers[i], self.widths[i], self.weights[i]))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Cells covering the stored support of `e` at resolution `r`.
///
/// Arcs share `r` cells in proportion to their length (at least one cell
/// each). Points get one cell of width `L/r` (`L` the total arc length, or
/// `2π` when there are no arcs), shrunk so that it does not reach halfway
/// into either neighbouring gap.
pub fn cells_for_set(e: &CircleSet, r: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if r < 8 {
        return Err(Error::invalid(format!("resolution ≥ 8 required (got {r})")));
    }
    let comps = e.components();
    let gaps = e.gaps();
    let arc_total: f64 = pairwise_sum(&comps.iter().map(|c| c.1).collect::<Vec<_>>());
    let base = if arc_total > 0.0 { arc_total / r as f64 } else { TAU / r as f64 };
    let n = comps.len();
    let mut centers = Vec::new();
    let mut widths = Vec::new();
    for (i, &(s, l)) in comps.iter().enumerate() {
        if l > 0.0 {
            let k = ((r as f64 * l / arc_total).round() as usize).max(1);
            let h = l / k as f64;
            for j in 0..k {
                centers.push((s + (j as f64 + 0.5) * h).rem_euclid(TAU));
                widths.push(h);
            }
        } else {
            let before = if gaps.is_empty() { TAU } else { gaps[(i + n - 1) % n].length };
            let after = if gaps.is_empty() { TAU } else { gaps[i].length };
            widths.push(base.min(before).min(after));
            centers.push(s);
        }
    }
    Ok((centers, widths))
}

/// Second antiderivative of `log|u|`.
fn g2(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        0.5 * u * u * u.abs().ln() - 0.75 * u * u
    }
}

/// Mean of `log(1/|x − y|)` over `x ∈ [−a/2, a/2]`, `y ∈ [d − b/2, d + b/2]`
/// (arclength).
fn cell_pair_log(a: f64, b: f64, d: f64) -> f64 {
    let (a1, b1) = (-0.5 * a, 0.5 * a);
    let (a2, b2) = (d - 0.5 * b, d + 0.5 * b);
    let integral = g2(b1 - a2) + g2(a1 - b2) - g2(a1 - a2) - g2(b1 - b2);
    -integral / (a * b)
}

/// Near-field threshold in units of the larger cell width.
const NEAR_FIELD: f64 = 4.0;

/// Averaged logarithmic kernel between cells `(c_i, h_i)` and `(c_j, h_j)`.
///
/// Self-energy `log(1/h) + 3/2`; far apart cells use the centre chord with a
/// second-order width correction; nearby cells use the exact arclength cell
/// average corrected by `log(arc/chord)` at the centres.
pub fn kernel_entry(ci: f64, hi: f64, cj: f64, hj: f64) -> f64 {
    let mut d = (cj - ci).rem_euclid(TAU);
    if d > PI {
        d = TAU - d;
    }
    if d == 0.0 && hi == hj {
        return (1.0 / hi).ln() + 1.5;
    }
    let ch = chord(d);
    if d >= NEAR_FIELD * hi.max(hj) {
        (1.0 / ch).ln() + (hi * hi + hj * hj) / (24.0 * ch * ch)
    } else {
        let arc_to_chord = if d > 0.0 { (d / ch).ln() } else { 0.0 };
        cell_pair_log(hi, hj, d) + arc_to_chord
    }
}

/// Dense symmetric kernel matrix, row-major.
fn kernel_matrix(centers: &[f64], widths: &[f64]) -> Vec<f64> {
    let n = centers.len();
    let mut q = vec![0.0; n * n];
    q.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, v) in row.iter_mut().enumerate() {
            *v = kernel_entry(centers[i], widths[i], centers[j], widths[j]);
        }
    });
    q
}

/// `Re(A^H D A)` with `A_{n,i} = sinc(n h_i/2) e^{−i n c_i}`, `D = n^{α−1}`,
/// `n = 1..=N`.
fn fourier_matrix(centers: &[f64], widths: &[f64], n_max: usize, alpha: f64) -> Vec<f64> {
    let r = centers.len();
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..r)
        .into_par_iter()
        .map(|i| {
            let mut re = Vec::with_capacity(n_max);
            let mut im = Vec::with_capacity(n_max);
            for n in 1..=n_max {
                let nf = n as f64;
                let amp = sinc(0.5 * nf * widths[i]) * nf.powf(0.5 * (alpha - 1.0));
                let (s, c) = (nf * centers[i]).sin_cos();
                re.push(amp * c);
                im.push(-amp * s);
            }
            (re, im)
        })
        .collect();
    let mut q = vec![0.0; r * r];
    q.par_chunks_mut(r).enumerate().for_each(|(i, row)| {
        let (ri, ii) = &rows[i];
        for (j, v) in row.iter_mut().enumerate() {
            let (rj, ij) = &rows[j];
            *v = blocked_sum(n_max, |n| ri[n] * rj[n] + ii[n] * ij[n]);
        }
    });
    q
}

/// Truncated Fourier energy `Σ_{n=1}^{N} |μ̂(n)|²/n^{1−α}`.
pub fn energy_fourier(mu: &DiscreteMeasure, n_max: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if n_max < 1 {
        return Err(Error::invalid("truncation N ≥ 1 required"));
    }
    mu.validate()?;
    let terms: Vec<f64> = (1..=n_max)
        .into_par_iter()
        .map(|n| mu.fourier_coeff(n as i64).norm_sqr() * (n as f64).powf(alpha - 1.0))
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Logarithmic energy `∬ log(1/|ζ−ζ'|) dμ dμ` by cell-averaged kernel sums.
pub fn energy_kernel(mu: &DiscreteMeasure) -> Result<f64> {
    mu.validate()?;
    let n = mu.len();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let wi = mu.weights[i];
            wi * blocked_sum(n, |j| mu.weights[j] * kernel_entry(mu.centers[i], mu.widths[i], mu.centers[j], mu.widths[j]))
        })
        .collect();
    Ok(pairwise_sum(&rows))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid(format!("0 ≤ α < 1 required (got {alpha})")));
    }
    Ok(())
}

/// Euclidean projection onto the probability simplex (sorting algorithm).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Solver settings for [`equilibrium_measure`] and [`capacity_of`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Cell count `R`; [`capacity_of`] also solves at `2R`.
    pub resolution: usize,
    /// Projected-gradient norm at which the solver stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Fourier truncation `N = fourier_factor / h_min` for α > 0.
    pub fourier_factor: f64,
    /// Upper limit on the Fourier truncation.
    pub max_fourier: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { resolution: 512, tol: 1e-8, max_iter: 5000, fourier_factor: 8.0, max_fourier: 8192 }
    }
}

/// Energy at or below which the capacity is reported as infinite.
pub const INFINITE_CAPACITY_ENERGY: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub energy: f64,
    /// `1/energy`, or `"inf"` in JSON when the energy is at most 1e−6.
    #[serde(with = "capacity_value")]
    pub capacity: f64,
    pub alpha: f64,
    pub resolution: usize,
    pub cells: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Energy at the coarser rung of the resolution ladder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coarse_energy: Option<f64>,
    /// `|energy − coarse_energy|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_estimate: Option<f64>,
    /// Energy after every accepted step.
    #[serde(skip)]
    pub history: Vec<f64>,
}

mod capacity_value {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Wire {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Wire::deserialize(d)? {
            Wire::Num(x) => Ok(x),
            Wire::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Wire::Str(s) => Err(serde::de::Error::custom(format!("unexpected capacity {s:?}"))),
        }
    }
}

fn capacity_from_energy(energy: f64) -> f64 {
    if energy <= INFINITE_CAPACITY_ENERGY {
        f64::INFINITY
    } else {
        1.0 / energy
    }
}

fn matvec(q: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    q.par_chunks(n).map(|row| blocked_sum(n, |j| row[j] * x[j])).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    blocked_sum(a.len(), |i| a[i] * b[i])
}

struct Solution {
    x: Vec<f64>,
    energy: f64,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

/// Minimizes `xᵀQx` over the probability simplex by spectral projected
/// gradient with Armijo backtracking.
fn minimize_on_simplex(q: &[f64], x0: Vec<f64>, tol: f64, max_iter: usize) -> Solution {
    const ARMIJO: f64 = 1e-4;
    const REFRESH: usize = 50;
    let n = x0.len();
    let mut x = project_simplex(&x0);
    let mut qx = matvec(q, &x);
    let mut f = dot(&x, &qx);
    let mut history = vec![f];
    let mut step = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..max_iter {
        let g: Vec<f64> = qx.iter().map(|v| 2.0 * v).collect();
        let probe: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - b).collect();
        let pg = project_simplex(&probe);
        let pg_norm = pg.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if pg_norm <= tol {
            converged = true;
            break;
        }
        let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        let d: Vec<f64> = project_simplex(&trial).iter().zip(&x).map(|(a, b)| a - b).collect();
        // Σd = 0, so shifting g by a constant leaves g·d unchanged but avoids
        // cancellation against the rounding error of Σd.
        let c = dot(&x, &g);
        let gd: f64 = g.iter().zip(&d).map(|(a, b)| (a - c) * b).sum();
        if !(gd < 0.0) {
            // Stationary up to rounding.
            converged = pg_norm <= tol.max(1e-12);
            break;
        }
        let qd = matvec(q, &d);
        let dqd = dot(&d, &qd);
        // The objective is quadratic, so the change along d is exact.
        let mut lambda = 1.0;
        let mut change = lambda * gd + lambda * lambda * dqd;
        while change > ARMIJO * lambda * gd && lambda > 1e-20 {
            lambda *= 0.5;
            change = lambda * gd + lambda * lambda * dqd;
        }
        if !(change < 0.0) {
            break;
        }
        for i in 0..n {
            x[i] += lambda * d[i];
            qx[i] += lambda * qd[i];
        }
        f = (f + change).min(f);
        history.push(f);
        iterations = it + 1;
        if iterations % REFRESH == 0 {
            qx = matvec(q, &x);
        }
        // Barzilai–Borwein step s·s / s·y with s = λd, y = 2λQd.
        let sy = 2.0 * lambda * lambda * dqd;
        let ss = lambda * lambda * dot(&d, &d);
        step = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { 1e12 };
    }
    let energy = dot(&x, &matvec(q, &x));
    Solution { x, energy, iterations, converged, history }
}

/// Equilibrium measure of `e` on `resolution` cells.
///
/// For `α = 0` the quadratic form is the cell-averaged logarithmic kernel;
/// for `α > 0` it is the truncated Fourier form. Running out of iterations is
/// reported through `converged = false`, with the best iterate returned.
pub fn equilibrium_measure(
    e: &CircleSet,
    alpha: f64,
    opts: &SolverOptions,
) -> Result<(DiscreteMeasure, CapacityReport)> {
    check_alpha(alpha)?;
    check_options(opts)?;
    let (centers, widths) = cells_for_set(e, opts.resolution)?;
    let q = if alpha == 0.0 {
        kernel_matrix(&centers, &widths)
    } else {
        fourier_matrix(&centers, &widths, fourier_truncation(&widths, opts), alpha)
    };
    let total = pairwise_sum(&widths);
    let x0: Vec<f64> = widths.iter().map(|h| h / total).collect();
    let sol = minimize_on_simplex(&q, x0, opts.tol, opts.max_iter);
    let cells = centers.len();
    let mu = DiscreteMeasure { centers, widths, weights: sol.x };
    let report = CapacityReport {
        energy: sol.energy,
        capacity: capacity_from_energy(sol.energy),
        alpha,
        resolution: opts.resolution,
        cells,
        iterations: sol.iterations,
        converged: sol.converged,
        coarse_energy: None,
        gap_estimate: None,
        history: sol.history,
    };
    Ok((mu, report))
}

fn fourier_truncation(widths: &[f64], opts: &SolverOptions) -> usize {
    let h_min = widths.iter().cloned().fold(f64::INFINITY, f64::min);
    ((opts.fourier_factor / h_min).ceil() as usize).clamp(1, opts.max_fourier)
}

fn check_options(opts: &SolverOptions) -> Result<()> {
    if opts.resolution < 8 {
        return Err(Error::invalid(format!("resolution ≥ 8 required (got {})", opts.resolution)));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid(format!("tol > 0 required (got {})", opts.tol)));
    }
    if opts.max_iter == 0 {
        return Err(Error::invalid("max_iter ≥ 1 required"));
    }
    Ok(())
}

/// Capacity of `e` from the resolution ladder `(R, 2R)`; the finer value is
/// reported with the inter-resolution gap as error estimate.
pub fn capacity_of(e: &CircleSet, alpha: f64, opts: &SolverOptions) -> Result<CapacityReport> {
    check_alpha(alpha)?;
    check_options(opts)?;
    let (_, coarse) = equilibrium_measure(e, alpha, opts)?;
    let fine_opts = SolverOptions { resolution: 2 * opts.resolution, ..*opts };
    let (_, mut fine) = equilibrium_measure(e, alpha, &fine_opts)?;
    fine.gap_estimate = Some((fine.energy - coarse.energy).abs());
    fine.coarse_energy = Some(coarse.energy);
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn non_increasing(h: &[f64]) -> bool {
        h.windows(2).all(|w| w[1] <= w[0])
    }

    #[test]
    fn self_energy_of_one_cell() {
        let mu = DiscreteMeasure::new(vec![1.0], vec![0.01], vec![1.0]).unwrap();
        assert_relative_eq!(energy_kernel(&mu).unwrap(), 100f64.ln() + 1.5, epsilon = 1e-14);
        assert_eq!(kernel_entry(0.3, 0.01, 0.3, 0.01), 100f64.ln() + 1.5);
    }

    #[test]
    fn cell_average_matches_brute_force() {
        // Gauss–Legendre product rule on two separated cells.
        let (x, w) = crate::numeric::gauss_legendre(24);
        for &(a, b, d) in &[(0.1, 0.05, 0.2), (0.02, 0.02, 0.02), (0.03, 0.01, 0.05)] {
            let mut acc = 0.0;
            for (xi, wi) in x.iter().zip(&w) {
                for (yj, wj) in x.iter().zip(&w) {
                    let u = 0.5 * a * xi;
                    let v = d + 0.5 * b * yj;
                    acc += 0.25 * wi * wj * -(v - u).abs().ln();
                }
            }
            assert_relative_eq!(cell_pair_log(a, b, d), acc, max_relative = 1e-6);
        }
    }

    #[test]
    fn full_circle_uniform_energy_vanishes() {
        let full = CircleSet::full_circle();
        for r in [256, 512] {
            let mu = DiscreteMeasure::uniform_on(&full, r).unwrap();
            assert!(energy_kernel(&mu).unwrap().abs() <= 1e-3);
            assert!(energy_fourier(&mu, 4 * r, 0.0).unwrap().abs() <= 1e-20);
        }
    }

    #[test]
    fn two_cells_fourier_growth() {
        let h = 1e-3;
        let mu = DiscreteMeasure::new(vec![0.0, PI], vec![h, h], vec![0.5, 0.5]).unwrap();
        // even coefficients are sinc(nh/2), odd vanish
        assert!(mu.fourier_coeff(3).norm() < 1e-15);
        assert_relative_eq!(mu.fourier_coeff(4).re, sinc(2.0 * h), epsilon = 1e-15);
        let a = energy_fourier(&mu, 10, 0.0).unwrap();
        let b = energy_fourier(&mu, 100, 0.0).unwrap();
        assert_relative_eq!(b - a, 0.5 * 10f64.ln(), max_relative = 0.05);
        assert!(energy_fourier(&mu, 100, 0.5).unwrap() > b);
        assert!(energy_fourier(&mu, 10, 1.0).is_err());
    }

    #[test]
    fn kernel_and_fourier_agree_on_arc() {
        let arc = CircleSet::from_arcs(vec![(0.5, 2.0)]).unwrap();
        let mu = DiscreteMeasure::uniform_on(&arc, 256).unwrap();
        let h = mu.widths[0];
        let k = energy_kernel(&mu).unwrap();
        let f = energy_fourier(&mu, (8.0 / h).ceil() as usize, 0.0).unwrap();
        assert_relative_eq!(k, f, max_relative = 1e-2);
    }

    #[test]
    fn overlapping_cells_rejected() {
        assert!(DiscreteMeasure::new(vec![0.0, 0.01], vec![0.1, 0.1], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![0.0], vec![0.1], vec![0.9]).is_err());
        assert!(DiscreteMeasure::new(vec![0.0, 1.0], vec![0.1, 0.1], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn full_circle_equilibrium() {
        let opts = SolverOptions { resolution: 128, ..Default::default() };
        let (mu, rep) = equilibrium_measure(&CircleSet::full_circle(), 0.0, &opts).unwrap();
        let u = 1.0 / 128.0;
        assert!(mu.weights.iter().all(|w| (w - u).abs() <= 1e-6));
        assert!(rep.energy <= 1e-6);
        assert!(rep.capacity.is_infinite());
        let js = serde_json::to_value(&rep).unwrap();
        assert_eq!(js["capacity"], "inf");
        let back: CapacityReport = serde_json::from_value(js).unwrap();
        assert!(back.capacity.is_infinite());
    }

    #[test]
    fn arc_equilibrium_concentrates_at_endpoints() {
        let opts = SolverOptions { resolution: 128, ..Default::default() };
        let arc = CircleSet::from_arcs(vec![(0.0, PI)]).unwrap();
        let (mu, rep) = equilibrium_measure(&arc, 0.0, &opts).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!(non_increasing(&rep.history));
        let n = mu.len();
        assert!(mu.weights[0] > mu.weights[n / 2] && mu.weights[n - 1] > mu.weights[n / 2]);
        // classical value: an arc of angle π has minimal energy log(1/sin(π/4))
        assert_relative_eq!(rep.energy, -(PI / 4.0).sin().ln(), max_relative = 2e-2);
    }

    #[test]
    fn countable_set_energy_grows_with_resolution() {
        let e = CircleSet::build_e_beta(1.0, 50).unwrap();
        let energies: Vec<f64> = [128, 256, 512]
            .iter()
            .map(|&r| {
                let opts = SolverOptions { resolution: r, ..Default::default() };
                equilibrium_measure(&e, 0.0, &opts).unwrap().1.energy
            })
            .collect();
        assert!(energies.windows(2).all(|w| w[1] > w[0] + 1e-3), "{energies:?}");
    }

    #[test]
    fn alpha_energy_dominates() {
        let opts = SolverOptions { resolution: 64, ..Default::default() };
        let arc = CircleSet::from_arcs(vec![(1.0, 1.0)]).unwrap();
        let (_, r0) = equilibrium_measure(&arc, 0.0, &opts).unwrap();
        let (_, r5) = equilibrium_measure(&arc, 0.5, &opts).unwrap();
        assert!(r5.energy >= r0.energy);
        assert!(r5.capacity <= r0.capacity);
        assert!(non_increasing(&r5.history));
    }

    #[test]
    fn points_get_clipped_cells() {
        let e = CircleSet::from_points(vec![0.0, 0.01, 3.0]).unwrap();
        let (c, w) = cells_for_set(&e, 64).unwrap();
        assert_eq!(c.len(), 3);
        assert!(w[0] <= 0.01 && w[1] <= 0.01);
        assert_relative_eq!(w[2], TAU / 64.0, epsilon = 1e-15);
        assert!(cells_for_set(&e, 4).is_err());
    }

    #[test]
    fn solver_reports_non_convergence() {
        let opts = SolverOptions { resolution: 64, max_iter: 1, tol: 1e-14, ..Default::default() };
        let arc = CircleSet::from_arcs(vec![(0.0, 1.0)]).unwrap();
        let (mu, rep) = equilibrium_measure(&arc, 0.0, &opts).unwrap();
        assert!(!rep.converged);
        assert_relative_eq!(pairwise_sum(&mu.weights), 1.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn projection_lands_on_simplex(v in prop::collection::vec(-5.0f64..5.0, 1..40)) {
            let p = project_simplex(&v);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            // idempotent
            let pp = project_simplex(&p);
            for (a, b) in p.iter().zip(&pp) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
