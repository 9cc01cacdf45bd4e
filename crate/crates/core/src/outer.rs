//! Outer functions realized on the boundary, and the certificate multipliers
//! `p_ε`, `F_ε`.

use crate::circle_fn::{fft_forward, fft_inverse, signed_frequency, GridFunction};
use crate::error::{Error, Result};
use crate::geometry::CircleSet;
use crate::numeric::mean;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Harmonic conjugate of a real grid function: multiplier `−i·sgn(n)` on the
/// Fourier side, with the mean and the Nyquist mode removed.
pub fn conjugate(u: &GridFunction) -> Result<GridFunction> {
    if !u.is_real(1e-12) {
        return Err(Error::invalid("conjugate needs a real-valued function"));
    }
    let m = u.len();
    let mut buf: Vec<Complex64> = u.real_parts().into_iter().map(|x| Complex64::new(x, 0.0)).collect();
    fft_forward(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let n = signed_frequency(k, m);
        *c = if n == 0 || k == m / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            *c * Complex64::new(0.0, -(n.signum() as f64))
        };
    }
    fft_inverse(&mut buf);
    let scale = 1.0 / m as f64;
    GridFunction::from_real(buf.into_iter().map(|c| c.re * scale).collect())
}

/// Boundary values of an outer function together with its log-modulus.
#[derive(Clone, Debug)]
pub struct OuterFunction {
    pub boundary: GridFunction,
    pub log_modulus: GridFunction,
    pub value_at_zero: Complex64,
}

impl OuterFunction {
    pub fn modulus(&self) -> Vec<f64> {
        self.log_modulus.real_parts().into_iter().map(f64::exp).collect()
    }
}

/// `exp(u + i ũ)` with `u = logw`.
pub fn outer_from_log_modulus(logw: &GridFunction) -> Result<OuterFunction> {
    if !logw.is_real(1e-12) {
        return Err(Error::invalid("log-modulus must be real"));
    }
    let u = logw.real_parts();
    if let Some(k) = u.iter().position(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("log-modulus sample {k} is not finite")));
    }
    let v = conjugate(logw)?.real_parts();
    let boundary = GridFunction::new(
        u.iter().zip(&v).map(|(&a, &b)| Complex64::from_polar(a.exp(), b)).collect(),
    )?;
    let log_modulus = GridFunction::from_real(u.clone())?;
    Ok(OuterFunction {
        boundary,
        log_modulus,
        value_at_zero: Complex64::new(mean(&u).exp(), 0.0),
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("ε > 0 required (got {eps})")));
    }
    Ok(())
}

fn nonnegative_moduli(abs_f: &GridFunction) -> Result<Vec<f64>> {
    let w = abs_f.real_parts();
    if !abs_f.is_real(1e-12) || w.iter().any(|&x| x < 0.0) {
        return Err(Error::invalid("|f| samples must be real and ≥ 0"));
    }
    Ok(w)
}

/// Builds an outer function from `log|·| = −shift − scale·log(base + ε)`
/// where `shift` is the grid mean of `−scale·log(base + ε)`, so `p(0) = 1`.
fn normalized_outer(base: &[f64], eps: f64, scale: f64) -> Result<(OuterFunction, f64)> {
    let logs: Vec<f64> = base.iter().map(|&x| -scale * (x + eps).ln()).collect();
    let m_eps = mean(&logs);
    let logw = GridFunction::from_real(logs.iter().map(|&l| l - m_eps).collect())?;
    Ok((outer_from_log_modulus(&logw)?, m_eps))
}

/// `p_ε` with `|p_ε| = e^{−M_ε}/(|f| + ε)` and
/// `M_ε = ∫ log(1/(|f|+ε)) |dζ|/2π`.
pub fn p_eps_thm2(abs_f: &GridFunction, eps: f64) -> Result<(OuterFunction, f64)> {
    check_eps(eps)?;
    let w = nonnegative_moduli(abs_f)?;
    normalized_outer(&w, eps, 1.0)
}

/// Chordal distance `d(θ_k, E)` on the `m`-point grid.
pub fn distance_samples(e: &CircleSet, m: usize) -> Result<Vec<f64>> {
    let g = GridFunction::constant(m, Complex64::new(0.0, 0.0))?;
    (0..m).map(|k| e.dist_to_set(g.angle(k))).collect()
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("γ > 0 required (got {gamma})")));
    }
    Ok(())
}

/// `p_ε` with `|p_ε| = e^{−M_ε}/(d(ζ,E)^γ + ε)^{1/2}` and
/// `M_ε = ½ ∫ log(1/(d^γ+ε)) |dζ|/2π`.
pub fn p_eps_thm3(e: &CircleSet, gamma: f64, eps: f64, m: usize) -> Result<(OuterFunction, f64)> {
    check_gamma(gamma)?;
    check_eps(eps)?;
    let d = distance_samples(e, m)?;
    p_eps_thm3_from_distance(&d, gamma, eps)
}

pub(crate) fn p_eps_thm3_from_distance(d: &[f64], gamma: f64, eps: f64) -> Result<(OuterFunction, f64)> {
    let dg: Vec<f64> = d.iter().map(|&x| x.powf(gamma)).collect();
    normalized_outer(&dg, eps, 0.5)
}

/// Data for [`f_eps_modulus`].
#[derive(Clone, Copy, Debug)]
pub enum FEpsData<'a> {
    /// `|F_ε| = |f| + ε`.
    Thm2 { abs_f: &'a GridFunction },
    /// `|F_ε| = d(ζ,E)^γ + ε` on an `m`-point grid.
    Thm3 { set: &'a CircleSet, gamma: f64, m: usize },
}

/// Outer function `F_ε` with the modulus of the corresponding proof.
pub fn f_eps_modulus(data: FEpsData<'_>, eps: f64) -> Result<OuterFunction> {
    check_eps(eps)?;
    let base = match data {
        FEpsData::Thm2 { abs_f } => nonnegative_moduli(abs_f)?,
        FEpsData::Thm3 { set, gamma, m } => {
            check_gamma(gamma)?;
            distance_samples(set, m)?.into_iter().map(|x| x.powf(gamma)).collect()
        }
    };
    let logw = GridFunction::from_real(base.iter().map(|&x| (x + eps).ln()).collect())?;
    outer_from_log_modulus(&logw)
}

/// Decreasing ε-ladder with the exponents of the Theorem 3 construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub beta: f64,
}

impl EpsilonSchedule {
    /// `{1e−1, 1e−2, 1e−3, 1e−4}`.
    pub fn default_values() -> Vec<f64> {
        vec![1e-1, 1e-2, 1e-3, 1e-4]
    }

    /// Schedule for the Theorem 2 certificate (no `γ`, `η`).
    pub fn new(values: Vec<f64>, beta: f64) -> Result<Self> {
        let s = EpsilonSchedule { values, gamma: None, eta: None, beta };
        s.validate_values()?;
        Ok(s)
    }

    /// Schedule for the Theorem 3 certificate; rejects parameters outside
    /// `β ∈ (1/2, 1]`, `η ∈ (0, (2β−1)/(2β))`, `0 < γ < 2βη`.
    pub fn thm3(values: Vec<f64>, beta: f64, eta: f64, gamma: f64) -> Result<Self> {
        let s = EpsilonSchedule { values, gamma: Some(gamma), eta: Some(eta), beta };
        s.validate_thm3()?;
        Ok(s)
    }

    fn validate_values(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::invalid("ε schedule must not be empty"));
        }
        for &e in &self.values {
            check_eps(e)?;
        }
        if self.values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid("ε schedule must be strictly decreasing"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::invalid(format!("0 < β ≤ 1 required (got {})", self.beta)));
        }
        Ok(())
    }

    pub fn validate_thm3(&self) -> Result<()> {
        let gamma = self.gamma.ok_or_else(|| Error::invalid("γ > 0 required (missing)"))?;
        let eta = self.eta.ok_or_else(|| Error::invalid("η > 0 required (missing)"))?;
        check_gamma(gamma)?;
        let beta = self.beta;
        if !(beta > 0.5 && beta <= 1.0) {
            return Err(Error::invalid(format!("1/2 < β ≤ 1 required (got {beta})")));
        }
        let eta_max = (2.0 * beta - 1.0) / (2.0 * beta);
        if !(eta > 0.0) {
            return Err(Error::invalid(format!("η > 0 required (got {eta})")));
        }
        if eta >= eta_max {
            return Err(Error::invalid(format!("η < (2β−1)/(2β) = {eta_max} required (got {eta})")));
        }
        if gamma >= 2.0 * beta * eta {
            return Err(Error::invalid(format!(
                "γ < 2βη = {} required (got {gamma})",
                2.0 * beta * eta
            )));
        }
        self.validate_values()
    }
}
