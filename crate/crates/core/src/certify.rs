//! Cyclicity certificates: evaluate `‖p_ε f‖_{D(𝕋)}` (or `‖p_ε f²‖`) along a
//! decreasing ε-schedule together with the `Γ`-restricted split into
//! `A_ε` and `B_ε`, plus the necessary-condition controls.

use crate::capacity::{capacity_of, CapacityReport, SolverOptions};
use crate::circle_fn::{analyze, max_bandwidth, pointwise_mul, GridFunction};
use crate::error::{Error, Result};
use crate::geometry::{carleson_integral, CarlesonReport, CircleSet, Truncation};
use crate::norms::{dirichlet_energy_spectral, douglas_energy, inverse_chord_sq, l2_norm_sq};
use crate::numeric::{mean, pairwise_sum};
use crate::outer::{distance_samples, p_eps_thm2, p_eps_thm3_from_distance, EpsilonSchedule};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::time::Instant;

/// `f(θ_k) = d(θ_k, E)^β`.
pub fn build_test_function(e: &CircleSet, beta: f64, m: usize) -> Result<GridFunction> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::invalid(format!("0 < β ≤ 1 required (got {beta})")));
    }
    let d = distance_samples(e, m)?;
    GridFunction::from_real(d.into_iter().map(|x| x.powf(beta)).collect())
}

fn ramp(s: f64) -> f64 {
    s * s / (1.0 + s * s)
}

/// Smooth nonnegative function vanishing exactly on `E`: on a gap of length
/// `L`, at arclength `t` from its start, `ρ(t/w) ρ((L−t)/w)` with
/// `ρ(s) = s²/(1+s²)`. It vanishes to second order at the gap ends and is
/// `C^{1,1}` across points of `E`.
pub fn mollified_test_function(e: &CircleSet, width: f64, m: usize) -> Result<GridFunction> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::invalid(format!("mollify_width > 0 required (got {width})")));
    }
    let grid = GridFunction::constant(m, Complex64::new(0.0, 0.0))?;
    let vals = (0..m)
        .map(|k| match e.locate(grid.angle(k)) {
            None => 0.0,
            Some((i, t)) => {
                let l = e.gaps()[i].length;
                ramp(t / width) * ramp((l - t) / width)
            }
        })
        .collect();
    GridFunction::from_real(vals)
}

/// Decrement per unit of `log(1/ε)` between the last two rungs above which
/// the Szegő integral is flagged as diverging.
pub const SZEGO_RATE_TOL: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SzegoReport {
    pub eps: Vec<f64>,
    /// `∫ log(|f| + ε) |dζ|` per rung.
    pub values: Vec<f64>,
    /// Decrease per unit `log(1/ε)` between the last two rungs.
    pub last_rate: f64,
    pub diverging: bool,
}

/// `∫_𝕋 log(|f|+ε) |dζ|` on an ε-ladder, with a refinement test on the last
/// two rungs.
pub fn szego_check(f: &GridFunction, ladder: &[f64]) -> Result<SzegoReport> {
    if ladder.len() < 2 {
        return Err(Error::invalid("ε ladder needs at least two rungs"));
    }
    if ladder.windows(2).any(|w| !(w[1] < w[0])) || ladder.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::invalid("ε ladder must be positive and strictly decreasing"));
    }
    let abs: Vec<f64> = f.moduli();
    if abs.iter().all(|&x| x == 0.0) {
        return Err(Error::invalid("f must not vanish identically"));
    }
    let values: Vec<f64> = ladder
        .iter()
        .map(|&e| 2.0 * PI * mean(&abs.iter().map(|&x| (x + e).ln()).collect::<Vec<_>>()))
        .collect();
    let n = ladder.len();
    let last_rate = (values[n - 2] - values[n - 1]) / (ladder[n - 2] / ladder[n - 1]).ln();
    Ok(SzegoReport { eps: ladder.to_vec(), values, last_rate, diverging: last_rate > SZEGO_RATE_TOL })
}

/// One ε of a certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub eps: f64,
    #[serde(rename = "M_eps")]
    pub m_eps: f64,
    pub l2_sq: f64,
    pub dirichlet_energy: f64,
    pub total_norm: f64,
    #[serde(rename = "A_eps")]
    pub a_eps: f64,
    #[serde(rename = "B_eps")]
    pub b_eps: f64,
    /// Douglas quadrature of the certified product.
    pub douglas: f64,
    /// `p_ε(0)`.
    pub p_at_zero: f64,
    /// `16π² e^{−2M_ε} D(f)` (Theorem 2) or `M_ε e^{−2M_ε}` (Theorem 3).
    pub reference: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Decay,
    NoDecay,
    Inconclusive,
}

/// Final/initial ratio below which a sweep counts as decaying.
pub const DECAY_FACTOR: f64 = 0.5;
/// Final/initial ratio at or above which a sweep counts as not decaying.
pub const NO_DECAY_FACTOR: f64 = 0.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub theorem: u8,
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<Truncation>,
    /// `D(f)` by quadrature (Theorem 2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dirichlet_f: Option<f64>,
    pub rows: Vec<CertificateRow>,
    pub verdict: Verdict,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl CertificateReport {
    pub fn verdict_of(rows: &[CertificateRow]) -> Verdict {
        match (rows.first(), rows.last()) {
            (Some(a), Some(b)) if b.total_norm < DECAY_FACTOR * a.total_norm => Verdict::Decay,
            (Some(a), Some(b)) if b.total_norm >= NO_DECAY_FACTOR * a.total_norm => Verdict::NoDecay,
            _ => Verdict::Inconclusive,
        }
    }

    /// Per-row CSV with columns `eps, M_eps, l2_sq, dirichlet_energy,
    /// total_norm, A_eps, B_eps`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["eps", "M_eps", "l2_sq", "dirichlet_energy", "total_norm", "A_eps", "B_eps"])?;
        for r in &self.rows {
            w.serialize((r.eps, r.m_eps, r.l2_sq, r.dirichlet_energy, r.total_norm, r.a_eps, r.b_eps))?;
        }
        w.flush()?;
        Ok(())
    }

    /// `e^{−M_ε}` of the last two rows agrees within `rel`.
    pub fn m_eps_plateau(&self, rel: f64) -> bool {
        let n = self.rows.len();
        n >= 2 && ((self.rows[n - 2].m_eps - self.rows[n - 1].m_eps).exp() - 1.0).abs() <= rel
    }

    pub fn m_eps_strictly_increasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].m_eps > w[0].m_eps)
    }
}

struct Split {
    douglas: f64,
    a: f64,
    b: f64,
}

/// One pass over the grid pairs computing the Douglas quadrature of `p·g`
/// and the `Γ`-restricted sums
/// `A = ∬_Γ |p(ζ)|² |g(ζ)−g(ζ')|²/|ζ−ζ'|²`,
/// `B = ∬_Γ |g(ζ')|² |p(ζ)−p(ζ')|²/|ζ−ζ'|²`, `Γ = {key(ζ') ≤ key(ζ)}`.
fn gamma_split(p: &GridFunction, g: &GridFunction, key: &[f64]) -> Result<Split> {
    let m = p.len();
    let pg = pointwise_mul(p, g)?;
    let (pr, pi): (Vec<f64>, Vec<f64>) = p.samples().iter().map(|z| (z.re, z.im)).unzip();
    let (gr, gi): (Vec<f64>, Vec<f64>) = g.samples().iter().map(|z| (z.re, z.im)).unzip();
    let (qr, qi): (Vec<f64>, Vec<f64>) = pg.samples().iter().map(|z| (z.re, z.im)).unzip();
    let p2: Vec<f64> = p.samples().iter().map(|z| z.norm_sqr()).collect();
    let g2: Vec<f64> = g.samples().iter().map(|z| z.norm_sqr()).collect();
    let w = inverse_chord_sq(m);
    const BLOCK: usize = 256;
    let rows: Vec<(f64, f64, f64)> = (0..m)
        .into_par_iter()
        .map(|j| {
            let (mut pd, mut pa, mut pb) = (Vec::new(), Vec::new(), Vec::new());
            let mut start = j + 1;
            while start < m {
                let end = (start + BLOCK).min(m);
                let (mut sd, mut sa, mut sb) = (0.0, 0.0, 0.0);
                for k in start..end {
                    let wk = w[k - j];
                    let dq = (qr[j] - qr[k]).powi(2) + (qi[j] - qi[k]).powi(2);
                    let dgk = (gr[j] - gr[k]).powi(2) + (gi[j] - gi[k]).powi(2);
                    let dpk = (pr[j] - pr[k]).powi(2) + (pi[j] - pi[k]).powi(2);
                    sd += 2.0 * dq * wk;
                    if key[k] <= key[j] {
                        sa += p2[j] * dgk * wk;
                        sb += g2[k] * dpk * wk;
                    }
                    if key[j] <= key[k] {
                        sa += p2[k] * dgk * wk;
                        sb += g2[j] * dpk * wk;
                    }
                }
                pd.push(sd);
                pa.push(sa);
                pb.push(sb);
                start = end;
            }
            // Diagonal cell: mean of the two adjacent integrands, which stays
            // local when p is not resolved by the grid.
            let (l, r) = ((j + m - 1) % m, (j + 1) % m);
            let sq = |re: &[f64], im: &[f64], a: usize, b: usize| (re[a] - re[b]).powi(2) + (im[a] - im[b]).powi(2);
            let w1 = 0.5 * w[1];
            let diag_d = w1 * (sq(&qr, &qi, j, l) + sq(&qr, &qi, j, r));
            let diag_a = w1 * p2[j] * (sq(&gr, &gi, j, l) + sq(&gr, &gi, j, r));
            let diag_b = w1 * g2[j] * (sq(&pr, &pi, j, l) + sq(&pr, &pi, j, r));
            (pairwise_sum(&pd) + diag_d, pairwise_sum(&pa) + diag_a, pairwise_sum(&pb) + diag_b)
        })
        .collect();
    let h = 2.0 * PI / m as f64;
    let mf = m as f64;
    let d: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let a: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let b: Vec<f64> = rows.iter().map(|r| r.2).collect();
    Ok(Split {
        douglas: pairwise_sum(&d) / (mf * mf),
        a: h * h * pairwise_sum(&a),
        b: h * h * pairwise_sum(&b),
    })
}

/// Tolerance on `D(p f) ≤ (2/4π²)(2A_ε + 2B_ε)` in [`split_bound_holds`].
pub const SPLIT_SLACK: f64 = 1.05;

/// Whether a row satisfies the split inequality within [`SPLIT_SLACK`].
pub fn split_bound_holds(row: &CertificateRow) -> bool {
    row.douglas <= SPLIT_SLACK * (2.0 / (4.0 * PI * PI)) * (2.0 * row.a_eps + 2.0 * row.b_eps)
}

fn row_for(eps: f64, m_eps: f64, p: &crate::outer::OuterFunction, g: &GridFunction, key: &[f64]) -> Result<CertificateRow> {
    let m = g.len();
    let prod = pointwise_mul(&p.boundary, g)?;
    let s = analyze(&prod, max_bandwidth(m))?;
    let l2_sq = l2_norm_sq(&s);
    let dirichlet_energy = dirichlet_energy_spectral(&s);
    let split = gamma_split(&p.boundary, g, key)?;
    Ok(CertificateRow {
        eps,
        m_eps,
        l2_sq,
        dirichlet_energy,
        total_norm: (l2_sq + dirichlet_energy).sqrt(),
        a_eps: split.a,
        b_eps: split.b,
        douglas: split.douglas,
        p_at_zero: p.value_at_zero.re,
        reference: 0.0,
    })
}

/// Theorem 2 certificate: `‖p_ε f²‖` with `|p_ε| = e^{−M_ε}/(|f|+ε)`.
pub fn certificate_thm2(abs_f: &GridFunction, schedule: &EpsilonSchedule) -> Result<CertificateReport> {
    if schedule.values.is_empty() {
        return Err(Error::invalid("ε schedule must not be empty"));
    }
    let f = abs_f.real_parts();
    if !abs_f.is_real(1e-12) || f.iter().any(|&x| x < 0.0) {
        return Err(Error::invalid("|f| samples must be real and ≥ 0"));
    }
    let g = GridFunction::from_real(f.iter().map(|x| x * x).collect())?;
    let d_f = douglas_energy(abs_f);
    let mut rows = Vec::with_capacity(schedule.values.len());
    for &eps in &schedule.values {
        let (p, m_eps) = p_eps_thm2(abs_f, eps)?;
        let mut row = row_for(eps, m_eps, &p, &g, &f)?;
        row.reference = 16.0 * PI * PI * (-2.0 * m_eps).exp() * d_f;
        rows.push(row);
    }
    Ok(CertificateReport {
        theorem: 2,
        beta: schedule.beta,
        gamma: None,
        eta: None,
        m: abs_f.len(),
        set: None,
        dirichlet_f: Some(d_f),
        verdict: CertificateReport::verdict_of(&rows),
        rows,
        warnings: Vec::new(),
    })
}

/// Theorem 3 certificate: `‖p_ε f‖` for `f = d(·,E)^β` and
/// `|p_ε| = e^{−M_ε}/(d^γ+ε)^{1/2}` on an `m`-point grid.
pub fn certificate_thm3(e: &CircleSet, schedule: &EpsilonSchedule, m: usize) -> Result<CertificateReport> {
    schedule.validate_thm3()?;
    let gamma = schedule.gamma.expect("validated");
    let beta = schedule.beta;
    if e.is_full_circle() {
        return Err(Error::invalid("E must have a nonempty complement"));
    }
    let d = distance_samples(e, m)?;
    let f = GridFunction::from_real(d.iter().map(|x| x.powf(beta)).collect())?;
    let mut warnings = Vec::new();
    let h = 2.0 * PI / m as f64;
    for &eps in &schedule.values {
        if eps.powf(1.0 / gamma) < h {
            warnings.push(format!(
                "ε = {eps:e}: scale ε^(1/γ) = {:.3e} is below the grid spacing {h:.3e}",
                eps.powf(1.0 / gamma)
            ));
        }
    }
    let mut rows = Vec::with_capacity(schedule.values.len());
    for &eps in &schedule.values {
        let (p, m_eps) = p_eps_thm3_from_distance(&d, gamma, eps)?;
        let mut row = row_for(eps, m_eps, &p, &f, &d)?;
        row.reference = m_eps * (-2.0 * m_eps).exp();
        rows.push(row);
    }
    Ok(CertificateReport {
        theorem: 3,
        beta,
        gamma: Some(gamma),
        eta: schedule.eta,
        m,
        set: Some(e.truncation().clone()),
        dirichlet_f: None,
        verdict: CertificateReport::verdict_of(&rows),
        rows,
        warnings,
    })
}

/// Battery selection: a single name or a list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Batteries {
    One(String),
    Many(Vec<String>),
}

impl Batteries {
    pub fn names(&self) -> Vec<String> {
        match self {
            Batteries::One(s) => vec![s.clone()],
            Batteries::Many(v) => v.clone(),
        }
    }
}

/// Names accepted by [`run_suite`].
pub const BATTERIES: [&str; 6] = ["smoke", "thm2", "thm3", "thm3-Ebeta", "controls", "classify"];

/// Suite configuration (JSON).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub battery: Batteries,
    #[serde(default)]
    pub set: Option<CircleSet>,
    #[serde(default = "defaults::beta")]
    pub beta: f64,
    #[serde(default = "defaults::gamma")]
    pub gamma: f64,
    #[serde(default = "defaults::eta")]
    pub eta: f64,
    #[serde(default = "EpsilonSchedule::default_values")]
    pub eps: Vec<f64>,
    #[serde(rename = "M", default = "defaults::m")]
    pub m: usize,
    #[serde(default = "defaults::mollify_width")]
    pub mollify_width: f64,
}

mod defaults {
    pub fn beta() -> f64 {
        0.75
    }
    pub fn gamma() -> f64 {
        0.4
    }
    pub fn eta() -> f64 {
        0.3
    }
    pub fn m() -> usize {
        1 << 16
    }
    pub fn mollify_width() -> f64 {
        0.5
    }
}

impl SuiteConfig {
    pub fn new(battery: Batteries) -> Self {
        SuiteConfig {
            battery,
            set: None,
            beta: defaults::beta(),
            gamma: defaults::gamma(),
            eta: defaults::eta(),
            eps: EpsilonSchedule::default_values(),
            m: defaults::m(),
            mollify_width: defaults::mollify_width(),
        }
    }

    /// Checks every parameter the selected batteries use.
    pub fn validate(&self) -> Result<()> {
        let names = self.battery.names();
        for n in &names {
            if !BATTERIES.contains(&n.as_str()) {
                return Err(Error::invalid(format!("unknown battery {n:?} (expected one of {})", BATTERIES.join(", "))));
            }
        }
        if names.is_empty() {
            return Ok(());
        }
        if !(self.m >= 4 && self.m.is_power_of_two()) {
            return Err(Error::invalid(format!("M must be a power of two ≥ 4 (got {})", self.m)));
        }
        let uses = |b: &str| names.iter().any(|n| n == b);
        if uses("thm3") || uses("thm3-Ebeta") {
            EpsilonSchedule::thm3(self.eps.clone(), self.beta, self.eta, self.gamma)?;
        }
        if uses("thm2") {
            EpsilonSchedule::new(self.eps.clone(), self.beta)?;
            if !(self.mollify_width > 0.0) {
                return Err(Error::invalid(format!("mollify_width > 0 required (got {})", self.mollify_width)));
            }
        }
        if uses("classify") {
            EpsilonSchedule::new(self.eps.clone(), self.beta)?;
        }
        Ok(())
    }

    fn target_set(&self) -> Result<CircleSet> {
        match &self.set {
            Some(s) => Ok(s.clone()),
            None => CircleSet::build_e_beta(1.0, 10_000),
        }
    }
}

/// Classification of one set: Carleson integral, capacity and Szegő test of
/// `d(·,E)^β`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub set: Truncation,
    pub carleson: CarlesonReport,
    pub capacity: CapacityReport,
    pub szego: SzegoReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BundleEntry {
    Certificate { battery: String, label: String, report: CertificateReport },
    Classification { battery: String, label: String, result: Classification },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteBundle {
    pub entries: Vec<BundleEntry>,
    /// Run metadata kept apart from the data payload.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sidecar: Option<RunMetadata>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub wall_seconds: Vec<(String, f64)>,
}

/// Classifies `e` with the given ε-ladder for the Szegő test.
pub fn classify(e: &CircleSet, beta: f64, ladder: &[f64], m: usize) -> Result<Classification> {
    let f = build_test_function(e, beta, m)?;
    Ok(Classification {
        set: e.truncation().clone(),
        carleson: carleson_integral(e),
        capacity: capacity_of(e, 0.0, &SolverOptions::default())?,
        szego: szego_check(&f, ladder)?,
    })
}

/// Runs the configured batteries in order and collects their reports.
///
/// Wall-clock times are recorded in the sidecar only when `timings` is set,
/// so the data payload stays reproducible.
pub fn run_suite(config: &SuiteConfig, timings: bool) -> Result<SuiteBundle> {
    config.validate()?;
    let mut bundle = SuiteBundle::default();
    let mut meta = RunMetadata::default();
    for name in config.battery.names() {
        let start = Instant::now();
        run_battery(&name, config, &mut bundle.entries)?;
        meta.wall_seconds.push((name.clone(), start.elapsed().as_secs_f64()));
    }
    if timings {
        bundle.sidecar = Some(meta);
    }
    Ok(bundle)
}

fn cert(battery: &str, label: &str, report: CertificateReport) -> BundleEntry {
    BundleEntry::Certificate { battery: battery.into(), label: label.into(), report }
}

fn run_battery(name: &str, c: &SuiteConfig, out: &mut Vec<BundleEntry>) -> Result<()> {
    let one = || CircleSet::from_points(vec![0.0]);
    match name {
        "smoke" => {
            let m = 2048;
            let f = GridFunction::from_real(vec![1.0; m])?;
            out.push(cert(name, "thm2 f=1", certificate_thm2(&f, &EpsilonSchedule::new(c.eps.clone(), 1.0)?)?));
            let s = EpsilonSchedule::thm3(c.eps.clone(), 0.75, 0.3, 0.4)?;
            out.push(cert(name, "thm3 E={1}", certificate_thm3(&one()?, &s, m)?));
        }
        "thm2" => {
            let e = c.target_set()?;
            let f = mollified_test_function(&e, c.mollify_width, c.m)?;
            let s = EpsilonSchedule::new(c.eps.clone(), c.beta)?;
            out.push(cert(name, "thm2 mollified", certificate_thm2(&f, &s)?));
        }
        "thm3" | "thm3-Ebeta" => {
            let e = c.target_set()?;
            let s = EpsilonSchedule::thm3(c.eps.clone(), c.beta, c.eta, c.gamma)?;
            out.push(cert(name, "thm3", certificate_thm3(&e, &s, c.m)?));
        }
        "controls" => {
            let f = GridFunction::from_real(vec![1.0; c.m])?;
            out.push(cert(name, "thm2 f=1", certificate_thm2(&f, &EpsilonSchedule::new(c.eps.clone(), 1.0)?)?));
            let s = EpsilonSchedule::thm3(c.eps.clone(), c.beta, c.eta, c.gamma)?;
            out.push(cert(name, "thm3 E={1}", certificate_thm3(&one()?, &s, c.m)?));
        }
        "classify" => {
            let sets: Vec<(String, CircleSet)> = match &c.set {
                Some(s) => vec![("configured".into(), s.clone())],
                None => vec![
                    ("{1}".into(), one()?),
                    ("{1,-1}".into(), CircleSet::from_points(vec![0.0, PI])?),
                    ("E_1 n_max=1000".into(), CircleSet::build_e_beta(1.0, 1000)?),
                    (
                        "Cantor depth 8".into(),
                        CircleSet::build_cantor(&CircleSet::slowly_closing_ratios(8), 8, 0.0, PI)?,
                    ),
                ],
            };
            for (label, e) in sets {
                let result = classify(&e, c.beta, &c.eps, c.m)?;
                out.push(BundleEntry::Classification { battery: name.into(), label, result });
            }
        }
        other => return Err(Error::invalid(format!("unknown battery {other:?}"))),
    }
    Ok(())
}
