//! Closed subsets of the circle.
//!
//! A [`CircleSet`] is a sorted list of closed arcs (points are arcs of length
//! zero) together with the complementary open arcs `I_j`. Angles live in
//! `[0, 2π)`.

use crate::circle_fn::chord;
use crate::error::{Error, Result};
use crate::numeric::{integrate_graded, pairwise_sum};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const TAU: f64 = 2.0 * PI;

/// Complementary arc `(start, length)` of a set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gap {
    pub start: f64,
    pub length: f64,
    /// Construction generation for Cantor-type sets (0 for the outer gap).
    pub generation: Option<u32>,
}

/// How a stored set was produced; used to rebuild coarser truncations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Truncation {
    Finite,
    FullCircle,
    Arcs,
    EBeta { beta: f64, n_max: usize },
    Cantor { ratios: Vec<f64>, depth: u32, arc_start: f64, arc_length: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetKind {
    Points,
    Intervals,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircleSet {
    components: Vec<(f64, f64)>,
    gaps: Vec<Gap>,
    truncation: Truncation,
}

fn wrap(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

impl CircleSet {
    /// Set from closed arcs `(start, length)`; overlapping arcs are merged.
    pub fn from_arcs(arcs: Vec<(f64, f64)>) -> Result<Self> {
        Self::build(arcs, Truncation::Arcs)
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        Self::build(points.into_iter().map(|p| (p, 0.0)).collect(), Truncation::Finite)
    }

    pub fn full_circle() -> Self {
        CircleSet { components: vec![(0.0, TAU)], gaps: Vec::new(), truncation: Truncation::FullCircle }
    }

    fn build(arcs: Vec<(f64, f64)>, truncation: Truncation) -> Result<Self> {
        if arcs.is_empty() {
            return Err(Error::invalid("set must be nonempty"));
        }
        let mut comps = Vec::with_capacity(arcs.len());
        for (s, l) in arcs {
            if !s.is_finite() || !l.is_finite() || l < 0.0 {
                return Err(Error::invalid(format!("invalid arc ({s}, {l}): need finite start and length ≥ 0")));
            }
            if l >= TAU {
                return Ok(CircleSet { truncation, ..Self::full_circle() });
            }
            comps.push((wrap(s), l));
        }
        comps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(comps.len());
        for (s, l) in comps {
            if let Some(last) = merged.last_mut() {
                let end = last.0 + last.1;
                if s <= end {
                    last.1 = last.1.max(s + l - last.0);
                    continue;
                }
            }
            merged.push((s, l));
        }
        // The last arc may wrap past 2π onto the first ones.
        while merged.len() > 1 {
            let (ls, ll) = *merged.last().unwrap();
            let (fs, fl) = merged[0];
            if ls + ll >= fs + TAU {
                let end = (ls + ll).max(fs + fl + TAU);
                merged.last_mut().unwrap().1 = end - ls;
                merged.remove(0);
            } else {
                break;
            }
        }
        if merged.len() == 1 && merged[0].1 >= TAU {
            return Ok(CircleSet { truncation, ..Self::full_circle() });
        }
        let n = merged.len();
        let mut gaps = Vec::with_capacity(n);
        for i in 0..n {
            let (s, l) = merged[i];
            let next = if i + 1 < n { merged[i + 1].0 } else { merged[0].0 + TAU };
            let length = next - (s + l);
            if length <= 0.0 {
                return Ok(CircleSet { truncation, ..Self::full_circle() });
            }
            gaps.push(Gap { start: wrap(s + l), length, generation: None });
        }
        Ok(CircleSet { components: merged, gaps, truncation })
    }

    /// `E_β = {e^{i/(log n)^β} : 2 ≤ n ≤ n_max} ∪ {1}`.
    pub fn build_e_beta(beta: f64, n_max: usize) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::invalid(format!("0 < β ≤ 1 required (got {beta})")));
        }
        if n_max < 3 {
            return Err(Error::invalid(format!("n_max ≥ 3 required (got {n_max})")));
        }
        let mut pts: Vec<(f64, f64)> = (2..=n_max).map(|n| ((n as f64).ln().powf(-beta), 0.0)).collect();
        pts.push((0.0, 0.0));
        Self::build(pts, Truncation::EBeta { beta, n_max })
    }

    /// Cantor-type set on the arc `[arc_start, arc_start + arc_length]`:
    /// generation `k` removes the open middle fraction `ratios[k−1]` of every
    /// interval (the last ratio repeats when `depth` exceeds the list).
    pub fn build_cantor(ratios: &[f64], depth: u32, arc_start: f64, arc_length: f64) -> Result<Self> {
        if depth < 1 {
            return Err(Error::invalid("depth ≥ 1 required"));
        }
        if ratios.is_empty() {
            return Err(Error::invalid("at least one ratio required"));
        }
        if let Some(r) = ratios.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return Err(Error::invalid(format!("ratio in (0, 1) required (got {r})")));
        }
        if !(arc_start >= 0.0 && arc_length > 0.0 && arc_start + arc_length < TAU) {
            return Err(Error::invalid("arc must satisfy 0 ≤ start and start + length < 2π"));
        }
        let mut intervals = vec![(arc_start, arc_length)];
        let mut generations: Vec<u32> = Vec::new();
        for g in 1..=depth {
            let r = ratios[((g - 1) as usize).min(ratios.len() - 1)];
            let mut next = Vec::with_capacity(2 * intervals.len());
            let mut next_gens = Vec::with_capacity(2 * intervals.len());
            for (i, &(s, l)) in intervals.iter().enumerate() {
                let child = 0.5 * l * (1.0 - r);
                next.push((s, child));
                next_gens.push(g);
                next.push((s + l - child, child));
                if i + 1 < intervals.len() {
                    next_gens.push(generations[i]);
                }
            }
            intervals = next;
            generations = next_gens;
        }
        let trunc = Truncation::Cantor { ratios: ratios.to_vec(), depth, arc_start, arc_length };
        let mut set = Self::build(intervals, trunc)?;
        if set.gaps.len() != generations.len() + 1 {
            return Err(Error::invalid("Cantor construction degenerated at this depth"));
        }
        for (gap, g) in set.gaps.iter_mut().zip(generations.into_iter().chain([0])) {
            gap.generation = Some(g);
        }
        Ok(set)
    }

    /// Slowly closing ratios `r_k = 1 − 2^{−1/k}`, `k = 1..=depth`.
    pub fn slowly_closing_ratios(depth: u32) -> Vec<f64> {
        (1..=depth).map(|k| 1.0 - 2f64.powf(-1.0 / k as f64)).collect()
    }

    pub fn kind(&self) -> SetKind {
        if self.components.iter().all(|c| c.1 == 0.0) {
            SetKind::Points
        } else {
            SetKind::Intervals
        }
    }

    /// Closed arcs `(start, length)` sorted by start.
    pub fn components(&self) -> &[(f64, f64)] {
        &self.components
    }

    pub fn gaps(&self) -> &[Gap] {
        &self.gaps
    }

    pub fn truncation(&self) -> &Truncation {
        &self.truncation
    }

    pub fn is_full_circle(&self) -> bool {
        self.gaps.is_empty()
    }

    /// Lebesgue measure of the stored set.
    pub fn measure(&self) -> f64 {
        let ls: Vec<f64> = self.components.iter().map(|c| c.1).collect();
        pairwise_sum(&ls).min(TAU)
    }

    pub fn total_gap_length(&self) -> f64 {
        let ls: Vec<f64> = self.gaps.iter().map(|g| g.length).collect();
        pairwise_sum(&ls)
    }

    /// Adds one point to the set.
    pub fn with_point(&self, theta: f64) -> Result<Self> {
        let mut arcs = self.components.clone();
        arcs.push((theta, 0.0));
        Self::build(arcs, Truncation::Arcs)
    }

    /// Gap containing `θ` and the arclength offset from its start; `None`
    /// when `θ` lies in the set.
    pub fn locate(&self, theta: f64) -> Option<(usize, f64)> {
        if self.gaps.is_empty() {
            return None;
        }
        let t = wrap(theta);
        let idx = self.components.partition_point(|c| c.0 <= t);
        let (i, base) = if idx == 0 { (self.components.len() - 1, t + TAU) } else { (idx - 1, t) };
        let (s, l) = self.components[i];
        if base <= s + l {
            return None;
        }
        Some((i, (base - (s + l)).min(self.gaps[i].length)))
    }

    /// Arclength distance from `θ` to the set, in `[0, π]`.
    pub fn arc_distance(&self, theta: f64) -> f64 {
        match self.locate(theta) {
            None => 0.0,
            Some((i, off)) => off.min(self.gaps[i].length - off).max(0.0),
        }
    }

    /// Chordal distance `d(e^{iθ}, E)`.
    pub fn dist_to_set(&self, theta: f64) -> Result<f64> {
        if !theta.is_finite() {
            return Err(Error::invalid("angle must be finite"));
        }
        Ok(chord(self.arc_distance(theta)))
    }

    /// `N_E(t) = 2·#{j : |I_j| > 2t}`.
    pub fn counting_function(&self, t: f64) -> Result<usize> {
        if !(t > 0.0) {
            return Err(Error::invalid(format!("t > 0 required (got {t})")));
        }
        Ok(2 * self.gaps.iter().filter(|g| g.length > 2.0 * t).count())
    }

    /// `∫_𝕋 Ω(dist(ζ, E)) |dζ|` through the per-gap form
    /// `Σ_j 2∫_0^{|I_j|/2} Ω(t) dt` (arclength distance inside gaps).
    pub fn layer_cake(&self, omega: &RadialProfile) -> Result<f64> {
        omega.validate()?;
        let parts: Vec<f64> = self.gaps.iter().map(|g| 2.0 * omega.primitive(0.5 * g.length)).collect();
        Ok(pairwise_sum(&parts))
    }

    /// Midpoint-rule quadrature of `∫_{𝕋∖E} Ω(arc_distance(ζ, E)) |dζ|` on
    /// `m` cells (for checking [`layer_cake`](Self::layer_cake)).
    pub fn layer_cake_grid(&self, omega: &RadialProfile, m: usize) -> Result<f64> {
        omega.validate()?;
        if m < 4 {
            return Err(Error::invalid("grid size ≥ 4 required"));
        }
        let vals: Vec<f64> = (0..m)
            .map(|k| match self.locate(TAU * (k as f64 + 0.5) / m as f64) {
                None => 0.0,
                Some((i, off)) => {
                    let d = off.min(self.gaps[i].length - off);
                    if d > 0.0 {
                        omega.eval(d)
                    } else {
                        0.0
                    }
                }
            })
            .collect();
        Ok(TAU / m as f64 * pairwise_sum(&vals))
    }

    /// Sum of the Carleson integrand over the gaps, `Σ_j L_j (1 + log(2/L_j))`.
    pub fn carleson_sum(&self) -> f64 {
        let parts: Vec<f64> = self.gaps.iter().map(|g| g.length * (1.0 + (2.0 / g.length).ln())).collect();
        pairwise_sum(&parts)
    }

    /// One truncation level down, for the Cauchy test of
    /// [`carleson_integral`].
    pub fn coarser_truncation(&self) -> Option<CircleSet> {
        match &self.truncation {
            Truncation::EBeta { beta, n_max } if n_max / 10 >= 3 => Self::build_e_beta(*beta, n_max / 10).ok(),
            Truncation::Cantor { ratios, depth, arc_start, arc_length } if *depth > 1 => {
                Self::build_cantor(ratios, depth - 1, *arc_start, *arc_length).ok()
            }
            _ => None,
        }
    }
}

/// Radial profile `Ω` for layer-cake integrals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialProfile {
    /// `Ω ≡ c`.
    Constant { value: f64 },
    /// `Ω(t) = t^p`, `p > −1`.
    Power { exponent: f64 },
    /// `Ω(t) = log(1/t)`.
    LogInverse,
    /// `Ω(t) = log(1/(t^β + ε))`, evaluated with a graded rule.
    LogFloor { beta: f64, eps: f64 },
}

impl RadialProfile {
    fn validate(&self) -> Result<()> {
        match *self {
            RadialProfile::Constant { value } if !(value >= 0.0) => {
                Err(Error::invalid("Ω must be nonnegative"))
            }
            RadialProfile::Power { exponent } if !(exponent > -1.0) => {
                Err(Error::invalid(format!("exponent > −1 required (got {exponent})")))
            }
            RadialProfile::LogFloor { beta, eps } if !(beta > 0.0 && eps > 0.0) => {
                Err(Error::invalid("β > 0 and ε > 0 required"))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            RadialProfile::Constant { value } => value,
            RadialProfile::Power { exponent } => t.powf(exponent),
            RadialProfile::LogInverse => -t.ln(),
            RadialProfile::LogFloor { beta, eps } => -(t.powf(beta) + eps).ln(),
        }
    }

    /// `∫_0^x Ω(t) dt`.
    pub fn primitive(&self, x: f64) -> f64 {
        match *self {
            RadialProfile::Constant { value } => value * x,
            RadialProfile::Power { exponent } => x.powf(exponent + 1.0) / (exponent + 1.0),
            RadialProfile::LogInverse => x * (1.0 - x.ln()),
            RadialProfile::LogFloor { .. } => integrate_graded(|t| self.eval(t), x),
        }
    }
}

/// Carleson integral with a truncation-stability flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarlesonReport {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coarse_value: Option<f64>,
    pub diverging: bool,
}

/// Relative growth between two truncation levels above which the Carleson
/// integral is flagged as diverging.
pub const CARLESON_CAUCHY_TOL: f64 = 1e-2;

/// `∫_𝕋 log(1/d(ζ,E)) |dζ|` in the per-gap closed form. For truncated
/// countable or Cantor families the value is compared against the next
/// coarser truncation and flagged when it is still growing.
pub fn carleson_integral(e: &CircleSet) -> CarlesonReport {
    let value = e.carleson_sum();
    let coarse_value = e.coarser_truncation().map(|c| c.carleson_sum());
    let diverging = match coarse_value {
        Some(c) => (value - c) > CARLESON_CAUCHY_TOL * value.abs(),
        None => false,
    };
    CarlesonReport { value, coarse_value, diverging }
}

#[derive(Serialize, Deserialize)]
struct WireSet {
    kind: SetKind,
    angles: Vec<f64>,
    gaps: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generations: Option<Vec<u32>>,
    truncation: Truncation,
}

impl Serialize for CircleSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let kind = self.kind();
        let angles = match kind {
            SetKind::Points => self.components.iter().map(|c| c.0).collect(),
            SetKind::Intervals => self.components.iter().flat_map(|c| [c.0, c.0 + c.1]).collect(),
        };
        let generations = if self.gaps.iter().all(|g| g.generation.is_some()) && !self.gaps.is_empty() {
            Some(self.gaps.iter().map(|g| g.generation.unwrap()).collect())
        } else {
            None
        };
        WireSet {
            kind,
            angles,
            gaps: self.gaps.iter().map(|g| [g.start, g.length]).collect(),
            generations,
            truncation: self.truncation.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CircleSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = WireSet::deserialize(deserializer)?;
        let arcs: Vec<(f64, f64)> = match w.kind {
            SetKind::Points => w.angles.iter().map(|&a| (a, 0.0)).collect(),
            SetKind::Intervals => {
                if w.angles.len() % 2 != 0 {
                    return Err(D::Error::custom("interval sets need an even number of endpoint angles"));
                }
                w.angles.chunks(2).map(|p| (p[0], p[1] - p[0])).collect()
            }
        };
        let mut set = CircleSet::build(arcs, w.truncation).map_err(D::Error::custom)?;
        if set.gaps.len() != w.gaps.len() {
            return Err(D::Error::custom(format!(
                "gap list does not match the set ({} stored, {} implied)",
                w.gaps.len(),
                set.gaps.len()
            )));
        }
        if let Some(gens) = w.generations {
            if gens.len() != set.gaps.len() {
                return Err(D::Error::custom("generation list length differs from gap list"));
            }
            for (g, n) in set.gaps.iter_mut().zip(gens) {
                g.generation = Some(n);
            }
        }
        Ok(set)
    }
}
