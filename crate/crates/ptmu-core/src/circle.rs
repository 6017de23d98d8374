//! Closed subsets of the unit circle described by their complementary open
//! arcs, with arc-system entropy, distance queries, and truncated
//! Cantor-type set generators.
//!
//! Conventions fixed here and used everywhere else: angles are radians in
//! `[0, 2*pi)`, arc lengths are normalized so the full circle has measure 1,
//! and entropy uses the natural logarithm.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

pub const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Open arc of the circle: `start` in radians, `length` as a fraction of the
/// full circle. Arcs never wrap past angle zero once stored; inputs that
/// cross it are split at construction by [`CircleSet::from_complementary_arcs`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub start: f64,
    pub length: f64,
}

impl Arc {
    pub fn new(start: f64, length: f64) -> Result<Self> {
        if !(length > 0.0 && length <= 1.0) || !length.is_finite() {
            return Err(Error::Invalid {
                what: "arc",
                why: format!("length {length} outside (0, 1]"),
            });
        }
        if !start.is_finite() {
            return Err(Error::Invalid {
                what: "arc",
                why: format!("non-finite start {start}"),
            });
        }
        Ok(Arc {
            start: start.rem_euclid(TAU),
            length,
        })
    }

    /// Arc length in radians.
    pub fn radians(&self) -> f64 {
        self.length * TAU
    }

    /// End angle in radians; may exceed `2*pi` for an arc that wraps.
    pub fn end(&self) -> f64 {
        self.start + self.radians()
    }

    /// True when the angle lies strictly inside the open arc. Points within
    /// `1e-12` radians of an endpoint count as outside, so closed-set
    /// membership stays stable when boundary angles are reconstructed from
    /// rounded arithmetic.
    pub fn contains(&self, t: f64) -> bool {
        let rel = (t - self.start).rem_euclid(TAU);
        rel > 1e-12 && rel < self.radians() - 1e-12
    }
}

/// Per-level gap rule for Cantor-type constructions. At level `k >= 1` every
/// parent interval is split into two equal children by removing a centered
/// gap of the given normalized length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GapRule {
    /// Gap is one third of the parent, so children are thirds as well.
    MiddleThirds,
    /// Level-k gap of normalized length `scale * 2^-k / (4k)`, independent
    /// of the parent. The arc-system entropy of the limit set diverges:
    /// level increments approach the constant `scale * ln(2) / 8`.
    VariableGap { scale: f64 },
}

impl GapRule {
    /// Normalized gap length removed at level `k` from a parent of length
    /// `parent` (levels count from 1).
    fn gap(&self, k: u32, parent: f64) -> f64 {
        match self {
            GapRule::MiddleThirds => parent / 3.0,
            GapRule::VariableGap { scale } => scale * 2.0f64.powi(-(k as i32)) / (4.0 * k as f64),
        }
    }
}

/// Deterministic generator for a truncated Cantor-type set: base arc, gap
/// rule, and truncation depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CantorGenerator {
    pub base: Arc,
    pub rule: GapRule,
    pub depth: u32,
}

impl CantorGenerator {
    /// The closed level-`depth` intervals as `(start, length)` pairs in
    /// normalized units, in circular order along the base arc. Fails when a
    /// gap does not fit inside its parent.
    pub fn depth_intervals(&self) -> Result<Vec<(f64, f64)>> {
        let mut intervals = vec![(self.base.start / TAU, self.base.length)];
        for k in 1..=self.depth {
            let gap = self.rule.gap(k, intervals[0].1);
            let mut next = Vec::with_capacity(intervals.len() * 2);
            for &(s, len) in &intervals {
                let child = (len - gap) / 2.0;
                if child <= 0.0 {
                    return Err(Error::GapOverflow {
                        level: k,
                        gap,
                        parent: len,
                    });
                }
                next.push((s, child));
                next.push((s + child + gap, child));
            }
            intervals = next;
        }
        Ok(intervals)
    }

    /// Midpoint angles (radians) of the depth-level intervals.
    pub fn midpoints(&self) -> Result<Vec<f64>> {
        Ok(self
            .depth_intervals()?
            .iter()
            .map(|&(s, len)| (TAU * (s + len / 2.0)).rem_euclid(TAU))
            .collect())
    }
}

/// Closed subset of the circle, stored through its complementary open arcs.
/// The represented set is the circle minus the union of those arcs; arc
/// endpoints belong to the set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleSet {
    #[serde(rename = "arcs")]
    complementary_arcs: Vec<Arc>,
    #[serde(rename = "truncated")]
    truncated: bool,
    #[serde(skip)]
    generator: Option<CantorGenerator>,
}

/// Verdict of the arc-entropy classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BcVerdict {
    /// Entropy of the full arc system is provably finite.
    Yes,
    /// Per-level entropy increments of the generator fail to decay.
    Diverging,
    /// Truncated description with unknown tail.
    TruncatedUnknown,
}

/// Classification result with the evidence that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BcReport {
    pub verdict: BcVerdict,
    /// Cumulative entropy partial sums: per stored arc for explicit sets,
    /// per generator level otherwise.
    pub partial_sums: Vec<f64>,
    /// Geometric bound on the entropy tail beyond the examined levels, when
    /// the verdict is `Yes`.
    pub tail_bound: Option<f64>,
}

impl CircleSet {
    /// The whole circle (empty complementary system).
    pub fn full_circle() -> Self {
        CircleSet {
            complementary_arcs: Vec::new(),
            truncated: false,
            generator: None,
        }
    }

    /// Builds a set from its complementary open arcs. Arcs crossing angle
    /// zero are split into two stored arcs; the list is kept sorted by start
    /// angle. Rejects overlapping arcs and total length above 1.
    pub fn from_complementary_arcs(arcs: Vec<Arc>, truncated: bool) -> Result<Self> {
        let mut split: Vec<Arc> = Vec::with_capacity(arcs.len());
        for arc in arcs {
            let arc = Arc::new(arc.start, arc.length)?;
            if arc.end() > TAU + 1e-15 {
                let first_len = (TAU - arc.start) / TAU;
                split.push(Arc {
                    start: arc.start,
                    length: first_len,
                });
                split.push(Arc {
                    start: 0.0,
                    length: arc.length - first_len,
                });
            } else {
                split.push(arc);
            }
        }
        split.sort_by(|a, b| a.start.total_cmp(&b.start));
        let total: f64 = split.iter().map(|a| a.length).sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::Invalid {
                what: "circle set",
                why: format!("complementary arcs cover {total} > 1 of the circle"),
            });
        }
        for pair in split.windows(2) {
            if pair[0].end() > pair[1].start + 1e-15 {
                return Err(Error::Invalid {
                    what: "circle set",
                    why: format!(
                        "arcs starting at {} and {} overlap",
                        pair[0].start, pair[1].start
                    ),
                });
            }
        }
        Ok(CircleSet {
            complementary_arcs: split,
            truncated,
            generator: None,
        })
    }

    /// The set consisting of a single closed arc.
    pub fn closed_arc(start: f64, length: f64) -> Result<Self> {
        if length >= 1.0 {
            return Ok(Self::full_circle());
        }
        let arc = Arc::new(start, length)?;
        Self::from_complementary_arcs(vec![Arc::new(arc.end(), 1.0 - length)?], false)
    }

    /// Truncated Cantor-type set from a generator. Depth zero yields the
    /// closed base arc itself (an exact description); positive depths are
    /// marked truncated.
    pub fn cantor(generator: CantorGenerator) -> Result<Self> {
        let intervals = generator.depth_intervals()?;
        let base = generator.base;
        let mut comp = Vec::with_capacity(intervals.len());
        if base.length < 1.0 {
            comp.push(Arc::new(base.end(), 1.0 - base.length)?);
        }
        for pair in intervals.windows(2) {
            let gap_start = pair[0].0 + pair[0].1;
            let gap_len = pair[1].0 - gap_start;
            if gap_len > 0.0 {
                comp.push(Arc::new(TAU * gap_start, gap_len)?);
            }
        }
        let mut set = Self::from_complementary_arcs(comp, generator.depth > 0)?;
        set.generator = Some(generator);
        Ok(set)
    }

    pub fn complementary_arcs(&self) -> &[Arc] {
        &self.complementary_arcs
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn generator(&self) -> Option<&CantorGenerator> {
        self.generator.as_ref()
    }

    pub fn is_full_circle(&self) -> bool {
        self.complementary_arcs.is_empty()
    }

    /// Normalized Lebesgue measure of the set.
    pub fn measure(&self) -> f64 {
        1.0 - self.complementary_arcs.iter().map(|a| a.length).sum::<f64>()
    }

    /// True when the angle belongs to the closed set.
    pub fn contains_angle(&self, t: f64) -> bool {
        !self.complementary_arcs.iter().any(|a| a.contains(t))
    }

    /// The set's own closed arcs as `(start, end)` angle pairs in radians,
    /// with `end >= start` (the last pair may extend past `2*pi` when the
    /// set wraps through angle zero). Zero-length pairs mark isolated
    /// endpoint points. The full circle reports the single pair `(0, 2*pi)`.
    pub fn set_arcs(&self) -> Vec<(f64, f64)> {
        if self.complementary_arcs.is_empty() {
            return vec![(0.0, TAU)];
        }
        let mut arcs = Vec::with_capacity(self.complementary_arcs.len());
        for pair in self.complementary_arcs.windows(2) {
            arcs.push((pair[0].end(), pair[1].start));
        }
        let last = self.complementary_arcs.last().unwrap();
        let first = self.complementary_arcs.first().unwrap();
        // A degenerate wrap pair between two stored arcs is the seam left by
        // splitting one input arc at angle zero, not a set point. Degenerate
        // pairs elsewhere mark isolated points where complementary arcs
        // genuinely meet and are kept.
        let wrap_is_seam = self.complementary_arcs.len() >= 2
            && last.end() >= TAU - 1e-12
            && first.start <= 1e-12;
        if !wrap_is_seam {
            arcs.push((last.end(), first.start + TAU));
        }
        arcs.retain(|&(a, b)| b - a > -1e-12);
        arcs
    }

    /// The complement's maximal open arcs as `(start, end)` angle pairs in
    /// radians with `end > start` (the last pair may extend past `2*pi` when
    /// the complement wraps through angle zero). Stored arcs meeting at the
    /// wrap seam are merged back into one span, mirroring the seam handling
    /// in [`set_arcs`](Self::set_arcs). Empty for the full circle.
    pub fn complement_spans(&self) -> Vec<(f64, f64)> {
        let n = self.complementary_arcs.len();
        if n == 0 {
            return Vec::new();
        }
        let first = &self.complementary_arcs[0];
        let last = &self.complementary_arcs[n - 1];
        let wrap_is_seam = n >= 2 && last.end() >= TAU - 1e-12 && first.start <= 1e-12;
        if !wrap_is_seam {
            return self
                .complementary_arcs
                .iter()
                .map(|a| (a.start, a.end()))
                .collect();
        }
        let mut spans: Vec<(f64, f64)> = self.complementary_arcs[1..n - 1]
            .iter()
            .map(|a| (a.start, a.end()))
            .collect();
        spans.push((last.start, first.end() + TAU));
        spans
    }

    /// Arc-system entropy: sum of `len * ln(1/len)` over the stored
    /// complementary arcs, natural log, normalized lengths.
    pub fn entropy(&self) -> f64 {
        self.complementary_arcs
            .iter()
            .map(|a| a.length * (1.0 / a.length).ln())
            .sum()
    }

    /// Classifies the arc-system entropy. Explicit finite systems are
    /// finite; generator-described systems are classified from the analytic
    /// per-level increments of the rule, examining `budget` levels (clamped
    /// to `[8, 600]`); truncated systems without a generator report an
    /// unknown tail. The partial sums back whichever verdict is returned.
    pub fn is_beurling_carleson(&self, budget: f64) -> BcReport {
        if !self.truncated {
            let mut sums = Vec::with_capacity(self.complementary_arcs.len());
            let mut acc = 0.0;
            for a in &self.complementary_arcs {
                acc += a.length * (1.0 / a.length).ln();
                sums.push(acc);
            }
            return BcReport {
                verdict: BcVerdict::Yes,
                partial_sums: sums,
                tail_bound: Some(0.0),
            };
        }
        let Some(generator) = self.generator else {
            let mut sums = Vec::with_capacity(self.complementary_arcs.len());
            let mut acc = 0.0;
            for a in &self.complementary_arcs {
                acc += a.length * (1.0 / a.length).ln();
                sums.push(acc);
            }
            return BcReport {
                verdict: BcVerdict::TruncatedUnknown,
                partial_sums: sums,
                tail_bound: None,
            };
        };
        let levels = (budget.max(1.0).ceil() as usize).clamp(8, 600);
        // Per-level increments of the rule: level k prescribes 2^(k-1) gaps
        // of equal length g_k, contributing 2^(k-1) * g_k * ln(1/g_k). The
        // classification reads the rule itself, so it extends past the depth
        // at which a concrete truncation could still be realized.
        let mut increments = Vec::with_capacity(levels);
        let mut sums = Vec::with_capacity(levels);
        let mut parent = generator.base.length;
        let mut acc = 0.0;
        for k in 1..=levels as u32 {
            let gap = generator.rule.gap(k, parent);
            let ln_gap = gap.ln();
            let delta = (((k - 1) as f64) * std::f64::consts::LN_2 + ln_gap).exp() * (-ln_gap);
            increments.push(delta);
            acc += delta;
            sums.push(acc);
            parent = (parent - gap).max(f64::MIN_POSITIVE) / 2.0;
        }
        let window = levels / 4;
        let tail = &increments[levels - window..];
        let mut max_ratio: f64 = 0.0;
        for pair in increments[levels - window - 1..].windows(2) {
            max_ratio = max_ratio.max(pair[1] / pair[0]);
        }
        let verdict = if max_ratio <= 0.95 {
            BcVerdict::Yes
        } else if increments[levels - 1] > 0.0
            && increments[levels - 1] >= 0.5 * increments[levels / 2 - 1]
        {
            BcVerdict::Diverging
        } else {
            BcVerdict::TruncatedUnknown
        };
        let tail_bound = (verdict == BcVerdict::Yes)
            .then(|| tail[window - 1] * max_ratio / (1.0 - max_ratio));
        BcReport {
            verdict,
            partial_sums: sums,
            tail_bound,
        }
    }

    /// Euclidean distance from `z` to the set as a subset of the plane.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        let theta = z.im.atan2(z.re);
        let mut best = f64::INFINITY;
        for &(a, b) in &self.set_arcs() {
            let rel = (theta - a).rem_euclid(TAU);
            let candidate = if rel <= b - a {
                (1.0 - z.norm()).abs()
            } else {
                let da = (z - Complex64::from_polar(1.0, a)).norm();
                let db = (z - Complex64::from_polar(1.0, b)).norm();
                da.min(db)
            };
            best = best.min(candidate);
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vg_cantor(base_start: f64, base_len: f64, scale: f64, depth: u32) -> CircleSet {
        CircleSet::cantor(CantorGenerator {
            base: Arc::new(base_start, base_len).unwrap(),
            rule: GapRule::VariableGap { scale },
            depth,
        })
        .unwrap()
    }

    #[test]
    fn entropy_single_quarter_arc() {
        let set =
            CircleSet::from_complementary_arcs(vec![Arc::new(0.0, 0.25).unwrap()], false).unwrap();
        assert!((set.entropy() - 0.25 * 4.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn entropy_full_circle_is_zero() {
        assert_eq!(CircleSet::full_circle().entropy(), 0.0);
        assert!(CircleSet::full_circle().is_full_circle());
        assert_eq!(CircleSet::full_circle().measure(), 1.0);
    }

    #[test]
    fn entropy_additive_over_concatenated_systems() {
        let a = Arc::new(0.0, 0.1).unwrap();
        let b = Arc::new(3.0, 0.2).unwrap();
        let sa = CircleSet::from_complementary_arcs(vec![a], false).unwrap();
        let sb = CircleSet::from_complementary_arcs(vec![b], false).unwrap();
        let sab = CircleSet::from_complementary_arcs(vec![a, b], false).unwrap();
        assert!((sab.entropy() - sa.entropy() - sb.entropy()).abs() < 1e-15);
    }

    #[test]
    fn middle_thirds_depth_one() {
        let set = CircleSet::cantor(CantorGenerator {
            base: Arc::new(0.0, 0.5).unwrap(),
            rule: GapRule::MiddleThirds,
            depth: 1,
        })
        .unwrap();
        let arcs = set.set_arcs();
        assert_eq!(arcs.len(), 2);
        for &(a, b) in &arcs {
            assert!(((b - a) / TAU - 1.0 / 6.0).abs() < 1e-15);
        }
        assert!((set.measure() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn depth_zero_is_the_closed_base_arc() {
        let set = CircleSet::cantor(CantorGenerator {
            base: Arc::new(1.0, 0.25).unwrap(),
            rule: GapRule::MiddleThirds,
            depth: 0,
        })
        .unwrap();
        assert!(!set.truncated());
        assert_eq!(set.set_arcs().len(), 1);
        assert!((set.measure() - 0.25).abs() < 1e-15);
        assert!(set.contains_angle(1.0));
        assert!(set.contains_angle(1.0 + 0.25 * TAU));
        assert!(!set.contains_angle(1.0 - 0.1));
    }

    // Depth-8 variable-gap construction, base of normalized length 1/2:
    // totals frozen from an independent interval recursion.
    #[test]
    fn variable_gap_depth8_totals() {
        let set = vg_cantor(0.0, 0.5, 1.0, 8);
        assert_eq!(set.set_arcs().len(), 256);
        assert!((set.measure() - 1.60267857142856213e-01).abs() < 1e-14);
        assert!((set.entropy() - 1.78791237406581538e+00).abs() < 1e-12);
        // independent recursion for the set length
        let mut len = 0.5f64;
        for k in 1..=8u32 {
            let g = 2.0f64.powi(-(k as i32)) / (4.0 * k as f64);
            len = (len - g) / 2.0;
        }
        assert!((set.measure() - 256.0 * len).abs() < 1e-13);
    }

    #[test]
    fn cantor_levels_nest_and_stay_disjoint() {
        let generator = CantorGenerator {
            base: Arc::new(0.3, 0.5).unwrap(),
            rule: GapRule::VariableGap { scale: 1.0 },
            depth: 6,
        };
        let mut previous = CantorGenerator { depth: 0, ..generator }
            .depth_intervals()
            .unwrap();
        for d in 1..=6u32 {
            let level = CantorGenerator { depth: d, ..generator }
                .depth_intervals()
                .unwrap();
            for pair in level.windows(2) {
                assert!(pair[0].0 + pair[0].1 < pair[1].0 + 1e-15);
            }
            for child in &level {
                assert!(previous
                    .iter()
                    .any(|p| child.0 >= p.0 - 1e-15 && child.0 + child.1 <= p.0 + p.1 + 1e-15));
            }
            previous = level;
        }
    }

    #[test]
    fn entropy_partial_sums_monotone_in_depth() {
        let mut last = 0.0;
        for depth in 1..=10 {
            let e = vg_cantor(0.0, 0.5, 1.0, depth).entropy();
            assert!(e >= last);
            last = e;
        }
    }

    #[test]
    fn gap_overflow_rejected() {
        let result = CircleSet::cantor(CantorGenerator {
            base: Arc::new(0.0, 0.05).unwrap(),
            rule: GapRule::VariableGap { scale: 1.0 },
            depth: 3,
        });
        assert!(matches!(result, Err(Error::GapOverflow { level: 1, .. })));
    }

    #[test]
    fn finite_explicit_system_is_yes() {
        let set =
            CircleSet::from_complementary_arcs(vec![Arc::new(0.0, 0.25).unwrap()], false).unwrap();
        let report = set.is_beurling_carleson(100.0);
        assert_eq!(report.verdict, BcVerdict::Yes);
        assert_eq!(report.tail_bound, Some(0.0));
    }

    // Middle-thirds generator: increments are (b/2)(2/3)^k (k ln 3 + ln(1/b)),
    // a convergent series; the classifier must prove it from the decay ratio.
    #[test]
    fn middle_thirds_generator_is_yes() {
        let set = CircleSet::cantor(CantorGenerator {
            base: Arc::new(0.0, 0.5).unwrap(),
            rule: GapRule::MiddleThirds,
            depth: 10,
        })
        .unwrap();
        let report = set.is_beurling_carleson(200.0);
        assert_eq!(report.verdict, BcVerdict::Yes);
        // closed-form limit of the gap-system entropy: 3 b ln 3 + b ln(1/b)
        let b = 0.5f64;
        let closed = 3.0 * b * 3.0f64.ln() + b * (1.0 / b).ln();
        let last = *report.partial_sums.last().unwrap();
        assert!((last - closed).abs() < 1e-10, "partial {last} vs closed {closed}");
        assert!(report.tail_bound.unwrap() < 1e-10);
    }

    // Variable-gap increments approach scale * ln(2)/8; exact increment
    // formula checked, then the diverging verdict.
    #[test]
    fn variable_gap_generator_diverges() {
        let set = vg_cantor(0.0, 0.5, 1.0, 8);
        let report = set.is_beurling_carleson(400.0);
        assert_eq!(report.verdict, BcVerdict::Diverging);
        let sums = &report.partial_sums;
        for k in (300..sums.len()).step_by(25) {
            let delta = sums[k] - sums[k - 1];
            let kf = (k + 1) as f64;
            let exact = 2.0f64.ln() / 8.0 + (4.0 * kf).ln() / (8.0 * kf);
            assert!((delta - exact).abs() < 1e-12, "level {k}: {delta} vs {exact}");
        }
    }

    #[test]
    fn truncated_without_generator_is_unknown() {
        let set =
            CircleSet::from_complementary_arcs(vec![Arc::new(0.0, 0.25).unwrap()], true).unwrap();
        assert_eq!(
            set.is_beurling_carleson(50.0).verdict,
            BcVerdict::TruncatedUnknown
        );
    }

    #[test]
    fn distance_examples() {
        // point of the set
        let set = CircleSet::closed_arc(0.0, 0.25).unwrap();
        assert_eq!(set.distance_to(Complex64::new(1.0, 0.0)), 0.0);
        // set = {1}, z = -1: diameter
        let point = CircleSet::from_complementary_arcs(vec![Arc::new(0.0, 1.0).unwrap()], false)
            .unwrap();
        assert!((point.distance_to(Complex64::new(-1.0, 0.0)) - 2.0).abs() < 1e-15);
        // Cantor set on the circle seen from the origin
        let cantor = vg_cantor(0.0, 0.5, 1.0, 6);
        assert!((cantor.distance_to(Complex64::new(0.0, 0.0)) - 1.0).abs() < 1e-15);
        // full circle from an interior point
        assert!(
            (CircleSet::full_circle().distance_to(Complex64::new(0.3, 0.4)) - 0.5).abs() < 1e-15
        );
    }

    #[test]
    fn distance_is_lipschitz() {
        let set = vg_cantor(1.0, 0.3, 1.0, 4);
        let pts = [
            Complex64::new(0.2, 0.1),
            Complex64::new(-0.4, 0.5),
            Complex64::new(0.9, -0.1),
            Complex64::new(0.0, -0.8),
        ];
        for (i, &p) in pts.iter().enumerate() {
            for &q in &pts[i + 1..] {
                let dd = (set.distance_to(p) - set.distance_to(q)).abs();
                assert!(dd <= (p - q).norm() + 1e-12);
            }
        }
    }

    #[test]
    fn wrapping_arc_is_split() {
        let set = CircleSet::from_complementary_arcs(
            vec![Arc::new(6.0, 0.2).unwrap()],
            false,
        )
        .unwrap();
        assert_eq!(set.complementary_arcs().len(), 2);
        let total: f64 = set.complementary_arcs().iter().map(|a| a.length).sum();
        assert!((total - 0.2).abs() < 1e-15);
        assert!(!set.contains_angle(0.05));
        assert!(!set.contains_angle(6.1));
        assert!(set.contains_angle(3.0));
    }

    #[test]
    fn overlapping_arcs_rejected() {
        let result = CircleSet::from_complementary_arcs(
            vec![Arc::new(0.0, 0.2).unwrap(), Arc::new(1.0, 0.2).unwrap()],
            false,
        );
        assert!(result.is_err());
    }

    #[test]
    fn serde_round_trip() {
        let set = vg_cantor(0.0, 0.5, 1.0, 5);
        let json = serde_json::to_string(&set).unwrap();
        let back: CircleSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back.complementary_arcs(), set.complementary_arcs());
        assert_eq!(back.truncated(), set.truncated());
    }

    // Dichotomy-experiment geometry used by the integration suites: 1024
    // midpoint atoms inside a quarter-circle base centered at angle zero.
    #[test]
    fn dichotomy_generator_geometry() {
        let generator = CantorGenerator {
            base: Arc::new(0.875 * TAU, 0.25).unwrap(),
            rule: GapRule::VariableGap { scale: 0.25 },
            depth: 10,
        };
        let mids = generator.midpoints().unwrap();
        assert_eq!(mids.len(), 1024);
        let max_offset = mids
            .iter()
            .map(|&t| if t > std::f64::consts::PI { TAU - t } else { t })
            .fold(0.0f64, f64::max);
        assert!((max_offset - 7.84911984317875122e-01).abs() < 1e-12);
        // chordal separation of the atom family from the point i
        let rho = mids
            .iter()
            .map(|&t| (Complex64::new(0.0, 1.0) - Complex64::from_polar(1.0, t)).norm())
            .fold(f64::INFINITY, f64::min);
        assert!((rho - 7.65816013012778685e-01).abs() < 1e-12);
        // the truncated set itself reaches up to the base endpoint at pi/4
        let set = CircleSet::cantor(generator).unwrap();
        let to_set = set.distance_to(Complex64::new(0.0, 1.0));
        assert!((to_set - 2.0 * (std::f64::consts::PI / 8.0).sin()).abs() < 1e-12);
    }
}
