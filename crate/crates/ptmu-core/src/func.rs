//! Evaluation of bounded analytic functions on the closed disk: finite
//! Blaschke products, singular inner functions over realized measures, and
//! outer functions reconstructed from boundary log-modulus rules. Every
//! evaluator reports a certified error term alongside the value.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle::{CircleSet, TAU};
use crate::error::Error;
use crate::measure::{SingularMeasure, WeightProfile};
use crate::quad::{graded_arc_rule, GradedSpec, Rule};
use crate::series::{exp_series, mul_series};
use crate::Result;

const SUPPORT_MARGIN: f64 = 1e-12;

fn wrap(t: f64) -> f64 {
    t.rem_euclid(TAU)
}

/// `exp(-∫ (ζ+z)/(ζ-z) dν(ζ))` over the realized atoms of ν, together with
/// the realization error bound for Cantor components: per component,
/// mass × transport distance × the Herglotz-kernel Lipschitz constant
/// `2/dist²` at the evaluation point.
pub fn eval_singular_inner(nu: &SingularMeasure, z: Complex64) -> Result<(Complex64, f64)> {
    if z.norm() > 1.0 + 1e-12 {
        return Err(Error::Invalid {
            what: "singular inner evaluation",
            why: format!("|z| = {} exceeds the closed disk", z.norm()),
        });
    }
    let atoms = nu.realize()?;
    let mut sum = Complex64::ZERO;
    let mut dist: f64 = f64::INFINITY;
    for a in &atoms {
        let zeta = Complex64::from_polar(1.0, a.angle);
        dist = dist.min((zeta - z).norm());
        sum += (zeta + z) / (zeta - z) * a.mass;
    }
    if dist < SUPPORT_MARGIN {
        return Err(Error::OnSingularSupport {
            dist,
            margin: SUPPORT_MARGIN,
        });
    }
    let mut err = 0.0;
    for comp in &nu.cantor {
        let intervals = comp.generator().depth_intervals()?;
        let mut transport: f64 = 0.0;
        let mut comp_dist: f64 = f64::INFINITY;
        for &(s, len) in &intervals {
            transport = transport.max(len * TAU);
            let mid = Complex64::from_polar(1.0, wrap(TAU * (s + len / 2.0)));
            comp_dist = comp_dist.min((mid - z).norm());
        }
        err += comp.mass * transport * 2.0 / (comp_dist * comp_dist);
    }
    Ok(((-sum).exp(), err))
}

/// Finite Blaschke product `∏ (|a|/a)(a - z)/(1 - ā z)`; a zero at the
/// origin contributes the factor `z`.
pub fn eval_blaschke(zeros: &[Complex64], z: Complex64) -> Result<Complex64> {
    let mut out = Complex64::ONE;
    for &a in zeros {
        if a.norm() >= 1.0 {
            return Err(Error::Invalid {
                what: "blaschke zero",
                why: format!("|a| = {} must be strictly inside the disk", a.norm()),
            });
        }
        if a.norm() == 0.0 {
            out *= z;
            continue;
        }
        let denom = Complex64::ONE - a.conj() * z;
        if denom.norm() < 1e-14 {
            return Err(Error::Invalid {
                what: "blaschke evaluation",
                why: "z coincides with a reflected zero 1/ā".into(),
            });
        }
        out *= (a.norm() / a) * (a - z) / denom;
    }
    Ok(out)
}

/// Boundary log-modulus rule defining an outer function
/// `exp(∫ (ζ+z)/(ζ-z) L(ζ) dm)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OuterRule {
    /// L ≡ 0; the outer part is the constant 1.
    Zero,
    /// L = log ω for a boundary weight on its carrier, 0 off the carrier.
    Weight { weight: crate::measure::BoundaryWeight },
    /// L = power · log φ with φ = |(ζ-a_k)(ζ-b_k)| on each arc of the
    /// set's complement and φ = 1 on the set itself.
    EndpointCutoff { set: CircleSet, power: u32 },
    /// L = -drop on the set and 0 off it.
    Damping { set: CircleSet, drop: f64 },
}

impl Default for OuterRule {
    fn default() -> Self {
        OuterRule::Zero
    }
}

/// One maximal smooth piece of a rule's log-modulus.
#[derive(Debug, Clone)]
pub(crate) struct LogPiece {
    pub a: f64,
    pub b: f64,
    /// Quadrature must grade dyadically toward the endpoints.
    pub graded: bool,
    /// Phase-density strength of the endpoint behavior.
    pub strength: f64,
    /// Interior derivative kinks.
    pub cuts: Vec<f64>,
    kind: PieceKind,
}

#[derive(Debug, Clone)]
enum PieceKind {
    Const(f64),
    Profile(WeightProfile),
    CutoffArc { power: f64 },
}

impl LogPiece {
    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            PieceKind::Const(c) => *c,
            PieceKind::Profile(p) => p.log_eval(t, self.a, self.b),
            PieceKind::CutoffArc { power } => {
                let sa = 2.0 * ((t - self.a) / 2.0).sin().abs();
                let sb = 2.0 * ((t - self.b) / 2.0).sin().abs();
                power * (sa.max(1e-300).ln() + sb.max(1e-300).ln())
            }
        }
    }

    fn contains(&self, t: f64) -> bool {
        wrap(t - self.a) < self.b - self.a
    }
}

impl OuterRule {
    pub(crate) fn pieces(&self) -> Vec<LogPiece> {
        match self {
            OuterRule::Zero => Vec::new(),
            OuterRule::Weight { weight } => {
                let arcs = weight.carrier.set_arcs();
                arcs.iter()
                    .zip(&weight.pieces)
                    .filter(|((a, b), _)| b - a > 0.0)
                    .map(|(&(a, b), p)| LogPiece {
                        a,
                        b,
                        graded: !matches!(p, WeightProfile::Constant { .. }),
                        strength: 1.0,
                        cuts: p.interior_kinks(a, b),
                        kind: match p {
                            WeightProfile::Constant { value } => PieceKind::Const(value.ln()),
                            other => PieceKind::Profile(other.clone()),
                        },
                    })
                    .collect()
            }
            OuterRule::EndpointCutoff { set, power } => {
                if *power == 0 {
                    return Vec::new();
                }
                set.complement_spans()
                    .into_iter()
                    .map(|(a, b)| LogPiece {
                        a,
                        b,
                        graded: true,
                        strength: *power as f64,
                        cuts: Vec::new(),
                        kind: PieceKind::CutoffArc {
                            power: *power as f64,
                        },
                    })
                    .collect()
            }
            OuterRule::Damping { set, drop } => {
                if *drop == 0.0 {
                    return Vec::new();
                }
                set.set_arcs()
                    .into_iter()
                    .filter(|(a, b)| b - a > 0.0)
                    .map(|(a, b)| LogPiece {
                        a,
                        b,
                        graded: false,
                        strength: 0.0,
                        cuts: Vec::new(),
                        kind: PieceKind::Const(-drop),
                    })
                    .collect()
            }
        }
    }

    /// The boundary log-modulus at an angle (0 off the support pieces).
    pub fn log_modulus_at(&self, t: f64) -> f64 {
        for p in self.pieces() {
            if p.contains(t) {
                return p.eval(t);
            }
        }
        0.0
    }

    /// `Some((a, b, value))` arcs when the log-modulus is piecewise
    /// constant, which admits closed-form Herglotz integrals.
    fn piecewise_const(&self) -> Option<Vec<(f64, f64, f64)>> {
        let pieces = self.pieces();
        let mut arcs = Vec::with_capacity(pieces.len());
        for p in &pieces {
            match p.kind {
                PieceKind::Const(c) => arcs.push((p.a, p.b, c)),
                _ => return None,
            }
        }
        Some(arcs)
    }

    /// `∫ L dm`: closed form for piecewise-constant rules, graded panel
    /// quadrature otherwise.
    pub fn log_integral(&self) -> f64 {
        if let Some(arcs) = self.piecewise_const() {
            return arcs.iter().map(|(a, b, c)| c * (b - a) / TAU).sum();
        }
        let mut total = 0.0;
        for p in self.pieces() {
            let rule = piece_quadrature(&p, 1.0, 2.5);
            total += rule.integrate(|t| p.eval(t)) / TAU;
        }
        total
    }

    /// Fourier coefficient `∫ L e^{-i m t} dm` of the log-modulus.
    fn fourier_minus(&self, m: u32, rules: &[(LogPiece, Rule)]) -> Complex64 {
        if let Some(arcs) = self.piecewise_const() {
            let mut acc = Complex64::ZERO;
            for (a, b, c) in arcs {
                if m == 0 {
                    acc += Complex64::new(c * (b - a) / TAU, 0.0);
                } else {
                    let mf = m as f64;
                    let ea = Complex64::from_polar(1.0, -mf * a);
                    let eb = Complex64::from_polar(1.0, -mf * b);
                    acc += c * (eb - ea) / Complex64::new(0.0, -mf * TAU);
                }
            }
            return acc;
        }
        let mut acc = Complex64::ZERO;
        for (p, rule) in rules {
            acc += rule.integrate_complex(|t| {
                Complex64::from_polar(p.eval(t), -(m as f64) * t)
            }) / TAU;
        }
        acc
    }
}

fn piece_quadrature(p: &LogPiece, max_mode: f64, phase_div: f64) -> Rule {
    let spec = GradedSpec {
        cuts: p.cuts.clone(),
        endpoint_inset: if p.graded { 1e-13 } else { 0.0 },
        log_strength: p.strength.max(1.0),
        max_mode,
        nodes_per_panel: 16,
        phase_div,
        ..GradedSpec::default()
    };
    graded_arc_rule(p.a, p.b, &spec)
}

/// Quadrature policy for outer-function evaluation.
#[derive(Debug, Clone)]
pub struct OuterQuad {
    /// Agreement target between two successive node-density levels.
    pub tol: f64,
    /// Density doublings to try before giving up.
    pub max_doublings: u32,
    /// Hard cap on quadrature nodes per density level.
    pub max_nodes: usize,
}

impl Default for OuterQuad {
    fn default() -> Self {
        OuterQuad {
            tol: 1e-9,
            max_doublings: 6,
            max_nodes: 4_000_000,
        }
    }
}

/// `∫_a^b (ζ+z)/(ζ-z) dm(ζ)`: harmonic measure of the arc plus `i` times
/// its conjugate, in closed form. Valid through `|z| = 1` away from the arc
/// endpoints.
pub fn arc_herglotz(a: f64, b: f64, z: Complex64) -> Complex64 {
    let len = b - a;
    if len >= TAU - 1e-12 {
        return Complex64::ONE;
    }
    let r = z.norm();
    if r < 1e-300 {
        return Complex64::new(len / TAU, 0.0);
    }
    let phi = z.arg();
    let g = |psi: f64| {
        ((1.0 + r) * (psi / 2.0).sin()).atan2((1.0 - r) * (psi / 2.0).cos())
            / std::f64::consts::PI
    };
    let pa = wrap(a - phi);
    let pb = wrap(b - phi);
    let mut u = g(pb) - g(pa);
    if pb < pa {
        u += 1.0;
    }
    let ea = Complex64::from_polar(1.0, a);
    let eb = Complex64::from_polar(1.0, b);
    let v = -((eb - z).norm() / (ea - z).norm()).ln() / std::f64::consts::PI;
    Complex64::new(u, v)
}

/// Herglotz integral `∫ (ζ+z)/(ζ-z) L dm` of a rule's log-modulus:
/// closed form for piecewise-constant rules; graded panel quadrature with
/// density doubling and a Richardson error estimate in the interior; exact
/// pointwise log-modulus plus a principal-value conjugate on the boundary.
fn herglotz_log(rule: &OuterRule, z: Complex64, quad: &OuterQuad) -> Result<(Complex64, f64)> {
    let r = z.norm();
    if r > 1.0 + 1e-12 {
        return Err(Error::Invalid {
            what: "outer evaluation",
            why: format!("|z| = {r} exceeds the closed disk"),
        });
    }
    if let Some(arcs) = rule.piecewise_const() {
        if r >= 1.0 - 1e-12 {
            let t0 = wrap(z.arg());
            for &(a, b, _) in &arcs {
                for endpoint in [a, b] {
                    let d = wrap(t0 - endpoint).min(wrap(endpoint - t0));
                    if d < 1e-9 {
                        return Err(Error::Invalid {
                            what: "outer evaluation",
                            why: "boundary point at a log-modulus discontinuity".into(),
                        });
                    }
                }
            }
        }
        let mut acc = Complex64::ZERO;
        for (a, b, c) in arcs {
            acc += arc_herglotz(a, b, z) * c;
        }
        return Ok((acc, 1e-14 * (acc.norm() + 1.0)));
    }
    let pieces = rule.pieces();
    if pieces.is_empty() {
        return Ok((Complex64::ZERO, 0.0));
    }
    if r >= 1.0 - 1e-12 {
        let t0 = wrap(z.arg());
        let ev = ConjugateEvaluator::new(rule, 1.0, 2.5)?;
        let u0 = ev.check_clearance(t0)?;
        let mut prev = ev.conj_at(t0);
        for level in 1..=quad.max_doublings {
            let fine = ConjugateEvaluator::new(rule, 1.0, 2.5 * 2f64.powi(level as i32))?;
            let cur = fine.conj_at(t0);
            if (cur - prev).abs() <= quad.tol {
                return Ok((Complex64::new(u0, cur), (cur - prev).abs() / 3.0));
            }
            prev = cur;
        }
        return Err(Error::QuadratureNonConvergence {
            nodes: 0,
            defect: f64::NAN,
        });
    }
    // interior: resolve the kernel's angular concentration near arg z
    let mode = if r < 0.5 {
        8.0
    } else {
        ((1.0 / quad.tol).ln() / -r.ln()).min(2e6)
    };
    let mut prev: Option<Complex64> = None;
    let mut nodes = 0usize;
    for level in 0..=quad.max_doublings {
        let phase_div = 2.5 * 2f64.powi(level as i32);
        let mut acc = Complex64::ZERO;
        nodes = 0;
        for p in &pieces {
            let rule_q = piece_quadrature(p, mode, phase_div);
            nodes += rule_q.len();
            acc += rule_q.integrate_complex(|t| {
                let zeta = Complex64::from_polar(1.0, t);
                (zeta + z) / (zeta - z) * p.eval(t)
            }) / TAU;
        }
        if nodes > quad.max_nodes {
            return Err(Error::QuadratureNonConvergence {
                nodes,
                defect: f64::NAN,
            });
        }
        if let Some(last) = prev {
            let defect = (acc - last).norm();
            if defect <= quad.tol {
                return Ok((acc, defect / 3.0));
            }
        }
        prev = Some(acc);
    }
    Err(Error::QuadratureNonConvergence {
        nodes,
        defect: prev.map_or(f64::NAN, |p| p.norm()),
    })
}

/// Outer function `exp(∫ (ζ+z)/(ζ-z) L dm)` at `z` in the closed disk,
/// with the quadrature error estimate scaled to the value.
pub fn eval_outer(rule: &OuterRule, z: Complex64, quad: &OuterQuad) -> Result<(Complex64, f64)> {
    let (log, err) = herglotz_log(rule, z, quad)?;
    let value = log.exp();
    Ok((value, err * value.norm()))
}

/// Principal-value conjugate-function evaluator for a rule's log-modulus:
/// `v(t) = (1/2π) PV ∫ L(τ) cot((t-τ)/2) dτ`. Quadrature rules and piece
/// samples are precomputed once; each target angle then costs one pass over
/// the nodes, desingularized inside the piece containing the target. A
/// single cutoff piece spanning exactly a half circle additionally unlocks
/// the rotation identity `v(t) = strength·A(t) - v(t±π)` for targets off
/// the piece, where `A` is the closed-form conjugate of the full pair.
pub struct ConjugateEvaluator {
    pieces: Vec<LogPiece>,
    rules: Vec<Rule>,
    vals: Vec<Vec<f64>>,
    half_circle_cutoff: Option<(f64, f64, f64)>,
}

impl ConjugateEvaluator {
    pub fn new(rule: &OuterRule, max_mode: f64, phase_div: f64) -> Result<Self> {
        let pieces = rule.pieces();
        let mut rules = Vec::with_capacity(pieces.len());
        let mut vals = Vec::with_capacity(pieces.len());
        for p in &pieces {
            let r = piece_quadrature(p, max_mode, phase_div);
            vals.push(r.nodes.iter().map(|&t| p.eval(t)).collect());
            rules.push(r);
        }
        let half_circle_cutoff = match (pieces.len(), pieces.first()) {
            (1, Some(p)) if matches!(p.kind, PieceKind::CutoffArc { .. }) => {
                if (p.b - p.a - std::f64::consts::PI).abs() < 1e-12 {
                    Some((p.a, p.b, p.strength))
                } else {
                    None
                }
            }
            _ => None,
        };
        Ok(ConjugateEvaluator {
            pieces,
            rules,
            vals,
            half_circle_cutoff,
        })
    }

    /// Distance check of a target against piece endpoints and kinks;
    /// returns the log-modulus at the target on success.
    pub fn check_clearance(&self, t0: f64) -> Result<f64> {
        let mut value = 0.0;
        for p in &self.pieces {
            for edge in [p.a, p.b].iter().chain(&p.cuts) {
                let d = wrap(t0 - edge).min(wrap(edge - t0));
                if d < 1e-9 {
                    return Err(Error::Invalid {
                        what: "outer evaluation",
                        why: format!("boundary point within {d:.3e} of a log-modulus kink"),
                    });
                }
            }
            if p.contains(t0) {
                value = p.eval(t0);
            }
        }
        Ok(value)
    }

    pub fn conj_at(&self, t0: f64) -> f64 {
        if let Some((a, b, strength)) = self.half_circle_cutoff {
            let inside = wrap(t0 - a) < b - a;
            if !inside {
                // v(t) + v(t+π) is the conjugate of the half-circle pair
                // L(τ) + L(τ+π) = 2s·ln|sin(τ-a)| + s·ln 4, whose outer
                // function is (1 - z² e^{-2ia})^s
                let pair = strength * ((t0 - a).rem_euclid(std::f64::consts::PI)
                    - std::f64::consts::FRAC_PI_2);
                let tp = if wrap(t0 - a + std::f64::consts::PI) < b - a {
                    t0 + std::f64::consts::PI
                } else {
                    t0 - std::f64::consts::PI
                };
                return pair - self.direct(wrap(tp));
            }
        }
        self.direct(t0)
    }

    fn direct(&self, t0: f64) -> f64 {
        let mut acc = 0.0;
        for ((p, rule), vals) in self.pieces.iter().zip(&self.rules).zip(&self.vals) {
            if p.contains(t0) {
                let l0 = p.eval(t0);
                for (&t, (&w, &v)) in rule.nodes.iter().zip(rule.weights.iter().zip(vals)) {
                    let d = t0 - t;
                    let s = (d / 2.0).sin();
                    if s.abs() < 1e-13 {
                        continue;
                    }
                    acc += (v - l0) * ((d / 2.0).cos() / s) * w;
                }
                // PV ∫_a^b cot((t0-τ)/2) dτ in closed form
                let ca = ((t0 - p.a) / 2.0).sin().abs().max(1e-300).ln();
                let cb = ((t0 - p.b) / 2.0).sin().abs().max(1e-300).ln();
                acc += l0 * 2.0 * (ca - cb);
            } else {
                for (&t, (&w, &v)) in rule.nodes.iter().zip(rule.weights.iter().zip(vals)) {
                    let d = t0 - t;
                    let s = (d / 2.0).sin();
                    if s.abs() < 1e-13 {
                        continue;
                    }
                    acc += v * ((d / 2.0).cos() / s) * w;
                }
            }
        }
        acc / TAU
    }
}

/// Specification of a bounded analytic function as the product
/// `z^n · B · S_ν · (outer)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundedFunctionSpec {
    #[serde(default)]
    pub blaschke_zeros: Vec<Complex64>,
    #[serde(default)]
    pub singular_part: SingularMeasure,
    #[serde(default)]
    pub outer: OuterRule,
    #[serde(default)]
    pub monomial_power: u32,
}

impl BoundedFunctionSpec {
    /// The constant function 1.
    pub fn one() -> Self {
        BoundedFunctionSpec::default()
    }

    pub fn singular_inner(nu: SingularMeasure) -> Self {
        BoundedFunctionSpec {
            singular_part: nu,
            ..Default::default()
        }
    }

    pub fn with_outer(rule: OuterRule) -> Self {
        BoundedFunctionSpec {
            outer: rule,
            ..Default::default()
        }
    }

    pub fn is_pure_singular(&self) -> bool {
        self.blaschke_zeros.is_empty()
            && self.monomial_power == 0
            && matches!(self.outer, OuterRule::Zero)
    }

    /// Value and combined error bound at `z` in the closed disk.
    pub fn eval(&self, z: Complex64, quad: &OuterQuad) -> Result<(Complex64, f64)> {
        let m = z.powu(self.monomial_power);
        let b = if self.blaschke_zeros.is_empty() {
            Complex64::ONE
        } else {
            eval_blaschke(&self.blaschke_zeros, z)?
        };
        let (s, s_err) = if self.singular_part.is_zero() {
            (Complex64::ONE, 0.0)
        } else {
            eval_singular_inner(&self.singular_part, z)?
        };
        let (o, o_err) = if matches!(self.outer, OuterRule::Zero) {
            (Complex64::ONE, 0.0)
        } else {
            eval_outer(&self.outer, z, quad)?
        };
        let value = m * b * s * o;
        let err = (m * b).norm() * (s_err * o.norm() + s.norm() * o_err + s_err * o_err);
        Ok((value, err))
    }
}

/// Precomputed form of a [`BoundedFunctionSpec`] for bulk evaluation over
/// large node grids: the singular part is realized once and piecewise
/// constant outer rules collapse to their closed-form arc Herglotz sums.
/// No per-point error term is produced; callers own the support margins
/// and should stay off the singular support.
pub struct GridEvaluator {
    /// Realized support points `e^{i angle}` paired with masses.
    atoms: Vec<(Complex64, f64)>,
    zeros: Vec<Complex64>,
    power: u32,
    outer: Option<OuterGrid>,
}

enum OuterGrid {
    Arcs(Vec<(f64, f64, f64)>),
    General(OuterRule, OuterQuad),
}

impl BoundedFunctionSpec {
    /// Onetime setup for [`GridEvaluator::eval`] sweeps.
    pub fn grid_evaluator(&self) -> Result<GridEvaluator> {
        let atoms = if self.singular_part.is_zero() {
            Vec::new()
        } else {
            self.singular_part
                .realize()?
                .iter()
                .map(|a| (Complex64::from_polar(1.0, a.angle), a.mass))
                .collect()
        };
        let outer = match &self.outer {
            OuterRule::Zero => None,
            rule => Some(match rule.piecewise_const() {
                Some(arcs) => OuterGrid::Arcs(
                    arcs.into_iter()
                        .filter(|&(a, b, c)| b > a && c != 0.0)
                        .collect(),
                ),
                None => OuterGrid::General(rule.clone(), OuterQuad::default()),
            }),
        };
        Ok(GridEvaluator {
            atoms,
            zeros: self.blaschke_zeros.clone(),
            power: self.monomial_power,
            outer,
        })
    }
}

impl GridEvaluator {
    /// Value at a point of the closed disk away from the singular support.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let mut sum = Complex64::ZERO;
        for &(zeta, mass) in &self.atoms {
            sum += (zeta + z) / (zeta - z) * mass;
        }
        let mut v = (-sum).exp();
        if self.power > 0 {
            v *= z.powu(self.power);
        }
        if !self.zeros.is_empty() {
            v *= eval_blaschke(&self.zeros, z)?;
        }
        match &self.outer {
            None => {}
            Some(OuterGrid::Arcs(arcs)) => {
                let mut h = Complex64::ZERO;
                for &(a, b, c) in arcs {
                    h += c * arc_herglotz(a, b, z);
                }
                v *= h.exp();
            }
            Some(OuterGrid::General(rule, quad)) => {
                v *= eval_outer(rule, z, quad)?.0;
            }
        }
        Ok(v)
    }
}

/// Outer spec with log-modulus `N log φ`, `φ = |(ζ-a_k)(ζ-b_k)|` on each
/// arc complementary to E and 1 on E.
pub fn cutoff_outer(e: &CircleSet, power: u32) -> Result<BoundedFunctionSpec> {
    if power >= 1 && e.complementary_arcs().is_empty() {
        return Err(Error::Invalid {
            what: "cutoff construction",
            why: "the set must have a nonempty complement".into(),
        });
    }
    Ok(BoundedFunctionSpec::with_outer(OuterRule::EndpointCutoff {
        set: e.clone(),
        power,
    }))
}

/// `f_n(z) = z^n h_n(z)` where `h_n` is outer with log-modulus
/// `-σ n log n` on F and 0 off F.
pub fn companion_function(n: u32, f: &CircleSet, sigma: f64) -> Result<BoundedFunctionSpec> {
    if n < 2 {
        return Err(Error::Invalid {
            what: "companion function",
            why: format!("n = {n} must be at least 2"),
        });
    }
    if !(sigma > 0.0) {
        return Err(Error::Invalid {
            what: "companion function",
            why: format!("sigma = {sigma} must be positive"),
        });
    }
    if f.complementary_arcs().is_empty() {
        return Err(Error::Invalid {
            what: "companion function",
            why: "the carrier must have a nonempty complement".into(),
        });
    }
    Ok(BoundedFunctionSpec {
        monomial_power: n,
        outer: OuterRule::Damping {
            set: f.clone(),
            drop: sigma * n as f64 * (n as f64).ln(),
        },
        ..Default::default()
    })
}

/// Region kinds for modulus scans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionKind {
    /// Closed disk of radius 1 - 1/n.
    Disk,
    /// Union of the disk of radius 1 - 1/n with the boundary collar at
    /// distance ≥ rho/2 from the support.
    OmegaUnion,
    /// The unit disk minus that union: radii above 1 - 1/n at distance
    /// < rho/2 from the support.
    OmegaComplementInDisk,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Region {
    pub kind: RegionKind,
    pub n: u32,
    pub nu_support: CircleSet,
    pub rho: f64,
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Invalid {
                what: "region",
                why: format!("n = {} must be at least 2", self.n),
            });
        }
        if !(self.rho >= 0.0) {
            return Err(Error::Invalid {
                what: "region",
                why: format!("rho = {} must be nonnegative", self.rho),
            });
        }
        Ok(())
    }
}

/// Result of a deterministic minimum-modulus scan.
#[derive(Debug, Clone, Serialize)]
pub struct MinModulusReport {
    pub value: f64,
    pub angular_nodes: usize,
    pub radial_levels: usize,
    pub nodes_evaluated: usize,
    /// Human-readable echo of the grid that produced the minimum.
    pub grid: String,
}

/// Minimum of |theta| over a deterministic grid of the region:
/// radial-by-angular inside disks, boundary-collar sampling on the circle
/// part, radial slab sampling for the complement region.
pub fn min_modulus(
    theta: &BoundedFunctionSpec,
    region: &Region,
    resolution: usize,
) -> Result<MinModulusReport> {
    region.validate()?;
    let quad = OuterQuad::default();
    let angular = resolution.max(16);
    let radial = (resolution / 32).max(6);
    let big_r = 1.0 - 1.0 / region.n as f64;
    let margin = 1e-9;
    let mut points = Vec::new();
    match region.kind {
        RegionKind::Disk | RegionKind::OmegaUnion => {
            points.push(Complex64::ZERO);
            for j in 1..=radial {
                let r = big_r * j as f64 / radial as f64;
                for k in 0..angular {
                    points.push(Complex64::from_polar(r, TAU * k as f64 / angular as f64));
                }
            }
            if region.kind == RegionKind::OmegaUnion {
                for k in 0..angular {
                    let z = Complex64::from_polar(1.0, TAU * k as f64 / angular as f64);
                    let d = region.nu_support.distance_to(z);
                    if d >= region.rho / 2.0 {
                        if d < margin {
                            return Err(Error::SupportCollision {
                                angle: z.arg(),
                                margin,
                            });
                        }
                        points.push(z);
                    }
                }
            }
        }
        RegionKind::OmegaComplementInDisk => {
            for j in 1..=radial {
                let r = big_r + (1.0 - big_r) * j as f64 / (radial + 1) as f64;
                for k in 0..angular {
                    let z = Complex64::from_polar(r, TAU * k as f64 / angular as f64);
                    if region.nu_support.distance_to(z) < region.rho / 2.0 {
                        points.push(z);
                    }
                }
            }
            if points.is_empty() {
                return Err(Error::Invalid {
                    what: "region scan",
                    why: "no grid node falls in the complement region".into(),
                });
            }
        }
    }
    let mut min = f64::INFINITY;
    for &z in &points {
        let (v, _) = theta.eval(z, &quad)?;
        min = min.min(v.norm());
    }
    Ok(MinModulusReport {
        value: min,
        angular_nodes: angular,
        radial_levels: radial,
        nodes_evaluated: points.len(),
        grid: format!(
            "{:?} n={} rho={:.6e} angular={} radial={}",
            region.kind, region.n, region.rho, angular, radial
        ),
    })
}

/// `(Σ (n+1)^τ |c_n|²)^{1/2}` over finitely many coefficients.
pub fn sobolev_norm(coeffs: &[Complex64], tau: f64) -> f64 {
    assert!(tau > 0.0);
    coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| ((n + 1) as f64).powf(tau) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// First `count` Taylor coefficients of a spec: the singular part through
/// the exponential-series recurrence on its Herglotz log-series, Blaschke
/// factors and the outer part by Cauchy products, then the monomial shift.
pub fn taylor_coefficients(spec: &BoundedFunctionSpec, count: usize) -> Result<Vec<Complex64>> {
    if count == 0 {
        return Err(Error::Invalid {
            what: "taylor expansion",
            why: "count must be at least 1".into(),
        });
    }
    let mut series = if spec.singular_part.is_zero() {
        let mut c = vec![Complex64::ZERO; count];
        c[0] = Complex64::ONE;
        c
    } else {
        let atoms = spec.singular_part.realize()?;
        let total: f64 = atoms.iter().map(|a| a.mass).sum();
        let mut log = vec![Complex64::ZERO; count];
        log[0] = Complex64::new(-total, 0.0);
        for (m, slot) in log.iter_mut().enumerate().skip(1) {
            let mut acc = Complex64::ZERO;
            for a in &atoms {
                acc += Complex64::from_polar(a.mass, -(m as f64) * a.angle);
            }
            *slot = -2.0 * acc;
        }
        exp_series(&log)
    };
    for &a in &spec.blaschke_zeros {
        if a.norm() >= 1.0 {
            return Err(Error::Invalid {
                what: "blaschke zero",
                why: format!("|a| = {} must be strictly inside the disk", a.norm()),
            });
        }
        let mut factor = vec![Complex64::ZERO; count];
        if a.norm() == 0.0 {
            if count > 1 {
                factor[1] = Complex64::ONE;
            }
        } else {
            factor[0] = Complex64::new(a.norm(), 0.0);
            let unit = a.norm() / a;
            let mut pow = Complex64::ONE;
            for f in factor.iter_mut().skip(1) {
                *f = unit * pow * (a.norm_sqr() - 1.0);
                pow *= a.conj();
            }
        }
        series = mul_series(&series, &factor, count);
    }
    if !matches!(spec.outer, OuterRule::Zero) {
        let pieces = spec.outer.pieces();
        let quad_rules: Vec<(LogPiece, Rule)> = if spec.outer.piecewise_const().is_some() {
            Vec::new()
        } else {
            pieces
                .iter()
                .map(|p| {
                    let r = piece_quadrature(p, count as f64 + 2.0, 2.5);
                    (p.clone(), r)
                })
                .collect()
        };
        let mut log = vec![Complex64::ZERO; count];
        log[0] = Complex64::new(spec.outer.log_integral(), 0.0);
        for m in 1..count {
            log[m] = 2.0 * spec.outer.fourier_minus(m as u32, &quad_rules);
        }
        series = mul_series(&series, &exp_series(&log), count);
    }
    if spec.monomial_power > 0 {
        let shift = spec.monomial_power as usize;
        let mut out = vec![Complex64::ZERO; count];
        for i in 0..count.saturating_sub(shift) {
            out[i + shift] = series[i];
        }
        series = out;
    }
    Ok(series)
}
