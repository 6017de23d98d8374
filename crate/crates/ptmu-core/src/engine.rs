//! Distance curves, dual lower bounds, and the cyclicity verdict.
//!
//! The forward side samples `d_N = inf { ||1 - theta p|| : deg p <= N }`
//! by solving the normal equations of one weighted Gram system. The dual
//! side seeds a bounded functional with a polynomial, verifies that the
//! functional annihilates every polynomial multiple of the multiplier,
//! and turns its value at 1 into a floor that holds under the whole
//! curve at once. `classify` weighs the two sides against each other.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::circle::CircleSet;
use crate::error::Error;
use crate::func::{cutoff_outer, taylor_coefficients, BoundedFunctionSpec, OuterQuad, OuterRule};
use crate::linalg::solve_hermitian;
use crate::measure::{Atom, BoundaryWeight, SpaceMeasure, WeightProfile};
use crate::norms::{
    gram_system, reframe_atoms, uniform_constant, CircleValues, GramSystem, RadialMoments,
};
use crate::quad::{graded_arc_rule, GradedSpec};
use crate::series::{fft_forward, offset_angles};
use crate::Result;

/// Angular half-width excluded around each multiplier atom when the
/// membership quadratures are laid out.
const ATOM_GAP: f64 = 3e-4;
/// Dyadic grading floor at carrier endpoints.
const EDGE_INSET: f64 = 1e-9;
/// Midpoint subdivisions that restore an excluded atom window in the
/// quadratures whose integrand is free of the multiplier.
const WINDOW_NODES: usize = 16;
/// Modes that must remain above the retention ceiling so the tail test
/// has data to look at.
const DECAY_GUARD: usize = 16;
/// Relative energy a retained-mode tail may carry.
const DECAY_RATIO: f64 = 1e-10;
/// Longest coefficient list kept from the diagnostic circle grid.
const GRID_KEEP: usize = 8192;

/// Distances from 1 to the polynomial multiples of a fixed multiplier,
/// sampled along a nested family of degrees.
///
/// All degrees share one Gram system, assembled once at the top degree;
/// degree `n` solves against its leading `(n+1) x (n+1)` block.
#[derive(Debug, Clone)]
pub struct DistanceCurve {
    pub degrees: Vec<usize>,
    pub values: Vec<f64>,
    /// Optimal polynomial per degree, constant coefficient first.
    pub coefficients: Vec<Vec<Complex64>>,
    /// Relative diagonal shift the solver needed at each degree.
    pub jitters: Vec<f64>,
    /// Shared pairing data at the top degree.
    pub gram: GramSystem,
}

/// Samples `inf_p ||1 - theta p||` over polynomials of each listed
/// degree.
///
/// `degrees` must be strictly increasing. The sampled values must come
/// out nonincreasing; a rise beyond solver tolerance reports the Gram
/// system as inconsistent instead of returning a bogus curve.
pub fn distance_curve(
    theta: &BoundedFunctionSpec,
    mu: &SpaceMeasure,
    degrees: &[usize],
) -> Result<DistanceCurve> {
    distance_curve_with(theta, mu, degrees, &GramParams::default())
}

/// [`distance_curve`] with explicit Gram node counts.
pub fn distance_curve_with(
    theta: &BoundedFunctionSpec,
    mu: &SpaceMeasure,
    degrees: &[usize],
    params: &GramParams,
) -> Result<DistanceCurve> {
    if degrees.is_empty() {
        return Err(Error::Invalid {
            what: "distance curve",
            why: "no degrees requested".into(),
        });
    }
    for pair in degrees.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::Invalid {
                what: "distance curve",
                why: format!(
                    "degrees must increase strictly, got {} then {}",
                    pair[0], pair[1]
                ),
            });
        }
    }
    let top = *degrees.last().expect("degrees is nonempty");
    let gram = gram_system_with(theta, mu, top, params)?;
    let mut values = Vec::with_capacity(degrees.len());
    let mut coefficients = Vec::with_capacity(degrees.len());
    let mut jitters = Vec::with_capacity(degrees.len());
    for &n in degrees {
        let (d, coeff, jitter) = curve_point(&gram, n).map_err(|e| Error::Invalid {
            what: "distance curve",
            why: format!("degree {n}: {e}"),
        })?;
        if let Some(&prev) = values.last() {
            if d > prev + 1e-9 {
                return Err(Error::Invalid {
                    what: "distance curve",
                    why: format!("distance rose from {prev:.6e} to {d:.6e} at degree {n}"),
                });
            }
        }
        values.push(d);
        coefficients.push(coeff);
        jitters.push(jitter);
    }
    Ok(DistanceCurve {
        degrees: degrees.to_vec(),
        values,
        coefficients,
        jitters,
        gram,
    })
}

/// Solves the leading block of the shared Gram system at one degree.
fn curve_point(gram: &GramSystem, degree: usize) -> Result<(f64, Vec<Complex64>, f64)> {
    let dim = degree + 1;
    if dim > gram.dim {
        return Err(Error::Invalid {
            what: "distance curve",
            why: format!("degree {degree} exceeds the assembled dimension {}", gram.dim),
        });
    }
    let mut block = Vec::with_capacity(dim * dim);
    for j in 0..dim {
        block.extend_from_slice(&gram.g[j * gram.dim..j * gram.dim + dim]);
    }
    let rhs: Vec<Complex64> = gram.b[..dim].iter().map(|v| v.conj()).collect();
    let (y, jitter) = solve_hermitian(&block, dim, &rhs)?;
    let mut pairing = 0.0;
    for j in 0..dim {
        pairing += (y[j] * gram.b[j]).re;
    }
    let d2 = gram.one_norm_sq - pairing;
    if d2 < -1e-8 {
        return Err(Error::Invalid {
            what: "distance curve",
            why: format!("squared distance {d2:.3e} is negative beyond tolerance"),
        });
    }
    let coeff = y.iter().map(|v| v.conj()).collect();
    Ok((d2.max(0.0).sqrt(), coeff, jitter))
}

/// Disk-side representer of a dual functional: the power series whose
/// weighted pairings reproduce the prescribed modes, with its norm.
#[derive(Debug, Clone, Serialize)]
pub struct CauchySolution {
    /// Power-series coefficients of the representer.
    pub coefficients: Vec<Complex64>,
    /// Weighted norm of the representer.
    pub norm: f64,
}

/// Solves for the disk function whose monomial pairings under the radial
/// moment weights match the prescribed modes, by diagonal division.
///
/// Rejects a mode list whose weighted tail is not visibly summable: the
/// trailing quarter of the energy must fall under the quarter before it,
/// otherwise the data does not come from a bounded functional and the
/// norm would be meaningless.
pub fn cauchy_solve_radial(g: &[Complex64], moments: &RadialMoments) -> Result<CauchySolution> {
    if g.is_empty() {
        return Ok(CauchySolution {
            coefficients: Vec::new(),
            norm: 0.0,
        });
    }
    if moments.len() < 2 * g.len() - 1 {
        return Err(Error::Invalid {
            what: "cauchy solve",
            why: format!(
                "need moments through order {}, have {}",
                2 * (g.len() - 1),
                moments.len().saturating_sub(1)
            ),
        });
    }
    let mut increments = Vec::with_capacity(g.len());
    for (q, &gq) in g.iter().enumerate() {
        let m = moments.value(2 * q);
        if m <= 0.0 {
            return Err(Error::Invalid {
                what: "cauchy solve",
                why: format!("vanishing moment of order {}", 2 * q),
            });
        }
        increments.push(gq.norm_sqr() / m);
    }
    let total: f64 = increments.iter().sum();
    if g.len() >= 32 {
        let half = g.len() / 2;
        let split = half + (g.len() - half) / 2;
        let q3: f64 = increments[half..split].iter().sum();
        let q4: f64 = increments[split..].iter().sum();
        if q4 >= q3 && q4 > 1e-12 * total {
            return Err(Error::InsufficientDecay {
                cutoff: g.len(),
                tail: q4.sqrt(),
                head: total.sqrt(),
            });
        }
    }
    let coefficients = g
        .iter()
        .enumerate()
        .map(|(q, &gq)| gq / moments.value(2 * q))
        .collect();
    Ok(CauchySolution {
        coefficients,
        norm: total.sqrt(),
    })
}

/// Controls for verifying that a dual functional annihilates the
/// polynomial multiples of the multiplier.
#[derive(Debug, Clone, Serialize)]
pub struct MembershipCheck {
    /// Pairing orders whose residuals are measured and reported.
    pub orders: Vec<usize>,
    /// Largest coefficient shift tolerated when the diagnostic circle
    /// grid is doubled.
    pub grid_tol: f64,
    /// Residual size above which the functional must not be used as a
    /// bound.
    pub residual_tol: f64,
    /// Ceiling on the number of complement-side modes retained.
    pub qmax: usize,
    /// Sobolev weight exponent for the tail-decay test. With weights
    /// `(1+q)^{2 tau}`, the choice `tau = (alpha+1)/2` makes the weighted
    /// energies match the disk-pairing increments, so the decay test
    /// certifies the retained disk norm directly.
    pub tau: f64,
}

impl Default for MembershipCheck {
    fn default() -> Self {
        MembershipCheck {
            orders: vec![0, 1, 5, 10, 25, 50],
            grid_tol: 1e-3,
            residual_tol: 1e-5,
            qmax: 512,
            tau: 0.5,
        }
    }
}

/// Boundary data shared by the dual-side assemblies: the multiplier,
/// the carrier cutoff, and the weight clip, each sampled on the circle.
struct DualContext {
    carrier: CircleSet,
    cutoff_power: u32,
    /// `min(1, omega)`: modulus of the clip factor on the carrier.
    level: f64,
    atoms: Vec<Atom>,
    theta: CircleValues,
    cutoff: CircleValues,
    clip: Option<CircleValues>,
}

fn dual_context(
    theta: &BoundedFunctionSpec,
    e: &CircleSet,
    cutoff_power: u32,
    omega: Option<&BoundaryWeight>,
) -> Result<DualContext> {
    let atoms = theta.singular_part.realize()?;
    for atom in &atoms {
        if !e.contains_angle(atom.angle) {
            return Err(Error::Invalid {
                what: "dual functional",
                why: format!(
                    "multiplier atom at angle {:.6} lies outside the carrier",
                    atom.angle
                ),
            });
        }
    }
    let omega_level = match omega {
        None => 1.0,
        Some(w) => {
            if w.carrier != *e {
                return Err(Error::Invalid {
                    what: "dual functional",
                    why: "boundary weight carrier differs from the dual carrier".into(),
                });
            }
            w.validate()?;
            match uniform_constant(&w.pieces) {
                Some(v) => v,
                None => {
                    return Err(Error::Invalid {
                        what: "dual functional",
                        why: "only uniform boundary weights are supported on the dual side"
                            .into(),
                    })
                }
            }
        }
    };
    let (cutoff_spec, power) = if e.complement_spans().is_empty() {
        (BoundedFunctionSpec::one(), 0)
    } else {
        (cutoff_outer(e, cutoff_power)?, cutoff_power)
    };
    let level = omega_level.min(1.0);
    let clip_spec = if level < 1.0 {
        let pieces = vec![WeightProfile::Constant { value: level }; e.set_arcs().len()];
        Some(BoundedFunctionSpec::with_outer(OuterRule::Weight {
            weight: BoundaryWeight {
                carrier: e.clone(),
                pieces,
            },
        }))
    } else {
        None
    };
    Ok(DualContext {
        carrier: e.clone(),
        cutoff_power: power,
        level,
        atoms,
        theta: CircleValues::new(theta)?,
        cutoff: CircleValues::new(&cutoff_spec)?,
        clip: match &clip_spec {
            Some(spec) => Some(CircleValues::new(spec)?),
            None => None,
        },
    })
}

/// Quadrature samples along one side of the carrier split: nodes,
/// weights, and the multiplier and cutoff-clip values at each node.
/// `window_*` holds the midpoint sub-rule that restores the excluded
/// atom windows for integrands free of the multiplier.
#[derive(Default)]
struct SideValues {
    t: Vec<f64>,
    w: Vec<f64>,
    zeta: Vec<Complex64>,
    theta: Vec<Complex64>,
    sh: Vec<Complex64>,
    window_zeta: Vec<Complex64>,
    window_w: Vec<f64>,
    window_sh: Vec<Complex64>,
}

impl DualContext {
    /// Samples the carrier arcs. Atom windows are excluded from the main
    /// rule and recorded as midpoint sub-rules.
    fn carrier_side(&self, max_mode: f64, gap: f64, inset: f64) -> Result<SideValues> {
        self.side(&self.carrier.set_arcs(), max_mode, gap, inset, 16, true)
    }

    /// Samples the complementary arcs, where the cutoff factor is large
    /// and the endpoint grading carries the accuracy.
    fn complement_side(&self, max_mode: f64, gap: f64, inset: f64) -> Result<SideValues> {
        self.side(
            &self.carrier.complement_spans(),
            max_mode,
            gap,
            inset,
            20,
            false,
        )
    }

    fn side(
        &self,
        spans: &[(f64, f64)],
        max_mode: f64,
        gap: f64,
        inset: f64,
        nodes_per_panel: usize,
        with_windows: bool,
    ) -> Result<SideValues> {
        let mut out = SideValues::default();
        for &(lo, hi) in spans {
            if hi - lo <= 0.0 {
                continue;
            }
            let framed = atom_images(lo, hi, &self.atoms);
            let spec = GradedSpec {
                atoms: framed.clone(),
                cuts: Vec::new(),
                atom_gap: gap,
                endpoint_inset: inset,
                log_strength: (self.cutoff_power as f64).max(1.0),
                max_mode,
                nodes_per_panel,
                phase_div: 2.5,
            };
            let rule = graded_arc_rule(lo, hi, &spec);
            for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                out.t.push(t);
                out.w.push(w);
                out.zeta.push(Complex64::from_polar(1.0, t));
                out.theta.push(self.theta.eval(t)?);
                out.sh.push(self.cutoff_clip(t)?);
            }
            if !with_windows {
                continue;
            }
            for &(ta, _) in &framed {
                let lo_ov = (ta - gap).max(lo);
                let hi_ov = (ta + gap).min(hi);
                if hi_ov <= lo_ov {
                    continue;
                }
                let step = (hi_ov - lo_ov) / WINDOW_NODES as f64;
                for i in 0..WINDOW_NODES {
                    let tm = lo_ov + (i as f64 + 0.5) * step;
                    out.window_zeta.push(Complex64::from_polar(1.0, tm));
                    out.window_w.push(step);
                    out.window_sh.push(self.cutoff_clip(tm)?);
                }
            }
        }
        Ok(out)
    }

    fn cutoff_clip(&self, t: f64) -> Result<Complex64> {
        let mut v = self.cutoff.eval(t)?;
        if let Some(clip) = &self.clip {
            v *= clip.eval(t)?;
        }
        Ok(v)
    }
}

/// Periodic images of the multiplier atoms near `[lo, hi]`, so that the
/// grading and the window exclusion see an atom that sits just past
/// either end of the interval.
fn atom_images(lo: f64, hi: f64, atoms: &[Atom]) -> Vec<(f64, f64)> {
    let mut framed = Vec::new();
    for (u, mass) in reframe_atoms(lo, hi, atoms) {
        for cand in [u - TAU, u, u + TAU] {
            if cand > lo - 1.0 && cand < hi + 1.0 {
                framed.push((cand, mass));
            }
        }
    }
    framed
}

/// Power sums `P_m = sum_l theta_l conj(sh_l) e^{-i m t_l} w_l / 2 pi`
/// for `m = 0..=mmax`, the shared building block of the dual pairings.
fn phase_sums(side: &SideValues, mmax: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); mmax + 1];
    for l in 0..side.t.len() {
        let base = side.theta[l] * side.sh[l].conj() * (side.w[l] / TAU);
        let step = side.zeta[l].conj();
        let mut cur = base;
        out[0] += cur;
        for slot in out.iter_mut().skip(1) {
            cur *= step;
            *slot += cur;
        }
    }
    out
}

fn poly_eval(p: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in p.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

fn vdot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Complement-side modes `g_q` of `theta conj(zeta p s H)`, `q <= qmax`.
fn smooth_modes(side: &SideValues, p: &[Complex64], qmax: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); qmax + 1];
    for l in 0..side.t.len() {
        let base = side.theta[l] * side.sh[l].conj() * (side.w[l] / TAU);
        let pv = poly_eval(p, side.zeta[l]);
        let step = side.zeta[l].conj();
        let mut cur = base * (side.zeta[l] * pv).conj();
        out[0] += cur;
        for slot in out.iter_mut().skip(1) {
            cur *= step;
            *slot += cur;
        }
    }
    out
}

/// Carrier-side mean of `theta conj(zeta p s H)`.
fn carrier_mean(side: &SideValues, p: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for l in 0..side.t.len() {
        let base = side.theta[l] * side.sh[l].conj() * (side.w[l] / TAU);
        acc += base * (side.zeta[l] * poly_eval(p, side.zeta[l])).conj();
    }
    acc
}

/// Carrier-side pairing `(1/2 pi) int e^{i (order+1) t} p s H dt` with
/// the excluded atom windows restored by their midpoint sub-rules; the
/// multiplier has unit modulus on the carrier and has already cancelled
/// out of the integrand.
fn carrier_pairing(side: &SideValues, p: &[Complex64], order: usize) -> Complex64 {
    let m = (order + 1) as u32;
    let mut acc = Complex64::new(0.0, 0.0);
    for l in 0..side.t.len() {
        let pv = poly_eval(p, side.zeta[l]);
        acc += side.zeta[l].powu(m) * pv * side.sh[l] * (side.w[l] / TAU);
    }
    for l in 0..side.window_zeta.len() {
        let pv = poly_eval(p, side.window_zeta[l]);
        acc += side.window_zeta[l].powu(m) * pv * side.window_sh[l] * (side.window_w[l] / TAU);
    }
    acc
}

/// Disk-side completion of the pairing at `order`: the retained modes
/// folded against the multiplier's Taylor coefficients.
fn disk_pairing(theta_hat: &[Complex64], smooth: &[Complex64], order: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for q in order..smooth.len() {
        if q - order < theta_hat.len() {
            acc += theta_hat[q - order] * smooth[q].conj();
        }
    }
    acc
}

/// `(1/2 pi) int e^{i m t} dt` summed over the closed arcs.
fn arc_modes(arcs: &[(f64, f64)], m: i64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &(lo, hi) in arcs {
        if m == 0 {
            acc += Complex64::new((hi - lo) / TAU, 0.0);
        } else {
            let mm = m as f64;
            let num = Complex64::from_polar(1.0, mm * hi) - Complex64::from_polar(1.0, mm * lo);
            acc += num / Complex64::new(0.0, mm * TAU);
        }
    }
    acc
}

struct DecaySelection {
    cutoff: usize,
    /// `(tail, head)` norms when no admissible cutoff exists.
    defect: Option<(f64, f64)>,
}

/// Picks the shortest mode prefix whose weighted tail is negligible
/// against its head. `weights` holds per-mode energies already
/// multiplied by the Sobolev factors.
fn decay_selection(weights: &[f64], guard: usize) -> DecaySelection {
    if weights.is_empty() {
        return DecaySelection {
            cutoff: 0,
            defect: None,
        };
    }
    let mut suffix = vec![0.0; weights.len() + 1];
    for q in (0..weights.len()).rev() {
        suffix[q] = suffix[q + 1] + weights[q];
    }
    if suffix[0] <= 0.0 {
        return DecaySelection {
            cutoff: 0,
            defect: None,
        };
    }
    let limit = weights.len().saturating_sub(1 + guard);
    let mut head = 0.0;
    for (q, &wq) in weights.iter().enumerate() {
        head += wq;
        if suffix[q + 1] <= DECAY_RATIO * head {
            if q <= limit {
                return DecaySelection {
                    cutoff: q,
                    defect: None,
                };
            }
            break;
        }
    }
    let head_at: f64 = weights[..=limit].iter().sum();
    DecaySelection {
        cutoff: limit,
        defect: Some((suffix[limit + 1].sqrt(), head_at.sqrt().max(f64::MIN_POSITIVE))),
    }
}

/// Boundary data of a seeded dual functional: the projection's leading
/// coefficients on a diagnostic grid, the complement-side modes, and the
/// measured membership residuals.
#[derive(Debug, Clone, Serialize)]
pub struct KthetaPrecursor {
    /// Seed polynomial, constant coefficient first.
    pub p: Vec<Complex64>,
    pub carrier: CircleSet,
    /// Cutoff exponent actually used; zero when the carrier is the full
    /// circle.
    pub cutoff_power: u32,
    /// `min(1, omega)` for the uniform carrier weight `omega`.
    pub weight_level: f64,
    /// Leading projection coefficients from the diagnostic grid.
    pub coefficients: Vec<Complex64>,
    /// Diagnostic grid size that passed the doubling test.
    pub grid: usize,
    /// Carrier-side share of the functional's value at 1.
    pub f0_carrier: Complex64,
    /// Retained complement-side modes.
    pub smooth_coefficients: Vec<Complex64>,
    /// Index of the last retained mode.
    pub q_cutoff: usize,
    /// `(tail, head)` norms when no admissible cutoff exists.
    pub decay_defect: Option<(f64, f64)>,
    /// `(order, |residual|)` pairs from the membership check.
    pub residuals: Vec<(usize, f64)>,
    pub check: MembershipCheck,
}

/// Builds the boundary data of the dual functional seeded by `p` on the
/// carrier `e`: the projection of `theta conj(zeta p s H)` is sampled on
/// a doubling-tested circle grid, its complement-side modes are retained
/// up to the decay cutoff, and the membership residuals are measured at
/// the requested orders.
///
/// A failed tail-decay test is recorded in `decay_defect`, not returned
/// as an error, so the caller can raise the cutoff exponent and retry.
pub fn ktheta_functional(
    theta: &BoundedFunctionSpec,
    p: &[Complex64],
    e: &CircleSet,
    omega: Option<&BoundaryWeight>,
    cutoff_n: u32,
    grid_log2: u32,
    check: &MembershipCheck,
) -> Result<KthetaPrecursor> {
    if p.is_empty() {
        return Err(Error::Invalid {
            what: "dual functional",
            why: "empty seed polynomial".into(),
        });
    }
    if !(6..=22).contains(&grid_log2) {
        return Err(Error::Invalid {
            what: "dual functional",
            why: format!("grid exponent {grid_log2} outside 6..=22"),
        });
    }
    let ctx = dual_context(theta, e, cutoff_n, omega)?;

    let n = 1usize << grid_log2;
    let coarse = grid_modes(&ctx, p, n / 2)?;
    let fine = grid_modes(&ctx, p, n)?;
    let span = coarse.len().min(4096);
    let mut shift = 0.0f64;
    for m in 0..span {
        shift = shift.max((fine[m] - coarse[m]).norm());
    }
    if shift > check.grid_tol {
        return Err(Error::GridTooCoarse {
            shift,
            tol: check.grid_tol,
        });
    }
    let mut coefficients = fine;
    coefficients.truncate(GRID_KEEP);

    let jmax = check.orders.iter().copied().max().unwrap_or(0);
    let eside = ctx.carrier_side((p.len() + jmax + 1) as f64, ATOM_GAP, EDGE_INSET)?;
    let has_complement = !ctx.carrier.complement_spans().is_empty();
    let qmax = if has_complement { check.qmax } else { 0 };
    let aside = ctx.complement_side((p.len() + qmax + 1) as f64, ATOM_GAP, EDGE_INSET)?;

    let (smooth, q_cutoff, decay_defect) = if has_complement {
        let modes = smooth_modes(&aside, p, qmax);
        let weights: Vec<f64> = modes
            .iter()
            .enumerate()
            .map(|(q, gq)| (1.0 + q as f64).powf(2.0 * check.tau) * gq.norm_sqr())
            .collect();
        let pick = decay_selection(&weights, DECAY_GUARD);
        match pick.defect {
            None => {
                let mut kept = modes;
                kept.truncate(pick.cutoff + 1);
                (kept, pick.cutoff, None)
            }
            Some(defect) => (modes, qmax, Some(defect)),
        }
    } else {
        (Vec::new(), 0, None)
    };

    let f0_carrier = carrier_mean(&eside, p);
    let theta_hat = taylor_coefficients(theta, q_cutoff + 1)?;
    let residuals = check
        .orders
        .iter()
        .map(|&j| {
            let r = carrier_pairing(&eside, p, j) + disk_pairing(&theta_hat, &smooth, j);
            (j, r.norm())
        })
        .collect();

    Ok(KthetaPrecursor {
        p: p.to_vec(),
        carrier: ctx.carrier.clone(),
        cutoff_power: ctx.cutoff_power,
        weight_level: ctx.level,
        coefficients,
        grid: n,
        f0_carrier,
        smooth_coefficients: smooth,
        q_cutoff,
        decay_defect,
        residuals,
        check: check.clone(),
    })
}

/// Nonnegative modes of `theta conj(zeta p s H)` from an offset circle
/// grid of `n` points.
fn grid_modes(ctx: &DualContext, p: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    let mut buf = Vec::with_capacity(n);
    for &t in &offset_angles(n) {
        let zeta = Complex64::from_polar(1.0, t);
        let th = ctx.theta.eval(t)?;
        let sh = ctx.cutoff_clip(t)?;
        buf.push(th * (zeta * poly_eval(p, zeta) * sh).conj());
    }
    fft_forward(&mut buf);
    let keep = n / 2;
    let scale = 1.0 / n as f64;
    Ok((0..keep)
        .map(|m| {
            buf[m] * Complex64::from_polar(scale, -std::f64::consts::PI * m as f64 / n as f64)
        })
        .collect())
}

/// A verified lower bound on the whole distance curve.
///
/// `bound` is `|Lambda(1)| / ||Lambda||`: the functional's value at 1
/// over the dual norm realized by its boundary and disk witnesses. Weak
/// duality keeps this under `d_N` for every degree at once, provided the
/// membership residuals sit inside the tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct DualCertificate {
    /// Seed polynomial of the functional, constant coefficient first.
    pub polynomial: Vec<Complex64>,
    pub carrier: CircleSet,
    pub cutoff_power: u32,
    /// `|Lambda(1)|`.
    pub lambda_one: f64,
    /// Dual norm realized by the witness pair.
    pub g_norm: f64,
    /// Boundary share of the squared dual norm.
    pub boundary_norm_sq: f64,
    /// Disk share of the squared dual norm.
    pub disk_norm_sq: f64,
    /// Power-series coefficients of the disk witness.
    pub disk_coefficients: Vec<Complex64>,
    /// Last complement-side mode retained by the decay test.
    pub q_cutoff: usize,
    /// `lambda_one / g_norm`.
    pub bound: f64,
    /// `(order, |residual|)` membership measurements.
    pub residuals: Vec<(usize, f64)>,
    /// Ceiling the residuals must stay under for the bound to count.
    pub residual_tol: f64,
    /// Relative diagonal shift used when solving for the seed.
    pub jitter: f64,
}

impl DualCertificate {
    /// Largest measured membership residual.
    pub fn residual_max(&self) -> f64 {
        self.residuals.iter().fold(0.0, |acc, &(_, r)| acc.max(r))
    }
}

/// Turns a seeded functional into a distance lower bound against the
/// given measure.
///
/// The boundary share of the dual norm comes out in closed form from
/// the seed polynomial; the disk share goes through the radial moments.
/// When the complement-side modes refuse to decay, the cutoff exponent
/// is raised twice before the defect is returned as an error.
pub fn dual_lower_bound(
    precursor: &KthetaPrecursor,
    theta: &BoundedFunctionSpec,
    mu: &SpaceMeasure,
) -> Result<DualCertificate> {
    mu.validate()?;
    let weight = mu.boundary.as_ref().ok_or(Error::Invalid {
        what: "dual bound",
        why: "the measure carries no boundary part".into(),
    })?;
    if weight.carrier != precursor.carrier {
        return Err(Error::Invalid {
            what: "dual bound",
            why: "measure carrier differs from the functional's carrier".into(),
        });
    }
    let omega = uniform_constant(&weight.pieces).ok_or(Error::Invalid {
        what: "dual bound",
        why: "only uniform boundary weights are supported on the dual side".into(),
    })?;
    if (omega.min(1.0) - precursor.weight_level).abs() > 1e-12 {
        return Err(Error::Invalid {
            what: "dual bound",
            why: "functional was prepared for a different weight level".into(),
        });
    }
    let has_complement = !precursor.carrier.complement_spans().is_empty();
    if has_complement && mu.disk_mass_scale <= 0.0 {
        return Err(Error::Invalid {
            what: "dual bound",
            why: "a carrier with complementary arcs needs a disk part".into(),
        });
    }

    let grid_log2 = precursor.grid.trailing_zeros();
    let mut work = precursor.clone();
    for raise in 0..=2u32 {
        if raise > 0 {
            work = ktheta_functional(
                theta,
                &precursor.p,
                &precursor.carrier,
                mu.boundary.as_ref(),
                precursor.cutoff_power + 4 * raise,
                grid_log2,
                &precursor.check,
            )?;
        }
        if let Some((tail, head)) = work.decay_defect {
            if raise == 2 {
                return Err(Error::InsufficientDecay {
                    cutoff: work.q_cutoff,
                    tail,
                    head,
                });
            }
            continue;
        }
        let disk = if work.smooth_coefficients.is_empty() {
            CauchySolution {
                coefficients: Vec::new(),
                norm: 0.0,
            }
        } else {
            let moments =
                RadialMoments::new(mu.disk_alpha, mu.disk_mass_scale, 2 * work.q_cutoff.max(1))?;
            match cauchy_solve_radial(&work.smooth_coefficients, &moments) {
                Ok(solution) => solution,
                Err(e @ Error::InsufficientDecay { .. }) => {
                    if raise == 2 {
                        return Err(e);
                    }
                    continue;
                }
                Err(e) => return Err(e),
            }
        };
        return Ok(assemble_certificate(&work, omega, disk));
    }
    unreachable!("the raise loop returns on its last pass")
}

fn assemble_certificate(
    work: &KthetaPrecursor,
    omega: f64,
    disk: CauchySolution,
) -> DualCertificate {
    let arcs = work.carrier.set_arcs();
    let factor = work.weight_level * work.weight_level / omega;
    let dim = work.p.len();
    let mut boundary = Complex64::new(0.0, 0.0);
    for j in 0..dim {
        for k in 0..dim {
            let mode = arc_modes(&arcs, j as i64 - k as i64);
            boundary += work.p[j] * work.p[k].conj() * mode;
        }
    }
    let boundary_norm_sq = (boundary.re * factor).max(0.0);
    let g0 = work
        .smooth_coefficients
        .first()
        .copied()
        .unwrap_or_else(|| Complex64::new(0.0, 0.0));
    let lambda_one = (work.f0_carrier + g0).norm();
    let disk_norm_sq = disk.norm * disk.norm;
    let g_norm = (boundary_norm_sq + disk_norm_sq).sqrt();
    let bound = if g_norm > 1e-150 {
        lambda_one / g_norm
    } else {
        0.0
    };
    DualCertificate {
        polynomial: work.p.clone(),
        carrier: work.carrier.clone(),
        cutoff_power: work.cutoff_power,
        lambda_one,
        g_norm,
        boundary_norm_sq,
        disk_norm_sq,
        disk_coefficients: disk.coefficients,
        q_cutoff: work.q_cutoff,
        bound,
        residuals: work.residuals.clone(),
        residual_tol: work.check.residual_tol,
        jitter: 0.0,
    }
}

/// Controls for the certificate search.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateParams {
    /// Degree of the seed polynomial space.
    pub basis_degree: usize,
    /// Initial cutoff exponent; raised when the tail refuses to decay.
    pub cutoff_power: u32,
    /// Ceiling on complement-side modes.
    pub qmax: usize,
    /// Angular half-width excluded around multiplier atoms.
    pub atom_gap: f64,
    /// Endpoint grading floor.
    pub endpoint_inset: f64,
    pub check: MembershipCheck,
}

impl Default for CertificateParams {
    fn default() -> Self {
        CertificateParams {
            basis_degree: 24,
            cutoff_power: 6,
            qmax: 240,
            atom_gap: ATOM_GAP,
            endpoint_inset: EDGE_INSET,
            check: MembershipCheck::default(),
        }
    }
}

/// Searches the seed space of the given degree for the best dual lower
/// bound: the seed solves the normal equations of the dual norm against
/// the pairing with 1, so the returned bound maximizes
/// `|Lambda(1)| / ||Lambda||` over the whole space at once.
pub fn best_certificate(
    theta: &BoundedFunctionSpec,
    mu: &SpaceMeasure,
    e: &CircleSet,
    params: &CertificateParams,
) -> Result<DualCertificate> {
    mu.validate()?;
    let weight = mu.boundary.as_ref().ok_or(Error::Invalid {
        what: "certificate",
        why: "the measure carries no boundary part".into(),
    })?;
    if weight.carrier != *e {
        return Err(Error::Invalid {
            what: "certificate",
            why: "measure carrier differs from the requested carrier".into(),
        });
    }
    let omega = uniform_constant(&weight.pieces).ok_or(Error::Invalid {
        what: "certificate",
        why: "only uniform boundary weights are supported on the dual side".into(),
    })?;
    let has_complement = !e.complement_spans().is_empty();
    if !has_complement {
        return certificate_attempt(theta, mu, e, params, 0, omega, 0.0);
    }
    if mu.disk_mass_scale <= 0.0 {
        return Err(Error::Invalid {
            what: "certificate",
            why: "a carrier with complementary arcs needs a disk part".into(),
        });
    }
    if params.qmax < 2 * DECAY_GUARD {
        return Err(Error::Invalid {
            what: "certificate",
            why: format!("qmax {} leaves no room for the decay test", params.qmax),
        });
    }
    let tau = (mu.disk_alpha + 1.0) / 2.0;
    let mut power = params.cutoff_power;
    for raise in 0..=2u32 {
        if raise > 0 {
            power += 4;
        }
        match certificate_attempt(theta, mu, e, params, power, omega, tau) {
            Err(Error::InsufficientDecay { .. }) if raise < 2 => continue,
            other => return other,
        }
    }
    unreachable!("the raise loop returns on its last pass")
}

fn certificate_attempt(
    theta: &BoundedFunctionSpec,
    mu: &SpaceMeasure,
    e: &CircleSet,
    params: &CertificateParams,
    power: u32,
    omega: f64,
    tau: f64,
) -> Result<DualCertificate> {
    let ctx = dual_context(theta, e, power, mu.boundary.as_ref())?;
    let dim = params.basis_degree + 1;
    let jmax = params.check.orders.iter().copied().max().unwrap_or(0);
    let has_complement = !e.complement_spans().is_empty();
    let qmax = if has_complement { params.qmax } else { 0 };

    let eside = ctx.carrier_side(
        (params.basis_degree + jmax + 2) as f64,
        params.atom_gap,
        params.endpoint_inset,
    )?;
    let aside = ctx.complement_side(
        (params.basis_degree + qmax + 2) as f64,
        params.atom_gap,
        params.endpoint_inset,
    )?;
    let pe = phase_sums(&eside, params.basis_degree + 1);
    let pa = phase_sums(&aside, params.basis_degree + qmax + 1);

    let (q_cutoff, moments) = if has_complement {
        let weights: Vec<f64> = (0..=qmax)
            .map(|q| {
                let energy: f64 = (0..dim).map(|k| pa[k + 1 + q].norm_sqr()).sum();
                (1.0 + q as f64).powf(2.0 * tau) * energy
            })
            .collect();
        let pick = decay_selection(&weights, DECAY_GUARD);
        if let Some((tail, head)) = pick.defect {
            return Err(Error::InsufficientDecay {
                cutoff: pick.cutoff,
                tail,
                head,
            });
        }
        let moments =
            RadialMoments::new(mu.disk_alpha, mu.disk_mass_scale, 2 * pick.cutoff.max(1))?;
        (pick.cutoff, Some(moments))
    } else {
        (0, None)
    };

    let arcs = e.set_arcs();
    let factor = ctx.level * ctx.level / omega;
    let mut nt = vec![Complex64::new(0.0, 0.0); dim * dim];
    for k in 0..dim {
        for kp in 0..dim {
            nt[k * dim + kp] = arc_modes(&arcs, kp as i64 - k as i64) * factor;
        }
    }
    let mut normal = nt.clone();
    if let Some(moments) = &moments {
        for k in 0..dim {
            for kp in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for q in 0..=q_cutoff {
                    acc += pa[k + 1 + q] * pa[kp + 1 + q].conj() / moments.value(2 * q);
                }
                normal[k * dim + kp] += acc;
            }
        }
    }
    let a: Vec<Complex64> = (0..dim).map(|k| pe[k + 1] + pa[k + 1]).collect();
    let (c, jitter) = solve_hermitian(&normal, dim, &a)?;

    let lambda_one = vdot(&c, &a).norm();
    let mut boundary = Complex64::new(0.0, 0.0);
    for k in 0..dim {
        for kp in 0..dim {
            boundary += c[k].conj() * c[kp] * nt[k * dim + kp];
        }
    }
    let boundary_norm_sq = boundary.re.max(0.0);
    let smooth: Vec<Complex64> = (0..=q_cutoff)
        .map(|q| (0..dim).map(|k| c[k].conj() * pa[k + 1 + q]).sum())
        .collect();
    let disk = match &moments {
        Some(moments) => cauchy_solve_radial(&smooth, moments)?,
        None => CauchySolution {
            coefficients: Vec::new(),
            norm: 0.0,
        },
    };
    let disk_norm_sq = disk.norm * disk.norm;
    let g_norm = (boundary_norm_sq + disk_norm_sq).sqrt();
    let bound = if g_norm > 1e-150 {
        lambda_one / g_norm
    } else {
        0.0
    };

    let theta_hat = taylor_coefficients(theta, q_cutoff + 1)?;
    let smooth_for_residual: &[Complex64] = if has_complement { &smooth } else { &[] };
    let residuals: Vec<(usize, f64)> = params
        .check
        .orders
        .iter()
        .map(|&j| {
            let r = carrier_pairing(&eside, &c, j)
                + disk_pairing(&theta_hat, smooth_for_residual, j);
            (j, r.norm())
        })
        .collect();

    Ok(DualCertificate {
        polynomial: c,
        carrier: e.clone(),
        cutoff_power: ctx.cutoff_power,
        lambda_one,
        g_norm,
        boundary_norm_sq,
        disk_norm_sq,
        disk_coefficients: disk.coefficients,
        q_cutoff,
        bound,
        residuals,
        residual_tol: params.check.residual_tol,
        jitter,
    })
}

/// Outcome of weighing a distance curve against its dual bounds.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    /// A trusted certificate holds the whole curve above `level`.
    CertifiedNoncyclic { level: f64 },
    /// No certificate, and the curve tail decreases below `threshold`.
    EvidenceCyclic { threshold: f64, trend: f64 },
    /// Neither a certificate nor a decisive trend.
    Inconclusive,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::CertifiedNoncyclic { .. } => "certified-noncyclic",
            Verdict::EvidenceCyclic { .. } => "evidence-cyclic",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Weighs certificates against the sampled curve.
///
/// A certificate counts only when its membership residuals sit inside
/// its tolerance; the best admissible bound decides. Without one, the
/// later half of the curve must be nonincreasing and finish below
/// `threshold` to count as evidence of cyclicity.
pub fn classify(
    curve: &DistanceCurve,
    certificates: &[DualCertificate],
    threshold: f64,
) -> Verdict {
    let mut best = 0.0f64;
    for cert in certificates {
        if cert.bound > best && cert.residual_max() <= cert.residual_tol {
            best = cert.bound;
        }
    }
    if best > 0.0 {
        return Verdict::CertifiedNoncyclic { level: best };
    }
    let tail = &curve.values[curve.values.len() / 2..];
    if let (Some(&first), Some(&last)) = (tail.first(), tail.last()) {
        let falling = tail.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        if falling && last < threshold {
            let trend = if first > f64::MIN_POSITIVE {
                last / first
            } else {
                0.0
            };
            return Verdict::EvidenceCyclic { threshold, trend };
        }
    }
    Verdict::Inconclusive
}

/// The measured corona margin of a cutoff piece and its companion.
#[derive(Debug, Clone, Serialize)]
pub struct CoronaCheck {
    /// Minimum of `|s(z)| + |f(z)|` over the grid.
    pub delta: f64,
    /// Grid point attaining the minimum.
    pub at: Complex64,
    /// Number of points inspected.
    pub points: usize,
}

/// Scans a closed-disk grid for the joint lower bound of a cutoff piece
/// and its companion.
pub fn corona_hypothesis_check(
    s_piece: &BoundedFunctionSpec,
    companion: &BoundedFunctionSpec,
    grid: &[Complex64],
) -> Result<CoronaCheck> {
    if grid.is_empty() {
        return Err(Error::Invalid {
            what: "corona check",
            why: "empty grid".into(),
        });
    }
    let quad = OuterQuad::default();
    let mut delta = f64::INFINITY;
    let mut at = Complex64::new(0.0, 0.0);
    for &z in grid {
        if z.norm() > 1.0 + 1e-12 {
            return Err(Error::Invalid {
                what: "corona check",
                why: format!(
                    "grid point ({:.3}, {:.3}) lies outside the closed disk",
                    z.re, z.im
                ),
            });
        }
        let (sv, _) = s_piece.eval(z, &quad)?;
        let (fv, _) = companion.eval(z, &quad)?;
        let joint = sv.norm() + fv.norm();
        if joint < delta {
            delta = joint;
            at = z;
        }
    }
    Ok(CoronaCheck {
        delta,
        at,
        points: grid.len(),
    })
}
