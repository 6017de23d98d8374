//! Norms and inner products in `L^t(μ)` for the disk-plus-boundary measure
//! model: closed-form radial moments, grid and coefficient norm paths, the
//! monomial-decay estimator, and the Gram systems behind polynomial
//! least-squares. All quadratures run in a fixed order, so repeated calls
//! are bit-identical.

use num_complex::Complex64;
use serde::Serialize;

use crate::circle::TAU;
use crate::error::Error;
use crate::func::{BoundedFunctionSpec, ConjugateEvaluator, GridEvaluator, LogPiece, OuterRule};
use crate::linalg::cholesky_in_place;
use crate::measure::{Atom, BoundaryWeight, SpaceMeasure, WeightProfile};
use crate::quad::{gauss_legendre, graded_arc_rule, GradedSpec};
use crate::series::fft_forward;
use crate::Result;

const PI: f64 = std::f64::consts::PI;

fn wrap(t: f64) -> f64 {
    t.rem_euclid(TAU)
}

/// Signed angular difference in `[-π, π)`.
fn wrap_pm(x: f64) -> f64 {
    (x + PI).rem_euclid(TAU) - PI
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the Gamma function, accurate to about 1e-13 relative on
/// the positive axis; negative non-integer arguments go through the
/// reflection formula.
pub fn lgamma(x: f64) -> f64 {
    if x < 0.5 {
        let s = (PI * x).sin();
        return (PI / s.abs()).ln() - lgamma(1.0 - x);
    }
    let xm = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (xm + i as f64);
    }
    let t = xm + LANCZOS_G + 0.5;
    0.5 * TAU.ln() + (xm + 0.5) * t.ln() - t + acc.ln()
}

fn moment_formula(alpha: f64, scale: f64, k: f64) -> f64 {
    scale * 2.0 * (lgamma(k + 2.0) + lgamma(alpha + 1.0) - lgamma(k + alpha + 3.0)).exp()
}

/// Radial disk moments `m_k = scale · ∫_𝔻 |z|^k (1-|z|)^α dA_norm`, equal to
/// `scale · 2B(k+2, α+1)` by the Beta integral: a precomputed integer table
/// plus the closed form at arbitrary real order.
#[derive(Debug, Clone)]
pub struct RadialMoments {
    pub alpha: f64,
    pub scale: f64,
    values: Vec<f64>,
}

impl RadialMoments {
    /// Moments through order `kmax` inclusive.
    pub fn new(alpha: f64, scale: f64, kmax: usize) -> Result<Self> {
        if !(alpha > -1.0) || !alpha.is_finite() {
            return Err(Error::AlphaRange { alpha });
        }
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::Invalid {
                what: "radial moments",
                why: format!("scale {scale} must be >= 0"),
            });
        }
        let values = (0..=kmax)
            .map(|k| moment_formula(alpha, scale, k as f64))
            .collect();
        Ok(RadialMoments {
            alpha,
            scale,
            values,
        })
    }

    /// `m_k` from the precomputed table; `k` must not exceed the
    /// construction-time `kmax`.
    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// `m_k` at real order `k ≥ 0`.
    pub fn at(&self, k: f64) -> f64 {
        moment_formula(self.alpha, self.scale, k)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `‖f‖_{μ,t} = (∫ |f|^t dμ)^{min{1, 1/t}}`.
pub fn pt_norm(f: &BoundedFunctionSpec, mu: &SpaceMeasure, t: f64) -> Result<f64> {
    pt_norm_shifted(f, mu, t, Complex64::ZERO)
}

/// `‖f - shift‖_{μ,t}`; the constant shift makes distances to 1 computable
/// without a spec for the difference.
pub fn pt_norm_shifted(
    f: &BoundedFunctionSpec,
    mu: &SpaceMeasure,
    t: f64,
    shift: Complex64,
) -> Result<f64> {
    mu.validate()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Invalid {
            what: "norm exponent",
            why: format!("t = {t} must be positive"),
        });
    }
    let mut total = 0.0;
    if mu.disk_mass_scale > 0.0 {
        total += disk_power_integral(f, mu, t, shift)?;
    }
    if let Some(w) = &mu.boundary {
        total += boundary_power_integral(f, w, t, shift)?;
    }
    Ok(total.powf(1.0_f64.min(1.0 / t)))
}

/// Exact `t = 2` norm of the polynomial `Σ c_j z^j`: disk part through the
/// closed-form moments, boundary part by arc quadrature of `|p|² ω`.
pub fn pt_norm_coeffs(coeffs: &[Complex64], mu: &SpaceMeasure) -> Result<f64> {
    mu.validate()?;
    let mut total = 0.0;
    if mu.disk_mass_scale > 0.0 && !coeffs.is_empty() {
        let rm = RadialMoments::new(mu.disk_alpha, mu.disk_mass_scale, 2 * (coeffs.len() - 1))?;
        for (j, c) in coeffs.iter().enumerate() {
            total += c.norm_sqr() * rm.value(2 * j);
        }
    }
    if let Some(w) = &mu.boundary {
        let deg = coeffs.len().saturating_sub(1);
        let arcs = w.carrier.set_arcs();
        for ((lo, hi), piece) in arcs.iter().copied().zip(&w.pieces) {
            if hi - lo <= 0.0 {
                continue;
            }
            let spec = GradedSpec {
                cuts: piece.interior_kinks(lo, hi),
                endpoint_inset: 1e-12,
                max_mode: (2 * deg).max(1) as f64,
                ..GradedSpec::default()
            };
            let rule = graded_arc_rule(lo, hi, &spec);
            total += rule.integrate(|t| poly_modulus_sq(coeffs, t) * piece.eval(t, lo, hi)) / TAU;
        }
    }
    Ok(total.sqrt())
}

fn poly_modulus_sq(coeffs: &[Complex64], t: f64) -> f64 {
    let z = Complex64::from_polar(1.0, t);
    let mut acc = Complex64::ZERO;
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc.norm_sqr()
}

fn disk_power_integral(
    f: &BoundedFunctionSpec,
    mu: &SpaceMeasure,
    t: f64,
    shift: Complex64,
) -> Result<f64> {
    let ev = f.grid_evaluator()?;
    let mut radial = 96;
    let mut angular = 512;
    let mut prev: Option<f64> = None;
    for _ in 0..5 {
        let v = disk_power_sum(&ev, mu, t, shift, radial, angular)?;
        if let Some(p) = prev {
            if (v - p).abs() <= 1e-7 * (1.0 + v.abs()) {
                return Ok(v);
            }
        }
        prev = Some(v);
        radial *= 2;
        angular *= 2;
    }
    Err(Error::QuadratureNonConvergence {
        nodes: radial * angular / 4,
        defect: prev.unwrap_or(f64::NAN),
    })
}

fn disk_power_sum(
    ev: &GridEvaluator,
    mu: &SpaceMeasure,
    t: f64,
    shift: Complex64,
    radial: usize,
    angular: usize,
) -> Result<f64> {
    let (xs, ws) = gauss_legendre(radial);
    let half_t = t / 2.0;
    let mut acc = 0.0;
    for (&x, &wq) in xs.iter().zip(&ws) {
        let r = 0.5 * (x + 1.0);
        let wr = wq * r * mu.disk_mass_scale * (1.0 - r).powf(mu.disk_alpha);
        let mut ring = 0.0;
        for l in 0..angular {
            let ang = TAU * (l as f64 + 0.5) / angular as f64;
            let v = ev.eval(Complex64::from_polar(r, ang))? - shift;
            ring += v.norm_sqr().powf(half_t);
        }
        acc += wr * ring / angular as f64;
    }
    Ok(acc)
}

/// Boundary values of a spec: inner factors evaluated directly on the
/// circle, a nontrivial outer part reconstructed as
/// `exp(L + i·conjugate(L))`. Callers keep nodes away from the singular
/// support and from log-modulus discontinuities.
pub(crate) struct CircleValues {
    inner: GridEvaluator,
    pieces: Vec<LogPiece>,
    conj: Option<ConjugateEvaluator>,
}

impl CircleValues {
    pub(crate) fn new(f: &BoundedFunctionSpec) -> Result<Self> {
        let stripped = BoundedFunctionSpec {
            outer: OuterRule::Zero,
            ..f.clone()
        };
        let pieces = f.outer.pieces();
        let conj = if pieces.is_empty() {
            None
        } else {
            Some(ConjugateEvaluator::new(&f.outer, 64.0, 2.5)?)
        };
        Ok(CircleValues {
            inner: stripped.grid_evaluator()?,
            pieces,
            conj,
        })
    }

    pub(crate) fn log_modulus(&self, t: f64) -> f64 {
        for p in &self.pieces {
            if wrap(t - p.a) < p.b - p.a {
                return p.eval(t);
            }
        }
        0.0
    }

    pub(crate) fn eval(&self, t: f64) -> Result<Complex64> {
        let mut v = self.inner.eval(Complex64::from_polar(1.0, t))?;
        if let Some(conj) = &self.conj {
            v *= Complex64::from_polar(self.log_modulus(t).exp(), conj.conj_at(t));
        }
        Ok(v)
    }
}

/// Mean of `|e^{iφ} - shift|^t` over the phase φ: the limiting density of a
/// unimodular value spinning past a window, used to reinstate the excluded
/// support windows in shifted boundary norms.
fn phase_mean_abs_pow(shift: Complex64, t: f64) -> f64 {
    let n = 256;
    let mut acc = 0.0;
    for l in 0..n {
        let phi = TAU * (l as f64 + 0.5) / n as f64;
        acc += (Complex64::from_polar(1.0, phi) - shift).norm_sqr().powf(t / 2.0);
    }
    acc / n as f64
}

fn boundary_power_integral(
    f: &BoundedFunctionSpec,
    w: &BoundaryWeight,
    t: f64,
    shift: Complex64,
) -> Result<f64> {
    let arcs = w.carrier.set_arcs();
    let outer_pieces = f.outer.pieces();
    let strength = 1.0 + 2.0 * max_strength(&outer_pieces);
    let atoms = if shift == Complex64::ZERO || f.singular_part.is_zero() {
        Vec::new()
    } else {
        f.singular_part.realize()?
    };
    let values = if shift == Complex64::ZERO {
        None
    } else {
        Some(CircleValues::new(f)?)
    };
    let window_mean = phase_mean_abs_pow(shift, t);

    let mut prev: Option<f64> = None;
    for level in 0..3 {
        let phase_div = 2.5 / (1 << level) as f64;
        let mut total = 0.0;
        for ((lo, hi), piece) in arcs.iter().copied().zip(&w.pieces) {
            if hi - lo <= 0.0 {
                continue;
            }
            let mut cuts = piece.interior_kinks(lo, hi);
            cuts.extend(outer_cuts(&outer_pieces, lo, hi));
            let framed = reframe_atoms(lo, hi, &atoms);
            let spec = GradedSpec {
                atoms: framed.clone(),
                cuts,
                endpoint_inset: 1e-9,
                log_strength: strength,
                max_mode: 8.0,
                phase_div,
                ..GradedSpec::default()
            };
            let rule = graded_arc_rule(lo, hi, &spec);
            match &values {
                None => {
                    total += rule
                        .integrate(|ang| (t * f.outer.log_modulus_at(ang)).exp()
                            * piece.eval(ang, lo, hi))
                        / TAU;
                }
                Some(cv) => {
                    for (&ang, &wt) in rule.nodes.iter().zip(&rule.weights) {
                        let v = cv.eval(ang)? - shift;
                        total += wt * v.norm_sqr().powf(t / 2.0) * piece.eval(ang, lo, hi) / TAU;
                    }
                    for &(ta, _) in &framed {
                        if ta > lo && ta < hi {
                            total += window_mean
                                * piece.eval(ta, lo, hi)
                                * 2.0
                                * spec.atom_gap
                                / TAU;
                        }
                    }
                }
            }
        }
        if let Some(p) = prev {
            if (total - p).abs() <= 1e-7 * (1.0 + total.abs()) {
                return Ok(total);
            }
        }
        prev = Some(total);
    }
    Err(Error::QuadratureNonConvergence {
        nodes: 0,
        defect: prev.unwrap_or(f64::NAN),
    })
}

fn max_strength(pieces: &[LogPiece]) -> f64 {
    pieces.iter().map(|p| p.strength).fold(0.0, f64::max)
}

/// Edges and kinks of outer log-modulus pieces, wrapped into `(lo, hi)`.
pub(crate) fn outer_cuts(pieces: &[LogPiece], lo: f64, hi: f64) -> Vec<f64> {
    let c = 0.5 * (lo + hi);
    let mut out = Vec::new();
    for p in pieces {
        for &e in [p.a, p.b].iter().chain(&p.cuts) {
            let u = c + wrap_pm(e - c);
            if u > lo && u < hi {
                out.push(u);
            }
        }
    }
    out
}

/// Atom angles mapped to their representatives nearest the span `[lo, hi]`;
/// positions outside the span still shape the panel grading near its edges.
pub(crate) fn reframe_atoms(lo: f64, hi: f64, atoms: &[Atom]) -> Vec<(f64, f64)> {
    let c = 0.5 * (lo + hi);
    atoms
        .iter()
        .map(|a| (c + wrap_pm(a.angle - c), a.mass))
        .collect()
}

/// Fitted monomial-decay exponent: least-squares slope of `log ‖z^n‖_{μ,t}`
/// against `log n` over `n` in `[n_max/2, n_max]`.
#[derive(Debug, Clone, Serialize)]
pub struct MonomialDecay {
    /// Negated fitted slope; large values mean fast norm decay.
    pub beta: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    /// Inclusive fit window in n.
    pub window: (usize, usize),
}

pub fn monomial_decay(mu: &SpaceMeasure, t: f64, n_max: usize) -> Result<MonomialDecay> {
    mu.validate()?;
    if n_max < 16 {
        return Err(Error::Invalid {
            what: "monomial decay window",
            why: format!("n_max = {n_max} must be at least 16"),
        });
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Invalid {
            what: "norm exponent",
            why: format!("t = {t} must be positive"),
        });
    }
    let rm = if mu.disk_mass_scale > 0.0 {
        Some(RadialMoments::new(mu.disk_alpha, mu.disk_mass_scale, 0)?)
    } else {
        None
    };
    let boundary_mass = mu.boundary.as_ref().map_or(0.0, |w| w.mass(24));
    let lo = n_max / 2;
    let exponent = 1.0_f64.min(1.0 / t);
    let mut xs = Vec::with_capacity(n_max - lo + 1);
    let mut ys = Vec::with_capacity(n_max - lo + 1);
    for n in lo..=n_max {
        let integral = rm.as_ref().map_or(0.0, |rm| rm.at(n as f64 * t)) + boundary_mass;
        xs.push((n as f64).ln());
        ys.push(integral.powf(exponent).ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let mut rss = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let e = y - (my + slope * (x - mx));
        rss += e * e;
    }
    Ok(MonomialDecay {
        beta: -slope,
        residual: (rss / n).sqrt(),
        window: (lo, n_max),
    })
}

/// Node-count overrides for [`gram_system_with`]; zero fields pick the
/// defaults echoed into the provenance.
#[derive(Debug, Clone, Default)]
pub struct GramParams {
    /// Radial Gauss nodes; 0 selects `max(64, N + 20)` plus an α pad.
    pub radial_nodes: usize,
    /// Angular grid size; rounded up to a power of two and to at least 8N.
    pub angular_nodes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GramProvenance {
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    /// How the boundary pairing against 1 was computed: "none",
    /// "direct", "complement", or "windowed".
    pub boundary_route: &'static str,
    /// Largest `|G_{jk} - conj(G_{kj})|` before symmetrization.
    pub symmetry_defect: f64,
    /// Upper bound on boundary mass excluded around in-carrier support
    /// atoms; zero outside the windowed route.
    pub window_defect: f64,
    /// Relative diagonal shift under which the factorization probe ran.
    pub psd_probe_shift: f64,
}

/// Normal-equation data for polynomial approximation against a fixed
/// multiplier θ: `G_{jk} = ⟨θ z^j, θ z^k⟩_μ` row-major, `b_j = ⟨1, θ z^j⟩_μ`
/// (the conjugate of `∫ θ z^j dμ`), and `‖1‖²_μ`.
#[derive(Debug, Clone)]
pub struct GramSystem {
    pub dim: usize,
    pub g: Vec<Complex64>,
    pub b: Vec<Complex64>,
    pub one_norm_sq: f64,
    pub provenance: GramProvenance,
}

impl GramSystem {
    /// Cross-implementation JSON export: row-major entries as `[re, im]`
    /// pairs.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Flat<'a> {
            dim: usize,
            g: Vec<[f64; 2]>,
            b: Vec<[f64; 2]>,
            one_norm_sq: f64,
            provenance: &'a GramProvenance,
        }
        let flat = Flat {
            dim: self.dim,
            g: self.g.iter().map(|c| [c.re, c.im]).collect(),
            b: self.b.iter().map(|c| [c.re, c.im]).collect(),
            one_norm_sq: self.one_norm_sq,
            provenance: &self.provenance,
        };
        serde_json::to_string_pretty(&flat).expect("gram system serializes")
    }
}

pub fn gram_system(
    theta: &BoundedFunctionSpec,
    mu: &SpaceMeasure,
    degree: usize,
) -> Result<GramSystem> {
    gram_system_with(theta, mu, degree, &GramParams::default())
}

pub fn gram_system_with(
    theta: &BoundedFunctionSpec,
    mu: &SpaceMeasure,
    degree: usize,
    params: &GramParams,
) -> Result<GramSystem> {
    mu.validate()?;
    let dim = degree + 1;
    let mut g = vec![Complex64::ZERO; dim * dim];
    let mut b = vec![Complex64::ZERO; dim];
    let mut one = 0.0;

    let mut radial = 0;
    let mut angular = 0;
    if mu.disk_mass_scale > 0.0 {
        radial = if params.radial_nodes > 0 {
            params.radial_nodes
        } else {
            auto_radial(degree, mu.disk_alpha)
        };
        angular = angular_count(params.angular_nodes, degree);
        disk_accumulate(theta, mu, degree, radial, angular, &mut g, &mut b, &mut one)?;
    }

    let mut route = "none";
    let mut window_defect = 0.0;
    if let Some(w) = &mu.boundary {
        let outcome = boundary_accumulate(theta, w, degree, &mut g, &mut b, &mut one)?;
        route = outcome.0;
        window_defect = outcome.1;
    }

    let mut symmetry_defect = 0.0_f64;
    for j in 0..dim {
        for k in j..dim {
            let a = g[j * dim + k];
            let c = g[k * dim + j].conj();
            symmetry_defect = symmetry_defect.max((a - c).norm());
            let avg = 0.5 * (a + c);
            g[j * dim + k] = avg;
            g[k * dim + j] = avg.conj();
        }
    }

    let diag_scale = (0..dim).map(|j| g[j * dim + j].norm()).sum::<f64>() / dim as f64;
    let probe_shift = 1e-8;
    let mut probe = g.clone();
    for j in 0..dim {
        probe[j * dim + j] += probe_shift * diag_scale;
    }
    cholesky_in_place(&mut probe, dim)?;

    Ok(GramSystem {
        dim,
        g,
        b,
        one_norm_sq: one,
        provenance: GramProvenance {
            radial_nodes: radial,
            angular_nodes: angular,
            boundary_route: route,
            symmetry_defect,
            window_defect,
            psd_probe_shift: probe_shift,
        },
    })
}

fn auto_radial(degree: usize, alpha: f64) -> usize {
    let pad = (10.0 * alpha.abs()).ceil().max(0.0) as usize;
    (degree + 20 + pad).max(64)
}

fn angular_count(requested: usize, degree: usize) -> usize {
    let n = if requested == 0 {
        (32 * (degree + 1)).max(4096)
    } else {
        requested.max(8 * degree.max(1))
    };
    n.next_power_of_two()
}

#[allow(clippy::too_many_arguments)]
fn disk_accumulate(
    theta: &BoundedFunctionSpec,
    mu: &SpaceMeasure,
    degree: usize,
    radial: usize,
    angular: usize,
    g: &mut [Complex64],
    b: &mut [Complex64],
    one: &mut f64,
) -> Result<()> {
    let dim = degree + 1;
    let ev = theta.grid_evaluator()?;
    let (xs, ws) = gauss_legendre(radial);
    let mut sq = vec![Complex64::ZERO; angular];
    let mut th = vec![Complex64::ZERO; angular];
    let mut rp = vec![0.0; 2 * degree + 1];
    let inv = 1.0 / angular as f64;
    for (&x, &wq) in xs.iter().zip(&ws) {
        let r = 0.5 * (x + 1.0);
        let wr = wq * r * mu.disk_mass_scale * (1.0 - r).powf(mu.disk_alpha);
        for l in 0..angular {
            let v = ev.eval(Complex64::from_polar(r, TAU * l as f64 * inv))?;
            th[l] = v;
            sq[l] = Complex64::new(v.norm_sqr(), 0.0);
        }
        fft_forward(&mut sq);
        fft_forward(&mut th);
        rp[0] = 1.0;
        for p in 1..rp.len() {
            rp[p] = rp[p - 1] * r;
        }
        for j in 0..dim {
            for k in 0..dim {
                let idx = (angular + k - j) % angular;
                g[j * dim + k] += wr * rp[j + k] * sq[idx] * inv;
            }
            b[j] += wr * rp[j] * (th[(angular - j) % angular] * inv).conj();
        }
        *one += wr;
    }
    Ok(())
}

fn boundary_accumulate(
    theta: &BoundedFunctionSpec,
    w: &BoundaryWeight,
    degree: usize,
    g: &mut [Complex64],
    b: &mut [Complex64],
    one: &mut f64,
) -> Result<(&'static str, f64)> {
    let dim = degree + 1;
    let arcs = w.carrier.set_arcs();
    let atoms = if theta.singular_part.is_zero() {
        Vec::new()
    } else {
        theta.singular_part.realize()?
    };
    if !w.carrier.complement_spans().is_empty() {
        for a in &atoms {
            for &(lo, hi) in &arcs {
                for edge in [lo, hi] {
                    if wrap_pm(a.angle - edge).abs() < 1e-9 {
                        return Err(Error::NodeCollision {
                            angle: a.angle,
                            margin: 1e-9,
                        });
                    }
                }
            }
        }
    }
    let outer_pieces = theta.outer.pieces();
    let unimodular = outer_pieces.is_empty();

    for ((lo, hi), piece) in arcs.iter().copied().zip(&w.pieces) {
        if hi - lo <= 0.0 {
            continue;
        }
        if unimodular {
            if let WeightProfile::Constant { value } = piece {
                toeplitz_add(g, dim, lo, hi, *value);
                *one += value * (hi - lo) / TAU;
                continue;
            }
        }
        let mut cuts = piece.interior_kinks(lo, hi);
        cuts.extend(outer_cuts(&outer_pieces, lo, hi));
        let spec = GradedSpec {
            cuts,
            endpoint_inset: 1e-9,
            log_strength: 1.0 + 2.0 * max_strength(&outer_pieces),
            max_mode: dim as f64,
            ..GradedSpec::default()
        };
        let rule = graded_arc_rule(lo, hi, &spec);
        let mut diffs = vec![Complex64::ZERO; dim];
        for (&ang, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let mut log2 = 0.0;
            for p in &outer_pieces {
                if wrap(ang - p.a) < p.b - p.a {
                    log2 += 2.0 * p.eval(ang);
                }
            }
            let om = piece.eval(ang, lo, hi);
            let f = log2.exp() * om * wt / TAU;
            let e = Complex64::from_polar(1.0, ang);
            let mut ph = Complex64::new(f, 0.0);
            for d in diffs.iter_mut() {
                *d += ph;
                ph *= e;
            }
            *one += om * wt / TAU;
        }
        for j in 0..dim {
            for k in 0..dim {
                let m = j as i64 - k as i64;
                g[j * dim + k] += if m >= 0 {
                    diffs[m as usize]
                } else {
                    diffs[(-m) as usize].conj()
                };
            }
        }
    }

    let inside: Vec<Atom> = atoms
        .iter()
        .copied()
        .filter(|a| w.carrier.contains_angle(a.angle))
        .collect();
    let all_inside = inside.len() == atoms.len();
    let uniform = uniform_constant(&w.pieces);

    if !inside.is_empty() {
        if let (true, Some(v)) = (all_inside, uniform) {
            complement_b(theta, w, degree, v, &atoms, b)?;
            return Ok(("complement", 0.0));
        }
        let defect = direct_b(theta, w, degree, &atoms, b)?;
        return Ok(("windowed", defect));
    }
    direct_b(theta, w, degree, &atoms, b)?;
    Ok(("direct", 0.0))
}

pub(crate) fn uniform_constant(pieces: &[WeightProfile]) -> Option<f64> {
    let mut value = None;
    for p in pieces {
        match p {
            WeightProfile::Constant { value: v } => match value {
                None => value = Some(*v),
                Some(u) if u == *v => {}
                _ => return None,
            },
            _ => return None,
        }
    }
    value
}

fn toeplitz_add(g: &mut [Complex64], dim: usize, lo: f64, hi: f64, v: f64) {
    let mut diffs = vec![Complex64::ZERO; dim];
    diffs[0] = Complex64::new((hi - lo) / TAU, 0.0);
    for (m, d) in diffs.iter_mut().enumerate().skip(1) {
        let mf = m as f64;
        let ea = Complex64::from_polar(1.0, mf * lo);
        let eb = Complex64::from_polar(1.0, mf * hi);
        *d = (eb - ea) / Complex64::new(0.0, mf * TAU);
    }
    for j in 0..dim {
        for k in 0..dim {
            let m = j as i64 - k as i64;
            g[j * dim + k] += v * if m >= 0 {
                diffs[m as usize]
            } else {
                diffs[(-m) as usize].conj()
            };
        }
    }
}

/// `b_j` over the carrier through the complement: for θ bounded analytic,
/// `∫_T θ z^j dm = θ(0) δ_{j0}`, so the carrier integral is the full-circle
/// value minus the integral over the complementary spans, where θ is
/// analytic across the singular support.
fn complement_b(
    theta: &BoundedFunctionSpec,
    w: &BoundaryWeight,
    degree: usize,
    v: f64,
    atoms: &[Atom],
    b: &mut [Complex64],
) -> Result<()> {
    let dim = degree + 1;
    let cv = CircleValues::new(theta)?;
    let outer_pieces = theta.outer.pieces();
    let theta0 =
        cv.inner.eval(Complex64::ZERO)? * Complex64::new(theta.outer.log_integral().exp(), 0.0);
    let mut acc = vec![Complex64::ZERO; dim];
    for (lo, hi) in w.carrier.complement_spans() {
        if hi - lo <= 0.0 {
            continue;
        }
        let spec = GradedSpec {
            atoms: reframe_atoms(lo, hi, atoms),
            cuts: outer_cuts(&outer_pieces, lo, hi),
            endpoint_inset: 1e-9,
            log_strength: 1.0 + max_strength(&outer_pieces),
            max_mode: dim as f64,
            ..GradedSpec::default()
        };
        let rule = graded_arc_rule(lo, hi, &spec);
        for (&ang, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let val = cv.eval(ang)? * wt / TAU;
            let e = Complex64::from_polar(1.0, ang);
            let mut ph = val;
            for a in acc.iter_mut() {
                *a += ph;
                ph *= e;
            }
        }
    }
    b[0] += v * (theta0 - acc[0]).conj();
    for j in 1..dim {
        b[j] += v * (-acc[j]).conj();
    }
    Ok(())
}

/// `b_j = Σ_arcs ∫ conj(θ) e^{-ijt} ω dm` by graded arc quadrature; support
/// atoms inside an arc are excluded by their grading windows, and the bound
/// on the omitted boundary mass is returned.
fn direct_b(
    theta: &BoundedFunctionSpec,
    w: &BoundaryWeight,
    degree: usize,
    atoms: &[Atom],
    b: &mut [Complex64],
) -> Result<f64> {
    let dim = degree + 1;
    let cv = CircleValues::new(theta)?;
    let outer_pieces = theta.outer.pieces();
    let mut defect = 0.0;
    for ((lo, hi), piece) in w.carrier.set_arcs().iter().copied().zip(&w.pieces) {
        if hi - lo <= 0.0 {
            continue;
        }
        let mut cuts = piece.interior_kinks(lo, hi);
        cuts.extend(outer_cuts(&outer_pieces, lo, hi));
        let framed = reframe_atoms(lo, hi, atoms);
        let spec = GradedSpec {
            atoms: framed.clone(),
            cuts,
            endpoint_inset: 1e-9,
            log_strength: 1.0 + max_strength(&outer_pieces),
            max_mode: dim as f64,
            ..GradedSpec::default()
        };
        let rule = graded_arc_rule(lo, hi, &spec);
        for (&ang, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let val = cv.eval(ang)?.conj() * (piece.eval(ang, lo, hi) * wt / TAU);
            let e = Complex64::from_polar(1.0, -ang);
            let mut ph = val;
            for bj in b.iter_mut() {
                *bj += ph;
                ph *= e;
            }
        }
        for &(ta, _) in &framed {
            if ta > lo && ta < hi {
                defect += piece.eval(ta, lo, hi) * 2.0 * spec.atom_gap / TAU;
            }
        }
    }
    Ok(defect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::CircleSet;
    use crate::measure::SingularMeasure;
    use std::f64::consts::FRAC_PI_2;

    fn atom_measure(angle: f64, mass: f64) -> SingularMeasure {
        SingularMeasure::from_atoms(vec![Atom { angle, mass }]).unwrap()
    }

    fn area_measure(alpha: f64) -> SpaceMeasure {
        SpaceMeasure {
            disk_alpha: alpha,
            disk_mass_scale: 1.0,
            boundary: None,
            t: 2.0,
            beta_hint: None,
        }
    }

    #[test]
    fn lgamma_recurrence_and_special_values() {
        assert!(lgamma(1.0).abs() < 1e-14);
        assert!((lgamma(5.0) - 24.0_f64.ln()).abs() < 1e-13);
        assert!((lgamma(0.5) - 0.5 * PI.ln()).abs() < 1e-14);
        for &x in &[0.3, 1.0, 1.7, 9.5, 41.2] {
            let lhs = lgamma(x + 1.0);
            let rhs = lgamma(x) + x.ln();
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()), "x = {x}");
        }
    }

    #[test]
    fn moment_closed_forms() {
        let rm = RadialMoments::new(0.0, 1.0, 12).unwrap();
        for &k in &[0.0, 1.0, 7.0, 30.5] {
            let exact = 2.0 / (k + 2.0);
            assert!((rm.at(k) - exact).abs() < 1e-13 * exact);
        }
        let rm1 = RadialMoments::new(1.0, 1.0, 12).unwrap();
        for &k in &[0.0, 2.0, 9.0] {
            let exact = 2.0 / ((k + 2.0) * (k + 3.0));
            assert!((rm1.at(k) - exact).abs() < 1e-13 * exact);
        }
        let rm2 = RadialMoments::new(2.5, 3.0, 4).unwrap();
        let exact = 2.0 * 3.0 / (3.5 * 4.5);
        assert!((rm2.value(0) - exact).abs() < 1e-13 * exact);
        for k in 1..rm2.len() {
            assert!(rm2.value(k) < rm2.value(k - 1));
        }
        assert!(RadialMoments::new(-1.0, 1.0, 4).is_err());
    }

    #[test]
    fn moment_ratio_recurrence() {
        for &alpha in &[0.0, 0.5, 1.0, 2.5] {
            let rm = RadialMoments::new(alpha, 1.7, 12).unwrap();
            for k in 2..=12 {
                let kf = k as f64;
                let exact = kf * (kf + 1.0) / ((kf + alpha + 1.0) * (kf + alpha + 2.0));
                let got = rm.value(k) / rm.value(k - 2);
                assert!((got - exact).abs() < 1e-13, "alpha {alpha} k {k}");
            }
        }
    }

    fn dichotomy_measure() -> SpaceMeasure {
        let e = CircleSet::closed_arc(FRAC_PI_2, 0.5).unwrap();
        SpaceMeasure {
            disk_alpha: 0.0,
            disk_mass_scale: 1.0,
            boundary: Some(BoundaryWeight::uniform(e)),
            t: 2.0,
            beta_hint: None,
        }
    }

    #[test]
    fn pt_norm_mass_additivity() {
        let n = pt_norm(&BoundedFunctionSpec::one(), &dichotomy_measure(), 2.0).unwrap();
        assert!((n - 1.5_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn pt_norm_monomials_on_area() {
        let mu = area_measure(0.0);
        for n in [0usize, 3, 10] {
            let mut coeffs = vec![Complex64::ZERO; n + 1];
            coeffs[n] = Complex64::ONE;
            let exact = 1.0 / ((n as f64 + 1.0)).sqrt();
            let by_coeffs = pt_norm_coeffs(&coeffs, &mu).unwrap();
            assert!((by_coeffs - exact).abs() < 1e-14);
        }
        let z4 = BoundedFunctionSpec {
            monomial_power: 4,
            ..Default::default()
        };
        let by_grid = pt_norm(&z4, &mu, 2.0).unwrap();
        assert!((by_grid - 0.2_f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn pt_norm_exponent_rule() {
        let mu = area_measure(0.0);
        let z = BoundedFunctionSpec {
            monomial_power: 1,
            ..Default::default()
        };
        let half = pt_norm(&z, &mu, 0.5).unwrap();
        assert!((half - 0.8).abs() < 5e-6);
        let four = pt_norm(&z, &mu, 4.0).unwrap();
        assert!((four - (1.0_f64 / 3.0).powf(0.25)).abs() < 1e-6);
    }

    #[test]
    fn pt_norm_coeffs_matches_grid() {
        let mu = dichotomy_measure();
        let coeffs = [Complex64::ZERO, Complex64::ZERO, Complex64::ONE];
        let by_coeffs = pt_norm_coeffs(&coeffs, &mu).unwrap();
        let z2 = BoundedFunctionSpec {
            monomial_power: 2,
            ..Default::default()
        };
        let by_grid = pt_norm(&z2, &mu, 2.0).unwrap();
        let exact = (1.0_f64 / 3.0 + 0.5).sqrt();
        assert!((by_coeffs - exact).abs() < 1e-12);
        assert!((by_grid - by_coeffs).abs() < 1e-7);
    }

    #[test]
    fn pt_norm_shift_across_support_window() {
        let mu = SpaceMeasure {
            disk_alpha: 0.0,
            disk_mass_scale: 0.0,
            boundary: Some(BoundaryWeight::uniform(CircleSet::full_circle())),
            t: 2.0,
            beta_hint: None,
        };
        let f = BoundedFunctionSpec::singular_inner(atom_measure(PI, 0.7));
        let n = pt_norm_shifted(&f, &mu, 2.0, Complex64::ONE).unwrap();
        let exact = (2.0 - 2.0 * (-0.7_f64).exp()).sqrt();
        assert!((n - exact).abs() < 1e-6, "got {n}, want {exact}");
    }

    #[test]
    fn pt_norm_shift_off_support() {
        let e = CircleSet::closed_arc(FRAC_PI_2, 0.5).unwrap();
        let mu = SpaceMeasure {
            disk_alpha: 0.0,
            disk_mass_scale: 0.0,
            boundary: Some(BoundaryWeight::uniform(e)),
            t: 2.0,
            beta_hint: None,
        };
        let f = BoundedFunctionSpec::singular_inner(atom_measure(0.0, 0.5));
        let n = pt_norm_shifted(&f, &mu, 2.0, Complex64::ONE).unwrap();
        let ev = f.grid_evaluator().unwrap();
        let m = 1 << 15;
        let mut reference = 0.0;
        for l in 0..m {
            let t = FRAC_PI_2 + PI * (l as f64 + 0.5) / m as f64;
            let v = ev.eval(Complex64::from_polar(1.0, t)).unwrap() - Complex64::ONE;
            reference += v.norm_sqr();
        }
        reference *= PI / m as f64 / TAU;
        assert!((n * n - reference).abs() < 1e-8, "{} vs {reference}", n * n);
    }

    #[test]
    fn monomial_decay_windows() {
        assert!(monomial_decay(&area_measure(0.0), 2.0, 8).is_err());
        let b0 = monomial_decay(&area_measure(0.0), 2.0, 64).unwrap();
        assert!((b0.beta - 0.5).abs() < 0.02, "beta {}", b0.beta);
        assert!(b0.residual < 1e-3);
        let b1 = monomial_decay(&area_measure(1.0), 2.0, 64).unwrap();
        assert!((b1.beta - 1.0).abs() < 0.05, "beta {}", b1.beta);
        let circle_only = SpaceMeasure {
            disk_alpha: 0.0,
            disk_mass_scale: 0.0,
            boundary: Some(BoundaryWeight::uniform(CircleSet::full_circle())),
            t: 2.0,
            beta_hint: None,
        };
        let bb = monomial_decay(&circle_only, 2.0, 64).unwrap();
        assert!(bb.beta.abs() < 1e-12);
    }

    fn circle_lebesgue() -> SpaceMeasure {
        SpaceMeasure {
            disk_alpha: 0.0,
            disk_mass_scale: 0.0,
            boundary: Some(BoundaryWeight::uniform(CircleSet::full_circle())),
            t: 2.0,
            beta_hint: None,
        }
    }

    #[test]
    fn gram_full_circle_identities() {
        let gs = gram_system(&BoundedFunctionSpec::one(), &circle_lebesgue(), 6).unwrap();
        assert_eq!(gs.provenance.boundary_route, "direct");
        for j in 0..gs.dim {
            for k in 0..gs.dim {
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((gs.g[j * gs.dim + k] - want).norm() < 1e-14);
            }
        }
        assert!((gs.b[0] - Complex64::ONE).norm() < 1e-14);
        for j in 1..gs.dim {
            assert!(gs.b[j].norm() < 1e-14);
        }
        assert!((gs.one_norm_sq - 1.0).abs() < 1e-14);

        let theta = BoundedFunctionSpec::singular_inner(atom_measure(PI, 0.8));
        let gs = gram_system(&theta, &circle_lebesgue(), 6).unwrap();
        assert_eq!(gs.provenance.boundary_route, "complement");
        for j in 0..gs.dim {
            for k in 0..gs.dim {
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((gs.g[j * gs.dim + k] - want).norm() < 1e-14);
            }
        }
        assert!((gs.b[0] - Complex64::new((-0.8_f64).exp(), 0.0)).norm() < 1e-14);
        for j in 1..gs.dim {
            assert!(gs.b[j].norm() < 1e-14);
        }
    }

    #[test]
    fn gram_half_circle_toeplitz() {
        let e = CircleSet::closed_arc(FRAC_PI_2, 0.5).unwrap();
        let mu = SpaceMeasure {
            disk_alpha: 0.0,
            disk_mass_scale: 0.0,
            boundary: Some(BoundaryWeight::uniform(e)),
            t: 2.0,
            beta_hint: None,
        };
        let gs = gram_system(&BoundedFunctionSpec::one(), &mu, 8).unwrap();
        let (xs, ws) = gauss_legendre(8);
        let panels = 64;
        let quad = |m: i64| {
            let (lo, hi) = (FRAC_PI_2, FRAC_PI_2 + PI);
            let h = (hi - lo) / panels as f64;
            let mut acc = Complex64::ZERO;
            for p in 0..panels {
                let a = lo + p as f64 * h;
                for (&x, &wq) in xs.iter().zip(&ws) {
                    let t = a + 0.5 * h * (x + 1.0);
                    acc += 0.5 * h * wq * Complex64::from_polar(1.0, m as f64 * t);
                }
            }
            acc / TAU
        };
        for j in 0..gs.dim {
            for k in 0..gs.dim {
                let want = quad(j as i64 - k as i64);
                assert!((gs.g[j * gs.dim + k] - want).norm() < 1e-12);
            }
        }
        for j in 0..gs.dim {
            let want = quad(-(j as i64));
            assert!((gs.b[j] - want).norm() < 1e-12);
        }
        assert!((gs.one_norm_sq - 0.5).abs() < 1e-14);
    }

    #[test]
    fn gram_disk_atom_matches_dense_quadrature() {
        let theta = BoundedFunctionSpec::singular_inner(atom_measure(0.0, 1.0));
        let mu = area_measure(0.0);
        let params = GramParams {
            radial_nodes: 48,
            angular_nodes: 512,
        };
        let gs = gram_system_with(&theta, &mu, 8, &params).unwrap();
        assert_eq!(gs.provenance.radial_nodes, 48);
        assert_eq!(gs.provenance.angular_nodes, 512);

        let ev = theta.grid_evaluator().unwrap();
        let (xs, ws) = gauss_legendre(48);
        let n_ang = 512;
        let mut dense_g = vec![Complex64::ZERO; gs.dim * gs.dim];
        let mut dense_b = vec![Complex64::ZERO; gs.dim];
        for (&x, &wq) in xs.iter().zip(&ws) {
            let r = 0.5 * (x + 1.0);
            let wr = wq * r;
            for l in 0..n_ang {
                let ang = TAU * l as f64 / n_ang as f64;
                let v = ev.eval(Complex64::from_polar(r, ang)).unwrap();
                let vv = v.norm_sqr();
                for j in 0..gs.dim {
                    for k in 0..gs.dim {
                        let ph = Complex64::from_polar(
                            r.powi((j + k) as i32),
                            (j as f64 - k as f64) * ang,
                        );
                        dense_g[j * gs.dim + k] += wr * vv * ph / n_ang as f64;
                    }
                    let ph = Complex64::from_polar(r.powi(j as i32), -(j as f64) * ang);
                    dense_b[j] += wr * v.conj() * ph / n_ang as f64;
                }
            }
        }
        for i in 0..gs.dim * gs.dim {
            assert!(
                (gs.g[i] - dense_g[i]).norm() < 1e-8,
                "entry {i}: {} vs {}",
                gs.g[i],
                dense_g[i]
            );
        }
        for j in 0..gs.dim {
            assert!((gs.b[j] - dense_b[j]).norm() < 1e-8);
        }
    }

    #[test]
    fn gram_complement_route_matches_independent_quadrature() {
        let theta = BoundedFunctionSpec::singular_inner(atom_measure(PI, 1.0));
        let e = CircleSet::closed_arc(FRAC_PI_2, 0.5).unwrap();
        let mu = SpaceMeasure {
            disk_alpha: 0.0,
            disk_mass_scale: 1.0,
            boundary: Some(BoundaryWeight::uniform(e)),
            t: 2.0,
            beta_hint: None,
        };
        let gs = gram_system(&theta, &mu, 8).unwrap();
        assert_eq!(gs.provenance.boundary_route, "complement");
        assert!((gs.one_norm_sq - 1.5).abs() < 1e-12);
        assert!(gs.provenance.symmetry_defect < 1e-12);

        let ev = theta.grid_evaluator().unwrap();
        let (xs, ws) = gauss_legendre(16);
        let panels = 256;
        let mut boundary_b = vec![Complex64::ZERO; gs.dim];
        let (lo, hi) = (3.0 * FRAC_PI_2, 3.0 * FRAC_PI_2 + PI);
        let h = (hi - lo) / panels as f64;
        let mut off = vec![Complex64::ZERO; gs.dim];
        for p in 0..panels {
            let a = lo + p as f64 * h;
            for (&x, &wq) in xs.iter().zip(&ws) {
                let t = a + 0.5 * h * (x + 1.0);
                let v = ev.eval(Complex64::from_polar(1.0, t)).unwrap();
                for (j, o) in off.iter_mut().enumerate() {
                    *o += 0.5 * h * wq * v * Complex64::from_polar(1.0, j as f64 * t) / TAU;
                }
            }
        }
        let theta0 = (-1.0_f64).exp();
        boundary_b[0] = (Complex64::new(theta0, 0.0) - off[0]).conj();
        for j in 1..gs.dim {
            boundary_b[j] = (-off[j]).conj();
        }
        let disk_mu = area_measure(0.0);
        let disk_gs = gram_system_with(
            &theta,
            &disk_mu,
            8,
            &GramParams {
                radial_nodes: gs.provenance.radial_nodes,
                angular_nodes: gs.provenance.angular_nodes,
            },
        )
        .unwrap();
        for j in 0..gs.dim {
            let want = disk_gs.b[j] + boundary_b[j];
            assert!(
                (gs.b[j] - want).norm() < 1e-10,
                "j = {j}: {} vs {want}",
                gs.b[j]
            );
        }
    }

    #[test]
    fn gram_rejects_atom_on_carrier_edge() {
        let theta = BoundedFunctionSpec::singular_inner(atom_measure(FRAC_PI_2, 1.0));
        let e = CircleSet::closed_arc(FRAC_PI_2, 0.5).unwrap();
        let mu = SpaceMeasure {
            disk_alpha: 0.0,
            disk_mass_scale: 0.0,
            boundary: Some(BoundaryWeight::uniform(e)),
            t: 2.0,
            beta_hint: None,
        };
        match gram_system(&theta, &mu, 4) {
            Err(Error::NodeCollision { .. }) => {}
            other => panic!("expected node collision, got {other:?}"),
        }
    }

    #[test]
    fn gram_windowed_route_reports_defect() {
        let theta = BoundedFunctionSpec::singular_inner(atom_measure(PI, 0.4));
        let e = CircleSet::closed_arc(FRAC_PI_2, 0.5).unwrap();
        let w = BoundaryWeight {
            carrier: e,
            pieces: vec![WeightProfile::Polynomial {
                coefficients: vec![1.0, 1.0],
            }],
        };
        let mu = SpaceMeasure {
            disk_alpha: 0.0,
            disk_mass_scale: 1.0,
            boundary: Some(w),
            t: 2.0,
            beta_hint: None,
        };
        let gs = gram_system(&theta, &mu, 4).unwrap();
        assert_eq!(gs.provenance.boundary_route, "windowed");
        assert!(gs.provenance.window_defect > 0.0);
        assert!(gs.provenance.window_defect < 1e-3);
    }

    #[test]
    fn gram_json_round_trip() {
        let gs = gram_system(&BoundedFunctionSpec::one(), &circle_lebesgue(), 2).unwrap();
        let text = gs.to_json();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["dim"], 3);
        assert_eq!(parsed["g"].as_array().unwrap().len(), 9);
        assert_eq!(parsed["g"][0][0], 1.0);
        assert_eq!(parsed["provenance"]["boundary_route"], "direct");
    }
}
