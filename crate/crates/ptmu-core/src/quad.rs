//! Gauss-Legendre panel quadrature on angular intervals, with dyadic grading
//! toward endpoint singularities and density control for oscillatory
//! integrands and near-atom phase winding.

use num_complex::Complex64;

/// Nodes and weights of a quadrature rule on some interval.
#[derive(Debug, Clone, Default)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn append(&mut self, other: Rule) {
        self.nodes.extend(other.nodes);
        self.weights.extend(other.weights);
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }

    pub fn integrate_complex<F: FnMut(f64) -> Complex64>(&self, mut f: F) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| f(t) * w)
            .sum()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// Legendre recurrence from the Chebyshev-based initial guess.
pub fn gauss_legendre(p: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(p >= 1);
    let mut nodes = vec![0.0; p];
    let mut weights = vec![0.0; p];
    for i in 0..p.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (p as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=p {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = p as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[p - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[p - 1 - i] = w;
    }
    if p % 2 == 1 {
        nodes[p / 2] = 0.0;
    }
    (nodes, weights)
}

fn push_panel(rule: &mut Rule, lo: f64, hi: f64, xs: &[f64], ws: &[f64]) {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    for (&x, &w) in xs.iter().zip(ws) {
        rule.nodes.push(mid + half * x);
        rule.weights.push(half * w);
    }
}

/// Panel rule on `[a, b]` for integrands oscillating up to frequency
/// `max_mode`, with optional dyadic grading toward either endpoint (`nlev`
/// halvings) for integrable endpoint singularities. Each dyadic chunk is cut
/// so that one panel of `p` nodes spans about `2 pi p / wdiv / max_mode`,
/// keeping several nodes per oscillation wavelength.
pub fn oscillatory_arc_rule(
    a: f64,
    b: f64,
    grade_left: bool,
    grade_right: bool,
    max_mode: f64,
    p: usize,
    nlev: usize,
    wdiv: f64,
) -> Rule {
    let (xs, ws) = gauss_legendre(p);
    let span = b - a;
    let mut cuts = vec![a, b];
    for k in 1..=nlev {
        let d = span * 2.0f64.powi(-(k as i32));
        if grade_left {
            cuts.push(a + d);
        }
        if grade_right {
            cuts.push(b - d);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let width = std::f64::consts::TAU * (p as f64 / wdiv) / max_mode.max(1.0);
    let mut rule = Rule::default();
    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi - lo <= 0.0 {
            continue;
        }
        let nsub = ((hi - lo) / width).ceil().max(1.0) as usize;
        let step = (hi - lo) / nsub as f64;
        for s in 0..nsub {
            push_panel(&mut rule, lo + s as f64 * step, lo + (s + 1) as f64 * step, &xs, &ws);
        }
    }
    rule
}

/// Density-graded rule on `[lo, hi]` for boundary integrands whose phase
/// winds near circle atoms (rate `2 mass / dist^2`) and near the interval
/// endpoints (rate `ns (|ln d| + 1) / (pi d)` from an `ns`-fold log-modulus
/// cusp), plus a flat `max_mode` oscillation term.
#[derive(Debug, Clone)]
pub struct GradedSpec {
    /// (angle, mass) pairs strictly inside the interval; a symmetric window
    /// of half-width `atom_gap` around each is excluded from the rule.
    pub atoms: Vec<(f64, f64)>,
    /// Extra panel boundaries, for integrands with interior derivative
    /// kinks; each side of a cut is integrated as its own panel chain.
    pub cuts: Vec<f64>,
    /// Half-width of the excluded window around each atom.
    pub atom_gap: f64,
    /// Innermost dyadic inset at the interval endpoints; zero disables
    /// endpoint grading.
    pub endpoint_inset: f64,
    /// Strength of the endpoint phase density (the cutoff power).
    pub log_strength: f64,
    /// Flat phase-rate floor for polynomial-mode oscillation.
    pub max_mode: f64,
    /// Gauss-Legendre nodes per panel.
    pub nodes_per_panel: usize,
    /// Phase budget per panel is `nodes_per_panel / phase_div` radians.
    pub phase_div: f64,
}

impl Default for GradedSpec {
    fn default() -> Self {
        GradedSpec {
            atoms: Vec::new(),
            cuts: Vec::new(),
            atom_gap: 3e-4,
            endpoint_inset: 1e-9,
            log_strength: 0.0,
            max_mode: 1.0,
            nodes_per_panel: 16,
            phase_div: 2.5,
        }
    }
}

pub fn graded_arc_rule(lo: f64, hi: f64, spec: &GradedSpec) -> Rule {
    let (xs, ws) = gauss_legendre(spec.nodes_per_panel);
    let span = hi - lo;
    let mut cuts = vec![lo, hi];
    cuts.extend(spec.cuts.iter().copied());
    for &(ta, _) in &spec.atoms {
        cuts.push(ta - spec.atom_gap);
        cuts.push(ta + spec.atom_gap);
        let mut d = spec.atom_gap;
        while d < span {
            cuts.push((ta - d).max(lo));
            cuts.push((ta + d).min(hi));
            d *= 2.0;
        }
    }
    if spec.endpoint_inset > 0.0 {
        let mut d = spec.endpoint_inset;
        while d < span {
            cuts.push(lo + d);
            cuts.push(hi - d);
            d *= 2.0;
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.retain(|&c| c >= lo && c <= hi);
    let mut rule = Rule::default();
    for pair in cuts.windows(2) {
        let (plo, phi) = (pair[0], pair[1]);
        if phi - plo <= 0.0 {
            continue;
        }
        let inside_gap = spec.atoms.iter().any(|&(ta, _)| {
            plo >= ta - spec.atom_gap - 1e-18 && phi <= ta + spec.atom_gap + 1e-18
        });
        if inside_gap {
            continue;
        }
        let mut dphi = spec.max_mode;
        for &(ta, mass) in &spec.atoms {
            let da = (plo - ta).abs().min((phi - ta).abs()).max(1e-300);
            dphi += 2.0 * mass / (da * da);
        }
        let nsub = if spec.endpoint_inset > 0.0 {
            let de = (plo - lo).min(hi - phi).max(1e-300);
            if de <= 2.0 * spec.endpoint_inset {
                1
            } else {
                dphi += spec.log_strength * (de.ln().abs() + 1.0) / (std::f64::consts::PI * de);
                let budget = spec.nodes_per_panel as f64 / spec.phase_div;
                (((phi - plo) * dphi / budget).ceil().max(1.0) as usize).min(200_000)
            }
        } else {
            let budget = spec.nodes_per_panel as f64 / spec.phase_div;
            (((phi - plo) * dphi / budget).ceil().max(1.0) as usize).min(200_000)
        };
        let step = (phi - plo) / nsub as f64;
        for s in 0..nsub {
            push_panel(&mut rule, plo + s as f64 * step, plo + (s + 1) as f64 * step, &xs, &ws);
        }
    }
    rule
}
