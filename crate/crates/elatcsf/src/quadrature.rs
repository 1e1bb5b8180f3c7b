//! Two-dimensional quadrature over discs and rectangles, plus a Monte Carlo
//! cross-check. All rules are deterministic: nodes come from a Newton solve
//! on the Legendre recurrence, sums are accumulated pairwise, and refinement
//! follows a fixed panel schedule, so a given spec always produces the same
//! bits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::QuadratureError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadRule {
    GaussLegendre,
    /// Composite midpoint rule. Much slower to converge; kept as an
    /// independent cross-check on the Gauss-Legendre path.
    Midpoint,
}

/// How to integrate: base tensor rule plus an optional refinement loop that
/// splits both axes into 2^level panels and compares successive levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rule: QuadRule,
    /// Nodes along the first axis (radius for discs, x for rectangles).
    pub nodes_radial: usize,
    /// Nodes along the second axis (angle for discs, y for rectangles).
    pub nodes_angular: usize,
    /// Refine until successive levels agree to `rel_tol` or the budget runs
    /// out. When false, a single base-rule pass is taken as-is.
    pub adaptive: bool,
    pub rel_tol: f64,
    /// Maximum refinement levels past the base pass. Work per level grows
    /// fourfold, so the default budget caps cost at 256x the base rule.
    pub max_refinements: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rule: QuadRule::GaussLegendre,
            nodes_radial: 64,
            nodes_angular: 64,
            adaptive: true,
            rel_tol: 1e-4,
            max_refinements: 4,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), QuadratureError> {
        if self.nodes_radial == 0 || self.nodes_angular == 0 {
            return Err(QuadratureError::InvalidSpec(format!(
                "node counts must be positive, got {}x{}",
                self.nodes_radial, self.nodes_angular
            )));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(QuadratureError::InvalidSpec(format!(
                "rel_tol {} must be finite and > 0",
                self.rel_tol
            )));
        }
        if self.max_refinements > 8 {
            return Err(QuadratureError::InvalidSpec(format!(
                "max_refinements {} would cost 4^{} base passes; cap is 8",
                self.max_refinements, self.max_refinements
            )));
        }
        Ok(())
    }
}

/// Result of a deterministic quadrature run. `error_estimate` is the gap
/// between the last two refinement levels and is `None` when no comparison
/// was made (non-adaptive runs).
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: Option<f64>,
    pub converged: bool,
    pub refinements: u32,
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Integrates `f(r, theta)` over a disc of the given radius, applying the
/// polar Jacobian internally: the result is the integral of f * r dr dtheta.
pub fn integrate_disc<F>(
    spec: &QuadratureSpec,
    radius: f64,
    f: F,
) -> Result<Quadrature, QuadratureError>
where
    F: Fn(f64, f64) -> f64,
{
    spec.validate()?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(QuadratureError::InvalidDomain(format!(
            "disc radius {radius} must be finite and > 0"
        )));
    }
    let g = |r: f64, theta: f64| f(r, theta) * r;
    Ok(run(spec, &g, (0.0, radius), (0.0, 2.0 * std::f64::consts::PI)))
}

/// Integrates `f(x, y)` over a rectangle centered on the origin.
pub fn integrate_rect<F>(
    spec: &QuadratureSpec,
    width: f64,
    height: f64,
    f: F,
) -> Result<Quadrature, QuadratureError>
where
    F: Fn(f64, f64) -> f64,
{
    spec.validate()?;
    if !(width > 0.0 && width.is_finite() && height > 0.0 && height.is_finite()) {
        return Err(QuadratureError::InvalidDomain(format!(
            "rect {width} x {height} must have finite positive sides"
        )));
    }
    Ok(run(
        spec,
        &f,
        (-width / 2.0, width / 2.0),
        (-height / 2.0, height / 2.0),
    ))
}

fn run<F>(spec: &QuadratureSpec, g: &F, xr: (f64, f64), yr: (f64, f64)) -> Quadrature
where
    F: Fn(f64, f64) -> f64,
{
    let rx = Rule1d::build(spec.rule, spec.nodes_radial);
    let ry = Rule1d::build(spec.rule, spec.nodes_angular);
    let mut prev = tensor_panels(g, &rx, &ry, xr, yr, 1);
    if !spec.adaptive {
        return Quadrature {
            value: prev,
            error_estimate: None,
            converged: true,
            refinements: 0,
        };
    }
    let mut level = 0;
    loop {
        level += 1;
        let cur = tensor_panels(g, &rx, &ry, xr, yr, 1usize << level);
        let gap = (cur - prev).abs();
        if levels_agree(prev, cur, spec.rel_tol) {
            return Quadrature {
                value: cur,
                error_estimate: Some(gap),
                converged: true,
                refinements: level,
            };
        }
        if level >= spec.max_refinements {
            return Quadrature {
                value: cur,
                error_estimate: Some(gap),
                converged: false,
                refinements: level,
            };
        }
        prev = cur;
    }
}

/// Successive levels are compared in log space when both are positive, which
/// matches how the integrals are consumed downstream (everything ends up on a
/// log10 sensitivity axis). Otherwise a plain relative gap is used.
fn levels_agree(prev: f64, cur: f64, rel_tol: f64) -> bool {
    if prev > 0.0 && cur > 0.0 {
        (cur.ln() - prev.ln()).abs() <= rel_tol
    } else {
        (cur - prev).abs() <= rel_tol * cur.abs().max(prev.abs()).max(1.0)
    }
}

/// Tensor rule over `panels x panels` equal cells. Each cell uses the full
/// base rule; cells and in-cell terms are both accumulated pairwise.
fn tensor_panels<F>(
    g: &F,
    rx: &Rule1d,
    ry: &Rule1d,
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    panels: usize,
) -> f64
where
    F: Fn(f64, f64) -> f64,
{
    let dx = (x1 - x0) / panels as f64;
    let dy = (y1 - y0) / panels as f64;
    let mut cells = Vec::with_capacity(panels * panels);
    let mut terms = Vec::with_capacity(rx.nodes.len() * ry.nodes.len());
    for i in 0..panels {
        let ax = x0 + dx * i as f64;
        for j in 0..panels {
            let ay = y0 + dy * j as f64;
            terms.clear();
            for (xn, xw) in rx.nodes.iter().zip(&rx.weights) {
                let x = ax + dx * xn;
                let wx = dx * xw;
                for (yn, yw) in ry.nodes.iter().zip(&ry.weights) {
                    terms.push(wx * dy * yw * g(x, ay + dy * yn));
                }
            }
            cells.push(pairwise_sum(&terms));
        }
    }
    pairwise_sum(&cells)
}

/// One-dimensional rule on the reference interval [0, 1].
struct Rule1d {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule1d {
    fn build(rule: QuadRule, n: usize) -> Self {
        match rule {
            QuadRule::GaussLegendre => {
                let (nodes, weights) = gauss_legendre(n);
                Self {
                    nodes: nodes.iter().map(|x| (x + 1.0) / 2.0).collect(),
                    weights: weights.iter().map(|w| w / 2.0).collect(),
                }
            }
            QuadRule::Midpoint => Self {
                nodes: (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect(),
                weights: vec![1.0 / n as f64; n],
            },
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], ascending. Roots are found
/// by Newton iteration on the three-term Legendre recurrence from Chebyshev
/// initial guesses; each root converges in a handful of steps.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Guesses start at the largest root; mirror for ascending order.
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// P_n(x) and its derivative via the recurrence; valid for |x| < 1.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 1.0;
    let mut cur = x;
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * cur - (kf - 1.0) * prev) / kf;
        prev = cur;
        cur = next;
    }
    let dp = n as f64 * (x * cur - prev) / (x * x - 1.0);
    (cur, dp)
}

/// Pairwise summation: splits recursively down to short runs so rounding
/// error grows like log n instead of n, independent of element order only up
/// to the usual fp caveats; the split points are deterministic.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        s
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Monte Carlo integral of `f(r, theta) * r dr dtheta` over a disc, sampling
/// uniformly by area (r = R sqrt(u)). Mean and variance are accumulated with
/// Welford updates. Needs at least 1000 samples for the error estimate to
/// mean anything.
pub fn monte_carlo_disc<F>(
    radius: f64,
    samples: u64,
    seed: u64,
    f: F,
) -> Result<McEstimate, QuadratureError>
where
    F: Fn(f64, f64) -> f64,
{
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(QuadratureError::InvalidDomain(format!(
            "disc radius {radius} must be finite and > 0"
        )));
    }
    let area = std::f64::consts::PI * radius * radius;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = |rng: &mut ChaCha8Rng| {
        let u: f64 = rng.gen();
        let v: f64 = rng.gen();
        (radius * u.sqrt(), 2.0 * std::f64::consts::PI * v)
    };
    welford(area, samples, move || {
        let (r, theta) = sample(&mut rng);
        f(r, theta)
    })
}

/// Monte Carlo integral of `f(x, y)` over an origin-centered rectangle.
pub fn monte_carlo_rect<F>(
    width: f64,
    height: f64,
    samples: u64,
    seed: u64,
    f: F,
) -> Result<McEstimate, QuadratureError>
where
    F: Fn(f64, f64) -> f64,
{
    if !(width > 0.0 && width.is_finite() && height > 0.0 && height.is_finite()) {
        return Err(QuadratureError::InvalidDomain(format!(
            "rect {width} x {height} must have finite positive sides"
        )));
    }
    let area = width * height;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    welford(area, samples, move || {
        let x: f64 = rng.gen::<f64>() - 0.5;
        let y: f64 = rng.gen::<f64>() - 0.5;
        f(x * width, y * height)
    })
}

fn welford<G>(area: f64, samples: u64, mut next: G) -> Result<McEstimate, QuadratureError>
where
    G: FnMut() -> f64,
{
    if samples < 1000 {
        return Err(QuadratureError::InvalidSpec(format!(
            "{samples} samples is too few for a usable standard error; need >= 1000"
        )));
    }
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 1..=samples {
        let x = next();
        let delta = x - mean;
        mean += delta / i as f64;
        m2 += delta * (x - mean);
    }
    let variance = m2 / (samples - 1) as f64;
    Ok(McEstimate {
        value: area * mean,
        std_error: area * (variance / samples as f64).sqrt(),
        samples,
    })
}
