//! Bregman divergences on the probability simplex and numeric checks of two
//! facts about them: the weighted mean of distributions minimizes the
//! weighted divergence sum, and mixing a shared and a private predictor is
//! bounded by the mix of their divergences.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};

const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Simplex(Vec<f64>);

impl Simplex {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::Domain("empty probability vector".into()));
        }
        if p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("negative or non-finite entry in {p:?}")));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Domain(format!("entries sum to {s}, not 1")));
        }
        Ok(Self(p))
    }

    pub fn uniform(c: usize) -> Self {
        Self(vec![1.0 / c as f64; c])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Uniform draw from the simplex (flat Dirichlet via normalized exponentials).
    pub fn random<R: Rng + ?Sized>(c: usize, rng: &mut R) -> Self {
        let mut p: Vec<f64> = (0..c).map(|_| Exp1.sample(rng)).collect::<Vec<f64>>();
        normalize(&mut p);
        Self(p)
    }

    /// Convex combination `(1 - t) self + t other`, renormalized.
    pub fn mix(&self, other: &Simplex, t: f64) -> Simplex {
        let mut p: Vec<f64> = self.0.iter().zip(&other.0).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        normalize(&mut p);
        Simplex(p)
    }

    fn linf(&self, other: &Simplex) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

fn normalize(p: &mut [f64]) {
    let s: f64 = p.iter().sum();
    for v in p.iter_mut() {
        *v /= s;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorF {
    /// `F(p) = |p|^2`.
    SquaredNorm,
    /// `F(p) = sum p ln p`.
    NegEntropy,
}

impl GeneratorF {
    pub const ALL: [GeneratorF; 2] = [GeneratorF::SquaredNorm, GeneratorF::NegEntropy];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorF::SquaredNorm => "squared_norm",
            GeneratorF::NegEntropy => "neg_entropy",
        }
    }

    pub fn value(self, p: &Simplex) -> f64 {
        match self {
            GeneratorF::SquaredNorm => p.0.iter().map(|v| v * v).sum(),
            GeneratorF::NegEntropy => p.0.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum(),
        }
    }
}

/// `F(d) - F(h) - <grad F(h), d - h>`.
pub fn bregman_div(f: GeneratorF, d: &Simplex, h: &Simplex) -> Result<f64> {
    if d.dim() != h.dim() {
        return Err(Error::Domain(format!("dimensions {} and {} differ", d.dim(), h.dim())));
    }
    match f {
        GeneratorF::SquaredNorm => Ok(d.0.iter().zip(&h.0).map(|(a, b)| (a - b) * (a - b)).sum()),
        GeneratorF::NegEntropy => {
            if h.0.iter().any(|&v| v <= 0.0) {
                return Err(Error::Domain("negative entropy needs h in the simplex interior".into()));
            }
            // The gradient is ln h + 1; the constant terms cancel on the simplex.
            let grad_dot: f64 = d.0.iter().zip(&h.0).map(|(a, b)| (a - b) * (b.ln() + 1.0)).sum();
            Ok((f.value(d) - f.value(h) - grad_dot).max(0.0))
        }
    }
}

fn weighted_loss(f: GeneratorF, dists: &[Simplex], weights: &[f64], h: &Simplex) -> Result<f64> {
    let mut s = 0.0;
    for (d, &w) in dists.iter().zip(weights) {
        if w > 0.0 {
            s += w * bregman_div(f, d, h)?;
        }
    }
    Ok(s)
}

fn check_weights(dists: &[Simplex], weights: &[f64]) -> Result<usize> {
    let c = dists
        .first()
        .map(Simplex::dim)
        .ok_or_else(|| Error::config("no distributions supplied"))?;
    if dists.len() != weights.len() || dists.iter().any(|d| d.dim() != c) {
        return Err(Error::config("distributions and weights disagree in size"));
    }
    if weights.iter().any(|&w| !(w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::config("weights must be non-negative and sum to 1"));
    }
    Ok(c)
}

/// Every point of the barycentric lattice `{k / m : sum k = m}`.
fn lattice(c: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(left - k, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, c, &mut Vec::with_capacity(c), &mut out);
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

const MAX_LATTICE: f64 = 2.0e7;

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub generator: GeneratorF,
    pub target: Vec<f64>,
    pub argmin: Vec<f64>,
    /// L-infinity distance between the grid argmin and the weighted mean.
    pub distance: f64,
    pub resolution: f64,
    /// Lowest objective at lattice points farther than `2 r` from the target,
    /// minus the objective at the target; positive means a unique basin.
    pub uniqueness_gap: f64,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.distance <= self.resolution + 1e-12 && self.uniqueness_gap > 0.0
    }

    /// How far the check is from passing (0 when it passes).
    pub fn violation(&self) -> f64 {
        (self.distance - self.resolution).max(0.0) + (-self.uniqueness_gap).max(0.0)
    }
}

/// Brute-force minimization of `sum_k p_k B_F(D_k || h)` over a simplex
/// lattice with spacing `1 / round(1 / r)`.
pub fn check_lemma_minimizer(
    f: GeneratorF,
    dists: &[Simplex],
    weights: &[f64],
    resolution: f64,
) -> Result<LemmaReport> {
    let c = check_weights(dists, weights)?;
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::config(format!("grid resolution must be in (0, 1], got {resolution}")));
    }
    let m = (1.0 / resolution).round() as usize;
    let points = binomial(m + c - 1, c - 1);
    if points > MAX_LATTICE {
        return Err(Error::config(format!(
            "simplex lattice with {points:.0} points is too large; lower C or coarsen r"
        )));
    }
    let mut target = vec![0.0; c];
    for (d, &w) in dists.iter().zip(weights) {
        for (t, v) in target.iter_mut().zip(&d.0) {
            *t += w * v;
        }
    }
    normalize(&mut target);
    let target = Simplex(target);
    let target_value = weighted_loss(f, dists, weights, &target)?;

    let mut best: Option<(f64, Simplex)> = None;
    let mut far_min = f64::INFINITY;
    for ks in lattice(c, m) {
        let h = Simplex(ks.iter().map(|&k| k as f64 / m as f64).collect());
        let value = match weighted_loss(f, dists, weights, &h) {
            Ok(v) => v,
            Err(Error::Domain(_)) => continue,
            Err(e) => return Err(e),
        };
        if h.linf(&target) > 2.0 * resolution {
            far_min = far_min.min(value);
        }
        if best.as_ref().is_none_or(|(bv, _)| value < *bv) {
            best = Some((value, h));
        }
    }
    let (_, argmin) = best.ok_or_else(|| Error::config("no admissible lattice point"))?;
    Ok(LemmaReport {
        generator: f,
        distance: argmin.linf(&target),
        target: target.0,
        argmin: argmin.0,
        resolution,
        uniqueness_gap: far_min - target_value,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub generator: GeneratorF,
    pub trials: usize,
    pub violations: usize,
    /// Largest `lhs - rhs` seen (negative when the bound always held strictly).
    pub max_excess: f64,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

pub const BOUND_TOLERANCE: f64 = 1e-10;

/// Left and right side of the private-shared bound for one input.
pub fn ps_bound_sides(
    f: GeneratorF,
    dists: &[Simplex],
    weights: &[f64],
    h_s: &Simplex,
    h_p: &[Simplex],
    alpha: f64,
) -> Result<(f64, f64)> {
    check_weights(dists, weights)?;
    if h_p.len() != dists.len() {
        return Err(Error::config("need one private predictor per distribution"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::config(format!("alpha must be in [0, 1], got {alpha}")));
    }
    let (mut lhs, mut shared, mut private) = (0.0, 0.0, 0.0);
    for ((d, &w), hp) in dists.iter().zip(weights).zip(h_p) {
        let mixed = h_s.mix(hp, alpha);
        lhs += w * bregman_div(f, d, &mixed)?;
        shared += w * bregman_div(f, d, h_s)?;
        private += w * bregman_div(f, d, hp)?;
    }
    Ok((lhs, (1.0 - alpha) * shared + alpha * private))
}

/// Checks the bound on the supplied input, then on `trials` random inputs
/// with the same shape. Every fourth random trial uses near-corner
/// distributions and an endpoint-adjacent alpha.
pub fn check_ps_upper_bound<R: Rng + ?Sized>(
    f: GeneratorF,
    dists: &[Simplex],
    weights: &[f64],
    h_s: &Simplex,
    h_p: &[Simplex],
    alpha: f64,
    trials: usize,
    rng: &mut R,
) -> Result<BoundReport> {
    let c = check_weights(dists, weights)?;
    let k = dists.len();
    let mut report = BoundReport {
        generator: f,
        trials: 0,
        violations: 0,
        max_excess: f64::NEG_INFINITY,
    };
    let mut tally = |lhs: f64, rhs: f64| {
        report.trials += 1;
        let excess = lhs - rhs;
        report.max_excess = report.max_excess.max(excess);
        if excess > BOUND_TOLERANCE {
            report.violations += 1;
        }
    };
    let (l, r) = ps_bound_sides(f, dists, weights, h_s, h_p, alpha)?;
    tally(l, r);
    for t in 0..trials {
        let corner = t % 4 == 3;
        let draw = |rng: &mut R| {
            if corner {
                let mut p = vec![1e-9; c];
                p[rng.random_range(0..c)] = 1.0;
                normalize(&mut p);
                Simplex(p)
            } else {
                Simplex::random(c, rng)
            }
        };
        let ds: Vec<Simplex> = (0..k).map(|_| draw(rng)).collect();
        let mut w: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
        normalize(&mut w);
        let hs = draw(rng);
        let hp: Vec<Simplex> = (0..k).map(|_| draw(rng)).collect();
        let a = if corner {
            [1e-9, 1.0 - 1e-9][rng.random_range(0..2)]
        } else {
            rng.random::<f64>()
        };
        let (l, r) = ps_bound_sides(f, &ds, &w, &hs, &hp, a)?;
        tally(l, r);
    }
    Ok(report)
}
