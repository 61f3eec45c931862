//! Continuous-time restriction-induction walk: pausing laws, Monte Carlo
//! replicas, the renewal factor `a(k, t, n)`, and the exact PDE residual of the
//! evolved Stieltjes transform.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma as GammaDist};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Gamma as GammaLaw};
use std::collections::BTreeMap;
use std::str::FromStr;

use crate::branching::{chain_step, sample_plancherel, Gamma, NazarovLabel};
use crate::error::{Error, Result};
use crate::freeprob::{cumulants_to_moments, evolve_formal, stieltjes_series, CumulantVector};
use crate::measures::{markov_series, RayleighData};
use crate::series::{int, to_f64, Poly, PowerSeries, Rational};
use crate::spcore::{doubled_profile, StrictPartition};

/// IID holding-time law between jumps.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum PausingSpec {
    Exponential { mean: f64 },
    /// Gamma law with the given shape, scale `mean / shape`.
    Gamma { shape: f64, mean: f64 },
    /// Uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// Constant pause; excluded by the integrability hypothesis.
    Deterministic { mean: f64 },
    /// Piecewise-uniform density on consecutive bins.
    Histogram { edges: Vec<f64>, weights: Vec<f64> },
}

impl PausingSpec {
    /// Builds a law from a family name: `gamma` takes its shape from `params[0]` (default 2),
    /// `uniform` is `[m(1-w), m(1+w)]` with `w = params[0]` (default 1), `histogram` uses `edges` and `weights`.
    pub fn from_family(family: &str, params: &[f64], m: f64, edges: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let spec = match family {
            "exponential" => Self::Exponential { mean: m },
            "gamma" => Self::Gamma { shape: params.first().copied().unwrap_or(2.0), mean: m },
            "uniform" => {
                let width = params.first().copied().unwrap_or(1.0);
                Self::Uniform { lo: m * (1.0 - width), hi: m * (1.0 + width) }
            }
            "deterministic" => Self::Deterministic { mean: m },
            "histogram" => Self::Histogram { edges, weights },
            other => return Err(Error::InvalidInput(format!("unknown pausing family '{other}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        match self {
            Self::Exponential { mean } | Self::Deterministic { mean } if !(*mean > 0.0 && mean.is_finite()) => {
                bad(format!("pausing mean must be positive, got {mean}"))
            }
            Self::Gamma { shape, mean } if !(*shape > 0.0 && *mean > 0.0 && mean.is_finite()) => {
                bad(format!("gamma pausing needs shape, mean > 0 (got {shape}, {mean})"))
            }
            Self::Uniform { lo, hi } if !(*lo >= 0.0 && hi > lo && hi.is_finite()) => {
                bad(format!("uniform pausing needs 0 <= lo < hi (got {lo}, {hi})"))
            }
            Self::Histogram { edges, weights } => {
                if edges.len() != weights.len() + 1 || weights.is_empty() {
                    return bad("histogram needs one more edge than weights".into());
                }
                if edges[0] < 0.0 || edges.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("histogram edges must be nonnegative and increasing".into());
                }
                if weights.iter().any(|w| *w < 0.0) || weights.iter().sum::<f64>() <= 0.0 {
                    return bad("histogram weights must be nonnegative with positive total".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Exponential { mean } | Self::Gamma { mean, .. } | Self::Deterministic { mean } => *mean,
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
            Self::Histogram { edges, weights } => {
                let total: f64 = weights.iter().sum();
                weights.iter().zip(edges.windows(2)).map(|(w, e)| w * 0.5 * (e[0] + e[1])).sum::<f64>() / total
            }
        }
    }

    /// Whether the family meets the integrability hypothesis on the pausing law.
    pub fn meets_integrability(&self) -> bool {
        !matches!(self, Self::Deterministic { .. })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            Self::Exponential { mean } => 1.0 - (-x / mean).exp(),
            Self::Gamma { shape, mean } => {
                GammaLaw::new(*shape, shape / mean).expect("validated").cdf(x)
            }
            Self::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Self::Deterministic { mean } => f64::from(u8::from(x >= *mean)),
            Self::Histogram { edges, weights } => {
                let total: f64 = weights.iter().sum();
                let mut acc = 0.0;
                for (w, e) in weights.iter().zip(edges.windows(2)) {
                    acc += w * ((x - e[0]) / (e[1] - e[0])).clamp(0.0, 1.0);
                }
                acc / total
            }
        }
    }

    /// Smallest `x` with survival below `eps`.
    fn support_end(&self, eps: f64) -> f64 {
        match self {
            Self::Uniform { hi, .. } => *hi,
            Self::Deterministic { mean } => *mean,
            Self::Histogram { edges, .. } => *edges.last().expect("validated"),
            _ => {
                let mut x = self.mean();
                while 1.0 - self.cdf(x) > eps {
                    x *= 1.5;
                }
                x
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Exponential { mean } => Exp::new(1.0 / mean).expect("validated").sample(rng),
            Self::Gamma { shape, mean } => GammaDist::new(*shape, mean / shape).expect("validated").sample(rng),
            Self::Uniform { lo, hi } => rng.gen_range(*lo..*hi),
            Self::Deterministic { mean } => *mean,
            Self::Histogram { edges, weights } => {
                let total: f64 = weights.iter().sum();
                let mut u = rng.gen::<f64>() * total;
                let mut bin = weights.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    if u < *w {
                        bin = i;
                        break;
                    }
                    u -= w;
                }
                rng.gen_range(edges[bin]..edges[bin + 1])
            }
        }
    }
}

/// Distribution of the starting label.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum InitialSampler {
    Plancherel,
    Delta(NazarovLabel),
    /// Uniform strict partition of `n`, then a uniform sign.
    UniformStrict,
}

impl FromStr for InitialSampler {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "plancherel" => Ok(Self::Plancherel),
            "uniform" | "uniform-strict" => Ok(Self::UniformStrict),
            _ => {
                let body = s
                    .strip_prefix("delta:")
                    .ok_or_else(|| Error::InvalidInput(format!("unknown initial sampler '{s}'")))?;
                let (parts, gamma) = match body.rsplit_once(':') {
                    Some((p, "-")) | Some((p, "-1")) => (p, Gamma::Minus),
                    Some((p, "+")) | Some((p, "+1")) => (p, Gamma::Plus),
                    _ => (body, Gamma::Plus),
                };
                Ok(Self::Delta(NazarovLabel::new(parts.parse()?, gamma)))
            }
        }
    }
}

const UNIFORM_STRICT_LIMIT: u32 = 2000;

/// Sampler for uniform strict partitions via `Q(n, k) = Q(n, k-1) + Q(n-k, k-1)`,
/// where `Q(n, k)` counts strict partitions of `n` with parts at most `k`.
pub struct UniformStrictSampler {
    n: u32,
    table: Vec<Vec<f64>>,
}

impl UniformStrictSampler {
    pub fn new(n: u32) -> Result<Self> {
        if n > UNIFORM_STRICT_LIMIT {
            return Err(Error::SizeLimit { what: "uniform strict sampler", n: n as usize, limit: UNIFORM_STRICT_LIMIT as usize });
        }
        let n_us = n as usize;
        let mut table = vec![vec![0.0; n_us + 1]; n_us + 1];
        for row in table.iter_mut() {
            row[0] = 0.0;
        }
        for k in 0..=n_us {
            table[0][k] = 1.0;
        }
        for m in 1..=n_us {
            for k in 1..=n_us {
                table[m][k] = table[m][k - 1] + if k <= m { table[m - k][k - 1] } else { 0.0 };
            }
        }
        Ok(Self { n, table })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> StrictPartition {
        let (mut m, mut k) = (self.n as usize, self.n as usize);
        let mut parts = Vec::new();
        while m > 0 {
            let with = if k <= m { self.table[m - k][k - 1] } else { 0.0 };
            if rng.gen::<f64>() * self.table[m][k] < with {
                parts.push(k as u32);
                m -= k;
            }
            k -= 1;
        }
        StrictPartition::new(parts).expect("strictly decreasing by construction")
    }
}

/// One replica's end state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleRecord {
    pub replica: usize,
    pub label: NazarovLabel,
    pub jumps: u64,
    pub t: f64,
    /// `M_2, M_4, M_6` of the transition measure of `D(λ)` rescaled by `√(2n)`.
    pub moments: [f64; 3],
}

/// Exact rescaled even moments `M_2, M_4, M_6` of the transition measure of `D(λ)`.
pub fn rescaled_moments(lambda: &StrictPartition) -> [Rational; 3] {
    let n = lambda.n() as i64;
    let tau = RayleighData::of(&doubled_profile(lambda)).moments(6);
    let m = markov_series(&tau, 6);
    let scale = |k: u32| num_traits::pow(int(2 * n), k as usize);
    [&m[2] / scale(1), &m[4] / scale(2), &m[6] / scale(3)]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub n: u32,
    pub t: f64,
    pub pausing: PausingSpec,
    pub initial: InitialSampler,
    pub replicas: usize,
    pub seed: u64,
}

/// Runs independent replicas; replica `i` uses stream `i` of a generator seeded by `seed`.
pub fn simulate(cfg: &SimulationConfig) -> Result<Vec<SampleRecord>> {
    if cfg.n < 2 {
        return Err(Error::InvalidInput("simulation needs n >= 2".into()));
    }
    if !(cfg.t >= 0.0 && cfg.t.is_finite()) {
        return Err(Error::InvalidInput(format!("time must be finite and nonnegative, got {}", cfg.t)));
    }
    cfg.pausing.validate()?;
    if let InitialSampler::Delta(label) = &cfg.initial {
        if label.n() != cfg.n {
            return Err(Error::InvalidInput(format!("initial label {label} is not at level {}", cfg.n)));
        }
    }
    let uniform = match cfg.initial {
        InitialSampler::UniformStrict => Some(UniformStrictSampler::new(cfg.n)?),
        _ => None,
    };
    let horizon = cfg.t * cfg.n as f64;
    (0..cfg.replicas)
        .into_par_iter()
        .map(|replica| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(replica as u64);
            let mut label = match &cfg.initial {
                InitialSampler::Plancherel => sample_plancherel(cfg.n, &mut rng)?,
                InitialSampler::Delta(label) => label.clone(),
                InitialSampler::UniformStrict => {
                    let lambda = uniform.as_ref().expect("built above").sample(&mut rng);
                    let gamma = if rng.gen::<bool>() { Gamma::Plus } else { Gamma::Minus };
                    NazarovLabel::new(lambda, gamma)
                }
            };
            let mut elapsed = 0.0;
            let mut jumps = 0u64;
            loop {
                elapsed += cfg.pausing.sample(&mut rng);
                if elapsed > horizon {
                    break;
                }
                jumps += 1;
            }
            for _ in 0..jumps {
                label = chain_step(&label, &mut rng);
            }
            let moments = rescaled_moments(&label.lambda).map(|m| to_f64(&m));
            Ok(SampleRecord { replica, label, jumps, t: cfg.t, moments })
        })
        .collect()
}

pub fn records_csv(records: &[SampleRecord]) -> String {
    let mut out = String::from("replica,lambda,gamma,jumps,t,m2,m4,m6\n");
    for r in records {
        out.push_str(&format!(
            "{},\"{}\",{},{},{:.12},{:.12},{:.12},{:.12}\n",
            r.replica,
            r.label.lambda,
            r.label.gamma.sign(),
            r.jumps,
            r.t,
            r.moments[0],
            r.moments[1],
            r.moments[2]
        ));
    }
    out
}

/// Moments `M_0..M_order` of the limit shape at time `t` started from cumulants `r0`.
pub fn predicted_moments(r0: &CumulantVector<Rational>, t: f64, m: f64) -> Result<Vec<f64>> {
    let q = (-t / m).exp();
    Ok(predicted_moments_formal(r0)?.iter().map(|p| p.eval_f64(q)).collect())
}

/// [`predicted_moments`] as polynomials in `q = e^{-t/m}`.
pub fn predicted_moments_formal(r0: &CumulantVector<Rational>) -> Result<Vec<Poly>> {
    let evolved = evolve_formal(r0)?;
    Ok(cumulants_to_moments(&evolved))
}

/// Coefficients of `m∂_t G + G ∂_z G - G - (1/G) ∂_z G` in powers of `1/z`.
#[derive(Clone, Debug)]
pub struct PdeResidual {
    /// `coefficients[j]` multiplies `z^{-j}`.
    pub coefficients: Vec<Poly>,
}

impl PdeResidual {
    pub fn vanishes(&self) -> bool {
        self.coefficients.iter().all(num_traits::Zero::is_zero)
    }

    pub fn first_nonzero(&self) -> Option<usize> {
        self.coefficients.iter().position(|c| !num_traits::Zero::is_zero(c))
    }
}

/// Builds `G(q, z)` from the evolved cumulants and returns the residual through `z^{-order_z}`.
///
/// With `w = 1/z` and `G = w M(w)`: `m∂_t = -q∂_q` and `∂_z = -w² ∂_w`, so the residual is
/// `-q∂_q(wM) - w³ M (M + wM') - wM + w + w² M'/M`. Moments through `M_{order_z - 1}` fix it exactly through `w^{order_z}`.
pub fn pde_residual(r0: &CumulantVector<Rational>, order_z: usize) -> Result<PdeResidual> {
    if order_z < 2 {
        return Err(Error::InvalidInput("residual order must be at least 2".into()));
    }
    let need = order_z - 1;
    let mut values = r0.values().to_vec();
    values.resize(need.max(2), Rational::from_integer(0.into()));
    values.truncate(need.max(2));
    let moments = predicted_moments_formal(&CumulantVector::new(values))?;
    let order = order_z + 1;
    let m = PowerSeries::new(moments[..=need].to_vec(), order);
    let w = PowerSeries::<Poly>::monomial(Poly::constant(int(1)), 1, order);
    let g = m.shift(1);
    let dm = m.derivative();
    let time = g.map(|p| p.euler_derivative()).neg();
    let m_plus = m.add(&w.mul(&dm));
    let transport = m.mul(&m_plus).shift(3).neg();
    let inverse = w.mul(&w).mul(&dm).mul(&m.recip().expect("M_0 = 1"));
    let total = time.add(&transport).sub(&g).add(&w).add(&inverse);
    Ok(PdeResidual { coefficients: (0..=order_z).map(|j| total.coeff(j)).collect() })
}

/// `G² - zG + 1` for the given moments, in powers of `1/z`, through `z^{-order_z}`.
pub fn stationary_residual(moments: &[Rational], order_z: usize) -> Vec<Rational> {
    let g = stieltjes_series(moments).truncate(order_z + 2);
    // zG = M(w); G² = w² M²
    let m = PowerSeries::new(g.coeffs().iter().skip(1).cloned().collect(), order_z);
    let one = PowerSeries::<Rational>::one(order_z);
    let res = m.mul(&m).shift(2).sub(&m).add(&one);
    (0..=order_z).map(|j| res.coeff(j)).collect()
}

/// Which method produced an `a(k, t, n)` value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AFactorEngine {
    /// `E[β^{Poisson(s/m)}]` in closed form.
    ClosedForm,
    /// Integer-shape gamma: `N_s = ⌊Poisson(a s / m) / a⌋`.
    PoissonSum,
    /// `N_s = ⌊s/m⌋`.
    Deterministic,
    /// Literal sum over `j ≤ j_max` of grid convolutions.
    GridSeries,
    /// Discounted renewal recursion on the grid.
    GridRenewal,
}

#[derive(Clone, Debug, Serialize)]
pub struct AFactorReport {
    pub value: f64,
    /// `e^{-kt/m}`.
    pub limit: f64,
    pub deviation: f64,
    pub engine: AFactorEngine,
    /// `P(N_s > j_max)`; estimated by a normal approximation for the renewal engine.
    pub tail_mass: f64,
    pub grid_step: Option<f64>,
    pub warning: Option<String>,
}

pub const TAIL_WARNING: f64 = 1e-8;
const GRID_BUDGET: f64 = 4e8;

/// `a(k,t,n) = Σ_{j ≤ j_max} (1 - k/n)^j P(N_{tn} = j)`.
pub fn a_factor(k: u32, t: f64, n: u32, psi: &PausingSpec, j_max: u64) -> Result<AFactorReport> {
    psi.validate()?;
    if k > n || n == 0 || !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("need 0 <= k <= n, t >= 0 (k = {k}, n = {n}, t = {t})")));
    }
    let m = psi.mean();
    let s = t * n as f64;
    let beta = 1.0 - k as f64 / n as f64;
    let limit = (-(k as f64) * t / m).exp();
    let (value, tail_mass, engine, grid_step) = match psi {
        PausingSpec::Exponential { mean } => {
            let (_, tail) = poisson_discount(s / mean, 1, beta, j_max);
            (limit, tail, AFactorEngine::ClosedForm, None)
        }
        PausingSpec::Gamma { shape, mean } if shape.fract() == 0.0 && *shape <= 64.0 => {
            let a = *shape as u64;
            let (value, tail) = poisson_discount(s * a as f64 / mean, a, beta, j_max);
            (value, tail, AFactorEngine::PoissonSum, None)
        }
        PausingSpec::Deterministic { mean } => {
            let jumps = (s / mean + 1e-12).floor() as u64;
            let tail = if jumps > j_max { 1.0 } else { 0.0 };
            let value = if jumps > j_max { 0.0 } else { beta.powi(jumps as i32) };
            (value, tail, AFactorEngine::Deterministic, None)
        }
        _ => {
            let grid = grid_a_factor(s, psi, beta, j_max)?;
            (grid.0, grid.1, grid.2, Some(grid.3))
        }
    };
    let mut warning = (tail_mass > TAIL_WARNING)
        .then(|| format!("truncation at j_max = {j_max} leaves tail mass {tail_mass:.3e}"));
    if !psi.meets_integrability() {
        let note = "pausing law outside the integrability hypothesis".to_string();
        warning = Some(warning.map_or(note.clone(), |w| format!("{w}; {note}")));
    }
    Ok(AFactorReport { value, limit, deviation: (value - limit).abs(), engine, tail_mass, grid_step, warning })
}

/// `Σ_{p} P(Poisson(λ) = p) β^{⌊p/a⌋}` over `⌊p/a⌋ ≤ j_max`, and the excluded mass.
fn poisson_discount(lambda: f64, a: u64, beta: f64, j_max: u64) -> (f64, f64) {
    if lambda == 0.0 {
        return (1.0, 0.0);
    }
    let width = 12.0 * lambda.sqrt() + 40.0;
    let lo = (lambda - width).max(0.0).floor() as u64;
    let hi = (lambda + width).ceil() as u64;
    let ln_lambda = lambda.ln();
    let mut ln_fact: f64 = (2..=lo).map(|i| (i as f64).ln()).sum();
    let (mut value, mut kept) = (0.0, 0.0);
    for p in lo..=hi {
        if p > lo {
            ln_fact += (p as f64).ln();
        }
        let j = p / a;
        if j > j_max {
            break;
        }
        let pmf = (-lambda + p as f64 * ln_lambda - ln_fact).exp();
        kept += pmf;
        value += pmf * beta.powi(j as i32);
    }
    (value, (1.0 - kept).max(0.0))
}

/// Grid engines for general pausing laws. Returns `(value, tail, engine, step)`.
fn grid_a_factor(s: f64, psi: &PausingSpec, beta: f64, j_max: u64) -> Result<(f64, f64, AFactorEngine, f64)> {
    let m = psi.mean();
    if s == 0.0 {
        return Ok((1.0, 0.0, AFactorEngine::GridSeries, m / 2000.0));
    }
    let support = psi.support_end(1e-13);
    let mut h = m / 2000.0;
    let cost = |h: f64| (s / h) * (support / h);
    if cost(h) > GRID_BUDGET {
        h = (s * support / GRID_BUDGET).sqrt();
    }
    let steps = (s / h).round() as usize;
    let h = s / steps as f64;
    let len = ((support / h).ceil() as usize + 1).min(steps + 1);
    // midpoint cells: mass of ((i-1/2)h, (i+1/2)h] sits at ih
    let f: Vec<f64> = (0..len)
        .map(|i| psi.cdf((i as f64 + 0.5) * h) - if i == 0 { 0.0 } else { psi.cdf((i as f64 - 0.5) * h) })
        .collect();
    let survival: Vec<f64> = (0..=steps).map(|d| 1.0 - psi.cdf(d as f64 * h)).collect();
    let pair = |u: &[f64]| -> f64 { (0..=steps).map(|i| u[i] * survival[steps - i]).sum() };
    let series_cost = j_max as f64 * (steps as f64) * len as f64;
    if series_cost <= GRID_BUDGET {
        let mut v = vec![0.0; steps + 1];
        v[0] = 1.0;
        let (mut value, mut weight) = (0.0, 1.0);
        for _ in 0..=j_max {
            value += weight * pair(&v);
            v = convolve_truncated(&v, &f, steps);
            weight *= beta;
        }
        let tail: f64 = v.iter().sum();
        return Ok((value, tail.clamp(0.0, 1.0), AFactorEngine::GridSeries, h));
    }
    let mut u = vec![0.0; steps + 1];
    let denom = 1.0 - beta * f[0];
    for i in 0..=steps {
        let mut acc = if i == 0 { 1.0 } else { 0.0 };
        for l in 1..len.min(i + 1) {
            acc += beta * f[l] * u[i - l];
        }
        u[i] = acc / denom;
    }
    let variance: f64 = f.iter().enumerate().map(|(i, p)| p * (i as f64 * h - m).powi(2)).sum();
    let jumps_mean = s / m;
    let jumps_sd = (s * variance / m.powi(3)).sqrt().max(1e-300);
    let z = (j_max as f64 + 0.5 - jumps_mean) / jumps_sd;
    let tail = 0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2);
    Ok((pair(&u), tail, AFactorEngine::GridRenewal, h))
}

fn convolve_truncated(a: &[f64], f: &[f64], steps: usize) -> Vec<f64> {
    let mut out = vec![0.0; steps + 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (l, &y) in f.iter().enumerate().take(steps + 1 - i) {
            out[i + l] += x * y;
        }
    }
    out
}

/// Empirical moments against the limit-shape prediction.
#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationRow {
    pub order: u32,
    pub mean: f64,
    pub variance: f64,
    pub predicted: Option<f64>,
    pub z_score: Option<f64>,
}

pub fn concentration_report(
    samples: &[SampleRecord],
    r0: Option<&CumulantVector<Rational>>,
    t: f64,
    m: f64,
) -> Result<Vec<ConcentrationRow>> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("no samples".into()));
    }
    let predicted = r0.map(|r| predicted_moments(r, t, m)).transpose()?;
    let count = samples.len() as f64;
    Ok((0..3)
        .map(|i| {
            let order = 2 * (i as u32 + 1);
            let mean = samples.iter().map(|s| s.moments[i]).sum::<f64>() / count;
            let variance = samples.iter().map(|s| (s.moments[i] - mean).powi(2)).sum::<f64>() / (count - 1.0).max(1.0);
            let pred = predicted.as_ref().and_then(|p| p.get(order as usize).copied());
            let z_score = pred.map(|p| (mean - p) / (variance / count).sqrt().max(1e-300));
            ConcentrationRow { order, mean, variance, predicted: pred, z_score }
        })
        .collect())
}

/// Plain-text `key=value` run description for `simulate`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub simulation: SimulationConfig,
}

pub const RUN_CONFIG_KEYS: [&str; 10] =
    ["n", "t", "m", "psi.family", "psi.params", "psi.edges", "psi.weights", "replicas", "seed", "initial"];

impl RunConfig {
    /// Parses `key=value` lines; `#` starts a comment. Unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::InvalidInput(format!("expected key=value, got '{line}'")))?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Self::from_map(&map)
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(bad) = map.keys().find(|k| !RUN_CONFIG_KEYS.contains(&k.as_str())) {
            return Err(Error::InvalidInput(format!("unknown config key '{bad}'")));
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        let num = |k: &str, default: f64| -> Result<f64> {
            get(k).map_or(Ok(default), |v| v.parse().map_err(|_| Error::InvalidInput(format!("bad number for {k}: '{v}'"))))
        };
        let list = |k: &str| -> Result<Vec<f64>> {
            get(k)
                .unwrap_or("")
                .split(',')
                .filter(|x| !x.trim().is_empty())
                .map(|x| x.trim().parse().map_err(|_| Error::InvalidInput(format!("bad number in {k}: '{x}'"))))
                .collect()
        };
        let pausing = PausingSpec::from_family(
            get("psi.family").unwrap_or("exponential"),
            &list("psi.params")?,
            num("m", 1.0)?,
            list("psi.edges")?,
            list("psi.weights")?,
        )?;
        let simulation = SimulationConfig {
            n: num("n", 100.0)? as u32,
            t: num("t", 1.0)?,
            pausing,
            initial: get("initial").unwrap_or("plancherel").parse()?,
            replicas: num("replicas", 100.0)? as usize,
            seed: get("seed").map_or(Ok(0), |v| v.parse().map_err(|_| Error::InvalidInput(format!("bad seed '{v}'"))))?,
        };
        Ok(Self { simulation })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::plancherel_spin;
    use crate::series::rat;
    use proptest::prelude::*;

    fn semicircle(order: usize) -> CumulantVector<Rational> {
        CumulantVector::semicircle(int(1), order)
    }

    #[test]
    fn exponential_closed_form() {
        let psi = PausingSpec::Exponential { mean: 1.5 };
        for k in [2, 3, 5] {
            let r = a_factor(k, 1.0, 1000, &psi, 100_000).unwrap();
            assert_eq!(r.engine, AFactorEngine::ClosedForm);
            assert_eq!(r.value, (-(k as f64) / 1.5).exp());
        }
        assert_eq!(a_factor(0, 1.0, 1000, &psi, 100_000).unwrap().value, 1.0);
    }

    #[test]
    fn gamma_engines_agree() {
        let psi = PausingSpec::Gamma { shape: 2.0, mean: 1.0 };
        for k in [2, 3, 5] {
            let exact = a_factor(k, 1.0, 10_000, &psi, 1_000_000).unwrap();
            assert_eq!(exact.engine, AFactorEngine::PoissonSum);
            assert!(exact.deviation < 1e-3, "k = {k}: {}", exact.value);
        }
        // grid engine against the Erlang sum
        let a = a_factor(3, 1.0, 200, &PausingSpec::Gamma { shape: 2.0, mean: 1.0 }, 10_000).unwrap();
        let g = grid_a_factor(200.0, &PausingSpec::Gamma { shape: 2.0, mean: 1.0 }, 1.0 - 3.0 / 200.0, 10_000).unwrap();
        assert!((a.value - g.0).abs() < 2e-3, "{} vs {}", a.value, g.0);
    }

    #[test]
    fn grid_series_matches_renewal() {
        let psi = PausingSpec::Uniform { lo: 0.5, hi: 1.5 };
        let series = grid_a_factor(2.0, &psi, 0.9, 12).unwrap();
        let renewal = grid_a_factor(2.0, &psi, 0.9, 10_000_000_000).unwrap();
        assert_eq!(series.2, AFactorEngine::GridSeries);
        assert_eq!(renewal.2, AFactorEngine::GridRenewal);
        assert!((series.0 - renewal.0).abs() < 1e-9);
        assert!(series.1 < 1e-12);
    }

    #[test]
    fn deterministic_is_flagged() {
        let r = a_factor(2, 1.0, 10, &PausingSpec::Deterministic { mean: 1.0 }, 100).unwrap();
        assert!((r.value - 0.8f64.powi(10)).abs() < 1e-15);
        assert!(r.warning.is_some());
    }

    #[test]
    fn tail_warning() {
        let r = a_factor(2, 1.0, 100, &PausingSpec::Exponential { mean: 1.0 }, 50).unwrap();
        assert!(r.tail_mass > TAIL_WARNING);
        assert!(r.warning.is_some());
    }

    #[test]
    fn pde_semicircle_and_stationary() {
        let res = pde_residual(&semicircle(12), 12).unwrap();
        assert!(res.vanishes());
        let moments = cumulants_to_moments(&semicircle(12));
        assert!(stationary_residual(&moments, 12).iter().all(num_traits::Zero::is_zero));
    }

    #[test]
    fn stationary_check_rejects_other_laws() {
        let r0 = CumulantVector::new(vec![int(0), int(1), int(0), int(2)]);
        let res = pde_residual(&r0, 10).unwrap();
        assert!(res.vanishes());
        let moments = vec![int(1), int(0), int(1), int(0), int(3)];
        assert!(stationary_residual(&moments, 4).iter().any(|c| !num_traits::Zero::is_zero(c)));
    }

    #[test]
    fn predicted_semicircle_is_constant() {
        for t in [0.0, 0.5, 3.0] {
            let m = predicted_moments(&semicircle(8), t, 1.0).unwrap();
            assert!((m[2] - 1.0).abs() < 1e-12 && (m[4] - 2.0).abs() < 1e-12 && (m[6] - 5.0).abs() < 1e-12);
        }
        let r0 = CumulantVector::new(vec![int(0), int(1), int(0), rat(3, 2)]);
        let late = predicted_moments(&r0, 60.0, 1.0).unwrap();
        assert!((late[4] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rescaled_moment_two_is_one() {
        for lambda in crate::spcore::enumerate_strict_partitions(12) {
            assert_eq!(rescaled_moments(&lambda)[0], int(1));
        }
    }

    #[test]
    fn zero_time_keeps_start() {
        let label = NazarovLabel::new("(4,2,1)".parse().unwrap(), Gamma::Plus);
        let cfg = SimulationConfig {
            n: 7,
            t: 0.0,
            pausing: PausingSpec::Exponential { mean: 1.0 },
            initial: InitialSampler::Delta(label.clone()),
            replicas: 20,
            seed: 1,
        };
        assert!(simulate(&cfg).unwrap().iter().all(|r| r.label == label && r.jumps == 0));
    }

    #[test]
    fn determinism_and_poisson_jumps() {
        let cfg = SimulationConfig {
            n: 20,
            t: 1.0,
            pausing: PausingSpec::Exponential { mean: 2.0 },
            initial: InitialSampler::Plancherel,
            replicas: 2000,
            seed: 42,
        };
        let a = simulate(&cfg).unwrap();
        assert_eq!(a, simulate(&cfg).unwrap());
        let mean = a.iter().map(|r| r.jumps as f64).sum::<f64>() / a.len() as f64;
        let lambda = 10.0;
        assert!((mean - lambda).abs() < 3.0 * (lambda / a.len() as f64).sqrt());
    }

    #[test]
    fn stationarity_chi_square() {
        let n = 5;
        let cfg = SimulationConfig {
            n,
            t: 1.0,
            pausing: PausingSpec::Exponential { mean: 1.0 },
            initial: InitialSampler::Plancherel,
            replicas: 100_000,
            seed: 7,
        };
        let records = simulate(&cfg).unwrap();
        let mut counts: BTreeMap<NazarovLabel, f64> = BTreeMap::new();
        for r in &records {
            *counts.entry(r.label.clone()).or_default() += 1.0;
        }
        let total = records.len() as f64;
        let law = plancherel_spin(n);
        let chi2: f64 = law
            .iter()
            .map(|(l, p)| {
                let e = to_f64(p) * total;
                (counts.get(l).copied().unwrap_or(0.0) - e).powi(2) / e
            })
            .sum();
        // df = |labels| - 1 = 3; P(χ² > 16.3) ≈ 0.001
        assert!(chi2 < 16.3, "chi2 = {chi2}");
    }

    #[test]
    fn uniform_strict_sampler_is_uniform() {
        let sampler = UniformStrictSampler::new(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts: BTreeMap<StrictPartition, f64> = BTreeMap::new();
        let draws = 60_000;
        for _ in 0..draws {
            *counts.entry(sampler.sample(&mut rng)).or_default() += 1.0;
        }
        assert_eq!(counts.len(), 6);
        for c in counts.values() {
            assert!((c / draws as f64 - 1.0 / 6.0).abs() < 0.01);
        }
    }

    #[test]
    fn run_config_parsing() {
        let cfg = RunConfig::parse("n=50\nt=0.5\npsi.family=gamma\npsi.params=3\nreplicas=10\nseed=9\ninitial=delta:(5,4,3,2,1,...)").err();
        assert!(cfg.is_some());
        let ok = RunConfig::parse("n=10 # size\nm=2\npsi.family=uniform\npsi.params=0.5\ninitial=delta:(4,3,2,1)").unwrap();
        assert_eq!(ok.simulation.pausing, PausingSpec::Uniform { lo: 1.0, hi: 3.0 });
        assert!(RunConfig::parse("bogus=1").is_err());
        assert!(RunConfig::parse("psi.family=cauchy").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn pde_vanishes_for_random_even_data(vals in proptest::collection::vec(-20i64..20, 5)) {
            let mut r = vec![int(0), int(1)];
            for (i, v) in vals.iter().enumerate() {
                r.push(int(0));
                r.push(rat(*v, (i as i64) + 2));
            }
            let res = pde_residual(&CumulantVector::new(r), 10).unwrap();
            prop_assert!(res.vanishes());
        }
    }
}
