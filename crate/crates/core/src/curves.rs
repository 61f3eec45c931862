//! Limit curves and worked ensembles: the VKLS and Vershik shapes, Bernoulli
//! moments and cumulants of the Vershik Rayleigh measure, Thoma-type parameter
//! ensembles and their evolved R-transforms, the uniform-parameter density, and
//! a numeric inversion from moments back to a profile.

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::freeprob::{cumulants_to_moments, evolve, CumulantVector};
use crate::measures::FiniteMeasure;
use crate::series::{int, rat, to_f64, Coeff, Poly, PowerSeries, Rational};

pub fn vkls(x: f64) -> f64 {
    if x.abs() <= 2.0 {
        (2.0 / PI) * (x * (x / 2.0).asin() + (4.0 - x * x).sqrt())
    } else {
        x.abs()
    }
}

fn vershik_scale() -> f64 {
    PI / (2.0 * 6f64.sqrt())
}

/// `Ω_V(x) = (2√6/π) log(e^{a} + e^{-a})`, `a = πx/(2√6)`.
pub fn vershik(x: f64) -> f64 {
    let a = (vershik_scale() * x).abs();
    // log(e^a + e^-a) = a + log(1 + e^{-2a})
    (a + (-2.0 * a).exp().ln_1p()) / vershik_scale()
}

/// Density of the Vershik Rayleigh measure, `(π/√6)(e^{a} + e^{-a})^{-2}`.
pub fn vershik_density(x: f64) -> f64 {
    let a = (vershik_scale() * x).abs();
    let e = (-2.0 * a).exp();
    // (e^a + e^-a)^{-2} = e^{-2a} / (1 + e^{-2a})^2
    (PI / 6f64.sqrt()) * e / (1.0 + e).powi(2)
}

fn bernoulli_cache() -> &'static Mutex<Vec<Rational>> {
    static CACHE: OnceLock<Mutex<Vec<Rational>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(vec![Rational::one()]))
}

/// `B_j` from `t/(e^t - 1) = Σ B_n t^n/n!`, so `B_1 = -1/2`.
pub fn bernoulli(j: usize) -> Rational {
    let mut cache = bernoulli_cache().lock().expect("bernoulli cache poisoned");
    while cache.len() <= j {
        let n = cache.len();
        // Σ_{k<n+1} C(n+1, k) B_k = 0
        let mut binom = Rational::one();
        let mut acc = Rational::zero();
        for (k, b) in cache.iter().enumerate() {
            acc += &binom * b;
            binom = binom * int((n + 1 - k) as i64) / int(k as i64 + 1);
        }
        cache.push(-acc / int(n as i64 + 1));
    }
    cache[j].clone()
}

/// `M_{2k}(τ_V) = (2^{2k} - 2) 6^k |B_{2k}|`.
pub fn tau_v_moment(k: u32) -> Rational {
    let pow2 = num_traits::pow(int(2), 2 * k as usize);
    (pow2 - int(2)) * num_traits::pow(int(6), k as usize) * bernoulli(2 * k as usize).abs()
}

/// Lower and upper bounds `(1 - 2^{1-2k}) 2·6^k (2k)!/π^{2k}` and `2·6^k (2k)!/π^{2k}`.
pub fn tau_v_moment_bounds(k: u32) -> (f64, f64) {
    let fact: f64 = (1..=2 * k).map(f64::from).product();
    let upper = 2.0 * 6f64.powi(k as i32) * fact / PI.powi(2 * k as i32);
    (upper * (1.0 - 2f64.powi(1 - 2 * k as i32)), upper)
}

/// Numeric `∫ x^{2k} dτ_V` by double-exponential quadrature.
pub fn tau_v_moment_numeric(k: u32) -> f64 {
    let f = |x: f64| x.powi(2 * k as i32) * vershik_density(x);
    let cut = 40.0 + 8.0 * k as f64;
    2.0 * quadrature::double_exponential::integrate(f, 0.0, cut, 1e-14).integral
}

/// `R_{2k}(m_V) = (-1)^{k+1} 6^k Σ_l (2k-1)^{l-1}/l! Σ_{j_1+..+j_l=k} Π (2^{2j_i-1}-1) B_{2j_i} / j_i`.
pub fn vershik_cumulant(k: u32) -> Rational {
    let k = k as usize;
    // b(x) = Σ_j (2^{2j-1}-1) B_{2j}/j x^j; the inner sum is [x^k] b^l
    let b = PowerSeries::new(
        (0..=k)
            .map(|j| {
                if j == 0 {
                    Rational::zero()
                } else {
                    (num_traits::pow(int(2), 2 * j - 1) - int(1)) * bernoulli(2 * j) / int(j as i64)
                }
            })
            .collect(),
        k,
    );
    let mut power = PowerSeries::one(k);
    let mut fact = Rational::one();
    let mut total = Rational::zero();
    for l in 1..=k {
        power = power.mul(&b);
        fact *= int(l as i64);
        total += num_traits::pow(int(2 * k as i64 - 1), l - 1) / &fact * power.coeff(k);
    }
    let sign = if k % 2 == 1 { int(1) } else { int(-1) };
    sign * num_traits::pow(int(6), k) * total
}

/// Largest `|R_{2k}|^{1/(2k)} / (2k)` for `k ≤ kmax`.
pub fn vershik_growth_constant(kmax: u32) -> f64 {
    (1..=kmax)
        .map(|k| to_f64(&vershik_cumulant(k)).abs().powf(1.0 / (2 * k) as f64) / (2 * k) as f64)
        .fold(0.0, f64::max)
}

/// A point of the parameter simplex: nonincreasing, nonnegative, total at most 1.
#[derive(Clone, Debug, PartialEq)]
pub enum ThomaAlpha {
    Finite(Vec<Rational>),
    /// `α_i = (1-q) q^{i-1}`.
    Geometric(Rational),
}

impl ThomaAlpha {
    pub fn finite(alpha: Vec<Rational>) -> Result<Self> {
        if alpha.iter().any(|a| a.is_negative()) || alpha.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput("α must be nonnegative and nonincreasing".into()));
        }
        if alpha.iter().fold(Rational::zero(), |s, a| s + a) > Rational::one() {
            return Err(Error::InvalidInput("α must sum to at most 1".into()));
        }
        Ok(Self::Finite(alpha))
    }

    pub fn geometric(q: Rational) -> Result<Self> {
        if !(q.is_positive() && q <= Rational::one()) {
            return Err(Error::InvalidInput(format!("geometric α needs 0 < q <= 1, got {q}")));
        }
        Ok(Self::Geometric(q))
    }

    /// `N` entries equal to `1/N`.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::finite(vec![rat(1, n as i64); n])
    }

    /// `p_k(α) = Σ α_i^k`, `k ≥ 1`.
    pub fn power_sum(&self, k: u32) -> Rational {
        match self {
            Self::Finite(alpha) => alpha.iter().map(|a| num_traits::pow(a.clone(), k as usize)).sum(),
            Self::Geometric(q) => {
                if q.is_one() {
                    return Rational::zero();
                }
                let one = Rational::one();
                num_traits::pow(&one - q, k as usize) / (&one - num_traits::pow(q.clone(), k as usize))
            }
        }
    }
}

/// `M_{2k}(ν_α) = Σ α_i^{2k+1}` (`M_0 = 1`).
pub fn thoma_moments(alpha: &ThomaAlpha, k: u32) -> Rational {
    if k == 0 {
        Rational::one()
    } else {
        alpha.power_sum(2 * k + 1)
    }
}

/// `f_α([1..k]) = 2^{-(k-1)/2} Σ α_i^k` for odd `k ≥ 3`.
pub fn f_alpha(alpha: &ThomaAlpha, k: u32) -> Result<Rational> {
    if k < 3 || k.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("cycle length must be odd and >= 3, got {k}")));
    }
    Ok(alpha.power_sum(k) / num_traits::pow(int(2), (k as usize - 1) / 2))
}

/// Compactly supported symmetric law driving the initial cumulants `r_{k+1} = M_{k-1}(ν)`.
#[derive(Clone, Debug, PartialEq)]
pub enum DrivingMeasure {
    Finite(FiniteMeasure),
    /// Uniform on `[-r, r]`.
    Uniform(Rational),
}

impl DrivingMeasure {
    pub fn moment(&self, j: u32) -> Rational {
        match self {
            Self::Finite(m) => m.moment(j),
            Self::Uniform(r) => {
                if j % 2 == 1 {
                    Rational::zero()
                } else {
                    num_traits::pow(r.clone(), j as usize) / int(j as i64 + 1)
                }
            }
        }
    }

    /// `R_1..R_order` at time zero: `R_1 = 0`, `R_{k+1} = M_{k-1}(ν)`.
    pub fn initial_cumulants(&self, order: usize) -> CumulantVector<Rational> {
        CumulantVector::new((1..=order).map(|k| if k == 1 { Rational::zero() } else { self.moment(k as u32 - 2) }).collect())
    }
}

/// Series in `ζ` (coefficients of `ζ^0..ζ^order`, polynomial in `q = e^{-t/m}`) of
/// `∫ ζ(1 - (1-q)(qζx)²)/(1 - (qζx)²) ν(dx) = ζ + Σ_{j≥1} q^{2j+1} M_{2j}(ν) ζ^{2j+1}`.
pub fn r_transform_evolved(nu: &DrivingMeasure, order: usize) -> Vec<Poly> {
    let mut out = vec![Poly::zero(); order + 1];
    if order >= 1 {
        out[1] = Poly::constant(nu.moment(0));
    }
    let mut j = 1;
    while 2 * j < order {
        out[2 * j + 1] = Poly::monomial(nu.moment(2 * j as u32), 2 * j + 1);
        j += 1;
    }
    out
}

/// `(1-q)ζ + (1/2r) log((1 + rqζ)/(1 - rqζ))` expanded through `ζ^order`.
pub fn r_transform_uniform_closed(r: &Rational, order: usize) -> Vec<Poly> {
    let rq = Poly::monomial(r.clone(), 1);
    let one = Poly::one();
    let plus = PowerSeries::new(vec![one.clone(), rq.clone()], order);
    let minus = PowerSeries::new(vec![one.clone(), -rq], order);
    let logs = plus.log().expect("unit constant").sub(&minus.log().expect("unit constant"));
    let half_inv_r = Rational::one() / (int(2) * r);
    let mut series = logs.scale(&half_inv_r);
    let linear = PowerSeries::monomial(one - Poly::q(), 1, order);
    series = series.add(&linear);
    (0..=order).map(|k| series.coeff(k)).collect()
}

/// R-transform coefficients of the evolved cumulants: `ζ^{k-1}` carries `R_k`.
pub fn r_transform_from_cumulants(r: &CumulantVector<Poly>, order: usize) -> Vec<Poly> {
    (0..=order).map(|k| r.get(k + 1)).collect()
}

/// `c² w² M³ + (1-c²) w² M² - M + 1` for `ζ = G(z) = wM(w)` built from `R(ζ) = ζ/(1 - c²ζ²)`,
/// i.e. `c² z ζ³ + (1-c²) ζ² - zζ + 1` after multiplying through by `w`; coefficients of `w^0..w^order`.
pub fn uniform_cubic_residual(c: &Rational, order: usize) -> Vec<Rational> {
    let nu = DrivingMeasure::Finite(FiniteMeasure::symmetric_pair(c.clone()));
    let moments = cumulants_to_moments(&nu.initial_cumulants(order));
    let m = PowerSeries::new(moments, order);
    let c2 = c * c;
    let m2 = m.mul(&m);
    let res = m2.mul(&m).shift(2).scale(&c2).add(&m2.shift(2).scale(&(Rational::one() - &c2))).sub(&m).add(&PowerSeries::one(order));
    (0..=order).map(|k| res.coeff(k)).collect()
}

/// Support edge `3√3/2` of the uniform-parameter density at `c = 1`.
pub fn uniform_case_edge() -> f64 {
    1.5 * 3f64.sqrt()
}

/// Density `u(x)` of the transition measure for `R(ζ) = ζ/(1-ζ²)`, from
/// `x = (3√3/2) / ((4π²u² + 1) √(π²u² + 1))`.
///
/// With `s = π²u²` this is `(4s+1)²(s+1) = 27/(4x²)`; the cubic in `s` has a single
/// nonnegative root for `|x| ≤ 3√3/2`, taken by Cardano after `s = y - 1/2`.
pub fn density_uniform_case(x: f64) -> f64 {
    let x = x.abs();
    if x >= uniform_case_edge() || x == 0.0 {
        return if x == 0.0 { f64::INFINITY } else { 0.0 };
    }
    let k = 27.0 / (4.0 * x * x);
    // y³ - (3/16) y + (1/2 - K)/16 = 0
    let q0 = (0.5 - k) / 16.0;
    let disc = ((k - 0.5).powi(2) - 0.25) / 1024.0;
    let first = (-q0 / 2.0 + disc.max(0.0).sqrt()).cbrt();
    // the two Cardano terms multiply to -p/3 = 1/16
    let y = first + (1.0 / 16.0) / first;
    let s = (y - 0.5).max(0.0);
    s.sqrt() / PI
}

/// Inverse branch `x(u)` on `u ≥ 0`.
pub fn uniform_case_x_of_u(u: f64) -> f64 {
    let s = PI * PI * u * u;
    uniform_case_edge() / ((4.0 * s + 1.0) * (s + 1.0).sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityReport {
    pub mass: f64,
    pub second_moment: f64,
    /// Same quantities by integrating `x(u)` over `u` instead of `u(x)` over `x`.
    pub mass_by_layers: f64,
    pub second_moment_by_layers: f64,
    /// `M_2` from the cumulants `R_{2j} = 1`.
    pub second_moment_exact: f64,
}

pub fn density_uniform_report() -> DensityReport {
    use quadrature::double_exponential::integrate;
    let a = uniform_case_edge();
    let mass = 2.0 * integrate(density_uniform_case, 0.0, a, 1e-13).integral;
    let second_moment = 2.0 * integrate(|x| x * x * density_uniform_case(x), 0.0, a, 1e-13).integral;
    // ∫_0^a u(x) dx = ∫_0^∞ x(u) du and ∫_0^a x² u(x) dx = ∫_0^∞ x(u)³/3 du; map u = v/(1-v)
    let layered = |p: i32| {
        integrate(
            |v: f64| {
                if v >= 1.0 {
                    return 0.0;
                }
                let u = v / (1.0 - v);
                uniform_case_x_of_u(u).powi(p) / (1.0 - v).powi(2)
            },
            0.0,
            1.0,
            1e-14,
        )
        .integral
    };
    let nu = DrivingMeasure::Finite(FiniteMeasure::symmetric_pair(int(1)));
    let moments = cumulants_to_moments(&nu.initial_cumulants(2));
    DensityReport {
        mass,
        second_moment,
        mass_by_layers: 2.0 * layered(1),
        second_moment_by_layers: 2.0 * layered(3) / 3.0,
        second_moment_exact: to_f64(&moments[2]),
    }
}

/// Which closed form or reconstruction a sampled curve came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveTag {
    Vkls,
    Vershik,
    NumericGrid,
}

/// A profile sampled on a grid.
#[derive(Clone, Debug, Serialize)]
pub struct CurveFn {
    pub tag: CurveTag,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl CurveFn {
    pub fn sample(tag: CurveTag, grid: &[f64], f: impl Fn(f64) -> f64) -> Self {
        Self { tag, grid: grid.to_vec(), values: grid.iter().map(|&x| f(x)).collect() }
    }

    pub fn vkls(grid: &[f64]) -> Self {
        Self::sample(CurveTag::Vkls, grid, vkls)
    }

    pub fn vershik(grid: &[f64]) -> Self {
        Self::sample(CurveTag::Vershik, grid, vershik)
    }

    /// Largest `|ω(x)-ω(y)| - |x-y|` over neighbouring grid points (≤ 0 when 1-Lipschitz).
    pub fn lipschitz_excess(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, v)| (v[1] - v[0]).abs() - (x[1] - x[0]))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `|x| - ω(x)` (≤ 0 when `ω ≥ |x|`).
    pub fn below_abs_excess(&self) -> f64 {
        self.grid.iter().zip(&self.values).map(|(x, v)| x.abs() - v).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_distance(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.grid.iter().zip(&self.values).map(|(&x, v)| (v - f(x)).abs()).fold(0.0, f64::max)
    }

    pub fn sup_distance_on(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.grid
            .iter()
            .zip(&self.values)
            .filter(|(x, _)| (lo..=hi).contains(*x))
            .map(|(&x, v)| (v - f(x)).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value\n");
        for (x, v) in self.grid.iter().zip(&self.values) {
            out.push_str(&format!("{x:.12},{v:.12}\n"));
        }
        out
    }
}

pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + i as f64 * step).collect()
}

/// Jacobi data of a moment sequence by the Chebyshev algorithm: `G(z) = b_0/(z - a_0 - b_1/(z - a_1 - ⋯))`.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobiFraction {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Some `b_k` vanished, so the measure is finitely supported and the fraction is exact.
    pub terminated: bool,
}

pub fn jacobi_coefficients(moments: &[f64]) -> JacobiFraction {
    let n = moments.len() / 2;
    if n == 0 {
        return JacobiFraction { a: Vec::new(), b: Vec::new(), terminated: true };
    }
    let mut a = vec![moments[1] / moments[0]];
    let mut b = vec![moments[0]];
    // cur[l] = <p_k, x^l>, prev[l] = <p_{k-1}, x^l>
    let mut prev: Vec<f64> = vec![0.0; 2 * n];
    let mut cur: Vec<f64> = moments[..2 * n].to_vec();
    for k in 1..n {
        let mut next = vec![0.0; 2 * n];
        for l in k..(2 * n - k) {
            next[l] = cur[l + 1] - a[k - 1] * cur[l] - b[k - 1] * prev[l];
        }
        let norm_next = next[k];
        let norm_cur = cur[k - 1];
        if norm_next.abs() <= 1e-12 * norm_cur.abs().max(1e-300) {
            return JacobiFraction { a, b, terminated: true };
        }
        a.push(next[k + 1] / norm_next - cur[k] / norm_cur);
        b.push(norm_next / norm_cur);
        prev = cur;
        cur = next;
    }
    JacobiFraction { a, b, terminated: false }
}

impl JacobiFraction {
    /// `G(z)`; an unterminated fraction is closed by repeating its last coefficients forever,
    /// which is the semicircle-type tail `T = (w - √(w² - 4b))/(2b)`, `w = z - a`.
    pub fn stieltjes(&self, z: Complex64) -> Complex64 {
        let depth = self.a.len();
        if depth == 0 {
            return Complex64::zero();
        }
        let (tail_a, tail_b) = (self.a[depth - 1], *self.b.last().expect("nonempty"));
        let mut t = Complex64::zero();
        if !self.terminated && depth >= 2 {
            let w = z - tail_a;
            let mut root = (w * w - 4.0 * tail_b).sqrt();
            if (root / w).re < 0.0 {
                root = -root;
            }
            t = (w - root) / (2.0 * tail_b);
        }
        for k in (0..depth).rev() {
            let coupling = if k + 1 < depth { self.b[k + 1] } else if self.terminated || depth < 2 { 0.0 } else { tail_b };
            t = Complex64::one() / (z - self.a[k] - coupling * t);
        }
        t * self.b[0]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ShapeReport {
    pub curve: CurveFn,
    pub depth: usize,
    /// Largest ratio `max b_k / min b_k`, a crude conditioning indicator.
    pub condition: f64,
}

/// Diagnostic profile reconstruction: `ω' = 2F - 1` with `F = 1 + arg G(x+i0)/π`,
/// `arg G` extrapolated from `y = 0.1, 0.05, 0.025` by Richardson, then
/// `ω(x) = x + 2∫_x^∞ (1 - F)` on the grid (and `ω = |x|` outside it).
pub fn shape_from_moments(moments: &[f64], grid: &[f64]) -> Result<ShapeReport> {
    if moments.first().copied() != Some(1.0) || moments.len() < 2 {
        return Err(Error::InvalidInput("moments must start with M_0 = 1".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("grid must be increasing".into()));
    }
    let fraction = jacobi_coefficients(moments);
    let arg_at = |x: f64, y: f64| fraction.stieltjes(Complex64::new(x, y)).arg();
    let f_values: Vec<f64> = grid
        .iter()
        .map(|&x| {
            let (g1, g2, g3) = (arg_at(x, 0.1), arg_at(x, 0.05), arg_at(x, 0.025));
            let arg = (8.0 * g3 - 6.0 * g2 + g1) / 3.0;
            (1.0 + arg / PI).clamp(0.0, 1.0)
        })
        .collect();
    let mut values = vec![0.0; grid.len()];
    let last = grid.len() - 1;
    values[last] = grid[last].abs();
    let mut tail = values[last] - grid[last];
    for i in (0..last).rev() {
        let h = grid[i + 1] - grid[i];
        tail += h * ((1.0 - f_values[i]) + (1.0 - f_values[i + 1]));
        values[i] = grid[i] + tail;
    }
    let positive: Vec<f64> = fraction.b.iter().skip(1).copied().filter(|x| *x > 0.0).collect();
    let condition = if positive.is_empty() {
        1.0
    } else {
        positive.iter().cloned().fold(0.0, f64::max) / positive.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    Ok(ShapeReport { curve: CurveFn { tag: CurveTag::NumericGrid, grid: grid.to_vec(), values }, depth: fraction.a.len(), condition })
}

/// Evolved cumulants of a driving measure with `q` formal, for comparison with [`r_transform_evolved`].
pub fn evolved_driving_cumulants(nu: &DrivingMeasure, order: usize) -> Result<CumulantVector<Poly>> {
    evolve(&nu.initial_cumulants(order).lift(), &Poly::q())
}

/// Generic helper: coefficientwise equality of two series through `ζ^order`.
pub fn series_agree<T: Coeff>(a: &[T], b: &[T], order: usize) -> bool {
    (0..=order).all(|k| a.get(k).cloned().unwrap_or_else(T::zero) == b.get(k).cloned().unwrap_or_else(T::zero))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freeprob::catalan;
    use crate::measures::rayleigh_to_cumulants;

    #[test]
    fn vkls_values() {
        assert!((vkls(2.0) - 2.0).abs() < 1e-15 && (vkls(-2.0) - 2.0).abs() < 1e-15);
        assert_eq!(vkls(3.5), 3.5);
        assert!((vkls(0.0) - 4.0 / PI).abs() < 1e-15);
        let c = CurveFn::vkls(&uniform_grid(-4.0, 4.0, 801));
        assert!(c.lipschitz_excess() <= 1e-12 && c.below_abs_excess() <= 1e-12);
    }

    #[test]
    fn vershik_shape_and_density() {
        let c = CurveFn::vershik(&uniform_grid(-30.0, 30.0, 2001));
        assert!(c.lipschitz_excess() <= 1e-12 && c.below_abs_excess() <= 1e-12);
        let mass = 2.0 * quadrature::double_exponential::integrate(vershik_density, 0.0, 40.0, 1e-14).integral;
        assert!((mass - 1.0).abs() < 1e-9);
        // τ_V = Ω_V''/2
        let h = 1e-4;
        for x in [-2.0, 0.0, 0.7, 3.0] {
            let second = (vershik(x + h) - 2.0 * vershik(x) + vershik(x - h)) / (h * h);
            assert!((second / 2.0 - vershik_density(x)).abs() < 1e-5);
        }
    }

    #[test]
    fn bernoulli_values() {
        assert_eq!(bernoulli(0), int(1));
        assert_eq!(bernoulli(1), rat(-1, 2));
        assert_eq!(bernoulli(2), rat(1, 6));
        assert_eq!(bernoulli(4), rat(-1, 30));
        assert_eq!(bernoulli(12), rat(-691, 2730));
        assert_eq!(bernoulli(7), int(0));
    }

    #[test]
    fn tau_v_moments_and_bounds() {
        assert_eq!(tau_v_moment(1), int(2));
        assert_eq!(tau_v_moment(2), rat(84, 5));
        for k in 1..=3 {
            assert!((tau_v_moment_numeric(k) - to_f64(&tau_v_moment(k))).abs() < 1e-9 * to_f64(&tau_v_moment(k)).max(1.0));
        }
        for k in 1..=10 {
            let (lo, hi) = tau_v_moment_bounds(k);
            let m = to_f64(&tau_v_moment(k));
            assert!(lo <= m * (1.0 + 1e-12) && m <= hi * (1.0 + 1e-12), "k = {k}");
        }
    }

    #[test]
    fn vershik_cumulants_two_paths() {
        let tau: Vec<Rational> = (1..=8).map(tau_v_moment).collect();
        let pipeline = rayleigh_to_cumulants(&tau);
        for k in 1..=8 {
            assert_eq!(vershik_cumulant(k), pipeline[k as usize - 1], "k = {k}");
        }
        assert_eq!(vershik_cumulant(1), int(1));
        assert!(vershik_growth_constant(10).is_finite());
    }

    #[test]
    fn thoma_basics() {
        let zero = ThomaAlpha::finite(vec![]).unwrap();
        assert_eq!(f_alpha(&zero, 3).unwrap(), int(0));
        assert_eq!(thoma_moments(&zero, 2), int(0));
        let alpha = ThomaAlpha::finite(vec![rat(1, 2), rat(1, 4)]).unwrap();
        assert_eq!(thoma_moments(&alpha, 1), rat(1, 8) + rat(1, 64));
        assert_eq!(f_alpha(&alpha, 3).unwrap(), (rat(1, 8) + rat(1, 64)) / int(2));
        assert!(f_alpha(&alpha, 4).is_err());
        assert!(ThomaAlpha::finite(vec![rat(1, 4), rat(1, 2)]).is_err());
        assert!(ThomaAlpha::finite(vec![rat(2, 3), rat(2, 3)]).is_err());
        // geometric closed form against a long finite truncation
        let q = rat(1, 3);
        let geo = ThomaAlpha::geometric(q.clone()).unwrap();
        let trunc: Vec<Rational> =
            (0..60).map(|i| (int(1) - &q) * num_traits::pow(q.clone(), i)).collect();
        let fin = ThomaAlpha::finite(trunc).unwrap();
        assert!((to_f64(&geo.power_sum(5)) - to_f64(&fin.power_sum(5))).abs() < 1e-15);
    }

    #[test]
    fn uniform_alpha_limit() {
        // √(n/2)/N = c: rescaled moments of ν_α equal c^{2k} up to the 1/N mass factor
        let n_entries = 50usize;
        let alpha = ThomaAlpha::uniform(n_entries).unwrap();
        let n = 2 * n_entries * n_entries; // c = 1
        for k in [3u32, 5, 7] {
            let scaled = to_f64(&f_alpha(&alpha, k).unwrap()) * (n as f64).powf((k - 1) as f64 / 2.0);
            assert!((scaled - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn r_transform_pair_at_time_zero() {
        let c = rat(2, 3);
        let nu = DrivingMeasure::Finite(FiniteMeasure::symmetric_pair(c.clone()));
        let series = r_transform_evolved(&nu, 11);
        // ζ/(1 - c²ζ²) at q = 1
        for (k, p) in series.iter().enumerate() {
            let expected = if k % 2 == 1 { num_traits::pow(&c * &c, (k - 1) / 2) } else { int(0) };
            assert_eq!(p.eval(&int(1)), expected);
        }
        let via_evolve = r_transform_from_cumulants(&evolved_driving_cumulants(&nu, 12).unwrap(), 11);
        assert!(series_agree(&series, &via_evolve, 11));
        // t → ∞
        for (k, p) in series.iter().enumerate() {
            assert_eq!(p.eval(&int(0)), if k == 1 { int(1) } else { int(0) });
        }
    }

    #[test]
    fn uniform_driving_closed_form() {
        for r in [rat(1, 1), rat(3, 2)] {
            let nu = DrivingMeasure::Uniform(r.clone());
            let closed = r_transform_uniform_closed(&r, 11);
            assert!(series_agree(&r_transform_evolved(&nu, 11), &closed, 11));
        }
    }

    #[test]
    fn cubic_consistency() {
        for c in [rat(1, 1), rat(1, 2)] {
            assert!(uniform_cubic_residual(&c, 12).iter().all(Zero::is_zero));
        }
    }

    #[test]
    fn uniform_density() {
        assert_eq!(density_uniform_case(uniform_case_edge()), 0.0);
        assert_eq!(density_uniform_case(3.0), 0.0);
        for u in [0.01, 0.3, 2.0] {
            assert!((density_uniform_case(uniform_case_x_of_u(u)) - u).abs() < 1e-9 * u.max(1.0));
        }
        let report = density_uniform_report();
        assert!((report.mass - 1.0).abs() < 1e-6, "{report:?}");
        assert!((report.mass_by_layers - 1.0).abs() < 1e-6, "{report:?}");
        assert!((report.second_moment - report.second_moment_exact).abs() < 1e-6, "{report:?}");
    }

    #[test]
    fn shape_semicircle_and_point_mass() {
        let moments: Vec<f64> =
            (0..=16).map(|j| if j % 2 == 0 { to_f64(&catalan(j as u64 / 2)) } else { 0.0 }).collect();
        let grid = uniform_grid(-5.0, 5.0, 1001);
        let report = shape_from_moments(&moments, &grid).unwrap();
        assert!(report.curve.sup_distance_on(-3.0, 3.0, vkls) < 2e-2);
        let delta: Vec<f64> = (0..=8).map(|j| if j == 0 { 1.0 } else { 0.0 }).collect();
        let flat = shape_from_moments(&delta, &grid).unwrap();
        assert!(flat.curve.sup_distance(f64::abs) < 2e-2);
    }
}
