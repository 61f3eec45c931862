//! Transition and Rayleigh measures of doubled diagrams, the Markov transform on
//! formal series, and the exact identities relating them to tableau counts.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::series::{fmt_f64, fmt_rational, int, rat, to_f64, PowerSeries, Rational};
use crate::spcore::{addable_boxes, doubled_profile, g_hook, DoubledDiagram, StrictPartition};
use crate::error::{Error, Result};

/// Finitely supported measure with exact atoms, sorted by location.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMeasure {
    atoms: Vec<(Rational, Rational)>,
}

impl FiniteMeasure {
    pub fn new(mut atoms: Vec<(Rational, Rational)>) -> Result<Self> {
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        if atoms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidInput("measure has repeated locations".into()));
        }
        Ok(Self { atoms })
    }

    pub fn dirac(x: Rational) -> Self {
        Self { atoms: vec![(x, Rational::one())] }
    }

    pub fn atoms(&self) -> &[(Rational, Rational)] {
        &self.atoms
    }

    pub fn mass_at(&self, x: &Rational) -> Rational {
        self.atoms.iter().find(|(loc, _)| loc == x).map(|(_, m)| m.clone()).unwrap_or_else(Rational::zero)
    }

    pub fn total_mass(&self) -> Rational {
        self.atoms.iter().map(|(_, m)| m).sum()
    }

    pub fn is_probability(&self) -> bool {
        self.total_mass().is_one() && self.atoms.iter().all(|(_, m)| !m.is_negative())
    }

    pub fn moment(&self, k: u32) -> Rational {
        self.atoms.iter().map(|(x, m)| num_traits::pow(x.clone(), k as usize) * m).sum()
    }

    pub fn moments(&self, order: usize) -> Vec<Rational> {
        (0..=order as u32).map(|k| self.moment(k)).collect()
    }

    /// Symmetric measure `½(δ_c + δ_{-c})`, or `δ_0` when `c = 0`.
    pub fn symmetric_pair(c: Rational) -> Self {
        if c.is_zero() {
            return Self::dirac(c);
        }
        let half = rat(1, 2);
        Self::new(vec![(c.clone(), half.clone()), (-c, half)]).expect("distinct atoms")
    }

    /// `[["p/q", "p/q"], ..]` pairs of location and mass.
    pub fn to_json(&self) -> serde_json::Value {
        self.atoms.iter().map(|(x, m)| serde_json::json!([fmt_rational(x), fmt_rational(m)])).collect()
    }

    /// CSV rows `location,mass,mass_decimal`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("location,mass,mass_decimal\n");
        for (x, m) in &self.atoms {
            out.push_str(&format!("{},{},{}\n", fmt_rational(x), fmt_rational(m), fmt_f64(to_f64(m))));
        }
        out
    }
}

/// Dilation factor for [`rescale`]: either a rational `r` or `√s` for rational `s`.
#[derive(Clone, Debug, PartialEq)]
pub enum Scale {
    Rational(Rational),
    Sqrt(Rational),
}

/// Pushforward of a measure under `x ↦ x/√radicand`, with the base locations kept exact.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledMeasure {
    pub base: FiniteMeasure,
    pub radicand: Rational,
}

impl ScaledMeasure {
    pub fn even_moment(&self, two_k: u32) -> Rational {
        assert!(two_k.is_multiple_of(2), "even moments only");
        self.base.moment(two_k) / num_traits::pow(self.radicand.clone(), (two_k / 2) as usize)
    }

    pub fn moment_f64(&self, k: u32) -> f64 {
        to_f64(&self.base.moment(k)) / to_f64(&self.radicand).powf(k as f64 / 2.0)
    }

    pub fn locations_f64(&self) -> Vec<f64> {
        let s = to_f64(&self.radicand).sqrt();
        self.base.atoms().iter().map(|(x, _)| to_f64(x) / s).collect()
    }
}

pub fn rescale(m: &FiniteMeasure, r: &Scale) -> Result<ScaledMeasure> {
    match r {
        Scale::Rational(r) if r.is_positive() => {
            let atoms = m.atoms().iter().map(|(x, w)| (x / r, w.clone())).collect();
            Ok(ScaledMeasure { base: FiniteMeasure::new(atoms)?, radicand: Rational::one() })
        }
        Scale::Sqrt(s) if s.is_positive() => Ok(ScaledMeasure { base: m.clone(), radicand: s.clone() }),
        _ => Err(Error::InvalidInput("scale must be positive".into())),
    }
}

/// Transition measure of a profile: partial fractions of `Π(z-y)/Π(z-x)` evaluated at each valley.
pub fn transition_measure(d: &DoubledDiagram) -> FiniteMeasure {
    let atoms = d
        .valleys
        .iter()
        .map(|&x| {
            let num: BigInt = d.peaks.iter().map(|&y| BigInt::from(x - y)).product();
            let den: BigInt = d.valleys.iter().filter(|&&v| v != x).map(|&v| BigInt::from(x - v)).product();
            (int(x), Rational::new(num, den))
        })
        .collect();
    FiniteMeasure { atoms }
}

/// Weight `g_μ / ((n+1) g_λ)` of adding a cell of content `c`, read off the transition measure of `D(λ)`.
pub fn up_weight_from_measure(m: &FiniteMeasure, c: i64) -> Rational {
    if c == 0 {
        m.mass_at(&int(0))
    } else {
        (m.mass_at(&int(c)) + m.mass_at(&int(-c - 1))) / int(2)
    }
}

/// Floating-point version of [`up_weight_from_measure`] that works directly on profile data.
pub fn up_weight_f64(d: &DoubledDiagram, c: i64) -> f64 {
    let mass = |x: i64| -> f64 {
        if !d.valleys.contains(&x) {
            return 0.0;
        }
        // Interleave numerator and denominator factors to stay in range.
        let mut acc = 1.0;
        let mut others = d.valleys.iter().filter(|&&v| v != x);
        for &y in &d.peaks {
            acc *= (x - y) as f64;
            if let Some(&v) = others.next() {
                acc /= (x - v) as f64;
            }
        }
        for &v in others {
            acc /= (x - v) as f64;
        }
        acc
    };
    if c == 0 {
        mass(0)
    } else {
        0.5 * (mass(c) + mass(-c - 1))
    }
}

/// Both sides of the corner-box identity for an edge `λ ↗ μ`.
pub fn corner_weight_check(lambda: &StrictPartition, mu: &StrictPartition) -> Result<(Rational, Rational)> {
    let c = addable_boxes(lambda)
        .into_iter()
        .find(|(m, _)| m == mu)
        .map(|(_, c)| c)
        .ok_or_else(|| Error::InvalidInput(format!("{mu} is not obtained from {lambda} by one cell")))?;
    let g_lambda = BigInt::from(g_hook(lambda)?);
    let g_mu = BigInt::from(g_hook(mu)?);
    let lhs = Rational::new(g_mu, g_lambda * BigInt::from(lambda.n() + 1));
    let rhs = up_weight_from_measure(&transition_measure(&doubled_profile(lambda)), c);
    Ok((lhs, rhs))
}

/// `Σ_{λ↗μ} (c(c+1)/2)^k · m({c, -c-1})` over addable cells of content `c`.
pub fn jm_moment_rhs(lambda: &StrictPartition, k: u32) -> Rational {
    let m = transition_measure(&doubled_profile(lambda));
    addable_boxes(lambda)
        .into_iter()
        .map(|(_, c)| {
            let eigen = rat(c * (c + 1), 2);
            let mass = m.mass_at(&int(c)) + if c > 0 { m.mass_at(&int(-c - 1)) } else { Rational::zero() };
            num_traits::pow(eigen, k as usize) * mass
        })
        .sum()
}

/// Signed measure `Σ δ_valleys - Σ δ_peaks`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RayleighData {
    pub atoms: Vec<(i64, i64)>,
}

impl RayleighData {
    pub fn of(d: &DoubledDiagram) -> Self {
        let mut atoms: Vec<(i64, i64)> =
            d.valleys.iter().map(|&x| (x, 1)).chain(d.peaks.iter().map(|&y| (y, -1))).collect();
        atoms.sort();
        Self { atoms }
    }

    pub fn total_mass(&self) -> i64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn moment(&self, k: u32) -> Rational {
        Rational::from_integer(self.atoms.iter().map(|&(x, s)| BigInt::from(x).pow(k) * s).sum())
    }

    /// `M_0 .. M_order` of `τ`.
    pub fn moments(&self, order: usize) -> Vec<Rational> {
        (0..=order as u32).map(|k| self.moment(k)).collect()
    }
}

/// Moments `M_0..M_order` of `μ` where `G_μ(z) = z^{-1} exp(Σ_k M_k(τ) z^{-k} / k)`.
///
/// `tau_moments[k]` is `M_k(τ)`; index 0 is ignored.
pub fn markov_series(tau_moments: &[Rational], order: usize) -> Vec<Rational> {
    let exponent = PowerSeries::new(
        (0..=order)
            .map(|k| if k == 0 { Rational::zero() } else { tau_moments.get(k).cloned().unwrap_or_default() / int(k as i64) })
            .collect(),
        order,
    );
    exponent.exp().expect("zero constant term").coeffs().to_vec()
}

/// Free cumulants `R_2, R_4, .., R_{2K}` from the even moments of a symmetric Rayleigh measure.
///
/// `tau_even[j-1]` is `M_{2j}(τ)`, `j = 1..=K`.
pub fn rayleigh_to_cumulants(tau_even: &[Rational]) -> Vec<Rational> {
    let big_k = tau_even.len();
    // a_j = M_{2j}(τ) / (2j); the inner sum over compositions of k into l parts is [x^k] A(x)^l.
    let a = PowerSeries::new(
        std::iter::once(Rational::zero())
            .chain(tau_even.iter().enumerate().map(|(j, m)| m / int(2 * (j as i64 + 1))))
            .collect(),
        big_k,
    );
    let mut powers = vec![PowerSeries::one(big_k)];
    for l in 1..=big_k {
        powers.push(powers[l - 1].mul(&a));
    }
    (1..=big_k)
        .map(|k| {
            let mut fact = Rational::one();
            (1..=k)
                .map(|l| {
                    fact *= int(l as i64);
                    num_traits::pow(int(1 - 2 * k as i64), l - 1) / &fact * powers[l].coeff(k)
                })
                .sum()
        })
        .collect()
}

/// Checks `x·m({x}) = (x+1)·m({-x-1})` for every positive valley `x`; returns the failures.
pub fn balance_failures(lambda: &StrictPartition) -> Vec<i64> {
    let d = doubled_profile(lambda);
    let m = transition_measure(&d);
    d.valleys
        .iter()
        .filter(|&&x| x > 0)
        .filter(|&&x| int(x) * m.mass_at(&int(x)) != int(x + 1) * m.mass_at(&int(-x - 1)))
        .copied()
        .collect()
}

/// `Σ_{x>0} x (x^{2k} - (x+1)^{2k}) m({x})`, the collapsed odd moment `M_{2k+1}`.
pub fn odd_moment_collapsed(lambda: &StrictPartition, k: u32) -> Rational {
    let d = doubled_profile(lambda);
    let m = transition_measure(&d);
    d.valleys
        .iter()
        .filter(|&&x| x > 0)
        .map(|&x| {
            let x_big = BigInt::from(x);
            let diff = x_big.pow(2 * k) - BigInt::from(x + 1).pow(2 * k);
            Rational::from_integer(x_big * diff) * m.mass_at(&int(x))
        })
        .sum()
}
