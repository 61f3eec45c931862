//! Spin branching graph: Nazarov labels, dimensions, restriction/induction
//! matrices, the spin Plancherel measure and growth sampling.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;
use std::fmt;

use crate::error::{Error, Result};
use crate::measures::up_weight_f64;
use crate::series::{fmt_rational, Rational};
use crate::spcore::{
    addable_boxes, doubled_profile, enumerate_strict_partitions, factorial, g_hook, removable_boxes, StrictPartition,
};

/// Sign `γ` of a Nazarov label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Gamma {
    Plus,
    Minus,
}

impl Gamma {
    pub fn sign(self) -> i8 {
        match self {
            Gamma::Plus => 1,
            Gamma::Minus => -1,
        }
    }
}

/// `(λ, γ)`; labels with `λ ∈ SP_n^+` are stored with `γ = +1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NazarovLabel {
    pub lambda: StrictPartition,
    pub gamma: Gamma,
}

impl NazarovLabel {
    /// Canonical label: `γ` is forced to `+1` when `λ ∈ SP_n^+`.
    pub fn new(lambda: StrictPartition, gamma: Gamma) -> Self {
        let gamma = if lambda.is_even_class() { Gamma::Plus } else { gamma };
        Self { lambda, gamma }
    }

    pub fn n(&self) -> u32 {
        self.lambda.n()
    }

    /// Both labels of `λ` (one if `λ ∈ SP_n^+`).
    pub fn all_of(lambda: &StrictPartition) -> Vec<NazarovLabel> {
        if lambda.is_even_class() {
            vec![Self::new(lambda.clone(), Gamma::Plus)]
        } else {
            vec![Self::new(lambda.clone(), Gamma::Plus), Self::new(lambda.clone(), Gamma::Minus)]
        }
    }

    /// `⌊(n - l)/2⌋`, the power of two in the dimension.
    fn two_power(&self) -> u32 {
        (self.n() - self.lambda.len() as u32) / 2
    }
}

impl fmt::Display for NazarovLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.lambda, if self.gamma == Gamma::Plus { "+1" } else { "-1" })
    }
}

pub fn spin_vertices(n: u32) -> Vec<NazarovLabel> {
    enumerate_strict_partitions(n).iter().flat_map(NazarovLabel::all_of).collect()
}

/// `2^{(n-l-ε)/2} g_λ`.
pub fn dim_spin(label: &NazarovLabel) -> BigUint {
    (BigUint::one() << label.two_power()) * g_hook(&label.lambda).expect("hook formula")
}

/// Multiplicity of `lower` (level n-1) in the restriction of `upper` (level n).
pub fn branching_multiplicity(upper: &NazarovLabel, lower: &NazarovLabel) -> u8 {
    let (lam, mu) = (&upper.lambda, &lower.lambda);
    if mu.n() + 1 != lam.n() || !lam.contains(mu) {
        return 0;
    }
    let same_length = mu.len() == lam.len();
    if lam.is_even_class() {
        // Same-length μ lie in SP^- and appear with both signs; μ = λ⁻ appears once.
        1
    } else if same_length {
        // μ ∈ SP^+ carries the single canonical label.
        1
    } else {
        // μ = λ⁻ ∈ SP^- keeps the sign of λ.
        u8::from(lower.gamma == upper.gamma)
    }
}

/// Labels at level n-1 occurring in the restriction of `label`.
pub fn children(label: &NazarovLabel) -> Vec<(NazarovLabel, i64)> {
    removable_boxes(&label.lambda)
        .into_iter()
        .flat_map(|(mu, c)| NazarovLabel::all_of(&mu).into_iter().map(move |l| (l, c)))
        .filter(|(lower, _)| branching_multiplicity(label, lower) == 1)
        .collect()
}

/// Labels at level n+1 whose restriction contains `label`.
pub fn parents(label: &NazarovLabel) -> Vec<(NazarovLabel, i64)> {
    addable_boxes(&label.lambda)
        .into_iter()
        .flat_map(|(lam, c)| NazarovLabel::all_of(&lam).into_iter().map(move |l| (l, c)))
        .filter(|(upper, _)| branching_multiplicity(upper, label) == 1)
        .collect()
}

/// Down, up and restriction-induction matrices between levels n and n-1.
#[derive(Clone, Debug)]
pub struct LevelMatrices {
    pub n: u32,
    pub upper: Vec<NazarovLabel>,
    pub lower: Vec<NazarovLabel>,
    /// `upper × lower`: `c·dim η / dim ξ`.
    pub p_down: Vec<Vec<Rational>>,
    /// `lower × upper`: `c·dim ξ / (n·dim η)`.
    pub p_up: Vec<Vec<Rational>>,
    /// `upper × upper`: `P_down · P_up`.
    pub p: Vec<Vec<Rational>>,
}

fn big(x: BigUint) -> Rational {
    Rational::from_integer(x.into())
}

pub fn level_matrices(n: u32) -> Result<LevelMatrices> {
    if n < 2 {
        return Err(Error::InvalidInput("level matrices need n >= 2".into()));
    }
    let upper = spin_vertices(n);
    let lower = spin_vertices(n - 1);
    let dim_u: Vec<Rational> = upper.iter().map(|l| big(dim_spin(l))).collect();
    let dim_l: Vec<Rational> = lower.iter().map(|l| big(dim_spin(l))).collect();
    let index = Rational::from_integer(n.into());
    let mult = |i: usize, j: usize| branching_multiplicity(&upper[i], &lower[j]);
    let p_down: Vec<Vec<Rational>> = (0..upper.len())
        .map(|i| {
            (0..lower.len())
                .map(|j| if mult(i, j) == 1 { &dim_l[j] / &dim_u[i] } else { Rational::zero() })
                .collect()
        })
        .collect();
    let p_up: Vec<Vec<Rational>> = (0..lower.len())
        .map(|j| {
            (0..upper.len())
                .map(|i| if mult(i, j) == 1 { &dim_u[i] / (&index * &dim_l[j]) } else { Rational::zero() })
                .collect()
        })
        .collect();
    let p = (0..upper.len())
        .map(|i| {
            (0..upper.len())
                .map(|k| (0..lower.len()).map(|j| &p_down[i][j] * &p_up[j][k]).sum())
                .collect()
        })
        .collect();
    Ok(LevelMatrices { n, upper, lower, p_down, p_up, p })
}

/// `dim(ξ)² / n!` on the spin labels of level n.
pub fn plancherel_spin(n: u32) -> Vec<(NazarovLabel, Rational)> {
    let total = big(factorial(n));
    spin_vertices(n)
        .into_iter()
        .map(|l| {
            let d = big(dim_spin(&l));
            let w = &d * &d / &total;
            (l, w)
        })
        .collect()
}

/// Edge list `level,lambda,gamma,lambda_lower,gamma_lower,weight_down,weight_up`.
pub fn graph_csv(max_level: u32) -> Result<String> {
    let mut out = String::from("level,lambda,gamma,lambda_lower,gamma_lower,weight_down,weight_up\n");
    for n in 2..=max_level {
        let lm = level_matrices(n)?;
        for (i, u) in lm.upper.iter().enumerate() {
            for (j, l) in lm.lower.iter().enumerate() {
                if branching_multiplicity(u, l) == 1 {
                    out.push_str(&format!(
                        "{n},\"{}\",{},\"{}\",{},{},{}\n",
                        u.lambda,
                        u.gamma.sign(),
                        l.lambda,
                        l.gamma.sign(),
                        fmt_rational(&lm.p_down[i][j]),
                        fmt_rational(&lm.p_up[j][i])
                    ));
                }
            }
        }
    }
    Ok(out)
}

/// Exact identities at one level of the graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelReport {
    pub n: u32,
    /// `Σ_{μ ↙ λ} dim μ = dim λ` for every upper label.
    pub restriction: bool,
    /// `Σ_{λ ↗ μ} dim λ = n dim μ` for every lower label.
    pub induction: bool,
    /// Rows of `P_down`, `P_up` and `P` sum to one.
    pub stochastic: bool,
    /// `M(ξ) P(ξ, η) = M(η) P(η, ξ)` for spin Plancherel `M`.
    pub detailed_balance: bool,
    /// Plancherel at level n-1 pushed up by `P_up` is Plancherel at level n.
    pub up_invariance: bool,
    /// `Σ dim² = n!`.
    pub plancherel_total: bool,
}

impl LevelReport {
    pub fn all_hold(&self) -> bool {
        self.restriction && self.induction && self.stochastic && self.detailed_balance && self.up_invariance && self.plancherel_total
    }
}

pub fn level_report(n: u32) -> Result<LevelReport> {
    let lm = level_matrices(n)?;
    let restriction = lm
        .upper
        .iter()
        .all(|up| children(up).iter().map(|(l, _)| dim_spin(l)).sum::<BigUint>() == dim_spin(up));
    let induction = lm
        .lower
        .iter()
        .all(|low| parents(low).iter().map(|(u, _)| dim_spin(u)).sum::<BigUint>() == dim_spin(low) * n);
    let one = Rational::one();
    let stochastic = lm.p_down.iter().chain(&lm.p_up).chain(&lm.p).all(|row| row.iter().sum::<Rational>() == one);
    let pl: Vec<Rational> = plancherel_spin(n).into_iter().map(|x| x.1).collect();
    let size = lm.upper.len();
    let detailed_balance =
        (0..size).all(|i| (0..size).all(|k| &pl[i] * &lm.p[i][k] == &pl[k] * &lm.p[k][i]));
    let prev: Vec<Rational> = plancherel_spin(n - 1).into_iter().map(|x| x.1).collect();
    let up_invariance =
        (0..size).all(|k| (0..lm.lower.len()).map(|j| &prev[j] * &lm.p_up[j][k]).sum::<Rational>() == pl[k]);
    let plancherel_total = lm.upper.iter().map(|l| dim_spin(l).pow(2)).sum::<BigUint>() == factorial(n);
    Ok(LevelReport { n, restriction, induction, stochastic, detailed_balance, up_invariance, plancherel_total })
}

fn pick<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        if u < *w {
            return k;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Floating-point weights of the up-step from `label` (level n) to each parent.
pub fn up_weights(label: &NazarovLabel) -> Vec<(NazarovLabel, f64)> {
    let d = doubled_profile(&label.lambda);
    parents(label)
        .into_iter()
        .map(|(upper, c)| {
            let w = up_weight_f64(&d, c) * 2f64.powi(upper.two_power() as i32 - label.two_power() as i32);
            (upper, w)
        })
        .collect()
}

/// Floating-point weights of the down-step from `label` (level n) to each child.
pub fn down_weights(label: &NazarovLabel) -> Vec<(NazarovLabel, f64)> {
    let n = label.n() as f64;
    children(label)
        .into_iter()
        .map(|(lower, c)| {
            // g_λ / (n g_μ) is the up-weight of c at μ.
            let up = up_weight_f64(&doubled_profile(&lower.lambda), c);
            let w = 2f64.powi(lower.two_power() as i32 - label.two_power() as i32) / (n * up);
            (lower, w)
        })
        .collect()
}

pub fn up_step<R: Rng + ?Sized>(label: &NazarovLabel, rng: &mut R) -> NazarovLabel {
    let options = up_weights(label);
    let weights: Vec<f64> = options.iter().map(|o| o.1).collect();
    options[pick(&weights, rng)].0.clone()
}

pub fn down_step<R: Rng + ?Sized>(label: &NazarovLabel, rng: &mut R) -> NazarovLabel {
    let options = down_weights(label);
    let weights: Vec<f64> = options.iter().map(|o| o.1).collect();
    options[pick(&weights, rng)].0.clone()
}

/// One step of the restriction-induction chain: down to n-1, then up to n.
pub fn chain_step<R: Rng + ?Sized>(label: &NazarovLabel, rng: &mut R) -> NazarovLabel {
    up_step(&down_step(label, rng), rng)
}

/// Spin Plancherel sample at level n by growth from `((1), +1)`.
pub fn sample_plancherel<R: Rng + ?Sized>(n: u32, rng: &mut R) -> Result<NazarovLabel> {
    if n == 0 {
        return Err(Error::InvalidInput("spin Plancherel needs n >= 1".into()));
    }
    let mut label = NazarovLabel::new(StrictPartition::new(vec![1])?, Gamma::Plus);
    for _ in 1..n {
        label = up_step(&label, rng);
    }
    Ok(label)
}

pub fn dim_spin_f64(label: &NazarovLabel) -> f64 {
    dim_spin(label).to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{int, to_f64};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sp(parts: &[u32]) -> StrictPartition {
        StrictPartition::new(parts.to_vec()).unwrap()
    }

    #[test]
    fn vertex_counts() {
        assert_eq!(spin_vertices(1), vec![NazarovLabel::new(sp(&[1]), Gamma::Plus)]);
        let v4 = spin_vertices(4);
        assert_eq!(v4.len(), 3);
        assert_eq!(v4[0].lambda, sp(&[4]));
        assert_eq!(v4[1], NazarovLabel { lambda: sp(&[4]), gamma: Gamma::Minus });
        assert_eq!(spin_vertices(6).len(), 6);
        // canonical form collapses the sign for SP^+
        assert_eq!(NazarovLabel::new(sp(&[3, 1]), Gamma::Minus).gamma, Gamma::Plus);
    }

    #[test]
    fn dims() {
        assert_eq!(dim_spin(&NazarovLabel::new(sp(&[1]), Gamma::Plus)), BigUint::from(1u32));
        assert_eq!(dim_spin(&NazarovLabel::new(sp(&[3, 1]), Gamma::Plus)), BigUint::from(4u32));
        let d4: Vec<u32> = spin_vertices(4).iter().map(|l| dim_spin(l).to_u32().unwrap()).collect();
        assert_eq!(d4, vec![2, 2, 4]);
        for n in 1..=12 {
            let total: BigUint = spin_vertices(n).iter().map(|l| dim_spin(l).pow(2)).sum();
            assert_eq!(total, factorial(n));
        }
    }

    #[test]
    fn restriction_rule_shapes() {
        // λ ∈ SP^+ restricts to both signs of each same-length μ.
        let up = NazarovLabel::new(sp(&[3, 1]), Gamma::Plus);
        let kids: Vec<NazarovLabel> = children(&up).into_iter().map(|c| c.0).collect();
        assert!(kids.contains(&NazarovLabel { lambda: sp(&[2, 1]), gamma: Gamma::Plus }));
        assert!(kids.contains(&NazarovLabel { lambda: sp(&[2, 1]), gamma: Gamma::Minus }));
        assert!(kids.contains(&NazarovLabel::new(sp(&[3]), Gamma::Plus)));
        // λ⁻ keeps the sign when λ ∈ SP^-.
        let up = NazarovLabel { lambda: sp(&[3, 2, 1]), gamma: Gamma::Minus };
        let kids: Vec<NazarovLabel> = children(&up).into_iter().map(|c| c.0).collect();
        assert_eq!(kids, vec![NazarovLabel { lambda: sp(&[3, 2]), gamma: Gamma::Minus }]);
    }

    #[test]
    fn restriction_dimension_identity() {
        for n in 2..=10 {
            for up in spin_vertices(n) {
                let sum: BigUint = children(&up).iter().map(|(l, _)| dim_spin(l)).sum();
                assert_eq!(sum, dim_spin(&up), "{up}");
            }
            for low in spin_vertices(n - 1) {
                let sum: BigUint = parents(&low).iter().map(|(u, _)| dim_spin(u)).sum();
                assert_eq!(sum, dim_spin(&low) * n, "{low}");
            }
        }
    }

    #[test]
    fn matrices_stochastic_and_reversible() {
        for n in 2..=7 {
            let lm = level_matrices(n).unwrap();
            for row in lm.p_down.iter().chain(&lm.p_up).chain(&lm.p) {
                assert_eq!(row.iter().sum::<Rational>(), int(1));
            }
            let pl: Vec<Rational> = plancherel_spin(n).into_iter().map(|x| x.1).collect();
            for i in 0..lm.upper.len() {
                for k in 0..lm.upper.len() {
                    assert_eq!(&pl[i] * &lm.p[i][k], &pl[k] * &lm.p[k][i]);
                }
            }
            let prev: Vec<Rational> = plancherel_spin(n - 1).into_iter().map(|x| x.1).collect();
            for k in 0..lm.upper.len() {
                let pushed: Rational = (0..lm.lower.len()).map(|j| &prev[j] * &lm.p_up[j][k]).sum();
                assert_eq!(pushed, pl[k]);
            }
        }
        assert!(level_matrices(1).is_err());
    }

    #[test]
    fn level_reports_hold() {
        for n in 2..=8 {
            assert!(level_report(n).unwrap().all_hold(), "n = {n}");
        }
    }

    #[test]
    fn float_weights_match_exact() {
        for n in 2..=8 {
            let lm = level_matrices(n).unwrap();
            for (i, up) in lm.upper.iter().enumerate() {
                for (low, w) in down_weights(up) {
                    let j = lm.lower.iter().position(|l| *l == low).unwrap();
                    assert!((w - to_f64(&lm.p_down[i][j])).abs() < 1e-12);
                }
            }
            for (j, low) in lm.lower.iter().enumerate() {
                for (up, w) in up_weights(low) {
                    let i = lm.upper.iter().position(|l| *l == up).unwrap();
                    assert!((w - to_f64(&lm.p_up[j][i])).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn plancherel_sampler_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(sample_plancherel(1, &mut rng).unwrap(), NazarovLabel::new(sp(&[1]), Gamma::Plus));
        let exact = plancherel_spin(4);
        let trials = 100_000;
        let mut counts = vec![0usize; exact.len()];
        for _ in 0..trials {
            let s = sample_plancherel(4, &mut rng).unwrap();
            counts[exact.iter().position(|e| e.0 == s).unwrap()] += 1;
        }
        for (k, (_, p)) in exact.iter().enumerate() {
            let p = to_f64(p);
            let sd = (trials as f64 * p * (1.0 - p)).sqrt();
            assert!((counts[k] as f64 - trials as f64 * p).abs() < 3.0 * sd + 1.0);
        }
    }
}
