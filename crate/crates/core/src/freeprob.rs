//! Noncrossing partitions and the free cumulant calculus.
//!
//! Coefficients are generic over [`Coeff`], so the same code runs on exact
//! rationals and on polynomials in the evolution parameter `q`.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{int, rat, Coeff, Poly, PowerSeries, Rational};

/// Largest `n` accepted by the noncrossing-partition enumerator.
pub const NC_LIMIT: usize = 14;

/// A set partition of `{1..n}` with blocks listed by their smallest element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NcPartition {
    pub blocks: Vec<Vec<u32>>,
}

impl NcPartition {
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.blocks.iter().map(Vec::len).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    /// No `a < b < c < d` with `a, c` in one block and `b, d` in another.
    pub fn is_noncrossing(&self) -> bool {
        let owner = self.owner_map();
        let n = owner.len();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    if owner[a] != owner[c] || owner[a] == owner[b] {
                        continue;
                    }
                    if (c + 1..n).any(|d| owner[d] == owner[b]) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn owner_map(&self) -> Vec<usize> {
        let n: usize = self.blocks.iter().map(Vec::len).sum();
        let mut owner = vec![0; n];
        for (k, block) in self.blocks.iter().enumerate() {
            for &x in block {
                owner[x as usize - 1] = k;
            }
        }
        owner
    }
}

/// Visits every noncrossing partition of `{1..n}`.
pub fn for_each_nc(n: usize, mut visit: impl FnMut(&NcPartition)) -> Result<()> {
    if n > NC_LIMIT {
        return Err(Error::SizeLimit { what: "noncrossing enumeration", n, limit: NC_LIMIT });
    }
    // Restricted-growth assignment of 1..n to blocks; joining block b is refused
    // when some other block has an element between b's last element and i and an
    // element before it (that already forms a crossing).
    fn rec(i: u32, n: u32, blocks: &mut Vec<Vec<u32>>, visit: &mut dyn FnMut(&NcPartition)) {
        if i > n {
            let p = NcPartition { blocks: blocks.clone() };
            debug_assert!(p.is_noncrossing());
            visit(&p);
            return;
        }
        for b in 0..blocks.len() {
            let last = *blocks[b].last().unwrap();
            let crossing = blocks.iter().enumerate().any(|(c, other)| {
                c != b && other.iter().any(|&x| x > last && x < i) && other.iter().any(|&x| x < last)
            });
            if !crossing {
                blocks[b].push(i);
                rec(i + 1, n, blocks, visit);
                blocks[b].pop();
            }
        }
        blocks.push(vec![i]);
        rec(i + 1, n, blocks, visit);
        blocks.pop();
    }
    let mut blocks = Vec::new();
    rec(1, n as u32, &mut blocks, &mut visit);
    Ok(())
}

pub fn enumerate_nc(n: usize) -> Result<Vec<NcPartition>> {
    let mut out = Vec::new();
    for_each_nc(n, |p| out.push(p.clone()))?;
    Ok(out)
}

/// Number of noncrossing partitions of `{1..|σ|}` whose block sizes form `σ`.
pub fn count_nc_type(sigma: &[usize]) -> Result<u64> {
    let mut want = sigma.to_vec();
    want.sort_unstable_by(|a, b| b.cmp(a));
    let mut count = 0;
    for_each_nc(sigma.iter().sum(), |p| {
        if p.block_sizes() == want {
            count += 1;
        }
    })?;
    Ok(count)
}

/// `R_1..R_N`, stored with `R_k` at index `k-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct CumulantVector<T> {
    values: Vec<T>,
}

impl<T: Coeff> CumulantVector<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn order(&self) -> usize {
        self.values.len()
    }

    /// `R_k`; zero beyond the stored order.
    pub fn get(&self, k: usize) -> T {
        assert!(k >= 1, "cumulants are indexed from 1");
        self.values.get(k - 1).cloned().unwrap_or_else(T::zero)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Semicircle law of the given variance: `R_2 = variance`, all others zero.
    pub fn semicircle(variance: T, order: usize) -> Self {
        Self::new((1..=order).map(|k| if k == 2 { variance.clone() } else { T::zero() }).collect())
    }
}

impl<T: Coeff + std::fmt::Display> CumulantVector<T> {
    /// `{"cumulants", "moments", "order", "q"}` with entries as strings; `q` names the coefficient ring.
    pub fn to_json(&self, q: &str) -> serde_json::Value {
        let strings = |v: &[T]| v.iter().map(ToString::to_string).collect::<Vec<_>>();
        serde_json::json!({
            "cumulants": strings(&self.values),
            "moments": strings(&cumulants_to_moments(self)),
            "order": self.order(),
            "q": q,
        })
    }
}

impl CumulantVector<Rational> {
    /// Same cumulants viewed as constant polynomials in `q`.
    pub fn lift(&self) -> CumulantVector<Poly> {
        CumulantVector::new(self.values.iter().cloned().map(Poly::constant).collect())
    }
}

/// `M_0..M_N` from `R_1..R_N` via `M_n = Σ_s R_s [x^{n-s}] M(x)^s`.
///
/// Splitting off the block that contains 1 gives this recursion for the sum
/// over noncrossing partitions.
pub fn cumulants_to_moments<T: Coeff>(r: &CumulantVector<T>) -> Vec<T> {
    let order = r.order();
    let mut moments = vec![T::one()];
    for n in 1..=order {
        let series = PowerSeries::new(moments.clone(), n - 1);
        let mut power = PowerSeries::one(n - 1);
        let mut total = T::zero();
        for s in 1..=n {
            power = power.mul(&series);
            let rs = r.get(s);
            if !rs.is_zero() {
                total = total + rs * power.coeff(n - s);
            }
        }
        moments.push(total);
    }
    moments
}

/// Inverse of [`cumulants_to_moments`] by triangular back-substitution.
pub fn moments_to_cumulants<T: Coeff>(m: &[T]) -> Result<CumulantVector<T>> {
    if m.first() != Some(&T::one()) {
        return Err(Error::InvalidInput("moment sequence must start with M_0 = 1".into()));
    }
    let order = m.len() - 1;
    let mut values: Vec<T> = Vec::with_capacity(order);
    for n in 1..=order {
        let mut trial = values.clone();
        trial.push(T::zero());
        let without = cumulants_to_moments(&CumulantVector::new(trial));
        values.push(m[n].clone() - without[n].clone());
    }
    Ok(CumulantVector::new(values))
}

pub fn free_convolve<T: Coeff>(a: &CumulantVector<T>, b: &CumulantVector<T>) -> CumulantVector<T> {
    let order = a.order().max(b.order());
    CumulantVector::new((1..=order).map(|k| a.get(k) + b.get(k)).collect())
}

/// `R_k ↦ c^{k-1} R_k`.
pub fn free_compress<T: Coeff>(r: &CumulantVector<T>, c: &T) -> Result<CumulantVector<T>> {
    if c.is_zero() {
        return Err(Error::InvalidInput("compression parameter must be nonzero".into()));
    }
    let mut factor = T::one();
    let mut values = Vec::with_capacity(r.order());
    for k in 1..=r.order() {
        values.push(factor.clone() * r.get(k));
        factor = factor * c.clone();
    }
    Ok(CumulantVector::new(values))
}

/// Limit-shape cumulants at time `t` with `q = e^{-t/m}`: `R_{k+1} ↦ q^k R_{k+1}` for `k ≥ 2`.
pub fn evolve<T: Coeff>(r0: &CumulantVector<T>, q: &T) -> Result<CumulantVector<T>> {
    if r0.order() < 2 || !r0.get(1).is_zero() || !r0.get(2).is_one() {
        return Err(Error::InvalidInput("initial cumulants must have R_1 = 0 and R_2 = 1".into()));
    }
    let mut values = vec![T::zero(), T::one()];
    let mut factor = q.clone() * q.clone();
    for k in 3..=r0.order() {
        values.push(factor.clone() * r0.get(k));
        factor = factor * q.clone();
    }
    Ok(CumulantVector::new(values))
}

/// [`evolve`] with `q` kept as a formal variable.
pub fn evolve_formal(r0: &CumulantVector<Rational>) -> Result<CumulantVector<Poly>> {
    evolve(&r0.lift(), &Poly::q())
}

/// `G(z) = Σ_j M_j z^{-j-1}` as a series in `w = 1/z` (coefficient of `w^{j+1}` is `M_j`).
pub fn stieltjes_series<T: Coeff>(m: &[T]) -> PowerSeries<T> {
    let order = m.len();
    PowerSeries::new(std::iter::once(T::zero()).chain(m.iter().cloned()).collect(), order)
}

/// Cumulants `R_1..R_N` from a Stieltjes series via `R_k = -1/(k-1) [z^{-1}] G^{1-k}` for `k ≥ 2`.
pub fn cumulants_from_stieltjes<T: Coeff>(g: &PowerSeries<T>) -> Result<CumulantVector<T>> {
    if !g.coeff(0).is_zero() || !g.coeff(1).is_one() {
        return Err(Error::InvalidInput("expected G = 1/z + O(z^-2)".into()));
    }
    let order = g.order() - 1;
    // G = w·M(w); G^{1-k} = z^{k-1} H^{k-1} with H = 1/M, so [z^{-1}] picks [w^k] H^{k-1}.
    let m = PowerSeries::new(g.coeffs()[1..].to_vec(), order);
    let h = m.recip().expect("unit constant term");
    let mut values = vec![m.coeff(1)];
    let mut power = h.clone();
    for k in 2..=order {
        values.push(-power.coeff(k).scale(&rat(1, k as i64 - 1)));
        power = power.mul(&h);
    }
    Ok(CumulantVector::new(values))
}

/// Largest `|M_{2k}|^{1/(2k)} / (2k)` over the available even moments.
pub fn moment_growth_constant(m: &[Rational]) -> f64 {
    (1..)
        .map(|k| 2 * k)
        .take_while(|&j| j < m.len())
        .map(|j| crate::series::to_f64(&m[j]).abs().powf(1.0 / j as f64) / j as f64)
        .fold(0.0, f64::max)
}

/// `M_n = Σ_{π∈NC(n)} Π R_{|v|}` summed literally over enumerated partitions.
pub fn moments_by_enumeration(r: &CumulantVector<Rational>, n: usize, only_even_blocks: bool) -> Result<Rational> {
    let mut total = Rational::zero();
    for_each_nc(n, |p| {
        if only_even_blocks && p.blocks.iter().any(|b| b.len() % 2 == 1) {
            return;
        }
        total += p.blocks.iter().map(|b| r.get(b.len())).product::<Rational>();
    })?;
    Ok(total)
}

pub fn catalan(k: u64) -> Rational {
    let mut c = Rational::one();
    for j in 0..k {
        c = c * int(2 * (2 * j as i64 + 1)) / int(j as i64 + 2);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rv(v: &[i64]) -> CumulantVector<Rational> {
        CumulantVector::new(v.iter().map(|&x| int(x)).collect())
    }

    #[test]
    fn json_export_lists_both_sequences() {
        let v = rv(&[0, 1]).to_json("rational");
        assert_eq!(v["moments"], serde_json::json!(["1", "0", "1"]));
        assert_eq!(v["order"], 2);
        let formal = evolve_formal(&rv(&[0, 1, 0, 2])).unwrap().to_json("symbolic");
        assert_eq!(formal["q"], "symbolic");
        assert_eq!(formal["cumulants"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn nc_counts_are_catalan() {
        for n in 0..=10 {
            let all = enumerate_nc(n).unwrap();
            assert_eq!(int(all.len() as i64), catalan(n as u64), "n = {n}");
            assert!(all.iter().all(NcPartition::is_noncrossing));
        }
        assert_eq!(enumerate_nc(3).unwrap().len(), 5);
        assert!(enumerate_nc(15).is_err());
    }

    #[test]
    fn crossing_detected() {
        let p = NcPartition { blocks: vec![vec![1, 3], vec![2, 4]] };
        assert!(!p.is_noncrossing());
    }

    #[test]
    fn nc_type_counts() {
        assert_eq!(count_nc_type(&[3, 2]).unwrap(), 5);
        assert_eq!(count_nc_type(&[6]).unwrap(), 1);
        assert_eq!(count_nc_type(&[2, 2, 2]).unwrap(), 5);
    }

    #[test]
    fn semicircle_catalan() {
        let m = cumulants_to_moments(&CumulantVector::semicircle(int(1), 24));
        for k in 0..=12 {
            assert_eq!(m[2 * k], catalan(k as u64));
            if k < 12 {
                assert!(m[2 * k + 1].is_zero());
            }
        }
        assert!(cumulants_to_moments(&rv(&[0; 6]))[1..].iter().all(Zero::is_zero));
    }

    #[test]
    fn recursion_matches_enumeration() {
        let r = CumulantVector::new(vec![rat(1, 2), int(-1), rat(2, 3), int(3), rat(-1, 5), int(1), int(2), rat(1, 7)]);
        let m = cumulants_to_moments(&r);
        for n in 1..=8 {
            assert_eq!(m[n], moments_by_enumeration(&r, n, false).unwrap());
        }
    }

    #[test]
    fn even_cumulants_use_even_types_only() {
        let r = CumulantVector::new(vec![int(0), int(1), int(0), rat(-3, 2), int(0), rat(5, 4), int(0), int(2)]);
        let m = cumulants_to_moments(&r);
        for n in 1..=8 {
            assert_eq!(m[n], moments_by_enumeration(&r, n, true).unwrap());
        }
    }

    #[test]
    fn compress_and_convolve() {
        let gs = CumulantVector::semicircle(int(2), 6);
        let gt = CumulantVector::semicircle(int(3), 6);
        assert_eq!(free_convolve(&gs, &gt), CumulantVector::semicircle(int(5), 6));
        let r = rv(&[1, 2, 3, 4]);
        assert_eq!(free_compress(&r, &int(1)).unwrap(), r);
        assert_eq!(free_compress(&r, &int(2)).unwrap(), rv(&[1, 4, 12, 32]));
        assert!(free_compress(&r, &int(0)).is_err());
    }

    #[test]
    fn evolve_limits() {
        let r0 = rv(&[0, 1, 2, -1, 5]);
        assert_eq!(evolve(&r0, &int(1)).unwrap(), r0);
        assert_eq!(evolve(&r0, &int(0)).unwrap(), CumulantVector::semicircle(int(1), 5));
        assert!(evolve(&rv(&[1, 1]), &int(1)).is_err());
        let formal = evolve_formal(&r0).unwrap();
        let q = Poly::q();
        let composite = free_convolve(
            &free_compress(&r0.lift(), &q).unwrap(),
            &CumulantVector::semicircle(Poly::one() - q, 5),
        );
        assert_eq!(formal, composite);
    }

    #[test]
    fn stieltjes_examples() {
        let g = stieltjes_series(&[int(1), int(0), int(0)]);
        assert_eq!(g.coeffs(), &[int(0), int(1), int(0), int(0)]);
        // semicircle: G^2 - zG + 1 = 0 becomes w^2 M^2 - M + 1 = 0 with G = wM.
        let m = cumulants_to_moments(&CumulantVector::semicircle(int(1), 16));
        let ms = PowerSeries::new(m, 16);
        assert!(ms.mul(&ms).shift(2).sub(&ms).add(&PowerSeries::one(16)).is_zero());
    }

    #[test]
    fn stieltjes_cumulant_round_trip() {
        let r = CumulantVector::new(vec![rat(1, 3), int(2), rat(-1, 2), int(0), int(7), rat(2, 9)]);
        let g = stieltjes_series(&cumulants_to_moments(&r));
        assert_eq!(cumulants_from_stieltjes(&g).unwrap(), r);
    }

    fn small_rational() -> impl Strategy<Value = Rational> {
        (-20i64..20, 1i64..6).prop_map(|(p, q)| rat(p, q))
    }

    proptest! {
        #[test]
        fn round_trip_exact(values in proptest::collection::vec(small_rational(), 1..10)) {
            let r = CumulantVector::new(values);
            let m = cumulants_to_moments(&r);
            prop_assert_eq!(moments_to_cumulants(&m).unwrap(), r);
        }

        #[test]
        fn triangular(values in proptest::collection::vec(small_rational(), 2..9), bump in small_rational()) {
            let r = CumulantVector::new(values.clone());
            let mut longer = values.clone();
            longer.push(bump);
            let m_short = cumulants_to_moments(&r);
            let m_long = cumulants_to_moments(&CumulantVector::new(longer));
            prop_assert_eq!(&m_long[..m_short.len()], &m_short[..]);
        }

        #[test]
        fn convolution_adds(a in proptest::collection::vec(small_rational(), 4), b in proptest::collection::vec(small_rational(), 4)) {
            let sum = free_convolve(&CumulantVector::new(a.clone()), &CumulantVector::new(b.clone()));
            for k in 1..=4 {
                prop_assert_eq!(sum.get(k), a[k - 1].clone() + b[k - 1].clone());
            }
        }
    }
}
