//! The double cover `S̃_n`: elements `z^ε L(σ)` where `L(σ)` is the canonical
//! lift of `σ` along its bubble-sort reduced word in the generators `r_i`.
//!
//! The central sign of a product is read off the Clifford algebra image
//! `r_i ↦ (e_i - e_{i+1})/√2` (with `e_i² = 1`, anticommuting), where `z ↦ -1`.
//! Images are stored scaled by `√2^{ℓ(σ)}` so that all coefficients are integers.

use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

use crate::branching::{branching_multiplicity, dim_spin_f64, spin_vertices, NazarovLabel};
use crate::error::{Error, Result};
use crate::measures::jm_moment_rhs;
use crate::series::{int, to_f64, Rational};
use crate::spcore::{enumerate_partitions, enumerate_strict_partitions, Partition, StrictPartition};

pub const MAX_LETTERS: usize = 8;

/// Permutation of `{0..n-1}` stored as images.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm {
    n: u8,
    img: [u8; MAX_LETTERS],
}

impl Perm {
    pub fn identity(n: usize) -> Self {
        let mut img = [0; MAX_LETTERS];
        for (i, slot) in img.iter_mut().enumerate().take(n) {
            *slot = i as u8;
        }
        Self { n: n as u8, img }
    }

    pub fn from_images(images: &[u8]) -> Result<Self> {
        let n = images.len();
        if n > MAX_LETTERS {
            return Err(Error::SizeLimit { what: "permutation", n, limit: MAX_LETTERS });
        }
        let mut seen = [false; MAX_LETTERS];
        let mut img = [0; MAX_LETTERS];
        for (i, &x) in images.iter().enumerate() {
            if x as usize >= n || seen[x as usize] {
                return Err(Error::InvalidInput(format!("{images:?} is not a permutation")));
            }
            seen[x as usize] = true;
            img[i] = x;
        }
        Ok(Self { n: n as u8, img })
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn images(&self) -> &[u8] {
        &self.img[..self.n()]
    }

    pub fn apply(&self, i: usize) -> usize {
        self.img[i] as usize
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Perm) -> Perm {
        let mut img = [0; MAX_LETTERS];
        for (i, slot) in img.iter_mut().enumerate().take(self.n()) {
            *slot = self.img[other.img[i] as usize];
        }
        Perm { n: self.n, img }
    }

    pub fn inverse(&self) -> Perm {
        let mut img = [0; MAX_LETTERS];
        for i in 0..self.n() {
            img[self.img[i] as usize] = i as u8;
        }
        Perm { n: self.n, img }
    }

    /// Transposition of adjacent positions `i, i+1` (0-based).
    pub fn adjacent(n: usize, i: usize) -> Perm {
        let mut p = Perm::identity(n);
        p.img.swap(i, i + 1);
        p
    }

    pub fn inversions(&self) -> u32 {
        let mut count = 0;
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                if self.img[i] > self.img[j] {
                    count += 1;
                }
            }
        }
        count
    }

    /// Lehmer-code rank in `0..n!`.
    pub fn rank(&self) -> usize {
        let n = self.n();
        let mut rank = 0;
        for i in 0..n {
            let smaller = (i + 1..n).filter(|&j| self.img[j] < self.img[i]).count();
            rank = rank * (n - i) + smaller;
        }
        rank
    }

    pub fn unrank(n: usize, mut rank: usize) -> Perm {
        let mut digits = vec![0; n];
        for i in (0..n).rev() {
            let base = n - i;
            digits[i] = rank % base;
            rank /= base;
        }
        let mut pool: Vec<u8> = (0..n as u8).collect();
        let mut img = [0; MAX_LETTERS];
        for i in 0..n {
            img[i] = pool.remove(digits[i]);
        }
        Perm { n: n as u8, img }
    }

    /// Cycle type including fixed points, non-increasing.
    pub fn cycle_type(&self) -> Partition {
        let mut seen = [false; MAX_LETTERS];
        let mut lens = Vec::new();
        for start in 0..self.n() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.img[i] as usize;
                len += 1;
            }
            lens.push(len);
        }
        lens.sort_unstable_by(|a, b| b.cmp(a));
        lens
    }

    pub fn fixes(&self, i: usize) -> bool {
        self.img[i] as usize == i
    }

    /// Drops the last letter, which must be fixed.
    pub fn shrink(&self) -> Option<Perm> {
        let last = self.n() - 1;
        self.fixes(last).then(|| {
            let mut img = self.img;
            img[last] = 0;
            Perm { n: self.n - 1, img }
        })
    }

    /// Adds a fixed last letter.
    pub fn grow(&self) -> Perm {
        let mut p = *self;
        p.img[self.n()] = self.n;
        p.n += 1;
        p
    }
}

/// `z^ε L(σ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TwistedElement {
    pub perm: Perm,
    pub z: bool,
}

impl TwistedElement {
    pub fn identity(n: usize) -> Self {
        Self { perm: Perm::identity(n), z: false }
    }

    pub fn times_z(self) -> Self {
        Self { z: !self.z, ..self }
    }

    pub fn shrink(&self) -> Option<Self> {
        self.perm.shrink().map(|perm| Self { perm, z: self.z })
    }

    pub fn grow(&self) -> Self {
        Self { perm: self.perm.grow(), z: self.z }
    }
}

fn reorder_negative(a: usize, b: usize) -> bool {
    let mut a = a >> 1;
    let mut count = 0;
    while a != 0 {
        count += (a & b).count_ones();
        a >>= 1;
    }
    count & 1 == 1
}

/// `S̃_n` with cached Clifford images of the canonical lifts.
pub struct TwistedGroup {
    n: usize,
    perms: Vec<Perm>,
    lengths: Vec<u32>,
    images: Vec<Vec<i64>>,
    pivots: Vec<usize>,
    reorder: Vec<bool>,
}

impl TwistedGroup {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_LETTERS {
            return Err(Error::SizeLimit { what: "twisted group", n, limit: MAX_LETTERS });
        }
        let count: usize = (1..=n).product();
        let blades = 1usize << n;
        let perms: Vec<Perm> = (0..count).map(|r| Perm::unrank(n, r)).collect();
        let lengths: Vec<u32> = perms.iter().map(Perm::inversions).collect();
        let reorder: Vec<bool> = (0..blades * blades).map(|k| reorder_negative(k / blades, k % blades)).collect();
        let mut order: Vec<usize> = (0..count).collect();
        order.sort_by_key(|&r| lengths[r]);
        let mut images: Vec<Vec<i64>> = vec![Vec::new(); count];
        for &r in &order {
            let sigma = perms[r];
            let descent = (0..n.saturating_sub(1)).find(|&i| sigma.img[i] > sigma.img[i + 1]);
            images[r] = match descent {
                None => {
                    let mut one = vec![0; blades];
                    one[0] = 1;
                    one
                }
                Some(i) => {
                    let shorter = sigma.compose(&Perm::adjacent(n, i)).rank();
                    Self::times_root(&images[shorter], i, &reorder, blades)
                }
            };
        }
        let pivots = images.iter().map(|img| img.iter().position(|&c| c != 0).expect("nonzero image")).collect();
        Ok(Self { n, perms, lengths, images, pivots, reorder })
    }

    /// Right multiplication by `e_i - e_{i+1}`.
    fn times_root(a: &[i64], i: usize, reorder: &[bool], blades: usize) -> Vec<i64> {
        let mut out = vec![0; blades];
        for (blade, &c) in a.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (bit, sign) in [(1usize << i, 1i64), (1usize << (i + 1), -1i64)] {
                let s = if reorder[blade * blades + bit] { -sign } else { sign };
                out[blade ^ bit] += s * c;
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        2 * self.perms.len()
    }

    /// Central bit `c` with `L(σ) L(τ) = z^c L(στ)`.
    pub fn cocycle(&self, sigma: &Perm, tau: &Perm) -> bool {
        let (a, b) = (sigma.rank(), tau.rank());
        let prod = sigma.compose(tau).rank();
        self.cocycle_ranks(a, b, prod)
    }

    fn cocycle_ranks(&self, a: usize, b: usize, prod: usize) -> bool {
        let blades = 1usize << self.n;
        let p = self.pivots[prod];
        let (ia, ib) = (&self.images[a], &self.images[b]);
        let mut sum = 0i64;
        for (blade, &ca) in ia.iter().enumerate() {
            if ca == 0 {
                continue;
            }
            let other = blade ^ p;
            let cb = ib[other];
            if cb != 0 {
                let term = ca * cb;
                sum += if self.reorder[blade * blades + other] { -term } else { term };
            }
        }
        let excess = self.lengths[a] + self.lengths[b] - self.lengths[prod];
        let target = self.images[prod][p] << (excess / 2);
        debug_assert_eq!(sum.abs(), target.abs(), "Clifford images must agree up to sign");
        (sum < 0) != (target < 0)
    }

    pub fn mul(&self, x: &TwistedElement, y: &TwistedElement) -> TwistedElement {
        let perm = x.perm.compose(&y.perm);
        let c = self.cocycle_ranks(x.perm.rank(), y.perm.rank(), perm.rank());
        TwistedElement { perm, z: x.z ^ y.z ^ c }
    }

    pub fn inverse(&self, x: &TwistedElement) -> TwistedElement {
        let inv = x.perm.inverse();
        TwistedElement { perm: inv, z: x.z ^ self.cocycle(&x.perm, &inv) }
    }

    pub fn identity(&self) -> TwistedElement {
        TwistedElement::identity(self.n)
    }

    pub fn central(&self) -> TwistedElement {
        self.identity().times_z()
    }

    /// Generator `r_i`, `1 ≤ i < n`.
    pub fn generator(&self, i: usize) -> TwistedElement {
        assert!(i >= 1 && i < self.n, "generator index out of range");
        TwistedElement { perm: Perm::adjacent(self.n, i - 1), z: false }
    }

    /// Element id `2·rank + ε`.
    pub fn id(&self, x: &TwistedElement) -> usize {
        2 * x.perm.rank() + x.z as usize
    }

    pub fn element(&self, id: usize) -> TwistedElement {
        TwistedElement { perm: self.perms[id / 2], z: id % 2 == 1 }
    }

    pub fn elements(&self) -> impl Iterator<Item = TwistedElement> + '_ {
        (0..self.order()).map(|id| self.element(id))
    }

    pub fn product(&self, xs: &[TwistedElement]) -> TwistedElement {
        xs.iter().fold(self.identity(), |acc, x| self.mul(&acc, x))
    }

    /// `[i j] = z^{j-i-1} r_{j-1} ⋯ r_{i+1} r_i r_{i+1} ⋯ r_{j-1}` for `i < j`, and `[j i] = z[i j]`.
    pub fn transposition(&self, i: usize, j: usize) -> Result<TwistedElement> {
        if i == j || i == 0 || j == 0 || i > self.n || j > self.n {
            return Err(Error::InvalidInput(format!("bad transposition letters {i}, {j}")));
        }
        if i > j {
            return Ok(self.transposition(j, i)?.times_z());
        }
        let mut word: Vec<TwistedElement> = (i + 1..j).rev().map(|k| self.generator(k)).collect();
        word.push(self.generator(i));
        word.extend((i + 1..j).map(|k| self.generator(k)));
        let t = self.product(&word);
        Ok(if (j - i - 1) % 2 == 1 { t.times_z() } else { t })
    }

    /// `[i_1 .. i_r] = [i_{r-1} i_r] ⋯ [i_2 i_r][i_1 i_r]`.
    pub fn cycle(&self, letters: &[usize]) -> Result<TwistedElement> {
        let mut seen = std::collections::HashSet::new();
        if !letters.iter().all(|l| seen.insert(*l)) {
            return Err(Error::InvalidInput(format!("repeated letters in cycle {letters:?}")));
        }
        let Some((&last, rest)) = letters.split_last() else {
            return Ok(self.identity());
        };
        let mut word = Vec::with_capacity(rest.len());
        for &i in rest.iter().rev() {
            word.push(self.transposition(i, last)?);
        }
        Ok(self.product(&word))
    }

    /// Product of consecutive cycles `[1..ρ_1][ρ_1+1..ρ_1+ρ_2]⋯` over the parts of `ρ`.
    pub fn standard_element(&self, rho: &[u32]) -> Result<TwistedElement> {
        let mut start = 1;
        let mut word = Vec::new();
        for &part in rho {
            let letters: Vec<usize> = (start..start + part as usize).collect();
            word.push(self.cycle(&letters)?);
            start += part as usize;
        }
        if start - 1 > self.n {
            return Err(Error::InvalidInput(format!("type {rho:?} does not fit in {} letters", self.n)));
        }
        Ok(self.product(&word))
    }

    pub fn alg_mul(&self, a: &AlgebraElement, b: &AlgebraElement) -> AlgebraElement {
        let mut out = AlgebraElement::zero();
        for (x, cx) in &a.terms {
            for (y, cy) in &b.terms {
                out.add_term(self.mul(x, y), cx * cy);
            }
        }
        out
    }

    pub fn alg_pow(&self, a: &AlgebraElement, k: u32) -> AlgebraElement {
        (0..k).fold(AlgebraElement::basis(self.identity()), |acc, _| self.alg_mul(&acc, a))
    }

    /// `J̃_k = Σ_{i<k} [i k]`.
    pub fn jm(&self, k: usize) -> Result<AlgebraElement> {
        if k == 0 || k > self.n {
            return Err(Error::InvalidInput(format!("Jucys-Murphy index {k} out of range")));
        }
        let mut out = AlgebraElement::zero();
        for i in 1..k {
            out.add_term(self.transposition(i, k)?, Rational::one());
        }
        Ok(out)
    }

    /// `x a x^{-1}`.
    pub fn conjugate(&self, a: &AlgebraElement, x: &TwistedElement) -> AlgebraElement {
        let inv = self.inverse(x);
        let mut out = AlgebraElement::zero();
        for (y, c) in &a.terms {
            out.add_term(self.mul(&self.mul(x, y), &inv), c.clone());
        }
        out
    }

    pub fn commutes_with_generators(&self, a: &AlgebraElement) -> bool {
        (1..self.n).all(|i| self.conjugate(a, &self.generator(i)) == *a)
    }

    /// Conjugacy classes, ordered by cycle type (reverse-lexicographic) with the
    /// class of the standard element first within a split pair.
    pub fn conjugacy_classes(&self) -> Vec<TwistedClass> {
        let mut class_of = vec![usize::MAX; self.order()];
        let mut raw: Vec<Vec<usize>> = Vec::new();
        for start in 0..self.order() {
            if class_of[start] != usize::MAX {
                continue;
            }
            let k = raw.len();
            let mut members = vec![start];
            class_of[start] = k;
            let mut head = 0;
            while head < members.len() {
                let x = self.element(members[head]);
                head += 1;
                for i in 1..self.n {
                    let r = self.generator(i);
                    let y = self.id(&self.mul(&self.mul(&r, &x), &r));
                    if class_of[y] == usize::MAX {
                        class_of[y] = k;
                        members.push(y);
                    }
                }
            }
            members.sort_unstable();
            raw.push(members);
        }
        let mut classes: Vec<TwistedClass> = raw
            .into_iter()
            .map(|members| {
                let rep = self.element(members[0]);
                let cycle_type = rep.perm.cycle_type();
                let split = !members.contains(&self.id(&rep.times_z()));
                let parts: Vec<u32> = cycle_type.iter().copied().filter(|&p| p > 1).collect();
                let standard = self.id(&self.standard_element(&parts).expect("fits"));
                let z_flag = if split { Some(!members.contains(&standard)) } else { None };
                TwistedClass { cycle_type, z_flag, members }
            })
            .collect();
        let type_order: Vec<Partition> = enumerate_partitions(self.n as u32);
        classes.sort_by_key(|c| (type_order.iter().position(|t| *t == c.cycle_type), c.z_flag));
        classes
    }
}

/// A conjugacy class of `S̃_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistedClass {
    /// Cycle type of the image in `S_n`, fixed points included.
    pub cycle_type: Partition,
    /// `None` if the class is closed under `z`; otherwise whether it contains `z` times the standard element.
    pub z_flag: Option<bool>,
    /// Sorted element ids.
    pub members: Vec<usize>,
}

impl TwistedClass {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn is_split(&self) -> bool {
        self.z_flag.is_some()
    }

    pub fn label(&self) -> String {
        let parts: Vec<String> = self.cycle_type.iter().map(u32::to_string).collect();
        match self.z_flag {
            None => format!("({})", parts.join(",")),
            Some(false) => format!("({})", parts.join(",")),
            Some(true) => format!("z({})", parts.join(",")),
        }
    }
}

/// Type `ρ` lies in `OP_n ⊔ SP_n^-`: all parts odd, or strict with `n - l` odd.
pub fn splits(cycle_type: &[u32]) -> bool {
    let n: u32 = cycle_type.iter().sum();
    let all_odd = cycle_type.iter().all(|p| p % 2 == 1);
    let strict = cycle_type.windows(2).all(|w| w[0] > w[1]);
    all_odd || (strict && (n as usize - cycle_type.len()) % 2 == 1)
}

/// Rational combination of group elements.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AlgebraElement {
    terms: HashMap<TwistedElement, Rational>,
}

impl AlgebraElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(x: TwistedElement) -> Self {
        let mut a = Self::zero();
        a.add_term(x, Rational::one());
        a
    }

    pub fn scalar(n: usize, c: Rational) -> Self {
        let mut a = Self::zero();
        a.add_term(TwistedElement::identity(n), c);
        a
    }

    pub fn add_term(&mut self, x: TwistedElement, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(x).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&x);
        }
    }

    pub fn coeff(&self, x: &TwistedElement) -> Rational {
        self.terms.get(x).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TwistedElement, &Rational)> {
        self.terms.iter()
    }

    pub fn support_len(&self) -> usize {
        self.terms.len()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (x, c) in &other.terms {
            out.add_term(*x, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (x, c) in &other.terms {
            out.add_term(*x, -c.clone());
        }
        out
    }

    /// Conditional expectation onto the subgroup fixing the last letter, returned on one letter fewer.
    pub fn restrict(&self) -> Self {
        let mut out = Self::zero();
        for (x, c) in &self.terms {
            if let Some(y) = x.shrink() {
                out.add_term(y, c.clone());
            }
        }
        out
    }

    /// Same element viewed in the group on one more letter.
    pub fn grow(&self) -> Self {
        Self { terms: self.terms.iter().map(|(x, c)| (x.grow(), c.clone())).collect() }
    }

    /// Image under `S̃_n → S_n`, forgetting the central bit.
    pub fn project(&self) -> HashMap<Perm, Rational> {
        let mut out: HashMap<Perm, Rational> = HashMap::new();
        for (x, c) in &self.terms {
            *out.entry(x.perm).or_insert_with(Rational::zero) += c;
        }
        out.retain(|_, c| !c.is_zero());
        out
    }
}

/// Class sum `Σ_{x∈C} x`.
pub fn class_sum(group: &TwistedGroup, class: &TwistedClass) -> AlgebraElement {
    let mut a = AlgebraElement::zero();
    for &id in &class.members {
        a.add_term(group.element(id), Rational::one());
    }
    a
}

/// Coefficients `α_C` in `a = Σ α_C A_C`.
pub fn center_expand(group: &TwistedGroup, classes: &[TwistedClass], a: &AlgebraElement) -> Result<Vec<Rational>> {
    classes
        .iter()
        .map(|class| {
            let alpha = a.coeff(&group.element(class.members[0]));
            if class.members.iter().any(|&id| a.coeff(&group.element(id)) != alpha) {
                return Err(Error::NotCentral(format!("coefficients vary on class {}", class.label())));
            }
            Ok(alpha)
        })
        .collect()
}

/// `Ẽ_n J̃_{n+1}^{2k}` as an element of `C[S̃_n]`.
pub fn restricted_jm_power(n: usize, k: u32) -> Result<AlgebraElement> {
    let big = TwistedGroup::new(n + 1)?;
    let j = big.jm(n + 1)?;
    Ok(big.alg_pow(&j, 2 * k).restrict())
}

/// `J̃_{n+1}² = A_{big} - A_{small} + n`, where the class sums run over the class of `[1 2 3]`
/// in `S̃_{n+1}` and in `S̃_n` (embedded); exact check for `n ≥ 3`.
pub fn jm_square_identity(n: usize) -> Result<bool> {
    if n < 3 {
        return Err(Error::InvalidInput(format!("the identity needs n >= 3, got {n}")));
    }
    let big = TwistedGroup::new(n + 1)?;
    let small = TwistedGroup::new(n)?;
    let j = big.jm(n + 1)?;
    let lhs = big.alg_mul(&j, &j);
    let class_of = |g: &TwistedGroup| -> Result<AlgebraElement> {
        let x = g.cycle(&[1, 2, 3])?;
        let id = g.id(&x);
        let class = g.conjugacy_classes().into_iter().find(|c| c.members.binary_search(&id).is_ok()).expect("has a class");
        Ok(class_sum(g, &class))
    };
    let rhs = class_of(&big)?.sub(&class_of(&small)?.grow()).add(&scalar_of(n + 1, n as i64));
    Ok(lhs == rhs)
}

/// Number of index sequences `(i_1..i_{2k})` with `[i_1 n+1]⋯[i_{2k} n+1]` landing in each class of `S̃_n`.
pub fn walk_counts(n: usize, k: u32, classes: &[TwistedClass], small: &TwistedGroup) -> Result<Vec<u64>> {
    let big = TwistedGroup::new(n + 1)?;
    let steps: Vec<TwistedElement> = (1..=n).map(|i| big.transposition(i, n + 1)).collect::<Result<_>>()?;
    let mut class_of = vec![usize::MAX; small.order()];
    for (c, class) in classes.iter().enumerate() {
        for &id in &class.members {
            class_of[id] = c;
        }
    }
    let mut counts = vec![0u64; classes.len()];
    let len = 2 * k as usize;
    let total = n.pow(len as u32);
    for code in 0..total {
        let mut x = big.identity();
        let mut rest = code;
        for _ in 0..len {
            x = big.mul(&x, &steps[rest % n]);
            rest /= n;
        }
        if let Some(y) = x.shrink() {
            counts[class_of[small.id(&y)]] += 1;
        }
    }
    Ok(counts)
}

/// One irreducible character of `S̃_n`.
#[derive(Clone, Debug)]
pub struct CharacterRow {
    pub label: Option<NazarovLabel>,
    pub spin: bool,
    pub dim: f64,
    /// `χ(g_C)` per class.
    pub values: Vec<Complex64>,
    /// Central character `|C| χ(g_C) / dim` per class.
    pub central: Vec<Complex64>,
}

#[derive(Clone, Debug)]
pub struct CharacterTable {
    pub n: usize,
    pub classes: Vec<TwistedClass>,
    pub rows: Vec<CharacterRow>,
}

impl CharacterTable {
    pub fn spin_rows(&self) -> impl Iterator<Item = &CharacterRow> {
        self.rows.iter().filter(|r| r.spin)
    }

    pub fn row(&self, label: &NazarovLabel) -> Option<&CharacterRow> {
        self.rows.iter().find(|r| r.label.as_ref() == Some(label))
    }

    /// Index of the class containing `x`.
    pub fn class_index(&self, group: &TwistedGroup, x: &TwistedElement) -> usize {
        let id = group.id(x);
        self.classes.iter().position(|c| c.members.binary_search(&id).is_ok()).expect("every element has a class")
    }

    /// CSV with one row per character; values as `a+bi`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,spin,dim");
        for c in &self.classes {
            out.push_str(&format!(",\"{}\"", c.label()));
        }
        out.push('\n');
        for row in &self.rows {
            let label = row.label.as_ref().map_or("ordinary".to_string(), |l| l.to_string());
            out.push_str(&format!("\"{label}\",{},{:.0}", row.spin, row.dim));
            for v in &row.values {
                out.push_str(&format!(",{}", fmt_complex(*v)));
            }
            out.push('\n');
        }
        out
    }
}

pub fn fmt_complex(v: Complex64) -> String {
    let clean = |x: f64| if x.abs() < 5e-13 { 0.0 } else { x };
    let (re, im) = (clean(v.re), clean(v.im));
    if im < 0.0 {
        format!("{re:.12}-{:.12}i", -im)
    } else {
        format!("{re:.12}+{im:.12}i")
    }
}

const EIGEN_TOL: f64 = 1e-8;

/// Central characters of all irreducibles of `group` by simultaneous diagonalisation
/// of the class-sum multiplication matrices.
fn central_characters(group: &TwistedGroup, classes: &[TwistedClass], seed: u64) -> Result<Vec<Vec<Complex64>>> {
    use nalgebra::DMatrix;
    let r = classes.len();
    let mut class_of = vec![0usize; group.order()];
    for (c, class) in classes.iter().enumerate() {
        for &id in &class.members {
            class_of[id] = c;
        }
    }
    // c[i][j][k] = #{x ∈ C_i : x^{-1} g_k ∈ C_j}
    let mut structure = vec![vec![vec![0f64; r]; r]; r];
    for (k, ck) in classes.iter().enumerate() {
        let g = group.element(ck.members[0]);
        for (i, ci) in classes.iter().enumerate() {
            for &id in &ci.members {
                let x_inv = group.inverse(&group.element(id));
                let j = class_of[group.id(&group.mul(&x_inv, &g))];
                structure[i][j][k] += 1.0;
            }
        }
    }
    let identity_class = class_of[group.id(&group.identity())];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _attempt in 0..8 {
        let weights: Vec<f64> = (0..r).map(|_| rng.gen_range(0.5..1.5)).collect();
        let m = DMatrix::from_fn(r, r, |j, k| (0..r).map(|i| weights[i] * structure[i][j][k]).sum::<f64>());
        let eig = m.clone().complex_eigenvalues();
        let scale = eig.iter().map(|e| e.norm()).fold(1.0, f64::max);
        let gap = (0..r)
            .flat_map(|a| (a + 1..r).map(move |b| (a, b)))
            .map(|(a, b)| (eig[a] - eig[b]).norm())
            .fold(f64::INFINITY, f64::min);
        if gap < 1e-6 * scale {
            continue;
        }
        let mc: DMatrix<Complex64> = m.map(|x| Complex64::new(x, 0.0));
        let mut rows = Vec::with_capacity(r);
        let mut ok = true;
        for theta in eig.iter() {
            let shift = theta + Complex64::new(1e-9 * scale, 1e-9 * scale);
            let a = &mc - DMatrix::<Complex64>::identity(r, r) * shift;
            let lu = a.lu();
            let mut v = DMatrix::<Complex64>::from_fn(r, 1, |i, _| Complex64::new(1.0 + i as f64 * 0.37, 0.5));
            for _ in 0..4 {
                match lu.solve(&v) {
                    Some(next) => {
                        let norm = next.norm();
                        v = next / Complex64::new(norm, 0.0);
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                break;
            }
            let pivot = v[(identity_class, 0)];
            if pivot.norm() < 1e-12 {
                ok = false;
                break;
            }
            let w: Vec<Complex64> = (0..r).map(|i| v[(i, 0)] / pivot).collect();
            // every class matrix must act on w by the scalar w_i
            let residual = (0..r)
                .map(|i| {
                    (0..r)
                        .map(|j| {
                            let lhs: Complex64 = (0..r).map(|k| w[k] * structure[i][j][k]).sum();
                            (lhs - w[i] * w[j]).norm()
                        })
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            let size = w.iter().map(|x| x.norm()).fold(1.0, f64::max);
            if residual > EIGEN_TOL * size * size {
                ok = false;
                break;
            }
            rows.push(w);
        }
        if ok {
            return Ok(rows);
        }
    }
    Err(Error::Degenerate("could not separate central characters".into()))
}

fn table_without_labels(group: &TwistedGroup, seed: u64) -> Result<CharacterTable> {
    let classes = group.conjugacy_classes();
    let order = group.order() as f64;
    let z_class = classes.iter().position(|c| c.members == vec![group.id(&group.central())]).expect("z is central");
    let rows = central_characters(group, &classes, seed)?
        .into_iter()
        .map(|central| {
            let norm: f64 = central.iter().zip(&classes).map(|(w, c)| w.norm_sqr() / c.size() as f64).sum();
            let dim = (order / norm).sqrt();
            let values: Vec<Complex64> =
                central.iter().zip(&classes).map(|(w, c)| w * dim / c.size() as f64).collect();
            let spin = (values[z_class] / dim + 1.0).norm() < 1e-6;
            CharacterRow { label: None, spin, dim, values, central }
        })
        .collect();
    Ok(CharacterTable { n: group.n(), classes, rows })
}

/// Character tables of `S̃_1..S̃_n` with spin rows matched to Nazarov labels.
///
/// Rows are matched level by level: the restriction of each spin row to the
/// previous level is decomposed and compared with the branching rule. Rows with
/// identical restrictions (the two signs of some `λ`) are matched in order, which
/// fixes the labelling only up to tensoring with the sign character.
pub fn character_tables(n: usize) -> Result<Vec<CharacterTable>> {
    if n == 0 || n > 6 {
        return Err(Error::SizeLimit { what: "character table", n, limit: 6 });
    }
    let mut tables: Vec<CharacterTable> = Vec::new();
    let mut prev_group: Option<TwistedGroup> = None;
    for m in 1..=n {
        let group = TwistedGroup::new(m)?;
        let mut table = table_without_labels(&group, 0x5eed + m as u64)?;
        let labels = spin_vertices(m as u32);
        let spin_idx: Vec<usize> = (0..table.rows.len()).filter(|&i| table.rows[i].spin).collect();
        if spin_idx.len() != labels.len() {
            return Err(Error::Internal(format!("{} spin rows but {} labels at n = {m}", spin_idx.len(), labels.len())));
        }
        let signature = |row: &CharacterRow| -> Result<Vec<i64>> {
            let (Some(pg), Some(pt)) = (prev_group.as_ref(), tables.last()) else {
                return Ok(vec![row.dim.round() as i64]);
            };
            let mut sig = vec![row.dim.round() as i64];
            for lower in spin_vertices(m as u32 - 1) {
                let psi = pt.row(&lower).expect("previous level labelled");
                let mut inner = Complex64::zero();
                for (k, class) in pt.classes.iter().enumerate() {
                    let h = pg.element(class.members[0]).grow();
                    let c = table.class_index(&group, &h);
                    inner += row.values[c] * psi.values[k].conj() * class.size() as f64;
                }
                let mult = inner / pg.order() as f64;
                if (mult - mult.re.round()).norm() > 1e-6 {
                    return Err(Error::Degenerate(format!("non-integral restriction multiplicity {mult}")));
                }
                sig.push(mult.re.round() as i64);
            }
            Ok(sig)
        };
        let expected = |label: &NazarovLabel| -> Vec<i64> {
            let mut sig = vec![dim_spin_f64(label).round() as i64];
            if m > 1 {
                sig.extend(spin_vertices(m as u32 - 1).iter().map(|l| branching_multiplicity(label, l) as i64));
            }
            sig
        };
        let mut unused: Vec<NazarovLabel> = labels.clone();
        let sigs: Vec<Vec<i64>> = spin_idx.iter().map(|&i| signature(&table.rows[i])).collect::<Result<_>>()?;
        for (&i, sig) in spin_idx.iter().zip(sigs) {
            let pos = unused
                .iter()
                .position(|l| expected(l) == sig)
                .ok_or_else(|| Error::Internal(format!("spin row with signature {sig:?} matches no label at n = {m}")))?;
            table.rows[i].label = Some(unused.remove(pos));
        }
        tables.push(table);
        prev_group = Some(group);
    }
    Ok(tables)
}

pub fn character_table(n: usize) -> Result<CharacterTable> {
    Ok(character_tables(n)?.pop().expect("n >= 1"))
}

/// One label's comparison in the trace formula.
#[derive(Clone, Debug)]
pub struct TraceFormulaRow {
    pub label: NazarovLabel,
    pub lhs: Complex64,
    pub rhs: Rational,
    pub deviation: f64,
}

/// `χ^{(λ,γ)}(Ẽ_n J̃_{n+1}^{2k}) / dim` against `Σ (c(c+1)/2)^k m({c,-c-1})` for each spin label.
pub fn verify_trace_formula(n: usize, k: u32) -> Result<Vec<TraceFormulaRow>> {
    if !(1..=6).contains(&n) || !(1..=3).contains(&k) {
        return Err(Error::InvalidInput(format!("trace formula check needs 1 <= n <= 6, 1 <= k <= 3 (got n = {n}, k = {k})")));
    }
    let table = character_table(n)?;
    let group = TwistedGroup::new(n)?;
    let a = restricted_jm_power(n, k)?;
    let alpha = center_expand(&group, &table.classes, &a)?;
    Ok(table
        .spin_rows()
        .map(|row| {
            let label = row.label.clone().expect("spin rows are labelled");
            let lhs: Complex64 = alpha.iter().zip(&row.central).map(|(a, w)| w * to_f64(a)).sum();
            let rhs = jm_moment_rhs(&label.lambda, k);
            let deviation = (lhs - Complex64::new(to_f64(&rhs), 0.0)).norm();
            TraceFormulaRow { label, lhs, rhs, deviation }
        })
        .collect())
}

/// `(1/|SP_n|) Σ_λ χ^{(λ,γ)}([1 .. 2k-1]) / dim`, one sign per `λ`.
pub fn uniform_ensemble_sum(n: usize, k: usize) -> Result<f64> {
    if k < 1 || 2 * k - 1 > n {
        return Err(Error::InvalidInput(format!("cycle length {} exceeds n = {n}", 2 * k as i64 - 1)));
    }
    let table = character_table(n)?;
    let group = TwistedGroup::new(n)?;
    let x = group.cycle(&(1..2 * k).collect::<Vec<_>>())?;
    let c = table.class_index(&group, &x);
    let lambdas = enumerate_strict_partitions(n as u32);
    let mut total = 0.0;
    for lambda in &lambdas {
        let label = NazarovLabel::all_of(lambda).remove(0);
        let row = table.row(&label).ok_or_else(|| Error::Internal(format!("missing row {label}")))?;
        total += row.values[c].re / row.dim;
    }
    Ok(total / lambdas.len() as f64)
}

/// Eigenvalue check for `P = P_down P_up` on spin character columns of odd types:
/// returns the largest deviation from `(1 - |ρ|/n) χ_ρ` over all odd `ρ` with no parts 1.
pub fn res_ind_eigen_deviation(n: usize) -> Result<f64> {
    let table = character_table(n)?;
    let group = TwistedGroup::new(n)?;
    let lm = crate::branching::level_matrices(n as u32)?;
    let mut worst: f64 = 0.0;
    for rho in enumerate_partitions(n as u32) {
        let reduced: Vec<u32> = rho.iter().copied().filter(|&p| p > 1).collect();
        if reduced.is_empty() || reduced.iter().any(|p| p % 2 == 0) {
            continue;
        }
        let size: u32 = reduced.iter().sum();
        let eigen = 1.0 - size as f64 / n as f64;
        for x in [group.standard_element(&reduced)?, group.standard_element(&reduced)?.times_z()] {
            let c = table.class_index(&group, &x);
            let column: Vec<Complex64> = lm
                .upper
                .iter()
                .map(|l| {
                    let row = table.row(l).expect("labelled");
                    row.values[c] / row.dim
                })
                .collect();
            for (i, _) in lm.upper.iter().enumerate() {
                let applied: Complex64 = lm.p[i].iter().zip(&column).map(|(p, v)| v * to_f64(p)).sum();
                worst = worst.max((applied - column[i] * eigen).norm());
            }
        }
    }
    Ok(worst)
}

/// Class sizes `n^{↓|ρ|} / z_ρ` for `ρ` with odd parts and no parts 1.
pub fn odd_class_size(n: usize, rho: &[u32]) -> u64 {
    let size: usize = rho.iter().map(|&p| p as usize).sum();
    let falling: u64 = (0..size).map(|i| (n - i) as u64).product();
    let mut z: u64 = 1;
    let mut counts: HashMap<u32, u64> = HashMap::new();
    for &p in rho {
        *counts.entry(p).or_default() += 1;
    }
    for (p, m) in counts {
        z *= (p as u64).pow(m as u32) * (1..=m).product::<u64>();
    }
    falling / z
}

pub fn strict_partition_of(cycle_type: &[u32]) -> Option<StrictPartition> {
    StrictPartition::new(cycle_type.to_vec()).ok()
}

pub fn scalar_of(n: usize, x: i64) -> AlgebraElement {
    AlgebraElement::scalar(n, int(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert_eq, proptest, ProptestConfig};

    #[test]
    fn perm_basics() {
        let p = Perm::from_images(&[2, 0, 1]).unwrap();
        assert_eq!(p.compose(&p.inverse()), Perm::identity(3));
        for r in 0..120 {
            assert_eq!(Perm::unrank(5, r).rank(), r);
        }
        assert_eq!(Perm::from_images(&[1, 0, 3, 4, 2]).unwrap().cycle_type(), vec![3, 2]);
        assert!(Perm::from_images(&[0, 0]).is_err());
    }

    #[test]
    fn defining_relations() {
        let g = TwistedGroup::new(5).unwrap();
        let e = g.identity();
        for i in 1..5 {
            let r = g.generator(i);
            assert_eq!(g.mul(&r, &r), e);
            if i + 1 < 5 {
                let s = g.generator(i + 1);
                let rs = g.mul(&r, &s);
                assert_eq!(g.product(&[rs, rs, rs]), e);
            }
            for j in i + 2..5 {
                let s = g.generator(j);
                assert_eq!(g.mul(&r, &s), g.mul(&s, &r).times_z());
            }
        }
        assert_eq!(g.order(), 240);
    }

    #[test]
    fn cocycle_identity_and_inverses() {
        let g = TwistedGroup::new(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let pick = |rng: &mut ChaCha8Rng| g.element(rng.gen_range(0..g.order()));
            let (a, b, c) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
            assert_eq!(g.mul(&g.mul(&a, &b), &c), g.mul(&a, &g.mul(&b, &c)));
            let (s, t, u) = (a.perm, b.perm, c.perm);
            let lhs = g.cocycle(&s, &t) ^ g.cocycle(&s.compose(&t), &u);
            let rhs = g.cocycle(&t, &u) ^ g.cocycle(&s, &t.compose(&u));
            assert_eq!(lhs, rhs);
            assert_eq!(g.mul(&a, &g.inverse(&a)), g.identity());
            assert_eq!(g.mul(&g.central(), &a), a.times_z());
        }
    }

    #[test]
    fn transpositions_and_cycles() {
        let g = TwistedGroup::new(6).unwrap();
        for i in 1..=6 {
            for j in 1..=6 {
                if i != j {
                    assert_eq!(g.transposition(j, i).unwrap(), g.transposition(i, j).unwrap().times_z());
                    let t = g.transposition(i, j).unwrap();
                    assert_eq!(g.mul(&t, &t), g.identity(), "[{i} {j}]^2 = e");
                }
            }
        }
        let c = g.cycle(&[1, 2, 3]).unwrap();
        assert_eq!(c.perm.images()[..3], [1, 2, 0]);
        assert!(g.cycle(&[1, 2, 1]).is_err());
        // disjoint cycles commute up to z^{(p-1)(q-1)}
        for (a, b) in [(vec![1, 2], vec![3, 4]), (vec![1, 2, 3], vec![4, 5]), (vec![1, 5], vec![2, 3, 4, 6]), (vec![2, 4, 6], vec![1, 3, 5])] {
            let x = g.cycle(&a).unwrap();
            let y = g.cycle(&b).unwrap();
            let sign = (a.len() - 1) * (b.len() - 1) % 2 == 1;
            let yx = g.mul(&y, &x);
            assert_eq!(g.mul(&x, &y), if sign { yx.times_z() } else { yx });
        }
        // cyclic rotation of an odd cycle gives the same element
        assert_eq!(g.cycle(&[1, 2, 3]).unwrap(), g.cycle(&[2, 3, 1]).unwrap());
    }

    #[test]
    fn jm_basics() {
        let g = TwistedGroup::new(6).unwrap();
        assert_eq!(g.jm(1).unwrap(), AlgebraElement::zero());
        for k in 2..=6 {
            let j2 = g.alg_mul(&g.jm(k).unwrap(), &g.jm(k).unwrap());
            for i in 1..k.saturating_sub(1) {
                let r = g.generator(i);
                assert_eq!(g.conjugate(&j2, &r), j2, "J_{k}^2 commutes with r_{i}");
            }
        }
    }

    #[test]
    fn jm_square_as_class_sums() {
        for n in 3..=6 {
            assert!(jm_square_identity(n).unwrap(), "n = {n}");
        }
        assert!(jm_square_identity(2).is_err());
    }

    #[test]
    fn classes_split_and_sizes() {
        for n in 1..=6 {
            let g = TwistedGroup::new(n).unwrap();
            let classes = g.conjugacy_classes();
            assert_eq!(classes.iter().map(TwistedClass::size).sum::<usize>(), g.order());
            for class in &classes {
                assert_eq!(class.is_split(), splits(&class.cycle_type), "n = {n}, type {:?}", class.cycle_type);
                if class.cycle_type.iter().all(|p| p % 2 == 1) {
                    let rho: Vec<u32> = class.cycle_type.iter().copied().filter(|&p| p > 1).collect();
                    assert_eq!(class.size() as u64, odd_class_size(n, &rho));
                }
            }
        }
        let g = TwistedGroup::new(4).unwrap();
        let classes = g.conjugacy_classes();
        let c = g.cycle(&[1, 2, 3]).unwrap();
        let holder = classes.iter().find(|k| k.members.contains(&g.id(&c))).unwrap();
        assert!(!holder.members.contains(&g.id(&c.times_z())));
    }

    #[test]
    fn restriction_commutes_with_projection() {
        let g = TwistedGroup::new(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mut a = AlgebraElement::zero();
            for _ in 0..30 {
                a.add_term(g.element(rng.gen_range(0..g.order())), int(rng.gen_range(-3..4)));
            }
            let lhs = a.restrict().project();
            let rhs: HashMap<Perm, Rational> =
                a.project().into_iter().filter_map(|(p, c)| p.shrink().map(|q| (q, c))).collect();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn center_expansion_and_walks() {
        for n in 2..=5 {
            let small = TwistedGroup::new(n).unwrap();
            let classes = small.conjugacy_classes();
            for k in 1..=3u32 {
                let a = restricted_jm_power(n, k).unwrap();
                let alpha = center_expand(&small, &classes, &a).unwrap();
                assert!(alpha.iter().all(|x| *x >= int(0)), "α ≥ 0");
                let walks = walk_counts(n, k, &classes, &small).unwrap();
                for (c, class) in classes.iter().enumerate() {
                    assert_eq!(&alpha[c] * int(class.size() as i64), int(walks[c] as i64));
                }
            }
        }
        let g = TwistedGroup::new(4).unwrap();
        let classes = g.conjugacy_classes();
        assert!(center_expand(&g, &classes, &AlgebraElement::basis(g.generator(1))).is_err());
    }

    #[test]
    fn character_tables_consistent() {
        let tables = character_tables(6).unwrap();
        for t in &tables {
            let order = 2.0 * (1..=t.n).product::<usize>() as f64;
            let dims: f64 = t.rows.iter().map(|r| r.dim * r.dim).sum();
            assert!((dims - order).abs() < 1e-6);
            assert_eq!(t.rows.len(), t.classes.len());
            for row in t.spin_rows() {
                let label = row.label.as_ref().unwrap();
                assert!((row.dim - dim_spin_f64(label)).abs() < 1e-9);
                for (v, class) in row.values.iter().zip(&t.classes) {
                    if !class.is_split() {
                        assert!(v.norm() < 1e-9);
                    }
                }
            }
            // row orthogonality
            for a in &t.rows {
                for b in &t.rows {
                    let inner: Complex64 = a
                        .values
                        .iter()
                        .zip(&b.values)
                        .zip(&t.classes)
                        .map(|((x, y), c)| x * y.conj() * c.size() as f64)
                        .sum::<Complex64>()
                        / order;
                    let same = std::ptr::eq(a, b);
                    assert!((inner - if same { 1.0 } else { 0.0 }).norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn trace_formula_small() {
        for (n, k) in [(1, 1), (2, 1), (3, 1), (4, 1), (4, 2), (5, 2)] {
            for row in verify_trace_formula(n, k).unwrap() {
                assert!(row.deviation < 1e-9, "n = {n}, k = {k}, {}: {} vs {}", row.label, row.lhs, row.rhs);
            }
        }
    }

    #[test]
    fn res_ind_eigenvectors() {
        for n in 3..=5 {
            assert!(res_ind_eigen_deviation(n).unwrap() < 1e-9);
        }
    }

    #[test]
    fn uniform_ensemble_rejects_long_cycles() {
        assert!(uniform_ensemble_sum(4, 3).is_err());
        assert!(uniform_ensemble_sum(5, 2).unwrap().is_finite());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn product_projects_to_composition(a in 0usize..1440, b in 0usize..1440) {
            let g = TwistedGroup::new(6).unwrap();
            let (x, y) = (g.element(a), g.element(b));
            prop_assert_eq!(g.mul(&x, &y).perm, x.perm.compose(&y.perm));
        }
    }
}
