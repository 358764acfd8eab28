//! Set families that schedule transmissions: strong k-selective families
//! for the aggregation protocols, and dispersers for fire-and-forward.
//!
//! A strong k-selective family over `[n]` isolates every element of every
//! set of at most `k` labels. A disperser `D_1..D_m ⊆ [s]` guarantees that
//! however the sets are shifted by depths in `[n]`, each shifted set keeps
//! a point outside the union of the others.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::engine::DuplexMode;
use crate::rng::global_rng;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SelectorError {
    #[error("exhaustive verification needs {work} operations, budget is {budget}")]
    ParametersTooLarge { work: u128, budget: u128 },
}

/// How a selective family was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Construction {
    /// The single set `[n]` (k = 1).
    Whole,
    /// The `n` singletons `{0}, …, {n-1}`.
    Singletons,
    /// Independent inclusion with probability `1/k`.
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SelectiveFamily {
    pub n: usize,
    pub k: usize,
    pub construction: Construction,
    /// Sorted subsets of `[n]`.
    pub sets: Vec<Vec<usize>>,
    /// Set once [`verify_selective_family`] accepted the family, or when the
    /// construction is selective by definition.
    pub verified: bool,
}

impl SelectiveFamily {
    pub fn m(&self) -> usize {
        self.sets.len()
    }

    /// For every label, the ascending indices of the sets containing it.
    pub fn membership(&self) -> Vec<Vec<usize>> {
        let mut member = vec![Vec::new(); self.n];
        for (j, set) in self.sets.iter().enumerate() {
            for &x in set {
                member[x].push(j);
            }
        }
        member
    }
}

fn singletons(n: usize, k: usize) -> SelectiveFamily {
    SelectiveFamily { n, k, construction: Construction::Singletons, sets: (0..n).map(|x| vec![x]).collect(), verified: true }
}

/// Size of the randomized construction: `⌈8 k² ln max(n, 2)⌉`.
pub fn random_family_size(n: usize, k: usize) -> usize {
    libm::ceil(8.0 * (k * k) as f64 * libm::log(n.max(2) as f64)) as usize
}

/// Draws the randomized family: `⌈8k² ln n⌉` sets, each label included in
/// each set independently with probability `1/k`. Unverified.
pub fn random_selective_family(n: usize, k: usize, seed: u64) -> SelectiveFamily {
    let m = random_family_size(n, k);
    let mut rng = global_rng(seed);
    let p = 1.0 / k.max(1) as f64;
    let sets = (0..m).map(|_| (0..n).filter(|_| rng.gen_bool(p)).collect()).collect();
    SelectiveFamily { n, k, construction: Construction::Random { seed }, sets, verified: false }
}

/// Strong `k`-selective family over `[n]`, `1 ≤ k ≤ n`.
///
/// `k = 1` gives `{[n]}`; `k ≥ √(n / log₂ n)` gives the `n` singletons; the
/// singletons are also used whenever the randomized family would have at
/// least `n` sets. Otherwise the family is drawn by
/// [`random_selective_family`] and is not verified.
pub fn build_selective_family(n: usize, k: usize, seed: u64) -> SelectiveFamily {
    assert!(k >= 1 && k <= n.max(1), "selectivity must satisfy 1 <= k <= n");
    if k == 1 {
        return SelectiveFamily { n, k, construction: Construction::Whole, sets: vec![(0..n).collect()], verified: true };
    }
    let log_n = libm::log2(n as f64);
    if (k as f64) >= libm::sqrt(n as f64 / log_n) || random_family_size(n, k) >= n {
        return singletons(n, k);
    }
    random_selective_family(n, k, seed)
}

/// Default work budget of [`verify_selective_family`].
pub const VERIFY_BUDGET: u128 = 2_000_000_000;

// saturates at u128::MAX
fn binomial(n: u128, k: u128) -> u128 {
    (0..k).try_fold(1u128, |acc, i| Some(acc.checked_mul(n - i)? / (i + 1))).unwrap_or(u128::MAX)
}

/// Operation count of the exhaustive check for `m` sets over `[n]`:
/// `Σ_{i≤k} C(n,i) · i · m`, saturating.
pub fn exhaustive_work(n: usize, k: usize, m: usize) -> u128 {
    (1..=k.min(n) as u128)
        .map(|i| binomial(n as u128, i).saturating_mul(i).saturating_mul(m as u128))
        .fold(0, u128::saturating_add)
}

pub fn verification_work(f: &SelectiveFamily) -> u128 {
    exhaustive_work(f.n, f.k, f.m())
}

/// Checks by enumeration that every `X ⊆ [n]` with `|X| ≤ k` has each of its
/// elements isolated by some set.
pub fn verify_selective_family(f: &SelectiveFamily) -> Result<bool, SelectorError> {
    verify_selective_family_with_budget(f, VERIFY_BUDGET)
}

pub fn verify_selective_family_with_budget(f: &SelectiveFamily, budget: u128) -> Result<bool, SelectorError> {
    let work = verification_work(f);
    if work > budget || f.n > 64 {
        return Err(SelectorError::ParametersTooLarge { work, budget });
    }
    let masks: Vec<u64> = f.sets.iter().map(|s| s.iter().fold(0u64, |acc, &x| acc | 1 << x)).collect();
    let k = f.k.min(f.n);
    // enumerate X as an increasing index tuple
    let mut idx: Vec<usize> = Vec::with_capacity(k);
    for size in 1..=k {
        idx.clear();
        idx.extend(0..size);
        loop {
            let x_mask = idx.iter().fold(0u64, |acc, &x| acc | 1 << x);
            let mut isolated = 0u64;
            for &mask in &masks {
                let hit = mask & x_mask;
                if hit.count_ones() == 1 {
                    isolated |= hit;
                }
            }
            if isolated != x_mask {
                return Ok(false);
            }
            // next combination
            let mut i = size;
            while i > 0 && idx[i - 1] == f.n - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for t in i..size {
                idx[t] = idx[t - 1] + 1;
            }
        }
    }
    Ok(true)
}

/// Builds the randomized family and retries with derived seeds until the
/// exhaustive check passes. Returns the family and the number of attempts.
pub fn verified_random_family(n: usize, k: usize, seed: u64, max_attempts: usize) -> Result<Option<(SelectiveFamily, usize)>, SelectorError> {
    for attempt in 0..max_attempts {
        let mut f = random_selective_family(n, k, crate::rng::derive_seed(seed, attempt as u64));
        if verify_selective_family(&f)? {
            f.verified = true;
            return Ok(Some((f, attempt + 1)));
        }
    }
    Ok(None)
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

/// Smallest prime `p` with `p² ≥ n`.
pub fn smallest_prime_with_square_geq(n: u64) -> u64 {
    let mut p = 2;
    while p * p < n || !is_prime(p) {
        p += 1;
    }
    p
}

/// `(n, m, s)`-disperser from the quadratic Sidon-type construction
/// `d_a(x) = (a·x mod p) + 2p·(a·x² mod p)`, `s = 2p² + p`.
///
/// Set `i` (0-based) is `D_{i+1} = { d_{i+1}(x) : x ∈ [p] }`, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Disperser {
    pub n: usize,
    pub p: u64,
    pub m: usize,
    pub s: u64,
    pub mode: DuplexMode,
    pub sets: Vec<Vec<u64>>,
}

/// `d_a(x)`.
pub fn disperser_point(p: u64, a: u64, x: u64) -> u64 {
    (a * x % p) + 2 * p * (a * x % p * x % p)
}

/// Number of sets for a given prime: `(p-1)/2` in full duplex,
/// `⌊(p-1)/4⌋` in half duplex, and at least one.
pub fn disperser_size(p: u64, mode: DuplexMode) -> usize {
    let m = match mode {
        DuplexMode::Full => (p - 1) / 2,
        DuplexMode::Half => (p - 1) / 4,
    };
    m.max(1) as usize
}

pub fn build_disperser(n: usize, mode: DuplexMode) -> Disperser {
    let p = smallest_prime_with_square_geq(n as u64);
    let m = disperser_size(p, mode);
    let sets = (1..=m as u64)
        .map(|a| {
            let mut set: Vec<u64> = (0..p).map(|x| disperser_point(p, a, x)).collect();
            set.sort_unstable();
            set
        })
        .collect();
    Disperser { n, p, m, s: 2 * p * p + p, mode, sets }
}

impl Disperser {
    /// Shifts `t` such that a firing of set `j` at relative time `τ` is lost
    /// when set `i` fires at `τ + δ(j) − δ(i) − t`. Full duplex loses a firing
    /// only to an exact collision; half duplex also to a firing one step
    /// earlier (the relaying node is busy transmitting when it arrives).
    pub fn kill_shifts(&self) -> &'static [i64] {
        match self.mode {
            DuplexMode::Full => &[0],
            DuplexMode::Half => &[0, 1],
        }
    }
}

/// For every ordered pair `a ≠ b`, counts how often each difference window
/// `{d_a(x) − d_b(y)} ∩ (t + shifts)` is hit over `[p]²`; passes iff no window
/// is hit more than `kill_cap` times. In half duplex additionally checks that
/// a set kills at most one of its own points (`τ − 1 ∈ D_a`).
pub fn verify_disperser_pairwise(d: &Disperser, kill_cap: usize) -> bool {
    let shifts = d.kill_shifts();
    let width = 2 * d.s as usize + 2;
    let offset = d.s as i64 + 1;
    let mut hist = vec![0usize; width];
    for (a, da) in d.sets.iter().enumerate() {
        for (b, db) in d.sets.iter().enumerate() {
            if a == b {
                continue;
            }
            hist.iter_mut().for_each(|h| *h = 0);
            for &x in da {
                for &y in db {
                    hist[(x as i64 - y as i64 + offset) as usize] += 1;
                }
            }
            for t in 0..width {
                let hits: usize = shifts.iter().filter_map(|&sh| hist.get(t + sh as usize)).sum();
                if hits > kill_cap {
                    return false;
                }
            }
        }
        if d.mode == DuplexMode::Half {
            let own = da.iter().filter(|&&tau| tau > 0 && da.binary_search(&(tau - 1)).is_ok()).count();
            if own > 1 {
                return false;
            }
        }
    }
    true
}

/// Some `τ ∈ D_j` such that `τ + δ(j)` avoids every `D_i + δ(i) + shift`,
/// `i ≠ j` (and, in half duplex, `τ − 1 ∉ D_j`). `delta[i]` is the depth
/// assigned to set `i`.
pub fn uncovered_firing(d: &Disperser, delta: &[usize], j: usize) -> Option<u64> {
    assert_eq!(delta.len(), d.m, "delta must assign a depth to every set");
    let shifts = d.kill_shifts();
    d.sets[j].iter().copied().find(|&tau| {
        let at = tau as i64 + delta[j] as i64;
        let free_of_others = (0..d.m).filter(|&i| i != j).all(|i| {
            shifts.iter().all(|&sh| {
                let target = at - delta[i] as i64 - sh;
                target < 0 || d.sets[i].binary_search(&(target as u64)).is_err()
            })
        });
        let free_of_self = d.mode == DuplexMode::Full || tau == 0 || d.sets[j].binary_search(&(tau - 1)).is_err();
        free_of_others && free_of_self
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    fn trial_division_oracle(n: u64) -> u64 {
        (2..).find(|&p: &u64| p * p >= n && (2..p).all(|d| !p.is_multiple_of(d))).unwrap()
    }

    #[test]
    fn primes() {
        assert_eq!(smallest_prime_with_square_geq(9), 3);
        assert_eq!(smallest_prime_with_square_geq(10), 5);
        assert_eq!(smallest_prime_with_square_geq(100), 11);
        for n in 1..3000 {
            let p = smallest_prime_with_square_geq(n);
            assert_eq!(p, trial_division_oracle(n));
            if n >= 2 {
                let r = libm::sqrt(n as f64);
                assert!(p as f64 >= r && (p as f64) < 2.0 * r, "Bertrand range fails at n={n}");
            }
        }
    }

    #[test]
    fn disperser_examples() {
        let d = build_disperser(9, DuplexMode::Full);
        assert_eq!((d.p, d.m, d.s), (3, 1, 21));
        assert_eq!(d.sets[0], [0, 7, 8]);
        let d = build_disperser(10, DuplexMode::Full);
        assert_eq!((d.p, d.m, d.s), (5, 2, 55));
        assert!(d.sets.iter().all(|s| s.len() == 5));
        assert_eq!(build_disperser(10, DuplexMode::Half).m, 1);
    }

    #[test]
    fn disperser_sizes_and_injectivity() {
        for n in 1..=4096usize {
            let d = build_disperser(n, DuplexMode::Full);
            let rn = libm::sqrt(n as f64);
            assert!(d.m as f64 >= (rn - 1.0) / 2.0, "m too small at n={n}");
            assert!((d.s as f64) < 8.0 * n as f64 + 2.0 * rn + 1.0, "s too large at n={n}");
            if n % 97 == 0 || n < 64 {
                for set in &d.sets {
                    assert_eq!(set.iter().collect::<BTreeSet<_>>().len(), d.p as usize);
                    assert!(set.iter().all(|&t| t < d.s));
                }
            }
        }
    }

    #[test]
    fn corrupted_disperser_fails() {
        let mut d = build_disperser(10, DuplexMode::Full);
        d.sets[1] = d.sets[0].clone();
        assert!(!verify_disperser_pairwise(&d, 2));
        let single = build_disperser(9, DuplexMode::Full);
        assert!(verify_disperser_pairwise(&single, 2));
    }

    #[test]
    fn uncovered_firing_single_set() {
        let d = build_disperser(9, DuplexMode::Full);
        assert_eq!(uncovered_firing(&d, &[4], 0), Some(0));
    }

    #[test]
    fn uncovered_firing_matches_set_difference() {
        let d = build_disperser(25, DuplexMode::Full);
        assert_eq!(d.p, 5);
        let covered: BTreeSet<u64> = d.sets[1].iter().copied().collect();
        let free: Vec<u64> = d.sets[0].iter().copied().filter(|t| !covered.contains(t)).collect();
        let tau = uncovered_firing(&d, &[0, 0], 0).unwrap();
        assert!(free.contains(&tau));
        assert_eq!(tau, free[0]);
    }

    #[test]
    fn selective_special_cases() {
        let f = build_selective_family(16, 1, 0);
        assert_eq!(f.sets, [(0..16).collect::<Vec<_>>()]);
        let f = build_selective_family(4, 4, 0);
        assert_eq!(f.construction, Construction::Singletons);
        assert_eq!(f.m(), 4);
        assert!(verify_selective_family(&f).unwrap());
    }

    #[test]
    fn whole_set_is_not_2_selective() {
        let f = SelectiveFamily { n: 5, k: 2, construction: Construction::Whole, sets: vec![(0..5).collect()], verified: false };
        assert!(!verify_selective_family(&f).unwrap());
    }

    #[test]
    fn verifier_budget_guard() {
        let f = random_selective_family(40, 3, 1);
        assert!(matches!(
            verify_selective_family_with_budget(&f, 1000),
            Err(SelectorError::ParametersTooLarge { .. })
        ));
    }

    #[test]
    fn random_family_verifies_at_small_sizes() {
        let (f, attempts) = verified_random_family(12, 2, 3, 5).unwrap().unwrap();
        assert!(f.verified && attempts <= 5);
        assert_eq!(f.m(), random_family_size(12, 2));
    }

    #[test]
    fn membership_inverts_sets() {
        let f = random_selective_family(10, 2, 9);
        let member = f.membership();
        for (j, set) in f.sets.iter().enumerate() {
            for &x in set {
                assert!(member[x].contains(&j));
            }
        }
    }
}
