//! Integer factorization: trial division, deterministic Miller-Rabin below
//! 2^64, Brent's rho for the rest. Results are memoized process-wide since
//! the census refactors the same thetas constantly.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

/// Factored nonzero integer: sign * prod p^e, primes ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub sign: i32,
    pub factors: Vec<(u128, u32)>,
}

impl Factorization {
    pub fn valuation(&self, p: u128) -> u32 {
        self.factors
            .iter()
            .find(|(q, _)| *q == p)
            .map_or(0, |(_, e)| *e)
    }

    pub fn primes(&self) -> impl Iterator<Item = u128> + '_ {
        self.factors.iter().map(|(p, _)| *p)
    }

    pub fn is_square(&self) -> bool {
        self.sign > 0 && self.factors.iter().all(|(_, e)| e % 2 == 0)
    }

    pub fn is_unit(&self) -> bool {
        self.factors.is_empty()
    }
}

fn cache() -> &'static RwLock<HashMap<u128, Arc<Vec<(u128, u32)>>>> {
    static CACHE: OnceLock<RwLock<HashMap<u128, Arc<Vec<(u128, u32)>>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Factor a nonzero integer. Panics on 0.
pub fn factorize(n: i128) -> Factorization {
    assert!(n != 0, "factorize(0)");
    let sign = if n < 0 { -1 } else { 1 };
    let m = n.unsigned_abs();
    if m == 1 {
        return Factorization {
            sign,
            factors: Vec::new(),
        };
    }
    if let Some(hit) = cache().read().unwrap().get(&m) {
        return Factorization {
            sign,
            factors: hit.as_ref().clone(),
        };
    }
    let factors = factor_u128(m);
    cache()
        .write()
        .unwrap()
        .entry(m)
        .or_insert_with(|| Arc::new(factors.clone()));
    Factorization { sign, factors }
}

fn factor_u128(mut m: u128) -> Vec<(u128, u32)> {
    let mut out: Vec<(u128, u32)> = Vec::new();
    let mut push = |p: u128, e: u32| {
        debug_assert!(e > 0);
        out.push((p, e));
    };
    for p in [2u128, 3, 5] {
        let mut e = 0;
        while m % p == 0 {
            m /= p;
            e += 1;
        }
        if e > 0 {
            push(p, e);
        }
    }
    // wheel over 30: candidates coprime to 2,3,5
    let mut d: u128 = 7;
    const STEP: [u128; 8] = [4, 2, 4, 2, 4, 6, 2, 6];
    let mut i = 0;
    while d <= 10_000 && d * d <= m {
        if m % d == 0 {
            let mut e = 0;
            while m % d == 0 {
                m /= d;
                e += 1;
            }
            push(d, e);
        }
        d += STEP[i];
        i = (i + 1) % 8;
    }
    if m > 1 {
        if d * d > m {
            push(m, 1);
        } else {
            let mut rest = Vec::new();
            split(m, &mut rest);
            rest.sort_unstable();
            let mut j = 0;
            while j < rest.len() {
                let p = rest[j];
                let mut e = 0;
                while j < rest.len() && rest[j] == p {
                    e += 1;
                    j += 1;
                }
                push(p, e);
            }
        }
    }
    out.sort_unstable_by_key(|&(p, _)| p);
    out
}

/// Recursively split m (coprime to primes <= 10^4, m > 1) into primes.
fn split(m: u128, out: &mut Vec<u128>) {
    if is_prime(m) {
        out.push(m);
        return;
    }
    let f = pollard_brent(m);
    split(f, out);
    split(m / f, out);
}

fn pollard_brent(n: u128) -> u128 {
    debug_assert!(n > 3 && !is_prime(n));
    if n % 2 == 0 {
        return 2;
    }
    // Brent's variant; deterministic restart schedule over (x0, c).
    for c in 1u128.. {
        let mut x: u128 = 2;
        let mut y = x;
        let mut d: u128 = 1;
        let mut saved = x;
        let mut k = 1u64;
        let mut count = 0u64;
        while d == 1 {
            y = x;
            for _ in 0..k {
                x = addmod(mulmod(x, x, n), c % n, n);
            }
            let mut i = 0;
            while i < k && d == 1 {
                saved = x;
                let mut q: u128 = 1;
                let chunk = std::cmp::min(128, k - i);
                for _ in 0..chunk {
                    x = addmod(mulmod(x, x, n), c % n, n);
                    q = mulmod(q, x.abs_diff(y), n);
                }
                d = gcd_u128(q, n);
                i += chunk;
                count += chunk;
                if count > 1 << 24 {
                    d = n; // give up on this c
                }
            }
            k *= 2;
        }
        if d == n {
            // backtrack one by one from the saved point
            let mut x = saved;
            d = 1;
            let mut steps = 0u64;
            while d == 1 && steps < 1 << 20 {
                x = addmod(mulmod(x, x, n), c % n, n);
                d = gcd_u128(x.abs_diff(y), n);
                steps += 1;
            }
        }
        if d != n && d != 1 {
            return d;
        }
    }
    unreachable!()
}

pub(crate) fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub(crate) fn addmod(a: u128, b: u128, m: u128) -> u128 {
    debug_assert!(a < m && b < m);
    let s = a.wrapping_add(b);
    if s < a || s >= m {
        s.wrapping_sub(m)
    } else {
        s
    }
}

/// a*b mod m without overflow. Fast path when products fit in u128.
pub(crate) fn mulmod(a: u128, b: u128, m: u128) -> u128 {
    let (a, b) = (a % m, b % m);
    if m <= 1 << 64 {
        return a * b % m;
    }
    let (mut a, mut b) = (a, b);
    let mut r: u128 = 0;
    while b > 0 {
        if b & 1 == 1 {
            r = addmod(r, a, m);
        }
        a = addmod(a, a, m);
        b >>= 1;
    }
    r
}

pub(crate) fn powmod(mut base: u128, mut exp: u128, m: u128) -> u128 {
    if m == 1 {
        return 0;
    }
    base %= m;
    let mut r: u128 = 1;
    while exp > 0 {
        if exp & 1 == 1 {
            r = mulmod(r, base, m);
        }
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    r
}

/// Inverse of a mod m for coprime a, m (extended Euclid on i128; callers keep
/// operands well under 2^126 so the signed intermediates cannot overflow).
pub(crate) fn modinv(a: u128, m: u128) -> u128 {
    debug_assert!(m > 1);
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    debug_assert_eq!(r0, 1, "modinv of non-unit");
    s0.rem_euclid(m as i128) as u128
}

/// Miller-Rabin. Deterministic for n < 2^64 with the first twelve prime
/// witnesses; above that the same witnesses plus a fixed tail, which is
/// ample for the magnitudes this library meets.
pub fn is_prime(n: u128) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u128, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mut witnesses: Vec<u128> = vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n >= 1 << 64 {
        witnesses.extend_from_slice(&[41, 43, 47, 53, 59, 61, 67, 71]);
    }
    'w: for a in witnesses {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'w;
            }
        }
        return false;
    }
    true
}

/// Eratosthenes up to `limit` inclusive.
pub fn sieve_primes(limit: usize) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let mut comp = vec![false; limit + 1];
    let mut out = Vec::new();
    for n in 2..=limit {
        if !comp[n] {
            out.push(n as u64);
            let mut k = n * n;
            while k <= limit {
                comp[k] = true;
                k += n;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_primes() {
        let known: Vec<u128> = vec![2, 3, 5, 7, 11, 13, 89, 97, 101, 7919];
        for p in known {
            assert!(is_prime(p), "{} should be prime", p);
        }
        for c in [0u128, 1, 4, 9, 91, 1001, 7917, 561, 41041] {
            assert!(!is_prime(c), "{} should be composite", c);
        }
    }

    #[test]
    fn large_primality() {
        assert!(is_prime(18_446_744_073_709_551_557)); // largest < 2^64
        assert!(is_prime(2_305_843_009_213_693_951)); // 2^61 - 1
        assert!(!is_prime(2_305_843_009_213_693_951 * 3));
    }

    #[test]
    fn factor_pinned() {
        let f = factorize(894_348);
        assert_eq!(f.sign, 1);
        assert_eq!(f.factors, vec![(2, 2), (3, 3), (7, 2), (13, 2)]);

        let f = factorize(-126);
        assert_eq!(f.sign, -1);
        assert_eq!(f.factors, vec![(2, 1), (3, 2), (7, 1)]);

        let f = factorize(1);
        assert_eq!(f.sign, 1);
        assert!(f.is_unit());
        let f = factorize(-1);
        assert_eq!(f.sign, -1);
        assert!(f.is_unit());

        assert_eq!(factorize(2_147_483_647).factors, vec![(2_147_483_647, 1)]);
    }

    #[test]
    fn factor_large_semiprime() {
        // both factors above the trial division bound
        let p: u128 = 1_000_003;
        let q: u128 = 1_000_033;
        let f = factorize((p * q) as i128);
        assert_eq!(f.factors, vec![(p, 1), (q, 1)]);
    }

    #[test]
    fn factor_roundtrip_loop() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xfac70);
        for _ in 0..400 {
            let n: i128 = rng.gen_range(-5_000_000i64..=5_000_000) as i128;
            if n == 0 {
                continue;
            }
            let f = factorize(n);
            let mut back: i128 = f.sign as i128;
            for (p, e) in &f.factors {
                assert!(is_prime(*p), "{} not prime in factorization of {}", p, n);
                for _ in 0..*e {
                    back *= *p as i128;
                }
            }
            assert_eq!(back, n);
        }
    }

    #[test]
    fn valuation_and_square() {
        let f = factorize(894_348);
        assert_eq!(f.valuation(2), 2);
        assert_eq!(f.valuation(3), 3);
        assert_eq!(f.valuation(11), 0);
        assert!(!f.is_square());
        assert!(factorize(36).is_square());
        assert!(!factorize(-36).is_square());
    }

    #[test]
    fn sieve_counts() {
        let ps = sieve_primes(100);
        assert_eq!(ps.len(), 25);
        assert_eq!(ps.first(), Some(&2));
        assert_eq!(ps.last(), Some(&97));
        assert_eq!(sieve_primes(1).len(), 0);
        assert_eq!(sieve_primes(1_000_000).len(), 78_498);
    }

    #[test]
    fn mulmod_wide() {
        let m = (1u128 << 100) + 7;
        let a = (1u128 << 99) + 12345;
        let b = (1u128 << 98) + 67890;
        // cross-check against big-int arithmetic
        let big = num_bigint::BigUint::from(a) * num_bigint::BigUint::from(b)
            % num_bigint::BigUint::from(m);
        assert_eq!(num_bigint::BigUint::from(mulmod(a, b, m)), big);
        assert_eq!(powmod(3, 100, 101), 1); // Fermat
    }
}
