//! Local solubility of S_a at every place of Q, and finite-precision local
//! points with lifting witnesses.
//!
//! The exact engines live in `hensel`; this module owns the coefficient
//! bookkeeping, the everywhere-local conjunction with its memoised residue
//! classes, and point sampling.

use crate::arith::factor::{factorize, modinv, mulmod, Factorization};
use crate::arith::padic::{is_padic_fourth_power_ratio, is_padic_square, padic_unit_part};
use crate::arith::{Place, SquareClass};
use crate::hensel::{
    digit_lift, eval_surface_mod, odd_prime_soluble, two_adic_cert, two_adic_soluble,
    v2_wrapped, vp_residue, SearchVerdict,
};
use num_rational::Ratio;
use std::collections::{HashMap, HashSet};
use std::sync::{OnceLock, RwLock};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LocalError {
    #[error("coefficients must be nonzero")]
    ZeroCoefficient,
    #[error("theta = -a0*a1*a2 overflows the supported range")]
    FactorizationOverflow,
    #[error("prime {0} is in the search-only range (closed conditions need p > 33)")]
    PrimeTooSmall(u128),
    #[error("residue search undecided at precision cap {0}")]
    PrecisionExhausted(u32),
    #[error("no smooth residue classes at this precision")]
    NoSmoothPoints,
}

/// Nonzero coefficient triple a = (a0, a1, a2) of S_a, with
/// theta = -a0*a1*a2 precomputed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CoefficientTriple {
    a: [i64; 3],
    theta: i128,
}

impl CoefficientTriple {
    pub fn new(a: [i64; 3]) -> Result<CoefficientTriple, LocalError> {
        if a.iter().any(|&x| x == 0) {
            return Err(LocalError::ZeroCoefficient);
        }
        let theta = (a[0] as i128)
            .checked_mul(a[1] as i128)
            .and_then(|t| t.checked_mul(a[2] as i128))
            .and_then(|t| t.checked_neg())
            .ok_or(LocalError::FactorizationOverflow)?;
        Ok(CoefficientTriple { a, theta })
    }

    pub fn coefficients(&self) -> [i64; 3] {
        self.a
    }

    pub(crate) fn a128(&self) -> [i128; 3] {
        [self.a[0] as i128, self.a[1] as i128, self.a[2] as i128]
    }

    pub fn theta(&self) -> i128 {
        self.theta
    }

    pub fn theta_class(&self) -> SquareClass {
        SquareClass::of(self.theta)
    }

    /// Factorization of theta, assembled by merging the coefficient
    /// factorizations (each is cached, and census coefficients repeat).
    pub fn factored_theta(&self) -> Factorization {
        let mut sign = -1;
        let mut merged: HashMap<u128, u32> = HashMap::new();
        for &ai in &self.a {
            let f = factorize(ai as i128);
            sign *= f.sign;
            for (p, e) in &f.factors {
                *merged.entry(*p).or_insert(0) += e;
            }
        }
        let mut factors: Vec<(u128, u32)> = merged.into_iter().collect();
        factors.sort_unstable_by_key(|&(p, _)| p);
        Factorization { sign, factors }
    }
}

/// Coordinates of a local point: residues mod p^precision, or exact real
/// data. A real w is carried as its exact square plus a sign, so every
/// downstream sign query stays in rational arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalCoords {
    Padic {
        x: [u128; 3],
        w: u128,
        precision: u32,
    },
    Real {
        x: [Ratio<i128>; 3],
        w_square: Ratio<i128>,
        w_sign: i8,
    },
}

/// A finite-precision point on S_a at one place.
///
/// `unit_index` names an x-coordinate that is a p-adic unit (nonzero for
/// Real); one always exists on a normalised point satisfying the equation.
/// `smooth` records whether some partial derivative of the defining form is
/// a unit at the point; deeper points remain Hensel-liftable through their
/// valuation certificates even when this flag is false (at p = 2 every
/// partial is even, so the flag is always false there).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPoint {
    pub place: Place,
    pub coords: LocalCoords,
    pub unit_index: usize,
    pub smooth: bool,
}

const NODE_BUDGET: u64 = 1 << 22;

/// Solubility over Q_p decided by search machinery alone.
///
/// Odd p runs the exact unit-shell analysis (no precision parameter enters:
/// the verdict is unconditional). p = 2 runs the budgeted residue tree up to
/// depth k_max and reports honest exhaustion.
pub fn is_locally_soluble_search(
    a: &CoefficientTriple,
    p: u128,
    k_max: u32,
) -> Result<bool, LocalError> {
    if p == 2 {
        match two_adic_soluble(&a.a128(), k_max, NODE_BUDGET) {
            SearchVerdict::Soluble => Ok(true),
            SearchVerdict::Insoluble => Ok(false),
            SearchVerdict::Exhausted { .. } => Err(LocalError::PrecisionExhausted(k_max)),
        }
    } else {
        Ok(odd_prime_soluble(&a.a128(), p as u64))
    }
}

/// Solubility over Q_p for odd p > 33 by the four closed conditions:
/// (1) some a_i is a p-adic square; (2) some -a_i/a_j is a p-adic fourth
/// power; (3) two valuations agree mod 4 at 0 or 2; (4) all three
/// valuations agree mod 4.
pub fn is_locally_soluble_generic(a: &CoefficientTriple, p: u128) -> Result<bool, LocalError> {
    if p <= 33 || p % 2 == 0 {
        return Err(LocalError::PrimeTooSmall(p));
    }
    let place = Place::Finite(p);
    let c = a.a128();
    if c.iter().any(|&ai| is_padic_square(ai, place)) {
        return Ok(true);
    }
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                let r = Ratio::new(-c[i], c[j]);
                if is_padic_fourth_power_ratio(&r, place) {
                    return Ok(true);
                }
            }
        }
    }
    let v: Vec<u32> = c.iter().map(|&ai| padic_unit_part(ai, p).0 % 4).collect();
    for i in 0..3 {
        for j in (i + 1)..3 {
            if v[i] == v[j] && (v[i] == 0 || v[i] == 2) {
                return Ok(true);
            }
        }
    }
    Ok(v[0] == v[1] && v[1] == v[2])
}

/// Real solubility: a positive coefficient gives a point; all-negative
/// forces x = w = 0.
pub fn is_really_soluble(a: &CoefficientTriple) -> bool {
    a.a.iter().any(|&ai| ai > 0)
}

/// Everywhere-local solubility: the real place, the search engines at p = 2
/// and every odd p <= 33, and the closed conditions at every p > 33
/// dividing theta. Odd p > 33 coprime to theta are automatically soluble
/// (condition (3) with s = 0).
pub fn is_everywhere_locally_soluble(a: &CoefficientTriple) -> Result<bool, LocalError> {
    if !is_really_soluble(a) {
        return Ok(false);
    }
    for p in [2u128, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31] {
        if !search_soluble_memo(a, p)? {
            return Ok(false);
        }
    }
    let ft = a.factored_theta();
    for p in ft.primes().filter(|&p| p > 33) {
        if !is_locally_soluble_generic(a, p)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Memoised search verdicts keyed by the solubility class of the triple.
///
/// Scaling a coefficient by a fourth power of Q_p^x is absorbed into x_i, so
/// the verdict depends only on (v_p(a_i) mod 4, unit class)_i, where the
/// unit class is the unit mod p for odd p (1 + pZ_p consists of fourth
/// powers) and mod 16 for p = 2 (1 + 16Z_2 likewise). Exhaustion at p = 2 is
/// never cached.
fn search_soluble_memo(a: &CoefficientTriple, p: u128) -> Result<bool, LocalError> {
    static CACHE: OnceLock<RwLock<HashMap<(u64, [u64; 3]), bool>>> = OnceLock::new();
    let unit_mod = if p == 2 { 16 } else { p };
    let mut cls = [0u64; 3];
    for (slot, &ai) in cls.iter_mut().zip(&a.a) {
        let (v, u) = padic_unit_part(ai as i128, p);
        *slot = (v % 4) as u64 * unit_mod as u64 + u.rem_euclid(unit_mod as i128) as u64;
    }
    let key = (p as u64, cls);
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(&hit) = cache.read().unwrap().get(&key) {
        return Ok(hit);
    }
    let verdict = if p == 2 {
        let mut k = v2_wrapped(a.theta() as u128).min(32) + 8;
        loop {
            match two_adic_soluble(&a.a128(), k, NODE_BUDGET) {
                SearchVerdict::Soluble => break true,
                SearchVerdict::Insoluble => break false,
                SearchVerdict::Exhausted { .. } if k < 64 => k = (2 * k).min(64),
                SearchVerdict::Exhausted { .. } => {
                    return Err(LocalError::PrecisionExhausted(k))
                }
            }
        }
    } else {
        odd_prime_soluble(&a.a128(), p as u64)
    };
    cache.write().unwrap().insert(key, verdict);
    Ok(verdict)
}

/// Up to n distinct normalised residue classes mod p^k of points on S_a
/// (or exact real points), each carrying a lifting witness.
///
/// Finite places: classes are canonicalised by scaling the first unit
/// x-coordinate to 1 (the weighted scaling sends x to c*x and w to c^2*w),
/// which also deduplicates the scaling orbit. Real: a deterministic grid of
/// primitive integer directions with exact w^2.
pub fn sample_local_points(
    a: &CoefficientTriple,
    place: Place,
    k: u32,
    n: usize,
) -> Result<Vec<LocalPoint>, LocalError> {
    match place {
        Place::Real => sample_real(a, n),
        Place::Finite(2) => sample_two_adic(a, k, n),
        Place::Finite(p) => sample_odd(a, p, k, n),
    }
}

fn sample_real(a: &CoefficientTriple, n: usize) -> Result<Vec<LocalPoint>, LocalError> {
    let mut out = Vec::new();
    for g in 1i128..=4 {
        for x0 in (-g..=g).rev() {
            for x1 in (-g..=g).rev() {
                for x2 in (-g..=g).rev() {
                    let x = [x0, x1, x2];
                    if x.iter().map(|v| v.abs()).max() != Some(g) {
                        continue;
                    }
                    if gcd3(x0.unsigned_abs(), x1.unsigned_abs(), x2.unsigned_abs()) != 1 {
                        continue;
                    }
                    // canonical sign: first nonzero coordinate positive
                    if *x.iter().find(|&&v| v != 0).unwrap() < 0 {
                        continue;
                    }
                    let q: i128 = (0..3).map(|i| a.a[i] as i128 * x[i].pow(4)).sum();
                    if q < 0 {
                        continue;
                    }
                    let unit_index = x.iter().position(|&v| v != 0).unwrap();
                    let signs: &[i8] = if q == 0 { &[0] } else { &[1, -1] };
                    for &s in signs {
                        out.push(LocalPoint {
                            place: Place::Real,
                            coords: LocalCoords::Real {
                                x: x.map(Ratio::from_integer),
                                w_square: Ratio::from_integer(q),
                                w_sign: s,
                            },
                            unit_index,
                            smooth: true,
                        });
                        if out.len() >= n {
                            return Ok(out);
                        }
                    }
                }
            }
        }
    }
    if out.is_empty() {
        return Err(LocalError::NoSmoothPoints);
    }
    Ok(out)
}

fn gcd3(a: u128, b: u128, c: u128) -> u128 {
    use crate::arith::factor::gcd_u128 as g;
    g(g(a, b), c)
}

/// Odd-p sampling through the unit-shell decomposition.
///
/// Valuations are first reduced mod 4 (absorbing p^4 into x_i); shells with
/// the non-unit coordinates frozen at zero are sound there because a frozen
/// term sits at valuation >= 4 while the minimal live valuation is <= 3.
/// Each unit assignment solving the lead equation mod p is Hensel-refined in
/// the unit part of one lead variable, then mapped back to the original
/// coefficients by the weighted scaling and renormalised.
fn sample_odd(
    a: &CoefficientTriple,
    p: u128,
    k: u32,
    n: usize,
) -> Result<Vec<LocalPoint>, LocalError> {
    let c = a.a128();
    let mut vfull = [0u32; 3];
    let mut reduced = [0i128; 3];
    for i in 0..3 {
        let (v, u) = padic_unit_part(c[i], p);
        vfull[i] = v;
        reduced[i] = u * (p as i128).pow(v % 4);
    }
    let t4: [u32; 3] = [vfull[0] / 4, vfull[1] / 4, vfull[2] / 4];
    let s_back = *t4.iter().max().unwrap();
    // internal precision: room for the map x -> p^(s-t_i) x and w -> p^(2s) w
    let kk = k + 4 * s_back + 2;
    let kpow = kk + 2;
    let modulus = p
        .checked_pow(kpow)
        .filter(|&m| m <= 1 << 126)
        .ok_or(LocalError::PrecisionExhausted(k))?;
    let vred: [u32; 3] = [vfull[0] % 4, vfull[1] % 4, vfull[2] % 4];

    let mut seen: HashSet<([u128; 3], u128)> = HashSet::new();
    let mut out: Vec<LocalPoint> = Vec::new();
    let mut attempts: u64 = 0;

    'shells: for mask in 1u8..8 {
        let live: Vec<usize> = (0..3).filter(|&i| mask & (1 << i) != 0).collect();
        for wshape in [Some(0u32), Some(2), None] {
            let mut m = u32::MAX;
            for &i in &live {
                m = m.min(vred[i]);
            }
            if let Some(wv) = wshape {
                m = m.min(wv);
            }
            // enumerate unit assignments for the live coordinates and w
            let wm = match wshape {
                Some(_) => p - 1,
                None => 1,
            };
            let mut assign = vec![1u128; live.len()];
            loop {
                for wu in 1..=wm {
                    attempts += 1;
                    if attempts > 4_000_000 {
                        break 'shells;
                    }
                    let mut x = [0u128; 3];
                    for (idx, &i) in live.iter().enumerate() {
                        x[i] = assign[idx];
                    }
                    let w = match wshape {
                        Some(sv) => wu * p.pow(sv / 2),
                        None => 0,
                    };
                    if let Some(pt) =
                        lift_reduced_seed(&reduced, p, x, w, wshape, m, kk, modulus)
                    {
                        if let Some(lp) = map_back_and_canonicalise(
                            &c, p, pt.0, pt.1, &t4, s_back, k, kk, modulus,
                        ) {
                            if let LocalCoords::Padic { x, w, .. } = lp.coords {
                                if seen.insert((x, w)) {
                                    out.push(lp);
                                    if out.len() >= n {
                                        break 'shells;
                                    }
                                }
                            }
                        }
                    }
                }
                // advance the unit assignment odometer
                let mut pos = 0;
                loop {
                    if pos == assign.len() {
                        break;
                    }
                    assign[pos] += 1;
                    if assign[pos] < p {
                        break;
                    }
                    assign[pos] = 1;
                    pos += 1;
                }
                if pos == assign.len() {
                    break;
                }
            }
        }
    }
    if out.is_empty() {
        return Err(LocalError::NoSmoothPoints);
    }
    Ok(out)
}

/// Refine a shell seed of the reduced triple until F = 0 mod p^kk.
///
/// All present terms have valuation >= m by construction; the seed is kept
/// only if v(F) >= m+1 (the lead equation holds mod p), and then one lead
/// variable with unit derivative in G = F/p^m is corrected digit by digit.
#[allow(clippy::too_many_arguments)]
fn lift_reduced_seed(
    ar: &[i128; 3],
    p: u128,
    mut x: [u128; 3],
    mut w: u128,
    wshape: Option<u32>,
    m: u32,
    kk: u32,
    modulus: u128,
) -> Option<([u128; 3], u128)> {
    let vred: [u32; 3] = [
        padic_unit_part(ar[0], p).0,
        padic_unit_part(ar[1], p).0,
        padic_unit_part(ar[2], p).0,
    ];
    // lead variable: an x_i with unit value and v(a_i) = m, else w
    let lead_x = (0..3).find(|&i| x[i] % p != 0 && vred[i] == m);
    let lead_w = wshape == Some(m);
    if lead_x.is_none() && !lead_w {
        return None;
    }
    let target = kk;
    for _ in 0..=target {
        let f = eval_surface_mod(ar, &x, w, modulus);
        let vf = vp_residue(f, p, target);
        if vf >= target {
            return Some((x, w));
        }
        if vf < m + 1 {
            return None; // lead equation fails mod p
        }
        let fred = f / p.pow(vf) % p;
        if let Some(l) = lead_x {
            // dG/dX = 4 a~ X^3, a unit
            let au = (ar[l] / (p as i128).pow(m)).rem_euclid(p as i128) as u128;
            let x3 = x[l] % p * (x[l] % p) % p * (x[l] % p) % p;
            let g = 4 * au % p * x3 % p;
            let delta = (p - fred) * modinv(g, p) % p;
            x[l] = (x[l] + delta * p.pow(vf - m)) % modulus;
        } else {
            // w = p^s W, dG/dW = -2 p^(2s) W / p^m = -2W with 2s = m
            let s = m / 2;
            let wu = (w / p.pow(s)) % p;
            let g = (p - 2 * wu % p) % p;
            let delta = (p - fred) * modinv(g, p) % p;
            w = (w + delta * p.pow(s + vf - m)) % modulus;
        }
    }
    None
}

/// Map a point of the reduced triple back to the original coefficients
/// (x_i picks up p^(s - t_i), w picks up p^(2s)), renormalise by the
/// weighted scaling, canonicalise, and truncate to precision k.
#[allow(clippy::too_many_arguments)]
fn map_back_and_canonicalise(
    c: &[i128; 3],
    p: u128,
    xr: [u128; 3],
    wr: u128,
    t4: &[u32; 3],
    s_back: u32,
    k: u32,
    kk: u32,
    modulus: u128,
) -> Option<LocalPoint> {
    let mut x = [0u128; 3];
    for i in 0..3 {
        x[i] = mulmod(xr[i], p.pow(s_back - t4[i]), modulus);
    }
    let mut w = mulmod(wr, p.pow(2 * s_back), modulus);
    // weighted descale: divide x by p^lam, w by p^(2 lam)
    let vx: Vec<u32> = x.iter().map(|&v| vp_residue(v, p, kk)).collect();
    let vw = vp_residue(w, p, kk);
    let lam = vx.iter().copied().min().unwrap().min(vw / 2);
    if lam > 0 {
        for xi in &mut x {
            *xi /= p.pow(lam);
        }
        w /= p.pow(2 * lam);
    }
    let pk = p.pow(k);
    let x = x.map(|v| v % pk);
    let mut w = w % pk;
    // the equation holds mod p^(kk - 4 lam) which must still cover p^k
    if kk < 4 * lam + k {
        return None;
    }
    let unit_index = (0..3).find(|&i| x[i] % p != 0)?;
    // canonical representative: unit coordinate scaled to 1
    let inv = modinv(x[unit_index], pk);
    let x = x.map(|v| mulmod(v, inv, pk));
    w = mulmod(w, mulmod(inv, inv, pk), pk);
    // some partial derivative is a unit: 4 a_i x_i^3 needs v(a_i) = 0 and
    // x_i a unit; -2w needs w a unit (p is odd here)
    let smooth = (0..3).any(|i| x[i] % p != 0 && padic_unit_part(c[i], p).0 == 0)
        || w % p != 0;
    Some(LocalPoint {
        place: Place::Finite(p),
        coords: LocalCoords::Padic { x, w, precision: k },
        unit_index,
        smooth,
    })
}

fn sample_two_adic(a: &CoefficientTriple, k: u32, n: usize) -> Result<Vec<LocalPoint>, LocalError> {
    let c = a.a128();
    let k = k.clamp(2, 40);
    let kpow = (k + 14).min(64);
    let mut seen: HashSet<([u128; 3], u128)> = HashSet::new();
    let mut out: Vec<LocalPoint> = Vec::new();
    let mut frontier: Vec<([u128; 3], u128)> = (1u32..16)
        .map(|b| {
            ([(b & 1) as u128, (b >> 1 & 1) as u128, (b >> 2 & 1) as u128], (b >> 3 & 1) as u128)
        })
        .collect();
    let mut nodes = frontier.len() as u64;
    let mut j = 1u32;
    while !frontier.is_empty() && out.len() < n && j <= kpow - 2 {
        let mut next = Vec::new();
        for &(x, w) in &frontier {
            let vf = v2_wrapped(crate::hensel::eval_surface_wrapped(&c, &x, w));
            if vf < j {
                continue;
            }
            if let Some((lead, t)) = two_adic_cert(&c, &x, w, vf) {
                if k + t + 2 <= kpow {
                    if let Some((lx, lw)) = digit_lift(&c, 2, x, w, lead, t, k, kpow) {
                        if let Some(lp) = finish_two_adic_point(&c, lx, lw, k) {
                            if let LocalCoords::Padic { x: cx, w: cw, .. } = lp.coords {
                                if seen.insert((cx, cw)) {
                                    out.push(lp);
                                    if out.len() >= n {
                                        break;
                                    }
                                }
                            }
                        }
                    }
                }
                continue; // certified classes need no children
            }
            let bit = 1u128 << j;
            for d in 0u32..16 {
                next.push((
                    [
                        x[0] | ((d as u128 & 1) * bit),
                        x[1] | ((d as u128 >> 1 & 1) * bit),
                        x[2] | ((d as u128 >> 2 & 1) * bit),
                    ],
                    w | ((d as u128 >> 3 & 1) * bit),
                ));
            }
        }
        nodes += next.len() as u64;
        if nodes > NODE_BUDGET {
            break;
        }
        frontier = next;
        j += 1;
    }
    if out.is_empty() {
        return Err(LocalError::NoSmoothPoints);
    }
    Ok(out)
}

fn finish_two_adic_point(c: &[i128; 3], x: [u128; 3], w: u128, k: u32) -> Option<LocalPoint> {
    let pk: u128 = 1 << k;
    let x = x.map(|v| v % pk);
    let w = w % pk;
    let unit_index = (0..3).find(|&i| x[i] & 1 == 1)?;
    let inv = modinv(x[unit_index], pk);
    let x = x.map(|v| v * inv % pk);
    let w = w * (inv * inv % pk) % pk;
    // at p = 2 every partial derivative is even
    let _ = c;
    Some(LocalPoint {
        place: Place::Finite(2),
        coords: LocalCoords::Padic { x, w, precision: k },
        unit_index,
        smooth: false,
    })
}
