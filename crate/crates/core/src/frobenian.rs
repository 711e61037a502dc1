//! Prime densities behind the census asymptotics.
//!
//! Two quadratic conditions on a nonzero integer x drive everything here:
//! "p = 3 mod 4 and x is not a p-adic square" (density alpha) and "x is a
//! p-adic square" (density beta). The indicators gamma and omega bundle
//! those conditions over the prime factors of a modulus, and each factors
//! as a convolution of alpha resp. beta twisted by a quadratic character;
//! lambda is the alpha*beta convolution away from the small primes and the
//! divisors of x. Its partial sums Sum_{t<=T} lambda(t;x)/t grow like
//! K (log T)^M with M the mean of lambda on primes, and this module both
//! evaluates the functions exactly and estimates the means and the
//! exponent M empirically, which is how the census predictions are
//! sanity-checked.

use crate::arith::factor::{factorize, is_prime, sieve_primes};
use crate::arith::padic::is_padic_square;
use crate::arith::symbols::kronecker;
use crate::arith::{Place, SquareClass};
use crate::counting::m_exponent;
use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FrobenianError {
    #[error("x must be a nonzero integer that is not a perfect square")]
    SquareParameter,
    #[error("prime means exist for the alpha and beta densities only")]
    MeanKind,
    #[error("{0}")]
    BadBounds(&'static str),
}

/// Primes below this never enter the support of lambda. The closed forms
/// feeding the census are only trusted past the small primes, so the
/// asymptotic is stated for moduli free of them.
pub const LAMBDA_PRIME_FLOOR: u64 = 98;

/// Largest T the partial-sum sieve will attempt; the factor table is 4
/// bytes per integer.
pub const LAMBDA_T_CAP: u64 = 100_000_000;

fn half() -> Ratio<i64> {
    Ratio::new(1, 2)
}

fn zero() -> Ratio<i64> {
    Ratio::from_integer(0)
}

/// 1/2 when p = 3 mod 4 and x is not a square in Q_p, else 0. Total in p:
/// at primes dividing 2x the p-adic condition itself decides.
pub fn alpha(p: u64, x: i128) -> Ratio<i64> {
    assert!(x != 0, "alpha parameter must be nonzero");
    debug_assert!(is_prime(p as u128), "alpha takes a prime");
    if p % 4 == 3 && !is_padic_square(x, Place::Finite(p as u128)) {
        half()
    } else {
        zero()
    }
}

/// 1/2 when x is a square in Q_p, else 0.
pub fn beta(p: u64, x: i128) -> Ratio<i64> {
    assert!(x != 0, "beta parameter must be nonzero");
    debug_assert!(is_prime(p as u128), "beta takes a prime");
    if is_padic_square(x, Place::Finite(p as u128)) {
        half()
    } else {
        zero()
    }
}

// Extension to squarefree arguments as a product over the prime factors;
// zero off the squarefree locus, which is the only convention the
// convolution identities ever exercise.
fn on_squarefree(n: u64, x: i128, f: fn(u64, i128) -> Ratio<i64>) -> Ratio<i64> {
    let fac = factorize(n as i128);
    if fac.factors.iter().any(|&(_, e)| e > 1) {
        return zero();
    }
    fac.primes()
        .fold(Ratio::from_integer(1), |acc, p| acc * f(p as u64, x))
}

fn squarefree_divisors(primes: &[u64]) -> Vec<u64> {
    let mut out = vec![1u64];
    for &p in primes {
        for i in 0..out.len() {
            out.push(out[i] * p);
        }
    }
    out
}

/// Indicator of "w squarefree, and every p | w has p = 3 mod 4 with both x
/// and y p-adic non-squares".
pub fn gamma_indicator(w: u64, x: i128, y: i128) -> bool {
    assert!(w >= 1 && x != 0 && y != 0);
    let fac = factorize(w as i128);
    fac.factors.iter().all(|&(_, e)| e == 1)
        && fac.primes().all(|p| {
            p % 4 == 3
                && !is_padic_square(x, Place::Finite(p))
                && !is_padic_square(y, Place::Finite(p))
        })
}

/// The alpha*alpha convolution twisted by the character of -x: equal to
/// `gamma_indicator` whenever w shares no odd prime with x.
pub fn gamma_convolution(w: u64, x: i128, y: i128) -> Ratio<i64> {
    assert!(w >= 1 && x != 0 && y != 0);
    let fac = factorize(w as i128);
    if fac.factors.iter().any(|&(_, e)| e > 1) {
        return zero();
    }
    let primes: Vec<u64> = fac.primes().map(|p| p as u64).collect();
    let mut total = zero();
    for f in squarefree_divisors(&primes) {
        let h = w / f;
        let chi = kronecker(-x, f as i128);
        total += on_squarefree(h, y, alpha)
            * on_squarefree(f, y, alpha)
            * Ratio::from_integer(chi as i64);
    }
    total
}

/// Indicator of "v squarefree, and both x and y are p-adic squares at every
/// p | v".
pub fn omega_indicator(v: u64, x: i128, y: i128) -> bool {
    assert!(v >= 1 && x != 0 && y != 0);
    let fac = factorize(v as i128);
    fac.factors.iter().all(|&(_, e)| e == 1)
        && fac
            .primes()
            .all(|p| is_padic_square(x, Place::Finite(p)) && is_padic_square(y, Place::Finite(p)))
}

/// The beta*beta convolution twisted by the character of x: equal to
/// `omega_indicator` for odd v coprime to x.
pub fn omega_convolution(v: u64, x: i128, y: i128) -> Ratio<i64> {
    assert!(v >= 1 && x != 0 && y != 0);
    let fac = factorize(v as i128);
    if fac.factors.iter().any(|&(_, e)| e > 1) {
        return zero();
    }
    let primes: Vec<u64> = fac.primes().map(|p| p as u64).collect();
    let mut total = zero();
    for e in squarefree_divisors(&primes) {
        let d = v / e;
        let chi = kronecker(x, e as i128);
        total += on_squarefree(d, y, beta)
            * on_squarefree(e, y, beta)
            * Ratio::from_integer(chi as i64);
    }
    total
}

/// Compares the indicator with its convolution form. None when w shares an
/// odd prime with x: there the character vanishes while the p-adic
/// condition still decides, and the two sides genuinely differ, e.g.
/// gamma at w = 3, x = 3 (indicator 1, convolution 1/2).
pub fn gamma_identity_check(w: u64, x: i128, y: i128) -> Option<bool> {
    assert!(w >= 1 && x != 0 && y != 0);
    let odd = w >> w.trailing_zeros();
    if num_integer::gcd(odd as i128, x) != 1 {
        return None;
    }
    let ind = Ratio::from_integer(gamma_indicator(w, x, y) as i64);
    Some(ind == gamma_convolution(w, x, y))
}

/// As `gamma_identity_check` for omega. The domain is narrower: v must also
/// be odd, since at p = 2 the character sees x mod 8 only up to sign, e.g.
/// v = 2, x = 7: indicator 0 (7 is not a 2-adic square), convolution 1.
pub fn omega_identity_check(v: u64, x: i128, y: i128) -> Option<bool> {
    assert!(v >= 1 && x != 0 && y != 0);
    if v % 2 == 0 || num_integer::gcd(v as i128, x) != 1 {
        return None;
    }
    let ind = Ratio::from_integer(omega_indicator(v, x, y) as i64);
    Some(ind == omega_convolution(v, x, y))
}

/// The alpha*beta convolution: supported on squarefree t coprime to x with
/// no prime factor below `LAMBDA_PRIME_FLOOR`, where it is multiplicative
/// with lambda(p) = alpha(p;x) + beta(p;x). The two summands exclude each
/// other, so on the support lambda(t) = 2^(-omega(t)).
pub fn lambda(t: u64, x: i128) -> Ratio<i64> {
    assert!(t >= 1 && x != 0);
    let fac = factorize(t as i128);
    if fac.factors.iter().any(|&(_, e)| e > 1) {
        return zero();
    }
    let mut out = Ratio::from_integer(1);
    for p in fac.primes() {
        if p < LAMBDA_PRIME_FLOOR as u128 || x % (p as i128) == 0 {
            return zero();
        }
        out *= alpha(p as u64, x) + beta(p as u64, x);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanKind {
    Alpha,
    Beta,
    LambdaSum,
}

/// A density claim to be checked empirically: the parameter, the primes
/// excluded from its Galois description, and the mean the lemmas predict
/// (for lambda the mean doubles as the partial-sum log exponent).
#[derive(Debug, Clone)]
pub struct FrobenianSpec {
    pub kind: ScanKind,
    pub x: i128,
    pub excluded_primes: Vec<u128>,
    pub claimed_mean: Ratio<i64>,
}

impl FrobenianSpec {
    pub fn new(kind: ScanKind, x: i128) -> Result<FrobenianSpec, FrobenianError> {
        if x == 0 {
            return Err(FrobenianError::SquareParameter);
        }
        let class = SquareClass::of(x);
        if class == SquareClass::PlusSquare {
            return Err(FrobenianError::SquareParameter);
        }
        let claimed_mean = match kind {
            ScanKind::Alpha => {
                if class == SquareClass::MinusSquare {
                    Ratio::new(1, 4)
                } else {
                    Ratio::new(1, 8)
                }
            }
            ScanKind::Beta => Ratio::new(1, 4),
            ScanKind::LambdaSum => {
                m_exponent(class).map_err(|_| FrobenianError::SquareParameter)?
            }
        };
        let mut excluded: Vec<u128> = match kind {
            ScanKind::LambdaSum => sieve_primes(LAMBDA_PRIME_FLOOR as usize - 1)
                .into_iter()
                .map(u128::from)
                .collect(),
            _ => vec![2],
        };
        excluded.extend(factorize(x).primes());
        excluded.sort_unstable();
        excluded.dedup();
        Ok(FrobenianSpec {
            kind,
            x,
            excluded_primes: excluded,
            claimed_mean,
        })
    }

    /// One row per bound: mean estimates at prime bounds X for alpha and
    /// beta, fitted log exponents at sum bounds T for lambda.
    pub fn scan(&self, bounds: &[u64]) -> Result<Vec<ScanRow>, FrobenianError> {
        if bounds.is_empty() || bounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FrobenianError::BadBounds(
                "bounds must be nonempty and strictly increasing",
            ));
        }
        let claimed = ratio_f64(self.claimed_mean);
        match self.kind {
            ScanKind::Alpha | ScanKind::Beta => {
                if bounds[0] < 10_000 {
                    return Err(FrobenianError::BadBounds(
                        "mean estimates need prime bounds of at least 10^4",
                    ));
                }
                let f = if self.kind == ScanKind::Alpha { alpha } else { beta };
                Ok(mean_counts(self.x, bounds, f)
                    .into_iter()
                    .map(|(bound, halves, pi)| ScanRow {
                        bound,
                        estimate: halves as f64 / (2.0 * pi as f64),
                        claimed,
                    })
                    .collect())
            }
            ScanKind::LambdaSum => {
                if bounds[0] < 10_000 || *bounds.last().unwrap() > LAMBDA_T_CAP {
                    return Err(FrobenianError::BadBounds(
                        "exponent fits need sum bounds between 10^4 and 10^8",
                    ));
                }
                let mut grid = log_grid(*bounds.last().unwrap());
                grid.extend_from_slice(bounds);
                grid.sort_unstable();
                grid.dedup();
                let sums = lambda_partial_sums_on_grid(self.x, &grid);
                let points: Vec<(u64, f64)> = grid.iter().copied().zip(sums).collect();
                bounds
                    .iter()
                    .map(|&bound| {
                        let window: Vec<(u64, f64)> = points
                            .iter()
                            .copied()
                            .filter(|&(t, _)| t as f64 * 100.0 >= bound as f64 && t <= bound)
                            .collect();
                        let (_, m) = fit_log_power(&window).ok_or(FrobenianError::BadBounds(
                            "not enough grid below a sum bound to fit an exponent",
                        ))?;
                        Ok(ScanRow {
                            bound,
                            estimate: m,
                            claimed,
                        })
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub bound: u64,
    pub estimate: f64,
    pub claimed: f64,
}

impl ScanRow {
    pub fn csv_header() -> &'static str {
        "X_or_T,estimate,claimed,abs_error"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.bound,
            self.estimate,
            self.claimed,
            (self.estimate - self.claimed).abs()
        )
    }
}

fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Decade grid {floor, 10*floor, ...} up to and always including `limit`.
pub fn decade_bounds(floor: u64, limit: u64) -> Vec<u64> {
    assert!(floor >= 1 && limit >= floor);
    let mut out = Vec::new();
    let mut b = floor;
    while b < limit {
        out.push(b);
        b = b.saturating_mul(10);
    }
    out.push(limit);
    out
}

// (bound, number of primes contributing 1/2, pi(bound)) at each bound. The
// divisor pi counts every prime up to the bound; the sum skips p | 2x,
// which is what makes the estimate compare against the Galois mean.
fn mean_counts(x: i128, bounds: &[u64], f: fn(u64, i128) -> Ratio<i64>) -> Vec<(u64, i64, i64)> {
    let primes = sieve_primes(*bounds.last().unwrap() as usize);
    let mut out = Vec::with_capacity(bounds.len());
    let mut bi = 0;
    let mut pi = 0i64;
    let mut halves = 0i64;
    for &p in &primes {
        while bi < bounds.len() && p > bounds[bi] {
            out.push((bounds[bi], halves, pi));
            bi += 1;
        }
        pi += 1;
        if p != 2 && x % (p as i128) != 0 && f(p, x) == half() {
            halves += 1;
        }
    }
    while bi < bounds.len() {
        out.push((bounds[bi], halves, pi));
        bi += 1;
    }
    out
}

/// Average of the density over primes up to `limit`, as an exact rational:
/// (sum of f(p;x) over p <= limit, p not dividing 2x) / pi(limit).
pub fn mean_estimate(kind: ScanKind, x: i128, limit: u64) -> Result<Ratio<i64>, FrobenianError> {
    if kind == ScanKind::LambdaSum {
        return Err(FrobenianError::MeanKind);
    }
    if x == 0 || SquareClass::of(x) == SquareClass::PlusSquare {
        return Err(FrobenianError::SquareParameter);
    }
    if limit < 10_000 {
        return Err(FrobenianError::BadBounds(
            "mean estimates need prime bounds of at least 10^4",
        ));
    }
    let f = if kind == ScanKind::Alpha { alpha } else { beta };
    let (_, halves, pi) = mean_counts(x, &[limit], f)[0];
    Ok(Ratio::new(halves, 2 * pi))
}

fn smallest_prime_factor_table(limit: u64) -> Vec<u32> {
    let n = limit as usize;
    let mut spf = vec![0u32; n + 1];
    for i in 2..=n {
        if spf[i] == 0 {
            let mut j = i;
            while j <= n {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    spf
}

// Partial sums of lambda(t;x)/t at each grid point (grid sorted, last entry
// is the sieve bound). One pass: factor t off the table, bail at the first
// prime that leaves the support, otherwise halve per prime. Everything
// lambda takes is a dyadic rational, so f64 holds each term exactly and
// only the accumulation rounds.
fn lambda_partial_sums_on_grid(x: i128, grid: &[u64]) -> Vec<f64> {
    let t_max = *grid.last().expect("nonempty grid");
    let spf = smallest_prime_factor_table(t_max);
    let ramified: Vec<u64> = factorize(x)
        .primes()
        .filter(|&p| p >= LAMBDA_PRIME_FLOOR as u128 && p <= t_max as u128)
        .map(|p| p as u64)
        .collect();
    let mut out = Vec::with_capacity(grid.len());
    let mut gi = 0;
    let mut sum = 0.0f64;
    for t in 1..=t_max {
        let mut value = 1.0f64;
        let mut m = t as usize;
        while m > 1 {
            let p = spf[m] as u64;
            if p < LAMBDA_PRIME_FLOOR {
                value = 0.0;
                break;
            }
            let mut e = 0;
            while m as u64 % p == 0 {
                m /= p as usize;
                e += 1;
            }
            if e > 1 || ramified.contains(&p) {
                value = 0.0;
                break;
            }
            if p % 4 == 1 && kronecker(x, p as i128) == -1 {
                // alpha needs p = 3 mod 4, beta needs the residue; neither holds
                value = 0.0;
                break;
            }
            value *= 0.5;
        }
        sum += value / t as f64;
        while gi < grid.len() && grid[gi] == t {
            out.push(sum);
            gi += 1;
        }
    }
    out
}

// Log-spaced integers from 10^3 to t_max, 16 per decade.
fn log_grid(t_max: u64) -> Vec<u64> {
    const PER_DECADE: u32 = 16;
    let mut out = Vec::new();
    if t_max > 1000 {
        let mut j = 3 * PER_DECADE;
        loop {
            let t = 10f64.powf(f64::from(j) / f64::from(PER_DECADE)).round() as u64;
            if t >= t_max {
                break;
            }
            out.push(t);
            j += 1;
        }
    }
    out.push(t_max);
    out.dedup();
    out
}

/// Least squares of ln S against ln ln T, so S = K (ln T)^M. None when the
/// window is too thin to determine a slope.
fn fit_log_power(points: &[(u64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 3 || points.iter().any(|&(t, s)| t < 3 || s <= 0.0) {
        return None;
    }
    let zs: Vec<f64> = points.iter().map(|&(t, _)| (t as f64).ln().ln()).collect();
    let us: Vec<f64> = points.iter().map(|&(_, s)| s.ln()).collect();
    let n = zs.len() as f64;
    let zbar = zs.iter().sum::<f64>() / n;
    let ubar = us.iter().sum::<f64>() / n;
    let szz: f64 = zs.iter().map(|z| (z - zbar) * (z - zbar)).sum();
    if szz < 1e-9 {
        return None;
    }
    let szu: f64 = zs.iter().zip(&us).map(|(z, u)| (z - zbar) * (u - ubar)).sum();
    let m = szu / szz;
    let k = (ubar - m * zbar).exp();
    Some((k, m))
}

#[derive(Debug, Clone)]
pub struct LambdaPartialSum {
    pub x: i128,
    pub t_max: u64,
    /// Sum_{t <= t_max} lambda(t;x)/t.
    pub sum: f64,
    /// The log-spaced grid of (T, partial sum at T) the fit is drawn from.
    pub grid: Vec<(u64, f64)>,
    /// Slope of ln(sum) in ln(ln T) over the top two decades of the grid.
    pub fitted_m: Option<f64>,
    pub fitted_k: Option<f64>,
    /// 1/2 when x is minus a square, 3/8 when x is not plus or minus one.
    pub claimed_m: Ratio<i64>,
}

/// Sieves lambda(.;x) up to t_max and fits the partial-sum growth
/// K (ln T)^M. The fit appears once t_max reaches 10^3; tolerances on M
/// only become meaningful around 10^7.
pub fn partial_sum_lambda(t_max: u64, x: i128) -> Result<LambdaPartialSum, FrobenianError> {
    if t_max < 1 || t_max > LAMBDA_T_CAP {
        return Err(FrobenianError::BadBounds(
            "partial sums need 1 <= T <= 10^8",
        ));
    }
    if x == 0 || SquareClass::of(x) == SquareClass::PlusSquare {
        return Err(FrobenianError::SquareParameter);
    }
    let claimed_m =
        m_exponent(SquareClass::of(x)).map_err(|_| FrobenianError::SquareParameter)?;
    let grid = log_grid(t_max);
    let sums = lambda_partial_sums_on_grid(x, &grid);
    let points: Vec<(u64, f64)> = grid.into_iter().zip(sums).collect();
    let sum = points.last().expect("grid includes t_max").1;
    let window: Vec<(u64, f64)> = points
        .iter()
        .copied()
        .filter(|&(t, _)| t as f64 * 100.0 >= t_max as f64)
        .collect();
    let fit = if t_max >= 1000 { fit_log_power(&window) } else { None };
    Ok(LambdaPartialSum {
        x,
        t_max,
        sum,
        grid: points,
        fitted_m: fit.map(|(_, m)| m),
        fitted_k: fit.map(|(k, _)| k),
        claimed_m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_beta_prime_values() {
        for x in [2, 3, 7, -1, 10] {
            assert_eq!(alpha(5, x), zero(), "5 = 1 mod 4 kills alpha");
        }
        assert_eq!(alpha(3, 2), half());
        assert_eq!(alpha(7, 2), zero(), "2 = 3^2 mod 7");
        assert_eq!(alpha(3, -1), half());
        assert_eq!(alpha(11, 7), half());
        assert_eq!(alpha(2, 3), zero(), "2 is never 3 mod 4");

        assert_eq!(beta(7, 2), half());
        assert_eq!(beta(3, 2), zero());
        assert_eq!(beta(13, 3), half());
        // odd valuation is never a square, at odd p or at 2
        assert_eq!(beta(5, 5), zero());
        assert_eq!(beta(2, 8), zero());
        assert_eq!(beta(2, 17), half());
        assert_eq!(beta(2, 7), zero(), "7 = -1 mod 8");
        assert_eq!(beta(5, 50), zero(), "unit part 2 is a non-residue mod 5");
    }

    #[test]
    fn gamma_pins() {
        assert!(gamma_indicator(1, 7, 5));
        assert_eq!(gamma_convolution(1, 7, 5), Ratio::from_integer(1));
        assert!(!gamma_indicator(4, 7, 5));
        assert_eq!(gamma_convolution(4, 7, 5), zero());

        // 3 = 3 mod 4, and 5, 2 are both non-residues mod 3
        assert!(gamma_indicator(3, 5, 2));
        assert_eq!(gamma_convolution(3, 5, 2), Ratio::from_integer(1));
        // 2 is a square mod 7, so the y condition fails
        assert!(!gamma_indicator(7, 5, 2));
        assert_eq!(gamma_convolution(7, 5, 2), zero());
        assert!(!gamma_indicator(21, 5, 2));
        // 5 is a square mod 11, so the x condition fails; the convolution
        // cancels through the character instead
        assert!(!gamma_indicator(11, 5, 2));
        assert_eq!(gamma_convolution(11, 5, 2), zero());
    }

    #[test]
    fn omega_pins() {
        assert!(omega_indicator(1, 7, 5));
        assert_eq!(omega_convolution(1, 7, 5), Ratio::from_integer(1));
        assert!(omega_indicator(7, 2, 11), "2 and 11 = 4 are squares mod 7");
        assert_eq!(omega_convolution(7, 2, 11), Ratio::from_integer(1));
        assert!(omega_indicator(5, 11, 19));
        assert!(!omega_indicator(5, 13, 19), "13 = 3 is a non-residue mod 5");
        assert_eq!(omega_convolution(5, 13, 19), zero());
        // at 2 and 3 both arguments must be local squares
        assert!(omega_indicator(6, 49, 49));
        assert!(!omega_indicator(6, 17, 17), "17 = 2 mod 3");
    }

    #[test]
    fn identity_checks_mark_their_domain() {
        // shared odd prime: indicator says 3 is not a 3-adic square, the
        // character just vanishes
        assert!(gamma_indicator(3, 3, 2));
        assert_eq!(gamma_convolution(3, 3, 2), half());
        assert_eq!(gamma_identity_check(3, 3, 2), None);

        // even modulus: 7 = -1 mod 8 fools the character at 2
        assert!(!omega_indicator(2, 7, 17));
        assert_eq!(omega_convolution(2, 7, 17), Ratio::from_integer(1));
        assert_eq!(omega_identity_check(2, 7, 17), None);

        // even modulus is fine for gamma, 2 is never 3 mod 4 on either side
        assert_eq!(gamma_identity_check(2, 7, 5), Some(true));
        assert_eq!(gamma_identity_check(1, 7, 5), Some(true));
    }

    #[test]
    fn identity_suite_small_range() {
        let pairs = [(7i128, 17i128), (-5, 3), (10, -21), (-1, -1)];
        let mut checked_gamma = 0u32;
        let mut checked_omega = 0u32;
        for w in 1..=1200u64 {
            for &(x, y) in &pairs {
                if let Some(ok) = gamma_identity_check(w, x, y) {
                    assert!(ok, "gamma mismatch at w={} x={} y={}", w, x, y);
                    checked_gamma += 1;
                }
                if let Some(ok) = omega_identity_check(w, x, y) {
                    assert!(ok, "omega mismatch at v={} x={} y={}", w, x, y);
                    checked_omega += 1;
                }
            }
        }
        assert!(checked_gamma > 4000, "domain filter too aggressive");
        assert!(checked_omega > 1800, "domain filter too aggressive");
    }

    #[test]
    fn identity_suite_random_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xf20b);
        let mut pairs = 0;
        while pairs < 20 {
            let x: i128 = rng.gen_range(-400..=400);
            let y: i128 = rng.gen_range(-400..=400);
            if x == 0 || y == 0 {
                continue;
            }
            if SquareClass::of(x) == SquareClass::PlusSquare
                || SquareClass::of(y) == SquareClass::PlusSquare
            {
                continue;
            }
            pairs += 1;
            for w in 1..=400u64 {
                if let Some(ok) = gamma_identity_check(w, x, y) {
                    assert!(ok, "gamma mismatch at w={} x={} y={}", w, x, y);
                }
                if let Some(ok) = omega_identity_check(w, x, y) {
                    assert!(ok, "omega mismatch at v={} x={} y={}", w, x, y);
                }
            }
        }
    }

    #[test]
    fn lambda_support_and_pins() {
        assert_eq!(lambda(1, 7), Ratio::from_integer(1));
        assert_eq!(lambda(2, 7), zero());
        assert_eq!(lambda(3, 7), zero(), "3 is below the prime floor");
        assert_eq!(lambda(97 * 101, -1), zero(), "97 is below the floor");
        // 101 = 1 mod 4 kills alpha and (7|101) = -1 kills beta
        assert_eq!(lambda(101, 7), zero());
        assert_eq!(lambda(103, 7), half());
        assert_eq!(lambda(101, -1), half(), "(-1|101) = 1, beta survives");
        assert_eq!(lambda(103, -1), half(), "103 = 3 mod 4 and (-1|103) = -1");
        assert_eq!(lambda(101 * 103, -1), Ratio::new(1, 4));
        assert_eq!(lambda(101 * 101, -1), zero(), "not squarefree");
        assert_eq!(lambda(101, 303), zero(), "101 divides x");
    }

    #[test]
    fn lambda_is_multiplicative() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x9a11e7);
        let primes: Vec<u64> = sieve_primes(1000)
            .into_iter()
            .filter(|&p| p >= LAMBDA_PRIME_FLOOR)
            .collect();
        for _ in 0..300 {
            let i = rng.gen_range(0..primes.len());
            let j = rng.gen_range(0..primes.len());
            let k = rng.gen_range(0..primes.len());
            if i == j || i == k || j == k {
                continue;
            }
            let s = primes[i] * primes[j];
            let t = primes[k];
            for x in [7i128, -1, -5] {
                assert_eq!(lambda(s * t, x), lambda(s, x) * lambda(t, x));
                assert_eq!(lambda(s, x), lambda(primes[i], x) * lambda(primes[j], x));
            }
        }
    }

    #[test]
    fn sieve_agrees_with_pointwise_lambda() {
        for (t_max, x) in [(20_000u64, 7i128), (5_000, -1)] {
            let sieved = partial_sum_lambda(t_max, x).unwrap().sum;
            let direct: f64 = (1..=t_max)
                .map(|t| {
                    let l = lambda(t, x);
                    ratio_f64(l) / t as f64
                })
                .sum();
            assert!(
                (sieved - direct).abs() < 1e-9,
                "sieve {} vs direct {}",
                sieved,
                direct
            );
        }
    }

    #[test]
    fn partial_sum_edges() {
        let unit = partial_sum_lambda(1, 7).unwrap();
        assert_eq!(unit.sum, 1.0);
        assert!(unit.fitted_m.is_none());

        let sub = partial_sum_lambda(999, 7).unwrap();
        assert!(sub.fitted_m.is_none());
        assert!(sub.sum > 1.0, "103 contributes already");

        let fit = partial_sum_lambda(20_000, 7).unwrap();
        assert!(fit.fitted_m.is_some());
        assert_eq!(fit.claimed_m, Ratio::new(3, 8));
        assert_eq!(
            partial_sum_lambda(20_000, -1).unwrap().claimed_m,
            Ratio::new(1, 2)
        );

        assert!(matches!(
            partial_sum_lambda(10_000, 9),
            Err(FrobenianError::SquareParameter)
        ));
        assert!(matches!(
            partial_sum_lambda(LAMBDA_T_CAP + 1, 7),
            Err(FrobenianError::BadBounds(_))
        ));
    }

    #[test]
    fn fit_recovers_a_synthetic_exponent() {
        let grid = log_grid(10_000_000);
        let points: Vec<(u64, f64)> = grid
            .into_iter()
            .map(|t| (t, 0.7 * (t as f64).ln().powf(0.42)))
            .collect();
        let (k, m) = fit_log_power(&points).unwrap();
        assert!((m - 0.42).abs() < 1e-9, "m = {}", m);
        assert!((k - 0.7).abs() < 1e-9, "k = {}", k);
    }

    #[test]
    fn mean_estimate_matches_a_direct_recount() {
        let est = mean_estimate(ScanKind::Alpha, 7, 10_000).unwrap();
        let mut pi = 0i64;
        let mut halves = 0i64;
        for n in 2..=10_000u64 {
            if !is_prime(n as u128) {
                continue;
            }
            pi += 1;
            if n != 2 && n != 7 && n % 4 == 3 && kronecker(7, n as i128) == -1 {
                halves += 1;
            }
        }
        assert_eq!(est, Ratio::new(halves, 2 * pi));
        assert!((ratio_f64(est) - 0.125).abs() < 0.02);

        let beta_est = mean_estimate(ScanKind::Beta, 7, 10_000).unwrap();
        assert!((ratio_f64(beta_est) - 0.25).abs() < 0.02);

        assert!(matches!(
            mean_estimate(ScanKind::LambdaSum, 7, 1_000_000),
            Err(FrobenianError::MeanKind)
        ));
        assert!(matches!(
            mean_estimate(ScanKind::Alpha, 9, 1_000_000),
            Err(FrobenianError::SquareParameter)
        ));
        assert!(matches!(
            mean_estimate(ScanKind::Alpha, 7, 5_000),
            Err(FrobenianError::BadBounds(_))
        ));
    }

    #[test]
    fn spec_claims_and_exclusions() {
        let a7 = FrobenianSpec::new(ScanKind::Alpha, 7).unwrap();
        assert_eq!(a7.claimed_mean, Ratio::new(1, 8));
        assert_eq!(a7.excluded_primes, vec![2, 7]);

        let a4 = FrobenianSpec::new(ScanKind::Alpha, -4).unwrap();
        assert_eq!(a4.claimed_mean, Ratio::new(1, 4), "-x a square");
        assert_eq!(a4.excluded_primes, vec![2]);

        let b7 = FrobenianSpec::new(ScanKind::Beta, 7).unwrap();
        assert_eq!(b7.claimed_mean, Ratio::new(1, 4));

        let l1 = FrobenianSpec::new(ScanKind::LambdaSum, -1).unwrap();
        assert_eq!(l1.claimed_mean, Ratio::new(1, 2));
        assert_eq!(l1.excluded_primes.len(), 25, "the 25 primes below 98");
        assert_eq!(*l1.excluded_primes.last().unwrap(), 97);

        let l7 = FrobenianSpec::new(ScanKind::LambdaSum, 7).unwrap();
        assert_eq!(l7.claimed_mean, Ratio::new(3, 8));
        assert_eq!(l7.excluded_primes.len(), 25, "7 is already below the floor");

        for bad in [0i128, 16, 4] {
            assert!(FrobenianSpec::new(ScanKind::Alpha, bad).is_err());
            assert!(FrobenianSpec::new(ScanKind::LambdaSum, bad).is_err());
        }
    }

    #[test]
    fn scan_rows_and_csv_shape() {
        let spec = FrobenianSpec::new(ScanKind::Beta, 7).unwrap();
        let rows = spec.scan(&[10_000]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].bound, 10_000);
        assert_eq!(rows[0].claimed, 0.25);
        assert_eq!(ScanRow::csv_header(), "X_or_T,estimate,claimed,abs_error");
        let line = rows[0].csv_row();
        assert_eq!(line.split(',').count(), 4);
        assert!(line.starts_with("10000,"));

        assert!(spec.scan(&[]).is_err());
        assert!(spec.scan(&[10_000, 10_000]).is_err());
        assert!(spec.scan(&[5_000]).is_err());

        let lam = FrobenianSpec::new(ScanKind::LambdaSum, 7).unwrap();
        let lrows = lam.scan(&[10_000, 100_000]).unwrap();
        assert_eq!(lrows.len(), 2);
        assert!(lrows.iter().all(|r| r.claimed == 0.375));
        assert!(lam.scan(&[LAMBDA_T_CAP + 1]).is_err());
    }

    #[test]
    fn decade_grid() {
        assert_eq!(
            decade_bounds(10_000, 1_000_000),
            vec![10_000, 100_000, 1_000_000]
        );
        assert_eq!(
            decade_bounds(10_000, 500_000),
            vec![10_000, 100_000, 500_000]
        );
        assert_eq!(decade_bounds(1000, 1000), vec![1000]);
    }

    // Run by hand when retuning the fit: prints the 10^6 means and a 10^6
    // exponent fit so drift is visible without the long acceptance pass.
    #[test]
    #[ignore = "slow probe, run explicitly"]
    fn probe_claimed_asymptotics() {
        for (kind, x, name) in [
            (ScanKind::Alpha, 7i128, "alpha x=7"),
            (ScanKind::Alpha, -4, "alpha x=-4"),
            (ScanKind::Beta, 7, "beta x=7"),
        ] {
            let est = mean_estimate(kind, x, 1_000_000).unwrap();
            println!("{}: {} = {}", name, est, ratio_f64(est));
        }
        for x in [-1i128, 7] {
            for t_max in [1_000_000, 10_000_000] {
                let ps = partial_sum_lambda(t_max, x).unwrap();
                println!(
                    "lambda x={} T={}: sum {} fitted {:?} claimed {}",
                    x, t_max, ps.sum, ps.fitted_m, ps.claimed_m
                );
            }
        }
    }
}
