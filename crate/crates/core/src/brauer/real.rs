//! Real-place classification by exact sign analysis of the tangent form.
//!
//! Real points with x != 0 scale onto the simplex t_i = x_i^2, t0+t1+t2 = 1,
//! and the locus is cut out by q(t) = sum a_i t_i^2 >= 0. Writing
//! L = sum c_i t_i, both square-root branches of w enter through
//! G = (L + c3 sqrt(q))(L - c3 sqrt(q)) = L^2 - c3^2 q: a locus point with
//! G < 0 realises both signs of f at once, and G > 0 forces sign(L) on both
//! branches. Grids hunt for exact sign witnesses; rectangle subdivision over
//! (t0, t1) with rational interval arithmetic certifies constancy. A cell is
//! done when q < 0 throughout (off locus) or when G > 0 with L of one strict
//! sign. An exact zero of f on the locus makes the certificate unreachable
//! and the verdict an honest Undecided; a different quadric point moves the
//! zero locus and usually clears it.
//!
//! All arithmetic is integer: endpoints are numerators over a power-of-two
//! denominator, carried in i128 until a checked operation would overflow,
//! then promoted to big integers.

use super::{ClassifyOutcome, Provenance, QuaternionAlgebra, Verdict};
use crate::arith::hilbert::{hilbert_symbol, invariant_from_symbol};
use crate::arith::Place;
use crate::local::CoefficientTriple;
use num_bigint::{BigInt, Sign};
use std::cmp::Ordering;

const GRID_COARSE: i128 = 20;
const GRID_FINE: i128 = 141;
const DEPTH_CAP: u32 = 12;
const CELL_BUDGET: u64 = 20_000;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Z {
    S(i128),
    B(BigInt),
}

impl Z {
    fn of(v: i128) -> Z {
        Z::S(v)
    }
    fn big(&self) -> BigInt {
        match self {
            Z::S(v) => BigInt::from(*v),
            Z::B(b) => b.clone(),
        }
    }
    fn add(&self, o: &Z) -> Z {
        if let (Z::S(a), Z::S(b)) = (self, o) {
            if let Some(r) = a.checked_add(*b) {
                return Z::S(r);
            }
        }
        Z::B(self.big() + o.big())
    }
    fn mul(&self, o: &Z) -> Z {
        if let (Z::S(a), Z::S(b)) = (self, o) {
            if let Some(r) = a.checked_mul(*b) {
                return Z::S(r);
            }
        }
        Z::B(self.big() * o.big())
    }
    fn sgn(&self) -> i8 {
        match self {
            Z::S(v) => v.signum() as i8,
            Z::B(b) => match b.sign() {
                Sign::Plus => 1,
                Sign::Minus => -1,
                Sign::NoSign => 0,
            },
        }
    }
    fn cmp2(&self, o: &Z) -> Ordering {
        if let (Z::S(a), Z::S(b)) = (self, o) {
            return a.cmp(b);
        }
        self.big().cmp(&o.big())
    }
}

#[derive(Default, Clone, Copy)]
struct SignSet {
    plus: bool,
    minus: bool,
}

impl SignSet {
    fn add(&mut self, s: i8) {
        if s > 0 {
            self.plus = true;
        } else if s < 0 {
            self.minus = true;
        }
    }
    fn both(self) -> bool {
        self.plus && self.minus
    }
    fn single(self) -> Option<i8> {
        match (self.plus, self.minus) {
            (true, false) => Some(1),
            (false, true) => Some(-1),
            _ => None,
        }
    }
}

/// Sign of l + d sqrt(q) for q >= 0, all quantities integer-scaled
/// consistently (l and d sqrt(q) share a denominator).
fn fsign(l: &Z, d: &Z, q: &Z) -> i8 {
    if q.sgn() == 0 || d.sgn() == 0 {
        return l.sgn();
    }
    let sl = l.sgn();
    let sd = d.sgn();
    if sl == 0 {
        return sd;
    }
    if sl == sd {
        return sl;
    }
    match l.mul(l).cmp2(&d.mul(d).mul(q)) {
        Ordering::Greater => sl,
        Ordering::Less => sd,
        Ordering::Equal => 0,
    }
}

/// Float screen of one grid point. Returns sign witnesses only when the
/// computed branch values clear a generous relative error envelope; anything
/// near the locus boundary or near a sign change is referred to the exact
/// path. Never trusted on its own: callers confirm every witness exactly.
fn screen_point(af: &[f64; 3], cf: &[f64; 4], t: [i128; 3]) -> Result<SignSet, ()> {
    const EPS: f64 = 1e-7;
    let tf = [t[0] as f64, t[1] as f64, t[2] as f64];
    let mut q = 0.0;
    let mut qscale = 1.0;
    let mut l = 0.0;
    let mut lscale = 1.0;
    for i in 0..3 {
        let term = af[i] * tf[i] * tf[i];
        q += term;
        qscale += term.abs();
        let lt = cf[i] * tf[i];
        l += lt;
        lscale += lt.abs();
    }
    if q.abs() <= EPS * qscale {
        return Err(());
    }
    let mut out = SignSet::default();
    if q < 0.0 {
        return Ok(out);
    }
    let root = cf[3].abs() * q.sqrt();
    let scale = l.abs() + root + EPS * lscale;
    for v in [l + root, l - root] {
        if v.abs() <= EPS * scale {
            return Err(());
        }
        out.add(if v > 0.0 { 1 } else { -1 });
    }
    Ok(out)
}

/// Exact signs of f on both w branches at the simplex point t/den (den
/// implicit: all formulas are homogeneous, so only numerators matter).
fn point_signs(av: &[Z; 3], cv: &[Z; 4], t: [i128; 3], signs: &mut SignSet, examined: &mut u64) {
    *examined += 1;
    let tz = [Z::of(t[0]), Z::of(t[1]), Z::of(t[2])];
    let mut q = Z::of(0);
    for i in 0..3 {
        q = q.add(&av[i].mul(&tz[i]).mul(&tz[i]));
    }
    if q.sgn() < 0 {
        return;
    }
    let mut l = Z::of(0);
    for i in 0..3 {
        l = l.add(&cv[i].mul(&tz[i]));
    }
    if q.sgn() == 0 {
        signs.add(l.sgn());
        return;
    }
    for sigma in [1i128, -1] {
        let d = cv[3].mul(&Z::of(sigma));
        signs.add(fsign(&l, &d, &q));
        if signs.both() {
            return;
        }
    }
}

fn scale_iv(c: &Z, iv: &[Z; 2]) -> [Z; 2] {
    if c.sgn() >= 0 {
        [c.mul(&iv[0]), c.mul(&iv[1])]
    } else {
        [c.mul(&iv[1]), c.mul(&iv[0])]
    }
}

fn add_iv(a: [Z; 2], b: [Z; 2]) -> [Z; 2] {
    [a[0].add(&b[0]), a[1].add(&b[1])]
}

pub(crate) fn classify_real(a: &CoefficientTriple, alg: &QuaternionAlgebra) -> ClassifyOutcome {
    let theta = alg.theta();
    if theta > 0 {
        // (theta, f) splits for every f when theta is a real square
        return ClassifyOutcome {
            verdict: Verdict::Constant(crate::arith::InvariantValue::Zero),
            provenance: Provenance::ClosedForm("theta-positive"),
            retryable: false,
        };
    }
    let av = a.a128().map(Z::of);
    let cv = alg.tangent().map(Z::of);
    let real_value = |s: i8| {
        Verdict::Constant(invariant_from_symbol(hilbert_symbol(
            theta,
            s as i128,
            Place::Real,
        )))
    };

    let af = [
        a.coefficients()[0] as f64,
        a.coefficients()[1] as f64,
        a.coefficients()[2] as f64,
    ];
    let cf = alg.tangent().map(|v| v as f64);

    // float screen over the grids, with one unconfirmed witness per sign;
    // every verdict-bearing sign is confirmed by the exact path before use
    let mut signs = SignSet::default();
    let mut examined = 0u64;
    let mut witness: [Option<[i128; 3]>; 2] = [None, None];
    'grids: for n in [GRID_COARSE, GRID_FINE] {
        for i in 0..=n {
            for j in 0..=(n - i) {
                let t = [i, j, n - i - j];
                examined += 1;
                match screen_point(&af, &cf, t) {
                    Ok(s) => {
                        if s.plus && witness[0].is_none() {
                            witness[0] = Some(t);
                        }
                        if s.minus && witness[1].is_none() {
                            witness[1] = Some(t);
                        }
                    }
                    Err(()) => point_signs(&av, &cv, t, &mut signs, &mut examined),
                }
                if witness[0].is_some() && witness[1].is_some() {
                    break 'grids;
                }
                if signs.both() {
                    break 'grids;
                }
            }
        }
    }
    for w in witness.into_iter().flatten() {
        point_signs(&av, &cv, w, &mut signs, &mut examined);
    }
    if signs.both() {
        return ClassifyOutcome {
            verdict: Verdict::Surjective,
            provenance: Provenance::Sampling {
                precision: 0,
                classes_examined: examined,
            },
            retryable: false,
        };
    }

    let mut target = signs.single();
    let c3sq = cv[3].mul(&cv[3]);
    let mut stack: Vec<(i128, i128, u32)> = vec![(0, 0, 0)];
    let mut cells = 0u64;
    let mut max_depth = 0u32;
    let undecided = |examined: u64, cells: u64, depth: u32, retryable: bool| ClassifyOutcome {
        verdict: Verdict::Undecided,
        provenance: Provenance::Sampling {
            precision: depth,
            classes_examined: examined + cells,
        },
        retryable,
    };
    while let Some((i, j, d)) = stack.pop() {
        cells += 1;
        max_depth = max_depth.max(d);
        if cells > CELL_BUDGET {
            return undecided(examined, cells, max_depth, true);
        }
        let dd = 1i128 << d;
        if i + j > dd {
            continue;
        }
        let t0 = [Z::of(i), Z::of(i + 1)];
        let t1 = [Z::of(j), Z::of(j + 1)];
        let t2 = [Z::of((dd - i - j - 2).max(0)), Z::of(dd - i - j)];
        // q over den dd^2; squares are monotone since every t interval is
        // clamped nonnegative
        let q = add_iv(
            add_iv(
                scale_iv(&av[0], &[t0[0].mul(&t0[0]), t0[1].mul(&t0[1])]),
                scale_iv(&av[1], &[t1[0].mul(&t1[0]), t1[1].mul(&t1[1])]),
            ),
            scale_iv(&av[2], &[t2[0].mul(&t2[0]), t2[1].mul(&t2[1])]),
        );
        if q[1].sgn() < 0 {
            continue;
        }
        let l = add_iv(
            add_iv(scale_iv(&cv[0], &t0), scale_iv(&cv[1], &t1)),
            scale_iv(&cv[2], &t2),
        );
        let lsign: i8 = if l[0].sgn() > 0 {
            1
        } else if l[1].sgn() < 0 {
            -1
        } else {
            0
        };
        if lsign != 0 {
            let l2min = if lsign > 0 {
                l[0].mul(&l[0])
            } else {
                l[1].mul(&l[1])
            };
            if l2min.cmp2(&c3sq.mul(&q[1])) == Ordering::Greater {
                // G > 0 on the cell: f carries sign(L) on both branches
                if target == Some(lsign) {
                    continue;
                }
                // hunt the corners for an on-locus witness of this sign
                for (ci, cj) in [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)] {
                    if ci + cj <= dd {
                        point_signs(&av, &cv, [ci, cj, dd - ci - cj], &mut signs, &mut examined);
                    }
                }
                if signs.both() {
                    return ClassifyOutcome {
                        verdict: Verdict::Surjective,
                        provenance: Provenance::Sampling {
                            precision: max_depth,
                            classes_examined: examined + cells,
                        },
                        retryable: false,
                    };
                }
                if target.is_none() {
                    if let Some(s) = signs.single() {
                        if s == lsign {
                            target = Some(s);
                            continue;
                        }
                    }
                }
                if target == Some(lsign) {
                    continue;
                }
            }
        }
        if d >= DEPTH_CAP {
            return undecided(examined, cells, max_depth, true);
        }
        stack.push((2 * i, 2 * j, d + 1));
        stack.push((2 * i + 1, 2 * j, d + 1));
        stack.push((2 * i, 2 * j + 1, d + 1));
        stack.push((2 * i + 1, 2 * j + 1, d + 1));
    }
    match target {
        Some(s) => ClassifyOutcome {
            verdict: real_value(s),
            provenance: Provenance::Sampling {
                precision: max_depth,
                classes_examined: examined + cells,
            },
            retryable: false,
        },
        // every cell is off the locus, or no witness confirmed one: with no
        // real point in evidence there is nothing to average
        None => undecided(examined, cells, max_depth, false),
    }
}
