//! Finite-place classification by certified residue trees, plus exact mod-p
//! curve analyses for two coefficient patterns: p dividing every coefficient
//! exactly once (reduction a plane quartic curve) and p dividing exactly one
//! coefficient to odd valuation below 4 (reduction a cone with pointless
//! vertex). The curve routes scale to large p where the tree cannot expand.
//!
//! A tree node is a residue class of (x0, x1, x2, w) mod p^j. Seeds at j = 1
//! omit x = (0, 0, 0): a surface point there would need v(w) = 1 against
//! quartic terms of valuation at least 4, so no normalised point lives in
//! those classes. A class dies when the surface form F already has valuation
//! below j; it resolves when a Newton certificate (a coordinate with exact
//! gradient valuation t < j and v(F) >= 2t + 1) pairs with a stable tangent
//! form valuation; otherwise it splits into its p^4 children.
//!
//! Nodes with no certificate have every gradient component divisible by p
//! (a stable t = 0 would certify), which buys two shortcuts: v(F) = j exactly
//! kills every child at once, and v(F) > j with a stable tangent form and a
//! visible gradient valuation t <= j/2 resolves the entire subtree, because
//! each child then inherits v(F) >= j + 1 >= 2t + 1 and certifies against the
//! parent's tangent value.

use super::{ClassifyOutcome, Provenance, QuaternionAlgebra, Verdict};
use crate::arith::factor::{modinv, mulmod};
use crate::arith::hilbert::{hilbert_symbol, invariant_from_symbol};
use crate::arith::padic::padic_unit_part;
use crate::arith::symbols::legendre_unit;
use crate::arith::{InvariantValue, Place};
use crate::hensel::{digit_lift, eval_surface_mod, surface_gradient_mod, vp_residue};
use crate::local::CoefficientTriple;

const TREE_PRIME_CAP: u128 = 23;
const CURVE_PRIME_CAP: u128 = 10_000;
const DEPTH_LIMIT: u32 = 48;

#[derive(Default, Clone, Copy)]
struct ValuePair {
    zero: bool,
    half: bool,
}

impl ValuePair {
    fn add(&mut self, v: InvariantValue) {
        match v {
            InvariantValue::Zero => self.zero = true,
            InvariantValue::Half => self.half = true,
        }
    }
    fn both(self) -> bool {
        self.zero && self.half
    }
    fn single(self) -> Option<InvariantValue> {
        match (self.zero, self.half) {
            (true, false) => Some(InvariantValue::Zero),
            (false, true) => Some(InvariantValue::Half),
            _ => None,
        }
    }
}

enum RunEnd {
    Surjective,
    Constant(InvariantValue),
    Empty,
    Ambiguous,
    ShortDepth,
    ShortBudget,
    // classes keep hugging the zero tube of f f(.,-w); no finite depth
    // resolves those, so the run gives up early instead of drowning
    TubeBound,
}

pub(crate) fn classify_by_tree(
    a: &CoefficientTriple,
    alg: &QuaternionAlgebra,
    p: u128,
    budget: u64,
) -> ClassifyOutcome {
    if p > TREE_PRIME_CAP {
        return ClassifyOutcome {
            verdict: Verdict::Undecided,
            provenance: Provenance::ClosedForm("prime-too-large-for-residue-tree"),
            retryable: false,
        };
    }
    let v_theta = padic_unit_part(a.theta(), p).0;
    let mut cap = if p == 2 { v_theta + 12 } else { v_theta + 6 };
    let mut total_nodes = 0u64;
    loop {
        let (end, nodes, kpow) = run_tree(a, alg, p, cap, budget);
        total_nodes += nodes;
        let sampling = Provenance::Sampling {
            precision: kpow,
            classes_examined: total_nodes,
        };
        let out = |verdict, retryable| ClassifyOutcome {
            verdict,
            provenance: sampling.clone(),
            retryable,
        };
        return match end {
            RunEnd::Surjective => out(Verdict::Surjective, false),
            RunEnd::Constant(v) => out(Verdict::Constant(v), false),
            RunEnd::Empty => out(Verdict::Undecided, false),
            RunEnd::Ambiguous | RunEnd::ShortBudget | RunEnd::TubeBound => {
                out(Verdict::Undecided, true)
            }
            RunEnd::ShortDepth => {
                if cap >= DEPTH_LIMIT {
                    out(Verdict::Undecided, true)
                } else {
                    cap = (2 * cap).min(DEPTH_LIMIT);
                    continue;
                }
            }
        };
    }
}

fn run_tree(
    a: &CoefficientTriple,
    alg: &QuaternionAlgebra,
    p: u128,
    depth_req: u32,
    budget: u64,
) -> (RunEnd, u64, u32) {
    let limit = (120.0 / (p as f64).log2()).floor() as u32;
    let kpow = (depth_req + 8).min(limit);
    let depth_cap = depth_req.min(kpow.saturating_sub(6)).max(2);
    let m = p.checked_pow(kpow).expect("modulus bounded by 2^120");
    let av = a.a128();
    let cm: [u128; 4] = {
        let t = alg.tangent();
        [
            t[0].rem_euclid(m as i128) as u128,
            t[1].rem_euclid(m as i128) as u128,
            t[2].rem_euclid(m as i128) as u128,
            t[3].rem_euclid(m as i128) as u128,
        ]
    };
    let margin: u32 = if p == 2 { 3 } else { 1 };
    let theta = alg.theta();
    let inv_of =
        |res: u128| invariant_from_symbol(hilbert_symbol(theta, res as i128, Place::Finite(p)));

    // canonical representatives only: every p-adic surface point has x != 0
    // (x = 0 forces w = 0), hence a unique unit scaling putting its first
    // p-unit coordinate at exactly 1. The frozen coordinate never grows
    // digits, which kills the p-fold scaling redundancy per level.
    let mut stack: Vec<([u128; 3], u128, u32, u8)> = Vec::new();
    for i in 0..3usize {
        let r1 = if i < 1 { p } else { 1 };
        let r2 = if i < 2 { p } else { 1 };
        for u1 in 0..r1 {
            for u2 in 0..r2 {
                let x = match i {
                    0 => [1, u1, u2],
                    1 => [0, 1, u2],
                    _ => [0, 0, 1],
                };
                for w in 0..p {
                    stack.push((x, w, 1, i as u8));
                }
            }
        }
    }

    let mut nodes = 0u64;
    let mut observed = ValuePair::default();
    let mut classes = ValuePair::default();
    let mut any_point = false;
    let mut short_depth = false;
    let mut short_budget = false;
    // healthy runs straddle instability only transiently, roughly once per
    // shallow class; allow that much plus slack before declaring a tube
    let tube_cap = 512 + stack.len() as u64;
    let mut tube = 0u64;

    while let Some((x, w, j, frozen)) = stack.pop() {
        nodes += 1;
        if nodes > budget {
            short_budget = true;
            break;
        }
        let g = eval_surface_mod(&av, &x, w, m);
        let vg = vp_residue(g, p, kpow);
        if vg < j {
            continue;
        }
        let mut cert: Option<(usize, u32)> = None;
        let mut t_seen: Option<u32> = None;
        for lead in 0..4 {
            let gr = surface_gradient_mod(&av, &x, w, lead, m);
            let t = vp_residue(gr, p, kpow);
            if t < j {
                if t_seen.map_or(true, |b| t < b) {
                    t_seen = Some(t);
                }
                if vg >= 2 * t + 1 && cert.map_or(true, |(_, b)| t < b) {
                    cert = Some((lead, t));
                }
            }
        }
        let fres = eval_f(&cm, &x, w, m);
        let vf = vp_residue(fres, p, kpow);
        let f_stable = vf + margin < j;

        if let Some((lead, t)) = cert {
            let target = (j + t + margin + 4).min(kpow - 1);
            if let Some((zx, zw)) = digit_lift(&av, p, x, w, lead, t, target, kpow) {
                any_point = true;
                let fz = eval_f(&cm, &zx, zw, m);
                let vfz = vp_residue(fz, p, kpow);
                // the true point sits within p^(target - t) of the lift, so
                // this many digits of f survive the remaining correction
                if vfz + t + margin < target {
                    observed.add(inv_of(fz));
                    if observed.both() {
                        return (RunEnd::Surjective, nodes, kpow);
                    }
                }
                if f_stable {
                    classes.add(inv_of(fres));
                    continue;
                }
                // mirror fold. f is drowning near its zero locus, but on the
                // surface f(x, w) f(x, -w) = L(x)^2 - c3^2 q(x) =: G(x) holds
                // exactly, with no w in sight. When the mirror value and G
                // are both stable on the class, every point Q here satisfies
                // inv(Q) = rho((theta, G)) - rho((theta, f(x,-w))), constant,
                // and the class resolves without expansion.
                let fm = eval_f(&[cm[0], cm[1], cm[2], m - cm[3]], &x, w, m);
                let vfm = vp_residue(fm, p, kpow);
                let gres = {
                    let l = eval_f(&cm, &x, 0, m);
                    let q = eval_surface_mod(&av, &x, 0, m);
                    (mulmod(l, l, m) + m - mulmod(mulmod(cm[3], cm[3], m), q, m)) % m
                };
                let vgr = vp_residue(gres, p, kpow);
                if vfm + margin < j && vgr + margin < j {
                    let mv = inv_of(fm);
                    let val = if inv_of(gres) == mv {
                        InvariantValue::Zero
                    } else {
                        InvariantValue::Half
                    };
                    classes.add(val);
                    // the lift may sit p^(j - t) off the representative, so
                    // eyewitness claims need t extra stable digits
                    if vfm + margin + t < j && vgr + margin + t < j {
                        observed.add(val);
                        observed.add(mv);
                        if observed.both() {
                            return (RunEnd::Surjective, nodes, kpow);
                        }
                    }
                    continue;
                }
                // certified but unreadable: the class straddles the zero
                // tube of G, where refinement only breeds more of the same.
                // Past a small allowance no depth will close this run out,
                // so stop early and let the caller pick another tangent.
                tube += 1;
                if tube > tube_cap {
                    return (RunEnd::TubeBound, nodes, kpow);
                }
            }
        } else {
            if vg == j {
                continue;
            }
            if f_stable {
                if let Some(t) = t_seen {
                    if 2 * t + 1 <= j + 1 {
                        classes.add(inv_of(fres));
                        any_point = true;
                        continue;
                    }
                }
            }
        }

        if j >= depth_cap {
            short_depth = true;
            continue;
        }
        if (stack.len() as u64) > budget {
            short_budget = true;
            continue;
        }
        let step = p.pow(j);
        let lim = |l: usize| if l == frozen as usize { 1 } else { p };
        for d0 in 0..lim(0) {
            let c0 = (x[0] + d0 * step) % m;
            for d1 in 0..lim(1) {
                let c1 = (x[1] + d1 * step) % m;
                for d2 in 0..lim(2) {
                    let c2 = (x[2] + d2 * step) % m;
                    for dw in 0..p {
                        stack.push(([c0, c1, c2], (w + dw * step) % m, j + 1, frozen));
                    }
                }
            }
        }
    }

    if short_budget {
        return (RunEnd::ShortBudget, nodes, kpow);
    }
    if short_depth {
        return (RunEnd::ShortDepth, nodes, kpow);
    }
    match (classes.single(), classes.both(), any_point) {
        (_, true, _) => (RunEnd::Ambiguous, nodes, kpow),
        (Some(v), _, true) => (RunEnd::Constant(v), nodes, kpow),
        (None, false, false) => (RunEnd::Empty, nodes, kpow),
        _ => (RunEnd::Ambiguous, nodes, kpow),
    }
}

fn eval_f(c: &[u128; 4], x: &[u128; 3], w: u128, m: u128) -> u128 {
    let mut acc = mulmod(c[3], w, m);
    for i in 0..3 {
        acc = (acc + mulmod(c[i], mulmod(x[i], x[i], m), m)) % m;
    }
    acc
}

struct FibreScan {
    values: ValuePair,
    unresolved: bool,
    examined: u64,
}

impl FibreScan {
    fn new() -> FibreScan {
        FibreScan {
            values: ValuePair::default(),
            unresolved: false,
            examined: 0,
        }
    }
    /// Record the invariant of genuine points whose f-value is b times a
    /// square unit; returns true once both values are witnessed.
    fn witness(&mut self, theta: i128, b: u128, p: u128) -> bool {
        self.values
            .add(invariant_from_symbol(hilbert_symbol(theta, b as i128, Place::Finite(p))));
        self.values.both()
    }
}

/// Common wrap-up for the two reduction-curve classifiers. Witnessed values
/// come from certified points; `unresolved` marks sub-fibres where f has
/// valuation at least 2 and deeper digits decide, which only the residue
/// tree (so only small p) can still settle.
fn fibre_outcome(
    a: &CoefficientTriple,
    alg: &QuaternionAlgebra,
    p: u128,
    scan: FibreScan,
    budget: u64,
) -> ClassifyOutcome {
    let sampling = Provenance::Sampling {
        precision: 2,
        classes_examined: scan.examined,
    };
    if scan.values.both() {
        return ClassifyOutcome {
            verdict: Verdict::Surjective,
            provenance: sampling,
            retryable: false,
        };
    }
    if scan.unresolved {
        if p <= TREE_PRIME_CAP {
            let mut out = classify_by_tree(a, alg, p, budget);
            if let Provenance::Sampling {
                precision,
                classes_examined,
            } = out.provenance
            {
                out.provenance = Provenance::Sampling {
                    precision,
                    classes_examined: classes_examined + scan.examined,
                };
            }
            return out;
        }
        return ClassifyOutcome {
            verdict: Verdict::Undecided,
            provenance: sampling,
            retryable: true,
        };
    }
    match scan.values.single() {
        Some(v) => ClassifyOutcome {
            verdict: Verdict::Constant(v),
            provenance: sampling,
            retryable: false,
        },
        // no reachable point anywhere on the reduction: nothing to average
        None => ClassifyOutcome {
            verdict: Verdict::Undecided,
            provenance: sampling,
            retryable: false,
        },
    }
}

/// All three coefficients divisible by p exactly once, so v_p(theta) = 3 and
/// every normalised point has w = 0 mod p and reduces into the plane curve
/// C: Q(x) = sum (a_i/p) x_i^4 = 0 over F_p. The tangent form reduces to
/// B(x) = sum c_i x_i^2 there (the w term drops on the fibre), which may
/// vanish identically when p divides the whole tangent.
///
/// A curve point with B != 0 carries genuine points of invariant
/// rho((theta, B)_p): the gradient D of Q is nonzero there, so the unit part
/// of Q/p can be steered onto a nonzero square while f keeps its reduction.
/// Over a point with B = 0 the whole depth-2 fibre is (delta, omega) with
/// Q1 + D.delta = omega^2, where f/p = f1 + C.delta + c3 omega for
/// C = (2 c_l x_l). If C is not a multiple of D this map is onto F_p and
/// both invariants occur; if C = lambda D the reachable digits are exactly
/// u(omega) = f1 + lambda (omega^2 - Q1) + c3 omega, each nonzero u giving
/// certified points of invariant rho((theta, p u)_p) (Newton: gradient
/// valuation 1 against F-valuation 3) and each zero u an unresolved deeper
/// sub-fibre.
pub(crate) fn classify_by_curve(
    a: &CoefficientTriple,
    alg: &QuaternionAlgebra,
    p: u128,
    budget: u64,
) -> ClassifyOutcome {
    if p > CURVE_PRIME_CAP {
        return ClassifyOutcome {
            verdict: Verdict::Undecided,
            provenance: Provenance::ClosedForm("triple-odd-valuation-prime-too-large"),
            retryable: false,
        };
    }
    let p2 = p * p;
    let at2: [u128; 3] = {
        let c = a.a128();
        [
            (c[0] / p as i128).rem_euclid(p2 as i128) as u128,
            (c[1] / p as i128).rem_euclid(p2 as i128) as u128,
            (c[2] / p as i128).rem_euclid(p2 as i128) as u128,
        ]
    };
    let ct2: [u128; 4] = {
        let t = alg.tangent();
        [
            t[0].rem_euclid(p2 as i128) as u128,
            t[1].rem_euclid(p2 as i128) as u128,
            t[2].rem_euclid(p2 as i128) as u128,
            t[3].rem_euclid(p2 as i128) as u128,
        ]
    };
    let theta = alg.theta();
    let mut scan = FibreScan::new();
    let handle = |x: [u128; 3], scan: &mut FibreScan| -> bool {
        let quart = |v: u128| {
            let s = v * v % p;
            s * s % p
        };
        let on_curve =
            (at2[0] % p * quart(x[0]) + at2[1] % p * quart(x[1]) + at2[2] % p * quart(x[2])) % p;
        if on_curve != 0 {
            return false;
        }
        scan.examined += 1;
        let b = (ct2[0] % p * (x[0] * x[0] % p)
            + ct2[1] % p * (x[1] * x[1] % p)
            + ct2[2] % p * (x[2] * x[2] % p))
            % p;
        if b != 0 {
            return scan.witness(theta, b, p);
        }
        curve_zero_fibre(&at2, &ct2, x, p, theta, scan)
    };
    'outer: {
        for t in 0..p {
            for u in 0..p {
                if handle([1, t, u], &mut scan) {
                    break 'outer;
                }
            }
        }
        for u in 0..p {
            if handle([0, 1, u], &mut scan) {
                break 'outer;
            }
        }
        handle([0, 0, 1], &mut scan);
    }
    fibre_outcome(a, alg, p, scan, budget)
}

/// Exact reachable f-digits over a curve point with B = 0; see
/// classify_by_curve. Returns true once both invariants are witnessed.
fn curve_zero_fibre(
    at2: &[u128; 3],
    ct2: &[u128; 4],
    x: [u128; 3],
    p: u128,
    theta: i128,
    scan: &mut FibreScan,
) -> bool {
    let p2 = p * p;
    let mut dvec = [0u128; 3];
    let mut cvec = [0u128; 3];
    for l in 0..3 {
        let x3 = x[l] * x[l] % p * x[l] % p;
        dvec[l] = 4 * (at2[l] % p) % p * x3 % p;
        cvec[l] = 2 * (ct2[l] % p) % p * x[l] % p;
    }
    // D != 0: some x_l is a unit and all a_l/p are units
    let m = (0..3).find(|&l| dvec[l] != 0).expect("curve point is not the origin");
    let lam = cvec[m] * modinv(dvec[m], p) % p;
    if (0..3).any(|l| cvec[l] != lam * dvec[l] % p) {
        // f/p covers every residue: both invariants on certified points
        let _ = scan.witness(theta, p, p);
        let nonresidue = (1..p).find(|&u| legendre_unit(u, p) == -1).expect("p odd");
        return scan.witness(theta, p * nonresidue % p2, p);
    }
    let q1 = {
        let quart = |v: u128| v * v % p2 * (v * v % p2) % p2;
        let s = (at2[0] * quart(x[0]) % p2 + at2[1] * quart(x[1]) % p2 + at2[2] * quart(x[2]) % p2)
            % p2;
        s / p
    };
    let f1 = {
        let s = (ct2[0] * (x[0] * x[0] % p2) % p2
            + ct2[1] * (x[1] * x[1] % p2) % p2
            + ct2[2] * (x[2] * x[2] % p2) % p2)
            % p2;
        s / p
    };
    let c3 = ct2[3] % p;
    for w in 0..p {
        let u = (f1 + lam * ((w * w % p + p - q1 % p) % p) % p + c3 * w % p) % p;
        if u == 0 {
            scan.unresolved = true;
        } else if scan.witness(theta, p * u, p) {
            return true;
        }
    }
    false
}

/// Exactly one coefficient a_i of odd valuation 1 or 3, the others p-units.
/// The special fibre is the cone over the smooth genus-1 curve
/// a_j x_j^4 + a_k x_k^4 = w^2 with vertex (1:0:0:0), and the vertex classes
/// carry no points: there the quartic form has the odd valuation of a_i
/// below 4 while w^2 needs an even one. On the rest of the cone the surface
/// is smooth over Z_p (the x_j or x_k partial is a unit), so every residue
/// point is genuine. f reduces to B = c_j x_j^2 + c_k x_k^2 + c3 w there,
/// independent of the free coordinate x_i.
///
/// Points with B != 0 contribute rho((theta, B)_p) directly. Over B = 0 the
/// next f-digit moves linearly along the surface through dw and dx_o; if
/// either derivative is a unit it sweeps every residue and both invariants
/// occur. Otherwise the digit is frozen per projective point at
/// u(r) = f1 + gamma r^2 where r is the free coordinate and
/// gamma = (c_i/p) mod p, leaving u = 0 slots unresolved.
pub(crate) fn classify_by_cone(
    a: &CoefficientTriple,
    alg: &QuaternionAlgebra,
    p: u128,
    i: usize,
    budget: u64,
) -> ClassifyOutcome {
    if p > CURVE_PRIME_CAP {
        return ClassifyOutcome {
            verdict: Verdict::Undecided,
            provenance: Provenance::ClosedForm("single-odd-valuation-prime-too-large"),
            retryable: false,
        };
    }
    let (j, k) = match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let av = a.a128();
    let aj = av[j].rem_euclid(p as i128) as u128;
    let ak = av[k].rem_euclid(p as i128) as u128;
    let theta = alg.theta();
    let mut scan = FibreScan::new();
    // a tangent from a primitive quadric point always has p | c_i (the
    // quadric equation mod p^2 forces y_i = 0 mod p whenever the other three
    // coordinates vanish mod p), but synthetic algebras may not; without it
    // B would depend on the free coordinate and the whole fibre analysis is
    // void, so those go to the residue tree instead
    if alg.tangent()[i].rem_euclid(p as i128) != 0 {
        scan.unresolved = true;
        return fibre_outcome(a, alg, p, scan, budget);
    }
    let quart = |v: u128| v * v % p * (v * v % p) % p;
    let handle = |s: usize, xj: u128, xk: u128, w: u128, scan: &mut FibreScan| -> bool {
        scan.examined += 1;
        let ct = alg.tangent();
        let cj = ct[j].rem_euclid(p as i128) as u128;
        let ck = ct[k].rem_euclid(p as i128) as u128;
        let c3 = ct[3].rem_euclid(p as i128) as u128;
        let b = (cj * (xj * xj % p) % p + ck * (xk * xk % p) % p + c3 * w % p) % p;
        if b != 0 {
            return scan.witness(theta, b, p);
        }
        cone_zero_fibre(a, alg, p, i, (j, k), s, [xj, xk], w, theta, scan)
    };
    'outer: {
        for t in 0..p {
            let rhs = (aj + ak * quart(t)) % p;
            for w in 0..p {
                if w * w % p == rhs && handle(j, 1, t, w, &mut scan) {
                    break 'outer;
                }
            }
        }
        for w in 0..p {
            if w * w % p == ak && handle(k, 0, 1, w, &mut scan) {
                break 'outer;
            }
        }
    }
    fibre_outcome(a, alg, p, scan, budget)
}

/// Reachable next f-digits over a cone point with B = 0; see
/// classify_by_cone. `s` is the curve coordinate that is a unit at the
/// point (and gets solved by the implicit function theorem), `o` the other.
#[allow(clippy::too_many_arguments)]
fn cone_zero_fibre(
    a: &CoefficientTriple,
    alg: &QuaternionAlgebra,
    p: u128,
    i: usize,
    jk: (usize, usize),
    s: usize,
    xjk: [u128; 2],
    w: u128,
    theta: i128,
    scan: &mut FibreScan,
) -> bool {
    let p2 = p * p;
    let (j, k) = jk;
    let o = if s == j { k } else { j };
    let (xs, xo) = if s == j {
        (xjk[0], xjk[1])
    } else {
        (xjk[1], xjk[0])
    };
    let av = a.a128();
    let ct = alg.tangent();
    let rp = |v: i128, m: u128| v.rem_euclid(m as i128) as u128;
    let a_s = rp(av[s], p);
    let a_o = rp(av[o], p);
    let cs = rp(ct[s], p);
    let co = rp(ct[o], p);
    let c3 = rp(ct[3], p);
    let inv_den = modinv(a_s * (xs * xs % p) % p, p);
    // df along the surface: bw dw + bo dx_o after eliminating dx_s
    let bw = (c3 + cs * w % p * inv_den) % p;
    let bo = (2 * co % p * xo % p + p * p
        - 2 * cs % p * a_o % p * (xo * xo % p * xo % p) % p * inv_den % p)
        % p;
    if bw != 0 || bo != 0 {
        let _ = scan.witness(theta, p, p);
        let nonresidue = (1..p).find(|&u| legendre_unit(u, p) == -1).expect("p odd");
        return scan.witness(theta, p * nonresidue % p2, p);
    }
    // frozen digit per free coordinate r: u(r) = f1 + gamma r^2
    let f1 = {
        let v = (rp(ct[s], p2) * (xs * xs % p2) % p2
            + rp(ct[o], p2) * (xo * xo % p2) % p2
            + rp(ct[3], p2) * w % p2)
            % p2;
        v / p
    };
    let gamma = rp(ct[i] / p as i128, p);
    for r in 0..p {
        let u = (f1 + gamma * (r * r % p) % p) % p;
        if u == 0 {
            scan.unresolved = true;
        } else if scan.witness(theta, p * u, p) {
            return true;
        }
    }
    false
}
