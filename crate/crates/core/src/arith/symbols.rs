//! Kronecker symbol. The one residue symbol everything else reduces to.

/// Kronecker symbol (a|n), the Jacobi symbol extended to all integers.
/// Follows the binary algorithm; two's complement makes the mod 4 / mod 8
/// character lookups valid for negative entries as well.
pub fn kronecker(a: i128, n: i128) -> i32 {
    // (-1)^((m^2-1)/8) indexed by m & 7, odd m only
    const TAB2: [i32; 8] = [0, 1, 0, -1, 0, -1, 0, 1];
    if n == 0 {
        return if a.unsigned_abs() == 1 { 1 } else { 0 };
    }
    if a % 2 == 0 && n % 2 == 0 {
        return 0;
    }
    let mut a = a;
    let mut n = n;
    let mut v = 0u32;
    while n % 2 == 0 {
        n /= 2;
        v += 1;
    }
    let mut k = if v % 2 == 0 { 1 } else { TAB2[(a & 7) as usize] };
    if n < 0 {
        n = -n;
        if a < 0 {
            k = -k;
        }
    }
    // n odd positive from here on
    loop {
        if a == 0 {
            return if n > 1 { 0 } else { k };
        }
        let mut v = 0u32;
        while a % 2 == 0 {
            a /= 2;
            v += 1;
        }
        if v % 2 == 1 {
            k *= TAB2[(n & 7) as usize];
        }
        if a & n & 2 != 0 {
            // both ~ 3 mod 4
            k = -k;
        }
        let r = a.unsigned_abs() as i128;
        a = n % r;
        n = r;
    }
}

/// Legendre symbol of a unit residue, odd prime modulus. Hot-loop helper.
pub(crate) fn legendre_unit(a: u128, p: u128) -> i32 {
    debug_assert!(p % 2 == 1 && a % p != 0);
    kronecker((a % p) as i128, p as i128)
}
