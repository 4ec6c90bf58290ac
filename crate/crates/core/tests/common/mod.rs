//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library.

#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn is_prime_naive(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

pub fn primes_naive(n: u64) -> Vec<u64> {
    (2..=n).filter(|&k| is_prime_naive(k)).collect()
}

/// Trial-division factorization.
pub fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        let mut e = 0;
        while n % d == 0 {
            n /= d;
            e += 1;
        }
        if e > 0 {
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// `prefix[y]` = number of squarefree `n <= y` whose primes all lie in
/// `primes`, by factoring every integer.
pub fn squarefree_smooth_prefix(primes: &[u64], y: u64) -> Vec<u64> {
    let set: std::collections::HashSet<u64> = primes.iter().copied().collect();
    let mut prefix = vec![0u64; y as usize + 1];
    for n in 1..=y {
        let f = factor(n);
        let hit = f.iter().all(|&(q, e)| e == 1 && set.contains(&q));
        prefix[n as usize] = prefix[n as usize - 1] + u64::from(hit);
    }
    prefix
}

fn rem(a: i128, m: i128) -> i128 {
    a.rem_euclid(m)
}

/// `#E(F_ell)` on the long Weierstrass model by testing every `(x, y)`.
pub fn brute_point_count(a: [i64; 5], ell: u64) -> u64 {
    let m = ell as i128;
    let [a1, a2, a3, a4, a6] = a.map(|c| rem(c as i128, m));
    let mut count = 1;
    for x in 0..m {
        let rhs = rem(x * x % m * x + a2 * x % m * x + a4 * x + a6, m);
        for y in 0..m {
            let lhs = rem(y * y + a1 * x % m * y + a3 * y, m);
            if lhs == rhs {
                count += 1;
            }
        }
    }
    count
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = (r as u128 * b as u128 % m as u128) as u64;
        }
        b = (b as u128 * b as u128 % m as u128) as u64;
        e >>= 1;
    }
    r
}

/// Extended Euclid inverse.
pub fn inv(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    (r0 == 1).then(|| t0.rem_euclid(m as i128) as u64)
}

/// 2x2 product over `Z/m`.
pub fn mat_mul(a: &[[u64; 2]; 2], b: &[[u64; 2]; 2], m: u64) -> [[u64; 2]; 2] {
    let mut c = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let s = a[i][0] as u128 * b[0][j] as u128 + a[i][1] as u128 * b[1][j] as u128;
            c[i][j] = (s % m as u128) as u64;
        }
    }
    c
}

/// Inverse over `Z/m` for `m` a prime power `p^k`, given the determinant is
/// prime to `p`.
pub fn mat_inv(a: &[[u64; 2]; 2], m: u64) -> Option<[[u64; 2]; 2]> {
    let det = ((a[0][0] as u128 * a[1][1] as u128
        + (m as u128 - a[0][1] as u128) * a[1][0] as u128)
        % m as u128) as u64;
    let d = inv(det, m)?;
    let mul = |x: u64| (x as u128 * d as u128 % m as u128) as u64;
    Some([
        [mul(a[1][1]), mul((m - a[0][1]) % m)],
        [mul((m - a[1][0]) % m), mul(a[0][0])],
    ])
}
