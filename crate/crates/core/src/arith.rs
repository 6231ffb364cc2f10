//! Arithmetic functions on `1..=n`.

use crate::error::{Error, Result};

/// Largest argument the Möbius sieve accepts by default.
pub const DEFAULT_SIEVE_CAP: u64 = 1 << 28;

/// Möbius function on `0..=n` by a linear sieve; entry 0 is 0.
pub fn mobius_sieve(n: u64, cap: u64) -> Result<Vec<i8>> {
    if n > cap {
        return Err(Error::resource("Möbius sieve", n as u128, cap as u128));
    }
    let n = n as usize;
    let mut mu = vec![0i8; n + 1];
    if n == 0 {
        return Ok(mu);
    }
    mu[1] = 1;
    let mut composite = vec![false; n + 1];
    let mut primes: Vec<usize> = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i);
            mu[i] = -1;
        }
        for &p in &primes {
            let ip = i * p;
            if ip > n {
                break;
            }
            composite[ip] = true;
            if i % p == 0 {
                mu[ip] = 0;
                break;
            }
            mu[ip] = -mu[i];
        }
    }
    Ok(mu)
}
