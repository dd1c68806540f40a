//! Deterministic low-discrepancy point sets.

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while i > 0 {
        x += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    x
}

/// The `index`-th Halton point in `[0, 1)^d` (index 0 is skipped, it is the origin).
///
/// # Panics
/// If `d` exceeds the number of tabulated primes (16).
pub fn halton(index: u64, d: usize) -> Vec<f64> {
    assert!(
        d <= PRIMES.len(),
        "halton points supported up to dimension {}",
        PRIMES.len()
    );
    PRIMES[..d]
        .iter()
        .map(|&b| radical_inverse(index + 1, b))
        .collect()
}

/// `n` Halton points in `[lo, hi]` per coordinate.
pub fn box_points(n: usize, lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let d = lo.len();
    (0..n as u64)
        .map(|i| {
            halton(i, d)
                .iter()
                .enumerate()
                .map(|(k, u)| lo[k] + u * (hi[k] - lo[k]))
                .collect()
        })
        .collect()
}

/// `n` points in the closed unit ball, by rejection of Halton points from `[-1, 1]^d`.
pub fn ball_points(n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut i = 0u64;
    while out.len() < n {
        let p: Vec<f64> = halton(i, d).iter().map(|u| 2.0 * u - 1.0).collect();
        if p.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            out.push(p);
        }
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_base_two_values() {
        let xs: Vec<f64> = (0..4).map(|i| halton(i, 1)[0]).collect();
        assert_eq!(xs, vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn ball_points_inside_and_deterministic() {
        let a = ball_points(500, 3);
        assert!(a
            .iter()
            .all(|p| p.iter().map(|x| x * x).sum::<f64>() <= 1.0));
        assert_eq!(a, ball_points(500, 3));
    }
}
