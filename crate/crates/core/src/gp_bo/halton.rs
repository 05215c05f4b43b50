const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in `base`.
pub fn halton(index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// `index`-th point of the `d`-dimensional Halton sequence, each coordinate
/// rotated by `shift[k]` modulo 1 (Cranley-Patterson).
pub fn halton_point(index: u64, shift: &[f64]) -> Vec<f64> {
    assert!(shift.len() <= PRIMES.len(), "at most {} dimensions", PRIMES.len());
    shift
        .iter()
        .zip(PRIMES)
        .map(|(s, b)| {
            let v = halton(index, b) + s;
            v - v.floor()
        })
        .collect()
}
