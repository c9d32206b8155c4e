//! Composite Simpson quadrature.

/// Node count used for every per-interval integral in the crate.
pub const SIMPSON_NODES: usize = 129;

/// Equally spaced nodes on `[a, b]`; the last node is exactly `b`.
pub fn nodes(a: f64, b: f64, count: usize) -> Vec<f64> {
    debug_assert!(count >= 2);
    let h = (b - a) / (count - 1) as f64;
    (0..count)
        .map(|k| if k + 1 == count { b } else { a + k as f64 * h })
        .collect()
}

/// Composite Simpson weights for `count` equally spaced nodes with spacing `h`.
/// `count` must be odd.
pub fn weights(count: usize, h: f64) -> Vec<f64> {
    assert!(count >= 3 && count % 2 == 1, "Simpson needs an odd node count >= 3");
    (0..count)
        .map(|k| {
            let w = if k == 0 || k + 1 == count {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

pub fn simpson(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, count: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let h = (b - a) / (count - 1) as f64;
    nodes(a, b, count)
        .into_iter()
        .zip(weights(count, h))
        .map(|(t, w)| w * f(t))
        .sum()
}
