//! Small numerical helpers shared across modules.

/// Minimises a unimodal function on [a, b] by golden-section search.
pub(crate) fn golden_section_min(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    rel_tol: f64,
) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= rel_tol * (a.abs() + b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Catmull-Rom interpolation of samples `y` on the uniform grid
/// `x0 + i·h`. Clamps to the end samples outside the grid.
pub(crate) fn catmull_rom(y: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = y.len();
    if n == 1 {
        return y[0];
    }
    let u = ((x - x0) / h).clamp(0.0, (n - 1) as f64);
    let i = (u.floor() as usize).min(n - 2);
    let t = u - i as f64;
    let p1 = y[i];
    let p2 = y[i + 1];
    let p0 = if i > 0 { y[i - 1] } else { 2.0 * p1 - p2 };
    let p3 = if i + 2 < n { y[i + 2] } else { 2.0 * p2 - p1 };
    let t2 = t * t;
    let t3 = t2 * t;
    0.5 * (2.0 * p1
        + (p2 - p0) * t
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2
        + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t3)
}
