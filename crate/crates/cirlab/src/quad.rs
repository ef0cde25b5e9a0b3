//! Shared numerics: adaptive Simpson quadrature, Gauss–Legendre nodes and
//! weights, normalized Legendre polynomials, and a parabola-vertex helper.

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`, with a recursion-depth cap. Integrable endpoint singularities are
/// handled by the caller via substitution; the rule itself never evaluates
/// outside `(a, b)` interior points plus the two endpoints.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // Requests below roundoff scale would force uniform refinement of every
    // subinterval; floor the tolerance at what f64 arithmetic can deliver.
    let magnitude = (b - a).abs() / 6.0 * (fa.abs() + 4.0 * fm.abs() + fb.abs());
    let floor = 20.0 * f64::EPSILON * magnitude;
    simpson_recurse(f, a, b, fa, fm, fb, whole, tol.max(floor), floor, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    floor: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // Stop on convergence, depth exhaustion, or an interval so narrow that
    // further refinement only chases roundoff.
    if depth == 0 || delta.abs() <= 15.0 * tol || (b - a).abs() < 1e-14 * (m.abs() + 1.0) {
        // Richardson correction of the composite estimate.
        left + right + delta / 15.0
    } else {
        let half = (0.5 * tol).max(floor);
        simpson_recurse(f, a, m, fa, flm, fm, left, half, floor, depth - 1)
            + simpson_recurse(f, m, b, fm, frm, fb, right, half, floor, depth - 1)
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence. Nodes come out ascending; weights sum to 2.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be at least 1");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess for the i-th root (descending order).
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if n % 2 == 1 {
        // Middle node is exactly zero.
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_with_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

/// Legendre polynomial P_n(x) and its derivative via the three-term
/// recurrence and the standard derivative identity.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let k = k as f64;
        let p_next = ((2.0 * k - 1.0) * x * p - (k - 1.0) * p_prev) / k;
        p_prev = p;
        p = p_next;
    }
    // (1-x^2) P_n' = n (P_{n-1} - x P_n)
    let d = if (1.0 - x * x).abs() > 1e-300 {
        n as f64 * (p_prev - x * p) / (1.0 - x * x)
    } else {
        // At the endpoints P_n'(±1) = ±^{n+1} n(n+1)/2.
        let sign = if x > 0.0 { 1.0 } else { (-1.0f64).powi(n as i32 + 1) };
        sign * n as f64 * (n as f64 + 1.0) / 2.0
    };
    (p, d)
}

/// Orthonormal Legendre value sqrt((2l+1)/2) P_l(x).
pub fn legendre_normalized(l: usize, x: f64) -> f64 {
    let (p, _) = legendre_with_derivative(l, x);
    ((2.0 * l as f64 + 1.0) / 2.0).sqrt() * p
}

/// Vertex abscissa of the parabola through three points (x0,y0),(x1,y1),(x2,y2).
/// Returns `None` when the points are collinear or the vertex is a maximum
/// rather than a minimum.
pub fn parabola_min_vertex(x: [f64; 3], y: [f64; 3]) -> Option<f64> {
    let d0 = (y[1] - y[0]) / (x[1] - x[0]);
    let d1 = (y[2] - y[1]) / (x[2] - x[1]);
    let curvature = (d1 - d0) / (x[2] - x[0]);
    if !(curvature > 0.0) || !curvature.is_finite() {
        return None;
    }
    // Newton divided-difference form: vertex of c0 + d0 (x-x0) + c (x-x0)(x-x1).
    Some(0.5 * (x[0] + x[1]) - d0 / (2.0 * curvature))
}
