//! Adaptive Gauss–Legendre quadrature for `int e(phi(x)) dx` with a smooth
//! real phase `phi` measured in turns.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::dd::cis_turns;
use crate::sum::ComplexSum;

/// Order of every panel rule.
pub const GL_ORDER: usize = 16;

/// Largest phase change allowed across one panel, in turns (`pi/4` radians).
pub const PANEL_TURNS: f64 = 0.125;

const MAX_DEPTH: u32 = 12;

/// Nodes and weights on `[-1, 1]`.
pub fn gauss_legendre() -> &'static ([f64; GL_ORDER], [f64; GL_ORDER]) {
    static RULE: OnceLock<([f64; GL_ORDER], [f64; GL_ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut nodes = [0.0; GL_ORDER];
        let mut weights = [0.0; GL_ORDER];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // three-term recurrence for P_n and its derivative
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=n {
                    let jf = j as f64;
                    let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

/// A phase in turns with the derivative information the panel sizing needs.
pub trait Phase: Sync {
    fn value(&self, x: f64) -> f64;
    /// `phi'(x)`, turns per unit length.
    fn slope(&self, x: f64) -> f64;
    /// Upper bound of `|phi''|` on `[x, x + h]`.
    fn curvature_bound(&self, x: f64, h: f64) -> f64;
    /// Size of the intermediate quantities in `value(x)`, which sets its
    /// rounding error.
    fn rounding_scale(&self, x: f64) -> f64 {
        self.value(x).abs()
    }
}

/// Result of [`integrate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    /// Sum of the per-panel Richardson estimates.
    pub error_estimate: f64,
    pub panels: u64,
}

fn panel<P: Phase + ?Sized>(phase: &P, lo: f64, hi: f64) -> Complex64 {
    let (nodes, weights) = gauss_legendre();
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in nodes.iter().zip(weights) {
        acc += cis_turns(phase.value(mid + half * x)) * *w;
    }
    acc * half
}

fn refine<P: Phase + ?Sized>(
    phase: &P,
    lo: f64,
    hi: f64,
    whole: Complex64,
    tol: f64,
    depth: u32,
    out: &mut (ComplexSum, f64, u64),
) {
    let mid = 0.5 * (lo + hi);
    let left = panel(phase, lo, mid);
    let right = panel(phase, mid, hi);
    let halves = left + right;
    let err = (halves - whole).norm();
    if err <= tol || depth >= MAX_DEPTH {
        out.0.add(halves);
        out.1 += err;
        out.2 += 1;
    } else {
        refine(phase, lo, mid, left, tol / 2.0, depth + 1, out);
        refine(phase, mid, hi, right, tol / 2.0, depth + 1, out);
    }
}

/// Largest step from `x` keeping the phase change below [`PANEL_TURNS`].
fn step<P: Phase + ?Sized>(phase: &P, x: f64, room: f64) -> f64 {
    let c = PANEL_TURNS;
    let s = phase.slope(x).abs();
    let mut h = room;
    for _ in 0..4 {
        let k = phase.curvature_bound(x, h);
        let cand = 2.0 * c / (s + (s * s + 2.0 * k * c).sqrt());
        if cand >= h {
            break;
        }
        h = cand;
    }
    h.min(room)
}

/// `int_a^b e(phi(x)) dx` on panels of phase change at most `pi/4`, each
/// accepted once its two-halves Richardson difference is below its share of
/// `target`.
pub fn integrate<P: Phase + ?Sized>(phase: &P, a: f64, b: f64, target: f64) -> QuadResult {
    let mut out = (ComplexSum::new(), 0.0, 0u64);
    if !(b > a) {
        return QuadResult {
            value: Complex64::new(0.0, 0.0),
            error_estimate: 0.0,
            panels: 0,
        };
    }
    let len = b - a;
    let mut x = a;
    while x < b {
        // the amplitude is constant; a relative cap keeps panels off the
        // scale of the logarithm in the phase
        let room = (b - x).min(0.5 * x.abs().max(1.0));
        let mut h = step(phase, x, room);
        if b - (x + h) < 1e-12 * len {
            h = b - x;
        }
        let hi = if h == b - x { b } else { x + h };
        let whole = panel(phase, x, hi);
        // rounding in the phase itself sets a floor under the local tolerance
        let noise = 64.0 * f64::EPSILON * (1.0 + phase.rounding_scale(hi)) * (hi - x);
        let tol = (target * (hi - x) / len).max(noise);
        refine(phase, x, hi, whole, tol, 0, &mut out);
        x = hi;
    }
    QuadResult {
        value: out.0.value(),
        error_estimate: out.1,
        panels: out.2,
    }
}
