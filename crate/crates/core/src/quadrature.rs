//! Quadrature rules on the reference triangle and interval.

use std::sync::OnceLock;

/// Seven-point rule exact for polynomials of degree 5: barycentric
/// coordinates and weights summing to one.
pub fn triangle7() -> &'static [([f64; 3], f64); 7] {
    static RULE: OnceLock<[([f64; 3], f64); 7]> = OnceLock::new();
    RULE.get_or_init(|| {
        let s = 15f64.sqrt();
        let (a1, b1, w1) = ((6.0 - s) / 21.0, (9.0 + 2.0 * s) / 21.0, (155.0 - s) / 1200.0);
        let (a2, b2, w2) = ((6.0 + s) / 21.0, (9.0 - 2.0 * s) / 21.0, (155.0 + s) / 1200.0);
        let third = 1.0 / 3.0;
        [
            ([third, third, third], 9.0 / 40.0),
            ([b1, a1, a1], w1),
            ([a1, b1, a1], w1),
            ([a1, a1, b1], w1),
            ([b2, a2, a2], w2),
            ([a2, b2, a2], w2),
            ([a2, a2, b2], w2),
        ]
    })
}

/// Gauss–Legendre nodes and weights on `[0, 1]`, exact to degree `2n − 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton on P_n from the Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Cached five-point rule on `[0, 1]`.
pub fn gauss5() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(5))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_rule_integrates_quintics() {
        // ∫_T λ₀^a λ₁^b λ₂^c = 2|T| a! b! c! / (a+b+c+2)!, with |T| = 1/2.
        let fact = |n: u32| (1..=n).product::<u32>().max(1) as f64;
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                let c = 5 - a - b;
                let exact = fact(a) * fact(b) * fact(c) / fact(a + b + c + 2);
                let got: f64 = triangle7()
                    .iter()
                    .map(|(l, w)| 0.5 * w * l[0].powi(a as i32) * l[1].powi(b as i32) * l[2].powi(c as i32))
                    .sum();
                assert!((got - exact).abs() < 1e-15, "{a} {b} {c}");
            }
        }
    }

    #[test]
    fn gauss_rule_is_exact() {
        for n in [1, 2, 5, 12] {
            let (x, w) = gauss_legendre(n);
            for k in 0..(2 * n) as i32 {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
                assert!((got - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }
}
