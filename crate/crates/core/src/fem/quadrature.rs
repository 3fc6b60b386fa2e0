//! Symmetric triangle rules in barycentric coordinates (weights sum to 1)
//! and Gauss–Legendre rules on `[0, 1]`.

pub struct TriRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

fn orbit3(a: f64) -> Vec<[f64; 3]> {
    let b = 1.0 - 2.0 * a;
    vec![[a, a, b], [a, b, a], [b, a, a]]
}

fn orbit6(a: f64, b: f64) -> Vec<[f64; 3]> {
    let c = 1.0 - a - b;
    vec![
        [a, b, c],
        [a, c, b],
        [b, a, c],
        [b, c, a],
        [c, a, b],
        [c, b, a],
    ]
}

/// Six-point rule exact for polynomials of degree 4.
pub fn degree4() -> TriRule {
    let mut points = orbit3(0.445_948_490_915_964_886_32);
    points.extend(orbit3(0.091_576_213_509_770_743_46));
    let mut weights = vec![0.223_381_589_678_011_465_70; 3];
    weights.extend(vec![0.109_951_743_655_321_867_64; 3]);
    TriRule { points, weights }
}

/// Twelve-point rule exact for polynomials of degree 6.
pub fn degree6() -> TriRule {
    let mut points = orbit3(0.249_286_745_170_910_421_29);
    points.extend(orbit3(0.063_089_014_491_502_228_34));
    points.extend(orbit6(0.053_145_049_844_816_947_35, 0.310_352_451_033_784_405_42));
    let mut weights = vec![0.116_786_275_726_379_366_03; 3];
    weights.extend(vec![0.050_844_906_370_206_816_92; 3]);
    weights.extend(vec![0.082_851_075_618_373_575_19; 6]);
    TriRule { points, weights }
}

/// Collapsed (Duffy) tensor Gauss rule with `n × n` points, exact for
/// polynomials of degree `2n - 2`; used where integrands carry
/// non-polynomial coefficients.
pub fn collapsed(n: usize) -> TriRule {
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (u, wu) in x.iter().zip(&w) {
        for (v, wv) in x.iter().zip(&w) {
            let xi = *u;
            let eta = v * (1.0 - u);
            points.push([1.0 - xi - eta, xi, eta]);
            // Reference area 1/2 is normalized away.
            weights.push(2.0 * wu * wv * (1.0 - u));
        }
    }
    TriRule { points, weights }
}

/// Gauss–Legendre nodes and weights on `[0, 1]` by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let (p, pm) = (p1, p0);
            dp = n as f64 * (t * p - pm) / (t * t - 1.0);
            let dt = p / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - t);
        w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

/// Three-point Gauss rule on `[0, 1]`, exact for degree 5.
pub fn gauss3() -> ([f64; 3], [f64; 3]) {
    let d = 0.5 * (0.6f64).sqrt();
    ([0.5 - d, 0.5, 0.5 + d], [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomial_integral(p: usize, q: usize) -> f64 {
        // ∫_T λ1^p λ2^q over the reference triangle of area 1/2, divided by the area.
        let f = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
        2.0 * f(p) * f(q) / f(p + q + 2)
    }

    fn check(rule: &TriRule, degree: usize) {
        let s: f64 = rule.weights.iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
        for p in 0..=degree {
            for q in 0..=(degree - p) {
                let v: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(l, w)| w * l[0].powi(p as i32) * l[1].powi(q as i32))
                    .sum();
                assert!((v - monomial_integral(p, q)).abs() < 2e-15, "{p} {q}");
            }
        }
    }

    #[test]
    fn rules_are_exact() {
        check(&degree4(), 4);
        check(&degree6(), 6);
    }

    #[test]
    fn collapsed_rule_is_exact() {
        check(&collapsed(6), 10);
        let (x, w) = gauss_legendre(5);
        for k in 0..=9 {
            let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            assert!((v - 1.0 / (k + 1) as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn gauss_is_exact() {
        let (x, w) = gauss3();
        for k in 0..=5 {
            let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            assert!((v - 1.0 / (k + 1) as f64).abs() < 1e-15);
        }
    }
}
