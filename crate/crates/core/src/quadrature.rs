//! Symmetric 7-point rule on triangles, exact for polynomials up to degree 5.

use crate::mesh::Vec3;

/// Barycentric nodes and weights; weights sum to 1 (multiply by area).
pub const TRIANGLE_RULE_7: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.101_286_507_323_456_34; // (6 - sqrt 15) / 21
    const B1: f64 = 0.797_426_985_353_087_3; // (9 + 2 sqrt 15) / 21
    const W1: f64 = 0.125_939_180_544_827_15; // (155 - sqrt 15) / 1200
    const A2: f64 = 0.470_142_064_105_115_1; // (6 + sqrt 15) / 21
    const B2: f64 = 0.059_715_871_789_769_82; // (9 - 2 sqrt 15) / 21
    const W2: f64 = 0.132_394_152_788_506_18; // (155 + sqrt 15) / 1200
    const T: f64 = 1.0 / 3.0;
    [
        ([T, T, T], 0.225),
        ([B1, A1, A1], W1),
        ([A1, B1, A1], W1),
        ([A1, A1, B1], W1),
        ([B2, A2, A2], W2),
        ([A2, B2, A2], W2),
        ([A2, A2, B2], W2),
    ]
};

/// Integrates `f` over the triangle `abc` (surface measure).
pub fn integrate_triangle(corners: &[Vec3; 3], area: f64, mut f: impl FnMut(&Vec3) -> f64) -> f64 {
    let [a, b, c] = corners;
    let mut sum = 0.0;
    for (bary, w) in TRIANGLE_RULE_7.iter() {
        let p = a * bary[0] + b * bary[1] + c * bary[2];
        sum += w * f(&p);
    }
    sum * area
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_match_closed_forms() {
        let s15 = 15f64.sqrt();
        let [_, (n1, w1), _, _, (n2, w2), _, _] = TRIANGLE_RULE_7;
        assert!((n1[1] - (6.0 - s15) / 21.0).abs() < 1e-15);
        assert!((n1[0] - (9.0 + 2.0 * s15) / 21.0).abs() < 1e-15);
        assert!((w1 - (155.0 - s15) / 1200.0).abs() < 1e-15);
        assert!((n2[1] - (6.0 + s15) / 21.0).abs() < 1e-15);
        assert!((n2[0] - (9.0 - 2.0 * s15) / 21.0).abs() < 1e-15);
        assert!((w2 - (155.0 + s15) / 1200.0).abs() < 1e-15);
        let total: f64 = TRIANGLE_RULE_7.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_through_degree_five() {
        // Reference triangle (0,0),(1,0),(0,1): int x^i y^j = i! j! / (i+j+2)!
        let fact = |n: u32| (1..=n).product::<u32>().max(1) as f64;
        let corners = [Vec3::zeros(), Vec3::x(), Vec3::y()];
        for i in 0..=5u32 {
            for j in 0..=(5 - i) {
                let exact = fact(i) * fact(j) / fact(i + j + 2);
                let got =
                    integrate_triangle(&corners, 0.5, |p| p.x.powi(i as i32) * p.y.powi(j as i32));
                assert!((got - exact).abs() < 1e-15, "x^{i} y^{j}: {got} vs {exact}");
            }
        }
    }
}
