use crate::{Error, Result};

/// Quadrature rule on a reference simplex, with points in barycentric
/// coordinates and weights summing to the reference measure.
#[derive(Clone, Debug)]
pub struct QuadratureRule<const N: usize> {
    pub points: Vec<[f64; N]>,
    pub weights: Vec<f64>,
    /// Highest total polynomial degree integrated exactly.
    pub degree: usize,
}

pub type TetRule = QuadratureRule<4>;
pub type TriangleRule = QuadratureRule<3>;
pub type LineRule = QuadratureRule<2>;

impl<const N: usize> QuadratureRule<N> {
    /// Measure of the reference simplex (1/6, 1/2 or 1).
    pub fn reference_measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Fails when an integrand of degree `degree` is beyond the rule.
    pub fn require(&self, degree: usize) -> Result<()> {
        if degree > self.degree {
            Err(Error::QuadratureUnderResolved {
                requested: degree,
                available: self.degree,
            })
        } else {
            Ok(())
        }
    }

    /// Weights scaled so they sum to one; multiply by the simplex measure.
    pub fn unit_weights(&self) -> impl Iterator<Item = (&[f64; N], f64)> + '_ {
        let total = self.reference_measure();
        self.points.iter().zip(self.weights.iter().map(move |w| w / total))
    }
}

/// 14-point positive rule of degree 5 on the reference tetrahedron.
pub fn tet_rule() -> TetRule {
    let mut points = Vec::with_capacity(14);
    let mut weights = Vec::with_capacity(14);
    for (a, w) in [
        (0.092_735_250_310_891_23, 0.012_248_840_519_393_66),
        (0.310_885_919_263_300_6, 0.018_781_320_953_002_64),
    ] {
        let b = 1.0 - 3.0 * a;
        for k in 0..4 {
            let mut p = [a; 4];
            p[k] = b;
            points.push(p);
            weights.push(w);
        }
    }
    let (a, b) = (0.454_496_295_874_350_4, 0.045_503_704_125_649_6);
    let w = 0.007_091_003_462_846_911;
    for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
        let mut p = [b; 4];
        p[i] = a;
        p[j] = a;
        points.push(p);
        weights.push(w);
    }
    TetRule {
        points,
        weights,
        degree: 5,
    }
}

/// 7-point rule of degree 5 on the reference triangle.
pub fn triangle_rule() -> TriangleRule {
    let s = 15f64.sqrt();
    let mut points = vec![[1.0 / 3.0; 3]];
    let mut weights = vec![0.225 * 0.5];
    for (a, w) in [((6.0 - s) / 21.0, (155.0 - s) / 1200.0), ((6.0 + s) / 21.0, (155.0 + s) / 1200.0)] {
        for k in 0..3 {
            let mut p = [a; 3];
            p[k] = 1.0 - 2.0 * a;
            points.push(p);
            weights.push(0.5 * w);
        }
    }
    TriangleRule {
        points,
        weights,
        degree: 5,
    }
}

/// 3-point Gauss–Legendre rule of degree 5 on the unit interval.
pub fn line_rule() -> LineRule {
    let d = 0.5 * (0.6f64).sqrt();
    let nodes = [0.5 - d, 0.5, 0.5 + d];
    LineRule {
        points: nodes.iter().map(|&t| [1.0 - t, t]).collect(),
        weights: vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
        degree: 5,
    }
}
