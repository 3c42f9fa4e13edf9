//! Planar geometry helpers and triangle quadrature.

pub type Point = [f64; 2];

/// An affine polynomial `p(x) = constant + gradient · x`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Affine {
    pub constant: f64,
    pub gradient: [f64; 2],
}

impl Affine {
    pub fn new(constant: f64, gradient: [f64; 2]) -> Self {
        Self { constant, gradient }
    }

    /// The affine function taking `value` at `at` with the given gradient.
    pub fn through(at: Point, value: f64, gradient: [f64; 2]) -> Self {
        Self {
            constant: value - gradient[0] * at[0] - gradient[1] * at[1],
            gradient,
        }
    }

    #[inline]
    pub fn eval(&self, x: Point) -> f64 {
        self.constant + self.gradient[0] * x[0] + self.gradient[1] * x[1]
    }

    /// Affine interpolant of three values at the vertices of a non-degenerate triangle.
    pub fn interpolate(vertices: [Point; 3], values: [f64; 3]) -> Self {
        let [p0, p1, p2] = vertices;
        let d1 = sub(p1, p0);
        let d2 = sub(p2, p0);
        let det = cross(d1, d2);
        let v1 = values[1] - values[0];
        let v2 = values[2] - values[0];
        // Solve [d1; d2] g = [v1; v2].
        let g = [(v1 * d2[1] - v2 * d1[1]) / det, (d1[0] * v2 - d2[0] * v1) / det];
        Self::through(p0, values[0], g)
    }
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// Signed area, positive for counterclockwise vertices.
pub fn signed_area(p: [Point; 3]) -> f64 {
    0.5 * cross(sub(p[1], p[0]), sub(p[2], p[0]))
}

pub fn centroid(p: [Point; 3]) -> Point {
    [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
}

/// Outward unit normal of the edge `a -> b` of a counterclockwise polygon.
pub fn outward_normal(a: Point, b: Point) -> Point {
    let d = sub(b, a);
    let l = norm(d);
    [d[1] / l, -d[0] / l]
}

/// Symmetric 2x2 tensor stored row-major.
pub type Tensor = [[f64; 2]; 2];

pub fn tensor_apply(t: &Tensor, v: [f64; 2]) -> [f64; 2] {
    [t[0][0] * v[0] + t[0][1] * v[1], t[1][0] * v[0] + t[1][1] * v[1]]
}

/// Eigenvalues of the symmetric part of `t`, ascending.
pub fn sym_eigenvalues(t: &Tensor) -> [f64; 2] {
    let a = t[0][0];
    let d = t[1][1];
    let b = 0.5 * (t[0][1] + t[1][0]);
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    [mean - rad, mean + rad]
}

/// Spectral norm of a symmetric 2x2 tensor.
pub fn sym_spectral_norm(t: &Tensor) -> f64 {
    let [lo, hi] = sym_eigenvalues(t);
    lo.abs().max(hi.abs())
}

/// Degree-4 symmetric rule with six points (barycentric coordinates, weights summing to one).
pub const TRIANGLE_RULE_ORDER4: [([f64; 3], f64); 6] = {
    const A1: f64 = 0.445_948_490_915_965;
    const B1: f64 = 1.0 - 2.0 * A1;
    const W1: f64 = 0.223_381_589_678_011;
    const A2: f64 = 0.091_576_213_509_771;
    const B2: f64 = 1.0 - 2.0 * A2;
    const W2: f64 = 0.109_951_743_655_322;
    [
        ([A1, A1, B1], W1),
        ([A1, B1, A1], W1),
        ([B1, A1, A1], W1),
        ([A2, A2, B2], W2),
        ([A2, B2, A2], W2),
        ([B2, A2, A2], W2),
    ]
};

/// Edge-midpoint rule, exact for quadratics.
pub const TRIANGLE_RULE_ORDER2: [([f64; 3], f64); 3] = [
    ([0.5, 0.5, 0.0], 1.0 / 3.0),
    ([0.0, 0.5, 0.5], 1.0 / 3.0),
    ([0.5, 0.0, 0.5], 1.0 / 3.0),
];

#[inline]
pub fn barycentric_point(p: [Point; 3], l: [f64; 3]) -> Point {
    [
        l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
        l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
    ]
}

/// Integrates `f` over a triangle with the six-point degree-4 rule.
pub fn integrate_triangle(p: [Point; 3], mut f: impl FnMut(Point) -> f64) -> f64 {
    let area = signed_area(p).abs();
    TRIANGLE_RULE_ORDER4
        .iter()
        .map(|&(l, w)| w * f(barycentric_point(p, l)))
        .sum::<f64>()
        * area
}

/// Fan sub-triangulation of a convex counterclockwise polygon from its first
/// vertex. Sub-triangles with collinear vertices are dropped.
pub fn fan(points: &[Point]) -> Vec<[Point; 3]> {
    let total: f64 = (1..points.len().saturating_sub(1))
        .map(|i| signed_area([points[0], points[i], points[i + 1]]))
        .sum();
    (1..points.len().saturating_sub(1))
        .map(|i| [points[0], points[i], points[i + 1]])
        .filter(|t| signed_area(*t) > 1e-12 * total)
        .collect()
}

/// Integrates `f` over a polygon with the degree-4 rule on its fan.
pub fn integrate_polygon(points: &[Point], mut f: impl FnMut(Point) -> f64) -> f64 {
    fan(points).into_iter().map(|t| integrate_triangle(t, &mut f)).sum()
}

/// Exact integral of the product of two affine functions over a triangle.
pub fn integrate_affine_product(p: [Point; 3], a: &Affine, b: &Affine) -> f64 {
    let area = signed_area(p).abs();
    TRIANGLE_RULE_ORDER2
        .iter()
        .map(|&(l, w)| {
            let x = barycentric_point(p, l);
            w * a.eval(x) * b.eval(x)
        })
        .sum::<f64>()
        * area
}
