//! Gauss rules on the reference triangle.
//!
//! Order 1 is the centroid rule. Higher orders are conical-product rules:
//! Gauss–Legendre in both directions of the collapsed square, exact for
//! polynomials of total degree up to the requested order.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

pub const MAX_QUADRATURE_ORDER: usize = 10;

/// Quadrature rule in barycentric coordinates; weights sum to one, so the
/// integral over a triangle is `area * Σ w f(λ)`.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub order: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; 3], f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// Rule exact for polynomials of total degree `order`.
pub fn triangle_rule(order: usize) -> Result<&'static TriangleRule> {
    static RULES: OnceLock<Vec<TriangleRule>> = OnceLock::new();
    if order == 0 || order > MAX_QUADRATURE_ORDER {
        return Err(Error::QuadratureUnavailable {
            order,
            max: MAX_QUADRATURE_ORDER,
        });
    }
    let rules = RULES.get_or_init(|| (1..=MAX_QUADRATURE_ORDER).map(build_rule).collect());
    Ok(&rules[order - 1])
}

fn build_rule(order: usize) -> TriangleRule {
    if order == 1 {
        return TriangleRule {
            order,
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![1.0],
        };
    }
    // degree `order` in (x, y) becomes degree order+1 in the collapsed
    // direction once the Jacobian (1 - η) is included
    let npts = (order + 3) / 2;
    let line = GaussLegendre::new(NonZeroUsize::new(npts).expect("positive"));
    let nodes: Vec<(f64, f64)> = line
        .iter()
        .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    let mut points = Vec::with_capacity(npts * npts);
    let mut weights = Vec::with_capacity(npts * npts);
    for &(xi, wx) in &nodes {
        for &(eta, wy) in &nodes {
            let x = xi * (1.0 - eta);
            let y = eta;
            points.push([1.0 - x - y, x, y]);
            // reference triangle area is 1/2
            weights.push(2.0 * wx * wy * (1.0 - eta));
        }
    }
    TriangleRule {
        order,
        points,
        weights,
    }
}
