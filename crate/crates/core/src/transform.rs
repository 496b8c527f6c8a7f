//! Front-fixing change of variables.
//!
//! `y = (2x - g - h) / (h - g)` maps the moving habitat `[g(t), h(t)]` onto
//! `[-1, 1]`. In these coordinates the predator equation becomes
//!
//! ```text
//! z_t - d rho(t) z_yy - zeta(t, y) z_y = mu z (1 - z / w)
//! rho = 4 / (h - g)^2
//! zeta = (h' + g') / (h - g) + y (h' - g') / (h - g)
//! ```
//!
//! and the Stefan laws read `g' = -beta (2 / (h - g)) z_y(-1)`,
//! `h' = -beta (2 / (h - g)) z_y(1)`.

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Error)]
pub enum TransformError {
    #[error("degenerate habitat: g = {g} is not below h = {h}")]
    DegenerateInterval { g: f64, h: f64 },
    #[error("boundary stencil needs at least 3 nodes, got {0}")]
    GridTooSmall(usize),
}

/// Positions and speeds of the two fronts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontState {
    pub g: f64,
    pub h: f64,
    pub gdot: f64,
    pub hdot: f64,
}

impl FrontState {
    pub fn new(g: f64, h: f64, gdot: f64, hdot: f64) -> Self {
        FrontState { g, h, gdot, hdot }
    }

    pub fn span(&self) -> f64 {
        self.h - self.g
    }

    fn checked_span(&self) -> Result<f64, TransformError> {
        let span = self.h - self.g;
        if span > 0.0 {
            Ok(span)
        } else {
            Err(TransformError::DegenerateInterval { g: self.g, h: self.h })
        }
    }
}

/// Coefficients of the transformed predator equation; `zeta(y) = zeta0 + zeta1 y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransformCoeffs {
    pub rho: f64,
    pub zeta0: f64,
    pub zeta1: f64,
}

impl TransformCoeffs {
    #[inline]
    pub fn zeta(&self, y: f64) -> f64 {
        self.zeta0 + self.zeta1 * y
    }

    /// `max |zeta|` over `[-1, 1]`.
    pub fn zeta_max(&self) -> f64 {
        self.zeta0.abs() + self.zeta1.abs()
    }
}

pub fn coeffs(front: &FrontState) -> Result<TransformCoeffs, TransformError> {
    let span = front.checked_span()?;
    Ok(TransformCoeffs {
        rho: 4.0 / (span * span),
        zeta0: (front.hdot + front.gdot) / span,
        zeta1: (front.hdot - front.gdot) / span,
    })
}

#[inline]
pub fn map_y_to_x(y: f64, front: &FrontState) -> Result<f64, TransformError> {
    let span = front.checked_span()?;
    Ok(0.5 * (span * y + front.h + front.g))
}

#[inline]
pub fn map_x_to_y(x: f64, front: &FrontState) -> Result<f64, TransformError> {
    let span = front.checked_span()?;
    Ok((2.0 * x - front.g - front.h) / span)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Second-order one-sided derivative of `z` at `y = -1` or `y = 1`.
pub fn boundary_gradient(z: &[f64], dy: f64, side: Side) -> Result<f64, TransformError> {
    let n = z.len();
    if n < 3 {
        return Err(TransformError::GridTooSmall(n));
    }
    Ok(match side {
        Side::Left => (-3.0 * z[0] + 4.0 * z[1] - z[2]) / (2.0 * dy),
        Side::Right => (3.0 * z[n - 1] - 4.0 * z[n - 2] + z[n - 3]) / (2.0 * dy),
    })
}

/// Front speeds `(g', h')` from the Stefan condition in computational
/// coordinates.
pub fn front_speeds(
    z: &[f64],
    dy: f64,
    front: &FrontState,
    beta: f64,
) -> Result<(f64, f64), TransformError> {
    let span = front.checked_span()?;
    let left = boundary_gradient(z, dy, Side::Left)?;
    let right = boundary_gradient(z, dy, Side::Right)?;
    let k = -beta * 2.0 / span;
    Ok((k * left, k * right))
}

/// Constant in the stencil tolerance `C * dy^2 * max|z|`.
pub const STENCIL_C: f64 = 10.0;

/// Speed tolerance for wrong-signed front motion caused by the boundary
/// stencil: `STENCIL_C * dy^2 * max|z|`, converted to a front speed with the
/// factor `beta * 2 / span`.
pub fn stencil_speed_tolerance(beta: f64, span: f64, dy: f64, zmax: f64) -> f64 {
    STENCIL_C * dy * dy * zmax.abs() * beta * 2.0 / span
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn grid(n: usize) -> (Vec<f64>, f64) {
        let dy = 2.0 / n as f64;
        ((0..=n).map(|j| -1.0 + j as f64 * dy).collect(), dy)
    }

    #[test]
    fn coefficient_examples() {
        let c = coeffs(&FrontState::new(-1.0, 1.0, -1.0, 1.0)).unwrap();
        assert_eq!((c.rho, c.zeta0, c.zeta1), (1.0, 0.0, 1.0));
        let c = coeffs(&FrontState::new(-2.0, 2.0, 0.0, 0.0)).unwrap();
        assert_eq!((c.rho, c.zeta0, c.zeta1), (0.25, 0.0, 0.0));
        let c = coeffs(&FrontState::new(-1.0, 3.0, 0.0, 2.0)).unwrap();
        assert_eq!((c.rho, c.zeta0, c.zeta1), (0.25, 0.5, 0.5));
        assert_eq!(c.zeta_max(), 1.0);
    }

    #[test]
    fn degenerate_interval() {
        let f = FrontState::new(1.0, 1.0, 0.0, 0.0);
        assert!(matches!(coeffs(&f), Err(TransformError::DegenerateInterval { .. })));
        assert!(map_y_to_x(0.0, &f).is_err());
        assert!(map_x_to_y(0.0, &f).is_err());
    }

    #[test]
    fn affine_map_examples() {
        let f = FrontState::new(0.0, 4.0, 0.0, 0.0);
        assert_eq!(map_y_to_x(-1.0, &f).unwrap(), 0.0);
        assert_eq!(map_y_to_x(1.0, &f).unwrap(), 4.0);
        assert_eq!(map_y_to_x(0.5, &f).unwrap(), 3.0);
        let id = FrontState::new(-1.0, 1.0, 0.0, 0.0);
        for y in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert_eq!(map_y_to_x(y, &id).unwrap(), y);
        }
    }

    #[test]
    fn stencil_exact_on_quadratics() {
        for n in [8, 17, 100] {
            let (ys, dy) = grid(n);
            let z: Vec<f64> = ys.iter().map(|y| 1.0 - y * y).collect();
            assert_abs_diff_eq!(boundary_gradient(&z, dy, Side::Right).unwrap(), -2.0, epsilon = 1e-10);
            assert_abs_diff_eq!(boundary_gradient(&z, dy, Side::Left).unwrap(), 2.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn stencil_zero_field_and_small_grid() {
        let z = vec![0.0; 9];
        assert_eq!(boundary_gradient(&z, 0.25, Side::Left).unwrap(), 0.0);
        assert_eq!(boundary_gradient(&z, 0.25, Side::Right).unwrap(), 0.0);
        assert_eq!(
            boundary_gradient(&[0.0, 1.0], 1.0, Side::Left),
            Err(TransformError::GridTooSmall(2))
        );
    }

    #[test]
    fn stencil_second_order_on_sine() {
        // z = sin(pi (y + 1) / 2), z_y(1) = -pi/2, z_y(-1) = pi/2
        let (ys, dy) = grid(200);
        assert_eq!(dy, 0.01);
        let z: Vec<f64> = ys.iter().map(|y| (PI * (y + 1.0) / 2.0).sin()).collect();
        let right = boundary_gradient(&z, dy, Side::Right).unwrap();
        let left = boundary_gradient(&z, dy, Side::Left).unwrap();
        assert!((right + PI / 2.0).abs() <= 1e-3);
        assert!((left - PI / 2.0).abs() <= 1e-3);

        // error ratio under halving dy is ~4
        let (ys2, dy2) = grid(400);
        let z2: Vec<f64> = ys2.iter().map(|y| (PI * (y + 1.0) / 2.0).sin()).collect();
        let right2 = boundary_gradient(&z2, dy2, Side::Right).unwrap();
        let ratio = (right + PI / 2.0) / (right2 + PI / 2.0);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn speeds_examples() {
        // z = 0.5 (1 - y^2)/2 * ... build z with z_y(-1) = 0.5 and z_y(1) = -0.5
        let (ys, dy) = grid(16);
        let z: Vec<f64> = ys.iter().map(|y| 0.25 * (1.0 - y * y)).collect();
        let f = FrontState::new(-1.0, 1.0, 0.0, 0.0);
        let (gd, hd) = front_speeds(&z, dy, &f, 1.0).unwrap();
        assert_abs_diff_eq!(gd, -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(hd, 0.5, epsilon = 1e-14);

        let (gd2, hd2) = front_speeds(&z, dy, &f, 2.0).unwrap();
        assert_eq!((gd2, hd2), (2.0 * gd, 2.0 * hd));

        let zero = vec![0.0; 17];
        assert_eq!(front_speeds(&zero, dy, &f, 1.0).unwrap(), (0.0, 0.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn map_roundtrip(g in -100.0f64..10.0, len in 1e-3f64..200.0, y in -1.0f64..=1.0) {
                let f = FrontState::new(g, g + len, 0.0, 0.0);
                let x = map_y_to_x(y, &f).unwrap();
                let back = map_x_to_y(x, &f).unwrap();
                let scale = (g.abs() + len) / len;
                prop_assert!((back - y).abs() <= 1e-14 * scale.max(1.0) * 4.0);
            }

            #[test]
            fn rho_decreases_with_span(span in 1e-2f64..100.0, grow in 1e-6f64..10.0) {
                let a = coeffs(&FrontState::new(0.0, span, 0.0, 0.0)).unwrap();
                let b = coeffs(&FrontState::new(0.0, span + grow, 0.0, 0.0)).unwrap();
                prop_assert!(b.rho < a.rho);
            }

            #[test]
            fn smooth_nonnegative_fields_push_fronts_outward(
                amp in 0.0f64..5.0, k in 1usize..4, n in 16usize..400, beta in 0.01f64..10.0
            ) {
                // z = amp * sin(pi (y+1)/2)^k with k-th power keeps z >= 0 and z(±1) = 0
                let (ys, dy) = grid(n);
                let z: Vec<f64> = ys.iter()
                    .map(|y| amp * (PI * (y + 1.0) / 2.0).sin().abs().powi(k as i32))
                    .collect();
                let mut z = z;
                z[0] = 0.0;
                z[n] = 0.0;
                let f = FrontState::new(-1.0, 1.0, 0.0, 0.0);
                let (gd, hd) = front_speeds(&z, dy, &f, beta).unwrap();
                let eps = stencil_speed_tolerance(beta, 2.0, dy, amp);
                prop_assert!(gd <= eps, "gdot {gd} eps {eps}");
                prop_assert!(hd >= -eps, "hdot {hd} eps {eps}");
            }
        }
    }
}
