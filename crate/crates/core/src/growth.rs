//! Growth structures: the weight that bounds admissible integrands, the
//! dilation that sends the recession surface to infinity, and projection of
//! phase points onto that surface.
//!
//! - `Quadratic` and `PowerP(p)`: weight `1 + |z|^p`, dilation `s·θ`,
//!   recession surface the unit sphere.
//! - `Isentropic { gamma }`: phase points `(α₁, α′)` with `α₁ > 0`, weight
//!   `1 + (|α₁|^{2γ} + |α′|⁴)^{1/2}`, dilation `(s²β₁, s^γ β′)`, recession
//!   surface `S⁺_{γ,2} = {|β₁|^{2γ} + |β′|⁴ = 1, β₁ ≥ 0}`.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GrowthStructure {
    Quadratic,
    PowerP(f64),
    Isentropic { gamma: f64 },
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>()
}

impl GrowthStructure {
    /// Power growth `p ≥ 1`; `p = 2` normalizes to [`GrowthStructure::Quadratic`].
    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::OutOfRange(format!("growth exponent p must be >= 1, got {p}")));
        }
        Ok(if p == 2.0 { Self::Quadratic } else { Self::PowerP(p) })
    }

    pub fn isentropic(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(Error::OutOfRange(format!("adiabatic exponent must be > 1, got {gamma}")));
        }
        Ok(Self::Isentropic { gamma })
    }

    pub fn is_isentropic(&self) -> bool {
        matches!(self, Self::Isentropic { .. })
    }

    /// Phase dimension forced by the structure for spatial dimension `d`.
    pub fn phase_dim_for(&self, d: usize) -> Option<usize> {
        match self {
            Self::Isentropic { .. } => Some(1 + d),
            _ => None,
        }
    }

    fn p(&self) -> f64 {
        match *self {
            Self::Quadratic => 2.0,
            Self::PowerP(p) => p,
            Self::Isentropic { gamma } => 2.0 * gamma,
        }
    }

    pub fn weight(&self, z: &[f64]) -> f64 {
        match *self {
            Self::Quadratic => 1.0 + norm_sq(z),
            Self::PowerP(p) => 1.0 + norm(z).powf(p),
            Self::Isentropic { gamma } => {
                let a1 = z[0].abs().powf(2.0 * gamma);
                let ap = norm_sq(&z[1..]);
                1.0 + (a1 + ap * ap).sqrt()
            }
        }
    }

    /// `weight(dilation(s, θ))` for any surface point θ: `1 + s^p`, or
    /// `1 + s^{2γ}` for the isentropic structure.
    pub fn recession_normalizer(&self, s: f64) -> f64 {
        1.0 + s.powf(self.p())
    }

    pub fn dilation(&self, s: f64, theta: &[f64], out: &mut [f64]) {
        match *self {
            Self::Quadratic | Self::PowerP(_) => {
                for (o, t) in out.iter_mut().zip(theta) {
                    *o = s * t;
                }
            }
            Self::Isentropic { gamma } => {
                out[0] = s * s * theta[0];
                let sg = s.powf(gamma);
                for (o, t) in out[1..].iter_mut().zip(&theta[1..]) {
                    *o = sg * t;
                }
            }
        }
    }

    /// Distance-like residual of `theta` from the recession surface; zero on it.
    pub fn surface_residual(&self, theta: &[f64]) -> f64 {
        match *self {
            Self::Quadratic | Self::PowerP(_) => (norm(theta) - 1.0).abs(),
            Self::Isentropic { gamma } => {
                let b1 = theta[0];
                let bp = norm_sq(&theta[1..]);
                let r = (b1.abs().powf(2.0 * gamma) + bp * bp - 1.0).abs();
                if b1 < 0.0 {
                    r.max(-b1)
                } else {
                    r
                }
            }
        }
    }

    /// Writes `z = dilation(s, θ)` as `(s, θ)` with θ on the recession surface.
    pub fn project(&self, z: &[f64]) -> Result<(f64, Vec<f64>)> {
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { cell: 0, what: "phase point" });
        }
        match *self {
            Self::Quadratic | Self::PowerP(_) => {
                let s = norm(z);
                if s == 0.0 {
                    return Err(Error::ZeroVector);
                }
                Ok((s, z.iter().map(|v| v / s).collect()))
            }
            Self::Isentropic { gamma } => {
                if z[0] < 0.0 {
                    return Err(Error::NegativeDensity(z[0]));
                }
                let ap = norm_sq(&z[1..]);
                let q = z[0].powf(2.0 * gamma) + ap * ap;
                if q == 0.0 {
                    return Err(Error::ZeroVector);
                }
                let s = q.powf(1.0 / (4.0 * gamma));
                let sg = s.powf(gamma);
                let mut theta = Vec::with_capacity(z.len());
                theta.push(z[0] / (s * s));
                theta.extend(z[1..].iter().map(|v| v / sg));
                Ok((s, theta))
            }
        }
    }
}

impl fmt::Display for GrowthStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Quadratic => write!(f, "quadratic"),
            Self::PowerP(p) => write!(f, "power(p={p})"),
            Self::Isentropic { gamma } => write!(f, "isentropic(gamma={gamma})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quadratic_projection() {
        let (s, th) = GrowthStructure::Quadratic.project(&[3.0, 4.0]).unwrap();
        assert_eq!(s, 5.0);
        assert!((th[0] - 0.6).abs() < 1e-15 && (th[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn isentropic_point_on_surface() {
        let g = GrowthStructure::isentropic(2.0).unwrap();
        let (s, th) = g.project(&[1.0, 0.0]).unwrap();
        assert_eq!(s, 1.0);
        assert_eq!(th, vec![1.0, 0.0]);
    }

    #[test]
    fn isentropic_closed_form_projection() {
        let g = GrowthStructure::isentropic(2.0).unwrap();
        let (s, th) = g.project(&[2.0, 2.0, 0.0]).unwrap();
        let expected = 2f64.powf(5.0 / 8.0);
        assert!((s - expected).abs() < 1e-14);
        let s2 = expected * expected;
        assert!((th[0] - 2.0 / s2).abs() < 1e-14);
        assert!((th[1] - 2.0 / s2).abs() < 1e-14);
        assert_eq!(th[2], 0.0);
        assert!(g.surface_residual(&th) <= 1e-10);
    }

    #[test]
    fn projection_errors() {
        assert!(matches!(GrowthStructure::Quadratic.project(&[0.0, 0.0]), Err(Error::ZeroVector)));
        let g = GrowthStructure::isentropic(1.4).unwrap();
        assert!(matches!(g.project(&[-1.0, 0.5]), Err(Error::NegativeDensity(_))));
        assert!(matches!(g.project(&[0.0, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn constructors_validate() {
        assert_eq!(GrowthStructure::power(2.0).unwrap(), GrowthStructure::Quadratic);
        assert_eq!(GrowthStructure::power(3.0).unwrap(), GrowthStructure::PowerP(3.0));
        assert!(GrowthStructure::power(0.5).is_err());
        assert!(GrowthStructure::isentropic(1.0).is_err());
    }

    #[test]
    fn negative_beta1_is_off_surface() {
        let g = GrowthStructure::isentropic(2.0).unwrap();
        assert!(g.surface_residual(&[-0.5, 0.0]) > 0.1);
    }

    fn growths() -> impl Strategy<Value = GrowthStructure> {
        prop_oneof![
            Just(GrowthStructure::Quadratic),
            (1.0f64..4.0).prop_map(GrowthStructure::PowerP),
            (1.05f64..4.0).prop_map(|gamma| GrowthStructure::Isentropic { gamma }),
        ]
    }

    proptest! {
        #[test]
        fn project_then_dilate_round_trips(
            g in growths(),
            z in prop::collection::vec(-5.0f64..5.0, 3),
        ) {
            let mut z = z;
            if g.is_isentropic() {
                z[0] = z[0].abs() + 1e-3;
            }
            prop_assume!(z.iter().map(|v| v * v).sum::<f64>() > 1e-6);
            let (s, th) = g.project(&z).unwrap();
            prop_assert!(g.surface_residual(&th) <= 1e-10);
            let mut back = vec![0.0; 3];
            g.dilation(s, &th, &mut back);
            let scale = z.iter().map(|v| v.abs()).fold(0.0, f64::max);
            for (a, b) in back.iter().zip(&z) {
                prop_assert!((a - b).abs() <= 1e-12 * scale);
            }
            let mut unit = vec![0.0; 3];
            g.dilation(1.0, &th, &mut unit);
            prop_assert!(g.surface_residual(&unit) <= 1e-10);
            // weight of a dilated surface point is the normalizer
            g.dilation(7.0, &th, &mut back);
            let w = g.weight(&back);
            prop_assert!((w - g.recession_normalizer(7.0)).abs() <= 1e-9 * w);
        }
    }
}
