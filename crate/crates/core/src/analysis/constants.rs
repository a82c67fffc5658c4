//! Stability and quasi-best-approximation constants of the reduced system.

use crate::error::{Error, Result};
use crate::optsys::C_F;

/// Optional replacements for the model constants, used to probe limits of
/// the formulas (e.g. a vanishing coupling constant `M`).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ConstantsOverrides {
    /// Forces `M_I = M_C = M`.
    pub m: Option<f64>,
    /// Inf-sup constant `m_a`.
    pub m_a: Option<f64>,
    /// Continuity constant `M_a`.
    pub big_m_a: Option<f64>,
    /// Discrete quasi-best constant of the constraint.
    pub mu_h: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantsBundle {
    pub alpha: f64,
    pub m_i: f64,
    pub m_c: f64,
    /// `max(M_I, M_C)`.
    pub m: f64,
    /// Inf-sup constant of `a`.
    pub m_a: f64,
    /// Continuity constant of `a`.
    pub big_m_a: f64,
    /// `M / sqrt(alpha)`.
    pub l: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub mu_h: f64,
    pub gamma_h: f64,
    pub kappa_h: f64,
    /// `2 (1 + C_F (1 + 2 C_F / sqrt(alpha)))`.
    pub kappa_alpha_example: f64,
    pub c_f: f64,
}

/// `(1 + 2L) / (1 + L)`.
fn coupling_factor(l: f64) -> f64 {
    (1.0 + 2.0 * l) / (1.0 + l)
}

/// `(M / m_a) (1 + 2 M / sqrt(alpha))`.
pub fn gamma(m: f64, m_a: f64, alpha: f64) -> f64 {
    m / m_a * (1.0 + 2.0 * m / alpha.sqrt())
}

/// `((1 + 2L)/(1 + L)) (1 + gamma)` with `L = M/sqrt(alpha)`.
pub fn kappa(m: f64, m_a: f64, alpha: f64) -> f64 {
    coupling_factor(m / alpha.sqrt()) * (1.0 + gamma(m, m_a, alpha))
}

pub fn kappa_alpha_example(alpha: f64) -> f64 {
    2.0 * (1.0 + C_F * (1.0 + 2.0 * C_F / alpha.sqrt()))
}

impl ConstantsBundle {
    /// Constants of the Poisson model: `M_a = m_a = 1`, `M_I = M_C = C_F`,
    /// `mu_h = 1`.
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_overrides(alpha, ConstantsOverrides::default())
    }

    pub fn with_overrides(alpha: f64, o: ConstantsOverrides) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        let m = o.m.unwrap_or(C_F);
        let m_a = o.m_a.unwrap_or(1.0);
        let big_m_a = o.big_m_a.unwrap_or(1.0);
        let mu_h = o.mu_h.unwrap_or(1.0);
        if m < 0.0 || !(m_a > 0.0) || !(big_m_a > 0.0) || !(mu_h > 0.0) {
            return Err(Error::InvalidParameter("constants must be nonnegative (m_a, M_a, mu_h positive)".into()));
        }
        let l = m / alpha.sqrt();
        let gamma = gamma(m, m_a, alpha);
        let gamma_h = gamma * mu_h;
        Ok(Self {
            alpha,
            m_i: m,
            m_c: m,
            m,
            m_a,
            big_m_a,
            l,
            gamma,
            kappa: coupling_factor(l) * (1.0 + gamma),
            mu_h,
            gamma_h,
            kappa_h: coupling_factor(l) * (1.0 + gamma_h),
            kappa_alpha_example: kappa_alpha_example(alpha),
            c_f: C_F,
        })
    }

    /// Bound `kappa_h * mu_h` on the discrete quasi-best ratio.
    pub fn kappa_h_bound(&self) -> f64 {
        self.kappa_h * self.mu_h
    }

    /// Weight of the seminorm in `|| . ||_alpha`: `M / sqrt(alpha)`.
    pub fn seminorm_weight(&self) -> f64 {
        self.m / self.alpha.sqrt()
    }
}

/// One limit check of the constant formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitCheck {
    pub name: &'static str,
    pub value: f64,
    pub target: f64,
    /// Allowed relative deviation; 0 means exact equality.
    pub rel_tol: f64,
}

impl LimitCheck {
    pub fn passed(&self) -> bool {
        if self.rel_tol == 0.0 {
            self.value == self.target
        } else {
            ((self.value - self.target) / self.target).abs() <= self.rel_tol
        }
    }
}

/// Limits of `kappa`: vanishing coupling (`M = 0`), vanishing regularization
/// (`alpha = 1e-8`), the first-order expansion at `M = 1e-6`, and a
/// degenerating constraint (`m_a = 1e-6`).
pub fn limit_checks() -> Vec<LimitCheck> {
    let m = C_F;
    let mut out = vec![LimitCheck {
        name: "kappa(M=0)",
        value: kappa(0.0, 1.0, 1.0),
        target: 1.0,
        rel_tol: 0.0,
    }];
    let alpha = 1e-8;
    out.push(LimitCheck {
        name: "kappa*sqrt(alpha)*m_a/(4M^2) at alpha=1e-8",
        value: kappa(m, 1.0, alpha) * alpha.sqrt() / (4.0 * m * m),
        target: 1.0,
        rel_tol: 0.05,
    });
    let small = 1e-6;
    out.push(LimitCheck {
        name: "(kappa-1)*sqrt(alpha)/M at M=1e-6",
        value: (kappa(small, 1.0, 1.0) - 1.0) / small,
        target: 1.0,
        rel_tol: 0.05,
    });
    let m_a = 1e-6;
    let l = m;
    out.push(LimitCheck {
        name: "kappa*m_a at m_a=1e-6",
        value: kappa(m, m_a, 1.0) * m_a,
        target: coupling_factor(l) * (1.0 + 2.0 * m) * m,
        rel_tol: 0.05,
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_alpha_values() {
        let c = ConstantsBundle::new(1.0).unwrap();
        assert!((c.c_f - 0.225079).abs() < 1e-6);
        // 2 (1 + C_F (1 + 2 C_F)), with C_F = 1/(sqrt 2 pi)
        assert!((c.kappa_alpha_example - 2.652_800_6).abs() < 1e-6);
        assert_eq!(c.kappa_h, c.kappa);
        assert!(c.kappa_h_bound() <= c.kappa_alpha_example);
    }

    #[test]
    fn vanishing_coupling() {
        let c = ConstantsBundle::with_overrides(
            0.3,
            ConstantsOverrides {
                m: Some(0.0),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(c.gamma, 0.0);
        assert_eq!(c.kappa, 1.0);
        assert_eq!(c.l, 0.0);
    }

    #[test]
    fn kappa_identity_and_bounds() {
        for alpha in [1.0, 1e-2, 1e-4, 1e-8] {
            let c = ConstantsBundle::new(alpha).unwrap();
            assert_eq!(c.kappa, (1.0 + 2.0 * c.l) / (1.0 + c.l) * (1.0 + c.gamma));
            assert!(c.kappa >= 1.0 && c.gamma >= 0.0 && c.l >= 0.0);
        }
    }

    #[test]
    fn invalid_alpha() {
        assert!(ConstantsBundle::new(0.0).is_err());
        assert!(ConstantsBundle::new(f64::NAN).is_err());
    }

    #[test]
    fn limits_of_kappa() {
        let checks = limit_checks();
        assert!(checks[0].passed() && checks[1].passed() && checks[3].passed(), "{checks:?}");
        // both (1+2L)/(1+L) and 1+gamma contribute M/sqrt(alpha) to first order
        let slope = checks[2].value;
        assert!((slope - 2.0).abs() < 1e-5, "{slope}");
        assert!(!checks[2].passed());
    }
}
