//! Barotropic closure: isentropic pressure law, pressure potential, sound
//! speed, viscosity coefficients and momentum forcing.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GasModel {
    pub a: f64,
    pub gamma: f64,
    pub mu: f64,
    pub lambda: f64,
}

impl Default for GasModel {
    fn default() -> Self {
        Self {
            a: 1.0,
            gamma: 1.4,
            mu: 0.01,
            lambda: 0.01,
        }
    }
}

impl GasModel {
    pub fn new(a: f64, gamma: f64, mu: f64, lambda: f64) -> Result<Self> {
        let m = Self {
            a,
            gamma,
            mu,
            lambda,
        };
        let v = m.violations();
        if v.is_empty() {
            Ok(m)
        } else {
            Err(Error::InvalidParameter(v.join("; ")))
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.a > 0.0) {
            v.push(format!("model.a = {} must be > 0", self.a));
        }
        if !(self.gamma > 1.0) {
            v.push(format!("model.gamma = {} must be > 1", self.gamma));
        }
        if !(self.mu > 0.0) {
            v.push(format!("model.mu = {} must be > 0", self.mu));
        }
        if !(self.lambda >= -self.mu) {
            v.push(format!(
                "model.lambda = {} must be >= -mu = {}",
                self.lambda, -self.mu
            ));
        }
        v
    }

    /// The convergence theory covers `1 < gamma < 2` only.
    pub fn within_convergence_theory(&self) -> bool {
        self.gamma > 1.0 && self.gamma < 2.0
    }

    /// `a rho^gamma`.
    pub fn pressure(&self, rho: f64) -> Result<f64> {
        check_density(rho)?;
        Ok(self.pressure_unchecked(rho))
    }

    #[inline]
    pub fn pressure_unchecked(&self, rho: f64) -> f64 {
        self.a * rho.powf(self.gamma)
    }

    /// Internal energy `H(rho) = p(rho) / (gamma - 1)`.
    pub fn pressure_potential(&self, rho: f64) -> Result<f64> {
        check_density(rho)?;
        Ok(self.pressure_potential_unchecked(rho))
    }

    #[inline]
    pub fn pressure_potential_unchecked(&self, rho: f64) -> f64 {
        self.pressure_unchecked(rho) / (self.gamma - 1.0)
    }

    /// `H'(rho) = a gamma rho^(gamma-1) / (gamma - 1)`.
    pub fn pressure_potential_derivative(&self, rho: f64) -> f64 {
        self.a * self.gamma * rho.powf(self.gamma - 1.0) / (self.gamma - 1.0)
    }

    /// `c = sqrt(gamma p / rho)`.
    pub fn sound_speed(&self, rho: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sound speed needs positive density, got {rho}"
            )));
        }
        Ok(self.sound_speed_unchecked(rho))
    }

    #[inline]
    pub fn sound_speed_unchecked(&self, rho: f64) -> f64 {
        (self.gamma * self.a * rho.powf(self.gamma - 1.0)).sqrt()
    }
}

fn check_density(rho: f64) -> Result<()> {
    if rho < 0.0 || rho.is_nan() {
        Err(Error::NegativeDensity(rho))
    } else {
        Ok(())
    }
}

type ForcingFn = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;

/// Momentum source `f(t, x)`; identically zero unless constructed from a function.
#[derive(Clone, Default)]
pub struct Forcing {
    f: Option<Arc<ForcingFn>>,
}

impl Forcing {
    pub fn zero() -> Self {
        Self { f: None }
    }

    /// Wraps a function writing the `d` source components for `(t, x)` into its last argument.
    pub fn new(f: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        Self {
            f: Some(Arc::new(f)),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.f.is_none()
    }

    pub fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        match &self.f {
            Some(f) => f(t, x, out),
            None => out.iter_mut().for_each(|v| *v = 0.0),
        }
    }

    pub fn eval_vec(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.eval(t, x, &mut out);
        out
    }
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_zero() {
            "Forcing::zero"
        } else {
            "Forcing::fn"
        })
    }
}
