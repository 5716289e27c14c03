//! Conformal structures on a single flat chart.
//!
//! A structure is a smooth factor `phi` defining the local conformal metric
//! `g = exp(2 phi) * delta`. It is sampled once per simplex, at the centroid.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CapError, Result};
use crate::mesh::SimplicialMesh;

/// Serializable description of the built-in conformal factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConformalFactor {
    #[default]
    Flat,
    Constant {
        value: f64,
    },
    /// `amplitude * exp(-|x - center|^2 / width^2)`; center defaults to the origin.
    RadialBump {
        amplitude: f64,
        width: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// Seeded sum of six plane waves with total amplitude `amplitude`.
    RandomSmooth {
        seed: u64,
        amplitude: f64,
    },
}

type FactorFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct ConformalStructure {
    description: String,
    phi: Arc<FactorFn>,
}

impl fmt::Debug for ConformalStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConformalStructure")
            .field("description", &self.description)
            .finish()
    }
}

impl ConformalStructure {
    pub fn flat() -> Self {
        Self::from_fn("flat", |_| 0.0)
    }

    pub fn from_fn(description: impl Into<String>, phi: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ConformalStructure {
            description: description.into(),
            phi: Arc::new(phi),
        }
    }

    pub fn from_factor(factor: &ConformalFactor) -> Self {
        match factor.clone() {
            ConformalFactor::Flat => Self::flat(),
            ConformalFactor::Constant { value } => Self::from_fn(format!("constant({value})"), move |_| value),
            ConformalFactor::RadialBump {
                amplitude,
                width,
                center,
            } => Self::from_fn(format!("radial_bump(amplitude={amplitude}, width={width})"), move |x| {
                let r2: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(d, v)| {
                        let c = center.as_ref().and_then(|c| c.get(d)).copied().unwrap_or(0.0);
                        (v - c) * (v - c)
                    })
                    .sum();
                amplitude * (-r2 / (width * width)).exp()
            }),
            ConformalFactor::RandomSmooth { seed, amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let modes: Vec<([f64; 3], f64, f64)> = (0..6)
                    .map(|_| {
                        let k = [
                            rng.gen_range(-3.0..3.0),
                            rng.gen_range(-3.0..3.0),
                            rng.gen_range(-3.0..3.0),
                        ];
                        (k, rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.2..1.0))
                    })
                    .collect();
                let norm: f64 = modes.iter().map(|m| m.2).sum();
                Self::from_fn(format!("random_smooth(seed={seed}, amplitude={amplitude})"), move |x| {
                    let s: f64 = modes
                        .iter()
                        .map(|(k, phase, a)| {
                            let dot: f64 = x.iter().zip(k).map(|(xi, ki)| xi * ki).sum();
                            a * (dot + phase).sin()
                        })
                        .sum();
                    amplitude * s / norm
                })
            }
        }
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn phi(&self, x: &[f64]) -> f64 {
        (self.phi)(x)
    }

    /// `phi` at every simplex centroid.
    pub fn sample(&self, mesh: &SimplicialMesh) -> Result<Vec<f64>> {
        (0..mesh.num_simplices())
            .map(|e| {
                let v = self.phi(&mesh.simplex_centroid(e));
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(CapError::Argument(format!(
                        "conformal factor '{}' is not finite at the centroid of simplex {e}",
                        self.description
                    )))
                }
            })
            .collect()
    }
}

impl Default for ConformalStructure {
    fn default() -> Self {
        Self::flat()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_smooth_is_seeded_and_bounded() {
        let a = ConformalStructure::from_factor(&ConformalFactor::RandomSmooth {
            seed: 7,
            amplitude: 2.0,
        });
        let b = ConformalStructure::from_factor(&ConformalFactor::RandomSmooth {
            seed: 7,
            amplitude: 2.0,
        });
        let c = ConformalStructure::from_factor(&ConformalFactor::RandomSmooth {
            seed: 8,
            amplitude: 2.0,
        });
        let x = [0.3, -0.7];
        assert_eq!(a.phi(&x), b.phi(&x));
        assert_ne!(a.phi(&x), c.phi(&x));
        assert!(a.phi(&x).abs() <= 2.0);
    }

    #[test]
    fn non_finite_factor_is_reported() {
        let mesh = SimplicialMesh::new(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0], vec![0, 1, 2]).unwrap();
        let bad = ConformalStructure::from_fn("nan", |_| f64::NAN);
        assert!(bad.sample(&mesh).is_err());
    }
}
