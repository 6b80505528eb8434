use std::f64::consts::PI;
use std::str::FromStr;

use super::HhoError;

/// `Σ x²`, minimum 0 at the origin.
pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `10·n + Σ (x² − 10·cos 2πx)`, minimum 0 at the origin.
pub fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64 + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>()
}

/// `Σ 100·(x[i+1] − x[i]²)² + (1 − x[i])²`, minimum 0 at all ones.
pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Benchmark {
    Sphere,
    Rastrigin,
    Rosenbrock,
}

impl Benchmark {
    pub fn function(self) -> fn(&[f64]) -> f64 {
        match self {
            Self::Sphere => sphere,
            Self::Rastrigin => rastrigin,
            Self::Rosenbrock => rosenbrock,
        }
    }
}

impl FromStr for Benchmark {
    type Err = HhoError;

    fn from_str(s: &str) -> Result<Self, HhoError> {
        match s {
            "sphere" => Ok(Self::Sphere),
            "rastrigin" => Ok(Self::Rastrigin),
            "rosenbrock" => Ok(Self::Rosenbrock),
            other => Err(HhoError::UnknownBenchmark(other.to_string())),
        }
    }
}

pub fn benchmark_objective(name: &str) -> Result<fn(&[f64]) -> f64, HhoError> {
    Ok(name.parse::<Benchmark>()?.function())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_optima() {
        assert_eq!(benchmark_objective("sphere").unwrap()(&[0.0; 7]), 0.0);
        assert_eq!(benchmark_objective("rastrigin").unwrap()(&[0.0; 5]), 0.0);
        assert_eq!(benchmark_objective("rosenbrock").unwrap()(&[1.0; 4]), 0.0);
        assert!(matches!(benchmark_objective("ackley"), Err(HhoError::UnknownBenchmark(_))));
    }

    #[test]
    fn spot_values() {
        assert_eq!(sphere(&[1.0, 2.0]), 5.0);
        assert!((rastrigin(&[1.0]) - 1.0).abs() < 1e-12);
        assert!((rastrigin(&[0.5, 0.0]) - 20.25).abs() < 1e-9);
        assert_eq!(rosenbrock(&[0.0, 0.0]), 1.0);
    }
}
