//! Empirical flow-size distributions as step CDFs.

use rand::Rng;
use thiserror::Error;

use crate::units::ByteCount;

#[derive(Debug, Error, PartialEq)]
pub enum CdfError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: sizes and probabilities must both be strictly increasing")]
    NotIncreasing { line: usize },
    #[error("last cumulative probability must be 1, found {0}")]
    Incomplete(f64),
    #[error("distribution has no points")]
    Empty,
}

/// `P(size <= sizes[i]) = probs[i]`. Sampling returns one of the listed
/// sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCdf {
    sizes: Vec<ByteCount>,
    probs: Vec<f64>,
}

/// Approximation of the web-search flow-size distribution, which is
/// published only as a plot.
pub const WEBSEARCH_CDF: &str = include_str!("../../data/websearch_cdf.txt");

impl StepCdf {
    pub fn parse(text: &str) -> Result<Self, CdfError> {
        let mut sizes = Vec::new();
        let mut probs: Vec<f64> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let mut it = body.split_whitespace();
            let (Some(s), Some(p), None) = (it.next(), it.next(), it.next()) else {
                return Err(CdfError::Parse {
                    line,
                    reason: "expected `size_bytes cumulative_probability`".into(),
                });
            };
            let size: ByteCount = s.parse().map_err(|e| CdfError::Parse {
                line,
                reason: format!("size: {e}"),
            })?;
            let prob: f64 = p.parse().map_err(|e| CdfError::Parse {
                line,
                reason: format!("probability: {e}"),
            })?;
            if !(prob > 0.0 && prob <= 1.0) || size == 0 {
                return Err(CdfError::Parse {
                    line,
                    reason: "size must be positive and probability in (0, 1]".into(),
                });
            }
            if let (Some(&ls), Some(&lp)) = (sizes.last(), probs.last()) {
                if size <= ls || prob <= lp {
                    return Err(CdfError::NotIncreasing { line });
                }
            }
            sizes.push(size);
            probs.push(prob);
        }
        match probs.last() {
            None => Err(CdfError::Empty),
            Some(&p) if (p - 1.0).abs() > 1e-9 => Err(CdfError::Incomplete(p)),
            Some(_) => Ok(StepCdf { sizes, probs }),
        }
    }

    pub fn websearch() -> Self {
        Self::parse(WEBSEARCH_CDF).expect("bundled distribution is valid")
    }

    pub fn mean(&self) -> f64 {
        let mut prev = 0.0;
        let mut m = 0.0;
        for (&s, &p) in self.sizes.iter().zip(&self.probs) {
            m += s as f64 * (p - prev);
            prev = p;
        }
        m
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ByteCount {
        let u: f64 = rng.random();
        let i = self.probs.partition_point(|&p| p < u);
        self.sizes[i.min(self.sizes.len() - 1)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bundled_parses() {
        let c = StepCdf::websearch();
        assert!(c.mean() > 1.0e6 && c.mean() < 4.0e6);
    }

    #[test]
    fn rejects_non_increasing() {
        assert_eq!(
            StepCdf::parse("100 0.5\n100 1.0\n"),
            Err(CdfError::NotIncreasing { line: 2 })
        );
        assert_eq!(StepCdf::parse("100 0.5\n"), Err(CdfError::Incomplete(0.5)));
        assert!(matches!(
            StepCdf::parse("x 1"),
            Err(CdfError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn sample_mean_matches() {
        let c = StepCdf::parse("1000 0.5\n3000 1\n").unwrap();
        assert_eq!(c.mean(), 2000.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let total: u64 = (0..n).map(|_| c.sample(&mut rng)).sum();
        let m = total as f64 / n as f64;
        assert!((m - 2000.0).abs() < 30.0, "{m}");
    }
}
