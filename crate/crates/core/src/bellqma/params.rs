use crate::error::{Error, Result};

/// Consistency-test precision `p`, copies per prover `k`, Step-5 repetitions
/// `q` and fractional bits `α` of the classical register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProtocolParams {
    pub p: u64,
    pub k: u64,
    pub q: u64,
    pub alpha: u32,
}

impl ProtocolParams {
    pub fn new(p: u64, k: u64, q: u64, alpha: u32) -> Result<Self> {
        if p == 0 || k == 0 || q == 0 || alpha == 0 {
            return Err(Error::InvalidArgument("protocol parameters must be positive"));
        }
        Ok(Self { p, k, q, alpha })
    }

    /// Replaces `p` and recomputes `k = 5p³`.
    pub fn with_p(self, p: u64) -> Result<Self> {
        Ok(Self { p, k: copies_for(p)?, ..self })
    }
}

fn copies_for(p: u64) -> Result<u64> {
    p.checked_mul(p)
        .and_then(|x| x.checked_mul(p))
        .and_then(|x| x.checked_mul(5))
        .filter(|&k| k <= i64::MAX as u64)
        .ok_or(Error::Overflow("k = 5p³ exceeds 2^63 - 1"))
}

/// `p = 20mr`, `k = 5p³`, `q = 50n`, `α = 20nmr`.
pub fn derive_params(n: u64, m: u64, r: u64) -> Result<ProtocolParams> {
    if n == 0 || m == 0 || r == 0 {
        return Err(Error::InvalidArgument("n, m and r must be at least 1"));
    }
    let overflow = Error::Overflow("protocol parameter");
    let mr = m.checked_mul(r).ok_or(overflow.clone())?;
    let p = mr.checked_mul(20).ok_or(overflow.clone())?;
    let k = copies_for(p)?;
    let q = n.checked_mul(50).ok_or(overflow.clone())?;
    let alpha = mr.checked_mul(n).and_then(|x| x.checked_mul(20)).and_then(|x| u32::try_from(x).ok()).ok_or(overflow)?;
    Ok(ProtocolParams { p, k, q, alpha })
}

/// `1 - 2exp(-5p/4) - 2exp(-0.02q)`.
pub fn completeness_bound(params: &ProtocolParams) -> f64 {
    1.0 - 2.0 * libm::exp(-1.25 * params.p as f64) - 2.0 * libm::exp(-0.02 * params.q as f64)
}

/// `1 - 1/(40 m² r²)`.
pub fn soundness_bound(m: usize, r: usize) -> f64 {
    let mr = (m * r) as f64;
    1.0 - 1.0 / (40.0 * mr * mr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_values() {
        assert_eq!(derive_params(4, 2, 3).unwrap(), ProtocolParams { p: 120, k: 8_640_000, q: 200, alpha: 480 });
        assert_eq!(derive_params(1, 1, 1).unwrap(), ProtocolParams { p: 20, k: 40_000, q: 50, alpha: 20 });
        assert_eq!(derive_params(2, 1, 2).unwrap(), ProtocolParams { p: 40, k: 320_000, q: 100, alpha: 80 });
    }

    #[test]
    fn overflow_and_zero_inputs() {
        assert!(derive_params(0, 1, 1).is_err());
        assert!(matches!(derive_params(1, 1 << 20, 1 << 20), Err(Error::Overflow(_))));
    }

    #[test]
    fn override_p_recomputes_k() {
        let p = derive_params(1, 2, 3).unwrap().with_p(20).unwrap();
        assert_eq!((p.p, p.k), (20, 40_000));
    }

    #[test]
    fn bounds() {
        assert!((soundness_bound(2, 3) - (1.0 - 1.0 / 1440.0)).abs() < 1e-15);
        let p = ProtocolParams::new(20, 40_000, 50, 120).unwrap();
        assert!(completeness_bound(&p) > 0.26 && completeness_bound(&p) < 0.27);
    }
}
