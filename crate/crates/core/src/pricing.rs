//! Reported prices and the cost of buying a basket out of a pool.

use serde::Serialize;

use crate::arbitrage::PriceVector;
use crate::error::{CfmmError, Result};
use crate::frontier::{self, CoinCost};
use crate::pool::{PoolSpec, Reserves};

/// Gradient of ψ at the reserves, normalized so the numéraire coin costs 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportedPrice {
    pub raw_gradient: Vec<f64>,
    pub numeraire: usize,
    pub normalized: Vec<f64>,
}

impl ReportedPrice {
    /// Express the same prices against another numéraire.
    pub fn renormalize(&self, numeraire: usize) -> Result<ReportedPrice> {
        normalize(self.raw_gradient.clone(), numeraire)
    }

    /// No-arbitrage interval `[γ·p, p/γ]` of each normalized price. The
    /// numéraire's own band is `[1, 1]`.
    pub fn fee_band(&self, gamma: f64) -> Vec<(f64, f64)> {
        self.normalized
            .iter()
            .enumerate()
            .map(|(i, p)| if i == self.numeraire { (1.0, 1.0) } else { (gamma * p, p / gamma) })
            .collect()
    }
}

fn normalize(raw: Vec<f64>, numeraire: usize) -> Result<ReportedPrice> {
    if numeraire >= raw.len() {
        return Err(CfmmError::InvalidInput(format!(
            "numeraire index {numeraire} out of range for {} coins",
            raw.len()
        )));
    }
    let base = raw[numeraire];
    let mut normalized: Vec<f64> = raw.iter().map(|g| g / base).collect();
    normalized[numeraire] = 1.0;
    Ok(ReportedPrice { raw_gradient: raw, numeraire, normalized })
}

/// `∇ψ(r) / ∂ψ/∂r_numeraire`.
pub fn reported_price(spec: &PoolSpec, r: &Reserves, numeraire: usize) -> Result<ReportedPrice> {
    normalize(spec.grad_psi(r)?, numeraire)
}

/// Cheapest input basket that buys `output` from the pool at reserves `r`,
/// together with its cost `cᵀΔ`.
pub fn cheapest_input(spec: &PoolSpec, r: &Reserves, c: &PriceVector, output: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = spec.n();
    c.check_len(n)?;
    if r.len() != n || output.len() != n {
        return Err(CfmmError::InvalidInput(format!(
            "expected {n} reserves and outputs, got {} and {}",
            r.len(),
            output.len()
        )));
    }
    if let Some((i, v)) = output.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
        return Err(CfmmError::InvalidInput(format!("output {i} must be finite and nonnegative, got {v}")));
    }
    if output.iter().all(|v| *v == 0.0) {
        return Ok((vec![0.0; n], 0.0));
    }
    let at = spec.with_reserves(r.clone())?;
    let g = at.gamma();
    let rs = r.as_slice();
    // The fee-adjusted point x = R + γΔ − Λ must stay at or above R − Λ in
    // every coin since Δ ≥ 0.
    let costs: Vec<CoinCost> = (0..n)
        .map(|i| {
            let floor = rs[i] - output[i];
            CoinCost::Linear {
                kink: rs[i],
                below: c.as_slice()[i],
                above: c.as_slice()[i] / g,
                floor: (floor > 0.0).then_some(floor),
            }
        })
        .collect();
    let sol = frontier::solve(at.potential(), &costs, at.level().value())?;
    let delta: Vec<f64> = (0..n)
        .map(|i| {
            let shift = sol.x[i] - rs[i];
            let s = if shift > 0.0 { shift / g } else { shift };
            (s + output[i]).max(0.0)
        })
        .collect();
    let cost = c.dot(&delta);
    Ok((delta, cost))
}

/// `min cᵀΔ` such that the pool hands over `output` in exchange for `Δ`.
pub fn cost_of_output(spec: &PoolSpec, r: &Reserves, c: &PriceVector, output: &[f64]) -> Result<f64> {
    cheapest_input(spec, r, c, output).map(|(_, cost)| cost)
}

/// `cost_of_output(r, c, ε·direction) / ε`, an estimate of the marginal price
/// of `direction`. Only defined for pools without fees.
pub fn marginal_price_estimate(
    spec: &PoolSpec,
    r: &Reserves,
    c: &PriceVector,
    direction: &[f64],
    eps: f64,
) -> Result<f64> {
    if spec.gamma() != 1.0 {
        return Err(CfmmError::Unsupported(
            "marginal price estimates are only defined for pools without fees".into(),
        ));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(CfmmError::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    if direction.iter().all(|v| *v == 0.0) {
        return Err(CfmmError::InvalidInput("direction is zero".into()));
    }
    let out: Vec<f64> = direction.iter().map(|d| d * eps).collect();
    Ok(cost_of_output(spec, r, c, &out)? / eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn res(r: &[f64]) -> Reserves {
        Reserves::new(r.to_vec()).unwrap()
    }

    #[test]
    fn reported_price_examples() {
        let p = PoolSpec::product(vec![4.0, 1.0], 1.0).unwrap();
        let rp = reported_price(&p, &res(&[4.0, 1.0]), 0).unwrap();
        assert_eq!(rp.normalized, vec![1.0, 4.0]);
        let rp = rp.renormalize(1).unwrap();
        assert_eq!(rp.normalized, vec![0.25, 1.0]);

        let c = PoolSpec::curve(vec![1.0, 1.0], 1.0, 1.0, 1.0).unwrap();
        let rp = reported_price(&c, &res(&[1.0, 1.0]), 0).unwrap();
        assert_eq!(rp.normalized, vec![1.0, 1.0]);

        assert!(reported_price(&p, &res(&[4.0, 1.0]), 2).is_err());
    }

    #[test]
    fn fee_band_brackets_price() {
        let p = PoolSpec::product(vec![4.0, 1.0], 0.997).unwrap();
        let rp = reported_price(&p, &res(&[4.0, 1.0]), 0).unwrap();
        let band = rp.fee_band(p.gamma());
        assert_eq!(band[0], (1.0, 1.0));
        assert_relative_eq!(band[1].0, 4.0 * 0.997);
        assert_relative_eq!(band[1].1, 4.0 / 0.997);
    }

    #[test]
    fn cost_of_output_product() {
        let p = PoolSpec::product(vec![4.0, 4.0], 1.0).unwrap();
        let c = PriceVector::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(cost_of_output(&p, p.reserves(), &c, &[0.0, 0.0]).unwrap(), 0.0);
        // paying coin 1 for coin 1 beats routing through coin 0
        let (delta, cost) = cheapest_input(&p, p.reserves(), &c, &[0.0, 2.0]).unwrap();
        assert_relative_eq!(cost, 2.0, max_relative = 1e-12);
        assert!(delta[0].abs() < 1e-12);
        // at c = (1, 4) routing through coin 0 is cheaper: Δ = (4, 0)
        let c = PriceVector::new(vec![1.0, 4.0]).unwrap();
        let cost = cost_of_output(&p, p.reserves(), &c, &[0.0, 2.0]).unwrap();
        assert_relative_eq!(cost, 4.0, max_relative = 1e-12);
        // paying in kind caps the cost, even when nearly draining the pool
        let out = 4.0 - 1e-6;
        let cost = cost_of_output(&p, p.reserves(), &c, &[0.0, out]).unwrap();
        assert!(cost <= 4.0 * out * (1.0 + 1e-12) && cost > 4.0);
    }

    #[test]
    fn cheap_coin_is_bought_back() {
        // Asking for a basket containing the cheap coin: cost must not go
        // negative even though the cheap coin is also the natural input.
        let p = PoolSpec::product(vec![4.0, 4.0], 1.0).unwrap();
        let c = PriceVector::new(vec![1.0, 1.0]).unwrap();
        let (delta, cost) = cheapest_input(&p, p.reserves(), &c, &[1.0, 1.0]).unwrap();
        assert!(delta.iter().all(|d| *d >= 0.0));
        assert_relative_eq!(cost, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn marginal_price_matches_reported_price() {
        let p = PoolSpec::product(vec![4.0, 1.0], 1.0).unwrap();
        let c = PriceVector::new(vec![1.0, 4.0]).unwrap();
        let est = marginal_price_estimate(&p, p.reserves(), &c, &[0.0, 1.0], 1e-6).unwrap();
        assert_relative_eq!(est, 4.0, max_relative = 1e-5);
        let double = marginal_price_estimate(&p, p.reserves(), &c, &[0.0, 2.0], 1e-6).unwrap();
        assert_relative_eq!(double, 2.0 * est, max_relative = 1e-9);
        let sq = PoolSpec::product(vec![4.0, 4.0], 1.0).unwrap();
        let ones = PriceVector::new(vec![1.0, 1.0]).unwrap();
        let est = marginal_price_estimate(&sq, sq.reserves(), &ones, &[0.0, 1.0], 1e-6).unwrap();
        assert_relative_eq!(est, 1.0, max_relative = 1e-4);
        let fee = PoolSpec::product(vec![4.0, 1.0], 0.997).unwrap();
        assert!(matches!(
            marginal_price_estimate(&fee, fee.reserves(), &c, &[0.0, 1.0], 1e-6),
            Err(CfmmError::Unsupported(_))
        ));
    }
}
