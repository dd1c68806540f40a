use crate::error::{Error, Result};

use super::quadrature::QuadratureGrid;

fn log_sum_exp_weighted(grid: &QuadratureGrid, logs: &[f64]) -> f64 {
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = (0..grid.len())
        .map(|i| grid.weight(i) * (logs[i] - m).exp())
        .sum();
    m + s.ln()
}

/// The Gibbs density `∝ e^{-γ(R(w) + λ‖w‖²)}`, normalized on the grid.
pub fn gibbs_density_on_grid(
    grid: &QuadratureGrid,
    risk: &dyn Fn(&[f64]) -> f64,
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    let logs: Vec<f64> = (0..grid.len())
        .map(|i| {
            let w = grid.node(i);
            -gamma * (risk(w) + lambda * w.iter().map(|x| x * x).sum::<f64>())
        })
        .collect();
    let lz = log_sum_exp_weighted(grid, &logs);
    logs.iter().map(|l| (l - lz).exp()).collect()
}

/// `E_p[R] + (1/γ) KL(p ‖ q)` by quadrature, where the reference `q ∝ e^{-γλ‖w‖²}`
/// (a Gaussian of precision `2γλ`, uniform when `λ = 0`) is normalized on the
/// same grid. Uses `0·ln 0 = 0`. Over grid densities the minimizer is the
/// Gibbs density of [`gibbs_density_on_grid`].
pub fn irm_objective(
    density: &[f64],
    grid: &QuadratureGrid,
    risk: &dyn Fn(&[f64]) -> f64,
    gamma: f64,
    lambda: f64,
) -> Result<f64> {
    if density.len() != grid.len() {
        return Err(Error::Argument("density and grid sizes differ".into()));
    }
    if !(gamma > 0.0 && gamma.is_finite()) || !(lambda >= 0.0) {
        return Err(Error::Argument(format!(
            "need gamma > 0 and lambda >= 0 (got {gamma}, {lambda})"
        )));
    }
    if density.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::Argument(
            "density must be finite and nonnegative".into(),
        ));
    }
    let mass: f64 = (0..grid.len()).map(|i| grid.weight(i) * density[i]).sum();
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::Argument(format!(
            "density integrates to {mass}, not 1"
        )));
    }
    let log_ref: Vec<f64> = (0..grid.len())
        .map(|i| -gamma * lambda * grid.node(i).iter().map(|x| x * x).sum::<f64>())
        .collect();
    let lz = log_sum_exp_weighted(grid, &log_ref);
    let mut expected = 0.0;
    let mut kl = 0.0;
    for i in 0..grid.len() {
        let p = density[i];
        if p == 0.0 {
            continue;
        }
        let w = grid.weight(i);
        expected += w * p * risk(grid.node(i));
        kl += w * p * (p.ln() - (log_ref[i] - lz));
    }
    Ok(expected + kl / gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Rule1d;

    fn grid() -> QuadratureGrid {
        QuadratureGrid::tensor(&[Rule1d::composite(-2.0, 2.0, &[], 0.05, 8).unwrap()])
    }

    fn dw(w: &[f64]) -> f64 {
        (w[0] * w[0] - 1.0).powi(2)
    }

    #[test]
    fn tilted_density_is_worse() {
        let g = grid();
        let p = gibbs_density_on_grid(&g, &dw, 5.0, 0.2);
        let best = irm_objective(&p, &g, &dw, 5.0, 0.2).unwrap();
        let mut tilted: Vec<f64> = (0..g.len())
            .map(|i| p[i] * (0.1 * g.node(i)[0]).exp())
            .collect();
        let s: f64 = (0..g.len()).map(|i| g.weight(i) * tilted[i]).sum();
        tilted.iter_mut().for_each(|v| *v /= s);
        assert!(irm_objective(&tilted, &g, &dw, 5.0, 0.2).unwrap() > best);
    }

    #[test]
    fn unnormalized_density_rejected() {
        let g = grid();
        let p = vec![1.0; g.len()];
        assert!(matches!(
            irm_objective(&p, &g, &dw, 1.0, 0.1),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn hot_limit_approaches_reference() {
        let g = grid();
        let gap = |gamma: f64| {
            let p = gibbs_density_on_grid(&g, &dw, gamma, 0.5);
            let q = gibbs_density_on_grid(&g, &|_| 0.0, gamma, 0.5);
            irm_objective(&q, &g, &dw, gamma, 0.5).unwrap()
                - irm_objective(&p, &g, &dw, gamma, 0.5).unwrap()
        };
        let (a, b) = (gap(1e-1), gap(1e-3));
        assert!(a > 0.0 && b > 0.0 && b < a / 10.0);
    }
}
