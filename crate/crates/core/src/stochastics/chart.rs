use rand::Rng;
use rand_distr::StandardNormal;

use super::PathSample;
use crate::error::{invalid, Result};
use crate::geometry::{ModelSpace, Point};

/// Drift `b` and scalar diffusion factor `σ` (with `σσᵀ = σ²·I = g⁻¹`) of
/// `½Δ` in the chart at `x`. Flat charts have `b = 0`, `σ = 1`; the
/// half-space has `σ = y` and `b = (0, …, 0, (2 − m)y/2)`.
pub fn chart_coefficients(space: &ModelSpace, x: &[f64]) -> (Vec<f64>, f64) {
    let m = x.len();
    match space {
        ModelSpace::Hyperbolic { .. } => {
            let y = x[m - 1];
            let mut b = vec![0.0; m];
            b[m - 1] = (2.0 - m as f64) * y / 2.0;
            (b, y)
        }
        _ => (vec![0.0; m], 1.0),
    }
}

/// Euler–Maruyama walker on the grid `{0, h, 2h, …, t}`; the last step is
/// shortened when `h` does not divide `t`.
#[derive(Debug, Clone)]
pub struct ChartWalker<'a> {
    space: &'a ModelSpace,
    h: f64,
}

/// End of a chart walk; `point` is the last position inside the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartEnd {
    pub alive: bool,
    pub point: Vec<f64>,
    pub zeta: Option<f64>,
}

impl<'a> ChartWalker<'a> {
    pub fn new(space: &'a ModelSpace, h: f64, t: f64) -> Result<Self> {
        space.validate()?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid("h", "step must be positive"));
        }
        if h >= t {
            return Err(invalid("h", format!("step {h} must be smaller than the horizon {t}")));
        }
        Ok(Self { space, h })
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    /// `visit(x, Δs)` is called at the left end of every grid step taken
    /// from inside the domain; `moved(s, x)` after every step that stays inside.
    pub fn walk<R: Rng + ?Sized>(
        &self,
        x0: &[f64],
        t: f64,
        rng: &mut R,
        mut visit: impl FnMut(&[f64], f64) -> Result<()>,
        mut moved: impl FnMut(f64, &[f64]),
    ) -> Result<ChartEnd> {
        self.space.check_point(&Point(x0.to_vec()))?;
        let flat = !matches!(self.space, ModelSpace::Hyperbolic { .. });
        let n_steps = (t / self.h).ceil() as usize;
        let mut x = x0.to_vec();
        let mut next = x.clone();
        for k in 0..n_steps {
            let s0 = k as f64 * self.h;
            let ds = if k + 1 == n_steps { t - s0 } else { self.h };
            visit(&x, ds)?;
            let sq = ds.sqrt();
            if flat {
                for (n, c) in next.iter_mut().zip(&x) {
                    *n = c + sq * rng.sample::<f64, _>(StandardNormal);
                }
            } else {
                let (b, sigma) = chart_coefficients(self.space, &x);
                for i in 0..x.len() {
                    next[i] = x[i] + b[i] * ds + sigma * sq * rng.sample::<f64, _>(StandardNormal);
                }
            }
            let s1 = if k + 1 == n_steps { t } else { s0 + ds };
            if !self.space.contains(&Point(next.clone())) {
                return Ok(ChartEnd { alive: false, point: x, zeta: Some(s1) });
            }
            std::mem::swap(&mut x, &mut next);
            moved(s1, &x);
        }
        Ok(ChartEnd { alive: true, point: x, zeta: None })
    }
}

/// Discrete chart path; killed at the first grid step that leaves the domain.
pub fn sample_path_chart<R: Rng + ?Sized>(space: &ModelSpace, x0: &Point, t: f64, h: f64, rng: &mut R) -> Result<PathSample<Vec<f64>>> {
    let walker = ChartWalker::new(space, h, t)?;
    let mut times = vec![0.0];
    let mut states = vec![x0.0.clone()];
    let end = walker.walk(
        &x0.0,
        t,
        rng,
        |_, _| Ok(()),
        |s, x| {
            times.push(s);
            states.push(x.to_vec());
        },
    )?;
    Ok(PathSample { times, states, alive: end.alive, zeta: end.zeta, horizon: t, accumulated_potential: None, transport: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastics::{path_rng, run_paths, MCEstimate};

    #[test]
    fn euclidean_variance_is_t() {
        let space = ModelSpace::euclidean(1).unwrap();
        let x0 = Point::origin(1);
        let sq = run_paths(100_000, 11, |_, rng| {
            let p = sample_path_chart(&space, &x0, 1.0, 0.25, rng).unwrap();
            p.states.last().unwrap()[0].powi(2)
        });
        let e = MCEstimate::from_samples(&sq, 11);
        assert!(e.agrees_with(1.0, 3.0, 0.0), "{e:?}");
    }

    #[test]
    fn step_must_be_below_horizon() {
        let space = ModelSpace::euclidean(2).unwrap();
        let r = sample_path_chart(&space, &Point::origin(2), 1.0, 1.0, &mut path_rng(0, 0));
        assert!(r.is_err());
    }

    #[test]
    fn grid_ends_at_horizon() {
        let space = ModelSpace::hyperbolic(2).unwrap();
        let p = sample_path_chart(&space, &space.base_point(), 1.0, 0.3, &mut path_rng(0, 0)).unwrap();
        assert_eq!(*p.times.last().unwrap(), 1.0);
        assert!(p.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn half_space_drift() {
        let space = ModelSpace::hyperbolic(3).unwrap();
        let (b, s) = chart_coefficients(&space, &[0.0, 0.0, 2.0]);
        assert_eq!(b, vec![0.0, 0.0, -1.0]);
        assert_eq!(s, 2.0);
    }
}
