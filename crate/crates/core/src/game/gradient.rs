//! Projected-gradient best responses for games without a closed form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GameSpec, Player, ResidualOptions, Strategy};
use crate::error::Result;
use crate::function::StepFunction;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientResponse {
    pub strategy: Strategy,
    /// `sign · Σ_j p_j g_j C_j` at the returned strategy.
    pub value: f64,
    pub converged: bool,
}

/// Multi-start projected-gradient ascent of `sign · ∫ g C` over
/// `{s ≥ 0, ∫s ≤ b}`.
///
/// Starts are the current strategy, the even split and random concentrated
/// allocations drawn from `opts.seed`; the best final value wins, ties going
/// to the earlier start.
pub fn projected_gradient_response(
    spec: &GameSpec,
    g: &StepFunction,
    own: &Strategy,
    opponent: &Strategy,
    player: Player,
    opts: &ResidualOptions,
) -> Result<GradientResponse> {
    let partition = spec.partition();
    let p = partition.weights();
    let budget = spec.budget(player);
    let problem = Problem {
        spec,
        g: g.values(),
        opponent: opponent.values().values(),
        player,
        p: &p,
        budget,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = vec![own.values().values().to_vec(), vec![budget; p.len()]];
    while starts.len() < opts.starts.max(2) {
        let raw: Vec<f64> = (0..p.len()).map(|_| (4.0 * rng.gen::<f64>()).exp() - 1.0).collect();
        let mass: f64 = raw.iter().zip(&p).map(|(r, p)| r * p).sum();
        starts.push(raw.iter().map(|r| r * budget / mass.max(f64::MIN_POSITIVE)).collect());
    }
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    for start in starts {
        let (s, value, converged) = problem.ascend(start, opts.max_iter);
        if best.as_ref().is_none_or(|b| value > b.1) {
            best = Some((s, value, converged));
        }
    }
    let (s, value, converged) = best.expect("at least two starts");
    Ok(GradientResponse {
        strategy: Strategy::new(StepFunction::new(partition, s)?, budget)?,
        value,
        converged,
    })
}

struct Problem<'a> {
    spec: &'a GameSpec,
    g: &'a [f64],
    opponent: &'a [f64],
    player: Player,
    p: &'a [f64],
    budget: f64,
}

impl Problem<'_> {
    fn profile(&self, s: f64, j: usize) -> (f64, f64) {
        match self.player {
            Player::One => (s, self.opponent[j]),
            Player::Two => (self.opponent[j], s),
        }
    }

    fn value(&self, s: &[f64]) -> f64 {
        let op = self.spec.operator();
        let f0 = self.spec.f0().values();
        let s0 = self.spec.s0().values();
        let total: f64 = (0..s.len())
            .map(|j| {
                let (a, b) = self.profile(s[j], j);
                self.p[j] * self.g[j] * op.at(f0[j], a, b, s0[j])
            })
            .sum();
        self.player.sign() * total
    }

    /// Gradient in the `p`-weighted inner product.
    fn gradient(&self, s: &[f64]) -> Vec<f64> {
        let op = self.spec.operator();
        let f0 = self.spec.f0().values();
        let s0 = self.spec.s0().values();
        (0..s.len())
            .map(|j| {
                let (a, b) = self.profile(s[j], j);
                self.g[j] * op.own_slope(f0[j], a, b, s0[j], self.player)
            })
            .collect()
    }

    fn ascend(&self, start: Vec<f64>, max_iter: usize) -> (Vec<f64>, f64, bool) {
        let mut s = project(&start, self.p, self.budget);
        let mut value = self.value(&s);
        let mut step = 1.0;
        for _ in 0..max_iter {
            let grad = self.gradient(&s);
            let mut accepted = None;
            while step > 1e-14 {
                let y: Vec<f64> = s.iter().zip(&grad).map(|(s, g)| s + step * g).collect();
                let next = project(&y, self.p, self.budget);
                let predicted: f64 = (0..s.len()).map(|j| self.p[j] * grad[j] * (next[j] - s[j])).sum();
                let next_value = self.value(&next);
                if next_value >= value + 1e-4 * predicted {
                    accepted = Some((next, next_value, predicted));
                    break;
                }
                step /= 2.0;
            }
            let Some((next, next_value, predicted)) = accepted else {
                return (s, value, true);
            };
            let gain = next_value - value;
            s = next;
            value = next_value;
            if predicted <= 1e-15 * value.abs().max(1.0) || gain <= 1e-15 * value.abs().max(1.0) {
                return (s, value, true);
            }
            step *= 2.0;
        }
        (s, value, false)
    }
}

/// Projection onto `{s ≥ 0, Σ p_j s_j ≤ b}` in the `p`-weighted metric:
/// `s_j = max(0, y_j − τ)` with the smallest admissible `τ ≥ 0`.
pub(crate) fn project(y: &[f64], p: &[f64], budget: f64) -> Vec<f64> {
    let clipped: Vec<f64> = y.iter().map(|v| v.max(0.0)).collect();
    let mass: f64 = clipped.iter().zip(p).map(|(s, p)| s * p).sum();
    if mass <= budget {
        return clipped;
    }
    let mut order: Vec<usize> = (0..y.len()).filter(|&j| y[j] > 0.0).collect();
    order.sort_by(|&a, &b| y[b].total_cmp(&y[a]));
    let (mut weight, mut weighted) = (0.0, 0.0);
    let mut tau = 0.0;
    for (k, &j) in order.iter().enumerate() {
        weight += p[j];
        weighted += p[j] * y[j];
        if weight <= 0.0 {
            continue;
        }
        tau = (weighted - budget) / weight;
        let next = order.get(k + 1).map_or(0.0, |&i| y[i]);
        if tau >= next {
            break;
        }
    }
    y.iter().map(|v| (v - tau).max(0.0)).collect()
}
