//! The two-lobby influence game: competition operators, utilities, water-filling
//! best responses, damped best-response iteration and ε-Nash residuals.

mod gradient;
mod input;

use serde::{Deserialize, Serialize};

use crate::dynamics::{adjoint_step, check_weight_function, discounted_utility, horizon, stationary_density};
use crate::error::{Error, Result};
use crate::function::{OpinionFunction, StepFunction};
use crate::kernel::{check_row_stochastic, gamma_mixing, BlockKernel, Kernel};
use crate::partition::IntervalPartition;
use crate::transform::discretize_kernel;

pub use gradient::{projected_gradient_response, GradientResponse};
pub use input::{FunctionInput, GameSpecInput, KernelInput, ProfileInput};

/// Budget slack when checking strategy feasibility.
pub const BUDGET_TOL: f64 = 1e-9;

/// Smallest admissible sensitivity `s₀`.
pub const MIN_SENSITIVITY: f64 = 1e-6;

/// Default damping of the best-response iteration.
pub const DEFAULT_DAMPING: f64 = 0.5;

/// Tolerance on `∫s − b` for water-filling.
pub const WATER_FILL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    /// `(s₁ − s₂ + f₀s₀) / (s₁ + s₂ + s₀)`.
    WeightedContest,
    /// `clip(f₀ + (s₁ − s₂)/s₀)` to `[-1, 1]`.
    AdditiveClipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    /// `+1` for the lobby pushing towards `1`, `−1` for the other.
    pub fn sign(self) -> f64 {
        match self {
            Player::One => 1.0,
            Player::Two => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    pub fn from_number(n: u8) -> Result<Player> {
        match n {
            1 => Ok(Player::One),
            2 => Ok(Player::Two),
            _ => Err(Error::InvalidArgument(format!("player must be 1 or 2, got {n}"))),
        }
    }
}

/// Direction a best response pushes the opinion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Maximizer,
    Minimizer,
}

impl From<Player> for Role {
    fn from(p: Player) -> Role {
        match p {
            Player::One => Role::Maximizer,
            Player::Two => Role::Minimizer,
        }
    }
}

pub fn compete_weighted_at(f0: f64, s1: f64, s2: f64, s0: f64) -> f64 {
    ((s1 - s2 + f0 * s0) / (s1 + s2 + s0)).clamp(-1.0, 1.0)
}

pub fn compete_additive_at(f0: f64, s1: f64, s2: f64, s0: f64) -> f64 {
    (f0 + (s1 - s2) / s0).clamp(-1.0, 1.0)
}

impl Operator {
    pub fn at(self, f0: f64, s1: f64, s2: f64, s0: f64) -> f64 {
        match self {
            Operator::WeightedContest => compete_weighted_at(f0, s1, s2, s0),
            Operator::AdditiveClipped => compete_additive_at(f0, s1, s2, s0),
        }
    }

    /// One-sided derivative of the operator in the direction that helps `player`,
    /// taken with respect to that player's own effort.
    pub fn own_slope(self, f0: f64, s1: f64, s2: f64, s0: f64, player: Player) -> f64 {
        match self {
            Operator::WeightedContest => {
                let d = s1 + s2 + s0;
                match player {
                    Player::One => (2.0 * s2 + s0 * (1.0 - f0)) / (d * d),
                    Player::Two => (2.0 * s1 + s0 * (1.0 + f0)) / (d * d),
                }
            }
            Operator::AdditiveClipped => {
                let z = f0 + (s1 - s2) / s0;
                let open = match player {
                    Player::One => (-1.0..1.0).contains(&z),
                    Player::Two => z > -1.0 && z <= 1.0,
                };
                if open {
                    1.0 / s0
                } else {
                    0.0
                }
            }
        }
    }
}

fn same_partition(items: &[&StepFunction]) -> Result<IntervalPartition> {
    let first = items[0].partition();
    if items.iter().any(|f| !f.partition().same_as(first)) {
        return Err(Error::Shape("game functions live on different partitions".into()));
    }
    Ok(first.clone())
}

fn check_operator_inputs(s0: &StepFunction, s1: &StepFunction, s2: &StepFunction) -> Result<()> {
    if s0.min() <= 0.0 {
        return Err(Error::Contract("sensitivity s0 must be positive".into()));
    }
    if s1.min() < 0.0 || s2.min() < 0.0 {
        return Err(Error::Contract("lobby efforts must be non-negative".into()));
    }
    Ok(())
}

/// Pointwise competition operator on functions sharing one partition.
pub fn compete(
    operator: Operator,
    f0: &OpinionFunction,
    s1: &StepFunction,
    s2: &StepFunction,
    s0: &StepFunction,
) -> Result<OpinionFunction> {
    let partition = same_partition(&[f0.as_step(), s1, s2, s0])?;
    check_operator_inputs(s0, s1, s2)?;
    let values = (0..partition.len())
        .map(|j| operator.at(f0.values()[j], s1.values()[j], s2.values()[j], s0.values()[j]))
        .collect();
    OpinionFunction::new(partition, values)
}

pub fn compete_weighted(
    f0: &OpinionFunction,
    s1: &StepFunction,
    s2: &StepFunction,
    s0: &StepFunction,
) -> Result<OpinionFunction> {
    compete(Operator::WeightedContest, f0, s1, s2, s0)
}

pub fn compete_additive(
    f0: &OpinionFunction,
    s1: &StepFunction,
    s2: &StepFunction,
    s0: &StepFunction,
) -> Result<OpinionFunction> {
    compete(Operator::AdditiveClipped, f0, s1, s2, s0)
}

/// A lobby's effort allocation with its budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    values: StepFunction,
    budget: f64,
}

impl Strategy {
    pub fn new(values: StepFunction, budget: f64) -> Result<Self> {
        if !(budget >= 0.0 && budget.is_finite()) {
            return Err(Error::InvalidArgument(format!("budget {budget} must be non-negative")));
        }
        if values.min() < 0.0 {
            return Err(Error::Contract("strategy takes negative values".into()));
        }
        let spent = values.integral();
        if spent > budget + BUDGET_TOL {
            return Err(Error::Contract(format!("strategy spends {spent} over budget {budget}")));
        }
        Ok(Self { values, budget })
    }

    pub fn zero(partition: IntervalPartition, budget: f64) -> Result<Self> {
        Self::new(StepFunction::constant(partition, 0.0), budget)
    }

    /// Spends the whole budget evenly.
    pub fn uniform(partition: IntervalPartition, budget: f64) -> Result<Self> {
        Self::new(StepFunction::constant(partition, budget), budget)
    }

    pub fn values(&self) -> &StepFunction {
        &self.values
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn spent(&self) -> f64 {
        self.values.integral()
    }

    pub fn refine_to(&self, finer: &IntervalPartition) -> Result<Self> {
        Self::new(self.values.refine_to(finer)?, self.budget)
    }
}

/// Normal form of the game. Every function lives on the kernel's partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    kernel: Kernel,
    operator: Operator,
    f0: OpinionFunction,
    s0: StepFunction,
    psi: [StepFunction; 2],
    budgets: [f64; 2],
    delta: f64,
}

impl GameSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kernel: Kernel,
        operator: Operator,
        f0: OpinionFunction,
        s0: StepFunction,
        psi1: StepFunction,
        psi2: StepFunction,
        budgets: [f64; 2],
        delta: f64,
    ) -> Result<Self> {
        let partition = kernel.partition();
        for f in [f0.as_step(), &s0, &psi1, &psi2] {
            if !f.partition().same_as(&partition) {
                return Err(Error::Shape("game functions must live on the kernel partition".into()));
            }
        }
        let rows = check_row_stochastic(&kernel, kernel.row_tolerance());
        if !rows.ok {
            return Err(Error::Contract(format!(
                "kernel is not row-stochastic (max row defect {:.3e})",
                rows.max_defect
            )));
        }
        if s0.min() < MIN_SENSITIVITY {
            return Err(Error::Contract(format!("sensitivity s0 must be at least {MIN_SENSITIVITY}")));
        }
        check_weight_function(&psi1)?;
        check_weight_function(&psi2)?;
        if budgets.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
            return Err(Error::InvalidArgument("budgets must be non-negative".into()));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!("discount factor {delta} not in (0, 1)")));
        }
        Ok(Self {
            kernel,
            operator,
            f0,
            s0,
            psi: [psi1, psi2],
            budgets,
            delta,
        })
    }

    /// Game with constant `f₀`, `s₀` and `ψ₁ = ψ₂ ≡ 1` on the kernel partition.
    pub fn homogeneous(kernel: Kernel, operator: Operator, f0: f64, s0: f64, budgets: [f64; 2], delta: f64) -> Result<Self> {
        let p = kernel.partition();
        let psi = StepFunction::constant(p.clone(), 1.0);
        Self::new(
            kernel,
            operator,
            OpinionFunction::constant(p.clone(), f0)?,
            StepFunction::constant(p, s0),
            psi.clone(),
            psi,
            budgets,
            delta,
        )
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn operator(&self) -> Operator {
        self.operator
    }

    pub fn f0(&self) -> &OpinionFunction {
        &self.f0
    }

    pub fn s0(&self) -> &StepFunction {
        &self.s0
    }

    pub fn psi(&self, player: Player) -> &StepFunction {
        &self.psi[player.index()]
    }

    pub fn budget(&self, player: Player) -> f64 {
        self.budgets[player.index()]
    }

    pub fn budgets(&self) -> [f64; 2] {
        self.budgets
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Partition carrying the kernel, the game functions and the strategies.
    pub fn partition(&self) -> IntervalPartition {
        self.kernel.partition()
    }

    /// Same game with a different kernel on the same partition.
    pub fn with_kernel(&self, kernel: Kernel) -> Result<Self> {
        Self::new(
            kernel,
            self.operator,
            self.f0.clone(),
            self.s0.clone(),
            self.psi[0].clone(),
            self.psi[1].clone(),
            self.budgets,
            self.delta,
        )
    }

    /// Same game with every function refined onto `finer`.
    pub fn refine_to(&self, finer: &IntervalPartition) -> Result<Self> {
        if finer.same_as(&self.partition()) {
            return Ok(self.clone());
        }
        Self::new(
            self.kernel.to_block().refine_to(finer)?.into(),
            self.operator,
            self.f0.refine_to(finer)?,
            self.s0.refine_to(finer)?,
            self.psi[0].refine_to(finer)?,
            self.psi[1].refine_to(finer)?,
            self.budgets,
            self.delta,
        )
    }

    /// Checks that a strategy is on the game partition and within the player's budget.
    pub fn check_strategy(&self, s: &Strategy, player: Player) -> Result<()> {
        if !s.values.partition().same_as(&self.partition()) {
            return Err(Error::Shape(format!("strategy of player {} is not on the game partition", player.index() + 1)));
        }
        let budget = self.budget(player);
        let spent = s.spent();
        if spent > budget + BUDGET_TOL {
            return Err(Error::Contract(format!(
                "player {} spends {spent} over budget {budget}",
                player.index() + 1
            )));
        }
        Ok(())
    }

    /// Opinion right after lobbying.
    pub fn initial_opinion(&self, s1: &Strategy, s2: &Strategy) -> Result<OpinionFunction> {
        self.check_strategy(s1, Player::One)?;
        self.check_strategy(s2, Player::Two)?;
        compete(self.operator, &self.f0, &s1.values, &s2.values, &self.s0)
    }
}

/// `U_i = (1 − δ) Σ_{t≥1} δ^t u_i(T^t C(f₀, s₁, s₂))`, truncated at `tol`.
pub fn lobby_utility(spec: &GameSpec, s1: &Strategy, s2: &Strategy, player: Player, tol: f64) -> Result<f64> {
    let c = spec.initial_opinion(s1, s2)?;
    discounted_utility(&spec.kernel, &c, spec.psi(player), player.sign(), spec.delta, tol)
}

/// `g_i = (1 − δ) Σ_{t≥1} δ^t (T*)^t ψ_i`, so that `U_i = sign_i · ∫ g_i C`.
pub fn influence_weights(spec: &GameSpec, player: Player, tol: f64) -> Result<StepFunction> {
    let delta = spec.delta;
    let p = spec.partition().weights();
    let mut current = spec.psi(player).values().to_vec();
    let mut total = vec![0.0; current.len()];
    let mut weight = 1.0 - delta;
    for _ in 1..=horizon(delta, tol) {
        let next = adjoint_step(&spec.kernel, &current);
        weight *= delta;
        let settled = next.iter().zip(&current).zip(&p).map(|((a, b), w)| w * (a - b).abs()).sum::<f64>() == 0.0;
        current = next;
        if settled {
            // (1 − δ) Σ_{s ≥ t} δ^s = δ^t
            let tail = weight / (1.0 - delta);
            total.iter_mut().zip(&current).for_each(|(t, c)| *t += tail * c);
            return StepFunction::new(spec.partition(), total);
        }
        total.iter_mut().zip(&current).for_each(|(t, c)| *t += weight * c);
    }
    StepFunction::new(spec.partition(), total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub strategy: Strategy,
    /// Water level `ν`; marginal value `weight/(s + s_eff)²` on the support.
    pub nu: f64,
    /// No cell rewards effort; the zero strategy is returned.
    pub no_gain: bool,
}

/// Water-filling response to the one-player problem with effective opponent
/// `(f_eff, s_eff)` weighted by the density `h`.
///
/// Solves `max Σ_j p_j h_j C_j` over `s ≥ 0, ∫s ≤ b`, where for the maximizer
/// `C_j = (s_j + s_eff_j f_eff_j)/(s_j + s_eff_j)`; the minimizer mirrors it.
pub fn unitype_best_response(
    h: &StepFunction,
    f_eff: &StepFunction,
    s_eff: &StepFunction,
    budget: f64,
    role: Role,
) -> Result<BestResponse> {
    let partition = same_partition(&[h, f_eff, s_eff])?;
    if h.min() < 0.0 {
        return Err(Error::InvalidArgument("density h must be non-negative".into()));
    }
    if s_eff.min() <= 0.0 {
        return Err(Error::InvalidArgument("effective sensitivity must be positive".into()));
    }
    if f_eff.min() < -1.0 - 1e-9 || f_eff.max() > 1.0 + 1e-9 {
        return Err(Error::InvalidArgument("effective opinion outside [-1, 1]".into()));
    }
    if !(budget >= 0.0 && budget.is_finite()) {
        return Err(Error::InvalidArgument(format!("budget {budget} must be non-negative")));
    }
    let weight: Vec<f64> = (0..partition.len())
        .map(|j| {
            let gap = match role {
                Role::Maximizer => 1.0 - f_eff.values()[j],
                Role::Minimizer => 1.0 + f_eff.values()[j],
            };
            (h.values()[j] * s_eff.values()[j] * gap).max(0.0)
        })
        .collect();
    let (values, nu, no_gain) = water_fill(&partition.weights(), &weight, s_eff.values(), budget);
    Ok(BestResponse {
        strategy: Strategy::new(StepFunction::new(partition, values)?, budget)?,
        nu,
        no_gain,
    })
}

fn allocation(p: &[f64], weight: &[f64], sigma: &[f64], nu: f64) -> (Vec<f64>, f64) {
    let s: Vec<f64> = weight
        .iter()
        .zip(sigma)
        .map(|(w, sg)| ((w / nu).sqrt() - sg).max(0.0))
        .collect();
    let spent = s.iter().zip(p).map(|(s, p)| s * p).sum();
    (s, spent)
}

/// Returns `(s, ν, no_gain)`.
fn water_fill(p: &[f64], weight: &[f64], sigma: &[f64], budget: f64) -> (Vec<f64>, f64, bool) {
    let n = p.len();
    let nu_high = (0..n)
        .filter(|&j| p[j] > 0.0)
        .map(|j| weight[j] / (sigma[j] * sigma[j]))
        .fold(0.0, f64::max);
    if nu_high <= 0.0 {
        return (vec![0.0; n], 0.0, true);
    }
    if budget == 0.0 {
        return (vec![0.0; n], nu_high, false);
    }
    let mut nu_low = nu_high;
    while allocation(p, weight, sigma, nu_low).1 < budget {
        nu_low /= 4.0;
    }
    let mut hi = nu_high;
    let mut lo = nu_low;
    for _ in 0..400 {
        let mid = (lo * hi).sqrt();
        let spent = allocation(p, weight, sigma, mid).1;
        if (spent - budget).abs() <= WATER_FILL_TOL * budget.max(1.0) * 1e-2 {
            lo = mid;
            hi = mid;
            break;
        }
        if spent > budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    let nu = (lo * hi).sqrt();
    // closed form for the support found by bisection: 1/√ν = (b + Σ pσ) / Σ p√w
    let support: Vec<usize> = (0..n)
        .filter(|&j| p[j] > 0.0 && weight[j] / (sigma[j] * sigma[j]) >= nu)
        .collect();
    let num: f64 = budget + support.iter().map(|&j| p[j] * sigma[j]).sum::<f64>();
    let den: f64 = support.iter().map(|&j| p[j] * weight[j].sqrt()).sum();
    if den > 0.0 {
        let exact = (den / num).powi(2);
        let (s, spent) = allocation(p, weight, sigma, exact);
        let consistent = (0..n).all(|j| support.contains(&j) || s[j] == 0.0);
        if consistent && (spent - budget).abs() <= WATER_FILL_TOL {
            return (s, exact, false);
        }
    }
    let (s, _) = allocation(p, weight, sigma, nu);
    (s, nu, false)
}

/// Effective one-player problem for `player` facing `s_opponent`, in the
/// game's orientation: `C = (s + s_eff f_eff)/(s + s_eff)` for player 1 and
/// `C = (−s + s_eff f_eff)/(s + s_eff)` for player 2.
pub fn two_player_transform(
    f0: &OpinionFunction,
    s0: &StepFunction,
    s_opponent: &StepFunction,
    player: Player,
) -> Result<(StepFunction, StepFunction)> {
    let partition = same_partition(&[f0.as_step(), s0, s_opponent])?;
    check_operator_inputs(s0, s_opponent, s_opponent)?;
    let opp_sign = -player.sign();
    let mut f_eff = Vec::with_capacity(partition.len());
    let mut s_eff = Vec::with_capacity(partition.len());
    for j in 0..partition.len() {
        let (f, s, o) = (f0.values()[j], s0.values()[j], s_opponent.values()[j]);
        let total = o + s;
        s_eff.push(total);
        f_eff.push(if o == 0.0 { f } else { ((opp_sign * o + s * f) / total).clamp(-1.0, 1.0) });
    }
    Ok((StepFunction::new(partition.clone(), f_eff)?, StepFunction::new(partition, s_eff)?))
}

/// Exact best response for the weighted contest on any kernel: the utility is
/// `sign · ∫ g C` with the influence weights `g`, which water-filling maximizes.
pub fn best_response(spec: &GameSpec, opponent: &Strategy, player: Player, tol: f64) -> Result<BestResponse> {
    let g = influence_weights(spec, player, tol)?;
    best_response_with_weights(spec, &g, opponent, player)
}

fn best_response_with_weights(spec: &GameSpec, g: &StepFunction, opponent: &Strategy, player: Player) -> Result<BestResponse> {
    if spec.operator != Operator::WeightedContest {
        return Err(Error::NotApplicable(
            "closed-form best responses exist only for the weighted contest".into(),
        ));
    }
    spec.check_strategy(opponent, player.other())?;
    let (f_eff, s_eff) = two_player_transform(&spec.f0, &spec.s0, &opponent.values, player)?;
    unitype_best_response(g, &f_eff, &s_eff, spec.budget(player), player.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub damping: f64,
    pub max_iter: usize,
    /// L¹ movement below which the iteration stops.
    pub tol: f64,
    /// Truncation tolerance of discounted sums.
    pub series_tol: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            damping: DEFAULT_DAMPING,
            max_iter: 10_000,
            tol: 1e-10,
            series_tol: 1e-13,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub partition: IntervalPartition,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub utilities: [f64; 2],
    pub residuals: [f64; 2],
    /// Residuals are exact suprema rather than gradient-ascent lower bounds.
    pub residuals_exact: bool,
    pub iterations: usize,
    pub converged: bool,
    /// L¹ movement of the last iteration (sum over both players).
    pub movement: f64,
}

impl EquilibriumReport {
    pub fn strategies(&self, spec: &GameSpec) -> Result<(Strategy, Strategy)> {
        Ok((
            Strategy::new(StepFunction::new(self.partition.clone(), self.s1.clone())?, spec.budget(Player::One))?,
            Strategy::new(StepFunction::new(self.partition.clone(), self.s2.clone())?, spec.budget(Player::Two))?,
        ))
    }
}

fn blend(old: &Strategy, new: &Strategy, lambda: f64) -> Result<(Strategy, f64)> {
    let values = old.values.zip_with(&new.values, |a, b| ((1.0 - lambda) * a + lambda * b).max(0.0));
    let moved = values.l1_distance(&old.values);
    Ok((Strategy::new(values, old.budget)?, moved))
}

/// Damped simultaneous best-response iteration for the weighted contest.
///
/// Works on any kernel: best responses are exact through the influence weights.
pub fn solve_nash(spec: &GameSpec, opts: &SolverOptions) -> Result<EquilibriumReport> {
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::InvalidArgument(format!("damping {} not in (0, 1]", opts.damping)));
    }
    if spec.operator != Operator::WeightedContest {
        return Err(Error::NotApplicable("the best-response solver needs the weighted contest".into()));
    }
    let partition = spec.partition();
    let g = [
        influence_weights(spec, Player::One, opts.series_tol)?,
        influence_weights(spec, Player::Two, opts.series_tol)?,
    ];
    let mut s1 = Strategy::uniform(partition.clone(), spec.budget(Player::One))?;
    let mut s2 = Strategy::uniform(partition.clone(), spec.budget(Player::Two))?;
    let mut iterations = 0;
    let mut movement = f64::INFINITY;
    while iterations < opts.max_iter {
        let br1 = best_response_with_weights(spec, &g[0], &s2, Player::One)?;
        let br2 = best_response_with_weights(spec, &g[1], &s1, Player::Two)?;
        let (n1, m1) = blend(&s1, &br1.strategy, opts.damping)?;
        let (n2, m2) = blend(&s2, &br2.strategy, opts.damping)?;
        s1 = n1;
        s2 = n2;
        iterations += 1;
        movement = m1 + m2;
        if m1 < opts.tol && m2 < opts.tol {
            break;
        }
    }
    let converged = movement.is_finite() && iterations > 0 && movement < 2.0 * opts.tol;
    report(spec, s1, s2, iterations, converged, movement, opts)
}

fn report(
    spec: &GameSpec,
    s1: Strategy,
    s2: Strategy,
    iterations: usize,
    converged: bool,
    movement: f64,
    opts: &SolverOptions,
) -> Result<EquilibriumReport> {
    let ropts = ResidualOptions {
        series_tol: opts.series_tol,
        seed: opts.seed,
        ..ResidualOptions::default()
    };
    let r1 = epsilon_residual(spec, &s1, &s2, Player::One, &ropts)?;
    let r2 = epsilon_residual(spec, &s1, &s2, Player::Two, &ropts)?;
    Ok(EquilibriumReport {
        partition: spec.partition(),
        s1: s1.values.values().to_vec(),
        s2: s2.values.values().to_vec(),
        utilities: [r1.utility, r2.utility],
        residuals: [r1.epsilon, r2.epsilon],
        residuals_exact: r1.exact && r2.exact,
        iterations,
        converged,
        movement,
    })
}

/// [`solve_nash`] restricted to uni-type kernels.
pub fn solve_unitype_nash(spec: &GameSpec, opts: &SolverOptions) -> Result<EquilibriumReport> {
    if spec.kernel.unitype_density(1e-12).is_none() {
        return Err(Error::NotApplicable(
            "kernel is not uni-type; reduce it first or use the general solver".into(),
        ));
    }
    solve_nash(spec, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualOptions {
    pub series_tol: f64,
    /// Number of projected-gradient starts.
    pub starts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        Self {
            series_tol: 1e-13,
            starts: 8,
            max_iter: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `max(0, sup U_i(s', s_{−i}) − U_i(s_i, s_{−i}))`.
    pub epsilon: f64,
    /// The supremum is exact; otherwise `epsilon` is a lower bound.
    pub exact: bool,
    /// Convergence flag of the optimizer behind the supremum.
    pub converged: bool,
    pub utility: f64,
    pub best_utility: f64,
}

/// ε-Nash residual of `player` in the profile `(s1, s2)`.
pub fn epsilon_residual(
    spec: &GameSpec,
    s1: &Strategy,
    s2: &Strategy,
    player: Player,
    opts: &ResidualOptions,
) -> Result<ResidualReport> {
    let utility = lobby_utility(spec, s1, s2, player, opts.series_tol)?;
    let (own, opponent) = match player {
        Player::One => (s1, s2),
        Player::Two => (s2, s1),
    };
    let (candidate, exact, converged) = match spec.operator {
        Operator::WeightedContest => {
            let br = best_response(spec, opponent, player, opts.series_tol)?;
            (br.strategy, true, true)
        }
        Operator::AdditiveClipped => {
            let g = influence_weights(spec, player, opts.series_tol)?;
            let r = projected_gradient_response(spec, &g, own, opponent, player, opts)?;
            (r.strategy, false, r.converged)
        }
    };
    let best_utility = match player {
        Player::One => lobby_utility(spec, &candidate, s2, player, opts.series_tol)?,
        Player::Two => lobby_utility(spec, s1, &candidate, player, opts.series_tol)?,
    }
    .max(utility);
    Ok(ResidualReport {
        epsilon: (best_utility - utility).max(0.0),
        exact,
        converged,
        utility,
        best_utility,
    })
}

/// Replaces the kernel by its block averages over `V`; the game functions are
/// kept and, if `V` is not coarser than the game partition, refined onto the
/// common refinement.
pub fn discretize_game(spec: &GameSpec, target: &IntervalPartition) -> Result<GameSpec> {
    let discretized = discretize_kernel(&spec.kernel, target)?.kernel;
    let carrier = spec.partition().common_refinement(discretized.partition());
    let refined = spec.refine_to(&carrier)?;
    refined.with_kernel(discretized.refine_to(&carrier)?.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitypeReduction {
    pub spec: GameSpec,
    /// Bound on `|U_i^W − U_i^h|` for every profile and player.
    pub gap: f64,
    pub gamma: f64,
    pub rho: f64,
}

/// Replaces `W` by the uni-type kernel of its stationary density.
///
/// The gap follows from `sup|f_t − f*| ≤ 2ρ^t`:
/// `(1 − δ) Σ_{t≥1} δ^t 2ρ^t = 2(1 − δ)δρ/(1 − δρ)`, plus the error of the
/// computed density.
pub fn reduce_to_unitype(spec: &GameSpec, tol: f64) -> Result<UnitypeReduction> {
    let gamma = gamma_mixing(&spec.kernel);
    if spec.kernel.unitype_density(1e-12).is_some() {
        return Ok(UnitypeReduction {
            spec: spec.clone(),
            gap: 0.0,
            gamma,
            rho: 1.0 - gamma,
        });
    }
    if gamma <= 0.0 {
        return Err(Error::NotApplicable("kernel is not γ-mixing (γ = 0)".into()));
    }
    let stationary = stationary_density(&spec.kernel, tol, 1_000_000)?;
    if !stationary.converged {
        return Err(Error::Domain("stationary density did not converge".into()));
    }
    let rho = 1.0 - gamma;
    let delta = spec.delta;
    let envelope = 2.0 * (1.0 - delta) * delta * rho / (1.0 - delta * rho);
    let density_error = if gamma < 1.0 { stationary.residual * rho / gamma } else { 0.0 };
    let kernel: Kernel = BlockKernel::unitype(&stationary.density)?.into();
    Ok(UnitypeReduction {
        spec: spec.with_kernel(kernel)?,
        gap: envelope + delta * density_error,
        gamma,
        rho,
    })
}
