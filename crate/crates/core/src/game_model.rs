//! Game instance, strategy spaces, payoffs and expected utilities.
//!
//! The attacker inserts one trojan type; the defender tests for a size-`K`
//! subset of types. A detected trojan `t` pays the defender the fine `F_t`;
//! an undetected one costs it the damage `V_t`. The game is zero-sum, so only
//! the defender's utility matrix is stored.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::weighting::{check_alpha, weight_unchecked};

/// Tolerance on `|Σ p - 1|` for a mixed strategy.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Defender,
    Attacker,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::Defender => Player::Attacker,
            Player::Attacker => Player::Defender,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::Defender => "defender",
            Player::Attacker => "attacker",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trojan {
    pub id: String,
    pub damage: f64,
    pub fine: f64,
}

impl Trojan {
    pub fn new(id: impl Into<String>, damage: f64, fine: f64) -> Self {
        Trojan {
            id: id.into(),
            damage,
            fine,
        }
    }
}

/// A validated game instance: trojan types with damages and fines, and the
/// defender's test budget `K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameSpec {
    trojans: Vec<Trojan>,
    test_budget: usize,
}

/// Damages of the four trojan types in the reference case study.
pub const PAPER_DAMAGES: [f64; 4] = [1.0, 2.0, 4.0, 12.0];
pub const PAPER_TEST_BUDGET: usize = 2;

impl GameSpec {
    pub fn new(trojans: Vec<Trojan>, test_budget: usize) -> Result<Self> {
        let t = trojans.len();
        if t < 2 {
            return Err(Error::InvalidGame(format!("need at least two trojan types, got {t}")));
        }
        if test_budget == 0 || test_budget >= t {
            return Err(Error::InvalidGame(format!(
                "K < T required (1 <= K < T), got K = {test_budget}, T = {t}"
            )));
        }
        for (i, tr) in trojans.iter().enumerate() {
            if tr.id.is_empty() {
                return Err(Error::InvalidGame(format!("trojan #{i} has an empty id")));
            }
            if !(tr.damage.is_finite() && tr.damage > 0.0) {
                return Err(Error::InvalidGame(format!(
                    "damage of `{}` must be positive, got {}",
                    tr.id, tr.damage
                )));
            }
            if !(tr.fine.is_finite() && tr.fine >= 0.0) {
                return Err(Error::InvalidGame(format!(
                    "fine of `{}` must be non-negative, got {}",
                    tr.id, tr.fine
                )));
            }
            if trojans[..i].iter().any(|o| o.id == tr.id) {
                return Err(Error::InvalidGame(format!("duplicate trojan id `{}`", tr.id)));
            }
        }
        Ok(GameSpec {
            trojans,
            test_budget,
        })
    }

    /// Trojans labelled `A`, `B`, ... with one fine shared by every type.
    pub fn with_labels(damages: &[f64], fine: f64, test_budget: usize) -> Result<Self> {
        let trojans = damages
            .iter()
            .enumerate()
            .map(|(i, &v)| Trojan::new(default_label(i), v, fine))
            .collect();
        GameSpec::new(trojans, test_budget)
    }

    /// The four-trojan case study (`V = [1, 2, 4, 12]`, `K = 2`) at a uniform fine.
    pub fn paper_case(fine: f64) -> Result<Self> {
        GameSpec::with_labels(&PAPER_DAMAGES, fine, PAPER_TEST_BUDGET)
    }

    /// Same trojans and budget with every fine replaced by `fine`.
    pub fn with_uniform_fine(&self, fine: f64) -> Result<Self> {
        let trojans = self
            .trojans
            .iter()
            .map(|t| Trojan::new(t.id.clone(), t.damage, fine))
            .collect();
        GameSpec::new(trojans, self.test_budget)
    }

    pub fn trojans(&self) -> &[Trojan] {
        &self.trojans
    }

    pub fn num_trojans(&self) -> usize {
        self.trojans.len()
    }

    pub fn test_budget(&self) -> usize {
        self.test_budget
    }

    pub fn damages(&self) -> Vec<f64> {
        self.trojans.iter().map(|t| t.damage).collect()
    }

    pub fn fines(&self) -> Vec<f64> {
        self.trojans.iter().map(|t| t.fine).collect()
    }

    /// `Some(F)` when every trojan carries the same fine.
    pub fn uniform_fine(&self) -> Option<f64> {
        let f = self.trojans[0].fine;
        self.trojans.iter().all(|t| t.fine == f).then_some(f)
    }

    pub fn strategy_space(&self) -> StrategySpace {
        enumerate_spaces(self)
    }

    pub fn payoff_matrix(&self) -> PayoffMatrix {
        build_payoff_matrix(self)
    }

    /// Index of the trojan with the largest damage (first on ties).
    pub fn most_damaging_trojan(&self) -> usize {
        argmax_first(&self.damages())
    }

    /// Index of the defender subset made of the `K` most damaging trojans.
    pub fn most_protective_subset(&self) -> usize {
        let mut order: Vec<usize> = (0..self.num_trojans()).collect();
        order.sort_by(|&a, &b| {
            self.trojans[b]
                .damage
                .total_cmp(&self.trojans[a].damage)
                .then(a.cmp(&b))
        });
        let mut members = order[..self.test_budget].to_vec();
        members.sort_unstable();
        self.strategy_space()
            .defender
            .iter()
            .position(|s| s.members == members)
            .expect("every K-subset is enumerated")
    }
}

fn default_label(i: usize) -> String {
    if i < 26 {
        ((b'A' + i as u8) as char).to_string()
    } else {
        format!("T{}", i + 1)
    }
}

pub(crate) fn argmax_first(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// A defender pure strategy: the sorted indices of the trojan types it tests.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DefenderSubset {
    pub members: Vec<usize>,
    pub label: String,
}

impl DefenderSubset {
    pub fn contains(&self, trojan: usize) -> bool {
        self.members.binary_search(&trojan).is_ok()
    }
}

/// Pure strategy lists for both players.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategySpace {
    pub attacker: Vec<String>,
    pub defender: Vec<DefenderSubset>,
}

impl StrategySpace {
    pub fn num_attacker(&self) -> usize {
        self.attacker.len()
    }

    pub fn num_defender(&self) -> usize {
        self.defender.len()
    }

    pub fn attacker_index(&self, label: &str) -> Result<usize> {
        self.attacker
            .iter()
            .position(|a| a == label)
            .ok_or_else(|| Error::UnknownStrategy(label.to_string()))
    }

    pub fn defender_index(&self, label: &str) -> Result<usize> {
        self.defender
            .iter()
            .position(|d| d.label == label)
            .ok_or_else(|| Error::UnknownStrategy(label.to_string()))
    }

    pub fn defender_labels(&self) -> Vec<String> {
        self.defender.iter().map(|d| d.label.clone()).collect()
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        // rightmost position that can still advance
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            break;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    out
}

/// Attacker strategies are the trojan ids; defender strategies are every
/// size-`K` subset in lexicographic order of member indices.
pub fn enumerate_spaces(spec: &GameSpec) -> StrategySpace {
    let ids: Vec<String> = spec.trojans.iter().map(|t| t.id.clone()).collect();
    let sep = if ids.iter().all(|id| id.chars().count() == 1) { "" } else { "+" };
    let defender = k_subsets(ids.len(), spec.test_budget)
        .into_iter()
        .map(|members| {
            let label = members.iter().map(|&m| ids[m].as_str()).collect::<Vec<_>>().join(sep);
            DefenderSubset { members, label }
        })
        .collect();
    StrategySpace {
        attacker: ids,
        defender,
    }
}

/// Utility of `player` when the defender tests `defender` and the attacker
/// inserts `attacker` (both given by label).
pub fn pure_utility(spec: &GameSpec, defender: &str, attacker: &str, player: Player) -> Result<f64> {
    let space = spec.strategy_space();
    let d = space.defender_index(defender)?;
    let a = space.attacker_index(attacker)?;
    let t = &spec.trojans[a];
    let u_d = if space.defender[d].contains(a) { t.fine } else { -t.damage };
    Ok(match player {
        Player::Defender => u_d,
        Player::Attacker => -u_d,
    })
}

/// Defender utilities `M_a[i][j] = u_d(s_d(i), s_a(j))`, rows in defender
/// strategy order and columns in attacker order.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMatrix {
    m: Matrix,
}

impl PayoffMatrix {
    /// Wraps an arbitrary zero-sum game given by the row player's (defender's)
    /// utilities.
    pub fn from_defender_utilities(m: Matrix) -> Result<Self> {
        if m.rows() == 0 || m.cols() == 0 {
            return Err(Error::InvalidGame("empty payoff matrix".into()));
        }
        if m.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGame("payoff matrix has non-finite entries".into()));
        }
        Ok(PayoffMatrix { m })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        PayoffMatrix::from_defender_utilities(Matrix::from_rows(rows))
    }

    /// The stored defender utility matrix.
    pub fn defender_utilities(&self) -> &Matrix {
        &self.m
    }

    /// `-M_aᵀ`, the attacker's utilities (rows: attacker strategies).
    pub fn attacker_utilities(&self) -> Matrix {
        self.m.transpose().scaled(-1.0)
    }

    pub fn num_defender(&self) -> usize {
        self.m.rows()
    }

    pub fn num_attacker(&self) -> usize {
        self.m.cols()
    }

    pub fn num_strategies(&self, player: Player) -> usize {
        match player {
            Player::Defender => self.num_defender(),
            Player::Attacker => self.num_attacker(),
        }
    }

    #[inline]
    pub fn get(&self, defender: usize, attacker: usize) -> f64 {
        self.m.get(defender, attacker)
    }

    /// Payoff of each pure strategy of `player` against a (possibly weighted,
    /// possibly unnormalized) vector over the opponent's strategies.
    pub fn pure_payoffs(&self, player: Player, opponent: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_strategies(player)];
        self.pure_payoffs_into(player, opponent, &mut out);
        out
    }

    pub(crate) fn pure_payoffs_into(&self, player: Player, opponent: &[f64], out: &mut [f64]) {
        match player {
            Player::Defender => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = self.m.row(i).iter().zip(opponent).map(|(a, q)| a * q).sum();
                }
            }
            Player::Attacker => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for (i, &q) in opponent.iter().enumerate() {
                    if q == 0.0 {
                        continue;
                    }
                    for (o, a) in out.iter_mut().zip(self.m.row(i)) {
                        *o -= a * q;
                    }
                }
            }
        }
    }
}

pub fn build_payoff_matrix(spec: &GameSpec) -> PayoffMatrix {
    let space = spec.strategy_space();
    let m = Matrix::from_fn(space.num_defender(), space.num_attacker(), |i, j| {
        let t = &spec.trojans[j];
        if space.defender[i].contains(j) {
            t.fine
        } else {
            -t.damage
        }
    });
    PayoffMatrix { m }
}

pub(crate) fn check_simplex(probs: &[f64], tol: f64) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidStrategy("empty probability vector".into()));
    }
    for &p in probs {
        if !p.is_finite() || p < -tol || p > 1.0 + tol {
            return Err(Error::InvalidStrategy(format!("entry {p} outside [0, 1]")));
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::InvalidStrategy(format!("entries sum to {sum}, not 1")));
    }
    Ok(())
}

/// A probability vector over one player's pure strategies.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct MixedStrategy(Vec<f64>);

impl MixedStrategy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_simplex(&probs, SIMPLEX_TOL)?;
        Ok(MixedStrategy(probs.into_iter().map(|p| p.clamp(0.0, 1.0)).collect()))
    }

    /// Accepts a vector within `tol` of the simplex, clamps negatives and
    /// renormalizes. For outputs of numerical solvers.
    pub fn from_approx(probs: Vec<f64>, tol: f64) -> Result<Self> {
        check_simplex(&probs, tol)?;
        let clamped: Vec<f64> = probs.into_iter().map(|p| p.max(0.0)).collect();
        let s: f64 = clamped.iter().sum();
        Ok(MixedStrategy(clamped.into_iter().map(|p| p / s).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0);
        MixedStrategy(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, i: usize) -> Self {
        assert!(i < n);
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        MixedStrategy(v)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Indices with probability above `threshold`.
    pub fn support(&self, threshold: f64) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] > threshold).collect()
    }

    pub fn max_abs_diff(&self, other: &[f64]) -> f64 {
        max_abs_diff(&self.0, other)
    }
}

impl std::ops::Index<usize> for MixedStrategy {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl AsRef<[f64]> for MixedStrategy {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// How a player evaluates the opponent's mixed strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BehaviorModel {
    /// Objective probabilities.
    Eut,
    /// Prelec-weighted opponent probabilities with per-player rationality.
    Pt { alpha_d: f64, alpha_a: f64 },
}

impl BehaviorModel {
    pub fn pt(alpha_d: f64, alpha_a: f64) -> Result<Self> {
        check_alpha(alpha_d)?;
        check_alpha(alpha_a)?;
        Ok(BehaviorModel::Pt { alpha_d, alpha_a })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BehaviorModel::Eut => Ok(()),
            BehaviorModel::Pt { alpha_d, alpha_a } => {
                check_alpha(alpha_d)?;
                check_alpha(alpha_a)
            }
        }
    }

    /// Rationality parameter of `player`; `1` under EUT.
    pub fn alpha(&self, player: Player) -> f64 {
        match (*self, player) {
            (BehaviorModel::Eut, _) => 1.0,
            (BehaviorModel::Pt { alpha_d, .. }, Player::Defender) => alpha_d,
            (BehaviorModel::Pt { alpha_a, .. }, Player::Attacker) => alpha_a,
        }
    }

    pub fn is_eut(&self) -> bool {
        matches!(self, BehaviorModel::Eut)
    }

    pub fn name(&self) -> &'static str {
        match self {
            BehaviorModel::Eut => "eut",
            BehaviorModel::Pt { .. } => "pt",
        }
    }

    /// The opponent vector as perceived by `player`.
    pub fn perceive(&self, player: Player, opponent: &[f64]) -> Vec<f64> {
        let alpha = self.alpha(player);
        opponent.iter().map(|&p| weight_unchecked(p, alpha)).collect()
    }
}

fn check_dims(m_a: &PayoffMatrix, p_d: &[f64], p_a: &[f64]) -> Result<()> {
    if p_d.len() != m_a.num_defender() {
        return Err(Error::DimensionMismatch {
            expected: m_a.num_defender(),
            actual: p_d.len(),
        });
    }
    if p_a.len() != m_a.num_attacker() {
        return Err(Error::DimensionMismatch {
            expected: m_a.num_attacker(),
            actual: p_a.len(),
        });
    }
    Ok(())
}

/// `p_dᵀ M_a p_a` for the defender, its negation for the attacker.
pub fn expected_utility_eut(
    m_a: &PayoffMatrix,
    p_d: &MixedStrategy,
    p_a: &MixedStrategy,
    player: Player,
) -> Result<f64> {
    check_dims(m_a, p_d.probs(), p_a.probs())?;
    let u_d = m_a.defender_utilities().bilinear(p_d.probs(), p_a.probs());
    Ok(match player {
        Player::Defender => u_d,
        Player::Attacker => -u_d,
    })
}

/// Prospect-theoretic expected utility of `player`: its own probabilities
/// enter as they are, the opponent's pass through Prelec weighting with
/// `alpha`.
pub fn expected_utility_pt(
    m_a: &PayoffMatrix,
    own: &MixedStrategy,
    opponent: &MixedStrategy,
    alpha: f64,
    player: Player,
) -> Result<f64> {
    check_alpha(alpha)?;
    let (p_d, p_a) = match player {
        Player::Defender => (own, opponent),
        Player::Attacker => (opponent, own),
    };
    check_dims(m_a, p_d.probs(), p_a.probs())?;
    let weighted: Vec<f64> = opponent.probs().iter().map(|&p| weight_unchecked(p, alpha)).collect();
    let payoffs = m_a.pure_payoffs(player, &weighted);
    Ok(own.probs().iter().zip(payoffs).map(|(p, u)| p * u).sum())
}
