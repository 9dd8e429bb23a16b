//! The cooperative game over mechanisms.
//!
//! A coalition switches its member mechanisms to the target environment while
//! the rest stay at source. Its value is the importance-weighted source loss
//! minus the plain source loss, where the weight of a sample is the product
//! of the member mechanisms' weights.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::data::{perf, EnvironmentPair, Normalization};
use crate::error::{Error, Result};
use crate::graph::CandidateSet;
use crate::ratio::WeightSet;

/// Largest number of players a [`Coalition`] bitmask can hold.
pub const MAX_PLAYERS: usize = 64;

/// A set of players, bit `i` set iff player `i` is a member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
pub struct Coalition(u64);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub fn from_bits(bits: u64) -> Self {
        Coalition(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn full(k: usize) -> Self {
        assert!(k <= MAX_PLAYERS);
        if k == 64 {
            Coalition(u64::MAX)
        } else {
            Coalition((1u64 << k) - 1)
        }
    }

    pub fn singleton(i: usize) -> Self {
        Coalition(1u64 << i)
    }

    pub fn from_members(members: &[usize]) -> Self {
        members.iter().fold(Coalition::EMPTY, |c, &i| c.with(i))
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn with(self, i: usize) -> Self {
        Coalition(self.0 | 1u64 << i)
    }

    pub fn without(self, i: usize) -> Self {
        Coalition(self.0 & !(1u64 << i))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: Coalition) -> bool {
        self.0 & !other.0 == 0
    }

    /// Players in `0..k` not in `self`.
    pub fn complement(self, k: usize) -> Self {
        Coalition(!self.0 & Coalition::full(k).0)
    }

    pub fn members(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..64).filter(move |&i| bits >> i & 1 == 1)
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m: Vec<String> = self.members().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", m.join(","))
    }
}

/// A characteristic function with `value(∅) = 0`.
pub trait ValueFunction: Sync {
    fn n_players(&self) -> usize;
    fn value(&self, c: Coalition) -> f64;
}

/// Explicit value table indexed by coalition bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct TableGame {
    k: usize,
    values: Vec<f64>,
}

impl TableGame {
    pub fn new(k: usize, values: Vec<f64>) -> Result<Self> {
        if k > 24 || values.len() != 1usize << k {
            return Err(Error::InvalidParameter(format!(
                "value table for {k} players needs {} entries",
                1usize.checked_shl(k as u32).unwrap_or(0)
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidParameter("value of the empty coalition must be 0".into()));
        }
        Ok(TableGame { k, values })
    }

    /// Tabulates any value function.
    pub fn from_fn(k: usize, f: impl Fn(Coalition) -> f64) -> Result<Self> {
        let values = (0..1u64 << k).map(|b| f(Coalition(b))).collect();
        Self::new(k, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl ValueFunction for TableGame {
    fn n_players(&self) -> usize {
        self.k
    }

    fn value(&self, c: Coalition) -> f64 {
        self.values[c.0 as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameSettings {
    pub normalization: Normalization,
    /// Estimate the grand coalition directly from target losses.
    pub anchor_full: bool,
}

impl Default for GameSettings {
    fn default() -> Self {
        GameSettings {
            normalization: Normalization::Plain,
            anchor_full: true,
        }
    }
}

/// Per-sample `Σ_{d ∈ c} ln w_d` over the evaluation rows.
pub fn coalition_log_weights(ws: &WeightSet, c: Coalition) -> Vec<f64> {
    let members: Vec<usize> = c.members().filter(|&d| d < ws.n_mechanisms()).collect();
    (0..ws.n_eval())
        .map(|i| {
            let row = ws.row(i);
            members.iter().map(|&d| row[d]).sum()
        })
        .collect()
}

/// Memoized importance-sampling game over a weight set.
pub struct ShiftGame {
    weights: WeightSet,
    eval_losses_source: Vec<f64>,
    eval_losses_target: Vec<f64>,
    settings: GameSettings,
    perf_source: f64,
    perf_target: f64,
    cache: Mutex<HashMap<Coalition, f64>>,
}

impl fmt::Debug for ShiftGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ShiftGame")
            .field("players", &self.weights.names)
            .field("n_eval_source", &self.eval_losses_source.len())
            .field("n_eval_target", &self.eval_losses_target.len())
            .field("settings", &self.settings)
            .finish()
    }
}

impl ShiftGame {
    /// `eval_losses_source` must align row by row with the weight set.
    pub fn new(
        weights: WeightSet,
        eval_losses_source: Vec<f64>,
        eval_losses_target: Vec<f64>,
        settings: GameSettings,
    ) -> Result<Self> {
        if weights.n_mechanisms() > MAX_PLAYERS {
            return Err(Error::TooManyPlayers {
                k: weights.n_mechanisms(),
                max: MAX_PLAYERS,
            });
        }
        if eval_losses_source.len() != weights.n_eval() {
            return Err(Error::SplitMismatch(format!(
                "{} source losses for {} weighted rows",
                eval_losses_source.len(),
                weights.n_eval()
            )));
        }
        let perf_source = perf(&eval_losses_source, None, Normalization::Plain)?;
        let perf_target = perf(&eval_losses_target, None, Normalization::Plain)?;
        Ok(ShiftGame {
            weights,
            eval_losses_source,
            eval_losses_target,
            settings,
            perf_source,
            perf_target,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn settings(&self) -> GameSettings {
        self.settings
    }

    pub fn weight_set(&self) -> &WeightSet {
        &self.weights
    }

    pub fn perf_source(&self) -> f64 {
        self.perf_source
    }

    pub fn perf_target(&self) -> f64 {
        self.perf_target
    }

    /// `Perf(target) − Perf(source)` on the evaluation splits.
    pub fn total_change(&self) -> f64 {
        self.perf_target - self.perf_source
    }

    pub fn n_eval_source(&self) -> usize {
        self.eval_losses_source.len()
    }

    pub fn n_eval_target(&self) -> usize {
        self.eval_losses_target.len()
    }

    fn compute(&self, c: Coalition) -> f64 {
        let k = self.weights.n_mechanisms();
        if c.is_empty() {
            return 0.0;
        }
        if self.settings.anchor_full && c == Coalition::full(k) {
            return self.total_change();
        }
        let w: Vec<f64> = coalition_log_weights(&self.weights, c)
            .into_iter()
            .map(f64::exp)
            .collect();
        perf(&self.eval_losses_source, Some(&w), self.settings.normalization)
            .map(|p| p - self.perf_source)
            .unwrap_or(f64::NAN)
    }

    pub fn coalition_value(&self, c: Coalition) -> f64 {
        if let Some(&v) = self.cache.lock().unwrap().get(&c) {
            return v;
        }
        let v = self.compute(c);
        *self.cache.lock().unwrap().entry(c).or_insert(v)
    }

    pub fn cached_values(&self) -> BTreeMap<Coalition, f64> {
        self.cache.lock().unwrap().iter().map(|(&c, &v)| (c, v)).collect()
    }
}

impl ValueFunction for ShiftGame {
    fn n_players(&self) -> usize {
        self.weights.n_mechanisms()
    }

    fn value(&self, c: Coalition) -> f64 {
        self.coalition_value(c)
    }
}

/// Assembles the game from an environment pair and a weight set built on it.
pub fn make_game(
    candidates: &CandidateSet,
    env: &EnvironmentPair,
    weight_set: WeightSet,
    settings: GameSettings,
) -> Result<ShiftGame> {
    if weight_set.names != candidates.names() {
        return Err(Error::SplitMismatch(
            "weight set mechanisms differ from the candidate set".into(),
        ));
    }
    let (Some(ss), Some(ts)) = (&weight_set.source_split, &weight_set.target_split) else {
        return Err(Error::SplitMismatch("weight set carries no split".into()));
    };
    let covers = |s: &crate::data::SplitIndices, n: usize| {
        s.fit_indices.len() + s.eval_indices.len() == n
            && s.fit_indices.iter().chain(&s.eval_indices).all(|&i| i < n)
    };
    if !covers(ss, env.source.n_rows()) || !covers(ts, env.target.n_rows()) {
        return Err(Error::SplitMismatch(
            "weight set splits do not match the environment sizes".into(),
        ));
    }
    let src: Vec<f64> = ss.eval_indices.iter().map(|&i| env.loss_source[i]).collect();
    let tgt: Vec<f64> = ts.eval_indices.iter().map(|&i| env.loss_target[i]).collect();
    ShiftGame::new(weight_set, src, tgt, settings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn injected(cols: &[Vec<f64>]) -> WeightSet {
        let names = (0..cols.len()).map(|i| format!("m{i}")).collect();
        WeightSet::from_columns(names, cols).unwrap()
    }

    #[test]
    fn coalition_bits() {
        let c = Coalition::from_members(&[0, 2]);
        assert_eq!(c.bits(), 0b101);
        assert!(c.contains(2) && !c.contains(1));
        assert_eq!(c.len(), 2);
        assert_eq!(c.complement(3), Coalition::singleton(1));
        assert_eq!(c.members().collect::<Vec<_>>(), vec![0, 2]);
        assert!(Coalition::singleton(0).is_subset_of(c));
        assert_eq!(Coalition::full(64).len(), 64);
        assert_eq!(c.to_string(), "{0,2}");
    }

    #[test]
    fn log_weight_sums() {
        let ws = injected(&[vec![0.1, -0.2], vec![0.3, 0.5], vec![-1.0, 2.0]]);
        assert_eq!(coalition_log_weights(&ws, Coalition::EMPTY), vec![0.0, 0.0]);
        assert_eq!(coalition_log_weights(&ws, Coalition::singleton(1)), vec![0.3, 0.5]);
        let pair = coalition_log_weights(&ws, Coalition::from_members(&[0, 1]));
        for (i, lw) in pair.iter().enumerate() {
            let prod = ws.log_weight(i, 0).exp() * ws.log_weight(i, 1).exp();
            assert!((lw.exp() - prod).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_values() {
        let ws = injected(&[vec![0.5, -0.5], vec![0.2, 0.1]]);
        let game = ShiftGame::new(ws.clone(), vec![1.0, 3.0], vec![4.0, 6.0], GameSettings::default()).unwrap();
        assert_eq!(game.coalition_value(Coalition::EMPTY), 0.0);
        assert_eq!(game.coalition_value(Coalition::full(2)), 5.0 - 2.0);
        let expected = (0.5f64.exp() * 1.0 + (-0.5f64).exp() * 3.0) / 2.0 - 2.0;
        assert!((game.coalition_value(Coalition::singleton(0)) - expected).abs() < 1e-15);

        let unanchored = ShiftGame::new(
            ws,
            vec![1.0, 3.0],
            vec![4.0, 6.0],
            GameSettings {
                anchor_full: false,
                ..Default::default()
            },
        )
        .unwrap();
        let full = unanchored.coalition_value(Coalition::full(2));
        let expected = (0.7f64.exp() * 1.0 + (-0.4f64).exp() * 3.0) / 2.0 - 2.0;
        assert!((full - expected).abs() < 1e-15);
        assert!((full - 3.0).abs() > 0.1);
    }

    #[test]
    fn memoized_values_are_stable() {
        let ws = injected(&[vec![0.5, -0.5, 0.1], vec![0.2, 0.1, 0.0]]);
        let game = ShiftGame::new(ws, vec![1.0, 3.0, 2.0], vec![4.0], GameSettings::default()).unwrap();
        let a = game.coalition_value(Coalition::singleton(1));
        let b = game.coalition_value(Coalition::singleton(1));
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(game.cached_values().len(), 1);
    }

    #[test]
    fn self_normalized_value() {
        let ws = injected(&[vec![2f64.ln(), 0.0]]);
        let game = ShiftGame::new(
            ws,
            vec![1.0, 0.0],
            vec![0.0],
            GameSettings {
                normalization: Normalization::SelfNormalized,
                anchor_full: false,
            },
        )
        .unwrap();
        // (2·1 + 1·0) / 3 − 0.5
        assert!((game.coalition_value(Coalition::singleton(0)) - (2.0 / 3.0 - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn table_game_validation() {
        assert!(TableGame::new(2, vec![0.0, 1.0, 2.0]).is_err());
        assert!(TableGame::new(1, vec![1.0, 1.0]).is_err());
        let t = TableGame::from_fn(2, |c| c.len() as f64).unwrap();
        assert_eq!(t.value(Coalition::full(2)), 2.0);
    }

    #[test]
    fn loss_rows_must_align() {
        let ws = injected(&[vec![0.0, 0.0]]);
        assert!(matches!(
            ShiftGame::new(ws, vec![1.0], vec![1.0], GameSettings::default()),
            Err(Error::SplitMismatch(_))
        ));
    }
}
