//! JSON game-spec files.
//!
//! ```text
//! {
//!   "states": 1, "actions1": 2, "actions2": 2,      // counts include the null action
//!   "gamma": 0.5, "cost_floor": 0.1,
//!   "rewards": [[[1.0, 0.0], [2.0, 0.0]]],           // [s][a][b]
//!   "costs": { "costs1": [[0.5]], "costs2": [[0.3]] }, // [s][a-1], [s][b-1]
//!   "kernel": [[[[1.0], [1.0]], [[1.0], [1.0]]]],    // [s][a][b][s']
//!   "available1": ..., "available2": ...,            // optional [s][a] masks
//!   "basis": ...                                     // optional [s][p] features
//! }
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GameStructure, ImpulseGame, Violation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostTables {
    pub costs1: Vec<Vec<f64>>,
    pub costs2: Vec<Vec<f64>>,
}

/// On-disk layout of a game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpecFile {
    pub states: usize,
    pub actions1: usize,
    pub actions2: usize,
    pub gamma: f64,
    pub cost_floor: f64,
    pub rewards: Vec<Vec<Vec<f64>>>,
    pub costs: CostTables,
    pub kernel: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub available1: Option<Vec<Vec<bool>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub available2: Option<Vec<Vec<bool>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<f64>>>,
}

fn shape(key: &str, expected: String) -> Violation {
    Violation::Shape {
        key: key.to_string(),
        expected,
    }
}

impl GameSpecFile {
    pub fn from_game(game: &ImpulseGame) -> Self {
        let (ns, n1, n2) = (game.num_states(), game.num_actions1(), game.num_actions2());
        let rewards = (0..ns)
            .map(|s| {
                (0..n1)
                    .map(|a| (0..n2).map(|b| game.reward(s, a, b)).collect())
                    .collect()
            })
            .collect();
        let kernel = (0..ns)
            .map(|s| {
                (0..n1)
                    .map(|a| (0..n2).map(|b| game.kernel_row(s, a, b).to_vec()).collect())
                    .collect()
            })
            .collect();
        let costs = CostTables {
            costs1: (0..ns)
                .map(|s| (1..n1).map(|a| game.cost1(s, a)).collect())
                .collect(),
            costs2: (0..ns)
                .map(|s| (1..n2).map(|b| game.cost2(s, b)).collect())
                .collect(),
        };
        let all1 = (0..ns).all(|s| (0..n1).all(|a| game.available1(s, a)));
        let all2 = (0..ns).all(|s| (0..n2).all(|b| game.available2(s, b)));
        Self {
            states: ns,
            actions1: n1,
            actions2: n2,
            gamma: game.gamma(),
            cost_floor: game.cost_floor(),
            rewards,
            costs,
            kernel,
            available1: (!all1).then(|| {
                (0..ns)
                    .map(|s| (0..n1).map(|a| game.available1(s, a)).collect())
                    .collect()
            }),
            available2: (!all2).then(|| {
                (0..ns)
                    .map(|s| (0..n2).map(|b| game.available2(s, b)).collect())
                    .collect()
            }),
            basis: None,
        }
    }

    /// Builds the game, reporting every shape or invariant violation.
    pub fn to_game(&self) -> Result<ImpulseGame> {
        let (ns, n1, n2) = (self.states, self.actions1, self.actions2);
        let mut violations = Vec::new();
        if ns == 0 {
            violations.push(shape("states", ">= 1".into()));
        }
        if n1 == 0 {
            violations.push(shape("actions1", ">= 1 (the null action)".into()));
        }
        if n2 == 0 {
            violations.push(shape("actions2", ">= 1 (the null action)".into()));
        }
        if !violations.is_empty() {
            return Err(Error::Invalid(violations));
        }

        let dims3 = |v: &Vec<Vec<Vec<f64>>>| {
            v.len() == ns && v.iter().all(|x| x.len() == n1 && x.iter().all(|y| y.len() == n2))
        };
        if !dims3(&self.rewards) {
            violations.push(shape("rewards", format!("[{ns}][{n1}][{n2}]")));
        }
        let k_ok = self.kernel.len() == ns
            && self.kernel.iter().all(|x| {
                x.len() == n1
                    && x.iter()
                        .all(|y| y.len() == n2 && y.iter().all(|z| z.len() == ns))
            });
        if !k_ok {
            violations.push(shape("kernel", format!("[{ns}][{n1}][{n2}][{ns}]")));
        }
        let c_ok = |t: &Vec<Vec<f64>>, n: usize| t.len() == ns && t.iter().all(|r| r.len() == n - 1);
        if !c_ok(&self.costs.costs1, n1) {
            violations.push(shape("costs.costs1", format!("[{ns}][{}]", n1 - 1)));
        }
        if !c_ok(&self.costs.costs2, n2) {
            violations.push(shape("costs.costs2", format!("[{ns}][{}]", n2 - 1)));
        }
        let m_ok = |m: &Option<Vec<Vec<bool>>>, n: usize| {
            m.as_ref()
                .is_none_or(|m| m.len() == ns && m.iter().all(|r| r.len() == n))
        };
        if !m_ok(&self.available1, n1) {
            violations.push(shape("available1", format!("[{ns}][{n1}]")));
        }
        if !m_ok(&self.available2, n2) {
            violations.push(shape("available2", format!("[{ns}][{n2}]")));
        }
        if let Some(basis) = &self.basis {
            let p = basis.first().map_or(0, Vec::len);
            if basis.len() != ns || p == 0 || basis.iter().any(|r| r.len() != p) {
                violations.push(shape("basis", format!("[{ns}][p] with p >= 1")));
            }
        }
        if !violations.is_empty() {
            return Err(Error::Invalid(violations));
        }

        let mut g = ImpulseGame::new(ns, n1 - 1, n2 - 1, self.gamma, self.cost_floor)?;
        for s in 0..ns {
            for a in 0..n1 {
                for b in 0..n2 {
                    g.set_reward(s, a, b, self.rewards[s][a][b]);
                    g.kernel_row_mut(s, a, b)
                        .copy_from_slice(&self.kernel[s][a][b]);
                }
            }
            for a in 1..n1 {
                g.set_cost1(s, a, self.costs.costs1[s][a - 1]);
            }
            for b in 1..n2 {
                g.set_cost2(s, b, self.costs.costs2[s][b - 1]);
            }
            if let Some(m) = &self.available1 {
                for a in 0..n1 {
                    g.set_available1(s, a, m[s][a]);
                }
            }
            if let Some(m) = &self.available2 {
                for b in 0..n2 {
                    g.set_available2(s, b, m[s][b]);
                }
            }
        }
        g.validated()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string(self).expect("game spec serializes");
        text.push('\n');
        fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Reads and validates a game-spec file.
pub fn load(path: impl AsRef<Path>) -> Result<ImpulseGame> {
    GameSpecFile::read(path)?.to_game()
}

pub fn save(game: &ImpulseGame, path: impl AsRef<Path>) -> Result<()> {
    GameSpecFile::from_game(game).write(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::g1;
    use crate::game::random_game;

    #[test]
    fn round_trip_g1() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g1.json");
        save(&g1(), &path).unwrap();
        assert_eq!(load(&path).unwrap(), g1());
    }

    #[test]
    fn round_trip_masks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let mut g = random_game(3, 2, 1, 4).unwrap();
        g.set_available1(1, 2, false);
        save(&g, &path).unwrap();
        assert_eq!(load(&path).unwrap(), g);
    }

    #[test]
    fn missing_gamma_names_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        let mut v: serde_json::Value =
            serde_json::to_value(GameSpecFile::from_game(&g1())).unwrap();
        v.as_object_mut().unwrap().remove("gamma");
        std::fs::write(&path, v.to_string()).unwrap();
        let err = load(&path).unwrap_err().to_string();
        assert!(err.contains("gamma"), "{err}");
    }

    #[test]
    fn gamma_one_fails_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        let mut spec = GameSpecFile::from_game(&g1());
        spec.gamma = 1.0;
        spec.write(&path).unwrap();
        let err = load(&path).unwrap_err().to_string();
        assert!(err.contains("discount must be < 1"), "{err}");
    }

    #[test]
    fn non_finite_literals_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        let text = serde_json::to_string(&GameSpecFile::from_game(&g1()))
            .unwrap()
            .replace("\"gamma\":0.5", "\"gamma\":NaN");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(load(&path), Err(Error::Parse { .. })));

        let text = serde_json::to_string(&GameSpecFile::from_game(&g1()))
            .unwrap()
            .replace("\"gamma\":0.5", "\"gamma\":1e999");
        std::fs::write(&path, text).unwrap();
        assert!(load(&path).is_err());
    }

    #[test]
    fn wrong_shape_names_key() {
        let mut spec = GameSpecFile::from_game(&g1());
        spec.rewards[0].pop();
        let err = spec.to_game().unwrap_err().to_string();
        assert!(err.contains("rewards"), "{err}");
    }
}
