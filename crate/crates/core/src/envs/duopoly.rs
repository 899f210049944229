//! Advertising-investment duopoly on a discretized sales lattice.
//!
//! Firm sales evolve as
//!
//! ```text
//! S¹' = S¹ + b¹ u¹ (M − S¹ − S²) / M − r¹ S¹ + σ¹ ΔB
//! S²' = S² + b² u² (M − S¹ − S²) / M − r² S² + σ² ΔB
//! ```
//!
//! with a common Brownian increment `ΔB ~ N(0, 1)`. The shock is integrated
//! with Gauss–Hermite quadrature and every quadrature point is spread over
//! the four surrounding lattice points by bilinear interpolation.
//!
//! Firm 1 is the maximizing player. The zero-sum stage reward is the revenue
//! difference `h·(S¹ − S²)`; investment costs `κᵢ + uᵢ` are charged through the
//! game's cost function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::ImpulseGame;

/// Probabilists' Gauss–Hermite rule with 7 nodes: `(node, weight)`, weights sum to 1.
pub const HERMITE_NODES: [(f64, f64); 7] = [
    (-3.7504397177257425, 0.000548268855972217),
    (-2.366759410734541, 0.03075712396758652),
    (-1.1544053947399682, 0.2401231786050127),
    (0.0, 0.45714285714285724),
    (1.1544053947399682, 0.2401231786050127),
    (2.366759410734541, 0.03075712396758652),
    (3.7504397177257425, 0.000548268855972217),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DuopolyParams {
    /// Potential market size `M`.
    pub market_size: f64,
    /// Advertising response rates `b¹, b²` in `(0, 1]`.
    pub response: [f64; 2],
    /// Share-abstraction (decay) rates `r¹, r²`.
    pub decay: [f64; 2],
    /// Sales volatilities `σ¹, σ²`.
    pub volatility: [f64; 2],
    /// Linear revenue coefficient `h`.
    pub revenue_slope: f64,
    /// Fixed action costs `κ¹, κ²`.
    pub fixed_cost: [f64; 2],
    /// Non-null investment levels of each firm.
    pub investments: [Vec<f64>; 2],
    /// Lattice points per axis.
    pub grid: usize,
    pub gamma: f64,
}

impl Default for DuopolyParams {
    fn default() -> Self {
        Self {
            market_size: 10.0,
            response: [0.8, 0.6],
            decay: [0.1, 0.1],
            volatility: [0.5, 0.5],
            revenue_slope: 1.0,
            fixed_cost: [0.5, 0.5],
            investments: [vec![1.0, 2.0, 4.0], vec![1.0, 2.0, 4.0]],
            grid: 11,
            gamma: 0.9,
        }
    }
}

impl DuopolyParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("duopoly: {m}")));
        if !(self.market_size.is_finite() && self.market_size > 0.0) {
            return bad("market_size must be > 0");
        }
        if self.grid < 2 {
            return bad("grid needs at least 2 points per axis");
        }
        if self.response.iter().any(|b| !(*b > 0.0 && *b <= 1.0)) {
            return bad("response rates must lie in (0, 1]");
        }
        if self.fixed_cost.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return bad("fixed costs must be > 0");
        }
        if self.volatility.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("volatilities must be >= 0");
        }
        if self
            .investments
            .iter()
            .flatten()
            .any(|u| !(u.is_finite() && *u > 0.0))
        {
            return bad("investment levels must be > 0");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        Ok(())
    }

    /// Lattice spacing.
    pub fn spacing(&self) -> f64 {
        self.market_size / (self.grid - 1) as f64
    }

    /// State index of lattice point `(i, j)`.
    pub fn state_index(&self, i: usize, j: usize) -> usize {
        i * self.grid + j
    }

    /// Sales levels `(S¹, S²)` at state `s`.
    pub fn sales(&self, s: usize) -> (f64, f64) {
        let d = self.spacing();
        ((s / self.grid) as f64 * d, (s % self.grid) as f64 * d)
    }

    /// Parses a JSON or TOML block (by file extension; JSON otherwise).
    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let parsed: std::result::Result<Self, String> =
            if path.extension().is_some_and(|e| e == "toml") {
                toml::from_str(&text).map_err(|e| e.to_string())
            } else {
                serde_json::from_str(&text).map_err(|e| e.to_string())
            };
        parsed.map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            message,
        })
    }
}

/// Deterministic drift of the sales dynamics, clamped to `[0, M]`.
pub fn duopoly_step_mean(p: &DuopolyParams, s1: f64, s2: f64, u1: f64, u2: f64) -> (f64, f64) {
    let m = p.market_size;
    let free = (m - s1 - s2) / m;
    let n1 = s1 + p.response[0] * u1 * free - p.decay[0] * s1;
    let n2 = s2 + p.response[1] * u2 * free - p.decay[1] * s2;
    (n1.clamp(0.0, m), n2.clamp(0.0, m))
}

/// Lower lattice index and upper-neighbour weight for coordinate `x`.
fn interp(x: f64, spacing: f64, grid: usize) -> (usize, f64) {
    let pos = x / spacing;
    let lo = (pos.floor() as usize).min(grid - 2);
    let w = (pos - lo as f64).clamp(0.0, 1.0);
    (lo, w)
}

/// Builds the discretized duopoly as an impulse game.
pub fn build_duopoly_game(p: &DuopolyParams) -> Result<ImpulseGame> {
    p.validate()?;
    let g = p.grid;
    let n = g * g;
    let (k1, k2) = (p.investments[0].len(), p.investments[1].len());
    let floor = p.fixed_cost[0].min(p.fixed_cost[1]);
    let mut game = ImpulseGame::new(n, k1, k2, p.gamma, floor)?;
    let d = p.spacing();
    let m = p.market_size;
    let level = |player: usize, x: usize| if x == 0 { 0.0 } else { p.investments[player][x - 1] };

    for s in 0..n {
        let (s1, s2) = p.sales(s);
        let r = p.revenue_slope * (s1 - s2);
        for a in 0..=k1 {
            for b in 0..=k2 {
                game.set_reward(s, a, b, r);
                let (m1, m2) = duopoly_step_mean(p, s1, s2, level(0, a), level(1, b));
                let row = game.kernel_row_mut(s, a, b);
                row.iter_mut().for_each(|x| *x = 0.0);
                for &(z, w) in &HERMITE_NODES {
                    let x1 = (m1 + p.volatility[0] * z).clamp(0.0, m);
                    let x2 = (m2 + p.volatility[1] * z).clamp(0.0, m);
                    let (i, wi) = interp(x1, d, g);
                    let (j, wj) = interp(x2, d, g);
                    row[i * g + j] += w * (1.0 - wi) * (1.0 - wj);
                    row[(i + 1) * g + j] += w * wi * (1.0 - wj);
                    row[i * g + j + 1] += w * (1.0 - wi) * wj;
                    row[(i + 1) * g + j + 1] += w * wi * wj;
                }
                let total: f64 = row.iter().sum();
                row.iter_mut().for_each(|x| *x /= total);
            }
        }
        for a in 1..=k1 {
            game.set_cost1(s, a, p.fixed_cost[0] + p.investments[0][a - 1]);
        }
        for b in 1..=k2 {
            game.set_cost2(s, b, p.fixed_cost[1] + p.investments[1][b - 1]);
        }
    }
    game.validated()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameStructure;

    #[test]
    fn hermite_rule_integrates_low_moments() {
        let (m0, m1, m2): (f64, f64, f64) = HERMITE_NODES
            .iter()
            .fold((0.0, 0.0, 0.0), |acc, &(z, w)| (acc.0 + w, acc.1 + w * z, acc.2 + w * z * z));
        assert!((m0 - 1.0).abs() < 1e-14);
        assert!(m1.abs() < 1e-14);
        assert!((m2 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn pure_decay() {
        let p = DuopolyParams {
            market_size: 200.0,
            decay: [0.1, 0.1],
            ..Default::default()
        };
        let (a, b) = duopoly_step_mean(&p, 100.0, 0.0, 0.0, 0.0);
        assert!((a - 90.0).abs() < 1e-12);
        assert_eq!(b, 0.0);
    }

    #[test]
    fn advertising_response() {
        let p = DuopolyParams {
            market_size: 100.0,
            response: [0.5, 0.5],
            decay: [0.0, 0.0],
            ..Default::default()
        };
        let (a, _) = duopoly_step_mean(&p, 40.0, 40.0, 1.0, 0.0);
        assert!((a - 40.1).abs() < 1e-12);
    }

    #[test]
    fn no_forces_is_identity() {
        let p = DuopolyParams {
            decay: [0.0, 0.0],
            volatility: [0.0, 0.0],
            ..Default::default()
        };
        assert_eq!(duopoly_step_mean(&p, 3.0, 4.0, 0.0, 0.0), (3.0, 4.0));
    }

    #[test]
    fn noiseless_lattice_drift_gives_unit_mass() {
        let p = DuopolyParams {
            decay: [0.0, 0.0],
            volatility: [0.0, 0.0],
            ..Default::default()
        };
        let g = build_duopoly_game(&p).unwrap();
        let s = p.state_index(3, 5);
        let row = g.kernel_row(s, 0, 0);
        assert!((row[s] - 1.0).abs() < 1e-12);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn default_game_is_valid_and_antisymmetric() {
        let p = DuopolyParams::default();
        let g = build_duopoly_game(&p).unwrap();
        assert!(g.validate().is_empty());
        assert_eq!(g.num_states(), 121);
        assert_eq!(g.num_actions1(), 4);
        for i in 0..p.grid {
            for j in 0..p.grid {
                let s = p.state_index(i, j);
                let t = p.state_index(j, i);
                assert_eq!(g.reward(s, 0, 0), -g.reward(t, 0, 0));
            }
        }
        assert_eq!(g.cost1(0, 3), 4.5);
    }

    #[test]
    fn degenerate_grid_rejected() {
        let p = DuopolyParams {
            grid: 1,
            ..Default::default()
        };
        assert!(build_duopoly_game(&p).is_err());
    }
}
