use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pick/drop rule family. Types 2 and 3 split the colony: even-indexed agents
/// use form (a), odd-indexed agents form (b).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FunctionType {
    /// `P_p = (1-chi)*eps`, `P_d = chi*delta` for every agent.
    Type1,
    /// (a) as type 1, (b) `P_p = eps`, `P_d = delta`.
    Type2,
    /// (a) `P_p = 1-chi`, `P_d = chi`, (b) `P_p = eps`, `P_d = delta`.
    Type3,
    /// Classic density-based (LF) pick and drop rules.
    Type4,
}

impl FunctionType {
    pub const ALL: [FunctionType; 4] = [
        FunctionType::Type1,
        FunctionType::Type2,
        FunctionType::Type3,
        FunctionType::Type4,
    ];

    pub fn number(self) -> u8 {
        match self {
            FunctionType::Type1 => 1,
            FunctionType::Type2 => 2,
            FunctionType::Type3 => 3,
            FunctionType::Type4 => 4,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(FunctionType::Type1),
            2 => Some(FunctionType::Type2),
            3 => Some(FunctionType::Type3),
            4 => Some(FunctionType::Type4),
            _ => None,
        }
    }
}

impl fmt::Display for FunctionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.number())
    }
}

impl FromStr for FunctionType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim_start_matches('#')
            .parse::<u8>()
            .ok()
            .and_then(FunctionType::from_number)
            .ok_or_else(|| Error::Config(format!("unknown function type {s:?}")))
    }
}

/// Which of the two rule forms an agent follows under types 2 and 3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubAssignment {
    A,
    B,
}

impl SubAssignment {
    pub fn for_agent(index: usize) -> Self {
        if index.is_multiple_of(2) {
            SubAssignment::A
        } else {
            SubAssignment::B
        }
    }
}

/// Order in which agents act within a step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Schedule {
    #[default]
    Fixed,
    /// A fresh random permutation every step.
    Shuffled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub k1: f64,
    pub k2: f64,
    /// Osmotropotaxis sensitivity.
    pub beta: f64,
    /// Inverse sensory capacity.
    pub gamma: f64,
    /// Base pheromone deposit per agent step.
    pub eta: f64,
    pub k_evap: f64,
    /// Extra deposit per item around the agent.
    pub p_dep: f64,
    pub theta_count: f64,
    pub steepness: f64,
    pub t_max: u64,
    pub function_type: FunctionType,
    pub lf_alpha: f64,
    pub lf_s: usize,
    pub grid_side: usize,
    pub n_agents: usize,
    pub seed: u64,
    pub drain_cap: u64,
    pub schedule: Schedule,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            k1: 0.1,
            k2: 0.3,
            beta: 3.5,
            gamma: 0.2,
            eta: 0.07,
            k_evap: 0.015,
            p_dep: 1.0 / 400.0,
            theta_count: 5.0,
            steepness: 2.0,
            t_max: 1_000_000,
            function_type: FunctionType::Type1,
            lf_alpha: 0.5,
            lf_s: 3,
            grid_side: 57,
            n_agents: 80,
            seed: 0,
            drain_cap: 100_000,
            schedule: Schedule::Fixed,
        }
    }
}

impl SimConfig {
    /// Checks every range constraint; call before running.
    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, msg: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg.to_string()))
            }
        }
        let reals = [
            self.k1,
            self.k2,
            self.beta,
            self.gamma,
            self.eta,
            self.k_evap,
            self.p_dep,
            self.theta_count,
            self.steepness,
            self.lf_alpha,
        ];
        check(reals.iter().all(|v| v.is_finite()), "parameters must be finite")?;
        check(self.k1 > 0.0, "k1 must be positive")?;
        check(self.k2 > 0.0, "k2 must be positive")?;
        check(self.gamma >= 0.0, "gamma must be non-negative")?;
        check(self.eta >= 0.0, "eta must be non-negative")?;
        check((0.0..=1.0).contains(&self.k_evap), "k_evap must lie in [0, 1]")?;
        check(self.p_dep >= 0.0, "p_dep must be non-negative")?;
        check(self.theta_count > 0.0, "theta_count must be positive")?;
        check(self.steepness > 1.0, "steepness must exceed 1")?;
        check(self.lf_alpha > 0.0, "lf_alpha must be positive")?;
        check(
            self.lf_s >= 3 && self.lf_s % 2 == 1,
            "lf_s must be an odd integer >= 3",
        )?;
        check(self.grid_side >= 3, "grid_side must be at least 3")?;
        check(self.n_agents >= 1, "n_agents must be positive")?;
        check(
            self.n_agents <= self.grid_side * self.grid_side,
            "more agents than grid cells",
        )?;
        Ok(())
    }
}
