//! The checking/reduction engine state shared by the typechecker, the
//! converter and the reducer.
//!
//! Type checking calls conversion, conversion calls reduction, and the
//! cast/`Eq_rec`/`J` side conditions call conversion again. All of them draw
//! on one step budget held here, so every entry point terminates with either
//! an answer or [`FuelExhausted`].

use crate::convert::RuleSet;
use crate::typecheck::GlobalEnv;

pub const DEFAULT_FUEL: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("fuel exhausted after {budget} steps")]
pub struct FuelExhausted {
    pub budget: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct Fuel {
    budget: u64,
    remaining: u64,
}

impl Fuel {
    pub fn new(budget: u64) -> Fuel {
        Fuel { budget, remaining: budget }
    }

    pub fn tick(&mut self) -> Result<(), FuelExhausted> {
        if self.remaining == 0 {
            return Err(FuelExhausted { budget: self.budget });
        }
        self.remaining -= 1;
        Ok(())
    }

    pub fn used(&self) -> u64 {
        self.budget - self.remaining
    }

    pub fn remaining(&self) -> u64 {
        self.remaining
    }
}

pub struct Kernel<'e> {
    pub env: &'e GlobalEnv,
    pub rules: RuleSet,
    pub(crate) fuel: Fuel,
}

impl<'e> Kernel<'e> {
    /// A kernel with a fresh budget of `rules.fuel` steps.
    pub fn new(env: &'e GlobalEnv, rules: RuleSet) -> Kernel<'e> {
        Kernel { env, fuel: Fuel::new(rules.fuel), rules }
    }

    pub fn fuel(&self) -> &Fuel {
        &self.fuel
    }

    pub(crate) fn tick(&mut self) -> Result<(), FuelExhausted> {
        self.fuel.tick()
    }
}
