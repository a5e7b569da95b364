//! Divide and Conquer: divide a shared integer by one of the hard-coded primes
//! (all primes up to 50); the player who brings it to exactly 1 wins.

use std::sync::Arc;

use rand::Rng;

use super::{make_spec, suite_text};
use crate::env::{GameEnv, GameSpec, Rules, Seat, Transition};
use crate::rng::SplitMix64;

/// Every prime not exceeding 50, ascending. Action `i` divides by `PRIMES[i]`.
pub const PRIMES: [u64; 15] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47];
/// Exponent of each listed prime in n (scaled by 1/10), then Omega(n) / 10.
pub const OBS_DIM: usize = PRIMES.len() + 1;
/// Starting numbers are drawn from the 50-smooth integers in this range.
pub const START_RANGE: (u64, u64) = (12, 999);

pub fn spec() -> Arc<GameSpec> {
    make_spec(
        "divide-conquer",
        "Divide and Conquer",
        suite_text!("divide-conquer", "rules.md"),
        suite_text!("divide-conquer", "actions.md"),
        PRIMES.len(),
        OBS_DIM,
        true,
    )
}

/// True when every prime factor of `n` is in [`PRIMES`].
pub fn is_listed_smooth(mut n: u64) -> bool {
    if n == 0 {
        return false;
    }
    for p in PRIMES {
        while n % p == 0 {
            n /= p;
        }
    }
    n == 1
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivideConquer {
    n: u64,
    mover: Seat,
}

impl Default for DivideConquer {
    fn default() -> Self {
        Self::starting_at(START_RANGE.0)
    }
}

impl DivideConquer {
    pub fn starting_at(n: u64) -> Self {
        Self { n, mover: Seat::P1 }
    }

    pub fn n(&self) -> u64 {
        self.n
    }
}

/// Environment starting from `n` with Player 1 to move.
pub fn env_at(n: u64) -> GameEnv<DivideConquer> {
    GameEnv::from_position(spec(), DivideConquer::default(), DivideConquer::starting_at(n))
}

impl Rules for DivideConquer {
    fn reset(&mut self, rng: &mut SplitMix64) {
        let (lo, hi) = START_RANGE;
        let n = loop {
            let candidate = rng.gen_range(lo..=hi);
            if is_listed_smooth(candidate) {
                break candidate;
            }
        };
        *self = Self::starting_at(n);
    }

    fn to_move(&self) -> Seat {
        self.mover
    }

    fn legal_actions(&self) -> Vec<usize> {
        if self.n <= 1 {
            return Vec::new();
        }
        (0..PRIMES.len()).filter(|&i| self.n % PRIMES[i] == 0).collect()
    }

    fn play(&mut self, action: usize) -> Transition {
        self.n /= PRIMES[action];
        self.mover = self.mover.other();
        if self.n == 1 {
            Transition::MoverWins
        } else {
            Transition::Continue
        }
    }

    fn encode(&self, out: &mut Vec<f32>) {
        let mut rest = self.n;
        let mut omega = 0u32;
        for p in PRIMES {
            let mut e = 0u32;
            while rest > 1 && rest % p == 0 {
                rest /= p;
                e += 1;
            }
            omega += e;
            out.push(e as f32 / 10.0);
        }
        out.push(omega as f32 / 10.0);
    }

    fn describe(&self) -> String {
        format!("Number: {}", self.n)
    }

    fn action_label(&self, action: usize) -> String {
        format!("divide by {}", PRIMES[action])
    }
}
