//! Independent oracles and helpers shared by the integration tests.
//!
//! Nothing here calls into the engine's own solver or loss code: the game
//! oracles re-derive the rules from scratch and the gradient oracle uses
//! central finite differences.
#![allow(dead_code)]

use std::collections::HashMap;

use arena_core::env::{ActionIndex, Environment, GameEnv, GameSpec, Rules, Seat, Transition};
use arena_core::rl::network::PolicyParams;
use arena_core::rl::ppo::{loss_and_grad, Batch, LossCoefs};
use arena_core::rng::SplitMix64;
use ndarray::Array2;
use rand::Rng;
use std::sync::Arc;

/// Minimum excluded value.
fn mex(values: impl IntoIterator<Item = u32>) -> u32 {
    let seen: Vec<u32> = values.into_iter().collect();
    (0..).find(|v| !seen.contains(v)).unwrap()
}

/// Totals in 0..27 from which the player to move loses Reach 27 (add 1..=9,
/// exactly 27 wins, overshooting loses), by backward induction.
pub fn reach27_losing_totals() -> Vec<u32> {
    let mut wins = [false; 27];
    for total in (0..27u32).rev() {
        wins[total as usize] = (1..=9).any(|d| {
            let next = total + d;
            next == 27 || (next < 27 && !wins[next as usize])
        });
    }
    (0..27).filter(|&t| !wins[t as usize]).collect()
}

/// Grundy numbers of Kayles rows: remove one pin or two adjacent pins.
pub fn kayles_grundy(max_len: usize) -> Vec<u32> {
    let mut g = vec![0u32; max_len + 1];
    for n in 1..=max_len {
        let mut options = Vec::new();
        for take in 1..=2.min(n) {
            for left in 0..=n - take {
                options.push(g[left] ^ g[n - take - left]);
            }
        }
        g[n] = mex(options);
    }
    g
}

/// Lengths of the maximal runs of lit lights.
pub fn runs(lights: &[bool]) -> Vec<usize> {
    lights
        .split(|&on| !on)
        .map(|r| r.len())
        .filter(|&l| l > 0)
        .collect()
}

/// Whether the mover wins Light Out from `lights` (normal play, so a nonzero
/// Grundy sum).
pub fn light_out_mover_wins(lights: &[bool]) -> bool {
    let g = kayles_grundy(lights.len());
    runs(lights).iter().fold(0, |acc, &l| acc ^ g[l]) != 0
}

/// Grundy numbers for runs of claimable squares in Isolation: claiming a square
/// removes it and both neighbours from the claimable set.
pub fn isolation_grundy(max_len: usize) -> Vec<u32> {
    let mut g = vec![0u32; max_len + 1];
    for n in 1..=max_len {
        g[n] = mex((0..n).map(|i| g[i.saturating_sub(1)] ^ g[n.saturating_sub(i + 2)]));
    }
    g
}

/// Isolation value from a claimed set: split the claimable squares into runs.
pub fn isolation_mover_wins(claimed: &[bool]) -> bool {
    let n = claimed.len();
    let claimable: Vec<bool> = (0..n)
        .map(|s| {
            let lo = s.saturating_sub(1);
            let hi = (s + 1).min(n - 1);
            (lo..=hi).all(|t| !claimed[t])
        })
        .collect();
    let g = isolation_grundy(n);
    runs(&claimable).iter().fold(0, |acc, &l| acc ^ g[l]) != 0
}

const DIVIDE_PRIMES: [u64; 15] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47];

/// Listed primes dividing `n`.
pub fn divide_moves(n: u64) -> Vec<u64> {
    if n <= 1 {
        return Vec::new();
    }
    DIVIDE_PRIMES.iter().copied().filter(|p| n % p == 0).collect()
}

/// Divide and Conquer: reaching 1 wins, a mover without a listed divisor loses.
pub fn divide_mover_wins(n: u64) -> bool {
    divide_moves(n)
        .into_iter()
        .any(|p| n / p == 1 || !divide_mover_wins(n / p))
}

/// Order Challenge position: pool bitmask over 1..=9 (bit k for number k+1),
/// last pick of the mover and of the opponent (0 before any pick).
pub fn order_mover_wins(pool: u16, mine: usize, theirs: usize, memo: &mut HashMap<(u16, usize, usize), bool>) -> bool {
    if let Some(&v) = memo.get(&(pool, mine, theirs)) {
        return v;
    }
    let v = (mine + 1..=9)
        .filter(|&k| pool & (1 << (k - 1)) != 0)
        .any(|k| !order_mover_wins(pool & !(1 << (k - 1)), theirs, k, memo));
    memo.insert((pool, mine, theirs), v);
    v
}

fn has_palindromic_run(seq: &[u8]) -> bool {
    let n = seq.len();
    (0..n).any(|i| (i + 3..=n).any(|j| (i..j).all(|k| seq[k] == seq[i + j - 1 - k])))
}

/// Palindrome Duel: +1 mover wins, -1 mover loses. A move that leaves any
/// palindromic run of length three or more loses for its maker, since every
/// sequence reached in play was palindrome-free before the move.
pub fn palindrome_value(seq: &[u8], memo: &mut HashMap<Vec<u8>, i8>) -> i8 {
    if let Some(&v) = memo.get(seq) {
        return v;
    }
    let mut best = -1;
    for symbol in [b'X', b'O'] {
        for left in [true, false] {
            let mut next = Vec::with_capacity(seq.len() + 1);
            if left {
                next.push(symbol);
                next.extend_from_slice(seq);
            } else {
                next.extend_from_slice(seq);
                next.push(symbol);
            }
            let v = if has_palindromic_run(&next) {
                -1
            } else if next.len() == 11 {
                1
            } else {
                -palindrome_value(&next, memo)
            };
            best = best.max(v);
        }
    }
    memo.insert(seq.to_vec(), best);
    best
}

/// Positions reached by seeded random play from `env`, including the start,
/// skipping finished ones.
pub fn random_positions(env: &dyn Environment, n_games: usize, seed: u64) -> Vec<Box<dyn Environment>> {
    let mut rng = SplitMix64::new(seed);
    let mut out = vec![env.boxed_clone()];
    for _ in 0..n_games {
        let mut sim = env.boxed_clone();
        while !sim.is_done() {
            let moves = sim.valid_moves();
            let a = moves[rng.gen_range(0..moves.len())];
            sim.step(a).unwrap();
            if !sim.is_done() {
                out.push(sim.boxed_clone());
            }
        }
    }
    out
}

/// Two-action game where action 0 wins on the spot and action 1 loses on the spot.
#[derive(Debug, Clone)]
pub struct OnePlyWin {
    mover: Seat,
}

impl Rules for OnePlyWin {
    fn reset(&mut self, _rng: &mut SplitMix64) {
        self.mover = Seat::P1;
    }
    fn to_move(&self) -> Seat {
        self.mover
    }
    fn legal_actions(&self) -> Vec<usize> {
        vec![0, 1]
    }
    fn play(&mut self, action: usize) -> Transition {
        if action == 0 {
            Transition::MoverWins
        } else {
            Transition::MoverLoses
        }
    }
    fn encode(&self, out: &mut Vec<f32>) {
        out.push(1.0);
    }
    fn describe(&self) -> String {
        "one move from the end".into()
    }
    fn action_label(&self, action: usize) -> String {
        if action == 0 { "win".into() } else { "lose".into() }
    }
}

pub fn one_ply_win_env() -> GameEnv<OnePlyWin> {
    let spec = GameSpec {
        id: "one-ply-win".into(),
        title: "One-ply win".into(),
        rulebook_text: "Pick the winning move.".into(),
        action_map_text: "0 wins, 1 loses".into(),
        action_space_size: 2,
        observation_dim: 1,
        move_cap: 10,
        stochastic_setup: false,
    };
    GameEnv::new(Arc::new(spec), OnePlyWin { mover: Seat::P1 })
}

/// A random (params, batch) pair in f64 with policy weights large enough that
/// the trunk gradients are not negligible.
pub fn random_loss_instance(seed: u64) -> (PolicyParams<f64>, Batch<f64>, LossCoefs) {
    let mut rng = SplitMix64::new(seed);
    let obs_dim = rng.gen_range(2..7);
    let n_actions = rng.gen_range(2..6);
    let rows = rng.gen_range(1..5);
    let base = PolicyParams::<f32>::init(obs_dim, n_actions, &mut rng);
    let mut params = base.map(f64::from);
    for t in params.tensors_mut() {
        for x in t.iter_mut() {
            *x += rng.gen_range(-0.3..0.3);
        }
    }
    let obs = Array2::from_shape_fn((rows, obs_dim), |_| rng.gen_range(-1.0..1.0));
    let fwd = params.forward_batch(obs.view());
    let mut valid = Vec::new();
    let mut actions = Vec::new();
    let mut old_log_probs = Vec::new();
    for i in 0..rows {
        let mut v: Vec<usize> = (0..n_actions).filter(|_| rng.gen_bool(0.7)).collect();
        if v.is_empty() {
            v.push(rng.gen_range(0..n_actions));
        }
        let a = v[rng.gen_range(0..v.len())];
        let logits: Vec<f64> = fwd.logits.row(i).to_vec();
        let z = v.iter().map(|&j| logits[j].exp()).sum::<f64>();
        let log_p = logits[a] - z.ln();
        // Keep ratios away from the clip boundaries, where the loss has a kink.
        let ratio: f64 = match rng.gen_range(0..3) {
            0 => rng.gen_range(0.9..1.1),
            1 => rng.gen_range(1.3..1.6),
            _ => rng.gen_range(0.5..0.7),
        };
        old_log_probs.push(log_p - ratio.ln());
        valid.push(v);
        actions.push(a);
    }
    let batch = Batch {
        obs,
        valid,
        actions,
        old_log_probs,
        advantages: (0..rows).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        returns: (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    };
    let coefs = LossCoefs {
        clip_range: 0.2,
        value_coef: 0.5,
        entropy_coef: 0.01,
    };
    (params, batch, coefs)
}

/// Relative error `|g - fd| / (|g| + |fd|)` between the analytic gradient and
/// central finite differences, over every parameter.
pub fn gradient_relative_error(params: &PolicyParams<f64>, batch: &Batch<f64>, coefs: LossCoefs) -> f64 {
    let (_, grad) = loss_and_grad(params, batch, coefs, true);
    let grad = grad.unwrap();
    let h = 1e-6;
    let mut diff2 = 0.0;
    let mut a2 = 0.0;
    let mut n2 = 0.0;
    let mut probe = params.clone();
    for (t, g) in grad.tensors().iter().enumerate() {
        for i in 0..g.len() {
            let orig = probe.tensors()[t][i];
            probe.tensors_mut()[t][i] = orig + h;
            let up = loss_and_grad(&probe, batch, coefs, false).0.total;
            probe.tensors_mut()[t][i] = orig - h;
            let down = loss_and_grad(&probe, batch, coefs, false).0.total;
            probe.tensors_mut()[t][i] = orig;
            let fd = (up - down) / (2.0 * h);
            diff2 += (g[i] - fd).powi(2);
            a2 += g[i].powi(2);
            n2 += fd.powi(2);
        }
    }
    diff2.sqrt() / (a2.sqrt() + n2.sqrt()).max(1e-12)
}

/// Upper tail probability of a chi-square statistic with `k` degrees of
/// freedom, via the Wilson-Hilferty normal approximation.
pub fn chi_square_p_value(stat: f64, k: usize) -> f64 {
    let k = k as f64;
    let z = ((stat / k).powf(1.0 / 3.0) - (1.0 - 2.0 / (9.0 * k))) / (2.0 / (9.0 * k)).sqrt();
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Complementary error function (Numerical Recipes rational approximation,
/// fractional error below 1.2e-7).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98 + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77))))))));
    let r = t * poly.exp();
    if x >= 0.0 { r } else { 2.0 - r }
}

/// Pearson statistic of observed counts against a uniform expectation.
pub fn chi_square_uniform(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

pub fn action(i: usize) -> ActionIndex {
    ActionIndex(i)
}

/// Path of the echo agent binary built alongside the tests.
pub const ECHO_AGENT: &str = env!("CARGO_BIN_EXE_arena-echo-agent");

/// One transcript line per exchanged message, `>` for requests and `<` for replies.
pub fn format_transcript(lines: &[(arena_core::agents::external::Direction, String)]) -> String {
    use arena_core::agents::external::Direction;
    lines
        .iter()
        .map(|(d, l)| match d {
            Direction::Sent => format!("> {l}\n"),
            Direction::Received => format!("< {l}\n"),
        })
        .collect()
}

/// Record a Reach 27 match between the echo agent (first seat) and a seeded
/// random agent.
pub fn record_echo_match() -> String {
    use arena_core::agents::{ExternalAgent, ExternalConfig, RandomAgent};
    use arena_core::games::build_capped_env;
    use arena_core::harness::{play_match, Side};
    let mut env = build_capped_env("reach27", None).unwrap();
    let mut echo = ExternalAgent::new(ExternalConfig::new(format!("{ECHO_AGENT} first")));
    let mut random = RandomAgent::new(7);
    play_match(env.as_mut(), &mut echo, &mut random, Side::A, 11);
    format_transcript(echo.transcript())
}

/// Split a stored transcript into its request and reply lines.
pub fn parse_transcript(text: &str) -> (Vec<String>, Vec<String>) {
    let mut requests = Vec::new();
    let mut replies = Vec::new();
    for line in text.lines() {
        if let Some(r) = line.strip_prefix("> ") {
            requests.push(r.to_string());
        } else if let Some(r) = line.strip_prefix("< ") {
            replies.push(r.to_string());
        }
    }
    (requests, replies)
}
