//! Winrates, confidence intervals and the failure breakdown used in reports.

use serde::{Deserialize, Serialize};

use crate::harness::{MatchOutcome, MatchRecord};

const Z95: f64 = 1.96;

/// Point estimate and normal-approximation 95% half-width for `wins` of `n`.
pub fn wald_ci(wins: u64, n: u64) -> (f64, f64) {
    assert!(n >= 1 && wins <= n, "wald_ci needs 0 <= wins <= n and n >= 1");
    let p = wins as f64 / n as f64;
    (p, Z95 * (p * (1.0 - p) / n as f64).sqrt())
}

/// Mean of per-game winrates and the 95% half-width over games
/// (sample standard deviation); the half-width needs at least two games.
pub fn aggregate(winrates: &[f64]) -> Option<(f64, Option<f64>)> {
    let k = winrates.len();
    if k == 0 {
        return None;
    }
    let mean = winrates.iter().sum::<f64>() / k as f64;
    if k < 2 {
        return Some((mean, None));
    }
    let var = winrates.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    Some((mean, Some(Z95 * var.sqrt() / (k as f64).sqrt())))
}

/// Per-game tallies from agent A's point of view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameReport {
    pub game_id: String,
    pub agent: String,
    pub opponent: String,
    pub n_matches: u64,
    pub wins: u64,
    pub losses: u64,
    pub draws: u64,
    pub faults: u64,
    pub env_errors: u64,
    /// Wins over matches that were not engine errors; `None` if every match was one.
    pub winrate: Option<f64>,
    pub ci95_halfwidth: Option<f64>,
}

impl GameReport {
    pub fn from_records(game_id: &str, agent: &str, opponent: &str, records: &[MatchRecord]) -> Self {
        let mut r = GameReport {
            game_id: game_id.to_string(),
            agent: agent.to_string(),
            opponent: opponent.to_string(),
            n_matches: records.len() as u64,
            wins: 0,
            losses: 0,
            draws: 0,
            faults: 0,
            env_errors: 0,
            winrate: None,
            ci95_halfwidth: None,
        };
        for m in records {
            match m.outcome {
                // An opponent forfeit is scored as a win.
                MatchOutcome::WinA | MatchOutcome::FaultB => r.wins += 1,
                MatchOutcome::WinB => r.losses += 1,
                MatchOutcome::Draw => r.draws += 1,
                MatchOutcome::FaultA => r.faults += 1,
                MatchOutcome::EnvError => r.env_errors += 1,
            }
        }
        let scored = r.n_matches - r.env_errors;
        if scored > 0 {
            let (p, h) = wald_ci(r.wins, scored);
            r.winrate = Some(p);
            r.ci95_halfwidth = Some(h);
        }
        r
    }
}

/// Split of the matches agent A did not win.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureBreakdown {
    pub losses: u64,
    pub faults: u64,
    pub draws: u64,
    pub env_errors: u64,
}

impl FailureBreakdown {
    pub fn from_reports<'a>(reports: impl IntoIterator<Item = &'a GameReport>) -> Self {
        reports.into_iter().fold(Self::default(), |acc, r| Self {
            losses: acc.losses + r.losses,
            faults: acc.faults + r.faults,
            draws: acc.draws + r.draws,
            env_errors: acc.env_errors + r.env_errors,
        })
    }

    pub fn total(&self) -> u64 {
        self.losses + self.faults + self.draws + self.env_errors
    }

    /// Percentages (losses, faults, draws, env errors); `None` with no failures.
    pub fn percentages(&self) -> Option<[f64; 4]> {
        let t = self.total();
        (t > 0).then(|| {
            [self.losses, self.faults, self.draws, self.env_errors].map(|c| 100.0 * c as f64 / t as f64)
        })
    }
}

/// `36.28 (± 5.95)` style cell; values are fractions and printed as percentages.
pub fn format_mean_ci(mean: f64, halfwidth: Option<f64>) -> String {
    match halfwidth {
        Some(h) => format!("{:.2} (± {:.2})", 100.0 * mean, 100.0 * h),
        None => format!("{:.2}", 100.0 * mean),
    }
}

/// Plain-text report: one row per game, the aggregate, then the failure split.
pub fn render_table(reports: &[GameReport]) -> String {
    if reports.iter().all(|r| r.n_matches == 0) {
        return "no matches\n".to_string();
    }
    let mut rows = vec![[
        "game".to_string(),
        "agent".to_string(),
        "opponent".to_string(),
        "n".to_string(),
        "W".to_string(),
        "L".to_string(),
        "D".to_string(),
        "F".to_string(),
        "E".to_string(),
        "winrate % (± CI)".to_string(),
    ]];
    for r in reports {
        rows.push([
            r.game_id.clone(),
            r.agent.clone(),
            r.opponent.clone(),
            r.n_matches.to_string(),
            r.wins.to_string(),
            r.losses.to_string(),
            r.draws.to_string(),
            r.faults.to_string(),
            r.env_errors.to_string(),
            r.winrate
                .map(|w| format_mean_ci(w, r.ci95_halfwidth))
                .unwrap_or_else(|| "n/a".into()),
        ]);
    }
    let widths: Vec<usize> = (0..10).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in &rows {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (cell, w))| if i < 3 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    let winrates: Vec<f64> = reports.iter().filter_map(|r| r.winrate).collect();
    match aggregate(&winrates) {
        Some((mean, Some(h))) => out.push_str(&format!(
            "\nmean winrate over {} games: {}\n",
            winrates.len(),
            format_mean_ci(mean, Some(h))
        )),
        Some((mean, None)) => out.push_str(&format!(
            "\nmean winrate over 1 game: {} (CI omitted: needs at least 2 games)\n",
            format_mean_ci(mean, None)
        )),
        None => out.push_str("\nmean winrate: n/a (no scored matches)\n"),
    }
    let split = FailureBreakdown::from_reports(reports);
    match split.percentages() {
        Some([l, f, d, e]) => out.push_str(&format!(
            "non-win matches: {} | losses {l:.2}% | faults {f:.2}% | draws {d:.2}% | env errors {e:.2}%\n",
            split.total()
        )),
        None => out.push_str("non-win matches: 0\n"),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wald_degenerate_cases() {
        assert_eq!(wald_ci(0, 30), (0.0, 0.0));
        assert_eq!(wald_ci(30, 30), (1.0, 0.0));
    }

    #[test]
    fn aggregate_needs_two_games_for_ci() {
        assert_eq!(aggregate(&[]), None);
        assert_eq!(aggregate(&[0.25]), Some((0.25, None)));
        assert!(aggregate(&[0.4, 0.4, 0.4]).unwrap().1.unwrap() < 1e-12);
    }

    #[test]
    fn mean_ci_format() {
        assert_eq!(format_mean_ci(0.3628, Some(0.0595)), "36.28 (± 5.95)");
    }
}
