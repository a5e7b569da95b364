//! Newline-delimited JSON protocol spoken with external agents, plus the
//! prompt templates an LLM adapter can fill from the same fields.

use serde::{Deserialize, Serialize};

/// Referee to agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Request {
    Init {
        game_description: String,
        action_description: String,
    },
    MoveRequest {
        board: String,
        legal_moves: Vec<usize>,
        reprompt: u32,
    },
}

/// Agent to referee.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Reply {
    Ready,
    Move { action: i64 },
}

impl Request {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("requests serialise")
    }
}

impl Reply {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("replies serialise")
    }

    pub fn parse(line: &str) -> Option<Reply> {
        serde_json::from_str(line.trim()).ok()
    }
}

/// System message shown once per game.
pub fn system_prompt(game_description: &str, move_description: &str) -> String {
    format!(
        "Here is a description for a two-player game:\n{game_description}\n\n\
         You will be prompted with a board state and a list of legal moves for the current play. \
         Your task is to pick the best move from this list. Here is a description for what each move represents:\n\
         {move_description}"
    )
}

/// Message sent for every move.
pub fn turn_prompt(board: &str, legal_moves: &[usize]) -> String {
    let moves: Vec<String> = legal_moves.iter().map(|m| m.to_string()).collect();
    format!(
        "{board}\nLegal moves: {}\n\
         Pick the best move from the list of legal moves. Respond with the number you wish to play. \
         Do not include any other text in your response.",
        moves.join(", ")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_format() {
        let init = Request::Init {
            game_description: "rules".into(),
            action_description: "moves".into(),
        };
        assert_eq!(
            init.to_line(),
            r#"{"type":"init","game_description":"rules","action_description":"moves"}"#
        );
        let req = Request::MoveRequest {
            board: "Total: 0".into(),
            legal_moves: vec![0, 1],
            reprompt: 2,
        };
        assert_eq!(
            req.to_line(),
            r#"{"type":"move_request","board":"Total: 0","legal_moves":[0,1],"reprompt":2}"#
        );
        assert_eq!(Reply::Ready.to_line(), r#"{"type":"ready"}"#);
        assert_eq!(Reply::parse(r#"{"type":"move","action":4}"#), Some(Reply::Move { action: 4 }));
        assert_eq!(Reply::parse("4"), None);
    }

    #[test]
    fn prompts_embed_their_fields() {
        let s = system_prompt("RULES", "MAP");
        assert!(s.starts_with("Here is a description for a two-player game:\nRULES"));
        assert!(s.ends_with("represents:\nMAP"));
        let t = turn_prompt("Total: 3", &[0, 4]);
        assert!(t.starts_with("Total: 3\nLegal moves: 0, 4\nPick the best move"));
    }
}
