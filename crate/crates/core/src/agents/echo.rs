//! Scripted external agent used as a protocol fixture.

use std::io::{BufRead, Write};

use super::protocol::{Reply, Request};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EchoMode {
    /// Always reply with the first legal move.
    First,
    /// Always reply with an illegal action (999).
    Invalid,
    /// Reply 999 to a fresh request and the first legal move to a re-prompt.
    InvalidOnce,
    /// Exit without acknowledging init.
    Exit,
    /// Reply with text that is not a protocol record.
    Garbage,
    /// Acknowledge init, then never answer a move request.
    Silent,
}

impl EchoMode {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "first" => Self::First,
            "invalid" => Self::Invalid,
            "invalid-once" => Self::InvalidOnce,
            "exit" => Self::Exit,
            "garbage" => Self::Garbage,
            "silent" => Self::Silent,
            _ => return None,
        })
    }
}

/// Serve requests from `input` until it closes.
pub fn run(mode: EchoMode, input: impl BufRead, mut output: impl Write) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        let reply = match serde_json::from_str::<Request>(&line) {
            Ok(Request::Init { .. }) => {
                if mode == EchoMode::Exit {
                    return Ok(());
                }
                Reply::Ready.to_line()
            }
            Ok(Request::MoveRequest {
                legal_moves, reprompt, ..
            }) => {
                let first = legal_moves.first().copied().unwrap_or(0) as i64;
                match mode {
                    EchoMode::First | EchoMode::Exit => Reply::Move { action: first }.to_line(),
                    EchoMode::Invalid => Reply::Move { action: 999 }.to_line(),
                    EchoMode::InvalidOnce if reprompt == 0 => Reply::Move { action: 999 }.to_line(),
                    EchoMode::InvalidOnce => Reply::Move { action: first }.to_line(),
                    EchoMode::Garbage => "I choose the best move".to_string(),
                    EchoMode::Silent => continue,
                }
            }
            Err(_) => "unrecognised request".to_string(),
        };
        writeln!(output, "{reply}")?;
        output.flush()?;
    }
    Ok(())
}
