//! Agent backed by a child process that speaks the line protocol over stdio.
//!
//! The command is split on whitespace and run without a shell. Replies are read
//! on a helper thread so that every wait can be bounded by the move timeout.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use super::protocol::{Reply, Request};
use super::{Agent, AgentError, Decision, DEFAULT_MAX_REPROMPTS, DEFAULT_MOVE_TIMEOUT};
use crate::env::{ActionIndex, Environment, GameSpec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalConfig {
    pub command: String,
    pub move_timeout: Duration,
    pub max_reprompts: u32,
}

impl ExternalConfig {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            move_timeout: DEFAULT_MOVE_TIMEOUT,
            max_reprompts: DEFAULT_MAX_REPROMPTS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Sent,
    Received,
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Session {
    fn spawn(command: &str) -> Result<Self, AgentError> {
        let mut parts = command.split_whitespace();
        let program = parts.next().ok_or_else(|| AgentError::Launch("empty command".into()))?;
        let mut child = Command::new(program)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| AgentError::Launch(format!("{program}: {e}")))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            child,
            stdin,
            lines: rx,
        })
    }

    fn send(&mut self, line: &str) -> Result<(), AgentError> {
        writeln!(self.stdin, "{line}")
            .and_then(|_| self.stdin.flush())
            .map_err(|e| AgentError::Fault(format!("agent stopped reading: {e}")))
    }

    fn recv(&self, timeout: Duration) -> Result<String, AgentError> {
        self.lines.recv_timeout(timeout).map_err(|e| match e {
            RecvTimeoutError::Timeout => AgentError::Fault(format!("no reply within {} s", timeout.as_secs_f64())),
            RecvTimeoutError::Disconnected => AgentError::Fault("agent closed its output".into()),
        })
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub struct ExternalAgent {
    config: ExternalConfig,
    session: Option<Session>,
    transcript: Vec<(Direction, String)>,
}

impl ExternalAgent {
    pub fn new(config: ExternalConfig) -> Self {
        Self {
            config,
            session: None,
            transcript: Vec::new(),
        }
    }

    /// Every line exchanged so far, in order.
    pub fn transcript(&self) -> &[(Direction, String)] {
        &self.transcript
    }

    fn exchange(&mut self, request: &Request) -> Result<String, AgentError> {
        let session = self
            .session
            .as_mut()
            .ok_or_else(|| AgentError::Fault("agent used before init".into()))?;
        let line = request.to_line();
        self.transcript.push((Direction::Sent, line.clone()));
        session.send(&line)?;
        let reply = session.recv(self.config.move_timeout)?;
        self.transcript.push((Direction::Received, reply.clone()));
        Ok(reply)
    }
}

impl Agent for ExternalAgent {
    fn descriptor(&self) -> String {
        format!("external:{}", self.config.command)
    }

    fn init(&mut self, spec: &GameSpec) -> Result<(), AgentError> {
        self.session = Some(Session::spawn(&self.config.command)?);
        let reply = self.exchange(&Request::Init {
            game_description: spec.rulebook_text.clone(),
            action_description: spec.action_map_text.clone(),
        })?;
        match Reply::parse(&reply) {
            Some(Reply::Ready) => Ok(()),
            _ => Err(AgentError::Fault(format!("expected ready, got `{reply}`"))),
        }
    }

    fn choose(&mut self, env: &dyn Environment) -> Result<Decision, AgentError> {
        let legal: Vec<usize> = env.valid_moves().iter().map(|a| a.get()).collect();
        let board = env.render();
        for attempt in 0..=self.config.max_reprompts {
            let reply = self.exchange(&Request::MoveRequest {
                board: board.clone(),
                legal_moves: legal.clone(),
                reprompt: attempt,
            })?;
            if let Some(Reply::Move { action }) = Reply::parse(&reply) {
                if let Ok(a) = usize::try_from(action) {
                    if legal.contains(&a) {
                        return Ok(Decision {
                            action: ActionIndex(a),
                            reprompts: attempt,
                            note: None,
                        });
                    }
                }
            }
        }
        Err(AgentError::Fault(format!(
            "no legal move after {} attempts",
            self.config.max_reprompts + 1
        )))
    }
}

/// Feed recorded request lines to a fresh process and collect one reply per request.
pub fn replay(command: &str, requests: &[String], timeout: Duration) -> Result<Vec<String>, AgentError> {
    let mut session = Session::spawn(command)?;
    requests
        .iter()
        .map(|line| {
            session.send(line)?;
            session.recv(timeout)
        })
        .collect()
}
