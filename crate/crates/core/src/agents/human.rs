//! Console player: shows the board and a numbered menu of legal moves.

use std::io::{BufRead, Write};

use super::{Agent, AgentError, Decision};
use crate::env::{ActionIndex, Environment, GameSpec};

pub struct HumanAgent<R, W> {
    input: R,
    output: W,
}

impl<R: BufRead + Send, W: Write + Send> HumanAgent<R, W> {
    pub fn new(input: R, output: W) -> Self {
        Self { input, output }
    }

    fn say(&mut self, text: &str) -> Result<(), AgentError> {
        writeln!(self.output, "{text}")
            .and_then(|_| self.output.flush())
            .map_err(|e| AgentError::Fault(format!("console: {e}")))
    }
}

impl<R: BufRead + Send, W: Write + Send> Agent for HumanAgent<R, W> {
    fn descriptor(&self) -> String {
        "human".into()
    }

    fn init(&mut self, spec: &GameSpec) -> Result<(), AgentError> {
        self.say(&format!("=== {} ===\n{}", spec.title, spec.rulebook_text.trim_end()))
    }

    fn choose(&mut self, env: &dyn Environment) -> Result<Decision, AgentError> {
        let legal = env.valid_moves();
        let mut menu = format!("\n{}\nYou are {}. Legal moves:", env.render(), env.current_player());
        for a in &legal {
            menu.push_str(&format!("\n  {a}: {}", env.describe_action(*a)));
        }
        self.say(&menu)?;
        let mut reprompts = 0;
        loop {
            write!(self.output, "Your move (or `quit`): ").map_err(|e| AgentError::Fault(e.to_string()))?;
            self.output.flush().map_err(|e| AgentError::Fault(e.to_string()))?;
            let mut line = String::new();
            let read = self.input.read_line(&mut line).map_err(|e| AgentError::Fault(e.to_string()))?;
            let answer = line.trim();
            if read == 0 || answer == "quit" || answer == "q" {
                return Err(AgentError::Aborted);
            }
            match answer.parse::<usize>() {
                Ok(a) if legal.contains(&ActionIndex(a)) => {
                    return Ok(Decision {
                        action: ActionIndex(a),
                        reprompts,
                        note: None,
                    })
                }
                _ => {
                    reprompts += 1;
                    self.say(&format!("`{answer}` is not one of the legal moves."))?;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::build_env;

    #[test]
    fn reprompts_until_legal_then_accepts() {
        let env = build_env("reach27", Some(0)).unwrap();
        let mut out = Vec::new();
        let mut human = HumanAgent::new(&b"abc\n42\n3\n"[..], &mut out);
        let d = human.choose(env.as_ref()).unwrap();
        assert_eq!(d, Decision { action: ActionIndex(3), reprompts: 2, note: None });
        let shown = String::from_utf8(out).unwrap();
        assert!(shown.contains("Legal moves:"));
        assert!(shown.contains("`42` is not one of the legal moves."));
    }

    #[test]
    fn quit_and_eof_abort() {
        let env = build_env("reach27", Some(0)).unwrap();
        let mut sink = Vec::new();
        assert_eq!(HumanAgent::new(&b"quit\n"[..], &mut sink).choose(env.as_ref()), Err(AgentError::Aborted));
        assert_eq!(HumanAgent::new(&b""[..], &mut sink).choose(env.as_ref()), Err(AgentError::Aborted));
    }
}
