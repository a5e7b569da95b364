//! Protocol fixture: `arena-echo-agent [first|invalid|invalid-once|exit|garbage|silent]`.

use arena_core::agents::echo::{run, EchoMode};

fn main() {
    let arg = std::env::args().nth(1).unwrap_or_else(|| "first".into());
    let Some(mode) = EchoMode::parse(&arg) else {
        eprintln!("unknown mode `{arg}`");
        std::process::exit(2);
    };
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    if let Err(e) = run(mode, stdin.lock(), stdout.lock()) {
        eprintln!("echo agent: {e}");
        std::process::exit(1);
    }
}
