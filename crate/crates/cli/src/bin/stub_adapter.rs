//! Echo adapter speaking the line-delimited JSON classifier protocol.
//!
//! Answers every text with a fixed score. Used to exercise the external
//! classifier client without a model runtime.

use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "stub-adapter")]
struct Args {
    #[arg(long, value_enum, default_value_t = Mode::Echo)]
    mode: Mode,
    /// Checkpoint reference; accepted for interface parity, unused.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, default_value_t = 128)]
    max_tokens: usize,
    #[arg(long, default_value_t = 0.5)]
    echo_score: f64,
    /// Serve one TCP connection on this address instead of stdio.
    #[arg(long)]
    listen: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Echo,
    Model,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.mode == Mode::Model {
        eprintln!("stub-adapter: model mode needs a model runtime; only echo is available");
        return ExitCode::from(2);
    }
    if args.max_tokens == 0 || !(0.0..=1.0).contains(&args.echo_score) {
        eprintln!("stub-adapter: need max_tokens >= 1 and echo score in [0, 1]");
        return ExitCode::from(1);
    }
    let result = match &args.listen {
        Some(addr) => TcpListener::bind(addr).and_then(|listener| {
            eprintln!("listening on {}", listener.local_addr()?);
            let (stream, _) = listener.accept()?;
            serve(&args, BufReader::new(stream.try_clone()?), BufWriter::new(stream))
        }),
        None => serve(&args, io::stdin().lock(), io::stdout().lock()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stub-adapter: {e}");
            ExitCode::from(2)
        }
    }
}

fn serve(args: &Args, input: impl BufRead, mut output: impl Write) -> io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = respond(args, &line);
        writeln!(output, "{response}")?;
        output.flush()?;
    }
    Ok(())
}

fn respond(args: &Args, line: &str) -> Value {
    let request: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return json!({"id": null, "error": format!("malformed request: {e}")}),
    };
    let id = request.get("id").cloned().unwrap_or(Value::Null);
    match request.get("op").and_then(Value::as_str) {
        Some("hello") => json!({"name": "echo", "max_tokens": args.max_tokens}),
        Some("predict") => match request.get("texts").and_then(Value::as_array) {
            Some(texts) if texts.iter().all(Value::is_string) => {
                json!({"id": id, "scores": vec![args.echo_score; texts.len()]})
            }
            Some(_) => json!({"id": id, "error": "texts must be strings"}),
            None => json!({"id": id, "error": "missing texts"}),
        },
        Some(op) => json!({"id": id, "error": format!("unknown op {op:?}")}),
        None => json!({"id": id, "error": "missing op"}),
    }
}
