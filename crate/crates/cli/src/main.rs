use std::io::Write;

fn main() {
    let out = pfr_cli::run_command(std::env::args_os());
    let _ = std::io::stdout().write_all(out.json.as_bytes());
    std::process::exit(out.code);
}
